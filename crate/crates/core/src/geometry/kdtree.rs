//! Exact nearest-neighbor index over a point cloud.
//!
//! A balanced k-d tree built by median splits on cycling axes. Queries are
//! exact: the result is identical to an exhaustive linear scan, with ties
//! broken by the smallest point index. The index is immutable after
//! construction and safe to query from multiple threads.

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

pub struct NNIndex {
    points: Vec<Point3>,
    /// Point indices arranged so that every subslice midpoint is the median
    /// of that subslice along its split axis.
    order: Vec<u32>,
}

impl NNIndex {
    /// Builds the index from a non-empty cloud. The cloud's point indices
    /// are retained and reported by queries.
    pub fn build(cloud: &PointCloud) -> Result<NNIndex> {
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let points = cloud.points().to_vec();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        build_recursive(&points, &mut order, 0);
        Ok(NNIndex { points, order })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The indexed point with the given source index.
    pub fn point(&self, index: usize) -> Point3 {
        self.points[index]
    }

    /// Exact nearest neighbor of `q` under Euclidean distance. Returns
    /// `(point_index, distance)`; among equidistant points the smallest
    /// index wins.
    pub fn nearest(&self, q: Point3) -> (usize, f64) {
        let mut best = (u32::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), 0, &mut best);
        (best.0 as usize, best.1.sqrt())
    }

    fn search(&self, q: Point3, lo: usize, hi: usize, depth: usize, best: &mut (u32, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let node = self.points[idx as usize];
        let d2 = (q - node).norm_squared();
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }

        let axis = depth % 3;
        let delta = q.coord(axis) - node.coord(axis);
        let (first, second) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, first.0, first.1, depth + 1, best);
        // The far side may hold an equidistant point with a smaller index,
        // so recurse on exact equality too.
        if delta * delta <= best.1 {
            self.search(q, second.0, second.1, depth + 1, best);
        }
    }
}

fn build_recursive(points: &[Point3], order: &mut [u32], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize]
            .coord(axis)
            .total_cmp(&points[b as usize].coord(axis))
            .then(a.cmp(&b))
    });
    let (left, rest) = order.split_at_mut(mid);
    build_recursive(points, left, depth + 1);
    build_recursive(points, &mut rest[1..], depth + 1);
}

/// Exhaustive reference scan with the same tie rule as the index.
#[cfg(test)]
fn linear_scan_nearest(points: &[Point3], q: Point3) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, &p) in points.iter().enumerate() {
        let d2 = (q - p).norm_squared();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        PointCloud::from_points(pts)
    }

    #[test]
    fn empty_cloud_rejected() {
        assert!(NNIndex::build(&PointCloud::from_points(vec![])).is_err());
    }

    #[test]
    fn single_point() {
        let p = Point3::new(1.0, 2.0, 3.0);
        let index = NNIndex::build(&PointCloud::from_points(vec![p])).unwrap();
        let (i, d) = index.nearest(Point3::new(-5.0, 0.0, 9.0));
        assert_eq!(i, 0);
        assert!((d - p.distance(Point3::new(-5.0, 0.0, 9.0))).abs() < 1e-15);
    }

    #[test]
    fn query_at_indexed_point_is_zero() {
        let cloud = random_cloud(64, 3);
        let index = NNIndex::build(&cloud).unwrap();
        let (i, d) = index.nearest(cloud.points()[17]);
        assert_eq!(d, 0.0);
        // Not merely *a* zero-distance point: the first one.
        let (li, ld) = linear_scan_nearest(cloud.points(), cloud.points()[17]);
        assert_eq!((i, d), (li, ld));
    }

    #[test]
    fn two_point_example() {
        let cloud = PointCloud::from_points(vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
        ]);
        let index = NNIndex::build(&cloud).unwrap();
        let (i, d) = index.nearest(Point3::ORIGIN);
        assert_eq!(i, 0);
        assert_eq!(d, 1.0);
    }

    #[test]
    fn tie_breaks_to_smallest_index() {
        // Indices 3 and 7 are equidistant from the query at the origin.
        let mut pts = vec![Point3::new(10.0, 10.0, 10.0); 8];
        pts[3] = Point3::new(1.0, 0.0, 0.0);
        pts[7] = Point3::new(-1.0, 0.0, 0.0);
        let index = NNIndex::build(&PointCloud::from_points(pts)).unwrap();
        let (i, d) = index.nearest(Point3::ORIGIN);
        assert_eq!(i, 3);
        assert_eq!(d, 1.0);
    }

    #[test]
    fn matches_linear_scan_on_random_data() {
        let cloud = random_cloud(1000, 11);
        let index = NNIndex::build(&cloud).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let q = Point3::new(
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
            );
            let got = index.nearest(q);
            let want = linear_scan_nearest(cloud.points(), q);
            assert_eq!(got.0, want.0, "index mismatch for {q:?}");
            assert_eq!(got.1, want.1, "distance mismatch for {q:?}");
        }
    }

    #[test]
    fn matches_linear_scan_with_duplicate_points() {
        // Heavy duplication stresses the tie rule.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = random_cloud(20, 6);
        let pts: Vec<Point3> = (0..300)
            .map(|_| base.points()[rng.random_range(0..20)])
            .collect();
        let cloud = PointCloud::from_points(pts);
        let index = NNIndex::build(&cloud).unwrap();
        for _ in 0..200 {
            let q = base.points()[rng.random_range(0..20)];
            assert_eq!(index.nearest(q), linear_scan_nearest(cloud.points(), q));
        }
    }
}
