//! Core geometric types: points, clouds, bounding boxes and seeded
//! downsampling.
//!
//! Everything is computed in `f64`; 32-bit floats appear only at the PLY
//! serialization boundary. All randomized operations take an explicit seed
//! and run the ChaCha8 generator, so results are reproducible across runs
//! and platforms.

mod io;
mod kdtree;

pub use io::{load_point_cloud, save_point_cloud, CloudFormat, CloudWriteFormat};
pub(crate) use io::save_ply_with_colors;
pub use kdtree::NNIndex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A point (or free vector) in 3D space. Coordinates are unit-agnostic;
/// meters by convention.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn coord(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl std::ops::Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned bounding box. `min.c <= max.c` holds per coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    /// Component-wise min/max over the given points; `None` when empty.
    pub fn from_points<'a, I: IntoIterator<Item = &'a Point3>>(points: I) -> Option<Aabb> {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let mut bb = Aabb {
            min: first,
            max: first,
        };
        for p in iter {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.min.z = bb.min.z.min(p.z);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
            bb.max.z = bb.max.z.max(p.z);
        }
        Some(bb)
    }

    /// Euclidean length of `max - min`.
    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn contains(&self, p: Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

/// An ordered sequence of points with optional per-point integer layer tags.
///
/// Point order is stable: index `i` survives a save/load round trip, and
/// every operation that derives a cloud from another preserves relative
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    layers: Option<Vec<i32>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3>) -> Self {
        Self {
            points,
            layers: None,
        }
    }

    /// A cloud with one layer tag per point. `layers` must match `points`
    /// in length.
    pub fn with_layers(points: Vec<Point3>, layers: Vec<i32>) -> Result<Self> {
        if layers.len() != points.len() {
            return Err(Error::PerPointLengthMismatch {
                errors: layers.len(),
                points: points.len(),
            });
        }
        Ok(Self {
            points,
            layers: Some(layers),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn layers(&self) -> Option<&[i32]> {
        self.layers.as_deref()
    }

    /// Component-wise bounding box. Errors on an empty cloud.
    pub fn aabb(&self) -> Result<Aabb> {
        Aabb::from_points(&self.points).ok_or(Error::EmptyCloud)
    }

    /// Arithmetic mean of the points. Errors on an empty cloud.
    pub fn centroid(&self) -> Result<Point3> {
        if self.points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let sum = self
            .points
            .iter()
            .fold(Point3::ORIGIN, |acc, &p| acc + p);
        Ok(sum * (1.0 / self.points.len() as f64))
    }

    /// A uniform sample of `n` points without replacement, preserving the
    /// original relative order. Returns the cloud unchanged when
    /// `n >= len()`. Deterministic for a fixed seed (ChaCha8).
    pub fn random_downsample(&self, n: usize, seed: u64) -> PointCloud {
        if n >= self.points.len() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices = rand::seq::index::sample(&mut rng, self.points.len(), n).into_vec();
        indices.sort_unstable();
        let points = indices.iter().map(|&i| self.points[i]).collect();
        let layers = self
            .layers
            .as_ref()
            .map(|ls| indices.iter().map(|&i| ls[i]).collect());
        PointCloud { points, layers }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_corners() -> Vec<Point3> {
        let mut pts = Vec::new();
        for &x in &[0.0, 1.0] {
            for &y in &[0.0, 1.0] {
                for &z in &[0.0, 1.0] {
                    pts.push(Point3::new(x, y, z));
                }
            }
        }
        pts
    }

    #[test]
    fn aabb_two_points() {
        let cloud = PointCloud::from_points(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 2.0, 3.0),
        ]);
        let bb = cloud.aabb().unwrap();
        assert_eq!(bb.min, Point3::new(0.0, 0.0, 0.0));
        assert_eq!(bb.max, Point3::new(1.0, 2.0, 3.0));
        assert!((bb.diagonal() - 14.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn aabb_single_point_degenerate() {
        let p = Point3::new(2.5, -1.0, 7.0);
        let cloud = PointCloud::from_points(vec![p]);
        let bb = cloud.aabb().unwrap();
        assert_eq!(bb.min, p);
        assert_eq!(bb.max, p);
        assert_eq!(bb.diagonal(), 0.0);
    }

    #[test]
    fn aabb_unit_cube_diagonal() {
        let cloud = PointCloud::from_points(cube_corners());
        let bb = cloud.aabb().unwrap();
        assert!((bb.diagonal() - 3.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn aabb_empty_errors() {
        let cloud = PointCloud::from_points(vec![]);
        assert!(matches!(cloud.aabb(), Err(Error::EmptyCloud)));
    }

    #[test]
    fn centroid_two_points() {
        let cloud = PointCloud::from_points(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ]);
        assert_eq!(cloud.centroid().unwrap(), Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn centroid_single_point() {
        let p = Point3::new(4.0, 5.0, 6.0);
        let cloud = PointCloud::from_points(vec![p]);
        assert_eq!(cloud.centroid().unwrap(), p);
    }

    #[test]
    fn centroid_cube_corners() {
        let cloud = PointCloud::from_points(cube_corners());
        let c = cloud.centroid().unwrap();
        assert!((c - Point3::new(0.5, 0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn centroid_empty_errors() {
        let cloud = PointCloud::from_points(vec![]);
        assert!(cloud.centroid().is_err());
    }

    #[test]
    fn with_layers_length_mismatch() {
        let pts = vec![Point3::ORIGIN, Point3::new(1.0, 0.0, 0.0)];
        assert!(PointCloud::with_layers(pts, vec![0]).is_err());
    }

    #[test]
    fn downsample_identity_when_n_ge_size() {
        let cloud = PointCloud::from_points(cube_corners());
        assert_eq!(cloud.random_downsample(8, 1), cloud);
        assert_eq!(cloud.random_downsample(100, 1), cloud);
    }

    #[test]
    fn downsample_zero() {
        let cloud = PointCloud::from_points(cube_corners());
        assert!(cloud.random_downsample(0, 1).is_empty());
    }

    #[test]
    fn downsample_deterministic_and_seed_sensitive() {
        let points: Vec<Point3> = (0..1000)
            .map(|i| Point3::new(i as f64, (i * 7) as f64, (i * 13) as f64))
            .collect();
        let cloud = PointCloud::from_points(points);
        let a = cloud.random_downsample(500, 42);
        let b = cloud.random_downsample(500, 42);
        assert_eq!(a, b);
        let c = cloud.random_downsample(500, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn downsample_preserves_order_and_layers() {
        let points: Vec<Point3> = (0..100).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let layers: Vec<i32> = (0..100).collect();
        let cloud = PointCloud::with_layers(points, layers).unwrap();
        let small = cloud.random_downsample(30, 7);
        assert_eq!(small.len(), 30);
        let xs: Vec<f64> = small.points().iter().map(|p| p.x).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(xs, sorted, "relative order must be preserved");
        for (p, &l) in small.points().iter().zip(small.layers().unwrap()) {
            assert_eq!(p.x as i32, l, "layer must follow its point");
        }
    }
}
