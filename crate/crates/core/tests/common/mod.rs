//! Shared fixtures and independent reference implementations ("oracles")
//! used by the integration suites. Everything here deliberately avoids the
//! code paths it is used to check.

#![allow(dead_code)]

use arfy::{Point3, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random cloud in the unit box.
pub fn random_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::from_points(
        (0..n)
            .map(|_| {
                Point3::new(
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                )
            })
            .collect(),
    )
}

/// Exhaustive nearest-neighbor scan; smallest index wins ties.
pub fn linear_scan_nearest(points: &[Point3], q: Point3) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, &p) in points.iter().enumerate() {
        let d2 = (q - p).norm_squared();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

/// Absolute angular difference folded into [0, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
        - std::f64::consts::PI;
    d.abs()
}

/// Standard normal deviate via Box-Muller, driven by the given rng.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Exact point-to-triangle distance (closest-point construction over the
/// vertex, edge and face regions).
pub fn point_triangle_distance(p: Point3, a: Point3, b: Point3, c: Point3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v - p).norm();
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w - p).norm();
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w - p).norm();
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w - p).norm()
}

/// Brute-force fit reference: sweep theta over a uniform grid covering
/// (-π, π]; for each angle solve the 1-D least squares for scale (floored
/// at zero, honoring s > 0) and translation on the rotated centered
/// points, and evaluate the objective by direct summation. Returns
/// `(best_theta, best_objective)`.
pub fn grid_fit_oracle(source: &[Point3], target: &[Point3], grid: usize) -> (f64, f64) {
    let n = source.len() as f64;
    let p_bar = source.iter().fold(Point3::ORIGIN, |s, &p| s + p) * (1.0 / n);
    let q_bar = target.iter().fold(Point3::ORIGIN, |s, &p| s + p) * (1.0 / n);
    let centered: Vec<(Point3, Point3)> = source
        .iter()
        .zip(target)
        .map(|(&p, &q)| (p - p_bar, q - q_bar))
        .collect();

    let mut best = (0.0f64, f64::INFINITY);
    for k in 0..grid {
        let theta =
            -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (k + 1) as f64 / grid as f64;
        let (sin, cos) = theta.sin_cos();
        let mut num = 0.0;
        let mut den = 0.0;
        for (p, q) in &centered {
            let r = Point3::new(p.x * cos + p.z * sin, p.y, -p.x * sin + p.z * cos);
            num += r.dot(*q);
            den += r.norm_squared();
        }
        let s = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
        let mut obj = 0.0;
        for (p, q) in &centered {
            let r = Point3::new(p.x * cos + p.z * sin, p.y, -p.x * sin + p.z * cos);
            obj += (r * s - *q).norm_squared();
        }
        if obj < best.1 {
            best = (theta, obj);
        }
    }
    best
}

/// Objective value of a transform on a correspondence set.
pub fn correspondence_objective(
    t: &arfy::registration::SimilarityTransformY,
    source: &[Point3],
    target: &[Point3],
) -> f64 {
    source
        .iter()
        .zip(target)
        .map(|(&p, &q)| (t.apply_point(p) - q).norm_squared())
        .sum()
}
