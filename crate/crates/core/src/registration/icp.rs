//! Iterative closest point with the constrained alignment step.
//!
//! Each iteration transforms the source by the current estimate, matches
//! every transformed point to its nearest target point through the k-d
//! tree, and then refits the transform *from the original source points to
//! the matched targets* — the refit replaces the estimate outright rather
//! than composing increments. Both half-steps can only lower the error:
//! re-matching picks the closest target per point, and the refit is the
//! exact minimizer over all transforms including the current one. The
//! error sequence is therefore non-increasing (up to roundoff), which the
//! tests assert.

use rayon::prelude::*;

use super::{
    fit_anisotropic_y, fit_similarity_y, IcpParams, Normalization, RegistrationResult, Scale,
    SimilarityTransformY,
};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, NNIndex, Point3, PointCloud};

/// Scale factors outside this range are clamped and the run is marked
/// not-converged; this guards against divergence on pathological clouds.
const SCALE_MIN: f64 = 1e-6;
const SCALE_MAX: f64 = 1e6;

/// Alternation budget for the per-axis refit inside ICP iterations.
const ANISO_ALT_ITERATIONS: usize = 50;

/// Mean squared closest-point error of `source` against an indexed target.
///
/// Returns `(error, per_point)` where `per_point[i]` is the (normalized)
/// distance from `source[i]` to its nearest target point and `error` is
/// the mean of the squared entries. With
/// [`Normalization::TargetDiagonal`] distances are divided by the target
/// bounding-box diagonal, which must be positive.
pub fn placement_error(
    source: &PointCloud,
    target_index: &NNIndex,
    target_aabb: &Aabb,
    normalization: Normalization,
) -> Result<(f64, Vec<f64>)> {
    if source.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let denom = match normalization {
        Normalization::None => 1.0,
        Normalization::TargetDiagonal => {
            let d = target_aabb.diagonal();
            if d <= 0.0 {
                return Err(Error::ZeroDiagonal);
            }
            d
        }
    };
    let per_point: Vec<f64> = source
        .points()
        .iter()
        .map(|&p| target_index.nearest(p).1 / denom)
        .collect();
    let error = per_point.iter().map(|d| d * d).sum::<f64>() / per_point.len() as f64;
    Ok((error, per_point))
}

/// The standard initialization: yaw `theta`, scale set to the ratio of the
/// bounding-box diagonals (1 when `fix_scale`), translation chosen so the
/// scaled-rotated source centroid lands on the target centroid.
pub fn centroid_alignment_init(
    source: &PointCloud,
    target: &PointCloud,
    theta: f64,
    fix_scale: bool,
) -> Result<SimilarityTransformY> {
    let scale = if fix_scale {
        1.0
    } else {
        let sd = source.aabb()?.diagonal();
        let td = target.aabb()?.diagonal();
        if sd <= 0.0 {
            return Err(Error::DegenerateScale);
        }
        (td / sd).clamp(SCALE_MIN, SCALE_MAX)
    };
    let partial = SimilarityTransformY::new(theta, Scale::Uniform(scale), Point3::ORIGIN);
    let translation = target.centroid()? - partial.apply_point(source.centroid()?);
    Ok(SimilarityTransformY::new(
        theta,
        Scale::Uniform(scale),
        translation,
    ))
}

fn validate_params(params: &IcpParams) -> Result<()> {
    if params.max_iterations < 1 {
        return Err(Error::InvalidParams("max_iterations must be at least 1"));
    }
    if !(params.rel_tolerance > 0.0) {
        return Err(Error::InvalidParams("rel_tolerance must be positive"));
    }
    if params.starts < 1 {
        return Err(Error::InvalidParams("starts must be at least 1"));
    }
    if let Some(trim) = params.trim_distance {
        if !(trim > 0.0) {
            return Err(Error::InvalidParams("trim_distance must be positive"));
        }
    }
    Ok(())
}

fn validate_clouds(source: &PointCloud, target: &PointCloud, params: &IcpParams) -> Result<()> {
    if source.len() < 3 || target.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: source.len().min(target.len()),
        });
    }
    if !params.fix_scale {
        let first = source.points()[0];
        if source.points().iter().all(|&p| p == first) {
            return Err(Error::DegenerateScale);
        }
    }
    Ok(())
}

/// Registers `source` onto `target` starting from `init`.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    init: &SimilarityTransformY,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    validate_params(params)?;
    validate_clouds(source, target, params)?;
    let index = NNIndex::build(target)?;
    let aabb = target.aabb()?;
    run_icp(source, &index, &aabb, init, params, 0)
}

fn run_icp(
    source: &PointCloud,
    target_index: &NNIndex,
    target_aabb: &Aabb,
    init: &SimilarityTransformY,
    params: &IcpParams,
    start_index: usize,
) -> Result<RegistrationResult> {
    let denom = match params.normalization {
        Normalization::None => 1.0,
        Normalization::TargetDiagonal => {
            let d = target_aabb.diagonal();
            if d <= 0.0 {
                return Err(Error::ZeroDiagonal);
            }
            d
        }
    };

    let target_points = |matches: &[(usize, f64)]| -> Vec<Point3> {
        matches
            .iter()
            .map(|&(i, _)| {
                // NNIndex reports indices into the cloud it was built from.
                target_index.point(i)
            })
            .collect()
    };

    let mut transform = *init;
    let mut history: Vec<f64> = Vec::new();
    let mut per_point: Vec<f64>;
    let mut converged = false;
    let mut clamped = false;

    loop {
        let moved = transform.apply(source);
        let matches: Vec<(usize, f64)> = moved
            .points()
            .iter()
            .map(|&p| target_index.nearest(p))
            .collect();
        per_point = matches.iter().map(|&(_, d)| d / denom).collect();
        let error = per_point.iter().map(|d| d * d).sum::<f64>() / per_point.len() as f64;

        if let Some(&prev) = history.last() {
            let rel = (prev - error).abs() / prev.max(f64::MIN_POSITIVE);
            history.push(error);
            if rel < params.rel_tolerance {
                converged = true;
                break;
            }
        } else {
            history.push(error);
        }
        if history.len() > params.max_iterations {
            break;
        }

        let matched = target_points(&matches);
        // The trim hook only thins the refit correspondences; every point
        // keeps contributing to the reported error. Falls back to the full
        // set when trimming would leave too few pairs.
        let kept: Option<Vec<usize>> = params.trim_distance.and_then(|trim| {
            let kept: Vec<usize> = per_point
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d <= trim)
                .map(|(i, _)| i)
                .collect();
            (kept.len() >= 3 && kept.len() < source.len()).then_some(kept)
        });
        let refit = match &kept {
            Some(kept) => {
                let src: Vec<Point3> = kept.iter().map(|&i| source.points()[i]).collect();
                let tgt: Vec<Point3> = kept.iter().map(|&i| matched[i]).collect();
                if params.fix_scale || params.keep_aspect_ratio {
                    fit_similarity_y(&src, &tgt, params.fix_scale)?
                } else {
                    fit_anisotropic_y(&src, &tgt, ANISO_ALT_ITERATIONS)?
                }
            }
            None => {
                if params.fix_scale || params.keep_aspect_ratio {
                    fit_similarity_y(source.points(), &matched, params.fix_scale)?
                } else {
                    fit_anisotropic_y(source.points(), &matched, ANISO_ALT_ITERATIONS)?
                }
            }
        };
        transform = clamp_scale(refit, &mut clamped);
    }

    let error = *history.last().unwrap();
    Ok(RegistrationResult {
        transform,
        error,
        per_point_errors: per_point,
        iterations: history.len() - 1,
        converged: converged && !clamped,
        start_index,
        error_history: history,
    })
}

fn clamp_scale(mut t: SimilarityTransformY, clamped: &mut bool) -> SimilarityTransformY {
    t.scale = match t.scale {
        Scale::Uniform(s) => {
            let c = s.clamp(SCALE_MIN, SCALE_MAX);
            *clamped |= c != s;
            Scale::Uniform(c)
        }
        Scale::PerAxis(s) => {
            let c = s.map(|v| v.clamp(SCALE_MIN, SCALE_MAX));
            *clamped |= c != s;
            Scale::PerAxis(c)
        }
    };
    t
}

/// Runs [`icp`] from `params.starts` evenly spaced yaw initializations
/// (`theta = 2πk/starts`) and returns the lowest-error result; ties go to
/// the smallest start index. Starts run independently (possibly in
/// parallel) and the reduction is deterministic. Individual starts may
/// fail on degenerate geometry; the call errors only when all of them do.
pub fn multi_start_icp(
    source: &PointCloud,
    target: &PointCloud,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    validate_params(params)?;
    validate_clouds(source, target, params)?;
    let index = NNIndex::build(target)?;
    let aabb = target.aabb()?;

    let outcomes: Vec<Result<RegistrationResult>> = (0..params.starts)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / params.starts as f64;
            let init = centroid_alignment_init(source, target, theta, params.fix_scale)?;
            run_icp(source, &index, &aabb, &init, params, k)
        })
        .collect();

    let mut best: Option<RegistrationResult> = None;
    let mut first_error: Option<Error> = None;
    for outcome in outcomes {
        match outcome {
            Ok(result) => {
                let better = match &best {
                    Some(b) => result.error < b.error,
                    None => true,
                };
                if better {
                    best = Some(result);
                }
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    match best {
        Some(result) => Ok(result),
        None => Err(first_error.expect("at least one start ran")),
    }
}
