//! Constrained point-cloud registration.
//!
//! The placement transform is restricted to translation, rotation about the
//! vertical (+Y) axis and scale — either one uniform factor or, when the
//! aspect ratio is released, one factor per axis. A point maps as
//!
//! ```text
//! q = Ry(theta) * (scale ⊙ p) + t
//! ```
//!
//! which for uniform scale equals `q = s * Ry(theta) * p + t`. `Ry(theta)`
//! sends `(x, y, z)` to `(x cosθ + z sinθ, y, -x sinθ + z cosθ)`, so the Y
//! coordinate never mixes with X/Z and uniform-scale placements act on
//! heights as the affine map `y ↦ s·y + t_y`.
//!
//! [`fit_similarity_y`] solves the fixed-correspondence problem in closed
//! form; [`icp`] alternates nearest-neighbor matching against a k-d tree
//! with that refit; [`multi_start_icp`] restarts ICP from evenly spaced yaw
//! angles and keeps the best result. The error metric throughout is the
//! mean squared distance between closest point pairs, optionally
//! normalizing distances by the target bounding-box diagonal so that
//! scores are comparable across scenes.

mod fit;
mod icp;

pub use fit::{fit_anisotropic_y, fit_similarity_y};
pub use icp::{centroid_alignment_init, icp, multi_start_icp, placement_error};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::jsonfmt;

/// Scale component of a placement transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Uniform(f64),
    PerAxis([f64; 3]),
}

impl Scale {
    pub fn factors(&self) -> [f64; 3] {
        match *self {
            Scale::Uniform(s) => [s, s, s],
            Scale::PerAxis(s) => s,
        }
    }
}

/// Translation + yaw + scale; see the module docs for the application rule.
/// `theta` is kept in `(-π, π]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityTransformY {
    pub theta: f64,
    pub scale: Scale,
    pub translation: Point3,
}

/// Reduces an angle to `(-π, π]`.
pub(crate) fn normalize_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped == -PI {
        PI
    } else {
        wrapped
    }
}

impl SimilarityTransformY {
    pub fn new(theta: f64, scale: Scale, translation: Point3) -> Self {
        Self {
            theta: normalize_angle(theta),
            scale,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, Scale::Uniform(1.0), Point3::ORIGIN)
    }

    pub fn apply_point(&self, p: Point3) -> Point3 {
        let [sx, sy, sz] = self.scale.factors();
        let (x, y, z) = (p.x * sx, p.y * sy, p.z * sz);
        let (sin, cos) = self.theta.sin_cos();
        Point3::new(
            x * cos + z * sin + self.translation.x,
            y + self.translation.y,
            -x * sin + z * cos + self.translation.z,
        )
    }

    /// Maps every point of the cloud; order and layer tags are preserved.
    pub fn apply(&self, cloud: &PointCloud) -> PointCloud {
        let points: Vec<Point3> = cloud.points().iter().map(|&p| self.apply_point(p)).collect();
        match cloud.layers() {
            Some(ls) => PointCloud::with_layers(points, ls.to_vec()).unwrap(),
            None => PointCloud::from_points(points),
        }
    }

    /// Serializes to the interchange JSON: keys `theta_rad`, `scale`
    /// (number, or 3-array when per-axis), `translation` and the fixed
    /// `application` string that guards against convention drift. Floats
    /// carry 17 significant digits so parsing back is exact.
    pub fn to_json_string(&self) -> String {
        let scale = match self.scale {
            Scale::Uniform(s) => jsonfmt::float(s),
            Scale::PerAxis([sx, sy, sz]) => format!(
                "[{}, {}, {}]",
                jsonfmt::float(sx),
                jsonfmt::float(sy),
                jsonfmt::float(sz)
            ),
        };
        format!(
            "{{\n  \"theta_rad\": {},\n  \"scale\": {},\n  \"translation\": [{}, {}, {}],\n  \"application\": \"{}\"\n}}\n",
            jsonfmt::float(self.theta),
            scale,
            jsonfmt::float(self.translation.x),
            jsonfmt::float(self.translation.y),
            jsonfmt::float(self.translation.z),
            APPLICATION_RULE,
        )
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::TransformJson(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::TransformJson("expected a JSON object".into()))?;

        let application = obj
            .get("application")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::TransformJson("missing 'application' string".into()))?;
        if application != APPLICATION_RULE {
            return Err(Error::TransformJson(format!(
                "unknown application rule '{application}' (expected '{APPLICATION_RULE}')"
            )));
        }

        let theta = obj
            .get("theta_rad")
            .and_then(|v| v.as_f64())
            .filter(|t| t.is_finite())
            .ok_or_else(|| Error::TransformJson("missing or non-finite 'theta_rad'".into()))?;

        let scale = match obj.get("scale") {
            Some(serde_json::Value::Number(n)) => {
                let s = n.as_f64().unwrap_or(f64::NAN);
                Scale::Uniform(s)
            }
            Some(serde_json::Value::Array(items)) if items.len() == 3 => {
                let mut s = [0.0f64; 3];
                for (slot, item) in s.iter_mut().zip(items) {
                    *slot = item
                        .as_f64()
                        .ok_or_else(|| Error::TransformJson("non-numeric scale entry".into()))?;
                }
                Scale::PerAxis(s)
            }
            _ => {
                return Err(Error::TransformJson(
                    "'scale' must be a number or a 3-element array".into(),
                ))
            }
        };
        if scale.factors().iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::TransformJson("scale factors must be finite and positive".into()));
        }

        let translation = obj
            .get("translation")
            .and_then(|v| v.as_array())
            .filter(|a| a.len() == 3)
            .ok_or_else(|| Error::TransformJson("'translation' must be a 3-element array".into()))?;
        let mut t = [0.0f64; 3];
        for (slot, item) in t.iter_mut().zip(translation) {
            *slot = item
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::TransformJson("non-finite translation entry".into()))?;
        }

        Ok(SimilarityTransformY::new(
            theta,
            scale,
            Point3::new(t[0], t[1], t[2]),
        ))
    }
}

/// Self-describing guard string stored in every transform JSON.
pub const APPLICATION_RULE: &str = "q = s*Ry(theta)*p + t";

/// How per-point distances are normalized before squaring and averaging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Raw distances in scene units.
    None,
    /// Distances divided by the target cloud's bounding-box diagonal.
    TargetDiagonal,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::None => "none",
            Normalization::TargetDiagonal => "target_diagonal",
        }
    }
}

/// Knobs for [`icp`] and [`multi_start_icp`].
#[derive(Clone, Debug)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop when the relative change of the error between consecutive
    /// iterations drops below this.
    pub rel_tolerance: f64,
    /// Pin the scale to 1 (placement without resizing).
    pub fix_scale: bool,
    /// When false, the refit releases per-axis scales (ignored while
    /// `fix_scale` is set).
    pub keep_aspect_ratio: bool,
    /// Number of evenly spaced yaw initializations for multi-start.
    pub starts: usize,
    pub normalization: Normalization,
    /// Outlier trim hook, off by default: correspondences whose
    /// (normalized) distance exceeds this are left out of the refit step.
    /// The reported error always covers every point.
    pub trim_distance: Option<f64>,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            rel_tolerance: 1e-6,
            fix_scale: false,
            keep_aspect_ratio: true,
            starts: 8,
            normalization: Normalization::TargetDiagonal,
            trim_distance: None,
        }
    }
}

/// Outcome of a registration run.
#[derive(Clone, Debug)]
pub struct RegistrationResult {
    pub transform: SimilarityTransformY,
    /// Final error: mean of squared normalized closest-point distances.
    pub error: f64,
    /// Normalized distance from each transformed source point to its
    /// nearest target point (not squared).
    pub per_point_errors: Vec<f64>,
    /// Number of refit iterations performed.
    pub iterations: usize,
    pub converged: bool,
    /// Which multi-start initialization produced this result (0 for plain
    /// [`icp`]).
    pub start_index: usize,
    /// Error after the initial transform and after each iteration;
    /// `error_history[0]` is the initialization error and the last entry
    /// equals `error`.
    pub error_history: Vec<f64>,
}
