//! Toolkit for placing virtual 3D scenes into scanned physical spaces.
//!
//! The pipeline works on point clouds throughout:
//!
//! * [`sampling`] turns a triangle-mesh scene into a point cloud, either by
//!   area-weighted surface sampling or by taking per-object support points,
//!   steered by layer tags.
//! * [`registration`] aligns a virtual cloud to a physical cloud with an
//!   ICP variant whose alignment step is restricted to translation,
//!   rotation about the vertical (Y) axis, and scale.
//! * [`evaluation`] batch-runs the placement over a dataset of physical
//!   scans, ranks scenes by error and exports per-point error heatmaps.
//!
//! All randomness flows through ChaCha8 generators seeded from explicit
//! `u64` seeds, so every operation is reproducible bit-for-bit.

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod registration;
pub mod sampling;

mod jsonfmt;

pub use error::{Error, Result};
pub use geometry::{Aabb, NNIndex, Point3, PointCloud};
