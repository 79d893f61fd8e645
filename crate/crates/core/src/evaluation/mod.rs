//! Batch placement evaluation over a dataset of physical-space scans.
//!
//! [`evaluate_dataset`] registers one virtual cloud against every scene in
//! a directory, ranks the scenes by final error and assembles a report
//! that [`write_report`] serializes as byte-stable JSON. Per-scene error
//! heatmaps can be exported along the way: the transformed virtual cloud
//! colored from blue (no error) to red (error at or above the 95th
//! percentile).
//!
//! A scene that fails to load or register is recorded and skipped; the
//! batch only fails when every scene does.

mod report;

pub use report::{
    write_report, EvaluationReport, SceneOutcome, SceneResult, SourceInfo,
};

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, CloudFormat, PointCloud};
use crate::registration::{multi_start_icp, IcpParams, SimilarityTransformY};

/// The scenes of a dataset, sorted by id. Ids are file stems and must be
/// unique.
#[derive(Clone, Debug)]
pub struct DatasetManifest {
    scenes: Vec<SceneRef>,
}

#[derive(Clone, Debug)]
pub struct SceneRef {
    pub scene_id: String,
    pub path: PathBuf,
}

impl DatasetManifest {
    pub fn new(mut scenes: Vec<SceneRef>) -> Result<Self> {
        scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
        for pair in scenes.windows(2) {
            if pair[0].scene_id == pair[1].scene_id {
                return Err(Error::DuplicateSceneId(pair[0].scene_id.clone()));
            }
        }
        Ok(DatasetManifest { scenes })
    }

    pub fn scenes(&self) -> &[SceneRef] {
        &self.scenes
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }
}

/// Lists the files in `dir` whose names match `pattern` (a filename glob,
/// typically `*.ply`), keyed and sorted by file stem.
pub fn scan_dataset(dir: &Path, pattern: &str) -> Result<DatasetManifest> {
    let matcher = glob::Pattern::new(pattern).map_err(|e| Error::InvalidPattern {
        pattern: pattern.to_string(),
        message: e.msg.to_string(),
    })?;
    let mut scenes = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if !matcher.matches(name) {
            continue;
        }
        let scene_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| name.to_string());
        scenes.push(SceneRef { scene_id, path });
    }
    if scenes.is_empty() {
        return Err(Error::NoScenesMatched {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    DatasetManifest::new(scenes)
}

/// A stable per-scene seed so that adding or removing scenes never changes
/// the downsampling of the others. FNV-1a over the base seed and the
/// scene id.
fn scene_seed(seed: u64, scene_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &byte in seed.to_le_bytes().iter().chain(scene_id.as_bytes()) {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Registers `source` against every scene of the manifest.
///
/// Per scene: load the cloud, downsample both clouds to `downsample_n`
/// points with the scene-derived seed, run [`multi_start_icp`], and (when
/// `heatmap_dir` is given) export `<scene_id>.ply` there. `source_path` is
/// recorded in the report for provenance.
pub fn evaluate_dataset(
    source: &PointCloud,
    source_path: &Path,
    manifest: &DatasetManifest,
    params: &IcpParams,
    downsample_n: usize,
    seed: u64,
    heatmap_dir: Option<&Path>,
) -> Result<EvaluationReport> {
    if source.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Some(dir) = heatmap_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let outcomes: Vec<SceneOutcome> = manifest
        .scenes()
        .par_iter()
        .map(|scene| evaluate_scene(source, scene, params, downsample_n, seed, heatmap_dir))
        .collect();

    let ranked: Vec<(f64, &str)> = outcomes
        .iter()
        .filter_map(|o| match o {
            SceneOutcome::Registered(r) => Some((r.error, r.scene_id.as_str())),
            SceneOutcome::Failed { .. } => None,
        })
        .collect();
    if ranked.is_empty() {
        let first = outcomes
            .iter()
            .find_map(|o| match o {
                SceneOutcome::Failed { message, .. } => Some(message.clone()),
                _ => None,
            })
            .unwrap_or_else(|| "empty manifest".to_string());
        return Err(Error::AllScenesFailed(first));
    }
    let ranking = rank_scene_ids(ranked);

    Ok(EvaluationReport {
        source: SourceInfo {
            path: source_path.to_path_buf(),
            points: source.len(),
            downsample_n,
            seed,
        },
        params: params.clone(),
        scenes: outcomes,
        best: ranking.first().unwrap().clone(),
        worst: ranking.last().unwrap().clone(),
        ranking,
    })
}

fn evaluate_scene(
    source: &PointCloud,
    scene: &SceneRef,
    params: &IcpParams,
    downsample_n: usize,
    seed: u64,
    heatmap_dir: Option<&Path>,
) -> SceneOutcome {
    let fail = |message: String| SceneOutcome::Failed {
        scene_id: scene.scene_id.clone(),
        message,
    };

    let target = match geometry::load_point_cloud(&scene.path, CloudFormat::Auto) {
        Ok(cloud) => cloud,
        Err(e) => return fail(e.to_string()),
    };
    let scene_seed = scene_seed(seed, &scene.scene_id);
    let src = source.random_downsample(downsample_n, scene_seed);
    let tgt = target.random_downsample(downsample_n, scene_seed);

    let result = match multi_start_icp(&src, &tgt, params) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };

    let heatmap_path = match heatmap_dir {
        Some(dir) => {
            let path = dir.join(format!("{}.ply", scene.scene_id));
            if let Err(e) =
                export_heatmap(&src, &result.transform, &result.per_point_errors, &path)
            {
                return fail(e.to_string());
            }
            Some(path)
        }
        None => None,
    };

    SceneOutcome::Registered(SceneResult {
        scene_id: scene.scene_id.clone(),
        error: result.error,
        iterations: result.iterations,
        converged: result.converged,
        transform: result.transform,
        heatmap_path,
    })
}

/// Ascending by error; equal errors fall back to scene id order.
fn rank_scene_ids(mut ranked: Vec<(f64, &str)>) -> Vec<String> {
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    ranked.into_iter().map(|(_, id)| id.to_string()).collect()
}

/// Nearest-rank 95th percentile; 0 for an empty slice.
fn percentile_95(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (0.95 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Writes the transformed source cloud as ascii PLY with one color per
/// vertex: linear blue-to-red over `[0, e_max]` where `e_max` is the 95th
/// percentile of `per_point` (larger errors clamp to red; all blue when
/// `e_max` is zero). Channel values are `round(255 * weight)`.
pub fn export_heatmap(
    source: &PointCloud,
    transform: &SimilarityTransformY,
    per_point: &[f64],
    path: &Path,
) -> Result<()> {
    if per_point.len() != source.len() {
        return Err(Error::PerPointLengthMismatch {
            errors: per_point.len(),
            points: source.len(),
        });
    }
    let moved = transform.apply(source);
    let colors = heatmap_colors(per_point);
    geometry::save_ply_with_colors(moved.points(), &colors, path)
}

/// The documented colormap: weight = error / e_max clamped to [0, 1].
fn heatmap_colors(per_point: &[f64]) -> Vec<[u8; 3]> {
    let e_max = percentile_95(per_point);
    per_point
        .iter()
        .map(|&e| {
            let w = if e_max > 0.0 {
                (e / e_max).clamp(0.0, 1.0)
            } else {
                0.0
            };
            [
                (255.0 * w).round() as u8,
                0,
                (255.0 * (1.0 - w)).round() as u8,
            ]
        })
        .collect()
}
