//! Report assembly and serialization.
//!
//! The JSON layout is written by hand so that identical runs produce
//! byte-identical files: keys come out in a fixed order and floats carry
//! 17 significant digits (see `jsonfmt`). Top-level keys: `source`,
//! `params`, `scenes`, `ranking`, `best`, `worst`, plus an `errors` array
//! when any scene failed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::jsonfmt::{escape, float};
use crate::registration::{IcpParams, Scale, SimilarityTransformY, APPLICATION_RULE};

/// Provenance of the virtual scene cloud under evaluation.
#[derive(Clone, Debug)]
pub struct SourceInfo {
    pub path: PathBuf,
    /// Point count of the cloud as loaded (before downsampling).
    pub points: usize,
    pub downsample_n: usize,
    pub seed: u64,
}

/// Per-scene result of a batch run.
#[derive(Clone, Debug)]
pub struct SceneResult {
    pub scene_id: String,
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub transform: SimilarityTransformY,
    pub heatmap_path: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub enum SceneOutcome {
    Registered(SceneResult),
    Failed { scene_id: String, message: String },
}

/// Everything a batch run produced, in manifest order. `ranking` lists the
/// successfully registered scene ids sorted ascending by error (ties by
/// id); `best`/`worst` are its first and last entries.
#[derive(Clone, Debug)]
pub struct EvaluationReport {
    pub source: SourceInfo,
    pub params: IcpParams,
    pub scenes: Vec<SceneOutcome>,
    pub ranking: Vec<String>,
    pub best: String,
    pub worst: String,
}

impl EvaluationReport {
    pub fn to_json_string(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        writeln!(
            out,
            "  \"source\": {{\"path\": \"{}\", \"points\": {}, \"downsample\": {}, \"seed\": {}}},",
            escape(&self.source.path.to_string_lossy()),
            self.source.points,
            self.source.downsample_n,
            self.source.seed
        )
        .unwrap();
        writeln!(
            out,
            "  \"params\": {{\"max_iterations\": {}, \"rel_tolerance\": {}, \"fix_scale\": {}, \"keep_aspect_ratio\": {}, \"starts\": {}, \"normalization\": \"{}\", \"trim_distance\": {}}},",
            self.params.max_iterations,
            float(self.params.rel_tolerance),
            self.params.fix_scale,
            self.params.keep_aspect_ratio,
            self.params.starts,
            self.params.normalization.as_str(),
            match self.params.trim_distance {
                Some(t) => float(t),
                None => "null".to_string(),
            }
        )
        .unwrap();

        out.push_str("  \"scenes\": [\n");
        for (i, outcome) in self.scenes.iter().enumerate() {
            let sep = if i + 1 < self.scenes.len() { "," } else { "" };
            match outcome {
                SceneOutcome::Registered(r) => {
                    write!(
                        out,
                        "    {{\"scene_id\": \"{}\", \"error\": {}, \"converged\": {}, \"iterations\": {}, \"transform\": {}",
                        escape(&r.scene_id),
                        float(r.error),
                        r.converged,
                        r.iterations,
                        transform_json(&r.transform)
                    )
                    .unwrap();
                    if let Some(path) = &r.heatmap_path {
                        write!(out, ", \"heatmap\": \"{}\"", escape(&path.to_string_lossy()))
                            .unwrap();
                    }
                    writeln!(out, "}}{sep}").unwrap();
                }
                SceneOutcome::Failed { scene_id, message } => {
                    writeln!(
                        out,
                        "    {{\"scene_id\": \"{}\", \"error_message\": \"{}\"}}{sep}",
                        escape(scene_id),
                        escape(message)
                    )
                    .unwrap();
                }
            }
        }
        out.push_str("  ],\n");

        let ranking: Vec<String> = self
            .ranking
            .iter()
            .map(|id| format!("\"{}\"", escape(id)))
            .collect();
        writeln!(out, "  \"ranking\": [{}],", ranking.join(", ")).unwrap();
        writeln!(out, "  \"best\": \"{}\",", escape(&self.best)).unwrap();

        let failures: Vec<String> = self
            .scenes
            .iter()
            .filter_map(|o| match o {
                SceneOutcome::Failed { scene_id, message } => Some(format!(
                    "    {{\"scene_id\": \"{}\", \"message\": \"{}\"}}",
                    escape(scene_id),
                    escape(message)
                )),
                _ => None,
            })
            .collect();
        if failures.is_empty() {
            writeln!(out, "  \"worst\": \"{}\"", escape(&self.worst)).unwrap();
        } else {
            writeln!(out, "  \"worst\": \"{}\",", escape(&self.worst)).unwrap();
            writeln!(out, "  \"errors\": [\n{}\n  ]", failures.join(",\n")).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

/// Compact transform object, identical in content to
/// [`SimilarityTransformY::to_json_string`].
fn transform_json(t: &SimilarityTransformY) -> String {
    let scale = match t.scale {
        Scale::Uniform(s) => float(s),
        Scale::PerAxis([sx, sy, sz]) => {
            format!("[{}, {}, {}]", float(sx), float(sy), float(sz))
        }
    };
    format!(
        "{{\"theta_rad\": {}, \"scale\": {}, \"translation\": [{}, {}, {}], \"application\": \"{APPLICATION_RULE}\"}}",
        float(t.theta),
        scale,
        float(t.translation.x),
        float(t.translation.y),
        float(t.translation.z),
    )
}

/// Serializes the report to `path`; see [`EvaluationReport::to_json_string`].
pub fn write_report(report: &EvaluationReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json_string()).map_err(|e| Error::io(path, e))
}
