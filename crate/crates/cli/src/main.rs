//! Command-line front end: `sample`, `register`, `evaluate` and `heatmap`
//! subcommands over the library pipeline.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or algorithm
//! errors. Progress goes to stderr; file outputs only to the given paths.
//! `ARFY_THREADS` caps internal parallelism (default: all cores).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use arfy::evaluation::{evaluate_dataset, scan_dataset, write_report, SceneOutcome};
use arfy::geometry::{load_point_cloud, save_point_cloud, CloudFormat, CloudWriteFormat};
use arfy::registration::{
    multi_start_icp, placement_error, IcpParams, RegistrationResult, SimilarityTransformY,
};
use arfy::sampling::{
    load_mesh, sample_scene, support_points, surface_sample, LayerFilter, SamplingMethod,
};
use arfy::{NNIndex, PointCloud};

#[derive(Parser)]
#[command(name = "arfy", version, about = "Point-cloud placement toolkit", max_term_width = 100)]
struct Cli {
    /// Seed for every randomized operation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a triangle-mesh scene (OBJ) into a point cloud.
    Sample {
        /// Input mesh; object names may carry `@layer` suffixes.
        #[arg(long)]
        mesh: PathBuf,

        /// Number of surface samples.
        #[arg(long, default_value_t = 1000)]
        n: usize,

        #[arg(long, value_enum, default_value_t = Method::Surface)]
        method: Method,

        /// Per-layer assignment for `--method mixed`, e.g.
        /// `walls=surface,furniture=support,debug=ignore`.
        #[arg(long)]
        layer_spec: Option<String>,

        /// Comma-separated layers to keep (default: all).
        #[arg(long)]
        include_layers: Option<String>,

        /// Comma-separated layers to drop; wins over --include-layers.
        #[arg(long)]
        exclude_layers: Option<String>,

        /// Output cloud (.ply or .xyz by extension).
        #[arg(long)]
        out: PathBuf,
    },

    /// Register a virtual cloud onto a physical cloud.
    Register {
        #[arg(long)]
        source: PathBuf,

        #[arg(long)]
        target: PathBuf,

        #[arg(long, default_value_t = 100)]
        max_iter: usize,

        /// Relative error-change convergence threshold.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,

        /// Number of evenly spaced yaw initializations.
        #[arg(long, default_value_t = 8)]
        starts: usize,

        /// Pin the scale to 1.
        #[arg(long)]
        fix_scale: bool,

        /// Release per-axis scales instead of one uniform factor.
        #[arg(long)]
        no_keep_aspect_ratio: bool,

        /// Output transform JSON.
        #[arg(long)]
        out: PathBuf,

        /// Also export a per-point error heatmap PLY.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },

    /// Register a virtual cloud against every scene in a dataset directory.
    Evaluate {
        #[arg(long)]
        source: PathBuf,

        #[arg(long)]
        dataset: PathBuf,

        /// Filename glob selecting scene files.
        #[arg(long, default_value = "*.ply")]
        pattern: String,

        /// Downsample both clouds to this size per scene.
        #[arg(long, default_value_t = 1000)]
        downsample: usize,

        /// Output report JSON.
        #[arg(long)]
        out: PathBuf,

        /// Export one heatmap PLY per scene into this directory.
        #[arg(long)]
        heatmap_dir: Option<PathBuf>,
    },

    /// Recompute per-point errors under a saved transform and export a
    /// heatmap.
    Heatmap {
        #[arg(long)]
        source: PathBuf,

        #[arg(long)]
        target: PathBuf,

        /// Transform JSON produced by `register`.
        #[arg(long)]
        transform: PathBuf,

        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Surface,
    Support,
    Mixed,
}

enum CliError {
    Usage(String),
    Data(arfy::Error),
}

impl From<arfy::Error> for CliError {
    fn from(e: arfy::Error) -> Self {
        match e {
            // Bad flag values are usage errors, not data errors.
            arfy::Error::InvalidPattern { .. } | arfy::Error::InvalidParams(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Data(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    if let Some(threads) = std::env::var("ARFY_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("arfy: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("arfy: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let progress = |msg: String| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };

    match cli.command {
        Command::Sample {
            mesh,
            n,
            method,
            layer_spec,
            include_layers,
            exclude_layers,
            out,
        } => {
            if layer_spec.is_some() && method != Method::Mixed {
                return Err(CliError::Usage(
                    "--layer-spec requires --method mixed".into(),
                ));
            }
            let scene = load_mesh(&mesh)?;
            progress(format!(
                "loaded {} with {} objects",
                mesh.display(),
                scene.objects().len()
            ));
            let filter = build_filter(include_layers.as_deref(), exclude_layers.as_deref());
            let cloud = match method {
                Method::Surface => surface_sample(&scene, n, cli.seed, &filter)?,
                Method::Support => support_points(&scene, &filter)?,
                Method::Mixed => {
                    let mut assignments = parse_layer_spec(layer_spec.as_deref())?;
                    // Filtered-out layers are ignored outright.
                    for layer in scene.layer_names() {
                        if !filter.passes(&layer) {
                            assignments.insert(layer, SamplingMethod::Ignore);
                        }
                    }
                    sample_scene(&scene, &assignments, n, cli.seed)?
                }
            };
            save_cloud_by_extension(&cloud, &out)?;
            progress(format!("wrote {} points to {}", cloud.len(), out.display()));
        }

        Command::Register {
            source,
            target,
            max_iter,
            tol,
            starts,
            fix_scale,
            no_keep_aspect_ratio,
            out,
            heatmap,
        } => {
            let source_cloud = load_point_cloud(&source, CloudFormat::Auto)?;
            let target_cloud = load_point_cloud(&target, CloudFormat::Auto)?;
            progress(format!(
                "registering {} points onto {} points",
                source_cloud.len(),
                target_cloud.len()
            ));
            let params = IcpParams {
                max_iterations: max_iter,
                rel_tolerance: tol,
                starts,
                fix_scale,
                keep_aspect_ratio: !no_keep_aspect_ratio,
                ..IcpParams::default()
            };
            let result = multi_start_icp(&source_cloud, &target_cloud, &params)?;
            describe_result(&result, &progress);
            std::fs::write(&out, result.transform.to_json_string())
                .map_err(|e| CliError::Data(arfy::Error::Io { path: out.clone(), source: e }))?;
            if let Some(heatmap_path) = heatmap {
                arfy::evaluation::export_heatmap(
                    &source_cloud,
                    &result.transform,
                    &result.per_point_errors,
                    &heatmap_path,
                )?;
                progress(format!("wrote heatmap to {}", heatmap_path.display()));
            }
        }

        Command::Evaluate {
            source,
            dataset,
            pattern,
            downsample,
            out,
            heatmap_dir,
        } => {
            let source_cloud = load_point_cloud(&source, CloudFormat::Auto)?;
            let manifest = scan_dataset(&dataset, &pattern)?;
            progress(format!(
                "evaluating {} points over {} scenes",
                source_cloud.len(),
                manifest.len()
            ));
            let report = evaluate_dataset(
                &source_cloud,
                &source,
                &manifest,
                &IcpParams::default(),
                downsample,
                cli.seed,
                heatmap_dir.as_deref(),
            )?;
            for outcome in &report.scenes {
                match outcome {
                    SceneOutcome::Registered(r) => progress(format!(
                        "  {}: error={:.6e} iterations={} converged={}",
                        r.scene_id, r.error, r.iterations, r.converged
                    )),
                    SceneOutcome::Failed { scene_id, message } => {
                        progress(format!("  {scene_id}: FAILED ({message})"))
                    }
                }
            }
            progress(format!("best={} worst={}", report.best, report.worst));
            write_report(&report, &out)?;
            progress(format!("wrote report to {}", out.display()));
        }

        Command::Heatmap {
            source,
            target,
            transform,
            out,
        } => {
            let source_cloud = load_point_cloud(&source, CloudFormat::Auto)?;
            let target_cloud = load_point_cloud(&target, CloudFormat::Auto)?;
            let text = std::fs::read_to_string(&transform).map_err(|e| {
                CliError::Data(arfy::Error::Io { path: transform.clone(), source: e })
            })?;
            let placement = SimilarityTransformY::from_json_str(&text)?;
            let index = NNIndex::build(&target_cloud)?;
            let aabb = target_cloud.aabb()?;
            let moved = placement.apply(&source_cloud);
            let (error, per_point) = placement_error(
                &moved,
                &index,
                &aabb,
                IcpParams::default().normalization,
            )?;
            progress(format!("error under saved transform: {error:.6e}"));
            arfy::evaluation::export_heatmap(&source_cloud, &placement, &per_point, &out)?;
            progress(format!("wrote heatmap to {}", out.display()));
        }
    }
    Ok(())
}

fn describe_result(result: &RegistrationResult, progress: &impl Fn(String)) {
    progress(format!(
        "error={:.6e} iterations={} converged={} start={}",
        result.error, result.iterations, result.converged, result.start_index
    ));
}

fn build_filter(include: Option<&str>, exclude: Option<&str>) -> LayerFilter {
    let mut filter = LayerFilter::all();
    if let Some(list) = include {
        filter = filter.include(split_list(list));
    }
    if let Some(list) = exclude {
        filter = filter.exclude(split_list(list));
    }
    filter
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn parse_layer_spec(spec: Option<&str>) -> Result<BTreeMap<String, SamplingMethod>, CliError> {
    let mut assignments = BTreeMap::new();
    let Some(spec) = spec else {
        return Ok(assignments);
    };
    for entry in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((layer, method)) = entry.split_once('=') else {
            return Err(CliError::Usage(format!(
                "bad --layer-spec entry '{entry}' (expected layer=surface|support|ignore)"
            )));
        };
        let method = match method.trim() {
            "surface" => SamplingMethod::Surface,
            "support" => SamplingMethod::Support,
            "ignore" => SamplingMethod::Ignore,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown sampling method '{other}' in --layer-spec"
                )))
            }
        };
        assignments.insert(layer.trim().to_string(), method);
    }
    Ok(assignments)
}

fn save_cloud_by_extension(cloud: &PointCloud, out: &Path) -> Result<(), CliError> {
    let format = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("xyz") => CloudWriteFormat::Xyz,
        _ => CloudWriteFormat::PlyAscii,
    };
    save_point_cloud(cloud, out, format)?;
    Ok(())
}
