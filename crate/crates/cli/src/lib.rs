//! `mvalign`: synthetic scenes, multi-view CAD alignment, single-frame
//! baselines, evaluation and mesh export.
//!
//! Exit codes: 0 success, 1 no object could be solved, 2 input or usage error.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mvalign_core::association::{integrate_scene, Integration};
use mvalign_core::baseline::{run_baseline, BaselineVariant, ClassStats};
use mvalign_core::datamodel::{
    export_scene_mesh, load_alignments, load_ground_truth, load_models, load_scene_with_warnings, save_alignments, save_scene,
    AlignmentResult, GROUND_TRUTH_FILE,
};
use mvalign_core::eval::{evaluate, render_text, write_report};
use mvalign_core::solver::{chunk_scene, OnlineSession, SolveReport};
use mvalign_core::synth::{generate, SynthSpec};

use config::RunConfig;

pub const ALIGNMENTS_FILE: &str = "alignments.jsonl";
pub const SOLVE_REPORT_FILE: &str = "solve_report.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Parser)]
#[command(name = "mvalign", version, about = "Multi-view 9-DoF CAD alignment")]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the seed of a synth spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene directory with ground truth from a JSON spec.
    Synth { spec: PathBuf, out_dir: PathBuf },
    /// Track, cluster and align every object of a scene.
    Solve {
        scene_dir: PathBuf,
        out_dir: PathBuf,
        /// Feed the video in chunks of this many frames, writing a snapshot per chunk.
        #[arg(long)]
        online_chunk: Option<usize>,
    },
    /// Single-frame alignments, deduplicated by clustering.
    Baseline {
        scene_dir: PathBuf,
        out_dir: PathBuf,
        #[arg(long, value_enum)]
        variant: Variant,
        /// Per-class scale and depth statistics (JSON), required for class-avg.
        #[arg(long)]
        class_stats: Option<PathBuf>,
    },
    /// Score alignments against ground truth.
    Eval {
        alignments: PathBuf,
        ground_truth: PathBuf,
        out_dir: PathBuf,
        /// Models file; enables the oriented-box precision/recall table.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Write the posed CAD models of an alignment file as one OBJ mesh.
    Export {
        alignments: PathBuf,
        models: PathBuf,
        out_mesh: PathBuf,
    },
    /// Compute per-class average scale and depth from scenes with ground truth.
    ClassStats {
        out_file: PathBuf,
        #[arg(required = true)]
        scene_dirs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    ClassAvg,
    ScalePred,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    NothingSolved,
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::NothingSolved => 1,
            Failure::Input(_) => 2,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

/// Parses `args` (program name first) and runs the command; text reports go to `out`.
pub fn run_args<I, T>(args: I, out: &mut dyn Write) -> Result<(), Failure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(Cli::try_parse_from(args)?, out)
}

/// Runs one parsed command line; text reports go to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    if let Command::Solve {
        online_chunk: Some(n), ..
    } = &cli.command
    {
        cfg.online_chunk = Some(*n);
    }
    cfg.validate()?;
    if let Some(j) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .context("configuring worker threads")?;
    }

    match cli.command {
        Command::Synth { spec, out_dir } => cmd_synth(&spec, &out_dir, cli.seed),
        Command::Solve { scene_dir, out_dir, .. } => cmd_solve(&scene_dir, &out_dir, &cfg),
        Command::Baseline {
            scene_dir,
            out_dir,
            variant,
            class_stats,
        } => cmd_baseline(&scene_dir, &out_dir, variant, class_stats.as_deref(), &cfg),
        Command::Eval {
            alignments,
            ground_truth,
            out_dir,
            models,
        } => cmd_eval(&alignments, &ground_truth, &out_dir, models.as_deref(), &cfg, out),
        Command::Export {
            alignments,
            models,
            out_mesh,
        } => cmd_export(&alignments, &models, &out_mesh),
        Command::ClassStats { out_file, scene_dirs } => cmd_class_stats(&out_file, &scene_dirs),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_synth(spec_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let mut spec: SynthSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let s = generate(&spec)?;
    save_scene(out_dir, &s.scene, Some(&s.ground_truth))?;
    log::info!(
        "wrote {} frames, {} observations, {} objects to {}",
        s.scene.frames.len(),
        s.scene.observations.len(),
        s.ground_truth.len(),
        out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ObjectDiagnostics<'a> {
    object_id: u32,
    tracks: &'a [u32],
    report: &'a SolveReport,
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    n_tracks: usize,
    n_objects: usize,
    objects: Vec<ObjectDiagnostics<'a>>,
    failures: &'a [String],
}

fn write_solve_outputs(dir: &Path, out: &Integration) -> Result<()> {
    create_dir(dir)?;
    save_alignments(&dir.join(ALIGNMENTS_FILE), &out.results)?;
    let summary = SolveSummary {
        n_tracks: out.tracks.len(),
        n_objects: out.results.len(),
        objects: out
            .results
            .iter()
            .zip(&out.reports)
            .zip(&out.clusters)
            .map(|((r, report), tracks)| ObjectDiagnostics {
                object_id: r.object_id,
                tracks,
                report,
            })
            .collect(),
        failures: &out.failures,
    };
    write_json(&dir.join(SOLVE_REPORT_FILE), &summary)
}

fn load_scene_logged(dir: &Path) -> Result<mvalign_core::datamodel::SceneInput> {
    let (scene, warnings) = load_scene_with_warnings(dir).with_context(|| format!("loading scene {}", dir.display()))?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(scene)
}

fn cmd_solve(scene_dir: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(), Failure> {
    let scene = load_scene_logged(scene_dir)?;
    let out = match cfg.online_chunk {
        None => integrate_scene(&scene, &cfg.weights, &cfg.solver, &cfg.association),
        Some(n) => {
            let mut session = OnlineSession::new(scene.cad_db.clone(), cfg.weights, cfg.solver.clone(), cfg.association);
            for (k, (frames, obs)) in chunk_scene(&scene, n).into_iter().enumerate() {
                let start = std::time::Instant::now();
                let snapshot = session.update(frames, obs).map_err(anyhow::Error::from)?;
                log::info!(
                    "chunk {k}: {} objects in {:.2} s",
                    snapshot.results.len(),
                    start.elapsed().as_secs_f64()
                );
                write_solve_outputs(&out_dir.join(SNAPSHOT_DIR).join(format!("chunk_{k:04}")), snapshot)?;
            }
            session.integration().clone()
        }
    };
    write_solve_outputs(out_dir, &out)?;
    for f in &out.failures {
        log::warn!("{f}");
    }
    log::info!("{} objects from {} tracks", out.results.len(), out.tracks.len());
    if out.results.is_empty() && !out.failures.is_empty() {
        return Err(Failure::NothingSolved);
    }
    Ok(())
}

fn cmd_baseline(
    scene_dir: &Path,
    out_dir: &Path,
    variant: Variant,
    stats_path: Option<&Path>,
    cfg: &RunConfig,
) -> Result<(), Failure> {
    let variant = match variant {
        Variant::ClassAvg => BaselineVariant::ClassAvg,
        Variant::ScalePred => BaselineVariant::ScalePred,
    };
    let stats = match stats_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str::<ClassStats>(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None if variant == BaselineVariant::ClassAvg => return Err(anyhow!("the class-avg baseline needs --class-stats").into()),
        None => None,
    };
    let scene = load_scene_logged(scene_dir)?;
    let results: Vec<AlignmentResult> = run_baseline(&scene, variant, stats.as_ref(), &cfg.weights, &cfg.association.cluster)?;
    create_dir(out_dir)?;
    save_alignments(&out_dir.join(ALIGNMENTS_FILE), &results)?;
    log::info!("{} objects", results.len());
    Ok(())
}

fn cmd_eval(
    alignments: &Path,
    gt_path: &Path,
    out_dir: &Path,
    models: Option<&Path>,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let results = load_alignments(alignments).with_context(|| format!("loading {}", alignments.display()))?;
    let gt = load_ground_truth(gt_path).with_context(|| format!("loading {}", gt_path.display()))?;
    let mut eval_cfg = cfg.eval.clone();
    let cad_db = match models {
        Some(p) => load_models(p).with_context(|| format!("loading {}", p.display()))?,
        None => {
            eval_cfg.iou_thresholds.clear();
            Vec::new()
        }
    };
    let report = evaluate(&results, &gt, &cad_db, &eval_cfg)?;
    write_report(out_dir, &report)?;
    out.write_all(render_text(&report).as_bytes()).context("writing the report")?;
    Ok(())
}

fn cmd_export(alignments: &Path, models: &Path, out_mesh: &Path) -> Result<(), Failure> {
    let results = load_alignments(alignments).with_context(|| format!("loading {}", alignments.display()))?;
    let cad_db = load_models(models).with_context(|| format!("loading {}", models.display()))?;
    export_scene_mesh(&results, &cad_db, out_mesh)?;
    Ok(())
}

fn cmd_class_stats(out_file: &Path, scene_dirs: &[PathBuf]) -> Result<(), Failure> {
    let mut loaded = Vec::new();
    for d in scene_dirs {
        let scene = load_scene_logged(d)?;
        let gt = load_ground_truth(&d.join(GROUND_TRUTH_FILE)).with_context(|| format!("loading ground truth of {}", d.display()))?;
        loaded.push((scene, gt));
    }
    let stats = ClassStats::from_ground_truth(loaded.iter().map(|(s, g)| (s, g.as_slice())));
    write_json(out_file, &stats)?;
    Ok(())
}
