//! Command-line front end. [`run`] returns the process exit code:
//! 0 on success, 1 when some scene or object failed, 2 on usage or I/O
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::alignment::{evaluate_scene, icp, procrustes, AlignMode, AlignOptions, IcpParams};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, SimilarityTransform};
use crate::interaction::{
    multi_interaction_curve, object_object_curve, single_interaction_curve, EvalConfig,
    InteractionCurve,
};
use crate::io::report::CurveReport;
use crate::io::{load_mesh, load_scene, save_scene, EvalReport, SceneReport};
use crate::losses::{total_loss, LossComponents, LossWeights};
use crate::patches::{
    extract_dual_patches_each, orientation_ray, PatchGrid, ShrinkRules, DEFAULT_PATCH_SIZE,
};
use crate::scene::Scene;
use crate::synth::{generate, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURES: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the log filter (`info`, `debug`, ...).
pub const LOG_ENV: &str = "MMHOI_GEOM_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "mmhoi-geom",
    version,
    about = "Interaction reconstruction geometry and evaluation toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate ground-truth / prediction scene pairs into OUT/gt and OUT/pred.
    Synth(SynthArgs),
    /// Per-scene and aggregate CD/V2V after S or M alignment.
    Evaluate(EvaluateArgs),
    /// Interaction accuracy curve for one protocol.
    Curves(CurvesArgs),
    /// Dual-patch targets for every object of a scene.
    Patches(PatchesArgs),
    /// Rigid or similarity alignment of one mesh onto another.
    Align(AlignArgs),
    /// Weighted total loss of a component file.
    Losses(LossesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    S,
    M,
}

impl From<ModeArg> for AlignMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::S => AlignMode::Single,
            ModeArg::M => AlignMode::Multi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Single,
    Multi,
    ObjectObject,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Single => "single",
            Protocol::Multi => "multi",
            Protocol::ObjectObject => "object-object",
        }
    }

    pub fn curve(self, pairs: &[(&Scene, &Scene)], cfg: &EvalConfig) -> Result<InteractionCurve> {
        match self {
            Protocol::Single => single_interaction_curve(pairs, cfg),
            Protocol::Multi => multi_interaction_curve(pairs, cfg),
            Protocol::ObjectObject => object_object_curve(pairs, cfg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignMethod {
    Procrustes,
    Icp,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Scene k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub humans: usize,
    #[arg(long, default_value_t = 3)]
    pub objects: usize,
    #[arg(long, default_value_t = 560)]
    pub human_vertices: usize,
    #[arg(long, default_value_t = 40)]
    pub object_vertices: usize,
    #[arg(long, default_value_t = 0.0)]
    pub rotation_noise_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    pub translation_noise_m: f64,
    #[arg(long, default_value_t = 0.0)]
    pub vertex_noise_m: f64,
    #[arg(long, default_value_t = 0.7)]
    pub contact_fraction: f64,
    #[arg(long, default_value_t = 0.5)]
    pub object_contact_fraction: f64,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Directory of predicted scene JSON files.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth scene JSON files, matched by file name.
    #[arg(long)]
    pub gt: PathBuf,
    /// Curve thresholds in centimeters, `start:stop:step`.
    #[arg(long, default_value = "0:30:1")]
    pub thresholds: String,
    /// Contact threshold in meters.
    #[arg(long, default_value_t = crate::interaction::DEFAULT_DELTA)]
    pub delta: f64,
    /// Rigid alignment (no scale).
    #[arg(long)]
    pub rigid: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub pairs: PairArgs,
    #[arg(long, value_enum, default_value = "m")]
    pub mode: ModeArg,
    /// JSON report path; a CSV with the same stem is written next to it.
    /// Prints the JSON to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub pairs: PairArgs,
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    /// `.json` writes JSON, anything else CSV. Stdout (CSV) when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PatchesArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
    pub patch_size: u32,
    /// JSON `{category id: [top, bottom]}`; the built-in table when absent.
    #[arg(long)]
    pub shrink_rules: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, value_enum, default_value = "procrustes")]
    pub method: AlignMethod,
    /// Procrustes only: fit rotation and translation without scale.
    #[arg(long)]
    pub rigid: bool,
    #[arg(long, default_value_t = 50)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    /// JSON object of unweighted loss values.
    #[arg(long)]
    pub components: PathBuf,
    /// JSON weight overrides; missing fields keep their defaults.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter(LOG_ENV)).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Curves(a) => curves(a),
        Command::Patches(a) => patches(a),
        Command::Align(a) => align(a),
        Command::Losses(a) => losses(a),
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => crate::io::write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn to_pretty_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn synth(a: SynthArgs) -> Result<i32> {
    let cfg = SynthConfig {
        seed: a.seed,
        n_humans: a.humans,
        n_objects: a.objects,
        human_vertex_count: a.human_vertices,
        object_vertex_count: a.object_vertices,
        rotation_noise_deg: a.rotation_noise_deg,
        translation_noise_m: a.translation_noise_m,
        vertex_noise_m: a.vertex_noise_m,
        contact_fraction: a.contact_fraction,
        object_contact_fraction: a.object_contact_fraction,
        ..SynthConfig::default()
    };
    cfg.validate()?;
    let (gt_dir, pred_dir) = (a.out.join("gt"), a.out.join("pred"));
    create_dir(&gt_dir)?;
    create_dir(&pred_dir)?;
    pool(a.jobs)?.install(|| {
        (0..a.count)
            .into_par_iter()
            .try_for_each(|k| -> Result<()> {
                let (gt, pred) = generate(&cfg.with_seed(cfg.seed.wrapping_add(k as u64)))?;
                let name = format!("scene_{k:04}.json");
                save_scene(&gt, gt_dir.join(&name))?;
                save_scene(&pred, pred_dir.join(&name))
            })
    })?;
    info!("wrote {} scene pairs to {}", a.count, a.out.display());
    Ok(EXIT_OK)
}

/// Sorted `*.json` file names in `dir`.
pub fn scene_files(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

/// A loaded (pred, gt) pair, or the reason it could not be loaded.
struct Loaded {
    name: String,
    pair: std::result::Result<(Scene, Scene), String>,
}

fn load_pairs(args: &PairArgs) -> Result<Vec<Loaded>> {
    let pred_names = scene_files(&args.pred)?;
    let gt_names = scene_files(&args.gt)?;
    let mut names: Vec<String> = pred_names.iter().chain(&gt_names).cloned().collect();
    names.sort();
    names.dedup();
    let loaded = names
        .into_par_iter()
        .map(|name| {
            let pair = if !pred_names.contains(&name) {
                Err(format!(
                    "missing prediction file {}",
                    args.pred.join(&name).display()
                ))
            } else if !gt_names.contains(&name) {
                Err(format!(
                    "missing ground-truth file {}",
                    args.gt.join(&name).display()
                ))
            } else {
                load_scene(args.pred.join(&name))
                    .and_then(|p| Ok((p, load_scene(args.gt.join(&name))?)))
                    .map_err(|e| e.to_string())
            };
            Loaded { name, pair }
        })
        .collect();
    Ok(loaded)
}

fn eval_config(args: &PairArgs) -> Result<EvalConfig> {
    let parts: Vec<&str> = args.thresholds.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(Error::InvalidConfig(format!(
            "--thresholds expects start:stop:step, got `{}`",
            args.thresholds
        )));
    };
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad threshold value `{s}`")))
    };
    let cfg = EvalConfig {
        delta: args.delta,
        thresholds: EvalConfig::thresholds_from_cm(num(start)?, num(stop)?, num(step)?)?,
        align: AlignOptions {
            with_scale: !args.rigid,
            ..AlignOptions::default()
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn evaluate(a: EvaluateArgs) -> Result<i32> {
    let cfg = eval_config(&a.pairs)?;
    let mode: AlignMode = a.mode.into();
    let pool = pool(a.pairs.jobs)?;
    let (scenes, curves) = pool.install(|| -> Result<_> {
        let loaded = load_pairs(&a.pairs)?;
        let scenes: Vec<SceneReport> = loaded
            .par_iter()
            .map(|l| match &l.pair {
                Ok((pred, gt)) => match evaluate_scene(pred, gt, mode, &cfg.align) {
                    Ok(m) => SceneReport::from_metrics(&l.name, &m),
                    Err(e) => SceneReport::failed(&l.name, e),
                },
                Err(e) => SceneReport::failed(&l.name, e),
            })
            .collect();
        let pairs = ok_pairs(&loaded);
        let mut curves = Vec::new();
        for protocol in [Protocol::Single, Protocol::Multi, Protocol::ObjectObject] {
            match protocol.curve(&pairs, &cfg) {
                Ok(c) => curves.push((protocol, c)),
                Err(e) => info!("{} curve skipped: {e}", protocol.name()),
            }
        }
        Ok((scenes, curves))
    })?;

    let mut report = EvalReport::new(mode, cfg, scenes);
    for (protocol, curve) in &curves {
        report.add_curve(protocol.name(), curve);
    }
    for f in &report.failures {
        warn!("{}: {}", f.scene, f.error);
        eprintln!("failed: {}: {}", f.scene, f.error);
    }
    emit(a.out.as_deref(), &report.to_json())?;
    if let Some(out) = &a.out {
        emit(Some(&out.with_extension("csv")), &report.to_csv())?;
    }
    Ok(if report.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURES
    })
}

fn ok_pairs(loaded: &[Loaded]) -> Vec<(&Scene, &Scene)> {
    loaded
        .iter()
        .filter_map(|l| l.pair.as_ref().ok().map(|(p, g)| (p, g)))
        .collect()
}

fn curves(a: CurvesArgs) -> Result<i32> {
    let cfg = eval_config(&a.pairs)?;
    let pool = pool(a.pairs.jobs)?;
    let (loaded, curve) = pool.install(|| -> Result<_> {
        let loaded = load_pairs(&a.pairs)?;
        let curve = a.protocol.curve(&ok_pairs(&loaded), &cfg);
        Ok((loaded, curve))
    })?;
    let mut failed = false;
    for l in &loaded {
        if let Err(e) = &l.pair {
            eprintln!("failed: {}: {e}", l.name);
            failed = true;
        }
    }
    let curve = match curve {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {} protocol: {e}", a.protocol.name());
            return Ok(EXIT_FAILURES);
        }
    };
    if !curve.is_monotone() {
        return Err(Error::InvalidConfig("curve is not monotone".into()));
    }
    let json_out = a
        .out
        .as_ref()
        .is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let text = if json_out {
        to_pretty_json(&json!({
            "protocol": a.protocol.name(),
            "curve": CurveReport::from(&curve),
        }))
    } else {
        curve.to_csv()
    };
    emit(a.out.as_deref(), &text)?;
    Ok(if failed { EXIT_FAILURES } else { EXIT_OK })
}

fn patches(a: PatchesArgs) -> Result<i32> {
    let rules = match &a.shrink_rules {
        Some(p) => ShrinkRules::from_json(&crate::io::read_text(p)?)?,
        None => ShrinkRules::default(),
    };
    let scene = load_scene(&a.scene)?;
    let grid = PatchGrid::for_scene(&scene, a.patch_size)?;
    let mut failed = false;
    let entries: Vec<serde_json::Value> = extract_dual_patches_each(&scene, &grid, &rules)
        .into_iter()
        .enumerate()
        .map(|(object, r)| match r {
            Ok(dp) => json!({
                "object": object,
                "main_patch": dp.main_patch,
                "sub_patch": dp.sub_patch,
                "main_offset": dp.main_offset,
                "sub_offset": dp.sub_offset,
                "sub_has_interaction": dp.sub_has_interaction,
                "ray": orientation_ray(&dp, &grid).ok(),
            }),
            Err(e) => {
                failed = true;
                json!({ "object": object, "error": e.to_string() })
            }
        })
        .collect();
    let doc = json!({ "grid": grid, "objects": entries });
    emit(a.out.as_deref(), &to_pretty_json(&doc))?;
    Ok(if failed { EXIT_FAILURES } else { EXIT_OK })
}

fn rows(t: &SimilarityTransform) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|r| [0, 1, 2].map(|c| t.rotation[(r, c)]))
}

fn align(a: AlignArgs) -> Result<i32> {
    let source = load_mesh(&a.source)?;
    let target = load_mesh(&a.target)?;
    let (transform, rmse, iterations) = match a.method {
        AlignMethod::Procrustes => {
            let t = procrustes(source.vertices(), target.vertices(), !a.rigid)?;
            let msr =
                crate::alignment::mean_squared_residual(&t, source.vertices(), target.vertices());
            (t, msr.sqrt(), None)
        }
        AlignMethod::Icp => {
            let params = IcpParams {
                max_iterations: a.max_iterations,
                convergence_tol: a.tolerance,
            };
            let r = icp(
                source.vertices(),
                target.vertices(),
                &RigidTransform::identity(),
                &params,
            )?;
            (
                SimilarityTransform::from(r.transform),
                r.rmse,
                Some(r.iterations),
            )
        }
    };
    let doc = json!({
        "method": match a.method { AlignMethod::Procrustes => "procrustes", AlignMethod::Icp => "icp" },
        "scale": transform.scale,
        "rotation": rows(&transform),
        "translation": [transform.translation.x, transform.translation.y, transform.translation.z],
        "rmse": rmse,
        "iterations": iterations,
    });
    emit(a.out.as_deref(), &to_pretty_json(&doc))?;
    Ok(EXIT_OK)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = crate::io::read_text(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        file: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

fn losses(a: LossesArgs) -> Result<i32> {
    let components: LossComponents = read_json(&a.components)?;
    let weights: LossWeights = match &a.weights {
        Some(p) => read_json(p)?,
        None => LossWeights::default(),
    };
    weights.validate()?;
    let total = total_loss(&components, &weights)?;
    let doc = json!({ "total": total, "weights": weights, "components": components });
    emit(a.out.as_deref(), &to_pretty_json(&doc))?;
    Ok(EXIT_OK)
}
