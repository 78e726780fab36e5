//! Command-line front end: `synth`, `train`, `eval`, `rank` and `selfcheck`.

mod config;
mod model_file;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

pub use config::{parse_config_text, parse_pca_dims, RunConfig};
pub use model_file::{decode_model, encode_model, load_model, nsd_violations, save_model, MAGIC, NSD_TOLERANCE, VERSION};

use crate::dataset::{generate_synthetic, load_manifest, make_splits, sidecar_path, Manifest, PartBoxes};
use crate::error::{ReidError, Result};
use crate::eval::{average_trials, emit_report, ranked_scores, CmcCurve};
use crate::features::WindowParams;
use crate::pipeline::{evaluate_split, extract_raw_features, raw_features_for_image, run_trial};
use crate::solver::write_trace_csv;

pub const MODEL_FILE_NAME: &str = "model.mstc";

#[derive(Debug, Parser)]
#[command(
    name = "reidmstc",
    version,
    about = "Person re-identification with region features and a learned topology-constrained metric",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic two-view dataset with part-box sidecars.
    Synth(SynthArgs),
    /// Learn a metric on the training identities of the first split.
    Train(RunArgs),
    /// Evaluate CMC over the configured trials.
    Eval(EvalArgs),
    /// Rank a gallery against one probe image.
    Rank(RankArgs),
    /// Run the numerical self-checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for images, sidecars and manifest.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 60)]
    ids: u32,
    #[arg(long, default_value_t = 2)]
    views: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Flags shared by the pipeline commands; each one overrides the config file.
#[derive(Debug, Args, Default)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    inner_steps: Option<usize>,
    #[arg(long)]
    primal_tol: Option<f64>,
    #[arg(long)]
    dual_tol: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long)]
    subset_size: Option<usize>,
    /// Reduced dimensions as part:local:global.
    #[arg(long, value_name = "P:L:G")]
    pca_dims: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Single-threaded execution with fixed reduction order.
    #[arg(long)]
    bitexact: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Evaluate a saved model instead of training one per trial.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    /// Gallery manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Probe image; a `.parts.json` sidecar next to it is used when present.
    #[arg(long)]
    probe: PathBuf,
    /// Number of gallery entries to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let s = &mut cfg.solver;
        macro_rules! over {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        over!(
            max_iters => s.max_iters,
            rho => s.rho,
            eta => s.eta,
            inner_steps => s.inner_steps,
            primal_tol => s.primal_tol,
            dual_tol => s.dual_tol,
            lambda => s.lambda,
            alpha1 => s.alpha1,
            alpha2 => s.alpha2,
            subset_size => s.subset_size,
            out => cfg.out,
            seed => cfg.seed,
            trials => cfg.trials,
            train_fraction => cfg.train_fraction,
            threads => cfg.threads,
        );
        if let Some(m) = &self.manifest {
            cfg.manifest = Some(m.clone());
        }
        if let Some(d) = &self.pca_dims {
            cfg.pca_dims = parse_pca_dims(d)?;
        }
        if self.bitexact {
            cfg.bitexact = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("REIDMSTC_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ReidError::InvalidArgument(format!("cannot start thread pool: {e}")))?;
    pool.install(f)
}

fn load_dataset(cfg: &RunConfig) -> Result<Manifest> {
    let loaded = load_manifest(cfg.require_manifest()?)?;
    for w in &loaded.warnings {
        warn!("{w}");
    }
    Ok(loaded.manifest)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| ReidError::io(dir, e))
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let m = generate_synthetic(args.ids, args.views, args.seed, &args.out)?;
    println!(
        "wrote {} images of {} identities to {}",
        m.records.len(),
        args.ids,
        args.out.display()
    );
    Ok(())
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let manifest = load_dataset(cfg)?;
    let split = make_splits(&manifest, cfg.train_fraction, 1, cfg.seed)?.remove(0);
    let raw = extract_raw_features(&manifest, &WindowParams::default())?;
    let result = crate::pipeline::train_split(
        &manifest,
        &raw,
        &split.train_ids,
        WindowParams::default(),
        cfg.pca_dims,
        &cfg.solver_config(),
    )?;
    create_dir(&cfg.out)?;
    let model_path = cfg.out.join(MODEL_FILE_NAME);
    save_model(&result.model, &model_path)?;
    write_trace_csv(&cfg.out.join("convergence.csv"), &result.trace)?;
    let last = result.trace.last().expect("trace starts non-empty");
    println!(
        "trained on {} identities: {} iterations, objective {:.6} -> {:.6}, converged: {}; model at {}",
        split.train_ids.len(),
        last.iteration,
        result.trace[0].objective,
        last.objective,
        result.converged,
        model_path.display()
    );
    Ok(())
}

fn summary_csv(rows: &[(usize, &CmcCurve, Option<&CmcCurve>)]) -> String {
    let mut s = String::from("trial,rank1,rank5,rank10,rank20,euclidean_rank1\n");
    for (t, c, b) in rows {
        let base = b.map(|b| format!("{:.6}", b.rank1())).unwrap_or_default();
        writeln!(s, "{t},{:.6},{:.6},{:.6},{:.6},{base}", c.at(1), c.at(5), c.at(10), c.at(20)).unwrap();
    }
    s
}

fn cmd_eval(cfg: &RunConfig, model_path: Option<&Path>) -> Result<()> {
    let manifest = load_dataset(cfg)?;
    let splits = make_splits(&manifest, cfg.train_fraction, cfg.trials, cfg.seed)?;
    let window = WindowParams::default();
    let raw = extract_raw_features(&manifest, &window)?;
    let mut curves = Vec::new();
    let mut baselines = Vec::new();
    let mut trace = Vec::new();
    match model_path {
        Some(path) => {
            let model = load_model(path)?;
            if cfg.trials > 1 {
                warn!("a saved model is evaluated on every split; splits after the first may contain its training identities");
            }
            for split in &splits {
                curves.push(evaluate_split(&manifest, &raw, &split.test_ids, &model)?);
            }
        }
        None => {
            for split in &splits {
                let outcome = run_trial(&manifest, &raw, split, window, cfg.pca_dims, &cfg.solver_config())?;
                if split.trial_index == 0 {
                    trace = outcome.train.trace.clone();
                }
                curves.push(outcome.curve);
                baselines.push(outcome.baseline);
            }
        }
    }
    let mean = average_trials(&curves)?;
    create_dir(&cfg.out)?;
    let report = emit_report(&mean, &trace, &cfg.out)?;
    for note in &report.omitted {
        info!("omitted {note}");
    }
    let rows: Vec<(usize, &CmcCurve, Option<&CmcCurve>)> = curves
        .iter()
        .enumerate()
        .map(|(t, c)| (t, c, baselines.get(t)))
        .collect();
    let trials_path = cfg.out.join("trials.csv");
    fs::write(&trials_path, summary_csv(&rows)).map_err(|e| ReidError::io(&trials_path, e))?;
    let mut line = format!(
        "{} trials: rank-1 {:.4} rank-5 {:.4} rank-10 {:.4} rank-20 {:.4}",
        curves.len(),
        mean.at(1),
        mean.at(5),
        mean.at(10),
        mean.at(20)
    );
    if !baselines.is_empty() {
        let base = average_trials(&baselines)?;
        write!(line, " (euclidean rank-1 {:.4})", base.rank1()).unwrap();
    }
    println!("{line}");
    Ok(())
}

fn cmd_rank(args: &RankArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let (h, w) = (model.layout.image_height, model.layout.image_width);
    let mut manifest = load_manifest(&args.manifest)?.manifest;
    if (manifest.image_height, manifest.image_width) != (h, w) {
        warn!(
            "manifest image size {}x{} differs from the model's {h}x{w}; using the model's",
            manifest.image_height, manifest.image_width
        );
        manifest.image_height = h;
        manifest.image_width = w;
    }
    let raw = extract_raw_features(&manifest, &model.layout.window)?;
    let gallery = raw.iter().map(|r| model.describe(r)).collect::<Result<Vec<_>>>()?;

    let img = image::open(&args.probe)
        .map_err(|source| ReidError::Image {
            path: args.probe.clone(),
            source,
        })?
        .to_rgb8();
    let side = sidecar_path(&args.probe);
    let boxes: Option<PartBoxes> = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| ReidError::io(&side, e))?;
        Some(serde_json::from_str(&text).map_err(|source| ReidError::Json { path: side.clone(), source })?)
    } else {
        None
    };
    let scaled = crate::dataset::scale_image(img, boxes.as_ref(), h, w)?;
    let probe = model.describe(&raw_features_for_image(&scaled.image, scaled.part_boxes.as_ref(), &model.layout.window)?)?;

    let ranked = ranked_scores(&probe, &gallery, &model.metric)?;
    let mut out = String::from("rank,person_id,camera_id,score,path\n");
    for (pos, (idx, score)) in ranked.into_iter().take(args.top).enumerate() {
        let rec = &manifest.records[idx];
        writeln!(out, "{},{},{},{:.6},{}", pos + 1, rec.person_id, rec.camera_id, score, rec.path.display()).unwrap();
    }
    print!("{out}");
    Ok(())
}

fn cmd_selfcheck(args: &SelfcheckArgs) -> Result<bool> {
    let results = crate::selfcheck::run_all(args.seed);
    for r in &results {
        println!("{r}");
    }
    Ok(results.iter().all(|r| r.passed))
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 1 on a runtime failure,
/// 2 on a usage error.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a).map(|_| true),
        Command::Train(a) => a
            .resolve()
            .and_then(|cfg| with_threads(cfg.effective_threads(), || cmd_train(&cfg)))
            .map(|_| true),
        Command::Eval(a) => a
            .run
            .resolve()
            .and_then(|cfg| with_threads(cfg.effective_threads(), || cmd_eval(&cfg, a.model.as_deref())))
            .map(|_| true),
        Command::Rank(a) => with_threads(a.threads.max(1), || cmd_rank(a)).map(|_| true),
        Command::Selfcheck(a) => cmd_selfcheck(a),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
