//! `lfr` — render synthetic light fields, classify features as Lambertian or
//! refracted, evaluate against ground truth, sweep thresholds, and export
//! filtered keypoint lists.

// `!(x > 0.0)` in validations intentionally rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lf_refract::config::PipelineConfig;
use lf_refract::error::{Error, Result};
use lf_refract::eval::{
    self, best_at_fpr, evaluate, refraction_ratio, sweep, Exclusion, EvalResult, Method,
};
use lf_refract::keypoint::{load_keypoints, save_keypoints};
use lf_refract::lf::LightField;
use lf_refract::parallel;
use lf_refract::pipeline::{
    classify_keypoints, classify_lightfield, lambertian_keypoints, save_curves,
    ClassificationReport, FeatureResult,
};
use lf_refract::synth::{preset_scene, render_lightfield, GroundTruth, SceneSpec, PRESETS};

#[derive(Parser)]
#[command(
    name = "lfr",
    version,
    about = "Distinguish refracted from Lambertian features in a 4D light field"
)]
struct Cli {
    /// Worker threads (default: all available cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic light field plus ground truth into a directory
    Render(RenderArgs),
    /// Detect keypoints and classify each as lambertian/refracted/indeterminate
    Classify(ClassifyArgs),
    /// Classify a light field and score both methods against a ground-truth mask
    Eval(EvalArgs),
    /// Classify once, then relabel across threshold grids and score every point
    Sweep(SweepArgs),
    /// Convert a classification report to the keypoint text format
    ExportFeatures(ExportArgs),
}

#[derive(Args)]
struct RenderArgs {
    /// Built-in scene name (lambertian, sphere_large_baseline,
    /// sphere_small_baseline, cylinder_small_baseline)
    #[arg(long, conflicts_with = "scene")]
    preset: Option<String>,
    /// Scene description JSON file
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Output directory (receives manifest.json, view_*.png, ground_truth.png, depth.pgm)
    #[arg(long)]
    out: PathBuf,
    /// Texture seed
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Every pipeline threshold as an optional flag; set flags override the
/// config file, which overrides built-in defaults.
#[derive(Args, Default)]
struct ConfigOverrides {
    #[arg(long)]
    octaves: Option<usize>,
    #[arg(long)]
    intervals: Option<usize>,
    #[arg(long)]
    contrast_thresh: Option<f64>,
    #[arg(long)]
    edge_thresh: Option<f64>,
    #[arg(long)]
    border_margin_k: Option<f64>,
    #[arg(long)]
    k_template: Option<f64>,
    #[arg(long)]
    corr_mask_thresh: Option<f32>,
    #[arg(long)]
    min_span_frac: Option<f64>,
    #[arg(long)]
    max_step_px: Option<f64>,
    #[arg(long)]
    view_span: Option<usize>,
    #[arg(long)]
    search_radius: Option<usize>,
    #[arg(long)]
    max_slope_px_per_view: Option<f64>,
    #[arg(long)]
    planar_thresh: Option<f64>,
    #[arg(long)]
    slope_thresh: Option<f64>,
    #[arg(long)]
    xu_thresh: Option<f64>,
    #[arg(long)]
    min_samples: Option<usize>,
}

impl ConfigOverrides {
    fn resolve(&self, config_file: Option<&Path>) -> Result<PipelineConfig> {
        let mut cfg = match config_file {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(
            octaves,
            intervals,
            contrast_thresh,
            edge_thresh,
            border_margin_k,
            k_template,
            corr_mask_thresh,
            min_span_frac,
            max_step_px,
            planar_thresh,
            slope_thresh,
            xu_thresh,
            min_samples
        );
        if self.view_span.is_some() {
            cfg.view_span = self.view_span;
        }
        if self.search_radius.is_some() {
            cfg.search_radius = self.search_radius;
        }
        if self.max_slope_px_per_view.is_some() {
            cfg.max_slope_px_per_view = self.max_slope_px_per_view;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct ClassifyArgs {
    /// Light-field directory (manifest.json + view images)
    #[arg(long)]
    lf: PathBuf,
    /// Pipeline config JSON
    #[arg(long)]
    config: Option<PathBuf>,
    /// External keypoints (text format) instead of the built-in detector
    #[arg(long)]
    keypoints: Option<PathBuf>,
    /// Classification report JSON output
    #[arg(long)]
    output: Option<PathBuf>,
    /// Per-feature curve dump JSON
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Annotated central view PNG (blue=lambertian, red=refracted, gray=indeterminate)
    #[arg(long)]
    annotate: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct EvalArgs {
    /// Light-field directory
    #[arg(long)]
    lf: PathBuf,
    /// Ground-truth refraction mask image (≥ half intensity = refracted)
    #[arg(long)]
    mask: PathBuf,
    /// Pipeline config JSON
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path
    #[arg(long)]
    csv: PathBuf,
    /// Optional JSON copy of the rows
    #[arg(long)]
    json: Option<PathBuf>,
    /// Annotated central view PNG
    #[arg(long)]
    annotate: Option<PathBuf>,
    /// Exclude a central disc of this fraction of the mask's equivalent
    /// radius from scoring (0 disables)
    #[arg(long, default_value_t = 0.0)]
    exclude_center_frac: f64,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct SweepArgs {
    /// Light-field directory
    #[arg(long)]
    lf: PathBuf,
    /// Ground-truth refraction mask image
    #[arg(long)]
    mask: PathBuf,
    /// Pipeline config JSON
    #[arg(long)]
    config: Option<PathBuf>,
    /// Planar-residual thresholds: comma list "a,b,c" or range "start:stop:n"
    #[arg(long)]
    planar_grid: Option<String>,
    /// Slope-inconsistency thresholds (same syntax)
    #[arg(long)]
    slope_grid: Option<String>,
    /// Baseline hyperplane-residual thresholds (same syntax)
    #[arg(long)]
    xu_grid: Option<String>,
    /// CSV output path
    #[arg(long)]
    csv: PathBuf,
    /// Optional JSON copy of the rows
    #[arg(long)]
    json: Option<PathBuf>,
    /// Exclude a central disc of this fraction of the mask radius
    #[arg(long, default_value_t = 0.0)]
    exclude_center_frac: f64,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct ExportArgs {
    /// Classification report JSON (from `lfr classify --output`)
    #[arg(long)]
    classification: PathBuf,
    /// Output keypoint text file
    #[arg(long)]
    output: PathBuf,
    /// filtered = lambertian verdicts only; unfiltered = every feature
    #[arg(long, default_value = "filtered")]
    mode: ExportMode,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ExportMode {
    Filtered,
    Unfiltered,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let outcome = parallel::with_threads(threads, || run(cli.command));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lfr: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Render(a) => cmd_render(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ExportFeatures(a) => cmd_export(a),
    }
}

fn load_scene(args: &RenderArgs) -> Result<SceneSpec> {
    match (&args.preset, &args.scene) {
        (Some(name), _) => preset_scene(name),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::format(format!("{}: {}", path.display(), e)))
        }
        (None, None) => Err(Error::config(format!(
            "render needs --preset <{}> or --scene <file>",
            PRESETS.join("|")
        ))),
    }
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let spec = load_scene(&args)?;
    let (lf, gt) = render_lightfield(&spec, args.seed)?;
    lf.save(&args.out)?;
    gt.save(&args.out)?;
    println!(
        "wrote {}x{} views of {}x{} px to {} (seed {})",
        lf.n_s(),
        lf.n_t(),
        lf.n_u(),
        lf.n_v(),
        args.out.display(),
        args.seed
    );
    Ok(())
}

/// Loads the light field and runs classification, honoring an optional
/// external keypoint list.
fn classify_dir(
    lf_dir: &Path,
    keypoints: Option<&Path>,
    cfg: &PipelineConfig,
) -> Result<(LightField, Vec<FeatureResult>)> {
    let lf = LightField::load(lf_dir)?;
    let results = match keypoints {
        Some(path) => {
            let kps = load_keypoints(path, lf.n_u(), lf.n_v())?;
            classify_keypoints(&lf, &kps, cfg)?
        }
        None => classify_lightfield(&lf, cfg)?,
    };
    Ok((lf, results))
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let cfg = args.overrides.resolve(args.config.as_deref())?;
    let (lf, results) = classify_dir(&args.lf, args.keypoints.as_deref(), &cfg)?;
    let report = ClassificationReport::from_results(&results);
    if let Some(path) = &args.output {
        report.save(path)?;
    }
    if let Some(path) = &args.curves {
        save_curves(&results, path)?;
    }
    if let Some(path) = &args.annotate {
        eval::annotate(lf.central_view(), &report.features, path)?;
    }
    println!(
        "{} features: {} lambertian, {} refracted, {} indeterminate",
        report.n_features, report.n_lambertian, report.n_refracted, report.n_indeterminate
    );
    Ok(())
}

fn exclusion_for(mask: &lf_refract::Image, frac: f64) -> Result<Option<Exclusion>> {
    if frac == 0.0 {
        return Ok(None);
    }
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::config(format!(
            "exclude-center-frac must lie in [0, 1), got {}",
            frac
        )));
    }
    Ok(eval::mask_disc(mask).map(|d| Exclusion {
        radius: frac * d.radius,
        ..d
    }))
}

fn print_rows(rows: &[EvalResult]) {
    for r in rows {
        let fmt = |x: Option<f64>| match x {
            Some(v) => format!("{:.1}%", 100.0 * v),
            None => "undefined".to_string(),
        };
        println!(
            "{}: tpr {} fpr {} (tp {} fp {} tn {} fn {} indeterminate {})",
            r.method,
            fmt(r.tpr),
            fmt(r.fpr),
            r.tp,
            r.fp,
            r.tn,
            r.fn_,
            r.indeterminate
        );
    }
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let cfg = args.overrides.resolve(args.config.as_deref())?;
    let (lf, results) = classify_dir(&args.lf, None, &cfg)?;
    let report = ClassificationReport::from_results(&results);
    let mask = GroundTruth::load_mask(&args.mask)?;
    let exclusion = exclusion_for(&mask, args.exclude_center_frac)?;
    let th = cfg.thresholds();
    let rows = vec![
        evaluate(&report.features, &mask, Method::Proposed, &th, exclusion.as_ref())?,
        evaluate(&report.features, &mask, Method::XuBaseline, &th, exclusion.as_ref())?,
    ];
    eval::write_csv(&rows, &args.csv)?;
    if let Some(path) = &args.json {
        eval::write_json(&rows, path)?;
    }
    if let Some(path) = &args.annotate {
        eval::annotate(lf.central_view(), &report.features, path)?;
    }
    print_rows(&rows);
    let rr = refraction_ratio(&report.features)?;
    println!("refraction ratio: {:.3} ({} of {} determinate)", rr.r, rr.i_r, rr.i_t);
    Ok(())
}

/// Parses "start:stop:n" (inclusive linear range) or "a,b,c" into positive
/// threshold values.
fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::config(msg);
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("grid {:?} must be start:stop:n", spec)));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| bad(format!("bad grid start {:?}", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| bad(format!("bad grid stop {:?}", parts[1])))?;
        let n: usize = parts[2]
            .parse()
            .map_err(|_| bad(format!("bad grid count {:?}", parts[2])))?;
        if n == 0 {
            return Err(bad("grid count must be at least 1".to_string()));
        }
        if n == 1 {
            vec![start]
        } else {
            (0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect()
        }
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("bad grid value {:?}", s)))
            })
            .collect::<Result<Vec<f64>>>()?
    };
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
        return Err(bad(format!(
            "grid {:?} must contain only positive thresholds",
            spec
        )));
    }
    Ok(values)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = args.overrides.resolve(args.config.as_deref())?;
    let (_, results) = classify_dir(&args.lf, None, &cfg)?;
    let report = ClassificationReport::from_results(&results);
    let mask = GroundTruth::load_mask(&args.mask)?;
    let exclusion = exclusion_for(&mask, args.exclude_center_frac)?;
    let th = cfg.thresholds();

    let grid_or = |spec: &Option<String>, fallback: f64| -> Result<Vec<f64>> {
        match spec {
            Some(s) => parse_grid(s),
            None => Ok(vec![fallback]),
        }
    };
    let planar = grid_or(&args.planar_grid, th.planar_thresh)?;
    let slope = grid_or(&args.slope_grid, th.slope_thresh)?;
    let xu = grid_or(&args.xu_grid, th.xu_thresh)?;

    let mut rows = sweep(
        &report.features,
        &mask,
        Method::Proposed,
        &th,
        &planar,
        &slope,
        &[],
        exclusion.as_ref(),
    )?;
    rows.extend(sweep(
        &report.features,
        &mask,
        Method::XuBaseline,
        &th,
        &[],
        &[],
        &xu,
        exclusion.as_ref(),
    )?);
    eval::write_csv(&rows, &args.csv)?;
    if let Some(path) = &args.json {
        eval::write_json(&rows, path)?;
    }
    println!("wrote {} rows to {}", rows.len(), args.csv.display());
    for method in [Method::Proposed, Method::XuBaseline] {
        let subset: Vec<EvalResult> = rows.iter().filter(|r| r.method == method).cloned().collect();
        if let Some(best) = best_at_fpr(&subset, 0.10) {
            println!(
                "best {} at fpr<=10%: tpr {:.1}% (planar {} slope {} xu {})",
                method,
                100.0 * best.tpr.unwrap_or(0.0),
                best.planar_thresh,
                best.slope_thresh,
                best.xu_thresh
            );
        }
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let report = ClassificationReport::load(&args.classification)?;
    let kps = match args.mode {
        ExportMode::Filtered => lambertian_keypoints(&report.features),
        ExportMode::Unfiltered => report.features.iter().map(|f| f.keypoint()).collect(),
    };
    save_keypoints(&kps, &args.output)?;
    match args.mode {
        ExportMode::Filtered => println!(
            "wrote {} lambertian keypoints (removed {} refracted, {} indeterminate)",
            kps.len(),
            report.n_refracted,
            report.n_indeterminate
        ),
        ExportMode::Unfiltered => println!("wrote {} keypoints", kps.len()),
    }
    Ok(())
}
