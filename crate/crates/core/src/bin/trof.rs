use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use trof::init::InitMethod;
use trof::io::{mean_image, read_image, read_labels, write_image, write_labels, write_labels_raw};
use trof::metrics::{evaluate, MatchMode, MetricReport};
use trof::pipeline::{segment_image, InitSource, SegmentConfig};
use trof::report::{InputSource, RunReport};
use trof::synth::{Preset, PresetOptions};
use trof::verify::{format_table, run_suites, Suite, VerifyOptions};
use trof::{Error, GrayImage, PhasePartition, RofParams, TrofParams, TrofResult, TvVariant};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "trof", version, about = "Multiphase segmentation by thresholding one ROF restoration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a grayscale image into K phases.
    Segment(SegmentArgs),
    /// Write a synthetic benchmark image and its ground truth.
    Synth(SynthArgs),
    /// Run the property and oracle battery.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TvArg {
    Iso,
    Aniso,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Fcm,
    Kmeans,
    Explicit,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitSourceArg {
    U,
    F,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatchArg {
    Means,
    Overlap,
    Identity,
}

#[derive(Args)]
struct SegmentArgs {
    /// Input image (8/16-bit PGM or PNG grayscale).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Generate the input from a synthetic preset instead of reading a file.
    #[arg(long)]
    preset: Option<Preset>,
    /// Side length of a generated preset image.
    #[arg(long)]
    size: Option<usize>,
    /// Number of phases K (defaults to the preset's, or one more than the --tau count, or 2).
    #[arg(long)]
    phases: Option<usize>,
    /// ROF fidelity weight (defaults to the preset's, else 8).
    #[arg(long)]
    mu: Option<f64>,
    /// ROF stopping tolerance on the relative change of u [default: 1e-4].
    #[arg(long)]
    eps_u: Option<f64>,
    /// Threshold stopping tolerance [default: 1e-5].
    #[arg(long)]
    eps_tau: Option<f64>,
    /// ADMM penalty [default: 2].
    #[arg(long)]
    rho: Option<f64>,
    /// ADMM iteration cap [default: 2000].
    #[arg(long)]
    max_iter: Option<usize>,
    /// Outer iteration cap [default: 100].
    #[arg(long)]
    max_outer: Option<usize>,
    /// Phases with at most this many pixels count as empty.
    #[arg(long, default_value_t = 0)]
    min_phase_size: usize,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Image clustered by fcm/kmeans: the ROF solution or the input
    /// (defaults to `u`, or the preset's benchmark choice).
    #[arg(long, value_enum)]
    init_source: Option<InitSourceArg>,
    /// Explicit initial thresholds, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    tau: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "iso")]
    tv: TvArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label image, phase i stored as round(i*255/(K-1)).
    #[arg(long)]
    out: Option<PathBuf>,
    /// 16-bit label image storing phase indices directly.
    #[arg(long)]
    out_raw: Option<PathBuf>,
    /// Piecewise-constant image of the phase means.
    #[arg(long)]
    means_out: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Ground-truth label image; adds SA and DICE to the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// How predicted phases are paired with truth phases.
    #[arg(long = "match", value_enum, default_value = "means")]
    match_mode: MatchArg,
}

#[derive(Args)]
struct SynthArgs {
    preset: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth label image.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Phase count of the written truth (defaults to the preset's).
    #[arg(long)]
    phases: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    stripes: Option<usize>,
    /// Gaussian noise variance.
    #[arg(long)]
    variance: Option<f64>,
    /// Missing-pixel fraction, or intensity factor for the close-intensity presets.
    #[arg(long)]
    fraction: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suites to run (default: all).
    #[arg(long = "suite", value_parser = parse_suite)]
    suites: Vec<Suite>,
    /// Grid of the layer-cake enumeration, e.g. 3x3.
    #[arg(long, value_parser = parse_grid, default_value = "3x3")]
    grid: (usize, usize),
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Side length of the preset images used by the trace suites.
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Seeds of the preset images, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    preset_seeds: Vec<u64>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    let w = w.parse::<usize>().map_err(|e| e.to_string())?;
    let h = h.parse::<usize>().map_err(|e| e.to_string())?;
    if w == 0 || h == 0 || w * h > trof::energy::BRUTE_FORCE_MAX_PIXELS {
        return Err(format!(
            "grid must have between 1 and {} pixels",
            trof::energy::BRUTE_FORCE_MAX_PIXELS
        ));
    }
    Ok((w, h))
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("trof: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("TROF_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("TROF_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return usage(e);
    }
    match cli.command {
        Command::Segment(args) => cmd_segment(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn write_outputs(args: &SegmentArgs, part: &PhasePartition, means: &[f64]) -> trof::Result<()> {
    if let Some(p) = &args.out {
        write_labels(p, part)?;
    }
    if let Some(p) = &args.out_raw {
        write_labels_raw(p, part)?;
    }
    if let Some(p) = &args.means_out {
        write_image(p, &mean_image(part, means)?)?;
    }
    Ok(())
}

fn build_config(args: &SegmentArgs) -> Result<SegmentConfig, String> {
    let init = match (args.init, &args.tau) {
        (Some(InitArg::Explicit), None) => return Err("--init explicit needs --tau".into()),
        (Some(InitArg::Fcm | InitArg::Kmeans), Some(_)) => {
            return Err("--tau is only used with --init explicit".into())
        }
        (Some(InitArg::Fcm), None) | (None, None) => InitMethod::Fcm,
        (Some(InitArg::Kmeans), None) => InitMethod::Kmeans,
        (_, Some(_)) => InitMethod::Explicit,
    };
    let phases = match (args.phases, &args.tau) {
        (Some(k), Some(t)) if k != t.len() + 1 => {
            return Err(format!("--phases {k} needs {} thresholds, got {}", k.saturating_sub(1), t.len()))
        }
        (Some(k), _) => k,
        (None, Some(t)) => t.len() + 1,
        (None, None) => args.preset.map_or(2, Preset::phases),
    };
    let mu = args.mu.unwrap_or_else(|| args.preset.map_or(8.0, Preset::mu));
    let mut rof = RofParams::new(mu).with_variant(match args.tv {
        TvArg::Iso => TvVariant::Isotropic,
        TvArg::Aniso => TvVariant::Anisotropic,
    });
    rof.rho = args.rho.unwrap_or(rof.rho);
    rof.eps_u = args.eps_u.unwrap_or(rof.eps_u);
    rof.max_iter = args.max_iter.unwrap_or(rof.max_iter);
    let mut trof = TrofParams::new(phases, rof);
    trof.eps_tau = args.eps_tau.unwrap_or(trof.eps_tau);
    trof.max_outer_iter = args.max_outer.unwrap_or(trof.max_outer_iter);
    trof.min_phase_size = args.min_phase_size;
    trof.validate().map_err(|e| e.to_string())?;
    let default_source = args.preset.map_or(InitSource::U, |p| SegmentConfig::for_preset(p).init_source);
    Ok(SegmentConfig {
        init,
        init_source: match args.init_source {
            Some(InitSourceArg::U) => InitSource::U,
            Some(InitSourceArg::F) => InitSource::F,
            None => default_source,
        },
        seed: args.seed,
        tau: args.tau.clone(),
        ..SegmentConfig::new(trof)
    })
}

fn cmd_segment(args: SegmentArgs) -> ExitCode {
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let (f, preset_truth, input): (GrayImage, Option<PhasePartition>, InputSource) =
        match (&args.input, args.preset) {
            (Some(path), _) => match read_image(path) {
                Ok(f) => {
                    let (width, height) = f.shape();
                    (f, None, InputSource { path: Some(path.display().to_string()), preset: None, width, height })
                }
                Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
            },
            (None, Some(preset)) => {
                let opts = PresetOptions { size: args.size, seed: args.seed, ..PresetOptions::default() };
                let syn = match preset.generate(&opts) {
                    Ok(s) => s,
                    Err(e) => return usage(e),
                };
                let truth = syn
                    .truth_for(config.trof.phases)
                    .map_or_else(|_| syn.truth.partition.clone(), |t| t.partition);
                let (width, height) = syn.image.shape();
                (syn.image, Some(truth), InputSource { path: None, preset: Some(preset.name().into()), width, height })
            }
            (None, None) => return usage("an input image or --preset is required"),
        };
    let truth = match &args.truth {
        Some(p) => match read_labels(p, None) {
            Ok(t) => Some(t),
            Err(e) => return usage(format!("cannot read truth {}: {e}", p.display())),
        },
        None => preset_truth,
    };

    let out = match segment_image(&f, &config) {
        Ok(o) => o,
        Err(e) => return usage(e),
    };
    let r = &out.result;
    let mode = match args.match_mode {
        MatchArg::Means => MatchMode::Means,
        MatchArg::Overlap => MatchMode::Overlap,
        MatchArg::Identity => MatchMode::Identity,
    };
    let metrics = match truth.map(|t| evaluate(&r.partition, &t, f.grid(), mode)).transpose() {
        Ok(m) => m,
        Err(e) => return usage(format!("truth does not match the input: {e}")),
    };
    if let Err(e) = write_outputs(&args, &r.partition, &r.final_means) {
        return usage(e);
    }
    let report = RunReport::new(input, &config, &out, metrics);
    if let Some(p) = &args.report {
        let written = report.to_json().and_then(|s| Ok(std::fs::write(p, s + "\n")?));
        if let Err(e) = written {
            return usage(format!("cannot write {}: {e}", p.display()));
        }
    }

    // A closed stdout (e.g. piped into `head`) is not an error.
    let _ = print_summary(r, report.metrics.as_ref());
    ExitCode::SUCCESS
}

fn print_summary(r: &TrofResult, metrics: Option<&MetricReport>) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "K = {}  converged = {}  outer iterations = {}  ROF iterations = {}",
        r.partition.phases(),
        r.converged,
        r.outer_iterations,
        r.rof_iterations
    )?;
    writeln!(out, "tau = {:?}", r.final_taus.as_slice())?;
    writeln!(out, "m   = {:?}", r.final_means)?;
    if let Some(m) = metrics {
        let dice: Vec<f64> = m.dice.iter().map(|d| (d * 1e4).round() / 1e4).collect();
        writeln!(out, "SA = {:.4}  DICE = {dice:?}", m.sa)?;
    }
    Ok(())
}

fn write_synth(args: &SynthArgs) -> trof::Result<()> {
    let opts = PresetOptions {
        size: args.size,
        seed: args.seed,
        variance: args.variance,
        stripes: args.stripes,
        fraction: args.fraction,
    };
    let syn = args.preset.generate(&opts)?;
    write_image(&args.out, syn.image.grid())?;
    if let Some(p) = &args.truth {
        let truth = syn.truth_for(args.phases.unwrap_or(args.preset.phases()))?;
        write_labels(p, &truth.partition)?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> ExitCode {
    match write_synth(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => usage(e),
    }
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let suites = if args.suites.is_empty() { Suite::ALL.to_vec() } else { args.suites };
    let opts = VerifyOptions {
        seed: args.seed,
        trials: args.trials,
        grid: args.grid,
        preset_size: args.size,
        preset_seeds: args.preset_seeds,
        ..VerifyOptions::default()
    };
    match run_suites(&suites, &opts) {
        Ok(results) => {
            let _ = write!(std::io::stdout().lock(), "{}", format_table(&results));
            if results.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY_FAILED)
            }
        }
        Err(e) => usage(e),
    }
}
