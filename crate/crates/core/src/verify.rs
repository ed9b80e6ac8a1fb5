//! Property battery: exact oracles and trace invariants.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{brute_force_min_energy, energy_chan_vese, energy_single, lambda_from_mu};
use crate::error::{Error, Result};
use crate::image::{threshold_set, BinaryMask, GrayImage, Grid, TvVariant};
use crate::metrics::{evaluate, MatchMode, MetricReport};
use crate::pipeline::{segment_image, SegmentConfig, SegmentOutput};
use crate::rof::{solve_rof, taut_string_1d, RofParams};
use crate::synth::{Preset, PresetOptions};

pub const INTERLEAVE_TOL: f64 = 1e-9;
pub const CONVERGENCE_TOL: f64 = 1e-5;
pub const MAX_OUTER: usize = 50;
/// Outer iteration count above which convergence is reported as slow.
pub const SLOW_OUTER: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Rof1d,
    LayerCake,
    Linkage,
    Interleave,
    SignMonotone,
    Convergence,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Rof1d,
        Suite::LayerCake,
        Suite::Linkage,
        Suite::Interleave,
        Suite::SignMonotone,
        Suite::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Rof1d => "rof-1d",
            Suite::LayerCake => "layer-cake",
            Suite::Linkage => "linkage",
            Suite::Interleave => "interleave",
            Suite::SignMonotone => "sign-monotone",
            Suite::Convergence => "convergence",
        }
    }

    fn needs_presets(self) -> bool {
        matches!(self, Suite::Interleave | Suite::SignMonotone | Suite::Convergence)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite `{s}`")))
    }
}

/// Battery settings.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Trials for the randomized suites (`None` keeps each suite's default).
    pub trials: Option<usize>,
    /// Grid for the layer-cake enumeration.
    pub grid: (usize, usize),
    /// Side length of the preset images.
    pub preset_size: usize,
    pub preset_seeds: Vec<u64>,
    pub presets: Vec<Preset>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: None,
            grid: (3, 3),
            preset_size: 64,
            preset_seeds: vec![0],
            presets: Preset::ALL.to_vec(),
        }
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub cases: usize,
    pub failures: usize,
    /// Description of the first failing case, including its seed.
    pub counterexample: Option<String>,
    /// Non-fatal observations.
    pub warnings: Vec<String>,
    /// Largest observed error, where the suite measures one.
    pub worst: Option<f64>,
}

impl SuiteResult {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            cases: 0,
            failures: 0,
            counterexample: None,
            warnings: Vec::new(),
            worst: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(describe());
            }
        }
    }

    fn observe(&mut self, value: f64) {
        self.worst = Some(self.worst.map_or(value, |w| w.max(value)));
    }
}

/// A segmented synthetic preset.
#[derive(Debug, Clone)]
pub struct PresetRun {
    pub preset: Preset,
    pub seed: u64,
    pub output: SegmentOutput,
    pub metrics: MetricReport,
}

/// Generates and segments each preset with its benchmark settings.
pub fn run_presets(presets: &[Preset], size: usize, seeds: &[u64]) -> Result<Vec<PresetRun>> {
    let jobs: Vec<(Preset, u64)> = presets
        .iter()
        .flat_map(|&p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    jobs.into_par_iter()
        .map(|(preset, seed)| {
            let syn = preset.generate(&PresetOptions {
                size: Some(size),
                seed,
                ..PresetOptions::default()
            })?;
            let config = SegmentConfig {
                seed,
                ..SegmentConfig::for_preset(preset)
            };
            let output = segment_image(&syn.image, &config)?;
            let truth = syn.truth_for(preset.phases())?;
            let metrics = evaluate(
                &output.result.partition,
                &truth.partition,
                syn.image.grid(),
                MatchMode::Means,
            )?;
            Ok(PresetRun {
                preset,
                seed,
                output,
                metrics,
            })
        })
        .collect()
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// ADMM on a one-row image against the exact taut-string solution.
pub fn check_rof_1d(seed: u64, trials: usize) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::Rof1d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signals: Vec<(u64, Vec<f64>)> = (0..trials)
        .map(|t| {
            let n = rng.random_range(8..=64);
            (t as u64, (0..n).map(|_| rng.random::<f64>()).collect())
        })
        .collect();
    let outcomes: Vec<(u64, f64, f64)> = signals
        .par_iter()
        .flat_map_iter(|(t, f)| [0.5, 2.0, 8.0].map(|mu| (*t, f, mu)))
        .map(|(t, f, mu)| {
            let img = GrayImage::new(f.len(), 1, f.clone())?;
            let params = RofParams {
                eps_u: 1e-12,
                max_iter: 100_000,
                cg_tol: 1e-13,
                ..RofParams::new(mu)
            };
            let sol = solve_rof(&img, &params)?;
            Ok((t, mu, rms(sol.u.data(), &taut_string_1d(f, mu))))
        })
        .collect::<Result<_>>()?;
    for (t, mu, err) in outcomes {
        res.observe(err);
        res.record(err <= 1e-4, || {
            format!("seed {seed} signal {t} mu {mu}: rms {err:.3e}")
        });
    }
    Ok(res)
}

/// Thresholding the anisotropic ROF solution against full mask enumeration;
/// one case per image, covering `τ = 0.1, 0.2, …, 0.9`.
pub fn check_layer_cake(seed: u64, trials: usize, grid: (usize, usize), mu: f64) -> Result<SuiteResult> {
    let (w, h) = grid;
    let mut res = SuiteResult::new(Suite::LayerCake);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images: Vec<Grid> = (0..trials)
        .map(|_| Grid::from_fn(w, h, |_, _| rng.random::<f64>()))
        .collect::<Result<_>>()?;
    let params = RofParams {
        eps_u: 1e-10,
        max_iter: 200_000,
        cg_tol: 1e-13,
        ..RofParams::new(mu).with_variant(TvVariant::Anisotropic)
    };
    let taus: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let gaps: Vec<Vec<(f64, f64)>> = images
        .par_iter()
        .map(|f| -> Result<Vec<(f64, f64)>> {
            let u = solve_rof(&GrayImage::from_grid(f.clone())?, &params)?.u;
            taus.iter()
                .map(|&tau| {
                    let mask: BinaryMask = threshold_set(&u, tau);
                    let e = energy_single(&mask, tau, f, mu, TvVariant::Anisotropic)?;
                    let (_, best) = brute_force_min_energy(f, tau, mu, TvVariant::Anisotropic)?;
                    Ok((tau, e - best))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    for (t, per_tau) in gaps.iter().enumerate() {
        let worst = per_tau.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        res.observe(worst.1);
        res.record(worst.1 <= 1e-3, || {
            format!("seed {seed} image {t} tau {}: energy gap {:.3e}", worst.0, worst.1)
        });
    }
    Ok(res)
}

/// `E_CV(Σ) - E(Σ, (m0 + m1) / 2)` is the same for every mask of a 3x3 grid.
pub fn check_linkage(seed: u64, trials: usize) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::Linkage);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (3, 3);
    for t in 0..trials {
        let f = Grid::from_fn(w, h, |_, _| rng.random::<f64>())?;
        let m0 = rng.random_range(0.0..0.5);
        let m1 = rng.random_range(0.5..1.0);
        let mu = rng.random_range(0.5..16.0);
        let lambda = lambda_from_mu(mu, m0, m1)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for idx in 0..1usize << (w * h) {
            let mask = BinaryMask::from_fn(w, h, |x, y| (idx >> (y * w + x)) & 1 == 1)?;
            let cv = energy_chan_vese(&mask, m0, m1, &f, lambda, TvVariant::Anisotropic)?;
            let e = energy_single(&mask, 0.5 * (m0 + m1), &f, mu, TvVariant::Anisotropic)?;
            lo = lo.min(cv - e);
            hi = hi.max(cv - e);
        }
        let spread = hi - lo;
        res.observe(spread);
        res.record(spread <= 1e-10, || {
            format!("seed {seed} instance {t}: spread {spread:.3e}")
        });
    }
    Ok(res)
}

fn run_label(run: &PresetRun) -> String {
    format!("{} seed {}", run.preset, run.seed)
}

/// Phase means and thresholds interleave at every recorded iteration.
pub fn check_interleave(runs: &[PresetRun]) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::Interleave);
    for run in runs {
        let v = run.output.result.trace.interleaving_violations(INTERLEAVE_TOL);
        res.record(v.is_empty(), || {
            let (k, pos) = v[0];
            format!("{}: iteration {k} position {pos}", run_label(run))
        });
    }
    res
}

/// Sign changes never increase, and drop whenever the first sign flips.
pub fn check_sign_monotone(runs: &[PresetRun]) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::SignMonotone);
    for run in runs {
        let trace = &run.output.result.trace;
        let inc = trace.sign_change_increases();
        let strict = trace.strict_decrease_violations();
        res.record(inc.is_empty() && strict.is_empty(), || {
            if let Some(k) = inc.first() {
                format!("{}: s_k increased at iteration {k}", run_label(run))
            } else {
                format!("{}: first sign flipped without a drop at iteration {}", run_label(run), strict[0])
            }
        });
    }
    res
}

/// Thresholds settle within [`MAX_OUTER`] updates.
pub fn check_convergence(runs: &[PresetRun]) -> SuiteResult {
    let mut res = SuiteResult::new(Suite::Convergence);
    for run in runs {
        let r = &run.output.result;
        let last = r.trace.iterations.last();
        let settled = last.is_some_and(|it| it.tau.is_empty() || it.tau_delta.is_some_and(|d| d <= CONVERGENCE_TOL));
        let ok = r.converged && settled && r.outer_iterations <= MAX_OUTER;
        res.observe(r.outer_iterations as f64);
        if r.outer_iterations > SLOW_OUTER {
            res.warnings.push(format!("{}: {} outer iterations", run_label(run), r.outer_iterations));
        }
        res.record(ok, || {
            format!("{}: converged {} after {} outer iterations", run_label(run), r.converged, r.outer_iterations)
        });
    }
    res
}

/// Runs the requested suites; preset runs are shared between the trace suites.
pub fn run_suites(suites: &[Suite], opts: &VerifyOptions) -> Result<Vec<SuiteResult>> {
    let runs = if suites.iter().any(|s| s.needs_presets()) {
        run_presets(&opts.presets, opts.preset_size, &opts.preset_seeds)?
    } else {
        Vec::new()
    };
    suites
        .iter()
        .map(|&suite| match suite {
            Suite::Rof1d => check_rof_1d(opts.seed, opts.trials.unwrap_or(100)),
            Suite::LayerCake => check_layer_cake(opts.seed, opts.trials.unwrap_or(50), opts.grid, 8.0),
            Suite::Linkage => check_linkage(opts.seed, opts.trials.unwrap_or(20)),
            Suite::Interleave => Ok(check_interleave(&runs)),
            Suite::SignMonotone => Ok(check_sign_monotone(&runs)),
            Suite::Convergence => Ok(check_convergence(&runs)),
        })
        .collect()
}

/// Pass/fail table, one row per suite.
pub fn format_table(results: &[SuiteResult]) -> String {
    let mut out = format!("{:<14} {:>6} {:>8}  {:<6} {}\n", "suite", "cases", "failures", "status", "detail");
    for r in results {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        let detail = match (&r.counterexample, r.worst) {
            (Some(c), _) => c.clone(),
            (None, Some(w)) => format!("worst {w:.3e}"),
            (None, None) => String::new(),
        };
        out.push_str(&format!(
            "{:<14} {:>6} {:>8}  {:<6} {}\n",
            r.suite.name(),
            r.cases,
            r.failures,
            status,
            detail
        ));
        for w in &r.warnings {
            out.push_str(&format!("{:<14} warning: {w}\n", ""));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn layer_cake_small_batch_passes() {
        let r = check_layer_cake(1, 3, (3, 3), 8.0).unwrap();
        assert_eq!(r.cases, 3);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn linkage_and_rof_1d_small_batches_pass() {
        assert!(check_linkage(2, 3).unwrap().passed());
        let r = check_rof_1d(3, 4).unwrap();
        assert_eq!(r.cases, 12);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn record_keeps_first_counterexample() {
        let mut r = SuiteResult::new(Suite::Linkage);
        r.record(true, || unreachable!());
        r.record(false, || "a".into());
        r.record(false, || "b".into());
        assert_eq!((r.cases, r.failures), (3, 2));
        assert_eq!(r.counterexample.as_deref(), Some("a"));
        assert!(format_table(&[r]).contains("FAIL"));
    }

    #[test]
    fn trace_suites_on_small_presets() {
        let runs = run_presets(&[Preset::Example3, Preset::Example7], 32, &[0]).unwrap();
        for r in [check_interleave(&runs), check_sign_monotone(&runs), check_convergence(&runs)] {
            assert_eq!(r.cases, 2);
            assert!(r.passed(), "{r:?}");
        }
    }
}
