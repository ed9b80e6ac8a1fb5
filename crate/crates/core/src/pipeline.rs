//! End-to-end segmentation: ROF, initial thresholds, thresholding iteration.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, Grid, ThresholdVector};
use crate::init::{fcm_centers, kmeans_centers, thresholds_from_centers, FcmParams, InitMethod};
use crate::rof::{solve_rof, RofParams, RofSolution};
use crate::synth::Preset;
use crate::trof::{segment_with_solution, TrofParams, TrofResult};

/// Image the clustering initializer runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitSource {
    /// The ROF solution `u`.
    #[default]
    U,
    /// The input image `f`.
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub trof: TrofParams,
    pub init: InitMethod,
    pub init_source: InitSource,
    /// Clustering iterations (FCM or k-means).
    pub init_iterations: usize,
    pub fuzzifier: f64,
    pub seed: u64,
    /// Initial thresholds for [`InitMethod::Explicit`].
    pub tau: Option<Vec<f64>>,
}

impl SegmentConfig {
    pub fn new(trof: TrofParams) -> Self {
        let fcm = FcmParams::new(trof.phases);
        Self {
            trof,
            init: InitMethod::Fcm,
            init_source: InitSource::U,
            init_iterations: fcm.iterations,
            fuzzifier: fcm.fuzzifier,
            seed: 0,
            tau: None,
        }
    }

    /// Benchmark settings for a synthetic preset. The stripe image is
    /// clustered on `f`: on `u` its nearly uniform staircase starts the
    /// iteration at a grouping offset by one stripe.
    pub fn for_preset(preset: Preset) -> Self {
        let init_source = match preset {
            Preset::Example5 => InitSource::F,
            _ => InitSource::U,
        };
        Self {
            init_source,
            ..Self::new(TrofParams::new(preset.phases(), RofParams::new(preset.mu())))
        }
    }

    pub fn explicit(trof: TrofParams, tau: Vec<f64>) -> Self {
        Self {
            init: InitMethod::Explicit,
            tau: Some(tau),
            ..Self::new(trof)
        }
    }
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub rof: f64,
    pub init: f64,
    pub trof: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentOutput {
    pub result: TrofResult,
    pub tau0: ThresholdVector,
    pub timings: Timings,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Initial thresholds for `config`, computed from `f` or `u`.
pub fn initial_thresholds(f: &Grid, u: &Grid, config: &SegmentConfig) -> Result<ThresholdVector> {
    let k = config.trof.phases;
    let source = match config.init_source {
        InitSource::U => u,
        InitSource::F => f,
    };
    match config.init {
        InitMethod::Explicit => {
            let tau = config.tau.clone().ok_or_else(|| {
                Error::InvalidThresholds("explicit initialization needs thresholds".into())
            })?;
            ThresholdVector::new(tau)
        }
        InitMethod::Fcm => {
            let params = FcmParams {
                iterations: config.init_iterations,
                fuzzifier: config.fuzzifier,
                seed: config.seed,
                ..FcmParams::new(k)
            };
            thresholds_from_centers(&fcm_centers(source, &params)?)
        }
        InitMethod::Kmeans => thresholds_from_centers(&kmeans_centers(
            source,
            k,
            config.init_iterations,
            config.seed,
        )?),
    }
}

/// Runs the pipeline on a precomputed ROF solution.
pub fn segment_image_with_solution(
    f: &GrayImage,
    rof: &RofSolution,
    config: &SegmentConfig,
) -> Result<SegmentOutput> {
    config.trof.validate()?;
    let start = Instant::now();
    let tau0 = initial_thresholds(f, &rof.u, config)?;
    let init = millis(start);
    let start = Instant::now();
    let result = segment_with_solution(f, rof, &config.trof, &tau0)?;
    let trof = millis(start);
    Ok(SegmentOutput {
        result,
        tau0,
        timings: Timings {
            rof: 0.0,
            init,
            trof,
            total: init + trof,
        },
    })
}

/// Solves ROF, initializes and iterates.
pub fn segment_image(f: &GrayImage, config: &SegmentConfig) -> Result<SegmentOutput> {
    config.trof.validate()?;
    if let (InitMethod::Explicit, Some(tau)) = (config.init, &config.tau) {
        if tau.len() + 1 != config.trof.phases {
            return Err(Error::InvalidThresholds(format!(
                "{} phases need {} initial thresholds, got {}",
                config.trof.phases,
                config.trof.phases - 1,
                tau.len()
            )));
        }
    }
    let start = Instant::now();
    let rof = solve_rof(f, &config.trof.rof)?;
    let rof_ms = millis(start);
    let mut out = segment_image_with_solution(f, &rof, config)?;
    out.timings.rof = rof_ms;
    out.timings.total += rof_ms;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level() -> GrayImage {
        GrayImage::from_fn(16, 16, |x, y| if x >= 5 && x < 12 && y >= 4 && y < 13 { 0.8 } else { 0.2 })
            .unwrap()
    }

    #[test]
    fn explicit_two_phase_runs_without_clustering() {
        let f = two_level();
        let cfg = SegmentConfig::explicit(TrofParams::new(2, RofParams::new(50.0)), vec![0.5]);
        let out = segment_image(&f, &cfg).unwrap();
        assert_eq!(out.tau0.as_slice(), &[0.5]);
        assert!(out.result.converged);
        let counts = out.result.partition.counts();
        assert_eq!(counts, vec![256 - 63, 63]);
    }

    #[test]
    fn fcm_on_u_and_f_agree_on_clean_input() {
        let f = two_level();
        let mut cfg = SegmentConfig::new(TrofParams::new(2, RofParams::new(50.0)));
        let a = segment_image(&f, &cfg).unwrap();
        cfg.init_source = InitSource::F;
        let b = segment_image(&f, &cfg).unwrap();
        assert_eq!(a.result.partition, b.result.partition);
        cfg.init = InitMethod::Kmeans;
        let c = segment_image(&f, &cfg).unwrap();
        assert_eq!(a.result.partition, c.result.partition);
    }

    #[test]
    fn explicit_threshold_count_is_checked() {
        let f = two_level();
        let cfg = SegmentConfig::explicit(TrofParams::new(3, RofParams::new(5.0)), vec![0.5]);
        assert!(matches!(segment_image(&f, &cfg), Err(Error::InvalidThresholds(_))));
        let mut cfg = SegmentConfig::new(TrofParams::new(2, RofParams::new(5.0)));
        cfg.init = InitMethod::Explicit;
        assert!(segment_image(&f, &cfg).is_err());
    }
}
