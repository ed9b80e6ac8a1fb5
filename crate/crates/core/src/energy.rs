//! Energy functionals for thresholding, Chan-Vese and piecewise-constant
//! Mumford-Shah segmentation, plus exhaustive oracles on tiny grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ensure_shape, perimeter, BinaryMask, Grid, PhasePartition, ThresholdVector, TvVariant};

/// Largest pixel count accepted by [`brute_force_min_energy`].
pub const BRUTE_FORCE_MAX_PIXELS: usize = 16;

/// Largest number of labelings visited by an exhaustive partial-minimizer check.
pub const EXHAUSTIVE_MAX_LABELINGS: usize = 1 << 20;

/// Phase intensities `m_0 < m_1 < … < m_{K-1}` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Codebook(Vec<f64>);

impl Codebook {
    /// Sorts `values` and checks they are distinct and inside `[0, 1]`.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("codebook must not be empty".into()));
        }
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "codebook value {v} outside [0, 1]"
            )));
        }
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "codebook values must be distinct: {values:?}"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for Codebook {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Codebook> for Vec<f64> {
    fn from(c: Codebook) -> Self {
        c.0
    }
}

/// Per-phase fidelity weights of the PCMS-V model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcmsWeights(Vec<f64>);

impl PcmsWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "weights must be positive: {weights:?}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `E(Σ, τ) = Per(Σ) + mu * sum_{x in Σ} (τ - f(x))`.
pub fn energy_single(
    mask: &BinaryMask,
    tau: f64,
    f: &Grid,
    mu: f64,
    variant: TvVariant,
) -> Result<f64> {
    ensure_shape(f.shape(), mask.shape())?;
    let data: f64 = mask
        .bits()
        .iter()
        .zip(f.data())
        .filter(|(&b, _)| b)
        .map(|(_, &v)| tau - v)
        .sum();
    Ok(perimeter(mask, variant) + mu * data)
}

/// Sum of [`energy_single`] over a nested family `Σ_1 ⊇ … ⊇ Σ_{K-1}`.
pub fn energy_trof(
    masks: &[BinaryMask],
    taus: &ThresholdVector,
    f: &Grid,
    mu: f64,
    variant: TvVariant,
) -> Result<f64> {
    if masks.len() != taus.len() {
        return Err(Error::PhaseCountMismatch(masks.len() + 1, taus.phases()));
    }
    for (i, w) in masks.windows(2).enumerate() {
        if !w[1].is_subset_of(&w[0]) {
            return Err(Error::NotNested(i + 1));
        }
    }
    masks
        .iter()
        .zip(taus.as_slice())
        .map(|(m, &t)| energy_single(m, t, f, mu, variant))
        .sum()
}

/// `Per(Σ) + lambda * (sum_Σ (m1 - f)^2 + sum_{Ω\Σ} (m0 - f)^2)`.
pub fn energy_chan_vese(
    mask: &BinaryMask,
    m0: f64,
    m1: f64,
    f: &Grid,
    lambda: f64,
    variant: TvVariant,
) -> Result<f64> {
    ensure_shape(f.shape(), mask.shape())?;
    let data: f64 = mask
        .bits()
        .iter()
        .zip(f.data())
        .map(|(&b, &v)| {
            let m = if b { m1 } else { m0 };
            (m - v) * (m - v)
        })
        .sum();
    Ok(perimeter(mask, variant) + lambda * data)
}

fn check_partition(partition: &PhasePartition, k: usize, f: &Grid) -> Result<()> {
    ensure_shape(f.shape(), partition.shape())?;
    if partition.phases() != k {
        return Err(Error::PhaseCountMismatch(partition.phases(), k));
    }
    Ok(())
}

/// Squared misfit `sum_{x in Ω_i} (m_i - f(x))^2` for each phase.
fn phase_misfits(partition: &PhasePartition, codebook: &[f64], f: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; codebook.len()];
    for (&l, &v) in partition.labels().iter().zip(f.data()) {
        let d = codebook[l] - v;
        out[l] += d * d;
    }
    out
}

/// `½ sum_i Per(Ω_i) + lambda * sum_i sum_{Ω_i} (m_i - f)^2`.
pub fn energy_pcms(
    partition: &PhasePartition,
    codebook: &Codebook,
    f: &Grid,
    lambda: f64,
    variant: TvVariant,
) -> Result<f64> {
    check_partition(partition, codebook.len(), f)?;
    let per: f64 = (0..partition.phases())
        .map(|i| perimeter(&partition.phase_mask(i), variant))
        .sum();
    let data: f64 = phase_misfits(partition, codebook.values(), f).iter().sum();
    Ok(0.5 * per + lambda * data)
}

/// `sum_{i>=1} Per(Σ_i) + sum_i w_i * sum_{Ω_i} (m_i - f)^2` with
/// `Σ_i = Ω_i ∪ … ∪ Ω_{K-1}`.
pub fn energy_pcms_v(
    partition: &PhasePartition,
    codebook: &Codebook,
    f: &Grid,
    weights: &PcmsWeights,
    variant: TvVariant,
) -> Result<f64> {
    check_partition(partition, codebook.len(), f)?;
    if weights.len() != codebook.len() {
        return Err(Error::PhaseCountMismatch(weights.len(), codebook.len()));
    }
    let per: f64 = (1..partition.phases())
        .map(|i| perimeter(&partition.upper_mask(i), variant))
        .sum();
    let data: f64 = phase_misfits(partition, codebook.values(), f)
        .iter()
        .zip(weights.values())
        .map(|(d, w)| d * w)
        .sum();
    Ok(per + data)
}

/// `lambda = mu / (2 (m1 - m0))`.
pub fn lambda_from_mu(mu: f64, m0: f64, m1: f64) -> Result<f64> {
    if !(m1 > m0) {
        return Err(Error::InvalidParameter(format!(
            "need m1 > m0, got m0 = {m0}, m1 = {m1}"
        )));
    }
    Ok(mu / (2.0 * (m1 - m0)))
}

/// PCMS-V weights: the end phases get `mu / (2 gap)` of their single gap,
/// interior phases the sum over both adjacent gaps.
pub fn pcms_v_weights(means: &[f64], mu: f64) -> Result<PcmsWeights> {
    if means.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two means".into(),
        ));
    }
    let halves: Vec<f64> = means
        .windows(2)
        .map(|w| lambda_from_mu(mu, w[0], w[1]))
        .collect::<Result<_>>()?;
    let k = means.len();
    let weights = (0..k)
        .map(|i| {
            let left = if i > 0 { halves[i - 1] } else { 0.0 };
            let right = if i + 1 < k { halves[i] } else { 0.0 };
            left + right
        })
        .collect();
    PcmsWeights::new(weights)
}

/// Mask whose bit for pixel `p` is bit `n-1-p` of `index`, so increasing
/// indices visit masks in lexicographic order.
fn mask_from_index(index: usize, width: usize, height: usize) -> BinaryMask {
    let n = width * height;
    let bits = (0..n).map(|p| (index >> (n - 1 - p)) & 1 == 1).collect();
    BinaryMask::new(width, height, bits).expect("matching length")
}

/// Exact minimizer of [`energy_single`] over all `2^N` masks of a grid with
/// `N <= 16` pixels. Ties go to the lexicographically smallest mask.
pub fn brute_force_min_energy(
    f: &Grid,
    tau: f64,
    mu: f64,
    variant: TvVariant,
) -> Result<(BinaryMask, f64)> {
    let n = f.len();
    if n > BRUTE_FORCE_MAX_PIXELS {
        return Err(Error::GridTooLarge {
            pixels: n,
            limit: BRUTE_FORCE_MAX_PIXELS,
        });
    }
    let (w, h) = f.shape();
    let (best, energy) = (0..1usize << n)
        .into_par_iter()
        .map(|idx| {
            let e = energy_single(&mask_from_index(idx, w, h), tau, f, mu, variant)
                .expect("shapes match");
            (idx, e)
        })
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| match a.1.total_cmp(&b.1) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => if a.0 <= b.0 { a } else { b },
            },
        );
    Ok((mask_from_index(best, w, h), energy))
}

/// Energy used by [`is_partial_minimizer`].
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionEnergy {
    Pcms { lambda: f64 },
    PcmsV { weights: PcmsWeights },
}

impl PartitionEnergy {
    pub fn evaluate(
        &self,
        partition: &PhasePartition,
        codebook: &Codebook,
        f: &Grid,
        variant: TvVariant,
    ) -> Result<f64> {
        match self {
            Self::Pcms { lambda } => energy_pcms(partition, codebook, f, *lambda, variant),
            Self::PcmsV { weights } => energy_pcms_v(partition, codebook, f, weights, variant),
        }
    }
}

/// Set perturbations tried by [`is_partial_minimizer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveNeighborhood {
    /// Relabel one pixel at a time.
    SinglePixel,
    /// Every labeling of the grid (tiny grids only).
    Exhaustive,
}

/// A relabeling that lowers the energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyViolation {
    /// Changed pixels as `(index, old label, new label)`.
    pub changes: Vec<(usize, usize, usize)>,
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialMinimizerReport {
    /// Largest `|m_i - mean_f(Ω_i)|` over nonempty phases.
    pub max_mean_error: f64,
    pub means_ok: bool,
    pub energy: f64,
    pub violations: Vec<EnergyViolation>,
}

impl PartialMinimizerReport {
    pub fn passed(&self) -> bool {
        self.means_ok && self.violations.is_empty()
    }
}

/// Checks both block conditions of a partial minimizer: the codebook equals
/// the phase means of `f`, and no relabeling from `neighborhood` lowers the
/// energy with the codebook held fixed.
pub fn is_partial_minimizer(
    partition: &PhasePartition,
    codebook: &Codebook,
    f: &Grid,
    energy: &PartitionEnergy,
    variant: TvVariant,
    neighborhood: MoveNeighborhood,
) -> Result<PartialMinimizerReport> {
    let k = codebook.len();
    check_partition(partition, k, f)?;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&l, &v) in partition.labels().iter().zip(f.data()) {
        sums[l] += v;
        counts[l] += 1;
    }
    let max_mean_error = (0..k)
        .filter(|&i| counts[i] > 0)
        .map(|i| (codebook.values()[i] - sums[i] / counts[i] as f64).abs())
        .fold(0.0, f64::max);

    let base = energy.evaluate(partition, codebook, f, variant)?;
    let slack = 1e-12 * base.abs().max(1.0);
    let (w, h) = partition.shape();
    let labels = partition.labels();
    let mut violations = Vec::new();
    match neighborhood {
        MoveNeighborhood::SinglePixel => {
            let mut trial = labels.to_vec();
            for p in 0..labels.len() {
                let old = labels[p];
                for new in (0..k).filter(|&l| l != old) {
                    trial[p] = new;
                    let cand = PhasePartition::new(w, h, trial.clone(), k)?;
                    let e = energy.evaluate(&cand, codebook, f, variant)?;
                    if e < base - slack {
                        violations.push(EnergyViolation {
                            changes: vec![(p, old, new)],
                            decrease: base - e,
                        });
                    }
                }
                trial[p] = old;
            }
        }
        MoveNeighborhood::Exhaustive => {
            let n = labels.len();
            let total = (k as f64).powi(n as i32);
            if total > EXHAUSTIVE_MAX_LABELINGS as f64 {
                return Err(Error::GridTooLarge {
                    pixels: n,
                    limit: EXHAUSTIVE_MAX_LABELINGS,
                });
            }
            let mut trial = vec![0usize; n];
            for _ in 0..total as usize {
                let cand = PhasePartition::new(w, h, trial.clone(), k)?;
                let e = energy.evaluate(&cand, codebook, f, variant)?;
                if e < base - slack {
                    let changes = (0..n)
                        .filter(|&p| trial[p] != labels[p])
                        .map(|p| (p, labels[p], trial[p]))
                        .collect();
                    violations.push(EnergyViolation {
                        changes,
                        decrease: base - e,
                    });
                }
                // odometer increment, last pixel fastest
                for d in trial.iter_mut().rev() {
                    *d += 1;
                    if *d < k {
                        break;
                    }
                    *d = 0;
                }
            }
        }
    }
    Ok(PartialMinimizerReport {
        max_mean_error,
        means_ok: max_mean_error <= 1e-9,
        energy: base,
        violations,
    })
}
