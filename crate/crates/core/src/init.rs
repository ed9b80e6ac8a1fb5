//! Initial thresholds from scalar intensity clustering.
//!
//! Both clusterers work on the multiset of pixel values (distinct values with
//! their counts), so pixel order never matters, and both start from centers
//! equally spaced across the intensity range, so no randomness is involved.

use serde::{Deserialize, Serialize};

use crate::energy::Codebook;
use crate::error::{Error, Result};
use crate::image::{Grid, ThresholdVector};

/// Offset used to pull midpoint thresholds strictly inside `(0, 1)`.
pub const THRESHOLD_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcmParams {
    pub phases: usize,
    pub iterations: usize,
    pub fuzzifier: f64,
    /// Kept for reproducible reports; the start is deterministic.
    pub seed: u64,
    /// Early stop when no center moves by `tol` or more; 0 runs every iteration.
    pub tol: f64,
}

impl FcmParams {
    pub fn new(phases: usize) -> Self {
        Self {
            phases,
            iterations: 100,
            fuzzifier: 2.0,
            seed: 0,
            tol: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases < 2 {
            return Err(Error::InvalidParameter(format!(
                "phase count must be >= 2, got {}",
                self.phases
            )));
        }
        if !(self.fuzzifier > 1.0 && self.fuzzifier.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fuzzifier must exceed 1, got {}",
                self.fuzzifier
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// How `τ(0)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    #[default]
    Fcm,
    Kmeans,
    Explicit,
}

/// Distinct values in increasing order with their multiplicities.
#[derive(Debug, Clone)]
struct ValueHistogram {
    values: Vec<f64>,
    counts: Vec<f64>,
}

impl ValueHistogram {
    fn new(f: &Grid, phases: usize) -> Result<Self> {
        let mut sorted = f.data().to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for v in sorted {
            match values.last() {
                Some(&last) if last == v => *counts.last_mut().expect("paired") += 1.0,
                _ => {
                    values.push(v);
                    counts.push(1.0);
                }
            }
        }
        if values.len() < phases {
            return Err(Error::TooFewDistinctValues {
                needed: phases,
                found: values.len(),
            });
        }
        Ok(Self { values, counts })
    }

    /// The observed intensities nearest to `(k + ½)/K` of the way across the
    /// intensity range; quantiles of the distinct values if two coincide.
    fn initial_centers(&self, k: usize) -> Vec<f64> {
        let v = &self.values;
        let (lo, hi) = (v[0], v[v.len() - 1]);
        let centers: Vec<f64> = (0..k)
            .map(|i| {
                let t = lo + (i as f64 + 0.5) / k as f64 * (hi - lo);
                let j = v.partition_point(|&x| x < t);
                match (j.checked_sub(1), v.get(j)) {
                    (Some(a), Some(&b)) if t - v[a] <= b - t => v[a],
                    (_, Some(&b)) => b,
                    (Some(a), None) => v[a],
                    (None, None) => unreachable!("nonempty histogram"),
                }
            })
            .collect();
        if centers.windows(2).all(|w| w[0] < w[1]) {
            return centers;
        }
        let u = v.len();
        (0..k)
            .map(|i| v[(((i as f64 + 0.5) / k as f64 * u as f64) as usize).min(u - 1)])
            .collect()
    }
}

fn finish(mut centers: Vec<f64>) -> Result<Codebook> {
    centers.sort_by(f64::total_cmp);
    for c in &mut centers {
        *c = c.clamp(0.0, 1.0);
    }
    Codebook::new(centers)
}

/// Scalar fuzzy C-means centers of the intensities of `f`.
pub fn fcm_centers(f: &Grid, params: &FcmParams) -> Result<Codebook> {
    params.validate()?;
    let k = params.phases;
    let hist = ValueHistogram::new(f, k)?;
    let mut centers = hist.initial_centers(k);
    let exponent = 2.0 / (params.fuzzifier - 1.0);
    let mut memb = vec![0.0; k];
    let mut num = vec![0.0; k];
    let mut den = vec![0.0; k];

    for _ in 0..params.iterations {
        num.fill(0.0);
        den.fill(0.0);
        for (&x, &count) in hist.values.iter().zip(&hist.counts) {
            if let Some(hit) = centers.iter().position(|&c| c == x) {
                memb.fill(0.0);
                memb[hit] = 1.0;
            } else {
                // u_i = d_i^(-p) / sum_j d_j^(-p), p = 2 / (m - 1)
                let mut total = 0.0;
                for (m, &c) in memb.iter_mut().zip(&centers) {
                    let d = (x - c).abs();
                    *m = if exponent == 2.0 { 1.0 / (d * d) } else { d.powf(-exponent) };
                    total += *m;
                }
                memb.iter_mut().for_each(|m| *m /= total);
            }
            for i in 0..k {
                let um = if params.fuzzifier == 2.0 {
                    memb[i] * memb[i]
                } else {
                    memb[i].powf(params.fuzzifier)
                };
                let w = count * um;
                num[i] += w * x;
                den[i] += w;
            }
        }
        let mut shift = 0.0f64;
        for i in 0..k {
            if den[i] > 0.0 {
                let c = num[i] / den[i];
                shift = shift.max((c - centers[i]).abs());
                centers[i] = c;
            }
        }
        if shift < params.tol {
            break;
        }
    }
    finish(centers)
}

/// Lloyd's K-means centers of the intensities of `f`, from the same
/// equally spaced start as [`fcm_centers`]. Empty clusters keep their previous center.
pub fn kmeans_centers(f: &Grid, phases: usize, iterations: usize, seed: u64) -> Result<Codebook> {
    let _ = seed;
    FcmParams::new(phases).validate()?;
    let hist = ValueHistogram::new(f, phases)?;
    let mut centers = hist.initial_centers(phases);
    let mut assign = vec![usize::MAX; hist.values.len()];
    for _ in 0..iterations {
        let mut changed = false;
        for (j, &x) in hist.values.iter().enumerate() {
            let best = nearest(&centers, x);
            if assign[j] != best {
                assign[j] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0; phases];
        let mut counts = vec![0.0; phases];
        for ((&x, &c), &a) in hist.values.iter().zip(&hist.counts).zip(&assign) {
            sums[a] += c * x;
            counts[a] += c;
        }
        for i in 0..phases {
            if counts[i] > 0.0 {
                centers[i] = sums[i] / counts[i];
            }
        }
    }
    finish(centers)
}

/// Index of the closest center; ties go to the lower index.
fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    for i in 1..centers.len() {
        if (x - centers[i]).abs() < (x - centers[best]).abs() {
            best = i;
        }
    }
    best
}

/// Midpoints between consecutive centers, nudged into `(0, 1)` if needed.
pub fn thresholds_from_centers(centers: &Codebook) -> Result<ThresholdVector> {
    let taus = centers
        .values()
        .windows(2)
        .map(|w| (0.5 * (w[0] + w[1])).clamp(THRESHOLD_NUDGE, 1.0 - THRESHOLD_NUDGE))
        .collect();
    ThresholdVector::new(taus)
}
