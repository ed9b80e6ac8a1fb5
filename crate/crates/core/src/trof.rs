//! Thresholded-ROF segmentation.
//!
//! The ROF solution `u` is computed once. Each outer iteration thresholds it
//! at the current `τ`, cleans up degenerate or inconsistent phases, computes
//! the phase means of `f` and moves every threshold to the midpoint of its two
//! neighbouring means. Iteration stops once `|τ(k) - τ(k-1)|_2 <= eps_tau`.
//!
//! Because every mask is a super-level set of the same `u`, the whole loop
//! runs on a sorted copy of `u` with prefix sums of `f` ([`LevelSets`]); an
//! outer iteration costs `O(K log N)` regardless of image size.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use crate::image::ThresholdVector;
use crate::error::{Error, Result};
use crate::image::{
    ensure_shape, labels_from_sorted_thresholds, partition_from_thresholds, GrayImage, Grid,
    PhasePartition,
};
use crate::rof::{solve_rof, RofParams, RofSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrofParams {
    /// Requested phase count `K >= 2`.
    pub phases: usize,
    pub eps_tau: f64,
    pub max_outer_iter: usize,
    /// Phases with at most this many pixels count as empty.
    pub min_phase_size: usize,
    pub rof: RofParams,
}

impl TrofParams {
    pub fn new(phases: usize, rof: RofParams) -> Self {
        Self {
            phases,
            eps_tau: 1e-5,
            max_outer_iter: 100,
            min_phase_size: 0,
            rof,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases < 2 {
            return Err(Error::InvalidParameter(format!(
                "phase count must be >= 2, got {}",
                self.phases
            )));
        }
        if !(self.eps_tau > 0.0 && self.eps_tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_tau must be positive, got {}",
                self.eps_tau
            )));
        }
        if self.max_outer_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_outer_iter must be positive".into(),
            ));
        }
        self.rof.validate()
    }
}

/// One action taken by the cleanup operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CleanupEvent {
    /// A threshold outside `(0, 1)` was discarded.
    OutOfRange { tau: f64 },
    /// Phase `phase` had no pixels; the threshold above it was removed.
    EmptyPhase { phase: usize, removed_tau: f64 },
    /// `τ_index` failed the mean criterion against the previous iterate's
    /// `τ_neighbor` and was replaced by it.
    Replaced {
        index: usize,
        neighbor: usize,
        from: f64,
        to: f64,
    },
    /// Phase `phase` had its mean outside its own threshold interval; the
    /// threshold above it was removed.
    Inconsistent { phase: usize, removed_tau: f64 },
}

/// Diagnostics recorded at one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrofIteration {
    pub k: usize,
    /// Thresholds after cleanup.
    pub tau: Vec<f64>,
    /// Phase means of `f`, `m_0..m_{K-1}`.
    pub m: Vec<f64>,
    /// Sign sequence against the previous iterate; absent when `K` changed.
    pub zeta: Option<Vec<i8>>,
    /// Sign changes of the extended sign sequence.
    pub s_k: Option<usize>,
    /// Phase count `K` at this iteration.
    #[serde(rename = "K")]
    pub phases: usize,
    pub tau_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cleanup: Vec<CleanupEvent>,
}

impl TrofIteration {
    /// True when no threshold moved (the sign sequence is then a convention).
    pub fn all_tied(&self) -> bool {
        self.tau_delta == Some(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrofTrace {
    pub iterations: Vec<TrofIteration>,
}

impl TrofTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// `(k, position)` of every break of `m_0 <= τ_1 <= m_1 <= … <= m_{K-1}`.
    pub fn interleaving_violations(&self, tol: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for it in &self.iterations {
            let mut seq = Vec::with_capacity(it.m.len() + it.tau.len());
            for (i, &m) in it.m.iter().enumerate() {
                seq.push(m);
                if let Some(&t) = it.tau.get(i) {
                    seq.push(t);
                }
            }
            for (pos, w) in seq.windows(2).enumerate() {
                if w[0] > w[1] + tol {
                    out.push((it.k, pos));
                }
            }
        }
        out
    }

    /// Iterations `k+1` with `s_{k+1} > s_k` (consecutive defined entries).
    pub fn sign_change_increases(&self) -> Vec<usize> {
        self.iterations
            .windows(2)
            .filter_map(|w| match (w[0].s_k, w[1].s_k) {
                (Some(a), Some(b)) if b > a => Some(w[1].k),
                _ => None,
            })
            .collect()
    }

    /// Iterations where `ζ_1` flipped without a strict decrease of `s_k`.
    /// Steps where no threshold moved are skipped: their signs are a convention.
    pub fn strict_decrease_violations(&self) -> Vec<usize> {
        self.iterations
            .windows(2)
            .filter_map(|w| {
                let (a, b) = (&w[0], &w[1]);
                if a.all_tied() || b.all_tied() {
                    return None;
                }
                match (&a.zeta, &b.zeta, a.s_k, b.s_k) {
                    (Some(za), Some(zb), Some(sa), Some(sb))
                        if !za.is_empty() && za[0] != zb[0] && sb >= sa =>
                    {
                        Some(b.k)
                    }
                    _ => None,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrofResult {
    pub partition: PhasePartition,
    pub final_taus: ThresholdVector,
    pub final_means: Vec<f64>,
    /// The ROF solution that was thresholded.
    pub u: GrayImage,
    pub rof_iterations: usize,
    pub rof_converged: bool,
    pub trace: TrofTrace,
    /// True when `eps_tau` was met (or a single phase remained).
    pub converged: bool,
    /// Number of threshold updates performed.
    pub outer_iterations: usize,
}

/// Sorted view of `u` with prefix sums of `f` in the same order, answering
/// counts and sums of `f` over `{lo < u <= hi}` by binary search.
#[derive(Debug, Clone)]
pub struct LevelSets {
    sorted_u: Vec<f64>,
    prefix_f: Vec<f64>,
}

impl LevelSets {
    pub fn new(u: &Grid, f: &Grid) -> Result<Self> {
        ensure_shape(f.shape(), u.shape())?;
        let ud = u.data();
        let fd = f.data();
        let mut order: Vec<usize> = (0..ud.len()).collect();
        order.sort_by(|&a, &b| ud[a].total_cmp(&ud[b]).then(a.cmp(&b)));
        let sorted_u = order.iter().map(|&i| ud[i]).collect();
        let mut prefix_f = Vec::with_capacity(ud.len() + 1);
        let mut acc = 0.0;
        prefix_f.push(acc);
        for &i in &order {
            acc += fd[i];
            prefix_f.push(acc);
        }
        Ok(Self { sorted_u, prefix_f })
    }

    pub fn len(&self) -> usize {
        self.sorted_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_u.is_empty()
    }

    /// Number of pixels with `u <= tau`.
    #[inline]
    fn rank(&self, tau: f64) -> usize {
        self.sorted_u.partition_point(|&v| v <= tau)
    }

    fn boundaries(&self, taus: &[f64]) -> Vec<usize> {
        let mut b = Vec::with_capacity(taus.len() + 2);
        b.push(0);
        b.extend(taus.iter().map(|&t| self.rank(t)));
        b.push(self.len());
        b
    }

    fn span_mean(&self, lo: usize, hi: usize) -> f64 {
        if hi <= lo {
            0.0
        } else {
            (self.prefix_f[hi] - self.prefix_f[lo]) / (hi - lo) as f64
        }
    }

    /// Pixel count of each phase `{τ_i < u <= τ_{i+1}}`.
    pub fn phase_counts(&self, taus: &[f64]) -> Vec<usize> {
        self.boundaries(taus)
            .windows(2)
            .map(|w| w[1].saturating_sub(w[0]))
            .collect()
    }

    /// Phase means of `f` (0 for empty phases).
    pub fn phase_means(&self, taus: &[f64]) -> Vec<f64> {
        self.boundaries(taus)
            .windows(2)
            .map(|w| self.span_mean(w[0], w[1]))
            .collect()
    }

    /// Count and mean of `f` over `{lo < u <= hi}`.
    pub fn band(&self, lo: f64, hi: f64) -> (usize, f64) {
        let (a, b) = (self.rank(lo), self.rank(hi));
        (b.saturating_sub(a), self.span_mean(a, b))
    }

    /// `lo <= mean_f({lo < u <= hi}) <= hi`, vacuous for an empty band.
    fn band_consistent(&self, a: f64, b: f64) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (count, mean) = self.band(lo, hi);
        count == 0 || (lo <= mean && mean <= hi)
    }

    /// The cleanup operator: removes empty phases, repairs thresholds that are
    /// inconsistent with their neighbours in the previous iterate, and merges
    /// phases whose mean leaves their threshold interval. The output is
    /// strictly increasing, every phase has more than `min_phase_size`
    /// pixels, and `m_0 <= τ_1 <= m_1 <= … <= m_{K-1}` holds exactly.
    pub fn cleanup(
        &self,
        taus: &[f64],
        prev: Option<&[f64]>,
        min_phase_size: usize,
    ) -> (Vec<f64>, Vec<CleanupEvent>) {
        let mut events = Vec::new();
        let mut t: Vec<f64> = Vec::with_capacity(taus.len());
        for &tau in taus {
            if tau > 0.0 && tau < 1.0 {
                t.push(tau);
            } else {
                events.push(CleanupEvent::OutOfRange { tau });
            }
        }
        t.sort_by(f64::total_cmp);

        self.remove_empty(&mut t, min_phase_size, &mut events);

        // Neighbour repair against the previous iterate: j = i, then i-1, then
        // i+1. One sweep per call; the sets stay super-level sets of u.
        if let Some(p) = prev.filter(|p| p.len() == t.len()) {
            for i in 0..t.len() {
                let candidates = [Some(i), i.checked_sub(1), Some(i + 1)];
                for j in candidates.into_iter().flatten().filter(|&j| j < p.len()) {
                    if !self.band_consistent(t[i], p[j]) {
                        events.push(CleanupEvent::Replaced {
                            index: i + 1,
                            neighbor: j + 1,
                            from: t[i],
                            to: p[j],
                        });
                        t[i] = p[j];
                        break;
                    }
                }
            }
            t.sort_by(f64::total_cmp);
        }

        loop {
            self.remove_empty(&mut t, min_phase_size, &mut events);
            if !self.remove_first_inconsistent(&mut t, &mut events) {
                break;
            }
        }
        (t, events)
    }

    fn remove_empty(&self, t: &mut Vec<f64>, min_size: usize, events: &mut Vec<CleanupEvent>) {
        while !t.is_empty() {
            let counts = self.phase_counts(t);
            let Some(phase) = counts.iter().position(|&c| c <= min_size) else {
                return;
            };
            let idx = phase.min(t.len() - 1);
            let removed_tau = t.remove(idx);
            events.push(CleanupEvent::EmptyPhase { phase, removed_tau });
        }
    }

    fn remove_first_inconsistent(&self, t: &mut Vec<f64>, events: &mut Vec<CleanupEvent>) -> bool {
        if t.is_empty() {
            return false;
        }
        let means = self.phase_means(t);
        let k = means.len();
        for (i, &m) in means.iter().enumerate() {
            let lo = if i == 0 { 0.0 } else { t[i - 1] };
            let hi = if i + 1 == k { 1.0 } else { t[i] };
            if m < lo || m > hi {
                let removed_tau = t.remove(i.min(t.len() - 1));
                events.push(CleanupEvent::Inconsistent {
                    phase: i,
                    removed_tau,
                });
                return true;
            }
        }
        false
    }
}

/// `m_i = mean_f(Σ_i \ Σ_{i+1})` with `Σ_i = {u > τ_i}`, `Σ_0 = Ω`, `Σ_K = ∅`.
/// Empty phases get mean 0.
pub fn phase_means(u: &Grid, f: &Grid, taus: &ThresholdVector) -> Result<Vec<f64>> {
    ensure_shape(f.shape(), u.shape())?;
    let partition = partition_from_thresholds(u, taus);
    let k = partition.phases();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&l, &v) in partition.labels().iter().zip(f.data()) {
        sums[l] += v;
        counts[l] += 1;
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect())
}

/// `τ_i = (m_{i-1} + m_i) / 2`, `i = 1..K-1`. The result may be degenerate
/// (non-increasing) when means coincide; the cleanup step handles that.
pub fn update_thresholds(means: &[f64]) -> Vec<f64> {
    means.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Sign sequence `ζ` of `τ_now - τ_prev` and its number of sign changes.
///
/// Unchanged components copy a sign: `ζ_1` copies the first changed index,
/// later ones copy `ζ_{i-1}`. If nothing changed, `ζ` is all `+1` and `s = 0`.
pub fn sign_sequence(now: &[f64], prev: &[f64]) -> Result<(Vec<i8>, usize)> {
    if now.len() != prev.len() {
        return Err(Error::PhaseCountMismatch(now.len() + 1, prev.len() + 1));
    }
    let raw: Vec<Option<i8>> = now
        .iter()
        .zip(prev)
        .map(|(a, b)| match a.partial_cmp(b) {
            Some(Ordering::Greater) => Some(1),
            Some(Ordering::Less) => Some(-1),
            _ => None,
        })
        .collect();
    let Some(first) = raw.iter().flatten().next().copied() else {
        return Ok((vec![1; now.len()], 0));
    };
    let mut zeta = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        let z = match r {
            Some(z) => *z,
            None if i == 0 => first,
            None => zeta[i - 1],
        };
        zeta.push(z);
    }
    let s = count_sign_changes(&zeta);
    Ok((zeta, s))
}

/// Sign changes in `(ζ_0, ζ_1, …, ζ_{K-1}, ζ_K)` with `ζ_0 = ζ_1` and
/// `ζ_K = ζ_{K-1}`.
pub fn count_sign_changes(zeta: &[i8]) -> usize {
    let Some((&first, &last)) = zeta.first().zip(zeta.last()) else {
        return 0;
    };
    let mut extended = Vec::with_capacity(zeta.len() + 2);
    extended.push(first);
    extended.extend_from_slice(zeta);
    extended.push(last);
    extended.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Solves ROF for `f` and runs the thresholding iteration from `tau0`.
pub fn segment(f: &GrayImage, params: &TrofParams, tau0: &ThresholdVector) -> Result<TrofResult> {
    check_initial(params, tau0)?;
    let rof = solve_rof(f, &params.rof)?;
    segment_with_solution(f, &rof, params, tau0)
}

fn check_initial(params: &TrofParams, tau0: &ThresholdVector) -> Result<()> {
    params.validate()?;
    if tau0.len() + 1 != params.phases {
        return Err(Error::InvalidThresholds(format!(
            "{} phases need {} initial thresholds, got {}",
            params.phases,
            params.phases - 1,
            tau0.len()
        )));
    }
    Ok(())
}

/// Runs the thresholding iteration on an already computed ROF solution, so
/// one solve can serve several phase counts or initializations.
pub fn segment_with_solution(
    f: &GrayImage,
    rof: &RofSolution,
    params: &TrofParams,
    tau0: &ThresholdVector,
) -> Result<TrofResult> {
    check_initial(params, tau0)?;
    let index = LevelSets::new(&rof.u, f)?;
    let mut taus = tau0.as_slice().to_vec();
    let mut prev: Option<Vec<f64>> = None;
    let mut trace = TrofTrace::default();
    let mut converged = false;
    let mut current = Vec::new();
    let mut means = Vec::new();

    for k in 0..params.max_outer_iter {
        let (t, events) = index.cleanup(&taus, prev.as_deref(), params.min_phase_size);
        let m = index.phase_means(&t);
        let (zeta, s_k, tau_delta) = match prev.as_deref() {
            Some(p) if p.len() == t.len() => {
                let (z, s) = sign_sequence(&t, p)?;
                let d = t
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (Some(z), Some(s), Some(d))
            }
            _ => (None, None, None),
        };
        trace.iterations.push(TrofIteration {
            k,
            tau: t.clone(),
            m: m.clone(),
            zeta,
            s_k,
            phases: t.len() + 1,
            tau_delta,
            cleanup: events,
        });
        let done = t.is_empty() || tau_delta.is_some_and(|d| d <= params.eps_tau);
        current = t;
        means = m;
        if done {
            converged = true;
            break;
        }
        taus = update_thresholds(&means);
        prev = Some(current.clone());
    }

    let final_taus = ThresholdVector::new(current)?;
    let labels = labels_from_sorted_thresholds(rof.u.data(), final_taus.as_slice());
    let partition = PhasePartition::new(f.width(), f.height(), labels, final_taus.phases())?;
    let outer_iterations = trace.len().saturating_sub(1);
    Ok(TrofResult {
        partition,
        final_taus,
        final_means: means,
        u: rof.u.clone(),
        rof_iterations: rof.iterations,
        rof_converged: rof.converged,
        trace,
        converged,
        outer_iterations,
    })
}
