//! Segmentation accuracy, per-phase DICE and label matching.

use pathfinding::prelude::{kuhn_munkres, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ensure_shape, Grid, PhasePartition};

/// Scores of a predicted partition against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "SA")]
    pub sa: f64,
    #[serde(rename = "DICE")]
    pub dice: Vec<f64>,
    /// `matched_permutation[p]` is the truth label assigned to predicted label `p`.
    pub matched_permutation: Vec<usize>,
}

/// How predicted labels are paired with truth labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Pair phases by rank of their mean intensity in `f`.
    #[default]
    Means,
    /// Assignment maximizing the total pixel overlap.
    Overlap,
    /// Labels are compared as they are.
    Identity,
}

fn check_pair(pred: &PhasePartition, truth: &PhasePartition) -> Result<()> {
    ensure_shape(truth.shape(), pred.shape())
}

/// Fraction of pixels whose labels agree.
pub fn segmentation_accuracy(pred: &PhasePartition, truth: &PhasePartition) -> Result<f64> {
    check_pair(pred, truth)?;
    let same = pred
        .labels()
        .iter()
        .zip(truth.labels())
        .filter(|(a, b)| a == b)
        .count();
    Ok(same as f64 / pred.labels().len() as f64)
}

/// `2 |A ∩ B| / (|A| + |B|)` per phase; 1 when both are empty.
pub fn dice_scores(pred: &PhasePartition, truth: &PhasePartition) -> Result<Vec<f64>> {
    check_pair(pred, truth)?;
    if pred.phases() != truth.phases() {
        return Err(Error::PhaseCountMismatch(pred.phases(), truth.phases()));
    }
    let k = pred.phases();
    let mut inter = vec![0usize; k];
    let mut a = vec![0usize; k];
    let mut b = vec![0usize; k];
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        a[p] += 1;
        b[t] += 1;
        if p == t {
            inter[p] += 1;
        }
    }
    Ok((0..k)
        .map(|i| {
            if a[i] + b[i] == 0 {
                1.0
            } else {
                2.0 * inter[i] as f64 / (a[i] + b[i]) as f64
            }
        })
        .collect())
}

/// `overlap[p][t]` = pixels labeled `p` in `pred` and `t` in `truth`.
fn overlap_table(pred: &PhasePartition, truth: &PhasePartition) -> Vec<Vec<i64>> {
    let mut table = vec![vec![0i64; truth.phases()]; pred.phases()];
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        table[p][t] += 1;
    }
    table
}

/// Permutation of predicted labels maximizing total overlap with `truth`.
/// Both partitions must have the same phase count.
pub fn match_labels(pred: &PhasePartition, truth: &PhasePartition) -> Result<Vec<usize>> {
    check_pair(pred, truth)?;
    if pred.phases() != truth.phases() {
        return Err(Error::PhaseCountMismatch(pred.phases(), truth.phases()));
    }
    let k = pred.phases();
    let table = overlap_table(pred, truth);
    let weights = Matrix::from_vec(k, k, table.into_iter().flatten().collect())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let (_, assignment) = kuhn_munkres(&weights);
    Ok(assignment)
}

/// Pairs phases so the total distance between matched phase means of `f` is
/// minimal. Empty phases match whatever is left over.
pub fn match_by_means(pred: &PhasePartition, truth: &PhasePartition, f: &Grid) -> Result<Vec<usize>> {
    check_pair(pred, truth)?;
    ensure_shape(truth.shape(), f.shape())?;
    if pred.phases() != truth.phases() {
        return Err(Error::PhaseCountMismatch(pred.phases(), truth.phases()));
    }
    let means = |part: &PhasePartition| -> Vec<Option<f64>> {
        let k = part.phases();
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&l, &v) in part.labels().iter().zip(f.data()) {
            sums[l] += v;
            counts[l] += 1;
        }
        (0..k)
            .map(|i| (counts[i] > 0).then(|| sums[i] / counts[i] as f64))
            .collect()
    };
    let (mp, mt) = (means(pred), means(truth));
    let k = pred.phases();
    let mut weights = Vec::with_capacity(k * k);
    for p in &mp {
        for t in &mt {
            weights.push(match (p, t) {
                (Some(a), Some(b)) => -((a - b).abs() * 1e12).round() as i64,
                _ => -(2e12 as i64),
            });
        }
    }
    let weights =
        Matrix::from_vec(k, k, weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(kuhn_munkres(&weights).1)
}

/// Matches labels, then scores. Phase counts are padded to the larger of the
/// two so a result with merged phases is still scored against every truth phase.
pub fn evaluate(
    pred: &PhasePartition,
    truth: &PhasePartition,
    f: &Grid,
    mode: MatchMode,
) -> Result<MetricReport> {
    let k = pred.phases().max(truth.phases());
    let pred = pred.with_phases(k)?;
    let truth = truth.with_phases(k)?;
    let map = match mode {
        MatchMode::Means => match_by_means(&pred, &truth, f)?,
        MatchMode::Overlap => match_labels(&pred, &truth)?,
        MatchMode::Identity => (0..k).collect(),
    };
    let relabeled = pred.relabel(&map, k)?;
    Ok(MetricReport {
        sa: segmentation_accuracy(&relabeled, &truth)?,
        dice: dice_scores(&relabeled, &truth)?,
        matched_permutation: map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn part(labels: Vec<usize>, k: usize) -> PhasePartition {
        PhasePartition::new(labels.len(), 1, labels, k).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        let truth = part(vec![0, 0, 1, 1, 1, 0], 2);
        assert_eq!(segmentation_accuracy(&truth, &truth).unwrap(), 1.0);
        let flipped = part(truth.labels().iter().map(|l| 1 - l).collect(), 2);
        assert_eq!(segmentation_accuracy(&flipped, &truth).unwrap(), 0.0);
        let map = match_labels(&flipped, &truth).unwrap();
        assert_eq!(map, vec![1, 0]);
        assert_eq!(segmentation_accuracy(&flipped.relabel(&map, 2).unwrap(), &truth).unwrap(), 1.0);
        let half = part(vec![1, 1, 0, 1, 1, 0], 2);
        assert_eq!(segmentation_accuracy(&half, &truth).unwrap(), 0.5);
        let other = PhasePartition::new(3, 2, vec![0; 6], 2).unwrap();
        assert!(segmentation_accuracy(&other, &truth).is_err());
    }

    #[test]
    fn dice_examples() {
        let truth = part(vec![0, 0, 1, 1], 2);
        assert_eq!(dice_scores(&truth, &truth).unwrap(), vec![1.0, 1.0]);
        let a = part(vec![1, 1, 0, 0], 2);
        assert_eq!(dice_scores(&a, &truth).unwrap(), vec![0.0, 0.0]);
        // |A| = |B| = 4, overlap 2
        let t = part(vec![1, 1, 1, 1, 0, 0, 0, 0], 2);
        let p = part(vec![1, 1, 0, 0, 1, 1, 0, 0], 2);
        assert_eq!(dice_scores(&p, &t).unwrap()[1], 0.5);
        // phase 2 empty in both
        let e = part(vec![0, 1, 1], 3);
        assert_eq!(dice_scores(&e, &e).unwrap()[2], 1.0);
        assert!(dice_scores(&part(vec![0, 1], 2), &part(vec![0, 1], 3)).is_err());
    }

    #[test]
    fn dice_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = part((0..50).map(|_| rng.random_range(0..3)).collect(), 3);
        let b = part((0..50).map(|_| rng.random_range(0..3)).collect(), 3);
        assert_eq!(dice_scores(&a, &b).unwrap(), dice_scores(&b, &a).unwrap());
    }

    #[test]
    fn match_examples() {
        let t = part(vec![0, 1, 2, 0, 1, 2, 2], 3);
        assert_eq!(match_labels(&t, &t).unwrap(), vec![0, 1, 2]);
        // pred label p = truth label (t + 1) mod 3
        let cyc = part(t.labels().iter().map(|l| (l + 1) % 3).collect(), 3);
        assert_eq!(match_labels(&cyc, &t).unwrap(), vec![2, 0, 1]);
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn overlap_matching_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let a = part((0..60).map(|_| rng.random_range(0..4)).collect(), 4);
            let b = part((0..60).map(|_| rng.random_range(0..4)).collect(), 4);
            let score = |m: &[usize]| {
                a.labels().iter().zip(b.labels()).filter(|(p, t)| m[**p] == **t).count()
            };
            let perms = permutations(4);
            assert_eq!(perms.len(), 24);
            let best = perms.iter().map(|m| score(m)).max().unwrap();
            assert_eq!(score(&match_labels(&a, &b).unwrap()), best);
        }
    }

    #[test]
    fn means_matching_and_evaluate() {
        let f = Grid::new(6, 1, vec![0.9, 0.9, 0.1, 0.1, 0.5, 0.5]).unwrap();
        let truth = part(vec![2, 2, 0, 0, 1, 1], 3);
        let pred = part(vec![0, 0, 1, 1, 2, 2], 3);
        let r = evaluate(&pred, &truth, &f, MatchMode::Means).unwrap();
        assert_eq!(r.sa, 1.0);
        assert_eq!(r.dice, vec![1.0; 3]);
        assert_eq!(r.matched_permutation, vec![2, 0, 1]);
        let r = evaluate(&pred, &truth, &f, MatchMode::Identity).unwrap();
        assert_eq!(r.sa, 0.0);
        // merged prediction is padded to three phases
        let merged = part(vec![1, 1, 0, 0, 0, 0], 2);
        let r = evaluate(&merged, &truth, &f, MatchMode::Means).unwrap();
        assert_eq!(r.dice.len(), 3);
        assert!((r.sa - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_invariant_under_consistent_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = part((0..40).map(|_| rng.random_range(0..3)).collect(), 3);
        let b = part((0..40).map(|_| rng.random_range(0..3)).collect(), 3);
        let m = [2, 0, 1];
        let (ra, rb) = (a.relabel(&m, 3).unwrap(), b.relabel(&m, 3).unwrap());
        assert_eq!(segmentation_accuracy(&a, &b).unwrap(), segmentation_accuracy(&ra, &rb).unwrap());
        let mut d1 = dice_scores(&a, &b).unwrap();
        let mut d2 = dice_scores(&ra, &rb).unwrap();
        d1.sort_by(f64::total_cmp);
        d2.sort_by(f64::total_cmp);
        assert_eq!(d1, d2);
    }
}
