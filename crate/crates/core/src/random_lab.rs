//! Random-game generators, the sparse-leader and security-defense
//! constructions, and Monte-Carlo degeneracy statistics.

use itertools::Itertools;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::BimatrixGame;
use crate::solvers::stackelberg::{sse_multiple_lp, sse_restricted};
use crate::strategy::{MixedStrategy, SUPPORT_EPS};

/// Slack added to induced coverage so the attacker strictly prefers the
/// chosen schedule.
pub const SECURITY_DELTA: f64 = 1e-9;
/// Support-size constant of the sparse construction.
pub const SPARSE_C0: f64 = 200.0;

/// Independent generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `A` and `B` with i.i.d. uniform [0, 1) entries.
pub fn sample_uniform_bimatrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> (Array2<f64>, Array2<f64>) {
    let a = Array2::from_shape_simple_fn((rows, cols), || rng.gen::<f64>());
    let b = Array2::from_shape_simple_fn((rows, cols), || rng.gen::<f64>());
    (a, b)
}

/// Follower's best column against `x`, ties within 1e-12 broken in the
/// leader's favour, and the leader's payoff there.
pub fn follower_response(a: &Array2<f64>, b: &Array2<f64>, x: &[f64]) -> (usize, f64) {
    let xa = ndarray::ArrayView1::from(x).dot(a);
    let xb = ndarray::ArrayView1::from(x).dot(b);
    let top = xb.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..a.ncols() {
        if xb[j] >= top - 1e-12 && xa[j] > best.1 {
            best = (j, xa[j]);
        }
    }
    best
}

/// Best leader payoff from committing to a single row.
pub fn best_pure_sse_value(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let row_b = b.row(i);
            let top = row_b.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            (0..a.ncols())
                .filter(|&j| row_b[j] == top)
                .map(|j| a[[i, j]])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest rows count accepted by the exact k-sparse search.
pub const SPARSE_EXACT_MAX_ROWS: usize = 12;

/// Best SSE leader value over strategies supported on at most `k` rows.
pub fn best_k_sparse_sse_value(game: &BimatrixGame, k: usize) -> Result<f64> {
    let n = game.rows();
    if n > SPARSE_EXACT_MAX_ROWS {
        return Err(Error::SizeCap(format!("exact sparse search supports up to {SPARSE_EXACT_MAX_ROWS} rows")));
    }
    if k < 1 {
        return Err(invalid("k must be >= 1"));
    }
    // Enlarging the allowed rows never hurts, so size exactly min(k, n) suffices.
    let size = k.min(n);
    let mut best = f64::NEG_INFINITY;
    for rows in (0..n).combinations(size) {
        best = best.max(sse_restricted(game, &rows)?.value);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseConstruction {
    pub strategy: MixedStrategy,
    pub anchor: Option<(usize, usize)>,
    pub mixed_rows: Vec<usize>,
    pub eta: f64,
}

/// Anchors on the high-`A` cell with the largest `B`, then mixes in the
/// rows that favour the anchor column and reward the leader most there.
pub fn construct_sparse_leader_strategy(a: &Array2<f64>, b: &Array2<f64>) -> Result<SparseConstruction> {
    let n = a.nrows();
    if n < 2 || a.dim() != b.dim() {
        return Err(invalid("construction needs matching matrices with at least two rows"));
    }
    let ln = (n as f64).ln();
    let delta = 2f64.powi(11) * ln.sqrt() / (n as f64).powf(1.5);
    let in_s = |i: usize, j: usize| a[[i, j]] >= 1.0 - delta;

    let mut anchor: Option<(usize, usize)> = None;
    for ((i, j), &v) in b.indexed_iter() {
        if in_s(i, j) && anchor.map_or(true, |(bi, bj)| v > b[[bi, bj]]) {
            anchor = Some((i, j));
        }
    }
    let Some((i_star, j_star)) = anchor else {
        return Ok(SparseConstruction {
            strategy: MixedStrategy::pure(n, 0),
            anchor: None,
            mixed_rows: Vec::new(),
            eta: 0.0,
        });
    };
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| i != i_star && b[[i, j_star]] >= 0.75)
        .filter(|&i| (0..a.ncols()).all(|j| j == j_star || !in_s(i, j)))
        .collect();
    candidates.sort_by(|&p, &q| a[[q, j_star]].total_cmp(&a[[p, j_star]]).then(p.cmp(&q)));
    let keep = ((SPARSE_C0 * ln).floor() as usize).saturating_sub(1);
    candidates.truncate(keep);
    let eta = (8.0 * (1.0 - b[[i_star, j_star]])).clamp(0.0, 1.0);
    let mut x = vec![0.0; n];
    if candidates.is_empty() {
        x[i_star] = 1.0;
    } else {
        x[i_star] = 1.0 - eta;
        for &i in &candidates {
            x[i] += eta / candidates.len() as f64;
        }
    }
    candidates.sort_unstable();
    Ok(SparseConstruction {
        strategy: MixedStrategy::new(x)?,
        anchor: Some((i_star, j_star)),
        mixed_rows: candidates,
        eta,
    })
}

/// Security game whose schedules partition the targets; covered payoffs
/// are zero for both players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityInstance {
    pub u_d_uncovered: Vec<f64>,
    pub u_a_uncovered: Vec<f64>,
    pub schedules: Vec<Vec<usize>>,
    pub resources: f64,
}

impl SecurityInstance {
    /// Draws `u_d ~ U[-1, 0]` and `u_a ~ U[0, 1]`; schedule `i` takes the next
    /// `partition[i]` targets.
    pub fn sample<R: Rng>(partition: &[usize], resources: f64, rng: &mut R) -> Result<Self> {
        if partition.is_empty() || partition.contains(&0) {
            return Err(invalid("partition needs nonempty schedules"));
        }
        if !(resources > 0.0) {
            return Err(invalid("resources must be > 0"));
        }
        let t: usize = partition.iter().sum();
        let u_d_uncovered = (0..t).map(|_| -rng.gen::<f64>()).collect();
        let u_a_uncovered = (0..t).map(|_| rng.gen::<f64>()).collect();
        let mut next = 0;
        let schedules = partition
            .iter()
            .map(|&s| {
                let v: Vec<usize> = (next..next + s).collect();
                next += s;
                v
            })
            .collect();
        Ok(SecurityInstance { u_d_uncovered, u_a_uncovered, schedules, resources })
    }

    pub fn num_targets(&self) -> usize {
        self.u_a_uncovered.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityDefense {
    /// Coverage probability per schedule.
    pub coverage: Vec<f64>,
    pub attacked: usize,
    pub value: f64,
    pub l_max: usize,
    pub l_star: usize,
    /// Whether `attacked` maximises the attacker's post-coverage payoff.
    pub exact_argmax: bool,
}

/// Orders schedules by their best attacker target, finds how deep the
/// defender can push the attacker, then covers every earlier schedule just
/// enough to make the chosen one the attacker's strict favourite.
pub fn construct_random_security_defense(inst: &SecurityInstance) -> Result<SecurityDefense> {
    let k = inst.schedules.len();
    if k == 0 {
        return Err(invalid("no schedules"));
    }
    let best_target: Vec<usize> = inst
        .schedules
        .iter()
        .map(|s| {
            *s.iter()
                .max_by(|&&p, &&q| inst.u_a_uncovered[p].total_cmp(&inst.u_a_uncovered[q]).then(q.cmp(&p)))
                .expect("schedules are nonempty")
        })
        .collect();
    let v: Vec<f64> = best_target.iter().map(|&t| inst.u_a_uncovered[t]).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&p, &q| v[q].total_cmp(&v[p]).then(p.cmp(&q)));

    let mut l_max = 1;
    for l in 1..=k {
        let vl = v[order[l - 1]];
        let pressure: f64 = order[..l]
            .iter()
            .map(|&i| if v[i] > 0.0 { (v[i] - vl) / v[i] } else { 0.0 })
            .sum();
        if pressure < inst.resources {
            l_max = l;
        }
    }
    let l_star = (1..=l_max)
        .max_by(|&p, &q| {
            let dp = inst.u_d_uncovered[best_target[order[p - 1]]];
            let dq = inst.u_d_uncovered[best_target[order[q - 1]]];
            dp.total_cmp(&dq).then(q.cmp(&p))
        })
        .expect("l_max >= 1");
    let chosen = order[l_star - 1];
    let v_star = v[chosen];
    let mut coverage = vec![0.0; k];
    if v_star > 0.0 {
        for &i in &order[..l_star - 1] {
            coverage[i] = (v[i] - v_star + SECURITY_DELTA) / v[i];
        }
    }
    let attacked = best_target[chosen];

    let mut schedule_of = vec![0; inst.num_targets()];
    for (i, s) in inst.schedules.iter().enumerate() {
        for &t in s {
            schedule_of[t] = i;
        }
    }
    let post = |t: usize| (1.0 - coverage[schedule_of[t]]) * inst.u_a_uncovered[t];
    let top = (0..inst.num_targets()).map(post).fold(f64::NEG_INFINITY, f64::max);
    let exact_argmax = post(attacked) >= top;

    Ok(SecurityDefense {
        coverage,
        attacked,
        value: inst.u_d_uncovered[attacked],
        l_max,
        l_star,
        exact_argmax,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    UniformBimatrix,
    RandomSecurity { resources: f64, partition: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGameModel {
    /// Leader actions for the bimatrix model; ignored by the security model.
    pub n: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub kind: ModelKind,
}

/// Which statistics a degeneracy run computes per sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabSelection {
    pub sse: bool,
    pub sparse_construction: bool,
}

impl Default for LabSelection {
    fn default() -> Self {
        LabSelection { sse: true, sparse_construction: false }
    }
}

/// Per-sample statistics; fields not computed for a model are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: u64,
    pub pure_value: Option<f64>,
    pub sse_value: Option<f64>,
    pub sse_support: Option<usize>,
    pub sparse_value: Option<f64>,
    pub sparse_support: Option<usize>,
    pub defense_value: Option<f64>,
    pub coverage_support: Option<usize>,
    pub exact_argmax: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

impl Summary {
    /// Linear-interpolation quantiles; `None` for an empty input.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Summary {
            count: n,
            mean,
            std: var.sqrt(),
            min: v[0],
            q05: quantile(&v, 0.05),
            q25: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q75: quantile(&v, 0.75),
            q95: quantile(&v, 0.95),
            max: v[n - 1],
        })
    }
}

/// Quantile of sorted data by linear interpolation.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub model: RandomGameModel,
    pub samples: Vec<SampleRecord>,
    pub pure_value: Option<Summary>,
    pub sse_value: Option<Summary>,
    pub sse_support: Option<Summary>,
    pub sparse_value: Option<Summary>,
    pub defense_value: Option<Summary>,
    pub coverage_support: Option<Summary>,
    pub exact_argmax_rate: Option<f64>,
}

/// Largest game for which per-sample SSE statistics are computed.
pub const SSE_MAX_N: usize = 50;

/// Runs `num_samples` independent draws in parallel; the output depends
/// only on the model and seed.
pub fn degeneracy_report(model: &RandomGameModel, num_samples: usize, selection: LabSelection) -> Result<DegeneracyReport> {
    let samples: Vec<SampleRecord> = (0..num_samples as u64)
        .into_par_iter()
        .map(|index| sample_record(model, index, selection))
        .collect::<Result<_>>()?;
    let collect = |f: &dyn Fn(&SampleRecord) -> Option<f64>| -> Option<Summary> {
        Summary::of(&samples.iter().filter_map(f).collect::<Vec<_>>())
    };
    let argmax: Vec<bool> = samples.iter().filter_map(|s| s.exact_argmax).collect();
    Ok(DegeneracyReport {
        model: model.clone(),
        pure_value: collect(&|s| s.pure_value),
        sse_value: collect(&|s| s.sse_value),
        sse_support: collect(&|s| s.sse_support.map(|x| x as f64)),
        sparse_value: collect(&|s| s.sparse_value),
        defense_value: collect(&|s| s.defense_value),
        coverage_support: collect(&|s| s.coverage_support.map(|x| x as f64)),
        exact_argmax_rate: (!argmax.is_empty()).then(|| argmax.iter().filter(|b| **b).count() as f64 / argmax.len() as f64),
        samples,
    })
}

fn sample_record(model: &RandomGameModel, index: u64, selection: LabSelection) -> Result<SampleRecord> {
    let mut rng = sample_rng(model.seed, index);
    let mut rec = SampleRecord {
        index,
        pure_value: None,
        sse_value: None,
        sse_support: None,
        sparse_value: None,
        sparse_support: None,
        defense_value: None,
        coverage_support: None,
        exact_argmax: None,
    };
    match &model.kind {
        ModelKind::UniformBimatrix => {
            if model.n < 1 {
                return Err(invalid("n must be >= 1"));
            }
            let (a, b) = sample_uniform_bimatrix(model.n, model.n, &mut rng);
            rec.pure_value = Some(best_pure_sse_value(&a, &b));
            if selection.sse {
                if model.n > SSE_MAX_N {
                    return Err(Error::SizeCap(format!("SSE statistics support n <= {SSE_MAX_N}")));
                }
                let s = sse_multiple_lp(&BimatrixGame::new(a.clone(), b.clone())?)?;
                rec.sse_value = Some(s.value);
                rec.sse_support = Some(s.support);
            }
            if selection.sparse_construction && model.n >= 2 {
                let c = construct_sparse_leader_strategy(&a, &b)?;
                rec.sparse_value = Some(follower_response(&a, &b, c.strategy.probs()).1);
                rec.sparse_support = Some(c.strategy.support_size());
            }
        }
        ModelKind::RandomSecurity { resources, partition } => {
            let inst = SecurityInstance::sample(partition, *resources, &mut rng)?;
            let d = construct_random_security_defense(&inst)?;
            rec.defense_value = Some(d.value);
            rec.coverage_support = Some(d.coverage.iter().filter(|p| **p > SUPPORT_EPS).count());
            rec.exact_argmax = Some(d.exact_argmax);
        }
    }
    Ok(rec)
}

/// `best_pure_sse_value` on `samples` fresh `n x n` uniform games.
pub fn pure_value_samples(n: usize, samples: usize, seed: u64) -> Vec<f64> {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let (a, b) = sample_uniform_bimatrix(n, n, &mut rng);
            best_pure_sse_value(&a, &b)
        })
        .collect()
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of statistic `d` from `n` samples, with the usual
/// small-sample correction to the Kolmogorov argument.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pure_value_uses_row_maxima() {
        let a = array![[0.3, 0.9], [0.8, 0.1]];
        let b = array![[0.1, 0.2], [0.9, 0.5]];
        assert_eq!(best_pure_sse_value(&a, &b), 0.9);
    }

    #[test]
    fn k_sparse_is_monotone_and_bracketed() {
        for seed in 0..10 {
            let mut rng = sample_rng(seed, 0);
            let (a, b) = sample_uniform_bimatrix(5, 5, &mut rng);
            let g = BimatrixGame::new(a.clone(), b.clone()).unwrap();
            let vals: Vec<f64> = (1..=5).map(|k| best_k_sparse_sse_value(&g, k).unwrap()).collect();
            assert!((vals[0] - best_pure_sse_value(&a, &b)).abs() < 1e-9);
            assert!((vals[4] - sse_multiple_lp(&g).unwrap().value).abs() < 1e-9);
            assert!(vals.windows(2).all(|w| w[0] <= w[1] + 1e-9), "{vals:?}");
        }
        let big = BimatrixGame::new(Array2::zeros((13, 2)), Array2::zeros((13, 2))).unwrap();
        assert!(best_k_sparse_sse_value(&big, 1).is_err());
    }

    #[test]
    fn sparse_construction_falls_back_to_first_row() {
        // n = 1000 gives delta ~ 0.17; every entry below the threshold.
        let a = Array2::from_elem((1000, 2), 0.1);
        let b = Array2::from_elem((1000, 2), 0.5);
        let c = construct_sparse_leader_strategy(&a, &b).unwrap();
        assert_eq!(c.strategy, MixedStrategy::pure(1000, 0));
        assert!(c.anchor.is_none());
    }

    #[test]
    fn sparse_support_is_bounded() {
        let n = 300;
        let mut rng = sample_rng(3, 0);
        let (a, b) = sample_uniform_bimatrix(n, n, &mut rng);
        let c = construct_sparse_leader_strategy(&a, &b).unwrap();
        assert!(c.strategy.support_size() as f64 <= SPARSE_C0 * (n as f64).ln());
    }

    fn two_singletons(u_d: [f64; 2]) -> SecurityInstance {
        SecurityInstance {
            u_d_uncovered: u_d.to_vec(),
            u_a_uncovered: vec![0.8, 0.5],
            schedules: vec![vec![0], vec![1]],
            resources: 1.0,
        }
    }

    #[test]
    fn security_construction_stays_on_top_schedule() {
        let d = construct_random_security_defense(&two_singletons([-0.3, -0.9])).unwrap();
        assert_eq!((d.l_max, d.l_star), (2, 1));
        assert_eq!(d.coverage, vec![0.0, 0.0]);
        assert_eq!(d.value, -0.3);
        assert!(d.exact_argmax);
    }

    #[test]
    fn security_construction_pushes_attacker_down() {
        let d = construct_random_security_defense(&two_singletons([-0.9, -0.3])).unwrap();
        assert_eq!((d.l_max, d.l_star, d.attacked), (2, 2, 1));
        assert!((d.coverage[0] - 0.375).abs() < 1e-8);
        assert_eq!(d.value, -0.3);
        assert!(d.exact_argmax);
    }

    #[test]
    fn ample_resources_reach_every_schedule() {
        let mut rng = sample_rng(11, 0);
        let inst = SecurityInstance::sample(&[2, 3, 1, 4], 10.0, &mut rng).unwrap();
        let d = construct_random_security_defense(&inst).unwrap();
        assert_eq!(d.l_max, 4);
        assert!(d.coverage.iter().all(|p| (0.0..1.0).contains(p)));
        assert!(d.coverage.iter().sum::<f64>() <= inst.resources + 1e-9);
    }

    #[test]
    fn report_is_reproducible() {
        let m = RandomGameModel { n: 6, seed: 42, kind: ModelKind::UniformBimatrix };
        let a = degeneracy_report(&m, 20, LabSelection { sse: true, sparse_construction: true }).unwrap();
        let b = degeneracy_report(&m, 20, LabSelection { sse: true, sparse_construction: true }).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.sse_value.unwrap().mean >= a.pure_value.unwrap().mean - 1e-12);
    }

    #[test]
    fn ks_detects_mismatch() {
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&u, |x| x);
        assert!(ks_p_value(d, 1000) > 0.99);
        let d2 = ks_statistic(&u, |x| x * x);
        assert!(ks_p_value(d2, 1000) < 1e-6);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!((s.min, s.max), (1.0, 4.0));
    }
}
