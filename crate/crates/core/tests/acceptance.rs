//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! measured quantities and wall time; the process exits non-zero if any
//! criterion fails.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgkit::experiments::{baseline_sse, solve_sfg_sse, sparsity_sweep, Baseline};
use sgkit::instance::{generate_gsg, GeneratedGame};
use sgkit::io::{load_json, load_nfg, save_json, save_nfg, GameDocument};
use sgkit::presets::{lobeke_gsg, lobeke_tracks, Experiment, LOBEKE_TRACK_SEED};
use sgkit::random_lab::{
    construct_random_security_defense, ks_p_value, ks_statistic, pure_value_samples, quantile, SecurityInstance,
};
use sgkit::schedule::{general_schedules, schedule_game_matrix, simple_condition};
use sgkit::solvers::stackelberg::{sse_bruteforce_oracle, sse_multiple_lp};
use sgkit::solvers::zero_sum::{double_oracle_matrix, nash_lp, regret_matching, RmParams, RmVariant, DO_EPSILON};
use sgkit::game::generate_paths;
use sgkit::{BimatrixGame, DirectedGameGraph, DistanceMetric, Node, NodeId};

type Outcome = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn uniform_matrix(r: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |_| r.gen_range(lo..hi))
}

fn c1_mean_law() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, seed) in [(3usize, 11u64), (9, 12), (19, 13)] {
        let v = pure_value_samples(n, 100_000, seed);
        let (mean, sd) = mean_sd(&v);
        let se = sd / (v.len() as f64).sqrt();
        let expect = 1.0 - 1.0 / (n as f64 + 1.0);
        let z = (mean - expect) / se;
        ok &= z.abs() <= 4.0;
        lines.push(format!("n={n} mean={mean:.5} expect={expect:.5} z={z:+.2}"));
    }
    check(ok, lines.join("; "))
}

fn c2_beta_law() -> Outcome {
    let n = 5usize;
    let v = pure_value_samples(n, 10_000, 21);
    let d = ks_statistic(&v, |x| x.clamp(0.0, 1.0).powi(n as i32));
    let p = ks_p_value(d, v.len());
    let mut ok = p >= 0.01;
    let mut tails = Vec::new();
    for c in [1.0f64, 2.0, 3.0] {
        let thr = 1.0 - c / n as f64;
        let frac = v.iter().filter(|&&x| x < thr).count() as f64 / v.len() as f64;
        let bound = (-c).exp();
        let sigma = (bound * (1.0 - bound) / v.len() as f64).sqrt();
        ok &= frac <= bound + 3.0 * sigma;
        tails.push(format!("C={c}: {frac:.4} <= {:.4}", bound + 3.0 * sigma));
    }
    check(ok, format!("KS D={d:.4} p={p:.3}; {}", tails.join(", ")))
}

/// Random composition of `t` into `k` positive parts.
fn partition(r: &mut ChaCha8Rng, t: usize, k: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = rand::seq::index::sample(r, t - 1, k - 1).into_vec();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().map(|c| c + 1).chain(std::iter::once(t)) {
        parts.push(c - prev);
        prev = c;
    }
    parts
}

fn c3_security_construction() -> Outcome {
    let mut r = rng(3);
    let samples = 1000;
    let (mut exact, mut sum1, mut sum4) = (0usize, 0.0, 0.0);
    for _ in 0..samples {
        let k = r.gen_range(1..=8usize);
        let t = r.gen_range(k..=40usize);
        let parts = partition(&mut r, t, k);
        let inst = SecurityInstance::sample(&parts, 1.0, &mut r).map_err(|e| e.to_string())?;
        for (res, sum) in [(1.0, &mut sum1), (4.0, &mut sum4)] {
            let d = construct_random_security_defense(&SecurityInstance { resources: res, ..inst.clone() })
                .map_err(|e| e.to_string())?;
            exact += d.exact_argmax as usize;
            *sum += d.value;
        }
    }
    let (m1, m4) = (sum1 / samples as f64, sum4 / samples as f64);
    check(
        exact == 2 * samples && m4 > m1,
        format!("exact argmax {exact}/{}; mean value R=1 {m1:.4}, R=4 {m4:.4}", 2 * samples),
    )
}

fn c4_zero_sum_agreement() -> Outcome {
    let mut r = rng(4);
    let params = RmParams { iterations: 10_000, runtime_cap: None, sample_interval: 10_000 };
    let (mut e_do, mut e_rm) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let (n, m) = (r.gen_range(1..=20), r.gen_range(1..=20));
        let a = uniform_matrix(&mut r, n, m, -1.0, 1.0);
        let lp = nash_lp(&a).map_err(|e| e.to_string())?.value;
        let dov = double_oracle_matrix(&a, DO_EPSILON).map_err(|e| e.to_string())?.value;
        let rm = regret_matching(&a, RmVariant::RmPlus, &params).map_err(|e| e.to_string())?.value;
        e_do = e_do.max((lp - dov).abs());
        e_rm = e_rm.max((lp - rm).abs());
    }
    check(e_do <= 1e-6 && e_rm <= 1e-2, format!("max |LP-DO| {e_do:.2e}, max |LP-RM+| {e_rm:.2e}"))
}

fn c5_sse_oracle() -> Outcome {
    let mut r = rng(5);
    let mut e_oracle = 0.0f64;
    for _ in 0..100 {
        let (n, m) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let a = uniform_matrix(&mut r, n, m, 0.0, 1.0);
        let b = uniform_matrix(&mut r, n, m, 0.0, 1.0);
        let lp = sse_multiple_lp(&BimatrixGame::new(a.clone(), b.clone()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .value;
        let brute = sse_bruteforce_oracle(&a, &b).map_err(|e| e.to_string())?;
        e_oracle = e_oracle.max((lp - brute).abs());
    }
    let mut e_zero = 0.0f64;
    for _ in 0..100 {
        let (n, m) = (r.gen_range(1..=8), r.gen_range(1..=8));
        let a = uniform_matrix(&mut r, n, m, -1.0, 1.0);
        let sse = sse_multiple_lp(&BimatrixGame::zero_sum(a.clone()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .value;
        let ne = nash_lp(&a).map_err(|e| e.to_string())?.value;
        e_zero = e_zero.max((sse - ne).abs());
    }
    check(
        e_oracle <= 1e-6 && e_zero <= 1e-7,
        format!("max |LP-brute| {e_oracle:.2e}; max |SSE-NE| zero-sum {e_zero:.2e}"),
    )
}

/// 10-target park instance with general schedules.
fn toy_gsg() -> Result<GeneratedGame, String> {
    let tracks = lobeke_tracks(LOBEKE_TRACK_SEED).map_err(|e| e.to_string())?;
    generate_gsg(&tracks, &lobeke_gsg(Experiment::SseGeneral)).map_err(|e| e.to_string())
}

fn c6_degeneracy_contrast() -> Outcome {
    let g = toy_gsg()?;
    let sfg = g.sfg.as_ref().ok_or("toy game has no schedule form")?;
    let real = solve_sfg_sse(sfg).map_err(|e| e.to_string())?;
    let mut supports: Vec<f64> = (0..10)
        .map(|i| baseline_sse(sfg, true, Baseline::Rt, 1, i).map(|o| o.support as f64))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    supports.sort_by(f64::total_cmp);
    let median = quantile(&supports, 0.5);
    check(
        real.support as f64 > median && median <= 2.0,
        format!(
            "{} targets, {} joint actions; real support {} vs RT {:?} (median {median})",
            sfg.targets.len(),
            sfg.joint_actions.len(),
            real.support,
            supports
        ),
    )
}

fn c7_sparsity_shape() -> Outcome {
    let g = toy_gsg()?;
    let m = schedule_game_matrix(g.sfg.as_ref().ok_or("toy game has no schedule form")?, false)
        .map_err(|e| e.to_string())?;
    let s = sparsity_sweep("toy", &m.a, None).map_err(|e| e.to_string())?;
    let monotone = s.points.windows(2).all(|w| w[1].value >= w[0].value - 1e-9);
    let last = s.points.last().ok_or("empty sweep")?;
    let reaches = (last.value - s.nash_value).abs() <= 1e-7;
    let in_range = s.points.iter().all(|p| p.u_norm.is_some_and(|u| (-1e-9..=1.0 + 1e-9).contains(&u)));
    let values: Vec<String> = s.points.iter().map(|p| format!("{:.4}", p.value)).collect();
    check(
        monotone && reaches && in_range,
        format!(
            "{}x{} matrix, Nash support {}, values [{}], Nash {:.4}",
            m.rows(),
            m.cols(),
            s.nash_support,
            values.join(", "),
            s.nash_value
        ),
    )
}

fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64, undirected: bool, self_loops: bool) -> DirectedGameGraph {
    let nodes: Vec<Node> = (0..n as u32).map(|i| Node { id: NodeId(i), coord: None }).collect();
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in 0..n as u32 {
            if (u == v && !self_loops) || (undirected && v < u) {
                continue;
            }
            if r.gen_bool(p) {
                edges.push((NodeId(u), NodeId(v)));
            }
        }
    }
    let g = if undirected {
        DirectedGameGraph::undirected(nodes, edges, DistanceMetric::HopCount)
    } else {
        DirectedGameGraph::new(nodes, edges, DistanceMetric::HopCount)
    };
    g.expect("generated graph is valid")
}

/// Cheapest closed walk from `home` that dwells `delta - 1` extra steps at
/// each target of `set`, by Dijkstra over (node, visited mask).
fn tour_cost(g: &DirectedGameGraph, home: NodeId, set: &[NodeId], delta: usize) -> Option<usize> {
    let n = g.len();
    let full = (1usize << set.len()) - 1;
    let idx = |v: NodeId| g.index_of(v).expect("node exists");
    let mut dist = vec![vec![usize::MAX; full + 1]; n];
    let mut heap = BinaryHeap::new();
    dist[idx(home)][0] = 0;
    heap.push(Reverse((0usize, idx(home), 0usize)));
    let ids: Vec<NodeId> = g.node_ids().collect();
    while let Some(Reverse((d, u, mask))) = heap.pop() {
        if d > dist[u][mask] {
            continue;
        }
        if u == idx(home) && mask == full {
            return Some(d);
        }
        let mut relax = |v: usize, m: usize, c: usize, heap: &mut BinaryHeap<_>| {
            if c < dist[v][m] {
                dist[v][m] = c;
                heap.push(Reverse((c, v, m)));
            }
        };
        for (b, &t) in set.iter().enumerate() {
            if t == ids[u] && mask & (1 << b) == 0 {
                relax(u, mask | (1 << b), d + delta - 1, &mut heap);
            }
        }
        for &w in g.neighbors(ids[u]) {
            relax(idx(w), mask, d + 1, &mut heap);
        }
    }
    None
}

fn c8_schedules() -> Outcome {
    let mut r = rng(8);
    let (mut graphs, mut subsets, mut singles) = (0usize, 0usize, 0usize);
    for case in 0..150 {
        let n = r.gen_range(2..=8usize);
        let undirected = case % 2 == 0;
        let density = r.gen_range(0.2..0.6);
        let g = random_graph(&mut r, n, density, undirected, false);
        let home = NodeId(r.gen_range(0..n as u32));
        let mut nodes: Vec<NodeId> = g.node_ids().collect();
        nodes.shuffle(&mut r);
        let targets: Vec<NodeId> = nodes.into_iter().take(r.gen_range(1..=n.min(6))).collect();
        let horizon = r.gen_range(1..=7usize);
        let delta = r.gen_range(1..=3usize);
        let got: BTreeSet<(BTreeSet<NodeId>, usize)> = general_schedules(&g, home, &targets, horizon, delta, 0.0)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|s| (s.targets, s.movement_steps))
            .collect();
        let mut want = BTreeSet::new();
        for mask in 1usize..(1 << targets.len()) {
            let set: Vec<NodeId> = (0..targets.len()).filter(|b| mask & (1 << b) != 0).map(|b| targets[b]).collect();
            if let Some(c) = tour_cost(&g, home, &set, delta).filter(|&c| c <= horizon) {
                want.insert((set.iter().copied().collect(), c - (delta - 1) * set.len()));
            }
            subsets += 1;
        }
        if got != want {
            return Err(format!("case {case}: general schedules {got:?} != oracle {want:?}"));
        }
        if undirected {
            for &t in &targets {
                let Some(p) = g.hop_distance(home, t) else { continue };
                let feasible = tour_cost(&g, home, &[t], delta).is_some_and(|c| c <= horizon);
                if simple_condition(horizon, p as usize, delta) != feasible {
                    return Err(format!("case {case}: simple condition disagrees at target {t:?}"));
                }
                singles += 1;
            }
        }
        graphs += 1;
    }
    Ok(format!("{graphs} graphs, {subsets} subsets, {singles} singleton checks"))
}

fn c9_formats() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(9);
    for i in 0..50 {
        let (n, m) = (r.gen_range(1..=6), r.gen_range(1..=6));
        let a = uniform_matrix(&mut r, n, m, -1e3, 1e3);
        let b = if i % 2 == 0 { a.mapv(|v| -v) } else { uniform_matrix(&mut r, n, m, -1.0, 1.0) };
        let game = BimatrixGame::new(a, b).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("g{i}.nfg"));
        let title = format!("game \"{i}\"");
        save_nfg(&path, &game, &title).map_err(|e| e.to_string())?;
        let (back, t) = load_nfg(&path).map_err(|e| e.to_string())?;
        if back.a != game.a || back.b != game.b || t != title {
            return Err(format!("nfg round trip differs on game {i}"));
        }
    }
    let g = toy_gsg()?;
    let doc = GameDocument::from_generated(&g, Some("toy".into()), true).map_err(|e| e.to_string())?;
    let path = dir.path().join("toy.json");
    save_json(&path, &doc).map_err(|e| e.to_string())?;
    let back: GameDocument = load_json(&path).map_err(|e| e.to_string())?;
    let same_matrix = back.to_matrix().map_err(|e| e.to_string())? == g.matrix().map_err(|e| e.to_string())?;
    check(back == doc && same_matrix, "50 nfg games and one game document round-trip exactly".into())
}

/// Every step is an edge, or a wait when allowed or at a dead end.
fn naive_paths(
    g: &DirectedGameGraph,
    starts: &BTreeSet<NodeId>,
    ends: &BTreeSet<NodeId>,
    t: usize,
    wait: bool,
    force_return: bool,
) -> BTreeSet<Vec<NodeId>> {
    let ids: Vec<NodeId> = g.node_ids().collect();
    let all: BTreeSet<NodeId> = ids.iter().copied().collect();
    let starts = if starts.is_empty() { &all } else { starts };
    let ends = if ends.is_empty() { &all } else { ends };
    let total = ids.len().pow(t as u32);
    let mut out = BTreeSet::new();
    for code in 0..total {
        let mut c = code;
        let seq: Vec<NodeId> = (0..t)
            .map(|_| {
                let v = ids[c % ids.len()];
                c /= ids.len();
                v
            })
            .collect();
        let steps_ok = seq.windows(2).all(|w| {
            g.has_edge(w[0], w[1]) || (w[0] == w[1] && (wait || g.neighbors(w[0]).is_empty()))
        });
        let end_ok = if force_return { seq[t - 1] == seq[0] } else { ends.contains(&seq[t - 1]) };
        if starts.contains(&seq[0]) && steps_ok && end_ok {
            out.insert(seq);
        }
    }
    out
}

fn c10_paths() -> Outcome {
    let mut r = rng(10);
    let mut checked = 0usize;
    for case in 0..50 {
        let n = r.gen_range(1..=6usize);
        let density = r.gen_range(0.15..0.6);
        let g = random_graph(&mut r, n, density, false, true);
        let ids: Vec<NodeId> = g.node_ids().collect();
        let subset = |r: &mut ChaCha8Rng| -> BTreeSet<NodeId> {
            if r.gen_bool(0.3) {
                BTreeSet::new()
            } else {
                ids.iter().copied().filter(|_| r.gen_bool(0.5)).collect()
            }
        };
        let (starts, ends) = (subset(&mut r), subset(&mut r));
        for t in 1..=5 {
            for (wait, fr) in [(false, false), (true, false), (false, true), (true, true)] {
                let got = generate_paths(&g, &starts, &ends, t, wait, fr).map_err(|e| e.to_string())?;
                if got != naive_paths(&g, &starts, &ends, t, wait, fr) {
                    return Err(format!("case {case}: T={t} wait={wait} force_return={fr} differs"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("50 graphs, {checked} (T, wait, return) settings"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "pure SSE value mean law", budget: Duration::from_secs(60), run: c1_mean_law },
        Criterion { id: 2, name: "pure SSE value Beta(n,1) law", budget: Duration::from_secs(30), run: c2_beta_law },
        Criterion { id: 3, name: "security defense construction", budget: Duration::from_secs(60), run: c3_security_construction },
        Criterion { id: 4, name: "zero-sum solver agreement", budget: Duration::from_secs(300), run: c4_zero_sum_agreement },
        Criterion { id: 5, name: "SSE oracle equivalence", budget: Duration::from_secs(120), run: c5_sse_oracle },
        Criterion { id: 6, name: "degeneracy contrast", budget: Duration::from_secs(300), run: c6_degeneracy_contrast },
        Criterion { id: 7, name: "sparsity sweep shape", budget: Duration::from_secs(300), run: c7_sparsity_shape },
        Criterion { id: 8, name: "schedule enumeration", budget: Duration::from_secs(60), run: c8_schedules },
        Criterion { id: 9, name: "format fidelity", budget: Duration::from_secs(10), run: c9_formats },
        Criterion { id: 10, name: "path enumeration", budget: Duration::from_secs(30), run: c10_paths },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let out = (c.run)();
        let took = start.elapsed();
        let (ok, detail) = match out {
            Ok(d) if took <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        failed += !ok as usize;
        println!(
            "{} criterion {:>2} {}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            took.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
