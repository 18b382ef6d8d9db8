//! Acceptance suite. Each criterion is one test; each prints a single
//! `[PASS]`/`[FAIL]` line (visible with `--nocapture`). Criteria run one at a
//! time so the timing checks are not disturbed by sibling tests.

mod common;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentree_core::circa::{align_stage, merge_stage, squeeze_stage};
use sentree_core::encoder::{self, DenseMatrix, LossConfig, MlpWeights, PoolMode, TinWeights};
use sentree_core::entropy::{
    brute_force_k_entropy, delete_delta, merge_delta, one_dim_entropy, structural_entropy,
};
use sentree_core::{circa, from_taxonomy, random_tree, CodingTree, Graph, Shape};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: &str, name: &str, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] {id} {name}: {detail}");
    assert!(ok, "{id} {name} failed: {detail}");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Checks a circa-style output: valid, height `k`, all leaves at depth `k`,
/// every edge spanning adjacent levels.
fn structure_ok(g: &Graph, t: &CodingTree, k: usize) -> Result<(), String> {
    let report = t.validate(g);
    if !report.is_pass() {
        return Err(report.to_string());
    }
    if t.height() != k {
        return Err(format!("height {} != {k}", t.height()));
    }
    for v in 0..g.n() {
        let d = t.depth(t.leaf(v).unwrap());
        if d != k {
            return Err(format!("leaf {v} at depth {d}"));
        }
    }
    for id in t.node_ids() {
        if let Some(p) = t.parent(id) {
            if t.node(p).height() != t.node(id).height() + 1 {
                return Err(format!("edge {p}->{id} skips a level"));
            }
        }
    }
    Ok(())
}

#[test]
fn ac01_entropy_matches_definition() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let g = random_graph(&mut r, 30);
        let steps = r.gen_range(0..40);
        let t = random_edited_tree(&g, steps, &mut r);
        let fast = structural_entropy(&g, &t).unwrap().total;
        worst = worst.max((fast - scratch_entropy(&g, &t)).abs());
    }
    let elapsed = start.elapsed();
    report(
        "AC1",
        "entropy oracle",
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("200 cases, max |diff| = {worst:.3e} (tol 1e-9), {elapsed:.2?} (limit 10 s)"),
    );
}

#[test]
fn ac02_exact_values() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let k3 = Graph::complete(3);
    let k2 = Graph::complete(2);
    let h1_k3 = one_dim_entropy(&k3).unwrap();
    let h1_k2 = one_dim_entropy(&k2).unwrap();
    let (_, trace) = circa(&k3, 2).unwrap();
    let (oracle, _) = brute_force_k_entropy(&k3, 2).unwrap();
    let ok = (h1_k3 - 3f64.log2()).abs() <= 1e-12
        && (h1_k2 - 1.0).abs() <= 1e-12
        && (trace.final_entropy - 1.389_975_0).abs() <= 1e-6
        && (oracle - 1.389_975_0).abs() <= 1e-6
        && (trace.final_entropy - oracle).abs() <= 1e-6;
    report(
        "AC2",
        "exact values",
        ok,
        format!(
            "H1(K3)={h1_k3:.12}, H1(K2)={h1_k2:.12}, circa(K3,2)={:.9}, H2(K3)={oracle:.9}",
            trace.final_entropy
        ),
    );
}

#[test]
fn ac03_delta_closed_forms() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut r = rng(3);
    let (mut merges, mut deletes, mut shifts) = (0, 0, 0);
    let (mut worst_delta, mut worst_shift) = (0.0f64, 0.0f64);
    while merges + deletes < 500 {
        let g = random_graph(&mut r, 30);
        let steps = r.gen_range(0..20);
        let mut t = random_edited_tree(&g, steps, &mut r);
        for _ in 0..10 {
            let Some(e) = random_edit(&t, &mut r) else {
                break;
            };
            let before = scratch_entropy(&g, &t);
            let predicted = match e {
                Edit::Merge(a, b) => Some(merge_delta(&g, &t, a, b).unwrap()),
                Edit::Delete(v) => Some(delete_delta(&g, &t, v).unwrap()),
                Edit::Shift(_) => None,
            };
            let h_before = structural_entropy(&g, &t).unwrap().total;
            apply(&mut t, &g, e);
            let after = scratch_entropy(&g, &t);
            match predicted {
                Some(d) => {
                    worst_delta = worst_delta.max((after - before - d).abs());
                    if matches!(e, Edit::Merge(..)) {
                        merges += 1;
                    } else {
                        deletes += 1;
                    }
                }
                None => {
                    let h_after = structural_entropy(&g, &t).unwrap().total;
                    worst_shift = worst_shift.max((h_after - h_before).abs());
                    shifts += 1;
                }
            }
        }
    }
    report(
        "AC3",
        "delta closed forms",
        worst_delta <= 1e-9 && worst_shift < 1e-12 && merges > 0 && deletes > 0 && shifts > 0,
        format!(
            "{merges} merges + {deletes} deletes, max |delta err| = {worst_delta:.3e} (tol 1e-9); \
             {shifts} shifts, max drift = {worst_shift:.3e} (tol 1e-12)"
        ),
    );
}

#[test]
fn ac04_stage_monotonicity() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut r = rng(4);
    let mut violations = Vec::new();
    for i in 0..100 {
        let g = loop {
            let g = Graph::erdos_renyi(20, 0.3, &mut r);
            if g.edge_count() > 0 {
                break g;
            }
        };
        let (_, trace) = circa(&g, 2).unwrap();
        let h1 = one_dim_entropy(&g).unwrap();
        let summed = trace.initial_entropy
            + trace.stage1_deltas.iter().sum::<f64>()
            + trace.stage2_deltas.iter().sum::<f64>();
        if trace.stage1_deltas.iter().any(|&d| d > 0.0) {
            violations.push(format!("graph {i}: positive stage-1 delta"));
        }
        if trace.stage2_deltas.iter().any(|&d| d < 0.0) {
            violations.push(format!("graph {i}: negative stage-2 delta"));
        }
        if trace.final_entropy > h1 {
            violations.push(format!(
                "graph {i}: final {} > H1 {h1}",
                trace.final_entropy
            ));
        }
        if (summed - trace.final_entropy).abs() > 1e-9 {
            violations.push(format!("graph {i}: deltas do not add up"));
        }
    }
    report(
        "AC4",
        "stage monotonicity",
        violations.is_empty(),
        if violations.is_empty() {
            "100 ER(20, 0.3) graphs, all stage deltas signed correctly, final <= H1".into()
        } else {
            violations.join("; ")
        },
    );
}

#[test]
fn ac05_circa_beats_random_pairing() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let mut r = rng(5);
    let graphs = 100;
    let mut wins = 0;
    let mut margin = 0.0;
    for _ in 0..graphs {
        let g = loop {
            let g = Graph::erdos_renyi(20, 0.3, &mut r);
            if g.edge_count() > 0 {
                break g;
            }
        };
        let (_, trace) = circa(&g, 2).unwrap();
        let mean: f64 = (0..100u64)
            .map(|seed| {
                structural_entropy(&g, &random_tree(&g, 2, seed).unwrap())
                    .unwrap()
                    .total
            })
            .sum::<f64>()
            / 100.0;
        if trace.final_entropy <= mean {
            wins += 1;
        }
        margin += mean - trace.final_entropy;
    }
    let elapsed = start.elapsed();
    let rate = wins as f64 / graphs as f64;
    report(
        "AC5",
        "ablation direction",
        rate >= 0.95 && elapsed < Duration::from_secs(60),
        format!(
            "circa <= mean random in {wins}/{graphs} graphs ({:.0}%, need >= 95%), mean margin {:.4} bits, {elapsed:.2?} (limit 60 s)",
            rate * 100.0,
            margin / graphs as f64
        ),
    );
}

#[test]
fn ac06_structure_guarantees() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut r = rng(6);
    let mut failures = Vec::new();
    let mut checked = 0;
    let taxonomy = from_taxonomy(include_str!("data/mini.taxonomy")).unwrap();
    let mut graphs: Vec<Graph> = (0..50).map(|_| random_graph(&mut r, 60)).collect();
    graphs.push(taxonomy.graph.clone());
    for (i, g) in graphs.iter().enumerate() {
        for k in [2, 3, 4] {
            let (t, _) = circa(g, k).unwrap();
            checked += 1;
            if let Err(e) = structure_ok(g, &t, k) {
                failures.push(format!("graph {i} k={k}: {e}"));
            }
        }
    }
    report(
        "AC6",
        "structure guarantees",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} trees (50 random graphs + taxonomy, K in 2..=4) valid, exact height, aligned")
        } else {
            failures.join("; ")
        },
    );
}

/// All connected labelled graphs on `n` vertices.
fn all_connected_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    (0u32..1 << pairs.len())
        .filter_map(|mask| {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let g = Graph::from_edges(n, &edges).unwrap();
            g.is_connected().then_some(g)
        })
        .collect()
}

fn gap(g: &Graph) -> f64 {
    let (_, trace) = circa(g, 2).unwrap();
    let (opt, _) = brute_force_k_entropy(g, 2).unwrap();
    trace.final_entropy - opt
}

#[test]
fn ac07_optimality_gap() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut r = rng(7);
    let mut gaps = Vec::new();
    for n in 2..=4 {
        gaps.extend(all_connected_graphs(n).iter().map(gap));
    }
    let exhaustive = gaps.len();
    for _ in 0..500 {
        let n = r.gen_range(5..=6);
        let p = r.gen_range(0.3..0.9);
        gaps.push(gap(&connected_random_graph(n, p, &mut r)));
    }
    let named = [
        ("K3", Graph::complete(3)),
        ("K4", Graph::complete(4)),
        ("C4", Graph::cycle(4)),
        ("C5", Graph::cycle(5)),
    ];
    let named_gaps: Vec<(String, f64)> =
        named.iter().map(|(s, g)| (s.to_string(), gap(g))).collect();
    let max = gaps.iter().copied().fold(0.0, f64::max);
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let zero = gaps.iter().filter(|&&x| x.abs() <= 1e-9).count();
    let below_oracle = gaps.iter().any(|&x| x < -1e-9);
    let named_ok = named_gaps.iter().all(|(_, x)| x.abs() <= 1e-9);
    report(
        "AC7",
        "optimality gap",
        named_ok && !below_oracle,
        format!(
            "{} graphs ({exhaustive} exhaustive n<=4, 500 random n in 5..=6): gap mean {mean:.4}, max {max:.4}, \
             zero in {zero}; named gaps {}",
            gaps.len(),
            named_gaps
                .iter()
                .map(|(s, x)| format!("{s}={x:.1e}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    );
}

fn m(rows: &[&[f64]]) -> DenseMatrix {
    DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn ac08_encoder_invariants() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let tol = 1e-9;
    let mut checks: Vec<(&str, bool)> = Vec::new();

    // Duplication / projection.
    let mut w = TinWeights::identity(2, 2, 1);
    let x = encoder::duplicate_project(&m(&[&[1.0, 2.0]]), &w).unwrap();
    checks.push(("dup identity", x == m(&[&[1.0, 2.0], &[1.0, 2.0]])));
    w.w_d = m(&[&[2.0], &[3.0]]);
    w.w_p = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
    let x = encoder::duplicate_project(&m(&[&[1.0, 0.0]]), &w).unwrap();
    checks.push(("dup hand product", x == m(&[&[2.0, 2.0], &[3.0, 3.0]])));

    // Layer update.
    let k2 = Graph::complete(2);
    let t =
        CodingTree::from_shape(&k2, &Shape::Node(vec![Shape::Leaf(0), Shape::Leaf(1)])).unwrap();
    let w = TinWeights::identity(2, 2, 1);
    let x1 = encoder::tin_layer(&t, 1, &m(&[&[1.0, -2.0], &[3.0, 4.0]]), &w).unwrap();
    checks.push(("layer sum+relu", x1 == m(&[&[4.0, 2.0]])));

    // Readout.
    let h = encoder::readout(
        &[m(&[&[1.0, 0.0], &[0.0, 1.0]]), m(&[&[2.0, 2.0]])],
        PoolMode::Sum,
    )
    .unwrap();
    checks.push(("readout sum", h.data() == [1.0, 1.0, 2.0, 2.0]));
    let h = encoder::readout(&[m(&[&[1.0, 5.0], &[3.0, 2.0]])], PoolMode::Max).unwrap();
    checks.push(("readout max", h.data() == [3.0, 5.0]));

    // Classifier.
    let mut w = TinWeights::identity(1, 1, 1);
    w.w_c = m(&[&[2.0], &[0.0]]);
    w.b_c = vec![-1.0];
    let p = encoder::classify(&m(&[&[1.0, 0.0]]), &w).unwrap();
    checks.push((
        "sigmoid(1)",
        (p[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() <= tol,
    ));

    // Losses.
    let cfg = LossConfig::default();
    let bce = encoder::bce_loss(&[0.9, 0.1], &[true, false], &cfg).unwrap();
    checks.push(("bce", (bce + 0.9f64.ln()).abs() <= tol));
    let bce = encoder::bce_loss(&[0.5, 0.5], &[true, true], &cfg).unwrap();
    checks.push(("bce midpoint", (bce - std::f64::consts::LN_2).abs() <= tol));
    let rr = encoder::recursive_reg(
        &m(&[&[1.0, 0.0], &[0.0, 1.0]]),
        &LossConfig::with_parents(vec![None, Some(0)]),
    )
    .unwrap();
    checks.push(("recursive reg", (rr - 1.0).abs() <= tol));
    let total = encoder::total_loss(
        0.5,
        2.0,
        &LossConfig {
            lambda: 0.1,
            ..cfg.clone()
        },
    );
    checks.push(("total loss", (total - 0.7).abs() <= tol));
    checks.push(("default lambda", cfg.lambda == 1e-6));

    // Child-permutation invariance on whole trees, and the shape law.
    let mut r = rng(8);
    let mut perm_ok = true;
    let mut shape_ok = true;
    for k in 1..=4 {
        let g = connected_random_graph(15, 0.25, &mut r);
        let (tree, _) = circa(&g, k).unwrap();
        let dv = 4;
        let mut w = TinWeights::identity(g.n(), dv, k);
        let mut vals = (0..).map(|i: usize| ((i * 7919) % 17) as f64 / 8.0 - 1.0);
        w.w_c = DenseMatrix::new(
            (k + 1) * dv,
            g.n(),
            vals.by_ref().take((k + 1) * dv * g.n()).collect(),
        )
        .unwrap();
        w.mlps = (0..k)
            .map(|_| MlpWeights {
                w1: DenseMatrix::new(dv, dv, vals.by_ref().take(dv * dv).collect()).unwrap(),
                b1: vals.by_ref().take(dv).collect(),
                ..MlpWeights::identity(dv)
            })
            .collect();
        w.b_h = DenseMatrix::new(g.n(), dv, vals.by_ref().take(g.n() * dv).collect()).unwrap();
        let h = DenseMatrix::row_vector(vec![0.5, -1.5, 2.25, 0.125]).unwrap();
        for pool in [PoolMode::Sum, PoolMode::Avg, PoolMode::Max] {
            w.pool_mode = pool;
            let base = encoder::encode(&tree, &h, &w).unwrap();
            shape_ok &= base.tree_vector.cols() == (k + 1) * dv;
            // Same tree described with every child list reversed.
            let permuted = CodingTree::from_shape(&g, &reversed_shape(&tree, tree.root())).unwrap();
            let other = encoder::encode(&permuted, &h, &w).unwrap();
            perm_ok &= base
                .tree_vector
                .data()
                .iter()
                .zip(other.tree_vector.data())
                .all(|(a, b)| a.to_bits() == b.to_bits());
        }
    }
    checks.push(("permutation invariance", perm_ok));
    checks.push(("shape law", shape_ok));

    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(s, _)| *s)
        .collect();
    report(
        "AC8",
        "encoder invariants",
        failed.is_empty(),
        if failed.is_empty() {
            format!(
                "{} checks passed (tol 1e-9, bitwise permutation invariance)",
                checks.len()
            )
        } else {
            format!("failed: {}", failed.join(", "))
        },
    );
}

fn reversed_shape(t: &CodingTree, id: sentree_core::NodeId) -> Shape {
    match t.node(id).leaf_vertex() {
        Some(v) => Shape::Leaf(v),
        None => Shape::Node(
            t.children(id)
                .iter()
                .rev()
                .map(|&c| reversed_shape(t, c))
                .collect(),
        ),
    }
}

#[test]
fn ac09_complexity_smoke() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut r = rng(9);
    let mut rows = Vec::new();
    for exp in 10..=14 {
        let n = 1usize << exp;
        let g = Graph::random_with_edges(n, 5 * n, &mut r);
        let reps = if exp <= 12 { 5 } else { 2 };
        let mut best = Duration::MAX;
        let mut h_max = 0;
        for _ in 0..reps {
            let start = Instant::now();
            let (tree, _) = merge_stage(&g).unwrap();
            best = best.min(start.elapsed());
            h_max = tree.height();
        }
        let bound = g.edge_count() as f64 * (n as f64).log2() * h_max as f64;
        rows.push((n, h_max, best, best.as_secs_f64() / bound));
    }
    // Fit c on the smallest size; every size must stay within 3x of c·|E|·log|V|·h_max.
    let c = rows[0].3;
    let worst = rows.iter().map(|row| row.3 / c).fold(0.0, f64::max);
    report(
        "AC9",
        "complexity smoke test",
        worst <= 3.0,
        format!(
            "{}; worst ratio to fitted bound {worst:.2} (limit 3)",
            rows.iter()
                .map(|(n, h, t, _)| format!("n={n} h_max={h} {:.1}ms", t.as_secs_f64() * 1e3))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

#[test]
fn ac10_ingestion_sanity() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = from_taxonomy(include_str!("data/mini.taxonomy")).unwrap();
    // Hand count: 15 labels under Root, 15 parent-child edges, 3 levels deep.
    let ok = t.graph.n() == 16
        && t.label_count() == 15
        && t.graph.edge_count() == 15
        && t.depth() == 3
        && t.warnings.is_empty();
    let mut detail = format!(
        "mini taxonomy: {} vertices, {} labels, {} edges, depth {}",
        t.graph.n(),
        t.label_count(),
        t.graph.edge_count(),
        t.depth()
    );
    let mut wos_ok = true;
    match std::env::var("SENTREE_WOS_TAXONOMY") {
        Ok(path) => {
            let text = std::fs::read_to_string(&path).expect("readable WOS taxonomy");
            let wos = from_taxonomy(&text).unwrap();
            wos_ok = wos.label_count() == 141 && wos.depth() == 2;
            detail += &format!("; WOS: {} labels, depth {}", wos.label_count(), wos.depth());
        }
        Err(_) => detail += "; WOS check skipped (set SENTREE_WOS_TAXONOMY)",
    }
    report("AC10", "ingestion sanity", ok && wos_ok, detail);
}

#[test]
fn stage_functions_compose_like_circa() {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut r = rng(10);
    let g = connected_random_graph(30, 0.2, &mut r);
    let (mut t, _) = merge_stage(&g).unwrap();
    squeeze_stage(&mut t, &g, 3).unwrap();
    align_stage(&mut t, 3).unwrap();
    let (full, _) = circa(&g, 3).unwrap();
    assert_eq!(t.compacted(), full);
}
