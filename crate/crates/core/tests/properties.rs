mod common;

use common::{enumerate_expected_cost, path_costs_from};
use prokrast::agent::{choose_edge, exact_ratio, ChoicePolicy};
use prokrast::bias::BiasDistribution;
use prokrast::graph::{layerize, random, GenericDag, NodeId, RawEdge, TaskGraph};
use prokrast::pricing::{best_response, randomized_menu_decomposition, Menu};
use prokrast::worstcase::{synthesize, theorem3_bound};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn graph_from(seed: u64, n: usize, width: usize) -> TaskGraph {
    random::layered(&mut ChaCha8Rng::seed_from_u64(seed), n, width, 3.0)
}

fn finite_from(seed: u64, k: usize) -> BiasDistribution {
    common::random_finite(&mut ChaCha8Rng::seed_from_u64(seed), k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distances_match_path_enumeration(seed in any::<u64>(), n in 1usize..=5, width in 1usize..=4) {
        let g = graph_from(seed, n, width);
        for v in 0..g.node_count() {
            let best = path_costs_from(&g, NodeId(v)).into_iter().fold(f64::INFINITY, f64::min);
            prop_assert!((g.distance(NodeId(v)) - best).abs() <= 1e-12);
        }
    }

    #[test]
    fn monotone_implies_bounded(seed in any::<u64>(), n in 1usize..=8, width in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in [random::monotone(&mut rng, n, width), random::bounded(&mut rng, n, width), random::layered(&mut rng, n, width, 2.0)] {
            prop_assert!(!g.is_monotone_distance() || g.is_bounded_distance());
        }
    }

    #[test]
    fn layerize_keeps_path_costs(seed in any::<u64>(), k in 2usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<String> = (0..k).map(|i| format!("n{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                if j == i + 1 || rng.random_bool(0.4) {
                    let w = (rng.random_range(0..8) as f64) * 0.25;
                    edges.push(RawEdge { from: nodes[i].clone(), to: nodes[j].clone(), w });
                }
            }
        }
        // costs of every start-to-target path in the DAG
        fn dag_costs(k: usize, edges: &[RawEdge], from: usize) -> Vec<f64> {
            if from == k - 1 {
                return vec![0.0];
            }
            let mut out = Vec::new();
            for e in edges.iter().filter(|e| e.from == format!("n{from}")) {
                let to: usize = e.to[1..].parse().unwrap();
                out.extend(dag_costs(k, edges, to).into_iter().map(|c| c + e.w));
            }
            out
        }
        let mut want = dag_costs(k, &edges, 0);
        let dag = GenericDag { nodes: nodes.clone(), edges, start: "n0".into(), target: nodes[k - 1].clone() };
        let g = layerize(&dag).unwrap();
        let mut got = path_costs_from(&g, g.start());
        want.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        prop_assert_eq!(want, got);
    }

    #[test]
    fn exact_ratio_matches_enumeration(seed in any::<u64>(), dseed in any::<u64>(), n in 1usize..=5, k in 1usize..=3) {
        let g = graph_from(seed, n, 3);
        prop_assume!(g.d_start() > 0.0);
        let d = finite_from(dseed, k);
        let exact = exact_ratio(&g, &d).unwrap();
        let oracle = enumerate_expected_cost(&g, &d.atoms()) / g.d_start();
        prop_assert!((exact.ratio - oracle).abs() <= 1e-12);
        prop_assert!(exact.ratio >= 1.0 - 1e-9);
    }

    #[test]
    fn worst_case_sandwich_and_growth(dseed in any::<u64>(), n in 1usize..=24) {
        let d = finite_from(dseed, 4);
        let (a, _) = synthesize(&d, n).unwrap();
        let (b, _) = synthesize(&d, n + 1).unwrap();
        prop_assert!(a.ratio() <= theorem3_bound(d.z_value().z, n) * (1.0 + 1e-9));
        prop_assert!(b.ratio() >= a.ratio());
        prop_assert!(a.distances.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn decomposition_reproduces_allocation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..=4);
        let mut xs: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let mut ps: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        ps.sort_by(f64::total_cmp);
        let menu = Menu::new(&xs.iter().copied().zip(ps.iter().copied()).collect::<Vec<_>>()).unwrap();
        let dec = randomized_menu_decomposition(&menu).unwrap();
        prop_assume!(!dec.exceeds_one);
        let rule = menu.allocation_rule();
        for (j, &(start, o)) in rule.iter().enumerate() {
            let end = rule.get(j + 1).map_or(start + 10.0, |r| r.0);
            let v = 0.5 * (start + end);
            let (ex, ep) = dec.expected_at(v);
            prop_assert!((ex - o.x).abs() <= 1e-9, "v={} x={} got {}", v, o.x, ex);
            prop_assert!(ep >= o.p - 1e-9);
            prop_assert_eq!(best_response(&menu, v), o);
        }
    }
}

#[test]
fn envelope_agrees_with_direct_choice() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let g = random::layered(&mut rng, n, 4, 3.0);
        for v in 0..g.node_count() {
            let v = NodeId(v);
            if v == g.target() {
                continue;
            }
            let policy = ChoicePolicy::build(&g, v);
            for w in policy.pieces().windows(2) {
                assert!(g.edge(w[0].edge).w > g.edge(w[1].edge).w);
            }
            for _ in 0..10_000 {
                let b = 1.0 + 9.0 * rng.random::<f64>();
                assert_eq!(policy.lookup(b), choose_edge(&g, v, b), "b={b}");
            }
            // a piece's start sits on the edge of the tie band, so probe just inside
            for p in policy.pieces() {
                assert_eq!(choose_edge(&g, v, p.start * (1.0 + 1e-7)), p.edge);
            }
        }
    }
}

#[test]
fn equal_revenue_is_flat() {
    for &(z, c) in &[(1.5, 100.0), (0.7, 50.0), (2.0, 10.0)] {
        let d = BiasDistribution::equal_revenue(z, c).unwrap();
        // with z < 1 the atom at 1 lifts Pr[B >= 1] to 1, so p = 1 is skipped
        let lo = f64::max(1.0, z);
        let first = if z < 1.0 { 1 } else { 0 };
        for k in first..=1000 {
            let p = lo + (c - lo) * k as f64 / 1000.0;
            assert!((p * d.survival(p) - z).abs() <= 1e-12, "z={z} p={p}");
        }
    }
}

#[test]
fn z_value_is_a_certificate() {
    let mut dists = vec![
        BiasDistribution::uniform(1.0, 3.0).unwrap(),
        BiasDistribution::uniform(1.5, 4.0).unwrap(),
        BiasDistribution::equal_revenue(1.5, 100.0).unwrap(),
        BiasDistribution::half_normal(1.0, 1.0).unwrap(),
        BiasDistribution::heavy_tail_sqrt(100.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    dists.extend((0..20).map(|_| common::random_finite(&mut rng, 4)));
    for d in dists {
        let z = d.z_value();
        let hi = d.support_upper() * 1.1;
        // z is a supremum over b > 1; at b = 1 it is compared with Pr[B > 1]
        for k in 1..10_000 {
            let b = 1.0 + (hi - 1.0) * k as f64 / 9_999.0;
            assert!(z.z >= b * d.survival(b) - 1e-9, "{} b={b}", d.kind_name());
        }
        assert!(z.z >= d.survival_strict(1.0) - 1e-9);
    }
}
