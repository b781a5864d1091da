//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use prokrast::bias::BiasDistribution;
use prokrast::graph::{NodeId, TaskGraph};
use rand::Rng;

pub fn two_point() -> BiasDistribution {
    BiasDistribution::finite(&[(1.0, 1.0 / 3.0), (3.0, 2.0 / 3.0)]).unwrap()
}

/// Finite distribution with 1..=max_atoms atoms in [1, 5]; half the time
/// one atom sits at 1.
pub fn random_finite<R: Rng>(rng: &mut R, max_atoms: usize) -> BiasDistribution {
    let k = rng.random_range(1..=max_atoms);
    let mut atoms: Vec<(f64, f64)> = (0..k)
        .map(|_| (1.0 + 4.0 * rng.random::<f64>(), 0.05 + rng.random::<f64>()))
        .collect();
    if rng.random_bool(0.5) {
        atoms[0].0 = 1.0;
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for a in &mut atoms {
        a.1 /= total;
    }
    BiasDistribution::finite(&atoms).unwrap()
}

/// The agent's step, written out directly: least perceived cost, ties
/// (relative 1e-12) to the farther successor, then the first edge.
pub fn naive_step(g: &TaskGraph, v: NodeId, b: f64) -> (f64, NodeId) {
    let costs: Vec<(f64, f64, NodeId)> = g
        .out_edges(v)
        .iter()
        .map(|&e| {
            let edge = g.edge(e);
            (b * edge.w + g.distance(edge.to), edge.w, edge.to)
        })
        .collect();
    let best = costs.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * g.distance(v).max(1.0) * b;
    let mut pick: Option<(f64, NodeId)> = None;
    let mut pick_d = f64::NEG_INFINITY;
    for &(c, w, to) in &costs {
        if c <= best + tol && g.distance(to) > pick_d {
            pick = Some((w, to));
            pick_d = g.distance(to);
        }
    }
    pick.unwrap()
}

/// Expected cost from the start by summing over every bias sequence.
pub fn enumerate_expected_cost(g: &TaskGraph, atoms: &[(f64, f64)]) -> f64 {
    fn go(g: &TaskGraph, atoms: &[(f64, f64)], v: NodeId) -> f64 {
        if v == g.target() {
            return 0.0;
        }
        atoms
            .iter()
            .map(|&(b, p)| {
                let (w, to) = naive_step(g, v, b);
                p * (w + go(g, atoms, to))
            })
            .sum()
    }
    go(g, atoms, g.start())
}

/// Every start-to-target path cost, by depth-first enumeration.
pub fn path_costs_from(g: &TaskGraph, v: NodeId) -> Vec<f64> {
    if v == g.target() {
        return vec![0.0];
    }
    let mut out = Vec::new();
    for &e in g.out_edges(v) {
        let edge = g.edge(e);
        out.extend(path_costs_from(g, edge.to).into_iter().map(|c| c + edge.w));
    }
    out
}
