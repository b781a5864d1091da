//! Worst-case task graphs for a bias distribution.
//!
//! The worst graph for `n` days is a pair of chains `s_1..s_n` and
//! `t_2..t_{n+1}`. From `s_i` the agent either finishes now at cost
//! `d_i = d(s_i, t)` or moves on to `s_{i+1}`, whose distance is `p_i·d_i`.
//! Choosing each growth factor `p_i` is a posted-price problem, solved
//! backward from the last day.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{exact_ratio, AgentError};
use crate::bias::{dominates, BiasDistribution};
use crate::graph::{RawGraph, TaskGraph};
use crate::pricing::{optimal_posted_price, LinearObjective};
use crate::report::fmt_num;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorstCaseError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("b·Pr[B >= b] is unbounded; the worst-case ratio is infinite")]
    UnboundedRatio,
    #[error("threshold {0} must exceed 1 and carry positive survival")]
    InvalidThreshold(f64),
    #[error("the high distribution does not dominate the low one")]
    NotDominant,
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Growth factors, distances and per-day ratios of a worst-case graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSpec {
    pub n: usize,
    /// `p_1..p_{n-1}`.
    pub prices: Vec<f64>,
    /// `d(s_1,t)..d(s_n,t)`, starting at 1.
    pub distances: Vec<f64>,
    /// `r_1..r_n`: expected cost from `s_i` over `d(s_i,t)`; `r_n = 1`.
    pub ratios: Vec<f64>,
}

impl WorstCaseSpec {
    pub fn ratio(&self) -> f64 {
        self.ratios[0]
    }

    pub fn graph(&self) -> TaskGraph {
        growth_graph(&self.distances)
    }

    /// `layer,price,distance,ratio`; the last day has no price.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "layer,price,distance,ratio")?;
        for i in 0..self.n {
            let price = self.prices.get(i).map(|&p| fmt_num(p)).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{}",
                i + 1,
                price,
                fmt_num(self.distances[i]),
                fmt_num(self.ratios[i])
            )?;
        }
        Ok(())
    }
}

/// Two-chain graph with `d(s_i, t) = distances[i-1]`; the distances must
/// be nondecreasing.
pub fn growth_graph(distances: &[f64]) -> TaskGraph {
    let n = distances.len();
    assert!(n >= 1, "horizon must be at least 1");
    let mut raw = RawGraph::new(n, "s1", format!("t{}", n + 1));
    for i in 1..=n {
        raw.node(format!("s{i}"), i).node(format!("t{}", i + 1), i + 1);
    }
    for i in 1..=n {
        raw.edge(format!("s{i}"), format!("t{}", i + 1), distances[i - 1]);
        if i < n {
            raw.edge(format!("s{i}"), format!("s{}", i + 1), 0.0);
        }
        if i >= 2 {
            raw.edge(format!("t{i}"), format!("t{}", i + 1), 0.0);
        }
    }
    raw.build().expect("growth graph is valid")
}

/// Backward recursion `r_n = 1`,
/// `r_i = max_p (1 - S(p)) + p·S(p)·r_{i+1}` with `S(p) = Pr[B >= p]`,
/// and the graph realizing it.
pub fn synthesize(dist: &BiasDistribution, n: usize) -> Result<(WorstCaseSpec, TaskGraph), WorstCaseError> {
    if n == 0 {
        return Err(WorstCaseError::EmptyHorizon);
    }
    if dist.z_value().is_unbounded() {
        return Err(WorstCaseError::UnboundedRatio);
    }
    let mut ratios = vec![1.0; n];
    let mut prices = vec![1.0; n - 1];
    for i in (0..n - 1).rev() {
        // 1 + max_p S(p)·(r_{i+1}·p - 1)
        let best =
            optimal_posted_price(dist, LinearObjective::new(-1.0, ratios[i + 1])).expect("objective is not degenerate");
        prices[i] = best.price;
        ratios[i] = 1.0 + best.value;
    }
    let mut distances = vec![1.0; n];
    for i in 1..n {
        distances[i] = distances[i - 1] * prices[i - 1];
    }
    let spec = WorstCaseSpec {
        n,
        prices,
        distances,
        ratios,
    };
    let g = spec.graph();
    Ok((spec, g))
}

/// `Σ_{i=0}^{n-1} z^i`.
pub fn theorem3_bound(z: f64, n: usize) -> f64 {
    if z == 1.0 {
        n as f64
    } else {
        (z.powi(n as i32) - 1.0) / (z - 1.0)
    }
}

/// Worst-case ratio for the equal-revenue distribution with parameter `z`
/// and cap `c`: `Σ_{i=1}^{n-1} (1 - z/c)·z^(i-1) + z^(n-1)`.
pub fn equal_revenue_ratio(z: f64, c: f64, n: usize) -> f64 {
    (1..n).map(|i| (1.0 - z / c) * z.powi(i as i32 - 1)).sum::<f64>() + z.powi(n as i32 - 1)
}

/// Growth graph with every factor equal to `b0`, compared against the
/// closed form that uses step `1 - 1/b0`.
#[derive(Debug, Clone)]
pub struct Theorem4Report {
    pub graph: TaskGraph,
    pub b0: f64,
    /// `b0·Pr[B >= b0]`.
    pub z0: f64,
    /// `Σ_{i=1}^{n-1} (1 - 1/b0)·z0^(i-1) + z0^(n-1)`.
    pub stated_formula: f64,
    /// `Σ_{i=1}^{n-1} (1 - z0/b0)·z0^(i-1) + z0^(n-1)`, what the graph gives.
    pub derived_formula: f64,
    /// Exact ratio of the graph.
    pub derived: f64,
}

impl Theorem4Report {
    pub fn gap(&self) -> f64 {
        self.stated_formula - self.derived
    }

    pub fn has_gap(&self) -> bool {
        self.gap().abs() > 1e-9 * self.derived.abs().max(1.0)
    }
}

pub fn theorem4_graph(dist: &BiasDistribution, b0: f64, n: usize) -> Result<Theorem4Report, WorstCaseError> {
    if n == 0 {
        return Err(WorstCaseError::EmptyHorizon);
    }
    let s = dist.survival(b0);
    if !(b0 > 1.0 && b0.is_finite()) || s <= 0.0 {
        return Err(WorstCaseError::InvalidThreshold(b0));
    }
    let z0 = b0 * s;
    let distances: Vec<f64> = (0..n).map(|i| b0.powi(i as i32)).collect();
    let graph = growth_graph(&distances);
    let derived = exact_ratio(&graph, dist)?.ratio;
    let tail = |step: f64| (1..n).map(|i| step * z0.powi(i as i32 - 1)).sum::<f64>() + z0.powi(n as i32 - 1);
    Ok(Theorem4Report {
        b0,
        z0,
        stated_formula: tail(1.0 - 1.0 / b0),
        derived_formula: tail(1.0 - z0 / b0),
        derived,
        graph,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Worst-case ratio for the low distribution on its own worst graph.
    pub cost_low: f64,
    /// Ratio of the high distribution on the same graph.
    pub cost_high: f64,
}

impl DominanceReport {
    pub fn holds(&self) -> bool {
        self.cost_high >= self.cost_low * (1.0 - 1e-12)
    }
}

/// Runs both distributions on the worst graph of `f_low`.
pub fn verify_dominance_monotonicity(
    f_low: &BiasDistribution,
    f_high: &BiasDistribution,
    n: usize,
) -> Result<DominanceReport, WorstCaseError> {
    if !dominates(f_high, f_low, &f_high.probe_grid(f_low)) {
        return Err(WorstCaseError::NotDominant);
    }
    let (_, g) = synthesize(f_low, n)?;
    Ok(DominanceReport {
        cost_low: exact_ratio(&g, f_low)?.ratio,
        cost_high: exact_ratio(&g, f_high)?.ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> BiasDistribution {
        BiasDistribution::finite(&[(1.0, 1.0 / 3.0), (3.0, 2.0 / 3.0)]).unwrap()
    }

    #[test]
    fn two_point_two_days() {
        let (spec, g) = synthesize(&two_point(), 2).unwrap();
        assert_eq!(spec.prices, vec![3.0]);
        assert!((spec.ratio() - 7.0 / 3.0).abs() < 1e-12);
        assert!((exact_ratio(&g, &two_point()).unwrap().ratio - 7.0 / 3.0).abs() < 1e-12);
        assert!(spec.ratio() <= theorem3_bound(2.0, 2));
    }

    #[test]
    fn rational_agent_is_never_delayed() {
        let d = BiasDistribution::point_mass(1.0).unwrap();
        let (spec, _) = synthesize(&d, 6).unwrap();
        assert!(spec.prices.iter().all(|&p| p == 1.0));
        assert_eq!(spec.ratio(), 1.0);
    }

    #[test]
    fn equal_revenue_matches_closed_form() {
        let d = BiasDistribution::equal_revenue(1.5, 100.0).unwrap();
        let (spec, g) = synthesize(&d, 10).unwrap();
        let want = equal_revenue_ratio(1.5, 100.0, 10);
        assert!((spec.ratio() - want).abs() < 1e-9 * want);
        assert!((exact_ratio(&g, &d).unwrap().ratio - want).abs() < 1e-9 * want);
    }

    #[test]
    fn geometric_bound() {
        assert_eq!(theorem3_bound(1.0, 10), 10.0);
        let z: f64 = 1.125;
        assert!((theorem3_bound(z, 20) - (z.powi(20) - 1.0) / 0.125).abs() < 1e-12);
        assert_eq!(theorem3_bound(2.0, 2), 3.0);
    }

    #[test]
    fn threshold_graph_two_point_gap() {
        let r = theorem4_graph(&two_point(), 3.0, 2).unwrap();
        assert!((r.derived - 7.0 / 3.0).abs() < 1e-12);
        assert!((r.stated_formula - 8.0 / 3.0).abs() < 1e-12);
        assert!((r.derived_formula - r.derived).abs() < 1e-12);
        assert!(r.has_gap());
        let pm = BiasDistribution::point_mass(1.0).unwrap();
        assert_eq!(
            theorem4_graph(&pm, 2.0, 3).unwrap_err(),
            WorstCaseError::InvalidThreshold(2.0)
        );
    }

    #[test]
    fn threshold_graph_uniform_sandwich() {
        let d = BiasDistribution::uniform(1.0, 2.0).unwrap();
        let r = theorem4_graph(&d, 1.5, 5).unwrap();
        assert!(r.derived >= 1.0);
        assert!(r.derived <= theorem3_bound(d.z_value().z, 5) * (1.0 + 1e-9));
    }

    #[test]
    fn dominance_examples() {
        let low = BiasDistribution::finite(&[(1.0, 2.0 / 3.0), (3.0, 1.0 / 3.0)]).unwrap();
        let r = verify_dominance_monotonicity(&low, &two_point(), 5).unwrap();
        assert!(r.holds() && r.cost_high >= r.cost_low);
        let r = verify_dominance_monotonicity(&low, &low, 5).unwrap();
        assert_eq!(r.cost_low, r.cost_high);
        assert_eq!(
            verify_dominance_monotonicity(&two_point(), &low, 5).unwrap_err(),
            WorstCaseError::NotDominant
        );
        let u2 = BiasDistribution::uniform(1.0, 2.0).unwrap();
        let u3 = BiasDistribution::uniform(1.0, 3.0).unwrap();
        assert!(verify_dominance_monotonicity(&u2, &u3, 5).unwrap().holds());
    }

    #[test]
    fn spec_csv() {
        let (spec, _) = synthesize(&two_point(), 2).unwrap();
        let mut out = Vec::new();
        spec.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "layer,price,distance,ratio\n1,3,1,2.33333333333\n2,,3,1\n"
        );
    }
}
