//! Bound regimes for graphs with bounded or monotone distances.
//!
//! * With bounded distances no walk costs more than `n·d(s,t)`.
//! * When `z(F) > 1` there is a bounded-distance graph whose ratio grows
//!   linearly: the agent performs a random walk on an index `j` with
//!   negative drift, and every step up costs `δ^j - δ^(j+β)`.
//! * With monotone distances the ratio is at most
//!   `max(1 + 1/β, 1/(β·δ))` whenever `F(x) >= β·(x-1)` on `[1, 1+δ]`.

use std::collections::{HashMap, VecDeque};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{exact_ratio, simulate, AgentError, SimConfig};
use crate::bias::BiasDistribution;
use crate::graph::{NodeId, RawGraph, TaskGraph};
use crate::report::fmt_num;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("graph does not have bounded distances")]
    NotBoundedDistance,
    #[error("graph does not have monotone distances")]
    NotMonotoneDistance,
    #[error("no fraction beta/(alpha+beta) fits strictly between {lo} and {hi}")]
    NoValidFraction { lo: f64, hi: f64 },
    #[error("no delta in (0,1) makes H(delta) exceed 1")]
    NoValidDelta,
    #[error("F(x) >= beta·(x-1) fails near 1 for every beta > 0")]
    ConditionUnsatisfiable,
    #[error("horizon must be at least {0}")]
    HorizonTooShort(usize),
    #[error("property violated: {0}")]
    PropertyViolation(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Relative slack on every bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim1Report {
    pub trials: u64,
    pub n: usize,
    pub d_start: f64,
    /// Largest realized cost over `d(s,t)`.
    pub max_ratio: f64,
}

/// Simulates `trials` walks and checks that each costs at most `n·d(s,t)`
/// and that no step costs more than the distance of the node it leaves.
pub fn check_claim1(
    g: &TaskGraph,
    dist: &BiasDistribution,
    trials: u64,
    seed: u64,
) -> Result<Claim1Report, BoundsError> {
    if !g.is_bounded_distance() {
        return Err(BoundsError::NotBoundedDistance);
    }
    let mut cfg = SimConfig::new(seed, trials);
    cfg.keep_trajectories = true;
    let sim = simulate(g, dist, &cfg)?;
    let d_start = g.d_start();
    let cap = g.n() as f64 * d_start;
    let mut max_ratio: f64 = 0.0;
    for (k, t) in sim.trajectories.as_deref().unwrap_or_default().iter().enumerate() {
        if t.total_cost > cap * (1.0 + BOUND_SLACK) {
            return Err(BoundsError::PropertyViolation(format!(
                "trial {k} costs {} > n·d(s,t) = {}",
                t.total_cost, cap
            )));
        }
        for (step, &w) in t.step_costs.iter().enumerate() {
            let dv = g.distance(t.path[step]);
            if w > dv * (1.0 + BOUND_SLACK) + 1e-15 {
                return Err(BoundsError::PropertyViolation(format!(
                    "trial {k} step {} costs {w} > d({}) = {dv}",
                    step + 1,
                    g.node(t.path[step]).id
                )));
            }
        }
        max_ratio = max_ratio.max(t.total_cost / d_start);
    }
    Ok(Claim1Report {
        trials,
        n: g.n(),
        d_start,
        max_ratio,
    })
}

/// Parameters of the linear-growth construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem5Params {
    /// Smallest maximizer of `b·Pr[B >= b]`.
    pub b_star: f64,
    /// Step down (free) and step up (costly) of the index walk.
    pub alpha: u32,
    pub beta: u32,
    pub delta: f64,
    /// `b_star·Pr[B >= b_star]`.
    pub z: f64,
    /// `Pr[B >= b_star]`.
    pub survival: f64,
    /// `H(delta)`.
    pub h: f64,
    /// Expected index change per step, `beta·(1-S) - alpha·S`.
    pub gamma: f64,
}

/// `b·δ^α - δ^(α+β)·(b - 1)`.
pub fn h_value(b: f64, alpha: u32, beta: u32, delta: f64) -> f64 {
    b * delta.powi(alpha as i32) - delta.powi((alpha + beta) as i32) * (b - 1.0)
}

/// Largest `alpha + beta` searched for a fitting fraction.
pub const MAX_FRACTION_TOTAL: u32 = 100_000;

/// Margin by which `H(delta)` must exceed 1.
pub const H_MARGIN: f64 = 1e-6;

impl Theorem5Params {
    /// Checks `1/b* < β/(α+β) < S`, `H(δ) > 1` and `γ < 0`.
    pub fn verify(&self) -> bool {
        let frac = self.beta as f64 / (self.alpha + self.beta) as f64;
        1.0 / self.b_star < frac
            && frac < self.survival
            && h_value(self.b_star, self.alpha, self.beta, self.delta) > 1.0
            && self.gamma < 0.0
    }
}

pub fn theorem5_params(dist: &BiasDistribution) -> Result<Theorem5Params, BoundsError> {
    let zv = dist.z_value();
    let b_star = zv.argmax_b;
    let survival = dist.survival(b_star);
    let (lo, hi) = (1.0 / b_star, survival);
    if !(zv.z > 1.0) || zv.is_unbounded() || !(lo < hi) {
        return Err(BoundsError::NoValidFraction { lo, hi });
    }
    let (alpha, beta) = (2..=MAX_FRACTION_TOTAL)
        .find_map(|total| {
            (1..total)
                .find(|&beta| {
                    let f = beta as f64 / total as f64;
                    lo < f && f < hi
                })
                .map(|beta| (total - beta, beta))
        })
        .ok_or(BoundsError::NoValidFraction { lo, hi })?;
    let (delta, h) = (1..=12)
        .map(|k| 1.0 - 10f64.powi(-k))
        .map(|d| (d, h_value(b_star, alpha, beta, d)))
        .find(|&(_, h)| h > 1.0 + H_MARGIN)
        .ok_or(BoundsError::NoValidDelta)?;
    Ok(Theorem5Params {
        b_star,
        alpha,
        beta,
        delta,
        z: b_star * survival,
        survival,
        h,
        gamma: beta as f64 * (1.0 - survival) - alpha as f64 * survival,
    })
}

/// The index-walk graph with its node coordinates.
#[derive(Debug, Clone)]
pub struct Theorem5Graph {
    pub graph: TaskGraph,
    pub params: Theorem5Params,
    coords: HashMap<NodeId, (usize, usize)>,
}

/// Which rule governs the edges out of `v_{i,j}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRule {
    Low,
    Middle,
    High,
    Last,
}

impl Theorem5Graph {
    /// `(day, index)` of a non-target node.
    pub fn coords(&self, v: NodeId) -> Option<(usize, usize)> {
        self.coords.get(&v).copied()
    }

    pub fn rule(&self, v: NodeId) -> Option<IndexRule> {
        let (i, j) = self.coords(v)?;
        Some(index_rule(&self.params, self.graph.n(), i, j))
    }
}

fn index_rule(p: &Theorem5Params, n: usize, i: usize, j: usize) -> IndexRule {
    let (alpha, beta) = (p.alpha as usize, p.beta as usize);
    if i == n {
        IndexRule::Last
    } else if j < alpha {
        IndexRule::Low
    } else if j <= (n - 1) * beta {
        IndexRule::Middle
    } else {
        IndexRule::High
    }
}

/// Builds the graph on nodes `v_{i,j}` (`j in 0..=n·β`) reachable from
/// `v_{1,0}`; `d(v_{i,j}, t) = δ^j`.
pub fn theorem5_graph(params: &Theorem5Params, n: usize) -> Result<Theorem5Graph, BoundsError> {
    if n < 2 {
        return Err(BoundsError::HorizonTooShort(2));
    }
    let (alpha, beta) = (params.alpha as usize, params.beta as usize);
    let pow = |j: usize| params.delta.powi(j as i32);
    let id = |i: usize, j: usize| format!("v{i}_{j}");
    let mut raw = RawGraph::new(n, id(1, 0), "t");
    raw.node("t", n + 1);
    let mut seen = vec![vec![false; n * beta + 1]; n + 1];
    let mut queue = VecDeque::from([(1usize, 0usize)]);
    seen[1][0] = true;
    while let Some((i, j)) = queue.pop_front() {
        raw.node(id(i, j), i);
        let mut next = |raw: &mut RawGraph, k: usize, w: f64| {
            raw.edge(id(i, j), id(i + 1, k), w);
            if !seen[i + 1][k] {
                seen[i + 1][k] = true;
                queue.push_back((i + 1, k));
            }
        };
        match index_rule(params, n, i, j) {
            IndexRule::Last => {
                raw.edge(id(i, j), "t", pow(j));
            }
            IndexRule::Low => next(&mut raw, alpha, pow(j) - pow(alpha)),
            IndexRule::Middle => {
                next(&mut raw, j - alpha, 0.0);
                next(&mut raw, j + beta, pow(j) - pow(j + beta));
            }
            IndexRule::High => next(&mut raw, j, 0.0),
        }
    }
    let graph = raw.build().expect("index-walk graph is valid");
    let coords = graph
        .nodes()
        .iter()
        .enumerate()
        .filter_map(|(k, node)| {
            let (i, j) = node.id.strip_prefix('v')?.split_once('_')?;
            Some((NodeId(k), (i.parse().ok()?, j.parse().ok()?)))
        })
        .collect();
    Ok(Theorem5Graph {
        graph,
        params: *params,
        coords,
    })
}

/// Monte Carlo ratio of the index-walk graph at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub mean_ratio: f64,
    pub std_error: f64,
}

pub fn theorem5_growth(
    params: &Theorem5Params,
    dist: &BiasDistribution,
    horizons: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<GrowthRow>, BoundsError> {
    horizons
        .iter()
        .map(|&n| {
            let g = theorem5_graph(params, n)?;
            let r = simulate(&g.graph, dist, &SimConfig::new(seed, trials))?.report;
            Ok(GrowthRow {
                n,
                mean_ratio: r.ratio,
                std_error: r.std_error.unwrap_or(0.0),
            })
        })
        .collect()
}

pub fn write_growth_csv<W: Write>(out: &mut W, rows: &[GrowthRow]) -> io::Result<()> {
    writeln!(out, "n,mean_ratio,std_error")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.n, fmt_num(r.mean_ratio), fmt_num(r.std_error))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}

/// `(β, δ)` with `F(x) >= β·(x-1)` on `[1, 1+δ]` and the resulting bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCondition {
    pub beta_m: f64,
    pub delta_m: f64,
    pub bound: f64,
}

/// Grid steps for `δ` over `(0, 1]`.
pub const DELTA_STEPS: usize = 1_000;
/// Grid steps for `x` over `(1, 2]`.
pub const X_STEPS: usize = 10_000;

/// Searches `δ in (0,1]`. For each `δ`, `β` is the smallest `F(x)/(x-1)`
/// over grid points and atom left limits in `(1, 1+δ]`; the pair with the
/// smallest bound wins, the larger `δ` on ties.
pub fn theorem6_condition(dist: &BiasDistribution) -> Result<MonotoneCondition, BoundsError> {
    let mut probes: Vec<(f64, f64)> = (1..=X_STEPS)
        .map(|k| {
            let x = 1.0 + k as f64 / X_STEPS as f64;
            (x, dist.cdf(x) / (x - 1.0))
        })
        .collect();
    for (a, mass) in dist.atoms() {
        if a > 1.0 && a <= 2.0 {
            probes.push((a, ((dist.cdf(a) - mass).max(0.0)) / (a - 1.0)));
        }
    }
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<MonotoneCondition> = None;
    let mut running = f64::INFINITY;
    let mut k = 0;
    for step in 1..=DELTA_STEPS {
        let delta = step as f64 / DELTA_STEPS as f64;
        while k < probes.len() && probes[k].0 <= 1.0 + delta + 1e-15 {
            running = running.min(probes[k].1);
            k += 1;
        }
        if !(running > 0.0) {
            continue;
        }
        let bound = (1.0 + 1.0 / running).max(1.0 / (running * delta));
        if best.is_none_or(|b| bound <= b.bound) {
            best = Some(MonotoneCondition {
                beta_m: running,
                delta_m: delta,
                bound,
            });
        }
    }
    best.ok_or(BoundsError::ConditionUnsatisfiable)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem6Report {
    pub ratio: f64,
    pub condition: MonotoneCondition,
}

/// Exact ratio of a monotone-distance graph against the constant bound.
pub fn check_theorem6(g: &TaskGraph, dist: &BiasDistribution) -> Result<Theorem6Report, BoundsError> {
    if !g.is_monotone_distance() {
        return Err(BoundsError::NotMonotoneDistance);
    }
    let condition = theorem6_condition(dist)?;
    let ratio = exact_ratio(g, dist)?.ratio;
    if ratio > condition.bound * (1.0 + BOUND_SLACK) {
        return Err(BoundsError::PropertyViolation(format!(
            "ratio {ratio} exceeds bound {}",
            condition.bound
        )));
    }
    Ok(Theorem6Report { ratio, condition })
}

/// One line of a bound-check table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub test: String,
    pub n: usize,
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn write_bound_csv<W: Write>(out: &mut W, rows: &[BoundRow]) -> io::Result<()> {
    writeln!(out, "test,n,ratio,bound,pass")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.test,
            r.n,
            fmt_num(r.ratio),
            fmt_num(r.bound),
            r.pass
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{homework_graph, marathon_graph, ski_graph};

    fn two_point() -> BiasDistribution {
        BiasDistribution::finite(&[(1.0, 1.0 / 3.0), (3.0, 2.0 / 3.0)]).unwrap()
    }

    #[test]
    fn claim1_marathon_and_guard() {
        let g = marathon_graph(30, 5, 1.0 / 15.0).unwrap();
        let r = check_claim1(&g, &two_point(), 2_000, 1).unwrap();
        assert!(r.max_ratio <= 30.0);
        assert_eq!(
            check_claim1(&homework_graph(4), &two_point(), 10, 0).unwrap_err(),
            BoundsError::NotBoundedDistance
        );
        let mut raw = RawGraph::new(1, "s", "t");
        raw.node("s", 1).node("t", 2).edge("s", "t", 1.0);
        assert_eq!(
            check_claim1(&raw.build().unwrap(), &two_point(), 10, 0)
                .unwrap()
                .max_ratio,
            1.0
        );
    }

    #[test]
    fn two_point_params() {
        let p = theorem5_params(&two_point()).unwrap();
        assert_eq!(p.b_star, 3.0);
        assert_eq!((p.alpha, p.beta), (1, 1));
        assert_eq!(p.delta, 0.9);
        assert!((p.h - 1.08).abs() < 1e-12);
        assert!((p.gamma + 1.0 / 3.0).abs() < 1e-12);
        assert!(p.verify());
    }

    #[test]
    fn params_need_z_above_one() {
        let u = BiasDistribution::uniform(1.0, 2.0).unwrap();
        assert!(matches!(theorem5_params(&u), Err(BoundsError::NoValidFraction { .. })));
        let er = BiasDistribution::equal_revenue(1.5, 10.0).unwrap();
        let p = theorem5_params(&er).unwrap();
        assert_eq!(p.b_star, 1.5);
        assert_eq!((p.alpha, p.beta), (1, 3));
        assert!(p.verify());
    }

    #[test]
    fn index_walk_distances() {
        let p = theorem5_params(&two_point()).unwrap();
        let tg = theorem5_graph(&p, 12).unwrap();
        let g = &tg.graph;
        assert!(g.is_bounded_distance());
        for v in 0..g.node_count() {
            if let Some((_, j)) = tg.coords(NodeId(v)) {
                let want = p.delta.powi(j as i32);
                assert!((g.distance(NodeId(v)) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn condition_examples() {
        let c = theorem6_condition(&BiasDistribution::uniform(1.0, 2.0).unwrap()).unwrap();
        assert!((c.beta_m - 1.0).abs() < 1e-9);
        assert_eq!(c.delta_m, 1.0);
        assert!((c.bound - 2.0).abs() < 1e-9);
        let c = theorem6_condition(&two_point()).unwrap();
        assert!(c.bound <= 4.0);
        assert!((c.bound - 3.0).abs() < 1e-9);
        let pm = BiasDistribution::point_mass(3.0).unwrap();
        assert_eq!(
            theorem6_condition(&pm).unwrap_err(),
            BoundsError::ConditionUnsatisfiable
        );
    }

    #[test]
    fn ski_under_constant_bound() {
        let g = ski_graph(100, 0.5).unwrap();
        let r = check_theorem6(&g, &two_point()).unwrap();
        assert!(r.ratio <= 4.0);
        let u = BiasDistribution::uniform(1.0, 2.0).unwrap();
        assert!(check_theorem6(&g, &u).unwrap().ratio <= 2.0);
        assert_eq!(
            check_theorem6(&homework_graph(3), &u).unwrap_err(),
            BoundsError::NotMonotoneDistance
        );
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let f = linear_fit(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }
}
