//! The naive present-biased agent.
//!
//! On day `i` at node `v` with bias `b`, the agent takes the edge minimizing
//! `b·w(e) + d(head(e))`. Perceived-cost ties (within `TIE_TOL`, scaled by
//! `b·max(1, d(v))`) go to the successor farther from the target, then to
//! the canonically first edge.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::BiasDistribution;
use crate::graph::{EdgeId, NodeId, TaskGraph, TIE_TOL};
use crate::report::fmt_num;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("d(start, target) is zero; the ratio is undefined")]
    ZeroStartDistance,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("could not build worker pool: {0}")]
    Pool(String),
}

fn tie_scale(g: &TaskGraph, v: NodeId) -> f64 {
    TIE_TOL * g.distance(v).max(1.0)
}

/// The edge a bias-`b` agent takes out of `v`.
///
/// Panics if `v` has no outgoing edge (only the target does).
pub fn choose_edge(g: &TaskGraph, v: NodeId, b: f64) -> EdgeId {
    let out = g.out_edges(v);
    assert!(!out.is_empty(), "choose_edge called at the target");
    let perceived = |e: EdgeId| {
        let edge = g.edge(e);
        b * edge.w + g.distance(edge.to)
    };
    let fmin = out.iter().map(|&e| perceived(e)).fold(f64::INFINITY, f64::min);
    let tol = tie_scale(g, v) * b;
    let mut best: Option<(EdgeId, f64)> = None;
    for &e in out {
        if perceived(e) > fmin + tol {
            continue;
        }
        let dh = g.distance(g.edge(e).to);
        match best {
            Some((_, bd)) if dh <= bd => {}
            _ => best = Some((e, dh)),
        }
    }
    best.expect("nonempty candidate set").0
}

/// One constant-choice interval `[start, next.start)` of a node's policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub edge: EdgeId,
}

/// A node's choice as a function of the bias: the lower envelope of the
/// lines `b ↦ b·w(e) + d(head(e))` restricted to `b >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoicePolicy {
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, Copy)]
struct Line {
    w: f64,
    d: f64,
    edge: EdgeId,
}

impl ChoicePolicy {
    pub fn build(g: &TaskGraph, v: NodeId) -> Self {
        let scale = tie_scale(g, v);
        let mut lines: Vec<Line> = g
            .out_edges(v)
            .iter()
            .map(|&e| Line {
                w: g.edge(e).w,
                d: g.distance(g.edge(e).to),
                edge: e,
            })
            .collect();
        assert!(!lines.is_empty(), "policy requested for the target");
        // steepest first; within a slope the winner first
        lines.sort_by(|a, b| b.w.total_cmp(&a.w).then(a.d.total_cmp(&b.d)).then(a.edge.cmp(&b.edge)));
        let mut distinct: Vec<Line> = Vec::with_capacity(lines.len());
        let mut k = 0;
        while k < lines.len() {
            let mut j = k;
            while j + 1 < lines.len() && lines[j + 1].w == lines[k].w {
                j += 1;
            }
            let dmin = lines[k].d;
            let winner = lines[k..=j]
                .iter()
                .filter(|l| l.d <= dmin + scale)
                .fold(lines[k], |best, l| if l.d > best.d { *l } else { best });
            distinct.push(winner);
            k = j + 1;
        }

        let cross = |a: &Line, b: &Line| (b.d - a.d) / (a.w - b.w);
        let mut hull: Vec<Line> = Vec::with_capacity(distinct.len());
        for l in distinct {
            while hull.len() >= 2 {
                let (a, b) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
                if cross(a, &l) <= cross(a, b) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(l);
        }

        // effective start of each later piece, shifted left by the tie band
        let mut pieces: Vec<Piece> = Vec::with_capacity(hull.len());
        pieces.push(Piece {
            start: f64::NEG_INFINITY,
            edge: hull[0].edge,
        });
        for pair in hull.windows(2) {
            let c = cross(&pair[0], &pair[1]);
            let start = c / (1.0 + scale / (pair[0].w - pair[1].w));
            let next = Piece {
                start,
                edge: pair[1].edge,
            };
            while let Some(last) = pieces.last() {
                if next.start <= last.start {
                    pieces.pop();
                } else {
                    break;
                }
            }
            pieces.push(next);
        }
        let first = pieces.iter().rposition(|p| p.start <= 1.0).unwrap_or(0);
        let mut pieces = pieces.split_off(first);
        pieces[0].start = 1.0;
        ChoicePolicy { pieces }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn lookup(&self, b: f64) -> EdgeId {
        let k = self.pieces.partition_point(|p| p.start <= b);
        self.pieces[k.saturating_sub(1)].edge
    }

    /// `Pr[B in piece]` for each piece, in order.
    pub fn probabilities(&self, dist: &BiasDistribution) -> Vec<f64> {
        let s: Vec<f64> = self
            .pieces
            .iter()
            .map(|p| dist.survival(p.start))
            .chain(std::iter::once(0.0))
            .collect();
        s.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMethod {
    Exact,
    MonteCarlo,
}

/// Procrastination ratio with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub method: RatioMethod,
    /// Exact ratio, or the Monte Carlo sample mean.
    pub ratio: f64,
    pub expected_cost: f64,
    pub d_start: f64,
    pub std_error: Option<f64>,
    pub trials: Option<u64>,
}

impl RatioReport {
    pub const CSV_HEADER: &'static str = "method,ratio,expected_cost,d_start,std_error,trials";

    pub fn csv_row(&self) -> String {
        let method = match self.method {
            RatioMethod::Exact => "exact",
            RatioMethod::MonteCarlo => "monte_carlo",
        };
        format!(
            "{},{},{},{},{},{}",
            method,
            fmt_num(self.ratio),
            fmt_num(self.expected_cost),
            fmt_num(self.d_start),
            self.std_error.map(fmt_num).unwrap_or_default(),
            self.trials.map(|t| t.to_string()).unwrap_or_default()
        )
    }
}

/// Expected cost-to-go from every node under `dist`, by backward induction.
pub fn expected_costs(g: &TaskGraph, dist: &BiasDistribution) -> Vec<f64> {
    let mut cost = vec![0.0; g.node_count()];
    for i in (1..=g.n()).rev() {
        for &v in g.layer(i) {
            let policy = ChoicePolicy::build(g, v);
            cost[v.0] = policy
                .pieces()
                .iter()
                .zip(policy.probabilities(dist))
                .map(|(p, prob)| {
                    let e = g.edge(p.edge);
                    prob * (e.w + cost[e.to.0])
                })
                .sum();
        }
    }
    cost
}

/// Exact procrastination ratio `E[cost] / d(s, t)`.
pub fn exact_ratio(g: &TaskGraph, dist: &BiasDistribution) -> Result<RatioReport, AgentError> {
    let d_start = g.d_start();
    if d_start <= 0.0 {
        return Err(AgentError::ZeroStartDistance);
    }
    let expected_cost = expected_costs(g, dist)[g.start().0];
    Ok(RatioReport {
        method: RatioMethod::Exact,
        ratio: expected_cost / d_start,
        expected_cost,
        d_start,
        std_error: None,
        trials: None,
    })
}

/// One realized walk from start to target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub path: Vec<NodeId>,
    pub biases: Vec<f64>,
    pub step_costs: Vec<f64>,
    pub total_cost: f64,
}

/// Increment of the SplitMix64 generator (the golden-ratio constant).
pub const SEED_MIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output for state `seed + (index + 1)·GAMMA`. Trial `k` of a
/// run seeded with `seed` draws from `ChaCha8Rng::seed_from_u64(mix_seed(seed, k))`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(SEED_MIX_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trial `index` of a run seeded with `seed`.
pub fn run_trial(g: &TaskGraph, dist: &BiasDistribution, seed: u64, index: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, index));
    let mut v = g.start();
    let mut path = Vec::with_capacity(g.n() + 1);
    let mut biases = Vec::with_capacity(g.n());
    let mut step_costs = Vec::with_capacity(g.n());
    path.push(v);
    for _ in 0..g.n() {
        let b = dist.sample(&mut rng);
        let e = g.edge(choose_edge(g, v, b));
        biases.push(b);
        step_costs.push(e.w);
        v = e.to;
        path.push(v);
    }
    let total_cost = step_costs.iter().sum();
    Trajectory {
        path,
        biases,
        step_costs,
        total_cost,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub trials: u64,
    pub keep_trajectories: bool,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(seed: u64, trials: u64) -> Self {
        SimConfig {
            seed,
            trials,
            keep_trajectories: false,
            threads: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub report: RatioReport,
    /// Present only when requested, in trial order.
    pub trajectories: Option<Vec<Trajectory>>,
}

/// Monte Carlo estimate of the procrastination ratio.
///
/// Trials are seeded independently, results are gathered in trial order and
/// reduced sequentially, so the output does not depend on the worker count.
pub fn simulate(g: &TaskGraph, dist: &BiasDistribution, cfg: &SimConfig) -> Result<Simulation, AgentError> {
    if cfg.trials == 0 {
        return Err(AgentError::NoTrials);
    }
    let d_start = g.d_start();
    if d_start <= 0.0 {
        return Err(AgentError::ZeroStartDistance);
    }
    let work = || -> Vec<Trajectory> {
        (0..cfg.trials)
            .into_par_iter()
            .map(|k| run_trial(g, dist, cfg.seed, k))
            .collect()
    };
    let trajectories = match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| AgentError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    };
    let n = cfg.trials as f64;
    let mean_cost = trajectories.iter().map(|t| t.total_cost).sum::<f64>() / n;
    let mean = mean_cost / d_start;
    let var = if cfg.trials > 1 {
        trajectories
            .iter()
            .map(|t| (t.total_cost / d_start - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(Simulation {
        report: RatioReport {
            method: RatioMethod::MonteCarlo,
            ratio: mean,
            expected_cost: mean_cost,
            d_start,
            std_error: Some((var / n).sqrt()),
            trials: Some(cfg.trials),
        },
        trajectories: cfg.keep_trajectories.then_some(trajectories),
    })
}

/// Writes `trial,step,node,bias,step_cost` rows; `node` is the node the
/// step departs from.
pub fn write_trajectories_csv<W: Write>(out: &mut W, g: &TaskGraph, trajectories: &[Trajectory]) -> io::Result<()> {
    writeln!(out, "trial,step,node,bias,step_cost")?;
    for (k, t) in trajectories.iter().enumerate() {
        for (step, (b, w)) in t.biases.iter().zip(&t.step_costs).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                k,
                step + 1,
                g.node(t.path[step]).id,
                fmt_num(*b),
                fmt_num(*w)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RawGraph;
    use crate::scenarios::homework_graph;

    fn two_point() -> BiasDistribution {
        BiasDistribution::finite(&[(1.0, 1.0 / 3.0), (3.0, 2.0 / 3.0)]).unwrap()
    }

    /// pay: w=1 into a zero-distance node; wait: w=0 into a node at distance 1.5
    fn pay_or_wait() -> (TaskGraph, EdgeId, EdgeId) {
        let mut raw = RawGraph::new(2, "s", "t");
        raw.node("s", 1).node("paid", 2).node("later", 2).node("t", 3);
        raw.edge("s", "paid", 1.0).edge("s", "later", 0.0);
        raw.edge("paid", "t", 0.0).edge("later", "t", 1.5);
        let g = raw.build().unwrap();
        let s = g.start();
        let pay = *g.out_edges(s).iter().find(|&&e| g.edge(e).w == 1.0).unwrap();
        let wait = *g.out_edges(s).iter().find(|&&e| g.edge(e).w == 0.0).unwrap();
        (g, pay, wait)
    }

    #[test]
    fn two_line_choice() {
        let (g, pay, wait) = pay_or_wait();
        assert_eq!(choose_edge(&g, g.start(), 1.0), pay);
        assert_eq!(choose_edge(&g, g.start(), 2.0), wait);
        // exact tie procrastinates
        assert_eq!(choose_edge(&g, g.start(), 1.5), wait);
        let policy = ChoicePolicy::build(&g, g.start());
        assert_eq!(policy.pieces().len(), 2);
        assert_eq!(policy.lookup(1.4999), pay);
        assert_eq!(policy.lookup(1.5), wait);
    }

    #[test]
    fn homework_student_waits_when_bias_exceeds_two() {
        let g = homework_graph(5);
        for i in 1..=4 {
            let s = g.find(&format!("s{i}")).unwrap();
            let e = choose_edge(&g, s, 3.0);
            assert_eq!(g.node(g.edge(e).to).id, format!("s{}", i + 1));
            let e = choose_edge(&g, s, 1.0);
            assert_eq!(g.node(g.edge(e).to).id, format!("t{}", i + 1));
        }
    }

    #[test]
    fn homework_two_days_exact() {
        let r = exact_ratio(&homework_graph(2), &two_point()).unwrap();
        assert!((r.ratio - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rational_agent_has_unit_ratio() {
        let one = BiasDistribution::point_mass(1.0).unwrap();
        let g = homework_graph(6);
        assert!((exact_ratio(&g, &one).unwrap().ratio - 1.0).abs() < 1e-15);
        let sim = simulate(&g, &one, &SimConfig::new(5, 200)).unwrap();
        assert_eq!(sim.report.ratio, 1.0);
        assert_eq!(sim.report.std_error, Some(0.0));
    }

    #[test]
    fn zero_distance_guard() {
        let mut raw = RawGraph::new(1, "s", "t");
        raw.node("s", 1).node("t", 2).edge("s", "t", 0.0);
        let g = raw.build().unwrap();
        assert_eq!(
            exact_ratio(&g, &two_point()).unwrap_err(),
            AgentError::ZeroStartDistance
        );
    }

    #[test]
    fn duplicate_lines_keep_canonical_first() {
        let mut raw = RawGraph::new(2, "s", "t");
        raw.node("s", 1).node("a", 2).node("b", 2).node("t", 3);
        raw.edge("s", "a", 1.0)
            .edge("s", "b", 1.0)
            .edge("a", "t", 1.0)
            .edge("b", "t", 1.0);
        let g = raw.build().unwrap();
        let policy = ChoicePolicy::build(&g, g.start());
        assert_eq!(policy.pieces().len(), 1);
        assert_eq!(policy.pieces()[0].edge, g.out_edges(g.start())[0]);
        assert_eq!(choose_edge(&g, g.start(), 2.0), g.out_edges(g.start())[0]);
    }

    #[test]
    fn mix_seed_is_stable() {
        // pinned so that recorded trajectories stay reproducible
        assert_eq!(mix_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(mix_seed(7, 0), mix_seed(7, 1));
    }
}
