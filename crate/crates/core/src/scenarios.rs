//! The three worked scenarios: a homework deadline, marathon training and
//! ski rental.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{RawGraph, TaskGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("marathon needs m >= 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("marathon epsilon must lie in [0, 2/(3m)), got {0}")]
    BadEpsilon(f64),
    #[error("ski rent cost must be positive and finite, got {0}")]
    BadRent(f64),
}

/// Homework due after `n` days. Doing it on day `i` costs `2^(i-1)`; the
/// student either does it now (`s_i -> t_{i+1}`) or waits (`s_i -> s_{i+1}`).
pub fn homework_graph(n: usize) -> TaskGraph {
    assert!(n >= 1, "horizon must be at least 1");
    let mut raw = RawGraph::new(n, "s1", format!("t{}", n + 1));
    for i in 1..=n {
        raw.node(format!("s{i}"), i);
    }
    for i in 2..=n + 1 {
        raw.node(format!("t{i}"), i);
    }
    for i in 1..=n {
        raw.edge(format!("s{i}"), format!("t{}", i + 1), 2f64.powi(i as i32 - 1));
        if i < n {
            raw.edge(format!("s{i}"), format!("s{}", i + 1), 0.0);
        }
        if i >= 2 {
            raw.edge(format!("t{i}"), format!("t{}", i + 1), 0.0);
        }
    }
    raw.build().expect("homework graph is valid")
}

/// `E[cost]` of the homework walk when the bias is 1 w.p. 1/3 and 3
/// otherwise: `2·(4/3)^(n-1) - 1`.
pub fn homework_two_point_cost(n: usize) -> f64 {
    2.0 * (4.0f64 / 3.0).powi(n as i32 - 1) - 1.0
}

fn level(day: usize, j: usize) -> String {
    format!("d{day}_l{j}")
}

/// Marathon training over `n` days with fitness levels `0..=m`.
///
/// Training raises the level by one at cost `1/m`, sleeping lowers it for
/// free, level `m` is kept for free and level 0 costs `epsilon` to keep.
/// The race on day `n` costs `1 - j/m` from level `j`.
pub fn marathon_graph(n: usize, m: usize, epsilon: f64) -> Result<TaskGraph, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::EmptyHorizon);
    }
    if m < 2 {
        return Err(ScenarioError::TooFewLevels(m));
    }
    if !(0.0..2.0 / (3.0 * m as f64)).contains(&epsilon) {
        return Err(ScenarioError::BadEpsilon(epsilon));
    }
    let mf = m as f64;
    let mut raw = RawGraph::new(n, level(1, 0), "t");
    raw.node(level(1, 0), 1);
    for day in 2..=n {
        for j in 0..=m.min(day - 1) {
            raw.node(level(day, j), day);
        }
    }
    raw.node("t", n + 1);
    for day in 1..n {
        for j in 0..=m.min(day - 1) {
            let from = level(day, j);
            if j < m {
                raw.edge(from.clone(), level(day + 1, j + 1), 1.0 / mf);
            }
            if j > 0 {
                raw.edge(from.clone(), level(day + 1, j - 1), 0.0);
            }
            if j == m {
                raw.edge(from.clone(), level(day + 1, m), 0.0);
            }
            if j == 0 {
                raw.edge(from, level(day + 1, 0), epsilon);
            }
        }
    }
    for j in 0..=m.min(n - 1) {
        raw.edge(level(n, j), "t", 1.0 - j as f64 / mf);
    }
    Ok(raw.build().expect("marathon graph is valid"))
}

/// Ski season of `n` days. Renting costs `delta` per day, buying costs 1
/// once and skiing afterwards is free.
pub fn ski_graph(n: usize, delta: f64) -> Result<TaskGraph, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::EmptyHorizon);
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ScenarioError::BadRent(delta));
    }
    let rent = |i: usize| if i == 1 { "s".to_string() } else { format!("rent{i}") };
    let mut raw = RawGraph::new(n, "s", "t");
    raw.node("s", 1).node("t", n + 1);
    for i in 2..=n {
        raw.node(rent(i), i).node(format!("own{i}"), i);
    }
    for i in 1..n {
        raw.edge(rent(i), rent(i + 1), delta);
        raw.edge(rent(i), format!("own{}", i + 1), 1.0);
        if i >= 2 {
            raw.edge(format!("own{i}"), format!("own{}", i + 1), 0.0);
        }
    }
    raw.edge(rent(n), "t", delta);
    if n >= 2 {
        raw.edge(format!("own{n}"), "t", 0.0);
    }
    Ok(raw.build().expect("ski graph is valid"))
}

/// Upper estimate `Σ_{i=1}^n (2/3)^i (delta·i + 1)` for the
/// ski walk under the two-point bias {1: 1/3, 3: 2/3}.
pub fn ski_two_point_estimate(n: usize, delta: f64) -> f64 {
    (1..=n)
        .map(|i| (2.0f64 / 3.0).powi(i as i32) * (delta * i as f64 + 1.0))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ExampleSpec {
    Homework { n: usize },
    Marathon { n: usize, m: usize, epsilon: f64 },
    Ski { n: usize, delta: f64 },
}

impl ExampleSpec {
    pub fn n(&self) -> usize {
        match *self {
            ExampleSpec::Homework { n } | ExampleSpec::Marathon { n, .. } | ExampleSpec::Ski { n, .. } => n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExampleSpec::Homework { .. } => "homework",
            ExampleSpec::Marathon { .. } => "marathon",
            ExampleSpec::Ski { .. } => "ski",
        }
    }

    pub fn build(&self) -> Result<TaskGraph, ScenarioError> {
        match *self {
            ExampleSpec::Homework { n } => {
                if n == 0 {
                    return Err(ScenarioError::EmptyHorizon);
                }
                Ok(homework_graph(n))
            }
            ExampleSpec::Marathon { n, m, epsilon } => marathon_graph(n, m, epsilon),
            ExampleSpec::Ski { n, delta } => ski_graph(n, delta),
        }
    }
}
