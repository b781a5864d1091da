//! Present-biased agents on layered task graphs.
//!
//! An agent walks a layered DAG from a start node to a target, one layer
//! per day. Each day it draws a bias `b >= 1` and overweights the cost of
//! the edge it takes now by `b`. The crate computes the expected cost of
//! that walk relative to the shortest path, builds the graphs that make
//! this ratio as large as possible for a given bias distribution, and
//! checks the bound regimes for graphs with bounded or monotone distances.

pub mod agent;
pub mod bias;
pub mod bounds;
pub mod graph;
pub mod numeric;
pub mod pricing;
pub mod report;
pub mod scenarios;
pub mod worstcase;

pub use agent::{choose_edge, exact_ratio, simulate, ChoicePolicy, RatioReport, SimConfig, Trajectory};
pub use bias::{BiasDistribution, DistSpec, ZValue};
pub use graph::{EdgeId, GraphError, NodeId, RawGraph, TaskGraph};
