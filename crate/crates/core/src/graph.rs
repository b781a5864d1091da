//! Layered task graphs.
//!
//! A task graph over `n` days has layers `1..=n+1`. Layer 1 holds only the
//! start node and layer `n+1` only the target; every edge joins consecutive
//! layers. Construction prunes nodes that are not on some start-to-target
//! path and precomputes every node's distance to the target.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use petgraph::algo::toposort;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod random;

/// Absolute tolerance for perceived-cost ties, scaled by `max(1, |cost|)`.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("horizon must be at least one day")]
    EmptyHorizon,
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("node `{id}` has layer {layer}, expected 1..={max}")]
    LayerOutOfRange { id: String, layer: usize, max: usize },
    #[error("edge `{from}` -> `{to}` does not join consecutive layers")]
    LayeringError { from: String, to: String },
    #[error("{role} node `{id}` must sit in layer {expected}")]
    MisplacedEndpoint {
        role: &'static str,
        id: String,
        expected: usize,
    },
    #[error("edge `{from}` -> `{to}` has negative weight {w}")]
    NegativeWeight { from: String, to: String, w: f64 },
    #[error("edge `{from}` -> `{to}` has non-finite weight")]
    NonFiniteWeight { from: String, to: String },
    #[error("no path from start to target")]
    Disconnected,
    #[error("cycle detected in input graph")]
    CycleDetected,
    #[error("target is not reachable from start")]
    TargetUnreachable,
    #[error("start and target coincide")]
    DegenerateEndpoints,
}

/// Index of a node in a [`TaskGraph`] (canonical order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// Index of an edge in a [`TaskGraph`] (canonical order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawNode {
    pub id: String,
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub from: String,
    pub to: String,
    pub w: f64,
}

/// The on-disk graph description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGraph {
    pub n: usize,
    pub nodes: Vec<RawNode>,
    pub edges: Vec<RawEdge>,
    pub start: String,
    pub target: String,
}

impl RawGraph {
    pub fn new(n: usize, start: impl Into<String>, target: impl Into<String>) -> Self {
        RawGraph {
            n,
            nodes: Vec::new(),
            edges: Vec::new(),
            start: start.into(),
            target: target.into(),
        }
    }

    pub fn node(&mut self, id: impl Into<String>, layer: usize) -> &mut Self {
        self.nodes.push(RawNode { id: id.into(), layer });
        self
    }

    pub fn edge(&mut self, from: impl Into<String>, to: impl Into<String>, w: f64) -> &mut Self {
        self.edges.push(RawEdge {
            from: from.into(),
            to: to.into(),
            w,
        });
        self
    }

    pub fn build(&self) -> Result<TaskGraph, GraphError> {
        TaskGraph::from_raw(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub w: f64,
}

/// Shortest-path cost from every node to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    d: Vec<f64>,
}

impl DistanceTable {
    pub fn get(&self, v: NodeId) -> f64 {
        self.d[v.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }
}

/// Validated, pruned, canonically ordered layered task graph.
#[derive(Debug, Clone)]
pub struct TaskGraph {
    n: usize,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out: Vec<Vec<EdgeId>>,
    layers: Vec<Vec<NodeId>>,
    start: NodeId,
    target: NodeId,
    dist: DistanceTable,
}

impl TaskGraph {
    pub fn from_raw(raw: &RawGraph) -> Result<Self, GraphError> {
        let n = raw.n;
        if n == 0 {
            return Err(GraphError::EmptyHorizon);
        }
        let mut index: HashMap<&str, usize> = HashMap::with_capacity(raw.nodes.len());
        for (k, node) in raw.nodes.iter().enumerate() {
            if node.layer < 1 || node.layer > n + 1 {
                return Err(GraphError::LayerOutOfRange {
                    id: node.id.clone(),
                    layer: node.layer,
                    max: n + 1,
                });
            }
            if index.insert(node.id.as_str(), k).is_some() {
                return Err(GraphError::DuplicateNode(node.id.clone()));
            }
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
        };
        let start = lookup(&raw.start)?;
        let target = lookup(&raw.target)?;
        if raw.nodes[start].layer != 1 {
            return Err(GraphError::MisplacedEndpoint {
                role: "start",
                id: raw.start.clone(),
                expected: 1,
            });
        }
        if raw.nodes[target].layer != n + 1 {
            return Err(GraphError::MisplacedEndpoint {
                role: "target",
                id: raw.target.clone(),
                expected: n + 1,
            });
        }

        let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(raw.edges.len());
        for e in &raw.edges {
            let from = lookup(&e.from)?;
            let to = lookup(&e.to)?;
            if !e.w.is_finite() {
                return Err(GraphError::NonFiniteWeight {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
            if e.w < 0.0 {
                return Err(GraphError::NegativeWeight {
                    from: e.from.clone(),
                    to: e.to.clone(),
                    w: e.w,
                });
            }
            if raw.nodes[to].layer != raw.nodes[from].layer + 1 {
                return Err(GraphError::LayeringError {
                    from: e.from.clone(),
                    to: e.to.clone(),
                });
            }
            // -0.0 and 0.0 are the same cost
            edges.push((from, to, e.w + 0.0));
        }

        // live = reachable from start and co-reachable to target
        let m = raw.nodes.len();
        let mut fwd: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut bwd: Vec<Vec<usize>> = vec![Vec::new(); m];
        for &(a, b, _) in &edges {
            fwd[a].push(b);
            bwd[b].push(a);
        }
        let from_start = reach(start, &fwd);
        let to_target = reach(target, &bwd);
        if !to_target[start] {
            return Err(GraphError::Disconnected);
        }
        let mut live: Vec<usize> = (0..m).filter(|&k| from_start[k] && to_target[k]).collect();
        live.sort_by(|&a, &b| {
            (raw.nodes[a].layer, raw.nodes[a].id.as_str()).cmp(&(raw.nodes[b].layer, raw.nodes[b].id.as_str()))
        });
        let mut remap = vec![usize::MAX; m];
        for (new, &old) in live.iter().enumerate() {
            remap[old] = new;
        }
        let nodes: Vec<Node> = live
            .iter()
            .map(|&k| Node {
                id: raw.nodes[k].id.clone(),
                layer: raw.nodes[k].layer,
            })
            .collect();

        let mut kept: Vec<Edge> = edges
            .into_iter()
            .filter(|&(a, b, _)| remap[a] != usize::MAX && remap[b] != usize::MAX)
            .map(|(a, b, w)| Edge {
                from: NodeId(remap[a]),
                to: NodeId(remap[b]),
                w,
            })
            .collect();
        kept.sort_by(|x, y| x.from.cmp(&y.from).then(x.to.cmp(&y.to)).then(x.w.total_cmp(&y.w)));
        kept.dedup_by(|x, y| x.from == y.from && x.to == y.to && x.w.to_bits() == y.w.to_bits());

        let mut out = vec![Vec::new(); nodes.len()];
        for (k, e) in kept.iter().enumerate() {
            out[e.from.0].push(EdgeId(k));
        }
        let mut layers = vec![Vec::new(); n + 1];
        for (k, node) in nodes.iter().enumerate() {
            layers[node.layer - 1].push(NodeId(k));
        }

        let mut g = TaskGraph {
            n,
            nodes,
            edges: kept,
            out,
            layers,
            start: NodeId(remap[start]),
            target: NodeId(remap[target]),
            dist: DistanceTable { d: Vec::new() },
        };
        g.dist = g.compute_distances();
        Ok(g)
    }

    fn compute_distances(&self) -> DistanceTable {
        let mut d = vec![f64::INFINITY; self.nodes.len()];
        d[self.target.0] = 0.0;
        for layer in self.layers.iter().rev().skip(1) {
            for &v in layer {
                d[v.0] = self.out[v.0]
                    .iter()
                    .map(|&e| self.edges[e.0].w + d[self.edges[e.0].to.0])
                    .fold(f64::INFINITY, f64::min);
            }
        }
        DistanceTable { d }
    }

    /// Number of days.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out[v.0]
    }

    /// Nodes of layer `i` (1-based).
    pub fn layer(&self, i: usize) -> &[NodeId] {
        &self.layers[i - 1]
    }

    pub fn find(&self, id: &str) -> Option<NodeId> {
        self.nodes.iter().position(|x| x.id == id).map(NodeId)
    }

    pub fn distances(&self) -> &DistanceTable {
        &self.dist
    }

    pub fn distance(&self, v: NodeId) -> f64 {
        self.dist.get(v)
    }

    /// `d(start, target)`.
    pub fn d_start(&self) -> f64 {
        self.dist.get(self.start)
    }

    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            n: self.n,
            nodes: self
                .nodes
                .iter()
                .map(|x| RawNode {
                    id: x.id.clone(),
                    layer: x.layer,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge {
                    from: self.nodes[e.from.0].id.clone(),
                    to: self.nodes[e.to.0].id.clone(),
                    w: e.w,
                })
                .collect(),
            start: self.nodes[self.start.0].id.clone(),
            target: self.nodes[self.target.0].id.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("graph serializes")
    }

    /// Every node is at most as far from the target as the start is.
    pub fn is_bounded_distance(&self) -> bool {
        let ds = self.d_start();
        let tol = TIE_TOL * ds.max(1.0);
        self.dist.d.iter().all(|&d| d <= ds + tol)
    }

    /// Distance to the target never increases along an edge.
    pub fn is_monotone_distance(&self) -> bool {
        self.edges.iter().all(|e| {
            let (a, b) = (self.dist.get(e.from), self.dist.get(e.to));
            a + TIE_TOL * a.max(1.0) >= b
        })
    }
}

fn reach(from: usize, adj: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

/// A weighted DAG with arbitrary (non-layered) structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericDag {
    pub nodes: Vec<String>,
    pub edges: Vec<RawEdge>,
    pub start: String,
    pub target: String,
}

/// Converts a generic DAG into a layered task graph.
///
/// Layer `i` holds a copy of every node reachable from the start in exactly
/// `i - 1` edges. The target carries a zero-weight self-loop, so shorter
/// start-to-target paths are padded up to the longest one; the horizon `n`
/// is the longest start-to-target path length.
pub fn layerize(dag: &GenericDag) -> Result<TaskGraph, GraphError> {
    let mut pg: DiGraph<(), f64> = DiGraph::new();
    let mut index: HashMap<&str, NodeIndex> = HashMap::new();
    for id in &dag.nodes {
        if index.insert(id.as_str(), pg.add_node(())).is_some() {
            return Err(GraphError::DuplicateNode(id.clone()));
        }
    }
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    };
    for e in &dag.edges {
        pg.add_edge(lookup(&e.from)?, lookup(&e.to)?, e.w);
    }
    let s = lookup(&dag.start)?;
    let t = lookup(&dag.target)?;
    if s == t {
        return Err(GraphError::DegenerateEndpoints);
    }
    let order = toposort(&pg, None).map_err(|_| GraphError::CycleDetected)?;

    // longest path (in edges) from s, over nodes that can still reach t
    let mut reaches_t: HashSet<NodeIndex> = HashSet::from([t]);
    for &v in order.iter().rev() {
        if pg.neighbors(v).any(|u| reaches_t.contains(&u)) {
            reaches_t.insert(v);
        }
    }
    let mut depth: HashMap<NodeIndex, usize> = HashMap::from([(s, 0)]);
    for &v in &order {
        let Some(&dv) = depth.get(&v) else { continue };
        if v == t {
            continue;
        }
        for u in pg.neighbors(v) {
            if reaches_t.contains(&u) {
                let du = depth.entry(u).or_insert(0);
                *du = (*du).max(dv + 1);
            }
        }
    }
    let n = match depth.get(&t) {
        Some(&n) if n > 0 => n,
        _ => return Err(GraphError::TargetUnreachable),
    };

    let name = |v: NodeIndex| dag.nodes[v.index()].as_str();
    let copy = |v: NodeIndex, layer: usize| format!("{}@{}", name(v), layer);
    let mut raw = RawGraph::new(n, copy(s, 1), copy(t, n + 1));
    let mut frontier: Vec<NodeIndex> = vec![s];
    raw.node(copy(s, 1), 1);
    for layer in 1..=n {
        let mut next: Vec<NodeIndex> = Vec::new();
        let mut seen: HashSet<NodeIndex> = HashSet::new();
        for &v in &frontier {
            if v == t {
                raw.edge(copy(t, layer), copy(t, layer + 1), 0.0);
                if seen.insert(t) {
                    next.push(t);
                }
                continue;
            }
            for e in pg.edges(v) {
                use petgraph::visit::EdgeRef;
                let u = e.target();
                if !reaches_t.contains(&u) {
                    continue;
                }
                raw.edge(copy(v, layer), copy(u, layer + 1), *e.weight());
                if seen.insert(u) {
                    next.push(u);
                }
            }
        }
        for &u in &next {
            raw.node(copy(u, layer + 1), layer + 1);
        }
        frontier = next;
    }
    raw.build()
}
