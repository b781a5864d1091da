//! Random task-graph generators for property sweeps.
//!
//! The bounded and monotone generators draw a target distance for every
//! node first and then derive edge weights that realize exactly those
//! distances, so the structural property holds by construction.

use rand::Rng;

use super::{RawGraph, TaskGraph};

fn node_id(layer: usize, k: usize) -> String {
    format!("v{layer}_{k}")
}

fn layer_ids(n: usize, layer: usize, count: usize) -> Vec<String> {
    if layer == 1 {
        vec!["s".to_string()]
    } else if layer == n + 1 {
        vec!["t".to_string()]
    } else {
        (0..count).map(|k| node_id(layer, k)).collect()
    }
}

/// Unstructured layered graph: every middle layer has `1..=width` nodes,
/// every node links to a random nonempty subset of the next layer with
/// weights drawn from `[0, max_w)`.
pub fn layered<R: Rng + ?Sized>(rng: &mut R, n: usize, width: usize, max_w: f64) -> TaskGraph {
    assert!(n >= 1 && width >= 1);
    let ids: Vec<Vec<String>> = (1..=n + 1)
        .map(|i| layer_ids(n, i, rng.random_range(1..=width)))
        .collect();
    let mut raw = RawGraph::new(n, "s", "t");
    for (i, layer) in ids.iter().enumerate() {
        for id in layer {
            raw.node(id.clone(), i + 1);
        }
    }
    for i in 0..n {
        for from in &ids[i] {
            let next = &ids[i + 1];
            let forced = rng.random_range(0..next.len());
            for (k, to) in next.iter().enumerate() {
                if k == forced || rng.random_bool(0.6) {
                    raw.edge(from.clone(), to.clone(), rng.random_range(0.0..max_w));
                    if rng.random_bool(0.1) {
                        raw.edge(from.clone(), to.clone(), rng.random_range(0.0..max_w));
                    }
                }
            }
        }
    }
    raw.build().expect("generator emits valid graphs")
}

fn with_target_distances<R: Rng + ?Sized>(rng: &mut R, n: usize, width: usize, monotone: bool) -> TaskGraph {
    assert!(n >= 1 && width >= 1);
    let counts: Vec<usize> = (1..=n + 1)
        .map(|i| {
            if i == 1 || i == n + 1 {
                1
            } else {
                rng.random_range(1..=width)
            }
        })
        .collect();
    let ids: Vec<Vec<String>> = (1..=n + 1).map(|i| layer_ids(n, i, counts[i - 1])).collect();

    // target distance per node, built backward; start is pinned at 1
    let mut dist: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    dist[n] = vec![0.0];
    for i in (0..n).rev() {
        let floor = dist[i + 1].iter().copied().fold(f64::INFINITY, f64::min);
        dist[i] = if i == 0 {
            vec![1.0]
        } else {
            (0..counts[i])
                .map(|_| floor + rng.random::<f64>() * (1.0 - floor))
                .collect()
        };
    }

    let mut raw = RawGraph::new(n, "s", "t");
    for (i, layer) in ids.iter().enumerate() {
        for id in layer {
            raw.node(id.clone(), i + 1);
        }
    }
    for i in 0..n {
        for (a, from) in ids[i].iter().enumerate() {
            let dv = dist[i][a];
            let below: Vec<usize> = (0..ids[i + 1].len()).filter(|&b| dist[i + 1][b] <= dv).collect();
            let tight = below[rng.random_range(0..below.len())];
            for (b, to) in ids[i + 1].iter().enumerate() {
                let du = dist[i + 1][b];
                let slack = if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random::<f64>() * 0.5
                };
                if b == tight {
                    raw.edge(from.clone(), to.clone(), dv - du);
                } else if du <= dv {
                    if rng.random_bool(0.6) {
                        raw.edge(from.clone(), to.clone(), dv - du + slack);
                    }
                } else if !monotone && rng.random_bool(0.6) {
                    raw.edge(from.clone(), to.clone(), slack);
                }
            }
        }
    }
    raw.build().expect("generator emits valid graphs")
}

/// Graph with `d(v, t) <= d(s, t) = 1` for every node; edges may still
/// lead to nodes farther from the target.
pub fn bounded<R: Rng + ?Sized>(rng: &mut R, n: usize, width: usize) -> TaskGraph {
    with_target_distances(rng, n, width, false)
}

/// Graph whose distance to the target never increases along an edge.
pub fn monotone<R: Rng + ?Sized>(rng: &mut R, n: usize, width: usize) -> TaskGraph {
    with_target_distances(rng, n, width, true)
}
