//! Performance of joint strategies and the two sink-equilibrium metrics.
//!
//! Both metrics take the worst mean node weight over a family of walks inside
//! each sink: directed cycles for the cycle-based metric (Karp's minimum mean
//! cycle), strict best response paths of a fixed length for the memory-based
//! metric (a min-plus dynamic program). Profiles outside every sink score 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{MetaGame, EXACT_TIE_TOL};
use crate::response_graph::{build_sbr_graph, sink_equilibria, sink_membership, SbrGraph, SinkEquilibrium};

/// Default cap on sink size for exact longest-cycle computation.
pub const DEFAULT_EXACT_CAP: usize = 12;

/// Non-negative agent weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if w.is_empty() || w.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::WeightNormalization { sum });
        }
        Ok(WeightVector(w))
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Cycle,
    Memory,
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(MetricKind::Cycle),
            "memory" => Ok(MetricKind::Memory),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric '{other}' (expected cycle or memory)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub kind: MetricKind,
    /// Memory length, for the memory-based metric.
    pub memory: Option<usize>,
    /// Upper bound on the number of profiles in a directed cycle of any sink.
    pub cycle_length_bound: usize,
    pub per_profile: Vec<f64>,
    /// Indexed by sink id.
    pub per_sink: Vec<f64>,
}

/// W(s) = sum_i w^i J^i(s).
pub fn strategy_performance(payoff: &[f64], weights: &WeightVector) -> Result<f64> {
    if payoff.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: payoff.len(),
        });
    }
    Ok(payoff.iter().zip(weights.as_slice()).map(|(j, w)| j * w).sum())
}

/// W(s) for every profile of a meta-game.
pub fn node_weights(meta: &MetaGame, weights: &WeightVector) -> Result<Vec<f64>> {
    (0..meta.size())
        .map(|p| strategy_performance(meta.payoff(p), weights))
        .collect()
}

/// Mean of a sequence of weights, summed left to right. All path and window
/// averages go through this so equal sequences give bit-identical results.
pub fn mean_weight(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    sum / count as f64
}

/// W(L): mean node weight along a stored path. A directed cycle is stored over
/// its distinct nodes (the closing repeat of the first node is not included).
pub fn path_performance(path: &[usize], node_weights: &[f64]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    if let Some(&bad) = path.iter().find(|&&v| v >= node_weights.len()) {
        return Err(Error::UnknownProfile {
            index: bad,
            size: node_weights.len(),
        });
    }
    Ok(mean_weight(path.iter().map(|&v| node_weights[v])))
}

/// Karp's minimum mean cycle with node weights charged to incoming edges.
/// Returns `None` when the graph has no cycle.
pub fn min_mean_cycle(succ: &[Vec<usize>], node_weights: &[f64]) -> Option<f64> {
    let n = succ.len();
    if n == 0 {
        return None;
    }
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    // d[k][v]: minimum weight of a walk with exactly k edges ending at v,
    // starting anywhere (virtual source with zero-weight edges to every node).
    let mut d = vec![vec![f64::INFINITY; n]; n + 1];
    d[0].fill(0.0);
    for k in 1..=n {
        for v in 0..n {
            let best = pred[v]
                .iter()
                .map(|&u| d[k - 1][u])
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                d[k][v] = best + node_weights[v];
            }
        }
    }
    let mut answer: Option<f64> = None;
    for v in 0..n {
        if !d[n][v].is_finite() {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| d[k][v].is_finite())
            .map(|k| (d[n][v] - d[k][v]) / (n - k) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        answer = Some(answer.map_or(worst, |a: f64| a.min(worst)));
    }
    answer
}

/// Minimum mean weight over walks of exactly `m` nodes in a local graph.
pub fn min_mean_path(succ: &[Vec<usize>], node_weights: &[f64], m: usize) -> Option<f64> {
    let n = succ.len();
    if m == 0 || n == 0 {
        return None;
    }
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    let mut best: Vec<f64> = node_weights.to_vec();
    for _ in 1..m {
        best = (0..n)
            .map(|v| {
                let b = pred[v].iter().map(|&u| best[u]).fold(f64::INFINITY, f64::min);
                b + node_weights[v]
            })
            .collect();
    }
    let total = best.into_iter().fold(f64::INFINITY, f64::min);
    total.is_finite().then(|| total / m as f64)
}

/// Induced subgraph of a sink with the pure-equilibrium self-loop added for
/// singleton sinks; returns local adjacency and local node weights.
fn sink_subgraph(graph: &SbrGraph, sink: &SinkEquilibrium, node_weights: &[f64]) -> (Vec<Vec<usize>>, Vec<f64>) {
    let succ = if sink.is_singleton() {
        vec![vec![0]]
    } else {
        sink.induced_successors(graph)
    };
    let w = sink.members.iter().map(|&v| node_weights[v]).collect();
    (succ, w)
}

fn check_weights(graph: &SbrGraph, node_weights: &[f64]) -> Result<()> {
    if node_weights.len() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            got: node_weights.len(),
        });
    }
    Ok(())
}

fn spread(graph: &SbrGraph, sinks: &[SinkEquilibrium], per_sink: &[f64]) -> Vec<f64> {
    let mut per_profile = vec![0.0; graph.node_count()];
    for q in sinks {
        for &v in &q.members {
            per_profile[v] = per_sink[q.id];
        }
    }
    per_profile
}

/// Cycle-based metric of every sink and profile.
pub fn cycle_metric(graph: &SbrGraph, sinks: &[SinkEquilibrium], node_weights: &[f64]) -> Result<MetricReport> {
    check_weights(graph, node_weights)?;
    let per_sink: Vec<f64> = sinks
        .iter()
        .map(|q| {
            if q.is_singleton() {
                node_weights[q.members[0]]
            } else {
                let (succ, w) = sink_subgraph(graph, q, node_weights);
                min_mean_cycle(&succ, &w).expect("a non-singleton strongly connected component has a cycle")
            }
        })
        .collect();
    Ok(MetricReport {
        kind: MetricKind::Cycle,
        memory: None,
        cycle_length_bound: cycle_length_bound(graph, sinks, DEFAULT_EXACT_CAP),
        per_profile: spread(graph, sinks, &per_sink),
        per_sink,
    })
}

/// Memory-based metric of every sink and profile for memory length `m`.
pub fn memory_metric(
    graph: &SbrGraph,
    sinks: &[SinkEquilibrium],
    m: usize,
    node_weights: &[f64],
) -> Result<MetricReport> {
    check_weights(graph, node_weights)?;
    if m == 0 {
        return Err(Error::InvalidArgument("memory length must be at least 1".into()));
    }
    let per_sink: Vec<f64> = sinks
        .iter()
        .map(|q| {
            let (succ, w) = sink_subgraph(graph, q, node_weights);
            min_mean_path(&succ, &w, m).expect("every sink member has a successor inside the sink")
        })
        .collect();
    Ok(MetricReport {
        kind: MetricKind::Memory,
        memory: Some(m),
        cycle_length_bound: cycle_length_bound(graph, sinks, DEFAULT_EXACT_CAP),
        per_profile: spread(graph, sinks, &per_sink),
        per_sink,
    })
}

/// Number of nodes on a longest simple cycle, by a bitmask search over paths.
/// Intended for small graphs (at most 20 nodes or so).
pub fn longest_simple_cycle(succ: &[Vec<usize>]) -> usize {
    let k = succ.len();
    assert!(k <= 24, "exact longest-cycle search is limited to small graphs");
    let mut best = 0;
    for start in 0..k {
        if succ[start].contains(&start) {
            best = best.max(1);
        }
        // ends[mask]: bitset of nodes where a simple path from `start` covering `mask` can end;
        // only nodes above `start` are used so each cycle is found from its lowest node.
        let mut ends = vec![0u32; 1 << k];
        ends[1 << start] = 1 << start;
        for mask in 0..(1usize << k) {
            let e = ends[mask];
            if e == 0 {
                continue;
            }
            for u in 0..k {
                if e & (1 << u) == 0 {
                    continue;
                }
                for &v in &succ[u] {
                    if v == start && u != start {
                        best = best.max(mask.count_ones() as usize);
                    } else if v > start && mask & (1 << v) == 0 {
                        ends[mask | (1 << v)] |= 1 << v;
                    }
                }
            }
        }
    }
    best
}

/// Longest directed cycle inside a sink when it has at most `exact_cap`
/// members; otherwise the safe bound |Q|.
pub fn max_cycle_length_bound(graph: &SbrGraph, sink: &SinkEquilibrium, exact_cap: usize) -> usize {
    if sink.is_singleton() {
        return 1;
    }
    if sink.members.len() > exact_cap.min(24) {
        return sink.members.len();
    }
    longest_simple_cycle(&sink.induced_successors(graph))
}

/// Maximum of [`max_cycle_length_bound`] over all sinks.
pub fn cycle_length_bound(graph: &SbrGraph, sinks: &[SinkEquilibrium], exact_cap: usize) -> usize {
    sinks
        .iter()
        .map(|q| max_cycle_length_bound(graph, q, exact_cap))
        .max()
        .unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub profile: usize,
    pub label: String,
    pub sink_id: Option<usize>,
    pub metric: f64,
    #[serde(rename = "W")]
    pub performance: f64,
}

/// Profiles sorted by descending metric; ties go to the lower profile index.
pub fn rank_graph(
    graph: &SbrGraph,
    kind: MetricKind,
    m: usize,
    node_weights: &[f64],
) -> Result<(MetricReport, Vec<RankRow>)> {
    let sinks = sink_equilibria(graph);
    let report = match kind {
        MetricKind::Cycle => cycle_metric(graph, &sinks, node_weights)?,
        MetricKind::Memory => memory_metric(graph, &sinks, m, node_weights)?,
    };
    let membership = sink_membership(graph, &sinks);
    let mut rows: Vec<RankRow> = (0..graph.node_count())
        .map(|v| RankRow {
            profile: v,
            label: graph.label(v).to_string(),
            sink_id: membership[v],
            metric: report.per_profile[v],
            performance: node_weights[v],
        })
        .collect();
    rows.sort_by(|a, b| b.metric.total_cmp(&a.metric).then(a.profile.cmp(&b.profile)));
    Ok((report, rows))
}

/// Ranks every profile of a meta-game by the chosen metric.
pub fn rank_strategies(
    meta: &MetaGame,
    kind: MetricKind,
    m: usize,
    weights: &WeightVector,
) -> Result<(MetricReport, Vec<RankRow>)> {
    let graph = build_sbr_graph(meta, EXACT_TIE_TOL)?;
    let w = node_weights(meta, weights)?;
    rank_graph(&graph, kind, m, &w)
}
