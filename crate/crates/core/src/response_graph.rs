//! Strict best response graph, pure Nash equilibria and sink equilibria.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{best_responses, MetaGame};

/// Cap on the number of profiles a graph may be built over.
pub const DEFAULT_GRAPH_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub to: usize,
    /// Agent whose unilateral deviation produces the edge; `None` for graphs
    /// loaded without payoffs.
    pub deviator: Option<usize>,
}

/// Directed graph over joint profiles whose edges are strict best responses.
/// Strongly connected components and sinks are computed once at construction.
#[derive(Debug, Clone)]
pub struct SbrGraph {
    labels: Vec<String>,
    succ: Vec<Vec<Edge>>,
    pne: Vec<bool>,
    weights: Option<Vec<f64>>,
    component: Vec<usize>,
    components: Vec<Vec<usize>>,
    sink_components: Vec<usize>,
}

impl SbrGraph {
    fn assemble(labels: Vec<String>, succ: Vec<Vec<Edge>>, weights: Option<Vec<f64>>) -> Self {
        let pne = succ.iter().map(Vec::is_empty).collect();
        let components = tarjan_scc(&succ, |e: &Edge| e.to);
        let mut component = vec![0; succ.len()];
        for (c, members) in components.iter().enumerate() {
            for &v in members {
                component[v] = c;
            }
        }
        let mut sink_components = Vec::new();
        for (c, members) in components.iter().enumerate() {
            let mut is_sink = true;
            for &v in members {
                for e in &succ[v] {
                    // Tarjan emits components in reverse topological order
                    assert!(component[e.to] <= c, "condensation must be acyclic");
                    if component[e.to] != c {
                        is_sink = false;
                    }
                }
            }
            if is_sink {
                sink_components.push(c);
            }
        }
        sink_components.sort_by_key(|&c| components[c][0]);
        SbrGraph {
            labels,
            succ,
            pne,
            weights,
            component,
            components,
            sink_components,
        }
    }

    /// Graph-only mode: nodes, directed edges and optional node weights W(s).
    /// Nodes without outgoing edges are treated as pure Nash equilibria.
    pub fn from_edges(
        labels: Vec<String>,
        edges: &[(usize, usize)],
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidGame("graph has no nodes".into()));
        }
        if let Some(w) = &weights {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
        }
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::UnknownProfile {
                    index: a.max(b),
                    size: n,
                });
            }
            if a == b {
                return Err(Error::InvalidGame(format!(
                    "self-loop on '{}' is not a strict best response",
                    labels[a]
                )));
            }
            if !succ[a].iter().any(|e: &Edge| e.to == b) {
                succ[a].push(Edge { to: b, deviator: None });
            }
        }
        for s in &mut succ {
            s.sort_by_key(|e| e.to);
        }
        Ok(Self::assemble(labels, succ, weights))
    }

    pub fn node_count(&self) -> usize {
        self.succ.len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, v: usize) -> &[Edge] {
        &self.succ[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, Edge)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(v, es)| es.iter().map(move |e| (v, *e)))
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].iter().any(|e| e.to == to)
    }

    pub fn is_pne(&self, v: usize) -> bool {
        self.pne[v]
    }

    pub fn pne_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&v| self.pne[v]).collect()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component[v]
    }

    /// Graphviz rendering; sink members are filled.
    pub fn to_dot(&self) -> String {
        let mut in_sink = vec![false; self.node_count()];
        for &c in &self.sink_components {
            for &v in &self.components[c] {
                in_sink[v] = true;
            }
        }
        let mut out = String::from("digraph sbr {\n");
        for (v, l) in self.labels.iter().enumerate() {
            let style = if in_sink[v] { ", style=filled, fillcolor=palegreen" } else { "" };
            out.push_str(&format!("  n{v} [label=\"{}\"{style}];\n", l.replace('"', "\\\"")));
        }
        for (v, e) in self.edges() {
            match e.deviator {
                Some(i) => out.push_str(&format!("  n{v} -> n{} [label=\"{i}\"];\n", e.to)),
                None => out.push_str(&format!("  n{v} -> n{};\n", e.to)),
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the strict best response graph: an edge s -> s' exists when s' differs
/// from s only in agent i's strategy, s'^i is a best response to s^{-i}, and
/// J^i(s') > J^i(s) beyond the comparison margin.
pub fn build_sbr_graph(meta: &MetaGame, tie_tol: f64) -> Result<SbrGraph> {
    build_sbr_graph_capped(meta, tie_tol, DEFAULT_GRAPH_CAP)
}

pub fn build_sbr_graph_capped(meta: &MetaGame, tie_tol: f64, cap: usize) -> Result<SbrGraph> {
    if meta.size() > cap {
        return Err(Error::CapExceeded {
            what: "profile space",
            size: meta.size(),
            cap,
        });
    }
    if !(tie_tol >= 0.0) {
        return Err(Error::InvalidArgument("tie tolerance must be non-negative".into()));
    }
    let space = meta.space();
    let mut succ = vec![Vec::new(); meta.size()];
    for (s, out) in succ.iter_mut().enumerate() {
        for i in 0..meta.agents() {
            for k in best_responses(meta, i, s, tie_tol) {
                let t = space.with_strategy(s, i, k);
                if t != s && meta.strictly_prefers(i, s, t, tie_tol) {
                    out.push(Edge {
                        to: t,
                        deviator: Some(i),
                    });
                }
            }
        }
    }
    let labels = (0..meta.size()).map(|p| meta.profile_label(p)).collect();
    Ok(SbrGraph::assemble(labels, succ, None))
}

/// Profiles from which no agent has a strictly improving unilateral deviation.
pub fn pure_nash(meta: &MetaGame, tie_tol: f64) -> Vec<usize> {
    let space = meta.space();
    (0..meta.size())
        .filter(|&s| {
            (0..meta.agents())
                .all(|i| space.deviations(s, i).all(|t| !meta.strictly_prefers(i, s, t, tie_tol)))
        })
        .collect()
}

/// A sink strongly connected component of the strict best response graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkEquilibrium {
    pub id: usize,
    /// Sorted profile indices.
    pub members: Vec<usize>,
}

impl SinkEquilibrium {
    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// Adjacency of the induced subgraph in local indices (position in `members`).
    pub fn induced_successors(&self, graph: &SbrGraph) -> Vec<Vec<usize>> {
        self.members
            .iter()
            .map(|&v| {
                graph
                    .successors(v)
                    .iter()
                    .filter_map(|e| self.members.binary_search(&e.to).ok())
                    .collect()
            })
            .collect()
    }
}

/// Sink equilibria ordered by their smallest member; ids follow that order.
pub fn sink_equilibria(graph: &SbrGraph) -> Vec<SinkEquilibrium> {
    graph
        .sink_components
        .iter()
        .enumerate()
        .map(|(id, &c)| {
            let mut members = graph.components[c].clone();
            members.sort_unstable();
            SinkEquilibrium { id, members }
        })
        .collect()
}

/// Sink id per node, `None` for nodes outside every sink.
pub fn sink_membership(graph: &SbrGraph, sinks: &[SinkEquilibrium]) -> Vec<Option<usize>> {
    let mut out = vec![None; graph.node_count()];
    for q in sinks {
        for &v in &q.members {
            out[v] = Some(q.id);
        }
    }
    out
}

/// Whether consecutive profiles follow graph edges, a pure Nash equilibrium
/// being allowed to repeat itself.
pub fn is_sbrp(graph: &SbrGraph, sequence: &[usize]) -> Result<bool> {
    if sequence.is_empty() {
        return Err(Error::InvalidArgument("empty profile sequence".into()));
    }
    if let Some(&bad) = sequence.iter().find(|&&v| v >= graph.node_count()) {
        return Err(Error::UnknownProfile {
            index: bad,
            size: graph.node_count(),
        });
    }
    Ok(sequence
        .windows(2)
        .all(|w| sbrp_step(graph, w[0], w[1])))
}

#[inline]
pub(crate) fn sbrp_step(graph: &SbrGraph, from: usize, to: usize) -> bool {
    if graph.is_pne(from) {
        from == to
    } else {
        graph.has_edge(from, to)
    }
}

/// Iterative Tarjan SCC. Components are returned in reverse topological order
/// of the condensation (sink components first).
pub fn tarjan_scc<T>(succ: &[Vec<T>], target: impl Fn(&T) -> usize) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = succ.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut counter = 0;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = target(&succ[v][*pos]);
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}
