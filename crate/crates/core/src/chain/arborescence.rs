//! Stochastic potentials: minimum-resistance spanning in-trees, found with the
//! Chu-Liu/Edmonds contraction algorithm on the reversed graph.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ResistanceGraph;
use crate::error::{Error, Result};

/// A spanning in-tree: every node except the root has one edge toward the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    pub root: usize,
    /// Next node on the way to the root, `None` for the root.
    pub next: Vec<Option<usize>>,
    /// Total weight, summed over the chosen edge weights in ascending order.
    pub cost: f64,
}

// Edges are (parent, child, weight); returns indices of the chosen edges.
fn solve(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> Option<Vec<usize>> {
    let mut best: Vec<Option<usize>> = vec![None; n];
    for (i, &(u, v, w)) in edges.iter().enumerate() {
        if u != v && v != root && best[v].map_or(true, |b| w < edges[b].2) {
            best[v] = Some(i);
        }
    }
    if (0..n).any(|v| v != root && best[v].is_none()) {
        return None;
    }
    let parent = |v: usize| edges[best[v].expect("checked above")].0;

    const NONE: usize = usize::MAX;
    let mut id = vec![NONE; n];
    let mut seen = vec![NONE; n];
    let mut cycles = 0;
    for v in 0..n {
        let mut x = v;
        while x != root && id[x] == NONE && seen[x] != v {
            seen[x] = v;
            x = parent(x);
        }
        if x != root && id[x] == NONE && seen[x] == v {
            let mut y = parent(x);
            while y != x {
                id[y] = cycles;
                y = parent(y);
            }
            id[x] = cycles;
            cycles += 1;
        }
    }
    if cycles == 0 {
        return Some((0..n).filter(|&v| v != root).map(|v| best[v].unwrap()).collect());
    }
    let in_cycle: Vec<bool> = id.iter().map(|&c| c != NONE).collect();
    let mut count = cycles;
    for c in id.iter_mut() {
        if *c == NONE {
            *c = count;
            count += 1;
        }
    }
    let mut reduced = Vec::with_capacity(edges.len());
    let mut origin = Vec::with_capacity(edges.len());
    for (i, &(u, v, w)) in edges.iter().enumerate() {
        if id[u] != id[v] {
            let w = if in_cycle[v] { w - edges[best[v].unwrap()].2 } else { w };
            reduced.push((id[u], id[v], w));
            origin.push(i);
        }
    }
    let sub = solve(count, id[root], &reduced)?;
    let mut chosen: Vec<usize> = sub.iter().map(|&k| origin[k]).collect();
    let mut entered = vec![false; n];
    for &i in &chosen {
        entered[edges[i].1] = true;
    }
    for v in 0..n {
        if in_cycle[v] && !entered[v] {
            chosen.push(best[v].unwrap());
        }
    }
    Some(chosen)
}

fn unreached(n: usize, root: usize, out: &[Vec<(usize, f64)>]) -> usize {
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, es) in out.iter().enumerate() {
        for &(u, _) in es {
            incoming[u].push(v);
        }
    }
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        for &v in &incoming[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().filter(|&&s| !s).count()
}

fn reversed(out: &[Vec<(usize, f64)>]) -> Vec<(usize, usize, f64)> {
    out.iter()
        .enumerate()
        .flat_map(|(v, es)| es.iter().filter(|e| e.1.is_finite()).map(move |&(u, w)| (u, v, w)))
        .collect()
}

fn tree_from(n: usize, root: usize, edges: &[(usize, usize, f64)], chosen: &[usize]) -> Arborescence {
    let mut next = vec![None; n];
    let mut weights: Vec<f64> = Vec::with_capacity(chosen.len());
    for &i in chosen {
        let (u, v, w) = edges[i];
        next[v] = Some(u);
        weights.push(w);
    }
    weights.sort_by(f64::total_cmp);
    Arborescence {
        root,
        next,
        cost: weights.iter().sum(),
    }
}

/// Minimum spanning in-tree rooted at `root` of a graph given by out-edges
/// (target, weight); infinite weights are dropped.
pub fn min_in_arborescence(out: &[Vec<(usize, f64)>], root: usize) -> Result<Arborescence> {
    let n = out.len();
    if root >= n {
        return Err(Error::UnknownProfile { index: root, size: n });
    }
    let edges = reversed(out);
    match solve(n, root, &edges) {
        Some(chosen) => Ok(tree_from(n, root, &edges, &chosen)),
        None => Err(Error::NoArborescence {
            root,
            unreached: unreached(n, root, out),
        }),
    }
}

fn out_edges(rg: &ResistanceGraph) -> Vec<Vec<(usize, f64)>> {
    rg.edges
        .iter()
        .map(|es| es.iter().map(|&(h, _, r)| (h, r)).collect())
        .collect()
}

/// gamma(h): minimum total resistance of a spanning in-tree rooted at h.
pub fn stochastic_potential(rg: &ResistanceGraph, h: usize) -> Result<f64> {
    Ok(min_in_arborescence(&out_edges(rg), h)?.cost)
}

/// gamma for every state, computed in parallel.
pub fn stochastic_potentials(rg: &ResistanceGraph) -> Result<Vec<f64>> {
    let out = out_edges(rg);
    let edges = reversed(&out);
    let n = out.len();
    (0..n)
        .into_par_iter()
        .map(|root| match solve(n, root, &edges) {
            Some(chosen) => Ok(tree_from(n, root, &edges, &chosen).cost),
            None => Err(Error::NoArborescence {
                root,
                unreached: unreached(n, root, &out),
            }),
        })
        .collect()
}
