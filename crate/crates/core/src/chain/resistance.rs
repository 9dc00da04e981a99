//! Exploration numbers and transition resistances r(h, h') = e(s, s') f(p(h)).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HistorySpace, ProfileData};
use crate::dynamics::FeasibleFunction;
use crate::error::Result;
use crate::game_model::{best_responses, MetaGame};
use crate::response_graph::SbrGraph;

/// Minimum number of explorations (agents drawing uniformly, plus the history
/// update when the recorded profile is not the one the unperturbed rule would
/// record) needed to move the rightmost profile from `s` to `s2`.
pub fn exploration_number(meta: &MetaGame, graph: &SbrGraph, s: usize, s2: usize, tie_tol: f64) -> usize {
    let br: Vec<Vec<usize>> = (0..meta.agents()).map(|j| best_responses(meta, j, s, tie_tol)).collect();
    exploration_with(meta, graph.is_pne(s), &br, s, s2, tie_tol)
}

fn exploration_with(meta: &MetaGame, pne: bool, br: &[Vec<usize>], s: usize, s2: usize, tie_tol: f64) -> usize {
    let space = meta.space();
    let a = space.decode(s);
    let b = space.decode(s2);
    (0..meta.agents())
        .map(|j| {
            let others = (0..meta.agents()).filter(|&i| i != j && a[i] != b[i]).count();
            let own = usize::from(!br[j].contains(&b[j]));
            let append = if pne {
                s2 != s
            } else {
                !meta.strictly_prefers(j, s, s2, tie_tol)
            };
            others + own + usize::from(append)
        })
        .min()
        .expect("at least one agent")
}

/// Finite resistances of all transitions h -> (h^R, x) with (h^R, x) != h.
/// Pairs without overlap have infinite resistance; self-loops are not edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceGraph {
    pub space: HistorySpace,
    pub kappa: Vec<f64>,
    /// Out-edges (h', exploration number, resistance), sorted by h'.
    pub edges: Vec<Vec<(usize, usize, f64)>>,
}

impl ResistanceGraph {
    pub fn size(&self) -> usize {
        self.space.size()
    }

    /// r(h, h'); `None` for h' = h, infinity when no single step links them.
    pub fn resistance(&self, h: usize, h2: usize) -> Option<f64> {
        if h == h2 {
            return None;
        }
        Some(
            self.edges[h]
                .binary_search_by_key(&h2, |e| e.0)
                .map_or(f64::INFINITY, |k| self.edges[h][k].2),
        )
    }
}

pub fn resistance_graph(
    meta: &MetaGame,
    graph: &SbrGraph,
    memory: usize,
    f: &FeasibleFunction,
    tie_tol: f64,
    cap: usize,
) -> Result<ResistanceGraph> {
    let space = HistorySpace::new(meta.size(), memory, cap)?;
    let data = ProfileData::new(meta, graph, f, tie_tol)?;
    // e(s, s') depends on profiles only
    let k = meta.size();
    let e: Vec<Vec<usize>> = (0..k)
        .into_par_iter()
        .map(|s| {
            (0..k)
                .map(|s2| exploration_with(meta, data.pne[s], &data.br[s], s, s2, tie_tol))
                .collect()
        })
        .collect();
    let (edges, kappa): (Vec<_>, Vec<_>) = (0..space.size())
        .into_par_iter()
        .map(|h| {
            let kappa = data.kappa(f, &space.decode(h));
            let s = space.rightmost(h);
            let mut out: Vec<(usize, usize, f64)> = (0..k)
                .map(|x| (space.shift(h, x), e[s][x]))
                .filter(|&(h2, _)| h2 != h)
                .map(|(h2, ex)| (h2, ex, if ex == 0 { 0.0 } else { ex as f64 * kappa }))
                .collect();
            out.sort_unstable_by_key(|t| t.0);
            (out, kappa)
        })
        .unzip();
    Ok(ResistanceGraph { space, kappa, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::game_model::EXACT_TIE_TOL;
    use crate::metrics::WeightVector;
    use crate::response_graph::build_sbr_graph;

    #[test]
    fn three_agent_pne_example() {
        let meta = fixtures::three_agent_pne();
        let g = build_sbr_graph(&meta, EXACT_TIE_TOL).unwrap();
        assert!(g.is_pne(0));
        // two agents leave the equilibrium to non-best responses
        let s2 = meta.space().encode(&[1, 1, 0]);
        assert_eq!(exploration_number(&meta, &g, 0, s2, EXACT_TIE_TOL), 3);
        assert_eq!(exploration_number(&meta, &g, 0, 0, EXACT_TIE_TOL), 0);
    }

    #[test]
    fn graph_edges_have_zero_exploration() {
        let meta = fixtures::fig2(0.25);
        let g = build_sbr_graph(&meta, EXACT_TIE_TOL).unwrap();
        for (s, e) in g.edges() {
            assert_eq!(exploration_number(&meta, &g, s, e.to, EXACT_TIE_TOL), 0);
        }
    }

    #[test]
    fn resistances_follow_overlap() {
        let meta = fixtures::fig2(0.25);
        let g = build_sbr_graph(&meta, EXACT_TIE_TOL).unwrap();
        let f = FeasibleFunction::for_game(&meta, 0.5, WeightVector::uniform(2)).unwrap();
        let rg = resistance_graph(&meta, &g, 2, &f, EXACT_TIE_TOL, 1000).unwrap();
        let n = meta.agents();
        for h in 0..rg.size() {
            for h2 in 0..rg.size() {
                match rg.resistance(h, h2) {
                    None => assert_eq!(h, h2),
                    Some(r) if rg.space.overlaps(h, h2) => {
                        assert!(r.is_finite());
                        assert!(r == 0.0 || (r >= rg.kappa[h] && r <= (n as f64 + 1.0) * rg.kappa[h]));
                    }
                    Some(r) => assert!(r.is_infinite()),
                }
            }
        }
    }
}
