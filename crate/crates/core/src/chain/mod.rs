//! Exact Markov-chain analysis of the perturbed dynamics over history states
//! H = S^m: transition matrices, recurrent classes, resistances, stochastic
//! potentials and stability.

mod arborescence;
mod resistance;
mod stability;
mod stationary;

pub use arborescence::{min_in_arborescence, stochastic_potential, stochastic_potentials, Arborescence};
pub use resistance::{exploration_number, resistance_graph, ResistanceGraph};
pub use stability::{
    extrapolate_limit, profile_mass, stochastically_stable, verify_theorems, Check, RccSummary, StabilityReport,
    TheoremInputs, TheoremReport, Verdict, EPSILON_GRID, LIMIT_MASS_THRESHOLD,
};
pub use stationary::{power_iteration, stationary_distribution, stationary_residual, DENSE_LIMIT};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::FeasibleFunction;
use crate::error::{Error, Result};
use crate::game_model::{best_responses, MetaGame, EXACT_TIE_TOL};
use crate::metrics::{mean_weight, node_weights};
use crate::response_graph::{sbrp_step, SbrGraph, SinkEquilibrium};

/// Default cap on the number of history states.
pub const DEFAULT_STATE_CAP: usize = 20_000;

/// Windows of `memory` profiles out of `profiles`, encoded in base |S| with the
/// oldest profile most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistorySpace {
    profiles: usize,
    memory: usize,
    size: usize,
    // |S|^(m-1)
    high: usize,
}

impl HistorySpace {
    pub fn new(profiles: usize, memory: usize, cap: usize) -> Result<Self> {
        if memory == 0 {
            return Err(Error::InvalidArgument("memory length must be at least 1".into()));
        }
        if profiles == 0 {
            return Err(Error::InvalidArgument("profile space is empty".into()));
        }
        let size = profiles.checked_pow(memory as u32).unwrap_or(usize::MAX);
        if size > cap {
            return Err(Error::CapExceeded {
                what: "history state space",
                size,
                cap,
            });
        }
        Ok(HistorySpace {
            profiles,
            memory,
            size,
            high: size / profiles,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn profiles(&self) -> usize {
        self.profiles
    }

    pub fn encode(&self, window: &[usize]) -> usize {
        debug_assert_eq!(window.len(), self.memory);
        window.iter().fold(0, |acc, &s| acc * self.profiles + s)
    }

    pub fn decode(&self, mut h: usize) -> Vec<usize> {
        let mut w = vec![0; self.memory];
        for slot in w.iter_mut().rev() {
            *slot = h % self.profiles;
            h /= self.profiles;
        }
        w
    }

    pub fn rightmost(&self, h: usize) -> usize {
        h % self.profiles
    }

    /// (h^R, x): drop the oldest profile and append x.
    pub fn shift(&self, h: usize, x: usize) -> usize {
        (h % self.high) * self.profiles + x
    }

    /// Whether h' = (h^R, s') for some s'.
    pub fn overlaps(&self, h: usize, h2: usize) -> bool {
        h % self.high == h2 / self.profiles
    }
}

/// Per-profile quantities shared by chain assembly and resistances.
#[derive(Debug, Clone)]
pub(crate) struct ProfileData {
    pub pne: Vec<bool>,
    /// `br[s][j]`: best responses of agent j against s.
    pub br: Vec<Vec<Vec<usize>>>,
    pub w: Vec<f64>,
}

impl ProfileData {
    pub fn new(meta: &MetaGame, graph: &SbrGraph, f: &FeasibleFunction, tie_tol: f64) -> Result<Self> {
        if graph.node_count() != meta.size() {
            return Err(Error::DimensionMismatch {
                expected: meta.size(),
                got: graph.node_count(),
            });
        }
        let br = (0..meta.size())
            .map(|s| (0..meta.agents()).map(|j| best_responses(meta, j, s, tie_tol)).collect())
            .collect();
        Ok(ProfileData {
            pne: (0..meta.size()).map(|s| graph.is_pne(s)).collect(),
            br,
            w: node_weights(meta, f.weights())?,
        })
    }

    /// kappa = f(p(h)) for a full window with exact payoff columns; evaluated
    /// exactly as [`FeasibleFunction::eval`] does.
    pub fn kappa(&self, f: &FeasibleFunction, window: &[usize]) -> f64 {
        f.delta_function(mean_weight(window.iter().map(|&s| self.w[s])))
    }
}

/// Sparse row-stochastic transition matrix over H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryChain {
    pub space: HistorySpace,
    pub epsilon: f64,
    /// Row h: (h', P_{hh'}) sorted by h'.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// kappa = f(p(h)) per state.
    pub kappa: Vec<f64>,
}

impl HistoryChain {
    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn prob(&self, h: usize, h2: usize) -> f64 {
        self.rows[h]
            .binary_search_by_key(&h2, |e| e.0)
            .map_or(0.0, |k| self.rows[h][k].1)
    }

    pub fn max_row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; n];
                for &(c, p) in r {
                    d[c] += p;
                }
                d
            })
            .collect()
    }
}

/// Transition matrix of the dynamics at base rate `epsilon`, from the exact
/// payoff table. Every step-3 and step-6 outcome is enumerated.
pub fn enumerate_history_chain(
    meta: &MetaGame,
    graph: &SbrGraph,
    memory: usize,
    epsilon: f64,
    f: &FeasibleFunction,
    cap: usize,
) -> Result<HistoryChain> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    let space = HistorySpace::new(meta.size(), memory, cap)?;
    let data = ProfileData::new(meta, graph, f, EXACT_TIE_TOL)?;
    let ps = meta.space();
    let n = meta.agents();
    let k = meta.size();

    let (rows, kappa): (Vec<_>, Vec<_>) = (0..space.size())
        .into_par_iter()
        .map(|h| {
            let window = space.decode(h);
            let s = space.rightmost(h);
            let kappa = data.kappa(f, &window);
            let eb = if epsilon == 0.0 { 0.0 } else { epsilon.powf(kappa) };
            let own = ps.decode(s);
            let mut append = vec![0.0; k];
            let mut stay = 0.0;
            for j in 0..n {
                let mut q = vec![1.0];
                for i in 0..n {
                    let d = ps.dims()[i];
                    let mut marg = vec![eb / d as f64; d];
                    if i == j {
                        let br = &data.br[s][j];
                        for &t in br {
                            marg[t] += (1.0 - eb) / br.len() as f64;
                        }
                    } else {
                        marg[own[i]] += 1.0 - eb;
                    }
                    q = q.iter().flat_map(|&a| marg.iter().map(move |&b| a * b)).collect();
                }
                let pj = 1.0 / n as f64;
                for (x, &qx) in q.iter().enumerate() {
                    if qx == 0.0 {
                        continue;
                    }
                    append[x] += pj * eb * qx;
                    let rest = pj * (1.0 - eb) * qx;
                    if data.pne[s] {
                        append[s] += rest;
                    } else if meta.strictly_prefers(j, s, x, EXACT_TIE_TOL) {
                        append[x] += rest;
                    } else {
                        stay += rest;
                    }
                }
            }
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
            for (x, &p) in append.iter().enumerate() {
                if p > 0.0 {
                    row.push((space.shift(h, x), p));
                }
            }
            if stay > 0.0 {
                row.push((h, stay));
            }
            row.sort_unstable_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            (row, kappa)
        })
        .unzip();
    Ok(HistoryChain {
        space,
        epsilon,
        rows,
        kappa,
    })
}

/// Recurrent communication class of a sink: windows of length m that are
/// strict best response paths inside the sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rcc {
    pub sink_id: usize,
    /// Windows, oldest profile first, in lexicographic order.
    pub windows: Vec<Vec<usize>>,
}

impl Rcc {
    /// W(Y) = min over member windows of W(h).
    pub fn performance(&self, node_weights: &[f64]) -> f64 {
        self.windows
            .iter()
            .map(|w| window_performance(w, node_weights))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn states(&self, space: &HistorySpace) -> Vec<usize> {
        let mut s: Vec<usize> = self.windows.iter().map(|w| space.encode(w)).collect();
        s.sort_unstable();
        s
    }
}

/// W(h): mean node weight of the window.
pub fn window_performance(window: &[usize], node_weights: &[f64]) -> f64 {
    mean_weight(window.iter().map(|&s| node_weights[s]))
}

pub fn rcc_of_sink(graph: &SbrGraph, sink: &SinkEquilibrium, memory: usize) -> Result<Rcc> {
    if memory == 0 {
        return Err(Error::InvalidArgument("memory length must be at least 1".into()));
    }
    let mut windows = Vec::new();
    let mut stack: Vec<Vec<usize>> = sink.members.iter().rev().map(|&s| vec![s]).collect();
    while let Some(path) = stack.pop() {
        if path.len() == memory {
            windows.push(path);
            continue;
        }
        let last = *path.last().expect("nonempty");
        let mut next: Vec<usize> = if graph.is_pne(last) {
            vec![last]
        } else {
            graph
                .successors(last)
                .iter()
                .map(|e| e.to)
                .filter(|&t| sink.contains(t) && sbrp_step(graph, last, t))
                .collect()
        };
        next.sort_unstable();
        next.dedup();
        for &t in next.iter().rev() {
            let mut p = path.clone();
            p.push(t);
            stack.push(p);
        }
    }
    Ok(Rcc {
        sink_id: sink.id,
        windows,
    })
}

pub fn rccs(graph: &SbrGraph, sinks: &[SinkEquilibrium], memory: usize) -> Result<Vec<Rcc>> {
    sinks.iter().map(|q| rcc_of_sink(graph, q, memory)).collect()
}

/// Splits a window into directed cycles and a cycle-free remainder by walking
/// it and cutting out every closed loop as soon as a profile repeats.
pub fn decompose_window(window: &[usize]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut cycles = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    for &s in window {
        if let Some(pos) = path.iter().position(|&p| p == s) {
            let cycle: Vec<usize> = path.drain(pos..).collect();
            cycles.push(cycle);
        }
        path.push(s);
    }
    (cycles, path)
}
