//! Perturbed strict best response dynamics with a finite memory of joint
//! strategies and their payoffs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::{best_responses, MetaGame, EXACT_TIE_TOL};
use crate::metrics::{mean_weight, strategy_performance, WeightVector};
use crate::response_graph::{build_sbr_graph, sbrp_step, sink_equilibria, sink_membership, SbrGraph, SinkEquilibrium};
use crate::rng;

/// Exponential feasible function `f(M) = base^{x/delta}` where x is the
/// weighted payoff of M averaged over its columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleFunction {
    delta: f64,
    sinks: usize,
    agents: usize,
    weights: WeightVector,
    base: f64,
}

impl FeasibleFunction {
    /// Default base v*n - n + 2 for `sinks` = v sink equilibria and n agents.
    pub fn new(delta: f64, sinks: usize, weights: WeightVector) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        if sinks == 0 {
            return Err(Error::InvalidArgument("sink count must be at least 1".into()));
        }
        let agents = weights.len();
        let base = (sinks * agents - agents + 2) as f64;
        Ok(FeasibleFunction {
            delta,
            sinks,
            agents,
            weights,
            base,
        })
    }

    /// Uses the number of sink equilibria of the game's strict best response graph.
    pub fn for_game(meta: &MetaGame, delta: f64, weights: WeightVector) -> Result<Self> {
        if weights.len() != meta.agents() {
            return Err(Error::DimensionMismatch {
                expected: meta.agents(),
                got: weights.len(),
            });
        }
        let g = build_sbr_graph(meta, EXACT_TIE_TOL)?;
        Self::new(delta, sink_equilibria(&g).len(), weights)
    }

    /// Replaces the base; it must exceed v*n - n + 1 for the growth condition.
    pub fn with_base(mut self, base: f64) -> Result<Self> {
        if !(base > self.growth_factor()) {
            return Err(Error::InvalidArgument(format!(
                "base {base} must exceed {}",
                self.growth_factor()
            )));
        }
        self.base = base;
        Ok(self)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn sinks(&self) -> usize {
        self.sinks
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Lower bound v*n - n + 1 on f(x + delta) / f(x).
    pub fn growth_factor(&self) -> f64 {
        (self.sinks * self.agents - self.agents + 1) as f64
    }

    /// f_delta(x) = base^{x/delta}.
    pub fn delta_function(&self, x: f64) -> f64 {
        self.base.powf(x / self.delta)
    }

    /// Weighted column average x of a payoff matrix given as columns.
    pub fn column_average(&self, columns: &[Vec<f64>]) -> Result<f64> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("payoff matrix has no columns".into()));
        }
        let w = columns
            .iter()
            .map(|c| strategy_performance(c, &self.weights))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean_weight(w))
    }

    /// kappa = f(M).
    pub fn eval(&self, columns: &[Vec<f64>]) -> Result<f64> {
        Ok(self.delta_function(self.column_average(columns)?))
    }
}

/// Memory window (oldest first) and its payoff columns. During warm-up the
/// window holds fewer than m profiles and the missing columns are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryState {
    window: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
    memory: usize,
}

impl HistoryState {
    /// State right after initialization: zero payoffs with `s1` stored rightmost.
    pub fn initial(meta: &MetaGame, memory: usize, s1: usize) -> Result<Self> {
        if memory == 0 {
            return Err(Error::InvalidArgument("memory length must be at least 1".into()));
        }
        meta.space().check(s1)?;
        let mut payoffs = vec![vec![0.0; meta.agents()]; memory - 1];
        payoffs.push(meta.payoff(s1).to_vec());
        Ok(HistoryState {
            window: vec![s1],
            payoffs,
            memory,
        })
    }

    /// A full window with exact payoff columns.
    pub fn from_window(meta: &MetaGame, window: &[usize]) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::InvalidArgument("window must be nonempty".into()));
        }
        for &s in window {
            meta.space().check(s)?;
        }
        Ok(HistoryState {
            window: window.to_vec(),
            payoffs: window.iter().map(|&s| meta.payoff(s).to_vec()).collect(),
            memory: window.len(),
        })
    }

    pub fn window(&self) -> &[usize] {
        &self.window
    }

    pub fn payoffs(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.memory
    }

    pub fn rightmost(&self) -> usize {
        *self.window.last().expect("window is nonempty")
    }

    fn push(&mut self, profile: usize, payoff: &[f64]) {
        if self.window.len() == self.memory {
            self.window.remove(0);
        }
        self.window.push(profile);
        self.payoffs.remove(0);
        self.payoffs.push(payoff.to_vec());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Empirical,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "empirical" => Ok(Mode::Empirical),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode '{other}' (expected exact or empirical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbrdConfig {
    pub epsilon: f64,
    pub memory: usize,
    pub mode: Mode,
    /// Monte-Carlo episodes per profile in empirical mode.
    pub episodes: usize,
    pub seed: u64,
    pub tie_tol: f64,
}

impl SbrdConfig {
    pub fn exact(epsilon: f64, memory: usize, seed: u64) -> Self {
        SbrdConfig {
            epsilon,
            memory,
            mode: Mode::Exact,
            episodes: 0,
            seed,
            tie_tol: EXACT_TIE_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.memory == 0 {
            return Err(Error::InvalidArgument("memory length must be at least 1".into()));
        }
        if self.mode == Mode::Empirical && self.episodes == 0 {
            return Err(Error::InvalidArgument("empirical mode needs at least one episode".into()));
        }
        if !(self.tie_tol >= 0.0) {
            return Err(Error::InvalidArgument("tie tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub tau: u64,
    pub kappa: f64,
    pub eps_bar: f64,
    pub agent: usize,
    /// Which agents drew a uniform strategy.
    pub explored: Vec<bool>,
    pub proposal: usize,
    pub history_explored: bool,
    pub appended: Option<usize>,
}

// stream roles; agent i uses AGENT_ROLE + i
const SELECT_ROLE: u64 = 0;
const HISTORY_ROLE: u64 = 1;
const AGENT_ROLE: u64 = 2;

/// One phase of the dynamics. Randomness comes from streams keyed by
/// `(seed, tau, role)`.
pub fn sbrd_step(
    state: &mut HistoryState,
    cfg: &SbrdConfig,
    meta: &MetaGame,
    graph: &SbrGraph,
    f: &FeasibleFunction,
    tau: u64,
) -> Result<StepLog> {
    let space = meta.space();
    let n = meta.agents();
    let s = state.rightmost();
    let kappa = f.eval(&state.payoffs)?;
    let eps_bar = if cfg.epsilon == 0.0 { 0.0 } else { cfg.epsilon.powf(kappa) };

    let j = rng::stream(cfg.seed, &[tau, SELECT_ROLE]).gen_range(0..n);
    let mut explored = vec![false; n];
    let mut next = space.decode(s);
    for i in 0..n {
        let mut r = rng::stream(cfg.seed, &[tau, AGENT_ROLE + i as u64]);
        if r.gen::<f64>() < eps_bar {
            explored[i] = true;
            next[i] = r.gen_range(0..space.dims()[i]);
        } else if i == j {
            let br = best_responses(meta, j, s, cfg.tie_tol);
            next[i] = br[r.gen_range(0..br.len())];
        }
    }
    let proposal = space.encode(&next);

    let history_explored = rng::stream(cfg.seed, &[tau, HISTORY_ROLE]).gen::<f64>() < eps_bar;
    let appended = if history_explored {
        Some(proposal)
    } else if graph.is_pne(s) {
        Some(s)
    } else if meta.strictly_prefers(j, s, proposal, cfg.tie_tol) {
        Some(proposal)
    } else {
        None
    };
    if let Some(a) = appended {
        state.push(a, meta.payoff(a));
    }
    Ok(StepLog {
        tau,
        kappa,
        eps_bar,
        agent: j,
        explored,
        proposal,
        history_explored,
        appended,
    })
}

/// Sink id whose recurrent class contains `window`: a full window of profiles
/// inside one sink, consecutive pairs following the strict best response path rule.
pub fn rcc_of_window(graph: &SbrGraph, sink_of: &[Option<usize>], window: &[usize]) -> Option<usize> {
    let first = sink_of[*window.first()?]?;
    if window.iter().all(|&v| sink_of[v] == Some(first)) && window.windows(2).all(|w| sbrp_step(graph, w[0], w[1])) {
        Some(first)
    } else {
        None
    }
}

/// Visit counts of a trajectory after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub steps: u64,
    pub counted: u64,
    /// Rightmost profile of the window, per profile.
    pub profile_visits: Vec<u64>,
    /// Rightmost profile inside sink i.
    pub sink_visits: Vec<u64>,
    /// Whole window inside the recurrent class of sink i.
    pub rcc_visits: Vec<u64>,
    /// First step after which the window was in a recurrent class.
    pub absorbed_at: Option<u64>,
    /// Steps after absorption spent outside the class first entered.
    pub rcc_exits: u64,
    pub final_window: Vec<usize>,
}

impl TrajectorySummary {
    fn empty(profiles: usize, sinks: usize) -> Self {
        TrajectorySummary {
            steps: 0,
            counted: 0,
            profile_visits: vec![0; profiles],
            sink_visits: vec![0; sinks],
            rcc_visits: vec![0; sinks],
            absorbed_at: None,
            rcc_exits: 0,
            final_window: Vec::new(),
        }
    }

    /// Pools the counts of two runs; the final window is taken from `other`.
    pub fn merge(mut self, other: &TrajectorySummary) -> Result<Self> {
        if self.profile_visits.len() != other.profile_visits.len() || self.sink_visits.len() != other.sink_visits.len() {
            return Err(Error::DimensionMismatch {
                expected: self.profile_visits.len(),
                got: other.profile_visits.len(),
            });
        }
        self.steps += other.steps;
        self.counted += other.counted;
        for (a, b) in self.profile_visits.iter_mut().zip(&other.profile_visits) {
            *a += b;
        }
        for (a, b) in self.sink_visits.iter_mut().zip(&other.sink_visits) {
            *a += b;
        }
        for (a, b) in self.rcc_visits.iter_mut().zip(&other.rcc_visits) {
            *a += b;
        }
        self.absorbed_at = match (self.absorbed_at, other.absorbed_at) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        self.rcc_exits += other.rcc_exits;
        self.final_window = other.final_window.clone();
        Ok(self)
    }

    pub fn frequency(&self, visits: u64) -> f64 {
        if self.counted == 0 {
            0.0
        } else {
            visits as f64 / self.counted as f64
        }
    }
}

/// The dynamics bound to one game: payoff table (estimated in empirical
/// mode), strict best response graph, sinks and feasible function.
#[derive(Debug, Clone)]
pub struct Sbrd {
    meta: MetaGame,
    graph: SbrGraph,
    sinks: Vec<SinkEquilibrium>,
    sink_of: Vec<Option<usize>>,
    f: FeasibleFunction,
    cfg: SbrdConfig,
}

impl Sbrd {
    pub fn new(meta: &MetaGame, f: FeasibleFunction, cfg: SbrdConfig) -> Result<Self> {
        cfg.validate()?;
        if f.agents() != meta.agents() {
            return Err(Error::DimensionMismatch {
                expected: meta.agents(),
                got: f.agents(),
            });
        }
        let meta = match cfg.mode {
            Mode::Exact => meta.clone(),
            Mode::Empirical => meta.estimated(cfg.episodes, cfg.seed)?,
        };
        let graph = build_sbr_graph(&meta, cfg.tie_tol)?;
        let sinks = sink_equilibria(&graph);
        let sink_of = sink_membership(&graph, &sinks);
        Ok(Sbrd {
            meta,
            graph,
            sinks,
            sink_of,
            f,
            cfg,
        })
    }

    pub fn meta(&self) -> &MetaGame {
        &self.meta
    }

    pub fn graph(&self) -> &SbrGraph {
        &self.graph
    }

    pub fn sinks(&self) -> &[SinkEquilibrium] {
        &self.sinks
    }

    pub fn config(&self) -> &SbrdConfig {
        &self.cfg
    }

    /// Initial state from `s1`, or from a uniformly drawn profile.
    pub fn initial_state(&self, s1: Option<usize>) -> Result<HistoryState> {
        let s1 = match s1 {
            Some(s) => s,
            None => rng::stream(self.cfg.seed, &[u64::MAX]).gen_range(0..self.meta.size()),
        };
        HistoryState::initial(&self.meta, self.cfg.memory, s1)
    }

    pub fn step(&self, state: &mut HistoryState, tau: u64) -> Result<StepLog> {
        sbrd_step(state, &self.cfg, &self.meta, &self.graph, &self.f, tau)
    }

    pub fn rcc_of(&self, state: &HistoryState) -> Option<usize> {
        if !state.is_full() {
            return None;
        }
        rcc_of_window(&self.graph, &self.sink_of, state.window())
    }

    /// Runs `steps` phases. Counting starts once tau exceeds both `burn_in`
    /// and the memory length.
    pub fn run(&self, steps: u64, burn_in: u64, initial: Option<usize>) -> Result<TrajectorySummary> {
        if steps == 0 {
            return Err(Error::InvalidArgument("at least one step is required".into()));
        }
        let mut state = self.initial_state(initial)?;
        let mut out = TrajectorySummary::empty(self.meta.size(), self.sinks.len());
        let start = burn_in.max(self.cfg.memory as u64);
        let mut absorbed: Option<usize> = None;
        for tau in 1..=steps {
            self.step(&mut state, tau)?;
            let rcc = self.rcc_of(&state);
            match absorbed {
                None => {
                    if let Some(c) = rcc {
                        absorbed = Some(c);
                        out.absorbed_at = Some(tau);
                    }
                }
                Some(c) => {
                    if rcc != Some(c) {
                        out.rcc_exits += 1;
                    }
                }
            }
            if tau > start {
                out.counted += 1;
                let s = state.rightmost();
                out.profile_visits[s] += 1;
                if let Some(q) = self.sink_of[s] {
                    out.sink_visits[q] += 1;
                }
                if let Some(c) = rcc {
                    out.rcc_visits[c] += 1;
                }
            }
        }
        out.steps = steps;
        out.final_window = state.window().to_vec();
        Ok(out)
    }
}
