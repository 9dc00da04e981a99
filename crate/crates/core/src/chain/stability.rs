//! Stochastic stability over an epsilon grid and the checks of the selection
//! theorems on a concrete game.

use serde::{Deserialize, Serialize};

use super::{
    decompose_window, enumerate_history_chain, rccs, resistance_graph, stationary_distribution, stationary_residual,
    stochastic_potentials, HistorySpace, Rcc,
};
use crate::dynamics::FeasibleFunction;
use crate::error::{Error, Result};
use crate::game_model::{MetaGame, EXACT_TIE_TOL};
use crate::metrics::{cycle_metric, cycle_length_bound, memory_metric, node_weights, MetricKind, WeightVector, DEFAULT_EXACT_CAP};
use crate::response_graph::{build_sbr_graph, sbrp_step, sink_equilibria};

pub const EPSILON_GRID: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
/// Extrapolated mass above which a state or profile counts as recorded.
pub const LIMIT_MASS_THRESHOLD: f64 = 1e-3;
// log-log slope over the last two grid points beyond which mass is taken to vanish
const DECAY_SLOPE: f64 = 0.25;
const GAMMA_REL_TOL: f64 = 1e-9;
const GAMMA_EQUAL_TOL: f64 = 1e-12;
const DECOMPOSITION_MAX_MEMORY: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RccSummary {
    pub sink_id: usize,
    /// History state indices.
    pub states: Vec<usize>,
    /// W(Y) = min over member windows of W(h).
    pub performance: f64,
    /// Sum over the other classes of their smallest kappa.
    pub gamma_bar: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub memory: usize,
    pub epsilon_grid: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_min: f64,
    /// argmin of gamma.
    pub stable_set: Vec<usize>,
    pub rccs: Vec<RccSummary>,
    /// Stationary distribution per grid point.
    pub pi: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// `rcc_mass[k][i]`: mass of class i at grid point k.
    pub rcc_mass: Vec<Vec<f64>>,
    /// Extrapolated limit of pi as epsilon goes to 0.
    pub limit: Vec<f64>,
    /// Limit frequency of each profile in the memory.
    pub profile_limit: Vec<f64>,
    /// States with limit mass above the threshold are all in the stable set,
    /// and no stable state has vanishing limit mass.
    pub limit_agrees: bool,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("epsilon grid needs at least two points".into()));
    }
    if grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "epsilon grid must be strictly decreasing inside (0, 1)".into(),
        ));
    }
    Ok(())
}

/// Limit of pi from its last two grid values: a state whose mass falls at
/// least like epsilon^0.25 is taken to vanish, others keep their value at the
/// smallest epsilon. The result is renormalized.
pub fn extrapolate_limit(grid: &[f64], pis: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    if pis.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: pis.len(),
        });
    }
    let k = grid.len();
    let (ea, eb) = (grid[k - 2], grid[k - 1]);
    let (pa, pb) = (&pis[k - 2], &pis[k - 1]);
    let mut limit: Vec<f64> = pa
        .iter()
        .zip(pb)
        .map(|(&a, &b)| {
            if b <= 0.0 {
                return 0.0;
            }
            if a <= 0.0 {
                return b;
            }
            let slope = (a.ln() - b.ln()) / (ea.ln() - eb.ln());
            if slope >= DECAY_SLOPE {
                0.0
            } else {
                b
            }
        })
        .collect();
    let total: f64 = limit.iter().sum();
    if total > 0.0 {
        for v in limit.iter_mut() {
            *v /= total;
        }
    }
    Ok(limit)
}

/// Frequency of each profile in the memory: sum_h pi(h) count(s in h) / m.
pub fn profile_mass(space: &HistorySpace, state_mass: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.profiles()];
    let m = space.memory() as f64;
    for (h, &p) in state_mass.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for s in space.decode(h) {
            out[s] += p / m;
        }
    }
    out
}

fn gamma_tol(g: f64) -> f64 {
    GAMMA_REL_TOL * g.abs().max(1.0)
}

pub fn stochastically_stable(
    meta: &MetaGame,
    memory: usize,
    f: &FeasibleFunction,
    grid: &[f64],
    cap: usize,
) -> Result<StabilityReport> {
    check_grid(grid)?;
    let graph = build_sbr_graph(meta, EXACT_TIE_TOL)?;
    let sinks = sink_equilibria(&graph);
    let classes = rccs(&graph, &sinks, memory)?;
    let rg = resistance_graph(meta, &graph, memory, f, EXACT_TIE_TOL, cap)?;
    let space = rg.space;
    let gamma = stochastic_potentials(&rg)?;
    let gamma_min = gamma.iter().copied().fold(f64::INFINITY, f64::min);
    let stable_set: Vec<usize> = (0..gamma.len())
        .filter(|&h| gamma[h] <= gamma_min + gamma_tol(gamma_min))
        .collect();

    let w = node_weights(meta, f.weights())?;
    let class_states: Vec<Vec<usize>> = classes.iter().map(|c| c.states(&space)).collect();
    let min_kappa: Vec<f64> = class_states
        .iter()
        .map(|st| st.iter().map(|&h| rg.kappa[h]).fold(f64::INFINITY, f64::min))
        .collect();
    let summaries: Vec<RccSummary> = classes
        .iter()
        .zip(&class_states)
        .enumerate()
        .map(|(i, (c, st))| RccSummary {
            sink_id: c.sink_id,
            states: st.clone(),
            performance: c.performance(&w),
            gamma_bar: min_kappa
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, k)| k)
                .sum(),
            gamma_min: st.iter().map(|&h| gamma[h]).fold(f64::INFINITY, f64::min),
            gamma_max: st.iter().map(|&h| gamma[h]).fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();

    let mut pi = Vec::with_capacity(grid.len());
    let mut residuals = Vec::with_capacity(grid.len());
    for &eps in grid {
        let chain = enumerate_history_chain(meta, &graph, memory, eps, f, cap)?;
        let p = stationary_distribution(&chain)?;
        residuals.push(stationary_residual(&chain, &p));
        pi.push(p);
    }
    let rcc_mass = pi
        .iter()
        .map(|p| class_states.iter().map(|st| st.iter().map(|&h| p[h]).sum()).collect())
        .collect();
    let limit = extrapolate_limit(grid, &pi)?;
    let profile_limit = profile_mass(&space, &limit);
    let limit_agrees = (0..limit.len()).all(|h| limit[h] <= LIMIT_MASS_THRESHOLD || stable_set.binary_search(&h).is_ok())
        && stable_set.iter().all(|&h| limit[h] > 0.0);

    Ok(StabilityReport {
        memory,
        epsilon_grid: grid.to_vec(),
        gamma,
        gamma_min,
        stable_set,
        rccs: summaries,
        pi,
        residuals,
        rcc_mass,
        limit,
        profile_limit,
        limit_agrees,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Precondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremInputs {
    pub kind: MetricKind,
    pub memory: usize,
    pub delta: f64,
    /// Metric gap of the best sink; when absent, `delta_bar` selects the
    /// approximation statements instead.
    pub delta0: Option<f64>,
    pub delta_bar: Option<f64>,
    pub weights: WeightVector,
    pub epsilon_grid: Vec<f64>,
    pub state_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub inputs: TheoremInputs,
    pub j_max: f64,
    pub cycle_length_bound: usize,
    /// Memory bound required by the cycle-based statements.
    pub m_bar: Option<f64>,
    /// Memory from which W(Y) is within delta of the cycle-based metric.
    pub performance_m_bar: f64,
    pub sink_metrics: Vec<f64>,
    pub best_sink: Option<usize>,
    pub preconditions: Vec<String>,
    pub checks: Vec<Check>,
    pub stability: Option<StabilityReport>,
    pub verdict: Verdict,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn verify_theorems(meta: &MetaGame, inputs: &TheoremInputs) -> Result<TheoremReport> {
    let m = inputs.memory;
    let delta = inputs.delta;
    if m == 0 {
        return Err(Error::InvalidArgument("memory length must be at least 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if inputs.delta0.is_none() && inputs.delta_bar.is_none() {
        return Err(Error::InvalidArgument("either delta0 or delta-bar must be given".into()));
    }
    check_grid(&inputs.epsilon_grid)?;
    let graph = build_sbr_graph(meta, EXACT_TIE_TOL)?;
    let sinks = sink_equilibria(&graph);
    let w = node_weights(meta, &inputs.weights)?;
    let cyc = cycle_metric(&graph, &sinks, &w)?;
    let mem = memory_metric(&graph, &sinks, m, &w)?;
    let metric = match inputs.kind {
        MetricKind::Cycle => &cyc,
        MetricKind::Memory => &mem,
    };
    let l = cycle_length_bound(&graph, &sinks, DEFAULT_EXACT_CAP);
    let j_max = meta.max_payoff();
    let best = metric.per_sink.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let at_max: Vec<usize> = (0..sinks.len())
        .filter(|&i| metric.per_sink[i] >= best - 1e-12)
        .collect();

    let mut pre = Vec::new();
    if inputs.kind == MetricKind::Cycle && meta.min_payoff() < 0.0 {
        pre.push(format!(
            "payoffs must be non-negative for the cycle-based statements (minimum {})",
            meta.min_payoff()
        ));
    }
    if at_max.len() > 1 {
        pre.push(format!(
            "the maximum metric {best} is attained by {} sink equilibria; a unique best sink is required",
            at_max.len()
        ));
    }
    let mut m_bar = None;
    match (inputs.delta0, inputs.delta_bar) {
        (Some(d0), _) => {
            if delta >= d0 {
                pre.push(format!("delta {delta} must be below delta0 {d0}"));
            }
            if at_max.len() == 1 {
                let star = at_max[0];
                let gap = (0..sinks.len())
                    .filter(|&i| i != star)
                    .map(|i| metric.per_sink[star] - metric.per_sink[i])
                    .fold(f64::INFINITY, f64::min);
                if gap < d0 - 1e-12 {
                    pre.push(format!("metric gap {gap} of the best sink is below delta0 {d0}"));
                }
            }
            if inputs.kind == MetricKind::Cycle && delta < d0 {
                let mb = 2.0 * l as f64 * j_max / (d0 - delta);
                m_bar = Some(mb);
                if (m as f64) < mb {
                    pre.push(format!("memory {m} is below the required bound m_bar = {mb}"));
                }
            }
        }
        (None, Some(db)) => {
            if delta >= db {
                pre.push(format!("delta {delta} must be below delta-bar {db}"));
            }
            if inputs.kind == MetricKind::Cycle && delta < db {
                let mb = 2.0 * l as f64 * j_max / (db - delta);
                m_bar = Some(mb);
                if (m as f64) < mb {
                    pre.push(format!("memory {m} is below the required bound m_bar = {mb}"));
                }
            }
        }
        (None, None) => unreachable!(),
    }
    let performance_m_bar = l as f64 * j_max / delta;
    let mut report = TheoremReport {
        inputs: inputs.clone(),
        j_max,
        cycle_length_bound: l,
        m_bar,
        performance_m_bar,
        sink_metrics: metric.per_sink.clone(),
        best_sink: (at_max.len() == 1).then(|| at_max[0]),
        preconditions: pre,
        checks: Vec::new(),
        stability: None,
        verdict: Verdict::Precondition,
    };
    if !report.preconditions.is_empty() {
        return Ok(report);
    }
    let star = at_max[0];

    let f = FeasibleFunction::new(delta, sinks.len(), inputs.weights.clone())?;
    let mut checks = Vec::new();
    checks.push(check(
        "feasible_growth",
        f.delta_function(1.0 + delta) > f.growth_factor() * f.delta_function(1.0),
        format!("base {} against growth factor {}", f.base(), f.growth_factor()),
    ));

    let stab = stochastically_stable(meta, m, &f, &inputs.epsilon_grid, inputs.state_cap)?;
    let classes: Vec<Rcc> = rccs(&graph, &sinks, m)?;

    // W(Y_i) against the metrics
    let exact_memory = stab
        .rccs
        .iter()
        .all(|r| r.performance == mem.per_sink[r.sink_id]);
    checks.push(check(
        "rcc_performance_equals_memory_metric",
        exact_memory,
        format!(
            "W(Y) {:?} vs memory metric {:?}",
            stab.rccs.iter().map(|r| r.performance).collect::<Vec<_>>(),
            mem.per_sink
        ),
    ));
    if meta.min_payoff() >= 0.0 && (m as f64) >= performance_m_bar {
        let worst = stab
            .rccs
            .iter()
            .map(|r| (r.performance - cyc.per_sink[r.sink_id]).abs())
            .fold(0.0, f64::max);
        checks.push(check(
            "rcc_performance_near_cycle_metric",
            worst <= delta,
            format!("max |W(Y) - cycle metric| = {worst} with delta {delta}"),
        ));
    }

    // stochastic potentials on the recurrent classes
    let spread = stab
        .rccs
        .iter()
        .map(|r| r.gamma_max - r.gamma_min)
        .fold(0.0, f64::max);
    checks.push(check(
        "potential_constant_on_classes",
        spread <= GAMMA_EQUAL_TOL,
        format!("largest spread of gamma inside a class {spread}"),
    ));
    let n1 = (meta.agents() + 1) as f64;
    let bounds = stab.rccs.iter().all(|r| {
        r.gamma_min >= r.gamma_bar - gamma_tol(r.gamma_bar) && r.gamma_max <= n1 * r.gamma_bar + gamma_tol(r.gamma_bar)
    });
    checks.push(check(
        "potential_bounds",
        bounds,
        format!(
            "(gamma_bar, gamma) per class: {:?}",
            stab.rccs.iter().map(|r| (r.gamma_bar, r.gamma_min)).collect::<Vec<_>>()
        ),
    ));

    if m <= DECOMPOSITION_MAX_MEMORY {
        let ok = classes.iter().all(|c| {
            c.windows.iter().all(|win| {
                let (cycles, rest) = decompose_window(win);
                let closed = cycles.iter().all(|cy| {
                    (0..cy.len()).all(|k| sbrp_step(&graph, cy[k], cy[(k + 1) % cy.len()]))
                });
                let total: usize = cycles.iter().map(Vec::len).sum::<usize>() + rest.len();
                closed && total == m && rest.len() <= l
            })
        });
        checks.push(check(
            "window_decomposition",
            ok,
            format!("every class window splits into directed cycles and a remainder of at most {l} profiles"),
        ));
    }

    checks.push(check(
        "limit_matches_potential",
        stab.limit_agrees,
        format!("{} stable states", stab.stable_set.len()),
    ));

    let recorded: Vec<usize> = (0..meta.size())
        .filter(|&s| stab.profile_limit[s] > LIMIT_MASS_THRESHOLD)
        .collect();
    if inputs.delta0.is_some() {
        let y_star = &stab.rccs[star].states;
        checks.push(check(
            "stable_set_is_best_class",
            &stab.stable_set == y_star,
            format!("stable set {:?}, best class {:?}", stab.stable_set, y_star),
        ));
        let q_star = &sinks[star];
        let recorded_ok = recorded.iter().all(|&s| q_star.contains(s))
            && q_star.members.iter().all(|&s| stab.profile_limit[s] > 0.0);
        checks.push(check(
            "recorded_profiles_are_best_sink",
            recorded_ok,
            format!(
                "recorded {:?}, best sink {:?}",
                recorded.iter().map(|&s| meta.profile_label(s)).collect::<Vec<_>>(),
                q_star.members.iter().map(|&s| meta.profile_label(s)).collect::<Vec<_>>()
            ),
        ));
    } else {
        let db = inputs.delta_bar.expect("checked above");
        let worst = recorded
            .iter()
            .map(|&s| metric.per_profile[s])
            .fold(f64::INFINITY, f64::min);
        checks.push(check(
            "recorded_profiles_within_delta_bar",
            recorded.iter().all(|&s| metric.per_profile[s] >= best - db),
            format!("worst recorded metric {worst}, maximum {best}, delta-bar {db}"),
        ));
    }

    report.verdict = if checks.iter().all(|c| c.passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.checks = checks;
    report.stability = Some(stab);
    Ok(report)
}
