//! Stochastic games, meta-games over stationary deterministic policies, exact
//! value functions and Monte-Carlo payoff estimates.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Default tie tolerance for exact payoff tables.
pub const EXACT_TIE_TOL: f64 = 1e-9;
/// Default cap on the number of joint profiles enumerated from a stochastic game.
pub const DEFAULT_PROFILE_CAP: usize = 4096;
/// Bound on the truncation bias of Monte-Carlo returns.
pub const TRUNCATION_BOUND: f64 = 1e-6;

/// Mixed-radix indexing of joint profiles; agent 0 is the most significant digit,
/// so nested payoff arrays `[s1][s2]...` flatten in index order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl ProfileSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGame("at least one agent is required".into()));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidGame(format!("agent {i} has an empty strategy set")));
        }
        let mut strides = vec![1; dims.len()];
        let mut size: usize = 1;
        for i in (0..dims.len()).rev() {
            strides[i] = size;
            size = size.checked_mul(dims[i]).ok_or(Error::CapExceeded {
                what: "profile space",
                size: usize::MAX,
                cap: usize::MAX,
            })?;
        }
        Ok(ProfileSpace { dims, strides, size })
    }

    pub fn agents(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn encode(&self, strategies: &[usize]) -> usize {
        debug_assert_eq!(strategies.len(), self.dims.len());
        strategies
            .iter()
            .zip(&self.strides)
            .map(|(s, st)| s * st)
            .sum()
    }

    pub fn decode(&self, profile: usize) -> Vec<usize> {
        (0..self.dims.len())
            .map(|i| self.strategy(profile, i))
            .collect()
    }

    #[inline]
    pub fn strategy(&self, profile: usize, agent: usize) -> usize {
        (profile / self.strides[agent]) % self.dims[agent]
    }

    #[inline]
    pub fn with_strategy(&self, profile: usize, agent: usize, strategy: usize) -> usize {
        profile - self.strategy(profile, agent) * self.strides[agent]
            + strategy * self.strides[agent]
    }

    /// Profiles obtained from `profile` by changing only `agent`'s strategy,
    /// in strategy order (the profile itself included).
    pub fn deviations(&self, profile: usize, agent: usize) -> impl Iterator<Item = usize> + '_ {
        let base = profile - self.strategy(profile, agent) * self.strides[agent];
        let stride = self.strides[agent];
        (0..self.dims[agent]).map(move |k| base + k * stride)
    }

    /// Number of coordinates in which two profiles differ.
    pub fn hamming(&self, a: usize, b: usize) -> usize {
        (0..self.agents())
            .filter(|&i| self.strategy(a, i) != self.strategy(b, i))
            .count()
    }

    pub fn check(&self, profile: usize) -> Result<()> {
        if profile < self.size {
            Ok(())
        } else {
            Err(Error::UnknownProfile {
                index: profile,
                size: self.size,
            })
        }
    }
}

/// A finite discounted stochastic game.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGame {
    state_names: Vec<String>,
    action_names: Vec<Vec<String>>,
    joint_actions: ProfileSpace,
    // [x][joint action][x']
    transition: Vec<Vec<Vec<f64>>>,
    // [x][joint action][agent]
    rewards: Vec<Vec<Vec<f64>>>,
    discounts: Vec<f64>,
}

impl StochasticGame {
    pub fn new(
        state_names: Vec<String>,
        action_names: Vec<Vec<String>>,
        transition: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<Vec<f64>>>,
        discounts: Vec<f64>,
    ) -> Result<Self> {
        let n = action_names.len();
        let nx = state_names.len();
        if nx == 0 {
            return Err(Error::InvalidGame("state set is empty".into()));
        }
        let joint_actions = ProfileSpace::new(action_names.iter().map(Vec::len).collect())?;
        if discounts.len() != n {
            return Err(Error::InvalidGame(format!(
                "expected {n} discount factors, got {}",
                discounts.len()
            )));
        }
        for (i, &b) in discounts.iter().enumerate() {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidGame(format!(
                    "discount of agent {i} is {b}; it must lie in (0, 1)"
                )));
            }
        }
        if transition.len() != nx || rewards.len() != nx {
            return Err(Error::InvalidGame("transition/reward tables must cover every state".into()));
        }
        for x in 0..nx {
            if transition[x].len() != joint_actions.size() || rewards[x].len() != joint_actions.size() {
                return Err(Error::InvalidGame(format!(
                    "state {} does not define every joint action",
                    state_names[x]
                )));
            }
            for a in 0..joint_actions.size() {
                let row = &transition[x][a];
                if row.len() != nx {
                    return Err(Error::InvalidGame(format!(
                        "transition row ({}, {a}) has {} entries, expected {nx}",
                        state_names[x],
                        row.len()
                    )));
                }
                if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return Err(Error::InvalidGame(format!(
                        "transition row ({}, {a}) has a negative or non-finite entry",
                        state_names[x]
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidGame(format!(
                        "transition row ({}, {a}) sums to {sum}, not 1",
                        state_names[x]
                    )));
                }
                let r = &rewards[x][a];
                if r.len() != n || r.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidGame(format!(
                        "reward entry ({}, {a}) must hold {n} finite values",
                        state_names[x]
                    )));
                }
            }
        }
        Ok(StochasticGame {
            state_names,
            action_names,
            joint_actions,
            transition,
            rewards,
            discounts,
        })
    }

    pub fn agents(&self) -> usize {
        self.action_names.len()
    }

    pub fn states(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn action_names(&self) -> &[Vec<String>] {
        &self.action_names
    }

    pub fn joint_actions(&self) -> &ProfileSpace {
        &self.joint_actions
    }

    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    pub fn transition(&self, x: usize, joint_action: usize) -> &[f64] {
        &self.transition[x][joint_action]
    }

    pub fn reward(&self, x: usize, joint_action: usize, agent: usize) -> f64 {
        self.rewards[x][joint_action][agent]
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards
            .iter()
            .flatten()
            .flatten()
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// Whether every transition probability is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.transition
            .iter()
            .flatten()
            .flatten()
            .all(|&p| p == 0.0 || p == 1.0)
    }

    /// Number of stationary deterministic policies of `agent`: |A^i|^|X|.
    pub fn policy_count(&self, agent: usize) -> Option<usize> {
        let a = self.action_names[agent].len();
        (0..self.states()).try_fold(1usize, |acc, _| acc.checked_mul(a))
    }

    /// All stationary deterministic policies of `agent`, as action index per state.
    pub fn enumerate_policies(&self, agent: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
        let count = self.policy_count(agent).unwrap_or(usize::MAX);
        if count > cap {
            return Err(Error::CapExceeded {
                what: "policy set",
                size: count,
                cap,
            });
        }
        let space = ProfileSpace::new(vec![self.action_names[agent].len(); self.states()])?;
        Ok((0..count).map(|k| space.decode(k)).collect())
    }

    fn joint_action(&self, policy: &JointPolicy, x: usize) -> usize {
        let acts: Vec<usize> = policy.actions.iter().map(|p| p[x]).collect();
        self.joint_actions.encode(&acts)
    }
}

/// One stationary deterministic policy per agent: `actions[i][x]` is agent i's
/// action index in state x.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPolicy {
    pub actions: Vec<Vec<usize>>,
}

impl JointPolicy {
    pub fn new(actions: Vec<Vec<usize>>) -> Self {
        JointPolicy { actions }
    }

    pub fn validate(&self, game: &StochasticGame) -> Result<()> {
        if self.actions.len() != game.agents() {
            return Err(Error::DimensionMismatch {
                expected: game.agents(),
                got: self.actions.len(),
            });
        }
        for (i, p) in self.actions.iter().enumerate() {
            if p.len() != game.states() {
                return Err(Error::DimensionMismatch {
                    expected: game.states(),
                    got: p.len(),
                });
            }
            if let Some(&a) = p.iter().find(|&&a| a >= game.action_names[i].len()) {
                return Err(Error::InvalidArgument(format!(
                    "agent {i} policy uses action index {a}, but only {} actions exist",
                    game.action_names[i].len()
                )));
            }
        }
        Ok(())
    }
}

/// Value function of `agent` under a joint policy, by a direct solve of
/// `(I - beta P_s) V = R_s`.
pub fn policy_value(game: &StochasticGame, policy: &JointPolicy, agent: usize) -> Result<Vec<f64>> {
    policy.validate(game)?;
    if agent >= game.agents() {
        return Err(Error::InvalidArgument(format!("no agent {agent}")));
    }
    let nx = game.states();
    let beta = game.discounts[agent];
    let mut a = DMatrix::<f64>::identity(nx, nx);
    let mut r = DVector::<f64>::zeros(nx);
    for x in 0..nx {
        let ja = game.joint_action(policy, x);
        r[x] = game.reward(x, ja, agent);
        for (y, &p) in game.transition(x, ja).iter().enumerate() {
            a[(x, y)] -= beta * p;
        }
    }
    let v = a
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::NoConvergence("value system is singular".into()))?;
    Ok(v.iter().copied().collect())
}

/// Payoff estimate with per-agent standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffEstimate {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub episodes: usize,
    pub horizon: usize,
}

/// Smallest horizon T with beta^T * R_max / (1 - beta) <= TRUNCATION_BOUND for every agent.
pub fn truncation_horizon(game: &StochasticGame) -> usize {
    let r_max = game.max_abs_reward();
    if r_max == 0.0 {
        return 1;
    }
    game.discounts
        .iter()
        .map(|&b| {
            let t = (TRUNCATION_BOUND * (1.0 - b) / r_max).ln() / b.ln();
            t.ceil().max(1.0) as usize
        })
        .max()
        .unwrap_or(1)
}

/// Monte-Carlo estimate of J under `policy`. Initial states cycle over X
/// (episode k starts in state k mod |X|) and the estimate is stratified by
/// initial state, so a deterministic game has zero standard error.
pub fn estimate_payoff_empirical(
    game: &StochasticGame,
    policy: &JointPolicy,
    episodes: usize,
    seed: u64,
) -> Result<PayoffEstimate> {
    policy.validate(game)?;
    if episodes == 0 {
        return Err(Error::InvalidArgument("episodes must be at least 1".into()));
    }
    let n = game.agents();
    let nx = game.states();
    let horizon = truncation_horizon(game);
    let joint: Vec<usize> = (0..nx).map(|x| game.joint_action(policy, x)).collect();

    let returns: Vec<Vec<f64>> = (0..episodes)
        .into_par_iter()
        .map(|ep| {
            let mut rng = rng::stream(seed, &[ep as u64]);
            let mut x = ep % nx;
            let mut ret = vec![0.0; n];
            let mut disc: Vec<f64> = vec![1.0; n];
            for _ in 0..horizon {
                let a = joint[x];
                for i in 0..n {
                    ret[i] += disc[i] * game.reward(x, a, i);
                    disc[i] *= game.discounts[i];
                }
                let row = game.transition(x, a);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut next = nx - 1;
                for (y, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        next = y;
                        break;
                    }
                }
                // guard against rounding in the cumulative sum landing on a zero-probability tail
                while row[next] == 0.0 && next > 0 {
                    next -= 1;
                }
                x = next;
            }
            ret
        })
        .collect();

    let mut mean = vec![0.0; n];
    let mut var_sum = vec![0.0; n];
    let mut strata = 0usize;
    for x in 0..nx {
        let stratum: Vec<&Vec<f64>> = returns.iter().skip(x).step_by(nx).collect();
        let k = stratum.len();
        if k == 0 {
            continue;
        }
        strata += 1;
        for i in 0..n {
            let m = stratum.iter().map(|r| r[i]).sum::<f64>() / k as f64;
            mean[i] += m;
            if k > 1 {
                let v = stratum.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (k - 1) as f64;
                var_sum[i] += v / k as f64;
            }
        }
    }
    let s = strata as f64;
    Ok(PayoffEstimate {
        mean: mean.iter().map(|m| m / s).collect(),
        std_err: var_sum.iter().map(|v| v.sqrt() / s).collect(),
        episodes,
        horizon,
    })
}

/// Policies backing each meta-game strategy, plus the game they act in.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSource {
    pub game: StochasticGame,
    /// `policies[i][k][x]`: action of agent i's k-th strategy in state x.
    pub policies: Vec<Vec<Vec<usize>>>,
}

/// A finite normal-form meta-game `(N, S, J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaGame {
    strategy_names: Vec<Vec<String>>,
    space: ProfileSpace,
    // [profile][agent]
    payoffs: Vec<Vec<f64>>,
    std_err: Option<Vec<Vec<f64>>>,
    source: Option<Arc<StochasticSource>>,
}

impl MetaGame {
    /// Meta-game from an explicit payoff table indexed `[profile][agent]`.
    pub fn from_table(strategy_names: Vec<Vec<String>>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let space = ProfileSpace::new(strategy_names.iter().map(Vec::len).collect())?;
        let n = space.agents();
        if payoffs.len() != space.size() {
            return Err(Error::DimensionMismatch {
                expected: space.size(),
                got: payoffs.len(),
            });
        }
        for (p, row) in payoffs.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidGame(format!(
                    "profile {p} has {} payoffs, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!("profile {p} has a non-finite payoff")));
            }
        }
        Ok(MetaGame {
            strategy_names,
            space,
            payoffs,
            std_err: None,
            source: None,
        })
    }

    /// Meta-game from an estimated table with per-entry standard errors.
    pub fn from_estimates(
        strategy_names: Vec<Vec<String>>,
        payoffs: Vec<Vec<f64>>,
        std_err: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut meta = Self::from_table(strategy_names, payoffs)?;
        if std_err.len() != meta.payoffs.len()
            || std_err.iter().any(|r| r.len() != meta.agents() || r.iter().any(|v| !(*v >= 0.0)))
        {
            return Err(Error::InvalidGame(
                "standard errors must match the payoff table and be non-negative".into(),
            ));
        }
        meta.std_err = Some(std_err);
        Ok(meta)
    }

    /// Meta-game induced by a stochastic game. With `policies = None` every
    /// stationary deterministic policy is enumerated, subject to `cap` joint profiles.
    /// Payoffs are exact: J^i(s) is the uniform average of V^i_s over X.
    pub fn from_stochastic(
        game: StochasticGame,
        policies: Option<Vec<Vec<Vec<usize>>>>,
        cap: usize,
    ) -> Result<Self> {
        let n = game.agents();
        let policies = match policies {
            Some(p) => p,
            None => {
                let mut size: usize = 1;
                for i in 0..n {
                    let c = game.policy_count(i).unwrap_or(usize::MAX);
                    size = size.saturating_mul(c);
                }
                if size > cap {
                    return Err(Error::CapExceeded {
                        what: "policy profile space",
                        size,
                        cap,
                    });
                }
                (0..n)
                    .map(|i| game.enumerate_policies(i, cap))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        if policies.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: policies.len(),
            });
        }
        let strategy_names: Vec<Vec<String>> = policies
            .iter()
            .enumerate()
            .map(|(i, ps)| {
                ps.iter()
                    .map(|p| {
                        p.iter()
                            .map(|&a| game.action_names()[i].get(a).cloned().unwrap_or_default())
                            .collect::<Vec<_>>()
                            .join("|")
                    })
                    .collect()
            })
            .collect();
        let space = ProfileSpace::new(policies.iter().map(Vec::len).collect())?;
        if space.size() > cap {
            return Err(Error::CapExceeded {
                what: "policy profile space",
                size: space.size(),
                cap,
            });
        }
        let source = StochasticSource { game, policies };
        let payoffs = (0..space.size())
            .into_par_iter()
            .map(|p| {
                let policy = source.joint_policy(&space, p);
                (0..n)
                    .map(|i| {
                        let v = policy_value(&source.game, &policy, i)?;
                        Ok(v.iter().sum::<f64>() / v.len() as f64)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MetaGame {
            strategy_names,
            space,
            payoffs,
            std_err: None,
            source: Some(Arc::new(source)),
        })
    }

    pub fn agents(&self) -> usize {
        self.space.agents()
    }

    pub fn space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn strategy_names(&self) -> &[Vec<String>] {
        &self.strategy_names
    }

    pub fn source(&self) -> Option<&StochasticSource> {
        self.source.as_deref()
    }

    pub fn is_estimated(&self) -> bool {
        self.std_err.is_some()
    }

    /// Payoff vector of a profile (unchecked index).
    #[inline]
    pub fn payoff(&self, profile: usize) -> &[f64] {
        &self.payoffs[profile]
    }

    pub fn payoff_table(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    pub fn std_err(&self, profile: usize) -> Option<&[f64]> {
        self.std_err.as_ref().map(|t| t[profile].as_slice())
    }

    pub fn std_err_table(&self) -> Option<&[Vec<f64>]> {
        self.std_err.as_deref()
    }

    /// J(s) for a profile index.
    pub fn meta_payoff(&self, profile: usize) -> Result<Vec<f64>> {
        self.space.check(profile)?;
        Ok(self.payoffs[profile].clone())
    }

    /// Joint policy behind a profile, when backed by a stochastic game.
    pub fn joint_policy(&self, profile: usize) -> Option<JointPolicy> {
        self.source
            .as_ref()
            .map(|src| src.joint_policy(&self.space, profile))
    }

    pub fn profile_label(&self, profile: usize) -> String {
        self.space
            .decode(profile)
            .iter()
            .enumerate()
            .map(|(i, &k)| self.strategy_names[i][k].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Inverse of [`profile_label`](Self::profile_label).
    pub fn parse_profile(&self, label: &str) -> Result<usize> {
        let parts: Vec<&str> = label.split(',').map(str::trim).collect();
        if parts.len() != self.agents() {
            return Err(Error::InvalidArgument(format!(
                "profile '{label}' must name one strategy per agent ({} agents)",
                self.agents()
            )));
        }
        let mut strat = Vec::with_capacity(parts.len());
        for (i, name) in parts.iter().enumerate() {
            let k = self.strategy_names[i]
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::InvalidArgument(format!("agent {i} has no strategy '{name}'")))?;
            strat.push(k);
        }
        Ok(self.space.encode(&strat))
    }

    pub fn max_payoff(&self) -> f64 {
        self.payoffs
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn min_payoff(&self) -> f64 {
        self.payoffs
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Payoff bound assumption: 0 <= J^i(s) <= j_max everywhere.
    pub fn payoffs_within(&self, j_max: f64) -> bool {
        self.payoffs.iter().flatten().all(|&v| (0.0..=j_max).contains(&v))
    }

    /// Empirical payoff table of a stochastic-game-backed meta-game. Profile p
    /// is simulated with seed `mix(seed, [p])`, so an entry does not depend on
    /// which other entries are estimated or in what order.
    pub fn estimated(&self, episodes: usize, seed: u64) -> Result<MetaGame> {
        let source = self.source.as_ref().ok_or_else(|| {
            Error::InvalidArgument("empirical estimation needs a game backed by a stochastic game".into())
        })?;
        let estimates = (0..self.size())
            .into_par_iter()
            .map(|p| {
                let policy = source.joint_policy(&self.space, p);
                estimate_payoff_empirical(&source.game, &policy, episodes, rng::mix(seed, &[p as u64]))
            })
            .collect::<Result<Vec<_>>>()?;
        let (payoffs, se) = estimates.into_iter().map(|e| (e.mean, e.std_err)).unzip();
        let mut meta = MetaGame::from_estimates(self.strategy_names.clone(), payoffs, se)?;
        meta.source = Some(Arc::clone(source));
        Ok(meta)
    }

    /// Restriction to the given strategy subsets (indices per agent, in order).
    pub fn restrict(&self, keep: &[Vec<usize>]) -> Result<MetaGame> {
        if keep.len() != self.agents() {
            return Err(Error::DimensionMismatch {
                expected: self.agents(),
                got: keep.len(),
            });
        }
        let names: Vec<Vec<String>> = keep
            .iter()
            .enumerate()
            .map(|(i, ks)| ks.iter().map(|&k| self.strategy_names[i][k].clone()).collect())
            .collect();
        let sub = ProfileSpace::new(keep.iter().map(Vec::len).collect())?;
        let map = |q: usize| {
            let local = sub.decode(q);
            let global: Vec<usize> = local.iter().enumerate().map(|(i, &k)| keep[i][k]).collect();
            self.space.encode(&global)
        };
        let payoffs = (0..sub.size()).map(|q| self.payoffs[map(q)].clone()).collect();
        match &self.std_err {
            Some(se) => {
                let se = (0..sub.size()).map(|q| se[map(q)].clone()).collect();
                MetaGame::from_estimates(names, payoffs, se)
            }
            None => MetaGame::from_table(names, payoffs),
        }
    }

    /// Margin a payoff difference must exceed to count as strict. Exact tables
    /// use `tie_tol`; estimated tables use at least 3 combined standard errors.
    pub fn margin(&self, agent: usize, a: usize, b: usize, tie_tol: f64) -> f64 {
        match &self.std_err {
            Some(se) => {
                let combined = (se[a][agent].powi(2) + se[b][agent].powi(2)).sqrt();
                tie_tol.max(3.0 * combined)
            }
            None => tie_tol,
        }
    }

    /// `J^agent(to) > J^agent(from)` beyond the comparison margin.
    #[inline]
    pub fn strictly_prefers(&self, agent: usize, from: usize, to: usize, tie_tol: f64) -> bool {
        self.payoffs[to][agent] - self.payoffs[from][agent] > self.margin(agent, from, to, tie_tol)
    }
}

impl StochasticSource {
    pub fn joint_policy(&self, space: &ProfileSpace, profile: usize) -> JointPolicy {
        JointPolicy::new(
            (0..space.agents())
                .map(|i| self.policies[i][space.strategy(profile, i)].clone())
                .collect(),
        )
    }
}

/// Best responses of `agent` to the opponents' strategies in `profile`
/// (the agent's own coordinate is ignored). Returned as strategy indices.
pub fn best_responses(meta: &MetaGame, agent: usize, profile: usize, tie_tol: f64) -> Vec<usize> {
    let space = meta.space();
    let candidates: Vec<usize> = space.deviations(profile, agent).collect();
    let best = candidates
        .iter()
        .copied()
        .max_by(|&a, &b| meta.payoff(a)[agent].total_cmp(&meta.payoff(b)[agent]))
        .expect("strategy sets are nonempty");
    let top = meta.payoff(best)[agent];
    candidates
        .iter()
        .enumerate()
        .filter(|&(_, &c)| meta.payoff(c)[agent] >= top - meta.margin(agent, c, best, tie_tol))
        .map(|(k, _)| k)
        .collect()
}
