//! Coarse correlated equilibria: verification of a given distribution and
//! exact feasibility of a CCE with a prescribed support.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_model::MetaGame;
use crate::simplex::{feasible_point, rational, to_f64};

/// Lower bound imposed on q_s for s in the support.
pub const SUPPORT_MU: f64 = 1e-6;
/// Largest LP (support size plus inequality rows) solved exactly.
pub const LP_VARIABLE_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution(Vec<f64>);

impl JointDistribution {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        let sum: f64 = q.iter().sum();
        if q.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "distribution must be non-negative and sum to 1 (sum {sum})"
            )));
        }
        Ok(JointDistribution(q))
    }

    pub fn point_mass(size: usize, profile: usize) -> Self {
        let mut q = vec![0.0; size];
        q[profile] = 1.0;
        JointDistribution(q)
    }

    /// Product of independent per-agent mixed strategies.
    pub fn product(meta: &MetaGame, marginals: &[Vec<f64>]) -> Result<Self> {
        let space = meta.space();
        if marginals.len() != space.agents() {
            return Err(Error::DimensionMismatch {
                expected: space.agents(),
                got: marginals.len(),
            });
        }
        for (i, m) in marginals.iter().enumerate() {
            if m.len() != space.dims()[i] {
                return Err(Error::DimensionMismatch {
                    expected: space.dims()[i],
                    got: m.len(),
                });
            }
        }
        let q = (0..space.size())
            .map(|p| {
                (0..space.agents())
                    .map(|i| marginals[i][space.strategy(p, i)])
                    .product()
            })
            .collect();
        JointDistribution::new(q)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub agent: usize,
    pub deviation: usize,
    /// Expected payoff of the fixed deviation minus the expected payoff under q.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CceCheck {
    pub is_cce: bool,
    /// The constraint with the largest gain.
    pub worst: Violation,
}

/// Checks every fixed unilateral deviation against q.
pub fn is_cce(meta: &MetaGame, q: &JointDistribution, tol: f64) -> Result<CceCheck> {
    let space = meta.space();
    if q.as_slice().len() != space.size() {
        return Err(Error::DimensionMismatch {
            expected: space.size(),
            got: q.as_slice().len(),
        });
    }
    let q = q.as_slice();
    let mut worst: Option<Violation> = None;
    for i in 0..space.agents() {
        let base: f64 = (0..space.size()).map(|p| q[p] * meta.payoff(p)[i]).sum();
        for t in 0..space.dims()[i] {
            let dev: f64 = (0..space.size())
                .map(|p| q[p] * meta.payoff(space.with_strategy(p, i, t))[i])
                .sum();
            let gain = dev - base;
            if worst.as_ref().map_or(true, |w| gain > w.gain) {
                worst = Some(Violation {
                    agent: i,
                    deviation: t,
                    gain,
                });
            }
        }
    }
    let worst = worst.expect("every agent has a strategy");
    Ok(CceCheck {
        is_cce: worst.gain <= tol,
        worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportFeasibility {
    pub feasible: bool,
    pub mu: f64,
    /// A CCE with q_s >= mu on the support and zero elsewhere.
    pub witness: Option<Vec<f64>>,
}

/// Decides exactly whether a CCE exists with q_s >= [`SUPPORT_MU`] on `support`
/// and q_s = 0 elsewhere.
pub fn cce_with_support_exists(meta: &MetaGame, support: &[usize]) -> Result<SupportFeasibility> {
    cce_with_support_exists_mu(meta, support, SUPPORT_MU)
}

pub fn cce_with_support_exists_mu(meta: &MetaGame, support: &[usize], mu: f64) -> Result<SupportFeasibility> {
    let space = meta.space();
    let mut support = support.to_vec();
    support.sort_unstable();
    support.dedup();
    if support.is_empty() {
        return Err(Error::InvalidArgument("support must be nonempty".into()));
    }
    for &s in &support {
        space.check(s)?;
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument("mu must be positive".into()));
    }
    let k = support.len();
    let rows_ineq: usize = space.dims().iter().sum();
    if k + rows_ineq > LP_VARIABLE_CAP {
        return Err(Error::CapExceeded {
            what: "CCE linear program",
            size: k + rows_ineq,
            cap: LP_VARIABLE_CAP,
        });
    }
    let mu_r = rational(mu);
    // q_s = mu + y_s with y_s >= 0; one slack per deviation constraint.
    let cols = k + rows_ineq;
    let mut a: Vec<Vec<BigRational>> = Vec::new();
    let mut b: Vec<BigRational> = Vec::new();

    let mut row = vec![BigRational::zero(); cols];
    for v in row.iter_mut().take(k) {
        *v = rational(1.0);
    }
    a.push(row);
    b.push(rational(1.0) - &mu_r * rational(k as f64));

    let mut slack = k;
    for i in 0..space.agents() {
        for t in 0..space.dims()[i] {
            // sum_s c_s q_s >= 0 with c_s = J^i(s) - J^i(t, s^-i)
            let c: Vec<BigRational> = support
                .iter()
                .map(|&s| rational(meta.payoff(s)[i]) - rational(meta.payoff(space.with_strategy(s, i, t))[i]))
                .collect();
            let mut row = vec![BigRational::zero(); cols];
            let mut rhs = BigRational::zero();
            for (j, cj) in c.iter().enumerate() {
                row[j] = cj.clone();
                rhs -= &mu_r * cj;
            }
            row[slack] = rational(-1.0);
            slack += 1;
            a.push(row);
            b.push(rhs);
        }
    }
    if b[0].is_negative() {
        return Ok(SupportFeasibility {
            feasible: false,
            mu,
            witness: None,
        });
    }
    Ok(match feasible_point(&a, &b) {
        None => SupportFeasibility {
            feasible: false,
            mu,
            witness: None,
        },
        Some(x) => {
            let mut q = vec![0.0; space.size()];
            for (j, &s) in support.iter().enumerate() {
                q[s] = to_f64(&(&mu_r + &x[j]));
            }
            SupportFeasibility {
                feasible: true,
                mu,
                witness: Some(q),
            }
        }
    })
}

/// Feasibility verdicts for several values of the positivity floor mu.
pub fn support_sensitivity(meta: &MetaGame, support: &[usize], mus: &[f64]) -> Result<Vec<(f64, bool)>> {
    mus.iter()
        .map(|&mu| Ok((mu, cce_with_support_exists_mu(meta, support, mu)?.feasible)))
        .collect()
}
