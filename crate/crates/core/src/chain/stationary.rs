//! Stationary distributions. Small and medium chains use the GTH elimination
//! (no subtractions, so tiny exit probabilities keep full relative accuracy);
//! larger chains fall back to sparse Gauss-Seidel.

use rayon::prelude::*;

use super::HistoryChain;
use crate::error::{Error, Result};

/// Largest chain solved by dense elimination.
pub const DENSE_LIMIT: usize = 2500;

const ITERATIVE_TARGET: f64 = 1e-12;
const ITERATIVE_SWEEPS: usize = 50_000;

/// ||pi^T P - pi^T||_inf.
pub fn stationary_residual(chain: &HistoryChain, pi: &[f64]) -> f64 {
    let mut out = vec![0.0; chain.size()];
    for (h, row) in chain.rows.iter().enumerate() {
        for &(c, p) in row {
            out[c] += pi[h] * p;
        }
    }
    out.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn stationary_distribution(chain: &HistoryChain) -> Result<Vec<f64>> {
    if chain.epsilon <= 0.0 {
        return Err(Error::Reducible(
            "the unperturbed chain has several absorbing classes; use epsilon > 0".into(),
        ));
    }
    if chain.size() <= DENSE_LIMIT {
        gth(chain)
    } else {
        gauss_seidel(chain)
    }
}

fn gth(chain: &HistoryChain) -> Result<Vec<f64>> {
    let n = chain.size();
    let mut a = vec![0.0; n * n];
    for (h, row) in chain.rows.iter().enumerate() {
        for &(c, p) in row {
            a[h * n + c] += p;
        }
    }
    for k in (1..n).rev() {
        let (top, rest) = a.split_at_mut(k * n);
        let row_k = &rest[..n];
        let s: f64 = row_k[..k].iter().sum();
        if !(s > 0.0) {
            return Err(Error::Reducible(format!(
                "state {k} cannot reach lower-indexed states (exit probability underflowed or is zero)"
            )));
        }
        top.par_chunks_mut(n).for_each(|row| {
            let f = row[k] / s;
            row[k] = f;
            if f != 0.0 {
                for (x, &y) in row[..k].iter_mut().zip(&row_k[..k]) {
                    *x += f * y;
                }
            }
        });
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * a[i * n + k]).sum();
    }
    let total: f64 = pi.iter().sum();
    for p in pi.iter_mut() {
        *p /= total;
    }
    Ok(pi)
}

fn gauss_seidel(chain: &HistoryChain) -> Result<Vec<f64>> {
    let n = chain.size();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut diag = vec![0.0; n];
    for (h, row) in chain.rows.iter().enumerate() {
        for &(c, p) in row {
            if c == h {
                diag[h] += p;
            } else {
                incoming[c].push((h, p));
            }
        }
    }
    let mut pi = vec![1.0 / n as f64; n];
    for sweep in 0..ITERATIVE_SWEEPS {
        for j in 0..n {
            let inflow: f64 = incoming[j].iter().map(|&(i, p)| pi[i] * p).sum();
            pi[j] = inflow / (1.0 - diag[j]);
        }
        let total: f64 = pi.iter().sum();
        for p in pi.iter_mut() {
            *p /= total;
        }
        if sweep % 10 == 9 && stationary_residual(chain, &pi) <= ITERATIVE_TARGET {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence(format!(
        "Gauss-Seidel residual {} after {ITERATIVE_SWEEPS} sweeps",
        stationary_residual(chain, &pi)
    )))
}

/// Lazy power iteration pi <- pi (I + P) / 2; a slow reference solver.
pub fn power_iteration(chain: &HistoryChain, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = chain.size();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let mut next: Vec<f64> = pi.iter().map(|p| 0.5 * p).collect();
        for (h, row) in chain.rows.iter().enumerate() {
            for &(c, p) in row {
                next[c] += 0.5 * pi[h] * p;
            }
        }
        let diff = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if diff <= tol {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence(format!("power iteration exceeded {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::HistorySpace;

    fn chain(rows: Vec<Vec<(usize, f64)>>, eps: f64) -> HistoryChain {
        let n = rows.len();
        HistoryChain {
            space: HistorySpace::new(n, 1, n).unwrap(),
            epsilon: eps,
            kappa: vec![1.0; n],
            rows,
        }
    }

    #[test]
    fn doubly_stochastic_is_uniform() {
        let c = chain(vec![vec![(0, 0.3), (1, 0.7)], vec![(0, 0.7), (1, 0.3)]], 0.1);
        let pi = stationary_distribution(&c).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn birth_death_balance() {
        let (a, b) = (0.2, 0.05);
        let c = chain(vec![vec![(0, 1.0 - a), (1, a)], vec![(0, b), (1, 1.0 - b)]], 0.1);
        let pi = stationary_distribution(&c).unwrap();
        assert!((pi[0] - b / (a + b)).abs() < 1e-14);
        assert!((pi[1] - a / (a + b)).abs() < 1e-14);
        assert!(stationary_residual(&c, &pi) <= 1e-15);
        let gs = gauss_seidel(&c).unwrap();
        assert!((gs[0] - pi[0]).abs() < 1e-10);
    }

    #[test]
    fn unperturbed_rejected() {
        let c = chain(vec![vec![(0, 1.0)], vec![(1, 1.0)]], 0.0);
        assert!(matches!(stationary_distribution(&c), Err(Error::Reducible(_))));
        let c = chain(vec![vec![(0, 1.0)], vec![(1, 1.0)]], 0.1);
        assert!(matches!(gth(&c), Err(Error::Reducible(_))));
    }

    #[test]
    fn tiny_exit_probabilities_keep_accuracy() {
        let e = 1e-200;
        let c = chain(vec![vec![(0, 1.0 - e), (1, e)], vec![(0, 0.5), (1, 0.5)]], 0.1);
        let pi = stationary_distribution(&c).unwrap();
        assert!((pi[1] / 2e-200 - 1.0).abs() < 1e-12);
    }
}
