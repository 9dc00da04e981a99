//! Exact phase-one simplex over rationals with Bland's rule.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational for a finite float.
pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Finds x >= 0 with `a x = b`, or `None` when the system is infeasible.
pub fn feasible_point(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let rows = a.len();
    assert_eq!(rows, b.len());
    let n = a.first().map_or(0, |r| r.len());
    let cols = n + rows;
    // tableau rows: [A | I | b] with every right-hand side made non-negative
    let mut t: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| {
            let flip = b[i].is_negative();
            let mut row = Vec::with_capacity(cols + 1);
            for v in &a[i] {
                row.push(if flip { -v.clone() } else { v.clone() });
            }
            for k in 0..rows {
                row.push(if k == i { BigRational::one() } else { BigRational::zero() });
            }
            row.push(if flip { -b[i].clone() } else { b[i].clone() });
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..cols).collect();
    // reduced costs of the auxiliary objective (sum of artificials); last entry is -objective
    let mut cost: Vec<BigRational> = vec![BigRational::zero(); cols + 1];
    for row in &t {
        for j in 0..n {
            cost[j] -= &row[j];
        }
        cost[cols] -= &row[cols];
    }

    loop {
        let Some(enter) = (0..cols).find(|&j| cost[j].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..rows {
            if !t[i][enter].is_positive() {
                continue;
            }
            let r = &t[i][cols] / &t[i][enter];
            let better = match &leave {
                None => true,
                Some((li, lr)) => r < *lr || (r == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, r));
            }
        }
        // the auxiliary objective is bounded below by zero
        let (pr, _) = leave.expect("phase-one objective is bounded");
        let piv = t[pr][enter].clone();
        for v in t[pr].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = t[pr].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == pr || row[enter].is_zero() {
                continue;
            }
            let factor = row[enter].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
        let factor = cost[enter].clone();
        for (v, p) in cost.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v -= &factor * p;
            }
        }
        basis[pr] = enter;
    }

    if !cost[cols].is_zero() {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][cols].clone();
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        ratio(n, 1)
    }

    #[test]
    fn finds_point_on_simplex() {
        // x + y = 1, x - y = 1/2
        let a = vec![vec![r(1), r(1)], vec![r(1), r(-1)]];
        let b = vec![r(1), ratio(1, 2)];
        let x = feasible_point(&a, &b).unwrap();
        assert_eq!(x, vec![ratio(3, 4), ratio(1, 4)]);
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1, x + y = 2
        let a = vec![vec![r(1), r(1)], vec![r(1), r(1)]];
        assert!(feasible_point(&a, &[r(1), r(2)]).is_none());
        // x = -1 with x >= 0
        assert!(feasible_point(&[vec![r(1)]], &[r(-1)]).is_none());
    }

    #[test]
    fn degenerate_rows_are_fine() {
        let a = vec![vec![r(1), r(1), r(0)], vec![r(2), r(2), r(0)], vec![r(0), r(0), r(1)]];
        let x = feasible_point(&a, &[r(1), r(2), r(0)]).unwrap();
        assert_eq!(&x[0] + &x[1], r(1));
        assert!(x.iter().all(|v| !v.is_negative()));
    }
}
