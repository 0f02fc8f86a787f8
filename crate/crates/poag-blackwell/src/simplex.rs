//! Phase-1 simplex for `A x = b, x >= 0` over a generic ordered field.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arithmetic needed by the tableau. `f64` compares against a tolerance; rationals are exact.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
}

/// Pivot tolerance for floating point.
pub const F64_EPS: f64 = 1e-11;

impl Scalar for f64 {
    fn zero() -> f64 {
        0.0
    }
    fn one() -> f64 {
        1.0
    }
    fn from_f64(x: f64) -> f64 {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_pos(&self) -> bool {
        *self > F64_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -F64_EPS
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    /// Snaps to the closest fraction within 1e-12 found by continued fractions,
    /// so that decimal inputs such as 0.1 are read as the intended ratios.
    fn from_f64(x: f64) -> Self {
        snap(x)
    }
    fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

fn snap(x: f64) -> BigRational {
    let exact = BigRational::from_float(x).unwrap_or_else(Zero::zero);
    if x == x.trunc() {
        return exact;
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut r = exact.clone();
    for _ in 0..64 {
        let a = r.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        let approx = BigRational::new(h2.clone(), k2.clone());
        if (approx.clone() - exact.clone()).abs() <= BigRational::from_float(1e-12).unwrap() {
            return approx;
        }
        let frac = r.clone() - BigRational::from_integer(a);
        if frac.is_zero() {
            return approx;
        }
        r = frac.recip();
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
    }
    exact
}

/// Outcome of [`feasible`].
#[derive(Clone, Debug)]
pub struct Phase1<T> {
    /// A nonnegative solution when the system is feasible.
    pub solution: Option<Vec<T>>,
    /// Optimal phase-1 objective, the least total artificial mass.
    pub infeasibility: T,
}

/// Decides feasibility of `a x = b, x >= 0` with Bland's rule.
///
/// `a` is dense, `m` rows of `n` entries.
pub fn feasible<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Phase1<T> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    for i in 0..m {
        let flip = b[i].is_neg();
        let mut row = Vec::with_capacity(width);
        for j in 0..n {
            row.push(if flip { -a[i][j].clone() } else { a[i][j].clone() });
        }
        for k in 0..m {
            row.push(if k == i { T::one() } else { T::zero() });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        tab.push(row);
    }
    // Reduced costs of the phase-1 objective (sum of artificials), expressed in the nonbasics.
    let mut cost = vec![T::zero(); width];
    for row in &tab {
        for j in 0..n {
            cost[j] = cost[j].clone() - row[j].clone();
        }
        cost[width - 1] = cost[width - 1].clone() - row[width - 1].clone();
    }
    tab.push(cost);
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        let Some(enter) = (0..n + m).find(|&j| tab[m][j].is_neg()) else { break };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            if tab[i][enter].is_pos() {
                let ratio = tab[i][width - 1].clone() / tab[i][enter].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (!(ratio > *lr) && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { break };
        pivot(&mut tab, r, enter);
        basis[r] = enter;
    }

    let infeasibility = -tab[m][width - 1].clone();
    if infeasibility.is_pos() {
        return Phase1 { solution: None, infeasibility };
    }
    let mut x = vec![T::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            let v = tab[i][width - 1].clone();
            x[bv] = if v.is_neg() { T::zero() } else { v };
        }
    }
    Phase1 { solution: Some(x), infeasibility }
}

fn pivot<T: Scalar>(tab: &mut [Vec<T>], r: usize, c: usize) {
    let p = tab[r][c].clone();
    for v in tab[r].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let prow = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[c].clone();
        if f.is_pos() || f.is_neg() {
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        row[c] = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_feasible_system() {
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let r = feasible(&a, &[2.0, 0.0]);
        let x = r.solution.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_solution_is_infeasible() {
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        assert!(feasible(&a, &[0.0, 2.0]).solution.is_none());
    }

    #[test]
    fn snapping_recovers_tenths() {
        assert_eq!(snap(0.1), BigRational::new(1.into(), 10.into()));
        assert_eq!(snap(1.0 / 3.0), BigRational::new(1.into(), 3.into()));
    }
}
