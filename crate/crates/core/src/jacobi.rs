//! Orthonormal Jacobi-type polynomial bases and Gauss quadrature on (0, 1)
//! for weights of the form `x^q0 (1-x)^q1`.
//!
//! The pulsation problem lives in the weighted space with `q0 = 3/2` and
//! `q1 = N/2 - 1`; Gauss-Legendre (`q0 = q1 = 0`) falls out of the same
//! machinery and is used for the coordinate-map quadratures.

use crate::linalg::{tridiag_eigen_first_components, LinalgError};
use crate::scalar::Scalar;

/// Gamma(k/2) for positive integer `k`, exact product formula.
fn gamma_half_integer(twice: u32) -> f64 {
    assert!(twice >= 1);
    if twice.is_multiple_of(2) {
        // Gamma(n) = (n-1)!
        let n = twice / 2;
        (1..n).map(|i| i as f64).product()
    } else {
        // Gamma(n + 1/2) = (2n)! / (4^n n!) * sqrt(pi)
        let n = (twice - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for i in 1..=n {
            v *= (i as f64) - 0.5;
        }
        v
    }
}

/// Beta(a, b) for half-integer arguments given as `2a`, `2b`.
fn beta_half_integer(twice_a: u32, twice_b: u32) -> f64 {
    gamma_half_integer(twice_a) * gamma_half_integer(twice_b)
        / gamma_half_integer(twice_a + twice_b)
}

/// Quadrature nodes and weights on (0, 1).
#[derive(Debug, Clone)]
pub struct QuadRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> QuadRule<T> {
    /// Integrates `f` against the rule's weight on (0, 1).
    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integrates `f` over an arbitrary interval `[a, b]` (only meaningful
    /// for a unit-weight rule).
    pub fn integrate_interval<F: Fn(T) -> T>(&self, a: T, b: T, f: F) -> T {
        let span = b - a;
        span * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(a + span * x))
            .sum::<T>()
    }
}

/// Orthonormal polynomials for the weight `x^q0 (1-x)^q1` on (0, 1).
///
/// Exponents are given doubled (`2 q0`, `2 q1`) so the normalization constants
/// stay exact; all admissible weights here have half-integer exponents.
#[derive(Debug, Clone)]
pub struct JacobiBasis<T> {
    pub twice_q0: u32,
    pub twice_q1: u32,
    /// total mass of the weight on (0,1)
    pub mu0: T,
    /// recurrence diagonal A_k (k = 0..n-1)
    diag: Vec<T>,
    /// recurrence off-diagonal sqrt(B_k) (k = 1..n-1)
    off: Vec<T>,
}

impl<T: Scalar> JacobiBasis<T> {
    /// Basis able to evaluate polynomials up to degree `n - 1` and produce an
    /// `n`-point Gauss rule.
    pub fn new(twice_q0: u32, twice_q1: u32, n: usize) -> Self {
        assert!(n >= 1);
        // Standard [-1,1] Jacobi recurrence with alpha = q1 (exponent at +1
        // ... of (1-t)) and beta = q0, then mapped to (0,1) via x = (1+t)/2.
        let alpha = twice_q1 as f64 / 2.0;
        let beta = twice_q0 as f64 / 2.0;
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n {
            let kf = k as f64;
            let a_t = if k == 0 {
                (beta - alpha) / (alpha + beta + 2.0)
            } else {
                (beta * beta - alpha * alpha)
                    / ((2.0 * kf + alpha + beta) * (2.0 * kf + alpha + beta + 2.0))
            };
            diag.push(T::of((a_t + 1.0) / 2.0));
            if k >= 1 {
                let b_t = 4.0 * kf * (kf + alpha) * (kf + beta) * (kf + alpha + beta)
                    / ((2.0 * kf + alpha + beta).powi(2)
                        * (2.0 * kf + alpha + beta + 1.0)
                        * (2.0 * kf + alpha + beta - 1.0));
                off.push(T::of((b_t / 4.0).sqrt()));
            }
        }
        let mu0 = T::of(beta_half_integer(twice_q0 + 2, twice_q1 + 2));
        Self {
            twice_q0,
            twice_q1,
            mu0,
            diag,
            off,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Values of the orthonormal polynomials `p_0 .. p_{n-1}` at `x`.
    pub fn eval(&self, x: T) -> Vec<T> {
        let n = self.len();
        let mut p = vec![T::zero(); n];
        p[0] = T::one() / self.mu0.sqrt();
        if n > 1 {
            p[1] = (x - self.diag[0]) * p[0] / self.off[0];
        }
        for k in 1..n - 1 {
            p[k + 1] = ((x - self.diag[k]) * p[k] - self.off[k - 1] * p[k - 1]) / self.off[k];
        }
        p
    }

    /// Values and derivatives up to order `jmax` at `x`.
    /// `out[j][k]` is the j-th derivative of `p_k`.
    pub fn eval_derivs(&self, x: T, jmax: usize) -> Vec<Vec<T>> {
        let n = self.len();
        let mut out = vec![vec![T::zero(); n]; jmax + 1];
        out[0] = self.eval(x);
        for j in 1..=jmax {
            let jf = T::of_usize(j);
            if n > 1 {
                out[j][1] = ((x - self.diag[0]) * out[j][0] + jf * out[j - 1][0]) / self.off[0];
            }
            for k in 1..n - 1 {
                out[j][k + 1] = ((x - self.diag[k]) * out[j][k] + jf * out[j - 1][k]
                    - self.off[k - 1] * out[j][k - 1])
                    / self.off[k];
            }
        }
        out
    }

    /// `n`-point Gauss rule for this weight (Golub-Welsch on the recurrence's
    /// Jacobi matrix).
    pub fn rule(&self) -> Result<QuadRule<T>, LinalgError> {
        let (nodes, firsts) = tridiag_eigen_first_components(&self.diag, &self.off)?;
        let weights = firsts.iter().map(|&f| self.mu0 * f * f).collect();
        Ok(QuadRule { nodes, weights })
    }

    /// Eigenvalue of the weight's Sturm-Liouville operator on `p_k`:
    /// `-(w^{-1}) d/dx [ x^{q0+1} (1-x)^{q1+1} d p_k/dx ] = mu_k p_k` with
    /// `mu_k = k (k + q0 + q1 + 1)`.
    pub fn operator_eigenvalue(&self, k: usize) -> T {
        let kf = T::of_usize(k);
        let s = T::of((self.twice_q0 + self.twice_q1) as f64 / 2.0 + 1.0);
        kf * (kf + s)
    }
}

/// `n`-point Gauss-Legendre rule on (0, 1).
pub fn gauss_legendre_unit<T: Scalar>(n: usize) -> QuadRule<T> {
    JacobiBasis::new(0, 0, n)
        .rule()
        .expect("Legendre rule construction cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_half_values() {
        assert_abs_diff_eq!(gamma_half_integer(2), 1.0);
        assert_abs_diff_eq!(gamma_half_integer(8), 6.0);
        assert_abs_diff_eq!(
            gamma_half_integer(1),
            std::f64::consts::PI.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            gamma_half_integer(5),
            0.75 * std::f64::consts::PI.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn legendre_5_point() {
        let rule = gauss_legendre_unit::<f64>(5);
        // nodes on (0,1) are (1 + t)/2 for the classic [-1,1] nodes
        let expected = [
            (1.0 - 0.906_179_845_938_664) / 2.0,
            (1.0 - 0.538_469_310_105_683_1) / 2.0,
            0.5,
            (1.0 + 0.538_469_310_105_683_1) / 2.0,
            (1.0 + 0.906_179_845_938_664) / 2.0,
        ];
        for (got, want) in rule.nodes.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(rule.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        // degree-9 exactness
        let val = rule.integrate(|x| x.powi(9));
        assert_abs_diff_eq!(val, 0.1, epsilon = 1e-14);
    }

    #[test]
    fn moments_match_beta_function() {
        // weight x^{3/2} (1-x)^{N/2-1} for N = 6
        let n_param = 6u32;
        let basis = JacobiBasis::<f64>::new(3, n_param - 2, 24);
        let rule = basis.rule().unwrap();
        for k in 0..20u32 {
            let got = rule.integrate(|x| x.powi(k as i32));
            let want = beta_half_integer(3 + 2 * k + 2, n_param - 2 + 2);
            assert_abs_diff_eq!(got / want, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn orthonormality_under_own_rule() {
        for n_param in [4u32, 6, 8, 10] {
            let n = 16;
            let basis = JacobiBasis::<f64>::new(3, n_param - 2, n);
            let rule = basis.rule().unwrap();
            let evals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| basis.eval(x)).collect();
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = (0..n).map(|q| rule.weights[q] * evals[q][i] * evals[q][j]).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(dot, expected, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn sturm_liouville_eigen_identity() {
        // x(1-x) p'' + (q0+1 - (q0+q1+2) x) p' = -mu_k p
        for n_param in [4u32, 10] {
            let basis = JacobiBasis::<f64>::new(3, n_param - 2, 10);
            let q0 = 1.5;
            let q1 = (n_param - 2) as f64 / 2.0;
            for &x in &[0.12, 0.5, 0.83] {
                let d = basis.eval_derivs(x, 2);
                for k in 0..10 {
                    let lhs = x * (1.0 - x) * d[2][k] + (q0 + 1.0 - (q0 + q1 + 2.0) * x) * d[1][k];
                    let mu = basis.operator_eigenvalue(k);
                    assert_abs_diff_eq!(lhs, -mu * d[0][k], epsilon = 1e-8 * (1.0 + mu) * d[0][k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn derivative_recurrence_consistency() {
        // compare recurrence derivative against central differences
        let basis = JacobiBasis::<f64>::new(3, 2, 8);
        let x = 0.4;
        let h = 1e-6;
        let d = basis.eval_derivs(x, 1);
        let plus = basis.eval(x + h);
        let minus = basis.eval(x - h);
        for k in 0..8 {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert_abs_diff_eq!(d[1][k], fd, epsilon = 1e-6 * d[1][k].abs().max(1.0));
        }
    }
}
