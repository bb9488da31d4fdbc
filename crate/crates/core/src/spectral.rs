//! The linear pulsation eigenproblem, solved two independent ways:
//!
//! * a symmetric Galerkin method in the orthonormal polynomial basis of the
//!   weighted space `x^{3/2} (1-x)^{N/2-1} dx`, assembled from the
//!   divergence form of the operator so both matrices are symmetric by
//!   construction;
//! * two-sided shooting started from truncated regular-solution series at
//!   the singular endpoints, matched in the middle.
//!
//! A finite-difference eigensolve of the Schroedinger normal form on the
//! travel-time interval serves as a third, coarser cross-check.

use crate::equilibrium::{self, EquilibriumProfile, EquilibriumError};
use crate::jacobi::JacobiBasis;
use crate::lane_emden::LaneEmdenError;
use crate::linalg::{
    generalized_sym_eigen, tridiag_smallest_eigenvalues, LinalgError, Mat,
};
use crate::ode::{Dopri5, OdeError};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Offset from each singular endpoint at which shooting starts. Deep inside
/// every coefficient boundary layer, so the two-term regular-solution start
/// `y = 1 + c1 t` carries a relative error below 1e-10 for all admissible
/// exponents.
pub const SHOOT_OFFSET: f64 = 1e-7;
/// Matching point of the two shooting branches.
pub const MATCH_POINT: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("ConvergenceFailure: {0}")]
    ConvergenceFailure(String),
    #[error("StiffnessBlowup: shooting solution exceeded {0:e}; restart closer to the endpoint")]
    StiffnessBlowup(f64),
    #[error("NonOscillatory: fundamental eigenvalue {0} is not positive, no period exists")]
    NonOscillatory(f64),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    LaneEmden(#[from] LaneEmdenError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Discrete realization of the weighted space: Gauss nodes/weights for
/// `x^{3/2}(1-x)^{N/2-1}` and the orthonormal basis sampled there.
#[derive(Debug, Clone)]
pub struct WeightedSpace<T> {
    pub big_n: u32,
    pub basis: JacobiBasis<T>,
    pub x_nodes: Vec<T>,
    pub weights: Vec<T>,
    /// `phi[(q, k)]`: basis value `p_k(x_q)`
    pub phi: Mat<T>,
    /// `dphi[(q, k)]`: derivative `p_k'(x_q)`
    pub dphi: Mat<T>,
}

impl<T: Scalar> WeightedSpace<T> {
    pub fn new(big_n: u32, n: usize) -> Result<Self, SpectralError> {
        assert!(n >= 8, "basis size must be at least 8");
        let basis = JacobiBasis::new(3, big_n - 2, n);
        let rule = basis.rule()?;
        let mut phi = Mat::zeros(n, n);
        let mut dphi = Mat::zeros(n, n);
        for (q, &x) in rule.nodes.iter().enumerate() {
            let d = basis.eval_derivs(x, 1);
            for k in 0..n {
                phi[(q, k)] = d[0][k];
                dphi[(q, k)] = d[1][k];
            }
        }
        Ok(Self {
            big_n,
            basis,
            x_nodes: rule.nodes,
            weights: rule.weights,
            phi,
            dphi,
        })
    }

    pub fn len(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_nodes.is_empty()
    }

    /// Basis coefficients of nodal values (exact on the polynomial space).
    pub fn node_to_coeff(&self, values: &[T]) -> Vec<T> {
        let n = self.len();
        let mut c = vec![T::zero(); n];
        for k in 0..n {
            let mut acc = T::zero();
            for q in 0..n {
                acc += self.weights[q] * self.phi[(q, k)] * values[q];
            }
            c[k] = acc;
        }
        c
    }

    /// Nodal values from coefficients.
    pub fn coeff_to_node(&self, coeffs: &[T]) -> Vec<T> {
        (0..self.len())
            .map(|q| {
                (0..self.len())
                    .map(|k| coeffs[k] * self.phi[(q, k)])
                    .sum()
            })
            .collect()
    }

    /// Pointwise evaluation of a coefficient vector anywhere on [0, 1].
    pub fn eval_coeffs(&self, coeffs: &[T], x: T) -> T {
        let vals = self.basis.eval(x);
        coeffs.iter().zip(vals).map(|(&c, p)| c * p).sum()
    }

    /// Taylor coefficients `f^(j)(x0)/j!` of a coefficient vector, `j <= jmax`.
    pub fn taylor_at(&self, coeffs: &[T], x0: T, jmax: usize) -> Vec<T> {
        let d = self.basis.eval_derivs(x0, jmax);
        let mut fact = T::one();
        (0..=jmax)
            .map(|j| {
                if j > 0 {
                    fact *= T::of_usize(j);
                }
                let deriv: T = coeffs.iter().zip(&d[j]).map(|(&c, &p)| c * p).sum();
                deriv / fact
            })
            .collect()
    }
}

/// One eigenpair of the pulsation operator, normalized to unit central
/// amplitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenMode<T> {
    /// 1-based mode index (1 = fundamental)
    pub index: usize,
    /// eigenvalue in normalized time units (`kappa = 1`)
    pub lambda: T,
    /// physical eigenvalue `lambda * kappa^2`
    pub lambda_phys: T,
    /// eigenfunction at the space's nodes
    pub phi: Vec<T>,
    /// basis coefficients of the eigenfunction
    pub coeffs: Vec<T>,
    pub phi_center: T,
    pub phi_surface: T,
    /// norm in the star's mass-weighted inner product
    pub norm: T,
    /// interior sign changes counted above a relative amplitude floor;
    /// equals `index - 1` whenever the mode is resolved over its full range
    pub sign_changes: usize,
}

/// Relative amplitude below which nodal values are not trusted for sign
/// counting; spans the pointwise resolution of the discrete eigenvectors.
/// Surface-concentrated modes (gamma = 5/4) dip below this over most of the
/// star, so their count is only indicative.
pub const SIGN_COUNT_FLOOR: f64 = 1e-9;

/// Galerkin matrices of the physical-time operator over the weighted basis:
/// stiffness from the divergence form, mass from the star's measure
/// `rho r^4 dr = g(x) w(x) dx`. Both exactly symmetric.
pub fn assemble<T: Scalar>(
    profile: &EquilibriumProfile<T>,
    space: &WeightedSpace<T>,
) -> (Mat<T>, Mat<T>) {
    let n = space.len();
    assert_eq!(
        profile.x_nodes.len(),
        n,
        "profile tables and space must share nodes"
    );
    let kappa2 = profile.kappa * profile.kappa;
    let f43 = profile.params.four_minus_three_gamma();
    let mut k_mat = Mat::zeros(n, n);
    let mut m_mat = Mat::zeros(n, n);
    for q in 0..n {
        let x = space.x_nodes[q];
        let wg = space.weights[q] * profile.weight_factor[q];
        let stiff_w = wg * kappa2 * x * (T::one() - x);
        let zero_w = wg * f43 * profile.c_grav[q];
        for i in 0..n {
            let di = space.dphi[(q, i)];
            let pi = space.phi[(q, i)];
            for j in i..n {
                let contrib = stiff_w * di * space.dphi[(q, j)]
                    + zero_w * pi * space.phi[(q, j)];
                k_mat[(i, j)] += contrib;
                let mc = wg * pi * space.phi[(q, j)];
                m_mat[(i, j)] += mc;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            k_mat[(i, j)] = k_mat[(j, i)];
            m_mat[(i, j)] = m_mat[(j, i)];
        }
    }
    (k_mat, m_mat)
}

/// Galerkin matrices of the bare model operator (coefficient tables zeroed):
/// its spectrum is `mu_k = k (k + N/2 + 3/2)` exactly, which pins down the
/// correctness of nodes, weights, and recurrences in one shot.
pub fn assemble_pure_model<T: Scalar>(space: &WeightedSpace<T>) -> (Mat<T>, Mat<T>) {
    let n = space.len();
    let mut k_mat = Mat::zeros(n, n);
    let mut m_mat = Mat::zeros(n, n);
    for q in 0..n {
        let x = space.x_nodes[q];
        let w = space.weights[q];
        let sw = w * x * (T::one() - x);
        for i in 0..n {
            for j in i..n {
                k_mat[(i, j)] += sw * space.dphi[(q, i)] * space.dphi[(q, j)];
                m_mat[(i, j)] += w * space.phi[(q, i)] * space.phi[(q, j)];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            k_mat[(i, j)] = k_mat[(j, i)];
            m_mat[(i, j)] = m_mat[(j, i)];
        }
    }
    (k_mat, m_mat)
}

fn modes_from_matrices<T: Scalar>(
    profile: &EquilibriumProfile<T>,
    space: &WeightedSpace<T>,
    k_mat: &Mat<T>,
    m_mat: &Mat<T>,
    count: usize,
) -> Result<Vec<EigenMode<T>>, SpectralError> {
    let (vals, vecs) = generalized_sym_eigen(k_mat, m_mat)?;
    let kappa2 = profile.kappa * profile.kappa;
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut coeffs = vecs.column(idx);
        let center = space.eval_coeffs(&coeffs, T::zero());
        if center == T::zero() {
            return Err(SpectralError::ConvergenceFailure(format!(
                "mode {} has vanishing central amplitude",
                idx + 1
            )));
        }
        for c in coeffs.iter_mut() {
            *c /= center;
        }
        let phi = space.coeff_to_node(&coeffs);
        // mass-weighted norm
        let mc = m_mat.matvec(&coeffs);
        let norm2: T = coeffs.iter().zip(&mc).map(|(&a, &b)| a * b).sum();
        let surface = space.eval_coeffs(&coeffs, T::one());
        let sign_changes = counted_sign_changes(&phi);
        out.push(EigenMode {
            index: idx + 1,
            lambda: vals[idx] / kappa2,
            lambda_phys: vals[idx],
            phi,
            coeffs,
            phi_center: T::one(),
            phi_surface: surface,
            norm: norm2.max(T::zero()).sqrt(),
            sign_changes,
        });
    }
    // simplicity: strictly increasing eigenvalues
    for pair in out.windows(2) {
        if pair[1].lambda_phys <= pair[0].lambda_phys {
            return Err(SpectralError::ConvergenceFailure(
                "eigenvalues are not strictly increasing".into(),
            ));
        }
    }
    Ok(out)
}

/// Interior sign changes of a nodal mode, counting only values above the
/// relative amplitude floor.
fn counted_sign_changes<T: Scalar>(phi: &[T]) -> usize {
    let pmax = phi.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let floor = pmax * T::of(SIGN_COUNT_FLOOR);
    let mut last: Option<bool> = None;
    let mut changes = 0;
    for &v in phi {
        if v.abs() <= floor {
            continue;
        }
        let s = v > T::zero();
        if let Some(prev) = last {
            if prev != s {
                changes += 1;
            }
        }
        last = Some(s);
    }
    changes
}

/// First `count` eigenmodes by the Galerkin method, with a basis-refinement
/// stability check: eigenvalues must agree between sizes `n` and `5n/4` to
/// relative `tol`.
pub fn solve_modes<T: Scalar>(
    profile: &EquilibriumProfile<T>,
    count: usize,
    tol: T,
) -> Result<Vec<EigenMode<T>>, SpectralError> {
    assert!(count >= 1);
    let n = profile.x_nodes.len();
    let space = WeightedSpace::new(profile.params.big_n(), n)?;
    let (k_mat, m_mat) = assemble(profile, &space);
    let modes = modes_from_matrices(profile, &space, &k_mat, &m_mat, count)?;

    // refinement check on a 25% larger basis
    let n2 = n + n / 4;
    let space2 = WeightedSpace::new(profile.params.big_n(), n2)?;
    let profile2 = equilibrium::build(
        profile.params,
        profile.lane_emden().clone(),
        profile.boundary_series().clone(),
        &space2.x_nodes,
    )?;
    let (k2, m2) = assemble(&profile2, &space2);
    let modes2 = modes_from_matrices(&profile2, &space2, &k2, &m2, count)?;
    let scale = modes
        .iter()
        .map(|m| m.lambda_phys.abs())
        .fold(T::zero(), T::max);
    for (a, b) in modes.iter().zip(&modes2) {
        let diff = (a.lambda_phys - b.lambda_phys).abs();
        if diff > tol * a.lambda_phys.abs().max(scale * T::of(1e-3)) {
            return Err(SpectralError::ConvergenceFailure(format!(
                "eigenvalue {} changed by {:e} under basis refinement",
                a.index,
                diff.to_f64().unwrap_or(f64::NAN)
            )));
        }
    }
    Ok(modes)
}

/// Matching defect of two-sided shooting at `x = 1/2` for a trial physical
/// eigenvalue. Zero defect means `lambda_phys` is an eigenvalue.
///
/// Each branch starts from the regular solution's exact two-term expansion
/// `y = 1 - (lam - L0(end))/B(end) * t + O(t^2)` at `t = SHOOT_OFFSET`; the
/// endpoint data come in closed form from the profile, and the forward
/// integration damps any admixture of the non-normalizable second solution.
pub fn shoot<T: Scalar>(
    profile: &EquilibriumProfile<T>,
    lambda_phys: T,
) -> Result<T, SpectralError> {
    let lam = lambda_phys / (profile.kappa * profile.kappa);
    let big_n_half = T::of_usize(profile.params.big_n() as usize) / T::of(2.0);
    let (l0_center, l0_surface) = profile.coeff_zero_limits();

    let x0 = T::of(SHOOT_OFFSET);
    let guard = T::of(1e10);
    let solver = Dopri5::new(T::of(1e-12).max(T::epsilon() * T::of(64.0)), T::of(1e-12));

    // left branch in x
    let c1_left = -(lam - l0_center) / T::of(2.5);
    let (y0, dy0) = (T::one() + c1_left * x0, c1_left);
    let rhs_left = |x: T, y: &[T], dy: &mut [T]| {
        let (l0, l1) = profile
            .operator_coeffs_at(x)
            .unwrap_or((T::nan(), T::nan()));
        let b = T::of(2.5) * (T::one() - x) - big_n_half * x - l1;
        dy[0] = y[1];
        dy[1] = -(b * y[1] + (lam - l0) * y[0]) / (x * (T::one() - x));
    };
    let (left, blew) = solver.integrate_until(
        rhs_left,
        x0,
        &[y0, dy0],
        T::of(MATCH_POINT),
        |_, y| y[0].abs() > guard,
    )?;
    if blew {
        return Err(SpectralError::StiffnessBlowup(1e10));
    }
    let yl = left.ys.last().unwrap().clone();

    // right branch in z = 1 - x
    let c1_right = -(lam - l0_surface) / big_n_half;
    let (y1, dy1) = (T::one() + c1_right * x0, c1_right);
    let rhs_right = |z: T, y: &[T], dy: &mut [T]| {
        let (l0, l1) = profile
            .operator_coeffs_at(T::one() - z)
            .unwrap_or((T::nan(), T::nan()));
        let x = T::one() - z;
        let b = -(T::of(2.5) * (T::one() - x) - big_n_half * x - l1);
        dy[0] = y[1];
        dy[1] = -(b * y[1] + (lam - l0) * y[0]) / (z * (T::one() - z));
    };
    let (right, blew) = solver.integrate_until(
        rhs_right,
        x0,
        &[y1, dy1],
        T::of(MATCH_POINT),
        |_, y| y[0].abs() > guard,
    )?;
    if blew {
        return Err(SpectralError::StiffnessBlowup(1e10));
    }
    let yr = right.ys.last().unwrap().clone();
    let yr_dx = -yr[1]; // d/dx = -d/dz

    let wronskian = yl[1] * yr[0] - yl[0] * yr_dx;
    let scale = (yl[1] * yr[0]).abs().max((yl[0] * yr_dx).abs()).max(
        (yl[0].abs().max(yl[1].abs())) * (yr[0].abs().max(yr[1].abs())),
    );
    Ok(wronskian / scale.max(T::min_positive_value()))
}

/// Refines a trial eigenvalue by bracketing the shooting defect's sign
/// change around the guess and bisecting. Bisection is slower than secant
/// but immune to the defect's nonmonotone shape away from the root.
pub fn shoot_eigenvalue<T: Scalar>(
    profile: &EquilibriumProfile<T>,
    lambda_guess: T,
) -> Result<T, SpectralError> {
    let scale = lambda_guess.abs().max(T::of(1e-8));
    let mut delta = scale * T::of(0.01);
    let (mut a, mut b, mut fa) = loop {
        let a = lambda_guess - delta;
        let b = lambda_guess + delta;
        let fa = shoot(profile, a)?;
        let fb = shoot(profile, b)?;
        if (fa > T::zero()) != (fb > T::zero()) {
            break (a, b, fa);
        }
        delta *= T::of(4.0);
        if delta > scale {
            return Err(SpectralError::ConvergenceFailure(format!(
                "no defect sign change near lambda = {:e}",
                lambda_guess.to_f64().unwrap_or(f64::NAN)
            )));
        }
    };
    for _ in 0..80 {
        let mid = (a + b) / T::of(2.0);
        if (b - a).abs() <= mid.abs().max(T::of(1e-14)) * T::of(1e-10) {
            return Ok(mid);
        }
        let fm = shoot(profile, mid)?;
        if (fm > T::zero()) == (fa > T::zero()) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok((a + b) / T::of(2.0))
}

/// Versioned serialization of a mode table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModesRecord<T> {
    pub schema: u32,
    pub gamma: T,
    pub rho_c: T,
    pub basis: usize,
    pub x_nodes: Vec<T>,
    pub modes: Vec<EigenMode<T>>,
}

/// One row of the period-density scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodDensityRow<T> {
    pub rho_c: T,
    pub lambda1_phys: T,
    /// `Pi sqrt(rho_c)` with `Pi = 2 pi / sqrt(lambda1)`
    pub period_density: T,
}

/// Rebuilds the star at each central density and records the fundamental
/// frequency in physical time; the product `Pi sqrt(rho_c)` must come out
/// constant.
pub fn period_density_scan<T: Scalar>(
    gamma: T,
    rho_c_list: &[T],
    basis_size: usize,
    ode_tol: T,
) -> Result<Vec<PeriodDensityRow<T>>, SpectralError> {
    let mut rows = Vec::with_capacity(rho_c_list.len());
    for &rho_c in rho_c_list {
        let params = crate::lane_emden::GasParams::new(gamma)?.with_rho_c(rho_c)?;
        let le = crate::lane_emden::integrate(&params, ode_tol)?;
        let bs = crate::lane_emden::boundary_series(&params, &le, 8)?;
        let space = WeightedSpace::new(params.big_n(), basis_size)?;
        let profile = equilibrium::build(params, le, bs, &space.x_nodes)?;
        let (k_mat, m_mat) = assemble(&profile, &space);
        let modes = modes_from_matrices(&profile, &space, &k_mat, &m_mat, 1)?;
        let lambda1 = modes[0].lambda_phys;
        if lambda1 <= T::zero() {
            return Err(SpectralError::NonOscillatory(
                lambda1.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let period = T::of(2.0) * T::PI() / lambda1.sqrt();
        rows.push(PeriodDensityRow {
            rho_c,
            lambda1_phys: lambda1,
            period_density: period * rho_c.sqrt(),
        });
    }
    Ok(rows)
}

/// Lowest `count` eigenvalues of the Schroedinger normal form
/// `-d^2/dxi^2 + q` on the travel-time interval, by second-order finite
/// differences with Richardson extrapolation. Used only as a cross-check.
pub fn schrodinger_eigenvalues<T: Scalar>(
    profile: &EquilibriumProfile<T>,
    count: usize,
    grid: usize,
) -> Result<Vec<T>, SpectralError> {
    let solve = |n: usize| -> Result<Vec<T>, SpectralError> {
        let delta = profile.xi_plus * T::of(2e-4);
        let span = profile.xi_plus - T::of(2.0) * delta;
        let h = span / T::of_usize(n + 1);
        let mut diag = Vec::with_capacity(n);
        for i in 1..=n {
            let xi = delta + h * T::of_usize(i);
            let q = profile.q_potential(xi)?;
            diag.push(T::of(2.0) / (h * h) + q);
        }
        let off = vec![-T::one() / (h * h); n - 1];
        Ok(tridiag_smallest_eigenvalues(&diag, &off, count))
    };
    let coarse = solve(grid)?;
    let fine = solve(2 * grid)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(&c, &f)| (T::of(4.0) * f - c) / T::of(3.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lane_emden::{self, GasParams};
    use approx::assert_abs_diff_eq;

    fn pipeline(gamma: f64, n: usize) -> (EquilibriumProfile<f64>, WeightedSpace<f64>) {
        let p = GasParams::new(gamma).unwrap();
        let le = lane_emden::integrate(&p, 1e-12).unwrap();
        let bs = lane_emden::boundary_series(&p, &le, 8).unwrap();
        let space = WeightedSpace::new(p.big_n(), n).unwrap();
        let profile = equilibrium::build(p, le, bs, &space.x_nodes).unwrap();
        (profile, space)
    }

    #[test]
    fn pure_model_spectrum_is_exact() {
        for big_n in [4u32, 6, 8, 10] {
            let space = WeightedSpace::<f64>::new(big_n, 24).unwrap();
            let (k, m) = assemble_pure_model(&space);
            let (vals, _) = generalized_sym_eigen(&k, &m).unwrap();
            for (n, &lam) in vals.iter().take(6).enumerate() {
                let expected = space.basis.operator_eigenvalue(n);
                if n == 0 {
                    assert!(lam.abs() <= 1e-10, "N={big_n}: ground value {lam}");
                } else {
                    assert!(
                        ((lam - expected) / expected).abs() <= 1e-10,
                        "N={big_n}, n={n}: {lam} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn matrices_are_symmetric_and_mass_spd() {
        let (profile, space) = pipeline(1.5, 40);
        let (k, m) = assemble(&profile, &space);
        assert!(k.max_asymmetry() <= 1e-12 * k.max_abs());
        assert!(m.max_asymmetry() <= 1e-12 * m.max_abs());
        assert!(crate::linalg::cholesky(&m).is_ok());
    }

    #[test]
    fn constant_block_of_stiffness() {
        // with a constants-only test vector: (L 1 | 1) = (4-3g) int dP/dr r^3 dr
        let (profile, space) = pipeline(1.5, 60);
        let (k, _m) = assemble(&profile, &space);
        let ones = vec![1.0; space.len()];
        let c = space.node_to_coeff(&ones);
        let kc = k.matvec(&c);
        let quad: f64 = c.iter().zip(&kc).map(|(a, b)| a * b).sum();
        // independent quadrature of (4-3 gamma) c_grav in the star measure
        let f43 = profile.params.four_minus_three_gamma();
        let direct: f64 = (0..space.len())
            .map(|q| {
                space.weights[q] * profile.weight_factor[q] * f43 * profile.c_grav[q]
            })
            .sum();
        assert_abs_diff_eq!(quad, direct, epsilon = 1e-10 * direct.abs());
        // and it is negative for gamma = 3/2 (4 - 3 gamma < 0, c_grav < 0)
        assert!(quad > 0.0);
    }

    #[test]
    fn critical_gamma_has_zero_fundamental_with_flat_mode() {
        let (profile, _space) = pipeline(4.0 / 3.0, 60);
        let modes = solve_modes(&profile, 3, 1e-7).unwrap();
        assert!(
            modes[0].lambda_phys.abs() <= 1e-8 * modes[1].lambda_phys,
            "lambda1 = {:e} vs lambda2 = {:e}",
            modes[0].lambda_phys,
            modes[1].lambda_phys
        );
        for &v in &modes[0].phi {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn sign_map_of_fundamental() {
        for (gamma, expect_positive) in [(2.0, true), (1.5, true), (1.25, false)] {
            let n = if gamma == 1.25 { 200 } else { 60 };
            let (profile, _space) = pipeline(gamma, n);
            let modes = solve_modes(&profile, 2, 1e-5).unwrap();
            assert_eq!(
                modes[0].lambda_phys > 0.0,
                expect_positive,
                "gamma={gamma}: lambda1 = {}",
                modes[0].lambda_phys
            );
            assert!(modes[1].lambda_phys > modes[0].lambda_phys);
        }
    }

    #[test]
    fn sturm_oscillation_indexing() {
        // resolved regimes: mode n has exactly n-1 interior sign changes
        for gamma in [2.0, 1.5, 4.0 / 3.0] {
            let (profile, _space) = pipeline(gamma, 80);
            let modes = solve_modes(&profile, 4, 1e-6).unwrap();
            for mode in &modes {
                assert_eq!(
                    mode.sign_changes,
                    mode.index - 1,
                    "gamma={gamma}, mode {}",
                    mode.index
                );
            }
        }
    }

    #[test]
    fn modes_are_orthogonal_with_unit_rayleigh_quotients() {
        let (profile, space) = pipeline(1.5, 60);
        let (k, m) = assemble(&profile, &space);
        let modes = modes_from_matrices(&profile, &space, &k, &m, 4).unwrap();
        for i in 0..4 {
            let ci = &modes[i].coeffs;
            let kci = k.matvec(ci);
            let mci = m.matvec(ci);
            let num: f64 = ci.iter().zip(&kci).map(|(a, b)| a * b).sum();
            let den: f64 = ci.iter().zip(&mci).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(
                num / den,
                modes[i].lambda_phys,
                epsilon = 1e-12 * modes[i].lambda_phys.abs()
            );
            for j in 0..i {
                let cj = &modes[j].coeffs;
                let dot: f64 = cj.iter().zip(&mci).map(|(a, b)| a * b).sum();
                let scale = modes[i].norm * modes[j].norm;
                assert!(
                    (dot / (scale * scale).sqrt()).abs() <= 1e-10,
                    "modes {i},{j} overlap {dot}"
                );
            }
        }
    }

    #[test]
    fn fundamental_is_variational_minimum() {
        let (profile, space) = pipeline(1.5, 48);
        let (k, m) = assemble(&profile, &space);
        let modes = modes_from_matrices(&profile, &space, &k, &m, 1).unwrap();
        let lam1 = modes[0].lambda_phys;
        // Rayleigh quotient of arbitrary vectors stays above lambda1
        for seed in 0..5u64 {
            let v: Vec<f64> = (0..space.len())
                .map(|i| ((seed + 1) as f64 * (i as f64 + 0.7)).sin())
                .collect();
            let kv = k.matvec(&v);
            let mv = m.matvec(&v);
            let num: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
            let den: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
            assert!(num / den >= lam1 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn proof_identity_sign() {
        // (L 1 | Phi1) = ((4-3g) c_grav | Phi1), sign opposite to 4-3 gamma
        for gamma in [1.5, 1.25] {
            // the surface-concentrated gamma = 5/4 mode needs the larger
            // basis before its interior is pointwise resolved
            let n = if gamma == 1.25 { 360 } else { 60 };
            let (profile, space) = pipeline(gamma, n);
            let (k, m) = assemble(&profile, &space);
            let modes = modes_from_matrices(&profile, &space, &k, &m, 1).unwrap();
            let f43 = profile.params.four_minus_three_gamma();
            let mut ip = 0.0;
            for q in 0..space.len() {
                ip += space.weights[q]
                    * profile.weight_factor[q]
                    * f43
                    * profile.c_grav[q]
                    * modes[0].phi[q];
            }
            // Phi1 > 0 over its resolvable range, c_grav < 0:
            // sign(ip) = -sign(4 - 3 gamma)
            let pmax = modes[0].phi.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            assert!(modes[0]
                .phi
                .iter()
                .filter(|v| v.abs() > 1e-2 * pmax)
                .all(|&v| v > 0.0));
            assert_eq!(ip > 0.0, f43 < 0.0, "gamma={gamma}");
        }
    }

    #[test]
    fn endpoint_regularity_of_modes() {
        // Phi(x) - Phi(0) = O(x): difference quotients settle near each end
        let (profile, space) = pipeline(1.5, 60);
        let (k, m) = assemble(&profile, &space);
        let modes = modes_from_matrices(&profile, &space, &k, &m, 2).unwrap();
        for mode in &modes {
            let v0 = space.eval_coeffs(&mode.coeffs, 0.0);
            let s6 = (space.eval_coeffs(&mode.coeffs, 1e-6) - v0) / 1e-6;
            let s7 = (space.eval_coeffs(&mode.coeffs, 1e-7) - v0) / 1e-7;
            assert!((s7 / s6 - 1.0).abs() < 1e-3, "mode {}: {s6} vs {s7}", mode.index);
            let v1 = space.eval_coeffs(&mode.coeffs, 1.0);
            let t6 = (space.eval_coeffs(&mode.coeffs, 1.0 - 1e-6) - v1) / 1e-6;
            let t7 = (space.eval_coeffs(&mode.coeffs, 1.0 - 1e-7) - v1) / 1e-7;
            assert!((t7 / t6 - 1.0).abs() < 1e-3);
            assert!(v1.abs() > 1e-6);
        }
    }

    #[test]
    fn shooting_confirms_galerkin_eigenvalues() {
        let (profile, _space) = pipeline(1.5, 80);
        let modes = solve_modes(&profile, 3, 1e-7).unwrap();
        for mode in &modes {
            let lam = mode.lambda_phys;
            // defect changes sign across the eigenvalue
            let below = shoot(&profile, lam * 0.99).unwrap();
            let above = shoot(&profile, lam * 1.01).unwrap();
            assert!(
                below * above < 0.0,
                "mode {}: defect does not bracket ({below}, {above})",
                mode.index
            );
            let refined = shoot_eigenvalue(&profile, lam).unwrap();
            assert!(
                ((refined - lam) / lam).abs() <= 1e-6,
                "mode {}: shoot {refined} vs galerkin {lam}",
                mode.index
            );
        }
    }

    #[test]
    fn shooting_defect_vanishes_at_critical_gamma_zero_mode() {
        let (profile, _space) = pipeline(4.0 / 3.0, 60);
        let defect = shoot(&profile, 0.0).unwrap();
        assert!(defect.abs() <= 1e-9, "defect at zero mode: {defect}");
    }

    #[test]
    fn period_density_law() {
        let rows = period_density_scan(1.5f64, &[0.5, 1.0, 2.0], 60, 1e-11).unwrap();
        let base: f64 = rows[0].period_density;
        for row in &rows {
            assert!(
                ((row.period_density - base) / base).abs() <= 1e-6,
                "Pi sqrt(rho_c) spread: {} vs {}",
                row.period_density,
                base
            );
        }
        // lambda1 proportional to rho_c
        let ratio0 = rows[0].lambda1_phys / rows[0].rho_c;
        for row in &rows {
            assert_abs_diff_eq!(
                row.lambda1_phys / row.rho_c,
                ratio0,
                epsilon = 1e-6 * ratio0
            );
        }
        // single-entry list is trivially constant
        let single = period_density_scan(2.0, &[1.0], 48, 1e-10).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn schrodinger_form_cross_check() {
        let (profile, _space) = pipeline(1.5, 60);
        let modes = solve_modes(&profile, 2, 1e-7).unwrap();
        let fd = schrodinger_eigenvalues(&profile, 2, 2000).unwrap();
        for (mode, &lam_fd) in modes.iter().zip(&fd) {
            assert!(
                ((lam_fd - mode.lambda_phys) / mode.lambda_phys).abs() <= 1e-4,
                "mode {}: FD {lam_fd} vs galerkin {}",
                mode.index,
                mode.lambda_phys
            );
        }
    }
}
