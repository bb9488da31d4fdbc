//! Dimensionless equilibrium structure: the polytropic hydrostatic ODE
//! `(xi^2 theta')' / xi^2 + theta^n = 0`, its first zero (the vacuum
//! surface), and a graded double series expansion of `U = rho^{gamma-1}`
//! around that surface.

use crate::ode::{brent, Dopri5, OdeError, OdeSolution};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default guard radius: every admissible gamma has its zero well below this.
pub const XI_MAX_DEFAULT: f64 = 50.0;
/// Offset at which integration starts from the center series, removing the
/// coordinate singularity of the `2/xi` term.
pub const EPS_START: f64 = 1e-3;
/// Center-series truncation order used for the integration start.
pub const CENTER_SERIES_ORDER: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaneEmdenError {
    #[error(
        "InvalidGamma: gamma = {0} is not admissible; gamma must be one of {{2, 1.5, 1.333..., 1.25}}"
    )]
    InvalidGamma(f64),
    #[error("InvalidParameter: {0} must be positive")]
    InvalidParameter(&'static str),
    #[error("NoZeroFound: theta stayed positive up to xi = {0}; the profile does not reach vacuum")]
    NoZeroFound(f64),
    #[error("FitDiverged: boundary-series matching residual {0:e} exceeds {1:e}")]
    FitDiverged(f64, f64),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Physical configuration of the gas: adiabatic exponent and normalizations.
///
/// Only exponents with integer `N/2 = gamma/(gamma-1)` are admissible
/// (`gamma` in `{2, 3/2, 4/3, 5/4}`, i.e. `N` in `{4, 6, 8, 10}`); the
/// constructor snaps a nearby floating-point `gamma` onto the exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams<T> {
    gamma: T,
    /// integer polytropic index n = 1/(gamma-1) = (N-2)/2
    n_index: u32,
    /// N = 2 gamma / (gamma - 1)
    big_n: u32,
    /// pressure constant A in P = A rho^gamma
    a_pressure: T,
    /// gravitational constant
    g0: T,
    /// central density
    rho_c: T,
}

impl<T: Scalar> GasParams<T> {
    /// Defaults: `A = 1/gamma`, `g0 = 1/(4 pi)` (so `K = gamma - 1`),
    /// `rho_c = 1`.
    pub fn new(gamma: T) -> Result<Self, LaneEmdenError> {
        let g = gamma.to_f64().unwrap_or(f64::NAN);
        let big_n = [4u32, 6, 8, 10]
            .into_iter()
            .find(|&n| (g - admissible_gamma(n)).abs() <= 1e-9)
            .ok_or(LaneEmdenError::InvalidGamma(g))?;
        let gamma = T::one() + T::of(2.0) / T::of_usize((big_n - 2) as usize);
        Ok(Self {
            gamma,
            n_index: (big_n - 2) / 2,
            big_n,
            a_pressure: T::one() / gamma,
            g0: T::one() / (T::of(4.0) * T::PI()),
            rho_c: T::one(),
        })
    }

    pub fn with_rho_c(mut self, rho_c: T) -> Result<Self, LaneEmdenError> {
        if rho_c <= T::zero() {
            return Err(LaneEmdenError::InvalidParameter("rho_c"));
        }
        self.rho_c = rho_c;
        Ok(self)
    }

    pub fn with_pressure_const(mut self, a: T) -> Result<Self, LaneEmdenError> {
        if a <= T::zero() {
            return Err(LaneEmdenError::InvalidParameter("A"));
        }
        self.a_pressure = a;
        Ok(self)
    }

    pub fn with_gravity(mut self, g0: T) -> Result<Self, LaneEmdenError> {
        if g0 <= T::zero() {
            return Err(LaneEmdenError::InvalidParameter("g0"));
        }
        self.g0 = g0;
        Ok(self)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Integer polytropic index `n = 1/(gamma - 1)`.
    pub fn n_index(&self) -> u32 {
        self.n_index
    }

    /// `N = 2 gamma/(gamma - 1)`, the weight parameter of the pulsation
    /// problem.
    pub fn big_n(&self) -> u32 {
        self.big_n
    }

    pub fn pressure_const(&self) -> T {
        self.a_pressure
    }

    pub fn gravity(&self) -> T {
        self.g0
    }

    pub fn rho_c(&self) -> T {
        self.rho_c
    }

    /// `K = 4 pi g0 (gamma - 1) / (A gamma)`.
    pub fn k_const(&self) -> T {
        T::of(4.0) * T::PI() * self.g0 * (self.gamma - T::one()) / (self.a_pressure * self.gamma)
    }

    /// Length unit of the dimensionless profile:
    /// `r = rho_c^{(gamma-2)/2} K^{-1/2} xi`.
    pub fn length_scale(&self) -> T {
        self.rho_c.powf((self.gamma - T::of(2.0)) / T::of(2.0)) / self.k_const().sqrt()
    }

    /// Stellar radius for a given first zero.
    pub fn radius(&self, xi1: T) -> T {
        self.length_scale() * xi1
    }

    /// Total mass for a given mass coefficient `mu1`.
    pub fn total_mass(&self, mu1: T) -> T {
        T::of(4.0)
            * T::PI()
            * self.rho_c.powf((T::of(3.0) * self.gamma - T::of(4.0)) / T::of(2.0))
            * self.k_const().powf(T::of(-1.5))
            * mu1
    }

    /// `(4 - 3 gamma)` computed from the integer `N` so it vanishes exactly
    /// at `gamma = 4/3`.
    pub fn four_minus_three_gamma(&self) -> T {
        T::of(self.big_n as f64 - 8.0) / T::of(self.big_n as f64 - 2.0)
    }
}

fn admissible_gamma(big_n: u32) -> f64 {
    1.0 + 2.0 / (big_n as f64 - 2.0)
}

/// Coefficients `a_k` of the center expansion `theta = sum a_k xi^{2k}`,
/// through order `xi^{2 order}`.
pub fn center_series<T: Scalar>(params: &GasParams<T>, order: usize) -> Vec<T> {
    center_series_for_index(params.n_index, order)
}

/// Same, keyed by the integer polytropic index alone.
pub fn center_series_for_index<T: Scalar>(n_index: u32, order: usize) -> Vec<T> {
    assert!(order >= 1);
    let mut a = vec![T::zero(); order + 1];
    a[0] = T::one();
    for k in 0..order {
        // theta^n truncated to u^k, u = xi^2
        let mut pow = vec![T::zero(); k + 1];
        pow[0] = T::one();
        for _ in 0..n_index {
            let mut next = vec![T::zero(); k + 1];
            for (i, &pi) in pow.iter().enumerate() {
                if pi == T::zero() {
                    continue;
                }
                for (j, &aj) in a.iter().take(k + 1 - i).enumerate() {
                    next[i + j] += pi * aj;
                }
            }
            pow = next;
        }
        let c_k = pow[k];
        let kf = T::of_usize(k);
        a[k + 1] = -c_k / (T::of(2.0) * (kf + T::one()) * (T::of(2.0) * kf + T::of(3.0)));
    }
    a
}

fn eval_center_series<T: Scalar>(coeffs: &[T], xi: T) -> (T, T) {
    let u = xi * xi;
    let mut theta = T::zero();
    let mut dtheta_du = T::zero();
    for (k, &a) in coeffs.iter().enumerate().rev() {
        theta = theta * u + a;
        if k >= 1 {
            dtheta_du = dtheta_du * u + T::of_usize(k) * a;
        }
    }
    // recompute theta by Horner separately for the derivative pass above
    let mut th = T::zero();
    for &a in coeffs.iter().rev() {
        th = th * u + a;
    }
    theta = th;
    (theta, T::of(2.0) * xi * dtheta_du)
}

/// Dimensionless equilibrium profile with its vacuum zero.
#[derive(Debug, Clone)]
pub struct LaneEmdenSolution<T> {
    /// accepted step locations, ending exactly at `xi1`
    pub xi_grid: Vec<T>,
    pub theta: Vec<T>,
    pub dtheta: Vec<T>,
    /// first zero of theta
    pub xi1: T,
    /// `mu1 = (-xi^2 theta')|_{xi1}`
    pub mu1: T,
    pub n_index: u32,
    dense: OdeSolution<T>,
    center: Vec<T>,
    eps_start: T,
}

impl<T: Scalar> LaneEmdenSolution<T> {
    pub fn theta_at(&self, xi: T) -> T {
        if xi <= self.eps_start {
            eval_center_series(&self.center, xi).0
        } else {
            self.dense.eval_component(xi.min(self.xi1), 0)
        }
    }

    pub fn dtheta_at(&self, xi: T) -> T {
        if xi <= self.eps_start {
            eval_center_series(&self.center, xi).1
        } else {
            self.dense.eval_component(xi.min(self.xi1), 1)
        }
    }
}

/// Versioned serialization of a completed integration:
/// `{gamma, xi1, mu1, grid: [[xi, theta, dtheta], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaneEmdenRecord<T> {
    pub schema: u32,
    pub gamma: T,
    pub xi1: T,
    pub mu1: T,
    pub grid: Vec<[T; 3]>,
}

impl<T: Scalar> LaneEmdenSolution<T> {
    pub fn record(&self, gamma: T) -> LaneEmdenRecord<T> {
        LaneEmdenRecord {
            schema: crate::validation::SCHEMA_VERSION,
            gamma,
            xi1: self.xi1,
            mu1: self.mu1,
            grid: self
                .xi_grid
                .iter()
                .zip(self.theta.iter().zip(&self.dtheta))
                .map(|(&xi, (&th, &dth))| [xi, th, dth])
                .collect(),
        }
    }
}

/// Integrates the equilibrium ODE and locates the vacuum zero `xi1`.
pub fn integrate<T: Scalar>(
    params: &GasParams<T>,
    tol: T,
) -> Result<LaneEmdenSolution<T>, LaneEmdenError> {
    integrate_index(params.n_index, tol, T::of(XI_MAX_DEFAULT))
}

/// Integration keyed by the polytropic index alone; also the path used to
/// demonstrate that indices at or beyond the admissible range (`n = 5`,
/// i.e. `gamma = 6/5`) never reach vacuum.
pub fn integrate_index<T: Scalar>(
    n_index: u32,
    tol: T,
    xi_max: T,
) -> Result<LaneEmdenSolution<T>, LaneEmdenError> {
    if tol <= T::zero() {
        return Err(LaneEmdenError::InvalidParameter("tol"));
    }
    let eps = T::of(EPS_START);
    let center = center_series_for_index::<T>(n_index, CENTER_SERIES_ORDER);
    let (theta0, dtheta0) = eval_center_series(&center, eps);

    let rhs = move |xi: T, y: &[T], dy: &mut [T]| {
        dy[0] = y[1];
        dy[1] = -y[0].powi(n_index as i32) - T::of(2.0) / xi * y[1];
    };

    // tolerances floored so low-precision scalar types stay integrable
    let floor = T::epsilon() * T::of(64.0);
    let solver = Dopri5::new(tol.max(floor), (tol * T::of(1e-3)).max(floor));
    let (dense, stopped) = solver.integrate_until(
        rhs,
        eps,
        &[theta0, dtheta0],
        xi_max,
        |_, y| y[0] <= T::zero(),
    )?;
    if !stopped {
        return Err(LaneEmdenError::NoZeroFound(
            xi_max.to_f64().unwrap_or(f64::NAN),
        ));
    }

    // bracket: last two accepted steps
    let n_pts = dense.ts.len();
    let lo = dense.ts[n_pts - 2];
    let hi = dense.ts[n_pts - 1];
    let xtol = T::epsilon() * T::of(32.0) * hi;
    let xi1 = brent(|xi| dense.eval_component(xi, 0), lo, hi, xtol, 200)?;
    let dtheta1 = dense.eval_component(xi1, 1);
    let mu1 = -xi1 * xi1 * dtheta1;

    let mut xi_grid = Vec::with_capacity(n_pts);
    let mut theta = Vec::with_capacity(n_pts);
    let mut dtheta = Vec::with_capacity(n_pts);
    for (i, &xi) in dense.ts.iter().enumerate() {
        if xi < xi1 {
            xi_grid.push(xi);
            theta.push(dense.ys[i][0]);
            dtheta.push(dense.ys[i][1]);
        }
    }
    xi_grid.push(xi1);
    theta.push(T::zero());
    dtheta.push(dtheta1);

    Ok(LaneEmdenSolution {
        xi_grid,
        theta,
        dtheta,
        xi1,
        mu1,
        n_index,
        dense,
        center,
        eps_start: eps,
    })
}

/// Graded double series for `U = rho^{gamma-1}` around the vacuum surface:
///
/// `U = C3 * sigma * sum_{j,k} u_{jk} sigma^j tau^k`,
/// `sigma = (R - r)/R`, `tau = C' sigma^{m+1}`, `m = 1/(gamma-1)`.
///
/// The `u_{jk}` are pure numbers fixed by the hydrostatic ODE; only the
/// leading amplitude `C3` is fitted against the integrated profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundarySeries<T> {
    /// leading coefficient: `U ~ C3 (R-r)/R` at the surface
    pub c3: T,
    /// `C' = K R^2 C3^{m-1}`
    pub cprime: T,
    /// truncation: terms with `j + k (m+1) <= order` are kept
    pub order: usize,
    /// `(j, k) -> u_{jk}`
    pub terms: Vec<((u32, u32), T)>,
    /// stellar radius the series is anchored to
    pub r_big: T,
    pub m: u32,
}

/// The exponent-pair recurrence for the normalized coefficients `u_{jk}`.
/// With `e(j,k) = 1 + j + k (m+1)`:
/// `e (e-1) u_{jk} = 2 sum_{j'<j} e(j',k) u_{j'k} - [W^m]_{j,k-1}`
/// where `W = sum u_{jk} sigma^j tau^k`.
pub fn boundary_series_coefficients<T: Scalar>(m: u32, order: usize) -> Vec<((u32, u32), T)> {
    let mp1 = m + 1;
    let k_max = order / mp1 as usize;
    // w[k][j]
    let mut w: Vec<Vec<T>> = (0..=k_max)
        .map(|k| vec![T::zero(); order + 1 - k * mp1 as usize])
        .collect();
    w[0][0] = T::one();

    let grading = |j: usize, k: usize| j + k * mp1 as usize;
    let e_of = |j: usize, k: usize| T::of_usize(1 + j + k * mp1 as usize);

    for g in 1..=order {
        for k in 0..=k_max {
            if k * mp1 as usize > g {
                break;
            }
            let j = g - k * mp1 as usize;
            if j >= w[k].len() {
                continue;
            }
            let e = e_of(j, k);
            let mut rhs = T::zero();
            for jp in 0..j {
                rhs += T::of(2.0) * e_of(jp, k) * w[k][jp];
            }
            if k >= 1 {
                let wm = graded_power(&w, m as usize, order, mp1 as usize);
                if j < wm[k - 1].len() {
                    rhs -= wm[k - 1][j];
                }
            }
            w[k][j] = rhs / (e * (e - T::one()));
        }
    }

    let mut out = Vec::new();
    for (k, row) in w.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if grading(j, k) <= order {
                out.push(((j as u32, k as u32), c));
            }
        }
    }
    out
}

/// `W^p` in the graded (sigma, tau) representation, truncated at `order`.
fn graded_power<T: Scalar>(
    w: &[Vec<T>],
    p: usize,
    order: usize,
    mp1: usize,
) -> Vec<Vec<T>> {
    let k_max = w.len() - 1;
    let zero_like = |_: usize| -> Vec<Vec<T>> {
        (0..=k_max)
            .map(|k| vec![T::zero(); order + 1 - (k * mp1).min(order + 1)])
            .collect()
    };
    let mut acc = zero_like(0);
    acc[0][0] = T::one();
    for _ in 0..p {
        let mut next = zero_like(0);
        for k1 in 0..=k_max {
            for j1 in 0..acc[k1].len() {
                let a = acc[k1][j1];
                if a == T::zero() {
                    continue;
                }
                for k2 in 0..=k_max - k1 {
                    for j2 in 0..w[k2].len() {
                        let b = w[k2][j2];
                        if b == T::zero() {
                            continue;
                        }
                        let (k, j) = (k1 + k2, j1 + j2);
                        if j + k * mp1 <= order && j < next[k].len() {
                            next[k][j] += a * b;
                        }
                    }
                }
            }
        }
        acc = next;
    }
    acc
}

impl<T: Scalar> BoundarySeries<T> {
    /// `U(r)` from the series.
    pub fn eval_u(&self, r: T) -> T {
        self.eval_u_sigma((self.r_big - r) / self.r_big)
    }

    /// `U` as a function of `sigma = (R - r)/R` directly.
    pub fn eval_u_sigma(&self, sigma: T) -> T {
        self.c3 * sigma * self.shape(sigma)
    }

    /// `dU/dr` from the series.
    pub fn eval_du_dr(&self, r: T) -> T {
        self.eval_du_dr_sigma((self.r_big - r) / self.r_big)
    }

    /// `dU/dr` as a function of `sigma` directly.
    pub fn eval_du_dr_sigma(&self, sigma: T) -> T {
        let mut acc = T::zero();
        for &((j, k), u) in &self.terms {
            let e = T::of_usize((1 + j + k * (self.m + 1)) as usize);
            let pow = sigma.powi((j + k * (self.m + 1)) as i32);
            acc += u * e * pow * self.cprime.powi(k as i32);
        }
        -(self.c3 / self.r_big) * acc
    }

    /// The parenthesized shape factor `sum u_{jk} sigma^j tau^k`.
    pub fn shape(&self, sigma: T) -> T {
        let tau = self.cprime * sigma.powi(self.m as i32 + 1);
        self.terms
            .iter()
            .map(|&((j, k), u)| u * sigma.powi(j as i32) * tau.powi(k as i32))
            .sum()
    }

    /// Magnitude of the first omitted term, used as the agreement budget in
    /// consistency checks.
    pub fn truncation_estimate(&self, r: T) -> T {
        let sigma = ((self.r_big - r) / self.r_big).abs();
        sigma.powi(self.order as i32 + 1)
    }
}

/// Fits the surface expansion of `U = rho^{gamma-1}` against the integrated
/// profile. The shape coefficients are exact; the single amplitude `C3` is
/// obtained by least squares over the window `(R-r)/R` in `[1e-4, 1e-2]`.
pub fn boundary_series<T: Scalar>(
    params: &GasParams<T>,
    le: &LaneEmdenSolution<T>,
    order: usize,
) -> Result<BoundarySeries<T>, LaneEmdenError> {
    assert!(order >= 1, "series order must be at least 1");
    let m = le.n_index; // m = 1/(gamma-1) equals the polytropic index
    let terms = boundary_series_coefficients::<T>(m, order);
    let r_big = params.radius(le.xi1);
    let k_const = params.k_const();
    let ucoef = params.rho_c().powf(params.gamma() - T::one());

    // collocation window, log-spaced
    let n_fit = 16;
    let sigmas: Vec<T> = (0..n_fit)
        .map(|i| {
            let t = i as f64 / (n_fit - 1) as f64;
            T::of(10f64.powf(-4.0 + 2.0 * t))
        })
        .collect();
    let u_data: Vec<T> = sigmas
        .iter()
        .map(|&s| ucoef * le.theta_at(le.xi1 * (T::one() - s)))
        .collect();

    // initial guess from the leading term
    let mut c3 = ucoef * le.dtheta_at(le.xi1).abs() * le.xi1;
    let mut series = BoundarySeries {
        c3,
        cprime: T::zero(),
        order,
        terms,
        r_big,
        m,
    };
    for _ in 0..60 {
        series.cprime = k_const * r_big * r_big * c3.powi(m as i32 - 1);
        let mut num = T::zero();
        let mut den = T::zero();
        for (i, &s) in sigmas.iter().enumerate() {
            let model = s * series.shape(s);
            num += u_data[i] * model;
            den += model * model;
        }
        let next = num / den;
        let done = (next - c3).abs() <= T::epsilon() * T::of(8.0) * c3.abs();
        c3 = next;
        series.c3 = c3;
        if done {
            break;
        }
    }
    series.cprime = k_const * r_big * r_big * c3.powi(m as i32 - 1);

    // residual over the window, relative to the data scale
    let scale = u_data
        .iter()
        .fold(T::zero(), |acc, &u| acc.max(u.abs()))
        .max(T::min_positive_value());
    let mut resid = T::zero();
    for (i, &s) in sigmas.iter().enumerate() {
        let r = r_big * (T::one() - s);
        resid = resid.max((series.eval_u(r) - u_data[i]).abs());
    }
    let resid = resid / scale;
    let budget = T::of(1e-8);
    if resid > budget {
        return Err(LaneEmdenError::FitDiverged(
            resid.to_f64().unwrap_or(f64::NAN),
            budget.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(series)
}
