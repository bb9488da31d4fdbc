//! Dimensional equilibrium star built from the dimensionless profile:
//! density/pressure/mass tables, the coordinate `x` on (0, 1) that carries
//! the pulsation problem, and the operator coefficient tables evaluated at
//! the spectral nodes.
//!
//! The map `r -> x` goes through the travel-time variable
//! `xi_L(r) = int_0^r sqrt(rho/(gamma P)) dr'` via `x = sin^2(kappa xi_L/2)`,
//! `kappa = pi/xi_+`. The integrand behaves like `(R - r)^{-1/2}` at the
//! surface, so all quadratures substitute `R - r = s^2`, after which the
//! integrand is analytic on the whole star.

use crate::jacobi::{gauss_legendre_unit, QuadRule};
use crate::lane_emden::{BoundarySeries, GasParams, LaneEmdenError, LaneEmdenSolution};
use crate::ode::OdeError;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Fraction `(R - r)/R` below which fields switch from the integrated
/// profile to the surface series (where `dU/dr` is best conditioned).
pub const SURFACE_SWITCH: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("InversionFailed: the travel-time map lost monotonicity near w = {0}")]
    InversionFailed(f64),
    #[error("InversionFailed: target {0} outside the covered range")]
    InversionOutOfRange(f64),
    #[error(transparent)]
    LaneEmden(#[from] LaneEmdenError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Pointwise physical fields of the equilibrium at one radius.
#[derive(Debug, Clone, Copy)]
pub struct Fields<T> {
    /// `U = rho^{gamma-1}`
    pub u: T,
    /// `dU/dr`
    pub du_dr: T,
    pub rho: T,
    pub pressure: T,
    pub dp_dr: T,
    /// enclosed mass
    pub mass: T,
}

/// Theta keyed by the distance `gap = xi1 - xi` from the surface, switching
/// to the surface series where the profile is tiny. Taking the gap directly
/// keeps relative accuracy all the way to the zero (recomputing it from `xi`
/// would cancel).
fn theta_from_surface_gap<T: Scalar>(
    le: &LaneEmdenSolution<T>,
    bs: &BoundarySeries<T>,
    ucoef: T,
    gap: T,
) -> T {
    if gap < T::of(SURFACE_SWITCH) * le.xi1 {
        (bs.eval_u_sigma(gap / le.xi1) / ucoef).max(T::zero())
    } else {
        le.theta_at(le.xi1 - gap).max(T::zero())
    }
}

/// Panel table for `J(w) = int_0^w 2 s / sqrt(theta(xi1 - s^2)) ds`,
/// the desingularized travel-time integral measured from the surface.
/// The integrand is supplied by the caller so the same table works during
/// and after construction of the profile.
#[derive(Debug, Clone)]
struct TravelTimeTable<T> {
    w_pts: Vec<T>,
    j_prefix: Vec<T>,
    j_total: T,
    rule: QuadRule<T>,
}

impl<T: Scalar> TravelTimeTable<T> {
    fn build<F: Fn(T) -> T>(
        xi1: T,
        integrand: &F,
        panels: usize,
    ) -> Result<Self, EquilibriumError> {
        let w_max = xi1.sqrt();
        let rule = gauss_legendre_unit::<T>(16);
        let mut w_pts = Vec::with_capacity(panels + 1);
        let mut j_prefix = Vec::with_capacity(panels + 1);
        let mut acc = T::zero();
        w_pts.push(T::zero());
        j_prefix.push(T::zero());
        for p in 0..panels {
            let a = w_max * T::of_usize(p) / T::of_usize(panels);
            let b = w_max * T::of_usize(p + 1) / T::of_usize(panels);
            let inc = rule.integrate_interval(a, b, integrand);
            if inc <= T::zero() {
                return Err(EquilibriumError::InversionFailed(
                    a.to_f64().unwrap_or(f64::NAN),
                ));
            }
            acc += inc;
            w_pts.push(b);
            j_prefix.push(acc);
        }
        Ok(Self {
            w_pts,
            j_prefix,
            j_total: acc,
            rule,
        })
    }

    fn eval<F: Fn(T) -> T>(&self, integrand: &F, w: T) -> T {
        let w = w.max(T::zero()).min(*self.w_pts.last().unwrap());
        let idx = match self
            .w_pts
            .binary_search_by(|p| p.partial_cmp(&w).unwrap())
        {
            Ok(i) => i.saturating_sub(1),
            Err(i) => i.saturating_sub(1),
        };
        let idx = idx.min(self.w_pts.len() - 2);
        self.j_prefix[idx] + self.rule.integrate_interval(self.w_pts[idx], w, integrand)
    }

    /// Inverse map `J -> w`, Newton within the bracketing panel.
    fn invert<F: Fn(T) -> T>(&self, integrand: &F, target: T) -> Result<T, EquilibriumError> {
        if target < -T::epsilon() || target > self.j_total * (T::one() + T::of(1e-12)) {
            return Err(EquilibriumError::InversionOutOfRange(
                target.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let target = target.max(T::zero()).min(self.j_total);
        let idx = match self
            .j_prefix
            .binary_search_by(|p| p.partial_cmp(&target).unwrap())
        {
            Ok(i) => return Ok(self.w_pts[i]),
            Err(i) => i.saturating_sub(1).min(self.w_pts.len() - 2),
        };
        let (mut lo, mut hi) = (self.w_pts[idx], self.w_pts[idx + 1]);
        let mut w = (lo + hi) / T::of(2.0);
        for _ in 0..80 {
            let f = self.eval(integrand, w) - target;
            if f > T::zero() {
                hi = w;
            } else {
                lo = w;
            }
            let d = integrand(w);
            let step = if d > T::zero() { f / d } else { T::zero() };
            let mut next = w - step;
            if !(next > lo && next < hi) {
                next = (lo + hi) / T::of(2.0);
            }
            if (next - w).abs() <= T::epsilon() * T::of(4.0) * w.abs().max(T::of(1e-30)) {
                return Ok(next);
            }
            w = next;
        }
        Ok(w)
    }
}

/// Fully tabulated equilibrium star with its singular coordinate map and the
/// linear-operator coefficients at the spectral nodes. Immutable after
/// construction.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile<T> {
    pub params: GasParams<T>,
    /// stellar radius
    pub r_big: T,
    /// total mass
    pub mass_total: T,
    /// boundary coefficient: `rho ~ rho1 (R-r)^{1/(gamma-1)}` at the surface
    pub rho1: T,
    /// `kappa = pi / xi_+`
    pub kappa: T,
    /// total travel time `xi_+ = int_0^R sqrt(rho/(gamma P)) dr`
    pub xi_plus: T,
    /// length unit `alpha` (dimensionless `xi` times `alpha` is `r`)
    pub alpha: T,

    // tables at the spectral nodes
    pub x_nodes: Vec<T>,
    pub r_of_x: Vec<T>,
    pub rho_of_x: Vec<T>,
    pub p_of_x: Vec<T>,
    pub dpdr_of_x: Vec<T>,
    pub m_of_x: Vec<T>,
    /// zeroth-order operator coefficient (normalized time units)
    pub coeff_zero: Vec<T>,
    /// extra drift beyond the model weight's own; `O(x)` and `O(1-x)` at the
    /// ends
    pub coeff_drift: Vec<T>,
    /// `(1/(rho r)) dP/dr`, negative inside the star
    pub c_grav: Vec<T>,
    /// `P/(rho r^2)`
    pub c_press: Vec<T>,
    /// `r dx/dr`: multiplying `dy/dx` by this gives `v = r dy/dr`
    pub v_factor: Vec<T>,
    /// smooth factor `g` of the mass measure: `rho r^4 dr = g(x) w(x) dx`
    /// with `w = x^{3/2}(1-x)^{N/2-1}`
    pub weight_factor: Vec<T>,

    le: LaneEmdenSolution<T>,
    bs: BoundarySeries<T>,
    travel: TravelTimeTable<T>,
    /// scale from the dimensionless travel integral to `xi_L`
    travel_scale: T,
    /// `rho_c^{gamma-1}`, the amplitude of `U` in terms of `theta`
    ucoef: T,
}

impl<T: Scalar> EquilibriumProfile<T> {
    pub fn lane_emden(&self) -> &LaneEmdenSolution<T> {
        &self.le
    }

    pub fn boundary_series(&self) -> &BoundarySeries<T> {
        &self.bs
    }

    /// Integrand of the desingularized travel integral,
    /// `G(s) = 2 s / sqrt(theta(xi1 - s^2))`.
    fn travel_integrand(&self) -> impl Fn(T) -> T + '_ {
        move |s: T| {
            let th = theta_from_surface_gap(&self.le, &self.bs, self.ucoef, s * s)
                .max(T::min_positive_value());
            T::of(2.0) * s / th.sqrt()
        }
    }

    /// Physical fields at radius `r` in `[0, R]`.
    pub fn fields_at_r(&self, r: T) -> Fields<T> {
        self.fields_at_sigma((self.r_big - r) / self.r_big)
    }

    /// Physical fields keyed by the surface distance fraction
    /// `sigma = (R - r)/R`. Taking `sigma` directly avoids the cancellation
    /// of `R - r` deep in the surface layer.
    pub fn fields_at_sigma(&self, sigma: T) -> Fields<T> {
        let p = &self.params;
        let m_idx = p.n_index() as i32;
        let r = self.r_big * (T::one() - sigma);
        let (u, du_dr) = if sigma < T::of(SURFACE_SWITCH) {
            (
                self.bs.eval_u_sigma(sigma).max(T::zero()),
                self.bs.eval_du_dr_sigma(sigma),
            )
        } else {
            let xi = r / self.alpha;
            (
                self.ucoef * self.le.theta_at(xi).max(T::zero()),
                self.ucoef * self.le.dtheta_at(xi) / self.alpha,
            )
        };
        let rho = u.powi(m_idx);
        let pressure = p.pressure_const() * u.powi(m_idx + 1);
        let dp_dr = p.pressure_const() * T::of_usize(m_idx as usize + 1) * u.powi(m_idx) * du_dr;
        let xi = r / self.alpha;
        let mass = T::of(4.0)
            * T::PI()
            * p.rho_c()
            * self.alpha.powi(3)
            * (-(xi * xi) * self.le.dtheta_at(xi.min(self.le.xi1)));
        Fields {
            u,
            du_dr,
            rho,
            pressure,
            dp_dr,
            mass,
        }
    }

    /// Travel-time coordinate `xi_L(r)`.
    pub fn liouville_of_r(&self, r: T) -> T {
        self.xi_plus - self.liouville_tail_of_r(r)
    }

    /// `xi_+ - xi_L(r)`, computed directly so it stays accurate at the
    /// surface.
    pub fn liouville_tail_of_r(&self, r: T) -> T {
        self.liouville_tail_of_sigma((self.r_big - r) / self.r_big)
    }

    /// Same, keyed by `sigma = (R - r)/R`.
    pub fn liouville_tail_of_sigma(&self, sigma: T) -> T {
        let w = (sigma.max(T::zero()) * self.le.xi1).sqrt();
        self.travel_scale * self.travel.eval(&self.travel_integrand(), w)
    }

    /// Radius at a given travel time.
    pub fn r_of_liouville(&self, xi_l: T) -> Result<T, EquilibriumError> {
        let tail = (self.xi_plus - xi_l) / self.travel_scale;
        let w = self.travel.invert(&self.travel_integrand(), tail)?;
        Ok(self.alpha * (self.le.xi1 - w * w))
    }

    /// The singular coordinate `x(r) = sin^2(kappa xi_L/2)` on [0, 1].
    pub fn x_of_r(&self, r: T) -> T {
        let half = T::of(0.5);
        let xi_l = self.liouville_of_r(r);
        if xi_l <= self.xi_plus / T::of(2.0) {
            let s = (self.kappa * xi_l * half).sin();
            s * s
        } else {
            let tail = self.liouville_tail_of_r(r);
            let c = (self.kappa * tail * half).sin();
            T::one() - c * c
        }
    }

    /// Inverse coordinate map. Accurate into both endpoint layers.
    pub fn r_of_x(&self, x: T) -> Result<T, EquilibriumError> {
        self.r_sigma_of_x(x).map(|(r, _)| r)
    }

    /// Inverse map returning both `r` and the surface fraction
    /// `sigma = (R-r)/R` computed without cancellation.
    pub fn r_sigma_of_x(&self, x: T) -> Result<(T, T), EquilibriumError> {
        assert!(
            x >= T::zero() && x <= T::one(),
            "coordinate x outside [0, 1]"
        );
        let two = T::of(2.0);
        let tail_target = if x <= T::of(0.5) {
            let xi_l = two / self.kappa * x.sqrt().asin();
            self.xi_plus - xi_l
        } else {
            two / self.kappa * (T::one() - x).sqrt().asin()
        };
        let w = self
            .travel
            .invert(&self.travel_integrand(), tail_target / self.travel_scale)?;
        let sigma = w * w / self.le.xi1;
        Ok((self.r_big * (T::one() - sigma), sigma))
    }

    /// Operator coefficient pair `(zeroth, drift)` at an arbitrary interior
    /// `x`; the nodal tables are this function sampled at the nodes.
    pub fn operator_coeffs_at(&self, x: T) -> Result<(T, T), EquilibriumError> {
        let (r, sigma) = self.r_sigma_of_x(x)?;
        Ok(self.operator_coeffs_inner(x, r, sigma))
    }

    fn operator_coeffs_inner(&self, x: T, r: T, sigma: T) -> (T, T) {
        let p = &self.params;
        let gamma = p.gamma();
        let a_gamma = p.pressure_const() * gamma;
        let m_f = T::of_usize(p.n_index() as usize);
        let big_n_half = T::of_usize(p.big_n() as usize) / T::of(2.0);
        let half = T::of(0.5);
        let f = self.fields_at_sigma(sigma);
        let sqrt_x1x = (x * (T::one() - x)).sqrt();
        let b = (T::one() - T::of(2.0) * x) * half
            + a_gamma.sqrt() / self.kappa
                * sqrt_x1x
                * ((gamma + T::one()) * half * m_f * f.du_dr + T::of(4.0) * f.u / r)
                / f.u.sqrt();
        let drift = T::of(2.5) * (T::one() - x) - big_n_half * x - b;
        let grav = a_gamma * m_f * f.du_dr / r;
        let zero = p.four_minus_three_gamma() * grav / (self.kappa * self.kappa);
        (zero, drift)
    }

    /// Radius and physical fields at a coordinate `x` in [0, 1].
    pub fn fields_at_x(&self, x: T) -> Result<(T, Fields<T>), EquilibriumError> {
        let (r, sigma) = self.r_sigma_of_x(x)?;
        Ok((r, self.fields_at_sigma(sigma)))
    }

    /// The multiplier `r dx/dr` at an arbitrary interior `x`; multiplying
    /// `dy/dx` by it gives `v = r dy/dr`.
    pub fn v_factor_at(&self, x: T) -> Result<T, EquilibriumError> {
        let (r, f) = self.fields_at_x(x)?;
        let a_gamma = self.params.pressure_const() * self.params.gamma();
        Ok(r * self.kappa * (x * (T::one() - x)).sqrt() / (a_gamma * f.u).sqrt())
    }

    /// Exact endpoint limits `(L0(0), L0(1))` of the zeroth operator
    /// coefficient; the drift coefficient vanishes at both ends.
    pub fn coeff_zero_limits(&self) -> (T, T) {
        let p = &self.params;
        let kappa2 = self.kappa * self.kappa;
        let f43 = p.four_minus_three_gamma();
        // center: c_grav -> -(4 pi / 3) g0 rho_c
        let grav0 = -T::of(4.0) / T::of(3.0) * T::PI() * p.gravity() * p.rho_c();
        // surface: dU/dr -> -C3/R from the surface series
        let a_gamma = p.pressure_const() * p.gamma();
        let m_f = T::of_usize(p.n_index() as usize);
        let grav1 = a_gamma * m_f * (-self.bs.c3 / self.r_big) / self.r_big;
        (f43 * grav0 / kappa2, f43 * grav1 / kappa2)
    }

    /// Schroedinger-form potential of the pulsation problem at travel time
    /// `xi_l`, used as an independent spectral cross-check.
    pub fn q_potential(&self, xi_l: T) -> Result<T, EquilibriumError> {
        let p = &self.params;
        let gamma = p.gamma();
        let r = self.r_of_liouville(xi_l)?;
        let f = self.fields_at_r(r);
        let cs2 = p.pressure_const() * gamma * f.u;
        let m_idx = T::of_usize(p.n_index() as usize);
        let rho_log = m_idx * f.du_dr / f.u; // (1/rho) drho/dr
        let m_r = T::of(4.0) * T::PI() * f.rho * r * r;
        let term1 = T::of(2.0) / (r * r);
        let term2 = ((T::of(7.0) - T::of(3.0) * gamma) / T::of(2.0)
            + (T::one() + gamma) / T::of(4.0) * (r * m_r / f.mass))
            * rho_log
            / r;
        let term3 = (gamma + T::one()) * (T::of(3.0) - gamma) / T::of(16.0) * rho_log * rho_log;
        Ok(cs2 * (term1 + term2 + term3))
    }

    /// Serializable snapshot of the profile tables.
    pub fn record(&self) -> ProfileRecord<T> {
        ProfileRecord {
            schema: crate::validation::SCHEMA_VERSION,
            gamma: self.params.gamma(),
            rho_c: self.params.rho_c(),
            nodes: self.x_nodes.len(),
            r_big: self.r_big,
            mass_total: self.mass_total,
            rho1: self.rho1,
            kappa: self.kappa,
            xi_plus: self.xi_plus,
            x_nodes: self.x_nodes.clone(),
            r_of_x: self.r_of_x.clone(),
            rho_of_x: self.rho_of_x.clone(),
            p_of_x: self.p_of_x.clone(),
            dpdr_of_x: self.dpdr_of_x.clone(),
            m_of_x: self.m_of_x.clone(),
            coeff_zero: self.coeff_zero.clone(),
            coeff_drift: self.coeff_drift.clone(),
        }
    }
}

/// JSON-facing snapshot of an equilibrium build.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRecord<T> {
    pub schema: u32,
    pub gamma: T,
    pub rho_c: T,
    pub nodes: usize,
    pub r_big: T,
    pub mass_total: T,
    pub rho1: T,
    pub kappa: T,
    pub xi_plus: T,
    pub x_nodes: Vec<T>,
    pub r_of_x: Vec<T>,
    pub rho_of_x: Vec<T>,
    pub p_of_x: Vec<T>,
    pub dpdr_of_x: Vec<T>,
    pub m_of_x: Vec<T>,
    pub coeff_zero: Vec<T>,
    pub coeff_drift: Vec<T>,
}

/// Builds the dimensional profile and every nodal table at `x_nodes`.
pub fn build<T: Scalar>(
    params: GasParams<T>,
    le: LaneEmdenSolution<T>,
    bs: BoundarySeries<T>,
    x_nodes: &[T],
) -> Result<EquilibriumProfile<T>, EquilibriumError> {
    let gamma = params.gamma();
    let m_idx = params.n_index();
    let alpha = params.length_scale();
    let r_big = params.radius(le.xi1);
    let mass_total = params.total_mass(le.mu1);
    let rho1 = (bs.c3 / r_big).powi(m_idx as i32);
    let a_gamma = params.pressure_const() * gamma;
    let ucoef = params.rho_c().powf(gamma - T::one());

    let integrand = {
        let (le_ref, bs_ref) = (&le, &bs);
        move |s: T| {
            let th = theta_from_surface_gap(le_ref, bs_ref, ucoef, s * s)
                .max(T::min_positive_value());
            T::of(2.0) * s / th.sqrt()
        }
    };
    let travel = TravelTimeTable::build(le.xi1, &integrand, 192)?;
    // xi_L = alpha rho_c^{(1-gamma)/2} / sqrt(A gamma) * int theta^{-1/2} dxi
    let travel_scale =
        alpha * params.rho_c().powf((T::one() - gamma) / T::of(2.0)) / a_gamma.sqrt();
    let xi_plus = travel_scale * travel.j_total;
    let kappa = T::PI() / xi_plus;

    let mut profile = EquilibriumProfile {
        params,
        r_big,
        mass_total,
        rho1,
        kappa,
        xi_plus,
        alpha,
        x_nodes: x_nodes.to_vec(),
        r_of_x: Vec::new(),
        rho_of_x: Vec::new(),
        p_of_x: Vec::new(),
        dpdr_of_x: Vec::new(),
        m_of_x: Vec::new(),
        coeff_zero: Vec::new(),
        coeff_drift: Vec::new(),
        c_grav: Vec::new(),
        c_press: Vec::new(),
        v_factor: Vec::new(),
        weight_factor: Vec::new(),
        le,
        bs,
        travel,
        travel_scale,
        ucoef,
    };

    let n = x_nodes.len();
    let mut r_of_x = Vec::with_capacity(n);
    let mut rho_of_x = Vec::with_capacity(n);
    let mut p_of_x = Vec::with_capacity(n);
    let mut dpdr_of_x = Vec::with_capacity(n);
    let mut m_of_x = Vec::with_capacity(n);
    let mut coeff_zero = Vec::with_capacity(n);
    let mut coeff_drift = Vec::with_capacity(n);
    let mut c_grav = Vec::with_capacity(n);
    let mut c_press = Vec::with_capacity(n);
    let mut v_factor = Vec::with_capacity(n);
    let mut weight_factor = Vec::with_capacity(n);

    let m_f = T::of_usize(m_idx as usize);
    let mut last_r = T::zero();
    for &x in x_nodes {
        let (r, sigma) = profile.r_sigma_of_x(x)?;
        if r <= last_r {
            return Err(EquilibriumError::InversionFailed(
                x.to_f64().unwrap_or(f64::NAN),
            ));
        }
        last_r = r;
        let f = profile.fields_at_sigma(sigma);

        let sqrt_x1x = (x * (T::one() - x)).sqrt();
        let sqrt_u = f.u.sqrt();
        let (zero, drift) = profile.operator_coeffs_inner(x, r, sigma);
        let grav = a_gamma * m_f * f.du_dr / r;

        let t_layer = f.u / (T::one() - x);
        let r2_over_x = r * r / x;
        let g = a_gamma.sqrt() / kappa
            * t_layer.powi(m_idx as i32) * t_layer.sqrt()
            * r2_over_x
            * r2_over_x;

        r_of_x.push(r);
        rho_of_x.push(f.rho);
        p_of_x.push(f.pressure);
        dpdr_of_x.push(f.dp_dr);
        m_of_x.push(f.mass);
        coeff_zero.push(zero);
        coeff_drift.push(drift);
        c_grav.push(grav);
        c_press.push(f.pressure / (f.rho * r * r));
        v_factor.push(r * kappa * sqrt_x1x / (a_gamma.sqrt() * sqrt_u));
        weight_factor.push(g);
    }

    profile.r_of_x = r_of_x;
    profile.rho_of_x = rho_of_x;
    profile.p_of_x = p_of_x;
    profile.dpdr_of_x = dpdr_of_x;
    profile.m_of_x = m_of_x;
    profile.coeff_zero = coeff_zero;
    profile.coeff_drift = coeff_drift;
    profile.c_grav = c_grav;
    profile.c_press = c_press;
    profile.v_factor = v_factor;
    profile.weight_factor = weight_factor;
    Ok(profile)
}

/// Travel-time coordinate of a radius (exposed as a standalone operation).
pub fn liouville_xi<T: Scalar>(profile: &EquilibriumProfile<T>, r: T) -> T {
    profile.liouville_of_r(r)
}

/// The operator coefficient tables `(zeroth, drift)` at the nodes.
pub fn coefficients<T: Scalar>(profile: &EquilibriumProfile<T>) -> (&[T], &[T]) {
    (&profile.coeff_zero, &profile.coeff_drift)
}

/// Schroedinger-form potential sampled on a travel-time grid.
pub fn potential_q<T: Scalar>(
    profile: &EquilibriumProfile<T>,
    xi_grid: &[T],
) -> Result<Vec<T>, EquilibriumError> {
    xi_grid.iter().map(|&xi| profile.q_potential(xi)).collect()
}
