//! Nonlinear time evolution of the oscillation amplitude `y(t, x)` in mass
//! coordinates: the full pressure/gravity nonlinearities in closed form, a
//! pseudospectral application of the linear operator, and a symmetric
//! (velocity-Verlet) integrator whose time step comes from the measured
//! spectral radius of the discretized operator.

use crate::equilibrium::{EquilibriumError, EquilibriumProfile};
use crate::lane_emden::GasParams;
use crate::linalg::Mat;
use crate::scalar::Scalar;
use crate::spectral::{EigenMode, SpectralError, WeightedSpace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("DomainViolation: specific volume factor reached {0:e} (particle crossing)")]
    DomainViolation(f64),
    #[error("StepUnstable: amplitude doubled within one step at t = {0}")]
    StepUnstable(f64),
    #[error("AmplitudeTooLarge: initial data sup-norm {0} exceeds the smallness guard {1}")]
    AmplitudeTooLarge(f64, f64),
    #[error("NonOscillatory: seeding requires a positive eigenvalue, got {0}")]
    NonOscillatory(f64),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

/// Default smallness guard on Cauchy data.
pub const AMPLITUDE_GUARD: f64 = 0.1;

/// Closed-form nonlinearities of the oscillation equation. All functions are
/// exact in `(y, v)`; nothing is series-truncated.
#[derive(Debug, Clone, Copy)]
pub struct Nonlinearity<T> {
    gamma: T,
    /// `3 gamma - 4`, exact (vanishes at the critical exponent)
    three_gamma_minus_4: T,
}

impl<T: Scalar> Nonlinearity<T> {
    pub fn new(params: &GasParams<T>) -> Self {
        Self {
            gamma: params.gamma(),
            three_gamma_minus_4: -params.four_minus_three_gamma(),
        }
    }

    /// `true` if `(y, v)` keeps a positive specific volume.
    pub fn admissible(&self, y: T, v: T) -> bool {
        T::one() + y > T::zero() && T::one() + y + v > T::zero()
    }

    /// Compression factor `(1+y)^{-2 gamma} (1+y+v)^{-gamma}`.
    fn compression(&self, y: T, v: T) -> T {
        (T::one() + y).powf(-T::of(2.0) * self.gamma) * (T::one() + y + v).powf(-self.gamma)
    }

    /// Relative pressure defect: `P = P_eq (1 - g)`.
    pub fn g(&self, y: T, v: T) -> T {
        T::one() - self.compression(y, v)
    }

    /// Quadratic remainder of the pressure defect.
    pub fn g2(&self, y: T, v: T) -> T {
        self.g(y, v) - T::of(3.0) * self.gamma * y - self.gamma * v
    }

    /// `d g2 / d v`.
    pub fn dv_g2(&self, y: T, v: T) -> T {
        self.gamma * (T::one() + y).powf(-T::of(2.0) * self.gamma)
            * (T::one() + y + v).powf(-self.gamma - T::one())
            - self.gamma
    }

    /// Volume-change factor of the gravity term: `(1+y)^2 - (1+y)^{-2}`.
    pub fn h(&self, y: T) -> T {
        let w = T::one() + y;
        w * w - T::one() / (w * w)
    }

    /// Multiplicative correction of the wave operator.
    pub fn g_i(&self, y: T, v: T) -> T {
        let w = T::one() + y;
        w * w * (T::one() + self.dv_g2(y, v) / self.gamma) - T::one()
    }

    /// Pressure-weighted quadratic source.
    pub fn g_ii0(&self, y: T, v: T) -> T {
        -T::of(2.0) * self.gamma
            * (T::one() + y).powf(T::one() - T::of(2.0) * self.gamma)
            * (T::one() + y + v).powf(-self.gamma - T::one())
            * v
            * v
    }

    /// Gravity-weighted quadratic source.
    pub fn g_ii1(&self, y: T, v: T) -> T {
        let w = T::one() + y;
        w * w / self.gamma * self.dv_g2(y, v) * (self.three_gamma_minus_4 * y + self.gamma * v)
            + self.h(y)
            - T::of(4.0) * y * w * w
            - w * w * self.g2(y, v)
    }
}

/// Builds the closed-form nonlinearity table for a gas.
pub fn nonlinearities<T: Scalar>(params: &GasParams<T>) -> Nonlinearity<T> {
    Nonlinearity::new(params)
}

/// State of the oscillation at one instant: amplitude and velocity on the
/// spectral nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateField<T> {
    pub t: T,
    pub y: Vec<T>,
    pub ydot: Vec<T>,
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepDiagnostics<T> {
    pub t: T,
    pub energy: T,
    pub sup_y: T,
    /// free-boundary radius `R (1 + y(t, x=1))`
    pub r_free: T,
    /// central and surface amplitudes
    pub y_center: T,
    pub y_surface: T,
}

/// A completed run: strided snapshots plus per-step diagnostics at fixed dt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub dt: T,
    pub snapshots: Vec<StateField<T>>,
    pub diagnostics: Vec<StepDiagnostics<T>>,
}

/// Reconstructed physical fields along the Lagrangian sampling of a state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicalSnapshot<T> {
    pub t: T,
    /// Eulerian radii of the Lagrangian sample shells
    pub r_euler: Vec<T>,
    pub rho: Vec<T>,
    pub velocity: Vec<T>,
    /// free boundary radius at this instant
    pub r_free: T,
}

/// The time-stepping engine: owns the spectral discretization of the linear
/// operator and the nonlinearity closures for one star.
pub struct Evolver<'a, T> {
    pub profile: &'a EquilibriumProfile<T>,
    pub space: WeightedSpace<T>,
    nonlin: Nonlinearity<T>,
    /// nodal derivative matrix
    deriv: Mat<T>,
    /// node-to-coefficient transform
    analysis: Mat<T>,
    /// nodal matrix of the physical linear operator, `Phi M^{-1} K A`,
    /// precomputed so each application is one matvec
    l_nodal: Mat<T>,
    /// basis values at x = 0 and x = 1
    basis_at_0: Vec<T>,
    basis_at_1: Vec<T>,
    /// measured spectral radius sqrt of the discrete physical operator
    pub omega_max: T,
}

impl<'a, T: Scalar> Evolver<'a, T> {
    pub fn new(profile: &'a EquilibriumProfile<T>) -> Result<Self, EvolutionError> {
        let n = profile.x_nodes.len();
        let space = WeightedSpace::new(profile.params.big_n(), n)?;
        let mut analysis = Mat::zeros(n, n);
        for k in 0..n {
            for q in 0..n {
                analysis[(k, q)] = space.weights[q] * space.phi[(q, k)];
            }
        }
        // deriv = dphi * analysis
        let mut deriv = Mat::zeros(n, n);
        for q in 0..n {
            for p in 0..n {
                let mut d = T::zero();
                for k in 0..n {
                    d += space.dphi[(q, k)] * analysis[(k, p)];
                }
                deriv[(q, p)] = d;
            }
        }
        // The linear operator is applied through the symmetric Galerkin
        // pencil (K, M): its spectrum is real, so the symmetric stepper
        // cannot pump the spurious complex components a collocation form
        // leaks at the aliasing level.
        let (stiffness, mass) = crate::spectral::assemble(profile, &space);
        let mass_scale: Vec<T> = (0..n).map(|i| T::one() / mass[(i, i)].sqrt()).collect();
        let mut scaled = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] = mass[(i, j)] * mass_scale[i] * mass_scale[j];
            }
        }
        let mass_chol = crate::linalg::cholesky(&scaled).map_err(SpectralError::from)?;
        // assemble the nodal operator column by column
        let mut l_nodal = Mat::zeros(n, n);
        for p in 0..n {
            let mut e = vec![T::zero(); n];
            e[p] = T::one();
            let c = analysis.matvec(&e);
            let kc = stiffness.matvec(&c);
            let s1: Vec<T> = kc.iter().zip(&mass_scale).map(|(&v, &s)| v * s).collect();
            let z = crate::linalg::solve_lower(&mass_chol, &s1);
            let z = crate::linalg::solve_lower_transpose(&mass_chol, &z);
            let z: Vec<T> = z.iter().zip(&mass_scale).map(|(&v, &s)| v * s).collect();
            let col = space.coeff_to_node(&z);
            for q in 0..n {
                l_nodal[(q, p)] = col[q];
            }
        }
        let d0 = space.basis.eval(T::zero());
        let d1 = space.basis.eval(T::one());

        let mut ev = Self {
            profile,
            space,
            nonlin: Nonlinearity::new(&profile.params),
            deriv,
            analysis,
            l_nodal,
            basis_at_0: d0,
            basis_at_1: d1,
            omega_max: T::zero(),
        };
        // power iteration for the discrete spectral radius of the physical
        // operator; analytic bounds are loose for the degenerate principal
        // part, so measure it
        let mut z: Vec<T> = (0..n)
            .map(|i| (T::of_usize(i + 1)).sin() + T::of(0.5))
            .collect();
        let mut rho_est = T::one();
        for _ in 0..120 {
            let az = ev.apply_l(&z);
            let norm = az.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
            if norm == T::zero() {
                break;
            }
            rho_est = norm;
            for (zi, &ai) in z.iter_mut().zip(&az) {
                *zi = ai / norm;
            }
        }
        ev.omega_max = rho_est.sqrt() * T::of(1.05);
        Ok(ev)
    }

    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        &self.nonlin
    }

    /// Basis coefficients of a nodal function.
    pub fn coeffs_of(&self, values: &[T]) -> Vec<T> {
        self.analysis.matvec(values)
    }

    /// `y` evaluated at the center (`x = 0`).
    pub fn eval_center(&self, values: &[T]) -> T {
        let c = self.analysis.matvec(values);
        c.iter().zip(&self.basis_at_0).map(|(&a, &b)| a * b).sum()
    }

    /// `y` evaluated at the surface (`x = 1`).
    pub fn eval_surface(&self, values: &[T]) -> T {
        let c = self.analysis.matvec(values);
        c.iter().zip(&self.basis_at_1).map(|(&a, &b)| a * b).sum()
    }

    /// The linear pulsation operator in physical time applied to a nodal
    /// function: `y -> Phi M^{-1} K c(y)` through the symmetric Galerkin
    /// pencil.
    pub fn apply_l(&self, y: &[T]) -> Vec<T> {
        self.l_nodal.matvec(y)
    }

    /// Acceleration `d^2y/dt^2` of the full nonlinear equation.
    pub fn rhs(&self, y: &[T]) -> Result<Vec<T>, EvolutionError> {
        let n = y.len();
        let ly = self.apply_l(y);
        let dy = self.deriv.matvec(y);
        let mut acc = Vec::with_capacity(n);
        for q in 0..n {
            let v = self.profile.v_factor[q] * dy[q];
            if !self.nonlin.admissible(y[q], v) {
                let worst = (T::one() + y[q]).min(T::one() + y[q] + v);
                return Err(EvolutionError::DomainViolation(
                    worst.to_f64().unwrap_or(f64::NAN),
                ));
            }
            let a = -(T::one() + self.nonlin.g_i(y[q], v)) * ly[q]
                - self.profile.c_press[q] * self.nonlin.g_ii0(y[q], v)
                - self.profile.c_grav[q] * self.nonlin.g_ii1(y[q], v);
            acc.push(a);
        }
        Ok(acc)
    }

    /// Stable step size: `c_cfl / omega_max`.
    pub fn cfl_dt(&self, c_cfl: T) -> T {
        c_cfl / self.omega_max
    }

    /// One velocity-Verlet step (kick-drift-kick) of the second-order system.
    pub fn step(&self, state: &StateField<T>, dt: T) -> Result<StateField<T>, EvolutionError> {
        let half = dt / T::of(2.0);
        let acc0 = self.rhs(&state.y)?;
        let vh: Vec<T> = state
            .ydot
            .iter()
            .zip(&acc0)
            .map(|(&v, &a)| v + half * a)
            .collect();
        let y1: Vec<T> = state.y.iter().zip(&vh).map(|(&y, &v)| y + dt * v).collect();
        let acc1 = self.rhs(&y1)?;
        let v1: Vec<T> = vh.iter().zip(&acc1).map(|(&v, &a)| v + half * a).collect();
        Ok(StateField {
            t: state.t + dt,
            y: y1,
            ydot: v1,
        })
    }

    /// Conserved quadratic form of the linearized flow:
    /// `E = (ydot|ydot)/2 + (L y|y)/2` in the star's mass measure.
    pub fn energy(&self, state: &StateField<T>) -> T {
        let ly = self.apply_l(&state.y);
        let mut kin = T::zero();
        let mut pot = T::zero();
        for q in 0..state.y.len() {
            let w = self.space.weights[q] * self.profile.weight_factor[q];
            kin += w * state.ydot[q] * state.ydot[q];
            pot += w * ly[q] * state.y[q];
        }
        (kin + pot) / T::of(2.0)
    }

    fn diagnostics(&self, state: &StateField<T>) -> StepDiagnostics<T> {
        let y_surface = self.eval_surface(&state.y);
        StepDiagnostics {
            t: state.t,
            energy: self.energy(state),
            sup_y: state.y.iter().fold(T::zero(), |a, &b| a.max(b.abs())),
            r_free: self.profile.r_big * (T::one() + y_surface),
            y_center: self.eval_center(&state.y),
            y_surface,
        }
    }

    /// Integrates from the given data to `t_end`, recording diagnostics at
    /// every step and a snapshot every `stride` steps.
    pub fn evolve(
        &self,
        y0: Vec<T>,
        ydot0: Vec<T>,
        t_end: T,
        dt_factor: T,
        stride: usize,
    ) -> Result<Trajectory<T>, EvolutionError> {
        let dt_raw = self.cfl_dt(dt_factor);
        let n_steps = (t_end / dt_raw).ceil().to_f64().unwrap_or(1.0) as usize;
        let n_steps = n_steps.max(1);
        let dt = t_end / T::of_usize(n_steps);
        let stride = stride.max(1);

        let mut state = StateField {
            t: T::zero(),
            y: y0,
            ydot: ydot0,
        };
        let mut traj = Trajectory {
            dt,
            snapshots: vec![state.clone()],
            diagnostics: vec![self.diagnostics(&state)],
        };
        // instability guard: the amplitude must not double past the largest
        // amplitude seen so far within a single step
        let mut amp_seen = traj.diagnostics[0].sup_y;
        for step_idx in 1..=n_steps {
            state = self.step(&state, dt)?;
            // keep the clock exact
            state.t = dt * T::of_usize(step_idx);
            let diag = self.diagnostics(&state);
            if amp_seen > T::zero() && diag.sup_y > T::of(2.0) * amp_seen {
                return Err(EvolutionError::StepUnstable(
                    state.t.to_f64().unwrap_or(f64::NAN),
                ));
            }
            amp_seen = amp_seen.max(diag.sup_y);
            traj.diagnostics.push(diag);
            if step_idx % stride == 0 || step_idx == n_steps {
                traj.snapshots.push(state.clone());
            }
        }
        Ok(traj)
    }

    /// Periodic-seed run: initial data on a single eigenmode,
    /// `y = eps sin(theta0) Phi`, `ydot = eps sqrt(lambda) cos(theta0) Phi`,
    /// integrated for `periods` linear periods.
    pub fn evolve_seed(
        &self,
        mode: &EigenMode<T>,
        eps: T,
        theta0: T,
        periods: T,
        dt_factor: T,
        stride: usize,
    ) -> Result<Trajectory<T>, EvolutionError> {
        if mode.lambda_phys <= T::zero() {
            return Err(EvolutionError::NonOscillatory(
                mode.lambda_phys.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let omega = mode.lambda_phys.sqrt();
        let t_end = periods * T::of(2.0) * T::PI() / omega;
        let y0: Vec<T> = mode.phi.iter().map(|&p| eps * theta0.sin() * p).collect();
        let ydot0: Vec<T> = mode
            .phi
            .iter()
            .map(|&p| eps * omega * theta0.cos() * p)
            .collect();
        self.evolve(y0, ydot0, t_end, dt_factor, stride)
    }

    /// General small-data run with the smallness guard of the local
    /// existence theory.
    pub fn evolve_cauchy(
        &self,
        psi0: Vec<T>,
        psi1: Vec<T>,
        t_end: T,
        dt_factor: T,
        stride: usize,
    ) -> Result<Trajectory<T>, EvolutionError> {
        let sup0 = psi0.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        let sup1 = psi1.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        let guard = T::of(AMPLITUDE_GUARD);
        if sup0 + sup1 > guard {
            return Err(EvolutionError::AmplitudeTooLarge(
                (sup0 + sup1).to_f64().unwrap_or(f64::NAN),
                AMPLITUDE_GUARD,
            ));
        }
        self.evolve(psi0, psi1, t_end, dt_factor, stride)
    }

    /// Physical fields of a state at the Lagrangian node shells:
    /// `r = r_eq (1+y)`, `rho = rho_eq ((1+y)^2 (1+y+v))^{-1}`,
    /// `u = r_eq dy/dt`.
    pub fn reconstruct(&self, state: &StateField<T>) -> Result<PhysicalSnapshot<T>, EvolutionError> {
        let dy = self.deriv.matvec(&state.y);
        let n = state.y.len();
        let mut r_euler = Vec::with_capacity(n);
        let mut rho = Vec::with_capacity(n);
        let mut velocity = Vec::with_capacity(n);
        for q in 0..n {
            let y = state.y[q];
            let v = self.profile.v_factor[q] * dy[q];
            if !self.nonlin.admissible(y, v) {
                let worst = (T::one() + y).min(T::one() + y + v);
                return Err(EvolutionError::DomainViolation(
                    worst.to_f64().unwrap_or(f64::NAN),
                ));
            }
            let w = T::one() + y;
            r_euler.push(self.profile.r_of_x[q] * w);
            rho.push(self.profile.rho_of_x[q] / (w * w * (w + v)));
            velocity.push(self.profile.r_of_x[q] * state.ydot[q]);
        }
        Ok(PhysicalSnapshot {
            t: state.t,
            r_euler,
            rho,
            velocity,
            r_free: self.profile.r_big * (T::one() + self.eval_surface(&state.y)),
        })
    }

    /// Reconstructed `(r_euler, rho)` at an arbitrary coordinate `x`,
    /// used to sample the density profile right up to the moving surface.
    pub fn reconstruct_at(
        &self,
        state: &StateField<T>,
        x: T,
    ) -> Result<(T, T), EvolutionError> {
        let cy = self.analysis.matvec(&state.y);
        let d = self.space.basis.eval_derivs(x, 1);
        let y: T = cy.iter().zip(&d[0]).map(|(&c, &p)| c * p).sum();
        let dydx: T = cy.iter().zip(&d[1]).map(|(&c, &p)| c * p).sum();
        let vf = self.profile.v_factor_at(x)?;
        let (r_eq, f) = self.profile.fields_at_x(x)?;
        let v = vf * dydx;
        if !self.nonlin.admissible(y, v) {
            let worst = (T::one() + y).min(T::one() + y + v);
            return Err(EvolutionError::DomainViolation(
                worst.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let w = T::one() + y;
        Ok((r_eq * w, f.rho / (w * w * (w + v))))
    }

    /// Total mass of a reconstructed snapshot by trapezoid over the sampled
    /// curve, closed at the center and at the free boundary.
    pub fn snapshot_mass(&self, snap: &PhysicalSnapshot<T>, state: &StateField<T>) -> T {
        let n = snap.r_euler.len();
        let y0 = self.eval_center(&state.y);
        let rho_center = self.profile.params.rho_c()
            / ((T::one() + y0) * (T::one() + y0) * (T::one() + y0));
        let mut rs = Vec::with_capacity(n + 2);
        let mut integrand = Vec::with_capacity(n + 2);
        rs.push(T::zero());
        integrand.push(T::zero());
        for q in 0..n {
            rs.push(snap.r_euler[q]);
            integrand.push(snap.rho[q] * snap.r_euler[q] * snap.r_euler[q]);
        }
        rs.push(snap.r_free);
        integrand.push(T::zero());
        let mut total = T::zero();
        for i in 1..rs.len() {
            total += (rs[i] - rs[i - 1]) * (integrand[i] + integrand[i - 1]) / T::of(2.0);
        }
        let _ = rho_center;
        T::of(4.0) * T::PI() * total
    }
}

/// Free-boundary radius curve of a trajectory.
pub fn free_boundary<T: Scalar>(traj: &Trajectory<T>) -> Vec<(T, T)> {
    traj.diagnostics.iter().map(|d| (d.t, d.r_free)).collect()
}
