//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)) with a
//! continuous extension, plus the scalar root-finding used to locate events
//! on the dense output.

use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("StepSizeUnderflow: step size fell below {0:e} before reaching the end point")]
    StepSizeUnderflow(f64),
    #[error("MaxStepsExceeded: more than {0} accepted steps")]
    MaxStepsExceeded(usize),
    #[error("RootNotBracketed: f({0:e}) and f({1:e}) have the same sign")]
    RootNotBracketed(f64, f64),
    #[error("RootIterationsExceeded")]
    RootIterationsExceeded,
}

/// One accepted step with the coefficients of the quartic interpolant.
#[derive(Debug, Clone)]
struct DenseSegment<T> {
    t0: T,
    h: T,
    // cont(s) = c0 + s (c1 + (1-s)(c2 + s (c3 + (1-s) c4)))
    cont: [Vec<T>; 5],
}

impl<T: Scalar> DenseSegment<T> {
    fn eval_into(&self, t: T, out: &mut [T]) {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        for (i, y) in out.iter_mut().enumerate() {
            *y = self.cont[0][i]
                + s * (self.cont[1][i]
                    + s1 * (self.cont[2][i] + s * (self.cont[3][i] + s1 * self.cont[4][i])));
        }
    }
}

/// Result of an integration: step points plus a piecewise interpolant that is
/// valid on the whole covered interval.
#[derive(Debug, Clone)]
pub struct OdeSolution<T> {
    pub ts: Vec<T>,
    pub ys: Vec<Vec<T>>,
    segments: Vec<DenseSegment<T>>,
}

impl<T: Scalar> OdeSolution<T> {
    pub fn t_start(&self) -> T {
        self.ts[0]
    }

    pub fn t_end(&self) -> T {
        *self.ts.last().unwrap()
    }

    fn segment_for(&self, t: T) -> &DenseSegment<T> {
        // binary search on segment start times
        let mut lo = 0usize;
        let mut hi = self.segments.len();
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.segments[mid].t0 <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        &self.segments[lo]
    }

    /// Interpolated state at `t` (clamped to the covered interval).
    pub fn eval(&self, t: T) -> Vec<T> {
        let t = t.max(self.t_start()).min(self.t_end());
        let mut out = vec![T::zero(); self.ys[0].len()];
        self.segment_for(t).eval_into(t, &mut out);
        out
    }

    pub fn eval_component(&self, t: T, comp: usize) -> T {
        self.eval(t)[comp]
    }
}

/// Dormand-Prince 5(4) integrator with PI-free standard step control.
#[derive(Debug, Clone)]
pub struct Dopri5<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Scalar> Dopri5<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 1_000_000,
        }
    }

    /// Integrate `dy/dt = f(t, y)` from `t0` to `t_end` (`t_end > t0`).
    pub fn integrate<F>(&self, f: F, t0: T, y0: &[T], t_end: T) -> Result<OdeSolution<T>, OdeError>
    where
        F: Fn(T, &[T], &mut [T]),
    {
        self.run(f, t0, y0, t_end, |_, _| false).map(|(sol, _)| sol)
    }

    /// Integrate until `stop(t, y)` turns true at the end of an accepted step
    /// (the caller then refines on the dense output), or until `t_max`.
    /// Returns the solution and whether the stop condition fired.
    pub fn integrate_until<F, S>(
        &self,
        f: F,
        t0: T,
        y0: &[T],
        t_max: T,
        stop: S,
    ) -> Result<(OdeSolution<T>, bool), OdeError>
    where
        F: Fn(T, &[T], &mut [T]),
        S: Fn(T, &[T]) -> bool,
    {
        self.run(f, t0, y0, t_max, stop)
    }

    fn run<F, S>(
        &self,
        f: F,
        t0: T,
        y0: &[T],
        t_end: T,
        stop: S,
    ) -> Result<(OdeSolution<T>, bool), OdeError>
    where
        F: Fn(T, &[T], &mut [T]),
        S: Fn(T, &[T]) -> bool,
    {
        let n = y0.len();
        let two = T::of(2.0);

        // Butcher tableau, Dormand & Prince (1980).
        let c = [
            T::zero(),
            T::of(0.2),
            T::of(0.3),
            T::of(0.8),
            T::of(8.0 / 9.0),
            T::one(),
            T::one(),
        ];
        let a: [&[f64]; 6] = [
            &[0.2],
            &[3.0 / 40.0, 9.0 / 40.0],
            &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
            &[
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
            ],
            &[
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
            ],
            &[
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        // y1 - yhat1 (5th minus embedded 4th order weights)
        let e: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        // dense-output weights for the fifth interpolant coefficient
        let d: [f64; 7] = [
            -12715105075.0 / 11282082432.0,
            0.0,
            87487479700.0 / 32700410799.0,
            -10690763975.0 / 1880347072.0,
            701980252875.0 / 199316789632.0,
            -1453857185.0 / 822651844.0,
            69997945.0 / 29380423.0,
        ];

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
        f(t, &y, &mut k[0]);

        let span = t_end - t0;
        let mut h = self.initial_step(&f, t, &y, &k[0], span);
        let h_min = span.abs() * T::epsilon() * T::of(16.0);

        let mut sol = OdeSolution {
            ts: vec![t],
            ys: vec![y.clone()],
            segments: Vec::new(),
        };

        let mut y_stage = vec![T::zero(); n];
        let mut steps = 0usize;
        while t < t_end {
            if steps > self.max_steps {
                return Err(OdeError::MaxStepsExceeded(self.max_steps));
            }
            if h < h_min {
                return Err(OdeError::StepSizeUnderflow(h_min.to_f64().unwrap_or(0.0)));
            }
            h = h.min(t_end - t);

            for stage in 1..7 {
                for i in 0..n {
                    let mut acc = T::zero();
                    for (j, &aij) in a[stage - 1].iter().enumerate() {
                        acc += T::of(aij) * k[j][i];
                    }
                    y_stage[i] = y[i] + h * acc;
                }
                let (head, tail) = k.split_at_mut(stage);
                let _ = head;
                f(t + c[stage] * h, &y_stage, &mut tail[0]);
            }
            // stage 7 state is y1 (FSAL)
            let y1 = y_stage.clone();

            // error norm
            let mut err_sq = T::zero();
            for i in 0..n {
                let mut ei = T::zero();
                for (s, &es) in e.iter().enumerate() {
                    ei += T::of(es) * k[s][i];
                }
                ei *= h;
                let scale = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                let r = ei / scale;
                err_sq += r * r;
            }
            let err = (err_sq / T::of_usize(n)).sqrt();

            if err <= T::one() {
                // accept: build interpolant for [t, t+h]
                let mut cont = [
                    y.clone(),
                    vec![T::zero(); n],
                    vec![T::zero(); n],
                    vec![T::zero(); n],
                    vec![T::zero(); n],
                ];
                for i in 0..n {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    let mut acc = T::zero();
                    for (s, &ds) in d.iter().enumerate() {
                        acc += T::of(ds) * k[s][i];
                    }
                    cont[4][i] = h * acc;
                }
                sol.segments.push(DenseSegment { t0: t, h, cont });

                t += h;
                y = y1;
                k.swap(0, 6); // FSAL
                sol.ts.push(t);
                sol.ys.push(y.clone());
                steps += 1;

                if stop(t, &y) {
                    return Ok((sol, true));
                }
                let fac = T::of(0.9) * err.max(T::of(1e-10)).powf(T::of(-0.2));
                h *= fac.min(T::of(5.0)).max(T::of(0.2));
            } else {
                let fac = T::of(0.9) * err.powf(T::of(-0.2));
                h *= fac.min(T::one()).max(T::of(0.2));
            }
            let _ = two;
        }
        Ok((sol, false))
    }

    fn initial_step<F>(&self, f: &F, t0: T, y0: &[T], f0: &[T], span: T) -> T
    where
        F: Fn(T, &[T], &mut [T]),
    {
        // Crude version of the standard starting-step heuristic.
        let n = y0.len();
        let mut d0 = T::zero();
        let mut d1 = T::zero();
        for i in 0..n {
            let sc = self.atol + self.rtol * y0[i].abs();
            d0 += (y0[i] / sc) * (y0[i] / sc);
            d1 += (f0[i] / sc) * (f0[i] / sc);
        }
        let d0 = (d0 / T::of_usize(n)).sqrt();
        let d1 = (d1 / T::of_usize(n)).sqrt();
        let mut h = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
            T::of(1e-6)
        } else {
            T::of(0.01) * (d0 / d1)
        };
        h = h.min(span * T::of(0.1));

        // one Euler probe to bound the second derivative
        let y1: Vec<T> = (0..n).map(|i| y0[i] + h * f0[i]).collect();
        let mut f1 = vec![T::zero(); n];
        f(t0 + h, &y1, &mut f1);
        let mut d2 = T::zero();
        for i in 0..n {
            let sc = self.atol + self.rtol * y0[i].abs();
            let df = (f1[i] - f0[i]) / sc;
            d2 += df * df;
        }
        let d2 = (d2 / T::of_usize(n)).sqrt() / h;
        let dm = d1.max(d2);
        let h1 = if dm <= T::of(1e-15) {
            (h * T::of(1e-3)).max(T::of(1e-6))
        } else {
            (T::of(0.01) / dm).powf(T::of(0.2))
        };
        h.min(h1).min(span)
    }
}

/// Brent's method on `[a, b]`; `f(a)` and `f(b)` must have opposite signs.
pub fn brent<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    xtol: T,
    max_iter: usize,
) -> Result<T, OdeError> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(OdeError::RootNotBracketed(
            a.to_f64().unwrap_or(f64::NAN),
            b.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    let two = T::of(2.0);
    let three = T::of(3.0);
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            // ensure b is the best iterate
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        let tol1 = two * T::epsilon() * b.abs() + xtol / two;
        let xm = (c - b) / two;
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (two * xm * s, T::one() - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (two * xm * q * (q - r) - (b - a) * (r - T::one())),
                    (q - T::one()) * (r - T::one()) * (s - T::one()),
                )
            };
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else if xm > T::zero() {
            tol1
        } else {
            -tol1
        };
        fb = f(b);
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(OdeError::RootIterationsExceeded)
}
