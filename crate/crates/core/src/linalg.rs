//! Dense symmetric and tridiagonal eigenvalue kernels.
//!
//! The matrices in this crate are small (a few hundred rows), so the classic
//! cyclic Jacobi rotation method and implicit-QL tridiagonal iteration are
//! plenty fast and keep the whole stack generic over the scalar type.

use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("NotPositiveDefinite: Cholesky pivot {0} is not positive")]
    NotPositiveDefinite(usize),
    #[error("EigenIterationsExceeded")]
    EigenIterationsExceeded,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(x).map(|(&a, &b)| a * b).sum();
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending with matching eigenvector columns.
pub fn sym_eigen<T: Scalar>(a: &Mat<T>) -> Result<(Vec<T>, Mat<T>), LinalgError> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut b = a.clone();
    let mut v = Mat::identity(n);
    if n == 1 {
        return Ok((vec![b[(0, 0)]], v));
    }

    let half = T::of(0.5);
    let hundred = T::of(100.0);
    for sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += b[(i, j)] * b[(i, j)];
            }
        }
        if off.sqrt() <= T::epsilon() * T::of(1e-2) * b.max_abs().max(T::min_positive_value()) {
            break;
        }
        if sweep == 63 {
            return Err(LinalgError::EigenIterationsExceeded);
        }

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = b[(p, q)];
                let small = hundred * T::epsilon() * b[(p, p)].abs().max(b[(q, q)].abs());
                if apq.abs() <= small * T::epsilon() {
                    b[(p, q)] = T::zero();
                    b[(q, p)] = T::zero();
                    continue;
                }
                if apq == T::zero() {
                    continue;
                }
                let theta = (b[(q, q)] - b[(p, p)]) / (T::of(2.0) * apq);
                let t = {
                    let denom = theta.abs() + (theta * theta + T::one()).sqrt();
                    if theta >= T::zero() {
                        T::one() / denom
                    } else {
                        -T::one() / denom
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let tau = s / (T::one() + c);
                let _ = half;

                let bpp = b[(p, p)];
                let bqq = b[(q, q)];
                b[(p, p)] = bpp - t * apq;
                b[(q, q)] = bqq + t * apq;
                b[(p, q)] = T::zero();
                b[(q, p)] = T::zero();
                for i in 0..n {
                    if i != p && i != q {
                        let bip = b[(i, p)];
                        let biq = b[(i, q)];
                        b[(i, p)] = bip - s * (biq + tau * bip);
                        b[(i, q)] = biq + s * (bip - tau * biq);
                        b[(p, i)] = b[(i, p)];
                        b[(q, i)] = b[(i, q)];
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip - s * (viq + tau * vip);
                    v[(i, q)] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    let mut vals: Vec<T> = (0..n).map(|i| b[(i, i)]).collect();
    // sort ascending, permuting columns of v
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals: Vec<T> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = Mat::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[(i, new_j)] = v[(i, old_j)];
        }
    }
    vals = sorted_vals;
    Ok((vals, sorted_vecs))
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit QL with shifts),
/// together with the first component of each eigenvector. `diag` has length
/// n, `off` length n-1. Output sorted ascending.
pub fn tridiag_eigen_first_components<T: Scalar>(
    diag: &[T],
    off: &[T],
) -> Result<(Vec<T>, Vec<T>), LinalgError> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(off);
    // first row of the accumulated rotation product
    let mut z = vec![T::zero(); n];
    z[0] = T::one();

    let two = T::of(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(LinalgError::EigenIterationsExceeded);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let sign_r = if g >= T::zero() { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // accumulate first row of rotations
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if r == T::zero() && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    Ok((
        order.iter().map(|&i| d[i]).collect(),
        order.iter().map(|&i| z[i]).collect(),
    ))
}

/// The `k` smallest eigenvalues of a symmetric tridiagonal matrix by Sturm
/// sequence bisection. Robust for the large grids of the finite-difference
/// cross checks.
pub fn tridiag_smallest_eigenvalues<T: Scalar>(diag: &[T], off: &[T], k: usize) -> Vec<T> {
    let n = diag.len();
    assert!(k >= 1 && k <= n);
    // Gershgorin bounds
    let mut lo = diag[0];
    let mut hi = diag[0];
    for i in 0..n {
        let mut radius = T::zero();
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }

    let count_below = |x: T| -> usize {
        let tiny = T::min_positive_value() * T::of(1e10);
        let mut q = diag[0] - x;
        let mut count = if q < T::zero() { 1 } else { 0 };
        for i in 1..n {
            if q.abs() < tiny {
                q = -tiny;
            }
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
            if q < T::zero() {
                count += 1;
            }
        }
        count
    };

    let mut out = Vec::with_capacity(k);
    for idx in 1..=k {
        let mut a = lo;
        let mut b = hi;
        for _ in 0..200 {
            let mid = (a + b) / T::of(2.0);
            if b - a <= T::epsilon() * (a.abs().max(b.abs()) + T::one()) {
                break;
            }
            if count_below(mid) >= idx {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push((a + b) / T::of(2.0));
    }
    out
}

/// In-place lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>, LinalgError> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= T::zero() {
                    return Err(LinalgError::NotPositiveDefinite(i));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            let xk = x[k];
            x[i] -= lik * xk;
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn solve_lower_transpose<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows;
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let lki = l[(k, i)];
            let xk = x[k];
            x[i] -= lki * xk;
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Generalized symmetric eigenproblem `K c = lambda M c` with `M` positive
/// definite, by Cholesky reduction to standard form. Eigenvalues ascending;
/// eigenvector columns are M-orthonormal.
pub fn generalized_sym_eigen<T: Scalar>(
    k: &Mat<T>,
    m: &Mat<T>,
) -> Result<(Vec<T>, Mat<T>), LinalgError> {
    assert_eq!(k.rows, k.cols);
    assert_eq!(m.rows, m.cols);
    assert_eq!(k.rows, m.rows);
    let n = k.rows;
    let l = cholesky(m)?;

    // A = L^{-1} K L^{-T}, formed column by column
    let mut a = Mat::zeros(n, n);
    for j in 0..n {
        // w = L^{-T} e_j  => column j of L^{-T}
        let mut ej = vec![T::zero(); n];
        ej[j] = T::one();
        let w = solve_lower_transpose(&l, &ej);
        let kw = k.matvec(&w);
        let col = solve_lower(&l, &kw);
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    // symmetrize away roundoff
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)]) / T::of(2.0);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }

    let (vals, q) = sym_eigen(&a)?;
    let mut vecs = Mat::zeros(n, n);
    for j in 0..n {
        let col = solve_lower_transpose(&l, &q.column(j));
        for i in 0..n {
            vecs[(i, j)] = col[i];
        }
    }
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_eigen_3x3() {
        let mut a = Mat::zeros(3, 3);
        let entries = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.25], [0.5, 0.25, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = entries[i][j];
            }
        }
        let (vals, vecs) = sym_eigen(&a).unwrap();
        assert!(vals[0] < vals[1] && vals[1] < vals[2]);
        // residual check A v = lambda v
        for j in 0..3 {
            let v = vecs.column(j);
            let av = a.matvec(&v);
            for i in 0..3 {
                assert_abs_diff_eq!(av[i], vals[j] * v[i], epsilon = 1e-12);
            }
        }
        // trace and determinant invariants
        assert_abs_diff_eq!(vals.iter().sum::<f64>(), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn tridiag_matches_second_difference_spectrum() {
        // -u'' on a uniform grid: eigenvalues 2 - 2 cos(k pi / (n+1))
        let n = 40;
        let diag = vec![2.0f64; n];
        let off = vec![-1.0f64; n - 1];
        let (vals, firsts) = tridiag_eigen_first_components(&diag, &off).unwrap();
        for k in 1..=n {
            let expected = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert_abs_diff_eq!(vals[k - 1], expected, epsilon = 1e-12);
        }
        // first components: |v_k(0)| = sqrt(2/(n+1)) |sin(k pi/(n+1))|
        for k in 1..=n {
            let expected =
                (2.0 / (n as f64 + 1.0)).sqrt() * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin();
            assert_abs_diff_eq!(firsts[k - 1].abs(), expected.abs(), epsilon = 1e-10);
        }
    }

    #[test]
    fn sturm_bisection_agrees_with_ql() {
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.01 * i as f64).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| -1.0 + 0.001 * i as f64).collect();
        let (vals, _) = tridiag_eigen_first_components(&diag, &off).unwrap();
        let lows = tridiag_smallest_eigenvalues(&diag, &off, 5);
        for i in 0..5 {
            assert_abs_diff_eq!(lows[i], vals[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn cholesky_and_triangular_solves() {
        let mut a = Mat::zeros(3, 3);
        let entries = [[4.0, 2.0, 1.0], [2.0, 5.0, 3.0], [1.0, 3.0, 6.0]];
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = entries[i][j];
            }
        }
        let l = cholesky(&a).unwrap();
        // L L^T = A
        for i in 0..3 {
            for j in 0..3 {
                let mut sum = 0.0;
                for k in 0..3 {
                    sum += l[(i, k)] * l[(j, k)];
                }
                assert_abs_diff_eq!(sum, a[(i, j)], epsilon = 1e-14);
            }
        }
        let b = [1.0, 2.0, 3.0];
        let y = solve_lower(&l, &b);
        for i in 0..3 {
            let mut sum = 0.0;
            for k in 0..=i {
                sum += l[(i, k)] * y[k];
            }
            assert_abs_diff_eq!(sum, b[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = Mat::zeros(2, 2);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = -1.0;
        assert!(matches!(
            cholesky(&a),
            Err(LinalgError::NotPositiveDefinite(1))
        ));
    }

    #[test]
    fn generalized_eigen_2x2() {
        // K = diag(1, 2), M = diag(2, 1): eigenvalues 0.5 and 2
        let mut k = Mat::zeros(2, 2);
        k[(0, 0)] = 1.0;
        k[(1, 1)] = 2.0;
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 1.0;
        let (vals, vecs) = generalized_sym_eigen(&k, &m).unwrap();
        assert_abs_diff_eq!(vals[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-14);
        // M-orthonormality
        for i in 0..2 {
            for j in 0..2 {
                let vi = vecs.column(i);
                let vj = vecs.column(j);
                let dot = vi[0] * m[(0, 0)] * vj[0] + vi[1] * m[(1, 1)] * vj[1];
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expected, epsilon = 1e-13);
            }
        }
    }
}
