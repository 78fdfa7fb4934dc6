//! Small dense linear algebra: the per-block systems solved by the methods
//! are `N_i × N_i` with `N_i` small, so a row-major matrix, a Cholesky factor
//! and a power iteration are all that is needed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

/// `y ← y + alpha·x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Adds `alpha` to every diagonal entry.
    pub fn add_diagonal(&mut self, alpha: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += alpha;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `⟨Mx, x⟩`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(&self.mul_vec(x), x)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.data.iter().fold(0.0f64, |a, v| a.max(math::abs(*v))).max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if math::abs(self[(i, j)] - self[(j, i)]) > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| math::abs(self[(i, i)]))
            .fold(0.0, f64::max)
    }
}

impl core::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `M = LLᵀ` of an SPD matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors `m`. A pivot at or below `rel_pivot_tol · max|m_ii|` is treated
    /// as singular.
    pub fn factor(m: &DenseMatrix, rel_pivot_tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let n = m.rows();
        let floor = rel_pivot_tol * m.max_abs_diagonal();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    what: format!("{n}x{n} matrix (pivot {j} = {d:e})"),
                });
            }
            let djj = math::sqrt(d);
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Smallest diagonal entry of the factor, squared: a cheap lower
    /// indication of conditioning.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n)
            .map(|i| self.lower[i * self.n + i] * self.lower[i * self.n + i])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of the pencil `(M, B)` by power iteration on `B⁻¹M`,
/// reporting the Rayleigh quotient `⟨Mv, v⟩ / ⟨Bv, v⟩`.
///
/// `apply_m` writes `Mv`, `apply_b` writes `Bv` and `solve_b` solves with
/// `B` in place. The start vector is the normalized all-ones vector. Stops
/// when the Rayleigh quotient changes by at most `tol` relative.
pub fn generalized_power_iteration(
    n: usize,
    mut apply_m: impl FnMut(&[f64], &mut [f64]),
    mut apply_b: impl FnMut(&[f64], &mut [f64]),
    mut solve_b: impl FnMut(&mut [f64]),
    tol: f64,
    max_iter: usize,
) -> EigenEstimate {
    if n == 0 {
        return EigenEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut v = vec![1.0 / math::sqrt(n as f64); n];
    let mut mv = vec![0.0; n];
    let mut bv = vec![0.0; n];
    let mut previous = f64::NAN;
    for it in 1..=max_iter {
        apply_m(&v, &mut mv);
        apply_b(&v, &mut bv);
        let denom = dot(&bv, &v);
        let lambda = dot(&mv, &v) / denom;
        if lambda == 0.0 && dot(&mv, &mv) == 0.0 {
            // v is in the null space; M may still be nonzero elsewhere
            if it == 1 {
                for (k, vk) in v.iter_mut().enumerate() {
                    *vk = if k % 2 == 0 { 1.0 } else { -1.0 };
                }
                let s = norm2(&v);
                v.iter_mut().for_each(|x| *x /= s);
                continue;
            }
            return EigenEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        if math::abs(lambda - previous) <= tol * math::abs(lambda) {
            return EigenEstimate {
                value: lambda,
                iterations: it,
                converged: true,
            };
        }
        previous = lambda;
        solve_b(&mut mv);
        let s = math::sqrt(dot(&mv, &mv));
        if s == 0.0 || !s.is_finite() {
            return EigenEstimate {
                value: lambda,
                iterations: it,
                converged: s == 0.0,
            };
        }
        for (vi, mi) in v.iter_mut().zip(&mv) {
            *vi = mi / s;
        }
    }
    EigenEstimate {
        value: previous,
        iterations: max_iter,
        converged: false,
    }
}

/// Largest eigenvalue of a symmetric PSD dense matrix.
pub fn largest_eigenvalue(m: &DenseMatrix, tol: f64, max_iter: usize) -> EigenEstimate {
    let n = m.rows();
    if n == 1 {
        return EigenEstimate {
            value: m[(0, 0)],
            iterations: 0,
            converged: true,
        };
    }
    generalized_power_iteration(
        n,
        |v, out| out.copy_from_slice(&m.mul_vec(v)),
        |v, out| out.copy_from_slice(v),
        |_| {},
        tol,
        max_iter,
    )
}

/// Smallest eigenvalue of the SPD pencil `(M, D)` by inverse iteration:
/// power iteration on `M⁻¹D`, reporting `⟨Mv, v⟩ / ⟨Dv, v⟩`.
///
/// Returns `Ok(0.0)` when `M` is singular to the pivot tolerance.
pub fn smallest_generalized_eigenvalue(
    m: &DenseMatrix,
    apply_d: impl Fn(&[f64], &mut [f64]),
    tol: f64,
    max_iter: usize,
) -> Result<EigenEstimate> {
    let n = m.rows();
    let chol = match Cholesky::factor(m, 1e-13) {
        Ok(c) => c,
        Err(_) => {
            return Ok(EigenEstimate {
                value: 0.0,
                iterations: 0,
                converged: true,
            })
        }
    };
    // largest eigenvalue of (D, M) is 1/λ_min(M, D)
    let est = generalized_power_iteration(
        n,
        |v, out| apply_d(v, out),
        |v, out| out.copy_from_slice(&m.mul_vec(v)),
        |x| chol.solve_in_place(x),
        tol,
        max_iter,
    );
    if !est.converged {
        return Err(Error::NonConvergence {
            what: format!("inverse power iteration ({n}x{n})"),
            iterations: est.iterations,
        });
    }
    Ok(EigenEstimate {
        value: if est.value > 0.0 { 1.0 / est.value } else { 0.0 },
        ..est
    })
}

/// Conjugate gradient for an SPD operator. Returns the iteration count.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = rhs.len();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = tol * tol * dot(rhs, rhs).max(f64::MIN_POSITIVE);
    for it in 0..max_iter {
        if rr <= target {
            return Ok(it);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite {
                what: "conjugate gradient operator".into(),
            });
        }
        let alpha = rr / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    if rr <= target {
        return Ok(max_iter);
    }
    Err(Error::NonConvergence {
        what: "conjugate gradient".into(),
        iterations: max_iter,
    })
}
