//! Dense linear algebra for the Hessian-sized problems of the evidence backend.

#![allow(clippy::needless_range_loop)]

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension { expected: n * n, found: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| crate::num::dot(self.row(i), v)).collect()
    }

    /// Largest |a_ij - a_ji| relative to the largest |a_ij|.
    pub fn relative_asymmetry(&self) -> T {
        let scale = self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if scale == T::zero() {
            return T::zero();
        }
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    pub fn symmetrize(&mut self) {
        let half = T::of(0.5);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let avg = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    /// Solves `self · x = b` by LU factorisation with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        LuFactors::new(self)?.solve(b)
    }
}

/// LU factors with partial pivoting, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactors<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tiny = scale * T::epsilon() * T::of(n.max(1) as f64);
        for col in 0..n {
            let (piv, pval) = (col..n).map(|r| (r, lu[r * n + col].abs())).fold((col, T::zero()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if !(pval > tiny) {
                return Err(Error::Singular);
            }
            if piv != col {
                for k in 0..n {
                    lu.swap(piv * n + k, col * n + k);
                }
                perm.swap(piv, col);
            }
            let d = lu[col * n + col];
            for r in (col + 1)..n {
                let f = lu[r * n + col] / d;
                lu[r * n + col] = f;
                if f == T::zero() {
                    continue;
                }
                for k in (col + 1)..n {
                    let v = lu[col * n + k];
                    lu[r * n + k] -= f * v;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Dimension { expected: n, found: b.len() });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for k in 0..r {
                s -= self.lu[r * n + k] * x[k];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for k in (r + 1)..n {
                s -= self.lu[r * n + k] * x[k];
            }
            x[r] = s / self.lu[r * n + r];
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::Singular)
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Eigendecomposition of a symmetric matrix: `a = V · diag(values) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Ascending.
    pub values: Vec<T>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymmetricEigen<T> {
    /// Householder tridiagonalisation followed by implicit QL iterations.
    /// Only the lower triangle's symmetric counterpart is assumed; callers
    /// should symmetrize first.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Ok(Self { values: Vec::new(), vectors: Matrix::zeros(0) });
        }
        if !a.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("symmetric eigendecomposition input"));
        }
        let mut v = a.clone();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tridiagonalize(&mut v, &mut d, &mut e);
        ql_implicit(&mut v, &mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
        let values = order.iter().map(|&k| d[k]).collect();
        let mut vectors = Matrix::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..n {
                vectors[(r, dst)] = v[(r, src)];
            }
        }
        Ok(Self { values, vectors })
    }
}

fn tridiagonalize<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let n = v.dim();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let dk = d[k];
                    v[(k, j)] -= g * dk;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

fn ql_implicit<T: Scalar>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    let n = v.dim();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let two = T::of(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::Config("eigenvalue iteration did not converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        let vki = v[(k, i)];
                        v[(k, i + 1)] = s * vki + c * h;
                        v[(k, i)] = c * vki - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
