//! Dense complex matrices and the Pfaffian.
//!
//! These are plain value matrices; measure-weighted operator algebra on the
//! lattice lives in [`crate::kernel`].

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zero(dim: usize) -> Self {
        CMatrix { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o += b;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for o in out.data.iter_mut() {
            *o *= s;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self[(i, j)] + self[(j, i)]).norm());
            }
        }
        worst
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .norm()
                        .partial_cmp(&a[(j, col)].norm())
                        .unwrap()
                })
                .unwrap();
            if a[(pivot, col)].norm() < 1e-14 {
                return Err(Error::SingularMatrix("inverse"));
            }
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f.norm() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let acj = a[(col, j)];
                    let icj = inv[(col, j)];
                    a[(i, j)] -= f * acj;
                    inv[(i, j)] -= f * icj;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for col in 0..self.dim {
            self.data.swap(i * self.dim + col, j * self.dim + col);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for row in 0..self.dim {
            self.data.swap(row * self.dim + i, row * self.dim + j);
        }
    }

    /// Crude upper estimate of the spectral norm (Frobenius).
    pub fn spectral_bound(&self) -> f64 {
        self.frobenius()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Antisymmetric covariance on an ordered generator set.
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    mat: CMatrix,
}

impl CovarianceMatrix {
    /// Validates antisymmetry to 1e-12 (absolute, relative to the largest
    /// entry).
    pub fn new(mat: CMatrix) -> Result<Self> {
        let defect = mat.antisymmetry_defect();
        let scale = mat.max_abs().max(1.0);
        if defect > 1e-12 * scale {
            return Err(Error::NotAntisymmetric(defect));
        }
        Ok(CovarianceMatrix { mat })
    }

    pub fn zero(dim: usize) -> Self {
        CovarianceMatrix { mat: CMatrix::zero(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Submatrix on the given (strictly increasing) index list.
    pub fn submatrix(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), |i, j| self.mat[(idx[i], idx[j])])
    }

    pub fn pfaffian(&self) -> C64 {
        pfaffian(&self.mat)
    }
}

/// Pfaffian of a skew-symmetric matrix: zero for odd dimension, recursive
/// first-row expansion up to dimension 12, skew elimination above.
pub fn pfaffian(a: &CMatrix) -> C64 {
    let n = a.dim;
    if n % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    if n <= 12 {
        let idx: Vec<usize> = (0..n).collect();
        pfaffian_expand(a, &idx)
    } else {
        pfaffian_eliminate(a.clone())
    }
}

fn pfaffian_expand(a: &CMatrix, idx: &[usize]) -> C64 {
    let n = idx.len();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    if n == 2 {
        return a[(idx[0], idx[1])];
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut sign = 1.0;
    for j in 1..n {
        let entry = a[(idx[0], idx[j])];
        if entry.norm() != 0.0 {
            let rest: Vec<usize> = idx[1..]
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j - 1)
                .map(|(_, &v)| v)
                .collect();
            acc += sign * entry * pfaffian_expand(a, &rest);
        }
        sign = -sign;
    }
    acc
}

fn pfaffian_eliminate(mut a: CMatrix) -> C64 {
    let n = a.dim;
    let mut result = C64::new(1.0, 0.0);
    let mut k = 0;
    while k + 1 < n {
        // pivot: bring the largest |a[k][j]|, j > k, into position k+1
        let pivot = (k + 1..n)
            .max_by(|&i, &j| a[(k, i)].norm().partial_cmp(&a[(k, j)].norm()).unwrap())
            .unwrap();
        if a[(k, pivot)].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != k + 1 {
            a.swap_rows(pivot, k + 1);
            a.swap_cols(pivot, k + 1);
            result = -result;
        }
        let p = a[(k, k + 1)];
        result *= p;
        for i in k + 2..n {
            let f = a[(k, i)] / p;
            if f.norm() == 0.0 {
                continue;
            }
            // congruence update: row/col i -= f * row/col k+1
            for j in 0..n {
                let r = a[(k + 1, j)];
                a[(i, j)] -= f * r;
            }
            for j in 0..n {
                let c = a[(j, k + 1)];
                a[(j, i)] -= f * c;
            }
        }
        k += 2;
    }
    result
}
