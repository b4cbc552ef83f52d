//! Small dense complex Hermitian matrices.
//!
//! Covariances in this crate live over the BSs of one virtual cell, so they
//! are at most a few tens of rows. A plain row-major buffer with an in-place
//! Cholesky factorization is all the pipeline needs.

use num_complex::Complex64;

use crate::{Error, Result};

/// Square complex matrix stored row-major, kept Hermitian by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    /// `scale * I`.
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(scale, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// `self += weight * v v^H`.
    pub fn add_rank_one(&mut self, weight: f64, v: &[Complex64]) {
        debug_assert_eq!(v.len(), self.dim);
        if weight == 0.0 {
            return;
        }
        let n = self.dim;
        for i in 0..n {
            let vi = v[i] * weight;
            let row = &mut self.data[i * n..(i + 1) * n];
            for (entry, vj) in row.iter_mut().zip(v) {
                *entry += vi * vj.conj();
            }
        }
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &HermitianMatrix) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        self.data
            .chunks_exact(self.dim.max(1))
            .take(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self += weight * x y^H` without forcing symmetry; `x == y` keeps it Hermitian.
    fn add_outer(&mut self, weight: f64, x: &[Complex64], y: &[Complex64]) {
        let n = self.dim;
        for i in 0..n {
            let xi = x[i] * weight;
            let row = &mut self.data[i * n..(i + 1) * n];
            for (entry, yj) in row.iter_mut().zip(y) {
                *entry += xi * yj.conj();
            }
        }
    }

    /// Sherman-Morrison: if `self` is `A^{-1}`, turns it into `(A + weight v v^H)^{-1}`.
    ///
    /// Returns `false` (leaving `self` untouched) when the update is numerically singular.
    pub fn inverse_rank_one_update(&mut self, weight: f64, v: &[Complex64]) -> bool {
        if weight == 0.0 {
            return true;
        }
        let av = self.mul_vec(v);
        let q: f64 = v.iter().zip(&av).map(|(a, b)| (a.conj() * b).re).sum();
        let denom = 1.0 + weight * q;
        if !(denom.abs() > 1e-12) {
            return false;
        }
        self.add_outer(-weight / denom, &av, &av);
        true
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// Largest deviation from Hermitian symmetry, `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Lower-triangular Cholesky factor `L` with `A = L L^H`.
    ///
    /// Only the lower triangle of `self` is read.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut diag = self.data[j * n + j].re;
            for k in 0..j {
                diag -= l[j * n + k].norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[j * n + j] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.data[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Cholesky { dim: n, lower: l })
    }
}

/// Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<Complex64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `L y = b` by forward substitution.
    fn forward(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i].re;
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.dim, "dimension mismatch");
        let n = self.dim;
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[k * n + i].conj() * x[k];
            }
            x[i] = s / self.lower[i * n + i].re;
        }
        x
    }

    /// `v^H A^{-1} v`, computed as `|L^{-1} v|^2`.
    pub fn inverse_quadratic_form(&self, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        self.forward(v).iter().map(|z| z.norm_sqr()).sum()
    }

    /// `A^{-1}`, column by column.
    pub fn inverse(&self) -> HermitianMatrix {
        let n = self.dim;
        let mut inv = HermitianMatrix::zeros(n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e);
            for (i, x) in col.into_iter().enumerate() {
                inv.data[i * n + j] = x;
            }
        }
        inv
    }

    /// Natural logarithm of `det A`.
    pub fn ln_det(&self) -> f64 {
        let n = self.dim;
        (0..n).map(|i| 2.0 * self.lower[i * n + i].re.ln()).sum()
    }
}
