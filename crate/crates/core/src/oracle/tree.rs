//! LDLᵀ factorization of symmetric matrices whose graph is a tree.
//!
//! Nodes are numbered so that every parent has a smaller index than its
//! children; eliminating in descending index order then produces no fill.

use crate::error::{Error, Result};
use crate::ode::C64;

#[derive(Clone, Debug)]
pub struct TreeMatrix {
    pub diag: Vec<f64>,
    /// Entry coupling node k to its parent.
    pub off: Vec<f64>,
    pub parent: Vec<Option<usize>>,
}

impl TreeMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `self - shift · I` factored as `L D Lᵀ` (complex symmetric, no conjugation).
    pub fn factor(&self, shift: C64) -> Result<TreeLdl> {
        let n = self.dim();
        let mut d: Vec<C64> = self.diag.iter().map(|&a| C64::new(a, 0.0) - shift).collect();
        let mut l = vec![C64::new(0.0, 0.0); n];
        let scale = self.diag.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        for k in (0..n).rev() {
            if d[k].norm() < 1e-300 * scale || !d[k].re.is_finite() {
                return Err(Error::SingularShift);
            }
            if let Some(p) = self.parent[k] {
                l[k] = self.off[k] / d[k];
                let update = self.off[k] * l[k];
                d[p] -= update;
            }
        }
        Ok(TreeLdl {
            d,
            l,
            parent: self.parent.clone(),
        })
    }

    /// Number of eigenvalues below `sigma` (Sylvester inertia).
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.dim();
        let mut d: Vec<f64> = self.diag.iter().map(|&a| a - sigma).collect();
        let mut count = 0;
        for k in (0..n).rev() {
            if d[k] == 0.0 {
                d[k] = -f64::EPSILON * (1.0 + sigma.abs());
            }
            if d[k] < 0.0 {
                count += 1;
            }
            if let Some(p) = self.parent[k] {
                d[p] -= self.off[k] * self.off[k] / d[k];
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.dim()];
        for k in 0..self.dim() {
            if let Some(p) = self.parent[k] {
                radius[k] += self.off[k].abs();
                radius[p] += self.off[k].abs();
            }
        }
        let lo = self.diag.iter().zip(&radius).map(|(d, r)| d - r).fold(f64::INFINITY, f64::min);
        let hi = self.diag.iter().zip(&radius).map(|(d, r)| d + r).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = self.diag[k];
            if let Some(p) = self.parent[k] {
                m[(k, p)] = self.off[k];
                m[(p, k)] = self.off[k];
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct TreeLdl {
    d: Vec<C64>,
    l: Vec<C64>,
    parent: Vec<Option<usize>>,
}

impl TreeLdl {
    pub fn log_det(&self) -> C64 {
        self.d.iter().map(|d| d.ln()).sum()
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.d.len();
        let mut y = b.to_vec();
        for k in (0..n).rev() {
            if let Some(p) = self.parent[k] {
                let v = self.l[k] * y[k];
                y[p] -= v;
            }
        }
        for k in 0..n {
            y[k] /= self.d[k];
        }
        for k in 0..n {
            if let Some(p) = self.parent[k] {
                let v = self.l[k] * y[p];
                y[k] -= v;
            }
        }
        y
    }

    /// Diagonal of the inverse (Takahashi recursion, root to leaves).
    pub fn inverse_diagonal(&self) -> Vec<C64> {
        let n = self.d.len();
        let mut z = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            z[k] = 1.0 / self.d[k];
            if let Some(p) = self.parent[k] {
                let zp = z[p];
                z[k] += self.l[k] * self.l[k] * zp;
            }
        }
        z
    }
}
