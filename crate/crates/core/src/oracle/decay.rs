//! Trace norm of `R(-t) - R_0(-t)` and its decay rate in `t`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{discretize, DiscretizedGraph};
use crate::error::{Error, Result};
use crate::ode::C64;
use crate::potentials::{StarGraph, TAIL_TOLERANCE};
use crate::quadrature::linear_fit;

/// `‖R_0(-t) - R(-t)‖₁` of the discrete operators.
///
/// The difference equals `U C Uᵀ` with `U` the free resolvent columns on the
/// support of V and `C = V (I + G V)^{-1}`, so its rank is at most the support
/// size and the nuclear norm follows from a small symmetric eigenproblem.
pub fn trace_norm_difference(d: &DiscretizedGraph, t: f64) -> Result<f64> {
    let support = d.support();
    if support.is_empty() {
        return Ok(0.0);
    }
    let sign_definite = d.potential.iter().all(|&v| v <= 0.0) || d.potential.iter().all(|&v| v >= 0.0);
    let m = d.matrix();
    if sign_definite && m.count_below(-t) == 0 {
        // sign-definite V: ‖R0 - R‖₁ = |tr(R0 - R)|
        let r0 = d.free_matrix().factor(C64::new(-t, 0.0))?.inverse_diagonal();
        let r = m.factor(C64::new(-t, 0.0))?.inverse_diagonal();
        return Ok(r0.iter().zip(&r).map(|(a, b)| a.re - b.re).sum::<f64>().abs());
    }
    let ldl = d.free_matrix().factor(C64::new(-t, 0.0))?;
    let (dim, s) = (d.dim(), support.len());
    let mut u = DMatrix::<f64>::zeros(dim, s);
    let mut rhs = vec![C64::new(0.0, 0.0); dim];
    for (b, &kb) in support.iter().enumerate() {
        rhs.iter_mut().for_each(|r| *r = C64::new(0.0, 0.0));
        rhs[kb] = C64::new(1.0, 0.0);
        for (k, v) in ldl.solve(&rhs).into_iter().enumerate() {
            u[(k, b)] = v.re;
        }
    }
    let v = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(s, support.iter().map(|&k| d.potential[k])));
    let g_ss = DMatrix::from_fn(s, s, |a, b| u[(support[a], b)]);
    let inner = DMatrix::identity(s, s) + &g_ss * &v;
    let c = &v * inner.try_inverse().ok_or(Error::SingularShift)?;
    let c = 0.5 * (&c + c.transpose());
    let r = u.qr().r();
    let core = &r * c * r.transpose();
    Ok(core.symmetric_eigen().eigenvalues.iter().map(|e| e.abs()).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub ts: Vec<f64>,
    pub h: f64,
    pub norms: Vec<f64>,
    pub norms_halved: Vec<f64>,
    /// Log-log slope at spacing `h`; `None` when the difference vanishes.
    pub slope: Option<f64>,
    pub slope_halved: Option<f64>,
}

impl DecayFit {
    pub fn exact_zero(&self) -> bool {
        self.slope.is_none()
    }

    pub fn slope_drift(&self) -> Option<f64> {
        Some((self.slope? - self.slope_halved?).abs())
    }
}

fn norms_at(g: &StarGraph, ts: &[f64], h: f64) -> Result<Vec<f64>> {
    let support = g
        .edges()
        .iter()
        .map(|p| p.truncation_point(TAIL_TOLERANCE))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    ts.iter()
        .map(|&t| {
            let l = ((support + 12.0 / t.sqrt()) / h).ceil().max(4.0) * h;
            trace_norm_difference(&discretize(g, l, h)?, t)
        })
        .collect()
}

fn slope(ts: &[f64], norms: &[f64]) -> Option<f64> {
    if norms.iter().any(|&x| x == 0.0) {
        return None;
    }
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    Some(linear_fit(&lx, &ly).0)
}

/// Trace norms on `t_list` at spacing `h` and `h/2` with per-`t` truncation
/// `L = support + 12/√t`, and the fitted log-log slopes.
pub fn trace_norm_decay(g: &StarGraph, t_list: &[f64], h: f64) -> Result<DecayFit> {
    if let Some(&t) = t_list.iter().find(|&&t| !(t > 0.0) || t.sqrt() * h >= 0.1) {
        return Err(Error::TrustRegionExceeded(t.max(0.0).sqrt() * h));
    }
    let norms = norms_at(g, t_list, h)?;
    let norms_halved = norms_at(g, t_list, 0.5 * h)?;
    Ok(DecayFit {
        ts: t_list.to_vec(),
        h,
        slope: slope(t_list, &norms),
        slope_halved: slope(t_list, &norms_halved),
        norms,
        norms_halved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::EdgePotential;

    #[test]
    fn low_rank_norm_matches_dense() {
        let g = StarGraph::new(vec![EdgePotential::square_well(-2.0, 0.5).unwrap(), EdgePotential::square_well(1.5, 0.8).unwrap()]).unwrap();
        let d = discretize(&g, 2.0, 0.05).unwrap();
        let t = 9.0;
        let inv = |m: DMatrix<f64>| (m + DMatrix::identity(d.dim(), d.dim()) * t).try_inverse().unwrap();
        let diff = inv(d.free_matrix().to_dense()) - inv(d.matrix().to_dense());
        let dense: f64 = diff.symmetric_eigen().eigenvalues.iter().map(|e| e.abs()).sum();
        let low_rank = trace_norm_difference(&d, t).unwrap();
        assert!((dense - low_rank).abs() < 1e-10 * dense, "{dense} vs {low_rank}");
    }

    #[test]
    fn sign_definite_shortcut_matches_dense() {
        for depth in [-2.0, 3.0] {
            let g = StarGraph::new(vec![
                EdgePotential::square_well(depth, 0.5).unwrap(),
                EdgePotential::exponential(depth.signum(), 2.0).unwrap(),
                EdgePotential::zero(),
            ])
            .unwrap();
            let d = discretize(&g, 3.0, 0.05).unwrap();
            let t = 9.0;
            let inv = |m: DMatrix<f64>| (m + DMatrix::identity(d.dim(), d.dim()) * t).try_inverse().unwrap();
            let diff = inv(d.free_matrix().to_dense()) - inv(d.matrix().to_dense());
            let dense: f64 = diff.symmetric_eigen().eigenvalues.iter().map(|e| e.abs()).sum();
            let fast = trace_norm_difference(&d, t).unwrap();
            assert!((dense - fast).abs() < 1e-10 * dense, "{dense} vs {fast}");
        }
    }

    #[test]
    fn free_graph_is_exact_zero() {
        let fit = trace_norm_decay(&StarGraph::free(3).unwrap(), &[16.0, 64.0], 0.01).unwrap();
        assert!(fit.exact_zero());
        assert!(fit.norms.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn trust_region() {
        let g = StarGraph::free(2).unwrap();
        assert!(matches!(trace_norm_decay(&g, &[16.0, 400.0], 0.01), Err(Error::TrustRegionExceeded(r)) if (r - 0.2).abs() < 1e-12));
    }
}
