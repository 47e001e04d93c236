//! Nyström discretization of the Birman–Schwinger determinant with the exact
//! free star-graph kernel. Unlike the box discretization this works directly
//! on the real axis (`ζ > 0`) without an artificial `ε`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ode::C64;
use crate::potentials::{StarGraph, TAIL_TOLERANCE};
use crate::quadrature::composite_nodes;

/// Free Kirchhoff star resolvent kernel at spectral parameter `ζ`.
pub fn free_star_kernel(n: usize, zeta: C64, j: usize, x: f64, l: usize, y: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let coupled = i * (i * zeta * (x + y)).exp() / (n as f64 * zeta);
    if j != l {
        return coupled;
    }
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    (zeta * lo).sin() * (i * zeta * hi).exp() / zeta + coupled
}

/// `det(1 + √V R_0 √|V|)` with composite Gauss–Legendre nodes of the given
/// panel length and order on every edge's support.
pub fn nystrom_determinant(g: &StarGraph, zeta: C64, panel: f64, order: usize) -> Result<C64> {
    if zeta.im < 0.0 {
        return Err(Error::LowerHalfPlane(zeta));
    }
    if zeta.norm() == 0.0 {
        return Err(Error::ZeroSpectralParam);
    }
    let mut nodes = Vec::new();
    for (j, p) in g.edges().iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let end = p.truncation_point(TAIL_TOLERANCE)?;
        for (x, w) in composite_nodes(0.0, end, &p.breakpoints(), panel, order) {
            let v = p.eval(x);
            if v != 0.0 {
                nodes.push((j, x, w, v));
            }
        }
    }
    if nodes.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    let n = g.n();
    let s = nodes.len();
    let m = DMatrix::from_fn(s, s, |a, b| {
        let (ja, xa, wa, va) = nodes[a];
        let (jb, xb, wb, vb) = nodes[b];
        let left = va.signum() * (va.abs() * wa).sqrt();
        let right = (vb.abs() * wb).sqrt();
        let delta = if a == b { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) + left * free_star_kernel(n, zeta, ja, xa, jb, xb) * right
    });
    Ok(m.lu().determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_ops::determinant_at;
    use crate::jost::SpectralParam;
    use crate::potentials::EdgePotential;

    #[test]
    fn matches_jost_determinant() {
        let g = StarGraph::new(vec![
            EdgePotential::square_well(-1.0, 1.0).unwrap(),
            EdgePotential::zero(),
            EdgePotential::zero(),
        ])
        .unwrap();
        for zeta in [C64::new(0.0, 1.0), C64::new(1.0, 0.0), C64::new(0.7, 0.4)] {
            let exact = determinant_at(&g, SpectralParam::from_zeta(zeta).unwrap()).unwrap().value;
            let approx = nystrom_determinant(&g, zeta, 0.05, 10).unwrap();
            assert!((exact - approx).norm() < 1e-5, "{zeta}: {exact} vs {approx}");
        }
    }

    #[test]
    fn free_graph_gives_one() {
        let g = StarGraph::free(4).unwrap();
        assert_eq!(nystrom_determinant(&g, C64::new(1.0, 0.0), 0.1, 4).unwrap(), C64::new(1.0, 0.0));
    }
}
