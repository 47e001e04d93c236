//! Trace norm of `(·, f) f - (·, g) g`.

use nalgebra::Matrix2;

use crate::ode::C64;

fn inner(f: &[C64], g: &[C64]) -> C64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum()
}

fn norm_sqr(f: &[C64]) -> f64 {
    f.iter().map(|a| a.norm_sqr()).sum()
}

/// `((‖f‖² + ‖g‖²)² - 4 |(f, g)|²)^{1/2}`.
pub fn rank2_trace_norm(f: &[C64], g: &[C64]) -> f64 {
    assert_eq!(f.len(), g.len());
    let s = norm_sqr(f) + norm_sqr(g);
    let c = inner(f, g).norm_sqr();
    (s * s - 4.0 * c).max(0.0).sqrt()
}

/// Same norm from the singular values of the 2×2 matrix of the operator in a
/// Gram–Schmidt basis of `span{f, g}`.
pub fn rank2_trace_norm_gram(f: &[C64], g: &[C64]) -> f64 {
    assert_eq!(f.len(), g.len());
    let (nf, ng) = (norm_sqr(f).sqrt(), norm_sqr(g).sqrt());
    if nf == 0.0 && ng == 0.0 {
        return 0.0;
    }
    // the norm is symmetric in f and g, so the first basis vector can come
    // from the longer one
    let (f, g, nf) = if nf >= ng { (f, g, nf) } else { (g, f, ng) };
    let e1: Vec<C64> = f.iter().map(|a| a / nf).collect();
    let a = inner(g, &e1);
    let rest: Vec<C64> = g.iter().zip(&e1).map(|(g, e)| g - a * e).collect();
    let beta = norm_sqr(&rest).sqrt();
    // f = nf e1, g = a e1 + beta e2
    let zero = C64::new(0.0, 0.0);
    let ff = Matrix2::new(C64::new(nf * nf, 0.0), zero, zero, zero);
    let col = nalgebra::Vector2::new(a, C64::new(beta, 0.0));
    let m = ff - col * col.adjoint();
    m.singular_values().sum()
}
