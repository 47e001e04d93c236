//! Regular and Jost solutions of `-u'' + V u = ζ² u` on one half-line edge.
//!
//! The Jost solution is integrated backward from the truncation point in the
//! phase-factored form `θ(x, ζ) = e^{iζx} u(x, ζ)`, which turns the growing
//! backward solution for `Im ζ > 0` into a bounded one:
//!
//! ```text
//! u'' = -2iζ u' + V u,                   u(x_max) = 1, u'(x_max) = 0
//! v'' = -2iζ v' - 2i u' + V v,  v = ∂ζ u, v(x_max) = 0, v'(x_max) = 0
//! ```
//!
//! Forward integration of θ is never used; for large `Im ζ` it is unstable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Integrator, Tolerance, C64};
use crate::potentials::{EdgePotential, TAIL_TOLERANCE};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Spectral parameter ζ with `Im ζ >= 0`, `z = ζ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    zeta: C64,
}

impl SpectralParam {
    pub fn from_zeta(zeta: C64) -> Result<Self> {
        if zeta.im < 0.0 || !zeta.re.is_finite() || !zeta.im.is_finite() {
            return Err(Error::LowerHalfPlane(zeta));
        }
        Ok(SpectralParam { zeta })
    }

    /// Branch of `z^{1/2}` with `Im ζ > 0` off `[0, ∞)`; points `λ >= 0` map to
    /// the boundary value `ζ = √λ` (the limit from `λ + i0`).
    pub fn from_z(z: C64) -> Self {
        let mut zeta = z.sqrt();
        if zeta.im < 0.0 {
            zeta = -zeta;
        }
        if z.im == 0.0 && z.re < 0.0 {
            zeta = C64::new(0.0, (-z.re).sqrt());
        }
        SpectralParam { zeta }
    }

    /// `ζ = iκ`, `κ >= 0`.
    pub fn imaginary(kappa: f64) -> Self {
        assert!(kappa >= 0.0);
        SpectralParam {
            zeta: C64::new(0.0, kappa),
        }
    }

    /// Real ζ = k (either sign): the boundary value on the continuous spectrum.
    pub fn real(k: f64) -> Self {
        SpectralParam {
            zeta: C64::new(k, 0.0),
        }
    }

    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    pub fn z(&self) -> C64 {
        self.zeta * self.zeta
    }

    pub fn is_zero(&self) -> bool {
        self.zeta == ZERO
    }
}

/// Boundary data of the Jost solution at `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JostData {
    /// `θ(0, ζ) = w(ζ)`, the Jost function.
    pub theta0: C64,
    /// `θ'(0, ζ)`.
    pub dtheta0_dx: C64,
    /// `∂ζ θ(0, ζ)`.
    pub dtheta0_dzeta: Option<C64>,
    /// `∂ζ θ'(0, ζ)`.
    pub ddtheta0_dxdzeta: Option<C64>,
    pub est_error: f64,
}

impl JostData {
    /// Exact data of the free edge.
    pub fn free(sp: SpectralParam, with_zeta_derivatives: bool) -> Self {
        JostData {
            theta0: ONE,
            dtheta0_dx: I * sp.zeta(),
            dtheta0_dzeta: with_zeta_derivatives.then_some(ZERO),
            ddtheta0_dxdzeta: with_zeta_derivatives.then_some(I),
            est_error: 0.0,
        }
    }

    pub fn w(&self) -> C64 {
        self.theta0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JostOptions {
    pub tol: Tolerance,
    /// Tail tolerance for truncating non-compact potentials.
    pub tail_tau: f64,
}

impl Default for JostOptions {
    fn default() -> Self {
        JostOptions {
            tol: Tolerance::default(),
            tail_tau: TAIL_TOLERANCE,
        }
    }
}

/// Sampled (θ, θ') on an x-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct JostSamples {
    pub xs: Vec<f64>,
    pub theta: Vec<C64>,
    pub dtheta_dx: Vec<C64>,
    pub est_error: f64,
}

/// Sampled regular solution, `φ(0) = 0`, `φ'(0) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularData {
    pub xs: Vec<f64>,
    pub phi: Vec<C64>,
    pub dphi_dx: Vec<C64>,
}

/// V evaluated on the open segment `(a, b)`, so one-sided limits are used at
/// breakpoints.
#[inline]
fn potential_on(p: &EdgePotential, x: f64, a: f64, b: f64) -> f64 {
    let d = 1e-12 * (b - a);
    p.eval(x.clamp(a + d, b - d))
}

/// Sorted segment ends `0 = s_0 < ... < s_m = end`, including breakpoints.
fn segment_points(p: &EdgePotential, end: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = std::iter::once(0.0)
        .chain(p.breakpoints().into_iter().filter(|&b| b > 0.0 && b < end))
        .chain(extra.iter().copied().filter(|&x| x > 0.0 && x < end))
        .chain(std::iter::once(end))
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn check_zero_energy(p: &EdgePotential, sp: SpectralParam, derivatives: bool) -> Result<()> {
    if sp.is_zero() {
        if !p.moment(1).is_finite() {
            return Err(Error::MomentRequired { edge: 0, order: 1 });
        }
        if derivatives && !p.moment(2).is_finite() {
            return Err(Error::MomentRequired { edge: 0, order: 2 });
        }
    }
    Ok(())
}

/// Boundary data `θ(0,ζ)`, `θ'(0,ζ)` and optionally their ζ-derivatives.
pub fn jost_boundary(p: &EdgePotential, sp: SpectralParam, with_zeta_derivatives: bool) -> Result<JostData> {
    jost_boundary_with(p, sp, with_zeta_derivatives, &JostOptions::default())
}

pub fn jost_boundary_with(
    p: &EdgePotential,
    sp: SpectralParam,
    with_zeta_derivatives: bool,
    opts: &JostOptions,
) -> Result<JostData> {
    if p.is_zero() {
        return Ok(JostData::free(sp, with_zeta_derivatives));
    }
    check_zero_energy(p, sp, with_zeta_derivatives)?;
    let x_max = p.truncation_point(opts.tail_tau)?;
    let zeta = sp.zeta();
    let seg = segment_points(p, x_max, &[]);
    let mut ig = Integrator::new(opts.tol);

    let data = if with_zeta_derivatives {
        let mut y = [ONE, ZERO, ZERO, ZERO];
        for w in seg.windows(2).rev() {
            let (a, b) = (w[0], w[1]);
            let f = |x: f64, y: &[C64; 4]| {
                let v = potential_on(p, x, a, b);
                [
                    y[1],
                    -2.0 * I * zeta * y[1] + v * y[0],
                    y[3],
                    -2.0 * I * zeta * y[3] - 2.0 * I * y[1] + v * y[2],
                ]
            };
            ig.advance(&f, b, a, &mut y)?;
        }
        let [u, du, v, dv] = y;
        JostData {
            theta0: u,
            dtheta0_dx: I * zeta * u + du,
            dtheta0_dzeta: Some(v),
            ddtheta0_dxdzeta: Some(I * u + I * zeta * v + dv),
            est_error: 0.0,
        }
    } else {
        let mut y = [ONE, ZERO];
        for w in seg.windows(2).rev() {
            let (a, b) = (w[0], w[1]);
            let f = |x: f64, y: &[C64; 2]| [y[1], -2.0 * I * zeta * y[1] + potential_on(p, x, a, b) * y[0]];
            ig.advance(&f, b, a, &mut y)?;
        }
        JostData {
            theta0: y[0],
            dtheta0_dx: I * zeta * y[0] + y[1],
            dtheta0_dzeta: None,
            ddtheta0_dxdzeta: None,
            est_error: 0.0,
        }
    };
    Ok(JostData {
        est_error: opts.tol.rtol * ig.path_length + p.tail_bound(x_max),
        ..data
    })
}

/// θ and θ' sampled on `xs` (any order, all `>= 0`).
pub fn jost_solution(p: &EdgePotential, sp: SpectralParam, xs: &[f64]) -> Result<JostSamples> {
    jost_solution_with(p, sp, xs, &JostOptions::default())
}

pub fn jost_solution_with(
    p: &EdgePotential,
    sp: SpectralParam,
    xs: &[f64],
    opts: &JostOptions,
) -> Result<JostSamples> {
    check_zero_energy(p, sp, false)?;
    let zeta = sp.zeta();
    let x_max = if p.is_zero() { 0.0 } else { p.truncation_point(opts.tail_tau)? };
    let mut theta = vec![ZERO; xs.len()];
    let mut dtheta = vec![ZERO; xs.len()];

    // u and u' at every sample point, from the phase-factored system
    let mut u_at: Vec<(C64, C64)> = vec![(ONE, ZERO); xs.len()];
    let mut ig = Integrator::new(opts.tol);
    if x_max > 0.0 {
        let inside: Vec<f64> = xs.iter().copied().filter(|&x| x < x_max).collect();
        let seg = segment_points(p, x_max, &inside);
        let mut values = Vec::with_capacity(seg.len());
        let mut y = [ONE, ZERO];
        values.push((x_max, y));
        let breaks = segment_points(p, x_max, &[]);
        for w in seg.windows(2).rev() {
            let (a, b) = (w[0], w[1]);
            // enclosing potential segment, for one-sided evaluation
            let k = breaks.partition_point(|&s| s <= a).max(1);
            let (pa, pb) = (breaks[k - 1], breaks[k.min(breaks.len() - 1)]);
            let f = |x: f64, y: &[C64; 2]| [y[1], -2.0 * I * zeta * y[1] + potential_on(p, x, pa, pb) * y[0]];
            ig.advance(&f, b, a, &mut y)?;
            values.push((a, y));
        }
        for (i, &x) in xs.iter().enumerate() {
            if x < x_max {
                let j = values
                    .iter()
                    .position(|(s, _)| *s == x)
                    .expect("sample point is a segment end");
                u_at[i] = (values[j].1[0], values[j].1[1]);
            }
        }
    }
    for (i, &x) in xs.iter().enumerate() {
        let phase = (I * zeta * x).exp();
        let (u, du) = u_at[i];
        theta[i] = phase * u;
        dtheta[i] = phase * (I * zeta * u + du);
    }
    let est_error = opts.tol.rtol * ig.path_length + if x_max > 0.0 { p.tail_bound(x_max) } else { 0.0 };
    Ok(JostSamples {
        xs: xs.to_vec(),
        theta,
        dtheta_dx: dtheta,
        est_error,
    })
}

/// Regular solution by forward integration from `φ(0) = 0, φ'(0) = 1`.
pub fn regular_solution(p: &EdgePotential, sp: SpectralParam, xs: &[f64]) -> Result<RegularData> {
    regular_solution_with(p, sp, xs, &JostOptions::default())
}

pub fn regular_solution_with(
    p: &EdgePotential,
    sp: SpectralParam,
    xs: &[f64],
    opts: &JostOptions,
) -> Result<RegularData> {
    let z = sp.z();
    let end = xs.iter().copied().fold(0.0, f64::max);
    let mut phi = vec![ZERO; xs.len()];
    let mut dphi = vec![ONE; xs.len()];
    if end > 0.0 {
        let x_max = if p.is_zero() { 0.0 } else { p.truncation_point(opts.tail_tau)? };
        let mut breaks = segment_points(p, x_max.max(end), &[]);
        if *breaks.last().unwrap() < end {
            breaks.push(end);
        }
        let seg = segment_points(p, end, xs);
        let mut y = [ZERO, ONE];
        let mut values = vec![(0.0, y)];
        let mut ig = Integrator::new(opts.tol);
        for w in seg.windows(2) {
            let (a, b) = (w[0], w[1]);
            let k = breaks.partition_point(|&s| s <= a).max(1);
            let (pa, pb) = (breaks[k - 1], breaks[k.min(breaks.len() - 1)]);
            let f = |x: f64, y: &[C64; 2]| [y[1], (potential_on(p, x, pa, pb) - z) * y[0]];
            ig.advance(&f, a, b, &mut y)?;
            values.push((b, y));
        }
        for (i, &x) in xs.iter().enumerate() {
            if x > 0.0 {
                let j = values.iter().position(|(s, _)| *s == x).expect("sample point is a segment end");
                phi[i] = values[j].1[0];
                dphi[i] = values[j].1[1];
            }
        }
    }
    Ok(RegularData {
        xs: xs.to_vec(),
        phi,
        dphi_dx: dphi,
    })
}

/// `θ(x)φ'(x) - θ'(x)φ(x)`; independent of x and equal to `θ(0, ζ)`.
pub fn wronskian(p: &EdgePotential, sp: SpectralParam, x: f64) -> Result<C64> {
    let j = jost_solution(p, sp, &[x])?;
    let r = regular_solution(p, sp, &[x])?;
    Ok(j.theta[0] * r.dphi_dx[0] - j.dtheta_dx[0] * r.phi[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn well(depth: f64, width: f64) -> EdgePotential {
        EdgePotential::square_well(depth, width).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn from_z_branch() {
        let sp = SpectralParam::from_z(C64::new(-4.0, 0.0));
        assert_eq!(sp.zeta(), C64::new(0.0, 2.0));
        let sp = SpectralParam::from_z(C64::new(1.0, -1e-3));
        assert!(sp.zeta().im > 0.0);
        assert!(close(sp.z(), C64::new(1.0, -1e-3), 1e-14));
        let sp = SpectralParam::from_z(C64::new(4.0, 0.0));
        assert_eq!(sp.zeta(), C64::new(2.0, 0.0));
        assert!(SpectralParam::from_zeta(C64::new(1.0, -0.1)).is_err());
    }

    #[test]
    fn free_jost_solution() {
        let sp = SpectralParam::imaginary(1.0);
        let xs = [0.0, 0.5, 2.0, 7.0];
        let s = jost_solution(&EdgePotential::zero(), sp, &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!(close(s.theta[i], C64::new((-x).exp(), 0.0), 1e-15));
            assert!(close(s.dtheta_dx[i], C64::new(-(-x).exp(), 0.0), 1e-15));
        }
        let d = jost_boundary(&EdgePotential::zero(), sp, true).unwrap();
        assert_eq!(d.theta0, ONE);
        assert_eq!(d.dtheta0_dx, -ONE);
        assert_eq!(d.dtheta0_dzeta, Some(ZERO));
        assert_eq!(d.ddtheta0_dxdzeta, Some(I));
    }

    #[test]
    fn free_jost_through_integrator() {
        // a vanishing exponential still runs through the integrator path
        let p = EdgePotential::piecewise_linear(vec![(0.0, 0.0), (1.0, 1e-300), (2.0, 0.0)]).unwrap();
        let d = jost_boundary(&p, SpectralParam::imaginary(1.0), true).unwrap();
        assert!(close(d.theta0, ONE, 1e-12));
        assert!(close(d.dtheta0_dx, -ONE, 1e-12));
        assert!(close(d.dtheta0_dzeta.unwrap(), ZERO, 1e-12));
        assert!(close(d.ddtheta0_dxdzeta.unwrap(), I, 1e-12));
    }

    #[test]
    fn unit_well_at_zero_energy() {
        // θ(x) = cos(x - 1) inside the well, 1 outside
        let p = well(-1.0, 1.0);
        let sp = SpectralParam::imaginary(0.0);
        let xs = [0.0, 0.25, 0.5, 1.0, 1.5, 3.0];
        let s = jost_solution(&p, sp, &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let exact = if x < 1.0 { (x - 1.0).cos() } else { 1.0 };
            assert!(close(s.theta[i], C64::new(exact, 0.0), 1e-9), "x = {x}: {}", s.theta[i]);
        }
        let d = jost_boundary(&p, sp, false).unwrap();
        assert!(close(d.theta0, C64::new(1f64.cos(), 0.0), 1e-9));
        assert!((d.theta0.re - 0.54030).abs() < 1e-5);
        assert!(close(d.dtheta0_dx, C64::new(1f64.sin(), 0.0), 1e-9));
        assert!((d.dtheta0_dx.re - 0.84147).abs() < 1e-5);
    }

    #[test]
    fn tuned_well_zero_and_derivative_identity() {
        let p = well(-FRAC_PI_2 * FRAC_PI_2, 1.0);
        let d = jost_boundary(&p, SpectralParam::imaginary(0.0), true).unwrap();
        assert!(d.theta0.norm() < 1e-9);
        // θ'(0,0) = k' sin(k') with k' = π/2
        assert!(close(d.dtheta0_dx, C64::new(FRAC_PI_2, 0.0), 1e-9));
        let prod = d.dtheta0_dzeta.unwrap() * d.dtheta0_dx;
        assert!(close(prod, -I, 1e-8), "{prod}");
    }

    #[test]
    fn nonvanishing_zero_energy_derivative_identity() {
        // θ̇θ' - θ̇'θ = -i at ζ = 0 when θ(0,0) ≠ 0
        for p in [well(-1.0, 1.0), well(2.0, 0.7), EdgePotential::exponential(-2.0, 1.5).unwrap()] {
            let d = jost_boundary(&p, SpectralParam::imaginary(0.0), true).unwrap();
            let lhs = d.dtheta0_dzeta.unwrap() * d.dtheta0_dx - d.ddtheta0_dxdzeta.unwrap() * d.theta0;
            assert!(close(lhs, -I, 1e-8), "{lhs}");
        }
    }

    #[test]
    fn regular_solution_examples() {
        let xs = [0.0, 0.3, 1.0, 2.5];
        let r = regular_solution(&EdgePotential::zero(), SpectralParam::imaginary(1.0), &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!(close(r.phi[i], C64::new(x.sinh(), 0.0), 1e-9 * x.cosh()));
        }
        let r = regular_solution(&EdgePotential::zero(), SpectralParam::imaginary(0.0), &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!(close(r.phi[i], C64::new(x, 0.0), 1e-10));
        }
        let xs = [0.0, 0.2, 0.6, 1.0];
        let r = regular_solution(&well(-1.0, 1.0), SpectralParam::imaginary(0.0), &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!(close(r.phi[i], C64::new(x.sin(), 0.0), 1e-10));
        }
        assert_eq!(r.phi[0], ZERO);
        assert_eq!(r.dphi_dx[0], ONE);
    }

    #[test]
    fn wronskian_examples() {
        let w = wronskian(&EdgePotential::zero(), SpectralParam::imaginary(1.0), 2.0).unwrap();
        assert!(close(w, ONE, 1e-9));
        let w = wronskian(&well(-1.0, 1.0), SpectralParam::imaginary(0.0), 0.5).unwrap();
        assert!(close(w, C64::new(1f64.cos(), 0.0), 1e-9));
    }

    #[test]
    fn variational_derivative_matches_central_difference() {
        let p = well(-3.0, 1.2);
        let zeta = C64::new(0.7, 0.9);
        let d = jost_boundary(&p, SpectralParam::from_zeta(zeta).unwrap(), true).unwrap();
        let h = 1e-4;
        let plus = jost_boundary(&p, SpectralParam::from_zeta(zeta + h).unwrap(), false).unwrap();
        let minus = jost_boundary(&p, SpectralParam::from_zeta(zeta - h).unwrap(), false).unwrap();
        let fd = (plus.theta0 - minus.theta0) / (2.0 * h);
        let fd_dx = (plus.dtheta0_dx - minus.dtheta0_dx) / (2.0 * h);
        assert!(close(d.dtheta0_dzeta.unwrap(), fd, 1e-6), "{} vs {fd}", d.dtheta0_dzeta.unwrap());
        assert!(close(d.ddtheta0_dxdzeta.unwrap(), fd_dx, 1e-6));
    }

    #[test]
    fn large_imaginary_zeta_asymptotics() {
        let p = well(-2.0, 1.0);
        for t in [10.0, 100.0, 1000.0] {
            let d = jost_boundary(&p, SpectralParam::imaginary(t), false).unwrap();
            let scaled = (d.theta0 - ONE).norm() * t;
            assert!(scaled < 2.0, "t = {t}: {scaled}");
        }
    }

    #[test]
    fn zero_energy_tail_shape() {
        let p = EdgePotential::exponential(-2.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..12).map(|i| 1.0 + 2.0 * i as f64).collect();
        let s = jost_solution(&p, SpectralParam::imaginary(0.0), &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let ratio = (s.theta[i] - ONE).norm() / p.tail_bound(x);
            assert!(ratio < 2.0, "x = {x}: {ratio}");
        }
    }
}
