//! Negative eigenvalues as zeros of `κ ↦ D(-κ²)` and the zero-energy
//! resonance classification.
//!
//! On the positive imaginary ζ-axis all Jost data of a real potential is real,
//! so `D(-κ²) = -P(iκ)/(nκ)` is a real function of κ and its zeros can be
//! bracketed by sign changes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_ops::{graph_boundary, pole_free_p};
use crate::jost::{jost_boundary, jost_solution, SpectralParam};
use crate::potentials::{StarGraph, TAIL_TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Upper end of the κ-grid; chosen from the potential depth when `None`.
    pub kappa_max: Option<f64>,
    pub kappa_min: f64,
    pub grid_points: usize,
    pub refinement_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            kappa_max: None,
            kappa_min: 1e-3,
            grid_points: 400,
            refinement_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundStateList {
    /// Sorted ascending; a double zero appears twice.
    pub kappas: Vec<f64>,
    /// Number of eigenvalues counted with multiplicity.
    pub n: usize,
    pub refinement_tol: f64,
    pub kappa_max: f64,
    /// κ values where a double zero (touching, no sign change) was detected.
    pub double_zeros: Vec<f64>,
    /// `|D(-κ²)|` at each refined zero.
    pub residuals: Vec<f64>,
    /// `Σ_j ∫ x |V_j|`.
    pub bargmann_bound: f64,
}

impl BoundStateList {
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.kappas.iter().map(|k| -k * k).collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    /// Smallest κ, if any.
    pub fn first_kappa(&self) -> Option<f64> {
        self.kappas.first().copied()
    }
}

/// `D(-κ²)`, real for real potentials.
pub fn determinant_on_imaginary_axis(g: &StarGraph, kappa: f64) -> Result<f64> {
    let data = graph_boundary(g, SpectralParam::imaginary(kappa), false)?;
    Ok(-data.p.re / (g.n() as f64 * kappa))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn sample(g: &StarGraph, kappas: &[f64]) -> Result<Vec<f64>> {
    kappas.par_iter().map(|&k| determinant_on_imaginary_axis(g, k)).collect()
}

fn bisect(g: &StarGraph, mut a: f64, mut fa: f64, mut b: f64, tol: f64) -> Result<f64> {
    while b - a > tol * b.max(1.0) {
        let mid = 0.5 * (a + b);
        let fm = determinant_on_imaginary_axis(g, mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn choose_kappa_max(g: &StarGraph, requested: Option<f64>) -> Result<f64> {
    let mut k = requested.unwrap_or_else(|| (g.sup_abs().sqrt() * 1.05 + 0.1).max(1.0));
    for _ in 0..40 {
        if (determinant_on_imaginary_axis(g, k)? - 1.0).abs() < 0.5 {
            return Ok(k);
        }
        k *= 2.0;
    }
    Err(Error::NotConverged(format!("|D(-κ²) - 1| >= 1/2 up to κ = {k}")))
}

const DOUBLE_ZERO_TOL: f64 = 1e-7;

/// Zeros of `κ ↦ D(-κ²)` on `(0, κ_max]`, i.e. the negative eigenvalues `-κ²`.
pub fn count_negative_eigenvalues(g: &StarGraph, opts: &SpectrumOptions) -> Result<BoundStateList> {
    let kappa_max = choose_kappa_max(g, opts.kappa_max)?;
    let mut ks = log_grid(opts.kappa_min.min(0.5 * kappa_max), kappa_max, opts.grid_points.max(8));

    // An odd number of zeros below the grid shows up as a sign mismatch with
    // the κ → 0 behaviour -P(0)/(nκ); extend the grid downward if so.
    if let Ok(p0) = pole_free_p(g, SpectralParam::imaginary(0.0)) {
        let f0 = determinant_on_imaginary_axis(g, ks[0])?;
        if p0.re.abs() > 1e-6 && (-p0.re > 0.0) != (f0 > 0.0) {
            let mut low = log_grid(1e-9, ks[0], 100);
            low.pop();
            low.extend(ks);
            ks = low;
        }
    }

    let fs = sample(g, &ks)?;
    let mut kappas = Vec::new();
    let mut double_zeros = Vec::new();
    for i in 0..ks.len() - 1 {
        if fs[i] == 0.0 {
            kappas.push(ks[i]);
        } else if fs[i + 1] != 0.0 && (fs[i] > 0.0) != (fs[i + 1] > 0.0) {
            kappas.push(bisect(g, ks[i], fs[i], ks[i + 1], opts.refinement_tol)?);
        }
    }

    // Local minima of |D| without a sign change may hide a close pair of
    // zeros or a double zero.
    for i in 1..ks.len() - 1 {
        let (f0, f1, f2) = (fs[i - 1], fs[i], fs[i + 1]);
        let same_sign = (f0 > 0.0) == (f1 > 0.0) && (f1 > 0.0) == (f2 > 0.0);
        if !same_sign || f1.abs() > f0.abs() || f1.abs() > f2.abs() {
            continue;
        }
        let vertex_value = parabola_min(ks[i - 1], f0, ks[i], f1, ks[i + 1], f2);
        if vertex_value.map_or(true, |v| (v > 0.0) == (f1 > 0.0) && v.abs() > DOUBLE_ZERO_TOL) {
            continue;
        }
        let sub = log_grid(ks[i - 1], ks[i + 1], 65);
        let sf = sample(g, &sub)?;
        let mut found = 0;
        for s in 0..sub.len() - 1 {
            if sf[s] != 0.0 && sf[s + 1] != 0.0 && (sf[s] > 0.0) != (sf[s + 1] > 0.0) {
                kappas.push(bisect(g, sub[s], sf[s], sub[s + 1], opts.refinement_tol)?);
                found += 1;
            }
        }
        if found > 0 {
            continue;
        }
        let m = (0..sf.len()).min_by(|&a, &b| sf[a].abs().partial_cmp(&sf[b].abs()).unwrap()).unwrap();
        if m > 0 && m + 1 < sf.len() {
            let kmin = golden_min(g, sub[m - 1], sub[m + 1])?;
            let fmin = determinant_on_imaginary_axis(g, kmin)?;
            if fmin.abs() < DOUBLE_ZERO_TOL {
                kappas.push(kmin);
                kappas.push(kmin);
                double_zeros.push(kmin);
                continue;
            }
            let v = parabola_min(sub[m - 1], sf[m - 1], sub[m], sf[m], sub[m + 1], sf[m + 1]);
            if v.is_some_and(|v| (v > 0.0) != (sf[m] > 0.0)) {
                return Err(Error::GridTooCoarse {
                    lo: sub[m - 1],
                    hi: sub[m + 1],
                });
            }
        }
    }

    kappas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let residuals = kappas
        .iter()
        .map(|&k| determinant_on_imaginary_axis(g, k).map(f64::abs))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundStateList {
        n: kappas.len(),
        kappas,
        refinement_tol: opts.refinement_tol,
        kappa_max,
        double_zeros,
        residuals,
        bargmann_bound: g.bargmann_bound(),
    })
}

/// Minimum value of the parabola through three points, if it opens upward
/// (for positive data) and its vertex lies inside the bracket.
fn parabola_min(x0: f64, f0: f64, x1: f64, f1: f64, x2: f64, f2: f64) -> Option<f64> {
    let d01 = (f1 - f0) / (x1 - x0);
    let d12 = (f2 - f1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a == 0.0 {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    if xv < x0 || xv > x2 {
        return None;
    }
    Some(f0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1))
}

fn golden_min(g: &StarGraph, mut a: f64, mut b: f64) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let f = |k: f64| determinant_on_imaginary_axis(g, k).map(f64::abs);
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Value of `K(0)`: finite, or a pole when exactly one Jost function vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum KirchhoffAtZero {
    Finite(f64),
    Pole,
    /// Two or more Jost functions vanish; K(0) is not used.
    Undefined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonanceCase {
    /// `M = 0`, `K(0) ≠ 0`: no resonance.
    Generic,
    /// `M = 1`: K has a pole, no resonance.
    KirchhoffPole,
    /// `M ≥ 2`: resonance functions vanish at the vertex, `m = M - 1`.
    VanishingAtVertex,
    /// `M = 0`, `K(0) = 0`: one resonance function, non-zero at the vertex.
    VertexResonance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    /// Number of edges with `w_j(0) = 0`.
    pub vanishing: usize,
    /// Multiplicity of the zero-energy resonance.
    pub m: usize,
    pub case: ResonanceCase,
    pub k0: KirchhoffAtZero,
    /// Basis of resonance coefficient vectors `(c_1, …, c_n)`.
    pub coefficients: Vec<Vec<f64>>,
    pub w0: Vec<f64>,
    pub dtheta0: Vec<f64>,
    pub tolerance_used: f64,
    /// `max |c_j θ_j(0,0) - c_k θ_k(0,0)|` over the basis.
    pub continuity_residual: f64,
    /// `max |Σ c_j θ'_j(0,0)|` over the basis.
    pub kirchhoff_residual: f64,
}

/// Zero-energy classification from the Jost data at `ζ = 0`.
pub fn classify_zero_energy(g: &StarGraph, zero_tol: f64) -> Result<ResonanceReport> {
    let n = g.n();
    for (j, p) in g.edges().iter().enumerate() {
        if !p.moment(1).is_finite() {
            return Err(Error::MomentRequired { edge: j, order: 1 });
        }
    }
    let data = g
        .edges()
        .par_iter()
        .map(|p| jost_boundary(p, SpectralParam::imaginary(0.0), false))
        .collect::<Result<Vec<_>>>()?;
    let w0: Vec<f64> = data.iter().map(|d| d.theta0.re).collect();
    let dtheta0: Vec<f64> = data.iter().map(|d| d.dtheta0_dx.re).collect();

    let mut vanishing = Vec::new();
    for (j, p) in g.edges().iter().enumerate() {
        let thr = zero_tol * (1.0 + p.moment(0).value());
        let a = w0[j].abs();
        if a > thr / 10.0 && a < 10.0 * thr && !p.is_zero() {
            return Err(Error::IllConditioned(format!(
                "|w_{j}(0)| = {a:e} within a factor 10 of the threshold {thr:e}"
            )));
        }
        if a < thr {
            vanishing.push(j);
        }
    }

    let mut coefficients: Vec<Vec<f64>> = Vec::new();
    let (case, k0) = match vanishing.len() {
        0 => {
            let k: f64 = (0..n).map(|j| dtheta0[j] / w0[j]).sum();
            let thr = zero_tol * n as f64;
            if k.abs() > thr && k.abs() < 10.0 * thr {
                return Err(Error::IllConditioned(format!(
                    "|K(0)| = {:e} within a factor 10 of the threshold {thr:e}",
                    k.abs()
                )));
            }
            if k.abs() < thr {
                coefficients.push(w0.iter().map(|w| 1.0 / w).collect());
                (ResonanceCase::VertexResonance, KirchhoffAtZero::Finite(k))
            } else {
                (ResonanceCase::Generic, KirchhoffAtZero::Finite(k))
            }
        }
        1 => (ResonanceCase::KirchhoffPole, KirchhoffAtZero::Pole),
        _ => {
            let first = vanishing[0];
            for &j in &vanishing[1..] {
                let mut c = vec![0.0; n];
                c[j] = dtheta0[first];
                c[first] = -dtheta0[j];
                let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                coefficients.push(c.into_iter().map(|x| x / norm).collect());
            }
            (ResonanceCase::VanishingAtVertex, KirchhoffAtZero::Undefined)
        }
    };

    let mut continuity_residual: f64 = 0.0;
    let mut kirchhoff_residual: f64 = 0.0;
    for c in &coefficients {
        let vertex: Vec<f64> = (0..n).map(|j| c[j] * w0[j]).collect();
        let spread = vertex.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
            - vertex.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        continuity_residual = continuity_residual.max(spread);
        let kirchhoff: f64 = (0..n).map(|j| c[j] * dtheta0[j]).sum();
        kirchhoff_residual = kirchhoff_residual.max(kirchhoff.abs());
    }

    Ok(ResonanceReport {
        vanishing: vanishing.len(),
        m: coefficients.len(),
        case,
        k0,
        coefficients,
        w0,
        dtheta0,
        tolerance_used: zero_tol,
        continuity_residual,
        kirchhoff_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroEnergyWitness {
    pub holds: bool,
    /// Per basis vector: `max_j |c_j θ_j(x_far, 0)|`, the limit of the
    /// resonance function along its largest edge.
    pub tail_limits: Vec<f64>,
}

/// Every bounded zero-energy solution tends to a non-zero constant along some
/// edge, so none of them is square integrable.
pub fn zero_is_never_eigenvalue_check(g: &StarGraph) -> Result<ZeroEnergyWitness> {
    let report = classify_zero_energy(g, 1e-6)?;
    let far = g
        .edges()
        .iter()
        .map(|p| jost_solution(p, SpectralParam::imaginary(0.0), &[p.truncation_point(TAIL_TOLERANCE)? + 1.0]))
        .collect::<Result<Vec<_>>>()?;
    let tail_limits: Vec<f64> = report
        .coefficients
        .iter()
        .map(|c| {
            c.iter()
                .zip(&far)
                .map(|(c, s)| (c * s.theta[0]).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ZeroEnergyWitness {
        holds: tail_limits.iter().all(|&l| l > 1e-8),
        tail_limits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::EdgePotential;
    use std::f64::consts::FRAC_PI_2;

    fn tuned() -> EdgePotential {
        EdgePotential::square_well(-FRAC_PI_2 * FRAC_PI_2, 1.0).unwrap()
    }

    #[test]
    fn free_graph() {
        let g = StarGraph::free(3).unwrap();
        let b = count_negative_eigenvalues(&g, &SpectrumOptions::default()).unwrap();
        assert_eq!(b.n, 0);
        let r = classify_zero_energy(&g, 1e-6).unwrap();
        assert_eq!((r.vanishing, r.m, r.case), (0, 1, ResonanceCase::VertexResonance));
        assert_eq!(r.coefficients, vec![vec![1.0; 3]]);
        assert!(zero_is_never_eigenvalue_check(&g).unwrap().holds);
    }

    #[test]
    fn shallow_line_well_binds_despite_small_moment() {
        let g = StarGraph::new(vec![EdgePotential::square_well(-0.1, 1.0).unwrap(); 2]).unwrap();
        let b = count_negative_eigenvalues(&g, &SpectrumOptions::default()).unwrap();
        let moments: f64 = g.edges().iter().map(|p| p.moment(1).value()).sum();
        assert_eq!(b.n, 1);
        assert!(moments < 1.0 && b.n as f64 <= b.bargmann_bound);
    }

    #[test]
    fn one_well_count_within_bargmann() {
        let g = StarGraph::new(vec![
            EdgePotential::square_well(-4.0, 1.0).unwrap(),
            EdgePotential::zero(),
            EdgePotential::zero(),
        ])
        .unwrap();
        let b = count_negative_eigenvalues(&g, &SpectrumOptions::default()).unwrap();
        assert_eq!(b.n, 1);
        assert!(b.n as f64 <= b.bargmann_bound);
        assert!(b.residuals.iter().all(|&r| r < 1e-8));
        let r = classify_zero_energy(&g, 1e-6).unwrap();
        assert_eq!((r.m, r.case), (0, ResonanceCase::Generic));
        assert!(zero_is_never_eigenvalue_check(&g).unwrap().holds);
    }

    #[test]
    fn tuned_cases() {
        let two = StarGraph::new(vec![tuned(), tuned(), EdgePotential::zero()]).unwrap();
        let r = classify_zero_energy(&two, 1e-6).unwrap();
        assert_eq!((r.vanishing, r.m, r.case), (2, 1, ResonanceCase::VanishingAtVertex));
        assert_eq!(r.coefficients[0][2], 0.0);
        assert!(r.kirchhoff_residual < 1e-8 && r.continuity_residual < 1e-8);
        let w = zero_is_never_eigenvalue_check(&two).unwrap();
        assert!(w.holds, "{w:?}");

        let one = StarGraph::new(vec![tuned(), EdgePotential::zero(), EdgePotential::zero()]).unwrap();
        let r = classify_zero_energy(&one, 1e-6).unwrap();
        assert_eq!((r.vanishing, r.m, r.k0), (1, 0, KirchhoffAtZero::Pole));

        let three = StarGraph::new(vec![tuned(), tuned(), tuned()]).unwrap();
        let r = classify_zero_energy(&three, 1e-6).unwrap();
        assert_eq!((r.vanishing, r.m), (3, 2));
    }

    #[test]
    fn near_threshold_is_ill_conditioned() {
        let p = EdgePotential::square_well(-FRAC_PI_2 * FRAC_PI_2 * (1.0 + 4e-6), 1.0).unwrap();
        let g = StarGraph::new(vec![p, EdgePotential::zero()]).unwrap();
        assert!(matches!(classify_zero_energy(&g, 1e-6), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn identical_wells_give_a_double_zero() {
        let p = EdgePotential::square_well(-6.0, 1.0).unwrap();
        let g = StarGraph::new(vec![p.clone(), p.clone(), p]).unwrap();
        let b = count_negative_eigenvalues(&g, &SpectrumOptions::default()).unwrap();
        assert_eq!(b.double_zeros.len(), 1, "{b:?}");
        assert_eq!(b.n, 3);
    }
}
