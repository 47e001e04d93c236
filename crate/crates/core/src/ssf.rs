//! Spectral shift function from the boundary phase of the perturbation
//! determinant, `D(k² + i0) = a(k) e^{iη(k)}`, `ξ(λ) = η(√λ)/π` for `λ > 0`,
//! and `ξ(λ) = -#{eigenvalues < λ}` for `λ < 0`.
//!
//! The phase is fixed at the anchor `k_anchor` (where `D ≈ 1`) and unwrapped
//! downward to the threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::graph_ops::determinant_at;
use crate::jost::SpectralParam;
use crate::ode::C64;
use crate::oracle::nystrom_determinant;
use crate::potentials::StarGraph;
use crate::quadrature::{linear_fit, polynomial_extrapolate};
use crate::spectrum::{
    classify_zero_energy, count_negative_eigenvalues, determinant_on_imaginary_axis, BoundStateList, SpectrumOptions,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseOptions {
    pub k_anchor: f64,
    pub lambda_min: f64,
    pub points: usize,
    pub max_rounds: usize,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            k_anchor: 100.0,
            lambda_min: 1e-6,
            points: 600,
            max_rounds: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralShiftCurve {
    /// Ascending.
    pub lambdas: Vec<f64>,
    pub ks: Vec<f64>,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
    /// `a(k) = |D(k²)|`.
    pub abs_d: Vec<f64>,
    /// Largest phase step between neighbouring samples.
    pub unwrap_audit: f64,
    pub refinement_rounds: usize,
    pub k_anchor: f64,
    /// Negative eigenvalues, ascending; ξ is a step function below 0.
    pub eigenvalues: Vec<f64>,
}

impl SpectralShiftCurve {
    /// ξ(λ): step function for `λ < 0`, interpolated linearly in `ln k` on the
    /// sampled range, constant below the first sample and `0` above the anchor.
    pub fn xi_at(&self, lambda: f64) -> f64 {
        if lambda < 0.0 {
            return -(self.eigenvalues.iter().filter(|&&e| e < lambda).count() as f64);
        }
        let k = lambda.sqrt();
        if k <= self.ks[0] {
            return self.xi[0];
        }
        if k >= *self.ks.last().unwrap() {
            return 0.0;
        }
        let i = self.ks.partition_point(|&x| x <= k) - 1;
        let t = (k.ln() - self.ks[i].ln()) / (self.ks[i + 1].ln() - self.ks[i].ln());
        self.xi[i] + t * (self.xi[i + 1] - self.xi[i])
    }

    /// `∫ |ξ| (1 + |λ|)^{-1} dλ` over the sampled positive range and the negative steps.
    pub fn weighted_l1(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.ks.len() - 1 {
            let f = |j: usize| self.xi[j].abs() * 2.0 * self.lambdas[j] / (1.0 + self.lambdas[j]);
            total += 0.5 * (f(i) + f(i + 1)) * (self.ks[i + 1] / self.ks[i]).ln();
        }
        for (r, e) in self.eigenvalues.iter().enumerate() {
            let next = self.eigenvalues.get(r + 1).copied().unwrap_or(0.0);
            total += (r + 1) as f64 * ((1.0 - e).ln() - (1.0 - next).ln());
        }
        total
    }
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn boundary_values(g: &StarGraph, ks: &[f64]) -> Result<Vec<C64>> {
    ks.par_iter()
        .map(|&k| determinant_at(g, SpectralParam::real(k)).map(|d| d.value))
        .collect()
}

fn unwrap_descending(d: &[C64]) -> (Vec<f64>, f64, usize) {
    let n = d.len();
    let mut eta = vec![0.0; n];
    eta[n - 1] = d[n - 1].arg();
    let (mut audit, mut worst) = (0.0f64, 0);
    for i in (0..n - 1).rev() {
        let step = wrap(d[i].arg() - d[i + 1].arg());
        eta[i] = eta[i + 1] + step;
        if step.abs() > audit {
            audit = step.abs();
            worst = i;
        }
    }
    (eta, audit, worst)
}

/// Samples the phase on a log grid in `λ ∈ [lambda_min, k_anchor²]`, inserting
/// midpoints until neighbouring phases differ by less than π/2.
pub fn phase_curve(g: &StarGraph, opts: &PhaseOptions) -> Result<SpectralShiftCurve> {
    let bound = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
    phase_curve_with(g, opts, &bound)
}

pub fn phase_curve_with(g: &StarGraph, opts: &PhaseOptions, bound: &BoundStateList) -> Result<SpectralShiftCurve> {
    let k_lo = opts.lambda_min.sqrt();
    let k_hi = opts.k_anchor;
    if !(k_lo > 0.0 && k_hi > k_lo && opts.points >= 2) {
        return Err(Error::Validation(format!("bad phase grid [{k_lo}, {k_hi}]")));
    }
    let anchor = determinant_at(g, SpectralParam::real(k_hi))?.value;
    let deviation = (anchor - 1.0).norm();
    if deviation >= 0.3 {
        return Err(Error::AnchorTooSmall { k: k_hi, deviation });
    }

    let (a, b) = (k_lo.ln(), k_hi.ln());
    let mut ks: Vec<f64> = (0..opts.points)
        .map(|i| (a + (b - a) * i as f64 / (opts.points - 1) as f64).exp())
        .collect();
    *ks.last_mut().unwrap() = k_hi;
    let mut d = boundary_values(g, &ks)?;
    let mut rounds = 0;
    loop {
        let (eta, audit, worst) = unwrap_descending(&d);
        if audit < PI / 2.0 {
            let xi: Vec<f64> = eta.iter().map(|e| e / PI).collect();
            return Ok(SpectralShiftCurve {
                lambdas: ks.iter().map(|k| k * k).collect(),
                abs_d: d.iter().map(|z| z.norm()).collect(),
                ks,
                eta,
                xi,
                unwrap_audit: audit,
                refinement_rounds: rounds,
                k_anchor: k_hi,
                eigenvalues: bound.eigenvalues(),
            });
        }
        if rounds == opts.max_rounds {
            return Err(Error::RefinementLimit {
                lo: ks[worst],
                hi: ks[worst + 1],
            });
        }
        rounds += 1;
        let bad: Vec<usize> = (0..ks.len() - 1)
            .filter(|&i| (eta[i + 1] - eta[i]).abs() >= PI / 2.0)
            .collect();
        let mids: Vec<f64> = bad.iter().map(|&i| (ks[i] * ks[i + 1]).sqrt()).collect();
        let new_d = boundary_values(g, &mids)?;
        let mut merged: Vec<(f64, C64)> = ks.into_iter().zip(d).chain(mids.into_iter().zip(new_d)).collect();
        merged.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        (ks, d) = merged.into_iter().unzip();
    }
}

/// Largest violation of `D(-k) = conj D(k)` over real `k`, measured both on the
/// values and on the phases (`η(-k) = -η(k)`).
pub fn phase_symmetry_residual(g: &StarGraph, ks: &[f64]) -> Result<f64> {
    ks.par_iter()
        .map(|&k| {
            let plus = determinant_at(g, SpectralParam::real(k))?.value;
            let minus = determinant_at(g, SpectralParam::real(-k))?.value;
            let eta_gap = wrap(minus.arg() + plus.arg()).abs();
            Ok(eta_gap.max((minus - plus.conj()).norm()))
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

/// `ln D(z)` on the branch with `ln D → 0` as `Im ζ → ∞`, continued along the
/// vertical path `ζ + is`.
pub fn log_determinant(g: &StarGraph, z: C64) -> Result<C64> {
    let sp = SpectralParam::from_z(z);
    let zeta = sp.zeta();
    if zeta.re == 0.0 {
        // on the imaginary axis the path must stay above every bound state
        let kappa = zeta.im;
        let d = determinant_on_imaginary_axis(g, kappa)?;
        if d <= 0.0 {
            return Err(Error::Validation(format!(
                "z = {z} is not below the lowest eigenvalue; ln D is not defined on the real axis there"
            )));
        }
    }
    let at = |s: f64| -> Result<C64> { Ok(determinant_at(g, SpectralParam::from_zeta(zeta + C64::new(0.0, s))?)?.value) };
    let mut top = 10.0 * (1.0 + zeta.norm());
    while (at(top)? - 1.0).norm() > 0.05 {
        top *= 2.0;
        if top > 1e8 {
            return Err(Error::NotConverged("D does not approach 1 along the vertical path".into()));
        }
    }
    let lo = 1e-3 * (1.0 + zeta.norm());
    let mut ss: Vec<f64> = std::iter::once(0.0)
        .chain((0..200).map(|i| (lo.ln() + (top.ln() - lo.ln()) * i as f64 / 199.0).exp()))
        .collect();
    let mut ds: Vec<C64> = ss.par_iter().map(|&s| at(s)).collect::<Result<_>>()?;
    for _ in 0..20 {
        let (_, audit, _) = unwrap_descending(&ds);
        if audit < PI / 4.0 {
            break;
        }
        let bad: Vec<usize> = (0..ss.len() - 1)
            .filter(|&i| wrap(ds[i + 1].arg() - ds[i].arg()).abs() >= PI / 4.0)
            .collect();
        let mids: Vec<f64> = bad.iter().map(|&i| 0.5 * (ss[i] + ss[i + 1])).collect();
        let new: Vec<C64> = mids.par_iter().map(|&s| at(s)).collect::<Result<_>>()?;
        let mut merged: Vec<(f64, C64)> = ss.into_iter().zip(ds).chain(mids.into_iter().zip(new)).collect();
        merged.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        (ss, ds) = merged.into_iter().unzip();
    }
    // the topmost phase is the principal one since D ≈ 1 there
    let (eta, _, _) = unwrap_descending(&ds);
    Ok(C64::new(ds[0].norm().ln(), eta[0]))
}

/// Tail model ξ ≈ A/k above the anchor, fitted at the last sample and at k/2.
fn tail_coefficient(curve: &SpectralShiftCurve) -> (f64, f64) {
    let n = curve.ks.len();
    let k_top = curve.ks[n - 1];
    let a_top = curve.xi[n - 1] * k_top;
    let a_half = curve.xi_at(0.25 * k_top * k_top) * 0.5 * k_top;
    (a_top, (a_top - a_half).abs())
}

/// `∫_{k_0}^{K} F(k) d(ln k)` by the trapezoid rule on the curve's nodes.
fn integrate_log_k(curve: &SpectralShiftCurve, f: impl Fn(f64, f64) -> C64) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for i in 0..curve.ks.len() - 1 {
        let fa = f(curve.ks[i], curve.xi[i]);
        let fb = f(curve.ks[i + 1], curve.xi[i + 1]);
        total += 0.5 * (fa + fb) * (curve.ks[i + 1] / curve.ks[i]).ln();
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionResult {
    pub z: C64,
    pub quadrature: C64,
    pub ln_d: C64,
    pub residual: f64,
    pub tail: C64,
    pub tail_error: f64,
}

/// `∫ ξ(λ)/(λ - z) dλ` from the curve: exact steps below 0, trapezoid in
/// `ln k` on the samples, ξ(0+) below the first sample and an analytic `A/k`
/// tail above the anchor.
pub fn dispersion_integral(curve: &SpectralShiftCurve, z: C64, tolerance: f64) -> Result<(C64, C64, f64)> {
    let mut total = C64::new(0.0, 0.0);
    // steps: each eigenvalue e contributes -∫_e^0 dλ/(λ - z)
    for &e in &curve.eigenvalues {
        total -= (-z).ln() - (C64::new(e, 0.0) - z).ln();
    }
    total += integrate_log_k(curve, |k, xi| xi * 2.0 * k * k / (k * k - z));
    let k0 = curve.ks[0];
    total += curve.xi[0] * ((k0 * k0 - z).ln() - (-z).ln());
    let (a, a_err) = tail_coefficient(curve);
    let s = z.sqrt();
    let big_k = curve.k_anchor;
    let tail_of = |a: f64| -(a / s) * ((big_k - s) / (big_k + s)).ln();
    let tail = tail_of(a);
    let tail_error = tail_of(a_err).norm();
    if tail_error > tolerance {
        return Err(Error::TailTooFat {
            estimate: tail_error,
            tolerance,
        });
    }
    Ok((total + tail, tail, tail_error))
}

/// Residual of `ln D(z) = ∫ ξ(λ)(λ - z)^{-1} dλ`.
pub fn dispersion_check(g: &StarGraph, z: C64, curve: &SpectralShiftCurve, tolerance: f64) -> Result<DispersionResult> {
    let (quadrature, tail, tail_error) = dispersion_integral(curve, z, tolerance)?;
    let ln_d = log_determinant(g, z)?;
    Ok(DispersionResult {
        z,
        quadrature,
        ln_d,
        residual: (quadrature - ln_d).norm(),
        tail,
        tail_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceTestResult {
    pub c: f64,
    /// `-∫ ξ(λ) (λ + c)^{-2} dλ`
    pub quadrature: f64,
    /// `tr(R(-c) - R_0(-c))` from the Jost-function formula.
    pub formula: f64,
    pub residual: f64,
}

/// Trace formula with `f(λ) = (λ + c)^{-1}`: `tr(f(H) - f(H_0)) = ∫ ξ f'`.
pub fn trace_test_function_check(
    g: &StarGraph,
    c: f64,
    curve: &SpectralShiftCurve,
    tolerance: f64,
) -> Result<TraceTestResult> {
    if curve.eigenvalues.first().is_some_and(|&e| e <= -c) || c <= 0.0 {
        return Err(Error::Validation(format!("-c = {} must lie below both spectra", -c)));
    }
    let mut total = 0.0;
    for &e in &curve.eigenvalues {
        // -∫_e^0 (-1)(λ + c)^{-2} dλ
        total += 1.0 / (e + c) - 1.0 / c;
    }
    total -= integrate_log_k(curve, |k, xi| C64::new(xi * 2.0 * k * k / (k * k + c).powi(2), 0.0)).re;
    let k0 = curve.ks[0];
    total -= curve.xi[0] * (1.0 / c - 1.0 / (k0 * k0 + c));
    let (a, a_err) = tail_coefficient(curve);
    let big_k = curve.k_anchor;
    let r = c.sqrt();
    // ∫_K^∞ 2 dk / (k² + r²)²
    let tail_integral = 2.0
        * (PI / (4.0 * r.powi(3)) - big_k / (2.0 * r * r * (big_k * big_k + r * r)) - (big_k / r).atan() / (2.0 * r.powi(3)));
    let tail_integral = tail_integral.max(0.0);
    if a_err * tail_integral > tolerance {
        return Err(Error::TailTooFat {
            estimate: a_err * tail_integral,
            tolerance,
        });
    }
    total -= a * tail_integral;
    let formula = -crate::graph_ops::trace_resolvent_diff_formula(g, C64::new(-c, 0.0))?.re;
    Ok(TraceTestResult {
        c,
        quadrature: total,
        formula,
        residual: (total - formula).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowEnergyFit {
    /// Fitted exponent, ≈ `m - 1`.
    pub slope: f64,
    /// `ln |c|`.
    pub intercept: f64,
    pub window: (f64, f64),
    pub kappas: Vec<f64>,
    pub log_abs_d: Vec<f64>,
}

/// Default fit window in κ: `[1e-4, 1e-3]`, pushed below a tenth of the
/// smallest bound-state κ.
pub fn default_low_energy_window(bound: &BoundStateList) -> (f64, f64) {
    let hi = bound.first_kappa().map_or(1e-3, |k| (0.1 * k).min(1e-3));
    (0.1 * hi, hi)
}

/// Least-squares slope of `ln |D(-κ²)|` against `ln κ` on the window.
pub fn low_energy_exponent(g: &StarGraph, window: (f64, f64), bound: Option<&BoundStateList>) -> Result<LowEnergyFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Validation(format!("bad fit window ({lo}, {hi})")));
    }
    if let Some(k) = bound.and_then(|b| b.kappas.iter().copied().find(|&k| k >= lo && k <= hi)) {
        return Err(Error::WindowContainsZero(k));
    }
    let kappas: Vec<f64> = (0..16).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / 15.0).exp()).collect();
    let ds: Vec<f64> = kappas
        .par_iter()
        .map(|&k| determinant_on_imaginary_axis(g, k))
        .collect::<Result<_>>()?;
    if let Some(i) = (0..ds.len() - 1).find(|&i| (ds[i] > 0.0) != (ds[i + 1] > 0.0) || ds[i] == 0.0) {
        return Err(Error::WindowContainsZero(kappas[i]));
    }
    let lx: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let ly: Vec<f64> = ds.iter().map(|d| d.abs().ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    Ok(LowEnergyFit {
        slope,
        intercept,
        window,
        kappas,
        log_abs_d: ly,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevinsonResult {
    pub xi_at_zero_plus: f64,
    pub n: usize,
    pub m: usize,
    /// `-(N + (m - 1)/2)`
    pub predicted: f64,
    pub residual: f64,
    /// Spread between extrapolations from neighbouring sample windows.
    pub extrapolation_spread: f64,
    pub lambda_min: f64,
}

/// ξ(0+) by quadratic extrapolation in `k = √λ` over the smallest samples.
pub fn extrapolate_threshold(curve: &SpectralShiftCurve) -> (f64, f64) {
    let take = |from: usize| {
        let xs = &curve.ks[from..from + 5];
        let ys = &curve.xi[from..from + 5];
        polynomial_extrapolate(xs, ys, 2, 0.0)
    };
    let value = take(0);
    let other = take(3.min(curve.ks.len() - 5));
    (value, (value - other).abs())
}

/// Levinson's identity `ξ(0+) = -(N + (m - 1)/2)`.
pub fn levinson_check(g: &StarGraph, opts: &PhaseOptions) -> Result<LevinsonResult> {
    let bound = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
    let report = classify_zero_energy(g, 1e-6)?;
    let mut opts = opts.clone();
    let mut attempt = 0;
    loop {
        let curve = phase_curve_with(g, &opts, &bound)?;
        let (xi0, spread) = extrapolate_threshold(&curve);
        if spread < 1e-3 || attempt == 3 {
            let predicted = -(bound.n as f64 + (report.m as f64 - 1.0) / 2.0);
            return Ok(LevinsonResult {
                xi_at_zero_plus: xi0,
                n: bound.n,
                m: report.m,
                predicted,
                residual: (xi0 - predicted).abs(),
                extrapolation_spread: spread,
                lambda_min: opts.lambda_min,
            });
        }
        attempt += 1;
        opts.lambda_min *= 1e-2;
        opts.points += 120;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePhase {
    pub lambda: f64,
    pub xi: f64,
    /// `arg` of the Nyström Birman–Schwinger determinant at `√λ`.
    pub oracle_arg: f64,
    /// `|η - arg|/π` reduced modulo 2.
    pub residual: f64,
}

/// Compares ξ(λ) against the phase of an independent Nyström determinant.
pub fn oracle_phase_check(g: &StarGraph, curve: &SpectralShiftCurve, lambda: f64) -> Result<OraclePhase> {
    let xi = curve.xi_at(lambda);
    let d = nystrom_determinant(g, C64::new(lambda.sqrt(), 0.0), 0.05, 10)?;
    let oracle_arg = d.arg();
    Ok(OraclePhase {
        lambda,
        xi,
        oracle_arg,
        residual: wrap(PI * xi - oracle_arg).abs() / PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn free_graph_has_zero_shift() {
        let g = StarGraph::free(3).unwrap();
        let c = phase_curve(&g, &PhaseOptions::default()).unwrap();
        assert!(c.xi.iter().all(|&x| x == 0.0));
        let lev = levinson_check(&g, &PhaseOptions::default()).unwrap();
        assert_eq!((lev.n, lev.m), (0, 1));
        assert!(lev.residual < 1e-8);
        let fit = low_energy_exponent(&g, (1e-4, 1e-3), None).unwrap();
        assert!(fit.slope.abs() < 1e-12 && fit.intercept.abs() < 1e-12);
        let d = dispersion_check(&g, C64::new(-4.0, 0.0), &c, 1e-2).unwrap();
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn one_well_levinson_and_dispersion() {
        let g = corpus::one_well(3, -4.0, 1.0);
        let c = phase_curve(&g, &PhaseOptions::default()).unwrap();
        assert!(c.unwrap_audit < PI / 2.0);
        assert!(c.eta.last().unwrap().abs() < 0.05);
        let (xi0, _) = extrapolate_threshold(&c);
        assert!((xi0 + 0.5).abs() < 0.02, "ξ(0+) = {xi0}");
        let d = dispersion_check(&g, C64::new(-4.0, 0.0), &c, 1e-2).unwrap();
        assert!(d.residual < 1e-2, "{d:?}");
        let zc = C64::new(-1.0, 2.0);
        let d = dispersion_check(&g, zc, &c, 1e-2).unwrap();
        let dc = dispersion_check(&g, zc.conj(), &c, 1e-2).unwrap();
        assert!(d.residual < 1e-2, "{d:?}");
        assert!((dc.quadrature - d.quadrature.conj()).norm() < 1e-12);
        let t = trace_test_function_check(&g, 4.0, &c, 1e-2).unwrap();
        assert!(t.residual < 1e-2, "{t:?}");
        let o = oracle_phase_check(&g, &c, 1.0).unwrap();
        assert!(o.residual < 0.02, "{o:?}");
    }

    #[test]
    fn low_energy_slopes() {
        let generic = corpus::one_well(3, -4.0, 1.0);
        let b = count_negative_eigenvalues(&generic, &SpectrumOptions::default()).unwrap();
        let fit = low_energy_exponent(&generic, default_low_energy_window(&b), Some(&b)).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.1, "{fit:?}");
        let fit = low_energy_exponent(&corpus::tuned(3, 2), (1e-4, 1e-3), None).unwrap();
        assert!(fit.slope.abs() < 0.1, "{fit:?}");
        let fit = low_energy_exponent(&corpus::tuned(3, 3), (1e-4, 1e-3), None).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn phase_symmetry() {
        let g = corpus::one_well(2, -2.0, 1.5);
        assert!(phase_symmetry_residual(&g, &[0.1, 0.7, 3.0, 20.0]).unwrap() < 1e-8);
    }

    #[test]
    fn window_with_bound_state_is_rejected() {
        let g = corpus::one_well(3, -4.0, 1.0);
        let b = count_negative_eigenvalues(&g, &SpectrumOptions::default()).unwrap();
        let k = b.kappas[0];
        assert!(matches!(
            low_energy_exponent(&g, (0.5 * k, 2.0 * k), Some(&b)),
            Err(Error::WindowContainsZero(_))
        ));
    }
}
