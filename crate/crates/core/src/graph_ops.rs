//! Graph-level objects assembled from edge Jost data: the Kirchhoff sum
//! `K(ζ) = Σ θ'_j(0)/θ_j(0)`, its pole-free form
//! `P(ζ) = Σ_j θ'_j(0) Π_{k≠j} θ_k(0) = K(ζ) Π w_j(ζ)`, the perturbation
//! determinant `D(z) = P(ζ) / (i n ζ)`, the resolvent-difference trace and the
//! Kreĭn resolvent kernel.
//!
//! Everything downstream goes through `P`; `K` alone has spurious poles at
//! zeros of individual Jost functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::{jost_boundary, jost_solution, regular_solution, JostData, SpectralParam};
use crate::ode::C64;
use crate::potentials::{EdgePotential, StarGraph};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `|w_j(ζ)|` below this counts as a zero of the Jost function.
pub fn jost_zero_threshold(sp: SpectralParam) -> f64 {
    1e-8 * (1.0 + sp.zeta().norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphBoundaryData {
    pub sp: SpectralParam,
    pub edges: Vec<JostData>,
    /// `None` when some `w_j(ζ)` vanishes (K has a pole there).
    pub k: Option<C64>,
    pub p: C64,
    pub prod_w: C64,
    /// `dP/dζ`, present when ζ-derivatives were requested.
    pub dp: Option<C64>,
}

impl GraphBoundaryData {
    pub fn n(&self) -> usize {
        self.edges.len()
    }

    /// Index of the first edge whose Jost function vanishes, if any.
    pub fn vanishing_edge(&self) -> Option<usize> {
        let thr = jost_zero_threshold(self.sp);
        self.edges.iter().position(|d| d.theta0.norm() < thr)
    }

    pub fn est_error(&self) -> f64 {
        self.edges.iter().map(|d| d.est_error).sum()
    }
}

/// Edge Jost data for every edge of `g`, evaluated in parallel.
pub fn edge_data(g: &StarGraph, sp: SpectralParam, with_zeta_derivatives: bool) -> Result<Vec<JostData>> {
    g.edges()
        .par_iter()
        .map(|p| jost_boundary(p, sp, with_zeta_derivatives))
        .collect()
}

fn product_except(values: &[C64], skip: &[usize]) -> C64 {
    values
        .iter()
        .enumerate()
        .filter(|(k, _)| !skip.contains(k))
        .map(|(_, v)| *v)
        .product()
}

/// Assembles K, P, Π w and (optionally) dP/dζ from per-edge data.
pub fn assemble(sp: SpectralParam, edges: Vec<JostData>) -> GraphBoundaryData {
    let n = edges.len();
    let w: Vec<C64> = edges.iter().map(|d| d.theta0).collect();
    let prod_w: C64 = w.iter().product();
    let p: C64 = (0..n).map(|j| edges[j].dtheta0_dx * product_except(&w, &[j])).sum();

    let thr = jost_zero_threshold(sp);
    let k = if w.iter().any(|wj| wj.norm() < thr) {
        None
    } else {
        Some(edges.iter().map(|d| d.dtheta0_dx / d.theta0).sum())
    };

    let dp = if edges.iter().all(|d| d.dtheta0_dzeta.is_some() && d.ddtheta0_dxdzeta.is_some()) {
        let dw: Vec<C64> = edges.iter().map(|d| d.dtheta0_dzeta.unwrap()).collect();
        let mut total = C64::new(0.0, 0.0);
        for j in 0..n {
            total += edges[j].ddtheta0_dxdzeta.unwrap() * product_except(&w, &[j]);
            for l in (0..n).filter(|&l| l != j) {
                total += edges[j].dtheta0_dx * dw[l] * product_except(&w, &[j, l]);
            }
        }
        Some(total)
    } else {
        None
    };

    GraphBoundaryData {
        sp,
        edges,
        k,
        p,
        prod_w,
        dp,
    }
}

pub fn graph_boundary(g: &StarGraph, sp: SpectralParam, with_zeta_derivatives: bool) -> Result<GraphBoundaryData> {
    Ok(assemble(sp, edge_data(g, sp, with_zeta_derivatives)?))
}

/// `K(ζ) = Σ_j θ'_j(0,ζ)/θ_j(0,ζ)`; fails with `JostZero(j)` at a zero of `w_j`.
pub fn kirchhoff_sum(g: &StarGraph, sp: SpectralParam) -> Result<C64> {
    let data = graph_boundary(g, sp, false)?;
    match data.k {
        Some(k) => Ok(k),
        None => Err(Error::JostZero(data.vanishing_edge().unwrap())),
    }
}

/// `P(ζ) = Σ_j θ'_j(0,ζ) Π_{k≠j} θ_k(0,ζ)`, finite at zeros of individual `w_j`.
pub fn pole_free_p(g: &StarGraph, sp: SpectralParam) -> Result<C64> {
    Ok(graph_boundary(g, sp, false)?.p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeterminantForm {
    /// `K Π w_j / (i n ζ)`
    Product,
    /// `P / (i n ζ)`
    PoleFree,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationDeterminant {
    pub value: C64,
    pub zeta: SpectralParam,
    pub form: DeterminantForm,
    pub est_error: f64,
}

/// `D(z)` for `z` off `[0, ∞)`, or the boundary value `D(λ + i0)` for real `λ > 0`.
pub fn perturbation_determinant(g: &StarGraph, z: C64) -> Result<PerturbationDeterminant> {
    determinant_at(g, SpectralParam::from_z(z))
}

/// `D(ζ²)` at a given spectral parameter (real ζ of either sign allowed).
pub fn determinant_at(g: &StarGraph, sp: SpectralParam) -> Result<PerturbationDeterminant> {
    if sp.is_zero() {
        return Err(Error::ZeroSpectralParam);
    }
    let data = graph_boundary(g, sp, false)?;
    Ok(determinant_from(&data))
}

pub fn determinant_from(data: &GraphBoundaryData) -> PerturbationDeterminant {
    let denom = I * data.n() as f64 * data.sp.zeta();
    PerturbationDeterminant {
        value: data.p / denom,
        zeta: data.sp,
        form: DeterminantForm::PoleFree,
        est_error: data.est_error() * (data.n() as f64) / denom.norm().max(1e-300),
    }
}

/// `D` via the product form `K Π w / (i n ζ)`; `None` when K has a pole.
pub fn determinant_product_form(data: &GraphBoundaryData) -> Option<PerturbationDeterminant> {
    let denom = I * data.n() as f64 * data.sp.zeta();
    data.k.map(|k| PerturbationDeterminant {
        value: k * data.prod_w / denom,
        zeta: data.sp,
        form: DeterminantForm::Product,
        est_error: data.est_error(),
    })
}

/// `tr(R_0(z) - R(z)) = (1/2ζ)(P'(ζ)/P(ζ) - 1/ζ)`, `Im ζ > 0`.
pub fn trace_resolvent_diff_formula(g: &StarGraph, z: C64) -> Result<C64> {
    let sp = SpectralParam::from_z(z);
    if sp.is_zero() {
        return Err(Error::ZeroSpectralParam);
    }
    let data = graph_boundary(g, sp, true)?;
    trace_from(&data)
}

pub fn trace_from(data: &GraphBoundaryData) -> Result<C64> {
    let zeta = data.sp.zeta();
    let d = determinant_from(data).value;
    if d.norm() < 1e-10 {
        return Err(Error::EigenvalueHit(data.p.norm()));
    }
    let dp = data.dp.expect("ζ-derivatives required");
    Ok((dp / data.p - 1.0 / zeta) / (2.0 * zeta))
}

/// The same trace through the expansion `Σ ẇ_j/w_j + K̇/K - 1/ζ`; requires K finite.
pub fn trace_from_expansion(data: &GraphBoundaryData) -> Result<C64> {
    let zeta = data.sp.zeta();
    let k = data.k.ok_or_else(|| Error::JostZero(data.vanishing_edge().unwrap()))?;
    let mut sum_w = C64::new(0.0, 0.0);
    let mut dk = C64::new(0.0, 0.0);
    for d in &data.edges {
        let (w, dw) = (d.theta0, d.dtheta0_dzeta.expect("ζ-derivatives required"));
        let ddx = d.ddtheta0_dxdzeta.unwrap();
        sum_w += dw / w;
        dk += (ddx * w - d.dtheta0_dx * dw) / (w * w);
    }
    Ok((sum_w + dk / k - 1.0 / zeta) / (2.0 * zeta))
}

/// Half-line Dirichlet version: `tr(R_D(z) - R_{D,0}(z)) = -ẇ/(2ζw)`.
pub fn half_line_trace(p: &EdgePotential, z: C64) -> Result<C64> {
    let sp = SpectralParam::from_z(z);
    if sp.is_zero() {
        return Err(Error::ZeroSpectralParam);
    }
    let d = jost_boundary(p, sp, true)?;
    if d.theta0.norm() < jost_zero_threshold(sp) {
        return Err(Error::EigenvalueHit(d.theta0.norm()));
    }
    Ok(-d.dtheta0_dzeta.unwrap() / (2.0 * sp.zeta() * d.theta0))
}

/// Resolvent kernel of the star graph through Kreĭn's formula
/// `R_{jℓ}(x,y) = δ_{jℓ} φ_j(x<)θ_j(x>)/w_j - θ_j(x)θ_ℓ(y) / (K θ_j(0) θ_ℓ(0))`.
#[derive(Clone, Debug)]
pub struct KreinResolvent<'g> {
    graph: &'g StarGraph,
    data: GraphBoundaryData,
    k: C64,
}

/// Jost and regular solutions of one edge sampled on a grid.
#[derive(Clone, Debug)]
pub struct EdgeSamples {
    pub xs: Vec<f64>,
    pub theta: Vec<C64>,
    pub phi: Vec<C64>,
}

impl<'g> KreinResolvent<'g> {
    pub fn new(graph: &'g StarGraph, z: C64) -> Result<Self> {
        let sp = SpectralParam::from_z(z);
        if sp.zeta().im <= 0.0 {
            return Err(Error::LowerHalfPlane(sp.zeta()));
        }
        let data = graph_boundary(graph, sp, false)?;
        let k = match data.k {
            Some(k) => k,
            None => return Err(Error::JostZero(data.vanishing_edge().unwrap())),
        };
        if determinant_from(&data).value.norm() < 1e-10 {
            return Err(Error::EigenvalueHit(data.p.norm()));
        }
        Ok(KreinResolvent { graph, data, k })
    }

    pub fn sample_edge(&self, j: usize, xs: &[f64]) -> Result<EdgeSamples> {
        let p = &self.graph.edges()[j];
        let theta = jost_solution(p, self.data.sp, xs)?.theta;
        let phi = regular_solution(p, self.data.sp, xs)?.phi;
        Ok(EdgeSamples {
            xs: xs.to_vec(),
            theta,
            phi,
        })
    }

    /// Kernel entry from pre-sampled values at `(j, xs[a])`, `(l, ys[b])`.
    pub fn entry(&self, j: usize, sj: &EdgeSamples, a: usize, l: usize, sl: &EdgeSamples, b: usize) -> C64 {
        let wj = self.data.edges[j].theta0;
        let wl = self.data.edges[l].theta0;
        let coupling = sj.theta[a] * sl.theta[b] / (self.k * wj * wl);
        if j == l {
            let (x, y) = (sj.xs[a], sl.xs[b]);
            let decoupled = if x <= y {
                sj.phi[a] * sl.theta[b]
            } else {
                sl.phi[b] * sj.theta[a]
            } / wj;
            decoupled - coupling
        } else {
            -coupling
        }
    }

    pub fn kernel(&self, j: usize, x: f64, l: usize, y: f64) -> Result<C64> {
        let sj = self.sample_edge(j, &[x])?;
        let sl = self.sample_edge(l, &[y])?;
        Ok(self.entry(j, &sj, 0, l, &sl, 0))
    }
}

/// `R_{jℓ}(x, y; z)` of the star graph.
pub fn krein_kernel(g: &StarGraph, z: C64, j: usize, x: f64, l: usize, y: f64) -> Result<C64> {
    KreinResolvent::new(g, z)?.kernel(j, x, l, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn well(depth: f64, width: f64) -> EdgePotential {
        EdgePotential::square_well(depth, width).unwrap()
    }

    fn one_well(depth: f64) -> StarGraph {
        StarGraph::new(vec![well(depth, 1.0), EdgePotential::zero(), EdgePotential::zero()]).unwrap()
    }

    #[test]
    fn kirchhoff_sum_examples() {
        let k = kirchhoff_sum(&StarGraph::free(3).unwrap(), SpectralParam::imaginary(1.0)).unwrap();
        assert!((k - C64::new(-3.0, 0.0)).norm() < 1e-15);

        let g = StarGraph::new(vec![well(-1.0, 1.0); 3]).unwrap();
        let k = kirchhoff_sum(&g, SpectralParam::imaginary(0.0)).unwrap();
        assert!((k.re - 3.0 * 1f64.tan()).abs() < 1e-8);
        assert!((k.re - 4.6722).abs() < 1e-4);

        let k = kirchhoff_sum(&StarGraph::free(2).unwrap(), SpectralParam::imaginary(0.0)).unwrap();
        assert_eq!(k, C64::new(0.0, 0.0));

        let tuned = StarGraph::new(vec![well(-FRAC_PI_2 * FRAC_PI_2, 1.0), EdgePotential::zero()]).unwrap();
        assert_eq!(kirchhoff_sum(&tuned, SpectralParam::imaginary(0.0)), Err(Error::JostZero(0)));
    }

    #[test]
    fn pole_free_examples() {
        let p = pole_free_p(&StarGraph::free(3).unwrap(), SpectralParam::imaginary(1.0)).unwrap();
        assert!((p - C64::new(-3.0, 0.0)).norm() < 1e-15);
        let tuned = StarGraph::new(vec![well(-FRAC_PI_2 * FRAC_PI_2, 1.0), EdgePotential::zero()]).unwrap();
        let p = pole_free_p(&tuned, SpectralParam::imaginary(0.0)).unwrap();
        assert!((p - C64::new(FRAC_PI_2, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn pole_free_consistency() {
        let g = StarGraph::new(vec![well(-2.0, 1.0), well(1.5, 0.5), EdgePotential::exponential(-1.0, 2.0).unwrap()])
            .unwrap();
        for zeta in [C64::new(0.3, 0.2), C64::new(2.0, 0.0), C64::new(0.0, 1.7), C64::new(-1.0, 3.0)] {
            let data = graph_boundary(&g, SpectralParam::from_zeta(zeta).unwrap(), false).unwrap();
            let k = data.k.unwrap();
            assert!((data.p - k * data.prod_w).norm() <= 1e-8 * data.p.norm());
        }
    }

    #[test]
    fn free_determinant_is_one() {
        let g = StarGraph::free(4).unwrap();
        for z in [C64::new(-1.0, 0.0), C64::new(3.0, 2.0), C64::new(5.0, 0.0)] {
            let d = perturbation_determinant(&g, z).unwrap();
            assert!((d.value - 1.0).norm() < 1e-15);
        }
        assert_eq!(perturbation_determinant(&g, C64::new(0.0, 0.0)), Err(Error::ZeroSpectralParam));
    }

    #[test]
    fn determinant_tends_to_one() {
        let g = StarGraph::new(vec![well(-3.0, 1.0), well(2.0, 0.5), EdgePotential::exponential(-2.0, 1.0).unwrap()])
            .unwrap();
        let d = perturbation_determinant(&g, C64::new(-1e6, 0.0)).unwrap();
        assert!((d.value - 1.0).norm() <= 0.01, "{}", d.value);
    }

    #[test]
    fn determinant_reflection_symmetry() {
        let g = one_well(-2.0);
        let z = C64::new(1.3, 0.8);
        let a = perturbation_determinant(&g, z).unwrap().value;
        let b = perturbation_determinant(&g, z.conj()).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-9);
    }

    #[test]
    fn free_trace_vanishes() {
        let t = trace_resolvent_diff_formula(&StarGraph::free(3).unwrap(), C64::new(-2.0, 0.5)).unwrap();
        assert!(t.norm() < 1e-15);
    }

    #[test]
    fn trace_matches_log_derivative_of_determinant() {
        let g = one_well(-1.0);
        let z = C64::new(-4.0, 0.0);
        let t = trace_resolvent_diff_formula(&g, z).unwrap();
        let h = 1e-3;
        let dp = perturbation_determinant(&g, z + h).unwrap().value;
        let dm = perturbation_determinant(&g, z - h).unwrap().value;
        let d0 = perturbation_determinant(&g, z).unwrap().value;
        let dlog = (dp - dm) / (2.0 * h) / d0;
        assert!((t - dlog).norm() <= 1e-6 * t.norm(), "{t} vs {dlog}");

        let data = graph_boundary(&g, SpectralParam::from_z(z), true).unwrap();
        let alt = trace_from_expansion(&data).unwrap();
        assert!((t - alt).norm() <= 1e-10 * t.norm());
    }

    #[test]
    fn free_line_resolvent_from_krein() {
        let g = StarGraph::free(2).unwrap();
        let r = KreinResolvent::new(&g, C64::new(-1.0, 0.0)).unwrap();
        for (x, y) in [(0.3, 1.2), (2.0, 0.5), (0.0, 0.7)] {
            let same = r.kernel(0, x, 0, y).unwrap();
            assert!((same - C64::new((-(x - y as f64).abs()).exp() / 2.0, 0.0)).norm() < 1e-8);
            let other = r.kernel(0, x, 1, y).unwrap();
            assert!((other - C64::new((-(x + y)).exp() / 2.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn krein_kernel_symmetry() {
        let g = one_well(-2.0);
        let z = C64::new(-0.5, 0.7);
        for (j, x, l, y) in [(0, 0.3, 0, 1.4), (0, 0.6, 2, 0.2), (1, 0.9, 2, 1.1)] {
            let a = krein_kernel(&g, z, j, x, l, y).unwrap();
            let b = krein_kernel(&g, z, l, y, j, x).unwrap();
            assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
        }
    }
}
