//! Finite-difference ground truth for the star graph.
//!
//! Each edge is truncated at `L` with a Dirichlet end and sampled at `x_i = i h`.
//! The vertex keeps its own unknown with a lumped half-cell mass `n h / 2` on
//! top of the quadratic form `Σ |ψ_{i+1} - ψ_i|² / h`; scaling by the inverse
//! square root of the mass makes the matrix exactly symmetric while the
//! Kirchhoff condition stays second-order accurate. Potentials enter as cell
//! averages, so square-well jumps do not spoil the `h²` convergence.
//!
//! The resulting matrix is a tree (a star of chains) and every operation below
//! runs through a fill-free LDLᵀ factorization.

mod decay;
mod nystrom;
mod rank2;
mod tree;

pub use decay::{trace_norm_decay, trace_norm_difference, DecayFit};
pub use nystrom::nystrom_determinant;
pub use rank2::{rank2_trace_norm, rank2_trace_norm_gram};
pub use tree::{TreeLdl, TreeMatrix};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::C64;
use crate::potentials::{EdgePotential, StarGraph};

pub const MAX_UNKNOWNS: usize = 2_000_000;
const STOCHASTIC_ABOVE: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// `n` edges joined with Kirchhoff conditions.
    Star { n: usize },
    /// One edge with a Dirichlet condition at `x = 0`.
    HalfLine,
}

#[derive(Clone, Debug)]
pub struct DiscretizedGraph {
    pub l: f64,
    pub h: f64,
    pub topology: Topology,
    /// Interior points per edge.
    pub points_per_edge: usize,
    /// Cell-averaged potential per unknown.
    pub potential: Vec<f64>,
    free: TreeMatrix,
}

fn cell_average(p: &EdgePotential, x: f64, h: f64) -> f64 {
    p.integral(x - 0.5 * h, x + 0.5 * h) / h
}

impl DiscretizedGraph {
    pub fn dim(&self) -> usize {
        self.free.dim()
    }

    pub fn n_edges(&self) -> usize {
        match self.topology {
            Topology::Star { n } => n,
            Topology::HalfLine => 1,
        }
    }

    fn has_vertex(&self) -> bool {
        matches!(self.topology, Topology::Star { .. })
    }

    /// Index of grid point `i` (1-based) on edge `j`.
    pub fn index(&self, j: usize, i: usize) -> usize {
        let offset = usize::from(self.has_vertex());
        offset + j * self.points_per_edge + (i - 1)
    }

    /// `(edge, x)` of every unknown; the vertex reports `(None, 0)`.
    pub fn positions(&self) -> Vec<(Option<usize>, f64)> {
        let mut out = Vec::with_capacity(self.dim());
        if self.has_vertex() {
            out.push((None, 0.0));
        }
        for j in 0..self.n_edges() {
            for i in 1..=self.points_per_edge {
                out.push((Some(j), i as f64 * self.h));
            }
        }
        out
    }

    /// Same grid without potential.
    pub fn free(&self) -> DiscretizedGraph {
        DiscretizedGraph {
            potential: vec![0.0; self.dim()],
            ..self.clone()
        }
    }

    /// Cell averages of another graph's potentials on this grid.
    pub fn cell_potential(&self, edges: &[EdgePotential]) -> Vec<f64> {
        let h = self.h;
        let mut v = Vec::with_capacity(self.dim());
        if let Topology::Star { n } = self.topology {
            let mass = n as f64 * h / 2.0;
            v.push(edges.iter().map(|p| p.integral(0.0, 0.5 * h)).sum::<f64>() / mass);
        }
        for p in edges {
            for i in 1..=self.points_per_edge {
                v.push(cell_average(p, i as f64 * h, h));
            }
        }
        v
    }

    /// The symmetric operator matrix including the potential.
    pub fn matrix(&self) -> TreeMatrix {
        let mut m = self.free.clone();
        for (d, v) in m.diag.iter_mut().zip(&self.potential) {
            *d += v;
        }
        m
    }

    /// [`Self::matrix`] with Neumann instead of Dirichlet conditions at `L`.
    pub fn neumann_matrix(&self) -> TreeMatrix {
        let mut m = self.matrix();
        for j in 0..self.n_edges() {
            m.diag[self.index(j, self.points_per_edge)] -= 1.0 / (self.h * self.h);
        }
        m
    }

    pub fn free_matrix(&self) -> &TreeMatrix {
        &self.free
    }

    /// Indices where the cell-averaged potential is non-zero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.potential[k] != 0.0).collect()
    }
}

fn grid_points(l: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && l > 0.0) || h > l / 2.0 {
        return Err(Error::Validation(format!("bad discretization L = {l}, h = {h}")));
    }
    let cells = (l / h).round();
    if ((l / h) - cells).abs() > 1e-6 {
        return Err(Error::Validation(format!("L = {l} is not a multiple of h = {h}")));
    }
    Ok(cells as usize - 1)
}

fn chain_matrix(points: usize, edges: usize, vertex: Option<usize>, h: f64) -> TreeMatrix {
    let inv_h2 = 1.0 / (h * h);
    let offset = usize::from(vertex.is_some());
    let dim = offset + edges * points;
    let mut diag = vec![2.0 * inv_h2; dim];
    let mut off = vec![0.0; dim];
    let mut parent = vec![None; dim];
    if let Some(n) = vertex {
        // stiffness n/h over mass n h / 2
        diag[0] = 2.0 * inv_h2;
        let mass = n as f64 * h / 2.0;
        for j in 0..edges {
            let k = offset + j * points;
            parent[k] = Some(0);
            off[k] = -(1.0 / h) / (mass * h).sqrt();
        }
    }
    for j in 0..edges {
        for i in 1..points {
            let k = offset + j * points + i;
            parent[k] = Some(k - 1);
            off[k] = -inv_h2;
        }
    }
    TreeMatrix { diag, off, parent }
}

/// Finite-difference star graph truncated at `L` with spacing `h`.
pub fn discretize(g: &StarGraph, l: f64, h: f64) -> Result<DiscretizedGraph> {
    let m = grid_points(l, h)?;
    let n = g.n();
    let dim = 1 + n * m;
    if dim > MAX_UNKNOWNS {
        return Err(Error::DimensionOverflow(dim));
    }
    let mut d = DiscretizedGraph {
        l,
        h,
        topology: Topology::Star { n },
        points_per_edge: m,
        potential: Vec::new(),
        free: chain_matrix(m, n, Some(n), h),
    };
    d.potential = d.cell_potential(g.edges());
    Ok(d)
}

/// Single Dirichlet half-line edge on `[0, L]`.
pub fn discretize_half_line(p: &EdgePotential, l: f64, h: f64) -> Result<DiscretizedGraph> {
    let m = grid_points(l, h)?;
    if m > MAX_UNKNOWNS {
        return Err(Error::DimensionOverflow(m));
    }
    let mut d = DiscretizedGraph {
        l,
        h,
        topology: Topology::HalfLine,
        points_per_edge: m,
        potential: Vec::new(),
        free: chain_matrix(m, 1, None, h),
    };
    d.potential = d.cell_potential(std::slice::from_ref(p));
    Ok(d)
}

/// Eigenvalues of the discrete operator below `-δ`, `δ = 10 h²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCount {
    pub count: usize,
    pub values: Vec<f64>,
    pub threshold: f64,
}

/// Eigenvalues of a tree matrix inside `[lo, hi)` by inertia bisection.
pub fn eigenvalues_below(m: &TreeMatrix, hi: f64) -> Vec<f64> {
    let (lo, _) = m.spectral_bounds();
    let count = m.count_below(hi);
    (0..count)
        .map(|k| {
            // smallest λ with count_below(λ) > k
            let (mut a, mut b) = (lo - 1.0, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if m.count_below(mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
                if b - a <= 1e-14 * b.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

pub fn oracle_eigencount(d: &DiscretizedGraph) -> EigenCount {
    let threshold = 10.0 * d.h * d.h;
    let values = eigenvalues_below(&d.matrix(), -threshold);
    EigenCount {
        count: values.len(),
        values,
        threshold,
    }
}

/// Oracle number produced at two refinement levels `(L, 2h)` and `(L, h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleValue<T> {
    /// Richardson-extrapolated value assuming `O(h²)` error.
    pub value: T,
    pub coarse: T,
    pub fine: T,
    pub l: f64,
    pub h_coarse: f64,
    pub h_fine: f64,
    /// `|fine - coarse|`.
    pub agreement: f64,
}

fn richardson(coarse: C64, fine: C64) -> C64 {
    (4.0 * fine - coarse) / 3.0
}

/// Bound states of `g` at `(L, 2h)` and `(L, h)`; counts must agree.
pub fn oracle_bound_states(g: &StarGraph, l: f64, h: f64) -> Result<OracleValue<Vec<f64>>> {
    let coarse = oracle_eigencount(&discretize(g, l, 2.0 * h)?);
    let fine = oracle_eigencount(&discretize(g, l, h)?);
    if coarse.count != fine.count {
        return Err(Error::NotConverged(format!(
            "eigencount {} at h = {} but {} at h = {}",
            coarse.count,
            2.0 * h,
            fine.count,
            h
        )));
    }
    let value: Vec<f64> = coarse
        .values
        .iter()
        .zip(&fine.values)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    let agreement = coarse
        .values
        .iter()
        .zip(&fine.values)
        .map(|(c, f)| (c - f).abs())
        .fold(0.0, f64::max);
    Ok(OracleValue {
        value,
        coarse: coarse.values,
        fine: fine.values,
        l,
        h_coarse: 2.0 * h,
        h_fine: h,
        agreement,
    })
}

/// Truncation length at which the Dirichlet count below `0` equals the Neumann
/// count below `-h²` and the shallowest Dirichlet eigenvalue is stable to 1%
/// under doubling, together with that eigenvalue.
fn bracketed_length(g: &StarGraph, l0: f64, h: f64) -> Result<(f64, Option<f64>)> {
    let mut l = l0;
    let mut previous: Option<(usize, Option<f64>)> = None;
    loop {
        let d = discretize(g, l, h)?;
        let dirichlet = d.matrix();
        let count = dirichlet.count_below(0.0);
        if count == d.neumann_matrix().count_below(-h * h) {
            let shallowest = eigenvalues_below(&dirichlet, 0.0).last().copied();
            let stable = match (previous, shallowest) {
                (Some((c, Some(a))), Some(b)) => c == count && (a - b).abs() <= 1e-2 * b.abs(),
                (Some((c, None)), None) => c == count,
                _ => false,
            };
            if stable {
                return Ok((l, shallowest));
            }
            previous = Some((count, shallowest));
        } else {
            previous = None;
        }
        if l >= 64.0 * l0 {
            return Err(Error::NotConverged(format!(
                "Dirichlet and Neumann truncations not settled at L = {l}"
            )));
        }
        l *= 2.0;
    }
}

/// [`oracle_bound_states`] with `L` and `h` chosen adaptively.
///
/// `L` is first doubled until Dirichlet and Neumann truncations agree on the
/// count and the shallowest eigenvalue settles, `h` is then halved (up to four
/// times) until that eigenvalue lies below `-45 h²`, and finally `L` is doubled until the extrapolated eigenvalues
/// agree with those at `2L` to `rel_tol`. If the two `h`-levels disagree on the
/// count, `h` is halved again.
pub fn oracle_bound_states_converged(g: &StarGraph, l0: f64, h0: f64, rel_tol: f64) -> Result<OracleValue<Vec<f64>>> {
    let (l_bracket, shallowest) = bracketed_length(g, l0, h0)?;
    let l_start = (0.5 * l_bracket).max(l0);
    let mut h_start = h0;
    if let Some(e) = shallowest {
        while 45.0 * h_start * h_start > -e && h_start > h0 / 16.0 {
            h_start *= 0.5;
        }
    }
    let mut last_err = None;
    for h in [h_start, 0.5 * h_start, 0.25 * h_start] {
        let mut l = l_start;
        let mut current = match oracle_bound_states(g, l, h) {
            Ok(v) => v,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        for _ in 0..4 {
            let next = match oracle_bound_states(g, 2.0 * l, h) {
                Ok(v) => v,
                Err(e) => {
                    last_err = Some(e);
                    break;
                }
            };
            let stable = next.value.len() == current.value.len()
                && next
                    .value
                    .iter()
                    .zip(&current.value)
                    .all(|(a, b)| (a - b).abs() <= rel_tol * a.abs());
            if stable {
                return Ok(next);
            }
            l *= 2.0;
            current = next;
        }
        last_err.get_or_insert(Error::NotConverged(format!("eigenvalues not stable under L-doubling up to L = {l}")));
    }
    Err(last_err.unwrap())
}

/// `tr((A_0 - z)^{-1} - (A - z)^{-1})` for two discretizations on the same grid.
pub fn oracle_trace_resolvent_diff(d: &DiscretizedGraph, d0: &DiscretizedGraph, z: C64) -> Result<C64> {
    if d.dim() > STOCHASTIC_ABOVE {
        return Ok(stochastic_trace_diff(d, d0, z, 64, 0)?.0);
    }
    let inv = d.matrix().factor(z)?.inverse_diagonal();
    let inv0 = d0.matrix().factor(z)?.inverse_diagonal();
    Ok(inv0.iter().zip(&inv).map(|(a, b)| a - b).sum())
}

/// Hutchinson estimate of the same trace with Rademacher probes; returns the
/// mean and the standard error of the mean.
pub fn stochastic_trace_diff(
    d: &DiscretizedGraph,
    d0: &DiscretizedGraph,
    z: C64,
    probes: usize,
    seed: u64,
) -> Result<(C64, f64)> {
    let ldl = d.matrix().factor(z)?;
    let ldl0 = d0.matrix().factor(z)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(probes);
    for _ in 0..probes {
        let v: Vec<C64> = (0..d.dim())
            .map(|_| C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let a = ldl0.solve(&v);
        let b = ldl.solve(&v);
        samples.push(v.iter().zip(a.iter().zip(&b)).map(|(v, (a, b))| v * (a - b)).sum::<C64>());
    }
    let mean = samples.iter().sum::<C64>() / probes as f64;
    let var = samples.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>() / (probes.max(2) - 1) as f64;
    Ok((mean, (var / probes as f64).sqrt()))
}

/// Trace of the resolvent difference for a star graph, Richardson-extrapolated.
pub fn oracle_trace(g: &StarGraph, z: C64, l: f64, h: f64) -> Result<OracleValue<C64>> {
    let level = |h: f64| -> Result<C64> {
        let d = discretize(g, l, h)?;
        oracle_trace_resolvent_diff(&d, &d.free(), z)
    };
    two_level(level, l, h)
}

/// `tr(R_D - R_{D,0})` on a Dirichlet half-line, Richardson-extrapolated.
pub fn oracle_half_line_trace(p: &EdgePotential, z: C64, l: f64, h: f64) -> Result<OracleValue<C64>> {
    let level = |h: f64| -> Result<C64> {
        let d = discretize_half_line(p, l, h)?;
        Ok(-oracle_trace_resolvent_diff(&d, &d.free(), z)?)
    };
    two_level(level, l, h)
}

fn two_level(level: impl Fn(f64) -> Result<C64>, l: f64, h: f64) -> Result<OracleValue<C64>> {
    let coarse = level(2.0 * h)?;
    let fine = level(h)?;
    Ok(OracleValue {
        value: richardson(coarse, fine),
        coarse,
        fine,
        l,
        h_coarse: 2.0 * h,
        h_fine: h,
        agreement: (fine - coarse).norm(),
    })
}

/// `det(1 + √V (A_0 - z)^{-1} √|V|)` on the Birman–Schwinger block of grid
/// points where the cell-averaged potential of `g` is non-zero.
pub fn oracle_determinant(d0: &DiscretizedGraph, g: &StarGraph, z: C64) -> Result<C64> {
    let v = d0.cell_potential(g.edges());
    let support: Vec<usize> = (0..d0.dim()).filter(|&k| v[k] != 0.0).collect();
    if support.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    let ldl = d0.free_matrix().factor(z)?;
    let s = support.len();
    let mut block = nalgebra::DMatrix::<C64>::identity(s, s);
    let mut rhs = vec![C64::new(0.0, 0.0); d0.dim()];
    for (b, &kb) in support.iter().enumerate() {
        rhs.iter_mut().for_each(|r| *r = C64::new(0.0, 0.0));
        rhs[kb] = C64::new(1.0, 0.0);
        let col = ldl.solve(&rhs);
        let right = v[kb].abs().sqrt();
        for (a, &ka) in support.iter().enumerate() {
            let left = v[ka].signum() * v[ka].abs().sqrt();
            block[(a, b)] += left * col[ka] * right;
        }
    }
    Ok(block.lu().determinant())
}

/// Discrete determinant of `g` at two levels, Richardson-extrapolated.
pub fn oracle_determinant_extrapolated(g: &StarGraph, z: C64, l: f64, h: f64) -> Result<OracleValue<C64>> {
    let level = |h: f64| -> Result<C64> {
        let d = discretize(g, l, h)?;
        oracle_determinant(&d.free(), g, z)
    };
    two_level(level, l, h)
}
