//! Edge potentials and the star graph they live on.
//!
//! Every potential is real valued, integrable on the half-line and either
//! compactly supported or exponentially decaying. The sign convention is the
//! one of `-u'' + V u`, so attractive wells carry negative values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tail tolerance used to truncate non-compact potentials.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    SquareWell { depth: f64, width: f64 },
    Exponential { amplitude: f64, rate: f64 },
    PiecewiseLinear { breakpoints: Vec<(f64, f64)> },
    /// Linear interpolation between samples, zero beyond the last sample.
    Sampled { xs: Vec<f64>, values: Vec<f64> },
}

/// Result of a moment integral `∫ x^p |V(x)| dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Moment {
    Finite(f64),
    Infinite,
}

impl Moment {
    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            Moment::Finite(v) => *v,
            Moment::Infinite => f64::INFINITY,
        }
    }
}

/// A real integrable potential on one half-line edge `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialKind", into = "PotentialKind")]
pub struct EdgePotential {
    kind: PotentialKind,
}

impl TryFrom<PotentialKind> for EdgePotential {
    type Error = Error;

    fn try_from(kind: PotentialKind) -> Result<Self> {
        EdgePotential::new(kind)
    }
}

impl From<EdgePotential> for PotentialKind {
    fn from(p: EdgePotential) -> Self {
        p.kind
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidPotential(msg.into())
}

fn check_grid(xs: &[f64], values: &[f64]) -> Result<()> {
    if xs.len() != values.len() {
        return Err(invalid("grid and values differ in length"));
    }
    if xs.len() < 2 {
        return Err(invalid("need at least two grid points"));
    }
    if xs[0] != 0.0 {
        return Err(invalid("grid must start at x = 0"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("grid must be strictly increasing"));
    }
    if xs.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite grid entry"));
    }
    Ok(())
}

impl EdgePotential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        match &kind {
            PotentialKind::Zero => {}
            PotentialKind::SquareWell { depth, width } => {
                if !depth.is_finite() || !width.is_finite() || *width <= 0.0 {
                    return Err(invalid("square well needs finite depth and width > 0"));
                }
            }
            PotentialKind::Exponential { amplitude, rate } => {
                if !amplitude.is_finite() || !rate.is_finite() {
                    return Err(invalid("exponential needs finite parameters"));
                }
                if *rate <= 0.0 {
                    // ∫|V| = |A|/rate diverges otherwise.
                    return Err(invalid("exponential rate must be positive"));
                }
            }
            PotentialKind::PiecewiseLinear { breakpoints } => {
                let (xs, vs): (Vec<f64>, Vec<f64>) = breakpoints.iter().copied().unzip();
                check_grid(&xs, &vs)?;
            }
            PotentialKind::Sampled { xs, values } => check_grid(xs, values)?,
        }
        Ok(EdgePotential { kind })
    }

    pub fn zero() -> Self {
        EdgePotential {
            kind: PotentialKind::Zero,
        }
    }

    pub fn square_well(depth: f64, width: f64) -> Result<Self> {
        Self::new(PotentialKind::SquareWell { depth, width })
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Result<Self> {
        Self::new(PotentialKind::Exponential { amplitude, rate })
    }

    pub fn piecewise_linear(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(PotentialKind::PiecewiseLinear { breakpoints })
    }

    pub fn sampled(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(PotentialKind::Sampled { xs, values })
    }

    /// Loads a two-column CSV `x,V(x)` (an optional header row is skipped).
    pub fn sampled_from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path.as_ref())
            .map_err(|e| Error::Io(e.to_string()))?;
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Io(e.to_string()))?;
            if record.len() != 2 {
                return Err(invalid(format!("line {}: expected two columns", line + 1)));
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => {
                    xs.push(v[0]);
                    values.push(v[1]);
                }
                Err(_) if line == 0 => continue,
                Err(e) => return Err(invalid(format!("line {}: {e}", line + 1))),
            }
        }
        Self::sampled(xs, values)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Zero => true,
            PotentialKind::SquareWell { depth, .. } => *depth == 0.0,
            PotentialKind::Exponential { amplitude, .. } => *amplitude == 0.0,
            PotentialKind::PiecewiseLinear { breakpoints } => breakpoints.iter().all(|b| b.1 == 0.0),
            PotentialKind::Sampled { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    fn linear_nodes(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            PotentialKind::PiecewiseLinear { breakpoints } => Some(breakpoints.iter().copied().unzip()),
            PotentialKind::Sampled { xs, values } => Some((xs.clone(), values.clone())),
            _ => None,
        }
    }

    /// V(x) for x >= 0; zero beyond the support.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth, width } => {
                if x < *width {
                    *depth
                } else {
                    0.0
                }
            }
            PotentialKind::Exponential { amplitude, rate } => amplitude * (-rate * x).exp(),
            PotentialKind::PiecewiseLinear { breakpoints } => {
                interpolate(breakpoints.len(), |i| breakpoints[i].0, |i| breakpoints[i].1, x)
            }
            PotentialKind::Sampled { xs, values } => {
                interpolate(xs.len(), |i| xs[i], |i| values[i], x)
            }
        }
    }

    /// `∫_from^∞ x^order |V(x)| dx`.
    pub fn abs_moment_from(&self, order: u8, from: f64) -> Moment {
        assert!(order <= 2, "moment order is capped at 2");
        let from = from.max(0.0);
        let p = order as i32;
        let value = match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth, width } => {
                if from >= *width {
                    0.0
                } else {
                    depth.abs() * (width.powi(p + 1) - from.powi(p + 1)) / (p + 1) as f64
                }
            }
            PotentialKind::Exponential { amplitude, rate } => {
                let (a, r, f) = (amplitude.abs(), *rate, from);
                let poly = match order {
                    0 => 1.0 / r,
                    1 => f / r + 1.0 / (r * r),
                    _ => f * f / r + 2.0 * f / (r * r) + 2.0 / (r * r * r),
                };
                a * (-r * f).exp() * poly
            }
            PotentialKind::PiecewiseLinear { .. } | PotentialKind::Sampled { .. } => {
                let (xs, vs) = self.linear_nodes().unwrap();
                let mut total = 0.0;
                for i in 0..xs.len() - 1 {
                    let (x0, x1) = (xs[i], xs[i + 1]);
                    if x1 <= from {
                        continue;
                    }
                    let a = x0.max(from);
                    let slope = (vs[i + 1] - vs[i]) / (x1 - x0);
                    let va = vs[i] + slope * (a - x0);
                    total += abs_linear_moment(a, va, x1, vs[i + 1], p);
                }
                total
            }
        };
        if value.is_finite() {
            Moment::Finite(value)
        } else {
            Moment::Infinite
        }
    }

    /// `∫_0^∞ x^order |V(x)| dx` for order in {0, 1, 2}.
    pub fn moment(&self, order: u8) -> Moment {
        self.abs_moment_from(order, 0.0)
    }

    /// `∫_x^∞ (1 + y) |V(y)| dy`, non-increasing in x.
    pub fn tail_bound(&self, x: f64) -> f64 {
        self.abs_moment_from(0, x).value() + self.abs_moment_from(1, x).value()
    }

    /// Signed integral `∫_a^b V(x) dx` with `0 <= a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.max(0.0), b.max(0.0));
        if b <= a {
            return 0.0;
        }
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth, width } => depth * (b.min(*width) - a.min(*width)),
            PotentialKind::Exponential { amplitude, rate } => {
                amplitude / rate * ((-rate * a).exp() - (-rate * b).exp())
            }
            PotentialKind::PiecewiseLinear { .. } | PotentialKind::Sampled { .. } => {
                let (xs, vs) = self.linear_nodes().unwrap();
                let mut total = 0.0;
                for i in 0..xs.len() - 1 {
                    let lo = xs[i].max(a);
                    let hi = xs[i + 1].min(b);
                    if hi <= lo {
                        continue;
                    }
                    let slope = (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]);
                    let vlo = vs[i] + slope * (lo - xs[i]);
                    let vhi = vs[i] + slope * (hi - xs[i]);
                    total += 0.5 * (vlo + vhi) * (hi - lo);
                }
                total
            }
        }
    }

    /// Points in `(0, x_max]` where V or V' jumps; ODE integration restarts there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Zero | PotentialKind::Exponential { .. } => Vec::new(),
            PotentialKind::SquareWell { width, .. } => vec![*width],
            PotentialKind::PiecewiseLinear { .. } | PotentialKind::Sampled { .. } => {
                self.linear_nodes().unwrap().0[1..].to_vec()
            }
        }
    }

    /// Smallest x beyond which the potential is dropped: the end of the support,
    /// or the point where `tail_bound` falls below `tau`.
    pub fn truncation_point(&self, tau: f64) -> Result<f64> {
        match &self.kind {
            PotentialKind::Zero => Ok(0.0),
            _ if self.is_zero() => Ok(0.0),
            PotentialKind::SquareWell { width, .. } => Ok(*width),
            PotentialKind::PiecewiseLinear { .. } | PotentialKind::Sampled { .. } => {
                Ok(*self.linear_nodes().unwrap().0.last().unwrap())
            }
            PotentialKind::Exponential { .. } => {
                if !(tau > 0.0) {
                    return Err(Error::TailNotIntegrable { tau });
                }
                let mut hi = 1.0;
                while self.tail_bound(hi) >= tau {
                    hi *= 2.0;
                    if hi > 1e12 {
                        return Err(Error::TailNotIntegrable { tau });
                    }
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_bound(mid) >= tau {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-12 * hi {
                        break;
                    }
                }
                Ok(hi)
            }
        }
    }

    /// `sup |V|`.
    pub fn sup_abs(&self) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareWell { depth, .. } => depth.abs(),
            PotentialKind::Exponential { amplitude, .. } => amplitude.abs(),
            PotentialKind::PiecewiseLinear { .. } | PotentialKind::Sampled { .. } => self
                .linear_nodes()
                .unwrap()
                .1
                .iter()
                .fold(0.0, |m: f64, v| m.max(v.abs())),
        }
    }
}

fn interpolate(len: usize, x_at: impl Fn(usize) -> f64, v_at: impl Fn(usize) -> f64, x: f64) -> f64 {
    let last = len - 1;
    if x < x_at(0) || x > x_at(last) {
        return 0.0;
    }
    // first index with x_i >= x
    let (mut lo, mut hi) = (0, last);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if x_at(mid) < x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo == 0 {
        return v_at(0);
    }
    let (x0, x1) = (x_at(lo - 1), x_at(lo));
    let (v0, v1) = (v_at(lo - 1), v_at(lo));
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
}

/// `∫_a^b x^p |v(x)| dx` for v linear between (a, va) and (b, vb).
fn abs_linear_moment(a: f64, va: f64, b: f64, vb: f64, p: i32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let slope = (vb - va) / (b - a);
    let mut cuts = vec![a];
    if va * vb < 0.0 {
        cuts.push(a - va / slope);
    }
    cuts.push(b);
    // Two-point Gauss-Legendre is exact for the cubic x^p * linear.
    let g = 0.5 / 3f64.sqrt();
    cuts.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let len = hi - lo;
            [mid - g * len, mid + g * len]
                .iter()
                .map(|&x| x.powi(p) * (va + slope * (x - a)).abs())
                .sum::<f64>()
                * 0.5
                * len
        })
        .sum()
}

/// A star graph: `n >= 2` half-line edges joined at one vertex with
/// continuity and Kirchhoff conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarGraph {
    edges: Vec<EdgePotential>,
}

impl StarGraph {
    pub fn new(edges: Vec<EdgePotential>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::TooFewEdges(edges.len()));
        }
        Ok(StarGraph { edges })
    }

    /// `n` edges without potential.
    pub fn free(n: usize) -> Result<Self> {
        Self::new(vec![EdgePotential::zero(); n])
    }

    pub fn edges(&self) -> &[EdgePotential] {
        &self.edges
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn is_free(&self) -> bool {
        self.edges.iter().all(EdgePotential::is_zero)
    }

    /// `sup |V|` over all edges.
    pub fn sup_abs(&self) -> f64 {
        self.edges.iter().map(EdgePotential::sup_abs).fold(0.0, f64::max)
    }

    /// `1 + Σ_j ∫ x |V_j|`: the Dirichlet-decoupled count plus one for the
    /// rank-one vertex coupling. Bounds the number of negative eigenvalues.
    pub fn bargmann_bound(&self) -> f64 {
        if self.is_free() {
            return 0.0;
        }
        1.0 + self.edges.iter().map(|p| p.moment(1).value()).sum::<f64>()
    }
}
