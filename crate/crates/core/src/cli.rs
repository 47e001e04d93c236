//! Batch driver behind the `starshift` binary.
//!
//! A run is described by a TOML file:
//!
//! ```toml
//! tasks = ["levinson", "ssf_curve"]
//! seed = 7                  # random sweeps (optional)
//! output_dir = "out"        # overridden by --output
//!
//! [graph]
//! n = 3                     # optional, must match the edge list
//! edges = [
//!   { kind = "square_well", depth = -4.0, width = 1.0 },
//!   { kind = "zero" },
//!   { kind = "sampled_csv", path = "edge.csv" },
//! ]
//!
//! [tolerances]              # all optional
//! levinson = 0.02
//!
//! [parameters]              # all optional
//! trace_z = [[-1.0, 0.0], [-4.0, 0.0]]
//! ```
//!
//! Every task writes `<task>.csv` and `<task>.json`; `summary.json` collects
//! all checks with their tolerances and provenance.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus;
use crate::error::{Error, Result};
use crate::graph_ops::{half_line_trace, perturbation_determinant, trace_resolvent_diff_formula};
use crate::ode::C64;
use crate::oracle::{
    oracle_bound_states_converged, oracle_determinant_extrapolated, oracle_half_line_trace, oracle_trace,
    trace_norm_decay,
};
use crate::potentials::{EdgePotential, PotentialKind, StarGraph};
use crate::spectrum::{
    classify_zero_energy, count_negative_eigenvalues, zero_is_never_eigenvalue_check, SpectrumOptions,
};
use crate::ssf::{
    default_low_energy_window, dispersion_check, levinson_check, low_energy_exponent, oracle_phase_check,
    phase_curve_with, phase_symmetry_residual, trace_test_function_check, PhaseOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    SsfCurve,
    Levinson,
    Eigencount,
    Resonance,
    TraceFormulaCheck,
    DispersionCheck,
    DecayCheck,
    OracleCompare,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::SsfCurve,
        Task::Levinson,
        Task::Eigencount,
        Task::Resonance,
        Task::TraceFormulaCheck,
        Task::DispersionCheck,
        Task::DecayCheck,
        Task::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::SsfCurve => "ssf_curve",
            Task::Levinson => "levinson",
            Task::Eigencount => "eigencount",
            Task::Resonance => "resonance",
            Task::TraceFormulaCheck => "trace_formula_check",
            Task::DispersionCheck => "dispersion_check",
            Task::DecayCheck => "decay_check",
            Task::OracleCompare => "oracle_compare",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| Error::Schema {
            field: "tasks".into(),
            message: format!(
                "unknown task `{s}` (expected one of {})",
                Task::ALL.map(Task::name).join(", ")
            ),
        })
    }
}

/// Residual tolerances; `--tolerance-scale` multiplies all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub levinson: f64,
    pub trace_formula: f64,
    pub half_line_trace: f64,
    pub dispersion: f64,
    pub trace_test: f64,
    pub eigenvalue_relative: f64,
    pub oracle_determinant: f64,
    pub oracle_phase: f64,
    pub anchor_phase: f64,
    pub phase_symmetry: f64,
    pub low_energy_slope: f64,
    pub coefficient_residual: f64,
    pub decay_slope_max: f64,
    pub decay_drift: f64,
    /// Threshold for `|w_j(0)|` in the zero-energy classification; not scaled.
    pub zero_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            levinson: 0.02,
            trace_formula: 1e-3,
            half_line_trace: 1e-3,
            dispersion: 1e-2,
            trace_test: 1e-2,
            eigenvalue_relative: 1e-3,
            oracle_determinant: 1e-4,
            oracle_phase: 0.02,
            anchor_phase: 0.05,
            phase_symmetry: 1e-8,
            low_energy_slope: 0.1,
            coefficient_residual: 1e-8,
            decay_slope_max: -1.4,
            decay_drift: 0.1,
            zero_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Parameters {
    /// `[re, im]` pairs.
    pub trace_z: Vec<[f64; 2]>,
    pub dispersion_z: [f64; 2],
    pub oracle_z: [f64; 2],
    pub trace_test_c: f64,
    pub oracle_lambda: f64,
    pub oracle_l: f64,
    pub oracle_h: f64,
    pub decay_t: Vec<f64>,
    pub decay_h: f64,
    pub k_anchor: f64,
    pub lambda_min: f64,
    pub phase_points: usize,
    pub low_energy_window: Option<[f64; 2]>,
    /// Number of seeded random well graphs added to `eigencount` and `levinson`.
    pub sweep: usize,
}

impl Default for Parameters {
    fn default() -> Self {
        let phase = PhaseOptions::default();
        Parameters {
            trace_z: vec![[-1.0, 0.0], [-4.0, 0.0], [-9.0, 0.0]],
            dispersion_z: [-4.0, 0.0],
            oracle_z: [-4.0, 0.0],
            trace_test_c: 4.0,
            oracle_lambda: 1.0,
            oracle_l: 30.0,
            oracle_h: 0.01,
            decay_t: vec![16.0, 64.0, 256.0],
            decay_h: 0.005,
            k_anchor: phase.k_anchor,
            lambda_min: phase.lambda_min,
            phase_points: phase.points,
            low_energy_window: None,
            sweep: 0,
        }
    }
}

impl Parameters {
    fn phase_options(&self) -> PhaseOptions {
        PhaseOptions {
            k_anchor: self.k_anchor,
            lambda_min: self.lambda_min,
            points: self.phase_points,
            ..PhaseOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub graph: StarGraph,
    pub tasks: Vec<Task>,
    pub tolerances: Tolerances,
    pub parameters: Parameters,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    graph: Option<RawGraph>,
    tasks: Option<Vec<String>>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    parameters: Parameters,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    n: Option<usize>,
    edges: Option<Vec<toml::Value>>,
}

fn schema(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_edge(value: toml::Value, index: usize, base: &Path) -> Result<EdgePotential> {
    let field = format!("graph.edges[{index}]");
    let table = value
        .as_table()
        .ok_or_else(|| schema(&field, "expected a table such as { kind = \"zero\" }"))?;
    if table.get("kind").and_then(|k| k.as_str()) == Some("sampled_csv") {
        let path = table
            .get("path")
            .and_then(|p| p.as_str())
            .ok_or_else(|| schema(format!("{field}.path"), "sampled_csv needs a string `path`"))?;
        if let Some(extra) = table.keys().find(|k| *k != "kind" && *k != "path") {
            return Err(schema(format!("{field}.{extra}"), "unknown key"));
        }
        return EdgePotential::sampled_from_csv(base.join(path)).map_err(|e| schema(&field, e.to_string()));
    }
    let kind: PotentialKind = value.try_into().map_err(|e: toml::de::Error| schema(&field, e.message()))?;
    EdgePotential::new(kind).map_err(|e| schema(&field, e.to_string()))
}

/// Parses and validates a configuration file; relative CSV paths resolve
/// against the file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let location = e
            .span()
            .map(|s| {
                let line = text[..s.start].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "config".into());
        schema(location, e.message())
    })?;
    let graph = raw.graph.ok_or_else(|| schema("graph", "missing [graph] section"))?;
    let edges = graph.edges.ok_or_else(|| schema("graph.edges", "missing edge list"))?;
    if let Some(n) = graph.n {
        if n != edges.len() {
            return Err(schema(
                "graph.edges",
                format!("graph.n = {n} but {} potentials are listed", edges.len()),
            ));
        }
    }
    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_edge(v, i, base))
        .collect::<Result<Vec<_>>>()?;
    let graph = StarGraph::new(edges).map_err(|e| match e {
        Error::TooFewEdges(n) => Error::Validation(format!("a star graph needs n >= 2 edges, got n = {n}")),
        other => other,
    })?;

    let names = raw.tasks.ok_or_else(|| schema("tasks", "missing task list"))?;
    if names.is_empty() {
        return Err(Error::Validation("at least one task is required".into()));
    }
    let mut tasks = names.iter().map(|s| Task::from_str(s)).collect::<Result<Vec<_>>>()?;
    tasks.sort();
    tasks.dedup();

    validate(&raw.tolerances, &raw.parameters)?;
    Ok(RunConfig {
        graph,
        tasks,
        tolerances: raw.tolerances,
        parameters: raw.parameters,
        output_dir: raw.output_dir,
        seed: raw.seed,
    })
}

fn validate(t: &Tolerances, p: &Parameters) -> Result<()> {
    let positive = [
        ("tolerances.levinson", t.levinson),
        ("tolerances.trace_formula", t.trace_formula),
        ("tolerances.half_line_trace", t.half_line_trace),
        ("tolerances.dispersion", t.dispersion),
        ("tolerances.trace_test", t.trace_test),
        ("tolerances.eigenvalue_relative", t.eigenvalue_relative),
        ("tolerances.oracle_determinant", t.oracle_determinant),
        ("tolerances.oracle_phase", t.oracle_phase),
        ("tolerances.anchor_phase", t.anchor_phase),
        ("tolerances.phase_symmetry", t.phase_symmetry),
        ("tolerances.low_energy_slope", t.low_energy_slope),
        ("tolerances.coefficient_residual", t.coefficient_residual),
        ("tolerances.decay_drift", t.decay_drift),
        ("tolerances.zero_tol", t.zero_tol),
        ("parameters.trace_test_c", p.trace_test_c),
        ("parameters.oracle_lambda", p.oracle_lambda),
        ("parameters.oracle_l", p.oracle_l),
        ("parameters.oracle_h", p.oracle_h),
        ("parameters.decay_h", p.decay_h),
        ("parameters.k_anchor", p.k_anchor),
        ("parameters.lambda_min", p.lambda_min),
    ];
    for (field, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(schema(field, format!("must be a positive number, got {v}")));
        }
    }
    if p.phase_points < 16 {
        return Err(schema("parameters.phase_points", "need at least 16 points"));
    }
    if p.decay_t.len() < 2 || p.decay_t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(schema("parameters.decay_t", "need at least two increasing values"));
    }
    if p.trace_z.is_empty() {
        return Err(schema("parameters.trace_z", "need at least one point"));
    }
    Ok(())
}

/// Options coming from the command line.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub tolerance_scale: f64,
    pub verbose: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub reference: Value,
    /// Where `value` and `reference` come from.
    pub provenance: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: Value, reference: Value, provenance: &str, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            reference,
            provenance: provenance.into(),
            passed: residual <= tolerance,
            residual,
            tolerance,
        }
    }

    /// Passes when `value <= bound`.
    fn at_most(name: impl Into<String>, value: f64, bound: f64, provenance: &str) -> Self {
        Check {
            name: name.into(),
            value: json!(value),
            reference: json!(bound),
            provenance: provenance.into(),
            residual: value - bound,
            tolerance: 0.0,
            passed: value <= bound,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task: Task,
    pub status: Status,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tasks: Vec<TaskOutcome>,
    pub all_passed: bool,
    pub exit_code: i32,
    pub tolerance_scale: f64,
    pub seed: u64,
}

/// A CSV table; numbers are written with 17 significant digits.
struct Table {
    headers: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// `x` with 17 significant digits in scientific notation.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

struct TaskData {
    checks: Vec<Check>,
    table: Table,
    details: Value,
}

fn relative(a: C64, b: C64) -> f64 {
    let diff = (a - b).norm();
    if diff == 0.0 {
        0.0
    } else {
        diff / b.norm().max(1e-10)
    }
}

fn cz(z: [f64; 2]) -> C64 {
    C64::new(z[0], z[1])
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

struct Context<'a> {
    config: &'a RunConfig,
    tol: Tolerances,
}

impl Context<'_> {
    fn graphs_for_sweep(&self) -> Vec<(String, StarGraph)> {
        let mut out = vec![("config".to_string(), self.config.graph.clone())];
        let sweep = corpus::random_wells(self.config.seed, self.config.parameters.sweep);
        out.extend(sweep.into_iter().enumerate().map(|(i, g)| (format!("random_{i}"), g)));
        out
    }

    fn run(&self, task: Task) -> Result<TaskData> {
        match task {
            Task::SsfCurve => self.ssf_curve(),
            Task::Levinson => self.levinson(),
            Task::Eigencount => self.eigencount(),
            Task::Resonance => self.resonance(),
            Task::TraceFormulaCheck => self.trace_formula(),
            Task::DispersionCheck => self.dispersion(),
            Task::DecayCheck => self.decay(),
            Task::OracleCompare => self.oracle_compare(),
        }
    }

    fn ssf_curve(&self) -> Result<TaskData> {
        let g = &self.config.graph;
        let bound = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
        let curve = phase_curve_with(g, &self.config.parameters.phase_options(), &bound)?;
        let anchor = curve.eta.last().copied().unwrap_or(0.0);
        let probe: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|k| k * curve.k_anchor / 100.0).collect();
        let symmetry = phase_symmetry_residual(g, &probe)?;
        let checks = vec![
            Check::at_most("unwrap_audit", curve.unwrap_audit, std::f64::consts::FRAC_PI_2, "formula"),
            Check::new("eta_at_anchor", json!(anchor), json!(0.0), "formula", anchor.abs(), self.tol.anchor_phase),
            Check::new("phase_symmetry", json!(symmetry), json!(0.0), "formula", symmetry, self.tol.phase_symmetry),
        ];
        let rows = (0..curve.ks.len())
            .map(|i| {
                vec![
                    Cell::Num(curve.lambdas[i]),
                    Cell::Num(curve.ks[i]),
                    Cell::Num(curve.eta[i]),
                    Cell::Num(curve.xi[i]),
                ]
            })
            .collect();
        Ok(TaskData {
            checks,
            table: Table {
                headers: vec!["lambda", "k", "eta", "xi"],
                rows,
            },
            details: json!({
                "unwrap_audit": curve.unwrap_audit,
                "refinement_rounds": curve.refinement_rounds,
                "k_anchor": curve.k_anchor,
                "eigenvalues": curve.eigenvalues,
                "samples": curve.ks.len(),
            }),
        })
    }

    fn levinson(&self) -> Result<TaskData> {
        let opts = self.config.parameters.phase_options();
        let results = self
            .graphs_for_sweep()
            .into_par_iter()
            .map(|(label, g)| levinson_check(&g, &opts).map(|r| (label, r)))
            .collect::<Result<Vec<_>>>()?;
        let checks = results
            .iter()
            .map(|(label, r)| {
                Check::new(
                    format!("levinson[{label}]"),
                    json!(r.xi_at_zero_plus),
                    json!(r.predicted),
                    "xi(0+) extrapolated from the determinant phase vs -(N + (m-1)/2)",
                    r.residual,
                    self.tol.levinson,
                )
            })
            .collect();
        let rows = results
            .iter()
            .map(|(label, r)| {
                vec![
                    Cell::Text(label.clone()),
                    Cell::Num(r.xi_at_zero_plus),
                    Cell::Int(r.n as i64),
                    Cell::Int(r.m as i64),
                    Cell::Num(r.predicted),
                    Cell::Num(r.residual),
                ]
            })
            .collect();
        Ok(TaskData {
            checks,
            table: Table {
                headers: vec!["graph", "xi_at_zero_plus", "n_bound", "m", "predicted", "residual"],
                rows,
            },
            details: json!(results.iter().map(|(l, r)| json!({"graph": l, "result": r})).collect::<Vec<_>>()),
        })
    }

    fn eigencount(&self) -> Result<TaskData> {
        let p = &self.config.parameters;
        let results = self
            .graphs_for_sweep()
            .into_par_iter()
            .map(|(label, g)| {
                let bound = count_negative_eigenvalues(&g, &SpectrumOptions::default())?;
                let oracle = oracle_bound_states_converged(&g, p.oracle_l, p.oracle_h, 1e-4)?;
                Ok((label, bound, oracle))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut checks = Vec::new();
        let mut rows = Vec::new();
        for (label, bound, oracle) in &results {
            let provenance = format!(
                "determinant zeros vs oracle (L = {}, h = {}/{}, Richardson)",
                oracle.l, oracle.h_coarse, oracle.h_fine
            );
            checks.push(Check::new(
                format!("count[{label}]"),
                json!(bound.n),
                json!(oracle.value.len()),
                &provenance,
                (bound.n as f64 - oracle.value.len() as f64).abs(),
                0.0,
            ));
            checks.push(Check::at_most(
                format!("bargmann[{label}]"),
                bound.n as f64,
                bound.bargmann_bound,
                "count vs sum of first moments",
            ));
            let eig = bound.eigenvalues();
            let mut worst: f64 = 0.0;
            for (i, e) in eig.iter().enumerate() {
                let kappa = (-e).sqrt();
                let (oe, rel) = match oracle.value.get(i) {
                    Some(&o) => (o, ((-o).sqrt() - kappa).abs() / kappa),
                    None => (f64::NAN, f64::INFINITY),
                };
                worst = worst.max(rel);
                rows.push(vec![
                    Cell::Text(label.clone()),
                    Cell::Int(i as i64),
                    Cell::Num(kappa),
                    Cell::Num(*e),
                    Cell::Num(oe),
                    Cell::Num(rel),
                ]);
            }
            checks.push(Check::new(
                format!("kappa_relative[{label}]"),
                json!(eig),
                json!(oracle.value),
                &provenance,
                worst,
                self.tol.eigenvalue_relative,
            ));
        }
        Ok(TaskData {
            checks,
            table: Table {
                headers: vec!["graph", "index", "kappa", "eigenvalue", "oracle_eigenvalue", "relative_error"],
                rows,
            },
            details: json!(results
                .iter()
                .map(|(l, b, o)| json!({"graph": l, "bound_states": b, "oracle": o}))
                .collect::<Vec<_>>()),
        })
    }

    fn resonance(&self) -> Result<TaskData> {
        let g = &self.config.graph;
        let report = classify_zero_energy(g, self.tol.zero_tol)?;
        let witness = zero_is_never_eigenvalue_check(g)?;
        let bound = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
        let window = match self.config.parameters.low_energy_window {
            Some([a, b]) => (a, b),
            None => default_low_energy_window(&bound),
        };
        let fit = low_energy_exponent(g, window, Some(&bound))?;
        let expected = report.m as f64 - 1.0;
        let checks = vec![
            Check::new(
                "kirchhoff_residual",
                json!(report.kirchhoff_residual),
                json!(0.0),
                "formula",
                report.kirchhoff_residual,
                self.tol.coefficient_residual,
            ),
            Check::new(
                "continuity_residual",
                json!(report.continuity_residual),
                json!(0.0),
                "formula",
                report.continuity_residual,
                self.tol.coefficient_residual,
            ),
            Check::new(
                "zero_not_eigenvalue",
                json!(witness.holds),
                json!(true),
                "formula",
                if witness.holds { 0.0 } else { 1.0 },
                0.0,
            ),
            Check::new(
                "low_energy_slope",
                json!(fit.slope),
                json!(expected),
                "fitted ln|D(-κ²)| slope vs m - 1 from the classification",
                (fit.slope - expected).abs(),
                self.tol.low_energy_slope,
            ),
        ];
        let rows = (0..g.n())
            .map(|j| {
                let mut row = vec![Cell::Int(j as i64), Cell::Num(report.w0[j]), Cell::Num(report.dtheta0[j])];
                row.extend(report.coefficients.iter().map(|c| Cell::Num(c[j])));
                row
            })
            .collect();
        const COEFF: [&str; 8] = ["c_1", "c_2", "c_3", "c_4", "c_5", "c_6", "c_7", "c_8"];
        let mut headers = vec!["edge", "w0", "dtheta0"];
        headers.extend(COEFF.iter().take(report.m));
        Ok(TaskData {
            checks,
            table: Table { headers, rows },
            details: json!({"report": report, "witness": witness, "low_energy": fit}),
        })
    }

    fn trace_formula(&self) -> Result<TaskData> {
        let g = &self.config.graph;
        let p = &self.config.parameters;
        let provenance = format!("formula vs oracle (L = {}, h = {}/{}, Richardson)", p.oracle_l, 2.0 * p.oracle_h, p.oracle_h);
        let results = p
            .trace_z
            .par_iter()
            .map(|&z| {
                let z = cz(z);
                let formula = trace_resolvent_diff_formula(g, z)?;
                let oracle = oracle_trace(g, z, p.oracle_l, p.oracle_h)?;
                Ok((z, formula, oracle))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut checks = Vec::new();
        let mut rows = Vec::new();
        for (z, formula, oracle) in &results {
            let rel = relative(*formula, oracle.value);
            checks.push(Check::new(
                format!("trace[z = {} {:+}i]", z.re, z.im),
                cjson(*formula),
                cjson(oracle.value),
                &provenance,
                rel,
                self.tol.trace_formula,
            ));
            rows.push(vec![
                Cell::Text("star".into()),
                Cell::Num(z.re),
                Cell::Num(z.im),
                Cell::Num(formula.re),
                Cell::Num(formula.im),
                Cell::Num(oracle.value.re),
                Cell::Num(oracle.value.im),
                Cell::Num(rel),
            ]);
        }
        // single Dirichlet edge carrying the first potential
        let edge = &g.edges()[0];
        let z = cz(p.oracle_z);
        let formula = half_line_trace(edge, z)?;
        let oracle = oracle_half_line_trace(edge, z, p.oracle_l, p.oracle_h)?;
        let rel = relative(formula, oracle.value);
        checks.push(Check::new(
            "half_line_trace[edge 0]",
            cjson(formula),
            cjson(oracle.value),
            &provenance,
            rel,
            self.tol.half_line_trace,
        ));
        rows.push(vec![
            Cell::Text("half_line".into()),
            Cell::Num(z.re),
            Cell::Num(z.im),
            Cell::Num(formula.re),
            Cell::Num(formula.im),
            Cell::Num(oracle.value.re),
            Cell::Num(oracle.value.im),
            Cell::Num(rel),
        ]);
        Ok(TaskData {
            checks,
            table: Table {
                headers: vec!["operator", "z_re", "z_im", "formula_re", "formula_im", "oracle_re", "oracle_im", "relative_residual"],
                rows,
            },
            details: json!({
                "star": results.iter().map(|(z, f, o)| json!({"z": cjson(*z), "formula": cjson(*f), "oracle": o})).collect::<Vec<_>>(),
                "half_line": {"z": cjson(z), "formula": cjson(formula), "oracle": oracle},
            }),
        })
    }

    fn dispersion(&self) -> Result<TaskData> {
        let g = &self.config.graph;
        let p = &self.config.parameters;
        let bound = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
        let curve = phase_curve_with(g, &p.phase_options(), &bound)?;
        let d = dispersion_check(g, cz(p.dispersion_z), &curve, self.tol.dispersion)?;
        let t = trace_test_function_check(g, p.trace_test_c, &curve, self.tol.trace_test)?;
        let checks = vec![
            Check::new(
                "dispersion",
                cjson(d.quadrature),
                cjson(d.ln_d),
                "quadrature of xi vs ln D from Jost data",
                d.residual,
                self.tol.dispersion,
            ),
            Check::new(
                "trace_test_function",
                json!(t.quadrature),
                json!(t.formula),
                "quadrature of xi vs trace formula",
                t.residual,
                self.tol.trace_test,
            ),
        ];
        let rows = vec![
            vec![
                Cell::Text("ln_d".into()),
                Cell::Num(d.z.re),
                Cell::Num(d.z.im),
                Cell::Num(d.quadrature.re),
                Cell::Num(d.quadrature.im),
                Cell::Num(d.ln_d.re),
                Cell::Num(d.ln_d.im),
                Cell::Num(d.residual),
            ],
            vec![
                Cell::Text("trace_resolvent".into()),
                Cell::Num(-t.c),
                Cell::Num(0.0),
                Cell::Num(t.quadrature),
                Cell::Num(0.0),
                Cell::Num(t.formula),
                Cell::Num(0.0),
                Cell::Num(t.residual),
            ],
        ];
        Ok(TaskData {
            checks,
            table: Table {
                headers: vec!["identity", "z_re", "z_im", "quadrature_re", "quadrature_im", "formula_re", "formula_im", "residual"],
                rows,
            },
            details: json!({"dispersion": d, "trace_test": t}),
        })
    }

    fn decay(&self) -> Result<TaskData> {
        let p = &self.config.parameters;
        let fit = trace_norm_decay(&self.config.graph, &p.decay_t, p.decay_h)?;
        let provenance = format!("oracle trace norms, h = {} and {}", fit.h, 0.5 * fit.h);
        let checks = match (fit.slope, fit.slope_drift()) {
            (Some(slope), Some(drift)) => vec![
                Check::at_most("slope", slope, self.tol.decay_slope_max, &provenance),
                Check::new("slope_drift", json!(drift), json!(0.0), &provenance, drift, self.tol.decay_drift),
            ],
            _ => vec![Check::new("exact_zero", json!(true), json!(true), &provenance, 0.0, 0.0)],
        };
        let rows = (0..fit.ts.len())
            .map(|i| vec![Cell::Num(fit.ts[i]), Cell::Num(fit.norms[i]), Cell::Num(fit.norms_halved[i])])
            .collect();
        Ok(TaskData {
            checks,
            table: Table {
                headers: vec!["t", "trace_norm_h", "trace_norm_h_half"],
                rows,
            },
            details: json!(fit),
        })
    }

    fn oracle_compare(&self) -> Result<TaskData> {
        let g = &self.config.graph;
        let p = &self.config.parameters;
        let z = cz(p.oracle_z);
        let provenance = format!("formula vs oracle (L = {}, h = {}/{}, Richardson)", p.oracle_l, 2.0 * p.oracle_h, p.oracle_h);
        let det = perturbation_determinant(g, z)?.value;
        let odet = oracle_determinant_extrapolated(g, z, p.oracle_l, p.oracle_h)?;
        let trace = trace_resolvent_diff_formula(g, z)?;
        let otrace = oracle_trace(g, z, p.oracle_l, p.oracle_h)?;
        let bound = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
        let curve = phase_curve_with(g, &p.phase_options(), &bound)?;
        let phase = oracle_phase_check(g, &curve, p.oracle_lambda)?;
        let (rd, rt) = (relative(det, odet.value), relative(trace, otrace.value));
        let checks = vec![
            Check::new("determinant", cjson(det), cjson(odet.value), &provenance, rd, self.tol.oracle_determinant),
            Check::new("trace", cjson(trace), cjson(otrace.value), &provenance, rt, self.tol.trace_formula),
            Check::new(
                "xi_phase",
                json!(phase.xi),
                json!(phase.oracle_arg / std::f64::consts::PI),
                "xi vs Nyström Birman-Schwinger phase (mod 2)",
                phase.residual,
                self.tol.oracle_phase,
            ),
        ];
        let rows = vec![
            vec![Cell::Text("determinant_re".into()), Cell::Num(det.re), Cell::Num(odet.value.re), Cell::Num(rd)],
            vec![Cell::Text("determinant_im".into()), Cell::Num(det.im), Cell::Num(odet.value.im), Cell::Num(rd)],
            vec![Cell::Text("trace_re".into()), Cell::Num(trace.re), Cell::Num(otrace.value.re), Cell::Num(rt)],
            vec![Cell::Text("trace_im".into()), Cell::Num(trace.im), Cell::Num(otrace.value.im), Cell::Num(rt)],
            vec![
                Cell::Text("xi".into()),
                Cell::Num(phase.xi),
                Cell::Num(phase.oracle_arg / std::f64::consts::PI),
                Cell::Num(phase.residual),
            ],
        ];
        Ok(TaskData {
            checks,
            table: Table {
                headers: vec!["quantity", "formula", "oracle", "residual"],
                rows,
            },
            details: json!({
                "z": cjson(z),
                "determinant": {"formula": cjson(det), "oracle": odet},
                "trace": {"formula": cjson(trace), "oracle": otrace},
                "phase": phase,
            }),
        })
    }
}

fn scaled(t: &Tolerances, s: f64) -> Tolerances {
    Tolerances {
        levinson: t.levinson * s,
        trace_formula: t.trace_formula * s,
        half_line_trace: t.half_line_trace * s,
        dispersion: t.dispersion * s,
        trace_test: t.trace_test * s,
        eigenvalue_relative: t.eigenvalue_relative * s,
        oracle_determinant: t.oracle_determinant * s,
        oracle_phase: t.oracle_phase * s,
        anchor_phase: t.anchor_phase * s,
        phase_symmetry: t.phase_symmetry * s,
        low_energy_slope: t.low_energy_slope * s,
        coefficient_residual: t.coefficient_residual * s,
        decay_slope_max: t.decay_slope_max,
        decay_drift: t.decay_drift * s,
        zero_tol: t.zero_tol,
    }
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(&table.headers).map_err(|e| Error::Io(e.to_string()))?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs every configured task, writes the artifacts and returns the summary.
/// One failing task never aborts the others.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    fs::create_dir_all(&opts.output_dir)?;
    let ctx = Context {
        config,
        tol: scaled(&config.tolerances, opts.tolerance_scale),
    };
    let outcomes: Vec<TaskOutcome> = config
        .tasks
        .par_iter()
        .map(|&task| {
            if opts.verbose {
                eprintln!("[{task}] start");
            }
            let outcome = match ctx.run(task) {
                Ok(data) => {
                    let passed = data.checks.iter().all(|c| c.passed);
                    let outcome = TaskOutcome {
                        task,
                        status: if passed { Status::Pass } else { Status::Fail },
                        checks: data.checks,
                        error: None,
                    };
                    let written = write_table(&opts.output_dir.join(format!("{task}.csv")), &data.table).and_then(|_| {
                        write_json(
                            &opts.output_dir.join(format!("{task}.json")),
                            &json!({"outcome": &outcome, "details": data.details}),
                        )
                    });
                    match written {
                        Ok(()) => outcome,
                        Err(e) => TaskOutcome {
                            status: Status::Error,
                            error: Some(e.to_string()),
                            ..outcome
                        },
                    }
                }
                Err(e) => {
                    let outcome = TaskOutcome {
                        task,
                        status: Status::Error,
                        checks: Vec::new(),
                        error: Some(e.to_string()),
                    };
                    let _ = write_table(
                        &opts.output_dir.join(format!("{task}.csv")),
                        &Table {
                            headers: vec!["error"],
                            rows: vec![vec![Cell::Text(e.to_string())]],
                        },
                    );
                    let _ = write_json(&opts.output_dir.join(format!("{task}.json")), &json!({"outcome": &outcome}));
                    outcome
                }
            };
            if opts.verbose {
                eprintln!("[{task}] {:?}", outcome.status);
            }
            outcome
        })
        .collect();
    let any_error = outcomes.iter().any(|o| o.status == Status::Error);
    let all_passed = outcomes.iter().all(|o| o.status == Status::Pass);
    let exit_code = if any_error {
        1
    } else if all_passed {
        0
    } else {
        2
    };
    let summary = RunSummary {
        tasks: outcomes,
        all_passed,
        exit_code,
        tolerance_scale: opts.tolerance_scale,
        seed: config.seed,
    };
    write_json(&opts.output_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
tasks = ["levinson"]
[graph]
edges = [{ kind = "zero" }, { kind = "zero" }]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(c.tasks, vec![Task::Levinson]);
        assert_eq!(c.graph.n(), 2);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.parameters, Parameters::default());
    }

    #[test]
    fn edge_count_mismatch_names_the_field() {
        let text = r#"
tasks = ["levinson"]
[graph]
n = 3
edges = [{ kind = "zero" }, { kind = "zero" }]
"#;
        match parse_config_str(text, Path::new(".")) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "graph.edges"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_edge_is_a_validation_error() {
        let text = r#"
tasks = ["levinson"]
[graph]
edges = [{ kind = "zero" }]
"#;
        match parse_config_str(text, Path::new(".")) {
            Err(Error::Validation(msg)) => assert!(msg.contains("n >= 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_fields_are_reported() {
        let text = "tasks = [\"nope\"]\n[graph]\nedges = [{ kind = \"zero\" }, { kind = \"zero\" }]\n";
        assert!(matches!(parse_config_str(text, Path::new(".")), Err(Error::Schema { field, .. }) if field == "tasks"));
        let text = "tasks = [\"levinson\"]\n[graph]\nedges = [{ kind = \"square_well\", depth = -1.0 }, { kind = \"zero\" }]\n";
        assert!(matches!(parse_config_str(text, Path::new(".")), Err(Error::Schema { field, .. }) if field == "graph.edges[0]"));
        let text = "tasks = [\"levinson\"]\nbogus = 1\n[graph]\nedges = [{ kind = \"zero\" }, { kind = \"zero\" }]\n";
        assert!(matches!(parse_config_str(text, Path::new(".")), Err(Error::Schema { field, .. }) if field.starts_with("line")));
    }

    #[test]
    fn numbers_have_17_significant_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.0), "-2.0000000000000000e0");
    }
}
