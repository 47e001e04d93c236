//! Formula against oracle for D: finite differences with Richardson
//! extrapolation off the axis, Nyström on the real axis for the phase.

use num_complex::Complex64 as C64;
use starshift::graph_ops::perturbation_determinant;
use starshift::oracle::{nystrom_determinant, oracle_determinant_extrapolated};
use starshift::potentials::{EdgePotential, StarGraph};
use starshift::ssf::{oracle_phase_check, phase_curve, PhaseOptions};

fn main() -> starshift::Result<()> {
    let g = StarGraph::new(vec![
        EdgePotential::square_well(-4.0, 1.0)?,
        EdgePotential::piecewise_linear(vec![(0.0, -2.0), (1.0, 0.5), (2.0, 0.0)])?,
        EdgePotential::zero(),
    ])?;
    let z = C64::new(-4.0, 0.0);
    let d = perturbation_determinant(&g, z)?.value;
    let o = oracle_determinant_extrapolated(&g, z, 30.0, 0.01)?;
    println!("D(-4) = {:.12}, oracle {:.12} (agreement {:.1e})", d.re, o.value.re, o.agreement);

    let zeta = C64::new(1.0, 0.0);
    println!("D(1 + i0) = {:.8}, Nyström {:.8}", perturbation_determinant(&g, zeta * zeta)?.value, nystrom_determinant(&g, zeta, 0.05, 10)?);

    let curve = phase_curve(&g, &PhaseOptions::default())?;
    for lambda in [0.25, 1.0, 4.0] {
        let r = oracle_phase_check(&g, &curve, lambda)?;
        println!("xi({lambda}) = {:.8}, oracle arg / pi = {:.8}, residual {:.1e}", r.xi, r.oracle_arg / std::f64::consts::PI, r.residual);
    }
    Ok(())
}
