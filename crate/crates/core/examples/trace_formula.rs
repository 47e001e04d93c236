//! Trace of the resolvent difference from Jost data, against the oracle.

use num_complex::Complex64 as C64;
use starshift::corpus;
use starshift::graph_ops::{half_line_trace, trace_resolvent_diff_formula};
use starshift::oracle::{oracle_half_line_trace, oracle_trace};
use starshift::potentials::EdgePotential;

fn main() -> starshift::Result<()> {
    let g = corpus::one_well(3, -4.0, 1.0);
    for z in [-1.0, -4.0, -9.0] {
        let z = C64::new(z, 0.0);
        let formula = trace_resolvent_diff_formula(&g, z)?;
        let oracle = oracle_trace(&g, z, 30.0, 0.01)?;
        println!(
            "star z = {z}: formula {:.10}, oracle {:.10} (coarse {:.6}, fine {:.6})",
            formula.re, oracle.value.re, oracle.coarse.re, oracle.fine.re
        );
    }
    let p = EdgePotential::square_well(-1.0, 1.0)?;
    let z = C64::new(-4.0, 0.0);
    let formula = half_line_trace(&p, z)?;
    let oracle = oracle_half_line_trace(&p, z, 30.0, 0.01)?;
    println!("half line z = {z}: formula {:.10}, oracle {:.10}", formula.re, oracle.value.re);
    Ok(())
}
