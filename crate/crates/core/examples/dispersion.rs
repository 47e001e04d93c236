//! ln D and the resolvent trace recovered as integrals of the spectral shift function.

use num_complex::Complex64 as C64;
use starshift::corpus;
use starshift::ssf::{dispersion_check, log_determinant, phase_curve, trace_test_function_check, PhaseOptions};

fn main() -> starshift::Result<()> {
    let g = corpus::one_well(3, -4.0, 1.0);
    let curve = phase_curve(&g, &PhaseOptions::default())?;
    for z in [C64::new(-4.0, 0.0), C64::new(-1.0, 2.0)] {
        let r = dispersion_check(&g, z, &curve, 1e-2)?;
        println!(
            "z = {z}: quadrature {:.8}, ln D {:.8}, residual {:.1e}, tail {:.2e}",
            r.quadrature,
            log_determinant(&g, z)?,
            r.residual,
            r.tail.norm()
        );
    }
    let t = trace_test_function_check(&g, 4.0, &curve, 1e-2)?;
    println!("f = 1/(l + 4): quadrature {:.10}, formula {:.10}, residual {:.1e}", t.quadrature, t.formula, t.residual);
    Ok(())
}
