//! Spectral shift function from the boundary phase of D, and Levinson's theorem.

use starshift::corpus;
use starshift::ssf::{levinson_check, phase_curve, PhaseOptions};

fn main() -> starshift::Result<()> {
    let g = corpus::one_well(3, -6.0, 1.2);
    let opts = PhaseOptions::default();
    let curve = phase_curve(&g, &opts)?;
    println!("eigenvalues {:?}", curve.eigenvalues);
    println!("{} samples, unwrap audit {:.3}, refinement rounds {}", curve.ks.len(), curve.unwrap_audit, curve.refinement_rounds);
    for lambda in [1e-4, 1e-2, 0.5, 2.0, 10.0, 100.0] {
        println!("  xi({lambda}) = {:.6}", curve.xi_at(lambda));
    }
    println!("int |xi| dl / (1 + l) = {:.6}", curve.weighted_l1());
    for (label, g) in [("one well", g), ("tuned", corpus::tuned(2, 2))] {
        let r = levinson_check(&g, &opts)?;
        println!(
            "{label}: xi(0+) = {:.8}, N = {}, m = {}, predicted {:.2}, residual {:.1e}",
            r.xi_at_zero_plus, r.n, r.m, r.predicted, r.residual
        );
    }
    Ok(())
}
