//! Negative eigenvalues from zeros of the determinant, checked against the
//! finite-difference oracle on a seeded random corpus.

use starshift::corpus;
use starshift::oracle::oracle_bound_states_converged;
use starshift::spectrum::{count_negative_eigenvalues, SpectrumOptions};

fn main() -> starshift::Result<()> {
    for (i, g) in corpus::random_wells(2024, 6).iter().enumerate() {
        let b = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
        let oracle = oracle_bound_states_converged(g, 30.0, 0.01, 1e-4)?;
        println!("graph {i}: n = {}, N = {} (oracle {}, bound {:.2})", g.n(), b.n, oracle.value.len(), b.bargmann_bound);
        for (e, o) in b.eigenvalues().iter().zip(&oracle.value) {
            println!("  lambda = {e:>14.10}  oracle = {o:>14.10}  rel = {:.1e}", ((e - o) / e).abs());
        }
        if !b.double_zeros.is_empty() {
            println!("  double zeros at kappa = {:?}", b.double_zeros);
        }
    }
    Ok(())
}
