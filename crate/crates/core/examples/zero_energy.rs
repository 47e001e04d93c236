//! Zero-energy resonance classification and the low-energy exponent of D.

use starshift::corpus;
use starshift::spectrum::{classify_zero_energy, count_negative_eigenvalues, SpectrumOptions};
use starshift::ssf::{default_low_energy_window, low_energy_exponent};

fn main() -> starshift::Result<()> {
    let cases = [
        ("one well", corpus::one_well(3, -4.0, 1.0)),
        ("free", corpus::one_well(3, 0.0, 1.0)),
        ("two tuned wells", corpus::tuned(3, 2)),
        ("three tuned wells", corpus::tuned(3, 3)),
    ];
    for (label, g) in &cases {
        let r = classify_zero_energy(g, 1e-6)?;
        let b = count_negative_eigenvalues(g, &SpectrumOptions::default())?;
        let fit = low_energy_exponent(g, default_low_energy_window(&b), Some(&b))?;
        println!(
            "{label:<18} M = {}, K(0) = {:?}, case = {:?}, m = {}, slope = {:.4} (m - 1 = {})",
            r.vanishing, r.k0, r.case, r.m, fit.slope, r.m as i64 - 1
        );
        for c in &r.coefficients {
            println!("  resonance coefficients {c:.6?}");
        }
    }
    Ok(())
}
