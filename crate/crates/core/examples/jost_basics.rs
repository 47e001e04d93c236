//! Jost function, regular solution, Wronskian and the resolvent kernel on one graph.

use num_complex::Complex64 as C64;
use starshift::graph_ops::{graph_boundary, krein_kernel, perturbation_determinant};
use starshift::jost::{jost_boundary, regular_solution, wronskian, SpectralParam};
use starshift::potentials::{EdgePotential, StarGraph};

fn main() -> starshift::Result<()> {
    let well = EdgePotential::square_well(-1.0, 1.0)?;
    let zero_energy = jost_boundary(&well, SpectralParam::imaginary(0.0), false)?;
    println!("w(0) = {:.10} (cos 1 = {:.10})", zero_energy.theta0.re, 1f64.cos());

    let sp = SpectralParam::from_zeta(C64::new(0.8, 0.3))?;
    let data = jost_boundary(&well, sp, true)?;
    println!("zeta = {}: w = {:.8}, w' = {:.8}, dw/dzeta = {:.8}", sp.zeta(), data.theta0, data.dtheta0_dx, data.dtheta0_dzeta.unwrap());
    for x in [0.0, 0.5, 1.5, 3.0] {
        println!("  W(x = {x}) = {:.12}", wronskian(&well, sp, x)?);
    }
    let phi = regular_solution(&well, SpectralParam::imaginary(0.0), &[0.25, 0.5, 1.0])?;
    println!("phi(x, 0) on the well = {:?} (sin x)", phi.phi.iter().map(|p| p.re).collect::<Vec<_>>());

    let g = StarGraph::new(vec![well, EdgePotential::exponential(-1.0, 2.0)?, EdgePotential::zero()])?;
    let z = C64::new(-2.0, 0.5);
    let b = graph_boundary(&g, SpectralParam::from_z(z), false)?;
    println!("K = {:?}, P = {:.8}", b.k, b.p);
    println!("D({z}) = {:.10}", perturbation_determinant(&g, z)?.value);
    println!("R_01(0.3, 1.2) = {:.10}", krein_kernel(&g, z, 0, 0.3, 1, 1.2)?);
    println!("R_10(1.2, 0.3) = {:.10}", krein_kernel(&g, z, 1, 1.2, 0, 0.3)?);
    Ok(())
}
