//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line, then asserts.
//! Run with `cargo test --test acceptance -- --nocapture --test-threads=1`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use starshift::corpus;
use starshift::graph_ops::{half_line_trace, perturbation_determinant, trace_resolvent_diff_formula};
use starshift::jost::{jost_boundary, wronskian, SpectralParam};
use starshift::oracle::{
    oracle_bound_states_converged, oracle_half_line_trace, oracle_trace, rank2_trace_norm, rank2_trace_norm_gram,
    trace_norm_decay,
};
use starshift::potentials::{EdgePotential, StarGraph};
use starshift::spectrum::{classify_zero_energy, count_negative_eigenvalues, KirchhoffAtZero, SpectrumOptions};
use starshift::ssf::{
    default_low_energy_window, dispersion_check, levinson_check, low_energy_exponent, phase_curve, phase_curve_with,
    phase_symmetry_residual, PhaseOptions,
};

const SEED: u64 = 2024;

fn report(id: u32, title: &str, passed: bool, detail: &str, elapsed: Duration) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict} {title}: {detail} ({:.2} s)", elapsed.as_secs_f64());
}

fn spectrum(g: &StarGraph) -> starshift::spectrum::BoundStateList {
    count_negative_eigenvalues(g, &SpectrumOptions::default()).unwrap()
}

#[test]
fn criterion_01_free_graph_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut det_err, mut xi_max, mut lev_max) = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for n in [2, 3, 5] {
        let g = StarGraph::free(n).unwrap();
        for _ in 0..50 {
            let z = C64::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
            det_err = det_err.max((perturbation_determinant(&g, z).unwrap().value - 1.0).norm());
        }
        let bound = spectrum(&g);
        let curve = phase_curve_with(&g, &PhaseOptions::default(), &bound).unwrap();
        xi_max = curve.xi.iter().fold(xi_max, |m, x| m.max(x.abs()));
        let r = classify_zero_energy(&g, 1e-6).unwrap();
        ok &= bound.n == 0 && r.vanishing == 0 && r.m == 1 && r.k0 == KirchhoffAtZero::Finite(0.0);
        lev_max = lev_max.max(levinson_check(&g, &PhaseOptions::default()).unwrap().residual);
    }
    let elapsed = start.elapsed();
    ok &= det_err < 1e-10 && xi_max < 1e-10 && lev_max < 1e-8 && elapsed.as_secs_f64() < 5.0;
    report(
        1,
        "free graph identities",
        ok,
        &format!("max|D-1| = {det_err:.1e}, max|xi| = {xi_max:.1e}, Levinson residual = {lev_max:.1e}"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_02_half_line_trace() {
    let start = Instant::now();
    let p = EdgePotential::square_well(-1.0, 1.0).unwrap();
    let z = C64::new(-4.0, 0.0);
    let formula = half_line_trace(&p, z).unwrap();
    let oracle = oracle_half_line_trace(&p, z, 30.0, 0.01).unwrap();
    let rel = (formula - oracle.value).norm() / formula.norm();
    let elapsed = start.elapsed();
    let ok = rel < 1e-3 && (oracle.h_coarse, oracle.h_fine) == (0.02, 0.01) && elapsed.as_secs_f64() < 30.0;
    report(2, "half-line trace vs oracle", ok, &format!("relative residual {rel:.2e}"), elapsed);
    assert!(ok);
}

#[test]
fn criterion_03_star_trace_formula() {
    let start = Instant::now();
    let g = corpus::one_well(3, -4.0, 1.0);
    let mut worst = 0.0f64;
    for z in [-1.0, -4.0, -9.0] {
        let z = C64::new(z, 0.0);
        let formula = trace_resolvent_diff_formula(&g, z).unwrap();
        let oracle = oracle_trace(&g, z, 30.0, 0.01).unwrap();
        worst = worst.max((formula - oracle.value).norm() / formula.norm());
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-3 && elapsed.as_secs_f64() < 120.0;
    report(3, "star trace formula vs oracle", ok, &format!("worst relative residual {worst:.2e}"), elapsed);
    assert!(ok);
}

#[test]
fn criterion_04_eigenvalues_vs_oracle() {
    let start = Instant::now();
    let mut ok = true;
    let (mut worst, mut states) = (0.0f64, 0);
    for (i, g) in corpus::random_wells(SEED, 20).iter().enumerate() {
        let bound = spectrum(g);
        let oracle = oracle_bound_states_converged(g, 30.0, 0.01, 1e-4).unwrap();
        states += bound.n;
        if bound.n != oracle.value.len() {
            println!("  config {i}: N = {} but oracle counts {}", bound.n, oracle.value.len());
            ok = false;
            continue;
        }
        for (e, o) in bound.eigenvalues().iter().zip(&oracle.value) {
            let kappa = (-e).sqrt();
            worst = worst.max(((-o).sqrt() - kappa).abs() / kappa);
        }
    }
    ok &= worst < 1e-3;
    report(
        4,
        "eigenvalues vs oracle",
        ok,
        &format!("20 configurations, {states} bound states, worst kappa relative error {worst:.2e}"),
        start.elapsed(),
    );
    assert!(ok);
}

#[test]
fn criterion_05_levinson() {
    let start = Instant::now();
    let opts = PhaseOptions::default();
    let mut ok = true;
    let mut generic = 0.0f64;
    for g in corpus::random_wells(SEED, 20) {
        let r = levinson_check(&g, &opts).unwrap();
        ok &= r.m == 0;
        generic = generic.max((r.xi_at_zero_plus + r.n as f64 - 0.5).abs());
    }
    let mut tuned = 0.0f64;
    for g in corpus::resonant_m1() {
        let r = levinson_check(&g, &opts).unwrap();
        ok &= r.m == 1;
        tuned = tuned.max((r.xi_at_zero_plus + r.n as f64).abs());
    }
    ok &= generic < 0.02 && tuned < 0.02;
    report(
        5,
        "Levinson theorem",
        ok,
        &format!("generic max residual {generic:.2e}, resonant max residual {tuned:.2e}"),
        start.elapsed(),
    );
    assert!(ok);
}

#[test]
fn criterion_06_low_energy_exponent() {
    let start = Instant::now();
    let cases = [
        ("m = 0", corpus::one_well(3, -4.0, 1.0)),
        ("m = 1", corpus::tuned(3, 2)),
        ("m = 2", corpus::tuned(3, 3)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, g) in &cases {
        let bound = spectrum(g);
        let m = classify_zero_energy(g, 1e-6).unwrap().m;
        let fit = low_energy_exponent(g, default_low_energy_window(&bound), Some(&bound)).unwrap();
        ok &= (fit.slope - (m as f64 - 1.0)).abs() <= 0.1;
        parts.push(format!("{label}: m = {m}, slope {:.4}", fit.slope));
    }
    report(6, "low-energy exponent", ok, &parts.join("; "), start.elapsed());
    assert!(ok);
}

#[test]
fn criterion_07_dispersion() {
    let start = Instant::now();
    let g = corpus::one_well(3, -4.0, 1.0);
    let curve = phase_curve(&g, &PhaseOptions::default()).unwrap();
    let r = dispersion_check(&g, C64::new(-4.0, 0.0), &curve, 1e-2).unwrap();
    let ok = r.residual < 1e-2;
    report(7, "dispersion identity", ok, &format!("residual {:.2e}", r.residual), start.elapsed());
    assert!(ok);
}

#[test]
fn criterion_08_phase_symmetry_and_anchor() {
    let start = Instant::now();
    let graphs = [corpus::one_well(2, -4.0, 1.0), corpus::one_well(3, -1.0, 1.0), corpus::tuned(3, 2)];
    let ks = [0.05, 0.3, 1.0, 2.5, 10.0, 60.0];
    let (mut sym, mut anchor) = (0.0f64, 0.0f64);
    for g in &graphs {
        sym = sym.max(phase_symmetry_residual(g, &ks).unwrap());
        let curve = phase_curve(g, &PhaseOptions::default()).unwrap();
        anchor = anchor.max(curve.eta.last().unwrap().abs());
    }
    let ok = sym < 1e-8 && anchor < 0.05;
    report(
        8,
        "phase symmetry and anchoring",
        ok,
        &format!("symmetry residual {sym:.1e}, max |eta(100)| = {anchor:.2e}"),
        start.elapsed(),
    );
    assert!(ok);
}

#[test]
fn criterion_09_rank_two_norm() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let dim = rng.random_range(2..12);
        let mut v = || -> Vec<C64> {
            (0..dim)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let (f, g) = (v(), v());
        let (a, b) = (rank2_trace_norm(&f, &g), rank2_trace_norm_gram(&f, &g));
        worst = worst.max((a - b).abs() / b.max(f64::MIN_POSITIVE));
    }
    let ok = worst < 1e-12;
    report(9, "rank-two trace norm", ok, &format!("1000 pairs, worst relative gap {worst:.1e}"), start.elapsed());
    assert!(ok);
}

#[test]
fn criterion_10_trace_norm_decay() {
    let start = Instant::now();
    let g = corpus::one_well(3, -4.0, 1.0);
    let fit = trace_norm_decay(&g, &[16.0, 64.0, 256.0], 0.005).unwrap();
    let (slope, drift) = (fit.slope.unwrap(), fit.slope_drift().unwrap());
    let ok = slope <= -1.4 && drift <= 0.1;
    report(
        10,
        "trace-norm decay",
        ok,
        &format!("slope {slope:.4} (h/2: {:.4}), drift {drift:.1e}", fit.slope_halved.unwrap()),
        start.elapsed(),
    );
    assert!(ok);
}

fn full_corpus() -> Vec<StarGraph> {
    let mut graphs = vec![
        StarGraph::free(2).unwrap(),
        corpus::one_well(3, -4.0, 1.0),
        corpus::tuned(3, 3),
        StarGraph::new(vec![
            EdgePotential::exponential(-2.0, 1.5).unwrap(),
            EdgePotential::piecewise_linear(vec![(0.0, -3.0), (0.5, 1.0), (1.5, 0.0)]).unwrap(),
            EdgePotential::sampled(vec![0.0, 0.4, 0.8, 1.2], vec![-1.0, -2.0, 0.5, 0.0]).unwrap(),
        ])
        .unwrap(),
    ];
    graphs.extend(corpus::resonant_m1());
    graphs.extend(corpus::random_wells(SEED, 20));
    graphs
}

#[test]
fn criterion_11_wronskian_and_conjugation() {
    let start = Instant::now();
    let tol = 10.0 * 1e-10;
    let params = [
        SpectralParam::real(0.3),
        SpectralParam::real(1.0),
        SpectralParam::real(5.0),
        SpectralParam::imaginary(0.5),
        SpectralParam::imaginary(2.0),
        SpectralParam::from_zeta(C64::new(0.7, 0.4)).unwrap(),
    ];
    let xs: Vec<f64> = (0..=12).map(|i| 0.25 * i as f64).collect();
    let (mut wr, mut conj) = (0.0f64, 0.0f64);
    let mut edges = 0;
    for g in full_corpus() {
        for p in g.edges() {
            edges += 1;
            for &sp in &params {
                let w0 = wronskian(p, sp, 0.0).unwrap();
                let scale = w0.norm().max(1.0);
                for &x in &xs {
                    wr = wr.max((wronskian(p, sp, x).unwrap() - w0).norm() / scale);
                }
            }
            for k in [0.3, 1.0, 5.0] {
                let a = jost_boundary(p, SpectralParam::real(k), true).unwrap();
                let b = jost_boundary(p, SpectralParam::real(-k), true).unwrap();
                let scale = a.theta0.norm().max(a.dtheta0_dx.norm()).max(1.0);
                let gaps = [
                    (b.theta0 - a.theta0.conj()).norm(),
                    (b.dtheta0_dx - a.dtheta0_dx.conj()).norm(),
                    (b.dtheta0_dzeta.unwrap() + a.dtheta0_dzeta.unwrap().conj()).norm(),
                    (b.ddtheta0_dxdzeta.unwrap() + a.ddtheta0_dxdzeta.unwrap().conj()).norm(),
                ];
                conj = gaps.iter().fold(conj, |m, g| m.max(g / scale));
            }
        }
    }
    let ok = wr <= tol && conj <= tol;
    report(
        11,
        "Wronskian constancy and conjugation symmetry",
        ok,
        &format!("{edges} edges, Wronskian drift {wr:.1e}, conjugation gap {conj:.1e} (bound {tol:.0e})"),
        start.elapsed(),
    );
    assert!(ok);
}

#[test]
fn tuned_well_is_resonant() {
    // sanity check of the resonant corpus used above
    let r = classify_zero_energy(&corpus::tuned(2, 2), 1e-6).unwrap();
    assert_eq!(r.vanishing, 2);
    assert!((corpus::TUNED_DEPTH + PI * PI / 4.0).abs() < 1e-15);
}
