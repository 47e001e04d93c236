//! Embedded Dormand–Prince 5(4) stepping for small complex linear systems.
//!
//! The Jost and regular solutions are integrated segment by segment between
//! potential breakpoints; the integrator keeps its last accepted step size so
//! consecutive segments restart cheaply.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 20_000_000;

#[derive(Clone, Debug)]
pub struct Integrator {
    pub tol: Tolerance,
    step: f64,
    pub accepted: usize,
    pub rejected: usize,
    /// Sum of |Δx| over all advanced segments.
    pub path_length: f64,
}

impl Integrator {
    pub fn new(tol: Tolerance) -> Self {
        Integrator {
            tol,
            step: 0.0,
            accepted: 0,
            rejected: 0,
            path_length: 0.0,
        }
    }

    /// Advances `y` from `x0` to `x1` (either direction) under `y' = f(x, y)`.
    pub fn advance<const N: usize, F>(&mut self, f: &F, x0: f64, x1: f64, y: &mut [C64; N]) -> Result<()>
    where
        F: Fn(f64, &[C64; N]) -> [C64; N],
    {
        let span = x1 - x0;
        if span == 0.0 {
            return Ok(());
        }
        self.path_length += span.abs();
        let dir = span.signum();
        let mut x = x0;
        let mut h = if self.step > 0.0 {
            self.step
        } else {
            initial_step(f, x0, y, &self.tol, span.abs())
        };
        let mut k0 = f(x, y);
        let mut steps = 0usize;
        loop {
            let remaining = (x1 - x) * dir;
            if remaining <= 1e-15 * x1.abs().max(1.0) {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;

            let mut k = [[C64::new(0.0, 0.0); N]; 7];
            k[0] = k0;
            let mut stage = [C64::new(0.0, 0.0); N];
            for s in 1..7 {
                for i in 0..N {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += kj[i] * A[s][j];
                    }
                    stage[i] = y[i] + acc * hs;
                }
                k[s] = f(x + C[s] * hs, &stage);
            }
            // stage 7 evaluated at the fifth-order solution (FSAL)
            let y_new = stage;
            let mut err = 0.0;
            for i in 0..N {
                let mut e = C64::new(0.0, 0.0);
                for (s, ks) in k.iter().enumerate() {
                    e += ks[i] * E[s];
                }
                let sc = self.tol.atol + self.tol.rtol * y[i].norm().max(y_new[i].norm());
                let r = (e * hs).norm() / sc;
                err += r * r;
            }
            let err = (err / N as f64).sqrt();

            steps += 1;
            if steps > MAX_STEPS || !err.is_finite() {
                return Err(Error::StiffnessFailure { x });
            }
            if err <= 1.0 {
                x = if last { x1 } else { x + hs };
                *y = y_new;
                k0 = k[6];
                self.accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a shortened final step says nothing about the natural step size
                if !last || h <= remaining {
                    h *= fac;
                }
                self.step = h;
            } else {
                self.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-14 * x.abs().max(1.0) {
                    return Err(Error::StiffnessFailure { x });
                }
            }
        }
        Ok(())
    }
}

fn initial_step<const N: usize, F>(f: &F, x0: f64, y: &[C64; N], tol: &Tolerance, span: f64) -> f64
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    let dy = f(x0, y);
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = tol.atol + tol.rtol * y[i].norm();
        d0 += (y[i].norm() / sc).powi(2);
        d1 += (dy[i].norm() / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_backward() {
        // y'' = -ω² y from x = 3 back to 0, exact cos(ω(x - 3))
        let w = 7.0;
        let f = |_x: f64, y: &[C64; 2]| [y[1], -w * w * y[0]];
        let mut y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let mut ig = Integrator::new(Tolerance::default());
        ig.advance(&f, 3.0, 0.0, &mut y).unwrap();
        let exact = (w * (0.0 - 3.0)).cos();
        assert!((y[0].re - exact).abs() < 1e-8, "{} vs {}", y[0].re, exact);
        assert!(y[0].im.abs() < 1e-14);
    }

    #[test]
    fn complex_exponential_segments() {
        let z = C64::new(0.3, 2.0);
        let f = |_x: f64, y: &[C64; 1]| [z * y[0]];
        let mut y = [C64::new(1.0, 0.0)];
        let mut ig = Integrator::new(Tolerance::default());
        for seg in [(0.0, 0.4), (0.4, 1.3), (1.3, 2.0)] {
            ig.advance(&f, seg.0, seg.1, &mut y).unwrap();
        }
        let exact = (z * 2.0).exp();
        assert!((y[0] - exact).norm() < 1e-8 * exact.norm());
        assert!((ig.path_length - 2.0).abs() < 1e-15);
    }

    #[test]
    fn fifth_order_convergence_on_polynomial() {
        // y' = 5 x^4 integrates exactly by a fifth-order method
        let f = |x: f64, _y: &[C64; 1]| [C64::new(5.0 * x.powi(4), 0.0)];
        let mut y = [C64::new(0.0, 0.0)];
        let mut ig = Integrator::new(Tolerance { rtol: 1e-3, atol: 1e-3 });
        ig.advance(&f, 0.0, 1.0, &mut y).unwrap();
        assert!((y[0].re - 1.0).abs() < 1e-12);
    }
}
