//! Decay of the trace norm of R(-t) - R0(-t) in t.

use starshift::corpus;
use starshift::oracle::trace_norm_decay;
use starshift::potentials::{EdgePotential, StarGraph};

fn main() -> starshift::Result<()> {
    let ts = [16.0, 64.0, 256.0];
    let graphs = [
        ("one well", corpus::one_well(3, -4.0, 1.0)),
        (
            "mixed sign",
            StarGraph::new(vec![EdgePotential::square_well(-3.0, 0.6)?, EdgePotential::square_well(2.0, 0.8)?])?,
        ),
    ];
    for (label, g) in &graphs {
        let fit = trace_norm_decay(g, &ts, 0.005)?;
        println!("{label}:");
        for i in 0..ts.len() {
            println!("  t = {:>5}: {:.10e} (h/2: {:.10e})", ts[i], fit.norms[i], fit.norms_halved[i]);
        }
        println!("  slope {:.4}, drift {:.1e}", fit.slope.unwrap(), fit.slope_drift().unwrap());
    }
    Ok(())
}
