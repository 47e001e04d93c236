//! Reference configurations: one-well graphs, tuned resonant graphs and
//! seeded random square-well graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

use crate::potentials::{EdgePotential, StarGraph};

/// Depth at which a unit-width well has `w(0) = cos(π/2) = 0`.
pub const TUNED_DEPTH: f64 = -FRAC_PI_2 * FRAC_PI_2;

/// `n` edges, a square well on the first one and free edges elsewhere.
pub fn one_well(n: usize, depth: f64, width: f64) -> StarGraph {
    let mut edges = vec![EdgePotential::square_well(depth, width).expect("valid well")];
    edges.extend((1..n).map(|_| EdgePotential::zero()));
    StarGraph::new(edges).expect("n >= 2")
}

/// `tuned` edges carrying the tuned unit well, the rest free.
pub fn tuned(n: usize, tuned: usize) -> StarGraph {
    assert!(tuned <= n);
    let edges = (0..n)
        .map(|j| {
            if j < tuned {
                EdgePotential::square_well(TUNED_DEPTH, 1.0).expect("valid well")
            } else {
                EdgePotential::zero()
            }
        })
        .collect();
    StarGraph::new(edges).expect("n >= 2")
}

/// The three resonant graphs with two tuned wells (`m = 1`): on `n = 2`, on
/// `n = 3` with a free edge, and on `n = 3` with an extra shallow well.
pub fn resonant_m1() -> Vec<StarGraph> {
    let tuned_well = || EdgePotential::square_well(TUNED_DEPTH, 1.0).unwrap();
    vec![
        tuned(2, 2),
        tuned(3, 2),
        StarGraph::new(vec![tuned_well(), tuned_well(), EdgePotential::square_well(-0.5, 0.7).unwrap()]).unwrap(),
    ]
}

/// `count` graphs with `n ∈ {2,3,4}` and a square well on every edge,
/// depth uniform in `[-9, 0]`, width uniform in `[0.5, 2]`.
pub fn random_wells(seed: u64, count: usize) -> Vec<StarGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=4);
            let edges = (0..n)
                .map(|_| {
                    let depth = -9.0 * rng.random::<f64>();
                    let width = rng.random_range(0.5..2.0);
                    EdgePotential::square_well(depth, width).unwrap()
                })
                .collect();
            StarGraph::new(edges).unwrap()
        })
        .collect()
}
