//! Trace norm of the rank-two operator f⊗g + g⊗f: closed form against singular values.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starshift::oracle::{rank2_trace_norm, rank2_trace_norm_gram};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut v = |n: usize| -> Vec<C64> { (0..n).map(|_| C64::new(rng.random(), rng.random())).collect() };
    for n in [2, 5, 50] {
        let (f, g) = (v(n), v(n));
        println!("dim {n:>2}: closed form {:.15}, singular values {:.15}", rank2_trace_norm(&f, &g), rank2_trace_norm_gram(&f, &g));
    }
    let f = v(4);
    println!("g = f: {:.15} vs {:.15}", rank2_trace_norm(&f, &f), rank2_trace_norm_gram(&f, &f));
}
