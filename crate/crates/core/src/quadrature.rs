//! Gauss–Legendre rules and small fitting helpers.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre nodes on `[a, b]` split at `cuts`, panels no longer than `max_panel`.
pub fn composite_nodes(a: f64, b: f64, cuts: &[f64], max_panel: f64, order: usize) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(order);
    let mut ends: Vec<f64> = std::iter::once(a)
        .chain(cuts.iter().copied().filter(|&c| c > a && c < b))
        .chain(std::iter::once(b))
        .collect();
    ends.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ends.dedup();
    let mut out = Vec::new();
    for w in ends.windows(2) {
        let panels = ((w[1] - w[0]) / max_panel).ceil().max(1.0) as usize;
        let len = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let lo = w[0] + p as f64 * len;
            for (x, wt) in gx.iter().zip(&gw) {
                out.push((lo + 0.5 * len * (x + 1.0), 0.5 * len * wt));
            }
        }
    }
    out
}

/// Least-squares line `y ≈ slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Value at `x0` of the least-squares polynomial of the given degree.
pub fn polynomial_extrapolate(xs: &[f64], ys: &[f64], degree: usize, x0: f64) -> f64 {
    let cols = degree + 1;
    let a = nalgebra::DMatrix::from_fn(xs.len(), cols, |i, j| (xs[i] - x0).powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(ys);
    let sol = a.svd(true, true).solve(&b, 1e-14).expect("least squares");
    sol[0]
}
