//! Gauss rules computed by Newton iteration on the orthogonal polynomials.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Laguerre nodes and weights for `int_0^inf e^{-y} f(y) dy`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let nf = n as f64;
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    let mut z = 0.0f64;
    for i in 0..n {
        if i == 0 {
            z = 3.0 / (1.0 + 2.4 * nf);
        } else if i == 1 {
            z += 15.0 / (1.0 + 2.5 * nf);
        } else {
            let ai = (i - 1) as f64;
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2]);
        }
        let (mut p1, mut p2, mut pp);
        let mut iter = 0;
        loop {
            p1 = 1.0;
            p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 - z) * p2 / j as f64 - (j - 1) as f64 * p3 / j as f64;
            }
            pp = (nf * p1 - nf * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            iter += 1;
            if (z - z1).abs() <= 1e-14 * z.abs() || iter > 100 {
                break;
            }
        }
        x[i] = z;
        w[i] = -1.0 / (pp * nf * p2);
    }
    (x, w)
}

/// Composite Gauss–Legendre rule: `panels` panels of `order` nodes on `[a, b]`.
pub fn composite_nodes(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(mid + 0.5 * h * x);
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Integrates a complex function with a composite Gauss–Legendre rule.
pub fn integrate_complex(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> Complex64 {
    let (xs, ws) = composite_nodes(a, b, panels, order);
    xs.iter().zip(&ws).map(|(&x, &w)| f(x) * w).sum()
}

/// Panel breakpoints on `[a, b]` for an integrand whose phase advances at
/// local rate at most `rate(t)`: each panel spans about `budget` radians and
/// no panel is longer than `(b - a) / min_panels`.
pub fn phase_panels(a: f64, b: f64, min_panels: usize, budget: f64, rate: impl Fn(f64) -> f64) -> Vec<f64> {
    let hmax = (b - a) / min_panels.max(1) as f64;
    let mut breaks = vec![a];
    let mut t = a;
    while t < b {
        let mut h = hmax;
        for _ in 0..2 {
            let r = rate(t).abs().max(rate((t + h).min(b)).abs());
            if r * h > budget {
                h = budget / r;
            }
        }
        t = if t + h >= b - 1e-14 * (b - a) { b } else { t + h };
        breaks.push(t);
    }
    breaks
}

/// Sums `f` over an `order`-point Gauss–Legendre rule on each panel.
pub fn panel_sum(breaks: &[f64], order: usize, f: impl Fn(f64) -> Complex64) -> Complex64 {
    let (gx, gw) = gauss_legendre(order);
    let mut total = Complex64::new(0.0, 0.0);
    for win in breaks.windows(2) {
        let (mid, half) = (0.5 * (win[0] + win[1]), 0.5 * (win[1] - win[0]));
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            acc += f(mid + half * x) * *w;
        }
        total += acc * half;
    }
    total
}
