use num_complex::Complex64;
use rayon::prelude::*;

use super::engine::{self, bilinear_maximal, linear_apply, Node, NodeSet};
use super::{bracket, CurveField, Parity, RectangleCover, TruncationScheme};
use crate::cutoff::{plateau_bump, psi};
use crate::error::{invalid, Error, Result};
use crate::grid::{Dims, Direction, GridFunction, TorusGrid};
use crate::shifted_max::{shifted_max_2d_real, AxisOrder, Boundary, Sides};

/// How maximal averages sample `|f|` between lattice points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Periodic bilinear interpolation: positive, monotone and sublinear.
    #[default]
    Bilinear,
    /// Band-limited interpolation of `|f|`.
    Spectral,
}

/// Which average [`average_along_curve`] computes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AverageMode {
    /// `(1/2 eps) int_{-eps}^{eps} f(x - s t, y - s u(z) [t]^alpha) dt`.
    Truncated { eps: f64 },
    /// `int f(x - s t, y - s u(z) t^alpha) w(t) dt` with the plateau bump
    /// `w` on `[1/2, 3]`.
    Dilation,
}

fn require_2d(f: &GridFunction) -> Result<()> {
    if f.grid().dims() != Dims::Two {
        return Err(Error::GridMismatch("a 2D grid function is required".into()));
    }
    Ok(())
}

fn check_eps(eps: f64, limit: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("{eps} must be positive")));
    }
    if eps > limit * (1.0 + 1e-12) {
        return Err(Error::TruncationTooLarge { eps, limit });
    }
    Ok(())
}

/// Symmetric PV-style nodes `+-(j + 1/2) dt` scaled by `s`, with weights `w(t)`.
fn symmetric_nodes(
    field_alpha: f64,
    parity: Parity,
    dt: f64,
    count: usize,
    s: f64,
    w: impl Fn(f64) -> f64,
) -> NodeSet {
    let mut nodes = Vec::with_capacity(2 * count);
    for j in 0..count {
        let t = (j as f64 + 0.5) * dt;
        for t in [t, -t] {
            nodes.push(Node {
                t,
                x: s * t,
                p: s * bracket(t, field_alpha, parity),
                w: w(t),
            });
        }
    }
    NodeSet { nodes, dx: s * dt }
}

/// Averages `f` along the curve through each point.
///
/// `u_scale` dilates the whole curve, `(t, u [t]^alpha) -> (s t, s u [t]^alpha)`;
/// `depth` is the node count per side (truncated mode) or over `[1/2, 3]`
/// (dilation mode). Sampling is spectral.
pub fn average_along_curve(
    f: &GridFunction,
    field: &CurveField,
    u_scale: f64,
    mode: AverageMode,
    depth: usize,
) -> Result<GridFunction> {
    require_2d(f)?;
    if depth == 0 {
        return Err(invalid("depth", "must be positive"));
    }
    let grid = *f.grid();
    let set = match mode {
        AverageMode::Truncated { eps } => {
            check_eps(eps * u_scale.abs(), grid.side() / 4.0)?;
            let dt = eps / depth as f64;
            symmetric_nodes(field.alpha(), field.parity(), dt, depth, u_scale, |_| dt / (2.0 * eps))
        }
        AverageMode::Dilation => dilation_nodes(&grid, field.alpha(), u_scale, depth)?,
    };
    Ok(linear_apply(f, field, &set, None))
}

/// Fourier multiplier of the dilation average at scale `s` for `u == 1`, as
/// an x-major table over the lattice frequencies.
pub(crate) fn dilation_multiplier(grid: &TorusGrid, alpha: f64, s: f64, depth: usize) -> Result<Vec<Complex64>> {
    let set = dilation_nodes(grid, alpha, s, depth)?;
    let q = engine::fold_count(grid, set.dx).ok_or_else(|| invalid("u_scale", "node spacing does not fold"))?;
    Ok(engine::constant_multiplier(grid, &set, 1.0, 0.0, q, None))
}

/// Nodes for `int g(s t, s t^alpha) w(t) dt`, with `s dt` dividing the period.
fn dilation_nodes(grid: &TorusGrid, alpha: f64, s: f64, depth: usize) -> Result<NodeSet> {
    if !(s > 0.0) {
        return Err(invalid("u_scale", "dilation needs a positive scale"));
    }
    let q = (grid.side() * depth as f64 / (2.5 * s)).ceil();
    let dx = grid.side() / q;
    let dt = dx / s;
    let lo = (0.5 / dt).floor() as i64;
    let hi = (3.0 / dt).ceil() as i64;
    let nodes = (lo..=hi)
        .map(|j| (j as f64 + 0.5) * dt)
        .filter(|&t| t > 0.5 && t < 3.0)
        .map(|t| Node {
            t,
            x: s * t,
            p: s * t.powf(alpha),
            w: plateau_bump(t) * dt,
        })
        .collect();
    Ok(NodeSet { nodes, dx })
}

/// Maximal average of `|f|` over the dyadic truncation ladder (bilinear sampling).
pub fn maximal_along_curve(f: &GridFunction, field: &CurveField, trunc: &TruncationScheme) -> Result<GridFunction> {
    maximal_along_curve_with(f, field, trunc, Sampling::Bilinear)
}

pub fn maximal_along_curve_with(
    f: &GridFunction,
    field: &CurveField,
    trunc: &TruncationScheme,
    sampling: Sampling,
) -> Result<GridFunction> {
    require_2d(f)?;
    let grid = *f.grid();
    check_eps(trunc.eps0, grid.side() / 4.0)?;
    let counts = trunc.ladder_counts()?;
    match sampling {
        Sampling::Bilinear => {
            let absf = f.moduli();
            let us = field.sample_u(&grid);
            let vs = field.sample_v(&grid);
            let nodes = trunc.positive_nodes();
            let powers: Vec<(f64, f64)> = nodes.iter().map(|&t| (field.power(t), field.power(-t))).collect();
            let out = bilinear_maximal(&grid, &absf, &us, &vs, &nodes, &powers, &counts);
            GridFunction::from_real(grid, &out)
        }
        Sampling::Spectral => {
            let absf = f.abs();
            let dt = trunc.dt();
            let mut best = vec![0.0f64; grid.len()];
            for &c in &counts {
                let eps = c as f64 * dt;
                let set = symmetric_nodes(field.alpha(), field.parity(), dt, c, 1.0, |_| dt / (2.0 * eps));
                let avg = linear_apply(&absf, field, &set, None);
                for (b, z) in best.iter_mut().zip(avg.samples()) {
                    *b = b.max(z.re);
                }
            }
            GridFunction::from_real(grid, &best)
        }
    }
}

/// Truncated principal-value Hilbert transform along the curve, including the
/// linear term when the field carries one.
pub fn hilbert_along_curve(f: &GridFunction, field: &CurveField, trunc: &TruncationScheme) -> Result<GridFunction> {
    require_2d(f)?;
    let grid = *f.grid();
    check_eps(trunc.eps0, grid.side() / 4.0)?;
    let dt = trunc.dt();
    let set = symmetric_nodes(field.alpha(), field.parity(), dt, trunc.nodes_per_side, 1.0, |t| dt / t);
    Ok(linear_apply(f, field, &set, None))
}

/// `sup_j` over `j_range` of the maximal average along `(t, 2^j [t]^alpha)`.
pub fn dyadic_monomial_maximal(
    f: &GridFunction,
    alpha: f64,
    parity: Parity,
    j_range: std::ops::RangeInclusive<i32>,
    trunc: &TruncationScheme,
) -> Result<GridFunction> {
    if j_range.is_empty() {
        return Err(invalid("j_range", "empty range"));
    }
    let mut best: Option<Vec<f64>> = None;
    for j in j_range {
        let field = CurveField::constant(alpha, parity, 2f64.powi(j))?;
        let m = maximal_along_curve(f, &field, trunc)?.re();
        best = Some(match best {
            None => m,
            Some(b) => b.iter().zip(&m).map(|(a, c)| a.max(*c)).collect(),
        });
    }
    GridFunction::from_real(*f.grid(), &best.unwrap_or_default())
}

fn positive_u_range(field: &CurveField, grid: &TorusGrid) -> Result<(f64, f64)> {
    let us = field.sample_u(grid);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &u in &us {
        if !(u > 0.0) {
            return Err(Error::NonPositiveField(u));
        }
        lo = lo.min(u);
        hi = hi.max(u);
    }
    Ok((lo, hi))
}

/// The dyadic shell `int f(x - t, y - u [t]^alpha) psi_j(u^{1/alpha} t) dt / t`.
///
/// `depth` is the node count per side across the widest shell on the grid.
pub fn truncated_piece(f: &GridFunction, field: &CurveField, j: i32, depth: usize) -> Result<GridFunction> {
    require_2d(f)?;
    if depth == 0 {
        return Err(invalid("depth", "must be positive"));
    }
    let grid = *f.grid();
    let (umin, umax) = positive_u_range(field, &grid)?;
    let inv = 1.0 / field.alpha();
    let t_max = 2f64.powi(j + 1) * umin.powf(-inv);
    let t_min = 2f64.powi(j - 1) * umax.powf(-inv);
    check_eps(t_max, grid.side() / 2.0)?;
    let dt = t_max / depth as f64;
    let mut set = symmetric_nodes(field.alpha(), field.parity(), dt, depth, 1.0, |t| dt / t);
    set.nodes.retain(|nd| nd.t.abs() >= t_min);
    let jf = j as f64;
    let wmod = move |t: f64, u: f64| psi(jf, u.powf(inv) * t);
    Ok(linear_apply(f, field, &set, Some(&wmod)))
}

/// `sum_{|tau| <= W} (1 + |tau|)^{-10} N_j^{-1} sum_{m < N_j} M_1^(s1_m) M_2^(s2_m + tau) |f|`
/// with two-sided periodic shifted maximal operators.
pub fn rectangle_majorant(f: &GridFunction, field: &CurveField, j: i32, tau_window: usize) -> Result<GridFunction> {
    require_2d(f)?;
    let grid = *f.grid();
    let (umin, _) = positive_u_range(field, &grid)?;
    let cover = RectangleCover::new(field.alpha(), umin, j, 0)?;
    let n = grid.n();
    let absf = f.moduli();
    let w = tau_window as i64;
    let terms: Vec<(f64, i64, i64)> = (-w..=w)
        .flat_map(|tau| {
            let weight = (1.0 + tau.abs() as f64).powi(-10) / cover.n_j as f64;
            let cover = &cover;
            (0..cover.n_j).map(move |m| {
                (weight, cover.sigma1(m).round() as i64, cover.sigma2(m).round() as i64 + tau)
            })
        })
        .collect();
    // Fixed chunks summed in order keep the result independent of the thread count.
    let partial: Vec<Vec<f64>> = terms
        .par_chunks(16)
        .map(|chunk| {
            let mut acc = vec![0.0; n * n];
            for &(weight, s1, s2) in chunk {
                let m = shifted_max_2d_real(&absf, n, s1, s2, AxisOrder::SecondThenFirst, Boundary::Periodic, Sides::Both);
                acc.iter_mut().zip(&m).for_each(|(a, v)| *a += weight * v);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n * n];
    for p in &partial {
        total.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    GridFunction::from_real(grid, &total)
}

/// Centered periodic strong maximal function `M_1 M_2 |f|` over all axis rectangles.
pub fn strong_maximal(f: &GridFunction) -> Result<GridFunction> {
    require_2d(f)?;
    let n = f.grid().n();
    let a = centered_lines(&f.moduli(), n);
    let t = transpose(&a, n);
    let b = transpose(&centered_lines(&t, n), n);
    GridFunction::from_real(*f.grid(), &b)
}

fn centered_lines(data: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(n).zip(data.par_chunks(n)).for_each(|(o, row)| {
        // three periods so every centered window is a contiguous range
        let mut prefix = vec![0.0; 3 * n + 1];
        for k in 0..3 * n {
            prefix[k + 1] = prefix[k] + row[k % n];
        }
        for (i, oi) in o.iter_mut().enumerate() {
            let mut best = 0.0f64;
            for r in 0..n / 2 {
                let sum = prefix[i + n + r + 1] - prefix[i + n - r];
                best = best.max(sum / (2 * r + 1) as f64);
            }
            *oi = best;
        }
    });
    out
}

fn transpose(data: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    out
}

/// `x -> max over ladder pairs |p.v. int g(x - t) e^{i u1 t + i u2 [t]^alpha} dt / t|`
/// on a 1D grid.
pub fn carleson_sup(
    g: &GridFunction,
    alpha: f64,
    parity: Parity,
    u1_ladder: &[f64],
    u2_ladder: &[f64],
    trunc: &TruncationScheme,
) -> Result<GridFunction> {
    if g.grid().dims() != Dims::One {
        return Err(Error::GridMismatch("carleson_sup needs a 1D grid".into()));
    }
    if u1_ladder.is_empty() || u2_ladder.is_empty() {
        return Err(invalid("ladder", "empty ladder"));
    }
    let grid = *g.grid();
    check_eps(trunc.eps0, grid.side() / 4.0)?;
    let dt = trunc.dt();
    let ts = trunc.positive_nodes();
    let spec = g.spectrum();
    let n = grid.n();
    let pairs: Vec<(f64, f64)> = u1_ladder
        .iter()
        .flat_map(|&a| u2_ladder.iter().map(move |&b| (a, b)))
        .collect();
    let fold_q = engine::fold_count(&grid, dt);
    let fft_q = fold_q.map(|q| crate::grid::plan(q, Direction::Forward));
    let inv = crate::grid::plan(n, Direction::Inverse);
    let best = pairs
        .par_iter()
        .map(|&(u1, u2)| {
            let mut mult = vec![Complex64::new(0.0, 0.0); n];
            let coef = |t: f64| Complex64::cis(u1 * t + u2 * bracket(t, alpha, parity)) * (dt / t);
            match (fold_q, &fft_q) {
                (Some(q), Some(fft)) => {
                    let mut fold = vec![Complex64::new(0.0, 0.0); q];
                    for &t in &ts {
                        for t in [t, -t] {
                            let a = engine::lattice_index(t, dt).rem_euclid(q as i64) as usize;
                            fold[a] += coef(t);
                        }
                    }
                    engine::folded_row(&grid, q, dt, &mut fold, &**fft, &mut mult);
                }
                _ => {
                    for (i, m) in mult.iter_mut().enumerate() {
                        let xi = grid.freq(i);
                        *m = ts
                            .iter()
                            .flat_map(|&t| [t, -t])
                            .map(|t| coef(t) * Complex64::cis(-xi * t))
                            .sum();
                    }
                }
            }
            let mut buf: Vec<Complex64> = spec.iter().zip(&mult).map(|(a, b)| a * b).collect();
            inv.process(&mut buf);
            buf.iter().map(|z| z.norm() / n as f64).collect::<Vec<f64>>()
        })
        .reduce_with(|a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
        .unwrap_or_else(|| vec![0.0; n]);
    GridFunction::from_real(grid, &best)
}
