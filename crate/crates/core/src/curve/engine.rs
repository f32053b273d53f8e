//! Evaluation of weighted sums `sum_j w_j f(x - X_j, y - D_j(z))` over curve nodes.
//!
//! Linear operators sample `f` by exact band-limited (spectral) interpolation.
//! Three paths share that contract: constant fields reduce to a Fourier
//! multiplier, one-variable fields act column-by-column in the mixed
//! `(x, eta)` representation, and general fields evaluate each displaced
//! column by a non-uniform DFT. Maximal operators use periodic bilinear
//! sampling of `|f|`, which keeps them positive and sublinear.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{CurveField, FieldClass};
use crate::grid::{transform_x, transform_y, Direction, GridFunction, TorusGrid};

/// One quadrature node: x-displacement `x`, y-displacement `u(z) p + v(z) x`,
/// weight `w`, curve parameter `t`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Node {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub w: f64,
}

/// Nodes whose x-displacements sit on `(a + 1/2) dx` for integers `a`.
#[derive(Clone, Debug)]
pub(crate) struct NodeSet {
    pub nodes: Vec<Node>,
    pub dx: f64,
}

/// Optional weight factor depending on the node parameter and the local `u`.
pub(crate) type WeightMod<'a> = Option<&'a (dyn Fn(f64, f64) -> f64 + Sync)>;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Applies the node sum to `f` with spectral sampling.
pub(crate) fn linear_apply(
    f: &GridFunction,
    field: &CurveField,
    set: &NodeSet,
    wmod: WeightMod<'_>,
) -> GridFunction {
    let grid = *f.grid();
    let samples = match field.class() {
        FieldClass::Constant(c) => {
            let v = field.v_at(0.0, 0.0);
            match fold_count(&grid, set.dx) {
                Some(q) => {
                    let m = constant_multiplier(&grid, set, c, v, q, wmod);
                    apply_table(f, &m)
                }
                None => mixed(f, field, set, wmod),
            }
        }
        FieldClass::OneVariable => mixed(f, field, set, wmod),
        _ => general(f, field, set, wmod),
    };
    GridFunction::new(grid, samples).expect("engine preserves the grid")
}

/// `L / dx` when it is a positive integer.
pub(crate) fn fold_count(grid: &TorusGrid, dx: f64) -> Option<usize> {
    let q = grid.side() / dx;
    let r = q.round();
    if r >= 1.0 && (q - r).abs() < 1e-9 * r.max(1.0) && r < 1e9 {
        Some(r as usize)
    } else {
        None
    }
}

/// `sum_j c_j e^{-i xi (a_j + 1/2) dx}` for every lattice `xi`, given the
/// node coefficients `c_j` folded modulo `q = L / dx`.
pub(crate) fn folded_row(
    grid: &TorusGrid,
    q: usize,
    dx: f64,
    fold: &mut [Complex64],
    fft: &dyn rustfft::Fft<f64>,
    out: &mut [Complex64],
) {
    fft.process(fold);
    for (i, o) in out.iter_mut().enumerate() {
        let k = grid.wavenumber(i);
        let idx = k.rem_euclid(q as i64) as usize;
        *o = fold[idx] * Complex64::cis(-grid.freq(i) * 0.5 * dx);
    }
}

pub(crate) fn lattice_index(x: f64, dx: f64) -> i64 {
    (x / dx - 0.5).round() as i64
}

/// Fourier multiplier of a constant-field node sum, as an `n x n` table.
pub(crate) fn constant_multiplier(
    grid: &TorusGrid,
    set: &NodeSet,
    c: f64,
    v: f64,
    q: usize,
    wmod: WeightMod<'_>,
) -> Vec<Complex64> {
    let n = grid.n();
    let fft = crate::grid::plan(q, Direction::Forward);
    let idx: Vec<usize> = set
        .nodes
        .iter()
        .map(|nd| lattice_index(nd.x, set.dx).rem_euclid(q as i64) as usize)
        .collect();
    let weights: Vec<f64> = set
        .nodes
        .iter()
        .map(|nd| nd.w * wmod.map_or(1.0, |g| g(nd.t, c)))
        .collect();
    let disp: Vec<f64> = set.nodes.iter().map(|nd| c * nd.p + v * nd.x).collect();
    // Columns of the table are indexed by eta; fill row-major by eta then transpose.
    let mut table = vec![czero(); n * n];
    table
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(ie, col)| {
            let eta = grid.freq(ie);
            let mut fold = vec![czero(); q];
            for ((&k, &w), &d) in idx.iter().zip(&weights).zip(&disp) {
                fold[k] += Complex64::cis(-eta * d) * w;
            }
            folded_row(grid, q, set.dx, &mut fold, &*fft, col);
        });
    crate::grid::transpose_in_place(n, &mut table);
    table
}

fn apply_table(f: &GridFunction, table: &[Complex64]) -> Vec<Complex64> {
    let grid = f.grid();
    let mut spec = f.spectrum();
    for (s, m) in spec.iter_mut().zip(table) {
        *s *= m;
    }
    crate::grid::transform(grid, &mut spec, Direction::Inverse);
    spec
}

/// Groups nodes by the fractional part of `x / h`; returns `(fraction, [(shift, node)])`.
fn group_by_fraction(nodes: &[Node], h: f64) -> Vec<(f64, Vec<(i64, usize)>)> {
    let mut groups: BTreeMap<i64, (f64, Vec<(i64, usize)>)> = BTreeMap::new();
    for (k, nd) in nodes.iter().enumerate() {
        let r = nd.x / h;
        let mut q = r.floor();
        let mut frac = r - q;
        if frac > 1.0 - 1e-10 {
            q += 1.0;
            frac = 0.0;
        }
        let key = (frac * 1e10).round() as i64;
        groups
            .entry(key)
            .or_insert_with(|| (frac, Vec::new()))
            .1
            .push((q as i64, k));
    }
    groups.into_values().collect()
}

/// `e^{-i eta_k d}` in FFT order, by recurrence from the fundamental.
fn phase_row(grid: &TorusGrid, d: f64, out: &mut [Complex64]) {
    let n = grid.n();
    let base = Complex64::cis(-grid.fundamental() * d);
    let mut p = Complex64::new(1.0, 0.0);
    out[0] = p;
    for k in 1..n / 2 {
        p *= base;
        out[k] = p;
        out[n - k] = p.conj();
    }
    p *= base;
    out[n / 2] = p.conj();
}

/// Returns the y-spectrum shifted in x by `frac * h`, i.e. `F(x - frac h, eta)`.
fn shifted_columns(grid: &TorusGrid, full: &[Complex64], frac: f64) -> Vec<Complex64> {
    let n = grid.n();
    let mut s = full.to_vec();
    let shift = frac * grid.spacing();
    s.par_chunks_mut(n).enumerate().for_each(|(ix, row)| {
        let m = Complex64::cis(-grid.freq(ix) * shift) / n as f64;
        row.iter_mut().for_each(|z| *z *= m);
    });
    transform_x(n, &mut s, Direction::Inverse);
    s
}

fn mixed(
    f: &GridFunction,
    field: &CurveField,
    set: &NodeSet,
    wmod: WeightMod<'_>,
) -> Vec<Complex64> {
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.spacing();
    // full: 2D spectrum with x transformed too, reused for every fractional shift.
    let mut full = f.samples().to_vec();
    transform_y(n, &mut full, Direction::Forward);
    transform_x(n, &mut full, Direction::Forward);
    let us: Vec<f64> = (0..n).map(|i| field.u_at(grid.coord(i), 0.0)).collect();
    let vs: Vec<f64> = (0..n).map(|i| field.v_at(grid.coord(i), 0.0)).collect();
    let mut out = vec![czero(); n * n];
    for (frac, members) in group_by_fraction(&set.nodes, h) {
        let cols = shifted_columns(&grid, &full, frac);
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let mut phase = vec![czero(); n];
            let (u, v) = (us[i], vs[i]);
            for &(q, k) in &members {
                let nd = &set.nodes[k];
                let w = nd.w * wmod.map_or(1.0, |g| g(nd.t, u));
                if w == 0.0 {
                    continue;
                }
                phase_row(&grid, u * nd.p + v * nd.x, &mut phase);
                let src = (i as i64 - q).rem_euclid(n as i64) as usize;
                let src = &cols[src * n..(src + 1) * n];
                for ((o, p), s) in row.iter_mut().zip(&phase).zip(src) {
                    *o += p * s * w;
                }
            }
        });
    }
    transform_y(n, &mut out, Direction::Inverse);
    let s = 1.0 / n as f64;
    out.iter_mut().for_each(|z| *z *= s);
    out
}

fn general(
    f: &GridFunction,
    field: &CurveField,
    set: &NodeSet,
    wmod: WeightMod<'_>,
) -> Vec<Complex64> {
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.spacing();
    let half = 0.5 * grid.side();
    let mut full = f.samples().to_vec();
    transform_y(n, &mut full, Direction::Forward);
    transform_x(n, &mut full, Direction::Forward);
    let us = field.sample_u(&grid);
    let vs = field.sample_v(&grid);
    let mut out = vec![czero(); n * n];
    for (frac, members) in group_by_fraction(&set.nodes, h) {
        let cols = shifted_columns(&grid, &full, frac);
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let mut phase = vec![czero(); n];
            for (jy, o) in row.iter_mut().enumerate() {
                let idx = i * n + jy;
                let (u, v) = (us[idx], vs[idx]);
                let y = grid.coord(jy);
                let mut acc = czero();
                for &(q, k) in &members {
                    let nd = &set.nodes[k];
                    let w = nd.w * wmod.map_or(1.0, |g| g(nd.t, u));
                    if w == 0.0 {
                        continue;
                    }
                    // Evaluate the band-limited column at y - D.
                    let target = y - (u * nd.p + v * nd.x) + half;
                    phase_row(&grid, -target, &mut phase);
                    let src = (i as i64 - q).rem_euclid(n as i64) as usize;
                    let src = &cols[src * n..(src + 1) * n];
                    let val: Complex64 = src.iter().zip(&phase).map(|(s, p)| s * p).sum();
                    acc += val * w;
                }
                *o += acc / n as f64;
            }
        });
    }
    out
}

/// Periodic bilinear interpolation on a real `n x n` lattice.
#[derive(Clone, Copy)]
pub(crate) struct Bilinear<'a> {
    pub data: &'a [f64],
    pub n: usize,
    pub inv_h: f64,
    pub half: f64,
}

impl<'a> Bilinear<'a> {
    pub fn new(grid: &TorusGrid, data: &'a [f64]) -> Self {
        Self {
            data,
            n: grid.n(),
            inv_h: 1.0 / grid.spacing(),
            half: 0.5 * grid.side(),
        }
    }

    #[inline]
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let n = self.n as i64;
        let fx = (x + self.half) * self.inv_h;
        let fy = (y + self.half) * self.inv_h;
        let x0 = fx.floor();
        let y0 = fy.floor();
        let ax = fx - x0;
        let ay = fy - y0;
        let i0 = (x0 as i64).rem_euclid(n) as usize;
        let j0 = (y0 as i64).rem_euclid(n) as usize;
        let i1 = if i0 + 1 == self.n { 0 } else { i0 + 1 };
        let j1 = if j0 + 1 == self.n { 0 } else { j0 + 1 };
        let d = self.data;
        let n = self.n;
        let a = d[i0 * n + j0] * (1.0 - ay) + d[i0 * n + j1] * ay;
        let b = d[i1 * n + j0] * (1.0 - ay) + d[i1 * n + j1] * ay;
        a * (1.0 - ax) + b * ax
    }
}

/// Running-sum maximal average over the symmetric node ladder with bilinear sampling.
///
/// `counts` lists, in decreasing order, how many nodes per side each ladder
/// truncation contains; `nodes` are the positive nodes in increasing order.
pub(crate) fn bilinear_maximal(
    grid: &TorusGrid,
    absf: &[f64],
    us: &[f64],
    vs: &[f64],
    nodes: &[f64],
    powers: &[(f64, f64)],
    counts: &[usize],
) -> Vec<f64> {
    let n = grid.n();
    let sampler = Bilinear::new(grid, absf);
    let mut stops = counts.to_vec();
    stops.sort_unstable();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = grid.coord(i);
        for (jy, o) in row.iter_mut().enumerate() {
            let y = grid.coord(jy);
            let idx = i * n + jy;
            let (u, v) = (us[idx], vs[idx]);
            let mut sum = 0.0;
            let mut best = 0.0f64;
            let mut next = 0;
            for (j, (&t, &(pp, pm))) in nodes.iter().zip(powers).enumerate() {
                sum += sampler.at(x - t, y - u * pp - v * t);
                sum += sampler.at(x + t, y - u * pm + v * t);
                if j + 1 == stops[next] {
                    best = best.max(sum / (2 * (j + 1)) as f64);
                    next += 1;
                    if next == stops.len() {
                        break;
                    }
                }
            }
            *o = best;
        }
    });
    out
}
