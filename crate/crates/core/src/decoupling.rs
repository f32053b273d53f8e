//! Parabola extension operators, cap decompositions, and the decoupling,
//! bilinear restriction and local smoothing ratios measured with them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::dilation_multiplier;
use crate::cutoff::{pow2, project_annulus};
use crate::error::{invalid, Error, Result};
use crate::grid::{keyed_gaussian, lp_of_moduli, mix_seed, random_field, transform, Band, Dims, Direction, GridFunction, TorusGrid};
use crate::quadrature::{gauss_legendre, phase_panels};

const ORDER: usize = 16;
const BUDGET: f64 = 20.0;
/// Recurrence steps between exact re-evaluations of the row phase.
const REANCHOR: usize = 128;

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// The caps `[m delta, (m + 1) delta)` of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CapDecomposition {
    delta: f64,
    caps: Vec<(f64, f64)>,
}

impl CapDecomposition {
    pub fn new(delta: f64) -> Result<Self> {
        let count = 1.0 / delta;
        if !(delta > 0.0 && delta <= 1.0) || count.fract() != 0.0 || !(count as u64).is_power_of_two() {
            return Err(invalid("delta", format!("{delta} is not a dyadic number in (0, 1]")));
        }
        let caps = (0..count as usize)
            .map(|m| (m as f64 * delta, (m + 1) as f64 * delta))
            .collect();
        Ok(Self { delta, caps })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn caps(&self) -> &[(f64, f64)] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    /// The cap containing `xi`; `1` belongs to the last cap.
    pub fn cap_of(&self, xi: f64) -> Option<usize> {
        if !(0.0..=1.0).contains(&xi) {
            return None;
        }
        Some(((xi / self.delta) as usize).min(self.caps.len() - 1))
    }
}

/// `w_B(x) = (1 + |x - c_B| / R)^{-N}` with `R = delta^{-2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecouplingWeight {
    pub center: (f64, f64),
    pub radius: f64,
    pub decay_power: i32,
    pub cutoff_radius: f64,
}

impl DecouplingWeight {
    /// Radius `delta^{-2}`, decay power 10, cutoff at four radii.
    pub fn new(center: (f64, f64), delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid("delta", format!("{delta} is outside (0, 1]")));
        }
        let radius = delta.powi(-2);
        Ok(Self {
            center,
            radius,
            decay_power: 10,
            cutoff_radius: 4.0 * radius,
        })
    }

    pub fn value(&self, x: (f64, f64)) -> f64 {
        let d = (x.0 - self.center.0).hypot(x.1 - self.center.1);
        (1.0 + d / self.radius).powi(-self.decay_power)
    }
}

/// A coefficient function on the frequency axis.
#[derive(Clone)]
pub enum Density {
    Function(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
    /// Piecewise constant on equal cells of `[start, end]`, zero outside.
    Steps { start: f64, end: f64, values: Vec<Complex64> },
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Function(_) => f.write_str("Density::Function"),
            Density::Steps { start, end, values } => f
                .debug_struct("Density::Steps")
                .field("start", start)
                .field("end", end)
                .field("cells", &values.len())
                .finish(),
        }
    }
}

impl Density {
    pub fn function(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Density::Function(Arc::new(f))
    }

    pub fn steps(start: f64, end: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(end > start) || values.is_empty() {
            return Err(invalid("values", "need a nonempty interval and at least one cell"));
        }
        Ok(Density::Steps { start, end, values })
    }

    /// Independent standard complex Gaussian values on `cells` equal cells.
    pub fn gaussian(start: f64, end: f64, cells: usize, seed: u64) -> Result<Self> {
        let values = (0..cells).map(|c| keyed_gaussian(seed, c as i64, 0)).collect();
        Self::steps(start, end, values)
    }

    pub fn at(&self, xi: f64) -> Complex64 {
        match self {
            Density::Function(f) => f(xi),
            Density::Steps { start, end, values } => {
                if xi < *start || xi > *end {
                    return Complex64::new(0.0, 0.0);
                }
                let w = (end - start) / values.len() as f64;
                values[(((xi - start) / w) as usize).min(values.len() - 1)]
            }
        }
    }

    /// `[a, b]` split at the cell edges that fall strictly inside it.
    fn pieces(&self, a: f64, b: f64) -> Vec<f64> {
        let mut cuts = vec![a];
        if let Density::Steps { start, end, values } = self {
            let w = (end - start) / values.len() as f64;
            for c in 0..=values.len() {
                let e = start + c as f64 * w;
                if e > a && e < b {
                    cuts.push(e);
                }
            }
        }
        cuts.push(b);
        cuts
    }

    /// `(int_a^b |g|^2)^{1/2}`.
    pub fn l2_norm(&self, interval: (f64, f64), quad_depth: usize) -> f64 {
        weighted_nodes(self, interval, 0.0, quad_depth)
            .iter()
            .map(|&(xi, c)| (c * self.at(xi).conj()).re)
            .sum::<f64>()
            .sqrt()
    }
}

/// Gauss–Legendre nodes `(xi, weight * g(xi))` on `[a, b]`, aligned with the
/// cells of `g` and fine enough for phases moving `rate` radians per unit.
fn weighted_nodes(g: &Density, (a, b): (f64, f64), rate: f64, quad_depth: usize) -> Vec<(f64, Complex64)> {
    let (gx, gw) = gauss_legendre(ORDER);
    let per_len = quad_depth.div_ceil(ORDER) as f64 / (b - a);
    let mut nodes = Vec::new();
    for piece in g.pieces(a, b).windows(2) {
        let min_panels = (per_len * (piece[1] - piece[0])).ceil().max(1.0) as usize;
        let breaks = phase_panels(piece[0], piece[1], min_panels, BUDGET, |_| rate);
        for win in breaks.windows(2) {
            let (mid, half) = (0.5 * (win[0] + win[1]), 0.5 * (win[1] - win[0]));
            for (x, w) in gx.iter().zip(&gw) {
                let xi = mid + half * x;
                nodes.push((xi, g.at(xi) * (half * w)));
            }
        }
    }
    nodes
}

fn weights_only(interval: (f64, f64), rate: f64, quad_depth: usize) -> Vec<(f64, Complex64)> {
    weighted_nodes(&Density::function(|_| Complex64::new(1.0, 0.0)), interval, rate, quad_depth)
}

/// `E_cap g(x) = int_cap g(xi) e^{i x_1 xi + i x_2 xi^2} d xi` at each point.
pub fn extension(g: &Density, cap: (f64, f64), points: &[(f64, f64)], quad_depth: usize) -> Result<Vec<Complex64>> {
    if !(cap.1 > cap.0) {
        return Err(invalid("cap", format!("[{}, {}] is empty", cap.0, cap.1)));
    }
    let reach = cap.0.abs().max(cap.1.abs());
    let rate = points
        .iter()
        .map(|&(x1, x2)| x1.abs() + 2.0 * x2.abs() * reach)
        .fold(0.0, f64::max);
    let nodes = weighted_nodes(g, cap, rate, quad_depth);
    Ok(points
        .par_iter()
        .map(|&(x1, x2)| nodes.iter().map(|&(xi, c)| c * cis(x1 * xi + x2 * xi * xi)).sum())
        .collect())
}

/// Square lattice `center + spacing (i, j)` restricted to the closed disk of
/// the given radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub center: (f64, f64),
    pub spacing: f64,
    pub radius: f64,
}

impl Lattice {
    pub fn new(center: (f64, f64), spacing: f64, radius: f64) -> Result<Self> {
        if !(spacing > 0.0 && radius >= 0.0) {
            return Err(invalid("spacing", "spacing must be positive and radius nonnegative"));
        }
        Ok(Self { center, spacing, radius })
    }

    fn half(&self) -> i64 {
        (self.radius / self.spacing + 1e-9).floor() as i64
    }

    fn coord(&self, i: i64, j: i64) -> (f64, f64) {
        (self.center.0 + i as f64 * self.spacing, self.center.1 + j as f64 * self.spacing)
    }

    fn inside(&self, i: i64, j: i64) -> bool {
        let r = self.radius / self.spacing + 1e-9;
        ((i * i + j * j) as f64) <= r * r
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let h = self.half();
        let mut pts = Vec::new();
        for i in -h..=h {
            for j in -h..=h {
                if self.inside(i, j) {
                    pts.push(self.coord(i, j));
                }
            }
        }
        pts
    }

    /// Largest `|x_1| + 2 |x_2| reach` over the lattice.
    fn rate(&self, reach: f64) -> f64 {
        let m = self.half() as f64 * self.spacing;
        self.center.0.abs() + m + 2.0 * (self.center.1.abs() + m) * reach
    }
}

/// Values of `E` for each node set along lattice row `j`, stored as
/// `out[set * width + (i + h)]`.
fn row_values(sets: &[Vec<(f64, Complex64)>], lat: &Lattice, j: i64, out: &mut [Complex64]) {
    let h = lat.half();
    let width = (2 * h + 1) as usize;
    let (x1_start, x2) = lat.coord(-h, j);
    for (s, set) in sets.iter().enumerate() {
        let row = &mut out[s * width..(s + 1) * width];
        row.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for &(xi, c) in set {
            let step = cis(lat.spacing * xi);
            for (chunk_no, chunk) in row.chunks_mut(REANCHOR).enumerate() {
                let x1 = x1_start + (chunk_no * REANCHOR) as f64 * lat.spacing;
                let mut z = c * cis(x1 * xi + x2 * xi * xi);
                for o in chunk {
                    *o += z;
                    z *= step;
                }
            }
        }
    }
}

/// Where the decoupling coefficients come from.
#[derive(Clone, Debug)]
pub enum CoefficientModel {
    Given(Density),
    /// Independent standard complex Gaussian values per cap; the result is
    /// the largest ratio over `trials` draws.
    Gaussian { trials: usize, seed: u64 },
}

/// `||E_{[0,1]} g||_{L^p(w_B)} / (sum_caps ||E_cap g||^2_{L^p(w_B)})^{1/2}` on
/// the unit lattice over the cutoff disk of `w_B`, centred at the origin.
/// Gaussian models report the largest ratio over their trials.
pub fn decoupling_ratio(model: &CoefficientModel, delta: f64, p: f64, quad_depth: usize) -> Result<f64> {
    Ok(decoupling_ratios(model, delta, p, quad_depth)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Like [`decoupling_ratio`], one ratio per trial (a single entry for `Given`).
pub fn decoupling_ratios(model: &CoefficientModel, delta: f64, p: f64, quad_depth: usize) -> Result<Vec<f64>> {
    if !(2.0..=4.0).contains(&p) {
        return Err(invalid("p", format!("{p} is outside [2, 4]")));
    }
    let caps = CapDecomposition::new(delta)?;
    let weight = DecouplingWeight::new((0.0, 0.0), delta)?;
    let lat = Lattice::new((0.0, 0.0), 1.0, weight.cutoff_radius)?;
    let rate = lat.rate(1.0);
    let (sets, coeffs): (Vec<_>, Vec<Vec<Complex64>>) = match model {
        CoefficientModel::Given(g) => (
            caps.caps().iter().map(|&c| weighted_nodes(g, c, rate, quad_depth)).collect(),
            vec![vec![Complex64::new(1.0, 0.0); caps.len()]],
        ),
        CoefficientModel::Gaussian { trials, seed } => {
            if *trials == 0 {
                return Err(invalid("trials", "must be positive"));
            }
            let coeffs = (0..*trials)
                .map(|t| {
                    let s = mix_seed(*seed, t as u64);
                    (0..caps.len()).map(|c| keyed_gaussian(s, c as i64, 0)).collect()
                })
                .collect();
            (caps.caps().iter().map(|&c| weights_only(c, rate, quad_depth)).collect(), coeffs)
        }
    };
    let h = lat.half();
    let width = (2 * h + 1) as usize;
    let ncap = caps.len();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (-h..=h)
        .into_par_iter()
        .map(|j| {
            let mut vals = vec![Complex64::new(0.0, 0.0); ncap * width];
            row_values(&sets, &lat, j, &mut vals);
            let mut cap_acc = vec![0.0; ncap];
            let mut num = vec![0.0; coeffs.len()];
            for i in -h..=h {
                if !lat.inside(i, j) {
                    continue;
                }
                let w = weight.value(lat.coord(i, j));
                let col = (i + h) as usize;
                for (c, acc) in cap_acc.iter_mut().enumerate() {
                    *acc += w * vals[c * width + col].norm().powf(p);
                }
                for (t, cs) in coeffs.iter().enumerate() {
                    let total: Complex64 = cs.iter().enumerate().map(|(c, k)| k * vals[c * width + col]).sum();
                    num[t] += w * total.norm().powf(p);
                }
            }
            (cap_acc, num)
        })
        .collect();
    let mut cap_acc = vec![0.0; ncap];
    let mut num = vec![0.0; coeffs.len()];
    for (c, n) in &rows {
        cap_acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        num.iter_mut().zip(n).for_each(|(a, b)| *a += b);
    }
    let cap_norm_sq: Vec<f64> = cap_acc.iter().map(|a| a.powf(2.0 / p)).collect();
    coeffs
        .iter()
        .zip(&num)
        .map(|(cs, n)| {
            let den: f64 = cs.iter().zip(&cap_norm_sq).map(|(k, c)| k.norm_sqr() * c).sum::<f64>().sqrt();
            if den == 0.0 {
                return Err(invalid("g", "every cap piece vanishes"));
            }
            Ok(n.powf(1.0 / p) / den)
        })
        .collect()
}

/// `|| |E_{R1} g1 E_{R2} g2|^{1/2} ||_{L^4} / (||g1||_2 ||g2||_2)^{1/2}` with the
/// `L^4` norm a Riemann sum over `lattice`.
pub fn bilinear_ratio(
    g1: &Density,
    g2: &Density,
    r1: (f64, f64),
    r2: (f64, f64),
    nu: f64,
    lattice: &Lattice,
    quad_depth: usize,
) -> Result<f64> {
    if !(r1.1 > r1.0 && r2.1 > r2.0) {
        return Err(invalid("R", "intervals must be nonempty"));
    }
    let separation = (r2.0 - r1.1).max(r1.0 - r2.1);
    if !(separation >= nu) {
        return Err(Error::Transversality { separation, nu });
    }
    let n1 = g1.l2_norm(r1, quad_depth);
    let n2 = g2.l2_norm(r2, quad_depth);
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(0.0);
    }
    let reach = [r1.0, r1.1, r2.0, r2.1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rate = lattice.rate(reach);
    let sets = vec![
        weighted_nodes(g1, r1, rate, quad_depth),
        weighted_nodes(g2, r2, rate, quad_depth),
    ];
    let h = lattice.half();
    let width = (2 * h + 1) as usize;
    let rows: Vec<f64> = (-h..=h)
        .into_par_iter()
        .map(|j| {
            let mut vals = vec![Complex64::new(0.0, 0.0); 2 * width];
            row_values(&sets, lattice, j, &mut vals);
            (-h..=h)
                .filter(|&i| lattice.inside(i, j))
                .map(|i| {
                    let col = (i + h) as usize;
                    (vals[col] * vals[width + col]).norm_sqr()
                })
                .sum()
        })
        .collect();
    let area = lattice.spacing * lattice.spacing;
    let l4 = (rows.iter().sum::<f64>() * area).powf(0.25);
    Ok(l4 / (n1 * n2).sqrt())
}

/// `u`-ladder of `samples` equally spaced points in `[1, 2]`.
pub fn u_ladder(samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![1.0],
        m => (0..m).map(|i| 1.0 + i as f64 / (m - 1) as f64).collect(),
    }
}

/// Node count over `[1/2, 3]` resolving `u t^alpha` phases for frequencies
/// up to `radius`, at scales `u <= u_max`.
pub fn dilation_depth(radius: f64, alpha: f64, u_max: f64) -> usize {
    let rate = radius * u_max * (1.0 + alpha * 3f64.powf(alpha - 1.0));
    let dt = std::f64::consts::PI / (2.0 * rate);
    ((2.5 / dt).ceil() as usize).max(64)
}

/// `|| sup_{u in ladder} |A_u f| ||_p / ||f||_p` for each function in `fs`,
/// where `A_u f(x, y) = int f(x - u t, y - u t^alpha) w(t) dt` is the dilation
/// average.
pub fn local_smoothing_ratios(fs: &[GridFunction], alpha: f64, ladder: &[f64], p: f64, depth: usize) -> Result<Vec<f64>> {
    let Some(first) = fs.first() else {
        return Ok(Vec::new());
    };
    let grid = *first.grid();
    if grid.dims() != Dims::Two || fs.iter().any(|f| *f.grid() != grid) {
        return Err(Error::GridMismatch("local smoothing needs 2D functions on one grid".into()));
    }
    if ladder.is_empty() {
        return Err(invalid("ladder", "empty"));
    }
    let spectra: Vec<Vec<Complex64>> = fs.iter().map(|f| f.spectrum()).collect();
    let mut sup = vec![vec![0.0f64; grid.len()]; fs.len()];
    for &u in ladder {
        let table = dilation_multiplier(&grid, alpha, u, depth)?;
        sup.par_iter_mut().zip(&spectra).for_each(|(best, spec)| {
            let mut data: Vec<Complex64> = spec.iter().zip(&table).map(|(a, b)| a * b).collect();
            transform(&grid, &mut data, Direction::Inverse);
            for (b, z) in best.iter_mut().zip(&data) {
                *b = b.max(z.norm());
            }
        });
    }
    let cell = grid.cell_volume();
    fs.iter()
        .zip(&sup)
        .map(|(f, best)| {
            let den = f.norm_lp(p)?;
            if den == 0.0 {
                return Err(Error::TrivialFamily);
            }
            Ok(lp_of_moduli(best.iter().copied(), p, cell) / den)
        })
        .collect()
}

/// Largest local smoothing ratio over `trials` random fields on the
/// frequency annulus `2^k`, projected by `P_k`, with `u_samples` ladder points.
pub fn local_smoothing_decay(
    k: i32,
    p: f64,
    alpha: f64,
    u_samples: usize,
    grid: TorusGrid,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let ratios = local_smoothing_trials(k, p, alpha, u_samples, grid, trials, seed)?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// The per-trial ratios behind [`local_smoothing_decay`].
pub fn local_smoothing_trials(
    k: i32,
    p: f64,
    alpha: f64,
    u_samples: usize,
    grid: TorusGrid,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(p > 2.0) {
        return Err(invalid("p", format!("{p} must exceed 2")));
    }
    let needed = pow2(k as f64) / 8.0;
    if !(u_samples as f64 > needed) {
        return Err(Error::UnderResolvedLadder { samples: u_samples, needed });
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let fs: Vec<GridFunction> = (0..trials)
        .map(|t| {
            let f = random_field(grid, mix_seed(seed, t as u64), Band::Annulus { k: k as f64 })?;
            project_annulus(&f, k as f64)
        })
        .collect::<Result<_>>()?;
    let depth = dilation_depth(3.0 * pow2(k as f64), alpha, 2.0);
    local_smoothing_ratios(&fs, alpha, &u_ladder(u_samples), p, depth)
}
