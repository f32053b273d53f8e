//! Periodic sampled functions on the torus `[-L/2, L/2)^d`, `d` in {1, 2}.
//!
//! Samples are stored x-major: the 2D sample at `(ix, iy)` lives at
//! `ix * n + iy`, so every fixed-x line along y is contiguous. Spectra use
//! the same layout with the unnormalised forward DFT; the inverse divides by
//! `n^d`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dims {
    One,
    Two,
}

impl Dims {
    pub fn count(self) -> usize {
        match self {
            Dims::One => 1,
            Dims::Two => 2,
        }
    }
}

/// A uniform periodic lattice with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid {
    n: usize,
    side: f64,
    dims: Dims,
}

/// Validates and builds a grid; `n_points` must be a power of two and at least 8.
pub fn make_grid(n_points: usize, side_length: f64, dims: usize) -> Result<TorusGrid> {
    let dims = match dims {
        1 => Dims::One,
        2 => Dims::Two,
        d => return Err(invalid("dims", format!("expected 1 or 2, got {d}"))),
    };
    TorusGrid::new(n_points, side_length, dims)
}

impl TorusGrid {
    pub fn new(n: usize, side: f64, dims: Dims) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid("n_points", format!("{n} is not a power of two >= 8")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(invalid("side_length", format!("{side} must be positive")));
        }
        Ok(Self { n, side, dims })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dims.count() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dims.count() as i32)
    }

    /// Physical coordinate of lattice index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.side + i as f64 * self.spacing()
    }

    /// Signed integer wavenumber stored at FFT index `i`, in `-n/2..n/2`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let half = self.n / 2;
        if i < half {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Angular frequency `2 pi k / L` stored at FFT index `i`.
    pub fn freq(&self, i: usize) -> f64 {
        2.0 * PI * self.wavenumber(i) as f64 / self.side
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.freq(i)).collect()
    }

    /// Largest representable angular frequency, `pi n / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.side
    }

    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.side
    }

}

/// Complex samples on a [`TorusGrid`].
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: TorusGrid,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: TorusGrid, value: Complex64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)`; for 1D grids `y` is always 0.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.n;
        let samples = match grid.dims {
            Dims::One => (0..n).map(|i| f(grid.coord(i), 0.0)).collect(),
            Dims::Two => (0..n * n)
                .map(|idx| f(grid.coord(idx / n), grid.coord(idx % n)))
                .collect(),
        };
        Self { grid, samples }
    }

    pub fn from_real_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |x, y| Complex64::new(f(x, y), 0.0))
    }

    pub fn from_real(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Builds a function from unnormalised DFT coefficients.
    pub fn from_spectrum(grid: TorusGrid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        transform(&grid, &mut coeffs, Direction::Inverse);
        Ok(Self {
            grid,
            samples: coeffs,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        match self.grid.dims {
            Dims::One => self.samples[ix],
            Dims::Two => self.samples[ix * self.grid.n + iy],
        }
    }

    /// Unnormalised forward DFT with the same index layout as the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.samples.clone();
        transform(&self.grid, &mut buf, Direction::Forward);
        buf
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    pub fn re(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("operands live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Applies the Fourier multiplier `m(xi, eta)`; `eta = 0` on 1D grids.
    pub fn apply_multiplier(&self, m: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let grid = self.grid;
        let n = grid.n;
        let mut spec = self.spectrum();
        match grid.dims {
            Dims::One => {
                for (i, c) in spec.iter_mut().enumerate() {
                    *c *= m(grid.freq(i), 0.0);
                }
            }
            Dims::Two => {
                let etas = grid.frequencies();
                for (ix, row) in spec.chunks_mut(n).enumerate() {
                    let xi = grid.freq(ix);
                    for (c, &eta) in row.iter_mut().zip(&etas) {
                        *c *= m(xi, eta);
                    }
                }
            }
        }
        transform(&grid, &mut spec, Direction::Inverse);
        Self {
            grid,
            samples: spec,
        }
    }

    /// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the sup norm.
    pub fn norm_lp(&self, p: f64) -> Result<f64> {
        norm_lp(self, p)
    }
}

/// `(cell volume * sum |f|^p)^{1/p}`, or `max |f|` for `p = inf`.
pub fn norm_lp(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", format!("{p} is below 1")));
    }
    if f.samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(invalid("f", "non-finite sample"));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    Ok(lp_of_moduli(f.samples.iter().map(|z| z.norm()), p, f.grid.cell_volume()))
}

pub(crate) fn lp_of_moduli(values: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0, f64::max);
    }
    let sum: f64 = if p == 2.0 {
        values.map(|v| v * v).sum()
    } else {
        values.map(|v| v.powf(p)).sum()
    };
    (cell * sum).powf(1.0 / p)
}

/// Band-limited translate `f(x - dx, y - dy)`; exact for trigonometric polynomials.
pub fn spectral_shift(f: &GridFunction, dx: f64, dy: f64) -> GridFunction {
    f.apply_multiplier(|xi, eta| Complex64::cis(-(xi * dx + eta * dy)))
}

/// Frequency selection for [`random_field`]; all bounds are angular frequencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Band {
    /// `2^k <= |(xi, eta)| <= 2^(k+1)`, the plateau of the annulus projection.
    Annulus { k: f64 },
    /// `xi in [xi.0, xi.1]` and `eta in [eta.0, eta.1]`; `eta` ignored in 1D.
    Rectangle { xi: (f64, f64), eta: (f64, f64) },
    /// `|xi| <= xi_max` and `|eta| <= eta_max`.
    Centered { xi_max: f64, eta_max: f64 },
}

impl Band {
    fn contains(&self, xi: f64, eta: f64, dims: Dims) -> bool {
        const SLACK: f64 = 1e-12;
        match *self {
            Band::Annulus { k } => {
                let r = xi.hypot(eta) / 2f64.powf(k);
                (1.0 - SLACK..=2.0 + SLACK).contains(&r)
            }
            Band::Rectangle { xi: (a, b), eta: (c, d) } => {
                let in_xi = xi >= a - SLACK && xi <= b + SLACK;
                in_xi && (dims == Dims::One || (eta >= c - SLACK && eta <= d + SLACK))
            }
            Band::Centered { xi_max, eta_max } => {
                xi.abs() <= xi_max + SLACK && (dims == Dims::One || eta.abs() <= eta_max + SLACK)
            }
        }
    }
}

/// SplitMix64 finaliser; derives independent stream keys from a seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard complex Gaussian keyed by `(seed, kx, ky)`, independent of grid size.
pub(crate) fn keyed_gaussian(seed: u64, kx: i64, ky: i64) -> Complex64 {
    let key = ((kx as u64) << 32) ^ (ky as u64 & 0xFFFF_FFFF);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random trigonometric polynomial `sum_k c_k e^{i 2 pi k.(x + L/2) / L}` with
/// i.i.d. standard complex Gaussian `c_k` for the wavenumbers `k` in `band`.
///
/// Each `c_k` depends only on the seed and `k`, so refining the grid at fixed
/// side length samples the same function.
pub fn random_field(grid: TorusGrid, seed: u64, band: Band) -> Result<GridFunction> {
    let n = grid.n;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut hits = 0usize;
    let scale = grid.len() as f64;
    match grid.dims {
        Dims::One => {
            for (i, c) in coeffs.iter_mut().enumerate() {
                if band.contains(grid.freq(i), 0.0, Dims::One) {
                    *c = keyed_gaussian(seed, grid.wavenumber(i), 0) * scale;
                    hits += 1;
                }
            }
        }
        Dims::Two => {
            for (idx, c) in coeffs.iter_mut().enumerate() {
                let (ix, iy) = (idx / n, idx % n);
                if band.contains(grid.freq(ix), grid.freq(iy), Dims::Two) {
                    *c = keyed_gaussian(seed, grid.wavenumber(ix), grid.wavenumber(iy)) * scale;
                    hits += 1;
                }
            }
        }
    }
    if hits == 0 {
        return Err(Error::EmptyBand);
    }
    GridFunction::from_spectrum(grid, coeffs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

pub(crate) fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    }
}

/// Full transform over every axis of the grid (inverse is normalised).
pub(crate) fn transform(grid: &TorusGrid, data: &mut [Complex64], dir: Direction) {
    match grid.dims {
        Dims::One => {
            plan(grid.n, dir).process(data);
        }
        Dims::Two => {
            transform_y(grid.n, data, dir);
            transform_x(grid.n, data, dir);
        }
    }
    if dir == Direction::Inverse {
        let s = 1.0 / grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}

/// Unnormalised transform along y (the contiguous axis) of an `n x n` array.
pub(crate) fn transform_y(n: usize, data: &mut [Complex64], dir: Direction) {
    plan(n, dir).process(data);
}

/// Unnormalised transform along x (the strided axis) of an `n x n` array.
pub(crate) fn transform_x(n: usize, data: &mut [Complex64], dir: Direction) {
    transpose_in_place(n, data);
    plan(n, dir).process(data);
    transpose_in_place(n, data);
}

pub(crate) fn transpose_in_place(n: usize, data: &mut [Complex64]) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize, side: f64) -> TorusGrid {
        make_grid(n, side, 2).unwrap()
    }

    #[test]
    fn lattice_matches_definition() {
        let g = make_grid(8, 1.0, 1).unwrap();
        let mut ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        ks.sort();
        assert_eq!(ks, (-4..4).collect::<Vec<_>>());
        for i in 0..8 {
            assert!((g.freq(i) - 2.0 * PI * g.wavenumber(i) as f64).abs() < 1e-15);
        }
        let g2 = make_grid(256, 16.0, 2).unwrap();
        assert_eq!(g2.len(), 65536);
        assert_eq!(g2.spacing(), 1.0 / 16.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(7, 1.0, 1).is_err());
        assert!(make_grid(4, 1.0, 1).is_err());
        assert!(make_grid(8, 1.0, 3).is_err());
        assert!(make_grid(8, -1.0, 2).is_err());
    }

    #[test]
    fn unit_mass_and_zero_norms() {
        let g = grid2(32, 1.0);
        let one = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        assert!((one.norm_lp(2.0).unwrap() - 1.0).abs() < 1e-14);
        let zero = GridFunction::zeros(g);
        for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            assert_eq!(zero.norm_lp(p).unwrap(), 0.0);
        }
        assert!(one.norm_lp(0.5).is_err());
    }

    #[test]
    fn half_indicator_l1_matches_direct_sum() {
        let g = grid2(16, 2.0);
        let f = GridFunction::from_real_fn(g, |x, _| if x < 0.0 { 1.0 } else { 0.0 });
        // oracle: count cells and multiply by the cell volume
        let count = (0..16).filter(|&i| g.coord(i) < 0.0).count() * 16;
        let expected = count as f64 * g.cell_volume();
        assert!((f.norm_lp(1.0).unwrap() - expected).abs() < 1e-13);
        assert!((expected - 0.5 * 4.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = make_grid(8, 1.0, 1).unwrap();
        let mut s = vec![Complex64::new(0.0, 0.0); 8];
        s[3] = Complex64::new(f64::NAN, 0.0);
        let f = GridFunction::new(g, s).unwrap();
        assert!(f.norm_lp(2.0).is_err());
    }

    #[test]
    fn shift_identity_plane_wave_and_period() {
        let g = grid2(32, 4.0);
        let f = random_field(g, 3, Band::Centered { xi_max: 10.0, eta_max: 10.0 }).unwrap();
        assert!(spectral_shift(&f, 0.0, 0.0).max_abs_diff(&f) < 1e-13);
        assert!(spectral_shift(&f, 4.0, -4.0).max_abs_diff(&f) < 1e-12);

        let xi0 = 3.0 * g.fundamental();
        let wave = GridFunction::from_fn(g, |x, _| Complex64::cis(xi0 * x));
        let a = 0.37;
        let shifted = spectral_shift(&wave, a, 0.0);
        let expected = wave.scale(Complex64::cis(-xi0 * a));
        assert!(shifted.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn shifts_compose_additively() {
        let g = grid2(32, 3.0);
        let f = random_field(g, 11, Band::Centered { xi_max: 20.0, eta_max: 20.0 }).unwrap();
        let two = spectral_shift(&spectral_shift(&f, 0.3, -0.1), 0.05, 0.7);
        let one = spectral_shift(&f, 0.35, 0.6);
        assert!(two.max_abs_diff(&one) < 1e-12);
    }

    #[test]
    fn parseval() {
        let g = grid2(64, 5.0);
        let f = random_field(g, 1, Band::Centered { xi_max: 30.0, eta_max: 30.0 }).unwrap();
        let space = f.norm_lp(2.0).unwrap();
        let coeff: f64 = f.spectrum().iter().map(|c| c.norm_sqr()).sum();
        // sum |f|^2 = (1/N^2) sum |c|^2 for the unnormalised DFT
        let spectral = (g.cell_volume() * coeff / g.len() as f64).sqrt();
        assert!((space - spectral).abs() / space < 1e-10);
    }

    #[test]
    fn round_trip_is_tight() {
        let g = grid2(32, 1.0);
        let f = GridFunction::from_fn(g, |x, y| Complex64::new((3.0 * x).sin() + y * y, x * y));
        let back = GridFunction::from_spectrum(g, f.spectrum()).unwrap();
        let rel = back.sub(&f).unwrap().norm_lp(2.0).unwrap() / f.norm_lp(2.0).unwrap();
        assert!(rel < 1e-12);
    }

    #[test]
    fn random_field_is_deterministic_and_band_limited() {
        let g = grid2(64, 8.0);
        let a = random_field(g, 42, Band::Annulus { k: 3.0 }).unwrap();
        let b = random_field(g, 42, Band::Annulus { k: 3.0 }).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = random_field(g, 43, Band::Annulus { k: 3.0 }).unwrap();
        assert!(a.max_abs_diff(&c) > 1e-3);
        for (i, z) in a.spectrum().iter().enumerate() {
            let r = g.freq(i / 64).hypot(g.freq(i % 64));
            if !(8.0 - 1e-9..=16.0 + 1e-9).contains(&r) {
                assert!(z.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn single_frequency_band_gives_plane_wave() {
        let g = grid2(16, 2.0 * PI);
        let f = random_field(g, 5, Band::Rectangle { xi: (2.0, 2.0), eta: (-1.0, -1.0) }).unwrap();
        let amp = f.at(0, 0);
        let expected = GridFunction::from_fn(g, |x, y| {
            amp * Complex64::cis(2.0 * (x + PI) - (y + PI))
        });
        assert!(f.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn empty_band_is_rejected() {
        let g = grid2(16, 1.0);
        let r = random_field(g, 1, Band::Annulus { k: -5.0 });
        assert!(matches!(r, Err(Error::EmptyBand)));
    }

    #[test]
    fn refinement_preserves_random_field() {
        let coarse = grid2(32, 4.0);
        let fine = grid2(64, 4.0);
        let band = Band::Centered { xi_max: 8.0, eta_max: 8.0 };
        let a = random_field(coarse, 9, band).unwrap();
        let b = random_field(fine, 9, band).unwrap();
        for ix in 0..32 {
            for iy in 0..32 {
                assert!((a.at(ix, iy) - b.at(2 * ix, 2 * iy)).norm() < 1e-12);
            }
        }
    }
}
