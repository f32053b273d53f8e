//! Oscillatory integrals evaluated by direct quadrature: the `T T*` kernel
//! `I_xi`, a van der Corput baseline, the parabolic multipliers `m^j_k`,
//! `m~^j_k`, and the one-dimensional annulus operator.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::{CurveField, Parity};
use crate::cutoff::{base_bump, pow2, psi, psi0};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_exponent, FitResult};
use crate::grid::{Dims, GridFunction};
use crate::quadrature::{gauss_laguerre, gauss_legendre, panel_sum, phase_panels};

const ORDER: usize = 16;
/// Radians of phase per 16-node panel.
const BUDGET: f64 = 20.0;

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Parameters of `I_xi`; `lambda = alpha / 4` is the decay exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatoryKernelParams {
    pub alpha: f64,
    pub l: u32,
    pub h: f64,
    pub w: f64,
    pub xi: f64,
}

impl OscillatoryKernelParams {
    pub fn new(alpha: f64, l: u32, h: f64, w: f64, xi: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 || alpha == 2.0 {
            return Err(invalid("alpha", format!("{alpha} must be positive and not 1 or 2")));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(invalid("h", format!("{h} is outside (0, 1]")));
        }
        if !(w.is_finite() && xi.is_finite()) {
            return Err(invalid("xi", "w and xi must be finite"));
        }
        Ok(Self { alpha, l, h, w, xi })
    }

    pub fn lambda(&self) -> f64 {
        self.alpha / 4.0
    }

    pub fn with_xi(self, xi: f64) -> Self {
        Self { xi, ..self }
    }

    /// `[a, b]` where both `eta` and `h eta - xi` lie in `[1/2, 2]`.
    fn support(&self) -> Option<(f64, f64)> {
        let a = 0.5f64.max((0.5 + self.xi) / self.h);
        let b = 2.0f64.min((2.0 + self.xi) / self.h);
        (a < b).then_some((a, b))
    }

    fn amplitude(&self, eta: f64) -> f64 {
        let s = self.h * eta - self.xi;
        if s <= 0.0 {
            return 0.0;
        }
        psi0(eta) / eta * psi0(s) / s
    }

    fn phase_rate(&self, eta: f64) -> f64 {
        let s = (self.h * eta - self.xi).max(0.0);
        let a = self.alpha;
        self.w + pow2(a * self.l as f64) * a * (eta.powf(a - 1.0) - self.h * s.powf(a - 1.0))
    }

    fn panels(&self, a: f64, b: f64, quad_depth: usize) -> Vec<f64> {
        phase_panels(a, b, quad_depth.div_ceil(ORDER), BUDGET, |eta| self.phase_rate(eta))
    }
}

/// `|int e^{i(w eta + 2^{alpha l} eta^alpha - 2^{alpha l} (h eta - xi)^alpha)}
/// psi(eta)/eta psi(h eta - xi)/(h eta - xi) d eta|`, with `psi` the
/// Littlewood–Paley bump on the positive axis.
///
/// `quad_depth` is the minimum node count over the support; panels are
/// refined further wherever the phase moves faster than a few radians per node.
pub fn kernel_i_xi(params: &OscillatoryKernelParams, quad_depth: usize) -> f64 {
    let Some((a, b)) = params.support() else {
        return 0.0;
    };
    let scale = pow2(params.alpha * params.l as f64);
    let (al, h, xi, w) = (params.alpha, params.h, params.xi, params.w);
    let breaks = params.panels(a, b, quad_depth);
    let Some(m) = integer_power(al) else {
        return panel_sum(&breaks, ORDER, |eta| {
            let s = h * eta - xi;
            cis(w * eta + scale * (eta.powf(al) - s.powf(al))) * params.amplitude(eta)
        })
        .norm();
    };
    // Integer powers: nodes and phases in double-double, since at large `l`
    // a node displaced by one ulp already moves the phase visibly.
    exact_node_sum(&breaks, |eta| {
        let amp = params.amplitude(eta.0);
        if amp == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        cis(dd::kernel_phase(eta, h, xi, w, m, scale)) * amp
    })
    .norm()
}

/// [`panel_sum`] with node positions carried in double-double.
fn exact_node_sum(breaks: &[f64], f: impl Fn(dd::Dd) -> Complex64) -> Complex64 {
    let (gx, gw) = gauss_legendre(ORDER);
    let mut total = Complex64::new(0.0, 0.0);
    for win in breaks.windows(2) {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &wt) in gx.iter().zip(&gw) {
            acc += f(dd::node(win[0], win[1], x)) * wt;
        }
        total += acc * (0.5 * (win[1] - win[0]));
    }
    total
}

fn integer_power(alpha: f64) -> Option<u32> {
    (alpha.fract() == 0.0 && alpha > 0.0 && alpha <= 16.0).then_some(alpha as u32)
}

/// Double-double arithmetic for phases far beyond `2 pi`, reduced exactly
/// enough that rounding does not turn into quadrature noise.
mod dd {
    #[derive(Clone, Copy)]
    pub(super) struct Dd(pub(super) f64, pub(super) f64);

    impl Dd {
        pub(super) fn parts(self) -> (f64, f64) {
            (self.0, self.1)
        }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    fn fast(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd(s, b - (s - a))
    }

    fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd(p, a.mul_add(b, -p))
    }

    fn add(a: Dd, b: Dd) -> Dd {
        let s = two_sum(a.0, b.0);
        fast(s.0, s.1 + a.1 + b.1)
    }

    fn neg(a: Dd) -> Dd {
        Dd(-a.0, -a.1)
    }

    fn mul(a: Dd, b: Dd) -> Dd {
        let p = two_prod(a.0, b.0);
        fast(p.0, p.1 + a.0 * b.1 + a.1 * b.0)
    }

    fn powi(a: Dd, m: u32) -> Dd {
        let mut r = Dd(1.0, 0.0);
        for _ in 0..m {
            r = mul(r, a);
        }
        r
    }

    const TWO_PI: Dd = Dd(std::f64::consts::TAU, 2.4492935982947064e-16);

    /// `(a + b)/2 + x (b - a)/2` without rounding the node position.
    pub(super) fn node(a: f64, b: f64, x: f64) -> Dd {
        let mid = two_sum(a, b);
        let half = two_sum(b, -a);
        let off = mul(Dd(0.5 * half.0, 0.5 * half.1), Dd(x, 0.0));
        add(Dd(0.5 * mid.0, 0.5 * mid.1), off)
    }

    /// `v t + u [t]^m` modulo `2 pi`, for `t` of either sign.
    pub(super) fn curve_phase(t: Dd, u: f64, v: f64, m: u32, odd: bool) -> f64 {
        let mut p = powi(t, m);
        if !odd && !m.is_multiple_of(2) && t.0 < 0.0 {
            p = neg(p);
        }
        if odd && m.is_multiple_of(2) && t.0 < 0.0 {
            p = neg(p);
        }
        reduce(add(mul(Dd(u, 0.0), p), mul(Dd(v, 0.0), t)))
    }

    pub(super) fn neg_dd(a: Dd) -> Dd {
        neg(a)
    }

    fn reduce(theta: Dd) -> f64 {
        let k = (theta.0 / TWO_PI.0).round();
        let r = add(theta, neg(add(two_prod(k, TWO_PI.0), Dd(k * TWO_PI.1, 0.0))));
        r.0 + r.1
    }

    /// `w eta + scale (eta^m - (h eta - xi)^m)` modulo `2 pi`.
    pub(super) fn kernel_phase(e: Dd, h: f64, xi: f64, w: f64, m: u32, scale: f64) -> f64 {
        let s = add(mul(Dd(h, 0.0), e), Dd(-xi, 0.0));
        let d = add(powi(e, m), neg(powi(s, m)));
        reduce(add(Dd(d.0 * scale, d.1 * scale), mul(Dd(w, 0.0), e)))
    }
}

/// The modulus bound `int psi(eta)/eta psi(h eta - xi)/|h eta - xi| d eta`.
pub fn kernel_envelope(params: &OscillatoryKernelParams, quad_depth: usize) -> f64 {
    let Some((a, b)) = params.support() else {
        return 0.0;
    };
    let breaks = phase_panels(a, b, quad_depth.div_ceil(ORDER), BUDGET, |_| 0.0);
    panel_sum(&breaks, ORDER, |eta| Complex64::new(params.amplitude(eta), 0.0)).re
}

/// `1_{|xi| <= 2^{-lambda l}} + 2^{-lambda l} 1_{|xi| <= 2}`.
pub fn kernel_bound_shape(params: &OscillatoryKernelParams) -> f64 {
    let edge = pow2(-params.lambda() * params.l as f64);
    let x = params.xi.abs();
    let mut v = 0.0;
    if x <= edge {
        v += 1.0;
    }
    if x <= 2.0 {
        v += edge;
    }
    v
}

/// `max I_xi` over `2^{-lambda l} <= |xi| <= 2`, sampled at `samples`
/// log-spaced moduli per sign (the lower edge included).
pub fn kernel_sup(base: &OscillatoryKernelParams, samples: usize, quad_depth: usize) -> Result<f64> {
    if samples < 2 {
        return Err(invalid("samples", "need at least two points per sign"));
    }
    let lo = pow2(-base.lambda() * base.l as f64);
    let ratio = (2.0 / lo).ln() / (samples - 1) as f64;
    let xis: Vec<f64> = (0..samples)
        .flat_map(|i| {
            let m = lo * (ratio * i as f64).exp();
            [m, -m]
        })
        .collect();
    // For h = 1 and w = 0 the substitution eta -> eta + xi shows
    // I_{-xi} = I_{xi}, so one sign suffices.
    let symmetric = base.h == 1.0 && base.w == 0.0;
    let values: Vec<f64> = xis
        .par_iter()
        .filter(|&&xi| !(symmetric && xi < 0.0))
        .map(|&xi| kernel_i_xi(&base.with_xi(xi), quad_depth))
        .collect();
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `|int e^{i lambda |t|^p} phi(t) dt|` with `phi` the base bump on `[-2, 2]`.
pub fn vdc_value(phase_power: f64, lambda: f64, quad_depth: usize) -> f64 {
    let p = phase_power;
    let breaks = phase_panels(0.0, 2.0, quad_depth.div_ceil(ORDER), BUDGET, |t| {
        lambda * p * t.max(1e-300).powf(p - 1.0)
    });
    2.0 * panel_sum(&breaks, ORDER, |t| cis(lambda * t.powf(p)) * base_bump(t)).norm()
}

/// Log–log fit of [`vdc_value`] against `lambda`.
pub fn vdc_baseline(phase_power: f64, lambdas: &[f64], quad_depth: usize) -> Result<FitResult> {
    if lambdas.is_empty() {
        return Err(invalid("lambda_range", "empty"));
    }
    if !(phase_power >= 2.0) {
        return Err(invalid("phase_power", format!("{phase_power} is below 2")));
    }
    let pts: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|&l| (l, vdc_value(phase_power, l, quad_depth)))
        .collect();
    fit_exponent(&pts)
}

/// `int_1^2 e^{i A t} dt`, stable for small `A`.
fn linear_piece(a: f64) -> Complex64 {
    if a == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    cis(1.5 * a) * (2.0 * (0.5 * a).sin() / a)
}

/// `int_1^2 e^{i(A t + B t^2)} dt`.
///
/// Without a stationary point and with a fast phase, each endpoint is
/// continued along its steepest-descent path; otherwise composite
/// Gauss–Legendre on `[1, 2]`.
fn quadratic_piece(a: f64, b: f64, quad_depth: usize) -> Complex64 {
    if b == 0.0 {
        return linear_piece(a);
    }
    let d1 = a + 2.0 * b;
    let d2 = a + 4.0 * b;
    if d1.signum() == d2.signum() && d1.abs().min(d2.abs()) > 30.0 {
        if d1 < 0.0 {
            return quadratic_piece(-a, -b, quad_depth).conj();
        }
        // Phases at the endpoints as products so that huge arguments stay exact.
        let e1 = cis(a) * cis(b);
        let e2 = cis(2.0 * a) * cis(4.0 * b);
        return endpoint(e1, d1, b) - endpoint(e2, d2, b);
    }
    let breaks = phase_panels(1.0, 2.0, quad_depth.div_ceil(ORDER), BUDGET, |t| a + 2.0 * b * t);
    panel_sum(&breaks, ORDER, |t| cis(t * (a + b * t)))
}

/// `i e^{i phi(t0)} int_0^inf e^{-y} (phi'(t0)^2 + 4 i B y)^{-1/2} dy`.
fn endpoint(e: Complex64, d: f64, b: f64) -> Complex64 {
    let (x, w) = laguerre60();
    let s: Complex64 = x
        .iter()
        .zip(w)
        .map(|(&y, &w)| w / Complex64::new(d * d, 4.0 * b * y).sqrt())
        .sum();
    Complex64::i() * e * s
}

fn laguerre60() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_laguerre(60))
}

fn coefficients(xi: f64, eta: f64, j: i32, k: i32) -> (f64, f64) {
    (pow2(k as f64) * xi, pow2((2 * k - j) as f64) * eta)
}

/// `m^j_k(xi, eta) = int_1^2 e^{i 2^k t xi + i 2^{2k-j} t^2 eta} dt`.
pub fn multiplier_mjk(xi: f64, eta: f64, j: i32, k: i32, quad_depth: usize) -> Complex64 {
    let (a, b) = coefficients(xi, eta, j, k);
    quadratic_piece(a, b, quad_depth)
}

/// `m~^j_k(xi, eta) = int_1^2 int_1^2 e^{i 2^k t xi + i 2^{2k-j} tau^2 eta} dt d tau`.
pub fn multiplier_tilde(xi: f64, eta: f64, j: i32, k: i32, quad_depth: usize) -> Complex64 {
    let (a, b) = coefficients(xi, eta, j, k);
    linear_piece(a) * quadratic_piece(0.0, b, quad_depth)
}

/// `sum_{|j|, |k| <= jk_range} |m^j_k - m~^j_k|` at `(xi, eta)`.
pub fn multiplier_diff_sum(xi: f64, eta: f64, jk_range: u32) -> f64 {
    let r = jk_range as i32;
    let rows: Vec<f64> = (-r..=r)
        .into_par_iter()
        .map(|j| {
            (-r..=r)
                .map(|k| (multiplier_mjk(xi, eta, j, k, 256) - multiplier_tilde(xi, eta, j, k, 256)).norm())
                .sum()
        })
        .collect();
    rows.iter().sum()
}

/// `|| x -> int g(x - t) e^{i v(x) t + i u(x) [t]^alpha} psi_l(u(x)^{1/alpha} t) dt/t ||_2 / ||g||_2`
/// on a 1D grid, with `u`, `v` read from `field` at `y = 0`.
///
/// `g` is evaluated off the lattice as its trigonometric polynomial (the
/// Nyquist mode split evenly between `+-N/2`); `quad_depth` is the minimum
/// node count per side of the kernel support.
pub fn annulus_decay_1d(g: &GridFunction, field: &CurveField, l: i32, quad_depth: usize) -> Result<f64> {
    let grid = *g.grid();
    if grid.dims() != Dims::One {
        return Err(Error::GridMismatch("annulus_decay_1d needs a 1D grid".into()));
    }
    let n = grid.n();
    let xs: Vec<f64> = (0..n).map(|i| grid.coord(i)).collect();
    let us: Vec<f64> = xs.iter().map(|&x| field.u_at(x, 0.0)).collect();
    if let Some(&bad) = us.iter().find(|u| !(**u > 0.0)) {
        return Err(Error::NonPositiveField(bad));
    }
    let den: f64 = g.samples().iter().map(|z| z.norm_sqr()).sum();
    if den == 0.0 {
        return Ok(0.0);
    }
    let poly = TrigPoly::new(g);
    let (alpha, parity) = (field.alpha(), field.parity());
    let odd = parity == Parity::Odd;
    let kmax = grid.nyquist();
    let lf = l as f64;
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (x, u) = (xs[i], us[i]);
            let v = field.v_at(x, 0.0);
            let coeffs = poly.at_shift(x);
            let s = u.powf(1.0 / alpha);
            let (a, b) = (pow2(lf - 1.0) / s, pow2(lf + 1.0) / s);
            let rate = |t: f64| v.abs() + kmax + u * alpha * t.abs().powf(alpha - 1.0);
            let breaks = phase_panels(a, b, quad_depth.div_ceil(ORDER), BUDGET, rate);
            // Both signs of t share a node: psi is even and g(x -+ t) come from
            // the same powers of e^{-i Delta t}.
            let twin = v == 0.0 && !odd;
            let total = match integer_power(alpha) {
                Some(m) => exact_node_sum(&breaks, |t| {
                    let tf = t.0;
                    let (gm, gp) = poly.eval_pair(&coeffs, t);
                    let kp = cis(dd::curve_phase(t, u, v, m, odd));
                    let kn = if twin { kp } else { cis(dd::curve_phase(dd::neg_dd(t), u, v, m, odd)) };
                    (gm * kp - gp * kn) * (psi(lf, s * tf) / tf)
                }),
                None => panel_sum(&breaks, ORDER, |t| {
                    let (gm, gp) = poly.eval_pair(&coeffs, dd::Dd(t, 0.0));
                    let p = t.powf(alpha);
                    let kp = cis(v * t + u * p);
                    let kn = cis(-v * t + u * if odd { -p } else { p });
                    (gm * kp - gp * kn) * (psi(lf, s * t) / t)
                }),
            };
            total.norm_sqr()
        })
        .collect();
    Ok((out.iter().sum::<f64>() / den).sqrt())
}

/// A 1D grid function as `sum_m c_m e^{i m Delta (x - x_0)}`, `|m| <= N/2`.
struct TrigPoly {
    coeffs: Vec<Complex64>,
    lowest: i64,
    delta: f64,
    origin: f64,
}

impl TrigPoly {
    fn new(g: &GridFunction) -> Self {
        let grid = g.grid();
        let n = grid.n();
        let half = (n / 2) as i64;
        let spec = g.spectrum();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        for (i, &c) in spec.iter().enumerate() {
            let k = grid.wavenumber(i);
            let c = c / n as f64;
            if k.abs() == half {
                coeffs[0] += 0.5 * c;
                coeffs[n] += 0.5 * c;
            } else {
                coeffs[(k + half) as usize] += c;
            }
        }
        Self {
            coeffs,
            lowest: -half,
            delta: grid.fundamental(),
            origin: grid.coord(0),
        }
    }

    /// Coefficients of `t -> g(x - t)` as a polynomial in `e^{-i Delta t}`.
    fn at_shift(&self, x: f64) -> Vec<Complex64> {
        let d = x - self.origin;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * cis((self.lowest + j as i64) as f64 * self.delta * d))
            .collect()
    }

    /// `(sum_m c_m e^{-i m Delta t}, sum_m c_m e^{i m Delta t})`.
    fn eval_pair(&self, coeffs: &[Complex64], t: dd::Dd) -> (Complex64, Complex64) {
        let (hi, lo) = t.parts();
        let z = cis(-self.delta * hi) * Complex64::new(1.0, -self.delta * lo);
        let mut w = z.powi(self.lowest as i32);
        let (mut minus, mut plus) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for c in coeffs {
            minus += c * w;
            plus += c * w.conj();
            w *= z;
        }
        (minus, plus)
    }
}
