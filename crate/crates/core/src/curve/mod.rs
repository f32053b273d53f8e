//! Operators along variable curves `t -> (t, u(x, y) [t]^alpha)`.

mod engine;
mod ops;

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::TorusGrid;

pub use ops::{
    average_along_curve, carleson_sup, dyadic_monomial_maximal, hilbert_along_curve,
    maximal_along_curve, maximal_along_curve_with, rectangle_majorant, strong_maximal,
    truncated_piece, AverageMode, Sampling,
};
pub(crate) use ops::dilation_multiplier;

pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Branch of `[t]^alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `|t|^alpha`
    Even,
    /// `sgn(t) |t|^alpha`
    Odd,
}

/// Regularity class of the coefficient field; selects the evaluation path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldClass {
    Constant(f64),
    /// `u(x, y) = u(x, 0)`.
    OneVariable,
    Lipschitz { lip: f64 },
    Measurable,
}

/// Coefficient field `u` (and optional linear coefficient `v`) of the curve
/// `t -> (t, v(z) t + u(z) [t]^alpha)`.
///
/// The linear coefficient is assumed to have the same class as `u`.
#[derive(Clone)]
pub struct CurveField {
    alpha: f64,
    parity: Parity,
    class: FieldClass,
    u: FieldFn,
    v: Option<FieldFn>,
}

impl fmt::Debug for CurveField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveField")
            .field("alpha", &self.alpha)
            .field("parity", &self.parity)
            .field("class", &self.class)
            .field("linear_term", &self.v.is_some())
            .finish()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) || alpha == 1.0 {
        return Err(invalid("alpha", format!("{alpha} must be positive and different from 1")));
    }
    Ok(())
}

impl CurveField {
    pub fn constant(alpha: f64, parity: Parity, c: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            parity,
            class: FieldClass::Constant(c),
            u: Arc::new(move |_, _| c),
            v: None,
        })
    }

    pub fn one_variable(
        alpha: f64,
        parity: Parity,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            parity,
            class: FieldClass::OneVariable,
            u: Arc::new(move |x, _| u(x)),
            v: None,
        })
    }

    pub fn lipschitz(
        alpha: f64,
        parity: Parity,
        lip: f64,
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            parity,
            class: FieldClass::Lipschitz { lip },
            u: Arc::new(u),
            v: None,
        })
    }

    pub fn measurable(
        alpha: f64,
        parity: Parity,
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            parity,
            class: FieldClass::Measurable,
            u: Arc::new(u),
            v: None,
        })
    }

    /// `u(x, y) = (y - y_c) / [x - x_c]^alpha` clipped to `[-clip, clip]`, so
    /// the curve through every point passes through `center`.
    pub fn adversarial_ball(alpha: f64, parity: Parity, center: (f64, f64), clip: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(clip > 0.0) {
            return Err(invalid("clip", "must be positive"));
        }
        let (xc, yc) = center;
        let bracket = bracket_fn(alpha, parity);
        Self::measurable(alpha, parity, move |x, y| {
            let d = bracket(x - xc);
            if d == 0.0 {
                return clip;
            }
            ((y - yc) / d).clamp(-clip, clip)
        })
    }

    /// Adds the linear coefficient `v` of the curve `(t, v t + u [t]^alpha)`.
    pub fn with_linear_term(mut self, v: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.v = Some(Arc::new(v));
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn class(&self) -> FieldClass {
        self.class
    }

    pub fn has_linear_term(&self) -> bool {
        self.v.is_some()
    }

    /// `[t]^alpha` on this field's branch.
    pub fn power(&self, t: f64) -> f64 {
        bracket(t, self.alpha, self.parity)
    }

    pub fn u_at(&self, x: f64, y: f64) -> f64 {
        (self.u)(x, y)
    }

    pub fn v_at(&self, x: f64, y: f64) -> f64 {
        self.v.as_ref().map_or(0.0, |v| v(x, y))
    }

    /// The recorded Lipschitz norm, for Lipschitz and constant fields.
    pub fn lipschitz_norm(&self) -> Option<f64> {
        match self.class {
            FieldClass::Constant(_) => Some(0.0),
            FieldClass::Lipschitz { lip } => Some(lip),
            _ => None,
        }
    }

    /// Largest neighbouring finite-difference quotient of `u` on the grid.
    pub fn sampled_lipschitz(&self, grid: &TorusGrid) -> f64 {
        let n = grid.n();
        let h = grid.spacing();
        let mut best = 0.0f64;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let (x, y) = (grid.coord(i), grid.coord(j));
                let u0 = self.u_at(x, y);
                best = best
                    .max((self.u_at(x + h, y) - u0).abs() / h)
                    .max((self.u_at(x, y + h) - u0).abs() / h);
            }
        }
        best
    }

    /// Values of `u` on the lattice, x-major.
    pub fn sample_u(&self, grid: &TorusGrid) -> Vec<f64> {
        sample(grid, &*self.u)
    }

    fn sample_v(&self, grid: &TorusGrid) -> Vec<f64> {
        match &self.v {
            Some(v) => sample(grid, &**v),
            None => vec![0.0; grid.len()],
        }
    }
}

fn sample(grid: &TorusGrid, f: &(dyn Fn(f64, f64) -> f64 + Send + Sync)) -> Vec<f64> {
    let n = grid.n();
    match grid.dims() {
        crate::grid::Dims::One => (0..n).map(|i| f(grid.coord(i), 0.0)).collect(),
        crate::grid::Dims::Two => (0..n * n)
            .map(|k| f(grid.coord(k / n), grid.coord(k % n)))
            .collect(),
    }
}

pub(crate) fn bracket(t: f64, alpha: f64, parity: Parity) -> f64 {
    let a = t.abs().powf(alpha);
    match parity {
        Parity::Even => a,
        Parity::Odd => a.copysign(t),
    }
}

fn bracket_fn(alpha: f64, parity: Parity) -> impl Fn(f64) -> f64 + Send + Sync {
    move |t| bracket(t, alpha, parity)
}

/// Truncation `eps0`, dyadic ladder `eps0 2^{-m}` and the symmetric open
/// nodes `+-(j + 1/2) dt`, `dt = eps0 / nodes_per_side`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationScheme {
    pub eps0: f64,
    pub nodes_per_side: usize,
    pub ladder_len: usize,
}

impl TruncationScheme {
    pub fn new(eps0: f64, nodes_per_side: usize, ladder_len: usize) -> Result<Self> {
        if !(eps0 > 0.0) || eps0.is_nan() {
            return Err(invalid("eps0", "must be positive"));
        }
        if nodes_per_side == 0 {
            return Err(invalid("nodes_per_side", "must be positive"));
        }
        if ladder_len == 0 {
            return Err(invalid("ladder_len", "the ladder is empty"));
        }
        let s = Self {
            eps0,
            nodes_per_side,
            ladder_len,
        };
        s.ladder_counts()?;
        Ok(s)
    }

    /// `eps0` with the default depth of `2^12` nodes per side and an 8-step ladder.
    pub fn with_eps0(eps0: f64) -> Result<Self> {
        Self::new(eps0, 1 << 12, 8)
    }

    /// The sufficient truncation `(2 c lip)^{-1}` for a Lipschitz field, with
    /// `c = 2 alpha` standing in for the unspecified determinant constant.
    pub fn lipschitz_default(alpha: f64, lip: f64) -> f64 {
        if lip > 0.0 {
            1.0 / (4.0 * alpha * lip)
        } else {
            f64::INFINITY
        }
    }

    pub fn dt(&self) -> f64 {
        self.eps0 / self.nodes_per_side as f64
    }

    pub fn ladder(&self) -> Vec<f64> {
        (0..self.ladder_len)
            .map(|m| self.eps0 * 0.5f64.powi(m as i32))
            .collect()
    }

    /// Nodes per side inside each ladder truncation.
    pub(crate) fn ladder_counts(&self) -> Result<Vec<usize>> {
        let mut counts = Vec::with_capacity(self.ladder_len);
        for m in 0..self.ladder_len {
            let c = self.nodes_per_side >> m;
            if c == 0 || c << m != self.nodes_per_side {
                return Err(invalid(
                    "ladder_len",
                    format!("{} nodes per side cannot be halved {m} times", self.nodes_per_side),
                ));
            }
            counts.push(c);
        }
        Ok(counts)
    }

    /// Positive nodes `(j + 1/2) dt`; negative nodes mirror them.
    pub fn positive_nodes(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.nodes_per_side).map(|j| (j as f64 + 0.5) * dt).collect()
    }
}

/// Rectangle geometry of a single dyadic shell `|t| ~ 2^j u^{-1/alpha}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RectangleCover {
    pub j: i32,
    pub tau: i64,
    pub alpha: f64,
    pub lambda: f64,
    pub delta: f64,
    pub n_j: usize,
    pub c_alpha: f64,
}

impl RectangleCover {
    pub fn new(alpha: f64, u: f64, j: i32, tau: i64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(u > 0.0) {
            return Err(crate::error::Error::NonPositiveField(u));
        }
        let lambda = 2f64.powi(j) * u.powf(-1.0 / alpha);
        let delta = 2f64.powf(-(alpha - 1.0) * j as f64) * u.powf(-1.0 / alpha);
        // lambda / delta = 2^{alpha j}; take the smallest N with N delta >= 1.5 lambda.
        let n_j = (1.5 * 2f64.powf(alpha * j as f64) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            j,
            tau,
            alpha,
            lambda,
            delta,
            n_j,
            c_alpha: 1.0,
        })
    }

    pub fn sigma1(&self, m: usize) -> f64 {
        2f64.powf(self.alpha * self.j as f64 - 1.0) + m as f64
    }

    pub fn sigma2(&self, m: usize) -> f64 {
        let j = self.j as f64;
        self.c_alpha * (2f64.powf(j) + 2f64.powf(-(self.alpha - 1.0) * j) * m as f64).powf(self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn one_variable_ignores_y() {
        let f = CurveField::one_variable(2.0, Parity::Even, |x| 1.0 + 0.5 * x.sin()).unwrap();
        let g = make_grid(16, 4.0, 2).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let (x, y) = (g.coord(i), g.coord(j));
                assert_eq!(f.u_at(x, y), f.u_at(x, 0.0));
            }
        }
    }

    #[test]
    fn recorded_lipschitz_matches_samples() {
        let f = CurveField::lipschitz(2.0, Parity::Odd, 0.6, |x, y| 1.0 + 0.3 * (2.0 * x).sin() * y.cos()).unwrap();
        let g = make_grid(128, 4.0, 2).unwrap();
        let s = f.sampled_lipschitz(&g);
        assert!((s / 0.6 - 1.0).abs() < 0.1, "{s}");
    }

    #[test]
    fn rejects_alpha_one() {
        assert!(CurveField::constant(1.0, Parity::Odd, 1.0).is_err());
        assert!(CurveField::constant(-2.0, Parity::Odd, 1.0).is_err());
    }

    #[test]
    fn bracket_branches() {
        assert_eq!(bracket(-2.0, 2.0, Parity::Even), 4.0);
        assert_eq!(bracket(-2.0, 2.0, Parity::Odd), -4.0);
    }

    #[test]
    fn nodes_are_symmetric_and_avoid_zero() {
        let s = TruncationScheme::new(1.0, 64, 4).unwrap();
        let p = s.positive_nodes();
        assert!(p.iter().all(|&t| t > 0.0 && t < 1.0));
        assert!((p[0] - 1.0 / 128.0).abs() < 1e-15);
        assert_eq!(s.ladder(), vec![1.0, 0.5, 0.25, 0.125]);
        assert!(TruncationScheme::new(1.0, 4, 4).is_err());
        assert!(TruncationScheme::new(1.0, 4, 0).is_err());
    }

    #[test]
    fn cover_geometry() {
        for j in 1..=4 {
            let c = RectangleCover::new(2.0, 1.0, j, 0).unwrap();
            let ratio = c.n_j as f64 / 2f64.powi(2 * j);
            assert!((0.25..=4.0).contains(&ratio));
            let nd = c.n_j as f64 * c.delta;
            assert!(nd >= 1.5 * c.lambda - 1e-9 && nd <= 2.0 * c.lambda + 1e-9);
            for m in 0..c.n_j {
                assert!(c.sigma1(m) <= 4.0 * 2f64.powi(2 * j));
                assert!(c.sigma2(m) <= 16.0 * 2f64.powi(2 * j));
            }
        }
    }
}
