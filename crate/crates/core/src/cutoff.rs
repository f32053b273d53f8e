//! Smooth cutoffs built from the `exp(-1/x)` mollifier, and the
//! Littlewood–Paley projections they define.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Dims, GridFunction};

/// `e^{-1/s}` for `s > 0`, else 0.
pub fn mollifier(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth monotone transition: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = mollifier(x);
    a / (a + mollifier(1.0 - x))
}

/// Even bump equal to 1 on `[-1, 1]` and supported in `[-2, 2]`.
pub fn base_bump(t: f64) -> f64 {
    smooth_step(2.0 - t.abs())
}

/// `phi(t) - phi(2t)`, supported on `1/2 <= |t| <= 2`.
pub fn psi0(t: f64) -> f64 {
    base_bump(t) - base_bump(2.0 * t)
}

/// `2^l` without rounding for integral `l`.
pub(crate) fn pow2(l: f64) -> f64 {
    if l.fract() == 0.0 && l.abs() < 1000.0 {
        2f64.powi(l as i32)
    } else {
        l.exp2()
    }
}

/// `psi0(2^{-l} t)`; real `l` is allowed.
pub fn psi(l: f64, t: f64) -> f64 {
    let s = t * pow2(-l);
    base_bump(s) - base_bump(2.0 * s)
}

/// Fattened bump equal to 1 on `[-1, 1]` and supported in `[-3, 3]`.
pub fn fattened_bump(t: f64) -> f64 {
    smooth_step(0.5 * (3.0 - t.abs()))
}

/// Averaging weight supported on `[1/2, 3]` with plateau `[1, 2]`.
///
/// Used for the dilation averages and the annulus projection, where a
/// plateau covering a full octave is needed.
pub fn plateau_bump(t: f64) -> f64 {
    if t <= 0.5 || t >= 3.0 {
        0.0
    } else if t < 1.0 {
        smooth_step(2.0 * (t - 0.5))
    } else if t <= 2.0 {
        1.0
    } else {
        smooth_step(3.0 - t)
    }
}

/// The cutoff family as a value, for callers that want to pass it around.
#[derive(Clone, Copy, Debug, Default)]
pub struct CutoffFamily;

impl CutoffFamily {
    pub fn base_bump(&self, t: f64) -> f64 {
        base_bump(t)
    }
    pub fn psi0(&self, t: f64) -> f64 {
        psi0(t)
    }
    pub fn psi(&self, l: f64, t: f64) -> f64 {
        psi(l, t)
    }
    pub fn fattened_bump(&self, t: f64) -> f64 {
        fattened_bump(t)
    }
    pub fn plateau_bump(&self, t: f64) -> f64 {
        plateau_bump(t)
    }
}

fn check_band(f: &GridFunction, top: f64, what: &str) -> Result<()> {
    let nyq = f.grid().nyquist();
    if top > nyq * (1.0 + 1e-12) {
        return Err(Error::BandOutOfRange(format!(
            "{what} reaches {top}, above the Nyquist frequency {nyq}"
        )));
    }
    Ok(())
}

fn require_2d(f: &GridFunction) -> Result<()> {
    if f.grid().dims() != Dims::Two {
        return Err(Error::GridMismatch("a 2D grid function is required".into()));
    }
    Ok(())
}

/// Multiplies the spectrum by `psi_k(eta)`.
pub fn project_second(f: &GridFunction, k: f64) -> Result<GridFunction> {
    require_2d(f)?;
    check_band(f, pow2(k + 1.0), "the y-band")?;
    Ok(f.apply_multiplier(|_, eta| Complex64::new(psi(k, eta), 0.0)))
}

/// Multiplies the spectrum by `psi_k(xi)`; works on 1D grids too.
pub fn project_first(f: &GridFunction, k: f64) -> Result<GridFunction> {
    check_band(f, pow2(k + 1.0), "the x-band")?;
    Ok(f.apply_multiplier(|xi, _| Complex64::new(psi(k, xi), 0.0)))
}

/// Radial projection with multiplier `plateau_bump(|(xi, eta)| / 2^k)`,
/// equal to 1 on `2^k <= |zeta| <= 2^{k+1}`.
pub fn project_annulus(f: &GridFunction, k: f64) -> Result<GridFunction> {
    require_2d(f)?;
    check_band(f, 3.0 * pow2(k), "the annulus")?;
    let scale = pow2(-k);
    Ok(f.apply_multiplier(|xi, eta| Complex64::new(plateau_bump(xi.hypot(eta) * scale), 0.0)))
}

/// Conical projection with multiplier `psi_k(xi / eta)`; the `eta = 0` row is dropped.
pub fn project_cone(f: &GridFunction, k: f64) -> Result<GridFunction> {
    require_2d(f)?;
    Ok(f.apply_multiplier(|xi, eta| {
        if eta == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(psi(k, xi / eta), 0.0)
        }
    }))
}
