//! Dyadic shifted maximal operators `M^(n)`.
//!
//! For a cell `x` and a dyadic level `k`, let `I` be the level-`k` dyadic
//! interval containing `x`; `M^(n)` takes the largest mean of `|f|` over the
//! shifted intervals `I^(n) = I - n |I|`. Prefix sums give every level in
//! linear time, so one application costs `O(len log len)`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Dims, GridFunction};

/// The dyadic interval `[2^level index, 2^level (index + 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    pub level: i32,
    pub index: i64,
}

impl DyadicInterval {
    pub fn new(level: i32, index: i64) -> Self {
        Self { level, index }
    }

    /// The level-`level` interval containing `x`.
    pub fn containing(x: f64, level: i32) -> Self {
        Self {
            level,
            index: (x / 2f64.powi(level)).floor() as i64,
        }
    }

    pub fn len(&self) -> f64 {
        2f64.powi(self.level)
    }

    pub fn bounds(&self) -> (f64, f64) {
        let s = self.len();
        (s * self.index as f64, s * (self.index + 1) as f64)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.bounds();
        a <= x && x < b
    }

    /// `I^(n)`: the interval moved `n` lengths to the left.
    pub fn shift(&self, n: i64) -> Self {
        Self {
            level: self.level,
            index: self.index - n,
        }
    }
}

/// How the array continues past its ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Zero outside; shifted intervals keep their full normalisation.
    #[default]
    Zero,
    Periodic,
}

/// Which shifts enter each mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sides {
    /// Only `I^(n)`.
    #[default]
    One,
    /// `I^(n)` and `I^(-n)` together: the mass of both over `|I|`.
    Both,
}

/// Order of the one-dimensional passes in [`shifted_max_2d`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AxisOrder {
    /// `M_1 (M_2 f)`: along y first.
    #[default]
    SecondThenFirst,
    /// `M_2 (M_1 f)`.
    FirstThenSecond,
}

fn check_len(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(invalid("f", format!("length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros())
}

/// `M^(n) |f|` with zero extension.
pub fn shifted_max_1d(f: &[f64], n: i64) -> Result<Vec<f64>> {
    shifted_max_1d_with(f, n, Boundary::Zero, Sides::One)
}

pub fn shifted_max_1d_with(f: &[f64], n: i64, boundary: Boundary, sides: Sides) -> Result<Vec<f64>> {
    let levels = check_len(f.len())?;
    let mut out = vec![0.0; f.len()];
    let mut prefix = Vec::with_capacity(f.len() + 1);
    line_max(f, n, boundary, sides, levels, &mut prefix, &mut out);
    Ok(out)
}

fn line_max(
    f: &[f64],
    n: i64,
    boundary: Boundary,
    sides: Sides,
    levels: u32,
    prefix: &mut Vec<f64>,
    out: &mut [f64],
) {
    let len = f.len() as i64;
    prefix.clear();
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in f {
        acc += v.abs();
        prefix.push(acc);
    }
    let mass = |start: i64, size: i64| -> f64 {
        match boundary {
            Boundary::Zero => {
                let a = start.clamp(0, len) as usize;
                let b = (start + size).clamp(0, len) as usize;
                prefix[b] - prefix[a]
            }
            Boundary::Periodic => {
                let a = start.rem_euclid(len);
                let b = a + size;
                if b <= len {
                    prefix[b as usize] - prefix[a as usize]
                } else {
                    prefix[len as usize] - prefix[a as usize] + prefix[(b - len) as usize]
                }
            }
        }
    };
    out.iter_mut().for_each(|o| *o = 0.0);
    for k in 0..=levels {
        let size = 1i64 << k;
        let blocks = len / size;
        for m in 0..blocks {
            let mut s = mass(size * (m - n), size);
            if sides == Sides::Both {
                s += mass(size * (m + n), size);
            }
            let mean = s / size as f64;
            let lo = (m * size) as usize;
            for o in &mut out[lo..lo + size as usize] {
                if mean > *o {
                    *o = mean;
                }
            }
        }
    }
}

/// `M_1^(n1) M_2^(n2) |f|` (or the reverse order) on a 2D grid function; the
/// shifts are rounded to the nearest integer.
pub fn shifted_max_2d(f: &GridFunction, n1: f64, n2: f64, order: AxisOrder) -> Result<GridFunction> {
    shifted_max_2d_with(f, n1, n2, order, Boundary::Zero, Sides::One)
}

pub fn shifted_max_2d_with(
    f: &GridFunction,
    n1: f64,
    n2: f64,
    order: AxisOrder,
    boundary: Boundary,
    sides: Sides,
) -> Result<GridFunction> {
    if f.grid().dims() != Dims::Two {
        return Err(Error::GridMismatch("shifted_max_2d needs a 2D grid".into()));
    }
    let n = f.grid().n();
    let data = shifted_max_2d_real(&f.moduli(), n, n1.round() as i64, n2.round() as i64, order, boundary, sides);
    GridFunction::from_real(*f.grid(), &data)
}

/// Real-array form of [`shifted_max_2d_with`] on an `n x n` x-major array.
pub fn shifted_max_2d_real(
    data: &[f64],
    n: usize,
    n1: i64,
    n2: i64,
    order: AxisOrder,
    boundary: Boundary,
    sides: Sides,
) -> Vec<f64> {
    match order {
        AxisOrder::SecondThenFirst => {
            let a = along_y(data, n, n2, boundary, sides);
            along_x(&a, n, n1, boundary, sides)
        }
        AxisOrder::FirstThenSecond => {
            let a = along_x(data, n, n1, boundary, sides);
            along_y(&a, n, n2, boundary, sides)
        }
    }
}

fn along_y(data: &[f64], n: usize, shift: i64, boundary: Boundary, sides: Sides) -> Vec<f64> {
    let levels = n.trailing_zeros();
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(n)
        .zip(data.par_chunks(n))
        .for_each_init(Vec::new, |prefix, (o, row)| {
            line_max(row, shift, boundary, sides, levels, prefix, o)
        });
    out
}

fn along_x(data: &[f64], n: usize, shift: i64, boundary: Boundary, sides: Sides) -> Vec<f64> {
    let mut t = transpose(data, n);
    t = along_y(&t, n, shift, boundary, sides);
    transpose(&t, n)
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

/// `|| (sum_k (M^(n) f_k)^q)^{1/q} ||_p / || (sum_k |f_k|^q)^{1/q} ||_p`,
/// with `q = inf` meaning the pointwise max.
pub fn vv_norm_ratio(family: &[Vec<f64>], n: i64, p: f64, q: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid("p", format!("{p} is outside (1, inf)")));
    }
    if !(q > 1.0) {
        return Err(invalid("q", format!("{q} is outside (1, inf]")));
    }
    let Some(first) = family.first() else {
        return Err(Error::TrivialFamily);
    };
    let len = first.len();
    if family.iter().any(|f| f.len() != len) {
        return Err(invalid("family", "arrays differ in length"));
    }
    let maxed: Vec<Vec<f64>> = family
        .par_iter()
        .map(|f| shifted_max_1d(f, n))
        .collect::<Result<_>>()?;
    let abs: Vec<Vec<f64>> = family.iter().map(|f| f.iter().map(|v| v.abs()).collect()).collect();
    let den = mixed_norm(&abs, p, q);
    if den == 0.0 {
        return Err(Error::TrivialFamily);
    }
    Ok(mixed_norm(&maxed, p, q) / den)
}

fn mixed_norm(family: &[Vec<f64>], p: f64, q: f64) -> f64 {
    let len = family[0].len();
    let mut total = 0.0;
    for x in 0..len {
        let inner = if q.is_infinite() {
            family.iter().map(|f| f[x]).fold(0.0, f64::max)
        } else {
            family.iter().map(|f| f[x].powf(q)).sum::<f64>().powf(1.0 / q)
        };
        total += inner.powf(p);
    }
    total.powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_involution() {
        for level in -3..5 {
            for index in -10..10 {
                let i = DyadicInterval::new(level, index);
                for n in -7..7 {
                    assert_eq!(i.shift(n).shift(-n), i);
                }
            }
        }
        let i = DyadicInterval::containing(5.5, 2);
        assert_eq!(i.bounds(), (4.0, 8.0));
        assert!(i.contains(5.5));
    }

    #[test]
    fn zero_and_bounds() {
        assert_eq!(shifted_max_1d(&[0.0; 16], 3).unwrap(), vec![0.0; 16]);
        let f = [0.5, 2.0, 0.0, 1.0, 3.0, 0.1, 0.2, 0.9];
        for n in -9..9 {
            let m = shifted_max_1d(&f, n).unwrap();
            assert!(m.iter().all(|&v| (0.0..=3.0).contains(&v)));
        }
        assert!(shifted_max_1d(&[1.0; 6], 0).is_err());
    }

    #[test]
    fn two_sided_dominates_both_shifts() {
        let f = [0.5, 2.0, 0.0, 1.0, 3.0, 0.1, 0.2, 0.9];
        let both = shifted_max_1d_with(&f, 2, Boundary::Periodic, Sides::Both).unwrap();
        let plus = shifted_max_1d_with(&f, 2, Boundary::Periodic, Sides::One).unwrap();
        let minus = shifted_max_1d_with(&f, -2, Boundary::Periodic, Sides::One).unwrap();
        for i in 0..8 {
            assert!(both[i] >= plus[i].max(minus[i]) - 1e-15);
            assert!(both[i] <= plus[i] + minus[i] + 1e-15);
        }
    }

    #[test]
    fn unshifted_boundaries_agree() {
        let f = [0.5, 2.0, 0.0, 1.0, 3.0, 0.1, 0.2, 0.9];
        let a = shifted_max_1d_with(&f, 0, Boundary::Periodic, Sides::One).unwrap();
        let b = shifted_max_1d(&f, 0).unwrap();
        assert_eq!(a, b);
    }
}
