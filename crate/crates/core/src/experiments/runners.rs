use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{unknown, ExperimentConfig, SweepResult};
use crate::curve::{
    carleson_sup, hilbert_along_curve, maximal_along_curve, rectangle_majorant, truncated_piece, CurveField, Parity,
    TruncationScheme,
};
use crate::cutoff::project_second;
use crate::decoupling::{
    bilinear_ratio, decoupling_ratios, local_smoothing_trials, CoefficientModel, Density, Lattice,
};
use crate::error::{Error, Result};
use crate::fit::{fit_exponent, fit_semilog, FitResult};
use crate::grid::{mix_seed, random_field, Band, Dims, GridFunction, TorusGrid};
use crate::oscillatory::{annulus_decay_1d, kernel_sup, multiplier_diff_sum, OscillatoryKernelParams};
use crate::shifted_max::vv_norm_ratio;

pub(super) fn run(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let estimate = estimate(cfg)?;
    if estimate > cfg.memory_cap_bytes {
        return Err(Error::Infeasible {
            estimate,
            cap: cfg.memory_cap_bytes,
        });
    }
    match cfg.experiment.as_str() {
        "max-norm-stability" => norm_stability(cfg, Operator::Maximal),
        "ht-one-variable" => norm_stability(cfg, Operator::Hilbert),
        "single-annulus-measurable" => single_annulus(cfg),
        "sharpness-ball" => sharpness_ball(cfg),
        "shifted-max-growth" => shifted_growth(cfg),
        "lemma21-decay" => lemma_decay(cfg),
        "annulus-decay-1d" => annulus_decay(cfg),
        "multiplier-sum" => multiplier_sum(cfg),
        "local-smoothing" => local_smoothing(cfg),
        "decoupling" => decoupling(cfg),
        "bilinear" => bilinear(cfg),
        "carleson-sup" => carleson(cfg),
        "rectangle-domination" => rectangle_domination(cfg),
        other => Err(unknown(other)),
    }
}

const C16: u64 = 16;

pub(super) fn estimate(cfg: &ExperimentConfig) -> Result<u64> {
    let sq = |n: usize| (n * n) as u64;
    let max_n = |default: &[usize]| -> Result<usize> { Ok(cfg.list("n", default)?.into_iter().max().unwrap_or(0)) };
    Ok(match cfg.experiment.as_str() {
        "max-norm-stability" | "ht-one-variable" => sq(max_n(&[64, 128, 256])?) * C16 * 24,
        "single-annulus-measurable" => sq(cfg.get("n", 128usize)?) * C16 * (cfg.get("trials", 4u64)? + 8),
        "sharpness-ball" => sq(cfg.get("n", 512usize)?) * C16 * 8,
        "shifted-max-growth" => {
            cfg.get("length", 4096u64)? * cfg.get("family", 8u64)? * 8 * 4
        }
        "lemma21-decay" | "multiplier-sum" => 1 << 20,
        "annulus-decay-1d" | "carleson-sup" => cfg.get("n", 1024u64)? * C16 * 64,
        "local-smoothing" => sq(cfg.get("n", 512usize)?) * C16 * (3 * cfg.get("trials", 4u64)? + 4),
        "decoupling" => {
            let smallest = cfg.list("delta", &[0.5, 0.25, 0.125, 0.0625])?.into_iter().fold(1.0, f64::min);
            let radius = 4.0 / (smallest * smallest);
            (PI * radius * radius) as u64 * C16
        }
        "bilinear" => {
            let radius: f64 = cfg.get("radius", 64.0)?;
            let fine = cfg.list("spacing", &[1.0, 0.5])?.into_iter().fold(f64::INFINITY, f64::min);
            ((2.0 * radius / fine + 1.0) as u64).pow(2) / 8 * C16
        }
        "rectangle-domination" => sq(max_n(&[32, 64])?) * 8 * 64,
        other => return Err(unknown(other)),
    })
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parity(cfg: &ExperimentConfig) -> Result<Parity> {
    match cfg.raw("parity").unwrap_or("even") {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        other => Err(config_err(format!("parity must be `even` or `odd`, got `{other}`"))),
    }
}

fn grid2(n: usize, side: f64) -> Result<TorusGrid> {
    TorusGrid::new(n, side, Dims::Two)
}

/// `1 + uniform[0, 1)` on square cells of side `cell`, keyed by `seed`.
fn rough(seed: u64, side: f64, cell: f64) -> impl Fn(f64, f64) -> f64 + Send + Sync + 'static {
    move |x, y| {
        let ix = ((x + 0.5 * side) / cell).floor() as i64 as u64;
        let iy = ((y + 0.5 * side) / cell).floor() as i64 as u64;
        1.0 + (mix_seed(mix_seed(seed, ix), iy) >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// The coefficient field named by `field`, with its default truncation.
fn field(cfg: &ExperimentConfig, side: f64, default_kind: &str) -> Result<(CurveField, String, f64)> {
    let alpha = cfg.get("alpha", 2.0)?;
    let par = parity(cfg)?;
    let amp = cfg.get("u_amp", 0.5)?;
    let kind = cfg.raw("field").unwrap_or(default_kind).to_string();
    let w = TAU / side;
    let (f, eps0) = match kind.as_str() {
        "constant" => (CurveField::constant(alpha, par, cfg.get("u", 1.0)?)?, side / 8.0),
        "one-variable" => (
            CurveField::one_variable(alpha, par, move |x| 1.0 + amp * (w * x).sin())?,
            side / 8.0,
        ),
        "lipschitz" => {
            let lip = amp * w * std::f64::consts::SQRT_2;
            let f = CurveField::lipschitz(alpha, par, lip, move |x, y| 1.0 + amp * (w * x).sin() * (w * y).cos())?;
            (f, TruncationScheme::lipschitz_default(alpha, lip).min(side / 4.0))
        }
        "measurable" => {
            let cell = cfg.get("cell", side / 32.0)?;
            (CurveField::measurable(alpha, par, rough(cfg.seed, side, cell))?, side / 4.0)
        }
        "adversarial" => (
            CurveField::adversarial_ball(alpha, par, (0.0, 0.0), cfg.get("clip", 1000.0)?)?,
            side / 4.0,
        ),
        other => return Err(config_err(format!("unknown field `{other}`"))),
    };
    Ok((f, kind, cfg.get("eps0", eps0)?))
}

/// Truncation with about two nodes per grid cell, rounded so the ladder halves evenly.
fn truncation(grid: &TorusGrid, eps0: f64, ladder_len: usize) -> Result<TruncationScheme> {
    let unit = 1usize << ladder_len.saturating_sub(1);
    let want = (2.0 * eps0 / grid.spacing()).ceil() as usize;
    TruncationScheme::new(eps0, want.div_ceil(unit).max(1) * unit, ladder_len)
}

fn ratio(num: &GridFunction, den: &GridFunction, p: f64) -> Result<f64> {
    let d = den.norm_lp(p)?;
    if d == 0.0 {
        return Err(Error::TrivialFamily);
    }
    Ok(num.norm_lp(p)? / d)
}

/// Random annulus fields at `ks`, a plane wave, balls and axis rectangles at
/// three radii and a long thin tilted rectangle.
fn library(grid: TorusGrid, ks: &[f64], seed: u64) -> Result<Vec<GridFunction>> {
    let side = grid.side();
    let mut out = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        out.push(random_field(grid, mix_seed(seed, i as u64), Band::Annulus { k })?);
    }
    let (a, b) = (3.0 * TAU / side, 2.0 * TAU / side);
    out.push(GridFunction::from_fn(grid, |x, y| Complex64::from_polar(1.0, a * x + b * y)));
    for r in [side / 8.0, side / 16.0, side / 32.0] {
        out.push(GridFunction::from_real_fn(grid, |x, y| f64::from(x * x + y * y <= r * r)));
        out.push(GridFunction::from_real_fn(grid, |x, y| f64::from(x.abs() <= r && y.abs() <= 0.5 * r)));
    }
    let (c, s) = ((PI / 6.0).cos(), (PI / 6.0).sin());
    out.push(GridFunction::from_real_fn(grid, |x, y| {
        f64::from((c * x + s * y).abs() <= side / 4.0 && (-s * x + c * y).abs() <= side / 64.0)
    }));
    Ok(out)
}

fn with_fit(mut res: SweepResult, points: Vec<(f64, f64)>, axes: (&str, &str), semilog: bool) -> SweepResult {
    if points.len() >= 3 {
        let fit: Result<FitResult> = if semilog { fit_semilog(&points) } else { fit_exponent(&points) };
        if let Ok(f) = fit {
            res.fit = Some(f);
            res.fit_axes = Some((axes.0.to_string(), axes.1.to_string()));
        }
    }
    res
}

#[derive(Clone, Copy)]
enum Operator {
    Maximal,
    Hilbert,
}

fn norm_stability(cfg: &ExperimentConfig, op: Operator) -> Result<SweepResult> {
    let side = cfg.get("side", 4.0)?;
    let ns: Vec<usize> = cfg.list("n", &[64, 128, 256])?;
    let ps: Vec<f64> = cfg.list("p", &[1.5, 2.0, 4.0])?;
    let (default_kind, ladder_default) = match op {
        Operator::Maximal => ("lipschitz", 6),
        Operator::Hilbert => ("one-variable", 1),
    };
    let (field, kind, eps0) = field(cfg, side, default_kind)?;
    let ladder_len = cfg.get("ladder_len", ladder_default)?;
    let coarse = ns.iter().copied().min().ok_or_else(|| config_err("empty n"))?;
    let nyq = PI * coarse as f64 / side;
    let top = (nyq.log2() - 1.0).floor();
    let ks: Vec<f64> = cfg.list("k", &[top - 2.0, top - 1.0, top])?;
    let name = match op {
        Operator::Maximal => "max-norm-stability",
        Operator::Hilbert => "ht-one-variable",
    };
    let mut res = SweepResult::new(name, &["n", "p", "ratio"]);
    res.meta.push(("field".into(), kind));
    for &n in &ns {
        let grid = grid2(n, side)?;
        let trunc = truncation(&grid, eps0, ladder_len)?;
        let fs = library(grid, &ks, cfg.seed)?;
        let outs: Vec<GridFunction> = fs
            .iter()
            .map(|f| match op {
                Operator::Maximal => maximal_along_curve(f, &field, &trunc),
                Operator::Hilbert => hilbert_along_curve(f, &field, &trunc),
            })
            .collect::<Result<_>>()?;
        for &p in &ps {
            let mut best = 0.0f64;
            for (f, o) in fs.iter().zip(&outs) {
                best = best.max(ratio(o, f, p)?);
            }
            res.push(vec![n.into(), p.into(), best.into()]);
        }
    }
    let pts = res.max_by("n", "ratio").unwrap_or_default();
    Ok(with_fit(res, pts, ("n", "ratio"), false))
}

fn single_annulus(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let side = cfg.get("side", 4.0)?;
    let n = cfg.get("n", 128usize)?;
    let grid = grid2(n, side)?;
    let (field, kind, eps0) = field(cfg, side, "measurable")?;
    let trunc = truncation(&grid, eps0, 1)?;
    let ks: Vec<i32> = cfg.list("k", &[1, 2, 3, 4])?;
    let ps: Vec<f64> = cfg.list("p", &[1.5, 2.0, 3.0, 4.0])?;
    let trials = cfg.get("trials", 4usize)?;
    let nyq = grid.nyquist();
    let mut res = SweepResult::new("single-annulus-measurable", &["k", "p", "trial", "ratio"]);
    res.meta.push(("field".into(), kind));
    for &k in &ks {
        let pieces: Vec<(GridFunction, GridFunction)> = (0..trials)
            .map(|t| {
                let seed = mix_seed(cfg.seed, ((k as i64 as u64) << 32) | t as u64);
                let f = random_field(grid, seed, Band::Centered { xi_max: nyq, eta_max: nyq })?;
                let pf = project_second(&f, k as f64)?;
                let h = hilbert_along_curve(&pf, &field, &trunc)?;
                Ok((pf, h))
            })
            .collect::<Result<_>>()?;
        for &p in &ps {
            for (t, (pf, h)) in pieces.iter().enumerate() {
                res.push(vec![k.into(), p.into(), t.into(), ratio(h, pf, p)?.into()]);
            }
        }
    }
    Ok(res)
}

fn sharpness_ball(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let side = cfg.get("side", 4.0)?;
    let grid = grid2(cfg.get("n", 512usize)?, side)?;
    let (field, kind, eps0) = field(cfg, side, "adversarial")?;
    let trunc = truncation(&grid, eps0, cfg.get("ladder_len", 8)?)?;
    let p = cfg.get("p", 1.5)?;
    let radii: Vec<f64> = cfg.list("radius", &[0.25, 0.125, 0.0625])?;
    let mut res = SweepResult::new("sharpness-ball", &["radius", "ratio"]);
    res.meta.push(("field".into(), kind));
    let mut pts = Vec::new();
    for &r in &radii {
        let f = GridFunction::from_real_fn(grid, |x, y| f64::from(x * x + y * y <= r * r));
        let m = maximal_along_curve(&f, &field, &trunc)?;
        let q = ratio(&m, &f, p)?;
        res.push(vec![r.into(), q.into()]);
        pts.push((1.0 / r, q));
    }
    Ok(with_fit(res, pts, ("1/radius", "ratio"), false))
}

fn shifted_growth(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let len = cfg.get("length", 4096usize)?;
    let shifts: Vec<i64> = cfg.list("shift", &[1, 2, 4, 8, 16, 32, 64, 128, 256])?;
    let trials = cfg.get("trials", 10usize)?;
    let size = cfg.get("family", 8usize)?;
    let (p, q) = (cfg.get("p", 2.0)?, cfg.get("q", 2.0)?);
    let families: Vec<Vec<Vec<f64>>> = (0..trials)
        .map(|t| {
            (0..size)
                .map(|k| {
                    let s = mix_seed(mix_seed(cfg.seed, t as u64), k as u64);
                    (0..len)
                        .map(|i| (mix_seed(s, i as u64) >> 11) as f64 / (1u64 << 53) as f64)
                        .map(|u| u.powi(4))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut res = SweepResult::new("shifted-max-growth", &["n", "trial", "ratio", "normalized"]);
    for &n in &shifts {
        let ratios: Vec<f64> = families.par_iter().map(|fam| vv_norm_ratio(fam, n, p, q)).collect::<Result<_>>()?;
        let log = (2.0 + n.abs() as f64).ln();
        for (t, r) in ratios.into_iter().enumerate() {
            res.push(vec![n.into(), t.into(), r.into(), (r / (log * log)).into()]);
        }
    }
    let pts: Vec<(f64, f64)> = res
        .max_by("n", "ratio")
        .unwrap_or_default()
        .into_iter()
        .map(|(n, r)| ((2.0 + n.abs()).ln(), r))
        .collect();
    Ok(with_fit(res, pts, ("ln(2+n)", "ratio"), false))
}

fn lemma_decay(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let alpha = cfg.get("alpha", 3.0)?;
    let (h, w) = (cfg.get("h", 1.0)?, cfg.get("w", 0.0)?);
    let ls: Vec<u32> = cfg.list("l", &[2, 3, 4, 5, 6, 7, 8])?;
    let samples = cfg.get("samples", 12usize)?;
    let depth = cfg.get("depth", 1024usize)?;
    let mut res = SweepResult::new("lemma21-decay", &["l", "sup"]);
    let mut pts = Vec::new();
    for &l in &ls {
        let base = OscillatoryKernelParams::new(alpha, l, h, w, 0.0)?;
        let s = kernel_sup(&base, samples, depth)?;
        res.push(vec![(l as i64).into(), s.into()]);
        pts.push((l as f64, s));
    }
    Ok(with_fit(res, pts, ("l", "sup"), true))
}

fn annulus_decay(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let alpha = cfg.get("alpha", 3.0)?;
    let n = cfg.get("n", 16usize)?;
    let side = cfg.get("side", 1.0 / 32.0)?;
    let grid = TorusGrid::new(n, side, Dims::One)?;
    let cell = cfg.get("cell", side / n as f64)?;
    let g = random_field(grid, mix_seed(cfg.seed, 0), Band::Centered { xi_max: 0.9 * grid.nyquist(), eta_max: 0.0 })?;
    let field = CurveField::measurable(alpha, parity(cfg)?, rough(mix_seed(cfg.seed, 1), side, cell))?;
    let ls: Vec<i32> = cfg.list("l", &[1, 2, 3, 4, 5, 6, 7])?;
    let depth = cfg.get("depth", 256usize)?;
    let mut res = SweepResult::new("annulus-decay-1d", &["l", "ratio"]);
    let mut pts = Vec::new();
    for &l in &ls {
        let r = annulus_decay_1d(&g, &field, l, depth)?;
        res.push(vec![l.into(), r.into()]);
        pts.push((l as f64, r));
    }
    Ok(with_fit(res, pts, ("l", "ratio"), true))
}

fn multiplier_sum(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let (xi, eta) = (cfg.get("xi", 1.0)?, cfg.get("eta", 1.0)?);
    let ranges: Vec<u32> = cfg.list("jk_range", &[0, 5, 10, 20, 30])?;
    let mut res = SweepResult::new("multiplier-sum", &["jk_range", "sum"]);
    for &r in &ranges {
        res.push(vec![(r as i64).into(), multiplier_diff_sum(xi, eta, r).into()]);
    }
    Ok(res)
}

fn local_smoothing(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let alpha = cfg.get("alpha", 2.0)?;
    let p = cfg.get("p", 4.0)?;
    let grid = grid2(cfg.get("n", 512usize)?, cfg.get("side", 2.0)?)?;
    let ks: Vec<i32> = cfg.list("k", &[3, 4, 5, 6, 7, 8])?;
    let trials = cfg.get("trials", 4usize)?;
    let fixed: Option<usize> = cfg.maybe("u_samples")?;
    let mut res = SweepResult::new("local-smoothing", &["k", "u_samples", "trial", "ratio"]);
    for &k in &ks {
        let us = fixed.unwrap_or(((1usize << k.max(0)) / 4 + 1).max(9));
        let seed = mix_seed(cfg.seed, k as i64 as u64);
        for (t, r) in local_smoothing_trials(k, p, alpha, us, grid, trials, seed)?.into_iter().enumerate() {
            res.push(vec![k.into(), us.into(), t.into(), r.into()]);
        }
    }
    let pts = res.max_by("k", "ratio").unwrap_or_default();
    Ok(with_fit(res, pts, ("k", "ratio"), true))
}

fn decoupling(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let p = cfg.get("p", 4.0)?;
    let deltas: Vec<f64> = cfg.list("delta", &[0.5, 0.25, 0.125, 0.0625])?;
    let trials = cfg.get("trials", 32usize)?;
    let depth = cfg.get("depth", 64usize)?;
    let mut res = SweepResult::new("decoupling", &["delta", "trial", "ratio"]);
    let mut pts = Vec::new();
    for &d in &deltas {
        let model = CoefficientModel::Gaussian { trials, seed: cfg.seed };
        let rs = decoupling_ratios(&model, d, p, depth)?;
        pts.push((1.0 / d, rs.iter().copied().fold(0.0, f64::max)));
        for (t, r) in rs.into_iter().enumerate() {
            res.push(vec![d.into(), t.into(), r.into()]);
        }
    }
    Ok(with_fit(res, pts, ("1/delta", "ratio"), false))
}

fn interval(cfg: &ExperimentConfig, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
    let v: Vec<f64> = cfg.list(key, &[default.0, default.1])?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(config_err(format!("`{key}` needs two endpoints"))),
    }
}

fn bilinear(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let spacings: Vec<f64> = cfg.list("spacing", &[1.0, 0.5])?;
    let radius = cfg.get("radius", 64.0)?;
    let nu = cfg.get("nu", 0.25)?;
    let r1 = interval(cfg, "r1", (0.0, 0.25))?;
    let r2 = interval(cfg, "r2", (0.5, 0.75))?;
    let cells = cfg.get("cells", 8usize)?;
    let trials = cfg.get("trials", 32usize)?;
    let depth = cfg.get("depth", 64usize)?;
    let gs: Vec<(Density, Density)> = (0..trials as u64)
        .map(|t| {
            Ok((
                Density::gaussian(r1.0, r1.1, cells, mix_seed(cfg.seed, 2 * t))?,
                Density::gaussian(r2.0, r2.1, cells, mix_seed(cfg.seed, 2 * t + 1))?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut res = SweepResult::new("bilinear", &["spacing", "trial", "ratio"]);
    for &s in &spacings {
        let lat = Lattice::new((0.0, 0.0), s, radius)?;
        for (t, (g1, g2)) in gs.iter().enumerate() {
            let r = bilinear_ratio(g1, g2, r1, r2, nu, &lat, depth)?;
            res.push(vec![s.into(), t.into(), r.into()]);
        }
    }
    let pts: Vec<(f64, f64)> = res
        .max_by("spacing", "ratio")
        .unwrap_or_default()
        .into_iter()
        .map(|(s, r)| (1.0 / s, r))
        .collect();
    Ok(with_fit(res, pts, ("1/spacing", "ratio"), false))
}

fn carleson(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let alpha = cfg.get("alpha", 3.0)?;
    let grid = TorusGrid::new(cfg.get("n", 1024usize)?, cfg.get("side", 32.0)?, Dims::One)?;
    let band = cfg.get("band", 20.0)?;
    let g = random_field(grid, cfg.seed, Band::Centered { xi_max: band, eta_max: 0.0 })?;
    let (u1, u2) = (cfg.get("u1_max", 8.0)?, cfg.get("u2_max", 4.0)?);
    let ladder = cfg.get("ladder", 8usize)?;
    let nodes = cfg.get("nodes", 2048usize)?;
    let eps0 = cfg.get("eps0", 4.0)?;
    let levels: Vec<u32> = cfg.list("level", &[0, 1])?;
    let par = parity(cfg)?;
    let spread = |m: usize, top: f64| -> Vec<f64> {
        if m < 2 {
            return vec![0.0];
        }
        (0..m).map(|i| -top + 2.0 * top * i as f64 / (m - 1) as f64).collect()
    };
    let mut res = SweepResult::new("carleson-sup", &["level", "ladder", "nodes", "ratio"]);
    let mut pts = Vec::new();
    for &lev in &levels {
        let (m, q) = (ladder << lev, nodes << lev);
        let trunc = TruncationScheme::new(eps0, q, 1)?;
        let s = carleson_sup(&g, alpha, par, &spread(m, u1), &spread(m, u2), &trunc)?;
        let r = ratio(&s, &g, 2.0)?;
        res.push(vec![(lev as i64).into(), m.into(), q.into(), r.into()]);
        pts.push((lev as f64, r));
    }
    Ok(with_fit(res, pts, ("level", "ratio"), true))
}

fn rectangle_domination(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let alpha = cfg.get("alpha", 2.0)?;
    let field = CurveField::constant(alpha, parity(cfg)?, cfg.get("u", 1.0)?)?;
    let side = cfg.get("side", 64.0)?;
    let ns: Vec<usize> = cfg.list("n", &[32, 64])?;
    let js: Vec<i32> = cfg.list("j", &[1, 2, 3])?;
    let depth = cfg.get("depth", 4096usize)?;
    let window = cfg.get("tau_window", 4usize)?;
    let mut res = SweepResult::new("rectangle-domination", &["n", "j", "constant"]);
    for &n in &ns {
        let grid = grid2(n, side)?;
        let f = GridFunction::from_real_fn(grid, |x, y| f64::from((x - 3.0).abs() < 6.0 && y.abs() < 10.0));
        for &j in &js {
            let piece = truncated_piece(&f, &field, j, depth)?;
            let maj = rectangle_majorant(&f, &field, j, window)?;
            let c = piece
                .samples()
                .iter()
                .zip(maj.samples())
                .map(|(a, m)| if m.re > 0.0 { a.norm() / m.re } else if a.norm() > 0.0 { f64::INFINITY } else { 0.0 })
                .fold(0.0, f64::max);
            res.push(vec![n.into(), j.into(), c.into()]);
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_rounds_to_ladder() {
        let grid = grid2(64, 4.0).unwrap();
        let t = truncation(&grid, 1.0, 6).unwrap();
        assert_eq!(t.nodes_per_side % 32, 0);
        assert!(t.dt() <= grid.spacing() / 2.0 + 1e-15);
    }

    #[test]
    fn rough_field_is_in_range_and_cellwise() {
        let u = rough(3, 4.0, 0.5);
        assert_eq!(u(0.1, 0.1), u(0.2, 0.4));
        for i in 0..50 {
            let v = u(-2.0 + 0.08 * i as f64, 1.3);
            assert!((1.0..2.0).contains(&v));
        }
    }
}
