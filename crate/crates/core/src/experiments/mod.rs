//! Parameter sweeps over the operators of this crate, with CSV, JSON and SVG
//! output.

mod config;
mod output;
mod runners;

use std::fmt;

pub use config::ExperimentConfig;
pub use output::{csv_string, emit_csv, emit_fit, emit_plot, plot_string, write_outputs};

use crate::error::{Error, Result};
use crate::fit::FitResult;

/// Every experiment [`run_experiment`] knows, in `curvelab list` order.
pub const EXPERIMENTS: [&str; 13] = [
    "max-norm-stability",
    "ht-one-variable",
    "single-annulus-measurable",
    "sharpness-ball",
    "shifted-max-growth",
    "lemma21-decay",
    "annulus-decay-1d",
    "multiplier-sum",
    "local-smoothing",
    "decoupling",
    "bilinear",
    "carleson-sup",
    "rectangle-domination",
];

/// One CSV cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(i) => i as f64,
            Value::Float(x) => x,
        }
    }
}

impl fmt::Display for Value {
    /// Integers plainly, floats in shortest round-trip form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

/// Rows of parameters and measurements, plus an optional fit along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub fit: Option<FitResult>,
    /// `(abscissa, ordinate)` column names of the fit.
    pub fit_axes: Option<(String, String)>,
    /// Free-form `key = value` notes (field class and the like).
    pub meta: Vec<(String, String)>,
}

impl SweepResult {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            fit: None,
            fit_axes: None,
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    /// `(key, max value)` over rows grouped by `key`, in order of first appearance.
    pub fn max_by(&self, key: &str, value: &str) -> Option<Vec<(f64, f64)>> {
        let (k, v) = (self.column_index(key)?, self.column_index(value)?);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for row in &self.rows {
            let (a, b) = (row[k].as_f64(), row[v].as_f64());
            match out.iter_mut().find(|p| p.0 == a) {
                Some(p) => p.1 = p.1.max(b),
                None => out.push((a, b)),
            }
        }
        Some(out)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Runs the experiment named in `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    runners::run(config)
}

/// Estimated peak memory of `config` in bytes.
pub fn estimate_memory(config: &ExperimentConfig) -> Result<u64> {
    runners::estimate(config)
}

/// Outcome of an acceptance guard.
#[derive(Clone, Debug, PartialEq)]
pub struct Guard {
    pub passed: bool,
    pub detail: String,
}

/// `max / min - 1` over positive values.
pub fn drift(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > 0.0 {
        hi / lo - 1.0
    } else {
        f64::INFINITY
    }
}

/// The pass/fail check `--check` applies to a finished sweep, if the
/// experiment has one.
pub fn acceptance_guard(result: &SweepResult) -> Option<Guard> {
    let fit = result.fit.as_ref();
    let slope_check = |max_slope: f64, min_r2: f64| {
        let f = fit?;
        Some(Guard {
            passed: f.slope <= max_slope && f.r_squared >= min_r2,
            detail: if min_r2.is_finite() {
                format!("slope {:.4} (<= {max_slope}), R² {:.4} (>= {min_r2})", f.slope, f.r_squared)
            } else {
                format!("slope {:.4} (<= {max_slope}), R² {:.4}", f.slope, f.r_squared)
            },
        })
    };
    let drift_check = |key: &str, value: &str, group: Option<&str>| {
        let groups: Vec<f64> = match group {
            Some(g) => {
                let mut seen: Vec<f64> = Vec::new();
                for v in result.column(g)? {
                    if !seen.contains(&v) {
                        seen.push(v);
                    }
                }
                seen
            }
            None => vec![f64::NAN],
        };
        let mut worst = 0.0f64;
        for g in groups {
            let mut sub = result.clone();
            if let Some(name) = group {
                let gi = sub.column_index(name)?;
                sub.rows.retain(|r| r[gi].as_f64() == g);
            }
            let vals: Vec<f64> = sub.max_by(key, value)?.into_iter().map(|p| p.1).collect();
            worst = worst.max(drift(&vals));
        }
        Some(Guard {
            passed: worst < 0.2,
            detail: format!("drift {:.2}% (< 20%)", 100.0 * worst),
        })
    };
    match result.experiment.as_str() {
        "lemma21-decay" => slope_check(-0.5, 0.8),
        "annulus-decay-1d" => {
            let f = fit?;
            Some(Guard {
                passed: f.slope < 0.0,
                detail: format!("slope {:.4} (< 0)", f.slope),
            })
        }
        "local-smoothing" => slope_check(-0.05, 0.6),
        "decoupling" => slope_check(0.25, f64::NEG_INFINITY),
        "bilinear" => drift_check("spacing", "ratio", None),
        "carleson-sup" => drift_check("level", "ratio", None),
        "rectangle-domination" => {
            let c = result.column("constant")?;
            let finite = c.iter().all(|v| v.is_finite() && *v > 0.0);
            let mut g = drift_check("n", "constant", Some("j"))?;
            g.passed &= finite;
            Some(g)
        }
        "max-norm-stability" | "ht-one-variable" => drift_check("n", "ratio", Some("p")),
        "sharpness-ball" => match result.meta("field") {
            Some("adversarial") | Some("measurable") => {
                let f = fit?;
                Some(Guard {
                    passed: f.slope > 0.2,
                    detail: format!("blowup slope {:.4} (> 0.2)", f.slope),
                })
            }
            _ => drift_check("radius", "ratio", None),
        },
        "multiplier-sum" => {
            let s = result.column("sum")?;
            let n = s.len();
            if n < 2 {
                return None;
            }
            let change = (s[n - 1] - s[n - 2]).abs() / s[n - 2];
            Some(Guard {
                passed: change < 0.01 && s[n - 2] <= 50.0,
                detail: format!("sum {:.4} (<= 50), last change {:.3}% (< 1%)", s[n - 2], 100.0 * change),
            })
        }
        "shifted-max-growth" => {
            let pts = result.max_by("n", "normalized")?;
            let base = pts.iter().find(|p| p.0 == 1.0)?.1;
            let worst = pts.iter().map(|p| p.1).fold(0.0, f64::max);
            Some(Guard {
                passed: worst <= 3.0 * base,
                detail: format!("max R(n)/log²(2+n) = {worst:.4}, 3 x R(1)/log²3 = {:.4}", 3.0 * base),
            })
        }
        _ => None,
    }
}

pub(crate) fn unknown(name: &str) -> Error {
    Error::Config(format!("unknown experiment `{name}`; try `curvelab list`"))
}
