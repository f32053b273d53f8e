use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::SweepResult;
use crate::error::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(io_err(path))
}

/// CSV text: a header naming every column, then one line per row.
pub fn csv_string(result: &SweepResult) -> String {
    let mut out = result.columns.join(",");
    out.push('\n');
    for row in &result.rows {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &csv_string(result))
}

#[derive(Serialize)]
struct FitJson<'a> {
    experiment: &'a str,
    abscissa: Option<&'a str>,
    ordinate: Option<&'a str>,
    slope: Option<f64>,
    intercept: Option<f64>,
    r_squared: Option<f64>,
}

/// `fit.json`: slope, intercept and R² (all `null` when no axis was fitted).
pub fn emit_fit(result: &SweepResult, path: &Path) -> Result<()> {
    let axes = result.fit_axes.as_ref();
    let fit = result.fit.as_ref();
    let body = FitJson {
        experiment: &result.experiment,
        abscissa: axes.map(|a| a.0.as_str()),
        ordinate: axes.map(|a| a.1.as_str()),
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r_squared: fit.map(|f| f.r_squared),
    };
    let text = serde_json::to_string_pretty(&body).expect("plain struct serializes");
    write_file(path, &(text + "\n"))
}

/// Self-contained SVG of the fitted `(x, log2 value)` points and the fitted line.
pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    write_file(path, &plot_string(result))
}

pub fn plot_string(result: &SweepResult) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    let points: Vec<(f64, f64)> = result.fit.as_ref().map(|f| f.points.clone()).unwrap_or_default();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, result.experiment);
    let (xl, yl) = result
        .fit_axes
        .as_ref()
        .map(|(a, b)| (a.clone(), format!("log2 {b}")))
        .unwrap_or_default();
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{xl}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{yl}</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    if let (Some(fit), false) = (&result.fit, points.is_empty()) {
        let (x0, x1) = span(points.iter().map(|p| p.0));
        let ys = points.iter().map(|p| p.1).chain([fit.predict(x0), fit.predict(x1)]);
        let (y0, y1) = span(ys);
        let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
        let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
        for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
            let _ = writeln!(svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{v:.3}</text>"#, H - M + 16.0);
        }
        for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
            let _ = writeln!(svg, r#"<text x="{}" y="{y:.1}" text-anchor="end">{v:.3}</text>"#, M - 6.0);
        }
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-width="1.5"/>"#,
            sx(x0),
            sy(fit.predict(x0)),
            sx(x1),
            sy(fit.predict(x1))
        );
        for &(x, y) in &points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="firebrick"/>"#, sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">slope {:.4}, R² {:.4}</text>"#,
            W - M - 6.0,
            M + 16.0,
            fit.slope,
            fit.r_squared
        );
    } else {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no fitted axis</text>"#, W / 2.0, H / 2.0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Writes `result.csv`, `fit.json` and `plot.svg` under `<root>/<experiment>/<tag>/`.
pub fn write_outputs(result: &SweepResult, root: &Path, tag: &str) -> Result<PathBuf> {
    let dir = root.join(&result.experiment).join(tag);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    emit_csv(result, &dir.join("result.csv"))?;
    emit_fit(result, &dir.join("fit.json"))?;
    emit_plot(result, &dir.join("plot.svg"))?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit_semilog;

    fn sample(rows: usize) -> SweepResult {
        let mut r = SweepResult::new("lemma21-decay", &["l", "sup"]);
        for i in 0..rows {
            r.push(vec![(i as i64).into(), (0.5f64.powi(i as i32) * 1.1).into()]);
        }
        r
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        assert_eq!(csv_string(&sample(0)), "l,sup\n");
        let text = csv_string(&sample(3));
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().nth(1), Some("0,1.1"));
    }

    #[test]
    fn outputs_are_byte_identical_on_rerun() {
        let mut r = sample(4);
        let pts: Vec<(f64, f64)> = r.max_by("l", "sup").unwrap();
        r.fit = Some(fit_semilog(&pts).unwrap());
        r.fit_axes = Some(("l".into(), "sup".into()));
        let dir = tempfile::tempdir().unwrap();
        let a = write_outputs(&r, dir.path(), "x").unwrap();
        let first: Vec<Vec<u8>> = ["result.csv", "fit.json", "plot.svg"]
            .iter()
            .map(|f| std::fs::read(a.join(f)).unwrap())
            .collect();
        write_outputs(&r, dir.path(), "x").unwrap();
        for (f, old) in ["result.csv", "fit.json", "plot.svg"].iter().zip(&first) {
            assert_eq!(&std::fs::read(a.join(f)).unwrap(), old, "{f}");
        }
        let json: serde_json::Value = serde_json::from_slice(&first[1]).unwrap();
        assert!((json["slope"].as_f64().unwrap() + 1.0).abs() < 1e-12);
        assert!(String::from_utf8_lossy(&first[2]).starts_with("<svg"));
    }

    #[test]
    fn fit_json_is_null_without_a_fit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fit.json");
        emit_fit(&sample(2), &p).unwrap();
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        assert!(json["slope"].is_null() && json["r_squared"].is_null());
    }
}
