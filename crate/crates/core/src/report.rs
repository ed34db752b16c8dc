//! Report type and its CSV, JSON and SVG renderings.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::functionals::HolderNorm;
use crate::rates::{RateFit, ReferenceExponent};

pub const SCHEMA_VERSION: &str = "1";

pub const CSV_HEADER: &str =
    "n,weak_err,weak_se,strong_err_p,strong_se,strong_lp_root,bound_prop21,bound_thm1,bound_thm2";

/// The configuration as it was run, in config-file vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub process: String,
    pub h: String,
    pub weight_v: String,
    pub majorant_q: String,
    pub horizon_t: f64,
    pub x0: f64,
    pub moment_p: f64,
    pub n_ladder: Vec<usize>,
    pub n_fine: usize,
    pub replicates_m: usize,
    pub seed: u64,
    pub abscissa_mode: String,
}

impl From<&ExperimentConfig> for ConfigEcho {
    fn from(cfg: &ExperimentConfig) -> Self {
        Self {
            process: cfg.process.describe(),
            h: cfg.h.describe(),
            weight_v: cfg.weight.describe(),
            majorant_q: cfg.majorant.describe(),
            horizon_t: cfg.horizon,
            x0: cfg.x0,
            moment_p: cfg.p,
            n_ladder: cfg.n_ladder.clone(),
            n_fine: cfg.n_fine,
            replicates_m: cfg.replicates,
            seed: cfg.seed,
            abscissa_mode: cfg.abscissa_mode.name().to_owned(),
        }
    }
}

/// One ladder rung. Strong quantities are on the `E|J|^p` scale except
/// `strong_lp_root`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungRecord {
    pub n: usize,
    pub weak_err: f64,
    pub weak_se: f64,
    pub strong_err_p: f64,
    pub strong_se: f64,
    pub strong_lp_root: f64,
    pub bound_prop21: Option<f64>,
    pub bound_thm1: f64,
    pub bound_thm2: Option<f64>,
    /// `E|J|^p` comparison curve anchored at the first rung
    pub reference_overlay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub norm_v: f64,
    pub v_at_x0: f64,
    pub holder: Option<HolderNorm>,
}

/// Grid-certified kernel constants; absent for processes without a
/// closed-form transition density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub density_constant: f64,
    pub derivative_constant: f64,
    pub c_t: f64,
    pub qv_integral: f64,
    pub c_tqv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// smallest C with `strong_err_p ≤ C · shape_thm1` at every rung
    pub thm1: f64,
    pub thm2: Option<f64>,
    /// max of `weak_err / bound_prop21`; at most 1 when the bound holds
    pub prop21_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    /// fit of `strong_lp_root`
    pub strong: Option<RateFit>,
    pub weak: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theory {
    /// slope of the `L_p` root under the first theorem in `log_n_over_log` mode
    pub thm1_root_slope: f64,
    /// extra decay `γ/(2α)` of the `L_p` root under the Hölder bound
    pub thm2_extra_decay: Option<f64>,
    pub reference: Option<ReferenceExponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub replicates_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub config: ConfigEcho,
    pub rows: Vec<RungRecord>,
    pub norms: Norms,
    pub kernel: Option<KernelConstants>,
    pub calibration: Calibration,
    pub fits: Fits,
    pub theory: Theory,
    pub timing: Timing,
}

fn check(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Report(format!("{name} is not finite ({x})")))
    }
}

fn check_opt(name: &str, x: Option<f64>) -> Result<()> {
    x.map_or(Ok(()), |x| check(name, x))
}

fn check_fit(name: &str, fit: &Option<RateFit>) -> Result<()> {
    if let Some(f) = fit {
        check(name, f.slope)?;
        check(name, f.intercept)?;
        check(name, f.r_squared)?;
    }
    Ok(())
}

impl Report {
    /// Errors if any numeric field is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        if self.schema_version.is_empty() {
            return Err(Error::Report("schema_version missing".into()));
        }
        for r in &self.rows {
            for (name, x) in [
                ("weak_err", r.weak_err),
                ("weak_se", r.weak_se),
                ("strong_err_p", r.strong_err_p),
                ("strong_se", r.strong_se),
                ("strong_lp_root", r.strong_lp_root),
                ("bound_thm1", r.bound_thm1),
            ] {
                check(name, x)?;
            }
            check_opt("bound_prop21", r.bound_prop21)?;
            check_opt("bound_thm2", r.bound_thm2)?;
            check_opt("reference_overlay", r.reference_overlay)?;
        }
        check("norm_v", self.norms.norm_v)?;
        check("v_at_x0", self.norms.v_at_x0)?;
        if let Some(k) = &self.kernel {
            for (name, x) in [
                ("density_constant", k.density_constant),
                ("derivative_constant", k.derivative_constant),
                ("c_t", k.c_t),
                ("qv_integral", k.qv_integral),
                ("c_tqv", k.c_tqv),
            ] {
                check(name, x)?;
            }
        }
        check("calibration.thm1", self.calibration.thm1)?;
        check_opt("calibration.thm2", self.calibration.thm2)?;
        check_opt("calibration.prop21_ratio", self.calibration.prop21_ratio)?;
        check_fit("fits.strong", &self.fits.strong)?;
        check_fit("fits.weak", &self.fits.weak)?;
        check("timing.wall_seconds", self.timing.wall_seconds)?;
        check("timing.replicates_per_second", self.timing.replicates_per_second)?;
        Ok(())
    }

    /// Copy with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.timing = Timing {
            wall_seconds: 0.0,
            replicates_per_second: 0.0,
        };
        r
    }
}

fn cell(x: Option<f64>) -> String {
    // `{}` on f64 prints the shortest string that round-trips
    x.map_or_else(String::new, |x| format!("{x}"))
}

pub fn render_csv(report: &Report) -> String {
    let mut out = String::with_capacity(128 * (report.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let cells = [
            r.n.to_string(),
            cell(Some(r.weak_err)),
            cell(Some(r.weak_se)),
            cell(Some(r.strong_err_p)),
            cell(Some(r.strong_se)),
            cell(Some(r.strong_lp_root)),
            cell(r.bound_prop21),
            cell(Some(r.bound_thm1)),
            cell(r.bound_thm2),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_json(text: &str) -> Result<Report> {
    let report: Report = serde_json::from_str(text)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::Report(format!(
            "unsupported schema_version `{}` (expected `{SCHEMA_VERSION}`)",
            report.schema_version
        )));
    }
    Ok(report)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

pub fn emit_csv(report: &Report, path: &Path) -> Result<()> {
    report.check_finite()?;
    write_file(path, &render_csv(report))
}

pub fn emit_json(report: &Report, path: &Path) -> Result<()> {
    report.check_finite()?;
    write_file(path, &render_json(report)?)
}

pub fn emit_svg(report: &Report, path: &Path) -> Result<()> {
    report.check_finite()?;
    write_file(path, &render_svg(report))
}

/// A named curve of `(n, value)` pairs on the `L_p`-root scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub colour: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

/// Curves drawn by [`render_svg`]; points with nonpositive values are
/// dropped, as are series left with no points.
pub fn plot_series(report: &Report) -> Vec<Series> {
    let root = 1.0 / report.config.moment_p;
    let rows = &report.rows;
    let collect = |f: &dyn Fn(&RungRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| f(r).filter(|v| *v > 0.0 && v.is_finite()).map(|v| (r.n as f64, v)))
            .collect()
    };
    let candidates = [
        ("strong L_p root", "#1f77b4", false, collect(&|r| Some(r.strong_lp_root))),
        ("weak |E J|", "#d62728", false, collect(&|r| Some(r.weak_err))),
        ("prop21 bound", "#ff7f0e", true, collect(&|r| r.bound_prop21)),
        ("thm1 bound (root)", "#2ca02c", true, collect(&|r| Some(r.bound_thm1.powf(root)))),
        ("thm2 bound (root)", "#9467bd", true, collect(&|r| r.bound_thm2.map(|b| b.powf(root)))),
        ("reference overlay (root)", "#7f7f7f", true, collect(&|r| r.reference_overlay.map(|b| b.powf(root)))),
    ];
    candidates
        .into_iter()
        .filter(|c| !c.3.is_empty())
        .map(|(label, colour, dashed, points)| Series {
            label: label.to_owned(),
            colour,
            dashed,
            points,
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log error curves with bound overlays and fitted slopes.
pub fn render_svg(report: &Report) -> String {
    const W: f64 = 760.0;
    const H: f64 = 500.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 230.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 60.0;

    let series = plot_series(report);
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (y0, y1) = (y0.floor(), y1.ceil());
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let title = format!("{} / {}  (p = {})", report.config.process, report.config.h, report.config.moment_p);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="24" font-size="14">{}</text>"#, escape(&title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for decade in (y0 as i32)..=(y1 as i32) {
        let y = sy(10f64.powi(decade));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for r in &report.rows {
        let x = sx(r.n as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            r.n
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#,
        LEFT + pw / 2.0,
        H - 16.0
    );

    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{}"><title>{}</title></polyline>"#,
            ser.colour,
            pts.join(" "),
            escape(&ser.label)
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                sx(x),
                sy(y),
                ser.colour
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/>"#,
            lx + 24.0,
            ser.colour
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }

    let mut note_y = TOP + 14.0 + 18.0 * series.len() as f64 + 16.0;
    for (name, fit) in [("strong", &report.fits.strong), ("weak", &report.fits.weak)] {
        if let Some(f) = fit {
            let text = format!(
                "{name} slope {:.3} ({}, R² {:.3})",
                f.slope,
                f.abscissa_mode.name(),
                f.r_squared
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{note_y}" font-size="11">{}</text>"#,
                LEFT + pw + 14.0,
                escape(&text)
            );
            note_y += 16.0;
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::AbscissaMode;

    pub(crate) fn sample_report() -> Report {
        let rows: Vec<RungRecord> = [8usize, 16, 32]
            .iter()
            .map(|&n| {
                let e = 1.0 / n as f64;
                RungRecord {
                    n,
                    weak_err: 0.1 * e,
                    weak_se: 0.01 * e,
                    strong_err_p: e * e,
                    strong_se: 0.01 * e * e,
                    strong_lp_root: e,
                    bound_prop21: Some(0.3 * e),
                    bound_thm1: 2.0 * e * e,
                    bound_thm2: None,
                    reference_overlay: None,
                }
            })
            .collect();
        Report {
            schema_version: SCHEMA_VERSION.into(),
            config: ConfigEcho {
                process: "brownian".into(),
                h: "indicator 0 1".into(),
                weight_v: "const".into(),
                majorant_q: "gaussian 0.25".into(),
                horizon_t: 1.0,
                x0: 0.0,
                moment_p: 2.0,
                n_ladder: vec![8, 16, 32],
                n_fine: 1024,
                replicates_m: 10,
                seed: 1,
                abscissa_mode: "log_n".into(),
            },
            norms: Norms {
                norm_v: 1.0,
                v_at_x0: 1.0,
                holder: None,
            },
            kernel: None,
            calibration: Calibration {
                thm1: 0.5,
                thm2: None,
                prop21_ratio: Some(0.3),
            },
            fits: Fits {
                strong: Some(
                    crate::rates::fit_rate(
                        &rows.iter().map(|r| (r.n, r.strong_lp_root)).collect::<Vec<_>>(),
                        AbscissaMode::LogN,
                    )
                    .unwrap(),
                ),
                weak: None,
            },
            rows,
            theory: Theory {
                thm1_root_slope: -0.5,
                thm2_extra_decay: None,
                reference: None,
            },
            timing: Timing {
                wall_seconds: 0.25,
                replicates_per_second: 40.0,
            },
        }
    }

    #[test]
    fn csv_shape() {
        let csv = render_csv(&sample_report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].ends_with(','), "missing thm2 should be an empty cell: {}", lines[1]);
    }

    #[test]
    fn json_round_trip() {
        let r = sample_report();
        let back = parse_json(&render_json(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn schema_version_enforced() {
        let mut r = sample_report();
        r.schema_version = "9".into();
        assert!(parse_json(&render_json(&r).unwrap()).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let mut r = sample_report();
        r.rows[1].weak_se = f64::NAN;
        assert!(r.check_finite().is_err());
    }

    #[test]
    fn svg_polyline_per_series() {
        let r = sample_report();
        let svg = render_svg(&r);
        assert_eq!(svg.matches("<polyline").count(), plot_series(&r).len());
        assert_eq!(plot_series(&r).len(), 4);
        assert!(svg.contains("strong slope -1.000"));
    }
}
