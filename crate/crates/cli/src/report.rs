//! Fit reports and their text, CSV and JSON renderings.

use std::fmt::Write as _;

use ccal_core::Fit;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Usual,
    Proposed,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Usual => "usual",
            Model::Proposed => "proposed",
        }
    }

    fn column_title(self) -> &'static str {
        match self {
            Model::Usual => "Usual-M",
            Model::Proposed => "Proposed-M",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: Model,
    pub analyte_label: String,
    pub fit: Fit,
    pub input_digest: String,
}

/// SHA-256 of the standards bytes, a NUL separator and the sample bytes.
pub fn input_digest(standards: &[u8], sample: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(standards);
    h.update([0u8]);
    h.update(sample);
    hex::encode(h.finalize())
}

/// `v` with `digits` significant figures in fixed notation.
pub fn sig_figs(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new digit (9.9999995 -> 10.000000).
    let rounded: f64 = s.parse().unwrap_or(v);
    if rounded != 0.0 && (rounded.abs().log10().floor() as i64) > mag && decimals > 0 {
        let d = decimals - 1;
        return format!("{v:.d$}");
    }
    s
}

/// Scientific notation with a two-digit exponent, e.g. `4.357870e-06`.
pub fn scientific(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let prec = digits.saturating_sub(1);
    let s = format!("{v:.prec$e}");
    let (mant, exp) = s.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

type Cell = Box<dyn Fn(&Fit) -> String>;

/// Parameters as rows and one column per model.
pub fn render_text(reports: &[FitReport], level: f64) -> String {
    let mut out = String::new();
    if let Some(first) = reports.first() {
        let _ = writeln!(out, "Analyte: {}", first.analyte_label);
        let _ = writeln!(out, "Input sha256: {}", first.input_digest);
    }
    let rows: Vec<(String, Cell)> = vec![
        ("alpha".into(), Box::new(|f: &Fit| sig_figs(f.theta_hat.alpha, 7))),
        ("beta".into(), Box::new(|f: &Fit| sig_figs(f.theta_hat.beta, 7))),
        ("X0".into(), Box::new(|f: &Fit| sig_figs(f.theta_hat.x0, 7))),
        ("V(X0)".into(), Box::new(|f: &Fit| scientific(f.var_x0, 7))),
        ("U(X0)".into(), Box::new(|f: &Fit| sig_figs(f.expanded_uncertainty, 7))),
        (
            format!(
                "CI {}%",
                sig_figs(level * 100.0, 4).trim_end_matches('0').trim_end_matches('.')
            ),
            Box::new(|f: &Fit| format!("[{}, {}]", sig_figs(f.ci_lower, 7), sig_figs(f.ci_upper, 7))),
        ),
        (
            "sigma_eps2".into(),
            Box::new(|f: &Fit| scientific(f.theta_hat.sigma_eps2, 7)),
        ),
        ("converged".into(), Box::new(|f: &Fit| yes_no(f.converged).to_string())),
        ("iterations".into(), Box::new(|f: &Fit| f.iterations.to_string())),
    ];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|(_, g)| reports.iter().map(|r| g(&r.fit)).collect())
        .collect();
    let label_w = rows
        .iter()
        .map(|(l, _)| l.len())
        .max()
        .unwrap_or(0)
        .max("Parameter".len());
    let widths: Vec<usize> = reports
        .iter()
        .enumerate()
        .map(|(j, r)| {
            cells
                .iter()
                .map(|c| c[j].len())
                .chain([r.model.column_title().len()])
                .max()
                .unwrap_or(0)
        })
        .collect();

    let _ = write!(out, "{:<label_w$}", "Parameter");
    for (r, w) in reports.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", r.model.column_title());
    }
    out.push('\n');
    for ((label, _), row) in rows.iter().zip(&cells) {
        let _ = write!(out, "{label:<label_w$}");
        for (c, w) in row.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
    out
}

pub const CSV_HEADER: &str = "analyte,model,alpha,beta,x0,sigma_eps2,var_x0,ci_lower,ci_upper,expanded_uncertainty,log_likelihood,converged,iterations,score_residual_norm,input_digest";

/// One row per report at full (round-trip) precision.
pub fn render_csv(reports: &[FitReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    for r in reports {
        let f = &r.fit;
        let t = &f.theta_hat;
        w.write_record([
            r.analyte_label.clone(),
            r.model.name().to_string(),
            t.alpha.to_string(),
            t.beta.to_string(),
            t.x0.to_string(),
            t.sigma_eps2.to_string(),
            f.var_x0.to_string(),
            f.ci_lower.to_string(),
            f.ci_upper.to_string(),
            f.expanded_uncertainty.to_string(),
            f.log_likelihood.to_string(),
            f.converged.to_string(),
            f.iterations.to_string(),
            f.score_residual_norm.to_string(),
            r.input_digest.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[derive(Serialize)]
struct JsonReport<'a> {
    model: Model,
    analyte: &'a str,
    alpha: f64,
    beta: f64,
    x0: f64,
    sigma_eps2: f64,
    var_x0: f64,
    ci: [f64; 2],
    expanded_uncertainty: f64,
    /// `null` when infinite (noise-free data).
    log_likelihood: Option<f64>,
    converged: bool,
    iterations: usize,
    score_residual_norm: f64,
    input_digest: &'a str,
}

/// A JSON array with one object per report.
pub fn render_json(reports: &[FitReport]) -> String {
    let items: Vec<JsonReport> = reports
        .iter()
        .map(|r| {
            let f = &r.fit;
            JsonReport {
                model: r.model,
                analyte: &r.analyte_label,
                alpha: f.theta_hat.alpha,
                beta: f.theta_hat.beta,
                x0: f.theta_hat.x0,
                sigma_eps2: f.theta_hat.sigma_eps2,
                var_x0: f.var_x0,
                ci: [f.ci_lower, f.ci_upper],
                expanded_uncertainty: f.expanded_uncertainty,
                log_likelihood: f.log_likelihood.is_finite().then_some(f.log_likelihood),
                converged: f.converged,
                iterations: f.iterations,
                score_residual_norm: f.score_residual_norm,
                input_digest: &r.input_digest,
            }
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&items).expect("reports serialize");
    s.push('\n');
    s
}
