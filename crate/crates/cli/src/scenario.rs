//! Simulation scenario files and summary tables.
//!
//! A scenario file is a CSV with the required columns
//! `n,k,x0,alpha,beta,sigma_eps2,n_reps,seed`. Optional columns `ci_level`,
//! `x_grid` and `delta_var` override the defaults; the two vectors are
//! `;`-separated and an empty cell keeps the default rule. Lines starting
//! with `#` are ignored.

use std::fmt::Write as _;

use ccal_core::montecarlo::{default_delta_vars, default_grid};
use ccal_core::{ScenarioConfig, ScenarioSummary};

use crate::error::CliError;
use crate::report::sig_figs;

const REQUIRED: [&str; 8] = ["n", "k", "x0", "alpha", "beta", "sigma_eps2", "n_reps", "seed"];

fn parse_error(line: u64, column: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(raw: &str, line: u64, column: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| parse_error(line, column, format!("`{raw}` is not a valid {column}")))
}

fn parse_list(raw: &str, line: u64, column: &str) -> Result<Vec<f64>, CliError> {
    raw.split(';')
        .map(|s| parse_num::<f64>(s.trim(), line, column))
        .collect()
}

pub fn parse_scenarios(bytes: &[u8]) -> Result<Vec<ScenarioConfig>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(bytes);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(1, "header", e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for h in headers.iter() {
        if !REQUIRED.contains(&h) && !["ci_level", "x_grid", "delta_var"].contains(&h) {
            return Err(parse_error(1, h, "unknown column"));
        }
    }
    let mut idx = [0usize; 8];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| parse_error(1, name, "required column is missing"))?;
    }
    let (ci_col, grid_col, dv_col) = (col("ci_level"), col("x_grid"), col("delta_var"));

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_error(i as u64 + 2, "row", e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let get = |j: usize| rec.get(j).unwrap_or("");
        let n: usize = parse_num(get(idx[0]), line, "n")?;
        let k: usize = parse_num(get(idx[1]), line, "k")?;
        let x0: f64 = parse_num(get(idx[2]), line, "x0")?;
        let n_reps: usize = parse_num(get(idx[6]), line, "n_reps")?;
        let seed: u64 = parse_num(get(idx[7]), line, "seed")?;
        let mut cfg = ScenarioConfig::standard(n, k, x0, n_reps, seed);
        cfg.alpha_true = parse_num(get(idx[3]), line, "alpha")?;
        cfg.beta_true = parse_num(get(idx[4]), line, "beta")?;
        cfg.sigma_eps2_true = parse_num(get(idx[5]), line, "sigma_eps2")?;
        if let Some(c) = ci_col.filter(|&c| !get(c).is_empty()) {
            cfg.ci_level = parse_num(get(c), line, "ci_level")?;
        }
        cfg.x_grid = match grid_col.filter(|&c| !get(c).is_empty()) {
            Some(c) => parse_list(get(c), line, "x_grid")?,
            None => default_grid(n),
        };
        cfg.delta_var_rule = match dv_col.filter(|&c| !get(c).is_empty()) {
            Some(c) => parse_list(get(c), line, "delta_var")?,
            None => default_delta_vars(n),
        };
        cfg.check().map_err(|e| parse_error(line, "row", e.to_string()))?;
        out.push(cfg);
    }
    Ok(out)
}

/// Column names of the summary CSV: the bias/MSE/variance block, then the
/// coverage/amplitude block, then standard errors and bookkeeping.
pub const SUMMARY_COLUMNS: [&str; 27] = [
    "x0",
    "n",
    "k",
    "usual_bias",
    "usual_mse",
    "proposed_bias",
    "proposed_mse",
    "usual_mean_var",
    "proposed_mean_var",
    "theoretical_var",
    "usual_coverage_pct",
    "usual_amplitude",
    "proposed_coverage_pct",
    "proposed_amplitude",
    "theoretical_var_usual",
    "usual_bias_se",
    "usual_mse_se",
    "usual_mean_var_se",
    "proposed_bias_se",
    "proposed_mse_se",
    "proposed_mean_var_se",
    "n_reps",
    "n_used",
    "n_failed",
    "ci_level",
    "seed",
    "status",
];

fn summary_cells(cfg: &ScenarioConfig, outcome: &Result<ScenarioSummary, ccal_core::Error>) -> Vec<String> {
    let mut row = vec![cfg.x0_true.to_string(), cfg.n.to_string(), cfg.k.to_string()];
    match outcome {
        Ok(s) => {
            let (u, p) = (&s.usual, &s.proposed);
            row.extend(
                [
                    u.bias,
                    u.mse,
                    p.bias,
                    p.mse,
                    u.mean_est_var,
                    p.mean_est_var,
                    s.theoretical_var_proposed,
                    u.coverage_pct,
                    u.mean_amplitude,
                    p.coverage_pct,
                    p.mean_amplitude,
                    s.theoretical_var_usual,
                    u.bias_se,
                    u.mse_se,
                    u.mean_est_var_se,
                    p.bias_se,
                    p.mse_se,
                    p.mean_est_var_se,
                ]
                .iter()
                .map(f64::to_string),
            );
            row.extend([cfg.n_reps.to_string(), s.n_used.to_string(), s.n_failed.to_string()]);
            row.extend([cfg.ci_level.to_string(), cfg.seed.to_string(), "ok".to_string()]);
        }
        Err(e) => {
            row.extend(std::iter::repeat_n(String::new(), 18));
            let failed = match e {
                ccal_core::Error::AllReplicatesFailed(m) => m.to_string(),
                _ => String::new(),
            };
            row.extend([cfg.n_reps.to_string(), "0".to_string(), failed]);
            let status = match e {
                ccal_core::Error::AllReplicatesFailed(_) => "all_replicates_failed".to_string(),
                other => format!("error: {other}"),
            };
            row.extend([cfg.ci_level.to_string(), cfg.seed.to_string(), status]);
        }
    }
    row
}

/// Full-precision summary CSV, one row per scenario in input order.
pub fn render_summary_csv(rows: &[(ScenarioConfig, Result<ScenarioSummary, ccal_core::Error>)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS).expect("in-memory write");
    for (cfg, outcome) in rows {
        w.write_record(summary_cells(cfg, outcome)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn dec4(v: f64) -> String {
    format!("{v:.4}")
}

/// Console tables at four decimals, laid out like the published tables.
pub fn render_summary_text(rows: &[(ScenarioConfig, Result<ScenarioSummary, ccal_core::Error>)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>5} {:>4} | {:>8} {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>6} {:>6} {:>6} {:>6}",
        "X0", "n", "k", "B usual", "MSE", "B prop", "MSE", "EV usual", "EV prop", "TV", "CP u", "A u", "CP p", "A p"
    );
    for (cfg, outcome) in rows {
        let _ = write!(out, "{:>6} {:>5} {:>4} | ", sig_figs(cfg.x0_true, 3), cfg.n, cfg.k);
        match outcome {
            Ok(s) => {
                let (u, p) = (&s.usual, &s.proposed);
                let _ = writeln!(
                    out,
                    "{:>8} {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} | {:>6} {:>6} {:>6} {:>6}",
                    dec4(u.bias),
                    dec4(u.mse),
                    dec4(p.bias),
                    dec4(p.mse),
                    dec4(u.mean_est_var),
                    dec4(p.mean_est_var),
                    dec4(s.theoretical_var_proposed),
                    format!("{:.1}", u.coverage_pct),
                    format!("{:.2}", u.mean_amplitude),
                    format!("{:.1}", p.coverage_pct),
                    format!("{:.2}", p.mean_amplitude),
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{e}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let text = "n,k,x0,alpha,beta,sigma_eps2,n_reps,seed,x_grid,delta_var\n\
                    5,2,0.8,0.1,2,0.04,10,7,,\n\
                    3,2,0.5,0,1,0.01,10,8,0;1;2,0.1;0.2;0.3\n";
        let s = parse_scenarios(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].x_grid, default_grid(5));
        assert_eq!(s[0].delta_var_rule, default_delta_vars(5));
        assert_eq!(s[0].ci_level, 0.95);
        assert_eq!(s[1].x_grid, vec![0.0, 1.0, 2.0]);
        assert_eq!(s[1].delta_var_rule, vec![0.1, 0.2, 0.3]);
        assert_eq!((s[1].alpha_true, s[1].beta_true), (0.0, 1.0));
    }

    #[test]
    fn rejects_bad_rows() {
        let missing = "n,k,x0,alpha,beta,sigma_eps2,n_reps\n5,2,0.8,0.1,2,0.04,10\n";
        assert!(matches!(
            parse_scenarios(missing.as_bytes()),
            Err(CliError::Parse { line: 1, .. })
        ));
        let bad = "n,k,x0,alpha,beta,sigma_eps2,n_reps,seed\n5,2,0.8,0.1,2,0.04,10,7\n5,x,0.8,0.1,2,0.04,10,7\n";
        match parse_scenarios(bad.as_bytes()) {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column.as_str()), (3, "k")),
            other => panic!("{other:?}"),
        }
        let short_grid = "n,k,x0,alpha,beta,sigma_eps2,n_reps,seed,x_grid\n5,2,0.8,0.1,2,0.04,10,7,0;1\n";
        assert!(parse_scenarios(short_grid.as_bytes()).is_err());
    }
}
