use std::fmt::Write;

use crate::bench::config::Strategy;
use crate::bench::experiment::{Cell, ExperimentReport, Provenance, SpectrumData, SweepPoint};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "name,dim,strategy,d_prime_mean,kl_rel_err_pct,mean_estimate,\
rel_bias_pct,cov_pct,mean_k,proposals_used,reference_E,reference_stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}` (csv or md)"))),
        }
    }
}

/// 17 significant digits, enough to round-trip every `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// One CSV line; numeric fields are NaN for a failed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub name: String,
    pub dim: usize,
    pub strategy: String,
    pub d_prime_mean: f64,
    pub kl_rel_err_pct: f64,
    pub mean_estimate: f64,
    pub rel_bias_pct: f64,
    pub cov_pct: f64,
    pub mean_k: f64,
    pub proposals_used: u64,
    pub reference_e: f64,
    pub reference_stderr: f64,
}

impl CsvRow {
    /// Bitwise comparison, so that NaN fields compare equal.
    pub fn same_bits(&self, other: &CsvRow) -> bool {
        let floats = |r: &CsvRow| {
            [
                r.d_prime_mean,
                r.kl_rel_err_pct,
                r.mean_estimate,
                r.rel_bias_pct,
                r.cov_pct,
                r.mean_k,
                r.reference_e,
                r.reference_stderr,
            ]
            .map(f64::to_bits)
        };
        self.name == other.name
            && self.dim == other.dim
            && self.strategy == other.strategy
            && self.proposals_used == other.proposals_used
            && floats(self) == floats(other)
    }
}

pub fn csv_rows(report: &ExperimentReport) -> Vec<CsvRow> {
    report
        .cells
        .iter()
        .map(|cell| {
            let (reference_e, reference_stderr) = report
                .dims
                .iter()
                .find(|d| d.size == cell.size)
                .and_then(|d| d.truth.as_ref())
                .map_or((f64::NAN, f64::NAN), |t| (t.record.reference, t.stderr));
            let mut row = CsvRow {
                name: report.config.problem.clone(),
                dim: cell.size,
                strategy: cell.strategy.name().to_string(),
                d_prime_mean: f64::NAN,
                kl_rel_err_pct: f64::NAN,
                mean_estimate: f64::NAN,
                rel_bias_pct: f64::NAN,
                cov_pct: f64::NAN,
                mean_k: f64::NAN,
                proposals_used: 0,
                reference_e,
                reference_stderr,
            };
            if let Ok(r) = &cell.outcome {
                row.d_prime_mean = r.stats.mean_partial_kl;
                row.kl_rel_err_pct = 100.0 * r.stats.kl_relative_error;
                row.mean_estimate = r.stats.mean;
                row.rel_bias_pct = 100.0 * r.stats.relative_bias;
                row.cov_pct = 100.0 * r.stats.coefficient_of_variation;
                row.mean_k = r.mean_k();
                row.proposals_used = r.proposals_used;
            }
            row
        })
        .collect()
}

pub fn render_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in csv_rows(report) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.name,
            r.dim,
            r.strategy,
            num(r.d_prime_mean),
            num(r.kl_rel_err_pct),
            num(r.mean_estimate),
            num(r.rel_bias_pct),
            num(r.cov_pct),
            num(r.mean_k),
            r.proposals_used,
            num(r.reference_e),
            num(r.reference_stderr),
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::InvalidConfig("CSV header does not match".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(Error::InvalidConfig(format!("expected 12 fields in `{line}`")));
            }
            let float = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad number `{s}`")))
            };
            let int = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad integer `{s}`")))
            };
            Ok(CsvRow {
                name: f[0].to_string(),
                dim: int(f[1])? as usize,
                strategy: f[2].to_string(),
                d_prime_mean: float(f[3])?,
                kl_rel_err_pct: float(f[4])?,
                mean_estimate: float(f[5])?,
                rel_bias_pct: float(f[6])?,
                cov_pct: float(f[7])?,
                mean_k: float(f[8])?,
                proposals_used: int(f[9])?,
                reference_e: float(f[10])?,
                reference_stderr: float(f[11])?,
            })
        })
        .collect()
}

/// `proj_m_true` and `proj_d_true` are the same matrix for every dimension.
fn merged_true_columns(report: &ExperimentReport) -> bool {
    let s = &report.config.strategies;
    s.contains(&Strategy::ProjMTrue)
        && s.contains(&Strategy::ProjDTrue)
        && report
            .dims
            .iter()
            .all(|d| d.truth.as_ref().is_some_and(|t| t.directions_coincide()))
}

fn short(x: f64) -> String {
    if !x.is_finite() {
        return "–".into();
    }
    let a = x.abs();
    if a != 0.0 && !(1e-1..1e4).contains(&a) {
        format!("{x:.3e}")
    } else {
        format!("{x:.3}")
    }
}

/// Markdown table with one block of statistic rows per dimension and one
/// column per strategy.
pub fn render_markdown(report: &ExperimentReport) -> String {
    let cfg = &report.config;
    let merged = merged_true_columns(report);
    let columns: Vec<Strategy> = cfg
        .strategies
        .iter()
        .copied()
        .filter(|s| !(merged && *s == Strategy::ProjDTrue))
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "# `{}`\n", cfg.problem);
    let _ = writeln!(
        out,
        "M = {}, N = {}, reps = {}, seed = {}, k = {}, reuse g* = {}, pool = {}, oracle samples = {}\n",
        cfg.m, cfg.n, cfg.reps, cfg.seed, cfg.k_mode, cfg.reuse_gstar, cfg.effective_pool(), cfg.oracle_samples
    );
    for d in &report.dims {
        match &d.truth {
            Some(t) => {
                let source = match t.provenance {
                    Provenance::Analytic => "analytic".to_string(),
                    Provenance::Oracle { samples, seed } => {
                        format!("oracle, {samples} samples, seed {seed}, ± {}", short(t.stderr))
                    }
                };
                let _ = writeln!(
                    out,
                    "- n = {} (Gaussian dimension {}): E = {} ({source}), D′(Σ*) = {}",
                    d.size,
                    d.dim,
                    short(t.record.reference),
                    short(t.kl_star)
                );
            }
            None => {
                let _ = writeln!(out, "- n = {}: reference values unavailable", d.size);
            }
        }
    }
    out.push('\n');

    let label = |s: Strategy| {
        if merged && s == Strategy::ProjMTrue {
            "proj_m_true = proj_d_true".to_string()
        } else {
            s.name().to_string()
        }
    };
    let _ = write!(out, "| n | statistic |");
    for &s in &columns {
        let _ = write!(out, " {} |", label(s));
    }
    out.push('\n');
    out.push_str("|---|---|");
    for _ in &columns {
        out.push_str("---|");
    }
    out.push('\n');

    type Stat = fn(&crate::bench::experiment::CellResult) -> String;
    let stats: [(&str, Stat); 8] = [
        ("D′", |r| short(r.stats.mean_partial_kl)),
        ("KL rel. err. %", |r| short(100.0 * r.stats.kl_relative_error)),
        ("mean Ê", |r| short(r.stats.mean)),
        ("rel. bias %", |r| short(100.0 * r.stats.relative_bias)),
        ("CoV %", |r| short(100.0 * r.stats.coefficient_of_variation)),
        ("mean k", |r| short(r.mean_k())),
        ("φ calls for g*", |r| r.proposals_used.to_string()),
        ("wall time s", |r| format!("{:.2}", r.wall_time.as_secs_f64())),
    ];
    let mut failures: Vec<&Cell> = Vec::new();
    for d in &report.dims {
        for (name, f) in stats.iter() {
            let _ = write!(out, "| {} | {name} |", d.size);
            for &s in &columns {
                let text = match report.cell(d.size, s).map(|c| &c.outcome) {
                    Some(Ok(r)) => f(r),
                    _ => "failed".into(),
                };
                let _ = write!(out, " {text} |");
            }
            out.push('\n');
        }
        failures.extend(report.cells.iter().filter(|c| c.size == d.size && c.outcome.is_err()));
    }
    let gaps: Vec<String> = report
        .cells
        .iter()
        .filter_map(|c| match &c.outcome {
            Ok(r) if r.uninformative_gaps > 0 => Some(format!(
                "- n = {}, {}: {} replications without a gap in the ℓ-sequence (k = 1 fallback)",
                c.size, c.strategy, r.uninformative_gaps
            )),
            _ => None,
        })
        .collect();
    if !gaps.is_empty() {
        out.push('\n');
        out.push_str(&gaps.join("\n"));
        out.push('\n');
    }
    if !failures.is_empty() {
        out.push_str("\nFailed cells:\n\n");
        for c in failures {
            if let Err(e) = &c.outcome {
                let _ = writeln!(out, "- n = {}, {}: {e}", c.size, c.strategy);
            }
        }
    }
    out
}

pub fn render_report(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Csv => render_csv(report),
        Format::Markdown => render_markdown(report),
    }
}

pub fn render_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("dim,d_prime_star,d_prime_hat,d_prime_k,mean_k,failures\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.size,
            num(p.d_star),
            num(p.d_hat),
            num(p.d_k),
            num(p.mean_k),
            p.failures
        );
    }
    out
}

pub fn render_spectrum_csv(data: &SpectrumData) -> String {
    let mut out = String::from("series,index,ell\n");
    for (series, points) in [("true", &data.truth), ("estimated", &data.estimate)] {
        for (i, l) in points {
            let _ = writeln!(out, "{series},{i},{}", num(*l));
        }
    }
    out
}
