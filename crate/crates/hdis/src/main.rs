//! `hdis`: benchmark runner for projected-covariance Gaussian importance sampling.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hdis_core::bench::{
    emit_spectrum_plot_data, render_report, run_dimension_sweep, run_experiment, ExperimentConfig,
    Format, KMode, Strategy,
};
use hdis_core::bench::report::{render_spectrum_csv, render_sweep_csv};

const CACHE_ENV: &str = "HDIS_CACHE_DIR";

#[derive(Parser)]
#[command(name = "hdis", version, about = "Gaussian importance sampling with low-rank projected covariances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated estimates for each (dimension, strategy) cell.
    Run(RunArgs),
    /// Partial KL of Σ*, Σ̂* and Σ̂*_k over a range of dimensions.
    Sweep(SweepArgs),
    /// ℓ-ordered eigenvalue data of Σ* and Σ̂* for one dimension.
    Spectrum(SpectrumArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file whose keys are the long flag names; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Size of the g* sample.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Replications.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `auto` or a fixed number of projection directions.
    #[arg(long)]
    k: Option<String>,
    /// SIR pool size for non-indicator integrands.
    #[arg(long)]
    pool: Option<usize>,
    /// Crude Monte Carlo budget of the reference oracle.
    #[arg(long = "oracle-samples")]
    oracle_samples: Option<u64>,
    /// Draw one g* sample per dimension and share it across replications.
    #[arg(long = "reuse-gstar")]
    reuse_gstar: bool,
    /// Output file (standard output by default).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated sizes, e.g. 40,70,100.
    #[arg(long)]
    dims: Option<String>,
    /// Comma-separated subset of opt, empirical, proj_d_true, proj_d_hat, proj_m_true, proj_m_hat.
    #[arg(long)]
    strategies: Option<String>,
    /// Importance sample size.
    #[arg(long = "N")]
    n: Option<usize>,
    /// csv or md.
    #[arg(long)]
    format: Option<String>,
    /// Also write the markdown table to this file.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// start:end:step, inclusive.
    #[arg(long = "dim-range")]
    dim_range: Option<String>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    dim: Option<usize>,
}

/// Values read from a `--config` file.
struct FileConfig(toml::Table);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig(toml::Table::new()));
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let table = text
            .parse::<toml::Table>()
            .with_context(|| format!("parsing {}", path.display()))?;
        Ok(FileConfig(table))
    }

    /// The value as flag text: strings verbatim, arrays joined by commas.
    fn text(&self, key: &str) -> Option<String> {
        let v = self.0.get(key)?;
        Some(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| match i {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        })
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.text(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.0.get(key) {
            None => Ok(false),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(_) => bail!("config key `{key}` must be a boolean"),
        }
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.parsed(key),
    }
}

fn pick_text(flag: Option<String>, file: &FileConfig, key: &str) -> Option<String> {
    flag.or_else(|| file.text(key))
}

fn parse_dims(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().with_context(|| format!("bad dimension `{s}`")))
        .collect()
}

fn parse_range(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<usize> = text
        .split(':')
        .map(|s| s.trim().parse().with_context(|| format!("bad dim-range `{text}`")))
        .collect::<Result<_>>()?;
    let (start, end, step) = match parts[..] {
        [a, b] => (a, b, 1),
        [a, b, c] => (a, b, c),
        _ => bail!("dim-range must be start:end[:step], got `{text}`"),
    };
    if step == 0 || start > end {
        bail!("empty dim-range `{text}`");
    }
    Ok((start..=end).step_by(step).collect())
}

/// Shared settings with file values under flags and library defaults under both.
fn base_config(common: &Common, file: &FileConfig, default_m: usize) -> Result<ExperimentConfig> {
    let defaults = ExperimentConfig::default();
    let k_mode = match pick_text(common.k.clone(), file, "k") {
        Some(s) => s.parse::<KMode>()?,
        None => defaults.k_mode,
    };
    Ok(ExperimentConfig {
        problem: pick_text(common.problem.clone(), file, "problem").unwrap_or(defaults.problem.clone()),
        m: pick(common.m, file, "M")?.unwrap_or(default_m),
        reps: pick(common.reps, file, "reps")?.unwrap_or(defaults.reps),
        seed: pick(common.seed, file, "seed")?.unwrap_or(defaults.seed),
        pool: pick(common.pool, file, "pool")?,
        oracle_samples: pick(common.oracle_samples, file, "oracle-samples")?.unwrap_or(defaults.oracle_samples),
        k_mode,
        reuse_gstar: common.reuse_gstar || file.flag("reuse-gstar")?,
        cache_dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
        ..defaults
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn out_path(common: &Common, file: &FileConfig) -> Option<PathBuf> {
    common.out.clone().or_else(|| file.text("out").map(PathBuf::from))
}

fn run(args: RunArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let mut config = base_config(&args.common, &file, 500)?;
    if let Some(d) = pick_text(args.dims, &file, "dims") {
        config.dims = parse_dims(&d)?;
    }
    if let Some(s) = pick_text(args.strategies, &file, "strategies") {
        config.strategies = Strategy::parse_list(&s)?;
    }
    if let Some(n) = pick(args.n, &file, "N")? {
        config.n = n;
    }
    let format = match pick_text(args.format, &file, "format") {
        Some(f) => f.parse::<Format>()?,
        None => Format::Csv,
    };
    let report = run_experiment(&config)?;
    for cell in &report.cells {
        if let Err(e) = &cell.outcome {
            eprintln!("cell n={} {} failed: {e}", cell.size, cell.strategy);
        }
    }
    emit(&render_report(&report, format), out_path(&args.common, &file).as_deref())?;
    let markdown = args.markdown.or_else(|| file.text("markdown").map(PathBuf::from));
    if let Some(path) = markdown {
        emit(&render_report(&report, Format::Markdown), Some(&path))?;
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let mut config = base_config(&args.common, &file, 200)?;
    config.dims = parse_range(&pick_text(args.dim_range, &file, "dim-range").unwrap_or_else(|| "5:100:5".into()))?;
    let points = run_dimension_sweep(&config)?;
    emit(&render_sweep_csv(&points), out_path(&args.common, &file).as_deref())
}

fn spectrum(args: SpectrumArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let mut config = base_config(&args.common, &file, 200)?;
    config.dims = vec![pick(args.dim, &file, "dim")?.unwrap_or(40)];
    let data = emit_spectrum_plot_data(&config)?;
    emit(&render_spectrum_csv(&data), out_path(&args.common, &file).as_deref())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Spectrum(a) => spectrum(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("5:20:5").unwrap(), vec![5, 10, 15, 20]);
        assert_eq!(parse_range("3:5").unwrap(), vec![3, 4, 5]);
        assert!(parse_range("5:1").is_err());
        assert!(parse_range("1:5:0").is_err());
        assert!(parse_range("x").is_err());
        assert_eq!(parse_dims("40, 70,100").unwrap(), vec![40, 70, 100]);
    }

    #[test]
    fn file_values_yield_to_flags() {
        let file = FileConfig(
            "problem = \"parabolic\"\nM = 300\nreps = 7\nk = 2\ndims = [3, 4]\nreuse-gstar = true\n"
                .parse()
                .unwrap(),
        );
        let common = Common {
            reps: Some(9),
            ..Common::default()
        };
        let cfg = base_config(&common, &file, 500).unwrap();
        assert_eq!(cfg.problem, "parabolic");
        assert_eq!(cfg.m, 300);
        assert_eq!(cfg.reps, 9);
        assert_eq!(cfg.k_mode, KMode::Fixed(2));
        assert!(cfg.reuse_gstar);
        assert_eq!(file.text("dims").unwrap(), "3,4");
    }
}
