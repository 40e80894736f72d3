use std::time::{Duration, Instant};

use crate::bench::config::{ExperimentConfig, KMode, Strategy};
use crate::error::{Error, Result};
use crate::estimator::{is_estimate, run_statistics, RunStatistics};
use crate::gaussian::{Covariance, DenseCovariance, GaussianLaw};
use crate::linalg::{dot, normalized, sym_eigendecompose, DenseSym};
use crate::oracle::cached_moments;
use crate::problems::{by_name, AnalyticRecord, TestProblem};
use crate::projection::{
    choose_k, ell_order, has_informative_gap, optimal_projection, partial_kl_factored,
    partial_kl_lowrank, EllOrderedSpectrum,
};
use crate::rng::RandomStream;
use crate::zero_variance::{build_projected_cov, empirical_cov, empirical_mean, sample_gstar};

/// Substream label of the `g*` draws, shared by every strategy of a replication.
pub const GSTAR_STREAM: u64 = 0x0067_7374_6172;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Analytic,
    Oracle { samples: u64, seed: u64 },
}

/// Exact or brute-force `E`, `m*`, `Σ*` for one dimension, with derived data.
#[derive(Debug, Clone)]
pub struct Truth {
    pub record: AnalyticRecord,
    pub stderr: f64,
    pub provenance: Provenance,
    pub spectrum: EllOrderedSpectrum,
    /// `D′(Σ*) = log det Σ* + n`.
    pub kl_star: f64,
    /// Number of eigen-directions used by `proj_d_true`.
    pub k_true: std::result::Result<usize, Error>,
}

impl Truth {
    pub fn resolve(problem: &TestProblem, size: usize, config: &ExperimentConfig) -> Result<Truth> {
        let (record, stderr, provenance) = match &problem.analytic {
            Some(record) => (record.clone(), 0.0, Provenance::Analytic),
            None => {
                let oracle = cached_moments(
                    &config.problem,
                    size,
                    config.oracle_samples,
                    config.seed,
                    config.cache_dir.as_deref(),
                )?;
                (
                    oracle.to_analytic()?,
                    oracle.stderr,
                    Provenance::Oracle {
                        samples: config.oracle_samples,
                        seed: config.seed,
                    },
                )
            }
        };
        let star = DenseCovariance::new(record.cov.clone())?;
        let kl_star = star.log_det() + record.cov.dim() as f64;
        let spectrum = ell_order(star.spectrum())?;
        let k_true = pick_k(&spectrum, config.k_mode);
        Ok(Truth {
            record,
            stderr,
            provenance,
            spectrum,
            kl_star,
            k_true,
        })
    }

    /// Leading eigen-direction of `Σ*` is collinear with `m*` and only one is used.
    pub fn directions_coincide(&self) -> bool {
        self.k_true == Ok(1)
            && normalized(&self.record.mean)
                .is_some_and(|m| dot(&m, &self.spectrum.pairs()[0].direction).abs() > 1.0 - 1e-9)
    }
}

fn pick_k(spectrum: &EllOrderedSpectrum, mode: KMode) -> Result<usize> {
    match mode {
        KMode::Auto => choose_k(spectrum),
        KMode::Fixed(k) if k <= spectrum.dim() => Ok(k),
        KMode::Fixed(k) => Err(Error::KOutOfRange { k, n: spectrum.dim() }),
    }
}

/// `m̂*`, `Σ̂*` and the spectrum of `Σ̂*` from one `g*` sample.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub proposals_used: u64,
    pub mean: Vec<f64>,
    pub cov: DenseSym,
    pub spectrum: std::result::Result<EllOrderedSpectrum, Error>,
}

impl Estimate {
    pub fn draw(problem: &TestProblem, size: usize, rep: usize, config: &ExperimentConfig) -> Result<Estimate> {
        let rep = if config.reuse_gstar { 0 } else { rep as u64 };
        let mut rng = RandomStream::substream(config.seed, &[size as u64, GSTAR_STREAM, rep]);
        let sample = sample_gstar(
            problem,
            config.m,
            &mut rng,
            config.rejection_budget,
            config.effective_pool(),
        )?;
        let cov = empirical_cov(&sample);
        let spectrum = sym_eigendecompose(&cov).and_then(|s| ell_order(&s));
        Ok(Estimate {
            proposals_used: sample.proposals_used,
            mean: empirical_mean(&sample),
            cov,
            spectrum,
        })
    }

    fn spectrum(&self) -> Result<&EllOrderedSpectrum> {
        self.spectrum.as_ref().map_err(Clone::clone)
    }
}

/// Proposal covariance of `strategy` with its rank `k` and `D′`.
pub struct Proposal {
    pub cov: Covariance,
    pub k: usize,
    pub partial_kl: f64,
    pub informative_gap: bool,
}

pub fn build_proposal(
    strategy: Strategy,
    truth: &Truth,
    est: &Estimate,
    k_mode: KMode,
) -> Result<Proposal> {
    let star = &truth.record.cov;
    let n = star.dim();
    let low_rank = |c: crate::gaussian::LowRankCovariance, informative_gap| -> Result<Proposal> {
        Ok(Proposal {
            k: c.rank(),
            partial_kl: partial_kl_lowrank(&c, star)?,
            cov: c.into(),
            informative_gap,
        })
    };
    let unit = |v: &[f64]| {
        normalized(v).ok_or_else(|| Error::InvalidDirections("zero mean vector".into()))
    };
    match strategy {
        Strategy::Opt => Ok(Proposal {
            cov: DenseCovariance::new(star.clone())?.into(),
            k: n,
            partial_kl: truth.kl_star,
            informative_gap: true,
        }),
        Strategy::Empirical => {
            let c = DenseCovariance::new(est.cov.clone())?;
            Ok(Proposal {
                partial_kl: partial_kl_factored(&c, star)?,
                cov: c.into(),
                k: n,
                informative_gap: true,
            })
        }
        Strategy::ProjDTrue => {
            let dirs = truth.spectrum.pairs()[..truth.k_true.clone()?]
                .iter()
                .map(|p| p.direction.clone())
                .collect();
            low_rank(build_projected_cov(&est.cov, dirs)?, true)
        }
        Strategy::ProjDHat => {
            let s = est.spectrum()?;
            let k = pick_k(s, k_mode)?;
            low_rank(optimal_projection(s, k)?, has_informative_gap(s))
        }
        Strategy::ProjMTrue => low_rank(build_projected_cov(&est.cov, vec![unit(&truth.record.mean)?])?, true),
        Strategy::ProjMHat => low_rank(build_projected_cov(&est.cov, vec![unit(&est.mean)?])?, true),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub stats: RunStatistics,
    pub kl_values: Vec<f64>,
    /// Chosen rank per replication.
    pub ks: Vec<usize>,
    /// `φ` evaluations spent on the distinct `g*` samples this cell used.
    pub proposals_used: u64,
    pub wall_time: Duration,
    /// Replications whose `ℓ`-sequence had no gap, so `k = 1` was a fallback.
    pub uninformative_gaps: usize,
}

impl CellResult {
    pub fn mean_k(&self) -> f64 {
        self.ks.iter().sum::<usize>() as f64 / self.ks.len() as f64
    }

    /// Most frequent `k`, ties to the smaller value.
    pub fn modal_k(&self) -> usize {
        let mut counts = std::collections::BTreeMap::new();
        for &k in &self.ks {
            *counts.entry(k).or_insert(0usize) += 1;
        }
        counts
            .into_iter()
            .fold((0, 0), |best, (k, c)| if c > best.1 { (k, c) } else { best })
            .0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub size: usize,
    pub strategy: Strategy,
    pub outcome: std::result::Result<CellResult, String>,
}

#[derive(Debug, Clone)]
pub struct DimensionSummary {
    pub size: usize,
    pub dim: usize,
    /// `None` when `E`, `m*`, `Σ*` could not be resolved; every cell then fails.
    pub truth: Option<Truth>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dims: Vec<DimensionSummary>,
    /// Ordered by dimension, then by strategy as configured.
    pub cells: Vec<Cell>,
}

impl ExperimentReport {
    pub fn cell(&self, size: usize, strategy: Strategy) -> Option<&Cell> {
        self.cells.iter().find(|c| c.size == size && c.strategy == strategy)
    }
}

struct CellAccumulator {
    estimates: Vec<f64>,
    kl_values: Vec<f64>,
    ks: Vec<usize>,
    proposals_used: u64,
    wall_time: Duration,
    uninformative_gaps: usize,
    error: Option<String>,
}

impl CellAccumulator {
    fn new() -> Self {
        CellAccumulator {
            estimates: Vec::new(),
            kl_values: Vec::new(),
            ks: Vec::new(),
            proposals_used: 0,
            wall_time: Duration::ZERO,
            uninformative_gaps: 0,
            error: None,
        }
    }

    fn finish(self, truth: &Truth) -> std::result::Result<CellResult, String> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let stats = run_statistics(&self.estimates, truth.record.reference, &self.kl_values, truth.kl_star)
            .map_err(|e| e.to_string())?;
        Ok(CellResult {
            stats,
            kl_values: self.kl_values,
            ks: self.ks,
            proposals_used: self.proposals_used,
            wall_time: self.wall_time,
            uninformative_gaps: self.uninformative_gaps,
        })
    }
}

/// Runs every `(dimension, strategy)` cell; failures are confined to their cell.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut dims = Vec::new();
    let mut cells = Vec::new();
    for &size in &config.dims {
        let problem = by_name(&config.problem, size)?;
        let truth = Truth::resolve(&problem, size, config);
        let truth = match truth {
            Ok(t) => t,
            Err(e) => {
                for &strategy in &config.strategies {
                    cells.push(Cell {
                        size,
                        strategy,
                        outcome: Err(format!("reference values unavailable: {e}")),
                    });
                }
                dims.push(DimensionSummary { size, dim: problem.dim, truth: None });
                continue;
            }
        };

        let mut accs: Vec<CellAccumulator> = config.strategies.iter().map(|_| CellAccumulator::new()).collect();
        if config.reuse_gstar && !accs.is_empty() {
            let shared = Estimate::draw(&problem, size, 0, config);
            for rep in 0..config.reps {
                let est = shared.clone().map(|e| (e, rep == 0));
                run_replication(&problem, size, rep, config, &truth, est, &mut accs);
            }
        } else {
            for rep in 0..config.reps {
                if accs.iter().all(|a| a.error.is_some()) {
                    break;
                }
                let est = Estimate::draw(&problem, size, rep, config).map(|e| (e, true));
                run_replication(&problem, size, rep, config, &truth, est, &mut accs);
            }
        }
        for (strategy, acc) in config.strategies.iter().zip(accs) {
            cells.push(Cell {
                size,
                strategy: *strategy,
                outcome: acc.finish(&truth),
            });
        }
        dims.push(DimensionSummary { size, dim: problem.dim, truth: Some(truth) });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        dims,
        cells,
    })
}

fn run_replication(
    problem: &TestProblem,
    size: usize,
    rep: usize,
    config: &ExperimentConfig,
    truth: &Truth,
    est: Result<(Estimate, bool)>,
    accs: &mut [CellAccumulator],
) {
    let (est, fresh) = match est {
        Ok(e) => e,
        Err(e) => {
            for acc in accs.iter_mut().filter(|a| a.error.is_none()) {
                acc.error = Some(format!("replication {rep}: {e}"));
            }
            return;
        }
    };
    for (&strategy, acc) in config.strategies.iter().zip(accs.iter_mut()) {
        if acc.error.is_some() {
            continue;
        }
        let start = Instant::now();
        let proposal = build_proposal(strategy, truth, &est, config.k_mode)
            .and_then(|p| Ok((GaussianLaw::new(est.mean.clone(), p.cov.clone())?, p)));
        match proposal {
            Ok((law, p)) => {
                let mut rng = RandomStream::substream(config.seed, &[size as u64, strategy.stream_label(), rep as u64]);
                acc.estimates.push(is_estimate(problem, &law, config.n, &mut rng));
                acc.kl_values.push(p.partial_kl);
                acc.ks.push(p.k);
                if !p.informative_gap {
                    acc.uninformative_gaps += 1;
                }
                if fresh {
                    acc.proposals_used += est.proposals_used;
                }
            }
            Err(e) => acc.error = Some(format!("replication {rep}: {e}")),
        }
        acc.wall_time += start.elapsed();
    }
}

/// One point of the dimension sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub size: usize,
    /// `D′(Σ*)`.
    pub d_star: f64,
    /// Mean `D′(Σ̂*)` over replications; NaN if `Σ̂*` was never positive definite.
    pub d_hat: f64,
    /// Mean `D′(Σ̂*_k)` with `k` from the configured mode.
    pub d_k: f64,
    pub mean_k: f64,
    /// Replications that produced no usable sample or spectrum.
    pub failures: usize,
}

/// `D′(Σ*)`, `D′(Σ̂*)` and `D′(Σ̂*_k)` per dimension, averaged over replications.
pub fn run_dimension_sweep(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let mut points = Vec::new();
    for &size in &config.dims {
        let problem = by_name(&config.problem, size)?;
        let truth = Truth::resolve(&problem, size, config)?;
        let mut hat = Vec::new();
        let mut proj = Vec::new();
        let mut ks = Vec::new();
        let mut failures = 0;
        for rep in 0..config.reps {
            let Ok(est) = Estimate::draw(&problem, size, rep, config) else {
                failures += 1;
                continue;
            };
            if let Ok(p) = build_proposal(Strategy::Empirical, &truth, &est, config.k_mode) {
                hat.push(p.partial_kl);
            }
            match build_proposal(Strategy::ProjDHat, &truth, &est, config.k_mode) {
                Ok(p) => {
                    proj.push(p.partial_kl);
                    ks.push(p.k as f64);
                }
                Err(_) => failures += 1,
            }
        }
        let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        points.push(SweepPoint {
            size,
            d_star: truth.kl_star,
            d_hat: mean(&hat),
            d_k: mean(&proj),
            mean_k: mean(&ks),
            failures,
        });
    }
    Ok(points)
}

/// `ℓ`-ordered `(index, ℓ(λᵢ))` series for `Σ*` and for `Σ̂*`, indices from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumData {
    pub truth: Vec<(usize, f64)>,
    pub estimate: Vec<(usize, f64)>,
}

pub fn ell_series(s: &EllOrderedSpectrum) -> Vec<(usize, f64)> {
    s.ell_values().iter().enumerate().map(|(i, &l)| (i + 1, l)).collect()
}

/// Spectrum data for the first configured dimension and the first replication.
pub fn emit_spectrum_plot_data(config: &ExperimentConfig) -> Result<SpectrumData> {
    config.validate()?;
    let size = config.dims[0];
    let problem = by_name(&config.problem, size)?;
    let truth = Truth::resolve(&problem, size, config)?;
    let est = Estimate::draw(&problem, size, 0, config)?;
    Ok(SpectrumData {
        truth: ell_series(&truth.spectrum),
        estimate: ell_series(est.spectrum()?),
    })
}
