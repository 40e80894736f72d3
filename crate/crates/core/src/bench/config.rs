use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::min_dim;
use crate::zero_variance::{default_pool, DEFAULT_REJECTION_BUDGET};

/// How the proposal covariance of one column is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Exact `Σ*`.
    Opt,
    /// `Σ̂*` itself.
    Empirical,
    /// Leading `ℓ`-ordered eigenvectors of `Σ*`, estimated variances.
    ProjDTrue,
    /// Leading `ℓ`-ordered eigenpairs of `Σ̂*`.
    ProjDHat,
    /// Direction `m*/‖m*‖`, estimated variance.
    ProjMTrue,
    /// Direction `m̂*/‖m̂*‖`, estimated variance.
    ProjMHat,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Opt,
        Strategy::Empirical,
        Strategy::ProjDTrue,
        Strategy::ProjDHat,
        Strategy::ProjMTrue,
        Strategy::ProjMHat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Opt => "opt",
            Strategy::Empirical => "empirical",
            Strategy::ProjDTrue => "proj_d_true",
            Strategy::ProjDHat => "proj_d_hat",
            Strategy::ProjMTrue => "proj_m_true",
            Strategy::ProjMHat => "proj_m_hat",
        }
    }

    /// Stable label mixed into the importance-sampling substream.
    pub fn stream_label(self) -> u64 {
        match self {
            Strategy::Opt => 1,
            Strategy::Empirical => 2,
            Strategy::ProjDTrue => 3,
            Strategy::ProjDHat => 4,
            Strategy::ProjMTrue => 5,
            Strategy::ProjMHat => 6,
        }
    }

    pub fn parse_list(text: &str) -> Result<Vec<Strategy>> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// Number of projection directions for `proj_d_hat` and `proj_d_true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMode {
    /// Largest gap of the `ℓ`-sequence.
    Auto,
    Fixed(usize),
}

impl fmt::Display for KMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KMode::Auto => f.write_str("auto"),
            KMode::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for KMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(KMode::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(KMode::Fixed(k)),
            _ => Err(Error::InvalidConfig(format!("k must be `auto` or a positive integer, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub dims: Vec<usize>,
    pub strategies: Vec<Strategy>,
    /// Size of the `g*` sample.
    pub m: usize,
    /// Size of each importance sample.
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// SIR pool size; `None` means `max(10⁵, 200·M)`.
    pub pool: Option<usize>,
    pub oracle_samples: u64,
    pub k_mode: KMode,
    /// Draw one `g*` sample per dimension instead of one per replication.
    pub reuse_gstar: bool,
    pub rejection_budget: u64,
    /// Oracle cache location; nothing is cached when unset.
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: "sum".into(),
            dims: vec![40, 70, 100],
            strategies: Strategy::ALL.to_vec(),
            m: 500,
            n: 2000,
            reps: 50,
            seed: 0,
            pool: None,
            oracle_samples: 10_000_000,
            k_mode: KMode::Auto,
            reuse_gstar: false,
            rejection_budget: DEFAULT_REJECTION_BUDGET,
            cache_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidConfig(format!("M must be at least 2, got {}", self.m)));
        }
        if self.n < 1 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if self.reps < 1 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidConfig("no dimensions given".into()));
        }
        let min = min_dim(&self.problem)?;
        if let Some(&bad) = self.dims.iter().find(|&&d| d < min) {
            return Err(Error::InvalidConfig(format!(
                "dimension {bad} is below the minimum {min} of `{}`",
                self.problem
            )));
        }
        if let Some(pool) = self.pool {
            if pool < 10 * self.m {
                return Err(Error::InvalidConfig(format!("pool {pool} is smaller than 10 × M")));
            }
        }
        Ok(())
    }

    pub fn effective_pool(&self) -> usize {
        self.pool.unwrap_or_else(|| default_pool(self.m))
    }
}
