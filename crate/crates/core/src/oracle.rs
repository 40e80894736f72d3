//! Brute-force reference values for problems without closed forms.
//!
//! `E`, `m*` and `Σ*` are estimated from one large standard normal sample as
//! `φ`-weighted moments, and optionally cached as JSON keyed by a SHA-256
//! digest of `(problem, size, samples, seed)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::MomentAccumulator;
use crate::linalg::DenseSym;
use crate::problems::{by_name, AnalyticRecord};
use crate::rng::RandomStream;

/// Substream label of the oracle draws.
pub const ORACLE_STREAM: u64 = 0x6f72_6163_6c65;
const CHUNK: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub problem: String,
    /// Size parameter passed to the problem registry.
    pub size: usize,
    pub samples: u64,
    pub seed: u64,
    pub reference: f64,
    pub stderr: f64,
    pub mean: Vec<f64>,
    /// Row-major `Σ*`.
    pub cov: Vec<f64>,
}

impl OracleRecord {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn to_analytic(&self) -> Result<AnalyticRecord> {
        Ok(AnalyticRecord {
            reference: self.reference,
            mean: self.mean.clone(),
            cov: DenseSym::new(self.dim(), self.cov.clone())?,
        })
    }
}

/// Runs the weighted-moment oracle for `by_name(problem, size)`.
pub fn brute_force_moments(problem: &str, size: usize, samples: u64, seed: u64) -> Result<OracleRecord> {
    if samples < 2 {
        return Err(Error::InvalidConfig("oracle needs at least 2 samples".into()));
    }
    let p = by_name(problem, size)?;
    let n = p.dim;
    let mut acc = MomentAccumulator::default();
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n * n];
    let mut x = vec![0.0; n];
    let chunks = samples.div_ceil(CHUNK);
    for chunk in 0..chunks {
        let mut rng = RandomStream::substream(seed, &[ORACLE_STREAM, size as u64, chunk]);
        let count = CHUNK.min(samples - chunk * CHUNK);
        for _ in 0..count {
            rng.fill_standard_normal(&mut x);
            let v = p.phi(&x);
            acc.push(v);
            if v == 0.0 {
                continue;
            }
            for i in 0..n {
                let vxi = v * x[i];
                first[i] += vxi;
                let row = &mut second[i * n..(i + 1) * n];
                for j in i..n {
                    row[j] += vxi * x[j];
                }
            }
        }
    }
    if acc.sum <= 0.0 {
        return Err(Error::IntegrandVanished);
    }
    let (reference, stderr) = acc.mean_and_stderr();
    let mean: Vec<f64> = first.iter().map(|s| s / acc.sum).collect();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let c = second[i * n + j] / acc.sum - mean[i] * mean[j];
            cov[i * n + j] = c;
            cov[j * n + i] = c;
        }
    }
    Ok(OracleRecord {
        problem: problem.to_string(),
        size,
        samples,
        seed,
        reference,
        stderr,
        mean,
        cov,
    })
}

pub fn cache_key(problem: &str, size: usize, samples: u64, seed: u64) -> String {
    let digest = Sha256::digest(format!("{problem}|{size}|{samples}|{seed}").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, problem: &str, size: usize, samples: u64, seed: u64) -> PathBuf {
    dir.join(format!("{problem}-{size}-{}.json", &cache_key(problem, size, samples, seed)[..16]))
}

/// Oracle with an optional on-disk cache; a corrupt or mismatched entry is recomputed.
pub fn cached_moments(
    problem: &str,
    size: usize,
    samples: u64,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<OracleRecord> {
    let Some(dir) = cache_dir else {
        return brute_force_moments(problem, size, samples, seed);
    };
    let path = cache_path(dir, problem, size, samples, seed);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(record) = serde_json::from_str::<OracleRecord>(&text) {
            if record.problem == problem
                && record.size == size
                && record.samples == samples
                && record.seed == seed
            {
                return Ok(record);
            }
        }
    }
    let record = brute_force_moments(problem, size, samples, seed)?;
    fs::create_dir_all(dir).map_err(|e| Error::Cache(format!("{}: {e}", dir.display())))?;
    let text = serde_json::to_string(&record).map_err(|e| Error::Cache(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    Ok(record)
}
