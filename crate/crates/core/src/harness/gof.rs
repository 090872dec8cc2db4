//! Goodness of fit of conditional first-passage samples to their limit laws.

use crate::asymptotics::{fpt_limit, LimitLaw};
use crate::chi_process::{sample_fpt_conditional, ChiTrendSpec, FptConfig, FptSample, HorizonSpec};
use crate::error::{ensure, Error, Result};
use crate::model_params::derive;
use serde::{Deserialize, Serialize};

/// Kolmogorov-Smirnov distance `sup_x |F_n(x) - F(x)|` of a sorted sample.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    ensure(sorted.windows(2).all(|w| w[0] <= w[1]), "sample", || "must be sorted ascending".into())?;
    ensure(sorted.iter().all(|x| !x.is_nan()), "sample", || "must not contain NaN".into())?;
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptGofConfig {
    pub spec: ChiTrendSpec,
    pub horizon: HorizonSpec,
    pub u: f64,
    pub fpt: FptConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub ks_stat: f64,
    pub n_samples: usize,
    pub law: LimitLaw,
    pub acceptance_prob_hat: f64,
    pub acceptance_ci: (f64, f64),
    pub attempts: u64,
    pub config: FptGofConfig,
}

/// Draws the conditional sample, standardizes it with the limit law's affine
/// map and measures the KS distance to that law.
pub fn run_fpt_gof(config: &FptGofConfig) -> Result<GofReport> {
    let sample = sample_fpt_conditional(&config.spec, &config.horizon, config.u, &config.fpt)?;
    gof_of_sample(config, &sample)
}

/// KS report for a sample already drawn under `config`.
pub fn gof_of_sample(config: &FptGofConfig, sample: &FptSample) -> Result<GofReport> {
    let law = fpt_limit(&config.spec, &config.horizon, &derive(&config.spec)?, config.u)?;
    let mut z: Vec<f64> = sample.taus.iter().map(|&t| law.standardize(t)).collect();
    z.sort_by(f64::total_cmp);
    Ok(GofReport {
        ks_stat: ks_statistic(&z, |x| law.cdf(x))?,
        n_samples: z.len(),
        law,
        acceptance_prob_hat: sample.acceptance,
        acceptance_ci: sample.acceptance_ci,
        attempts: sample.attempts,
        config: config.clone(),
    })
}
