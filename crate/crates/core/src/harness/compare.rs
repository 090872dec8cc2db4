//! Monte Carlo vs asymptotic ratio ladders.

use super::VERSION;
use crate::asymptotics::{psi_infinity_asymptotic, psi_tu_asymptotic, AsymptoticValue};
use crate::chi_process::{estimate_psi_keyed, ChiTrendSpec, EstimateResult, HorizonSpec, McConfig};
use crate::constants::{ConstantsProvider, McPolicy};
use crate::error::{ensure, Result};
use crate::model_params::{derive, DerivedParams};
use crate::rng::{task, StreamKey};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub spec: ChiTrendSpec,
    #[serde(default = "infinite")]
    pub horizon: HorizonSpec,
    /// Threshold ladder; any order.
    pub us: Vec<f64>,
    pub mc: McConfig,
    #[serde(default)]
    pub constants: McPolicy,
    /// Re-estimate the smallest threshold on `2N - 1` grid points.
    #[serde(default = "yes")]
    pub refine: bool,
}

fn infinite() -> HorizonSpec {
    HorizonSpec::Infinite
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub u: f64,
    pub mc: EstimateResult,
    pub asym: AsymptoticValue,
    /// `ln(p_hat / asymptotic)`; absent when `p_hat = 0`.
    pub log_ratio: Option<f64>,
    /// `p_hat(2N - 1 points) - p_hat(N points)`, on the refined row only.
    pub grid_refinement_delta: Option<f64>,
    /// Set when the estimate is 0 and the ratio is undefined.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareMetadata {
    pub config: CompareConfig,
    pub derived: DerivedParams,
    pub seed: u64,
    /// Stream task ids: the ladder uses `psi_task`, the refinement `refine_task`.
    pub psi_task: u64,
    pub refine_task: u64,
    pub version: String,
    pub schema: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub metadata: CompareMetadata,
}

/// Runs the ladder against the matching asymptotic evaluator.
pub fn run_compare(config: &CompareConfig) -> Result<CompareReport> {
    let provider = ConstantsProvider::new(config.constants.clone());
    run_compare_with_provider(config, &provider)
}

pub fn run_compare_with_provider(config: &CompareConfig, provider: &ConstantsProvider) -> Result<CompareReport> {
    let dp = derive(&config.spec)?;
    run_compare_with(config, |u| match config.horizon {
        HorizonSpec::Infinite => psi_infinity_asymptotic(&config.spec, &dp, u, provider),
        h => psi_tu_asymptotic(&config.spec, &h, &dp, u, provider),
    })
}

/// Same ladder with a caller-supplied evaluator.
pub fn run_compare_with(
    config: &CompareConfig,
    evaluate: impl Fn(f64) -> Result<AsymptoticValue>,
) -> Result<CompareReport> {
    ensure(!config.us.is_empty(), "us", || "need at least one threshold".into())?;
    for &u in &config.us {
        ensure(u > 0.0 && u.is_finite(), "us", || format!("thresholds must be finite and > 0, got {u}"))?;
    }
    let mut us = config.us.clone();
    us.sort_by(f64::total_cmp);
    us.dedup();
    let psi_key = StreamKey::new(config.mc.seed, task::COMPARE_BASE);
    let refine_key = psi_key.child(1);
    let estimates = estimate_psi_keyed(&config.spec, &config.horizon, &us, &config.mc, psi_key)?;
    let refined = if config.refine {
        let mut fine = config.mc;
        fine.grid_points = 2 * config.mc.grid_points - 1;
        Some(estimate_psi_keyed(&config.spec, &config.horizon, &us[..1], &fine, refine_key)?.remove(0))
    } else {
        None
    };
    let mut rows = Vec::with_capacity(us.len());
    for (i, (&u, mc)) in us.iter().zip(estimates).enumerate() {
        let asym = evaluate(u)?;
        let log_ratio = (mc.p_hat > 0.0).then(|| (mc.p_hat / asym.value).ln());
        let grid_refinement_delta = match (i, &refined) {
            (0, Some(r)) => Some(r.p_hat - mc.p_hat),
            _ => None,
        };
        rows.push(CompareRow {
            u,
            mc,
            asym,
            log_ratio,
            grid_refinement_delta,
            flagged: log_ratio.is_none(),
        });
    }
    Ok(CompareReport {
        rows,
        metadata: CompareMetadata {
            config: config.clone(),
            derived: derive(&config.spec)?,
            seed: config.mc.seed,
            psi_task: psi_key.task,
            refine_task: refine_key.task,
            version: VERSION.into(),
            schema: super::SCHEMA,
        },
    })
}

impl CompareReport {
    /// Rows as CSV (with the versioned header comment).
    pub fn to_csv(&self) -> String {
        let mut out = super::csv_header();
        out.push_str("u,p_hat,ci_low,ci_high,asymptotic,log_ratio,grid_refinement_delta,flagged\n");
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}\n",
                r.u,
                r.mc.p_hat,
                r.mc.ci_low,
                r.mc.ci_high,
                r.asym.value,
                opt(r.log_ratio),
                opt(r.grid_refinement_delta),
                r.flagged
            ));
        }
        out
    }
}
