//! Resolution of constants: closed forms where known, cached Monte Carlo
//! estimates otherwise.

use super::montecarlo::{pickands_estimate, piterbarg_windows};
use super::{ConstantEstimate, ConstantParams, Method, CASE_TOL};
use crate::error::{ensure, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::RwLock;

/// Monte Carlo settings used when a constant has no closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McPolicy {
    pub pickands_s: f64,
    pub pickands_step: f64,
    /// Interval half-lengths `S` of the Piterbarg ladders; the largest is reported.
    pub piterbarg_ladder: Vec<f64>,
    pub piterbarg_step: f64,
    pub reps: u64,
    pub seed: u64,
}

impl Default for McPolicy {
    fn default() -> Self {
        Self {
            pickands_s: 20.0,
            pickands_step: 0.01,
            piterbarg_ladder: vec![5.0, 10.0, 20.0],
            piterbarg_step: 0.01,
            reps: 10_000,
            seed: 0,
        }
    }
}

/// Thread-safe constant resolver with a persistent Monte Carlo cache.
#[derive(Debug, Default)]
pub struct ConstantsProvider {
    pub policy: McPolicy,
    cache: RwLock<BTreeMap<String, ConstantEstimate>>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    entries: BTreeMap<String, ConstantEstimate>,
}

/// Relative agreement that counts as stable when the Monte Carlo error is nil.
pub const STABLE_REL_FLOOR: f64 = 1e-4;

fn is_two(nu: f64) -> bool {
    (nu - 2.0).abs() <= CASE_TOL
}

impl ConstantsProvider {
    pub fn new(policy: McPolicy) -> Self {
        Self {
            policy,
            cache: RwLock::default(),
        }
    }

    /// Provider preloaded from a cache file written by [`ConstantsProvider::save`];
    /// a missing file yields an empty cache.
    pub fn with_cache_file(policy: McPolicy, path: &Path) -> Result<Self> {
        let provider = Self::new(policy);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let file: CacheFile = serde_json::from_str(&text)?;
            *provider.cache.write().expect("cache lock") = file.entries;
        }
        Ok(provider)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CacheFile {
            entries: self.cache.read().expect("cache lock").clone(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn cached(&self) -> Vec<(String, ConstantEstimate)> {
        let cache = self.cache.read().expect("cache lock");
        cache.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    fn cached_or(&self, key: String, compute: impl FnOnce() -> Result<ConstantEstimate>) -> Result<ConstantEstimate> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let value = compute()?;
        let mut cache = self.cache.write().expect("cache lock");
        Ok(cache.entry(key).or_insert(value).clone())
    }

    fn key(kind: &str, nu: f64, lambda: Option<f64>, s: &str, step: f64, reps: u64, seed: u64) -> String {
        let lambda = lambda.map_or("-".to_string(), |l| format!("{l:?}"));
        format!("{kind}|nu={nu:?}|lambda={lambda}|S={s}|step={step:?}|reps={reps}|seed={seed}")
    }

    /// Pickands' constant `H_nu`.
    pub fn pickands(&self, nu: f64) -> Result<ConstantEstimate> {
        ensure(nu > 0.0 && nu <= 2.0, "nu", || format!("must lie in (0,2], got {nu}"))?;
        if is_two(nu) {
            return Ok(ConstantEstimate::closed_form(
                "pickands",
                1.0 / PI.sqrt(),
                ConstantParams {
                    nu: Some(nu),
                    ..Default::default()
                },
            ));
        }
        let p = &self.policy;
        let key = Self::key("pickands", nu, None, &format!("{:?}", p.pickands_s), p.pickands_step, p.reps, p.seed);
        self.cached_or(key, || pickands_estimate(nu, p.pickands_s, p.pickands_step, p.reps, p.seed))
    }

    /// Two-sided limit `P^_nu^lambda` over `[-S, S]`, `S -> inf`.
    pub fn piterbarg_two_sided(&self, nu: f64, lambda: f64) -> Result<ConstantEstimate> {
        if is_two(nu) {
            ensure(lambda > 0.0 && lambda.is_finite(), "lambda", || format!("must be > 0, got {lambda}"))?;
            return Ok(ConstantEstimate::closed_form(
                "piterbarg_two_sided",
                (1.0 + 1.0 / lambda).sqrt(),
                ConstantParams {
                    nu: Some(nu),
                    lambda: Some(lambda),
                    ..Default::default()
                },
            ));
        }
        self.piterbarg_interval(nu, lambda, f64::INFINITY, f64::INFINITY)
    }

    /// One-sided limit `P~_nu^lambda` over `[0, S]`, `S -> inf`.
    pub fn piterbarg_one_sided(&self, nu: f64, lambda: f64) -> Result<ConstantEstimate> {
        self.piterbarg_interval(nu, lambda, 0.0, f64::INFINITY)
    }

    /// `P_nu^lambda[-x1, x2]`; infinite ends are replaced by the ladder and
    /// the largest member is reported, with a stability flag.
    pub fn piterbarg_interval(&self, nu: f64, lambda: f64, x1: f64, x2: f64) -> Result<ConstantEstimate> {
        ensure(-x1 < x2, "x1/x2", || format!("need -x1 < x2, got x1 = {x1}, x2 = {x2}"))?;
        if x1.is_infinite() && x2.is_infinite() && is_two(nu) {
            return self.piterbarg_two_sided(nu, lambda);
        }
        let kind = match (x1, x2) {
            (a, b) if a.is_infinite() && b.is_infinite() => "piterbarg_two_sided",
            (a, b) if a == 0.0 && b.is_infinite() => "piterbarg_one_sided",
            _ => "piterbarg",
        };
        let p = self.policy.clone();
        let (lo, hi) = (-x1, x2);
        let ladder: Vec<f64> = if lo.is_finite() && hi.is_finite() {
            vec![f64::NAN]
        } else {
            ensure(!p.piterbarg_ladder.is_empty(), "piterbarg_ladder", || "empty ladder".into())?;
            p.piterbarg_ladder.clone()
        };
        let windows: Vec<(f64, f64)> = ladder
            .iter()
            .map(|&s| {
                let w_lo = if lo.is_finite() { lo } else { hi.min(0.0) - s };
                let w_hi = if hi.is_finite() { hi } else { lo.max(0.0) + s };
                (w_lo, w_hi)
            })
            .collect();
        let s_desc = format!("{:?}", windows);
        let key = Self::key(kind, nu, Some(lambda), &s_desc, p.piterbarg_step, p.reps, p.seed);
        self.cached_or(key, || {
            let est = piterbarg_windows(nu, lambda, &windows, p.piterbarg_step, p.reps, p.seed)?;
            let last = est.last().expect("non-empty ladder").clone();
            if ladder.len() == 1 {
                return Ok(last);
            }
            let prev = &est[est.len() - 2];
            let combined = (last.stderr.powi(2) + prev.stderr.powi(2)).sqrt();
            let stable = (last.value - prev.value).abs() <= (3.0 * combined).max(STABLE_REL_FLOOR * last.value.abs());
            Ok(ConstantEstimate {
                kind: kind.into(),
                params: ConstantParams {
                    nu: Some(nu),
                    lambda: Some(lambda),
                    s1: Some(x1),
                    s2: Some(x2),
                    step: Some(p.piterbarg_step),
                    reps: Some(p.reps),
                    seed: Some(p.seed),
                    ladder: Some(
                        ladder
                            .iter()
                            .zip(&est)
                            .map(|(&s, e)| (s, e.value, e.stderr))
                            .collect(),
                    ),
                    stable: Some(stable),
                    ..Default::default()
                },
                value: last.value,
                stderr: last.stderr,
                method: Method::MonteCarlo,
            })
        })
    }
}
