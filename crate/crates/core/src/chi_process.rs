//! Chi-square processes with trend: path construction, grid suprema, first
//! passage, and the Monte Carlo estimators of the exceedance probability and
//! of conditional first-passage times.
//!
//! Exceedance is `sup_t (sum_i b_i^2 Y_i(t)^2 - c t^beta) >= u`, the same event
//! as `tau_u = inf{t : u + c t^beta - sum_i b_i^2 Y_i(t)^2 <= 0}` being finite,
//! so estimators and first-passage samplers agree path by path.
//!
//! Infinite and threshold-dependent horizons are simulated in reduced time
//! `s = t / u^{1/beta}`, where by self-similarity the event becomes
//! `sup_s sum_i b_i^2 Y_i(s)^2 / (1 + c s^beta) >= u^{1 - 2H/beta}`. The
//! reduced statistic does not depend on `u`, so a single set of paths serves a
//! whole threshold ladder.

use crate::error::{ensure, Error, Result};
use crate::gaussian_paths::{rescale_path, PairSource, PathBundle, SelfSimilarModel, TimeGrid};
use crate::mc::{replicate, wilson_interval, Z95};
use crate::model_params::{ab_of, b_window, t0_of, LocalStationarity};
use crate::rng::{task, StreamKey};
use crate::serde_ext::ext_f64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Weights within this distance of 1 count as unit weights.
pub const UNIT_TOL: f64 = 1e-12;
/// Smallest replication count accepted by the estimators.
pub const MIN_REPS: u64 = 100;
/// Default reduced-time truncation of infinite horizons, in units of `t0`.
pub const DEFAULT_TRUNCATION_FACTOR: f64 = 5.0;
/// Default grid resolution.
pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Conditional first-passage sampling gives up below this acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChiTrendInput")]
pub struct ChiTrendSpec {
    /// Weights, sorted non-increasing; the first `k` equal 1.
    pub b: Vec<f64>,
    pub k: usize,
    pub c: f64,
    pub beta: f64,
    pub model: SelfSimilarModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_stationarity: Option<LocalStationarity>,
}

#[derive(Deserialize)]
struct ChiTrendInput {
    b: Vec<f64>,
    c: f64,
    beta: f64,
    model: SelfSimilarModel,
    #[serde(default)]
    local_stationarity: Option<LocalStationarity>,
}

impl TryFrom<ChiTrendInput> for ChiTrendSpec {
    type Error = Error;

    fn try_from(x: ChiTrendInput) -> Result<Self> {
        let mut spec = Self::new(x.b, x.c, x.beta, x.model)?;
        spec.local_stationarity = x.local_stationarity;
        Ok(spec)
    }
}

impl ChiTrendSpec {
    pub fn new(mut b: Vec<f64>, c: f64, beta: f64, model: SelfSimilarModel) -> Result<Self> {
        model.validate()?;
        ensure(model.is_self_similar(), "model", || {
            format!("{} is not self-similar", model.kind.name())
        })?;
        ensure(!b.is_empty(), "b", || "need at least one weight".into())?;
        for &w in &b {
            ensure(w > 0.0 && w <= 1.0 + UNIT_TOL, "b", || format!("weights must lie in (0,1], got {w}"))?;
        }
        b.sort_by(|x, y| y.total_cmp(x));
        let k = b.iter().take_while(|&&w| (w - 1.0).abs() <= UNIT_TOL).count();
        ensure(k >= 1, "b", || format!("largest weight must be 1, got {}", b[0]))?;
        b[..k].fill(1.0);
        t0_of(model.hurst, beta, c)?;
        Ok(Self {
            b,
            k,
            c,
            beta,
            model,
            local_stationarity: None,
        })
    }

    pub fn with_local_stationarity(mut self, ls: LocalStationarity) -> Self {
        self.local_stationarity = Some(ls);
        self
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn hurst(&self) -> f64 {
        self.model.hurst
    }

    pub fn t0(&self) -> f64 {
        t0_of(self.hurst(), self.beta, self.c).expect("validated on construction")
    }

    /// `prod_{i > k} (1 - b_i^2)^{-1/2}`.
    pub fn weight_product(&self) -> f64 {
        self.b[self.k..].iter().map(|w| (1.0 - w * w).powf(-0.5)).product()
    }

    /// Exponent of `u` in the reduced threshold `u^{1 - 2H/beta}`.
    pub fn reduced_exponent(&self) -> f64 {
        1.0 - 2.0 * self.hurst() / self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HorizonSpec {
    Finite { t: f64 },
    Infinite,
    Threshold(ThresholdForm),
}

/// Threshold-dependent horizon `T_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ThresholdForm {
    /// `T_u = s u^{1/beta}`.
    Scale { s: f64 },
    /// `T_u = t0 u^{1/beta} + x B(u)`.
    Window {
        #[serde(with = "ext_f64")]
        x: f64,
    },
}

impl HorizonSpec {
    pub fn scale(s: f64) -> Self {
        HorizonSpec::Threshold(ThresholdForm::Scale { s })
    }

    pub fn window(x: f64) -> Self {
        HorizonSpec::Threshold(ThresholdForm::Window { x })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HorizonSpec::Finite { t } => {
                ensure(t > 0.0 && t.is_finite(), "T", || format!("must be finite and > 0, got {t}"))
            }
            HorizonSpec::Infinite => Ok(()),
            HorizonSpec::Threshold(ThresholdForm::Scale { s }) => {
                ensure(s >= 0.0 && s.is_finite(), "s", || format!("must be finite and >= 0, got {s}"))
            }
            HorizonSpec::Threshold(ThresholdForm::Window { x }) => {
                ensure(x > f64::NEG_INFINITY, "x", || format!("must lie in (-inf, inf], got {x}"))
            }
        }
    }

    /// `T_u` in original time; `+inf` for the infinite horizon.
    pub fn t_u(&self, spec: &ChiTrendSpec, u: f64) -> Result<f64> {
        self.validate()?;
        let scale = u.powf(1.0 / spec.beta);
        Ok(match *self {
            HorizonSpec::Finite { t } => t,
            HorizonSpec::Infinite => f64::INFINITY,
            HorizonSpec::Threshold(ThresholdForm::Scale { s }) => s * scale,
            HorizonSpec::Threshold(ThresholdForm::Window { x }) => {
                if x == f64::INFINITY {
                    f64::INFINITY
                } else {
                    let (_, big_b) = ab_of(spec.hurst(), spec.beta, spec.c)?;
                    spec.t0() * scale + x * b_window(spec.hurst(), spec.beta, big_b, u)?
                }
            }
        })
    }

    /// `T_u / u^{1/beta}`, the horizon in reduced time.
    pub fn reduced_end(&self, spec: &ChiTrendSpec, u: f64) -> Result<f64> {
        ensure(u > 0.0, "u", || format!("reduced time needs u > 0, got {u}"))?;
        let r = self.t_u(spec, u)? / u.powf(1.0 / spec.beta);
        ensure(r > 0.0, "T_u", || format!("horizon is empty at u = {u} (reduced end {r})"))?;
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Reduced-time truncation `T*` of infinite horizons; `5 t0` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

impl McConfig {
    pub fn new(reps: u64, grid_points: usize, seed: u64) -> Self {
        Self {
            reps,
            grid_points,
            seed,
            truncation: None,
        }
    }

    pub fn with_truncation(mut self, t_star: f64) -> Self {
        self.truncation = Some(t_star);
        self
    }

    fn validate(&self) -> Result<()> {
        ensure(self.reps >= MIN_REPS, "reps", || format!("need at least {MIN_REPS}, got {}", self.reps))?;
        ensure(self.grid_points >= 2, "grid_points", || format!("need at least 2, got {}", self.grid_points))?;
        if let Some(t) = self.truncation {
            ensure(t > 0.0 && t.is_finite(), "truncation", || format!("must be finite and > 0, got {t}"))?;
        }
        Ok(())
    }

    fn t_star(&self, spec: &ChiTrendSpec) -> f64 {
        self.truncation.unwrap_or(DEFAULT_TRUNCATION_FACTOR * spec.t0())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: u64,
    pub grid_points: usize,
    /// Right end of the simulated interval: `T` for finite horizons, reduced
    /// time otherwise.
    #[serde(rename = "truncation_T")]
    pub truncation_t: f64,
    pub seed: u64,
    pub wall_ms: u64,
}

impl EstimateResult {
    fn from_hits(hits: u64, mc: &McConfig, end: f64, wall_ms: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, mc.reps, Z95);
        Self {
            p_hat: hits as f64 / mc.reps as f64,
            ci_low,
            ci_high,
            reps: mc.reps,
            grid_points: mc.grid_points,
            truncation_t: end,
            seed: mc.seed,
            wall_ms,
        }
    }

    pub fn hits(&self) -> u64 {
        (self.p_hat * self.reps as f64).round() as u64
    }
}

/// `sum_i b_i^2 Y_i(t)^2 - c t^beta` at every grid point.
pub fn build_chi_path(bundle: &PathBundle, spec: &ChiTrendSpec) -> Result<Vec<f64>> {
    if bundle.components.len() != spec.n() {
        return Err(Error::ComponentMismatch {
            expected: spec.n(),
            actual: bundle.components.len(),
        });
    }
    let mut out: Vec<f64> = bundle.grid.times().iter().map(|t| -spec.c * t.powf(spec.beta)).collect();
    for (path, w) in bundle.components.iter().zip(&spec.b) {
        let w2 = w * w;
        for (o, y) in out.iter_mut().zip(path) {
            *o += w2 * y * y;
        }
    }
    Ok(out)
}

/// Largest value on the grid and the first time it is attained.
pub fn grid_sup(grid: &TimeGrid, path: &[f64]) -> (f64, f64) {
    let mut best = 0;
    for (i, v) in path.iter().enumerate() {
        if *v > path[best] {
            best = i;
        }
    }
    (path[best], grid.time(best))
}

/// `Y(t) / sqrt(1 + c t^beta)`.
pub fn z_transform(grid: &TimeGrid, path: &[f64], c: f64, beta: f64) -> Vec<f64> {
    path.iter()
        .enumerate()
        .map(|(i, y)| y / (1.0 + c * grid.time(i).powf(beta)).sqrt())
        .collect()
}

/// First grid time with `u + c t^beta - sum_i b_i^2 Y_i(t)^2 <= 0`.
pub fn first_passage(bundle: &PathBundle, spec: &ChiTrendSpec, u: f64) -> Result<Option<f64>> {
    let chi = build_chi_path(bundle, spec)?;
    Ok(chi.iter().position(|&v| u - v <= 0.0).map(|i| bundle.grid.time(i)))
}

/// `grid_sup(chi) >= u`.
pub fn exceeds(bundle: &PathBundle, spec: &ChiTrendSpec, u: f64) -> Result<bool> {
    let chi = build_chi_path(bundle, spec)?;
    Ok(grid_sup(&bundle.grid, &chi).0 >= u)
}

/// Per-replication workspace: two sets of component paths and one value path.
struct Work {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    values: Vec<f64>,
    scratch: crate::gaussian_paths::PairScratch,
}

/// Paths for one spec on one 0-started grid, with the per-point weights of
/// either the direct (`-c t^beta`) or the reduced (`1/(1 + c s^beta)`) form.
struct Simulator<'a> {
    spec: &'a ChiTrendSpec,
    grid: TimeGrid,
    source: PairSource,
    b2: Vec<f64>,
    /// Direct form: `-c t^beta`; reduced form: `1/(1 + c s^beta)`.
    profile: Vec<f64>,
    reduced: bool,
}

impl<'a> Simulator<'a> {
    fn new(spec: &'a ChiTrendSpec, grid: TimeGrid, reduced: bool) -> Result<Self> {
        let source = PairSource::new(&spec.model, grid)?;
        let profile = grid
            .times()
            .iter()
            .map(|t| {
                let trend = spec.c * t.powf(spec.beta);
                if reduced {
                    1.0 / (1.0 + trend)
                } else {
                    -trend
                }
            })
            .collect();
        Ok(Self {
            spec,
            grid,
            source,
            b2: spec.b.iter().map(|w| w * w).collect(),
            profile,
            reduced,
        })
    }

    fn work(&self) -> Work {
        let n = self.spec.n();
        let len = self.grid.num_points;
        Work {
            first: vec![vec![0.0; len]; n],
            second: vec![vec![0.0; len]; n],
            values: vec![0.0; len],
            scratch: self.source.scratch(),
        }
    }

    /// Draws replication pair `pair`; `visit(slot, values)` sees the value path
    /// of replications `2 pair` (slot 0) and `2 pair + 1` (slot 1).
    fn run_pair<R: rand::Rng>(&self, w: &mut Work, rng: &mut R, mut visit: impl FnMut(usize, &[f64])) {
        self.source.sample_pair(rng, &mut w.scratch, &mut w.first, &mut w.second);
        for slot in 0..2 {
            let comps = if slot == 0 { &w.first } else { &w.second };
            self.values_into(comps, &mut w.values);
            visit(slot, &w.values);
        }
    }

    fn values_into(&self, comps: &[Vec<f64>], out: &mut [f64]) {
        out.fill(0.0);
        for (path, w2) in comps.iter().zip(&self.b2) {
            for (o, y) in out.iter_mut().zip(path) {
                *o += w2 * y * y;
            }
        }
        if self.reduced {
            for (o, p) in out.iter_mut().zip(&self.profile) {
                *o *= p;
            }
        } else {
            for (o, p) in out.iter_mut().zip(&self.profile) {
                *o += p;
            }
        }
    }
}

/// One exceedance query against a shared value path: is the maximum over the
/// first `cutoff + 1` grid points at least `level`?
#[derive(Debug, Clone, Copy)]
struct Query {
    level: f64,
    cutoff: usize,
}

fn pairs(reps: u64) -> u64 {
    reps.div_ceil(2)
}

/// Hit counts of every query, sharing one set of paths.
fn count_hits(sim: &Simulator, key: StreamKey, reps: u64, queries: &[Query]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_by_key(|&q| queries[q].cutoff);
    let per_pair = replicate(
        key,
        0..pairs(reps),
        || sim.work(),
        |w, rng, pair| {
            let mut hits = vec![0u32; queries.len()];
            sim.run_pair(w, rng, |slot, values| {
                if 2 * pair + slot as u64 >= reps {
                    return;
                }
                let mut prefix_max = f64::NEG_INFINITY;
                let mut upto = 0;
                for &q in &order {
                    let cut = queries[q].cutoff;
                    while upto <= cut {
                        prefix_max = prefix_max.max(values[upto]);
                        upto += 1;
                    }
                    if prefix_max >= queries[q].level {
                        hits[q] += 1;
                    }
                }
            });
            hits
        },
    );
    let mut total = vec![0u64; queries.len()];
    for h in per_pair {
        for (t, x) in total.iter_mut().zip(h) {
            *t += x as u64;
        }
    }
    total
}

/// Index of the last grid point not beyond `end`.
fn cutoff_index(grid: &TimeGrid, end: f64) -> usize {
    let last = grid.num_points - 1;
    if end >= grid.t1_time {
        return last;
    }
    let i = ((end - grid.t0_time) / grid.spacing() * (1.0 + 1e-12)).floor();
    (i.max(0.0) as usize).min(last)
}

/// How a horizon is simulated for a set of thresholds.
struct Plan {
    reduced: bool,
    end: f64,
    queries: Vec<Query>,
}

fn plan(spec: &ChiTrendSpec, horizon: &HorizonSpec, us: &[f64], mc: &McConfig) -> Result<(Plan, TimeGrid)> {
    horizon.validate()?;
    mc.validate()?;
    for &u in us {
        ensure(u >= 0.0 && u.is_finite(), "u", || format!("must be finite and >= 0, got {u}"))?;
    }
    if let HorizonSpec::Finite { t } = *horizon {
        let grid = TimeGrid::from_zero(t, mc.grid_points)?;
        let queries = us.iter().map(|&u| Query { level: u, cutoff: grid.num_points - 1 }).collect();
        return Ok((Plan { reduced: false, end: t, queries }, grid));
    }
    let t_star = mc.t_star(spec);
    let ends = us
        .iter()
        .map(|&u| match horizon {
            HorizonSpec::Infinite => Ok(t_star),
            _ => horizon.reduced_end(spec, u).map(|r| r.min(t_star)),
        })
        .collect::<Result<Vec<_>>>()?;
    let end = ends.iter().cloned().fold(0.0, f64::max);
    let grid = TimeGrid::from_zero(end, mc.grid_points)?;
    let queries = us
        .iter()
        .zip(&ends)
        .map(|(&u, &e)| Query {
            level: u.powf(spec.reduced_exponent()),
            cutoff: cutoff_index(&grid, e),
        })
        .collect();
    Ok((Plan { reduced: true, end, queries }, grid))
}

/// Monte Carlo estimate of `psi_T(u)` with a 95% Wilson interval.
pub fn estimate_psi(spec: &ChiTrendSpec, horizon: &HorizonSpec, u: f64, mc: &McConfig) -> Result<EstimateResult> {
    Ok(estimate_psi_ladder(spec, horizon, &[u], mc)?.remove(0))
}

/// Estimates for several thresholds from one set of paths. Threshold-dependent
/// horizons share the paths of the longest reduced horizon.
pub fn estimate_psi_ladder(
    spec: &ChiTrendSpec,
    horizon: &HorizonSpec,
    us: &[f64],
    mc: &McConfig,
) -> Result<Vec<EstimateResult>> {
    estimate_psi_keyed(spec, horizon, us, mc, StreamKey::new(mc.seed, task::PSI))
}

pub(crate) fn estimate_psi_keyed(
    spec: &ChiTrendSpec,
    horizon: &HorizonSpec,
    us: &[f64],
    mc: &McConfig,
    key: StreamKey,
) -> Result<Vec<EstimateResult>> {
    let start = Instant::now();
    let (plan, grid) = plan(spec, horizon, us, mc)?;
    let sim = Simulator::new(spec, grid, plan.reduced)?;
    let hits = count_hits(&sim, key, mc.reps, &plan.queries);
    let ms = start.elapsed().as_millis() as u64;
    Ok(hits.into_iter().map(|h| EstimateResult::from_hits(h, mc, plan.end, ms)).collect())
}

/// `psi_{T_u}(u) / psi_inf(u)` for a window-form horizon, numerator and
/// denominator counted on the same paths over `[0, T*]` in reduced time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub numerator: EstimateResult,
    pub denominator: EstimateResult,
    pub ratio: f64,
    /// Wilson interval of numerator hits among denominator hits (the
    /// numerator event is contained in the denominator event).
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn estimate_window_ratio(spec: &ChiTrendSpec, x: f64, u: f64, mc: &McConfig) -> Result<RatioEstimate> {
    ensure(u > 0.0, "u", || format!("must be > 0, got {u}"))?;
    mc.validate()?;
    let start = Instant::now();
    let t_star = mc.t_star(spec);
    let grid = TimeGrid::from_zero(t_star, mc.grid_points)?;
    let level = u.powf(spec.reduced_exponent());
    let end = HorizonSpec::window(x).reduced_end(spec, u)?.min(t_star);
    let queries = [
        Query { level, cutoff: cutoff_index(&grid, end) },
        Query { level, cutoff: grid.num_points - 1 },
    ];
    let sim = Simulator::new(spec, grid, true)?;
    let hits = count_hits(&sim, StreamKey::new(mc.seed, task::PSI), mc.reps, &queries);
    let ms = start.elapsed().as_millis() as u64;
    let (lo, hi) = wilson_interval(hits[0], hits[1], Z95);
    Ok(RatioEstimate {
        numerator: EstimateResult::from_hits(hits[0], mc, end, ms),
        denominator: EstimateResult::from_hits(hits[1], mc, t_star, ms),
        ratio: if hits[1] == 0 { f64::NAN } else { hits[0] as f64 / hits[1] as f64 },
        ci_low: lo,
        ci_high: hi,
    })
}

/// Exceedance indicators of each replication computed twice from the same
/// reduced-time paths on `[0, reduced_end]`: directly, after mapping the paths
/// to original time with `rescale_path`, and through the reduced event.
pub fn matched_indicators(
    spec: &ChiTrendSpec,
    reduced_end: f64,
    u: f64,
    mc: &McConfig,
) -> Result<(Vec<bool>, Vec<bool>)> {
    mc.validate()?;
    ensure(u > 0.0, "u", || format!("must be > 0, got {u}"))?;
    let grid = TimeGrid::from_zero(reduced_end, mc.grid_points)?;
    let sim = Simulator::new(spec, grid, true)?;
    let level = u.powf(spec.reduced_exponent());
    let factor = u.powf(1.0 / spec.beta);
    let reps = mc.reps;
    let per_pair = replicate(
        StreamKey::new(mc.seed, task::PSI),
        0..pairs(reps),
        || sim.work(),
        |w, rng, pair| {
            sim.source.sample_pair(rng, &mut w.scratch, &mut w.first, &mut w.second);
            let mut out = Vec::with_capacity(2);
            for (slot, comps) in [&w.first, &w.second].into_iter().enumerate() {
                if 2 * pair + slot as u64 >= reps {
                    break;
                }
                let mut scaled = Vec::with_capacity(comps.len());
                let mut big_grid = grid;
                for p in comps.iter() {
                    let (g, y) = rescale_path(&grid, p, factor, spec.hurst()).expect("factor > 0");
                    big_grid = g;
                    scaled.push(y);
                }
                let bundle = PathBundle::new(big_grid, scaled).expect("shared grid");
                let direct = exceeds(&bundle, spec, u).expect("component count matches");
                sim.values_into(comps, &mut w.values);
                let reduced = w.values.iter().any(|&v| v >= level);
                out.push((direct, reduced));
            }
            out
        },
    );
    Ok(per_pair.into_iter().flatten().unzip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FptConfig {
    /// Number of accepted samples wanted.
    pub samples: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Attempt budget; sampling stops once it is spent.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u64,
    /// Reduced-time truncation of infinite horizons; `5 t0` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

fn default_max_attempts() -> u64 {
    50_000_000
}

impl FptConfig {
    pub fn new(samples: u64, grid_points: usize, seed: u64) -> Self {
        Self {
            samples,
            grid_points,
            seed,
            max_attempts: default_max_attempts(),
            truncation: None,
        }
    }
}

/// Conditional first-passage sample: passage times of the accepted
/// replications, in replication order, and the attempts it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptSample {
    pub taus: Vec<f64>,
    pub attempts: u64,
    /// `T_u` in original time (`inf` for unbounded horizons).
    #[serde(with = "ext_f64")]
    pub horizon: f64,
    pub acceptance: f64,
    pub acceptance_ci: (f64, f64),
}

/// Rejection sampler for `tau_u` given `tau_u <= T_u`: replications are drawn
/// in fixed-size batches until `samples` passages are collected, the budget is
/// spent, or the acceptance rate is confidently below [`MIN_ACCEPTANCE`].
pub fn sample_fpt_conditional(
    spec: &ChiTrendSpec,
    horizon: &HorizonSpec,
    u: f64,
    cfg: &FptConfig,
) -> Result<FptSample> {
    horizon.validate()?;
    ensure(u >= 0.0 && u.is_finite(), "u", || format!("must be finite and >= 0, got {u}"))?;
    ensure(cfg.samples >= 1, "samples", || "need at least one".into())?;
    ensure(cfg.grid_points >= 2, "grid_points", || format!("need at least 2, got {}", cfg.grid_points))?;
    let mc = McConfig {
        reps: MIN_REPS,
        grid_points: cfg.grid_points,
        seed: cfg.seed,
        truncation: cfg.truncation,
    };
    let (grid, reduced, level, time_scale) = match *horizon {
        HorizonSpec::Finite { t } => (TimeGrid::from_zero(t, cfg.grid_points)?, false, u, 1.0),
        _ => {
            ensure(u > 0.0, "u", || "threshold-dependent horizons need u > 0".into())?;
            let end = match horizon {
                HorizonSpec::Infinite => mc.t_star(spec),
                _ => horizon.reduced_end(spec, u)?.min(mc.t_star(spec)),
            };
            let grid = TimeGrid::from_zero(end, cfg.grid_points)?;
            (grid, true, u.powf(spec.reduced_exponent()), u.powf(1.0 / spec.beta))
        }
    };
    let sim = Simulator::new(spec, grid, reduced)?;
    let key = StreamKey::new(cfg.seed, task::FPT);
    const BATCH_PAIRS: u64 = 4096;
    let mut taus = Vec::new();
    let mut attempts = 0u64;
    let mut next_pair = 0u64;
    while attempts < cfg.max_attempts {
        let batch = BATCH_PAIRS.min((cfg.max_attempts - attempts).div_ceil(2));
        let found = replicate(
            key,
            next_pair..next_pair + batch,
            || sim.work(),
            |w, rng, _| {
                let mut out = [None, None];
                sim.run_pair(w, rng, |slot, values| {
                    out[slot] = values.iter().position(|&v| v >= level).map(|i| grid.time(i) * time_scale);
                });
                out
            },
        );
        next_pair += batch;
        for (i, tau) in found.into_iter().flatten().enumerate() {
            let index = attempts + i as u64;
            if index >= cfg.max_attempts {
                break;
            }
            if let Some(t) = tau {
                taus.push(t);
                if taus.len() as u64 == cfg.samples {
                    attempts = index + 1;
                    return Ok(finish(taus, attempts, horizon.t_u(spec, u)?));
                }
            }
        }
        attempts = (attempts + 2 * batch).min(cfg.max_attempts);
        let (_, upper) = wilson_interval(taus.len() as u64, attempts, Z95);
        if upper < MIN_ACCEPTANCE {
            break;
        }
    }
    let accepted = taus.len() as u64;
    if (accepted as f64) < MIN_ACCEPTANCE * attempts as f64 {
        return Err(Error::AcceptanceTooLow {
            accepted,
            attempts,
            acceptance: accepted as f64 / attempts.max(1) as f64,
            min_acceptance: MIN_ACCEPTANCE,
        });
    }
    Ok(finish(taus, attempts, horizon.t_u(spec, u)?))
}

fn finish(taus: Vec<f64>, attempts: u64, horizon: f64) -> FptSample {
    let accepted = taus.len() as u64;
    FptSample {
        acceptance: accepted as f64 / attempts as f64,
        acceptance_ci: wilson_interval(accepted, attempts, Z95),
        taus,
        attempts,
        horizon,
    }
}

/// Single-column CSV `tau`.
pub fn fpt_csv(sample: &FptSample) -> String {
    let mut out = String::from("tau\n");
    for t in &sample.taus {
        out.push_str(&format!("{t:.16e}\n"));
    }
    out
}
