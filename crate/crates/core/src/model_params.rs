//! Model-level constants: the variance peak `t0` of `Y(t)/sqrt(1 + c t^beta)`,
//! its expansion coefficients `A`, `B`, the horizon window `B(u)`, the
//! short-horizon quantities `D`, `m(u)`, `f(u)`, the local-stationarity pair
//! `(alpha, Q)` and horizon scenario classification.

use crate::chi_process::{ChiTrendSpec, HorizonSpec, ThresholdForm};
use crate::error::{ensure, Error, Result};
use crate::gaussian_paths::{ModelKind, SelfSimilarModel};
use crate::serde_ext::ext_f64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub t0: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

/// `(alpha, Q)` in `E(Ybar(s) - Ybar(t))^2 ~ Q |s - t|^alpha` near `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalStationarity {
    pub alpha: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

fn check_trend(h: f64, beta: f64, c: f64) -> Result<()> {
    ensure(h > 0.0 && h < 1.0, "hurst", || format!("must lie in (0,1), got {h}"))?;
    ensure(c > 0.0, "c", || format!("trend scale must be > 0, got {c}"))?;
    ensure(beta > 2.0 * h, "beta", || format!("need beta > 2H = {}, got {beta}", 2.0 * h))
}

/// Unique maximizer of `t^H / sqrt(1 + c t^beta)`.
pub fn t0_of(h: f64, beta: f64, c: f64) -> Result<f64> {
    check_trend(h, beta, c)?;
    Ok((2.0 * h / (c * (beta - 2.0 * h))).powf(1.0 / beta))
}

/// `(A, B)` with `sigma_Z(t) = A^{-1/2} (1 - B/(4A) (t - t0)^2 (1 + o(1)))`.
pub fn ab_of(h: f64, beta: f64, c: f64) -> Result<(f64, f64)> {
    check_trend(h, beta, c)?;
    let r = 2.0 * h / (c * (beta - 2.0 * h));
    let a = r.powf(-2.0 * h / beta) * beta / (beta - 2.0 * h);
    let b = 2.0 * r.powf(-2.0 * (h + 1.0) / beta) * h * beta;
    Ok((a, b))
}

/// Width `B(u) = sqrt(2/B) u^{(H+1)/beta - 1/2}` of the long-horizon window.
pub fn b_window(h: f64, beta: f64, big_b: f64, u: f64) -> Result<f64> {
    ensure(u > 0.0, "u", || format!("must be > 0, got {u}"))?;
    ensure(big_b > 0.0, "B", || format!("must be > 0, got {big_b}"))?;
    Ok((2.0 / big_b).sqrt() * u.powf((h + 1.0) / beta - 0.5))
}

/// Slope `D` of the standard deviation at the right end of the short horizon.
pub fn d_of(h: f64, beta: f64, c: f64, s0: f64) -> Result<f64> {
    let t0 = t0_of(h, beta, c)?;
    ensure((0.0..t0).contains(&s0), "s0", || format!("need 0 <= s0 < t0 = {t0}, got {s0}"))?;
    let cs = c * s0.powf(beta);
    Ok((2.0 * h - c * (beta - 2.0 * h) * s0.powf(beta)) / (2.0 * (1.0 + cs)))
}

/// `m(u) = (u + c T_u^beta) / T_u^{2H}`.
pub fn m_of(u: f64, t_u: f64, c: f64, beta: f64, h: f64) -> Result<f64> {
    ensure(t_u > 0.0, "T_u", || format!("must be > 0, got {t_u}"))?;
    Ok((u + c * t_u.powf(beta)) / t_u.powf(2.0 * h))
}

/// Scale of the exponential first-passage limit in the short-horizon scenario.
pub fn f_of(u: f64, t_u: f64, h: f64, beta: f64, c: f64, s0: f64) -> Result<f64> {
    ensure(t_u > 0.0, "T_u", || format!("must be > 0, got {t_u}"))?;
    ensure(s0 >= 0.0, "s0", || format!("must be >= 0, got {s0}"))?;
    let cs = c * s0.powf(beta);
    let slope = 2.0 * h - c * beta * s0.powf(beta) / (1.0 + cs);
    ensure(slope > 0.0, "s0", || {
        format!("2H - c beta s0^beta/(1 + c s0^beta) = {slope} must be > 0 (s0 < t0)")
    })?;
    Ok(2.0 * t_u.powf(2.0 * h + 1.0) / (slope * (u + c * t_u.powf(beta))))
}

/// Closed form for fBm: `alpha = 2H`, `Q = t0^{-2H}`.
pub fn local_stationarity_fbm(h: f64, t0: f64) -> Result<LocalStationarity> {
    ensure(h > 0.0 && h < 1.0, "hurst", || format!("must lie in (0,1), got {h}"))?;
    ensure(t0 > 0.0, "t0", || format!("must be > 0, got {t0}"))?;
    Ok(LocalStationarity {
        alpha: 2.0 * h,
        q: t0.powf(-2.0 * h),
    })
}

/// Window ladder of the numeric `(alpha, Q)` estimator.
pub const LS_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Relative agreement required between consecutive ladder rungs.
pub const LS_TOLERANCE: f64 = 0.02;

/// Structure function `E(Ybar(t0 + h/2) - Ybar(t0 - h/2))^2` of the standardized process.
fn structure_function(model: &SelfSimilarModel, t0: f64, h: f64) -> Result<f64> {
    let (s, t) = (t0 - 0.5 * h, t0 + 0.5 * h);
    let cov = model.covariance(s, t)?;
    let norm = (model.covariance(s, s)? * model.covariance(t, t)?).sqrt();
    Ok(2.0 - 2.0 * cov / norm)
}

/// Numeric-limit estimate of `(alpha, Q)` from the covariance on a shrinking
/// window around `t0`; fails unless consecutive rungs agree within
/// [`LS_TOLERANCE`]. The structure function is `Q h^alpha + R h^2 + ...`
/// (the window is centred, so odd smooth terms cancel); the reported pair
/// eliminates the `h^2` term between rungs.
pub fn local_stationarity_numeric(model: &SelfSimilarModel, t0: f64) -> Result<LocalStationarity> {
    ensure(t0 > 0.0, "t0", || format!("must be > 0, got {t0}"))?;
    let h = LS_LADDER;
    let v = h
        .iter()
        .map(|&x| structure_function(model, t0, x))
        .collect::<Result<Vec<_>>>()?;
    let slope = |i: usize| (v[i] / v[i + 1]).ln() / (h[i] / h[i + 1]).ln();
    let (a1, a2) = (slope(0), slope(1));
    let q1 = v[1] / h[1].powf(a2);
    let q2 = v[2] / h[2].powf(a2);
    let stable = ((a1 - a2) / a2).abs() <= LS_TOLERANCE && ((q1 - q2) / q2).abs() <= LS_TOLERANCE;
    ensure(stable && a2 > 0.0 && a2 < 2.0, "local_stationarity", || {
        format!("numeric (alpha, Q) did not stabilize: alpha {a1} -> {a2}, Q {q1} -> {q2}")
    })?;
    // second-order elimination needs alpha away from 2, where h^alpha and h^2 merge
    let r = h[0] / h[1];
    let d1 = v[0] - r * r * v[1];
    let d2 = v[1] - r * r * v[2];
    if a2 < 1.9 && d1 / d2 > 0.0 {
        let alpha = (d1 / d2).ln() / r.ln();
        let q = d2 / (h[1].powf(alpha) * (1.0 - r.powf(2.0 - alpha)));
        if q > 0.0 && ((alpha - a2) / a2).abs() <= LS_TOLERANCE {
            return Ok(LocalStationarity { alpha, q });
        }
    }
    Ok(LocalStationarity { alpha: a2, q: q2 })
}

/// `(alpha, Q)` for `model` at `t0`: override first, then the fBm closed form,
/// then the numeric ladder for sub-fBm and bi-fBm.
pub fn local_stationarity(
    model: &SelfSimilarModel,
    t0: f64,
    override_: Option<LocalStationarity>,
) -> Result<LocalStationarity> {
    if let Some(ls) = override_ {
        ensure(ls.alpha > 0.0 && ls.alpha < 2.0, "alpha", || {
            format!("must lie in (0,2), got {}", ls.alpha)
        })?;
        ensure(ls.q > 0.0, "Q", || format!("must be > 0, got {}", ls.q))?;
        return Ok(ls);
    }
    match model.kind {
        ModelKind::Fbm => local_stationarity_fbm(model.hurst, t0),
        ModelKind::SubFbm | ModelKind::BiFbm { .. } => local_stationarity_numeric(model, t0),
        other => Err(Error::NoLocalStationarity { kind: other.name() }),
    }
}

/// Every derived constant for `spec`.
pub fn derive(spec: &ChiTrendSpec) -> Result<DerivedParams> {
    let h = spec.model.hurst;
    let t0 = t0_of(h, spec.beta, spec.c)?;
    let (a, b) = ab_of(h, spec.beta, spec.c)?;
    let ls = local_stationarity(&spec.model, t0, spec.local_stationarity)?;
    Ok(DerivedParams {
        t0,
        a,
        b,
        alpha: ls.alpha,
        q: ls.q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    /// Short horizon, `T_u / u^{1/beta} -> s0 in [0, t0)`.
    Short { s0: f64 },
    /// Long horizon, `(T_u - t0 u^{1/beta}) / B(u) -> x in (-inf, inf]`.
    Long {
        #[serde(with = "ext_f64")]
        x: f64,
    },
}

pub fn classify_horizon(horizon: &HorizonSpec, h: f64, beta: f64, c: f64) -> Result<Scenario> {
    let t0 = t0_of(h, beta, c)?;
    horizon.validate()?;
    Ok(match *horizon {
        HorizonSpec::Finite { .. } => Scenario::Short { s0: 0.0 },
        HorizonSpec::Infinite => Scenario::Long { x: f64::INFINITY },
        HorizonSpec::Threshold(ThresholdForm::Scale { s }) => {
            if s < t0 {
                Scenario::Short { s0: s }
            } else if s == t0 {
                Scenario::Long { x: 0.0 }
            } else {
                Scenario::Long { x: f64::INFINITY }
            }
        }
        HorizonSpec::Threshold(ThresholdForm::Window { x }) => Scenario::Long { x },
    })
}
