//! Closed-form tail asymptotics. Every evaluator returns the value together
//! with its multiplicative factors
//!
//! `value = constant_part * weight_product * power_part * tail_part`
//!
//! so a drifting ingredient can be pinned down on its own. Values that
//! underflow stay available through `ln_value`.

use crate::chi_process::{ChiTrendSpec, HorizonSpec, UNIT_TOL};
use crate::constants::{
    ln_upsilon, mm_constant, mm_hat, mm_tilde, upsilon_tail, ConstantEstimate, ConstantsProvider, RegVarCase,
};
use crate::error::{ensure, Result};
use crate::model_params::{b_window, classify_horizon, d_of, f_of, m_of, DerivedParams, Scenario};
use crate::serde_ext::ext_f64;
use crate::special::{norm_cdf, norm_quantile};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub constant_part: f64,
    /// `prod_{i > k} (1 - b_i^2)^{-1/2}`.
    pub weight_product: f64,
    /// `level^power_exponent`.
    pub power_part: f64,
    pub power_exponent: f64,
    /// `Upsilon_k` for chi-square evaluators, the Gaussian tail otherwise.
    pub tail_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticValue {
    pub evaluator: String,
    pub value: f64,
    pub ln_value: f64,
    pub factors: Factors,
    pub constants_used: Vec<ConstantEstimate>,
}

impl AsymptoticValue {
    fn assemble(
        evaluator: &str,
        constant: Option<ConstantEstimate>,
        constant_part: f64,
        weight_product: f64,
        level: f64,
        power_exponent: f64,
        tail_part: f64,
        ln_tail: f64,
    ) -> Self {
        let power_part = level.powf(power_exponent);
        Self {
            evaluator: evaluator.into(),
            value: constant_part * weight_product * power_part * tail_part,
            ln_value: constant_part.ln() + weight_product.ln() + power_exponent * level.ln() + ln_tail,
            factors: Factors {
                constant_part,
                weight_product,
                power_part,
                power_exponent,
                tail_part,
            },
            constants_used: constant.into_iter().collect(),
        }
    }

    /// Relative standard error inherited from estimated constants.
    pub fn rel_stderr(&self) -> f64 {
        self.constants_used
            .iter()
            .filter(|c| c.value > 0.0)
            .map(|c| (c.stderr / c.value).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Weights `1 = b_1 = ... = b_k > b_{k+1} >= ... >= b_n > 0`, given in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights {
    b: Vec<f64>,
    k: usize,
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = crate::Error;

    fn try_from(b: Vec<f64>) -> Result<Self> {
        Self::new(b)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.b
    }
}

impl Weights {
    pub fn new(mut b: Vec<f64>) -> Result<Self> {
        ensure(!b.is_empty(), "b", || "need at least one weight".into())?;
        for &w in &b {
            ensure(w > 0.0 && w <= 1.0 + UNIT_TOL, "b", || format!("weights must lie in (0,1], got {w}"))?;
        }
        ensure(b.windows(2).all(|p| p[0] >= p[1]), "b", || {
            format!("weights must be non-increasing, got {b:?}")
        })?;
        let k = b.iter().take_while(|&&w| (w - 1.0).abs() <= UNIT_TOL).count();
        ensure(k >= 1, "b", || format!("largest weight must be 1, got {}", b[0]))?;
        ensure(b[k..].iter().all(|&w| w < 1.0 - UNIT_TOL), "b", || {
            format!("weights after the unit block must be < 1, got {b:?}")
        })?;
        b[..k].fill(1.0);
        Ok(Self { b, k })
    }

    pub fn of_spec(spec: &ChiTrendSpec) -> Self {
        Self {
            b: spec.b.clone(),
            k: spec.k,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.b
    }

    pub fn product(&self) -> f64 {
        self.b[self.k..].iter().map(|w| (1.0 - w * w).powf(-0.5)).product()
    }
}

/// Exponents and coefficients of the variance and correlation expansions
/// around the variance peak `t0`:
/// `sigma(t) = 1 - a|t - t0|^mu (1 + o(1))`, `r(s, t) = 1 - d|t - s|^nu (1 + o(1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupParams {
    pub nu: f64,
    pub mu: f64,
    pub d: f64,
    pub a: f64,
    /// Whether `t0` is an interior point of `[0, T]`.
    #[serde(default = "default_true")]
    pub t0_interior: bool,
}

fn default_true() -> bool {
    true
}

fn check_level(name: &'static str, u: f64) -> Result<()> {
    ensure(u > 0.0 && u.is_finite(), name, || format!("must be finite and > 0, got {u}"))
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// `P(sup X > u)` for a Gaussian process with unit variance peak.
pub fn gaussian_sup_asymptotic(p: &SupParams, u: f64, provider: &ConstantsProvider) -> Result<AsymptoticValue> {
    check_level("u", u)?;
    let m = mm_constant(p.nu, p.mu, p.d, p.a, p.t0_interior, provider)?;
    let ln_tail = -0.5 * u * u - u.ln() - 0.5 * (2.0 * PI).ln();
    Ok(AsymptoticValue::assemble(
        "gaussian_sup",
        Some(m.clone()),
        m.value,
        1.0,
        u,
        pos(2.0 / p.nu - 2.0 / p.mu),
        ln_tail.exp(),
        ln_tail,
    ))
}

/// `P(sup sum b_i^2 X_i^2 > u)` for independent copies of such a process.
pub fn chi_sup_asymptotic(
    w: &Weights,
    p: &SupParams,
    u: f64,
    provider: &ConstantsProvider,
) -> Result<AsymptoticValue> {
    check_level("u", u)?;
    let m = mm_constant(p.nu, p.mu, p.d, p.a, p.t0_interior, provider)?;
    chi_product("chi_sup", w, m, u, pos(1.0 / p.nu - 1.0 / p.mu))
}

fn chi_product(evaluator: &str, w: &Weights, m: ConstantEstimate, level: f64, exponent: f64) -> Result<AsymptoticValue> {
    Ok(AsymptoticValue::assemble(
        evaluator,
        Some(m.clone()),
        m.value,
        w.product(),
        level,
        exponent,
        upsilon_tail(w.k, level)?,
        ln_upsilon(w.k, level)?,
    ))
}

/// Supremum over the shrinking window `[t0 - x1 u^{-2/mu}, t0 + x2 u^{-2/mu}]`.
///
/// NOTE the level convention: `level` is the level the chi-square process is
/// compared with. The window and the constants are written in terms of
/// `u = sqrt(level)`, so the result is `M^ u^{(2/nu - 2/mu)+} Upsilon_k(u^2)`
/// with `u^2 = level`. The reported power exponent refers to `level`.
pub fn chi_sup_window_asymptotic(
    w: &Weights,
    p: &SupParams,
    x1: f64,
    x2: f64,
    level: f64,
    provider: &ConstantsProvider,
) -> Result<AsymptoticValue> {
    check_level("level", level)?;
    let m = mm_hat(p.nu, p.mu, p.d, p.a, x1, x2, provider)?;
    chi_product("chi_sup_window", w, m, level, pos(1.0 / p.nu - 1.0 / p.mu))
}

/// `psi_inf(u)` for the chi-square process with trend over `[0, inf)`.
pub fn psi_infinity_asymptotic(
    spec: &ChiTrendSpec,
    dp: &DerivedParams,
    u: f64,
    provider: &ConstantsProvider,
) -> Result<AsymptoticValue> {
    check_level("u", u)?;
    let alpha = dp.alpha;
    ensure(alpha > 0.0 && alpha <= 2.0, "alpha", || format!("must lie in (0,2], got {alpha}"))?;
    let h = provider.pickands(alpha)?;
    let constant = 2f64.powf(1.0 - 1.0 / alpha)
        * (dp.q * dp.a).powf(1.0 / alpha)
        * dp.b.powf(-0.5)
        * PI.sqrt()
        * h.value;
    let e = spec.reduced_exponent();
    let w = Weights::of_spec(spec);
    let arg = dp.a * u.powf(e);
    Ok(AsymptoticValue::assemble(
        "psi_infinity",
        Some(h),
        constant,
        w.product(),
        u,
        e * (1.0 / alpha - 0.5),
        upsilon_tail(w.k, arg)?,
        ln_upsilon(w.k, arg)?,
    ))
}

/// `psi_{T_u}(u)`. In the short-horizon scenario the variance peak sits at
/// the right end of the rescaled interval, so the constant takes its
/// end-point form.
pub fn psi_tu_asymptotic(
    spec: &ChiTrendSpec,
    horizon: &HorizonSpec,
    dp: &DerivedParams,
    u: f64,
    provider: &ConstantsProvider,
) -> Result<AsymptoticValue> {
    check_level("u", u)?;
    let h = spec.hurst();
    match classify_horizon(horizon, h, spec.beta, spec.c)? {
        Scenario::Short { s0 } => {
            let t_u = horizon.t_u(spec, u)?;
            let m = m_of(u, t_u, spec.c, spec.beta, h)?;
            let big_d = d_of(h, spec.beta, spec.c, s0)?;
            let d = 0.5 * dp.q * dp.t0.powf(dp.alpha);
            let constant = mm_constant(dp.alpha, 1.0, d, big_d, false, provider)?;
            chi_product("psi_tu_short", &Weights::of_spec(spec), constant, m, pos(1.0 / dp.alpha - 1.0))
        }
        Scenario::Long { x } => {
            let mut v = psi_infinity_asymptotic(spec, dp, u, provider)?;
            let phi = norm_cdf(x);
            v.evaluator = "psi_tu_long".into();
            v.factors.constant_part *= phi;
            v.value *= phi;
            v.ln_value += phi.ln();
            Ok(v)
        }
    }
}

/// Same product form with non-identical components: `X` for the unit
/// weights, `X1` for the rest, with Hölder exponents `gamma`, `gamma1`.
pub fn chi_sup_asymptotic_nonidentical(
    w: &Weights,
    p: &SupParams,
    gamma: f64,
    gamma1: f64,
    u: f64,
    provider: &ConstantsProvider,
) -> Result<AsymptoticValue> {
    ensure(gamma >= p.nu, "gamma", || format!("need gamma >= nu = {}, got {gamma}", p.nu))?;
    ensure(gamma1 >= p.nu, "gamma1", || format!("need gamma1 >= nu = {}, got {gamma1}", p.nu))?;
    let mut v = chi_sup_asymptotic(w, p, u, provider)?;
    v.evaluator = "chi_sup_nonidentical".into();
    Ok(v)
}

/// Inputs for a regularly varying correlation `r = 1 - K^2(|t - s|)(1 + o(1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegVarParams {
    pub case: RegVarCase,
    pub nu: f64,
    pub mu: f64,
    pub a: f64,
    /// Limit of `L(u^{-1/2})`, required for `C2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_l: Option<f64>,
    /// Slowly varying correction evaluated at `u`, required for `C1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction_factor_at_u: Option<f64>,
    #[serde(default = "default_true")]
    pub t0_interior: bool,
}

pub fn chi_sup_asymptotic_regvar(
    w: &Weights,
    p: &RegVarParams,
    u: f64,
    provider: &ConstantsProvider,
) -> Result<AsymptoticValue> {
    check_level("u", u)?;
    let (nu, mu) = (p.nu, p.mu);
    let equal = (nu - mu).abs() <= crate::constants::CASE_TOL;
    let fits = match p.case {
        RegVarCase::C1 => mu > nu || equal,
        RegVarCase::C2 => equal,
        RegVarCase::C3 => mu < nu || equal,
    };
    ensure(fits, "case", || format!("{:?} does not apply to nu = {nu}, mu = {mu}", p.case))?;
    let m = mm_tilde(p.case, nu, mu, p.a, p.script_l, p.correction_factor_at_u, p.t0_interior, provider)?;
    chi_product("chi_sup_regvar", w, m, u, pos(1.0 / nu - 1.0 / mu))
}

/// Limit law of the standardized conditional first-passage time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    Exp1,
    /// Standard normal conditioned on being `<= x`.
    TruncatedNormal {
        #[serde(with = "ext_f64")]
        x: f64,
    },
}

/// `z = orientation * (tau - shift) / scale` has the limit law `kind`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    #[serde(flatten)]
    pub kind: LawKind,
    pub shift: f64,
    pub scale: f64,
    pub orientation: f64,
}

impl LimitLaw {
    pub fn standardize(&self, tau: f64) -> f64 {
        self.orientation * (tau - self.shift) / self.scale
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match self.kind {
            LawKind::Exp1 => {
                if z <= 0.0 {
                    0.0
                } else {
                    -(-z).exp_m1()
                }
            }
            LawKind::TruncatedNormal { x } => {
                if z >= x {
                    1.0
                } else {
                    norm_cdf(z) / norm_cdf(x)
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self.kind {
            LawKind::Exp1 => -(-p).ln_1p(),
            LawKind::TruncatedNormal { x } => norm_quantile(p * norm_cdf(x)),
        }
    }
}

/// Affine standardization and limit law of `tau_u` given `tau_u <= T_u`.
///
/// In the short-horizon scenario the scale `f(u)` uses the limiting `s0` of
/// the horizon (0 for a constant `T`).
pub fn fpt_limit(spec: &ChiTrendSpec, horizon: &HorizonSpec, dp: &DerivedParams, u: f64) -> Result<LimitLaw> {
    check_level("u", u)?;
    let h = spec.hurst();
    let t_u = horizon.t_u(spec, u)?;
    match classify_horizon(horizon, h, spec.beta, spec.c)? {
        Scenario::Short { s0 } => Ok(LimitLaw {
            kind: LawKind::Exp1,
            shift: t_u,
            scale: f_of(u, t_u, h, spec.beta, spec.c, s0)?,
            orientation: -1.0,
        }),
        Scenario::Long { x } => Ok(LimitLaw {
            kind: LawKind::TruncatedNormal { x },
            shift: dp.t0 * u.powf(1.0 / spec.beta),
            scale: b_window(h, spec.beta, dp.b, u)?,
            orientation: 1.0,
        }),
    }
}

#[cfg(test)]
mod tests;
