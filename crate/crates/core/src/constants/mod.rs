//! Special constants: Pickands and Piterbarg constants, `G_mu`, the `Upsilon`
//! tail, the exact chi-square tail, the case constants `M`, `M^`, `M~` and the
//! Fernique-type bound.
//!
//! Closed forms are used for the `nu = 2` family (`H_2 = 1/sqrt(pi)`,
//! two-sided `P_2^lambda = sqrt(1 + 1/lambda)`); everything else is a cached
//! Monte Carlo estimate whose `(S, step, reps, seed)` travel with the value.

mod closed;
mod montecarlo;
mod provider;

pub use closed::{c_star, chi_tail_exact, fernique_bound, g_mu, ln_upsilon, upsilon_tail, G_MU_TOL};
pub use montecarlo::{
    pickands_estimate, pickands_estimate_with, pickands_ladder, pickands_ladder_with, piterbarg_truncated,
    piterbarg_windows, PickandsEstimator, MIN_CONSTANT_REPS,
};
pub use provider::{ConstantsProvider, McPolicy, STABLE_REL_FLOOR};

use crate::error::{ensure, Result};
use crate::serde_ext::opt_ext_f64;
use crate::special::gamma_fn;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    MonteCarlo,
    Quadrature,
}

/// Inputs that produced a constant. Only the relevant fields are set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstantParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_ext_f64")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_ext_f64")]
    pub s1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_ext_f64")]
    pub s2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<PickandsEstimator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<bool>,
    /// Ladder values `(S, value, stderr)` behind a limiting constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<(f64, f64, f64)>>,
    /// Whether the last two ladder members agree within 3 combined stderr
    /// (or `STABLE_REL_FLOOR` relative).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable: Option<bool>,
    /// Constants this one was built from.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<ConstantEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub kind: String,
    pub params: ConstantParams,
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
}

impl ConstantEstimate {
    pub fn closed_form(kind: &str, value: f64, params: ConstantParams) -> Self {
        Self {
            kind: kind.into(),
            params,
            value,
            stderr: 0.0,
            method: Method::ClosedForm,
        }
    }

    /// Same estimate scaled by a deterministic factor.
    fn scaled(&self, kind: &str, factor: f64, params: ConstantParams) -> Self {
        let mut params = params;
        params.inputs.push(self.clone());
        Self {
            kind: kind.into(),
            params,
            value: self.value * factor,
            stderr: self.stderr * factor,
            method: self.method,
        }
    }
}

/// `nu` and `mu` within this distance are treated as equal.
pub const CASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Case {
    Less,
    Equal,
    Greater,
}

fn case_of(nu: f64, mu: f64) -> Case {
    if (nu - mu).abs() <= CASE_TOL {
        Case::Equal
    } else if nu < mu {
        Case::Less
    } else {
        Case::Greater
    }
}

fn check_exponents(nu: f64, mu: f64) -> Result<()> {
    ensure(nu > 0.0 && nu <= 2.0, "nu", || format!("must lie in (0,2], got {nu}"))?;
    ensure(mu > 0.0 && mu.is_finite(), "mu", || format!("must be finite and > 0, got {mu}"))
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    ensure(x > 0.0 && x.is_finite(), name, || format!("must be finite and > 0, got {x}"))
}

fn one(kind: &str, params: ConstantParams) -> ConstantEstimate {
    ConstantEstimate::closed_form(kind, 1.0, params)
}

/// The constant `M_{nu,mu,d,a}`: variance exponent `mu` with coefficient `a`,
/// correlation exponent `nu` with coefficient `d`, maximum at an interior
/// point or at an end point of the interval.
pub fn mm_constant(
    nu: f64,
    mu: f64,
    d: f64,
    a: f64,
    t0_interior: bool,
    provider: &ConstantsProvider,
) -> Result<ConstantEstimate> {
    check_exponents(nu, mu)?;
    check_positive("d", d)?;
    check_positive("a", a)?;
    let params = ConstantParams {
        nu: Some(nu),
        mu: Some(mu),
        d: Some(d),
        a: Some(a),
        interior: Some(t0_interior),
        ..Default::default()
    };
    match case_of(nu, mu) {
        Case::Greater => Ok(one("M", params)),
        Case::Equal => {
            let p = if t0_interior {
                provider.piterbarg_two_sided(nu, a / d)?
            } else {
                provider.piterbarg_one_sided(nu, a / d)?
            };
            Ok(p.scaled("M", 1.0, params))
        }
        Case::Less => {
            let h = provider.pickands(nu)?;
            let indicator = if t0_interior { 2.0 } else { 1.0 };
            let factor = d.powf(1.0 / nu) * a.powf(-1.0 / mu) * gamma_fn(1.0 / mu + 1.0) * indicator;
            Ok(h.scaled("M", factor, params))
        }
    }
}

/// The window constant `M^_{nu,mu,d,a}(x1, x2)` for the interval
/// `[t0 - x1 ..., t0 + x2 ...]`; requires `-x1 < x2`.
pub fn mm_hat(
    nu: f64,
    mu: f64,
    d: f64,
    a: f64,
    x1: f64,
    x2: f64,
    provider: &ConstantsProvider,
) -> Result<ConstantEstimate> {
    check_exponents(nu, mu)?;
    check_positive("d", d)?;
    check_positive("a", a)?;
    ensure(!x1.is_nan() && !x2.is_nan(), "x1/x2", || "must not be NaN".into())?;
    ensure(-x1 < x2, "x1/x2", || format!("need -x1 < x2, got x1 = {x1}, x2 = {x2}"))?;
    let params = ConstantParams {
        nu: Some(nu),
        mu: Some(mu),
        d: Some(d),
        a: Some(a),
        s1: Some(x1),
        s2: Some(x2),
        ..Default::default()
    };
    match case_of(nu, mu) {
        Case::Greater => Ok(one("M_hat", params)),
        Case::Equal => {
            let scale = d.powf(1.0 / nu);
            let p = provider.piterbarg_interval(nu, a / d, scale * x1, scale * x2)?;
            Ok(p.scaled("M_hat", 1.0, params))
        }
        Case::Less => {
            let h = provider.pickands(nu)?;
            let am = a.powf(1.0 / mu);
            let g = g_mu(mu, am * x2)? - g_mu(mu, -am * x1)?;
            let factor = d.powf(1.0 / nu) * a.powf(-1.0 / mu) * g;
            Ok(h.scaled("M_hat", factor, params))
        }
    }
}

/// Cases of the regularly varying variance/correlation setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegVarCase {
    C1,
    C2,
    C3,
}

/// `M~` for the regularly varying setting. `C1` multiplies the `nu < mu` form
/// (with `d = 1`) by the slowly varying correction the caller evaluated at `u`;
/// `C2` is the Piterbarg constant `P_nu^{a L^nu}`; `C3` is 1.
pub fn mm_tilde(
    case: RegVarCase,
    nu: f64,
    mu: f64,
    a: f64,
    script_l: Option<f64>,
    correction_at_u: Option<f64>,
    t0_interior: bool,
    provider: &ConstantsProvider,
) -> Result<ConstantEstimate> {
    check_exponents(nu, mu)?;
    check_positive("a", a)?;
    let params = ConstantParams {
        nu: Some(nu),
        mu: Some(mu),
        a: Some(a),
        interior: Some(t0_interior),
        ..Default::default()
    };
    match case {
        RegVarCase::C3 => Ok(one("M_tilde", params)),
        RegVarCase::C2 => {
            let l = script_l.unwrap_or(f64::NAN);
            ensure(l > 0.0 && l.is_finite(), "script_L", || format!("C2 needs script_L > 0, got {l}"))?;
            let lambda = a * l.powf(nu);
            let p = if t0_interior {
                provider.piterbarg_two_sided(nu, lambda)?
            } else {
                provider.piterbarg_one_sided(nu, lambda)?
            };
            Ok(p.scaled("M_tilde", 1.0, params))
        }
        RegVarCase::C1 => {
            let corr = correction_at_u.unwrap_or(f64::NAN);
            ensure(corr > 0.0 && corr.is_finite(), "correction_factor_at_u", || {
                format!("C1 needs a positive correction factor, got {corr}")
            })?;
            let h = provider.pickands(nu)?;
            let indicator = if t0_interior { 2.0 } else { 1.0 };
            let factor = a.powf(-1.0 / mu) * gamma_fn(1.0 / mu + 1.0) * indicator * corr;
            Ok(h.scaled("M_tilde", factor, params))
        }
    }
}

#[cfg(test)]
mod tests;
