//! JSON configs of the subcommands and their evaluation.

use super::teststat::{simulate_m2_statistic, DEFAULT_EPS_CLIP};
use crate::asymptotics::{
    chi_sup_asymptotic, chi_sup_asymptotic_nonidentical, chi_sup_asymptotic_regvar, chi_sup_window_asymptotic,
    fpt_limit, gaussian_sup_asymptotic, psi_infinity_asymptotic, psi_tu_asymptotic, AsymptoticValue, LimitLaw,
    RegVarParams, SupParams, Weights,
};
use crate::chi_process::{estimate_psi, ChiTrendSpec, EstimateResult, HorizonSpec, McConfig};
use crate::constants::{
    c_star, chi_tail_exact, fernique_bound, g_mu, mm_constant, mm_hat, mm_tilde, upsilon_tail, ConstantEstimate,
    ConstantParams, ConstantsProvider, McPolicy, RegVarCase,
};
use crate::error::Result;
use crate::gaussian_paths::{PathBundle, SelfSimilarModel, TimeGrid};
use crate::model_params::{classify_horizon, derive, DerivedParams, Scenario};
use crate::serde_ext::ext_f64;
use serde::{Deserialize, Serialize};

fn infinite() -> HorizonSpec {
    HorizonSpec::Infinite
}

fn one() -> f64 {
    1.0
}

/// `paths`: `count` independent components of `model` on `[0, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsConfig {
    pub model: SelfSimilarModel,
    #[serde(default = "one")]
    pub end: f64,
    pub grid_points: usize,
    #[serde(default = "one_usize")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one_usize() -> usize {
    1
}

impl PathsConfig {
    pub fn run(&self) -> Result<PathBundle> {
        PathBundle::sample(&self.model, TimeGrid::from_zero(self.end, self.grid_points)?, self.count, self.seed)
    }
}

/// `params`: derived constants of a spec, plus the horizon scenario if given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub spec: ChiTrendSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<HorizonSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsReport {
    #[serde(flatten)]
    pub derived: DerivedParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
}

impl ParamsConfig {
    pub fn run(&self) -> Result<ParamsReport> {
        let scenario = match &self.horizon {
            Some(h) => Some(classify_horizon(h, self.spec.hurst(), self.spec.beta, self.spec.c)?),
            None => None,
        };
        Ok(ParamsReport {
            derived: derive(&self.spec)?,
            scenario,
        })
    }
}

/// `estimate-psi`: one Monte Carlo estimate per threshold, sharing paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub spec: ChiTrendSpec,
    #[serde(default = "infinite")]
    pub horizon: HorizonSpec,
    pub u: f64,
    pub mc: McConfig,
}

impl EstimateConfig {
    pub fn run(&self) -> Result<EstimateResult> {
        estimate_psi(&self.spec, &self.horizon, self.u, &self.mc)
    }
}

/// `teststat`: raw samples of the penalized bridge statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeststatConfig {
    pub upsilon: f64,
    pub grid_points: usize,
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_clip")]
    pub eps_clip: f64,
}

fn default_clip() -> f64 {
    DEFAULT_EPS_CLIP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeststatReport {
    pub config: TeststatConfig,
    pub samples: Vec<f64>,
}

impl TeststatConfig {
    pub fn run(&self) -> Result<TeststatReport> {
        Ok(TeststatReport {
            config: *self,
            samples: simulate_m2_statistic(self.upsilon, self.grid_points, self.reps, self.seed, self.eps_clip)?,
        })
    }
}

impl TeststatReport {
    pub fn to_csv(&self) -> String {
        let mut out = super::csv_header();
        out.push_str("statistic\n");
        for s in &self.samples {
            out.push_str(&format!("{s:.16e}\n"));
        }
        out
    }
}

/// `constants`: one special constant, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstantRequest {
    Pickands {
        nu: f64,
    },
    /// Two-sided by default; `one_sided` or a finite window on request.
    Piterbarg {
        nu: f64,
        lambda: f64,
        #[serde(default)]
        one_sided: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<(f64, f64)>,
    },
    GMu {
        mu: f64,
        #[serde(with = "ext_f64")]
        x: f64,
    },
    Upsilon {
        k: usize,
        u: f64,
    },
    ChiTailExact {
        k: usize,
        u: f64,
    },
    CStar {
        alphas: Vec<f64>,
    },
    FerniqueBound {
        alphas: Vec<f64>,
        q: f64,
        #[serde(default)]
        sigma2: f64,
        x: f64,
    },
    M {
        nu: f64,
        mu: f64,
        d: f64,
        a: f64,
        #[serde(default = "yes")]
        t0_interior: bool,
    },
    MHat {
        nu: f64,
        mu: f64,
        d: f64,
        a: f64,
        #[serde(with = "ext_f64")]
        x1: f64,
        #[serde(with = "ext_f64")]
        x2: f64,
    },
    MTilde {
        case: RegVarCase,
        nu: f64,
        mu: f64,
        a: f64,
        #[serde(default)]
        script_l: Option<f64>,
        #[serde(default)]
        correction_factor_at_u: Option<f64>,
        #[serde(default = "yes")]
        t0_interior: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantConfig {
    #[serde(flatten)]
    pub request: ConstantRequest,
    #[serde(default)]
    pub policy: McPolicy,
}

impl ConstantRequest {
    pub fn evaluate(&self, provider: &ConstantsProvider) -> Result<ConstantEstimate> {
        use ConstantRequest::*;
        let closed = |kind: &str, value: f64, params: ConstantParams| ConstantEstimate::closed_form(kind, value, params);
        Ok(match self.clone() {
            Pickands { nu } => provider.pickands(nu)?,
            Piterbarg {
                nu,
                lambda,
                one_sided,
                window,
            } => match (window, one_sided) {
                (Some((x1, x2)), _) => provider.piterbarg_interval(nu, lambda, x1, x2)?,
                (None, true) => provider.piterbarg_one_sided(nu, lambda)?,
                (None, false) => provider.piterbarg_two_sided(nu, lambda)?,
            },
            GMu { mu, x } => closed(
                "G_mu",
                g_mu(mu, x)?,
                ConstantParams {
                    mu: Some(mu),
                    s: Some(x),
                    ..Default::default()
                },
            ),
            Upsilon { k, u } => closed(
                "Upsilon",
                upsilon_tail(k, u)?,
                ConstantParams {
                    nu: Some(k as f64),
                    s: Some(u),
                    ..Default::default()
                },
            ),
            ChiTailExact { k, u } => {
                let mut e = closed(
                    "chi_tail_exact",
                    chi_tail_exact(k, u)?,
                    ConstantParams {
                        nu: Some(k as f64),
                        s: Some(u),
                        ..Default::default()
                    },
                );
                e.method = crate::constants::Method::Quadrature;
                e
            }
            CStar { alphas } => closed("c_star", c_star(alphas.len(), &alphas)?, ConstantParams::default()),
            FerniqueBound { alphas, q, sigma2, x } => {
                let (bound, _) = fernique_bound(alphas.len(), &alphas, q, sigma2, x)?;
                closed(
                    "fernique_bound",
                    bound,
                    ConstantParams {
                        d: Some(q),
                        a: Some(sigma2),
                        s: Some(x),
                        ..Default::default()
                    },
                )
            }
            M {
                nu,
                mu,
                d,
                a,
                t0_interior,
            } => mm_constant(nu, mu, d, a, t0_interior, provider)?,
            MHat { nu, mu, d, a, x1, x2 } => mm_hat(nu, mu, d, a, x1, x2, provider)?,
            MTilde {
                case,
                nu,
                mu,
                a,
                script_l,
                correction_factor_at_u,
                t0_interior,
            } => mm_tilde(case, nu, mu, a, script_l, correction_factor_at_u, t0_interior, provider)?,
        })
    }
}

/// `asymptotic`: one evaluator, tagged by `evaluator`. The window form takes
/// the chi-square level directly and uses `u = sqrt(level)` internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "evaluator", rename_all = "snake_case")]
pub enum AsymptoticRequest {
    GaussianSup {
        params: SupParams,
        u: f64,
    },
    ChiSup {
        b: Weights,
        params: SupParams,
        u: f64,
    },
    ChiSupWindow {
        b: Weights,
        params: SupParams,
        #[serde(with = "ext_f64")]
        x1: f64,
        #[serde(with = "ext_f64")]
        x2: f64,
        level: f64,
    },
    ChiSupNonidentical {
        b: Weights,
        params: SupParams,
        gamma: f64,
        gamma1: f64,
        u: f64,
    },
    ChiSupRegvar {
        b: Weights,
        params: RegVarParams,
        u: f64,
    },
    PsiInfinity {
        spec: ChiTrendSpec,
        u: f64,
    },
    PsiTu {
        spec: ChiTrendSpec,
        horizon: HorizonSpec,
        u: f64,
    },
    FptLimit {
        spec: ChiTrendSpec,
        horizon: HorizonSpec,
        u: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConfig {
    #[serde(flatten)]
    pub request: AsymptoticRequest,
    #[serde(default)]
    pub policy: McPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AsymptoticOutput {
    Value(AsymptoticValue),
    Law(LimitLaw),
}

impl AsymptoticRequest {
    pub fn evaluate(&self, provider: &ConstantsProvider) -> Result<AsymptoticOutput> {
        use AsymptoticRequest::*;
        let v = match self {
            GaussianSup { params, u } => gaussian_sup_asymptotic(params, *u, provider)?,
            ChiSup { b, params, u } => chi_sup_asymptotic(b, params, *u, provider)?,
            ChiSupWindow {
                b,
                params,
                x1,
                x2,
                level,
            } => chi_sup_window_asymptotic(b, params, *x1, *x2, *level, provider)?,
            ChiSupNonidentical {
                b,
                params,
                gamma,
                gamma1,
                u,
            } => chi_sup_asymptotic_nonidentical(b, params, *gamma, *gamma1, *u, provider)?,
            ChiSupRegvar { b, params, u } => chi_sup_asymptotic_regvar(b, params, *u, provider)?,
            PsiInfinity { spec, u } => psi_infinity_asymptotic(spec, &derive(spec)?, *u, provider)?,
            PsiTu { spec, horizon, u } => psi_tu_asymptotic(spec, horizon, &derive(spec)?, *u, provider)?,
            FptLimit { spec, horizon, u } => {
                return Ok(AsymptoticOutput::Law(fpt_limit(spec, horizon, &derive(spec)?, *u)?));
            }
        };
        Ok(AsymptoticOutput::Value(v))
    }
}
