use super::*;
use crate::constants::McPolicy;
use crate::gaussian_paths::SelfSimilarModel;
use crate::model_params::derive;
use crate::special::gamma_fn;
use approx::{assert_abs_diff_eq, assert_relative_eq};

const INF: f64 = f64::INFINITY;

fn quick() -> ConstantsProvider {
    ConstantsProvider::new(McPolicy {
        pickands_s: 5.0,
        pickands_step: 0.02,
        piterbarg_ladder: vec![4.0, 8.0],
        piterbarg_step: 0.02,
        reps: 2000,
        seed: 11,
    })
}

fn brownian(b: Vec<f64>) -> ChiTrendSpec {
    ChiTrendSpec::new(b, 1.0, 2.0, SelfSimilarModel::fbm(0.5).unwrap()).unwrap()
}

fn sup(nu: f64, mu: f64, d: f64, a: f64) -> SupParams {
    SupParams {
        nu,
        mu,
        d,
        a,
        t0_interior: true,
    }
}

fn gauss_tail(u: f64) -> f64 {
    (-0.5 * u * u).exp() / ((2.0 * PI).sqrt() * u)
}

fn upsilon_direct(k: usize, u: f64) -> f64 {
    let k = k as f64;
    2f64.powf((2.0 - k) / 2.0) / gamma_fn(k / 2.0) * u.powf(k / 2.0 - 1.0) * (-u / 2.0).exp()
}

fn check_product(v: &AsymptoticValue) {
    let f = &v.factors;
    let prod = f.constant_part * f.weight_product * f.power_part * f.tail_part;
    assert_relative_eq!(v.value, prod, max_relative = 1e-12);
    assert!(f.constant_part > 0.0 && f.weight_product > 0.0 && f.power_part > 0.0 && f.tail_part > 0.0);
    assert_relative_eq!(v.ln_value, v.value.ln(), max_relative = 1e-12);
}

#[test]
fn weights_validation() {
    assert!(Weights::new(vec![1.0, 0.5, 1.0]).is_err());
    assert!(Weights::new(vec![0.9, 0.5]).is_err());
    assert!(Weights::new(vec![1.0, 0.0]).is_err());
    assert!(Weights::new(vec![]).is_err());
    let w = Weights::new(vec![1.0, 1.0, 0.5, 0.5]).unwrap();
    assert_eq!(w.k(), 2);
    assert_relative_eq!(w.product(), 1.0 / 0.75, max_relative = 1e-15);
    let back: Weights = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
    assert_eq!(back, w);
    assert!(serde_json::from_str::<Weights>("[0.5, 1.0]").is_err());
}

#[test]
fn gaussian_rows() {
    let p = quick();
    for &u in &[3.0, 5.0, 8.0] {
        let v = gaussian_sup_asymptotic(&sup(2.0, 1.0, 1.0, 1.0), u, &p).unwrap();
        assert_relative_eq!(v.value, gauss_tail(u), max_relative = 1e-13);
        assert_eq!(v.factors.power_exponent, 0.0);
        check_product(&v);
        let v2 = gaussian_sup_asymptotic(&sup(2.0, 2.0, 1.3, 1.3), u, &p).unwrap();
        assert_relative_eq!(v2.value, 2f64.sqrt() * gauss_tail(u), max_relative = 1e-13);
    }
    let v = gaussian_sup_asymptotic(&sup(1.0, 2.0, 1.0, 1.0), 5.0, &p).unwrap();
    let h1 = p.pickands(1.0).unwrap().value;
    // 2 Gamma(3/2) = sqrt(pi)
    assert_relative_eq!(v.value, PI.sqrt() * h1 * 5.0 * gauss_tail(5.0), max_relative = 1e-12);
    assert_eq!(v.factors.power_exponent, 1.0);
    assert!(v.rel_stderr() > 0.0);
    assert!(gaussian_sup_asymptotic(&sup(1.0, 2.0, 1.0, 1.0), 0.0, &p).is_err());
}

#[test]
fn chi_rows() {
    let p = quick();
    assert_relative_eq!(upsilon_direct(1, 10.0), 1.700e-3, max_relative = 1e-3);
    let w = Weights::new(vec![1.0, 0.5]).unwrap();
    let v = chi_sup_asymptotic(&w, &sup(2.0, 1.0, 1.0, 1.0), 10.0, &p).unwrap();
    assert_relative_eq!(v.value, 0.75f64.powf(-0.5) * upsilon_direct(1, 10.0), max_relative = 1e-12);
    assert_relative_eq!(v.value, 1.963e-3, max_relative = 1e-3);
    check_product(&v);
    // all unit weights: Upsilon_n with the bare constant
    let ones = Weights::new(vec![1.0; 3]).unwrap();
    let v = chi_sup_asymptotic(&ones, &sup(2.0, 2.0, 1.0, 1.0), 12.0, &p).unwrap();
    assert_eq!(v.factors.weight_product, 1.0);
    assert_relative_eq!(v.value, 2f64.sqrt() * upsilon_direct(3, 12.0), max_relative = 1e-12);
}

#[test]
fn adding_small_weight_scales_exactly() {
    let p = quick();
    let q = sup(1.0, 2.0, 0.7, 1.1);
    let base = chi_sup_asymptotic(&Weights::new(vec![1.0, 0.6]).unwrap(), &q, 20.0, &p).unwrap();
    let more = chi_sup_asymptotic(&Weights::new(vec![1.0, 0.6, 0.2]).unwrap(), &q, 20.0, &p).unwrap();
    assert_relative_eq!(more.value / base.value, (1.0f64 - 0.04).powf(-0.5), max_relative = 1e-14);
}

#[test]
fn window_rows() {
    let p = quick();
    let w = Weights::new(vec![1.0, 0.3]).unwrap();
    for &(nu, mu, d, a) in &[(1.0, 2.0, 1.0, 1.0), (0.6, 1.5, 0.8, 2.0)] {
        for &level in &[16.0, 49.0] {
            let full = chi_sup_window_asymptotic(&w, &sup(nu, mu, d, a), INF, INF, level, &p).unwrap();
            let fixed = chi_sup_asymptotic(&w, &sup(nu, mu, d, a), level, &p).unwrap();
            assert_relative_eq!(full.value, fixed.value, max_relative = 1e-9);
            check_product(&full);
        }
    }
    let v = chi_sup_window_asymptotic(&w, &sup(2.0, 1.0, 1.0, 1.0), 0.1, 0.2, 25.0, &p).unwrap();
    assert_eq!(v.factors.constant_part, 1.0);
    assert!(chi_sup_window_asymptotic(&w, &sup(1.0, 2.0, 1.0, 1.0), 1.0, -1.0, 25.0, &p).is_err());
    assert!(chi_sup_window_asymptotic(&w, &sup(1.0, 2.0, 1.0, 1.0), -2.0, 1.0, 25.0, &p).is_err());
}

#[test]
fn psi_infinity_brownian() {
    let p = quick();
    let spec = brownian(vec![1.0]);
    let dp = derive(&spec).unwrap();
    assert_relative_eq!(dp.a, 2.0, max_relative = 1e-12);
    assert_relative_eq!(dp.b, 2.0, max_relative = 1e-12);
    let v = psi_infinity_asymptotic(&spec, &dp, 25.0, &p).unwrap();
    let h1 = v.constants_used[0].value;
    assert_relative_eq!(v.factors.constant_part / h1, (2.0 * PI).sqrt(), max_relative = 1e-12);
    assert_abs_diff_eq!(v.factors.power_exponent, 0.25, epsilon = 1e-15);
    assert_relative_eq!(v.factors.tail_part, upsilon_direct(1, 10.0), max_relative = 1e-12);
    assert_relative_eq!(v.value / h1, 9.53e-3, max_relative = 2e-3);
    check_product(&v);
}

#[test]
fn psi_infinity_exponents_and_weights() {
    let p = quick();
    // alpha = 2: power exponent vanishes
    let spec = ChiTrendSpec::new(vec![1.0], 0.8, 3.0, SelfSimilarModel::fbm(0.7).unwrap()).unwrap();
    let mut dp = derive(&spec).unwrap();
    dp.alpha = 2.0;
    let v = psi_infinity_asymptotic(&spec, &dp, 30.0, &p).unwrap();
    assert_eq!(v.factors.power_exponent, 0.0);
    let spec = brownian(vec![1.0, 1.0, 0.5, 0.5]);
    let v = psi_infinity_asymptotic(&spec, &derive(&spec).unwrap(), 30.0, &p).unwrap();
    assert_relative_eq!(v.factors.weight_product, 1.0 / 0.75, max_relative = 1e-14);
    assert_relative_eq!(v.factors.tail_part, upsilon_direct(2, 2.0 * 30f64.sqrt()), max_relative = 1e-12);
}

#[test]
fn long_horizon_coherence() {
    let p = quick();
    for spec in [brownian(vec![1.0]), brownian(vec![1.0, 0.4])] {
        let dp = derive(&spec).unwrap();
        let full = psi_infinity_asymptotic(&spec, &dp, 25.0, &p).unwrap();
        for &x in &[-1.0, 0.0, 1.0, INF] {
            let v = psi_tu_asymptotic(&spec, &HorizonSpec::window(x), &dp, 25.0, &p).unwrap();
            assert_relative_eq!(v.value / full.value, norm_cdf(x), max_relative = 1e-15);
            check_product(&v);
        }
        let v = psi_tu_asymptotic(&spec, &HorizonSpec::Infinite, &dp, 25.0, &p).unwrap();
        assert_eq!(v.value, full.value);
        let v = psi_tu_asymptotic(&spec, &HorizonSpec::scale(1.0), &dp, 25.0, &p).unwrap();
        assert_relative_eq!(v.value, 0.5 * full.value, max_relative = 1e-15);
    }
}

#[test]
fn short_horizon_constant_t() {
    let p = quick();
    let spec = brownian(vec![1.0]);
    let dp = derive(&spec).unwrap();
    for &u in &[9.0, 25.0] {
        let v = psi_tu_asymptotic(&spec, &HorizonSpec::Finite { t: 1.0 }, &dp, u, &p).unwrap();
        // m(u) = u + 1, D = H = 1/2, d = Q t0^alpha / 2 = 1/2, one-sided Piterbarg P~_1^1 = 2
        assert_relative_eq!(v.factors.tail_part, upsilon_direct(1, u + 1.0), max_relative = 1e-12);
        assert_eq!(v.factors.power_exponent, 0.0);
        let c = &v.constants_used[0];
        assert!((c.value - 2.0).abs() < 4.0 * c.stderr + 0.1, "{} +- {}", c.value, c.stderr);
        // same numbers through the process W(t) = Y(t)/sqrt(1 - c_u/(1 + c_u)(1 - t^beta)) on [0, 1]
        let w_proc = SupParams {
            nu: 1.0,
            mu: 1.0,
            d: 0.5,
            a: 0.5,
            t0_interior: false,
        };
        let direct = chi_sup_asymptotic(&Weights::new(vec![1.0]).unwrap(), &w_proc, u + 1.0, &p).unwrap();
        assert_relative_eq!(v.value, direct.value, max_relative = 1e-12);
        check_product(&v);
    }
    // s0 > 0 changes D
    let v = psi_tu_asymptotic(&spec, &HorizonSpec::scale(0.5), &dp, 16.0, &p).unwrap();
    let lambda = v.constants_used[0].params.inputs[0].params.lambda.unwrap();
    assert_relative_eq!(lambda, d_of(0.5, 2.0, 1.0, 0.5).unwrap() / 0.5, max_relative = 1e-12);
    assert_relative_eq!(v.factors.tail_part, upsilon_direct(1, (16.0 + 4.0) / 2.0), max_relative = 1e-12);
}

#[test]
fn short_horizon_alpha_regimes() {
    let p = quick();
    let ls = |alpha| crate::model_params::LocalStationarity { alpha, q: 1.0 };
    // alpha > 1: constant 1, no power
    let spec = brownian(vec![1.0]).with_local_stationarity(ls(1.5));
    let v = psi_tu_asymptotic(&spec, &HorizonSpec::Finite { t: 1.0 }, &derive(&spec).unwrap(), 9.0, &p).unwrap();
    assert_eq!(v.factors.constant_part, 1.0);
    assert_eq!(v.factors.power_exponent, 0.0);
    // alpha < 1: end-point Pickands form, power (1/alpha - 1)
    let spec = brownian(vec![1.0]).with_local_stationarity(ls(0.5));
    let v = psi_tu_asymptotic(&spec, &HorizonSpec::Finite { t: 1.0 }, &derive(&spec).unwrap(), 9.0, &p).unwrap();
    assert_abs_diff_eq!(v.factors.power_exponent, 1.0, epsilon = 1e-15);
    let h = p.pickands(0.5).unwrap().value;
    assert_relative_eq!(v.factors.constant_part, 0.5f64.powi(2) * 2.0 * h, max_relative = 1e-12);
}

#[test]
fn nonidentical_rows() {
    let p = quick();
    let w = Weights::new(vec![1.0, 0.5]).unwrap();
    let q = sup(0.8, 2.0, 1.0, 1.0);
    assert!(chi_sup_asymptotic_nonidentical(&w, &q, 0.7, 1.0, 10.0, &p).is_err());
    assert!(chi_sup_asymptotic_nonidentical(&w, &q, 1.0, 0.7, 10.0, &p).is_err());
    // fBm components with H = 0.4, H1 = 0.6: gamma = 2H = nu, gamma1 = 2H1
    let v = chi_sup_asymptotic_nonidentical(&w, &q, 0.8, 1.2, 10.0, &p).unwrap();
    assert_eq!(v.value, chi_sup_asymptotic(&w, &q, 10.0, &p).unwrap().value);
}

#[test]
fn regvar_rows() {
    let p = quick();
    let w = Weights::new(vec![1.0]).unwrap();
    let rv = |case, nu, mu, a, l: Option<f64>, corr: Option<f64>| RegVarParams {
        case,
        nu,
        mu,
        a,
        script_l: l,
        correction_factor_at_u: corr,
        t0_interior: true,
    };
    let v = chi_sup_asymptotic_regvar(&w, &rv(RegVarCase::C3, 1.5, 1.0, 1.0, None, None), 10.0, &p).unwrap();
    assert_eq!(v.factors.constant_part, 1.0);
    let v = chi_sup_asymptotic_regvar(&w, &rv(RegVarCase::C2, 2.0, 2.0, 0.25, Some(2.0), None), 10.0, &p).unwrap();
    assert_eq!(v.factors.constant_part, 2f64.sqrt());
    let c1 = chi_sup_asymptotic_regvar(&w, &rv(RegVarCase::C1, 1.0, 2.0, 1.3, None, Some(1.0)), 10.0, &p).unwrap();
    let plain = chi_sup_asymptotic(&w, &sup(1.0, 2.0, 1.0, 1.3), 10.0, &p).unwrap();
    assert_relative_eq!(c1.value, plain.value, max_relative = 1e-12);
    assert!(chi_sup_asymptotic_regvar(&w, &rv(RegVarCase::C2, 1.0, 2.0, 1.0, Some(1.0), None), 10.0, &p).is_err());
    assert!(chi_sup_asymptotic_regvar(&w, &rv(RegVarCase::C1, 2.0, 1.0, 1.0, None, Some(1.0)), 10.0, &p).is_err());
    assert!(chi_sup_asymptotic_regvar(&w, &rv(RegVarCase::C3, 1.0, 2.0, 1.0, None, None), 10.0, &p).is_err());
}

#[test]
fn values_decrease_in_u() {
    let p = quick();
    let spec = brownian(vec![1.0, 0.5]);
    let dp = derive(&spec).unwrap();
    let w = Weights::of_spec(&spec);
    let ladder = [10.0, 20.0, 40.0, 80.0];
    let eval: Vec<Box<dyn Fn(f64) -> AsymptoticValue>> = vec![
        Box::new(|u| gaussian_sup_asymptotic(&sup(1.0, 2.0, 1.0, 1.0), u, &p).unwrap()),
        Box::new(|u| chi_sup_asymptotic(&w, &sup(1.0, 2.0, 1.0, 1.0), u, &p).unwrap()),
        Box::new(|u| chi_sup_window_asymptotic(&w, &sup(1.0, 2.0, 1.0, 1.0), 1.0, 1.0, u, &p).unwrap()),
        Box::new(|u| psi_infinity_asymptotic(&spec, &dp, u, &p).unwrap()),
        Box::new(|u| psi_tu_asymptotic(&spec, &HorizonSpec::Finite { t: 1.0 }, &dp, u, &p).unwrap()),
        Box::new(|u| psi_tu_asymptotic(&spec, &HorizonSpec::window(0.5), &dp, u, &p).unwrap()),
    ];
    for f in &eval {
        let lv: Vec<f64> = ladder.iter().map(|&u| f(u).ln_value).collect();
        assert!(lv.windows(2).all(|x| x[1] < x[0]), "{lv:?}");
    }
}

#[test]
fn fpt_limit_laws() {
    let spec = brownian(vec![1.0]);
    let dp = derive(&spec).unwrap();
    let u = 16.0;
    let law = fpt_limit(&spec, &HorizonSpec::Finite { t: 1.0 }, &dp, u).unwrap();
    assert_eq!(law.kind, LawKind::Exp1);
    assert_eq!(law.shift, 1.0);
    // constant T: s0 = 0, so the slope is 2H = 1
    assert_relative_eq!(law.scale, 2.0 / 17.0, max_relative = 1e-12);
    assert!(law.standardize(0.9) > 0.0);
    assert_relative_eq!(law.cdf(1.0), 1.0 - (-1.0f64).exp(), max_relative = 1e-15);

    let law = fpt_limit(&spec, &HorizonSpec::Infinite, &dp, u).unwrap();
    assert_eq!(law.kind, LawKind::TruncatedNormal { x: INF });
    assert_relative_eq!(law.shift, 4.0, max_relative = 1e-15);
    assert_relative_eq!(law.scale, 16f64.powf(0.25), max_relative = 1e-12);
    assert_eq!(law.cdf(0.3), norm_cdf(0.3));

    let law = fpt_limit(&spec, &HorizonSpec::window(0.0), &dp, u).unwrap();
    for &y in &[-2.0, -0.5, 0.0] {
        assert_relative_eq!(law.cdf(y), norm_cdf(y) / 0.5, max_relative = 1e-15);
    }
    assert_eq!(law.cdf(0.1), 1.0);
    for &q in &[0.01, 0.3, 0.9] {
        assert_relative_eq!(law.cdf(law.quantile(q)), q, max_relative = 1e-9);
    }
    let json = serde_json::to_string(&law).unwrap();
    assert!(json.contains("\"kind\":\"truncated_normal\""));
    assert_eq!(serde_json::from_str::<LimitLaw>(&json).unwrap(), law);
}
