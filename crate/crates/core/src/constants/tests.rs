use super::*;
use std::f64::consts::PI;

fn quick() -> ConstantsProvider {
    ConstantsProvider::new(McPolicy {
        pickands_s: 5.0,
        pickands_step: 0.02,
        piterbarg_ladder: vec![2.0, 4.0],
        piterbarg_step: 0.02,
        reps: 1000,
        seed: 7,
    })
}

#[test]
fn closed_forms_resolve() {
    let p = quick();
    let h2 = p.pickands(2.0).unwrap();
    assert_eq!((h2.value, h2.stderr, h2.method), (1.0 / PI.sqrt(), 0.0, Method::ClosedForm));
    let q = p.piterbarg_two_sided(2.0, 1.0).unwrap();
    assert_eq!(q.value, 2f64.sqrt());
    assert_eq!(p.piterbarg_two_sided(2.0, 3.0).unwrap().value, (4.0f64 / 3.0).sqrt());
    assert!(p.cached().is_empty());
}

#[test]
fn m_constant_rows() {
    let p = quick();
    let m = mm_constant(2.0, 1.0, 0.3, 2.0, true, &p).unwrap();
    assert_eq!((m.value, m.stderr, m.method), (1.0, 0.0, Method::ClosedForm));
    let m = mm_constant(2.0, 2.0, 1.5, 1.5, true, &p).unwrap();
    assert_eq!(m.value, 2f64.sqrt());
    let boundary = mm_constant(2.0, 2.0, 1.5, 1.5, false, &p).unwrap();
    assert_eq!(boundary.method, Method::MonteCarlo);
    // one-sided P~_2^1 = (1 + sqrt(2))/2 by direct integration of exp(N^2/4) over N > 0
    assert!((boundary.value - 0.5 * (1.0 + 2f64.sqrt())).abs() < 1e-3, "{}", boundary.value);
    let pb = &boundary.params.inputs[0].params;
    assert!(pb.stable.unwrap(), "{:?}", pb.ladder);

    let h1 = p.pickands(1.0).unwrap();
    let m = mm_constant(1.0, 2.0, 1.0, 1.0, true, &p).unwrap();
    assert!((m.value - 2.0 * crate::special::gamma_fn(1.5) * h1.value).abs() < 1e-12);
    assert!((m.stderr / h1.stderr - 2.0 * crate::special::gamma_fn(1.5)).abs() < 1e-12);
    let half = mm_constant(1.0, 2.0, 1.0, 1.0, false, &p).unwrap();
    assert!((m.value - 2.0 * half.value).abs() < 1e-12);
    assert!(mm_constant(1.0, 2.0, 0.0, 1.0, true, &p).is_err());
    assert!(mm_constant(1.0, 2.0, 1.0, -1.0, true, &p).is_err());
}

#[test]
fn m_hat_rows_and_identities() {
    let p = quick();
    let inf = f64::INFINITY;
    assert_eq!(mm_hat(1.5, 1.0, 1.0, 1.0, 0.3, 0.2, &p).unwrap().value, 1.0);
    for &(nu, mu, d, a) in &[(1.0, 2.0, 1.0, 1.0), (0.5, 1.0, 2.0, 0.7), (1.2, 1.6, 0.4, 3.0)] {
        let hat = mm_hat(nu, mu, d, a, inf, inf, &p).unwrap();
        let m = mm_constant(nu, mu, d, a, true, &p).unwrap();
        assert!((hat.value / m.value - 1.0).abs() < 1e-12);
    }
    // nu = mu: same resolver on both sides
    let hat = mm_hat(1.0, 1.0, 1.0, 2.0, inf, inf, &p).unwrap();
    let m = mm_constant(1.0, 1.0, 1.0, 2.0, true, &p).unwrap();
    assert_eq!(hat.value, m.value);
    let hat = mm_hat(2.0, 2.0, 1.0, 1.0, inf, inf, &p).unwrap();
    assert_eq!(hat.value, 2f64.sqrt());
    assert!(mm_hat(1.0, 2.0, 1.0, 1.0, -0.0, 0.0, &p).is_err());
    assert!(mm_hat(1.0, 2.0, 1.0, 1.0, -1.0, 0.5, &p).is_err());
    // a finite window is smaller than the full line
    let part = mm_hat(1.0, 2.0, 1.0, 1.0, 0.5, 1.0, &p).unwrap();
    assert!(part.value < mm_hat(1.0, 2.0, 1.0, 1.0, inf, inf, &p).unwrap().value);
    let w = mm_hat(1.0, 1.0, 2.0, 1.0, 0.5, 1.0, &p).unwrap();
    assert_eq!((w.params.inputs[0].params.s1, w.params.inputs[0].params.s2), (Some(1.0), Some(2.0)));
}

#[test]
fn m_tilde_rows() {
    let p = quick();
    assert_eq!(mm_tilde(RegVarCase::C3, 1.0, 2.0, 1.0, None, None, true, &p).unwrap().value, 1.0);
    let c2 = mm_tilde(RegVarCase::C2, 2.0, 2.0, 0.25, Some(2.0), None, true, &p).unwrap();
    assert_eq!(c2.value, 2f64.sqrt());
    assert!(mm_tilde(RegVarCase::C2, 2.0, 2.0, 1.0, Some(0.0), None, true, &p).is_err());
    assert!(mm_tilde(RegVarCase::C2, 2.0, 2.0, 1.0, None, None, true, &p).is_err());
    let c1 = mm_tilde(RegVarCase::C1, 1.0, 2.0, 1.5, None, Some(1.0), true, &p).unwrap();
    let m = mm_constant(1.0, 2.0, 1.0, 1.5, true, &p).unwrap();
    assert!((c1.value / m.value - 1.0).abs() < 1e-12);
    let c1b = mm_tilde(RegVarCase::C1, 1.0, 2.0, 1.5, None, Some(3.0), false, &p).unwrap();
    assert!((c1b.value / c1.value - 1.5).abs() < 1e-12);
}

#[test]
fn cache_round_trip() {
    let p = quick();
    let h = p.pickands(1.0).unwrap();
    let again = p.pickands(1.0).unwrap();
    assert_eq!(h, again);
    let dir = std::env::temp_dir().join(format!("extremes-cache-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("constants_cache.json");
    p.save(&path).unwrap();
    let q = ConstantsProvider::with_cache_file(p.policy.clone(), &path).unwrap();
    assert_eq!(q.cached(), p.cached());
    assert_eq!(q.pickands(1.0).unwrap(), h);
    let key = &q.cached()[0].0;
    for part in ["pickands", "nu=1.0", "S=5.0", "step=0.02", "reps=1000", "seed=7"] {
        assert!(key.contains(part), "{key}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn estimate_json_shape() {
    let e = quick().piterbarg_one_sided(1.0, 1.0).unwrap();
    let v: serde_json::Value = serde_json::to_value(&e).unwrap();
    for field in ["kind", "params", "value", "stderr", "method"] {
        assert!(v.get(field).is_some());
    }
    assert_eq!(v["method"], "monte_carlo");
    assert_eq!(v["params"]["s2"], "inf");
    let back: ConstantEstimate = serde_json::from_value(v).unwrap();
    assert_eq!(back, e);
}
