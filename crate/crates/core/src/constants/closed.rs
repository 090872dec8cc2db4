//! Constants with closed forms or deterministic quadrature.

use crate::error::{ensure, Result};
use crate::special::{gamma_fn, gamma_q, ln_gamma};
use quadrature::double_exponential;
use std::f64::consts::LN_2;

/// Absolute tolerance of the `G_mu` quadrature.
pub const G_MU_TOL: f64 = 1e-10;

/// `G_mu(x) = int_{-inf}^x exp(-|t|^mu) dt`.
///
/// Evaluated as `Gamma(1/mu + 1) +/- int_0^{|x|} exp(-t^mu) dt`; for `mu < 1`
/// the half-line integral is taken in `s = t^mu`, which removes the infinite
/// slope of the integrand at 0.
pub fn g_mu(mu: f64, x: f64) -> Result<f64> {
    ensure(mu > 0.0 && mu.is_finite(), "mu", || format!("must be finite and > 0, got {mu}"))?;
    ensure(!x.is_nan(), "x", || "must not be NaN".into())?;
    let half = gamma_fn(1.0 / mu + 1.0);
    if x == f64::INFINITY {
        return Ok(2.0 * half);
    }
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let part = half_line(mu, x.abs());
    Ok(if x >= 0.0 { half + part } else { half - part })
}

/// `int_0^y exp(-t^mu) dt`, truncated where the integrand is below e^-60.
fn half_line(mu: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let s_end = y.powf(mu).min(60.0);
    if mu < 1.0 {
        let p = 1.0 / mu - 1.0;
        double_exponential::integrate(|s: f64| s.powf(p) * (-s).exp() / mu, 0.0, s_end, G_MU_TOL).integral
    } else {
        let t_end = s_end.powf(1.0 / mu);
        double_exponential::integrate(|t: f64| (-t.powf(mu)).exp(), 0.0, t_end, G_MU_TOL).integral
    }
}

/// `ln Upsilon_k(u)`.
pub fn ln_upsilon(k: usize, u: f64) -> Result<f64> {
    ensure(k >= 1, "k", || format!("must be >= 1, got {k}"))?;
    ensure(u > 0.0, "u", || format!("must be > 0, got {u}"))?;
    let h = k as f64 / 2.0;
    Ok((1.0 - h) * LN_2 - ln_gamma(h) + (h - 1.0) * u.ln() - u / 2.0)
}

/// `Upsilon_k(u) = 2^{(2-k)/2} / Gamma(k/2) u^{k/2-1} e^{-u/2}`, the leading
/// term of the chi-square tail (not the exact tail; see [`chi_tail_exact`]).
pub fn upsilon_tail(k: usize, u: f64) -> Result<f64> {
    if k == 2 {
        ensure(u > 0.0, "u", || format!("must be > 0, got {u}"))?;
        return Ok((-u / 2.0).exp());
    }
    Ok(ln_upsilon(k, u)?.exp())
}

/// `P(chi^2_k > u)` via the regularized upper incomplete gamma function.
pub fn chi_tail_exact(k: usize, u: f64) -> Result<f64> {
    ensure(k >= 1, "k", || format!("must be >= 1, got {k}"))?;
    ensure(u >= 0.0, "u", || format!("must be >= 0, got {u}"))?;
    Ok(gamma_q(k as f64 / 2.0, u / 2.0))
}

/// Series cut-off for `c*`: stop once a term drops below this.
pub const C_STAR_TERM_TOL: f64 = 1e-15;
/// Hard cap on the number of `c*` series terms.
pub const C_STAR_MAX_TERMS: usize = 10_000;

/// `c* = (2n sum_{p>=0} ((p+1) 2^{-(p+1) min alpha + 1})^{1/2})^{-2}`.
pub fn c_star(n: usize, alphas: &[f64]) -> Result<f64> {
    ensure(n >= 1, "n", || format!("must be >= 1, got {n}"))?;
    ensure(alphas.len() == n, "alphas", || format!("need {n} exponents, got {}", alphas.len()))?;
    for &a in alphas {
        ensure(a > 0.0, "alphas", || format!("exponents must be > 0, got {a}"))?;
    }
    let amin = alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for p in 0..C_STAR_MAX_TERMS {
        let q = (p + 1) as f64;
        let term = (q * 2f64.powf(1.0 - q * amin)).sqrt();
        sum += term;
        if term < C_STAR_TERM_TOL {
            break;
        }
    }
    Ok((2.0 * n as f64 * sum).powi(-2))
}

/// Fernique-type upper bound on `P(sup_{[0,1]^n} xi > x)` for a centered field
/// with `E(xi(t) - xi(s))^2 <= Q sum_i |t_i - s_i|^{alpha_i}` and
/// `Var xi(0) = sigma2`. Returns `(bound, c*)`.
pub fn fernique_bound(n: usize, alphas: &[f64], q: f64, sigma2: f64, x: f64) -> Result<(f64, f64)> {
    let cs = c_star(n, alphas)?;
    ensure(q > 0.0, "Q", || format!("must be > 0, got {q}"))?;
    ensure(sigma2 >= 0.0, "sigma2", || format!("must be >= 0, got {sigma2}"))?;
    ensure(x > 0.0, "x", || format!("must be > 0, got {x}"))?;
    let mut bound = 2f64.powi(n as i32 + 1) * (-cs * x * x / q).exp();
    if sigma2 > 0.0 {
        bound += 0.5 * (-x * x / (8.0 * sigma2)).exp();
    }
    Ok((bound, cs))
}
