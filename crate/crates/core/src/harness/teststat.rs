//! Penalized supremum of a squared Brownian bridge,
//!
//! `sup_{t in (0,1)} U(t)^2 / (2t(1 - t)) - C(t) - upsilon D(t)`,
//! `C(t) = ln(1 - ln(1 - (2t - 1)^2))`, `D(t) = ln(1 + C(t)^2)`.
//!
//! The sup is taken over a uniform grid on `[eps_clip, 1 - eps_clip]`, where
//! the normalized bridge and the penalty are both finite.

use crate::error::{ensure, Result};
use crate::mc::replicate;
use crate::rng::{task, StreamKey};
use rand_distr::{Distribution, StandardNormal};

pub const DEFAULT_EPS_CLIP: f64 = 1e-3;

pub fn penalty_c(t: f64) -> f64 {
    let s = (2.0 * t - 1.0).powi(2);
    (1.0 - (-s).ln_1p()).ln()
}

pub fn penalty_d(t: f64) -> f64 {
    penalty_c(t).powi(2).ln_1p()
}

pub fn penalty(t: f64, upsilon: f64) -> f64 {
    penalty_c(t) + upsilon * penalty_d(t)
}

fn check(upsilon: f64, eps_clip: f64) -> Result<()> {
    ensure(upsilon > 1.0 && upsilon.is_finite(), "upsilon", || format!("must be finite and > 1, got {upsilon}"))?;
    ensure(eps_clip > 0.0 && eps_clip < 0.5, "eps_clip", || format!("must lie in (0, 1/2), got {eps_clip}"))
}

fn grid(grid_points: usize, eps_clip: f64) -> Result<Vec<f64>> {
    ensure(grid_points >= 2, "grid_points", || format!("need at least 2, got {grid_points}"))?;
    let h = (1.0 - 2.0 * eps_clip) / (grid_points - 1) as f64;
    Ok((0..grid_points).map(|i| eps_clip + i as f64 * h).collect())
}

/// Statistic for one bridge path given on `times` (all in `(0,1)`).
pub fn statistic_of_bridge(times: &[f64], bridge: &[f64], upsilon: f64) -> Result<f64> {
    ensure(times.len() == bridge.len() && !times.is_empty(), "bridge", || {
        format!("need matching non-empty times and values, got {} and {}", times.len(), bridge.len())
    })?;
    ensure(upsilon > 1.0, "upsilon", || format!("must be > 1, got {upsilon}"))?;
    Ok(times
        .iter()
        .zip(bridge)
        .map(|(&t, &x)| x * x / (2.0 * t * (1.0 - t)) - penalty(t, upsilon))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// One statistic per replication, in replication order. Replication `r` draws
/// from stream `r` of the test-statistic task, so results do not depend on the
/// worker count.
pub fn simulate_m2_statistic(upsilon: f64, grid_points: usize, reps: u64, seed: u64, eps_clip: f64) -> Result<Vec<f64>> {
    check(upsilon, eps_clip)?;
    ensure(reps >= 1, "reps", || "need at least one".into())?;
    let times = grid(grid_points, eps_clip)?;
    let key = StreamKey::new(seed, task::TEST_STATISTIC);
    let out = replicate(
        key,
        0..reps,
        || vec![0.0; times.len()],
        |w, rng, _| {
            // Brownian motion on the grid and at 1, then pinned
            let mut prev = 0.0;
            let mut acc = 0.0;
            for (slot, &t) in w.iter_mut().zip(&times) {
                let z: f64 = StandardNormal.sample(rng);
                acc += z * (t - prev).sqrt();
                prev = t;
                *slot = acc;
            }
            let z: f64 = StandardNormal.sample(rng);
            let w1 = acc + z * (1.0 - prev).sqrt();
            for (slot, &t) in w.iter_mut().zip(&times) {
                *slot -= t * w1;
            }
            statistic_of_bridge(&times, w, upsilon).expect("validated inputs")
        },
    );
    Ok(out)
}
