//! Exceedance probabilities of a test field for the Fernique-type bound.
//!
//! The field is `xi(t) = sum_i W_i(t_i)` on `[0,1]^n` with independent
//! standard Brownian motions, so `E(xi(t) - xi(s))^2 = sum_i |t_i - s_i|`
//! (exponents 1, any `Q >= 1`) and `xi(0) = 0`. Its sup splits into the sum
//! of the coordinate sups, each taken over a uniform grid.

use crate::error::{ensure, Result};
use crate::mc::{replicate, wilson_interval, Z95};
use crate::rng::{task, StreamKey};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldExceedance {
    pub x: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: u64,
}

/// Empirical `P(sup xi > x)` for each level in `xs`, all from the same fields.
pub fn additive_field_exceedance(
    dims: usize,
    xs: &[f64],
    grid_points: usize,
    reps: u64,
    seed: u64,
) -> Result<Vec<FieldExceedance>> {
    ensure(dims >= 1, "n", || "need at least one coordinate".into())?;
    ensure(grid_points >= 2, "grid_points", || format!("need at least 2, got {grid_points}"))?;
    ensure(reps >= 1, "reps", || "need at least one".into())?;
    let step = 1.0 / (grid_points - 1) as f64;
    let sd = step.sqrt();
    let sups = replicate(
        StreamKey::new(seed, task::FERNIQUE_FIELD),
        0..reps,
        || (),
        |_, rng, _| {
            (0..dims)
                .map(|_| {
                    let mut w = 0.0f64;
                    let mut best = 0.0f64;
                    for _ in 1..grid_points {
                        let z: f64 = StandardNormal.sample(rng);
                        w += sd * z;
                        best = best.max(w);
                    }
                    best
                })
                .sum::<f64>()
        },
    );
    Ok(xs
        .iter()
        .map(|&x| {
            let hits = sups.iter().filter(|&&s| s > x).count() as u64;
            let (ci_low, ci_high) = wilson_interval(hits, reps, Z95);
            FieldExceedance {
                x,
                p_hat: hits as f64 / reps as f64,
                ci_low,
                ci_high,
                reps,
            }
        })
        .collect())
}
