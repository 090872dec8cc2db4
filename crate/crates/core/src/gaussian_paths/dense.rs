use super::{ModelKind, SelfSimilarModel, TimeGrid};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Diagonal jitter, relative to the largest variance, tried when the plain
/// Cholesky factorization fails.
pub const PSD_JITTER: f64 = 1e-10;

/// Lower Cholesky factor of the covariance on the grid points with nonzero
/// variance; zero-variance points (e.g. `t = 0`) are emitted as exact zeros.
#[derive(Debug)]
pub struct DenseSampler {
    num_points: usize,
    active: Vec<usize>,
    lower: DMatrix<f64>,
    pub jittered: bool,
}

impl DenseSampler {
    pub fn new(model: &SelfSimilarModel, grid: TimeGrid) -> Result<Self> {
        let times = grid.times();
        let mut active = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            if model.covariance(t, t)? > 0.0 {
                active.push(i);
            }
        }
        let k = active.len();
        let mut cov = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let c = model.covariance(times[active[a]], times[active[b]])?;
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
        }
        let (lower, jittered) = match cov.clone().cholesky() {
            Some(ch) => (ch.l(), false),
            None => {
                let max_diag = (0..k).map(|i| cov[(i, i)]).fold(0.0, f64::max);
                let jitter = PSD_JITTER * max_diag;
                for i in 0..k {
                    cov[(i, i)] += jitter;
                }
                let ch = cov.cholesky().ok_or(Error::NotPositiveSemidefinite { jitter })?;
                (ch.l(), true)
            }
        };
        Ok(Self {
            num_points: grid.num_points,
            active,
            lower,
            jittered,
        })
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.num_points);
        let k = self.active.len();
        let z = DVector::<f64>::from_fn(k, |_, _| rng.sample(StandardNormal));
        let y = &self.lower * z;
        out.fill(0.0);
        for (a, &i) in self.active.iter().enumerate() {
            out[i] = y[a];
        }
    }
}

#[derive(Hash, PartialEq, Eq)]
struct CacheKey {
    kind: &'static str,
    hurst: u64,
    extra: u64,
    kernel: usize,
    grid: [u64; 3],
}

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<DenseSampler>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<DenseSampler>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Factorization for `(model, grid)`, built once and shared read-only.
pub fn dense_sampler(model: &SelfSimilarModel, grid: TimeGrid) -> Result<Arc<DenseSampler>> {
    model.validate()?;
    let key = CacheKey {
        kind: model.kind.name(),
        hurst: model.hurst.to_bits(),
        extra: match model.kind {
            ModelKind::BiFbm { k } => k.to_bits(),
            _ => 0,
        },
        kernel: model
            .kernel
            .as_ref()
            .map(|k| Arc::as_ptr(k) as *const () as usize)
            .unwrap_or(0),
        grid: [
            grid.t0_time.to_bits(),
            grid.t1_time.to_bits(),
            grid.num_points as u64,
        ],
    };
    if let Some(s) = cache().lock().expect("dense cache poisoned").get(&key) {
        return Ok(Arc::clone(s));
    }
    let sampler = Arc::new(DenseSampler::new(model, grid)?);
    cache()
        .lock()
        .expect("dense cache poisoned")
        .entry(key)
        .or_insert_with(|| Arc::clone(&sampler));
    Ok(sampler)
}
