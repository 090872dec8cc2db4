use super::dense::DenseSampler;
use super::{ModelKind, SelfSimilarModel, TimeGrid};
use crate::error::{ensure, Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Relative tolerance below which negative embedding eigenvalues count as round-off.
const EIGEN_TOL: f64 = 1e-10;

/// fBm on `0, h, 2h, ..., (N-1)h` by circulant embedding of the increment
/// covariance (Davies-Harte / Wood-Chan). One FFT yields two independent
/// paths (real and imaginary parts).
#[derive(Clone)]
pub struct FbmSampler {
    num_points: usize,
    inner: Inner,
}

#[derive(Clone)]
enum Inner {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Dense(Arc<DenseSampler>),
}

pub struct FbmScratch {
    buf: Vec<Complex<f64>>,
    fft_scratch: Vec<Complex<f64>>,
}

impl FbmSampler {
    pub fn new(hurst: f64, num_points: usize, step: f64, allow_fallback: bool) -> Result<Self> {
        ensure(hurst > 0.0 && hurst < 1.0, "hurst", || format!("must lie in (0,1), got {hurst}"))?;
        ensure(num_points >= 2, "num_points", || format!("need at least 2, got {num_points}"))?;
        ensure(step > 0.0, "step", || format!("must be > 0, got {step}"))?;
        let n = num_points - 1;
        let m = 2 * n;
        let two_h = 2.0 * hurst;
        let scale = step.powf(two_h);
        let gamma = |k: usize| {
            let k = k as f64;
            0.5 * scale * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
        };
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| Complex::new(gamma(if j <= n { j } else { m - j }), 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -EIGEN_TOL * max {
            if !allow_fallback {
                return Err(Error::EmbeddingFailed { min_eigenvalue: min });
            }
            let model = SelfSimilarModel {
                kind: ModelKind::Fbm,
                hurst,
                kernel: None,
            };
            let grid = TimeGrid::from_zero(step * n as f64, num_points)?;
            return Ok(Self {
                num_points,
                inner: Inner::Dense(super::dense_sampler(&model, grid)?),
            });
        }
        let sqrt_eig = row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
        Ok(Self {
            num_points,
            inner: Inner::Circulant { sqrt_eig, fft },
        })
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn is_circulant(&self) -> bool {
        matches!(self.inner, Inner::Circulant { .. })
    }

    pub fn scratch(&self) -> FbmScratch {
        match &self.inner {
            Inner::Circulant { sqrt_eig, fft } => FbmScratch {
                buf: vec![Complex::new(0.0, 0.0); sqrt_eig.len()],
                fft_scratch: vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            },
            Inner::Dense(_) => FbmScratch {
                buf: Vec::new(),
                fft_scratch: Vec::new(),
            },
        }
    }

    /// Fills `first` (and `second`, if given) with independent fBm paths
    /// starting at `Y(0) = 0`.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        scratch: &mut FbmScratch,
        first: &mut [f64],
        second: Option<&mut [f64]>,
    ) {
        assert_eq!(first.len(), self.num_points);
        match &self.inner {
            Inner::Circulant { sqrt_eig, fft } => {
                for (b, &s) in scratch.buf.iter_mut().zip(sqrt_eig) {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *b = Complex::new(s * re, s * im);
                }
                fft.process_with_scratch(&mut scratch.buf, &mut scratch.fft_scratch);
                cumulate(first, scratch.buf.iter().map(|c| c.re));
                if let Some(second) = second {
                    assert_eq!(second.len(), self.num_points);
                    cumulate(second, scratch.buf.iter().map(|c| c.im));
                }
            }
            Inner::Dense(dense) => {
                dense.sample_into(rng, first);
                if let Some(second) = second {
                    dense.sample_into(rng, second);
                }
            }
        }
    }
}

fn cumulate(out: &mut [f64], increments: impl Iterator<Item = f64>) {
    out[0] = 0.0;
    let mut acc = 0.0;
    for (o, d) in out[1..].iter_mut().zip(increments) {
        acc += d;
        *o = acc;
    }
}
