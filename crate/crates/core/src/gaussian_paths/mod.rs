//! Exact sampling of centered self-similar Gaussian processes on uniform grids.
//!
//! fBm is generated by circulant embedding of its increments; every other
//! kernel (and fBm whenever the embedding is not nonnegative) goes through a
//! cached dense Cholesky factor.

mod circulant;
mod dense;

pub use circulant::{FbmSampler, FbmScratch};
pub use dense::{dense_sampler, DenseSampler, PSD_JITTER};

use crate::error::{ensure, invalid, Error, Result};
use crate::rng::{task, StreamKey};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Covariance kernel for [`ModelKind::CustomCovariance`].
pub type Kernel = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Fbm,
    SubFbm,
    /// Bifractional Brownian motion `B^{h,K}`; the self-similarity index is `h*K`.
    BiFbm { k: f64 },
    BrownianBridge,
    CustomCovariance,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Fbm => "fbm",
            ModelKind::SubFbm => "sub_fbm",
            ModelKind::BiFbm { .. } => "bi_fbm",
            ModelKind::BrownianBridge => "brownian_bridge",
            ModelKind::CustomCovariance => "custom_covariance",
        }
    }
}

/// A centered Gaussian process with `Var Y(t) = t^{2H}` (bridge excepted).
#[derive(Clone, Serialize, Deserialize)]
pub struct SelfSimilarModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    /// Self-similarity index.
    pub hurst: f64,
    #[serde(skip)]
    kernel: Option<Kernel>,
}

impl fmt::Debug for SelfSimilarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelfSimilarModel")
            .field("kind", &self.kind)
            .field("hurst", &self.hurst)
            .field("kernel", &self.kernel.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl PartialEq for SelfSimilarModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.hurst == other.hurst
            && match (&self.kernel, &other.kernel) {
                (Some(a), Some(b)) => Arc::ptr_eq(a, b),
                (None, None) => true,
                _ => false,
            }
    }
}

impl SelfSimilarModel {
    pub fn fbm(hurst: f64) -> Result<Self> {
        Self::build(ModelKind::Fbm, hurst, None)
    }

    pub fn sub_fbm(hurst: f64) -> Result<Self> {
        Self::build(ModelKind::SubFbm, hurst, None)
    }

    /// Bifractional BM with self-similarity index `hurst` and parameter `k`;
    /// the underlying Hurst exponent is `hurst / k`.
    pub fn bi_fbm(hurst: f64, k: f64) -> Result<Self> {
        Self::build(ModelKind::BiFbm { k }, hurst, None)
    }

    pub fn brownian_bridge() -> Self {
        Self {
            kind: ModelKind::BrownianBridge,
            hurst: 0.5,
            kernel: None,
        }
    }

    /// User kernel, assumed already normalized to `cov(t,t) = t^{2H}`.
    pub fn custom(hurst: f64, kernel: Kernel) -> Result<Self> {
        Self::build(ModelKind::CustomCovariance, hurst, Some(kernel))
    }

    fn build(kind: ModelKind, hurst: f64, kernel: Option<Kernel>) -> Result<Self> {
        let model = Self { kind, hurst, kernel };
        model.validate()?;
        Ok(model)
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ModelKind::BrownianBridge {
            return Ok(());
        }
        ensure(self.hurst > 0.0 && self.hurst < 1.0, "hurst", || {
            format!("must lie in (0,1), got {}", self.hurst)
        })?;
        if let ModelKind::BiFbm { k } = self.kind {
            ensure(k > 0.0 && k <= 1.0, "k", || format!("bi-fBm K must lie in (0,1], got {k}"))?;
            ensure(self.hurst / k < 1.0, "hurst", || {
                format!("bi-fBm needs hurst/K < 1, got {}", self.hurst / k)
            })?;
        }
        Ok(())
    }

    pub fn is_self_similar(&self) -> bool {
        self.kind != ModelKind::BrownianBridge
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    /// Constant dividing the raw kernel so that `Var Y(t) = t^{2H}`.
    pub fn normalization(&self) -> f64 {
        match self.kind {
            ModelKind::SubFbm => 2.0 - 2f64.powf(2.0 * self.hurst - 1.0),
            ModelKind::BiFbm { k } => 2f64.powf(k),
            _ => 1.0,
        }
    }

    /// `Cov(Y(s), Y(t))`.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        ensure(s >= 0.0 && t >= 0.0, "time", || format!("times must be >= 0, got ({s}, {t})"))?;
        let two_h = 2.0 * self.hurst;
        let raw = match self.kind {
            ModelKind::Fbm => 0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h)),
            ModelKind::SubFbm => {
                s.powf(two_h) + t.powf(two_h)
                    - 0.5 * ((s + t).powf(two_h) + (t - s).abs().powf(two_h))
            }
            ModelKind::BiFbm { k } => {
                let h = self.hurst / k;
                (s.powf(2.0 * h) + t.powf(2.0 * h)).powf(k) - (t - s).abs().powf(2.0 * h * k)
            }
            ModelKind::BrownianBridge => {
                for x in [s, t] {
                    if x > 1.0 {
                        return Err(Error::OutsideDomain {
                            kind: "brownian_bridge",
                            time: x,
                        });
                    }
                }
                s.min(t) - s * t
            }
            ModelKind::CustomCovariance => {
                let kernel = self.kernel.as_ref().ok_or(Error::MissingKernel)?;
                kernel(s, t)
            }
        };
        Ok(raw / self.normalization())
    }

    /// Covariance matrix over `times`.
    pub fn covariance_matrix(&self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = times.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let c = self.covariance(times[i], times[j])?;
                m[i][j] = c;
                m[j][i] = c;
            }
        }
        Ok(m)
    }
}

/// Uniform time grid `t0_time, t0_time + h, ..., t1_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0_time: f64,
    pub t1_time: f64,
    pub num_points: usize,
}

impl TimeGrid {
    pub fn new(t0_time: f64, t1_time: f64, num_points: usize) -> Result<Self> {
        ensure(t0_time >= 0.0, "t0_time", || format!("must be >= 0, got {t0_time}"))?;
        ensure(t1_time > t0_time, "t1_time", || {
            format!("must exceed t0_time ({t0_time}), got {t1_time}")
        })?;
        ensure(num_points >= 2, "num_points", || format!("need at least 2, got {num_points}"))?;
        Ok(Self {
            t0_time,
            t1_time,
            num_points,
        })
    }

    /// `[0, end]` with `num_points` points.
    pub fn from_zero(end: f64, num_points: usize) -> Result<Self> {
        Self::new(0.0, end, num_points)
    }

    pub fn spacing(&self) -> f64 {
        (self.t1_time - self.t0_time) / (self.num_points - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.num_points {
            self.t1_time
        } else {
            self.t0_time + i as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.time(i)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t0_time: self.t0_time * factor,
            t1_time: self.t1_time * factor,
            num_points: self.num_points,
        }
    }

    /// The 0-started grid with the same spacing that contains this grid, and
    /// the index of `t0_time` in it.
    pub fn zero_extension(&self) -> Result<(TimeGrid, usize)> {
        if self.t0_time == 0.0 {
            return Ok((*self, 0));
        }
        let h = self.spacing();
        let offset = (self.t0_time / h).round();
        ensure(
            (offset * h - self.t0_time).abs() <= 1e-9 * self.t0_time.max(h),
            "t0_time",
            || format!("offset grid start {} is not a multiple of the spacing {h}", self.t0_time),
        )?;
        let offset = offset as usize;
        let full = TimeGrid::new(0.0, self.t1_time, offset + self.num_points)?;
        Ok((full, offset))
    }

    /// Every `stride`-th point.
    pub fn subgrid(&self, stride: usize) -> Result<Self> {
        ensure(stride >= 1 && (self.num_points - 1) % stride == 0, "stride", || {
            format!("{stride} does not divide {} intervals", self.num_points - 1)
        })?;
        Self::new(self.t0_time, self.t1_time, (self.num_points - 1) / stride + 1)
    }
}

/// Component paths on a shared grid, plus the derived chi-square-with-trend path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub components: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_path: Option<Vec<f64>>,
}

impl PathBundle {
    pub fn new(grid: TimeGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        for c in &components {
            ensure(c.len() == grid.num_points, "components", || {
                format!("path length {} does not match grid ({})", c.len(), grid.num_points)
            })?;
        }
        Ok(Self {
            grid,
            components,
            chi_path: None,
        })
    }

    /// Independent copies of `model` on `grid`, replication streams `0..count` of `seed`.
    pub fn sample(model: &SelfSimilarModel, grid: TimeGrid, count: usize, seed: u64) -> Result<Self> {
        let key = StreamKey::new(seed, task::PATHS);
        let components = (0..count as u64)
            .map(|i| sample_with_key(model, grid, key, i))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, components)
    }

    /// CSV with header `t,y1,...,yn`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.components.len() {
            out.push_str(&format!(",y{i}"));
        }
        out.push('\n');
        for j in 0..self.grid.num_points {
            out.push_str(&format!("{:.16e}", self.grid.time(j)));
            for c in &self.components {
                out.push_str(&format!(",{:.16e}", c[j]));
            }
            out.push('\n');
        }
        out
    }
}

/// Exact fBm sample on `grid`; offset grids are sliced out of the 0-started grid.
pub fn sample_fbm(hurst: f64, grid: TimeGrid, seed: u64) -> Result<Vec<f64>> {
    let model = SelfSimilarModel::fbm(hurst)?;
    sample_with_key(&model, grid, StreamKey::new(seed, task::PATHS), 0)
}

/// Dense-factorization sample for any kernel on `grid`.
pub fn sample_general(model: &SelfSimilarModel, grid: TimeGrid, seed: u64) -> Result<Vec<f64>> {
    let sampler = dense_sampler(model, grid)?;
    let mut rng = StreamKey::new(seed, task::PATHS).rng(0);
    let mut out = vec![0.0; grid.num_points];
    sampler.sample_into(&mut rng, &mut out);
    Ok(out)
}

pub(crate) fn sample_with_key(
    model: &SelfSimilarModel,
    grid: TimeGrid,
    key: StreamKey,
    replication: u64,
) -> Result<Vec<f64>> {
    let mut rng = key.rng(replication);
    if model.kind == ModelKind::Fbm {
        let (full, offset) = grid.zero_extension()?;
        let sampler = FbmSampler::new(model.hurst, full.num_points, full.spacing(), true)?;
        let mut scratch = sampler.scratch();
        let mut path = vec![0.0; full.num_points];
        sampler.sample_into(&mut rng, &mut scratch, &mut path, None);
        Ok(path[offset..].to_vec())
    } else {
        let sampler = dense_sampler(model, grid)?;
        let mut out = vec![0.0; grid.num_points];
        sampler.sample_into(&mut rng, &mut out);
        Ok(out)
    }
}

/// Sampler for batches of independent paths of one model on one 0-started
/// grid. Draws come in pairs so the fBm embedding spends one FFT per two paths.
#[derive(Clone)]
pub struct PairSource {
    inner: Source,
    num_points: usize,
}

#[derive(Clone)]
enum Source {
    Fbm(FbmSampler),
    Dense(Arc<DenseSampler>),
}

pub struct PairScratch(Option<FbmScratch>);

impl PairSource {
    pub fn new(model: &SelfSimilarModel, grid: TimeGrid) -> Result<Self> {
        let inner = if model.kind == ModelKind::Fbm && grid.t0_time == 0.0 {
            Source::Fbm(FbmSampler::new(model.hurst, grid.num_points, grid.spacing(), true)?)
        } else {
            Source::Dense(dense_sampler(model, grid)?)
        };
        Ok(Self {
            inner,
            num_points: grid.num_points,
        })
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn scratch(&self) -> PairScratch {
        match &self.inner {
            Source::Fbm(s) => PairScratch(Some(s.scratch())),
            Source::Dense(_) => PairScratch(None),
        }
    }

    /// Fills `first[i]` and `second[i]` with `2 * first.len()` independent paths.
    pub fn sample_pair<R: rand::Rng + ?Sized>(
        &self,
        rng: &mut R,
        scratch: &mut PairScratch,
        first: &mut [Vec<f64>],
        second: &mut [Vec<f64>],
    ) {
        for (a, b) in first.iter_mut().zip(second.iter_mut()) {
            match (&self.inner, scratch.0.as_mut()) {
                (Source::Fbm(s), Some(fs)) => s.sample_into(rng, fs, a, Some(b)),
                (Source::Dense(d), _) => {
                    d.sample_into(rng, a);
                    d.sample_into(rng, b);
                }
                (Source::Fbm(_), None) => unreachable!("scratch built for another source"),
            }
        }
    }
}

/// Pathwise self-similarity map: times `a t`, values `a^H Y(t)`.
pub fn rescale_path(grid: &TimeGrid, path: &[f64], factor: f64, hurst: f64) -> Result<(TimeGrid, Vec<f64>)> {
    if !(factor > 0.0) {
        return Err(invalid("time_factor", format!("must be > 0, got {factor}")));
    }
    let scale = factor.powf(hurst);
    Ok((grid.scaled(factor), path.iter().map(|y| scale * y).collect()))
}
