//! Multi-scale simplex wave-vector banks and the positional maps built on them.
//!
//! A bank holds `S` scales of `M` wave vectors each. Within a scale the
//! vectors share one magnitude from the [`ScaleSchedule`] and point along the
//! simplex directions of [`crate::simplex`]; `M = n + 1` for `n >= 2` and
//! `M = 1` in 1-D, where the bank reduces to the RoPE frequencies.
//!
//! Rows are stored scale-major, direction-minor. Dimension pair `p` of a
//! content vector is rotated by the phase of row `p`; pairs past the last row
//! are left untouched.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::rotary::{self, ContentVector, Rotary};
use crate::rng;
use crate::scales::{self, ScaleSchedule};
use crate::simplex::{self, DirectionMode, SimplexFrame};

/// Everything needed to rebuild a bank deterministically.
///
/// JSON form: `{n, head_dim, num_heads, scales_per_head, base, direction_mode, seed}`.
/// `num_heads` defaults to 1; a missing `scales_per_head` gives every head all
/// scales; a missing `base` resolves to [`scales::default_base`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPEConfig {
    pub n: usize,
    pub head_dim: usize,
    #[serde(default = "one")]
    pub num_heads: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales_per_head: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default)]
    pub direction_mode: DirectionMode,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl GridPEConfig {
    pub fn new(n: usize, head_dim: usize) -> Self {
        Self {
            n,
            head_dim,
            num_heads: 1,
            scales_per_head: None,
            base: None,
            direction_mode: DirectionMode::Fixed,
            seed: 0,
        }
    }

    pub fn with_base(mut self, base: f64) -> Self {
        self.base = Some(base);
        self
    }

    pub fn with_mode(mut self, mode: DirectionMode, seed: u64) -> Self {
        self.direction_mode = mode;
        self.seed = seed;
        self
    }

    pub fn with_heads(mut self, num_heads: usize, scales_per_head: usize) -> Self {
        self.num_heads = num_heads;
        self.scales_per_head = Some(scales_per_head);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `M`.
    pub fn bases_per_scale(&self) -> Result<usize> {
        scales::bases_per_scale(self.n)
    }

    /// `S = floor(head_dim / 2M)`.
    pub fn num_scales(&self) -> Result<usize> {
        Ok(self.head_dim / (2 * self.bases_per_scale()?))
    }

    pub fn resolved_base(&self) -> Result<f64> {
        match self.base {
            Some(b) => Ok(b),
            None => scales::default_base(self.head_dim, self.bases_per_scale()?, self.n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.head_dim == 0 || !self.head_dim.is_multiple_of(2) {
            return Err(invalid("head_dim", format!("{} must be a positive even number", self.head_dim)));
        }
        let m = self.bases_per_scale()?;
        if self.head_dim < 2 * m {
            return Err(invalid(
                "head_dim",
                format!("{} is below 2M = {} for n = {}", self.head_dim, 2 * m, self.n),
            ));
        }
        if self.num_heads == 0 {
            return Err(invalid("num_heads", "must be >= 1"));
        }
        if self.scales_per_head == Some(0) {
            return Err(invalid("scales_per_head", "must be >= 1"));
        }
        let base = self.resolved_base()?;
        if !(base.is_finite() && base > 1.0) {
            return Err(invalid("base", format!("{base} is not a finite value > 1")));
        }
        Ok(())
    }

    /// Scales owned by head `head`.
    ///
    /// The `S` scales are cut into contiguous blocks of `scales_per_head`
    /// (the last block may be shorter) and heads take blocks round-robin.
    pub fn head_scales(&self, head: usize) -> Result<Range<usize>> {
        let total = self.num_scales()?;
        let per_head = self.scales_per_head.unwrap_or(total).min(total);
        let blocks = total.div_ceil(per_head);
        let block = head % blocks;
        Ok(block * per_head..((block + 1) * per_head).min(total))
    }
}

/// Which wave vector drives a dimension pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSlot {
    Wave { scale: usize, direction: usize },
    /// Leftover pair, passed through unrotated.
    Identity,
}

/// Wave vectors of one head, plus the pair layout that consumes them.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveVectorBank {
    config: GridPEConfig,
    schedule: ScaleSchedule,
    scales: Range<usize>,
    vectors: DMatrix<f64>,
    /// Row-major copy of `vectors`.
    rows: Vec<f64>,
    layout: Vec<PairSlot>,
}

/// Bank with all `S` scales.
pub fn build_bank(config: &GridPEConfig) -> Result<WaveVectorBank> {
    config.validate()?;
    let total = config.num_scales()?;
    WaveVectorBank::with_scales(config, 0..total)
}

/// One bank per head, following [`GridPEConfig::head_scales`].
pub fn build_head_banks(config: &GridPEConfig) -> Result<Vec<WaveVectorBank>> {
    config.validate()?;
    (0..config.num_heads)
        .map(|h| WaveVectorBank::with_scales(config, config.head_scales(h)?))
        .collect()
}

/// Unit directions used at scale `scale`, one per row (`M x n`).
///
/// Random mode rotates every scale independently with seed
/// [`rng::mix_seed`]`(config.seed, scale)`.
pub fn scale_directions(frame: &SimplexFrame, config: &GridPEConfig, scale: usize) -> Result<DMatrix<f64>> {
    let seed = rng::mix_seed(config.seed, scale as u64);
    let dirs = simplex::oriented_directions(frame, config.direction_mode, seed)?;
    let m = config.bases_per_scale()?;
    Ok(dirs.rows(0, m).into_owned())
}

impl WaveVectorBank {
    fn with_scales(config: &GridPEConfig, scales: Range<usize>) -> Result<Self> {
        let m = config.bases_per_scale()?;
        let schedule = scales::make_schedule(config.resolved_base()?, config.head_dim, m)?;
        let frame = SimplexFrame::new(config.n)?;

        let mut vectors = DMatrix::<f64>::zeros(scales.len() * m, config.n);
        let mut layout = Vec::with_capacity(config.head_dim / 2);
        for (local, scale) in scales.clone().enumerate() {
            let dirs = scale_directions(&frame, config, scale)? * schedule.magnitudes[scale];
            vectors.rows_mut(local * m, m).copy_from(&dirs);
            layout.extend((0..m).map(|direction| PairSlot::Wave { scale, direction }));
        }
        layout.resize(config.head_dim / 2, PairSlot::Identity);

        Ok(Self::assemble(config.clone(), schedule, scales, vectors, layout))
    }

    fn assemble(
        config: GridPEConfig,
        schedule: ScaleSchedule,
        scales: Range<usize>,
        vectors: DMatrix<f64>,
        layout: Vec<PairSlot>,
    ) -> Self {
        let rows = vectors.transpose().as_slice().to_vec();
        Self {
            config,
            schedule,
            scales,
            vectors,
            rows,
            layout,
        }
    }

    pub fn config(&self) -> &GridPEConfig {
        &self.config
    }

    pub fn schedule(&self) -> &ScaleSchedule {
        &self.schedule
    }

    /// Scales held by this bank.
    pub fn scales(&self) -> Range<usize> {
        self.scales.clone()
    }

    pub fn bases_per_scale(&self) -> usize {
        self.schedule.bases_per_scale
    }

    /// One wave vector per row, scale-major.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn num_vectors(&self) -> usize {
        self.vectors.nrows()
    }

    /// The `M x n` block of wave vectors of global scale `scale`.
    pub fn scale_block(&self, scale: usize) -> Option<DMatrix<f64>> {
        if !self.scales.contains(&scale) {
            return None;
        }
        let m = self.bases_per_scale();
        Some(self.vectors.rows((scale - self.scales.start) * m, m).into_owned())
    }

    pub fn layout(&self) -> &[PairSlot] {
        &self.layout
    }

    /// Wave vector at row `row`.
    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.config.n;
        &self.rows[row * n..(row + 1) * n]
    }

    /// `w_row . x`.
    pub fn phase(&self, x: &[f64], row: usize) -> Result<f64> {
        check_len(self.config.n, x.len())?;
        if row >= self.num_vectors() {
            return Err(invalid("row", format!("{row} out of range for {} wave vectors", self.num_vectors())));
        }
        Ok(rotary::dot(self.row(row), x))
    }
}

impl Rotary for WaveVectorBank {
    fn spatial_dim(&self) -> usize {
        self.config.n
    }

    fn head_dim(&self) -> usize {
        self.config.head_dim
    }

    fn pair_frequency(&self, pair: usize) -> Option<&[f64]> {
        match self.layout.get(pair)? {
            PairSlot::Wave { .. } => Some(self.row(pair)),
            PairSlot::Identity => None,
        }
    }
}

/// Interleaved `(cos, sin)` of every wave-vector phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub values: Vec<f64>,
}

impl FeatureMap {
    pub fn dot(&self, other: &FeatureMap) -> f64 {
        rotary::dot(&self.values, &other.values)
    }
}

/// `z(x)`: `values[2k] = cos(w_k . x)`, `values[2k + 1] = sin(w_k . x)`.
pub fn feature_map(x: &[f64], bank: &WaveVectorBank) -> Result<FeatureMap> {
    let angles = bank.pair_angles(x)?;
    let values = angles
        .into_iter()
        .take(bank.num_vectors())
        .flatten()
        .flat_map(|a| {
            let (s, c) = a.sin_cos();
            [c, s]
        })
        .collect();
    Ok(FeatureMap { values })
}

/// Rotates pair `p` of `v` by the phase of its layout slot at `x`.
pub fn apply_rotation(v: &[f64], x: &[f64], bank: &WaveVectorBank) -> Result<ContentVector> {
    bank.rotate(v, x)
}

/// `apply_rotation(q, x1) . apply_rotation(k, x2)`.
pub fn relative_score(q: &[f64], k: &[f64], x1: &[f64], x2: &[f64], bank: &WaveVectorBank) -> Result<f64> {
    bank.relative_score(q, k, x1, x2)
}
