//! Single-layer attention over positional encoders, with attention-distance
//! and attention-entropy diagnostics.
//!
//! Contents serve as both queries and keys (no projections). Rotary encoders
//! rotate them; absolute encoders (sinusoidal, position table) add a
//! position vector. Scores are `enc_q(c_i, x_i) . enc_k(c_j, x_j) / temperature`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, AxialRope, BaselineConfig, BaselineKind, MixedRope};
use crate::embedding::{self, GridPEConfig};
use crate::error::{check_len, invalid, Error, Result};
use crate::rng;
use crate::rotary::{dot, Rotary};
use crate::scales;
use crate::simplex::DirectionMode;

/// Positional encoding method under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gridpe,
    RopeAxial,
    RopeMixed,
    Sinusoidal,
    /// Untrained seeded position table, a stand-in for learned embeddings.
    Table,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Gridpe,
        Method::RopeAxial,
        Method::RopeMixed,
        Method::Sinusoidal,
        Method::Table,
    ];

    pub fn is_rotary(self) -> bool {
        matches!(self, Method::Gridpe | Method::RopeAxial | Method::RopeMixed)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gridpe" => Ok(Self::Gridpe),
            "rope_axial" => Ok(Self::RopeAxial),
            "rope_mixed" => Ok(Self::RopeMixed),
            "sinusoidal" => Ok(Self::Sinusoidal),
            "table" => Ok(Self::Table),
            other => Err(Error::Unknown {
                kind: "method",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gridpe => "gridpe",
            Self::RopeAxial => "rope_axial",
            Self::RopeMixed => "rope_mixed",
            Self::Sinusoidal => "sinusoidal",
            Self::Table => "table",
        })
    }
}

/// Seeded random vectors on the integer grid `[0, grid_size)^n`.
///
/// Lookups round each coordinate to the nearest integer and clamp it into the
/// grid, so every position outside the grid reuses a border entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionTable {
    n: usize,
    head_dim: usize,
    grid_size: usize,
    entries: Vec<f64>,
}

impl PositionTable {
    pub fn new(n: usize, head_dim: usize, grid_size: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if grid_size == 0 {
            return Err(invalid("grid_size", "must be >= 1"));
        }
        let cells = checked_cells(grid_size, n)?;
        let mut rng = rng::seeded(seed);
        let entries = (0..cells * head_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(Self {
            n,
            head_dim,
            grid_size,
            entries,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn lookup(&self, x: &[f64]) -> Result<&[f64]> {
        check_len(self.n, x.len())?;
        let top = (self.grid_size - 1) as f64;
        let mut index = 0usize;
        for &coord in x.iter().rev() {
            let cell = coord.round().clamp(0.0, top);
            index = index * self.grid_size + cell as usize;
        }
        Ok(&self.entries[index * self.head_dim..(index + 1) * self.head_dim])
    }
}

fn checked_cells(grid_size: usize, n: usize) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|n| grid_size.checked_pow(n))
        .ok_or_else(|| invalid("grid_size", format!("{grid_size}^{n} cells overflow")))
}

/// A positional encoder usable by the harness.
pub enum Encoder {
    Rotary(Box<dyn Rotary>),
    Sinusoidal(BaselineConfig),
    Table(PositionTable),
}

/// Parameters shared by every method when building an [`Encoder`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub method: Method,
    pub n: usize,
    pub head_dim: usize,
    /// Defaults to [`scales::default_base`] for the GridPE basis count.
    pub base: Option<f64>,
    pub direction_mode: DirectionMode,
    pub seed: u64,
    /// Grid of the position table.
    pub table_grid: usize,
}

impl EncoderSpec {
    pub fn new(method: Method, n: usize, head_dim: usize) -> Self {
        Self {
            method,
            n,
            head_dim,
            base: None,
            direction_mode: DirectionMode::Fixed,
            seed: 0,
            table_grid: 8,
        }
    }

    pub fn resolved_base(&self) -> Result<f64> {
        match self.base {
            Some(b) => Ok(b),
            None => scales::default_base(self.head_dim, scales::bases_per_scale(self.n)?, self.n),
        }
    }

    pub fn build(&self) -> Result<Encoder> {
        let base = self.resolved_base()?;
        let baseline = |kind| BaselineConfig::new(kind, self.n, self.head_dim, base).with_seed(self.seed);
        Ok(match self.method {
            Method::Gridpe => {
                let cfg = GridPEConfig::new(self.n, self.head_dim)
                    .with_base(base)
                    .with_mode(self.direction_mode, self.seed);
                Encoder::Rotary(Box::new(embedding::build_bank(&cfg)?))
            }
            Method::RopeAxial => Encoder::Rotary(Box::new(AxialRope::new(&baseline(BaselineKind::RopeAxial))?)),
            Method::RopeMixed => Encoder::Rotary(Box::new(MixedRope::new(&baseline(BaselineKind::RopeMixed))?)),
            Method::Sinusoidal => {
                let cfg = baseline(BaselineKind::Sinusoidal);
                cfg.validate()?;
                Encoder::Sinusoidal(cfg)
            }
            Method::Table => Encoder::Table(PositionTable::new(self.n, self.head_dim, self.table_grid, self.seed)?),
        })
    }
}

impl Encoder {
    pub fn head_dim(&self) -> usize {
        match self {
            Encoder::Rotary(r) => r.head_dim(),
            Encoder::Sinusoidal(cfg) => cfg.head_dim,
            Encoder::Table(t) => t.head_dim,
        }
    }

    pub fn spatial_dim(&self) -> usize {
        match self {
            Encoder::Rotary(r) => r.spatial_dim(),
            Encoder::Sinusoidal(cfg) => cfg.n,
            Encoder::Table(t) => t.n,
        }
    }

    fn offset(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Encoder::Rotary(_) => unreachable!("rotary encoders have no additive offset"),
            Encoder::Sinusoidal(cfg) => baselines::sinusoidal_encode(x, cfg),
            Encoder::Table(t) => t.lookup(x).map(<[f64]>::to_vec),
        }
    }

    /// Position-encoded query (or key; both use the same map).
    pub fn encode(&self, v: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.head_dim(), v.len())?;
        match self {
            Encoder::Rotary(r) => Ok(r.rotate(v, x)?.0),
            _ => Ok(v.iter().zip(self.offset(x)?).map(|(a, b)| a + b).collect()),
        }
    }

    /// Inverse of [`Encoder::encode`] at `x`.
    pub fn decode(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.head_dim(), y.len())?;
        match self {
            Encoder::Rotary(r) => {
                let back: Vec<f64> = x.iter().map(|v| -v).collect();
                Ok(r.rotate(y, &back)?.0)
            }
            _ => Ok(y.iter().zip(self.offset(x)?).map(|(a, b)| a - b).collect()),
        }
    }
}

/// Token positions (`T x n`) and contents (`T x head_dim`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSet {
    pub positions: Vec<Vec<f64>>,
    pub contents: Vec<Vec<f64>>,
}

impl TokenSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn translated(&self, shift: &[f64]) -> TokenSet {
        TokenSet {
            positions: self
                .positions
                .iter()
                .map(|p| p.iter().zip(shift).map(|(a, b)| a + b).collect())
                .collect(),
            contents: self.contents.clone(),
        }
    }

    fn validate(&self, n: usize, head_dim: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyInput("tokens"));
        }
        check_len(self.positions.len(), self.contents.len())?;
        for (p, c) in self.positions.iter().zip(&self.contents) {
            check_len(n, p.len())?;
            check_len(head_dim, c.len())?;
        }
        let finite = self.positions.iter().chain(&self.contents).flatten().all(|v| v.is_finite());
        if !finite {
            return Err(invalid("tokens", "entries must be finite"));
        }
        Ok(())
    }
}

/// Row-wise softmax of `scores / temperature`, max-subtracted.
pub fn softmax_rows(scores: &DMatrix<f64>, temperature: f64) -> Result<DMatrix<f64>> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(invalid("temperature", format!("{temperature} must be positive")));
    }
    if let Some((idx, v)) = scores.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        // Column-major storage.
        let rows = scores.nrows();
        return Err(Error::NonFiniteScore {
            row: idx % rows,
            col: idx / rows,
            value: *v,
        });
    }
    let mut out = scores / temperature;
    for mut row in out.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    Ok(out)
}

/// Self-attention weights of `tokens` under `encoder`.
pub fn attention_matrix(tokens: &TokenSet, encoder: &Encoder, temperature: f64) -> Result<DMatrix<f64>> {
    tokens.validate(encoder.spatial_dim(), encoder.head_dim())?;
    let encoded: Vec<Vec<f64>> = tokens
        .contents
        .iter()
        .zip(&tokens.positions)
        .map(|(c, x)| encoder.encode(c, x))
        .collect::<Result<_>>()?;
    let t = tokens.len();
    let scores = DMatrix::from_fn(t, t, |i, j| dot(&encoded[i], &encoded[j]));
    softmax_rows(&scores, temperature)
}

fn check_stochastic(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if let Some(v) = a.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(invalid("attention", format!("entry {v} is negative or NaN")));
    }
    Ok(())
}

/// Mean over queries of the attention-weighted distance to the keys.
pub fn attention_distance(a: &DMatrix<f64>, positions: &[Vec<f64>]) -> Result<f64> {
    check_stochastic(a)?;
    check_len(a.nrows(), positions.len())?;
    let t = a.nrows();
    if t == 0 {
        return Err(Error::EmptyInput("attention"));
    }
    let mut total = 0.0;
    for i in 0..t {
        for j in 0..t {
            check_len(positions[i].len(), positions[j].len())?;
            let dist = positions[i]
                .iter()
                .zip(&positions[j])
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            total += a[(i, j)] * dist;
        }
    }
    Ok(total / t as f64)
}

/// Mean over rows of `-sum_j a_ij ln a_ij`, with `0 ln 0 = 0`.
pub fn attention_entropy(a: &DMatrix<f64>) -> Result<f64> {
    check_stochastic(a)?;
    let t = a.nrows();
    if t == 0 {
        return Err(Error::EmptyInput("attention"));
    }
    let total: f64 = a
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| -v * v.ln())
        .sum();
    Ok(total / t as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionStats {
    pub mean_distance: f64,
    pub mean_entropy: f64,
}

/// Settings of the translation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftExperiment {
    pub encoder: EncoderSpec,
    pub tokens: usize,
    /// Tokens sit on distinct points of the integer grid `[0, grid_size)^n`.
    pub grid_size: usize,
    pub trials: usize,
    /// Shifts are uniform in `[-shift_range, shift_range]^n`.
    pub shift_range: f64,
    pub seed: u64,
    /// Defaults to `sqrt(head_dim)`.
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub method: Method,
    pub preservation_rate: f64,
    pub mean_distance: f64,
    pub mean_entropy: f64,
    pub trials: usize,
}

struct TrialOutcome {
    preserved: bool,
    stats: AttentionStats,
}

fn argmax_row(a: &DMatrix<f64>, row: usize) -> usize {
    let mut best = 0;
    for j in 1..a.ncols() {
        if a[(row, j)] > a[(row, best)] {
            best = j;
        }
    }
    best
}

impl ShiftExperiment {
    fn validate(&self) -> Result<()> {
        let n = self.encoder.n;
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.grid_size == 0 {
            return Err(invalid("grid_size", "degenerate grid"));
        }
        if self.tokens < 2 {
            return Err(invalid("tokens", "need at least 2"));
        }
        if self.tokens > checked_cells(self.grid_size, n)? {
            return Err(invalid(
                "grid_size",
                format!("{}^{n} grid cannot hold {} distinct tokens", self.grid_size, self.tokens),
            ));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        if !(self.shift_range.is_finite() && self.shift_range >= 0.0) {
            return Err(invalid("shift_range", format!("{} must be >= 0", self.shift_range)));
        }
        Ok(())
    }

    /// Runs all trials.
    ///
    /// Each trial places the tokens, draws Gaussian contents, and plants
    /// token `p != 0` so that its encoded key is twice the encoded query of
    /// token 0. It records whether row 0's argmax survives a random global
    /// translation. Trial `i` draws from [`rng::mix_seed`]`(seed, i)`.
    pub fn run(&self) -> Result<ShiftReport> {
        self.validate()?;
        let encoder = self.encoder.build()?;
        let temperature = self
            .temperature
            .unwrap_or_else(|| (self.encoder.head_dim as f64).sqrt());
        let outcomes: Vec<TrialOutcome> = (0..self.trials)
            .into_par_iter()
            .map(|i| self.trial(&encoder, temperature, rng::mix_seed(self.seed, i as u64)))
            .collect::<Result<_>>()?;

        let count = outcomes.len() as f64;
        Ok(ShiftReport {
            method: self.encoder.method,
            preservation_rate: outcomes.iter().filter(|o| o.preserved).count() as f64 / count,
            mean_distance: outcomes.iter().map(|o| o.stats.mean_distance).sum::<f64>() / count,
            mean_entropy: outcomes.iter().map(|o| o.stats.mean_entropy).sum::<f64>() / count,
            trials: self.trials,
        })
    }

    fn trial(&self, encoder: &Encoder, temperature: f64, seed: u64) -> Result<TrialOutcome> {
        let n = self.encoder.n;
        let d = self.encoder.head_dim;
        let mut rng = rng::seeded(seed);

        let cells = checked_cells(self.grid_size, n)?;
        let positions: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, cells, self.tokens)
            .into_iter()
            .map(|mut cell| {
                (0..n)
                    .map(|_| {
                        let c = cell % self.grid_size;
                        cell /= self.grid_size;
                        c as f64
                    })
                    .collect()
            })
            .collect();
        let mut contents: Vec<Vec<f64>> = (0..self.tokens)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();

        let planted = rng.random_range(1..self.tokens);
        let query = encoder.encode(&contents[0], &positions[0])?;
        let target: Vec<f64> = query.iter().map(|v| 2.0 * v).collect();
        contents[planted] = encoder.decode(&target, &positions[planted])?;

        let tokens = TokenSet { positions, contents };
        let a = attention_matrix(&tokens, encoder, temperature)?;
        let shift: Vec<f64> = (0..n)
            .map(|_| {
                if self.shift_range > 0.0 {
                    rng.random_range(-self.shift_range..=self.shift_range)
                } else {
                    0.0
                }
            })
            .collect();
        let moved = attention_matrix(&tokens.translated(&shift), encoder, temperature)?;

        Ok(TrialOutcome {
            preserved: argmax_row(&a, 0) == argmax_row(&moved, 0),
            stats: AttentionStats {
                mean_distance: attention_distance(&a, &tokens.positions)?,
                mean_entropy: attention_entropy(&a)?,
            },
        })
    }
}
