//! Reference positional encoders.
//!
//! - Sinusoidal: absolute per-axis sin/cos features, concatenated over axes.
//! - Axial RoPE: the pairs are split into `n` groups and group `a` runs a 1-D
//!   RoPE on coordinate `x[a]`. Every wave vector is axis aligned.
//! - Mixed RoPE: every pair gets its own direction, drawn uniformly on the
//!   sphere from a seed, with the 1-D RoPE magnitude of that pair. The
//!   directions are fixed rather than learned.
//!
//! When `head_dim / 2` is not a multiple of `n`, the leftover pairs (and for
//! the sinusoidal encoder, the leftover features) are identity / zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::rng;
use crate::rotary::{ContentVector, Rotary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Sinusoidal,
    RopeAxial,
    RopeMixed,
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinusoidal" => Ok(Self::Sinusoidal),
            "rope_axial" => Ok(Self::RopeAxial),
            "rope_mixed" => Ok(Self::RopeMixed),
            other => Err(Error::Unknown {
                kind: "baseline",
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sinusoidal => "sinusoidal",
            Self::RopeAxial => "rope_axial",
            Self::RopeMixed => "rope_mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub n: usize,
    pub head_dim: usize,
    pub base: f64,
    /// Direction draw for mixed RoPE.
    #[serde(default)]
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind, n: usize, head_dim: usize, base: f64) -> Self {
        Self {
            kind,
            n,
            head_dim,
            base,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.head_dim == 0 || !self.head_dim.is_multiple_of(2) {
            return Err(invalid("head_dim", format!("{} must be a positive even number", self.head_dim)));
        }
        if !(self.base.is_finite() && self.base > 1.0) {
            return Err(invalid("base", format!("{} is not a finite value > 1", self.base)));
        }
        if self.kind != BaselineKind::RopeMixed && self.head_dim < 2 * self.n {
            return Err(invalid(
                "head_dim",
                format!("{} leaves no pair per axis for n = {}", self.head_dim, self.n),
            ));
        }
        Ok(())
    }

    fn expect(&self, kind: BaselineKind) -> Result<()> {
        if self.kind != kind {
            return Err(invalid("kind", format!("expected {kind}, got {}", self.kind)));
        }
        self.validate()
    }
}

/// 1-D RoPE frequency of pair `j` in a block of `pairs` pairs.
fn rope_frequency(base: f64, j: usize, pairs: usize) -> f64 {
    base.powf(-(j as f64) / pairs as f64)
}

/// Pairs in `0..active` rotate by `rows[p] . x`; the rest pass through.
#[derive(Debug, Clone, PartialEq)]
struct PairTable {
    n: usize,
    head_dim: usize,
    active: usize,
    rows: Vec<f64>,
}

impl PairTable {
    fn frequency(&self, pair: usize) -> Option<&[f64]> {
        (pair < self.active).then(|| &self.rows[pair * self.n..(pair + 1) * self.n])
    }

    fn vectors(&self) -> Vec<Vec<f64>> {
        self.rows.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

/// Per-axis RoPE.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialRope {
    table: PairTable,
    pairs_per_axis: usize,
}

impl AxialRope {
    pub fn new(cfg: &BaselineConfig) -> Result<Self> {
        cfg.expect(BaselineKind::RopeAxial)?;
        let n = cfg.n;
        let pairs_per_axis = cfg.head_dim / 2 / n;
        let active = pairs_per_axis * n;
        let mut rows = vec![0.0; active * n];
        for axis in 0..n {
            for j in 0..pairs_per_axis {
                let p = axis * pairs_per_axis + j;
                rows[p * n + axis] = rope_frequency(cfg.base, j, pairs_per_axis);
            }
        }
        Ok(Self {
            table: PairTable {
                n,
                head_dim: cfg.head_dim,
                active,
                rows,
            },
            pairs_per_axis,
        })
    }

    pub fn pairs_per_axis(&self) -> usize {
        self.pairs_per_axis
    }

    /// Active wave vectors, one per pair, axis-major.
    pub fn wave_vectors(&self) -> Vec<Vec<f64>> {
        self.table.vectors()
    }
}

impl Rotary for AxialRope {
    fn spatial_dim(&self) -> usize {
        self.table.n
    }

    fn head_dim(&self) -> usize {
        self.table.head_dim
    }

    fn pair_frequency(&self, pair: usize) -> Option<&[f64]> {
        self.table.frequency(pair)
    }
}

/// RoPE with one seeded direction per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRope {
    table: PairTable,
}

impl MixedRope {
    /// Directions are drawn in pair order from [`rng::seeded`]`(cfg.seed)`.
    pub fn new(cfg: &BaselineConfig) -> Result<Self> {
        cfg.expect(BaselineKind::RopeMixed)?;
        let mut rng = rng::seeded(cfg.seed);
        let directions: Vec<Vec<f64>> = (0..cfg.head_dim / 2)
            .map(|_| rng::unit_direction(cfg.n, &mut rng))
            .collect();
        Self::with_directions(cfg, &directions)
    }

    /// Uses caller-supplied unit directions, one per pair.
    pub fn with_directions(cfg: &BaselineConfig, directions: &[Vec<f64>]) -> Result<Self> {
        cfg.expect(BaselineKind::RopeMixed)?;
        let pairs = cfg.head_dim / 2;
        check_len(pairs, directions.len())?;
        let mut rows = Vec::with_capacity(pairs * cfg.n);
        for (p, dir) in directions.iter().enumerate() {
            check_len(cfg.n, dir.len())?;
            let mag = rope_frequency(cfg.base, p, pairs);
            rows.extend(dir.iter().map(|u| u * mag));
        }
        Ok(Self {
            table: PairTable {
                n: cfg.n,
                head_dim: cfg.head_dim,
                active: pairs,
                rows,
            },
        })
    }

    pub fn wave_vectors(&self) -> Vec<Vec<f64>> {
        self.table.vectors()
    }
}

impl Rotary for MixedRope {
    fn spatial_dim(&self) -> usize {
        self.table.n
    }

    fn head_dim(&self) -> usize {
        self.table.head_dim
    }

    fn pair_frequency(&self, pair: usize) -> Option<&[f64]> {
        self.table.frequency(pair)
    }
}

pub fn axial_rope_rotate(v: &[f64], x: &[f64], cfg: &BaselineConfig) -> Result<ContentVector> {
    AxialRope::new(cfg)?.rotate(v, x)
}

pub fn mixed_rope_rotate(v: &[f64], x: &[f64], cfg: &BaselineConfig) -> Result<ContentVector> {
    MixedRope::new(cfg)?.rotate(v, x)
}

/// Classical absolute encoding, one block per axis.
///
/// Axis `a` fills `w = 2 * floor(head_dim / 2n)` entries with
/// `(sin(x[a] f_k), cos(x[a] f_k))`, `f_k = base^(-2k / w)`; trailing entries
/// are zero.
pub fn sinusoidal_encode(x: &[f64], cfg: &BaselineConfig) -> Result<Vec<f64>> {
    cfg.expect(BaselineKind::Sinusoidal)?;
    check_len(cfg.n, x.len())?;
    let pairs = cfg.head_dim / 2 / cfg.n;
    let mut out = vec![0.0; cfg.head_dim];
    for (axis, &coord) in x.iter().enumerate() {
        for k in 0..pairs {
            let (s, c) = (coord * rope_frequency(cfg.base, k, pairs)).sin_cos();
            let at = 2 * (axis * pairs + k);
            out[at] = s;
            out[at + 1] = c;
        }
    }
    Ok(out)
}
