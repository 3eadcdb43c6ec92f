//! Blockwise 2x2 rotations driven by per-pair frequency vectors.
//!
//! Any encoder that assigns a frequency vector `w_p` to each dimension pair
//! `(2p, 2p + 1)` rotates that pair by `w_p . x`. Because every pair is a
//! rotation, the dot product of a rotated query and key only depends on
//! `x1 - x2`.

use std::ops::Deref;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};

/// Query or key content, `head_dim` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentVector(pub Vec<f64>);

impl Deref for ContentVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ContentVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl ContentVector {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `w . x`.
pub fn phase(x: &[f64], wave_vector: &[f64]) -> Result<f64> {
    check_len(wave_vector.len(), x.len())?;
    Ok(dot(wave_vector, x))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn rotate_pair(a: f64, b: f64, angle: f64) -> (f64, f64) {
    let (sin, cos) = angle.sin_cos();
    (a * cos - b * sin, a * sin + b * cos)
}

/// A position-dependent pairwise rotation of `head_dim`-wide vectors.
pub trait Rotary: Send + Sync {
    /// Spatial dimension `n` of positions.
    fn spatial_dim(&self) -> usize;

    fn head_dim(&self) -> usize;

    /// Frequency vector driving pair `pair`, or `None` if the pair passes through.
    fn pair_frequency(&self, pair: usize) -> Option<&[f64]>;

    fn num_pairs(&self) -> usize {
        self.head_dim() / 2
    }

    /// Rotation angle of each pair at position `x`.
    fn pair_angles(&self, x: &[f64]) -> Result<Vec<Option<f64>>> {
        check_len(self.spatial_dim(), x.len())?;
        Ok((0..self.num_pairs())
            .map(|p| self.pair_frequency(p).map(|w| dot(w, x)))
            .collect())
    }

    /// Rotates each pair of `v` by its angle at `x`.
    fn rotate(&self, v: &[f64], x: &[f64]) -> Result<ContentVector> {
        check_len(self.head_dim(), v.len())?;
        let mut out = v.to_vec();
        self.rotate_into(&mut out, x)?;
        Ok(ContentVector(out))
    }

    /// In-place variant of [`Rotary::rotate`].
    fn rotate_into(&self, v: &mut [f64], x: &[f64]) -> Result<()> {
        check_len(self.head_dim(), v.len())?;
        let angles = self.pair_angles(x)?;
        for (p, angle) in angles.into_iter().enumerate() {
            if let Some(angle) = angle {
                let (a, b) = rotate_pair(v[2 * p], v[2 * p + 1], angle);
                v[2 * p] = a;
                v[2 * p + 1] = b;
            }
        }
        Ok(())
    }

    /// `rotate(q, x1) . rotate(k, x2)`.
    fn relative_score(&self, q: &[f64], k: &[f64], x1: &[f64], x2: &[f64]) -> Result<f64> {
        let rq = self.rotate(q, x1)?;
        let rk = self.rotate(k, x2)?;
        Ok(dot(&rq, &rk))
    }

    /// Interleaved `(cos, sin)` of every active pair angle at `x`.
    fn pair_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let angles = self.pair_angles(x)?;
        Ok(angles
            .into_iter()
            .flatten()
            .flat_map(|a| {
                let (s, c) = a.sin_cos();
                [c, s]
            })
            .collect())
    }
}

/// Rotates `B` row-major vectors at `B` row-major positions.
///
/// Row `b` of the result is bit-identical to `rotary.rotate(row_b, pos_b)`.
/// Rows are processed in parallel; no values are combined across rows.
pub fn rotate_batch<R: Rotary + ?Sized>(rotary: &R, contents: &[f64], positions: &[f64]) -> Result<Vec<f64>> {
    let d = rotary.head_dim();
    let n = rotary.spatial_dim();
    if d == 0 || !contents.len().is_multiple_of(d) {
        return Err(crate::Error::DimensionMismatch {
            expected: d,
            found: contents.len(),
        });
    }
    let batch = contents.len() / d;
    check_len(batch * n, positions.len())?;

    let mut out = contents.to_vec();
    out.par_chunks_mut(d)
        .zip(positions.par_chunks(n.max(1)))
        .try_for_each(|(row, x)| rotary.rotate_into(row, x))?;
    Ok(out)
}
