//! Velocity-controlled oscillator grid cells and their shift kernels.
//!
//! An oscillator with baseline frequency `w_s`, gain `beta` and preferred wave
//! vector `w` accumulates phase `w_s t + beta w . x(t)` along a trajectory.
//! A grid cell sums `c_i cos(phase_i)` over its inputs, and the inner product
//! of two shifted activation maps collapses to the kernel
//! `h(d) = (2 pi)^n sum_i c_i^2 cos(beta w_i . d)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::rng;
use crate::rotary::dot;

/// Oscillator population feeding one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcoParams {
    /// `w_s`, radians per unit time.
    pub baseline_freq: f64,
    /// `beta`, velocity coupling.
    pub gain: f64,
    /// `M` rows of length `n`.
    pub wave_vectors: Vec<Vec<f64>>,
    /// One weight per wave vector.
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub t0: f64,
}

impl VcoParams {
    /// Three unit-weight wave vectors of magnitude `magnitude` at 120 degrees,
    /// the first one at angle `orientation` (radians).
    pub fn hexagonal(magnitude: f64, orientation: f64) -> Self {
        let wave_vectors = (0..3)
            .map(|i| {
                let a = orientation + i as f64 * 2.0 * PI / 3.0;
                vec![magnitude * a.cos(), magnitude * a.sin()]
            })
            .collect();
        Self {
            baseline_freq: 0.0,
            gain: 1.0,
            wave_vectors,
            coefficients: vec![1.0; 3],
            t0: 0.0,
        }
    }

    /// `count` unit-weight wave vectors with uniform directions on the sphere
    /// and magnitudes uniform in `[lo, hi)`.
    pub fn isotropic(n: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        use rand::RngExt;
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if count == 0 {
            return Err(Error::EmptyInput("wave vectors"));
        }
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid("magnitude range", format!("[{lo}, {hi}) is empty or non-positive")));
        }
        let mut rng = rng::seeded(seed);
        let wave_vectors = (0..count)
            .map(|_| {
                let dir = rng::unit_direction(n, &mut rng);
                let mag = rng.random_range(lo..hi);
                dir.into_iter().map(|d| d * mag).collect()
            })
            .collect();
        Ok(Self {
            baseline_freq: 0.0,
            gain: 1.0,
            wave_vectors,
            coefficients: vec![1.0; count],
            t0: 0.0,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.wave_vectors.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.wave_vectors.is_empty() {
            return Err(Error::EmptyInput("wave vectors"));
        }
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for w in &self.wave_vectors {
            check_len(n, w.len())?;
        }
        check_len(self.wave_vectors.len(), self.coefficients.len())?;
        let finite = [self.baseline_freq, self.gain, self.t0]
            .iter()
            .chain(self.coefficients.iter())
            .chain(self.wave_vectors.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("params", "all values must be finite"));
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        self.validate()?;
        check_len(self.dim(), x.len())
    }
}

/// Velocity `velocity` sampled at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub velocity: Vec<f64>,
}

fn check_path(path: &[PathSample], n: usize) -> Result<()> {
    let first = path.first().ok_or(Error::EmptyInput("path"))?;
    if first.t != 0.0 {
        return Err(invalid("path", format!("must start at t = 0, starts at {}", first.t)));
    }
    for w in path.windows(2) {
        if w[1].t.is_nan() || w[1].t < w[0].t {
            return Err(invalid("path", "sample times must be non-decreasing"));
        }
    }
    for s in path {
        check_len(n, s.velocity.len())?;
        if !s.velocity.iter().all(|v| v.is_finite()) {
            return Err(invalid("path", "velocities must be finite"));
        }
    }
    Ok(())
}

/// Trapezoidal integral of the velocity samples.
///
/// Repeated sample times are allowed and contribute nothing, which lets a path
/// encode an instantaneous change of velocity.
pub fn path_displacement(path: &[PathSample]) -> Result<Vec<f64>> {
    let n = path.first().ok_or(Error::EmptyInput("path"))?.velocity.len();
    check_path(path, n)?;
    let mut x = vec![0.0; n];
    for w in path.windows(2) {
        let dt = w[1].t - w[0].t;
        for (k, xk) in x.iter_mut().enumerate() {
            *xk += 0.5 * dt * (w[0].velocity[k] + w[1].velocity[k]);
        }
    }
    Ok(x)
}

/// Phase of oscillator `row`, the trapezoidal integral of `w_s + beta v(t) . w_row`.
pub fn vco_phase_along_path(path: &[PathSample], params: &VcoParams, row: usize) -> Result<f64> {
    params.validate()?;
    check_path(path, params.dim())?;
    let w = params
        .wave_vectors
        .get(row)
        .ok_or_else(|| invalid("row", format!("{row} out of range")))?;
    let rate = |s: &PathSample| params.baseline_freq + params.gain * dot(&s.velocity, w);
    Ok(path
        .windows(2)
        .map(|p| 0.5 * (p[1].t - p[0].t) * (rate(&p[0]) + rate(&p[1])))
        .sum())
}

/// Closed form `w_s t + beta w_row . x` of the oscillator phase.
pub fn vco_phase_closed_form(t: f64, x: &[f64], params: &VcoParams, row: usize) -> Result<f64> {
    params.check_point(x)?;
    let w = params
        .wave_vectors
        .get(row)
        .ok_or_else(|| invalid("row", format!("{row} out of range")))?;
    Ok(params.baseline_freq * t + params.gain * dot(w, x))
}

/// `g(x) = sum_i c_i cos(w_s t0 + beta w_i . x)`.
pub fn grid_activation(x: &[f64], params: &VcoParams) -> Result<f64> {
    params.check_point(x)?;
    Ok(activation_unchecked(x, params))
}

fn activation_unchecked(x: &[f64], params: &VcoParams) -> f64 {
    let offset = params.baseline_freq * params.t0;
    params
        .wave_vectors
        .iter()
        .zip(&params.coefficients)
        .map(|(w, c)| c * (offset + params.gain * dot(w, x)).cos())
        .sum()
}

/// `h(d) = (2 pi)^n sum_i c_i^2 cos(beta w_i . d)`.
pub fn shift_kernel(params: &VcoParams, d: &[f64]) -> Result<f64> {
    params.check_point(d)?;
    Ok(kernel_unchecked(params, d))
}

fn kernel_unchecked(params: &VcoParams, d: &[f64]) -> f64 {
    let scale = (2.0 * PI).powi(params.dim() as i32);
    scale
        * params
            .wave_vectors
            .iter()
            .zip(&params.coefficients)
            .map(|(w, c)| c * c * (params.gain * dot(w, d)).cos())
            .sum::<f64>()
}

/// Kernel samples along a ray.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEstimate {
    pub distances: Vec<f64>,
    pub displacements: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// Samples `h(t u)` at `num_samples` evenly spaced `t` in `[0, d_max]`,
/// with `u` the normalized `direction`.
pub fn kernel_curve(params: &VcoParams, direction: &[f64], d_max: f64, num_samples: usize) -> Result<KernelEstimate> {
    params.check_point(direction)?;
    if num_samples < 2 {
        return Err(invalid("num_samples", "need at least 2"));
    }
    if !(d_max.is_finite() && d_max > 0.0) {
        return Err(invalid("d_max", format!("{d_max} must be positive")));
    }
    let norm = dot(direction, direction).sqrt();
    if norm.is_nan() || norm <= 0.0 {
        return Err(invalid("direction", "must be nonzero"));
    }
    let unit: Vec<f64> = direction.iter().map(|v| v / norm).collect();
    let distances: Vec<f64> = (0..num_samples)
        .map(|k| d_max * k as f64 / (num_samples - 1) as f64)
        .collect();
    let displacements: Vec<Vec<f64>> = distances
        .iter()
        .map(|t| unit.iter().map(|u| u * t).collect())
        .collect();
    let values = displacements.iter().map(|d| kernel_unchecked(params, d)).collect();
    Ok(KernelEstimate {
        distances,
        displacements,
        values,
    })
}

/// Largest `|h(r u)|` over `num_directions` seeded uniform directions `u`.
pub fn radial_envelope(params: &VcoParams, radius: f64, num_directions: usize, seed: u64) -> Result<f64> {
    params.validate()?;
    let mut rng = rng::seeded(seed);
    let n = params.dim();
    Ok((0..num_directions)
        .map(|_| {
            let d: Vec<f64> = rng::unit_direction(n, &mut rng).into_iter().map(|u| u * radius).collect();
            kernel_unchecked(params, &d).abs()
        })
        .fold(0.0, f64::max))
}

/// Least-squares solution of `W x = 2 pi k` for the stacked wave vectors `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSolution {
    pub point: Vec<f64>,
    /// `||W x - 2 pi k||`.
    pub residual: f64,
}

/// Solves `W x = 2 pi k`. Rank-deficient `W` (fewer than `n` singular values
/// above `1e-10 * max`) has no unique solution and is rejected.
pub fn lattice_point(wave_vectors: &[Vec<f64>], k: &[i64]) -> Result<LatticeSolution> {
    let n = wave_vectors.first().ok_or(Error::EmptyInput("wave vectors"))?.len();
    check_len(wave_vectors.len(), k.len())?;
    let w = DMatrix::from_fn(wave_vectors.len(), n, |r, c| wave_vectors[r][c]);
    let rhs = DVector::from_iterator(k.len(), k.iter().map(|&v| 2.0 * PI * v as f64));
    let svd = w.clone().svd(true, true);
    let cutoff = 1e-10 * svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, needed: n });
    }
    let x = svd
        .solve(&rhs, cutoff)
        .map_err(|e| invalid("wave vectors", e.to_string()))?;
    let residual = (&w * &x - rhs).norm();
    Ok(LatticeSolution {
        point: x.iter().copied().collect(),
        residual,
    })
}

/// Row-major samples of a 2-D activation map.
///
/// Pixel `(r, c)` is sampled at its centre; row 0 is the top (largest `y`).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// `[x_min, x_max, y_min, y_max]`.
    pub extent: [f64; 4],
    pub values: Vec<f64>,
}

/// Samples [`grid_activation`] on a `resolution x resolution` raster.
pub fn raster(extent: [f64; 4], resolution: usize, params: &VcoParams) -> Result<Raster> {
    params.validate()?;
    if params.dim() != 2 {
        return Err(invalid("params", format!("rasters need n = 2, got n = {}", params.dim())));
    }
    if resolution == 0 {
        return Err(invalid("resolution", "must be >= 1"));
    }
    let [x0, x1, y0, y1] = extent;
    if !(extent.iter().all(|v| v.is_finite()) && x1 > x0 && y1 > y0) {
        return Err(invalid("extent", format!("{extent:?} is empty")));
    }
    let mut out = Raster {
        width: resolution,
        height: resolution,
        extent,
        values: vec![0.0; resolution * resolution],
    };
    let geometry = out.clone_geometry();
    out.values
        .par_chunks_mut(resolution)
        .enumerate()
        .for_each(|(r, row)| {
            for (c, v) in row.iter_mut().enumerate() {
                *v = activation_unchecked(&geometry.point(r as f64, c as f64), params);
            }
        });
    Ok(out)
}

#[derive(Clone, Copy)]
struct Geometry {
    extent: [f64; 4],
    width: usize,
    height: usize,
}

impl Geometry {
    fn pixel_size(&self) -> (f64, f64) {
        let [x0, x1, y0, y1] = self.extent;
        ((x1 - x0) / self.width as f64, (y1 - y0) / self.height as f64)
    }

    fn point(&self, r: f64, c: f64) -> [f64; 2] {
        let (dx, dy) = self.pixel_size();
        [self.extent[0] + (c + 0.5) * dx, self.extent[3] - (r + 0.5) * dy]
    }

    fn pixel(&self, p: [f64; 2]) -> (f64, f64) {
        let (dx, dy) = self.pixel_size();
        ((self.extent[3] - p[1]) / dy - 0.5, (p[0] - self.extent[0]) / dx - 0.5)
    }
}

impl Raster {
    fn clone_geometry(&self) -> Geometry {
        Geometry {
            extent: self.extent,
            width: self.width,
            height: self.height,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.width + c]
    }

    /// Spatial coordinates of a (possibly fractional) pixel position.
    pub fn point(&self, r: f64, c: f64) -> [f64; 2] {
        self.clone_geometry().point(r, c)
    }

    /// Bilinear interpolation at `p`, `None` outside the sampled pixel centres.
    pub fn sample(&self, p: [f64; 2]) -> Option<f64> {
        let (r, c) = self.clone_geometry().pixel(p);
        if !(r >= 0.0 && c >= 0.0 && r <= (self.height - 1) as f64 && c <= (self.width - 1) as f64) {
            return None;
        }
        let (r0, c0) = (r.floor() as usize, c.floor() as usize);
        let (r1, c1) = ((r0 + 1).min(self.height - 1), (c0 + 1).min(self.width - 1));
        let (fr, fc) = (r - r0 as f64, c - c0 as f64);
        let top = self.get(r0, c0) * (1.0 - fc) + self.get(r0, c1) * fc;
        let bottom = self.get(r1, c0) * (1.0 - fc) + self.get(r1, c1) * fc;
        Some(top * (1.0 - fr) + bottom * fr)
    }

    /// Local maxima above `threshold`, refined to sub-pixel accuracy by
    /// per-axis parabolic fits. Border pixels are skipped.
    pub fn peaks(&self, threshold: f64) -> Vec<[f64; 2]> {
        let mut found = Vec::new();
        for r in 1..self.height.saturating_sub(1) {
            for c in 1..self.width.saturating_sub(1) {
                let v = self.get(r, c);
                if v <= threshold {
                    continue;
                }
                let mut is_max = true;
                for (dr, dc) in [(-1i64, -1i64), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                    let u = self.get((r as i64 + dr) as usize, (c as i64 + dc) as usize);
                    // Strict on one side so plateaus yield a single peak.
                    let earlier = dr < 0 || (dr == 0 && dc < 0);
                    if (earlier && u >= v) || (!earlier && u > v) {
                        is_max = false;
                        break;
                    }
                }
                if is_max {
                    let offset = |a: f64, b: f64, c: f64| {
                        let denom = a - 2.0 * b + c;
                        if denom.abs() < 1e-300 {
                            0.0
                        } else {
                            0.5 * (a - c) / denom
                        }
                    };
                    let fr = offset(self.get(r - 1, c), v, self.get(r + 1, c));
                    let fc = offset(self.get(r, c - 1), v, self.get(r, c + 1));
                    found.push(self.point(r as f64 + fr, c as f64 + fc));
                }
            }
        }
        found
    }

    /// Relative L2 difference between the raster and its rotation by `angle`
    /// about `center`, over pixel centres within `radius` of `center` whose
    /// rotated position is still inside the raster.
    pub fn rotation_mismatch(&self, center: [f64; 2], angle: f64, radius: f64) -> f64 {
        let (s, c) = angle.sin_cos();
        let mut diff = 0.0;
        let mut total = 0.0;
        for r in 0..self.height {
            for col in 0..self.width {
                let p = self.point(r as f64, col as f64);
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                if dx * dx + dy * dy > radius * radius {
                    continue;
                }
                let q = [center[0] + c * dx - s * dy, center[1] + s * dx + c * dy];
                if let Some(rotated) = self.sample(q) {
                    let v = self.get(r, col);
                    diff += (v - rotated).powi(2);
                    total += v * v;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (diff / total).sqrt()
        }
    }

    /// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples).
    ///
    /// Values are min-max normalized to `0..=65535`; a constant raster maps to
    /// 0. The header carries one comment line with the original range:
    /// `P5\n# gridpe activation min=<min> max=<max>\n<w> <h>\n65535\n`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        let mut out = format!(
            "P5\n# gridpe activation min={min:.16e} max={max:.16e}\n{} {}\n65535\n",
            self.width, self.height
        )
        .into_bytes();
        out.reserve(2 * self.values.len());
        for v in &self.values {
            let level = if span > 0.0 {
                ((v - min) / span * 65535.0).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&level.to_be_bytes());
        }
        out
    }
}

/// Distances from `point` to every other entry of `points`, ascending.
pub fn neighbor_distances(points: &[[f64; 2]], point: [f64; 2]) -> Vec<f64> {
    let mut d: Vec<f64> = points
        .iter()
        .map(|p| (p[0] - point[0]).hypot(p[1] - point[1]))
        .filter(|d| *d > 1e-9)
        .collect();
    d.sort_by(f64::total_cmp);
    d
}
