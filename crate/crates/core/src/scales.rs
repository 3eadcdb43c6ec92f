//! Frequency magnitudes across scales and the grid-cell economy model.
//!
//! Magnitudes form a geometric sequence `base^(-2 M s / d)`, so consecutive
//! scales differ by `base^(2M/d)`. Minimizing the number of grid cells needed
//! for a fixed resolution caps that ratio at `e^(1/n)`, which bounds the base
//! by `e^(d / (2 M n))`.
//!
//! The economy model's per-location cell count is called `d_min` here to keep
//! it apart from the embedding width `d`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Conventional RoPE base, used as the default when the bound allows it.
pub const CONVENTIONAL_BASE: f64 = 10_000.0;

/// Fourier bases per scale: `n + 1` for `n >= 2`, a single one in 1-D.
pub fn bases_per_scale(n: usize) -> Result<usize> {
    match n {
        0 => Err(Error::InvalidDimension(0)),
        1 => Ok(1),
        _ => Ok(n + 1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSchedule {
    pub base: f64,
    pub head_dim: usize,
    pub bases_per_scale: usize,
    pub num_scales: usize,
    /// `magnitudes[s] = base^(-2 M s / d)`; `magnitudes[0] == 1`.
    pub magnitudes: Vec<f64>,
}

impl ScaleSchedule {
    /// `base^(2M/d)`, the ratio between consecutive magnitudes.
    pub fn ratio(&self) -> f64 {
        self.base
            .powf(2.0 * self.bases_per_scale as f64 / self.head_dim as f64)
    }
}

/// Builds `S = floor(d / 2M)` geometric magnitudes.
pub fn make_schedule(base: f64, head_dim: usize, bases_per_scale: usize) -> Result<ScaleSchedule> {
    if !(base.is_finite() && base > 1.0) {
        return Err(invalid("base", format!("{base} is not a finite value > 1")));
    }
    if bases_per_scale == 0 {
        return Err(invalid("bases_per_scale", "must be >= 1"));
    }
    if head_dim < 2 * bases_per_scale {
        return Err(invalid(
            "head_dim",
            format!("{head_dim} cannot hold one scale of {bases_per_scale} bases (needs {})", 2 * bases_per_scale),
        ));
    }
    let num_scales = head_dim / (2 * bases_per_scale);
    let step = 2.0 * bases_per_scale as f64 / head_dim as f64;
    let magnitudes = (0..num_scales)
        .map(|s| base.powf(-step * s as f64))
        .collect();
    Ok(ScaleSchedule {
        base,
        head_dim,
        bases_per_scale,
        num_scales,
        magnitudes,
    })
}

/// Upper bound `e^(d / (2 M n))` on the base.
pub fn max_base(head_dim: usize, bases_per_scale: usize, n: usize) -> Result<f64> {
    if head_dim == 0 {
        return Err(invalid("head_dim", "must be >= 1"));
    }
    if bases_per_scale == 0 {
        return Err(invalid("bases_per_scale", "must be >= 1"));
    }
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok((head_dim as f64 / (2.0 * bases_per_scale as f64 * n as f64)).exp())
}

/// `min(10000, max_base(d, M, n))`.
pub fn default_base(head_dim: usize, bases_per_scale: usize, n: usize) -> Result<f64> {
    Ok(max_base(head_dim, bases_per_scale, n)?.min(CONVENTIONAL_BASE))
}

/// Cell-minimizing ratio between consecutive grid periods, `e^(1/n)`.
pub fn optimal_ratio(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok((1.0 / n as f64).exp())
}

/// Lower bound on total cells, `d_min * rho * log_rho(R)`.
pub fn cell_count(rho: f64, resolution: f64, d_min: usize) -> Result<f64> {
    if !(rho.is_finite() && rho > 1.0) {
        return Err(invalid("rho", format!("{rho} must be > 1")));
    }
    if !(resolution.is_finite() && resolution > 1.0) {
        return Err(invalid("resolution", format!("{resolution} must be > 1")));
    }
    if d_min == 0 {
        return Err(invalid("d_min", "must be >= 1"));
    }
    Ok(d_min as f64 * rho * resolution.ln() / rho.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoSearch {
    pub rho: f64,
    pub cell_count: f64,
    /// The minimizer sits on the first or last grid point.
    pub at_boundary: bool,
}

/// Grid search of [`cell_count`] over `rho = lo + k * step`, `k = 0, 1, ...` while `rho <= hi`.
pub fn optimal_rho_bruteforce(
    resolution: f64,
    d_min: usize,
    grid_lo: f64,
    grid_hi: f64,
    step: f64,
) -> Result<RhoSearch> {
    if !(step.is_finite() && step > 0.0) || !(grid_lo.is_finite() && grid_hi.is_finite()) || grid_hi < grid_lo {
        return Err(Error::EmptyInput("rho grid"));
    }
    let points = ((grid_hi - grid_lo) / step + 1e-9).floor() as usize + 1;
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 0..points {
        let rho = grid_lo + k as f64 * step;
        let value = cell_count(rho, resolution, d_min)?;
        if best.is_none_or(|(_, _, v)| value < v) {
            best = Some((k, rho, value));
        }
    }
    let (k, rho, value) = best.ok_or(Error::EmptyInput("rho grid"))?;
    Ok(RhoSearch {
        rho,
        cell_count: value,
        at_boundary: k == 0 || k + 1 == points,
    })
}

/// Periods and firing-field sizes of a stack of grid modules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EconomyModel {
    pub n: usize,
    /// `lambda_1 .. lambda_m`, strictly increasing.
    pub periods: Vec<f64>,
    /// `l_1 .. l_m`.
    pub field_diameters: Vec<f64>,
    pub min_cells_per_location: usize,
}

impl EconomyModel {
    pub fn new(n: usize, periods: Vec<f64>, field_diameters: Vec<f64>, min_cells_per_location: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if periods.is_empty() {
            return Err(Error::EmptyInput("periods"));
        }
        crate::error::check_len(periods.len(), field_diameters.len())?;
        if periods.iter().chain(&field_diameters).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("periods", "periods and field diameters must be positive"));
        }
        if periods.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("periods", "must be strictly increasing"));
        }
        if min_cells_per_location == 0 {
            return Err(invalid("min_cells_per_location", "must be >= 1"));
        }
        Ok(Self {
            n,
            periods,
            field_diameters,
            min_cells_per_location,
        })
    }

    /// Constant-ratio stack: `lambda_i = l_1 * r^i`, with each field saturating
    /// the disambiguation constraint (`l_i = lambda_{i-1}`, `lambda_0 = l_1`).
    pub fn geometric(n: usize, modules: usize, smallest_field: f64, ratio: f64, min_cells_per_location: usize) -> Result<Self> {
        if modules == 0 {
            return Err(Error::EmptyInput("modules"));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(invalid("ratio", format!("{ratio} must be > 1")));
        }
        let periods: Vec<f64> = (1..=modules)
            .map(|i| smallest_field * ratio.powi(i as i32))
            .collect();
        let field_diameters = std::iter::once(smallest_field)
            .chain(periods[..modules - 1].iter().copied())
            .collect();
        Self::new(n, periods, field_diameters, min_cells_per_location)
    }

    pub fn modules(&self) -> usize {
        self.periods.len()
    }

    /// `r_1 = lambda_1 / l_1`.
    pub fn first_ratio(&self) -> f64 {
        self.periods[0] / self.field_diameters[0]
    }

    /// `rho = r^n` with `r = r_1`.
    pub fn rho(&self) -> f64 {
        self.first_ratio().powi(self.n as i32)
    }

    /// `R = (lambda_m / l_1)^n`.
    pub fn resolution(&self) -> f64 {
        (self.periods[self.modules() - 1] / self.field_diameters[0]).powi(self.n as i32)
    }

    /// `l_i <= lambda_{i-1}` for every `i >= 2`.
    pub fn is_unambiguous(&self) -> bool {
        self.field_diameters[1..]
            .iter()
            .zip(&self.periods)
            .all(|(l, prev)| *l <= *prev * (1.0 + 1e-12))
    }

    /// `N = d_min * sum_i (lambda_i / l_i)^n`.
    pub fn total_cells(&self) -> f64 {
        self.min_cells_per_location as f64
            * self
                .periods
                .iter()
                .zip(&self.field_diameters)
                .map(|(p, l)| (p / l).powi(self.n as i32))
                .sum::<f64>()
    }
}
