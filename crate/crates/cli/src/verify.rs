//! Invariant suite behind `gridpe verify`.
//!
//! Each check reports the worst measured deviation and passes when it does
//! not exceed its tolerance.

use gridpe::embedding::{build_bank, feature_map, GridPEConfig};
use gridpe::kernel::{shift_kernel, vco_phase_along_path, vco_phase_closed_form, PathSample, VcoParams};
use gridpe::rng::{seeded, SeededRng};
use gridpe::scales::{bases_per_scale, make_schedule, max_base, optimal_ratio};
use gridpe::simplex::{gram, oriented_directions, DirectionMode, SimplexFrame, RANK_THRESHOLD};
use gridpe::{rotate_batch, Rotary, WaveVectorBank};
use rand::RngExt;
use serde::Serialize;

use crate::CliError;

const DRAWS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

fn check(name: &str, measured: f64, tolerance: f64) -> Check {
    Check {
        name: name.to_string(),
        pass: measured <= tolerance,
        measured,
        tolerance,
    }
}

fn uniform(rng: &mut SeededRng, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs every check for spatial dimension `n` and head size `head_dim`.
pub fn run(n: usize, head_dim: usize, seed: u64) -> Result<VerifyReport, CliError> {
    let mut rng = seeded(seed);
    let mut checks = simplex_checks(n)?;
    let bank = build_bank(&GridPEConfig::new(n, head_dim).with_mode(DirectionMode::Random, seed))?;
    checks.extend(bank_checks(&bank, &mut rng)?);
    checks.push(rope_reduction(head_dim, &mut rng)?);
    checks.push(base_bound(n, head_dim)?);
    checks.extend(vco_checks(&bank, &mut rng)?);
    let overall = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { checks, overall })
}

fn simplex_checks(n: usize) -> Result<Vec<Check>, CliError> {
    let frame = SimplexFrame::new(n)?;
    let p = frame.projected().expect("projected frame");
    let expected = (n as f64 / (n + 1) as f64).sqrt();
    let norms = p.row_iter().map(|r| (r.norm() - expected).abs()).fold(0.0, f64::max);
    let g = gram(p);
    let mut dots: f64 = 0.0;
    for i in 0..=n {
        for j in (0..=n).filter(|&j| j != i) {
            dots = dots.max((g[(i, j)] / g[(i, i)] + 1.0 / n as f64).abs());
        }
    }
    let rank = p.clone().singular_values().iter().filter(|s| **s > RANK_THRESHOLD).count();
    let dirs = oriented_directions(&frame, DirectionMode::Fixed, 0)?;
    let unit = dirs.row_iter().map(|r| (r.norm() - 1.0).abs()).fold(0.0, f64::max);
    Ok(vec![
        check("simplex_equal_norms", norms, 1e-12),
        check("simplex_pairwise_dot", dots, 1e-12),
        check("simplex_zero_sum", p.row_sum().norm(), 1e-12),
        check("simplex_rank", rank.abs_diff(n) as f64, 0.0),
        check("simplex_gram_preserved", (g - gram(frame.raw_vertices())).abs().max(), 1e-12),
        check("simplex_unit_directions", unit, 1e-12),
    ])
}

fn bank_checks(bank: &WaveVectorBank, rng: &mut SeededRng) -> Result<Vec<Check>, CliError> {
    let (n, d) = (bank.spatial_dim(), bank.head_dim());
    let (mut shift, mut iso, mut kernel) = (0.0f64, 0.0f64, 0.0f64);
    let mut contents = Vec::with_capacity(DRAWS * d);
    let mut positions = Vec::with_capacity(DRAWS * n);
    for _ in 0..DRAWS {
        let q = uniform(rng, d, 1.0);
        let k = uniform(rng, d, 1.0);
        let x1 = uniform(rng, n, 50.0);
        let x2 = uniform(rng, n, 50.0);
        let t = uniform(rng, n, 100.0 / (n as f64).sqrt());
        let y1: Vec<f64> = x1.iter().zip(&t).map(|(a, b)| a + b).collect();
        let y2: Vec<f64> = x2.iter().zip(&t).map(|(a, b)| a + b).collect();
        let a = bank.relative_score(&q, &k, &x1, &x2)?;
        let b = bank.relative_score(&q, &k, &y1, &y2)?;
        shift = shift.max((a - b).abs());

        let r = bank.rotate(&q, &x1)?;
        iso = iso.max((r.norm() - norm(&q)).abs() / norm(&q));

        let z1 = feature_map(&x1, bank)?;
        let z2 = feature_map(&x2, bank)?;
        let direct: f64 = (0..bank.num_vectors())
            .map(|row| {
                let w = bank.row(row);
                (0..n).map(|i| w[i] * (x1[i] - x2[i])).sum::<f64>().cos()
            })
            .sum();
        kernel = kernel.max((z1.dot(&z2) - direct).abs());

        contents.extend_from_slice(&q);
        positions.extend_from_slice(&x1);
    }
    let batch = rotate_batch(bank, &contents, &positions)?;
    let mut batch_diff: f64 = 0.0;
    for ((row, v), x) in batch.chunks(d).zip(contents.chunks(d)).zip(positions.chunks(n)) {
        let single = bank.rotate(v, x)?;
        for (a, b) in row.iter().zip(single.iter()) {
            batch_diff = batch_diff.max(if a.to_bits() == b.to_bits() { 0.0 } else { (a - b).abs().max(f64::MIN_POSITIVE) });
        }
    }
    Ok(vec![
        check("shift_invariance", shift, 1e-8),
        check("rotation_isometry", iso, 1e-12),
        check("feature_map_kernel", kernel, 1e-10),
        check("batch_matches_single", batch_diff, 0.0),
    ])
}

/// Standard interleaved RoPE, coded independently of the bank.
fn reference_rope(v: &[f64], pos: f64, base: f64) -> Vec<f64> {
    let d = v.len();
    let mut out = vec![0.0; d];
    for i in 0..d / 2 {
        let theta = 1.0 / base.powf((2 * i) as f64 / d as f64);
        let (s, c) = (pos * theta).sin_cos();
        out[2 * i] = v[2 * i] * c - v[2 * i + 1] * s;
        out[2 * i + 1] = v[2 * i] * s + v[2 * i + 1] * c;
    }
    out
}

fn rope_reduction(head_dim: usize, rng: &mut SeededRng) -> Result<Check, CliError> {
    let base = 10_000.0;
    let bank = build_bank(&GridPEConfig::new(1, head_dim).with_base(base))?;
    let mut worst: f64 = 0.0;
    for _ in 0..DRAWS {
        let v = uniform(rng, head_dim, 1.0);
        let pos = rng.random_range(-1000.0..1000.0);
        let got = bank.rotate(&v, &[pos])?;
        for (a, b) in got.iter().zip(reference_rope(&v, pos, base)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(check("one_dimensional_rope", worst, 1e-12))
}

fn base_bound(n: usize, head_dim: usize) -> Result<Check, CliError> {
    let m = bases_per_scale(n)?;
    let schedule = make_schedule(max_base(head_dim, m, n)?, head_dim, m)?;
    let target = optimal_ratio(n)?;
    let worst = schedule
        .magnitudes
        .windows(2)
        .map(|w| (w[0] / w[1] - target).abs())
        .fold((schedule.ratio() - target).abs(), f64::max);
    Ok(check("base_bound_ratio", worst, 1e-12))
}

fn vco_checks(bank: &WaveVectorBank, rng: &mut SeededRng) -> Result<Vec<Check>, CliError> {
    let n = bank.spatial_dim();
    let params = VcoParams {
        baseline_freq: 1.3,
        gain: 0.7,
        wave_vectors: (0..bank.num_vectors()).map(|r| bank.row(r).to_vec()).collect(),
        coefficients: vec![1.0; bank.num_vectors()],
        t0: 0.0,
    };
    let mut path_err: f64 = 0.0;
    let mut peak_excess = f64::NEG_INFINITY;
    let h0 = shift_kernel(&params, &vec![0.0; n])?;
    for _ in 0..DRAWS {
        // Dog-leg: constant velocity u on [0, 1], then v on [1, 2].
        let u = uniform(rng, n, 5.0);
        let v = uniform(rng, n, 5.0);
        let end: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let straight: Vec<f64> = end.iter().map(|e| e / 2.0).collect();
        let dog_leg = [
            PathSample { t: 0.0, velocity: u.clone() },
            PathSample { t: 1.0, velocity: u },
            PathSample { t: 1.0, velocity: v.clone() },
            PathSample { t: 2.0, velocity: v },
        ];
        let direct = [
            PathSample { t: 0.0, velocity: straight.clone() },
            PathSample { t: 2.0, velocity: straight },
        ];
        for row in 0..params.wave_vectors.len() {
            let a = vco_phase_along_path(&dog_leg, &params, row)?;
            let b = vco_phase_along_path(&direct, &params, row)?;
            let c = vco_phase_closed_form(2.0, &end, &params, row)?;
            let scale = c.abs().max(1.0);
            path_err = path_err.max((a - b).abs() / scale).max((a - c).abs() / scale);
        }
        let d = uniform(rng, n, 20.0);
        peak_excess = peak_excess.max(shift_kernel(&params, &d)? - h0);
    }
    Ok(vec![
        check("vco_path_independence", path_err, 1e-6),
        check("kernel_peak_at_origin", peak_excess.max(0.0), 1e-12 * h0),
    ])
}
