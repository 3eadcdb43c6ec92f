//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{E, PI};
use std::time::{Duration, Instant};

use gridpe::attention::{Encoder, EncoderSpec, Method, ShiftExperiment};
use gridpe::embedding::{build_bank, GridPEConfig};
use gridpe::kernel::{
    neighbor_distances, radial_envelope, raster, shift_kernel, vco_phase_along_path, vco_phase_closed_form,
    PathSample, VcoParams,
};
use gridpe::rng::{seeded, unit_direction, SeededRng};
use gridpe::scales::{bases_per_scale, make_schedule, max_base, optimal_rho_bruteforce};
use gridpe::simplex::{gram, SimplexFrame};
use gridpe::Rotary;
use rand::RngExt;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn uniform(rng: &mut SeededRng, len: usize, bound: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

fn ball(rng: &mut SeededRng, n: usize, radius: f64) -> Vec<f64> {
    let r = radius * rng.random_range(0.0..1.0f64);
    unit_direction(n, rng).into_iter().map(|u| u * r).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn simplex_geometry() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rank_ok = true;
    for n in 1..=8 {
        let frame = SimplexFrame::new(n).unwrap();
        let p = frame.projected().unwrap();
        let g = gram(p);
        let expected = (n as f64 / (n + 1) as f64).sqrt();
        for i in 0..=n {
            worst = worst.max((p.row(i).norm() - expected).abs());
            for j in (0..=n).filter(|&j| j != i) {
                worst = worst.max((g[(i, j)] / g[(i, i)] + 1.0 / n as f64).abs());
            }
        }
        worst = worst.max(p.row_sum().norm());
        worst = worst.max((g - gram(frame.raw_vertices())).abs().max());
        rank_ok &= p.clone().singular_values().iter().filter(|s| **s > 1e-10).count() == n;
    }
    outcome(worst < 1e-12 && rank_ok, format!("max deviation {worst:.3e}, ranks ok {rank_ok}"))
}

fn shift_invariance() -> Outcome {
    let mut rng = seeded(2);
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        for method in [Method::Gridpe, Method::RopeAxial, Method::RopeMixed] {
            let Encoder::Rotary(r) = EncoderSpec::new(method, n, 64).build().unwrap() else {
                unreachable!("rotary method")
            };
            for _ in 0..1000 {
                let q = uniform(&mut rng, 64, 1.0);
                let k = uniform(&mut rng, 64, 1.0);
                let x1 = uniform(&mut rng, n, 50.0);
                let x2 = uniform(&mut rng, n, 50.0);
                let t = ball(&mut rng, n, 100.0);
                let a = r.relative_score(&q, &k, &x1, &x2).unwrap();
                let b = r.relative_score(&q, &k, &add(&x1, &t), &add(&x2, &t)).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(worst < 1e-8, format!("max |delta score| {worst:.3e}"))
}

/// Interleaved RoPE with `theta_i = base^(-2i/d)`, coded from scratch.
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

fn one_dimensional_reduction() -> Outcome {
    let mut rng = seeded(3);
    let bank = build_bank(&GridPEConfig::new(1, 64).with_base(10_000.0)).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v = uniform(&mut rng, 64, 1.0);
        let pos = rng.random_range(-1000.0..1000.0);
        let got = bank.rotate(&v, &[pos]).unwrap();
        for (a, b) in got.iter().zip(reference_rope(&v, pos, 10_000.0)) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst < 1e-12, format!("max elementwise error {worst:.3e}"))
}

fn economy_optimum() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in [1e2, 1e4, 1e6] {
        let found = optimal_rho_bruteforce(r, 1, 1.5, 4.0, 0.001).unwrap();
        worst = worst.max((found.rho - E).abs());
    }
    outcome(worst <= 0.002, format!("max |rho - e| {worst:.3e}"))
}

fn base_bound() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [1, 2, 3, 4, 6] {
        for d in [32, 64, 128, 256] {
            let m = bases_per_scale(n).unwrap();
            let schedule = make_schedule(max_base(d, m, n).unwrap(), d, m).unwrap();
            let target = (1.0 / n as f64).exp();
            for w in schedule.magnitudes.windows(2) {
                worst = worst.max((w[0] / w[1] - target).abs());
            }
            cases += 1;
        }
    }
    outcome(cases == 20 && worst < 1e-12, format!("{cases} cases, max ratio error {worst:.3e}"))
}

fn hexagonal_pattern() -> Outcome {
    let half = 25.0;
    let img = raster([-half, half, -half, half], 512, &VcoParams::hexagonal(1.0, 0.0)).unwrap();
    let peaks = img.peaks(2.0);
    let spacing = 4.0 * PI / 3f64.sqrt();
    let interior: Vec<[f64; 2]> = peaks
        .iter()
        .copied()
        .filter(|p| p[0].abs().max(p[1].abs()) < half - 1.5 * spacing)
        .collect();
    let mut spread: f64 = 0.0;
    let mut isolated = true;
    for p in &interior {
        let d = neighbor_distances(&peaks, *p);
        let six = &d[..6];
        let lo = six.iter().copied().fold(f64::MAX, f64::min);
        let hi = six.iter().copied().fold(0.0, f64::max);
        spread = spread.max((hi - lo) / (six.iter().sum::<f64>() / 6.0));
        isolated &= d[6] > 1.5 * hi;
    }
    let center = interior
        .iter()
        .copied()
        .min_by(|a, b| a[0].hypot(a[1]).total_cmp(&b[0].hypot(b[1])))
        .unwrap();
    let mismatch = img.rotation_mismatch(center, PI / 3.0, 2.0 * spacing);
    outcome(
        !interior.is_empty() && spread < 0.05 && isolated && mismatch < 0.02,
        format!(
            "{} interior peaks, neighbor spread {spread:.3e}, 60 deg mismatch {mismatch:.3e}",
            interior.len()
        ),
    )
}

fn kernel_shape() -> Outcome {
    let params = VcoParams::isotropic(2, 512, 0.5, 2.0, 3).unwrap();
    let h0 = shift_kernel(&params, &[0.0, 0.0]).unwrap();
    let mut rng = seeded(7);
    let mut peak = f64::MIN;
    for _ in 0..10_000 {
        let d = ball(&mut rng, 2, 40.0);
        peak = peak.max(shift_kernel(&params, &d).unwrap());
    }
    let envelope = radial_envelope(&params, 10.0, 360, 1).unwrap();
    outcome(
        peak <= h0 && envelope < 0.2 * h0,
        format!("max h(d)/h(0) {:.3}, envelope at 10 / h(0) {:.3}", peak / h0, envelope / h0),
    )
}

fn path_independence() -> Outcome {
    let mut rng = seeded(8);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 1 + case % 3;
        let mut params = VcoParams::isotropic(n, 4, 0.5, 2.0, case as u64).unwrap();
        params.baseline_freq = rng.random_range(0.5..10.0);
        params.gain = rng.random_range(0.1..2.0);
        // Dog-leg through a random waypoint, both legs at constant speed.
        let (t1, t2) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let waypoint = uniform(&mut rng, n, 10.0);
        let end = uniform(&mut rng, n, 10.0);
        let u: Vec<f64> = waypoint.iter().map(|w| w / t1).collect();
        let v: Vec<f64> = end.iter().zip(&waypoint).map(|(e, w)| (e - w) / t2).collect();
        let total = t1 + t2;
        let straight: Vec<f64> = end.iter().map(|e| e / total).collect();
        let dog_leg = [
            PathSample { t: 0.0, velocity: u.clone() },
            PathSample { t: t1, velocity: u },
            PathSample { t: t1, velocity: v.clone() },
            PathSample { t: total, velocity: v },
        ];
        let direct = [
            PathSample { t: 0.0, velocity: straight.clone() },
            PathSample { t: total, velocity: straight },
        ];
        for row in 0..4 {
            let a = vco_phase_along_path(&dog_leg, &params, row).unwrap();
            let b = vco_phase_along_path(&direct, &params, row).unwrap();
            let c = vco_phase_closed_form(total, &end, &params, row).unwrap();
            worst = worst.max((a - b).abs() / b.abs()).max((a - c).abs() / c.abs());
        }
    }
    outcome(worst < 1e-6, format!("max relative phase gap {worst:.3e}"))
}

fn shift_harness() -> Outcome {
    let rate = |method| {
        ShiftExperiment {
            encoder: EncoderSpec::new(method, 2, 64),
            tokens: 16,
            grid_size: 8,
            trials: 1000,
            shift_range: 100.0,
            seed: 9,
            temperature: None,
        }
        .run()
        .unwrap()
        .preservation_rate
    };
    let (grid, axial, table) = (rate(Method::Gridpe), rate(Method::RopeAxial), rate(Method::Table));
    outcome(
        grid == 1.0 && axial == 1.0 && table < 1.0,
        format!("1000 trials: gridpe {grid}, rope_axial {axial}, table {table}"),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    std::fs::write(path("cfg.json"), r#"{"n": 2, "head_dim": 24, "direction_mode": "random", "seed": 4}"#).unwrap();
    std::fs::write(path("pos.csv"), "x,y\n0,0\n1.5,-2\n-30.25,7\n").unwrap();
    let contents: String = (0..3)
        .map(|r| (0..24).map(|c| format!("{}", (r * 24 + c) as f64 * 0.1 - 3.0)).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    std::fs::write(path("content.csv"), format!("{}\n{contents}", (0..24).map(|c| format!("v{c}")).collect::<Vec<_>>().join(","))).unwrap();
    std::fs::write(path("params.json"), serde_json::to_string(&VcoParams::hexagonal(1.0, 0.2)).unwrap()).unwrap();

    let (cfg, pos, content, params) = (path("cfg.json"), path("pos.csv"), path("content.csv"), path("params.json"));
    let mut commands: Vec<Vec<String>> = vec![
        vec!["simplex", "--dim", "3"],
        vec!["simplex", "--dim", "4", "--mode", "random", "--seed", "11"],
        vec!["scales", "--dim", "2", "--head-dim", "64", "--json"],
        vec!["pattern", "--params", &params, "--extent", "-10,10,-10,10", "--res", "96"],
        vec!["kernel", "--params", &params, "--dir", "1,1", "--dmax", "20", "--samples", "64"],
        vec!["bench-attn", "--method", "rope_mixed", "--dim", "2", "--trials", "50", "--seed", "5", "--json"],
        vec!["verify", "--dim", "2", "--head-dim", "32", "--seed", "6"],
    ]
    .into_iter()
    .map(|c| c.into_iter().map(String::from).collect())
    .collect();
    for method in ["gridpe", "rope_axial", "rope_mixed", "sinusoidal", "table"] {
        let base = ["embed", "--config", &cfg, "--positions", &pos, "--method", method];
        commands.push(base.iter().map(|s| s.to_string()).collect());
        let mut with = commands.last().unwrap().clone();
        with.extend(["--contents".to_string(), content.clone()]);
        commands.push(with);
    }

    let mut failures = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|run| {
                let file = path(&format!("out_{i}_{run}"));
                let mut argv = vec!["gridpe".to_string()];
                argv.extend(cmd.iter().cloned());
                argv.extend(["--out".to_string(), file.clone()]);
                let code = gridpe_cli::run(argv, &mut Vec::new(), &mut Vec::new());
                assert_eq!(code, 0, "{cmd:?} exited {code}");
                std::fs::read(file).unwrap()
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            failures.push(cmd[0].clone());
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} commands, non-identical: {failures:?}", commands.len()),
    )
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "simplex geometry", Duration::from_secs(1), simplex_geometry),
        (2, "shift invariance", Duration::from_secs(10), shift_invariance),
        (3, "one-dimensional reduction", Duration::from_secs(1), one_dimensional_reduction),
        (4, "economy optimum", Duration::from_secs(1), economy_optimum),
        (5, "base bound consistency", Duration::from_secs(1), base_bound),
        (6, "hexagonal pattern", Duration::from_secs(30), hexagonal_pattern),
        (7, "kernel shape", Duration::from_secs(10), kernel_shape),
        (8, "path independence", Duration::from_secs(1), path_independence),
        (9, "shift-generalization harness", Duration::from_secs(60), shift_harness),
        (10, "cli determinism", Duration::from_secs(60), cli_determinism),
    ];
    let mut all = true;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed < budget;
        all &= pass;
        println!(
            "{} criterion {id:>2} {name}: {} ({:.3}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
