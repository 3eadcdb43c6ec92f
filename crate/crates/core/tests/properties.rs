use gridpe::embedding::{build_bank, feature_map, GridPEConfig};
use gridpe::kernel::{lattice_point, VcoParams};
use gridpe::scales::{make_schedule, max_base, optimal_ratio};
use gridpe::simplex::{gram, oriented_directions, DirectionMode, SimplexFrame};
use gridpe::Rotary;
use proptest::prelude::*;

/// Standard interleaved RoPE, written without reference to the crate.
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

fn vec_strategy(len: usize, bound: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-bound..bound, len)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_invariance(
        n in 1usize..=3,
        mode in prop_oneof![Just(DirectionMode::Fixed), Just(DirectionMode::Random)],
        seed in any::<u64>(),
        q in vec_strategy(64, 1.0),
        k in vec_strategy(64, 1.0),
        coords in vec_strategy(9, 50.0),
    ) {
        let bank = build_bank(&GridPEConfig::new(n, 64).with_mode(mode, seed)).unwrap();
        let x1 = &coords[0..n];
        let x2 = &coords[3..3 + n];
        let t: Vec<f64> = coords[6..6 + n].iter().map(|v| v * 2.0).collect();
        let y1: Vec<f64> = x1.iter().zip(&t).map(|(a, b)| a + b).collect();
        let y2: Vec<f64> = x2.iter().zip(&t).map(|(a, b)| a + b).collect();
        let a = bank.relative_score(&q, &k, x1, x2).unwrap();
        let b = bank.relative_score(&q, &k, &y1, &y2).unwrap();
        prop_assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn rotation_is_isometry(n in 1usize..=4, v in vec_strategy(48, 3.0), x in vec_strategy(4, 100.0)) {
        let bank = build_bank(&GridPEConfig::new(n, 48)).unwrap();
        let r = bank.rotate(&v, &x[..n]).unwrap();
        prop_assert!((r.norm() - norm(&v)).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_bank_is_rope(v in vec_strategy(64, 1.0), pos in -1000.0f64..1000.0) {
        let bank = build_bank(&GridPEConfig::new(1, 64).with_base(10_000.0)).unwrap();
        let got = bank.rotate(&v, &[pos]).unwrap();
        let want = reference_rope(&v, pos, 10_000.0);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_map_realizes_cosine_kernel(n in 1usize..=3, x in vec_strategy(3, 20.0), y in vec_strategy(3, 20.0)) {
        let bank = build_bank(&GridPEConfig::new(n, 64)).unwrap();
        let zx = feature_map(&x[..n], &bank).unwrap();
        let zy = feature_map(&y[..n], &bank).unwrap();
        let direct: f64 = (0..bank.num_vectors())
            .map(|r| {
                let w = bank.row(r);
                (0..n).map(|a| w[a] * (x[a] - y[a])).sum::<f64>().cos()
            })
            .sum();
        prop_assert!((zx.dot(&zy) - direct).abs() < 1e-10);
    }

    #[test]
    fn random_orientation_keeps_gram(n in 1usize..=8, s1 in any::<u64>(), s2 in any::<u64>()) {
        let frame = SimplexFrame::new(n).unwrap();
        let a = oriented_directions(&frame, DirectionMode::Random, s1).unwrap();
        let b = oriented_directions(&frame, DirectionMode::Random, s2).unwrap();
        prop_assert!((gram(&a) - gram(&b)).abs().max() < 1e-12);
    }

    #[test]
    fn bound_caps_schedule_ratio(n in 1usize..=6, m in 1usize..=7, extra in 0usize..100) {
        let d = 2 * m + 2 * extra;
        let schedule = make_schedule(max_base(d, m, n).unwrap(), d, m).unwrap();
        prop_assert!(schedule.ratio() <= optimal_ratio(n).unwrap() + 1e-12);
        for w in schedule.magnitudes.windows(2) {
            prop_assert!((w[0] / w[1] - schedule.ratio()).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_lattice_is_reachable(n in 2usize..=5, ks in proptest::collection::vec(-3i64..=3, 5)) {
        let bank = build_bank(&GridPEConfig::new(n, 2 * (n + 1))).unwrap();
        let rows: Vec<Vec<f64>> = (0..n + 1).map(|r| bank.row(r).to_vec()).collect();
        // Simplex rows sum to zero, so the row lattice is {k : sum(k) = 0}.
        let mut k: Vec<i64> = ks[..n].to_vec();
        k.push(-k.iter().sum::<i64>());
        let sol = lattice_point(&rows, &k).unwrap();
        prop_assert!(sol.residual < 1e-8);
    }
}

#[test]
fn simplex_invariants_for_small_dimensions() {
    for n in 1..=8 {
        let frame = SimplexFrame::new(n).unwrap();
        let p = frame.projected().unwrap();
        let norms: Vec<f64> = p.row_iter().map(|r| r.norm()).collect();
        let expected = (n as f64 / (n + 1) as f64).sqrt();
        assert!(norms.iter().all(|v| (v - expected).abs() < 1e-12));
        let g = gram(p);
        for i in 0..=n {
            for j in 0..=n {
                if i != j {
                    assert!((g[(i, j)] / g[(i, i)] + 1.0 / n as f64).abs() < 1e-12);
                }
            }
        }
        assert!(p.row_sum().norm() < 1e-12);
        let sv = p.clone().singular_values();
        assert_eq!(sv.iter().filter(|s| **s > 1e-10).count(), n);
        assert!((gram(p) - gram(frame.raw_vertices())).abs().max() < 1e-12);
        let lifted = frame.singular_values().unwrap();
        assert!(lifted[n - 1] > 1e-10 && lifted[n] < 1e-10);
    }
}

#[test]
fn grid_cell_rows_from_bank_are_periodic() {
    let bank = build_bank(&GridPEConfig::new(2, 6).with_base(10.0)).unwrap();
    let params = VcoParams {
        baseline_freq: 0.0,
        gain: 1.0,
        wave_vectors: (0..3).map(|r| bank.row(r).to_vec()).collect(),
        coefficients: vec![1.0; 3],
        t0: 0.0,
    };
    let p = lattice_point(&params.wave_vectors, &[2, -1, -1]).unwrap();
    let x = [0.4, 1.1];
    let moved = [x[0] + p.point[0], x[1] + p.point[1]];
    let a = gridpe::kernel::grid_activation(&x, &params).unwrap();
    let b = gridpe::kernel::grid_activation(&moved, &params).unwrap();
    assert!((a - b).abs() < 1e-9);
}
