use contfit_core::bspline::{
    build_design_matrix, cubic_kernel, eval_spline, ridge_fit, KnotConvention, RidgeProblem, SplineConfig,
};
use contfit_core::{gen_samples, nrmse, rect2d, split_samples, RngSeed, SampleSet};
use proptest::prelude::*;

/// Plain Gaussian elimination with partial pivoting on a dense copy.
fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Vec<f64> {
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs())).unwrap();
        if p != c {
            for k in 0..n {
                a.swap(c * n + k, p * n + k);
            }
            b.swap(c, p);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x
}

fn random_samples(seed: u64, n: usize) -> SampleSet {
    gen_samples(n, RngSeed(seed), |x, y| (x * 1.7).sin() + y * y * 0.3 - rect2d(x, y)).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn kernel_partition_of_unity(t in -50.0f64..50.0) {
        let s: f64 = (-3i32..=3).map(|k| cubic_kernel(t - (t.floor() + k as f64))).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_c2_at_knots(k in -2i32..=2) {
        let h = 1e-4;
        let x = k as f64;
        let f = cubic_kernel;
        let d1 = |x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = |x: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let e = 1e-6;
        prop_assert!((f(x - e) - f(x + e)).abs() < 1e-5);
        prop_assert!((d1(x - 5.0 * h) - d1(x + 5.0 * h)).abs() < 1e-2);
        prop_assert!((d2(x - 5.0 * h) - d2(x + 5.0 * h)).abs() < 1e-2);
    }

    #[test]
    fn design_rows_sum_to_one_inside(seed in 0u64..1000, m in 4usize..40, cell in any::<bool>()) {
        let conv = if cell { KnotConvention::CellCentered } else { KnotConvention::Endpoint };
        let cfg = SplineConfig::new(m, 0.0, 3.0).unwrap().with_convention(conv);
        let s = random_samples(seed, 50);
        let phi = build_design_matrix(&s, &cfg);
        // interior: every axis position has its four supporting basis functions
        let inside = |v: f64| cfg.center(1) <= v && v <= cfg.center(m);
        for r in 0..phi.n_rows() {
            let [x, y] = s.coords()[r];
            if inside(x) && inside(y) {
                let sum: f64 = phi.row(r).map(|(_, v)| v).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn banded_solve_matches_dense_elimination(seed in 0u64..1000, n in 20usize..200, m in 2usize..=10, lambda in 1e-6f64..1.0) {
        let cfg = SplineConfig::on_unit_experiment(m).unwrap();
        let s = random_samples(seed, n);
        let phi = build_design_matrix(&s, &cfg);
        let k = phi.n_cols();
        let mut dense = vec![0.0; k * k];
        for r in 0..phi.n_rows() {
            let row: Vec<_> = phi.row(r).collect();
            for &(i, a) in &row {
                for &(j, b) in &row {
                    dense[i * k + j] += a * b;
                }
            }
        }
        for i in 0..k {
            dense[i * k + i] += lambda;
        }
        let rhs = phi.transpose_mul(s.values());
        let want = dense_solve(dense, rhs.clone(), k);
        let got = ridge_fit(&phi, s.values(), lambda).unwrap();
        let err: Vec<f64> = got.iter().zip(&want).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&err) <= 1e-8 * norm(&want).max(1e-300), "{} vs {}", norm(&err), norm(&want));
    }

    #[test]
    fn ridge_norms_are_monotone_in_lambda(seed in 0u64..1000, m in 3usize..12, a in -4.0f64..2.0, step in 0.1f64..2.0) {
        let cfg = SplineConfig::on_unit_experiment(m).unwrap();
        let s = random_samples(seed, 300);
        let phi = build_design_matrix(&s, &cfg);
        let problem = RidgeProblem::from_design(&phi, s.values());
        let (l1, l2) = (10f64.powf(a), 10f64.powf(a + step));
        let c1 = problem.solve(l1).unwrap();
        let c2 = problem.solve(l2).unwrap();
        let resid = |c: &[f64]| {
            let p = phi.mul_vec(c);
            norm(&p.iter().zip(s.values()).map(|(p, y)| p - y).collect::<Vec<_>>())
        };
        prop_assert!(norm(&c2.coeffs) <= norm(&c1.coeffs) * (1.0 + 1e-10));
        prop_assert!(resid(&c2.coeffs) >= resid(&c1.coeffs) * (1.0 - 1e-10));
    }

    #[test]
    fn nrmse_is_scale_invariant(v in prop::collection::vec(-5.0f64..5.0, 2..30), c in 0.01f64..100.0) {
        let truth: Vec<f64> = v.iter().map(|x| x + 10.0).collect();
        let pred: Vec<f64> = v.iter().map(|x| x * 0.9).collect();
        let a = nrmse(&pred, &truth).unwrap();
        let scale = |w: &[f64]| w.iter().map(|x| x * c).collect::<Vec<_>>();
        let b = nrmse(&scale(&pred), &scale(&truth)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn split_partitions_samples(n in 40usize..400, f in 0.05f64..0.95, seed in 0u64..1000) {
        let s = split_samples(&random_samples(seed, n), f, RngSeed(seed)).unwrap();
        let sp = s.split().unwrap();
        let mut all: Vec<usize> = sp.train.iter().chain(&sp.validation).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(sp.train.len(), (f * n as f64).round() as usize);
    }
}

#[test]
fn spline_fit_is_deterministic() {
    let cfg = SplineConfig::on_unit_experiment(20).unwrap();
    let fit = || {
        let s = gen_samples(2000, RngSeed(3), rect2d).unwrap();
        RidgeProblem::new(&s, cfg.clone()).solve(1e-2).unwrap()
    };
    let (a, b) = (fit(), fit());
    assert_eq!(a.coeffs, b.coeffs);
    let pts = [[0.5, 0.5], [1.5, 2.0]];
    assert_eq!(eval_spline(&a, &pts), eval_spline(&b, &pts));
}
