use antac_core::numerics::{cholesky, standard_normal_matrix, Matrix, RngStream};
use antac_core::scaled_lasso::{
    kkt_check, lasso_inner, soft_threshold, solve_scaled_lasso, ScaledLassoProblem, SolverOptions,
};
use rand::Rng;

fn random_problem(n: usize, m: usize, seed: u64) -> ScaledLassoProblem {
    let mut rng = RngStream::new(seed, 0).rng();
    let mut x = standard_normal_matrix(n, m, &mut rng);
    // Uneven column scales exercise the penalty weights.
    for k in 0..m {
        let s: f64 = rng.random_range(0.2..5.0);
        for i in 0..n {
            x[(i, k)] *= s;
        }
    }
    let mut b = vec![0.0; m];
    for bk in b.iter_mut().take(m.min(5)) {
        *bk = rng.random_range(-2.0..2.0);
    }
    let noise = standard_normal_matrix(n, 1, &mut rng);
    let y: Vec<f64> = (0..n)
        .map(|i| (0..m).map(|k| x[(i, k)] * b[k]).sum::<f64>() + noise[(i, 0)])
        .collect();
    let lambda = (2.0 * (m as f64).ln() / n as f64).sqrt();
    ScaledLassoProblem::new(y, x, lambda).unwrap()
}

fn objective(r: &[f64], d: &[f64], b: f64, theta: f64, lambda: f64) -> f64 {
    let n = r.len() as f64;
    let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rss: f64 = r.iter().zip(d).map(|(ri, di)| (ri - b * di).powi(2)).sum();
    rss / (2.0 * n * theta) + theta / 2.0 + lambda * dn / n.sqrt() * b.abs()
}

/// Zooming 2-D grid search over (b, θ); the objective is jointly convex.
fn grid_search(r: &[f64], d: &[f64], lambda: f64) -> (f64, f64) {
    let n = r.len() as f64;
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt() / n.sqrt();
    let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt() / n.sqrt();
    let (mut b_lo, mut b_hi) = (-4.0 * rn / dn, 4.0 * rn / dn);
    let (mut t_lo, mut t_hi) = (1e-6 * rn, 2.0 * rn);
    let steps = 24;
    let (mut best_b, mut best_t) = (0.0, rn);
    for _ in 0..60 {
        let mut best = f64::INFINITY;
        for a in 0..=steps {
            let b = b_lo + (b_hi - b_lo) * a as f64 / steps as f64;
            for c in 0..=steps {
                let t = t_lo + (t_hi - t_lo) * c as f64 / steps as f64;
                let v = objective(r, d, b, t, lambda);
                if v < best {
                    best = v;
                    best_b = b;
                    best_t = t;
                }
            }
        }
        let (wb, wt) = ((b_hi - b_lo) / 4.0, (t_hi - t_lo) / 4.0);
        b_lo = best_b - wb;
        b_hi = best_b + wb;
        t_lo = (best_t - wt).max(1e-9 * rn);
        t_hi = best_t + wt;
    }
    (best_b, best_t)
}

#[test]
fn single_predictor_matches_grid_search() {
    let options = SolverOptions::default();
    for seed in 0..20u64 {
        let mut rng = RngStream::new(seed, 7).rng();
        let n = 30 + 10 * (seed as usize % 5);
        let d = standard_normal_matrix(n, 1, &mut rng);
        let slope: f64 = rng.random_range(-1.5..1.5);
        let e = standard_normal_matrix(n, 1, &mut rng);
        let r: Vec<f64> = (0..n).map(|i| slope * d[(i, 0)] + e[(i, 0)]).collect();
        let lambda = [0.05, 0.2, 0.5][seed as usize % 3];
        let fit = solve_scaled_lasso(
            &ScaledLassoProblem::new(r.clone(), d.clone(), lambda).unwrap(),
            &options,
        )
        .unwrap();
        let (b, t) = grid_search(&r, d.as_slice(), lambda);
        assert!(
            (fit.coefficients[0] - b).abs() < 1e-4,
            "seed {seed}: b {} vs {b}",
            fit.coefficients[0]
        );
        assert!(
            (fit.noise_level - t).abs() < 1e-4,
            "seed {seed}: θ {} vs {t}",
            fit.noise_level
        );
    }
}

#[test]
fn random_problems_satisfy_kkt() {
    let options = SolverOptions::default();
    for (idx, (n, m)) in [(50, 20), (50, 300), (400, 20), (400, 300)]
        .into_iter()
        .enumerate()
    {
        for rep in 0..5u64 {
            let problem = random_problem(n, m, 100 * idx as u64 + rep);
            let fit = solve_scaled_lasso(&problem, &options).unwrap();
            assert!(fit.converged, "n={n} m={m} rep={rep}");
            let report = kkt_check(&problem, &fit, 1e-6);
            assert!(
                report.passed,
                "n={n} m={m}: worst {:e}",
                report.worst_violation
            );
            assert!(report.theta_violation <= 1e-8);
            assert!(fit.kkt_residual <= 1e-6 * problem.lambda());
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "objective rose: {:?}", w);
            }
        }
    }
}

#[test]
fn orthogonal_design_closed_form() {
    // Two orthogonal ±1 columns, each with norm √n.
    let n = 8;
    let w1 = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
    let w2 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let w = Matrix::from_columns(n, &[w1.to_vec(), w2.to_vec()]).unwrap();
    let r = [2.0, 0.5, 1.5, -0.3, -1.0, 0.2, -0.7, 0.4];
    for mu in [0.0, 0.1, 0.3, 0.6, 2.0] {
        let d = lasso_inner(&r, &w, mu, &SolverOptions::default()).unwrap();
        for (k, col) in [w1, w2].iter().enumerate() {
            let c: f64 = col.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            assert!(
                (d[k] - soft_threshold(c, mu)).abs() < 1e-12,
                "mu={mu} k={k}"
            );
        }
    }
}

#[test]
fn zero_penalty_is_least_squares() {
    let (n, m) = (60, 6);
    let mut rng = RngStream::new(42, 1).rng();
    let raw = standard_normal_matrix(n, m, &mut rng);
    let cols: Vec<Vec<f64>> = raw
        .columns()
        .into_iter()
        .map(|c| {
            let s = (n as f64).sqrt() / c.iter().map(|v| v * v).sum::<f64>().sqrt();
            c.iter().map(|v| v * s).collect()
        })
        .collect();
    let w = Matrix::from_columns(n, &cols).unwrap();
    let y = standard_normal_matrix(n, 1, &mut rng);
    let r = y.as_slice().to_vec();
    let options = SolverOptions {
        inner_tolerance: 1e-13,
        max_sweeps: 100_000,
        ..SolverOptions::default()
    };
    let d = lasso_inner(&r, &w, 0.0, &options).unwrap();

    let wtw = w.transpose().matmul(&w).unwrap();
    let wtr = w.transpose().matmul(&y).unwrap();
    let ls = cholesky(&wtw).unwrap().solve(wtr.as_slice());
    for k in 0..m {
        assert!((d[k] - ls[k]).abs() < 1e-6, "k={k}: {} vs {}", d[k], ls[k]);
    }
}

#[test]
fn scale_equivariance() {
    let options = SolverOptions::default();
    for seed in 0..5 {
        let base = random_problem(80, 30, 900 + seed);
        let fit = solve_scaled_lasso(&base, &options).unwrap();
        for c in [0.01, 3.7, 250.0] {
            let scaled: Vec<f64> = base.response().iter().map(|v| v * c).collect();
            let p = ScaledLassoProblem::new(scaled, base.design().clone(), base.lambda()).unwrap();
            let f = solve_scaled_lasso(&p, &options).unwrap();
            let scale = fit
                .coefficients
                .iter()
                .fold(fit.noise_level, |a, b| a.max(b.abs()));
            assert!((f.noise_level - c * fit.noise_level).abs() <= 1e-10 * c * scale);
            for (a, b) in f.coefficients.iter().zip(&fit.coefficients) {
                assert!(
                    (a - c * b).abs() <= 1e-10 * c * scale,
                    "c={c}: {a} vs {}",
                    c * b
                );
            }
        }
    }
}

#[test]
fn permutation_equivariance() {
    let options = SolverOptions::default();
    let base = random_problem(100, 25, 77);
    let fit = solve_scaled_lasso(&base, &options).unwrap();
    let m = base.design().cols();
    let perm: Vec<usize> = (0..m).map(|k| (7 * k + 3) % m).collect();
    let cols = base.design().columns();
    let permuted: Vec<Vec<f64>> = perm.iter().map(|&k| cols[k].clone()).collect();
    let design = Matrix::from_columns(base.n(), &permuted).unwrap();
    let p = ScaledLassoProblem::new(base.response().to_vec(), design, base.lambda()).unwrap();
    let f = solve_scaled_lasso(&p, &options).unwrap();
    assert!((f.noise_level - fit.noise_level).abs() < 1e-7);
    for (slot, &k) in perm.iter().enumerate() {
        assert!((f.coefficients[slot] - fit.coefficients[k]).abs() < 1e-6);
        assert_eq!(f.coefficients[slot] == 0.0, fit.coefficients[k] == 0.0);
    }
}
