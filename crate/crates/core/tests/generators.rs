use antac_core::edge::EdgePair;
use antac_core::numerics::{cholesky, Matrix, RngStream};
use antac_core::simgen::{
    gen_gamma, gen_hetero_product, gen_magnified_block, gen_omega_homogeneous, gen_omega_table1,
    generate_truth, simulate_dataset, ModelSpec,
};

fn off_diagonal_fraction(m: &Matrix) -> f64 {
    let p = m.rows();
    let nz = EdgePair::all(p)
        .iter()
        .filter(|e| m[(e.i, e.j)] != 0.0)
        .count();
    nz as f64 / (p * (p - 1) / 2) as f64
}

#[test]
fn table_one_density_and_definiteness() {
    let m = gen_omega_table1(200, 0.025, 4.0, &mut RngStream::new(1, 0).rng()).unwrap();
    let frac = off_diagonal_fraction(&m);
    assert!((0.02..=0.03).contains(&frac), "fraction {frac}");
    assert!(cholesky(&m).is_ok());
    assert!(m.is_symmetric(0.0));
    assert!((0..200).all(|i| m[(i, i)] == 4.0));
}

#[test]
fn homogeneous_eigenvalue_floor() {
    let m = gen_omega_homogeneous(200, 0.025, &mut RngStream::new(2, 0).rng());
    assert!(m.is_symmetric(0.0));
    // Shifting by just under 1 must leave the matrix positive definite.
    let shifted = m.sub(&Matrix::identity(200).scale(1.0 - 1e-6)).unwrap();
    assert!(cholesky(&shifted).is_ok());
    let over = m.sub(&Matrix::identity(200).scale(1.0 + 1e-6)).unwrap();
    assert!(cholesky(&over).is_err());
}

#[test]
fn magnified_block_structure() {
    let m = gen_magnified_block(&mut RngStream::new(3, 0).rng()).unwrap();
    assert_eq!(m.shape(), (150, 150));
    for i in 0..50 {
        for j in 0..50 {
            assert_eq!(m[(50 + i, 50 + j)], 5.0 * m[(i, j)]);
            assert_eq!(m[(100 + i, 100 + j)], 10.0 * m[(i, j)]);
            for (bi, bj) in [(0, 1), (0, 2), (1, 2)] {
                assert_eq!(m[(50 * bi + i, 50 * bj + j)], 0.0);
            }
        }
    }
    assert!(cholesky(&m).is_ok());
    for e in EdgePair::all(50) {
        assert!([0.0, 0.4, 0.5].contains(&m[(e.i, e.j)]));
    }
}

#[test]
fn hetero_product_structure() {
    let m = gen_hetero_product(&mut RngStream::new(4, 0).rng()).unwrap();
    assert_eq!(m.shape(), (200, 200));
    for i in 0..100 {
        for j in 0..100 {
            assert_eq!(m[(100 + i, 100 + j)], 2.0 * m[(i, j)]);
        }
    }
    assert!(cholesky(&m).is_ok());
}

#[test]
fn gamma_sparsity() {
    let g = gen_gamma(200, 100, 0.05, &mut RngStream::new(5, 0).rng());
    let frac = g.as_slice().iter().filter(|v| **v != 0.0).count() as f64 / 20_000.0;
    assert!((0.04..=0.06).contains(&frac), "fraction {frac}");
}

#[test]
fn truth_is_seeded_and_replicates_differ() {
    let spec = ModelSpec::table_one(40, 20, 60, 0.05, 4.0, 77);
    let a = generate_truth(&spec, &mut RngStream::new(77, 0).rng()).unwrap();
    let b = generate_truth(&spec, &mut RngStream::new(77, 0).rng()).unwrap();
    assert_eq!(a, b);
    let r1 = simulate_dataset(&a, 60, &mut RngStream::new(77, 1).rng()).unwrap();
    let r1_again = simulate_dataset(&a, 60, &mut RngStream::new(77, 1).rng()).unwrap();
    let r2 = simulate_dataset(&a, 60, &mut RngStream::new(77, 2).rng()).unwrap();
    assert_eq!(r1, r1_again);
    assert_ne!(r1.y().as_slice(), r2.y().as_slice());
    assert_eq!((r1.n(), r1.p(), r1.q()), (60, 40, 20));
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = ModelSpec::magnified_block(100, 1);
    spec.p = 120;
    assert!(generate_truth(&spec, &mut RngStream::new(1, 0).rng()).is_err());
    let bad = ModelSpec::table_one(10, 5, 20, 1.5, 4.0, 1);
    assert!(generate_truth(&bad, &mut RngStream::new(1, 0).rng()).is_err());
}
