use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{cholesky, CholeskyFactor, Matrix};
use crate::error::Result;

/// A reproducible random stream keyed by `(seed, stream_id)`.
///
/// Each stream id selects an independent ChaCha stream under the same key, so
/// replicate `r` can be regenerated without touching any other replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("finite normal draws")
}

/// `n` rows drawn i.i.d. from `N(0, Ω⁻¹)` given `Ω = L·Lᵀ`: each row solves
/// `Lᵀ·z = u` for a standard-normal `u`.
pub fn mvn_sample_with<R: Rng + ?Sized>(factor: &CholeskyFactor, n: usize, rng: &mut R) -> Matrix {
    let p = factor.dim();
    let mut data = Vec::with_capacity(n * p);
    let mut u = vec![0.0; p];
    for _ in 0..n {
        for v in u.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        factor.solve_upper_in_place(&mut u);
        data.extend_from_slice(&u);
    }
    Matrix::from_vec(n, p, data).expect("finite samples")
}

pub fn mvn_sample(omega: &Matrix, n: usize, stream: &RngStream) -> Result<Matrix> {
    let factor = cholesky(omega)?;
    Ok(mvn_sample_with(&factor, n, &mut stream.rng()))
}
