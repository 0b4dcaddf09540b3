//! Dense kernels, distribution functions and seeded sampling shared by the
//! estimation modules.

mod cholesky;
mod dist;
mod matrix;
mod rng;

pub use cholesky::{cholesky, CholeskyFactor, PIVOT_TOLERANCE};
pub use dist::{
    std_normal_cdf, std_normal_quantile, student_t_cdf, student_t_quantile, student_t_sf,
};
pub use matrix::Matrix;
pub use rng::{mvn_sample, mvn_sample_with, standard_normal_matrix, RngStream};

use rayon::prelude::*;

/// Map `f` over `items` on a pool of `threads` workers, returning results in
/// input order. `threads <= 1` runs inline on the calling thread.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
