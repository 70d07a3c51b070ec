//! Seeded fixtures shared by the benchmarks.

use rankmin_core::harness::{gen_gaussian_operator, gen_reference, gen_sampling_operator};
use rankmin_core::{ProblemInstance, Result};

/// Planted rank-`r` problem with a Gaussian operator of `l` rows.
pub fn gaussian_problem(n: usize, m: usize, r: usize, l: usize, seed: u64) -> Result<ProblemInstance> {
    let x = gen_reference(n, m, r, seed)?;
    let map = gen_gaussian_operator(n, m, l, seed ^ 0x5eed)?;
    ProblemInstance::from_reference(map, x, r, seed)
}

/// Planted rank-`r` completion problem with `ceil(c_mf * r (n + m - r))` samples.
pub fn sampling_problem(n: usize, m: usize, r: usize, c_mf: f64, seed: u64) -> Result<ProblemInstance> {
    let l = (c_mf * (r * (n + m - r)) as f64).ceil() as usize;
    let x = gen_reference(n, m, r, seed)?;
    let map = gen_sampling_operator(n, m, l, r, seed ^ 0x5eed)?;
    ProblemInstance::from_reference(map, x, r, seed)
}
