//! Random problem generation, outcome classification and the experiment
//! loop with its gamma-decline sensitivity reruns.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acm::{vec_irls_run, VecIrlsConfig, VectorProblem};
use crate::airls::{airls_run, AirlsConfig, RankChoice};
use crate::error::{Error, Result};
use crate::irls::{irls_run, GammaSchedule, IrlsConfig, RecoveryRef, Termination};
use crate::linalg::{pinv_and_kernel, singular_values, ThinSvd};
use crate::linops::{LinearMap, ProblemInstance, FULL_RANK_TOL};

/// Default `epsilon` for `rank_eps` and `q_eps`.
pub const RANK_EPS: f64 = 1e-6;
/// Relative Frobenius error accepted as recovery of the reference.
pub const RECOVERY_TOL: f64 = 1e-4;
/// Early-stop threshold during solver runs.
pub const EARLY_STOP_TOL: f64 = 1e-6;
/// Relative residual above which an outcome is a strong fail.
pub const RESIDUAL_TOL: f64 = 1e-6;
pub const OPERATOR_RETRIES: usize = 10;
pub const COVERAGE_ATTEMPTS: usize = 10_000;
/// Worker count override for [`run_experiment`].
pub const WORKERS_ENV: &str = "RANKMIN_WORKERS";

/// Gaussian `Y (n x r)` times Gaussian `Z (r x m)`.
pub fn gen_reference(n: usize, m: usize, r: usize, seed: u64) -> Result<DMatrix<f64>> {
    if r == 0 || r > n.min(m) {
        return Err(Error::Domain(format!("rank must lie in 1..={}, got {r}", n.min(m))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = DMatrix::<f64>::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
    let z = DMatrix::<f64>::from_fn(r, m, |_, _| StandardNormal.sample(&mut rng));
    Ok(y * z)
}

/// Dense `l x nm` operator with standard normal entries and full row rank.
pub fn gen_gaussian_operator(n: usize, m: usize, l: usize, seed: u64) -> Result<LinearMap> {
    if l == 0 || l >= n * m {
        return Err(Error::Domain(format!("need 0 < l < nm = {}, got {l}", n * m)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..OPERATOR_RETRIES {
        let mat = DMatrix::from_fn(l, n * m, |_, _| StandardNormal.sample(&mut rng));
        let map = LinearMap::dense(n, m, mat)?;
        match map.check_full_rank() {
            Ok(()) => return Ok(map),
            Err(Error::DegenerateOperator { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted {
        attempts: OPERATOR_RETRIES,
    })
}

/// `l` distinct uniformly drawn entries with at least `r` in every row and
/// every column; whole index sets are redrawn until the coverage holds.
pub fn gen_sampling_operator(n: usize, m: usize, l: usize, r: usize, seed: u64) -> Result<LinearMap> {
    if l > n * m || l < r * n.max(m) {
        return Err(Error::CoverageInfeasible { attempts: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..COVERAGE_ATTEMPTS {
        let mut flat = rand::seq::index::sample(&mut rng, n * m, l).into_vec();
        let mut rows = vec![0usize; n];
        let mut cols = vec![0usize; m];
        for &p in &flat {
            rows[p % n] += 1;
            cols[p / n] += 1;
        }
        if rows.iter().chain(&cols).all(|&c| c >= r) {
            flat.sort_unstable();
            return LinearMap::sampling(n, m, flat.into_iter().map(|p| (p % n, p / n)).collect());
        }
    }
    Err(Error::CoverageInfeasible {
        attempts: COVERAGE_ATTEMPTS,
    })
}

fn rank_of_spectrum(sigma: &[f64], eps: f64) -> usize {
    let fro = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    sigma.iter().filter(|&&s| s > eps * fro).count()
}

/// `max { i : sigma_i(X) > eps ||X||_F }`, zero for `X = 0`.
pub fn rank_eps(x: &DMatrix<f64>, eps: f64) -> usize {
    rank_of_spectrum(&singular_values(x), eps)
}

fn q_of_spectra(alg: &[f64], rs: &[f64], eps: f64) -> f64 {
    let (ra, rr) = (rank_of_spectrum(alg, eps), rank_of_spectrum(rs, eps));
    match ra.cmp(&rr) {
        std::cmp::Ordering::Less => 0.0,
        std::cmp::Ordering::Greater => f64::INFINITY,
        // product of squared ratios, accumulated pairwise to avoid overflow
        std::cmp::Ordering::Equal => (0..ra).map(|i| (alg[i] / rs[i]).powi(2)).product(),
    }
}

/// Limit quotient of the `gamma`-determinants of `X_alg` and `X_rs`:
/// 0 or infinity when their `rank_eps` differ, otherwise the ratio of the
/// products of the leading squared singular values.
pub fn q_eps(x_alg: &DMatrix<f64>, x_rs: &DMatrix<f64>, eps: f64) -> f64 {
    q_of_spectra(&singular_values(x_alg), &singular_values(x_rs), eps)
}

/// Alternate rank-`r` truncation and projection onto `L^{-1}(y)`, ending on
/// the affine set, until the move stalls or `sweeps` rounds are done.
pub fn post_iterate(x: &DMatrix<f64>, problem: &ProblemInstance, r: usize, sweeps: usize) -> Result<DMatrix<f64>> {
    if r == 0 {
        return Err(Error::Domain("post-iteration rank must be positive".into()));
    }
    let mut cur = problem.map.project_affine(&problem.y, x)?;
    for _ in 0..sweeps {
        let low = ThinSvd::new(&cur).truncated(r);
        let next = problem.map.project_affine(&problem.y, &low)?;
        let moved = (&next - &cur).norm();
        cur = next;
        if moved < 1e-14 * cur.norm() {
            break;
        }
    }
    Ok(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Improvement,
    Success,
    WeakFail,
    StrongFail,
}

impl Category {
    pub fn is_fail(self) -> bool {
        matches!(self, Category::WeakFail | Category::StrongFail)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Improvement => "improvement",
            Category::Success => "success",
            Category::WeakFail => "weak_fail",
            Category::StrongFail => "strong_fail",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "improvement" => Category::Improvement,
            "success" => Category::Success,
            "weak_fail" => Category::WeakFail,
            "strong_fail" => Category::StrongFail,
            _ => return None,
        })
    }
}

/// Category from the relative residual and the quotient `Q`.
pub fn category(residual_rel: f64, q: f64) -> Category {
    if !(residual_rel <= RESIDUAL_TOL) || q == f64::INFINITY || q.is_nan() {
        Category::StrongFail
    } else if q >= 1.005 {
        Category::WeakFail
    } else if q > 0.98 {
        Category::Success
    } else {
        Category::Improvement
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub category: Category,
    pub recovered: bool,
    pub q: f64,
    pub residual_rel: f64,
    pub rel_error: f64,
}

fn verdict(residual_rel: f64, q: f64, rel_error: f64) -> Verdict {
    let category = category(residual_rel, q);
    Verdict {
        category,
        recovered: category == Category::Success && rel_error <= RECOVERY_TOL,
        q,
        residual_rel,
        rel_error,
    }
}

/// Compare `x_alg` with the reference of `problem`.
pub fn classify(x_alg: &DMatrix<f64>, problem: &ProblemInstance, eps: f64) -> Result<Verdict> {
    let reference = problem
        .reference
        .as_ref()
        .ok_or_else(|| Error::Domain("classification needs a reference solution".into()))?;
    let rs = &reference.matrix;
    Ok(verdict(
        problem.relative_residual(x_alg)?,
        q_eps(x_alg, rs, eps),
        (x_alg - rs).norm() / rs.norm(),
    ))
}

fn sorted_magnitudes(x: &DVector<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Vector analogue of [`classify`]: cardinalities play the part of ranks.
pub fn classify_vector(x_alg: &DVector<f64>, problem: &VectorProblem, eps: f64) -> Result<Verdict> {
    let rs = problem
        .reference
        .as_ref()
        .ok_or_else(|| Error::Domain("classification needs a reference solution".into()))?;
    Ok(verdict(
        problem.relative_residual(x_alg),
        q_of_spectra(&sorted_magnitudes(x_alg), &sorted_magnitudes(rs), eps),
        (x_alg - rs).norm() / rs.norm(),
    ))
}

/// Vector analogue of [`post_iterate`]: keep the `s` largest entries, then
/// project back onto the affine set.
pub fn post_iterate_vector(x: &DVector<f64>, problem: &VectorProblem, s: usize, sweeps: usize) -> Result<DVector<f64>> {
    let (pinv, _) = pinv_and_kernel(&problem.map, FULL_RANK_TOL)?;
    let project = |v: &DVector<f64>| v - &pinv * (&problem.map * v - &problem.y);
    let mut cur = project(x);
    for _ in 0..sweeps {
        let mut order: Vec<usize> = (0..cur.len()).collect();
        order.sort_by(|&a, &b| cur[b].abs().total_cmp(&cur[a].abs()));
        let mut low = DVector::zeros(cur.len());
        for &i in order.iter().take(s) {
            low[i] = cur[i];
        }
        let next = project(&low);
        let moved = (&next - &cur).norm();
        cur = next;
        if moved < 1e-14 * cur.norm() {
            break;
        }
    }
    Ok(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Gaussian,
    Sampling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Irls,
    Airls,
    /// Vector cardinality minimization; `n` is the length, `r` the sparsity, `m` must be 1.
    Acm,
}

fn default_nu0() -> f64 {
    1.2
}
fn default_post_sweeps() -> usize {
    200
}
fn default_iteration_cap() -> usize {
    500_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// Number of measurements; exactly one of `l` and `c_mf` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// Oversampling factor: `l = ceil(c_mf * r (n + m - r))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_mf: Option<f64>,
    pub operator: OperatorKind,
    pub solver: SolverKind,
    pub p: f64,
    pub trials: usize,
    pub k_max: usize,
    pub base_seed: u64,
    #[serde(default = "default_nu0")]
    pub nu0: f64,
    #[serde(default = "default_post_sweeps")]
    pub post_sweeps: usize,
    /// Iteration (or sweep) budget of a single rerun.
    #[serde(default = "default_iteration_cap")]
    pub iteration_cap: usize,
    /// AIRLS factor rank; the rank bound of the problem size when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub airls_rank: Option<usize>,
}

impl ExperimentConfig {
    pub fn measurements(&self) -> Result<usize> {
        match (self.l, self.c_mf) {
            (Some(l), None) => Ok(l),
            (None, Some(c)) if c > 0.0 => Ok((c * (self.r * (self.n + self.m - self.r)) as f64).ceil() as usize),
            (None, Some(c)) => Err(Error::Domain(format!("c_mf must be positive, got {c}"))),
            _ => Err(Error::Domain("set exactly one of l and c_mf".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.measurements()?;
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if self.r == 0 || (self.solver != SolverKind::Acm && self.r > self.n.min(self.m)) {
            return Err(Error::Domain(format!("rank {} out of range", self.r)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Domain(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if !(self.nu0 > 1.0) {
            return Err(Error::Domain(format!("nu0 must exceed 1, got {}", self.nu0)));
        }
        if self.iteration_cap == 0 {
            return Err(Error::Domain("iteration_cap must be positive".into()));
        }
        match self.solver {
            SolverKind::Acm => {
                if self.m != 1 || self.operator != OperatorKind::Gaussian {
                    return Err(Error::Domain("acm runs need m = 1 and a gaussian operator".into()));
                }
                if self.r > self.n || l >= self.n {
                    return Err(Error::Domain("acm runs need r <= n and l < n".into()));
                }
            }
            SolverKind::Airls if self.operator == OperatorKind::Gaussian => {
                return Err(Error::Domain("airls runs need a sampling operator".into()))
            }
            _ => {
                if l >= self.n * self.m {
                    return Err(Error::Domain(format!("need l < nm, got {l}")));
                }
            }
        }
        Ok(())
    }
}

/// Seeds for the reference, the operator and the solver start of one trial.
pub fn trial_seeds(seed: u64) -> [u64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [rng.next_u64(), rng.next_u64(), rng.next_u64()]
}

/// Decay factor of sensitivity level `k`: `nu_k^{-1}` with `nu_k = nu0^{2^{-k}}`.
pub fn decay_factor(nu0: f64, k: usize) -> f64 {
    nu0.powf(-(0.5f64).powi(k as i32))
}

#[derive(Clone, Debug)]
pub enum TrialProblem {
    Matrix(ProblemInstance),
    Vector(VectorProblem),
}

/// The problem of trial seed `seed`.
pub fn build_problem(config: &ExperimentConfig, seed: u64) -> Result<TrialProblem> {
    let [ref_seed, op_seed, _] = trial_seeds(seed);
    let l = config.measurements()?;
    let (n, m, r) = (config.n, config.m, config.r);
    if config.solver == SolverKind::Acm {
        let mut rng = ChaCha8Rng::seed_from_u64(ref_seed);
        let support = rand::seq::index::sample(&mut rng, n, r);
        let mut x = DVector::zeros(n);
        for i in support {
            x[i] = StandardNormal.sample(&mut rng);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(op_seed);
        for _ in 0..OPERATOR_RETRIES {
            let a = DMatrix::from_fn(l, n, |_, _| StandardNormal.sample(&mut rng));
            if pinv_and_kernel(&a, FULL_RANK_TOL).is_ok() {
                return Ok(TrialProblem::Vector(VectorProblem::from_reference(a, x)?));
            }
        }
        return Err(Error::RetriesExhausted {
            attempts: OPERATOR_RETRIES,
        });
    }
    let reference = gen_reference(n, m, r, ref_seed)?;
    let map = match config.operator {
        OperatorKind::Gaussian => gen_gaussian_operator(n, m, l, op_seed)?,
        OperatorKind::Sampling => gen_sampling_operator(n, m, l, r, op_seed)?,
    };
    Ok(TrialProblem::Matrix(ProblemInstance::from_reference(map, reference, r, seed)?))
}

/// Result of one solver run at a fixed decay factor.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub verdict: Verdict,
    pub iterations: usize,
    pub capped: bool,
}

/// Solve once with decay factor `decay`, post-iterate and classify.
pub fn solve_once(problem: &TrialProblem, config: &ExperimentConfig, decay: f64, init_seed: u64) -> Result<RunResult> {
    let schedule = GammaSchedule::constant_rate(decay);
    match problem {
        TrialProblem::Vector(vp) => {
            let rs = vp.reference.clone().expect("generated problems carry a reference");
            let cfg = VecIrlsConfig {
                p: config.p,
                schedule,
                max_iters: config.iteration_cap,
                recovery: Some((rs, EARLY_STOP_TOL)),
                ..VecIrlsConfig::default()
            };
            let trace = vec_irls_run(vp, &cfg)?;
            let x = post_iterate_vector(&trace.x, vp, config.r, config.post_sweeps)?;
            Ok(RunResult {
                verdict: classify_vector(&x, vp, RANK_EPS)?,
                iterations: trace.iterations,
                capped: trace.termination == Termination::MaxIters,
            })
        }
        TrialProblem::Matrix(mp) => {
            let rs = mp.reference.as_ref().expect("generated problems carry a reference");
            let recovery = Some(RecoveryRef {
                matrix: rs.matrix.clone(),
                tol: EARLY_STOP_TOL,
            });
            let (x, iterations, termination) = match config.solver {
                SolverKind::Airls => {
                    let cfg = AirlsConfig {
                        p: config.p,
                        rank: config.airls_rank.map_or(RankChoice::Auto, RankChoice::Fixed),
                        schedule,
                        max_sweeps: config.iteration_cap,
                        recovery,
                        init_seed,
                        ..AirlsConfig::default()
                    };
                    let t = airls_run(mp, &cfg)?;
                    (t.x, t.sweeps, t.termination)
                }
                _ => {
                    let cfg = IrlsConfig {
                        p: config.p,
                        schedule,
                        max_iters: config.iteration_cap,
                        recovery,
                        ..IrlsConfig::default()
                    };
                    let t = irls_run(mp, &cfg)?;
                    (t.x, t.iterations, t.termination)
                }
            };
            let x = post_iterate(&x, mp, rs.rank, config.post_sweeps)?;
            Ok(RunResult {
                verdict: classify(&x, mp, RANK_EPS)?,
                iterations,
                capped: termination == Termination::MaxIters,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// Sensitivity level of the first non-failing run, `None` for fails.
    pub k: Option<usize>,
    pub category: Category,
    pub recovered: bool,
    pub q: f64,
    pub residual_rel: f64,
    pub rel_error: f64,
    /// Iterations (sweeps for AIRLS) summed over all reruns.
    pub iterations: usize,
    pub wall_ms: f64,
    pub note: Option<String>,
}

/// Rerun with slower decay for `k = 0..=k_max` until a run does not fail.
/// Runs that exhaust the iteration cap count as failed.
pub fn sensitivity_run(problem: &TrialProblem, config: &ExperimentConfig, init_seed: u64) -> (Verdict, Option<usize>, usize, Option<String>) {
    let mut total = 0;
    let mut last = None;
    let mut note = None;
    for k in 0..=config.k_max {
        match solve_once(problem, config, decay_factor(config.nu0, k), init_seed) {
            Ok(run) => {
                total += run.iterations;
                let mut v = run.verdict;
                if run.capped {
                    note = Some(format!("iteration cap reached at k = {k}"));
                    v.category = Category::StrongFail;
                    v.recovered = false;
                } else if !v.category.is_fail() {
                    return (v, Some(k), total, None);
                }
                last = Some(v);
            }
            Err(e) => note = Some(format!("k = {k}: {e}")),
        }
    }
    let v = last.unwrap_or_else(|| verdict(f64::INFINITY, f64::INFINITY, f64::INFINITY));
    (v, None, total, note)
}

/// One full trial: build, solve with sensitivity reruns, classify.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> TrialOutcome {
    let seed = config.base_seed.wrapping_add(trial as u64);
    let start = Instant::now();
    let (v, k, iterations, note) = match build_problem(config, seed) {
        Ok(problem) => sensitivity_run(&problem, config, trial_seeds(seed)[2]),
        Err(e) => (
            verdict(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            None,
            0,
            Some(e.to_string()),
        ),
    };
    TrialOutcome {
        trial,
        seed,
        k,
        category: v.category,
        recovered: v.recovered,
        q: v.q,
        residual_rel: v.residual_rel,
        rel_error: v.rel_error,
        iterations,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        note,
    }
}

/// Run all trials (in parallel when workers are available) in trial order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    let workers = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(|| (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect()))
}

/// Counts per category plus recoveries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub improvement: usize,
    pub success: usize,
    pub recovered: usize,
    pub weak_fail: usize,
    pub strong_fail: usize,
}

pub fn summarize(outcomes: &[TrialOutcome]) -> Summary {
    let mut s = Summary::default();
    for o in outcomes {
        match o.category {
            Category::Improvement => s.improvement += 1,
            Category::Success => s.success += 1,
            Category::WeakFail => s.weak_fail += 1,
            Category::StrongFail => s.strong_fail += 1,
        }
        s.recovered += o.recovered as usize;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rank_and_determinism() {
        for seed in 0..100 {
            let x = gen_reference(6, 5, 2, seed).unwrap();
            let s = singular_values(&x);
            assert!(s[2] <= 1e-12 * s[0]);
            assert!(s[1] > 1e-6 * s[0]);
        }
        assert_eq!(gen_reference(4, 4, 2, 9).unwrap(), gen_reference(4, 4, 2, 9).unwrap());
        let full = gen_reference(3, 4, 3, 1).unwrap();
        assert_eq!(rank_eps(&full, RANK_EPS), 3);
        assert!(gen_reference(3, 4, 4, 1).is_err());
    }

    #[test]
    fn gaussian_operator_shape_and_rank() {
        let a = gen_gaussian_operator(4, 3, 7, 5).unwrap();
        assert_eq!(a.dense_matrix().shape(), (7, 12));
        assert!(a.check_full_rank().is_ok());
        assert_eq!(a.dense_matrix(), gen_gaussian_operator(4, 3, 7, 5).unwrap().dense_matrix());
        assert!(gen_gaussian_operator(2, 2, 4, 0).is_err());
    }

    #[test]
    fn sampling_operator_coverage() {
        let map = gen_sampling_operator(10, 8, 40, 3, 2).unwrap();
        let idx = map.samples().unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut rows = [0; 10];
        let mut cols = [0; 8];
        for &(i, j) in idx {
            assert!(seen.insert((i, j)));
            rows[i] += 1;
            cols[j] += 1;
        }
        assert_eq!(idx.len(), 40);
        assert!(rows.iter().chain(&cols).all(|&c| c >= 3));
        assert_eq!(idx, gen_sampling_operator(10, 8, 40, 3, 2).unwrap().samples().unwrap());
        assert!(matches!(gen_sampling_operator(10, 8, 20, 3, 2), Err(Error::CoverageInfeasible { .. })));
    }

    #[test]
    fn rank_and_quotient_values() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-9]));
        assert_eq!(rank_eps(&x, RANK_EPS), 1);
        assert_eq!(rank_eps(&DMatrix::zeros(3, 3), RANK_EPS), 0);
        let d = |v: Vec<f64>| DMatrix::from_diagonal(&DVector::from_vec(v));
        assert_eq!(q_eps(&d(vec![2.0, 1.0]), &d(vec![2.0, 2.0]), RANK_EPS), 0.25);
        assert_eq!(q_eps(&d(vec![1.0, 0.0]), &d(vec![2.0, 2.0]), RANK_EPS), 0.0);
        assert_eq!(q_eps(&d(vec![1.0, 1.0]), &d(vec![2.0, 0.0]), RANK_EPS), f64::INFINITY);
        let x = gen_reference(5, 5, 3, 3).unwrap();
        assert!((q_eps(&x, &x, RANK_EPS) - 1.0).abs() < 1e-14);
        assert!((q_eps(&(&x * 2.0), &x, RANK_EPS) - 64.0).abs() < 1e-10);
    }

    #[test]
    fn categories() {
        assert_eq!(category(0.0, 1.0), Category::Success);
        assert_eq!(category(0.0, 0.0), Category::Improvement);
        assert_eq!(category(0.0, 0.98), Category::Improvement);
        assert_eq!(category(0.0, 1.005), Category::WeakFail);
        assert_eq!(category(0.0, f64::INFINITY), Category::StrongFail);
        assert_eq!(category(1e-3, 1.0), Category::StrongFail);
        assert_eq!(category(f64::NAN, 1.0), Category::StrongFail);
    }

    #[test]
    fn decay_factors() {
        assert!((decay_factor(1.2, 0) - 1.0 / 1.2).abs() < 1e-15);
        assert!((1.0 / decay_factor(1.2, 1) - 1.2f64.sqrt()).abs() < 1e-15);
        assert!((1.0 / decay_factor(1.2, 12) - 1.0000445).abs() < 1e-7);
        for k in 0..14 {
            assert!(decay_factor(1.2, k + 1) > decay_factor(1.2, k));
        }
    }

    #[test]
    fn post_iteration_fixed_point_and_purification() {
        let reference = gen_reference(6, 6, 2, 4).unwrap();
        let map = gen_gaussian_operator(6, 6, 30, 5).unwrap();
        let problem = ProblemInstance::from_reference(map, reference.clone(), 2, 0).unwrap();
        let same = post_iterate(&reference, &problem, 2, 200).unwrap();
        assert!((&same - &reference).norm() <= 1e-12 * reference.norm());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = DMatrix::from_fn(6, 6, |_, _| Distribution::<f64>::sample(&StandardNormal, &mut rng) * 1e-6);
        let near = post_iterate(&(&reference + noise), &problem, 2, 200).unwrap();
        let s = singular_values(&near);
        assert!(s[2] <= 1e-13 * s[0], "{}", s[2] / s[0]);
        let v = classify(&near, &problem, RANK_EPS).unwrap();
        assert!(v.recovered && v.category == Category::Success);
    }

    #[test]
    fn classify_exact_and_infeasible() {
        let reference = gen_reference(5, 5, 2, 4).unwrap();
        let map = gen_gaussian_operator(5, 5, 16, 6).unwrap();
        let problem = ProblemInstance::from_reference(map, reference.clone(), 2, 0).unwrap();
        let v = classify(&reference, &problem, RANK_EPS).unwrap();
        assert_eq!(v.category, Category::Success);
        assert!(v.recovered);
        let v = classify(&DMatrix::zeros(5, 5), &problem, RANK_EPS).unwrap();
        assert_eq!(v.category, Category::StrongFail);
    }

    fn small_config(solver: SolverKind) -> ExperimentConfig {
        ExperimentConfig {
            n: 6,
            m: 6,
            r: 1,
            l: Some(20),
            c_mf: None,
            operator: OperatorKind::Gaussian,
            solver,
            p: 0.0,
            trials: 4,
            k_max: 2,
            base_seed: 100,
            nu0: 1.2,
            post_sweeps: 200,
            iteration_cap: 500_000,
            airls_rank: None,
        }
    }

    #[test]
    fn experiment_is_deterministic_and_ordered() {
        let config = small_config(SolverKind::Irls);
        let a = run_experiment(&config).unwrap();
        let b: Vec<TrialOutcome> = (0..config.trials).rev().map(|t| run_trial(&config, t)).collect();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert_eq!((x.trial, x.seed, x.k, x.category, x.iterations), (y.trial, y.seed, y.k, y.category, y.iterations));
            assert_eq!(x.q.to_bits(), y.q.to_bits());
        }
        assert!(summarize(&a).recovered >= 3);
    }

    #[test]
    fn acm_and_airls_trials_run() {
        let mut config = small_config(SolverKind::Acm);
        config.n = 10;
        config.m = 1;
        config.l = Some(6);
        let out = run_experiment(&config).unwrap();
        assert!(out.iter().filter(|o| o.recovered).count() >= 3);
        let mut config = small_config(SolverKind::Airls);
        config.operator = OperatorKind::Sampling;
        config.n = 10;
        config.m = 10;
        config.l = Some(50);
        let out = run_experiment(&config).unwrap();
        assert!(out.iter().filter(|o| o.recovered).count() >= 3, "{out:?}");
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(SolverKind::Irls);
        c.c_mf = Some(2.0);
        assert!(c.validate().is_err());
        c.l = None;
        assert_eq!(c.measurements().unwrap(), 22);
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = small_config(SolverKind::Airls);
        assert!(c.validate().is_err());
        c.operator = OperatorKind::Sampling;
        assert!(c.validate().is_ok());
    }
}
