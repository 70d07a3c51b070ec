//! AIRLS-p: alternating updates of a factored iterate `X = Y Z` under the
//! relaxed constraint, using complementary left and right weights.
//!
//! Each sweep orthonormalizes `Y`, solves a ridge problem for `Z` with the
//! penalty `c_L gamma ||(S^2 + gamma I)^{-1/2 + p/4} Z||^2`, orthonormalizes
//! the rows of `Z`, and solves the mirrored ridge problem for `Y`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::irls::{Gamma0, GammaSchedule, RecoveryRef, Termination};
use crate::linalg::{orthonormalize_rows, singular_values, SpdFactor, ThinSvd};
use crate::linops::{Operator, ProblemInstance};
use crate::objective::smoothed_penalty;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// `Y^T Y = I`, `Z` carries the scale.
    YOrthonormal,
    /// `Z Z^T = I`, `Y` carries the scale.
    ZOrthonormal,
}

/// Low-rank iterate `X = Y Z` with the current singular values of `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredIterate {
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub phase: Phase,
}

impl FactoredIterate {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn product(&self) -> DMatrix<f64> {
        &self.y * &self.z
    }

    /// Seeded start: Gaussian `Y` and a row-orthonormal `Z` from an
    /// orthonormalized Gaussian matrix.
    pub fn random(n: usize, m: usize, rank: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DMatrix::from_fn(n, rank, |_, _| StandardNormal.sample(&mut rng));
        let g = DMatrix::from_fn(rank, m, |_, _| StandardNormal.sample(&mut rng));
        let z = orthonormalize_rows(&g);
        let sigma = singular_values(&y);
        FactoredIterate {
            y,
            z,
            sigma,
            phase: Phase::ZOrthonormal,
        }
    }
}

/// Rank used for AIRLS: one more than the largest `r` with
/// `(n + m) r - r^2 <= l`, clamped to `min(n, m)`.
pub fn rank_bound(n: usize, m: usize, l: usize) -> usize {
    let cap = n.min(m);
    let mut r = 0;
    while r < cap && (n + m) * (r + 1) - (r + 1) * (r + 1) <= l {
        r += 1;
    }
    (r + 1).min(cap)
}

/// Switch phase through an SVD of the non-orthonormal factor, keeping `Y Z`.
pub fn refactor(it: &FactoredIterate) -> FactoredIterate {
    match it.phase {
        Phase::YOrthonormal => {
            let svd = ThinSvd::new(&it.z);
            let r = it.rank();
            let (u, s, vt) = pad_svd(svd, r, it.z.ncols());
            let mut us = &it.y * u;
            for (j, sj) in s.iter().enumerate() {
                us.column_mut(j).scale_mut(*sj);
            }
            FactoredIterate {
                y: us,
                z: vt,
                sigma: s,
                phase: Phase::ZOrthonormal,
            }
        }
        Phase::ZOrthonormal => {
            let svd = ThinSvd::new(&it.y);
            let r = it.rank();
            let (u, s, vt) = pad_svd(svd, r, r);
            let mut svt = vt;
            for (j, sj) in s.iter().enumerate() {
                svt.row_mut(j).scale_mut(*sj);
            }
            FactoredIterate {
                y: u,
                z: svt * &it.z,
                sigma: s,
                phase: Phase::YOrthonormal,
            }
        }
    }
}

/// Thin SVD factors padded to exactly `r` components (for factors with
/// fewer rows or columns than `r`).
fn pad_svd(svd: ThinSvd, r: usize, cols: usize) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let k = svd.sigma.len();
    if k == r {
        return (svd.u, svd.sigma, svd.v_t);
    }
    let rows = svd.u.nrows();
    let mut u = DMatrix::zeros(rows, r);
    u.columns_mut(0, k).copy_from(&svd.u);
    let mut vt = DMatrix::zeros(r, cols);
    vt.rows_mut(0, k).copy_from(&svd.v_t);
    let mut s = svd.sigma;
    s.resize(r, 0.0);
    (u, s, vt)
}

/// Squared penalty weights `(s_r^2 + gamma)^{-1 + p/2}`.
fn penalty_diag(sigma: &[f64], gamma: f64, p: f64) -> Vec<f64> {
    sigma.iter().map(|s| (s * s + gamma).powf(p / 2.0 - 1.0)).collect()
}

fn check_ridge(gamma: f64, p: f64, c_l: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(c_l > 0.0 && c_l.is_finite()) || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "ridge update needs gamma > 0, c_L > 0 and p in [0, 1], got {gamma}, {c_l}, {p}"
        )));
    }
    Ok(())
}

/// Solve `(F F^T + diag(d2) * shift) v = F b` for a `R x k` matrix `F`.
fn ridge_solve(f: &DMatrix<f64>, b: &DVector<f64>, d2: &[f64], shift: f64) -> Result<DVector<f64>> {
    let mut a = f * f.transpose();
    for (r, d) in d2.iter().enumerate() {
        a[(r, r)] += shift * d;
    }
    Ok(SpdFactor::new(a)?.solve(&(f * b)))
}

/// Column `j` of `Z` (or row `i` of `Y`) from its observed entries.
fn separable_update(
    fixed: &DMatrix<f64>,
    groups: &[Vec<(usize, usize)>],
    y: &DVector<f64>,
    d2: &[f64],
    shift: f64,
    transpose_fixed: bool,
) -> Result<Vec<DVector<f64>>> {
    let r = d2.len();
    groups
        .par_iter()
        .map(|obs| {
            // F: R x |obs|, column t holds the fixed factor's slice for observation t.
            let f = DMatrix::from_fn(r, obs.len(), |row, t| {
                let c = obs[t].1;
                if transpose_fixed {
                    fixed[(row, c)]
                } else {
                    fixed[(c, row)]
                }
            });
            let b = DVector::from_fn(obs.len(), |t, _| y[obs[t].0]);
            ridge_solve(&f, &b, d2, shift)
        })
        .collect()
}

/// Observations grouped by column (`by_column`) or by row: `(measurement, other index)`.
fn groups(idx: &[(usize, usize)], count: usize, by_column: bool) -> Vec<Vec<(usize, usize)>> {
    let mut g = vec![Vec::new(); count];
    for (k, &(i, j)) in idx.iter().enumerate() {
        if by_column {
            g[j].push((k, i));
        } else {
            g[i].push((k, j));
        }
    }
    g
}

fn check_phase(it: &FactoredIterate, phase: Phase) -> Result<()> {
    if it.phase != phase {
        return Err(Error::Domain(format!("iterate is in phase {:?}, expected {phase:?}", it.phase)));
    }
    Ok(())
}

/// Ridge update of `Z` with `Y` orthonormal.
pub fn update_z(it: &FactoredIterate, gamma: f64, p: f64, c_l: f64, problem: &ProblemInstance) -> Result<DMatrix<f64>> {
    check_phase(it, Phase::YOrthonormal)?;
    check_ridge(gamma, p, c_l)?;
    let d2 = penalty_diag(&it.sigma, gamma, p);
    match problem.map.operator() {
        Operator::Sampling(idx) => {
            let (_, m) = problem.shape();
            let cols = separable_update(&it.y, &groups(idx, m, true), &problem.y, &d2, c_l * gamma, false)?;
            Ok(DMatrix::from_columns(&cols))
        }
        _ => update_z_monolithic(it, gamma, p, c_l, problem),
    }
}

/// [`update_z`] as one ridge system in `vec(Z)`.
pub fn update_z_monolithic(
    it: &FactoredIterate,
    gamma: f64,
    p: f64,
    c_l: f64,
    problem: &ProblemInstance,
) -> Result<DMatrix<f64>> {
    check_phase(it, Phase::YOrthonormal)?;
    check_ridge(gamma, p, c_l)?;
    let map = problem.map.to_factored()?;
    let Operator::Factored { left, right } = map.operator() else {
        unreachable!("to_factored returns a factored map")
    };
    let (_, m) = map.shape();
    let r = it.rank();
    let l = map.len();
    // A[k, j R + q] = sum_i (L1_i Y)[k, q] L2_i[j, k]
    let mut a = DMatrix::zeros(l, r * m);
    for (l1, l2) in left.iter().zip(right) {
        let ly = l1 * &it.y;
        for k in 0..l {
            for j in 0..m {
                let c = l2[(j, k)];
                if c != 0.0 {
                    for q in 0..r {
                        a[(k, j * r + q)] += c * ly[(k, q)];
                    }
                }
            }
        }
    }
    let d2 = penalty_diag(&it.sigma, gamma, p);
    let penalty: Vec<f64> = (0..r * m).map(|t| d2[t % r]).collect();
    let v = monolithic_solve(&a, &problem.y, &penalty, c_l * gamma)?;
    Ok(DMatrix::from_column_slice(r, m, v.as_slice()))
}

fn monolithic_solve(a: &DMatrix<f64>, y: &DVector<f64>, penalty: &[f64], shift: f64) -> Result<DVector<f64>> {
    let at = a.transpose();
    let mut g = &at * a;
    for (t, d) in penalty.iter().enumerate() {
        g[(t, t)] += shift * d;
    }
    Ok(SpdFactor::new(g)?.solve(&(at * y)))
}

/// Ridge update of `Y` with `Z` row-orthonormal.
pub fn update_y(it: &FactoredIterate, gamma: f64, p: f64, c_l: f64, problem: &ProblemInstance) -> Result<DMatrix<f64>> {
    check_phase(it, Phase::ZOrthonormal)?;
    check_ridge(gamma, p, c_l)?;
    let d2 = penalty_diag(&it.sigma, gamma, p);
    match problem.map.operator() {
        Operator::Sampling(idx) => {
            let (n, _) = problem.shape();
            let rows = separable_update(&it.z, &groups(idx, n, false), &problem.y, &d2, c_l * gamma, true)?;
            Ok(DMatrix::from_columns(&rows).transpose())
        }
        _ => update_y_monolithic(it, gamma, p, c_l, problem),
    }
}

/// [`update_y`] as one ridge system in `vec(Y)`.
pub fn update_y_monolithic(
    it: &FactoredIterate,
    gamma: f64,
    p: f64,
    c_l: f64,
    problem: &ProblemInstance,
) -> Result<DMatrix<f64>> {
    check_phase(it, Phase::ZOrthonormal)?;
    check_ridge(gamma, p, c_l)?;
    let map = problem.map.to_factored()?;
    let Operator::Factored { left, right } = map.operator() else {
        unreachable!("to_factored returns a factored map")
    };
    let (n, _) = map.shape();
    let r = it.rank();
    let l = map.len();
    // B[k, q n + a] = sum_i L1_i[k, a] (Z L2_i)[q, k]
    let mut b = DMatrix::zeros(l, r * n);
    for (l1, l2) in left.iter().zip(right) {
        let zl = &it.z * l2;
        for k in 0..l {
            for q in 0..r {
                let c = zl[(q, k)];
                if c != 0.0 {
                    for a in 0..n {
                        b[(k, q * n + a)] += c * l1[(k, a)];
                    }
                }
            }
        }
    }
    let d2 = penalty_diag(&it.sigma, gamma, p);
    let penalty: Vec<f64> = (0..r * n).map(|t| d2[t / n]).collect();
    let v = monolithic_solve(&b, &problem.y, &penalty, c_l * gamma)?;
    Ok(DMatrix::from_column_slice(n, r, v.as_slice()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankChoice {
    /// [`rank_bound`] of the problem size.
    Auto,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PenaltyScale {
    /// `||y||^2 / l`.
    Auto,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AirlsConfig {
    pub p: f64,
    pub rank: RankChoice,
    pub c_l: PenaltyScale,
    /// `Gamma0::Auto` uses `sigma_1(X_I)^2` of the minimum-norm solution.
    pub schedule: GammaSchedule,
    pub max_sweeps: usize,
    /// Stop when `gamma < gamma_min * gamma0`.
    pub gamma_min: f64,
    /// Stop when `||X_i - X_{i-1}||_F < stall_tol * ||X_i||_F`.
    pub stall_tol: f64,
    pub recovery: Option<RecoveryRef>,
    pub init_seed: u64,
    pub record_history: bool,
}

impl Default for AirlsConfig {
    fn default() -> Self {
        AirlsConfig {
            p: 0.0,
            rank: RankChoice::Auto,
            c_l: PenaltyScale::Auto,
            schedule: GammaSchedule::constant_rate(0.9),
            max_sweeps: 10_000,
            gamma_min: 1e-14,
            stall_tol: 1e-10,
            recovery: None,
            init_seed: 0,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub gamma: f64,
    /// `||L(X) - y||^2 + c_L gamma * penalty(X)`.
    pub objective: f64,
    pub residual: f64,
    pub step: f64,
    pub sigma: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AirlsTrace {
    pub records: Vec<SweepRecord>,
    pub iterate: FactoredIterate,
    pub x: DMatrix<f64>,
    pub sweeps: usize,
    pub termination: Termination,
    pub rank: usize,
    pub c_l: f64,
}

impl AirlsTrace {
    pub fn last(&self) -> &SweepRecord {
        self.records.last().expect("trace holds at least one record")
    }
}

/// Relaxed objective `||L(X) - y||^2 + c_L gamma sum h(s_i^2)` whose
/// majorization produces the ridge updates.
pub fn relaxed_objective(problem: &ProblemInstance, x: &DMatrix<f64>, gamma: f64, p: f64, c_l: f64) -> Result<f64> {
    let r = problem.map.apply(x)? - &problem.y;
    Ok(r.norm_squared() + c_l * gamma * smoothed_penalty(&singular_values(x), gamma, p))
}

fn sweep_record(problem: &ProblemInstance, it: &FactoredIterate, x: &DMatrix<f64>, sweep: usize, gamma: f64, p: f64, c_l: f64, step: f64) -> Result<SweepRecord> {
    let r = problem.map.apply(x)? - &problem.y;
    Ok(SweepRecord {
        sweep,
        gamma,
        objective: r.norm_squared() + c_l * gamma * smoothed_penalty(&it.sigma, gamma, p),
        residual: r.norm(),
        step,
        sigma: it.sigma.clone(),
    })
}

/// Run AIRLS from a seeded random start.
pub fn airls_run(problem: &ProblemInstance, config: &AirlsConfig) -> Result<AirlsTrace> {
    let (n, m) = problem.shape();
    let rank = match config.rank {
        RankChoice::Auto => rank_bound(n, m, problem.map.len()),
        RankChoice::Fixed(r) => r,
    };
    if rank == 0 || rank > n.min(m) {
        return Err(Error::Domain(format!("rank must lie in 1..={}, got {rank}", n.min(m))));
    }
    let start = FactoredIterate::random(n, m, rank, config.init_seed);
    airls_run_from(problem, config, start)
}

/// Run AIRLS from a given factored start.
pub fn airls_run_from(problem: &ProblemInstance, config: &AirlsConfig, start: FactoredIterate) -> Result<AirlsTrace> {
    if !(0.0..=1.0).contains(&config.p) || config.max_sweeps == 0 || !(config.gamma_min > 0.0) || !(config.stall_tol > 0.0) {
        return Err(Error::Domain("invalid AIRLS configuration".into()));
    }
    config.schedule.validate()?;
    if matches!(problem.map.operator(), Operator::Dense(_)) {
        return Err(Error::UnsupportedVariant("dense"));
    }
    let (n, m) = problem.shape();
    if start.y.nrows() != n || start.z.ncols() != m || start.y.ncols() != start.z.nrows() {
        return Err(Error::Dimension("start factors do not match the problem".into()));
    }
    let c_l = match config.c_l {
        PenaltyScale::Auto => problem.y.norm_squared() / problem.map.len() as f64,
        PenaltyScale::Value(c) => c,
    };
    if !(c_l > 0.0) {
        return Err(Error::Domain(format!("c_L must be positive, got {c_l}")));
    }
    let gamma0 = match config.schedule.gamma0 {
        Gamma0::Value(g) => g,
        Gamma0::Auto => {
            let x_i = problem.map.min_norm_solution(&problem.y)?;
            singular_values(&x_i).first().map(|s| s * s).unwrap_or(0.0)
        }
    };
    if !(gamma0 > 0.0) {
        return Err(Error::Domain(format!("AIRLS needs gamma0 > 0, got {gamma0}")));
    }
    let gamma_floor = config.gamma_min * gamma0;
    let mut it = start;
    let mut x = it.product();
    let mut gamma = gamma0;
    let mut records = vec![sweep_record(problem, &it, &x, 0, gamma, config.p, c_l, 0.0)?];
    let mut termination = Termination::MaxIters;
    let mut sweeps = 0;
    for i in 1..=config.max_sweeps {
        let step_result = (|| -> Result<FactoredIterate> {
            let mut cur = if it.phase == Phase::YOrthonormal { it.clone() } else { refactor(&it) };
            cur.z = update_z(&cur, gamma, config.p, c_l, problem)?;
            let mut cur = refactor(&cur);
            cur.y = update_y(&cur, gamma, config.p, c_l, problem)?;
            Ok(cur)
        })();
        it = step_result.map_err(|e| e.at_iteration(i))?;
        let next = it.product();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned { cond: f64::INFINITY }.at_iteration(i));
        }
        // Singular values of X = Y Z with Z row-orthonormal are those of Y.
        it.sigma = singular_values(&it.y);
        let step = (&next - &x).norm();
        x = next;
        gamma = config.schedule.next(gamma, &it.sigma);
        sweeps = i;
        let rec = sweep_record(problem, &it, &x, i, gamma, config.p, c_l, step)?;
        if config.record_history {
            records.push(rec);
        } else {
            records[0] = rec;
        }
        if let Some(r) = &config.recovery {
            if (&x - &r.matrix).norm() <= r.tol * r.matrix.norm() {
                termination = Termination::Recovered;
                break;
            }
        }
        if step < config.stall_tol * x.norm() {
            termination = Termination::Stalled;
            break;
        }
        if gamma < gamma_floor {
            termination = Termination::GammaMin;
            break;
        }
    }
    let rank = it.rank();
    Ok(AirlsTrace {
        records,
        iterate: it,
        x,
        sweeps,
        termination,
        rank,
        c_l,
    })
}
