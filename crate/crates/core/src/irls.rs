//! Matrix IRLS-p: alternate between the optimal weight for the current
//! iterate and a weighted least-squares solve, while `gamma` decays.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::ThinSvd;
use crate::linops::ProblemInstance;
use crate::lsq::{self, LsSolution, LsStrategy, UpdateKind};
use crate::objective::{f_gamma_from_sigma, weight, WeightSide};

/// How `gamma` shrinks from one iteration to the next.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayLaw {
    /// `gamma_i = nu * gamma_{i-1}`; `nu = 1` freezes `gamma`.
    ConstantRate { nu: f64 },
    /// `gamma_i = min(gamma_{i-1}, alpha * sigma_{rank+1}(X_i))`.
    SigmaBased { alpha: f64, rank: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gamma0 {
    /// `sigma_1(X0)^2` of the starting point.
    Auto,
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSchedule {
    pub law: DecayLaw,
    pub gamma0: Gamma0,
}

impl GammaSchedule {
    pub fn constant_rate(nu: f64) -> Self {
        GammaSchedule {
            law: DecayLaw::ConstantRate { nu },
            gamma0: Gamma0::Auto,
        }
    }

    /// `gamma` held at `gamma` for the whole run.
    pub fn frozen(gamma: f64) -> Self {
        GammaSchedule {
            law: DecayLaw::ConstantRate { nu: 1.0 },
            gamma0: Gamma0::Value(gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.law {
            DecayLaw::ConstantRate { nu } if !(nu > 0.0 && nu <= 1.0) => {
                return Err(Error::Domain(format!("decay factor must lie in (0, 1], got {nu}")))
            }
            DecayLaw::SigmaBased { alpha, .. } if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")))
            }
            _ => {}
        }
        if let Gamma0::Value(g) = self.gamma0 {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Domain(format!("gamma0 must be non-negative, got {g}")));
            }
        }
        Ok(())
    }

    /// `gamma` for the next iterate, given its singular values.
    pub fn next(&self, gamma: f64, sigma: &[f64]) -> f64 {
        match self.law {
            DecayLaw::ConstantRate { nu } => nu * gamma,
            DecayLaw::SigmaBased { alpha, rank } => {
                let s = sigma.get(rank).copied().unwrap_or(0.0);
                gamma.min(alpha * s)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideSchedule {
    Constant(WeightSide),
    /// Left, right, left, ...
    Alternating,
}

impl SideSchedule {
    /// Side used to build the weight at iteration `i` (from iterate `i - 1`).
    pub fn side(&self, i: usize) -> WeightSide {
        match self {
            SideSchedule::Constant(s) => *s,
            SideSchedule::Alternating if i % 2 == 1 => WeightSide::Left,
            SideSchedule::Alternating => WeightSide::Right,
        }
    }
}

/// Stop once `||X - matrix||_F <= tol * ||matrix||_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryRef {
    pub matrix: DMatrix<f64>,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrlsConfig {
    pub p: f64,
    pub sides: SideSchedule,
    pub schedule: GammaSchedule,
    pub strategy: LsStrategy,
    pub max_iters: usize,
    /// Stop when `gamma < gamma_min * gamma0`.
    pub gamma_min: f64,
    /// Stop when `||X_i - X_{i-1}||_F < stall_tol * ||X_i||_F`.
    pub stall_tol: f64,
    pub recovery: Option<RecoveryRef>,
    /// Keep every iteration record instead of only the last one.
    pub record_history: bool,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        IrlsConfig {
            p: 0.0,
            sides: SideSchedule::Constant(WeightSide::Left),
            schedule: GammaSchedule::constant_rate(0.9),
            strategy: LsStrategy::Auto,
            max_iters: 10_000,
            gamma_min: 1e-14,
            stall_tol: 1e-10,
            recovery: None,
            record_history: false,
        }
    }
}

impl IrlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Domain(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        if !(self.gamma_min > 0.0) || !(self.stall_tol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        if let Some(r) = &self.recovery {
            if !(r.tol > 0.0) {
                return Err(Error::Domain("recovery tolerance must be positive".into()));
            }
        }
        self.schedule.validate()
    }
}

/// State after one iteration (iteration 0 is the starting point).
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub gamma: f64,
    /// `f_gamma` from `X X^T`.
    pub f_left: f64,
    /// `f_gamma` from `X^T X`.
    pub f_right: f64,
    pub residual: f64,
    pub step: f64,
    pub sigma: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MaxIters,
    GammaMin,
    Stalled,
    Recovered,
}

#[derive(Clone, Debug)]
pub struct IrlsTrace {
    pub records: Vec<IterRecord>,
    pub x: DMatrix<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Number of updates that fell back to the kernel form.
    pub kernel_updates: usize,
}

impl IrlsTrace {
    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("trace holds at least one record")
    }
}

/// Minimum-norm feasible point and the matching starting `gamma`.
pub fn canonical_start(problem: &ProblemInstance, schedule: &GammaSchedule) -> Result<(DMatrix<f64>, f64)> {
    let x0 = problem.map.min_norm_solution(&problem.y)?;
    let gamma0 = match schedule.gamma0 {
        Gamma0::Value(g) => g,
        Gamma0::Auto => {
            let s = crate::linalg::singular_values(&x0);
            s.first().map(|v| v * v).unwrap_or(0.0)
        }
    };
    Ok((x0, gamma0))
}

/// One IRLS update: build the weight of `x` and solve the weighted problem.
pub fn irls_step(
    x: &DMatrix<f64>,
    gamma: f64,
    side: WeightSide,
    p: f64,
    strategy: LsStrategy,
    problem: &ProblemInstance,
) -> Result<DMatrix<f64>> {
    let w = weight(x, gamma, p, side)?;
    Ok(lsq::solve(problem, &w, strategy, x, gamma)?.x)
}

fn record(iteration: usize, gamma: f64, x: &DMatrix<f64>, sigma: &[f64], problem: &ProblemInstance, step: f64) -> Result<IterRecord> {
    let (n, m) = x.shape();
    let mut left = sigma.to_vec();
    left.resize(n, 0.0);
    let mut right = sigma.to_vec();
    right.resize(m, 0.0);
    Ok(IterRecord {
        iteration,
        gamma,
        f_left: f_gamma_from_sigma(&left, gamma),
        f_right: f_gamma_from_sigma(&right, gamma),
        residual: (problem.map.apply(x)? - &problem.y).norm(),
        step,
        sigma: sigma.to_vec(),
    })
}

/// Run IRLS from the canonical start.
pub fn irls_run(problem: &ProblemInstance, config: &IrlsConfig) -> Result<IrlsTrace> {
    config.validate()?;
    let (x0, gamma0) = canonical_start(problem, &config.schedule)?;
    irls_run_from(problem, config, x0, gamma0)
}

/// Run IRLS from a given start `x0` and `gamma0`.
pub fn irls_run_from(problem: &ProblemInstance, config: &IrlsConfig, x0: DMatrix<f64>, gamma0: f64) -> Result<IrlsTrace> {
    config.validate()?;
    if x0.shape() != problem.shape() {
        return Err(Error::Dimension(format!(
            "start is {}x{}, problem is {:?}",
            x0.nrows(),
            x0.ncols(),
            problem.shape()
        )));
    }
    if !(gamma0 >= 0.0 && gamma0.is_finite()) {
        return Err(Error::Domain(format!("gamma0 must be non-negative, got {gamma0}")));
    }
    let gamma_floor = config.gamma_min * gamma0;
    let mut x = x0;
    let mut gamma = gamma0;
    let mut svd = ThinSvd::new(&x);
    let mut records = vec![record(0, gamma, &x, &svd.sigma, problem, 0.0)?];
    let mut kernel_updates = 0;
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    for i in 1..=config.max_iters {
        let side = config.sides.side(i);
        let w = weight(&x, gamma, config.p, side).map_err(|e| e.at_iteration(i))?;
        let LsSolution { x: next, kind, .. } =
            lsq::solve(problem, &w, config.strategy, &x, gamma).map_err(|e| e.at_iteration(i))?;
        if kind == UpdateKind::Kernel {
            kernel_updates += 1;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned { cond: f64::INFINITY }.at_iteration(i));
        }
        let step = (&next - &x).norm();
        x = next;
        svd = ThinSvd::new(&x);
        gamma = config.schedule.next(gamma, &svd.sigma);
        iterations = i;
        let rec = record(i, gamma, &x, &svd.sigma, problem, step)?;
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
    Ok(IrlsTrace {
        records,
        x,
        iterations,
        termination,
        kernel_updates,
    })
}

/// `||X - X_W|| / max(1, ||X||)` for the optimal left weight of `X`; zero
/// exactly at stationary points of `f_gamma` on the affine set.
pub fn stationarity_residual(x: &DMatrix<f64>, gamma: f64, problem: &ProblemInstance) -> Result<f64> {
    let next = irls_step(x, gamma, WeightSide::Left, 0.0, LsStrategy::Auto, problem)?;
    Ok((x - next).norm() / x.norm().max(1.0))
}
