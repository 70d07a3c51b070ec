//! Vector IRLS-p for affine cardinality minimization: the diagonal special
//! case of the matrix iteration, solved through the same weighted LS forms.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::irls::{Gamma0, GammaSchedule, Termination};
use crate::linalg::pinv_and_kernel;
use crate::linops::FULL_RANK_TOL;
use crate::lsq::{weighted_ls_bounded, weighted_ls_kernel_with, SWITCH_COND};
use crate::objective::smoothed_penalty;

/// Entries with `|x_i| <= CARD_EPS * ||x||` do not count towards the cardinality.
pub const CARD_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct VectorProblem {
    pub map: DMatrix<f64>,
    pub y: DVector<f64>,
    pub reference: Option<DVector<f64>>,
}

impl VectorProblem {
    pub fn new(map: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if map.nrows() != y.len() {
            return Err(Error::Dimension(format!("map has {} rows, y has {}", map.nrows(), y.len())));
        }
        if map.nrows() >= map.ncols() {
            return Err(Error::Dimension(format!(
                "need fewer measurements than unknowns, got {}x{}",
                map.nrows(),
                map.ncols()
            )));
        }
        Ok(VectorProblem { map, y, reference: None })
    }

    pub fn from_reference(map: DMatrix<f64>, x: DVector<f64>) -> Result<Self> {
        if map.ncols() != x.len() {
            return Err(Error::Dimension(format!("map has {} columns, x has {}", map.ncols(), x.len())));
        }
        let y = &map * &x;
        let mut p = VectorProblem::new(map, y)?;
        p.reference = Some(x);
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.map.ncols()
    }

    pub fn relative_residual(&self, x: &DVector<f64>) -> f64 {
        (&self.map * x - &self.y).norm() / self.y.norm().max(f64::MIN_POSITIVE)
    }
}

/// Number of entries above `CARD_EPS * ||x||`.
pub fn cardinality(x: &DVector<f64>) -> usize {
    let t = CARD_EPS * x.norm();
    x.iter().filter(|v| v.abs() > t).count()
}

/// Diagonal of `diag(x_i^2 + gamma)^{p/2 - 1}`.
pub fn vec_weight(x: &DVector<f64>, gamma: f64, p: f64) -> Result<DVector<f64>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be non-negative, got {gamma}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
    }
    let w = x.map(|v| (v * v + gamma).powf(p / 2.0 - 1.0));
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("weight is unbounded: gamma = 0 with a zero entry".into()));
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VecIrlsConfig {
    pub p: f64,
    /// `Gamma0::Auto` uses `max_i x_i^2` of the minimum-norm solution.
    pub schedule: GammaSchedule,
    pub max_iters: usize,
    pub gamma_min: f64,
    pub stall_tol: f64,
    /// Stop once within `tol` relative distance of this vector.
    pub recovery: Option<(DVector<f64>, f64)>,
    pub record_history: bool,
}

impl Default for VecIrlsConfig {
    fn default() -> Self {
        VecIrlsConfig {
            p: 0.0,
            schedule: GammaSchedule::constant_rate(0.9),
            max_iters: 10_000,
            gamma_min: 1e-14,
            stall_tol: 1e-12,
            recovery: None,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VecIterRecord {
    pub iteration: usize,
    pub gamma: f64,
    /// `sum_i h(x_i^2)` with the smoothed penalty `h` for `p`.
    pub objective: f64,
    pub residual: f64,
    pub step: f64,
    pub card: usize,
}

#[derive(Clone, Debug)]
pub struct VecIrlsTrace {
    pub records: Vec<VecIterRecord>,
    pub x: DVector<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub kernel_updates: usize,
}

impl VecIrlsTrace {
    pub fn last(&self) -> &VecIterRecord {
        self.records.last().expect("trace holds at least one record")
    }
}

fn sorted_magnitudes(x: &DVector<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn vec_record(problem: &VectorProblem, x: &DVector<f64>, iteration: usize, gamma: f64, p: f64, step: f64) -> VecIterRecord {
    VecIterRecord {
        iteration,
        gamma,
        objective: smoothed_penalty(x.as_slice(), gamma, p),
        residual: (&problem.map * x - &problem.y).norm(),
        step,
        card: cardinality(x),
    }
}

/// Run vector IRLS from the minimum-norm solution.
pub fn vec_irls_run(problem: &VectorProblem, config: &VecIrlsConfig) -> Result<VecIrlsTrace> {
    if !(0.0..=1.0).contains(&config.p) || config.max_iters == 0 {
        return Err(Error::Domain("invalid vector IRLS configuration".into()));
    }
    config.schedule.validate()?;
    let (pinv, kernel) = pinv_and_kernel(&problem.map, FULL_RANK_TOL)?;
    let mut x = &pinv * &problem.y;
    let gamma0 = match config.schedule.gamma0 {
        Gamma0::Value(g) => g,
        Gamma0::Auto => x.amax().powi(2),
    };
    if !(gamma0 > 0.0) {
        return Err(Error::Domain(format!("gamma0 must be positive, got {gamma0}")));
    }
    let gamma_floor = config.gamma_min * gamma0;
    let mut gamma = gamma0;
    let mut records = vec![vec_record(problem, &x, 0, gamma, config.p, 0.0)];
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    let mut kernel_updates = 0;
    for i in 1..=config.max_iters {
        let w = vec_weight(&x, gamma, config.p).map_err(|e| e.at_iteration(i))?;
        let h = DMatrix::from_diagonal(&w.map(f64::sqrt));
        let next = match weighted_ls_bounded(&problem.map, &h, &problem.y, SWITCH_COND) {
            Ok((next, _)) => next,
            Err(Error::IllConditioned { .. }) => {
                kernel_updates += 1;
                weighted_ls_kernel_with(&problem.map, &kernel, &h, &problem.y, &x).map_err(|e| e.at_iteration(i))?
            }
            Err(e) => return Err(e.at_iteration(i)),
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned { cond: f64::INFINITY }.at_iteration(i));
        }
        let step = (&next - &x).norm();
        x = next;
        gamma = config.schedule.next(gamma, &sorted_magnitudes(&x));
        iterations = i;
        let rec = vec_record(problem, &x, i, gamma, config.p, step);
        if config.record_history {
            records.push(rec);
        } else {
            records[0] = rec;
        }
        if let Some((r, tol)) = &config.recovery {
            if (&x - r).norm() <= tol * r.norm() {
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
    Ok(VecIrlsTrace {
        records,
        x,
        iterations,
        termination,
        kernel_updates,
    })
}
