//! Weighted least-squares updates over the affine set.
//!
//! Three mechanisms produce the next iterate for a frozen weight `W`:
//!
//! * image form, `X = W^{-1} L* (L W^{-1} L*)^{-1} y`;
//! * kernel form, `X = X0 - K (K* W K)^{-1} K* W X0` for a feasible `X0`;
//! * relaxed form, the minimizer of `||L(X) - y||^2 + c_L gamma ||W^{1/2} X||^2`.
//!
//! For sampling operators the systems decouple by column (left weights) or by
//! row (right weights) and are solved block by block.

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, pinv_and_kernel, SpdFactor};
use crate::linops::{LinearMap, Operator, ProblemInstance, FULL_RANK_TOL};
use crate::objective::{WeightMatrix, WeightSide};

/// Condition estimate of the inner `l x l` system above which the image
/// form is abandoned for the kernel form.
pub const SWITCH_COND: f64 = 1e10;

/// Largest relative residual accepted for a reference point `X0`.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LsStrategy {
    /// Image form while well conditioned, kernel form from the previous iterate otherwise.
    Auto,
    Image,
    /// Kernel form with the previous iterate as reference point.
    Kernel,
    Relaxed { c_l: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateKind {
    Image,
    Kernel,
    Relaxed,
}

#[derive(Clone, Debug)]
pub struct LsSolution {
    pub x: DMatrix<f64>,
    pub kind: UpdateKind,
    /// Condition estimate of the inner system (image and relaxed forms), `NaN` otherwise.
    pub cond: f64,
}

fn factor(matrix: DMatrix<f64>, max_cond: f64) -> Result<SpdFactor> {
    let f = SpdFactor::new(matrix)?;
    if f.cond() >= max_cond {
        return Err(Error::IllConditioned { cond: f.cond() });
    }
    Ok(f)
}

/// `argmin ||H x||` subject to `L x = y`, via `(H^T H)^{-1} L^T (L (H^T H)^{-1} L^T)^{-1} y`.
pub fn weighted_ls(l: &DMatrix<f64>, h: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    weighted_ls_bounded(l, h, y, f64::INFINITY).map(|(x, _)| x)
}

/// [`weighted_ls`] that refuses inner systems with condition estimate `>= max_cond`.
/// Returns the solution and the condition estimate.
pub fn weighted_ls_bounded(
    l: &DMatrix<f64>,
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    max_cond: f64,
) -> Result<(DVector<f64>, f64)> {
    check_vector_shapes(l, h, y)?;
    let m = SpdFactor::new(h.tr_mul(h))?;
    let minv_lt = m.solve_mat(&l.transpose());
    let g = l * &minv_lt;
    let f = factor((&g + g.transpose()) * 0.5, max_cond)?;
    let lambda = f.solve(y);
    Ok((minv_lt * lambda, f.cond()))
}

fn check_vector_shapes(l: &DMatrix<f64>, h: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if l.ncols() != h.ncols() || l.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "incompatible shapes: L {}x{}, H {}x{}, y {}",
            l.nrows(),
            l.ncols(),
            h.nrows(),
            h.ncols(),
            y.len()
        )));
    }
    Ok(())
}

/// Same minimizer as [`weighted_ls`] computed as `x0 - K c` with
/// `c = argmin ||H (x0 - K c)||`, where `K` spans `kernel(L)`.
pub fn weighted_ls_kernel(
    l: &DMatrix<f64>,
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    x0: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_vector_shapes(l, h, y)?;
    let (_, k) = pinv_and_kernel(l, FULL_RANK_TOL)?;
    weighted_ls_kernel_with(l, &k, h, y, x0)
}

/// [`weighted_ls_kernel`] with a precomputed kernel basis.
pub fn weighted_ls_kernel_with(
    l: &DMatrix<f64>,
    k: &DMatrix<f64>,
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    x0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let residual = (l * x0 - y).norm();
    let scale = y.norm().max(f64::MIN_POSITIVE);
    if residual > FEASIBILITY_TOL * scale {
        return Err(Error::Infeasible {
            residual: residual / scale,
        });
    }
    let c = lstsq(&(h * k), &(h * x0))?;
    Ok(x0 - k * c)
}

/// Apply `A` to every column of `cols` read as an `n x m` matrix: `A X_k` for
/// the left side, `X_k A` for the right side.
fn apply_blocks(cols: &DMatrix<f64>, a: &DMatrix<f64>, side: WeightSide, n: usize, m: usize) -> DMatrix<f64> {
    let c = cols.ncols();
    match side {
        WeightSide::Left => {
            // Column-major storage of an nm x c matrix is an n x (m c) matrix.
            let view = DMatrixView::from_slice(cols.as_slice(), n, m * c);
            let prod = a * view;
            prod.reshape_generic(nalgebra::Dyn(n * m), nalgebra::Dyn(c))
        }
        WeightSide::Right => {
            let mut out = DMatrix::zeros(n * m, c);
            for k in 0..c {
                let blk = DMatrixView::from_slice(&cols.as_slice()[k * n * m..(k + 1) * n * m], n, m);
                out.column_mut(k).copy_from_slice((blk * a).as_slice());
            }
            out
        }
    }
}

fn check_weight(map: &LinearMap, w: &WeightMatrix) -> Result<()> {
    let (n, m) = map.shape();
    if w.dim() != w.side.dim(n, m) {
        return Err(Error::Dimension(format!(
            "{:?} weight of size {} does not fit a {}x{} problem",
            w.side,
            w.dim(),
            n,
            m
        )));
    }
    Ok(())
}

/// Sample positions grouped by column (left side) or row (right side): for
/// each group, the measurement indices and the in-group coordinates.
fn sample_groups(idx: &[(usize, usize)], side: WeightSide, n: usize, m: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let count = side.dim(m, n);
    let mut groups = vec![(Vec::new(), Vec::new()); count];
    for (k, &(i, j)) in idx.iter().enumerate() {
        let (g, c) = match side {
            WeightSide::Left => (j, i),
            WeightSide::Right => (i, j),
        };
        groups[g].0.push(k);
        groups[g].1.push(c);
    }
    groups
}

fn write_group(x: &mut DMatrix<f64>, side: WeightSide, g: usize, values: &DVector<f64>) {
    match side {
        WeightSide::Left => x.column_mut(g).copy_from(values),
        WeightSide::Right => x.row_mut(g).copy_from(&values.transpose()),
    }
}

/// Shared image/relaxed solve: `X = W^{-1} L* (L W^{-1} L* + shift I)^{-1} y`.
fn image_like(problem: &ProblemInstance, w: &WeightMatrix, shift: f64, max_cond: f64) -> Result<(DMatrix<f64>, f64)> {
    let map = &problem.map;
    check_weight(map, w)?;
    let (n, m) = map.shape();
    let winv = &w.w_inv;
    if let Operator::Sampling(idx) = map.operator() {
        let mut x = DMatrix::zeros(n, m);
        let mut cond = 1.0f64;
        for (g, (ks, coords)) in sample_groups(idx, w.side, n, m).into_iter().enumerate() {
            if ks.is_empty() {
                continue;
            }
            let s = ks.len();
            let mut a = DMatrix::from_fn(s, s, |r, c| winv[(coords[r], coords[c])]);
            for d in 0..s {
                a[(d, d)] += shift;
            }
            let f = factor(a, max_cond)?;
            cond = cond.max(f.cond());
            let b = DVector::from_fn(s, |r, _| problem.y[ks[r]]);
            let lambda = f.solve(&b);
            let d = winv.nrows();
            let vals = DVector::from_fn(d, |r, _| (0..s).map(|c| winv[(r, coords[c])] * lambda[c]).sum());
            write_group(&mut x, w.side, g, &vals);
        }
        return Ok((x, cond));
    }
    let lt = map.dense_transpose();
    let p = apply_blocks(lt, winv, w.side, n, m);
    // gemm on the cached L is much faster than a dot-product tr_mul
    let mut g = map.dense_matrix() * &p;
    g = (&g + g.transpose()) * 0.5;
    for d in 0..g.nrows() {
        g[(d, d)] += shift;
    }
    let f = factor(g, max_cond)?;
    let lambda = f.solve(&problem.y);
    let x = p * lambda;
    Ok((DMatrix::from_column_slice(n, m, x.as_slice()), f.cond()))
}

/// Image-form update; fails with [`Error::IllConditioned`] when the inner
/// system's condition estimate reaches [`SWITCH_COND`].
pub fn solve_image(problem: &ProblemInstance, w: &WeightMatrix) -> Result<DMatrix<f64>> {
    image_like(problem, w, 0.0, SWITCH_COND).map(|(x, _)| x)
}

/// Image-form update with an explicit conditioning limit; returns the
/// condition estimate alongside the iterate.
pub fn solve_image_bounded(problem: &ProblemInstance, w: &WeightMatrix, max_cond: f64) -> Result<(DMatrix<f64>, f64)> {
    image_like(problem, w, 0.0, max_cond)
}

/// Kernel-form update from a feasible reference point `x0`.
pub fn solve_kernel(problem: &ProblemInstance, w: &WeightMatrix, x0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let map = &problem.map;
    check_weight(map, w)?;
    let residual = problem.relative_residual(x0)?;
    if residual > FEASIBILITY_TOL {
        return Err(Error::Infeasible { residual });
    }
    let (n, m) = map.shape();
    let whalf = w.power(0.5);
    if let Operator::Sampling(idx) = map.operator() {
        let d = whalf.nrows();
        let mut x = DMatrix::zeros(n, m);
        for (g, (ks, coords)) in sample_groups(idx, w.side, n, m).into_iter().enumerate() {
            let mut fixed = vec![false; d];
            let mut vals = DVector::zeros(d);
            for (k, c) in ks.iter().zip(&coords) {
                fixed[*c] = true;
                vals[*c] = problem.y[*k];
            }
            let free: Vec<usize> = (0..d).filter(|&c| !fixed[c]).collect();
            if !free.is_empty() {
                // minimize ||B_F v_F + B_S y_S|| over the free coordinates
                let bf = DMatrix::from_fn(d, free.len(), |r, c| whalf[(r, free[c])]);
                let rhs = -(&whalf * &vals);
                let vf = lstsq(&bf, &rhs)?;
                for (c, &f) in free.iter().enumerate() {
                    vals[f] = vf[c];
                }
            }
            write_group(&mut x, w.side, g, &vals);
        }
        return Ok(x);
    }
    let k = map.kernel_basis()?;
    let a = apply_blocks(&k, &whalf, w.side, n, m);
    let b = apply_blocks(&DMatrix::from_column_slice(n * m, 1, x0.as_slice()), &whalf, w.side, n, m);
    let c = lstsq(&a, &b.column(0).into_owned())?;
    let step = k * c;
    Ok(x0 - DMatrix::from_column_slice(n, m, step.as_slice()))
}

/// Unconstrained minimizer of `||L(X) - y||^2 + c_L gamma ||W^{1/2} X||_F^2`
/// (right multiplication for right-side weights).
pub fn solve_relaxed(problem: &ProblemInstance, w: &WeightMatrix, gamma: f64, c_l: f64) -> Result<DMatrix<f64>> {
    solve_relaxed_cond(problem, w, gamma, c_l).map(|(x, _)| x)
}

fn solve_relaxed_cond(problem: &ProblemInstance, w: &WeightMatrix, gamma: f64, c_l: f64) -> Result<(DMatrix<f64>, f64)> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(c_l > 0.0 && c_l.is_finite()) {
        return Err(Error::Domain(format!(
            "relaxed update needs positive gamma and c_L, got {gamma} and {c_l}"
        )));
    }
    // Push-through identity: (L^T L + s D)^{-1} L^T = D^{-1} L^T (L D^{-1} L^T + s I)^{-1}.
    image_like(problem, w, c_l * gamma, f64::INFINITY)
}

/// One weighted least-squares update under the given strategy; `previous`
/// is the reference point for the kernel form.
pub fn solve(
    problem: &ProblemInstance,
    w: &WeightMatrix,
    strategy: LsStrategy,
    previous: &DMatrix<f64>,
    gamma: f64,
) -> Result<LsSolution> {
    match strategy {
        LsStrategy::Image => {
            let (x, cond) = solve_image_bounded(problem, w, f64::INFINITY)?;
            Ok(LsSolution { x, kind: UpdateKind::Image, cond })
        }
        LsStrategy::Kernel => Ok(LsSolution {
            x: solve_kernel(problem, w, previous)?,
            kind: UpdateKind::Kernel,
            cond: f64::NAN,
        }),
        LsStrategy::Auto => match solve_image_bounded(problem, w, SWITCH_COND) {
            Ok((x, cond)) => Ok(LsSolution { x, kind: UpdateKind::Image, cond }),
            Err(Error::IllConditioned { .. }) => Ok(LsSolution {
                x: solve_kernel(problem, w, previous)?,
                kind: UpdateKind::Kernel,
                cond: f64::NAN,
            }),
            Err(e) => Err(e),
        },
        LsStrategy::Relaxed { c_l } => {
            let (x, cond) = solve_relaxed_cond(problem, w, gamma, c_l)?;
            Ok(LsSolution { x, kind: UpdateKind::Relaxed, cond })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::weight;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    fn dense_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, l: usize) -> ProblemInstance {
        let map = LinearMap::dense(n, m, gauss(rng, l, n * m)).unwrap();
        let x = gauss(rng, n, m);
        ProblemInstance::from_reference(map, x, n.min(m), 0).unwrap()
    }

    fn sampling_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, l: usize) -> ProblemInstance {
        let idx = rand::seq::index::sample(rng, n * m, l);
        let map = LinearMap::sampling(n, m, idx.into_iter().map(|p| (p % n, p / n)).collect()).unwrap();
        let x = gauss(rng, n, 2) * gauss(rng, 2, m);
        ProblemInstance::from_reference(map, x, 2, 0).unwrap()
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn vector_examples() {
        let l = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0]);
        let x = weighted_ls(&l, &DMatrix::identity(2, 2), &y).unwrap();
        assert!((x - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-15);
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0]));
        let x = weighted_ls(&l, &h, &y).unwrap();
        assert!((x - DVector::from_vec(vec![200.0 / 101.0, 2.0 / 101.0])).amax() < 1e-14);
        let xk = weighted_ls_kernel(&l, &h, &y, &DVector::from_vec(vec![0.0, 2.0])).unwrap();
        assert!((xk - DVector::from_vec(vec![200.0 / 101.0, 2.0 / 101.0])).amax() < 1e-14);
        assert!(matches!(
            weighted_ls_kernel(&l, &h, &y, &DVector::from_vec(vec![0.0, 0.0])),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn vector_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let l = gauss(&mut rng, 4, 7);
            let h = gauss(&mut rng, 7, 7) + DMatrix::identity(7, 7) * 3.0;
            let y = gauss(&mut rng, 4, 1).column(0).into_owned();
            let x = weighted_ls(&l, &h, &y).unwrap();
            assert!((&l * &x - &y).norm() <= 1e-10 * y.norm());
            let x0 = weighted_ls(&l, &DMatrix::identity(7, 7), &y).unwrap() + pinv_and_kernel(&l, 1e-10).unwrap().1.column(0);
            let xk = weighted_ls_kernel(&l, &h, &y, &x0).unwrap();
            assert!((&x - &xk).norm() <= 1e-9 * x.norm());
            // fixed point
            let again = weighted_ls_kernel(&l, &h, &y, &x).unwrap();
            assert!((&again - &x).norm() <= 1e-12 * x.norm());
            // H = I projects onto the minimum-norm solution
            let mn = weighted_ls_kernel(&l, &DMatrix::identity(7, 7), &y, &x0).unwrap();
            let pinv = pinv_and_kernel(&l, 1e-10).unwrap().0;
            assert!((&mn - pinv * &y).norm() <= 1e-12 * mn.norm());
        }
    }

    #[test]
    fn identity_weight_gives_min_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let problem = dense_problem(&mut rng, 3, 4, 7);
        let w = weight(&DMatrix::zeros(3, 4), 1.0, 0.0, WeightSide::Left).unwrap();
        let x = solve_image(&problem, &w).unwrap();
        let mn = problem.map.min_norm_solution(&problem.y).unwrap();
        assert!(rel(&x, &mn) <= 1e-12);
    }

    #[test]
    fn example_two_by_two_rational_map() {
        // sampling (0,1),(1,0) with y = (1,1); iterate [[a,1],[1,b]]
        let map = LinearMap::sampling(2, 2, vec![(0, 1), (1, 0)]).unwrap();
        let problem = ProblemInstance::new(map, DVector::from_vec(vec![1.0, 1.0])).unwrap();
        for &(a, b, g) in &[(2.0, 0.3, 0.19), (1.5, -0.5, 0.01), (0.7, 0.9, 1.0)] {
            let x = DMatrix::from_row_slice(2, 2, &[a, 1.0, 1.0, b]);
            let w = weight(&x, g, 0.0, WeightSide::Left).unwrap();
            let next = solve_image(&problem, &w).unwrap();
            let q1 = (a + b) / (1.0 + g + b * b);
            let q2 = (a + b) / (1.0 + g + a * a);
            assert!((next[(0, 0)] - q1).abs() <= 1e-14, "{} vs {q1}", next[(0, 0)]);
            assert!((next[(1, 1)] - q2).abs() <= 1e-14);
            assert!((next[(0, 1)] - 1.0).abs() <= 1e-14 && (next[(1, 0)] - 1.0).abs() <= 1e-14);
        }
    }

    fn kernel_orthogonality(problem: &ProblemInstance, w: &WeightMatrix, x: &DMatrix<f64>) -> f64 {
        let wx = w.apply(x);
        let k = problem.map.kernel_basis().unwrap();
        let proj = k.tr_mul(&DVector::from_column_slice(wx.as_slice()));
        proj.norm() / wx.norm()
    }

    #[test]
    fn image_kernel_agree_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let problem = if trial % 2 == 0 {
                dense_problem(&mut rng, 5, 6, 12)
            } else {
                sampling_problem(&mut rng, 5, 6, 16)
            };
            let (n, m) = problem.shape();
            let x0 = problem.map.min_norm_solution(&problem.y).unwrap();
            let pert = gauss(&mut rng, n, m);
            for side in [WeightSide::Left, WeightSide::Right] {
                let w = weight(&(&x0 + &pert), 1e-2, 0.0, side).unwrap();
                let xi = solve_image(&problem, &w).unwrap();
                let xk = solve_kernel(&problem, &w, &x0).unwrap();
                assert!(rel(&xk, &xi) <= 1e-8, "{}", rel(&xk, &xi));
                assert!(problem.relative_residual(&xi).unwrap() <= 1e-10);
                assert!(kernel_orthogonality(&problem, &w, &xi) <= 1e-8);
                let again = solve_kernel(&problem, &w, &xi).unwrap();
                assert!(rel(&again, &xi) <= 1e-10);
            }
        }
    }

    #[test]
    fn sampling_paths_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let problem = sampling_problem(&mut rng, 6, 5, 18);
        let dense_map = LinearMap::dense(6, 5, problem.map.dense_matrix().clone()).unwrap();
        let dense = ProblemInstance::new(dense_map, problem.y.clone()).unwrap();
        let x0 = problem.map.min_norm_solution(&problem.y).unwrap();
        let base = &x0 + gauss(&mut rng, 6, 5);
        for side in [WeightSide::Left, WeightSide::Right] {
            let w = weight(&base, 0.05, 0.3, side).unwrap();
            let a = solve_image(&problem, &w).unwrap();
            let b = solve_image(&dense, &w).unwrap();
            assert!(rel(&a, &b) <= 1e-10);
            let a = solve_relaxed(&problem, &w, 0.1, 2.0).unwrap();
            let b = solve_relaxed(&dense, &w, 0.1, 2.0).unwrap();
            assert!(rel(&a, &b) <= 1e-10);
            let a = solve_kernel(&problem, &w, &x0).unwrap();
            let b = solve_kernel(&dense, &w, &x0).unwrap();
            assert!(rel(&a, &b) <= 1e-9);
        }
    }

    #[test]
    fn kernel_form_survives_tiny_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let map = LinearMap::dense(6, 6, gauss(&mut rng, 20, 36)).unwrap();
        let reference = gauss(&mut rng, 6, 1) * gauss(&mut rng, 1, 6);
        let problem = ProblemInstance::from_reference(map, reference.clone(), 1, 0).unwrap();
        let x0 = problem.map.min_norm_solution(&problem.y).unwrap();
        let w = weight(&reference, 1e-12, 0.0, WeightSide::Left).unwrap();
        assert!(matches!(solve_image(&problem, &w), Err(Error::IllConditioned { .. })));
        let x = solve_kernel(&problem, &w, &x0).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
        assert!(problem.relative_residual(&x).unwrap() <= 1e-8);
        let sol = solve(&problem, &w, LsStrategy::Auto, &x0, 1e-12).unwrap();
        assert_eq!(sol.kind, UpdateKind::Kernel);
    }

    #[test]
    fn relaxed_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let problem = dense_problem(&mut rng, 4, 4, 9);
        let w = weight(&DMatrix::zeros(4, 4), 1.0, 0.0, WeightSide::Left).unwrap();
        let big = solve_relaxed(&problem, &w, 1e12, 1.0).unwrap();
        assert!(big.norm() <= 1e-9 * problem.y.norm());
        let mn = problem.map.min_norm_solution(&problem.y).unwrap();
        let small = solve_relaxed(&problem, &w, 1e-8, 1.0).unwrap();
        assert!(rel(&small, &mn) <= 1e-3);
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let x = solve_relaxed(&problem, &w, 10f64.powi(-k), 1.0).unwrap();
            let r = (problem.map.apply(&x).unwrap() - &problem.y).norm();
            assert!(r < prev);
            prev = r;
        }
        assert!(solve_relaxed(&problem, &w, 0.0, 1.0).is_err());
    }

    #[test]
    fn relaxed_is_a_stationary_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let problem = dense_problem(&mut rng, 3, 5, 8);
        let base = gauss(&mut rng, 3, 5);
        for side in [WeightSide::Left, WeightSide::Right] {
            let w = weight(&base, 0.3, 0.0, side).unwrap();
            let (g, c) = (0.2, 1.5);
            let x = solve_relaxed(&problem, &w, g, c).unwrap();
            // gradient: 2 L*(L X - y) + 2 c g W X
            let r = problem.map.apply(&x).unwrap() - &problem.y;
            let grad = problem.map.adjoint(&r).unwrap() + w.apply(&x) * (c * g);
            assert!(grad.norm() <= 1e-10 * problem.y.norm());
        }
    }
}
