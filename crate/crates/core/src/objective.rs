//! The log-det objective family and its optimal weights.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::singular_values_padded;
use crate::linops::ProblemInstance;

/// Eigenvalues below this are clamped before taking powers.
pub const EIG_FLOOR: f64 = 1e-300;

/// Which Gram matrix the weight is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WeightSide {
    /// `n x n` weights from `X X^T`.
    Left,
    /// `m x m` weights from `X^T X`.
    Right,
}

impl WeightSide {
    pub fn flip(self) -> Self {
        match self {
            WeightSide::Left => WeightSide::Right,
            WeightSide::Right => WeightSide::Left,
        }
    }

    /// Size of the weight matrix for an `n x m` iterate.
    pub fn dim(self, n: usize, m: usize) -> usize {
        match self {
            WeightSide::Left => n,
            WeightSide::Right => m,
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("gamma must be positive, got {gamma}")))
    }
}

fn check_gamma_nonneg(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("gamma must be non-negative, got {gamma}")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("weight strength p must lie in [0, 1], got {p}")))
    }
}

/// `log det(X X^T + gamma I)` (left) or `log det(X^T X + gamma I)` (right).
pub fn f_gamma(x: &DMatrix<f64>, gamma: f64, side: WeightSide) -> Result<f64> {
    check_gamma(gamma)?;
    let d = side.dim(x.nrows(), x.ncols());
    Ok(f_gamma_from_sigma(&singular_values_padded(x, d), gamma))
}

/// `sum log(s_i^2 + gamma)` over the given (padded) singular values.
pub fn f_gamma_from_sigma(sigma: &[f64], gamma: f64) -> f64 {
    sigma.iter().map(|s| (s * s + gamma).ln()).sum()
}

/// `sum log(1 + s_i^2 / gamma)`, the log-det objective shifted to vanish at zero.
pub fn f_gamma_scaled(x: &DMatrix<f64>, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(singular_values_padded(x, x.nrows())
        .iter()
        .map(|s| (s * s / gamma).ln_1p())
        .sum())
}

/// Smoothed Schatten quantity `sum (s_i^2 + gamma)^{p/2}` over the `n` row-side values.
pub fn schatten(x: &DMatrix<f64>, gamma: f64, p: f64) -> Result<f64> {
    check_gamma_nonneg(gamma)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("Schatten exponent must lie in (0, 1], got {p}")));
    }
    Ok(singular_values_padded(x, x.nrows())
        .iter()
        .map(|s| (s * s + gamma).powf(p / 2.0))
        .sum())
}

/// Elementary symmetric polynomials `e_0..=e_len` of `values`.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (i, &v) in values.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}

/// Sum of squared `k x k` minors, evaluated as `e_k(s_1^2, ..., s_n^2)`.
pub fn det2_k(x: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("minor order must lie in 1..={n}, got {k}")));
    }
    let sq: Vec<f64> = singular_values_padded(x, n).iter().map(|s| s * s).collect();
    Ok(elementary_symmetric(&sq)[k])
}

/// `gamma^n + sum_k gamma^{n-k} det2_k(X)`.
pub fn det_expansion(x: &DMatrix<f64>, gamma: f64) -> Result<f64> {
    check_gamma_nonneg(gamma)?;
    let n = x.nrows();
    let sq: Vec<f64> = singular_values_padded(x, n).iter().map(|s| s * s).collect();
    let e = elementary_symmetric(&sq);
    Ok((0..=n).map(|k| gamma.powi((n - k) as i32) * e[k]).sum())
}

/// A symmetric positive definite weight stored through its eigendecomposition.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    pub w: DMatrix<f64>,
    pub w_inv: DMatrix<f64>,
    pub side: WeightSide,
    pub gamma: f64,
    pub p: f64,
    basis: DMatrix<f64>,
    eigs: Vec<f64>,
}

impl WeightMatrix {
    fn from_eigen(basis: DMatrix<f64>, eigs: Vec<f64>, side: WeightSide, gamma: f64, p: f64) -> Self {
        let mut wm = WeightMatrix {
            w: DMatrix::zeros(0, 0),
            w_inv: DMatrix::zeros(0, 0),
            side,
            gamma,
            p,
            basis,
            eigs,
        };
        wm.w = wm.power(1.0);
        wm.w_inv = wm.power(-1.0);
        wm
    }

    /// Wrap an arbitrary SPD matrix.
    pub fn from_matrix(w: DMatrix<f64>, side: WeightSide, gamma: f64, p: f64) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::Dimension(format!("weight must be square, got {}x{}", w.nrows(), w.ncols())));
        }
        let sym = (&w + w.transpose()) * 0.5;
        if (&sym - &w).amax() > 1e-12 * w.amax().max(1.0) {
            return Err(Error::Domain("weight matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(sym);
        if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("weight matrix is not positive definite".into()));
        }
        let eigs = eig.eigenvalues.iter().copied().collect();
        Ok(Self::from_eigen(eig.eigenvectors, eigs, side, gamma, p))
    }

    pub fn dim(&self) -> usize {
        self.eigs.len()
    }

    /// Eigenvalues of `W`, ordered like the columns of [`WeightMatrix::basis`].
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigs
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `W^t`, computed from the eigendecomposition.
    pub fn power(&self, t: f64) -> DMatrix<f64> {
        let mut scaled = self.basis.clone();
        for (j, &e) in self.eigs.iter().enumerate() {
            scaled.column_mut(j).scale_mut(e.powf(t));
        }
        let out = &scaled * self.basis.transpose();
        (&out + out.transpose()) * 0.5
    }

    pub fn log_det(&self) -> f64 {
        self.eigs.iter().map(|e| e.ln()).sum()
    }

    /// `W X` for the left side, `X W` for the right side.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self.side {
            WeightSide::Left => &self.w * x,
            WeightSide::Right => x * &self.w,
        }
    }

    /// `W^{-1} X` for the left side, `X W^{-1}` for the right side.
    pub fn apply_inv(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self.side {
            WeightSide::Left => &self.w_inv * x,
            WeightSide::Right => x * &self.w_inv,
        }
    }

    /// `||W^{1/2} X||_F^2` (left) or `||X W^{1/2}||_F^2` (right).
    pub fn weighted_norm2(&self, x: &DMatrix<f64>) -> f64 {
        // Go through the eigenbasis; forming W X first loses the small terms.
        match self.side {
            WeightSide::Left => {
                let b = self.basis.tr_mul(x);
                self.eigs.iter().enumerate().map(|(j, e)| e * b.row(j).norm_squared()).sum()
            }
            WeightSide::Right => {
                let b = x * &self.basis;
                self.eigs.iter().enumerate().map(|(j, e)| e * b.column(j).norm_squared()).sum()
            }
        }
    }

    fn check_iterate(&self, x: &DMatrix<f64>) -> Result<()> {
        let d = self.side.dim(x.nrows(), x.ncols());
        if d != self.dim() {
            return Err(Error::Dimension(format!(
                "{:?} weight of size {} does not fit a {}x{} matrix",
                self.side,
                self.dim(),
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }
}

/// `(X X^T + gamma I)^{p/2 - 1}` (left) or `(X^T X + gamma I)^{p/2 - 1}` (right).
///
/// `gamma = 0` is accepted; eigenvalues are then floored at [`EIG_FLOOR`].
pub fn weight(x: &DMatrix<f64>, gamma: f64, p: f64, side: WeightSide) -> Result<WeightMatrix> {
    check_gamma_nonneg(gamma)?;
    check_p(p)?;
    let a = match side {
        WeightSide::Left => x.clone(),
        WeightSide::Right => x.transpose(),
    };
    // The symmetric eigensolver is backward stable; the SVD reconstructs
    // X X^T only to about 1e-13 relative, which shows up in the updates.
    let eig = SymmetricEigen::new(&a * a.transpose());
    let sigma: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(weight_from_svd(eig.eigenvectors, &sigma, gamma, p, side))
}

/// Weight from a complete left basis `u` (`d x d`) and `d` singular values.
pub(crate) fn weight_from_svd(u: DMatrix<f64>, sigma: &[f64], gamma: f64, p: f64, side: WeightSide) -> WeightMatrix {
    let e = p / 2.0 - 1.0;
    let eigs = sigma
        .iter()
        .map(|s| (s * s + gamma).max(EIG_FLOOR).powf(e))
        .collect();
    WeightMatrix::from_eigen(u, eigs, side, gamma, p)
}

/// `tr(W (X X^T + gamma I)) - log det W - n`, or its right-side analogue.
pub fn j_gamma(x: &DMatrix<f64>, w: &WeightMatrix, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    w.check_iterate(x)?;
    if w.eigs.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("weight matrix is not positive definite".into()));
    }
    let d = w.dim() as f64;
    let trace = w.weighted_norm2(x) + gamma * w.w.trace();
    Ok(trace - w.log_det() - d)
}

/// Gradient of `f_gamma` (left side), `2 (X X^T + gamma I)^{-1} X`.
pub fn grad_f(x: &DMatrix<f64>, gamma: f64) -> Result<DMatrix<f64>> {
    check_gamma(gamma)?;
    let w = weight(x, gamma, 0.0, WeightSide::Left)?;
    Ok(w.apply(x) * 2.0)
}

/// `||L(X) - y||^2 + c_L * gamma * f^a_gamma(X)`.
pub fn f_relaxed(problem: &ProblemInstance, x: &DMatrix<f64>, gamma: f64, c_l: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(c_l > 0.0) {
        return Err(Error::Domain(format!("c_L must be positive, got {c_l}")));
    }
    let r = problem.map.apply(x)? - &problem.y;
    Ok(r.norm_squared() + c_l * gamma * f_gamma_scaled(x, gamma)?)
}

/// Penalty `sum h(s_i^2)` whose gradient in `s^2` is `(s^2 + gamma)^{p/2 - 1}`,
/// normalized so that `h(0) = 0`: `log(1 + s^2/gamma)` for `p = 0`, otherwise
/// `(2/p) ((s^2 + gamma)^{p/2} - gamma^{p/2})`.
pub fn smoothed_penalty(sigma: &[f64], gamma: f64, p: f64) -> f64 {
    if p == 0.0 {
        sigma.iter().map(|s| (s * s / gamma).ln_1p()).sum()
    } else {
        let h = p / 2.0;
        sigma
            .iter()
            .map(|s| (2.0 / p) * ((s * s + gamma).powf(h) - gamma.powf(h)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use crate::linops::LinearMap;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn f_gamma_basic_values() {
        let z = DMatrix::zeros(2, 2);
        assert!((f_gamma(&z, std::f64::consts::E, WeightSide::Left).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(f_gamma(&z, 0.0, WeightSide::Left), Err(Error::Domain(_))));
        // X(1, 0) of the 2x3 example family: det(X X^T) = 3
        let x: DMatrix<f64> = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 2.0, 1.0, 0.0, 1.0]);
        let xxt = &x * x.transpose();
        assert!((xxt.determinant() - 3.0).abs() < 1e-12);
        let v = f_gamma(&x, 1e-12, WeightSide::Left).unwrap().exp();
        assert!((v - 3.0).abs() < 1e-9);
    }

    #[test]
    fn side_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gauss(&mut rng, 3, 5);
        let g = 0.7f64;
        let d = f_gamma(&x, g, WeightSide::Right).unwrap() - f_gamma(&x, g, WeightSide::Left).unwrap();
        assert!((d - 2.0 * g.ln()).abs() <= 1e-12);
    }

    #[test]
    fn scaled_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(f_gamma_scaled(&DMatrix::zeros(3, 3), 0.1).unwrap(), 0.0);
        let x = gauss(&mut rng, 3, 4);
        let g = 0.3f64;
        let a = f_gamma_scaled(&x, g).unwrap();
        let b = f_gamma(&x, g, WeightSide::Left).unwrap() - 3.0 * g.ln();
        assert!((a - b).abs() <= 1e-12);
        let mut prev = f64::INFINITY;
        for k in -6..4 {
            let v = f_gamma_scaled(&x, 10f64.powi(k)).unwrap();
            assert!(v < prev && v >= 0.0);
            prev = v;
        }
    }

    #[test]
    fn schatten_values() {
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((schatten(&eye, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        let z = DMatrix::zeros(3, 3);
        assert!((schatten(&z, 4.0, 0.5).unwrap() - 3.0 * 4f64.powf(0.25)).abs() < 1e-14);
        assert!(schatten(&eye, 1.0, 0.0).is_err());
        assert!(schatten(&eye, 1.0, 1.5).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gauss(&mut rng, 3, 3);
        let g = 0.5;
        let p = 1e-6;
        let lim = (schatten(&x, g, p).unwrap() - 3.0) / p;
        let half_f = f_gamma(&x, g, WeightSide::Left).unwrap() / 2.0;
        assert!(rel(lim, half_f) <= 1e-4, "{lim} vs {half_f}");
    }

    #[test]
    fn det2_values() {
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((det2_k(&eye, 1).unwrap() - 2.0).abs() < 1e-14);
        assert!((det2_k(&eye, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!(det2_k(&eye, 0).is_err());
        assert!(det2_k(&eye, 3).is_err());
        let u = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let v = DVector::from_vec(vec![0.5, 3.0, 1.0, -2.0]);
        let r1 = &u * v.transpose();
        assert!(det2_k(&r1, 2).unwrap() <= 1e-20 * r1.norm().powi(4));
        assert!(det2_k(&r1, 3).unwrap() <= 1e-20 * r1.norm().powi(6));
    }

    #[test]
    fn det_expansion_values() {
        let eye = DMatrix::<f64>::identity(2, 2);
        let g = 0.4f64;
        assert!((det_expansion(&eye, g).unwrap() - (g * g + 2.0 * g + 1.0)).abs() < 1e-14);
        assert!((det_expansion(&DMatrix::zeros(3, 2), g).unwrap() - g.powi(3)).abs() < 1e-16);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gauss(&mut rng, 3, 4);
        let direct = (&x * x.transpose() + DMatrix::identity(3, 3) * 0.3).determinant();
        assert!(rel(det_expansion(&x, 0.3).unwrap(), direct) <= 1e-10);
    }

    #[test]
    fn frobenius_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = gauss(&mut rng, 3, 4);
            for g in [1e-2, 1.0, 10.0f64] {
                let bound = g.powi(1 - 3) * det_expansion(&x, g).unwrap();
                assert!(x.norm_squared() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn weight_examples() {
        let w = weight(&DMatrix::zeros(2, 2), 2.0, 0.0, WeightSide::Left).unwrap();
        assert!((w.w.clone() - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let w = weight(&x, 0.0, 1.0, WeightSide::Left).unwrap();
        let mut e: Vec<f64> = w.eigenvalues().to_vec();
        e.sort_by(f64::total_cmp);
        assert!((e[0] - 0.5).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
        assert!(weight(&x, -1.0, 0.0, WeightSide::Left).is_err());
        assert!(weight(&x, 1.0, 1.5, WeightSide::Left).is_err());
    }

    #[test]
    fn weight_inverts_regularized_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (n, m) in [(3, 5), (5, 3), (4, 4)] {
            let x = gauss(&mut rng, n, m);
            let g = 0.25;
            let wl = weight(&x, g, 0.0, WeightSide::Left).unwrap();
            let gram = &x * x.transpose() + DMatrix::identity(n, n) * g;
            assert!((&wl.w * &gram - DMatrix::identity(n, n)).amax() <= 1e-10);
            assert!((&wl.w_inv - &gram).amax() <= 1e-10 * gram.amax());
            let wr = weight(&x, g, 0.0, WeightSide::Right).unwrap();
            let gram = x.transpose() * &x + DMatrix::identity(m, m) * g;
            assert!((&wr.w * &gram - DMatrix::identity(m, m)).amax() <= 1e-10);
        }
    }

    #[test]
    fn j_gamma_minimized_by_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = gauss(&mut rng, 3, 4);
        let g = 0.5;
        for side in [WeightSide::Left, WeightSide::Right] {
            let w = weight(&x, g, 0.0, side).unwrap();
            let j = j_gamma(&x, &w, g).unwrap();
            let f = f_gamma(&x, g, side).unwrap();
            assert!((j - f).abs() <= 1e-10 * f.abs().max(1.0));
            let d = w.dim();
            for _ in 0..50 {
                let e = gauss(&mut rng, d, d) * 0.05;
                let cand = &w.w + &e * e.transpose() - (&e + e.transpose()) * 0.1;
                let Ok(pert) = WeightMatrix::from_matrix((&cand + cand.transpose()) * 0.5, side, g, 0.0) else {
                    continue;
                };
                assert!(j_gamma(&x, &pert, g).unwrap() > j);
            }
        }
        let eye = WeightMatrix::from_matrix(DMatrix::identity(3, 3), WeightSide::Left, 2.0, 0.0).unwrap();
        assert!((j_gamma(&DMatrix::zeros(3, 4), &eye, 2.0).unwrap() - 3.0).abs() < 1e-14);
        assert!(WeightMatrix::from_matrix(-DMatrix::<f64>::identity(2, 2), WeightSide::Left, 1.0, 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(grad_f(&DMatrix::zeros(2, 3), 1.0).unwrap().amax(), 0.0);
        let x = gauss(&mut rng, 3, 4);
        let g = 0.5;
        let grad = grad_f(&x, g).unwrap();
        let h = 1e-5;
        let mut fd = DMatrix::zeros(3, 4);
        for i in 0..3 {
            for j in 0..4 {
                let mut xp = x.clone();
                xp[(i, j)] += h;
                let mut xm = x.clone();
                xm[(i, j)] -= h;
                fd[(i, j)] = (f_gamma(&xp, g, WeightSide::Left).unwrap() - f_gamma(&xm, g, WeightSide::Left).unwrap()) / (2.0 * h);
            }
        }
        assert!((&fd - &grad).norm() <= 1e-6 * grad.norm());
    }

    #[test]
    fn gradient_vanishes_on_kernel_at_stationary_point() {
        let g = 0.19f64;
        let a = (1.0 - g).sqrt();
        let x = DMatrix::from_row_slice(2, 2, &[a, 1.0, 1.0, a]);
        let grad = grad_f(&x, g).unwrap();
        // kernel of the map sampling (0,1),(1,0) consists of the diagonal entries
        assert!(grad[(0, 0)].abs() <= 1e-10 && grad[(1, 1)].abs() <= 1e-10);
    }

    #[test]
    fn rank_surrogate_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = gauss(&mut rng, 5, 2) * gauss(&mut rng, 2, 6);
        let s = singular_values(&x);
        let mut prev = 0.0;
        for k in 0..12 {
            let g = s[1] * s[1] * 10f64.powi(-k);
            let v = weight(&x, g, 0.0, WeightSide::Left).unwrap().weighted_norm2(&x);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        let g = 1e-12 * s[1] * s[1];
        let v = weight(&x, g, 0.0, WeightSide::Left).unwrap().weighted_norm2(&x);
        assert!((v - 2.0).abs() <= 1e-6, "{v}");
    }

    #[test]
    fn relaxed_objective() {
        let map = LinearMap::sampling(2, 2, vec![(0, 1), (1, 0)]).unwrap();
        let problem = ProblemInstance::new(map, DVector::from_vec(vec![1.0, 2.0])).unwrap();
        let z = DMatrix::zeros(2, 2);
        assert!((f_relaxed(&problem, &z, 0.3, 1.0).unwrap() - 5.0).abs() < 1e-14);
        let feasible = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 3.0]);
        assert!(f_relaxed(&problem, &feasible, 1e-14, 1.0).unwrap() < 1e-11);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = gauss(&mut rng, 2, 2);
        let mut prev = 0.0;
        for k in -8..3 {
            let v = f_relaxed(&problem, &x, 10f64.powi(k), 0.7).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn penalty_gradient_matches_weight_exponent() {
        for p in [0.0, 0.5, 1.0] {
            let g = 0.3;
            let s = 1.7f64;
            let h = 1e-6;
            let fd = (smoothed_penalty(&[(s * s + h).sqrt()], g, p) - smoothed_penalty(&[(s * s - h).sqrt()], g, p)) / (2.0 * h);
            assert!(rel(fd, (s * s + g).powf(p / 2.0 - 1.0)) < 1e-7);
            assert_eq!(smoothed_penalty(&[0.0], g, p), 0.0);
        }
    }
}
