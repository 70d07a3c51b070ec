//! Small dense linear-algebra helpers shared by the solvers.
//!
//! Everything here works on column-major `nalgebra` matrices, so `vec(X)` is
//! simply the storage slice of `X`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Thin singular value decomposition with singular values sorted in
/// descending order.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let k = x.nrows().min(x.ncols());
        if k == 0 {
            return ThinSvd {
                u: DMatrix::zeros(x.nrows(), 0),
                sigma: Vec::new(),
                v_t: DMatrix::zeros(0, x.ncols()),
            };
        }
        let svd = x.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u = DMatrix::from_fn(x.nrows(), k, |r, c| u[(r, order[c])]);
        let v_t = DMatrix::from_fn(k, x.ncols(), |r, c| v_t[(order[r], c)]);
        ThinSvd { u, sigma, v_t }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Best approximation of rank at most `r` (Eckart-Young).
    pub fn truncated(&self, r: usize) -> DMatrix<f64> {
        let r = r.min(self.sigma.len());
        let mut us = self.u.columns(0, r).into_owned();
        for (j, s) in self.sigma.iter().take(r).enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v_t.rows(0, r)
    }
}

/// Singular values in descending order, `min(rows, cols)` of them.
pub fn singular_values(x: &DMatrix<f64>) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = x.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values padded with zeros to length `len`.
pub fn singular_values_padded(x: &DMatrix<f64>, len: usize) -> Vec<f64> {
    let mut s = singular_values(x);
    s.resize(len.max(s.len()), 0.0);
    s.truncate(len);
    s
}

pub fn truncate_rank(x: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    ThinSvd::new(x).truncated(r)
}

/// Frobenius inner product.
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Cholesky factor of a symmetric positive definite matrix with a cheap
/// condition estimate taken from the diagonal of the factor.
pub struct SpdFactor {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    cond: f64,
}

impl SpdFactor {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "expected a square system, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let chol = Cholesky::new(matrix.clone()).ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
        let cond = if lo > 0.0 && lo.is_finite() {
            (hi / lo).powi(2)
        } else {
            f64::INFINITY
        };
        if !cond.is_finite() {
            return Err(Error::IllConditioned { cond });
        }
        Ok(SpdFactor { matrix, chol, cond })
    }

    pub fn cond(&self) -> f64 {
        self.cond
    }

    /// Solve with one pass of iterative refinement.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        let residual = rhs - &self.matrix * &x;
        x += self.chol.solve(&residual);
        x
    }

    pub fn solve_mat(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = self.chol.solve(rhs);
        let residual = rhs - &self.matrix * &x;
        x += self.chol.solve(&residual);
        x
    }
}

/// Solve an SPD system, rejecting it if the condition estimate reaches `max_cond`.
pub fn spd_solve(matrix: DMatrix<f64>, rhs: &DVector<f64>, max_cond: f64) -> Result<DVector<f64>> {
    let factor = SpdFactor::new(matrix)?;
    if factor.cond() >= max_cond {
        return Err(Error::IllConditioned { cond: factor.cond() });
    }
    Ok(factor.solve(rhs))
}

/// Orthonormal basis of the row space of a full-row-rank `k x m` matrix,
/// returned as a `k x m` matrix with orthonormal rows.
pub fn orthonormalize_rows(z: &DMatrix<f64>) -> DMatrix<f64> {
    let q = z.transpose().qr().q();
    q.transpose()
}

/// Pseudo-inverse and orthonormal kernel basis of a full-row-rank `l x d`
/// matrix, from one SVD of its zero-padded square version.
///
/// Fails with [`Error::DegenerateOperator`] when `sigma_min <= tol * sigma_max`.
pub fn pinv_and_kernel(l: &DMatrix<f64>, tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (rows, d) = l.shape();
    if rows == 0 || rows > d {
        return Err(Error::Dimension(format!("expected a wide matrix, got {rows}x{d}")));
    }
    let mut padded = DMatrix::zeros(d, d);
    padded.rows_mut(0, rows).copy_from(l);
    let svd = ThinSvd::new(&padded);
    let smax = svd.sigma[0];
    let smin = svd.sigma[rows - 1];
    if !(smax > 0.0) || smin <= tol * smax {
        let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
        return Err(Error::DegenerateOperator { ratio });
    }
    let v = svd.v_t.transpose();
    let kernel = v.columns(rows, d - rows).into_owned();
    let mut vs = v.columns(0, rows).into_owned();
    for j in 0..rows {
        vs.column_mut(j).scale_mut(1.0 / svd.sigma[j]);
    }
    let pinv = vs * svd.u.view((0, 0), (rows, rows)).transpose();
    Ok((pinv, kernel))
}

/// Least-squares solution of `a x ~ b` for a full-column-rank `a`, via QR.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() < a.ncols() || a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "least squares needs a tall system, got {}x{} with {} right-hand sides",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let k = a.ncols();
    let qr = a.clone().qr();
    let mut rhs = b.clone();
    qr.q_tr_mul(&mut rhs);
    qr.r()
        .solve_upper_triangular(&rhs.rows(0, k).into_owned())
        .ok_or(Error::IllConditioned { cond: f64::INFINITY })
}
