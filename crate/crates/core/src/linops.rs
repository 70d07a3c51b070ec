//! Measurement operators `L: R^{n x m} -> R^l` and the affine set `L^{-1}(y)`.
//!
//! Matrices are vectorized column-major everywhere: entry `(i, j)` of an
//! `n x m` matrix sits at position `j * n + i` of `vec(X)`. This matches the
//! storage order of `nalgebra::DMatrix`, so `X.as_slice()` is `vec(X)`.
//!
//! Three representations are supported:
//!
//! * `Dense`: an explicit `l x nm` matrix.
//! * `Sampling`: a list of distinct observed entries.
//! * `Factored`: a sum of row-wise Khatri-Rao products,
//!   `L = sum_i L2_i^T (*) L1_i` with `L1_i: l x n` and `L2_i: m x l`, which
//!   allows `L(YZ)` to be evaluated without forming `YZ`.
//!
//! Global objects (kernel basis, pseudo-inverse) are computed lazily from an
//! SVD of the dense operator matrix and cached; sampling operators use closed
//! forms instead.

use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::pinv_and_kernel;

/// Smallest admissible ratio `sigma_min / sigma_max` of the operator matrix.
pub const FULL_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Dense(DMatrix<f64>),
    Sampling(Vec<(usize, usize)>),
    Factored {
        left: Vec<DMatrix<f64>>,
        right: Vec<DMatrix<f64>>,
    },
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::Dense(_) => "dense",
            Operator::Sampling(_) => "sampling",
            Operator::Factored { .. } => "factored",
        }
    }
}

#[derive(Debug)]
struct Decomposition {
    pinv: DMatrix<f64>,
    kernel: DMatrix<f64>,
}

/// A linear measurement operator on `n x m` matrices.
#[derive(Clone, Debug)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    len: usize,
    op: Operator,
    dense: Arc<OnceLock<DMatrix<f64>>>,
    dense_t: Arc<OnceLock<DMatrix<f64>>>,
    decomposition: Arc<OnceLock<std::result::Result<Decomposition, Error>>>,
}

impl PartialEq for LinearMap {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.op == other.op
    }
}

impl LinearMap {
    fn with_op(rows: usize, cols: usize, len: usize, op: Operator) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("operator domain must be non-empty".into()));
        }
        if len == 0 || len >= rows * cols {
            return Err(Error::Dimension(format!(
                "need 0 < l < n*m for an underdetermined operator, got l={len}, n*m={}",
                rows * cols
            )));
        }
        Ok(LinearMap {
            rows,
            cols,
            len,
            op,
            dense: Arc::new(OnceLock::new()),
            dense_t: Arc::new(OnceLock::new()),
            decomposition: Arc::new(OnceLock::new()),
        })
    }

    /// Operator given by an explicit `l x nm` matrix acting on `vec(X)`.
    pub fn dense(rows: usize, cols: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() != rows * cols {
            return Err(Error::Dimension(format!(
                "dense operator has {} columns, expected n*m = {}",
                matrix.ncols(),
                rows * cols
            )));
        }
        let len = matrix.nrows();
        Self::with_op(rows, cols, len, Operator::Dense(matrix))
    }

    /// Operator reading the listed entries, in order.
    pub fn sampling(rows: usize, cols: usize, indices: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &(i, j) in &indices {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "sample ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Domain(format!("duplicate sample ({i}, {j})")));
            }
        }
        let len = indices.len();
        Self::with_op(rows, cols, len, Operator::Sampling(indices))
    }

    /// Operator `L = sum_i L2_i^T (*) L1_i` (row-wise Khatri-Rao products).
    pub fn factored(
        rows: usize,
        cols: usize,
        left: Vec<DMatrix<f64>>,
        right: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if left.is_empty() || left.len() != right.len() {
            return Err(Error::Dimension(format!(
                "factored operator needs matching non-empty factor lists, got {} and {}",
                left.len(),
                right.len()
            )));
        }
        let len = left[0].nrows();
        for (l1, l2) in left.iter().zip(&right) {
            if l1.shape() != (len, rows) || l2.shape() != (cols, len) {
                return Err(Error::Dimension(format!(
                    "factor shapes {:?} / {:?} do not match l={len}, n={rows}, m={cols}",
                    l1.shape(),
                    l2.shape()
                )));
            }
        }
        Self::with_op(rows, cols, len, Operator::Factored { left, right })
    }

    /// `(n, m)`: shape of the matrices the operator acts on.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of measurements `l`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn samples(&self) -> Option<&[(usize, usize)]> {
        match &self.op {
            Operator::Sampling(idx) => Some(idx),
            _ => None,
        }
    }

    fn check_shape(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension(format!(
                "expected a {}x{} matrix, got {}x{}",
                self.rows,
                self.cols,
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.len {
            return Err(Error::Dimension(format!(
                "expected {} measurements, got {}",
                self.len,
                v.len()
            )));
        }
        Ok(())
    }

    /// `L(X)`.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.check_shape(x)?;
        Ok(match &self.op {
            Operator::Dense(l) => l * DVector::from_column_slice(x.as_slice()),
            Operator::Sampling(idx) => DVector::from_iterator(idx.len(), idx.iter().map(|&(i, j)| x[(i, j)])),
            Operator::Factored { left, right } => {
                let mut out = DVector::zeros(self.len);
                for (l1, l2) in left.iter().zip(right) {
                    let lx = l1 * x;
                    for k in 0..self.len {
                        out[k] += lx.row(k).dot(&l2.column(k).transpose());
                    }
                }
                out
            }
        })
    }

    /// `L*(v)`, the adjoint with respect to the Frobenius inner product.
    pub fn adjoint(&self, v: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(v)?;
        Ok(match &self.op {
            Operator::Dense(l) => {
                let flat = l.tr_mul(v);
                DMatrix::from_column_slice(self.rows, self.cols, flat.as_slice())
            }
            Operator::Sampling(idx) => {
                let mut x = DMatrix::zeros(self.rows, self.cols);
                for (&(i, j), vk) in idx.iter().zip(v.iter()) {
                    x[(i, j)] = *vk;
                }
                x
            }
            Operator::Factored { left, right } => {
                let mut x = DMatrix::zeros(self.rows, self.cols);
                for (l1, l2) in left.iter().zip(right) {
                    // L1^T diag(v) L2^T
                    let mut scaled = l1.clone();
                    for (k, vk) in v.iter().enumerate() {
                        scaled.row_mut(k).scale_mut(*vk);
                    }
                    x += scaled.tr_mul(&l2.transpose());
                }
                x
            }
        })
    }

    /// `L(YZ)` evaluated from the factors, `sum_i rowsum((L1_i Y) .* (Z L2_i)^T)`.
    pub fn apply_factored(&self, y: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<DVector<f64>> {
        let Operator::Factored { left, right } = &self.op else {
            return Err(Error::UnsupportedVariant(self.op.name()));
        };
        if y.nrows() != self.rows || z.ncols() != self.cols || y.ncols() != z.nrows() {
            return Err(Error::Dimension(format!(
                "factors {}x{} and {}x{} do not form a {}x{} matrix",
                y.nrows(),
                y.ncols(),
                z.nrows(),
                z.ncols(),
                self.rows,
                self.cols
            )));
        }
        let mut out = DVector::zeros(self.len);
        for (l1, l2) in left.iter().zip(right) {
            let ly = l1 * y;
            let zl = z * l2;
            for k in 0..self.len {
                out[k] += ly.row(k).dot(&zl.column(k).transpose());
            }
        }
        Ok(out)
    }

    /// Rank-one factored form of a sampling operator; factored operators are
    /// returned unchanged.
    pub fn to_factored(&self) -> Result<LinearMap> {
        match &self.op {
            Operator::Factored { .. } => Ok(self.clone()),
            Operator::Sampling(idx) => {
                let mut l1 = DMatrix::zeros(self.len, self.rows);
                let mut l2 = DMatrix::zeros(self.cols, self.len);
                for (k, &(i, j)) in idx.iter().enumerate() {
                    l1[(k, i)] = 1.0;
                    l2[(j, k)] = 1.0;
                }
                LinearMap::factored(self.rows, self.cols, vec![l1], vec![l2])
            }
            Operator::Dense(_) => Err(Error::UnsupportedVariant("dense")),
        }
    }

    /// The `l x nm` matrix acting on `vec(X)`.
    pub fn dense_matrix(&self) -> &DMatrix<f64> {
        if let Operator::Dense(l) = &self.op {
            return l;
        }
        self.dense.get_or_init(|| self.materialize())
    }

    /// `L^T` as an `nm x l` matrix; column `k` is `vec(L_k)`.
    pub fn dense_transpose(&self) -> &DMatrix<f64> {
        self.dense_t.get_or_init(|| self.dense_matrix().transpose())
    }

    fn materialize(&self) -> DMatrix<f64> {
        let n = self.rows;
        let mut out = DMatrix::zeros(self.len, n * self.cols);
        match &self.op {
            Operator::Dense(l) => out.copy_from(l),
            Operator::Sampling(idx) => {
                for (k, &(i, j)) in idx.iter().enumerate() {
                    out[(k, j * n + i)] = 1.0;
                }
            }
            Operator::Factored { left, right } => {
                for (l1, l2) in left.iter().zip(right) {
                    for k in 0..self.len {
                        for j in 0..self.cols {
                            let c = l2[(j, k)];
                            if c == 0.0 {
                                continue;
                            }
                            for a in 0..n {
                                out[(k, j * n + a)] += c * l1[(k, a)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn decomposition(&self) -> Result<&Decomposition> {
        self.decomposition
            .get_or_init(|| {
                let (pinv, kernel) = pinv_and_kernel(self.dense_matrix(), FULL_RANK_TOL)?;
                Ok(Decomposition { pinv, kernel })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Orthonormal basis of `kernel(L)`, one vectorized matrix per column.
    pub fn kernel_basis(&self) -> Result<DMatrix<f64>> {
        if let Operator::Sampling(idx) = &self.op {
            let nm = self.rows * self.cols;
            let sampled: HashSet<usize> = idx.iter().map(|&(i, j)| j * self.rows + i).collect();
            let free: Vec<usize> = (0..nm).filter(|p| !sampled.contains(p)).collect();
            let mut k = DMatrix::zeros(nm, free.len());
            for (c, &p) in free.iter().enumerate() {
                k[(p, c)] = 1.0;
            }
            return Ok(k);
        }
        Ok(self.decomposition()?.kernel.clone())
    }

    /// Check that the operator has full row rank.
    pub fn check_full_rank(&self) -> Result<()> {
        match &self.op {
            Operator::Sampling(_) => Ok(()),
            _ => self.decomposition().map(|_| ()),
        }
    }

    /// Minimum Frobenius norm element of `L^{-1}(y)`.
    pub fn min_norm_solution(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(y)?;
        match &self.op {
            Operator::Sampling(_) => self.adjoint(y),
            _ => {
                let d = self.decomposition()?;
                let x = &d.pinv * y;
                let x = DMatrix::from_column_slice(self.rows, self.cols, x.as_slice());
                self.check_feasible(&x, y)?;
                Ok(x)
            }
        }
    }

    fn check_feasible(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
        let residual = (self.apply(x)? - y).norm();
        let scale = y.norm().max(f64::MIN_POSITIVE);
        if residual > 1e-8 * scale && residual > 1e-300 {
            return Err(Error::Infeasible {
                residual: residual / scale,
            });
        }
        Ok(())
    }

    /// Frobenius-closest point of `L^{-1}(y)` to `x`.
    pub fn project_affine(&self, y: &DVector<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_shape(x)?;
        self.check_len(y)?;
        match &self.op {
            Operator::Sampling(idx) => {
                let mut out = x.clone();
                for (&(i, j), yk) in idx.iter().zip(y.iter()) {
                    out[(i, j)] = *yk;
                }
                Ok(out)
            }
            _ => {
                let d = self.decomposition()?;
                let r = self.apply(x)? - y;
                let corr = &d.pinv * r;
                let out = x - DMatrix::from_column_slice(self.rows, self.cols, corr.as_slice());
                self.check_feasible(&out, y)?;
                Ok(out)
            }
        }
    }
}

/// Reference solution planted in a generated problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

/// An affine rank minimization instance: find a low-rank `X` with `L(X) = y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub map: LinearMap,
    pub y: DVector<f64>,
    pub reference: Option<Reference>,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn new(map: LinearMap, y: DVector<f64>) -> Result<Self> {
        map.check_len(&y)?;
        Ok(ProblemInstance {
            map,
            y,
            reference: None,
            seed: 0,
        })
    }

    /// Instance with measurements `y = L(reference)`.
    pub fn from_reference(map: LinearMap, reference: DMatrix<f64>, rank: usize, seed: u64) -> Result<Self> {
        let y = map.apply(&reference)?;
        Ok(ProblemInstance {
            map,
            y,
            reference: Some(Reference {
                matrix: reference,
                rank,
            }),
            seed,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.map.shape()
    }

    /// `||L(X) - y|| / ||y||` (absolute residual when `y = 0`).
    pub fn relative_residual(&self, x: &DMatrix<f64>) -> Result<f64> {
        let r = (self.map.apply(x)? - &self.y).norm();
        let ny = self.y.norm();
        Ok(if ny > 0.0 { r / ny } else { r })
    }
}
