//! Streaming ridge regression.
//!
//! Rows of the augmented design `[F | Y]` (one row per training column,
//! features then targets) are absorbed block by block. The default
//! [`RidgeMethod::Orthogonal`] keeps only the triangular factor of a running
//! Householder QR, so the ridge problem is solved without ever squaring the
//! condition number of `F`. [`RidgeMethod::NormalEquations`] accumulates the
//! Gram matrices and solves `W (FᵀF + βI) = YᵀF` by Cholesky.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RidgeError {
    #[error("regularization must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("feature and target matrices disagree: {0}")]
    Shape(String),
    #[error("no training columns were supplied")]
    Empty,
    #[error("regularized system is singular or indefinite; increase beta (currently {beta})")]
    Singular { beta: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RidgeMethod {
    /// Householder QR of the design, then a QR of the `√β`-augmented factor.
    #[default]
    Orthogonal,
    /// Gram accumulation and Cholesky factorization of `FᵀF + βI`.
    NormalEquations,
}

/// Running summary of the rows seen so far.
#[derive(Debug, Clone)]
pub struct RidgeAccumulator<T: Scalar> {
    n_features: usize,
    n_targets: usize,
    rows: usize,
    state: State<T>,
}

#[derive(Debug, Clone)]
enum State<T: Scalar> {
    /// Upper-trapezoidal factor with at most `n_features + n_targets` rows.
    Qr(DMatrix<T>),
    /// `AᵀA` of the augmented design.
    Gram(DMatrix<T>),
}

impl<T: Scalar> RidgeAccumulator<T> {
    pub fn new(method: RidgeMethod, n_features: usize, n_targets: usize) -> Self {
        let w = n_features + n_targets;
        let state = match method {
            RidgeMethod::Orthogonal => State::Qr(DMatrix::zeros(0, w)),
            RidgeMethod::NormalEquations => State::Gram(DMatrix::zeros(w, w)),
        };
        Self {
            n_features,
            n_targets,
            rows: 0,
            state,
        }
    }

    pub fn method(&self) -> RidgeMethod {
        match self.state {
            State::Qr(_) => RidgeMethod::Orthogonal,
            State::Gram(_) => RidgeMethod::NormalEquations,
        }
    }

    /// Number of design rows absorbed.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Absorbs `block`, whose rows are `[features | targets]`.
    pub fn absorb(&mut self, block: &DMatrix<T>) {
        assert_eq!(block.ncols(), self.n_features + self.n_targets);
        if block.nrows() == 0 {
            return;
        }
        self.rows += block.nrows();
        match &mut self.state {
            State::Qr(r) => *r = triangularize(r, block),
            State::Gram(g) => g.gemm_tr(T::one(), block, block, T::one()),
        }
    }

    /// Adds the rows summarized by `other`.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.method(), other.method());
        match (&mut self.state, &other.state) {
            (State::Qr(r), State::Qr(o)) => {
                if o.nrows() > 0 {
                    *r = triangularize(r, o);
                }
            }
            (State::Gram(g), State::Gram(o)) => *g += o,
            _ => unreachable!(),
        }
        self.rows += other.rows;
    }

    /// Readout `W` (targets × features) minimizing `‖Y - FWᵀ‖² + β‖W‖²`.
    pub fn solve(&self, beta: T) -> Result<DMatrix<T>, RidgeError> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(RidgeError::InvalidBeta(beta.as_f64()));
        }
        if self.rows == 0 {
            return Err(RidgeError::Empty);
        }
        let n = self.n_features;
        let singular = || RidgeError::Singular { beta: beta.as_f64() };
        match &self.state {
            State::Gram(g) => {
                let mut lhs = g.view((0, 0), (n, n)).into_owned();
                for i in 0..n {
                    lhs[(i, i)] += beta;
                }
                let rhs = g.view((0, n), (n, self.n_targets)).into_owned();
                let scale = (0..n).fold(T::zero(), |m, i| m.max(lhs[(i, i)]));
                let chol = Cholesky::new(lhs).ok_or_else(singular)?;
                // Pivots at rounding level mean the Gram matrix is numerically singular.
                let tol = T::default_epsilon() * T::from_count(n) * scale;
                let l = chol.l_dirty();
                if (0..n).any(|i| !(l[(i, i)] * l[(i, i)] > tol)) {
                    return Err(singular());
                }
                let x = chol.solve(&rhs);
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(singular());
                }
                Ok(x.transpose())
            }
            State::Qr(r) => {
                // Append √β·I below the feature block; the targets get zeros.
                let w = n + self.n_targets;
                let mut aug = DMatrix::zeros(n, w);
                let sb = beta.sqrt();
                for i in 0..n {
                    aug[(i, i)] = sb;
                }
                let rr = triangularize(r, &aug);
                let mut tri = DMatrix::zeros(n, n);
                let mut rhs = DMatrix::zeros(n, self.n_targets);
                let avail = rr.nrows().min(n);
                tri.view_mut((0, 0), (avail, n))
                    .copy_from(&rr.view((0, 0), (avail, n)));
                rhs.view_mut((0, 0), (avail, self.n_targets))
                    .copy_from(&rr.view((0, n), (avail, self.n_targets)));
                let scale = (0..n).fold(T::zero(), |m, i| m.max(tri[(i, i)].abs()));
                let tol = T::default_epsilon() * T::from_count(n) * scale;
                if (0..n).any(|i| !(tri[(i, i)].abs() > tol)) {
                    return Err(singular());
                }
                if !tri.solve_upper_triangular_mut(&mut rhs) {
                    return Err(singular());
                }
                if rhs.iter().any(|v| !v.is_finite()) {
                    return Err(singular());
                }
                Ok(rhs.transpose())
            }
        }
    }
}

/// Upper-trapezoidal factor of `[r; block]`.
fn triangularize<T: Scalar>(r: &DMatrix<T>, block: &DMatrix<T>) -> DMatrix<T> {
    let w = block.ncols();
    let mut stacked = DMatrix::zeros(r.nrows() + block.nrows(), w);
    stacked.view_mut((0, 0), (r.nrows(), w)).copy_from(r);
    stacked
        .view_mut((r.nrows(), 0), (block.nrows(), w))
        .copy_from(block);
    stacked.qr().r()
}

/// `W_out` for features `r` (Ñ × columns) and targets `y` (d × columns).
pub fn ridge_solve<T: Scalar>(
    r: &DMatrix<T>,
    y: &DMatrix<T>,
    beta: T,
    method: RidgeMethod,
) -> Result<DMatrix<T>, RidgeError> {
    if r.ncols() != y.ncols() {
        return Err(RidgeError::Shape(format!(
            "{} feature columns vs {} target columns",
            r.ncols(),
            y.ncols()
        )));
    }
    let (n, d) = (r.nrows(), y.nrows());
    let mut acc = RidgeAccumulator::new(method, n, d);
    const CHUNK: usize = 4096;
    let mut start = 0;
    while start < r.ncols() {
        let len = CHUNK.min(r.ncols() - start);
        let mut block = DMatrix::zeros(len, n + d);
        block
            .view_mut((0, 0), (len, n))
            .copy_from(&r.columns(start, len).transpose());
        block
            .view_mut((0, n), (len, d))
            .copy_from(&y.columns(start, len).transpose());
        acc.absorb(&block);
        start += len;
    }
    acc.solve(beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut g = lcg(seed);
        DMatrix::from_fn(rows, cols, |_, _| g())
    }

    fn normal_residual(w: &DMatrix<f64>, r: &DMatrix<f64>, y: &DMatrix<f64>, beta: f64) -> f64 {
        let mut g = r * r.transpose();
        for i in 0..g.nrows() {
            g[(i, i)] += beta;
        }
        let rhs = y * r.transpose();
        (w * g - &rhs).norm() / rhs.norm()
    }

    #[test]
    fn exact_linear_map_is_recovered() {
        let r = random(6, 300, 1);
        let c = random(3, 6, 2);
        let y = &c * &r;
        for method in [RidgeMethod::Orthogonal, RidgeMethod::NormalEquations] {
            let w = ridge_solve(&r, &y, 0.0, method).unwrap();
            assert!((&w * &r - &y).norm() < 1e-10, "{method:?}");
        }
    }

    #[test]
    fn methods_agree_and_satisfy_normal_equations() {
        for seed in 0..10 {
            let r = random(20, 200, 10 + seed);
            let y = random(3, 200, 100 + seed);
            let a = ridge_solve(&r, &y, 1e-3, RidgeMethod::Orthogonal).unwrap();
            let b = ridge_solve(&r, &y, 1e-3, RidgeMethod::NormalEquations).unwrap();
            assert!((&a - &b).norm() / b.norm() < 1e-10);
            assert!(normal_residual(&a, &r, &y, 1e-3) < 1e-8);
        }
    }

    #[test]
    fn shrinkage_is_monotone() {
        let r = random(10, 80, 7);
        let y = random(2, 80, 8);
        let norms: Vec<f64> = (-6..=6)
            .map(|e| ridge_solve(&r, &y, 10f64.powi(e), RidgeMethod::Orthogonal).unwrap().norm())
            .collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
        assert!(*norms.last().unwrap() < 1e-3);
    }

    #[test]
    fn chunking_and_merging_are_consistent() {
        let r = random(12, 9000, 3);
        let y = random(2, 9000, 4);
        let whole = ridge_solve(&r, &y, 1e-4, RidgeMethod::Orthogonal).unwrap();
        let mut left = RidgeAccumulator::new(RidgeMethod::Orthogonal, 12, 2);
        let mut right = left.clone();
        let block = |s: usize, l: usize| {
            let mut b = DMatrix::zeros(l, 14);
            b.view_mut((0, 0), (l, 12)).copy_from(&r.columns(s, l).transpose());
            b.view_mut((0, 12), (l, 2)).copy_from(&y.columns(s, l).transpose());
            b
        };
        left.absorb(&block(0, 5));
        left.absorb(&block(5, 3995));
        right.absorb(&block(4000, 5000));
        left.merge(&right);
        assert_eq!(left.rows(), 9000);
        let merged = left.solve(1e-4).unwrap();
        assert!((&merged - &whole).norm() / whole.norm() < 1e-10);
    }

    #[test]
    fn singular_without_regularization() {
        let mut r = random(5, 50, 5);
        let row = r.row(0).into_owned();
        r.set_row(4, &row);
        let y = random(1, 50, 6);
        for method in [RidgeMethod::Orthogonal, RidgeMethod::NormalEquations] {
            assert!(matches!(
                ridge_solve(&r, &y, 0.0, method),
                Err(RidgeError::Singular { .. })
            ));
            assert!(ridge_solve(&r, &y, 1e-6, method).is_ok());
        }
        // Fewer columns than features.
        assert!(ridge_solve(&random(8, 3, 1), &random(1, 3, 2), 0.0, RidgeMethod::Orthogonal).is_err());
        assert!(ridge_solve(&random(8, 3, 1), &random(1, 3, 2), 1e-2, RidgeMethod::Orthogonal).is_ok());
    }

    #[test]
    fn argument_errors() {
        let r = random(3, 10, 1);
        assert!(matches!(
            ridge_solve(&r, &random(1, 9, 2), 0.1, RidgeMethod::Orthogonal),
            Err(RidgeError::Shape(_))
        ));
        assert!(matches!(
            ridge_solve(&r, &random(1, 10, 2), -1.0, RidgeMethod::Orthogonal),
            Err(RidgeError::InvalidBeta(_))
        ));
        assert!(matches!(
            ridge_solve(&DMatrix::<f64>::zeros(3, 0), &DMatrix::zeros(1, 0), 0.1, RidgeMethod::Orthogonal),
            Err(RidgeError::Empty)
        ));
    }
}
