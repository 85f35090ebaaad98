//! Closed-form greedy loss reductions.
//!
//! For a current iterate `x` supported on `S` and a column `j`, each rule
//! returns `Delta(x, S, j) = G(x) - min_t G(x + t e_j)` for its loss `G`.
//! The least-squares rules (LASSO, SR-LASSO) assume unit-norm columns and an
//! iterate that is least-squares optimal on `S`; the LAD rules hold for any
//! iterate.

mod median;
mod rules;

pub use median::{lad_objective, univariate_lad_argmin, LadArgmin};
pub(crate) use median::{push_breakpoints, weighted_median, Breakpoint};
pub use rules::{
    delta, delta_ladlasso_l0, delta_ladlasso_l1, delta_lasso_l0, delta_lasso_l1,
    delta_srlasso_l0, delta_srlasso_l1, score_all, DELTA_CLAMP,
};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm1, norm2, residual, DenseMatrix, SupportSet};
use crate::losses::Weights;

/// Everything a greedy rule needs about the current iterate.
#[derive(Debug, Clone)]
pub struct SelectionContext<'a> {
    a: &'a DenseMatrix,
    y: &'a [f64],
    w: &'a Weights,
    lambda: f64,
    x: &'a [f64],
    support: &'a SupportSet,
    r: Vec<f64>,
    r_norm2: f64,
    r_norm1: f64,
    correlations: Option<Vec<f64>>,
}

impl<'a> SelectionContext<'a> {
    pub fn new(
        a: &'a DenseMatrix,
        y: &'a [f64],
        w: &'a Weights,
        lambda: f64,
        x: &'a [f64],
        support: &'a SupportSet,
    ) -> Result<Self> {
        check_len("weights", a.cols(), w.len())?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        if let Some(&last) = support.as_slice().last() {
            if last >= a.cols() {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    len: a.cols(),
                });
            }
        }
        if let Some(j) = x
            .iter()
            .enumerate()
            .position(|(j, &v)| v != 0.0 && !support.contains(j))
        {
            return Err(Error::InvalidParameter(format!(
                "iterate has a nonzero entry at {j} outside the support"
            )));
        }
        let r = residual(a, x, y)?;
        let r_norm2 = norm2(&r);
        let r_norm1 = norm1(&r);
        Ok(Self {
            a,
            y,
            w,
            lambda,
            x,
            support,
            r,
            r_norm2,
            r_norm1,
            correlations: None,
        })
    }

    /// Caches `A^T r`.
    pub fn with_correlations(mut self) -> Self {
        if self.correlations.is_none() {
            self.correlations = Some(
                (0..self.a.cols())
                    .map(|j| dot(self.a.col(j), &self.r))
                    .collect(),
            );
        }
        self
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.a
    }

    pub fn measurements(&self) -> &[f64] {
        self.y
    }

    pub fn weights(&self) -> &Weights {
        self.w
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn iterate(&self) -> &[f64] {
        self.x
    }

    pub fn support(&self) -> &SupportSet {
        self.support
    }

    pub fn residual(&self) -> &[f64] {
        &self.r
    }

    pub fn residual_norm2(&self) -> f64 {
        self.r_norm2
    }

    pub fn residual_norm1(&self) -> f64 {
        self.r_norm1
    }

    /// `(A^T r)_j`, from the cache when present.
    pub fn correlation(&self, j: usize) -> f64 {
        match &self.correlations {
            Some(c) => c[j],
            None => dot(self.a.col(j), &self.r),
        }
    }

    /// `max_{j in S} |(A^T r)_j|`; zero for a least-squares optimal iterate.
    pub fn orthogonality_defect(&self) -> f64 {
        self.support
            .iter()
            .map(|j| self.correlation(j).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_index(&self, j: usize) -> Result<()> {
        if j < self.a.cols() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: j,
                len: self.a.cols(),
            })
        }
    }

    /// Column `j` of the augmented matrix `[A; lambda w^T]` together with the
    /// matching augmented residual `[r; -lambda w_j x_j]`.
    pub fn augmented_column(&self, j: usize) -> Result<AugmentedColumnView> {
        self.check_index(j)?;
        let lw = self.lambda * self.w.get(j);
        let mut a_tilde = Vec::with_capacity(self.a.rows() + 1);
        a_tilde.extend_from_slice(self.a.col(j));
        a_tilde.push(lw);
        let mut r_tilde = Vec::with_capacity(self.a.rows() + 1);
        r_tilde.extend_from_slice(&self.r);
        r_tilde.push(-lw * self.x[j]);
        Ok(AugmentedColumnView {
            j,
            a_tilde,
            r_tilde,
        })
    }
}

/// One column of the LAD augmentation, materialized on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedColumnView {
    pub j: usize,
    /// `(a_j, lambda w_j)`
    pub a_tilde: Vec<f64>,
    /// `(r, -lambda w_j x_j)`
    pub r_tilde: Vec<f64>,
}
