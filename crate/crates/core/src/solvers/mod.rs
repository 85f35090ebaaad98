//! The greedy driver and its local fitters.

mod lad;

pub use lad::{lad_restricted, lad_restricted_from, LadFit};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{least_squares_restricted, norm2, residual, DenseMatrix, SupportSet};
use crate::losses::{eval_loss, fidelity, LossFamily, LossSpec, Weights};
use crate::selection::{score_all, SelectionContext};

/// Column norms must be within this distance of 1 for least-squares rules.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
/// An iterate that moves less than this (relative to its size) counts as
/// unchanged for stall detection.
pub const STALL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Number of greedy iterations `K`.
    pub max_iterations: usize,
    /// Only consider indices outside the current support.
    pub restrict_to_complement: bool,
    /// Stop once the best reduction is at most this; 0 disables the check.
    pub delta_tolerance: f64,
    pub lad_sweep_tolerance: f64,
    /// Sweep and pivot cap for the LAD fitter; `None` means `200 |S| + 200`.
    pub lad_max_sweeps: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 0,
            restrict_to_complement: false,
            delta_tolerance: 0.0,
            lad_sweep_tolerance: 1e-10,
            lad_max_sweeps: None,
        }
    }
}

impl SolverOptions {
    pub fn with_iterations(k: usize) -> Self {
        Self {
            max_iterations: k,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalStatus {
    CompletedK,
    /// The selected index was already active and the refit did not move.
    Stalled,
    DeltaBelowTol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub k: usize,
    /// 0-based selected column.
    pub selected: usize,
    pub support: SupportSet,
    pub x: Vec<f64>,
    /// `||r||_2^2`, `||r||_2` or `||r||_1` depending on the family.
    pub fidelity: f64,
    pub loss: f64,
    pub max_delta: f64,
    pub stalled: bool,
    /// The least-squares refit fell back to a minimum-norm solution.
    pub rank_deficient: bool,
    /// The LAD refit hit its iteration cap.
    pub not_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub records: Vec<IterationRecord>,
    pub status: TerminalStatus,
    cols: usize,
}

impl GreedyTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Last iterate, or zero when no iteration ran.
    pub fn final_x(&self) -> Vec<f64> {
        self.records
            .last()
            .map_or_else(|| vec![0.0; self.cols], |r| r.x.clone())
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.selected).collect()
    }
}

/// Runs `K` iterations of loss-based OMP: pick the column with the largest
/// one-dimensional loss reduction (lowest index on ties), add it to the
/// support, refit the fidelity term on the support.
pub fn omp_run(
    spec: &LossSpec,
    a: &DenseMatrix,
    y: &[f64],
    w: &Weights,
    opts: &SolverOptions,
) -> Result<GreedyTrace> {
    let n = a.cols();
    check_len("measurements", a.rows(), y.len())?;
    check_len("weights", n, w.len())?;
    if opts.restrict_to_complement && opts.max_iterations > n {
        return Err(Error::InvalidParameter(format!(
            "{} iterations exceed {n} columns with restrict_to_complement",
            opts.max_iterations
        )));
    }
    if opts.delta_tolerance.is_nan() || opts.delta_tolerance < 0.0 {
        return Err(Error::InvalidParameter("delta_tolerance must be nonnegative".into()));
    }
    let lad = spec.family == LossFamily::LadLasso;
    for (j, norm) in a.column_norms().into_iter().enumerate() {
        if norm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        if !lad && (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { column: j, norm });
        }
    }

    let rule = spec.rule();
    let lambda = spec.lambda();
    let y_norm = norm2(y);
    let mut x = vec![0.0; n];
    let mut support = SupportSet::empty();
    let mut records = Vec::with_capacity(opts.max_iterations);
    let mut status = TerminalStatus::CompletedK;
    let mut last_rank_deficient = false;

    for k in 1..=opts.max_iterations {
        let ctx = SelectionContext::new(a, y, w, lambda, &x, &support)?;
        let ctx = if lad { ctx } else { ctx.with_correlations() };
        debug_assert!(
            lad || last_rank_deficient || ctx.orthogonality_defect() <= 1e-9 * y_norm.max(1e-300),
            "iterate is not least-squares optimal on its support"
        );
        let scores = score_all(&ctx, rule)?;
        drop(ctx);

        let mut best: Option<(usize, f64)> = None;
        for (j, &d) in scores.iter().enumerate() {
            if opts.restrict_to_complement && support.contains(j) {
                continue;
            }
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((j, d));
            }
        }
        let Some((j, max_delta)) = best else { break };
        if opts.delta_tolerance > 0.0 && max_delta <= opts.delta_tolerance {
            status = TerminalStatus::DeltaBelowTol;
            break;
        }

        let was_active = !support.insert(j);
        let (x_new, rank_deficient, not_converged) = if lad {
            let fit = lad_restricted_from(a, y, &support, Some(&x), opts)?;
            (fit.x, false, !fit.converged)
        } else {
            let fit = least_squares_restricted(a, y, &support)?;
            (fit.x, fit.rank_deficient, false)
        };
        last_rank_deficient = rank_deficient;

        let stalled = was_active && {
            let scale = x.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            x.iter()
                .zip(&x_new)
                .all(|(a, b)| (a - b).abs() <= STALL_TOLERANCE * scale)
        };
        x = x_new;
        let r = residual(a, &x, y)?;
        records.push(IterationRecord {
            k,
            selected: j,
            support: support.clone(),
            x: x.clone(),
            fidelity: fidelity(spec.family, &r),
            loss: eval_loss(spec, a, y, w, &x)?,
            max_delta,
            stalled,
            rank_deficient,
            not_converged,
        });
        if stalled {
            status = TerminalStatus::Stalled;
            break;
        }
    }

    Ok(GreedyTrace {
        records,
        status,
        cols: n,
    })
}

/// `||x_hat - x_true||_2 / ||x_true||_2`
pub fn relative_l2_error(x_hat: &[f64], x_true: &[f64]) -> Result<f64> {
    check_len("estimate", x_true.len(), x_hat.len())?;
    let denom = norm2(x_true);
    if denom == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let diff: Vec<f64> = x_hat.iter().zip(x_true).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::normalize_columns;
    use crate::losses::Rule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal)).unwrap();
        normalize_columns(&raw).unwrap().0
    }

    #[test]
    fn relative_error_examples() {
        let x = [1.0, -2.0, 2.0];
        assert_eq!(relative_l2_error(&x, &x).unwrap(), 0.0);
        assert_eq!(relative_l2_error(&[0.0; 3], &x).unwrap(), 1.0);
        assert_eq!(relative_l2_error(&[2.0, -4.0, 4.0], &x).unwrap(), 1.0);
        assert!(matches!(
            relative_l2_error(&x, &[0.0; 3]),
            Err(Error::ZeroTruth)
        ));
    }

    #[test]
    fn zero_iterations_give_empty_trace() {
        let a = gaussian(5, 8, 1);
        let spec = LossSpec::new(Rule::LASSO_L1, 0.1).unwrap();
        let t = omp_run(&spec, &a, &[1.0; 5], &Weights::ones(8), &SolverOptions::default()).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.final_x(), vec![0.0; 8]);
        assert_eq!(t.status, TerminalStatus::CompletedK);
    }

    #[test]
    fn rejects_unnormalized_columns_for_least_squares() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![4.0, 1.0]]).unwrap();
        let spec = LossSpec::new(Rule::SRLASSO_L1, 0.1).unwrap();
        let opts = SolverOptions::with_iterations(1);
        assert!(matches!(
            omp_run(&spec, &a, &[1.0, 1.0], &Weights::ones(2), &opts),
            Err(Error::NotNormalized { column: 0, .. })
        ));
        // LAD only needs nonzero columns
        let lad = LossSpec::new(Rule::LADLASSO_L1, 0.1).unwrap();
        assert!(omp_run(&lad, &a, &[1.0, 1.0], &Weights::ones(2), &opts).is_ok());
    }

    #[test]
    fn stalls_when_active_index_is_reselected() {
        // a huge penalty makes shrinking the single active entry the best move
        let a = DenseMatrix::identity(2).unwrap();
        let spec = LossSpec::new(Rule::LASSO_L1, 100.0).unwrap();
        let t = omp_run(&spec, &a, &[1.0, 0.5], &Weights::ones(2), &SolverOptions::with_iterations(5))
            .unwrap();
        assert_eq!(t.status, TerminalStatus::Stalled);
        assert_eq!(t.len(), 2);
        assert!(t.records[1].stalled);
        assert_eq!(t.records[0].x, t.records[1].x);
    }

    #[test]
    fn restrict_to_complement_grows_support() {
        let a = gaussian(10, 12, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y: Vec<f64> = (0..10).map(|_| rng.sample(StandardNormal)).collect();
        let spec = LossSpec::new(Rule::LASSO_L1, 50.0).unwrap();
        let opts = SolverOptions {
            max_iterations: 6,
            restrict_to_complement: true,
            ..SolverOptions::default()
        };
        let t = omp_run(&spec, &a, &y, &Weights::ones(12), &opts).unwrap();
        assert_eq!(t.len(), 6);
        for (k, rec) in t.records.iter().enumerate() {
            assert_eq!(rec.support.len(), k + 1);
        }
        let too_many = SolverOptions {
            max_iterations: 13,
            ..opts
        };
        assert!(omp_run(&spec, &a, &y, &Weights::ones(12), &too_many).is_err());
    }

    #[test]
    fn delta_tolerance_stops_early() {
        let a = DenseMatrix::identity(3).unwrap();
        let spec = LossSpec::new(Rule::LASSO_L0, 0.0).unwrap();
        let opts = SolverOptions {
            max_iterations: 3,
            delta_tolerance: 1e-12,
            ..SolverOptions::default()
        };
        let t = omp_run(&spec, &a, &[2.0, 0.0, 0.0], &Weights::ones(3), &opts).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.status, TerminalStatus::DeltaBelowTol);
    }

    #[test]
    fn trace_invariants_hold_for_every_rule() {
        let a = gaussian(12, 20, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
        let w = Weights::new((0..20).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap();
        for rule in Rule::ALL {
            for lambda in [0.0, 0.05, 0.5] {
                let spec = LossSpec::new(rule, lambda).unwrap();
                let t = omp_run(&spec, &a, &y, &w, &SolverOptions::with_iterations(15)).unwrap();
                let f0 = fidelity(spec.family, &y);
                let mut prev_support = SupportSet::empty();
                let mut prev_f = f0;
                for rec in &t.records {
                    assert!(prev_support.is_subset_of(&rec.support), "{rule} {lambda}");
                    assert!(rec.fidelity <= prev_f + 1e-9 * f0, "{rule} {lambda}");
                    assert!(rec.max_delta >= 0.0);
                    prev_support = rec.support.clone();
                    prev_f = rec.fidelity;
                }
                let again = omp_run(&spec, &a, &y, &w, &SolverOptions::with_iterations(15)).unwrap();
                assert_eq!(t, again);
            }
        }
    }
}
