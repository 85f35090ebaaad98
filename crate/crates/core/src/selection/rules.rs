use super::median::{push_breakpoints, weighted_median, Breakpoint};
use super::SelectionContext;
use crate::error::{Error, Result};
use crate::linalg::norm1;
use crate::losses::{LossFamily, Regularizer, Rule};

/// Roundoff threshold: reductions in `(-DELTA_CLAMP, 0)` are reported as 0.
pub const DELTA_CLAMP: f64 = 1e-12;

#[inline]
fn clamp(v: f64) -> f64 {
    debug_assert!(
        v.is_nan() || v > -DELTA_CLAMP * 1e6,
        "loss reduction far below zero: {v}"
    );
    v.max(0.0)
}

/// Weighted LASSO, `||y - Az||_2^2 + lambda ||z||_{1,w}`.
pub fn delta_lasso_l1(ctx: &SelectionContext<'_>, j: usize) -> Result<f64> {
    ctx.check_index(j)?;
    let lw = ctx.lambda * ctx.w.get(j);
    if !ctx.support.contains(j) {
        let c = ctx.correlation(j).abs();
        let gap = (c - 0.5 * lw).max(0.0);
        return Ok(gap * gap);
    }
    let xj = ctx.x[j].abs();
    let shrink_to_zero = xj * (lw - xj);
    let soft = lw * (xj - 0.25 * lw - (xj - 0.5 * lw).abs());
    Ok(clamp(shrink_to_zero.max(soft)))
}

/// Weighted SR-LASSO, `||y - Az||_2 + lambda ||z||_{1,w}`.
pub fn delta_srlasso_l1(ctx: &SelectionContext<'_>, j: usize) -> Result<f64> {
    ctx.check_index(j)?;
    let lw = ctx.lambda * ctx.w.get(j);
    let n2 = ctx.r_norm2;
    if !ctx.support.contains(j) {
        if lw >= 1.0 {
            return Ok(0.0);
        }
        let c = ctx.correlation(j).abs().min(n2);
        // the stationary step length c - lw*sqrt(...) is nonpositive here,
        // so t = 0 is optimal
        if c <= lw * n2 {
            return Ok(0.0);
        }
        // ||r|| - lw c - sqrt((1 - lw^2)(||r||^2 - c^2)), rationalized
        let root = ((1.0 - lw * lw) * (n2 * n2 - c * c)).max(0.0).sqrt();
        let gap = c - lw * n2;
        return Ok(clamp(gap * gap / (n2 - lw * c + root)));
    }
    let xj = ctx.x[j].abs();
    let rho = if lw >= 1.0 {
        xj
    } else {
        xj.min(lw * n2 / (1.0 - lw * lw).sqrt())
    };
    // ||r|| - sqrt(rho^2 + ||r||^2), rationalized
    let fidelity_increase = if rho == 0.0 {
        0.0
    } else {
        rho * rho / (n2 + (rho * rho + n2 * n2).sqrt())
    };
    Ok(clamp(lw * (xj - (xj - rho).abs()) - fidelity_increase))
}

/// Weighted LAD-LASSO, `||y - Az||_1 + lambda ||z||_{1,w}`.
///
/// The one-dimensional problem over `t` is a LAD fit of the augmented
/// residual `(r, -lambda w_j x_j)` against `(a_j, lambda w_j)`.
pub fn delta_ladlasso_l1(ctx: &SelectionContext<'_>, j: usize) -> Result<f64> {
    let mut scratch = Vec::new();
    ladlasso_l1_with(ctx, j, &mut scratch)
}

fn ladlasso_l1_with(
    ctx: &SelectionContext<'_>,
    j: usize,
    scratch: &mut Vec<Breakpoint>,
) -> Result<f64> {
    ctx.check_index(j)?;
    let col = ctx.a.col(j);
    if norm1(col) == 0.0 {
        return Err(Error::ZeroColumn(j));
    }
    let lw = ctx.lambda * ctx.w.get(j);
    let xj = ctx.x[j];
    scratch.clear();
    push_breakpoints(&ctx.r, col, scratch);
    if lw != 0.0 {
        scratch.push(Breakpoint {
            ratio: -xj,
            weight: lw,
            index: col.len(),
        });
    }
    let t = weighted_median(scratch).expect("nonzero column").ratio;
    let fitted: f64 = ctx
        .r
        .iter()
        .zip(col)
        .map(|(ri, ai)| (ri - t * ai).abs())
        .sum::<f64>()
        + lw * (xj + t).abs();
    Ok(clamp(lw * xj.abs() + ctx.r_norm1 - fitted))
}

/// `l0_w`-regularized least squares, `||y - Az||_2^2 + lambda ||z||_{0,w}`.
pub fn delta_lasso_l0(ctx: &SelectionContext<'_>, j: usize) -> Result<f64> {
    ctx.check_index(j)?;
    let lw2 = ctx.lambda * ctx.w.get(j) * ctx.w.get(j);
    if !ctx.support.contains(j) {
        let c = ctx.correlation(j);
        return Ok((c * c - lw2).max(0.0));
    }
    let xj = ctx.x[j];
    if xj == 0.0 {
        return Ok(0.0);
    }
    Ok((lw2 - xj * xj).max(0.0))
}

/// `l0_w`-regularized SR-LASSO, `||y - Az||_2 + lambda ||z||_{0,w}`.
pub fn delta_srlasso_l0(ctx: &SelectionContext<'_>, j: usize) -> Result<f64> {
    ctx.check_index(j)?;
    let lw2 = ctx.lambda * ctx.w.get(j) * ctx.w.get(j);
    let n2 = ctx.r_norm2;
    if !ctx.support.contains(j) {
        let c = ctx.correlation(j).abs().min(n2);
        if c == 0.0 {
            return Ok(0.0);
        }
        // ||r|| - sqrt(||r||^2 - c^2), rationalized
        let gain = c * c / (n2 + (n2 * n2 - c * c).max(0.0).sqrt());
        return Ok((gain - lw2).max(0.0));
    }
    let xj = ctx.x[j];
    if xj == 0.0 {
        return Ok(0.0);
    }
    let loss = xj * xj / (n2 + (n2 * n2 + xj * xj).sqrt());
    Ok((lw2 - loss).max(0.0))
}

/// `l0_w`-regularized LAD, `||y - Az||_1 + lambda ||z||_{0,w}`.
///
/// Unlike the `l1_w` variant, the weighted median runs on the plain column.
pub fn delta_ladlasso_l0(ctx: &SelectionContext<'_>, j: usize) -> Result<f64> {
    let mut scratch = Vec::new();
    ladlasso_l0_with(ctx, j, &mut scratch)
}

fn ladlasso_l0_with(
    ctx: &SelectionContext<'_>,
    j: usize,
    scratch: &mut Vec<Breakpoint>,
) -> Result<f64> {
    ctx.check_index(j)?;
    let col = ctx.a.col(j);
    if norm1(col) == 0.0 {
        return Err(Error::ZeroColumn(j));
    }
    let lw2 = ctx.lambda * ctx.w.get(j) * ctx.w.get(j);
    scratch.clear();
    push_breakpoints(&ctx.r, col, scratch);
    let t = weighted_median(scratch).expect("nonzero column").ratio;
    let median_gain = ctx.r_norm1
        - ctx
            .r
            .iter()
            .zip(col)
            .map(|(ri, ai)| (ri - t * ai).abs())
            .sum::<f64>();
    let xj = ctx.x[j];
    if !ctx.support.contains(j) || xj == 0.0 {
        return Ok((median_gain - lw2).max(0.0));
    }
    let removal_gain = ctx.r_norm1
        - ctx
            .r
            .iter()
            .zip(col)
            .map(|(ri, ai)| (ri + xj * ai).abs())
            .sum::<f64>()
        + lw2;
    Ok(clamp(median_gain.max(removal_gain)))
}

/// Dispatches to the rule matching `rule`.
pub fn delta(ctx: &SelectionContext<'_>, rule: Rule, j: usize) -> Result<f64> {
    match (rule.family, rule.regularizer) {
        (LossFamily::Lasso, Regularizer::WeightedL1) => delta_lasso_l1(ctx, j),
        (LossFamily::SrLasso, Regularizer::WeightedL1) => delta_srlasso_l1(ctx, j),
        (LossFamily::LadLasso, Regularizer::WeightedL1) => delta_ladlasso_l1(ctx, j),
        (LossFamily::Lasso, Regularizer::WeightedL0) => delta_lasso_l0(ctx, j),
        (LossFamily::SrLasso, Regularizer::WeightedL0) => delta_srlasso_l0(ctx, j),
        (LossFamily::LadLasso, Regularizer::WeightedL0) => delta_ladlasso_l0(ctx, j),
    }
}

/// `Delta(x, S, j)` for every column, in index order.
pub fn score_all(ctx: &SelectionContext<'_>, rule: Rule) -> Result<Vec<f64>> {
    let n = ctx.a.cols();
    match rule.family {
        LossFamily::LadLasso => {
            let mut scratch = Vec::with_capacity(ctx.a.rows() + 1);
            (0..n)
                .map(|j| match rule.regularizer {
                    Regularizer::WeightedL1 => ladlasso_l1_with(ctx, j, &mut scratch),
                    Regularizer::WeightedL0 => ladlasso_l0_with(ctx, j, &mut scratch),
                })
                .collect()
        }
        _ => {
            if ctx.correlations.is_some() {
                (0..n).map(|j| delta(ctx, rule, j)).collect()
            } else {
                let cached = ctx.clone().with_correlations();
                (0..n).map(|j| delta(&cached, rule, j)).collect()
            }
        }
    }
}
