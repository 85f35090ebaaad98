//! Weighted-median minimizer of the univariate LAD objective
//! `L(t) = sum_i |y_i - t a_i|`.

use crate::error::{check_len, Error, Result};

/// Minimizer of a univariate LAD objective and the row it was read from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadArgmin {
    pub t: f64,
    /// 0-based row whose breakpoint `y_i / a_i` is the minimizer.
    pub index: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Breakpoint {
    pub ratio: f64,
    pub weight: f64,
    pub index: usize,
}

/// Sorts the breakpoints by `(ratio, index)` and returns the first one at
/// which the cumulative weight reaches half of the total.
pub(crate) fn weighted_median(points: &mut [Breakpoint]) -> Option<Breakpoint> {
    if points.is_empty() {
        return None;
    }
    let total: f64 = points.iter().map(|p| p.weight).sum();
    points.sort_unstable_by(|p, q| p.ratio.total_cmp(&q.ratio).then(p.index.cmp(&q.index)));
    let mut cum = 0.0;
    for p in points.iter() {
        cum += p.weight;
        if 2.0 * cum >= total {
            return Some(*p);
        }
    }
    points.last().copied()
}

/// Collects the breakpoints `y_i / a_i` over the support of `a`.
pub(crate) fn push_breakpoints(y: &[f64], a: &[f64], out: &mut Vec<Breakpoint>) {
    out.extend(
        y.iter()
            .zip(a)
            .enumerate()
            .filter(|(_, (_, &ai))| ai != 0.0)
            .map(|(index, (&yi, &ai))| Breakpoint {
                ratio: yi / ai,
                weight: ai.abs(),
                index,
            }),
    );
}

/// Exact minimizer of `t -> ||y - t a||_1`.
///
/// The minimizer is the weighted median of the ratios `y_i / a_i` over
/// `supp(a)` with weights `|a_i|`. Equal ratios are ordered by row index so
/// the result is deterministic.
pub fn univariate_lad_argmin(y: &[f64], a: &[f64]) -> Result<LadArgmin> {
    check_len("univariate LAD data", a.len(), y.len())?;
    let mut points = Vec::with_capacity(a.len());
    push_breakpoints(y, a, &mut points);
    let best = weighted_median(&mut points).ok_or(Error::ZeroVector)?;
    Ok(LadArgmin {
        t: best.ratio,
        index: best.index,
    })
}

/// `||y - t a||_1`
pub fn lad_objective(y: &[f64], a: &[f64], t: f64) -> f64 {
    y.iter().zip(a).map(|(yi, ai)| (yi - t * ai).abs()).sum()
}
