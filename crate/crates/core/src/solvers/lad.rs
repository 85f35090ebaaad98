//! Least absolute deviations restricted to a support.
//!
//! Coordinate descent with exact weighted-median updates gets close quickly
//! but can stop at a kink that is not axis-aligned. The result is therefore
//! polished with a vertex walk: first drive residuals to zero along
//! directions that keep the already-zero rows at zero until a vertex of the
//! piecewise-linear objective is reached, then move along its edges while any
//! edge line search strictly decreases the objective. At a nondegenerate
//! vertex no improving edge means no improving direction at all, so the
//! polish ends at an exact minimizer.

use nalgebra::DMatrix;

use super::SolverOptions;
use crate::error::{check_len, Error, Result};
use crate::linalg::{norm1, DenseMatrix, SupportSet};
use crate::selection::{push_breakpoints, weighted_median, Breakpoint};

/// Outcome of a restricted LAD fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LadFit {
    /// Full-length solution, exactly zero off the support.
    pub x: Vec<f64>,
    /// `||y - A x||_1`
    pub objective: f64,
    /// Cleared when an iteration cap was hit; `x` is then the best iterate.
    pub converged: bool,
}

/// Minimizes `||y - A z||_1` over `z` supported on `support`.
pub fn lad_restricted(
    a: &DenseMatrix,
    y: &[f64],
    support: &SupportSet,
    opts: &SolverOptions,
) -> Result<LadFit> {
    lad_restricted_from(a, y, support, None, opts)
}

/// As [`lad_restricted`], starting from `warm` (its entries off the support
/// are ignored). An already optimal start is returned unchanged.
pub fn lad_restricted_from(
    a: &DenseMatrix,
    y: &[f64],
    support: &SupportSet,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<LadFit> {
    check_len("measurements", a.rows(), y.len())?;
    let n = a.cols();
    if let Some(&last) = support.as_slice().last() {
        if last >= n {
            return Err(Error::IndexOutOfRange { index: last, len: n });
        }
    }
    if let Some(w) = warm {
        check_len("warm start", n, w.len())?;
    }
    for j in support.iter() {
        if norm1(a.col(j)) == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
    }
    let cols: Vec<&[f64]> = support.iter().map(|j| a.col(j)).collect();
    let z0: Vec<f64> = match warm {
        Some(w) => support.iter().map(|j| w[j]).collect(),
        None => vec![0.0; cols.len()],
    };
    let mut fitter = Restricted::new(&cols, y, z0);
    let max_sweeps = opts
        .lad_max_sweeps
        .unwrap_or(200 * cols.len() + 200);
    let tol = opts.lad_sweep_tolerance * (1.0 + norm1(y));
    let mut converged = fitter.coordinate_descent(max_sweeps, tol);
    converged &= fitter.polish(max_sweeps);

    let mut x = vec![0.0; n];
    for (pos, j) in support.iter().enumerate() {
        x[j] = fitter.z[pos];
    }
    Ok(LadFit {
        x,
        objective: fitter.objective(),
        converged,
    })
}

struct Restricted<'a> {
    cols: &'a [&'a [f64]],
    y: &'a [f64],
    z: Vec<f64>,
    r: Vec<f64>,
    scratch: Vec<Breakpoint>,
}

impl<'a> Restricted<'a> {
    fn new(cols: &'a [&'a [f64]], y: &'a [f64], z: Vec<f64>) -> Self {
        let mut s = Self {
            cols,
            y,
            z,
            r: Vec::new(),
            scratch: Vec::with_capacity(y.len()),
        };
        s.refresh_residual();
        s
    }

    fn m(&self) -> usize {
        self.y.len()
    }

    fn k(&self) -> usize {
        self.cols.len()
    }

    fn refresh_residual(&mut self) {
        self.r = self.y.to_vec();
        for (c, &zc) in self.cols.iter().zip(&self.z) {
            if zc != 0.0 {
                for (ri, ai) in self.r.iter_mut().zip(c.iter()) {
                    *ri -= zc * ai;
                }
            }
        }
    }

    fn objective(&self) -> f64 {
        norm1(&self.r)
    }

    fn residual_scale(&self) -> f64 {
        1e-13 * (1.0 + self.y.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
    }

    /// Exact line minimization of `s -> ||r - s v||_1`. Returns the step,
    /// the row whose residual it zeroes, and the new objective.
    fn line_search(&mut self, v: &[f64]) -> Option<(f64, usize, f64)> {
        self.scratch.clear();
        push_breakpoints(&self.r, v, &mut self.scratch);
        let best = weighted_median(&mut self.scratch)?;
        let s = best.ratio;
        let value = self
            .r
            .iter()
            .zip(v)
            .map(|(ri, vi)| (ri - s * vi).abs())
            .sum();
        Some((s, best.index, value))
    }

    /// Cyclic coordinate descent; returns false when the sweep cap is hit.
    fn coordinate_descent(&mut self, max_sweeps: usize, tol: f64) -> bool {
        if self.k() == 0 {
            return true;
        }
        let mut obj = self.objective();
        for _ in 0..max_sweeps {
            let start = obj;
            for p in 0..self.k() {
                let col = self.cols[p];
                let zp = self.z[p];
                let partial: Vec<f64> = self
                    .r
                    .iter()
                    .zip(col.iter())
                    .map(|(ri, ai)| ri + zp * ai)
                    .collect();
                self.scratch.clear();
                push_breakpoints(&partial, col, &mut self.scratch);
                let t = match weighted_median(&mut self.scratch) {
                    Some(b) => b.ratio,
                    None => continue,
                };
                let value: f64 = partial
                    .iter()
                    .zip(col.iter())
                    .map(|(pi, ai)| (pi - t * ai).abs())
                    .sum();
                // only strict improvements move, so an optimal start stays put
                if value < obj {
                    self.z[p] = t;
                    for ((ri, pi), ai) in self.r.iter_mut().zip(&partial).zip(col.iter()) {
                        *ri = pi - t * ai;
                    }
                    obj = value;
                }
            }
            self.refresh_residual();
            obj = self.objective();
            if start - obj <= tol {
                return true;
            }
        }
        false
    }

    fn row(&self, i: usize) -> Vec<f64> {
        self.cols.iter().map(|c| c[i]).collect()
    }

    /// `A_S d`
    fn apply(&self, d: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.m()];
        for (c, &dc) in self.cols.iter().zip(d) {
            if dc != 0.0 {
                for (vi, ai) in v.iter_mut().zip(c.iter()) {
                    *vi += dc * ai;
                }
            }
        }
        v
    }

    fn step(&mut self, d: &[f64], s: f64) {
        for (zc, dc) in self.z.iter_mut().zip(d) {
            *zc += s * dc;
        }
        self.refresh_residual();
    }

    /// Vertex walk that keeps the starting point unless it strictly improves
    /// on it; returns false when the pivot cap is hit.
    fn polish(&mut self, max_pivots: usize) -> bool {
        let start = (self.z.clone(), self.objective());
        let converged = self.walk(max_pivots);
        if self.objective() >= start.1 {
            self.z = start.0;
            self.refresh_residual();
        }
        converged
    }

    fn walk(&mut self, max_pivots: usize) -> bool {
        let k = self.k();
        if k == 0 {
            return true;
        }
        let zero_tol = self.residual_scale();
        if self.r.iter().all(|ri| ri.abs() <= zero_tol) {
            return true;
        }
        let m = self.m();
        let mut in_basis = vec![false; m];
        let mut basis: Vec<usize> = Vec::with_capacity(k);
        // orthonormal basis of the span of the basis rows
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);

        // build a vertex
        while basis.len() < k {
            let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
            for e in 0..k {
                let mut d = vec![0.0; k];
                d[e] = 1.0;
                for qb in &q {
                    let proj = qb[e];
                    for (di, qi) in d.iter_mut().zip(qb) {
                        *di -= proj * qi;
                    }
                }
                let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if dn < 1e-8 {
                    continue;
                }
                d.iter_mut().for_each(|v| *v /= dn);
                let mut v = self.apply(&d);
                for &b in &basis {
                    v[b] = 0.0;
                }
                let score = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                    best = Some((score, d, v));
                }
            }
            let Some((score, d, mut v)) = best else { break };
            let col_scale = self
                .cols
                .iter()
                .map(|c| c.iter().fold(0.0f64, |acc, x| acc.max(x.abs())))
                .fold(0.0f64, f64::max);
            if score <= 1e-10 * col_scale {
                // remaining directions do not change the fit
                break;
            }
            let vmax = score;
            for vi in v.iter_mut() {
                if vi.abs() <= 1e-12 * vmax {
                    *vi = 0.0;
                }
            }
            let current = self.objective();
            let Some((mut s, mut row, value)) = self.line_search(&v) else {
                break;
            };
            if value >= current {
                // no gain along this line: pin an existing zero residual if
                // there is one instead of sliding along a flat piece
                if let Some(i) = (0..m)
                    .filter(|&i| !in_basis[i] && v[i] != 0.0 && self.r[i].abs() <= zero_tol)
                    .max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()).then(j.cmp(&i)))
                {
                    s = 0.0;
                    row = i;
                }
            }
            if s != 0.0 {
                self.step(&d, s);
            }
            in_basis[row] = true;
            basis.push(row);
            let mut g = self.row(row);
            for qb in &q {
                let proj: f64 = g.iter().zip(qb).map(|(a, b)| a * b).sum();
                for (gi, qi) in g.iter_mut().zip(qb) {
                    *gi -= proj * qi;
                }
            }
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.iter_mut().for_each(|v| *v /= gn);
            q.push(g);
        }
        if basis.is_empty() {
            return true;
        }

        // walk edges
        for _ in 0..max_pivots {
            let rb = basis.len();
            let mb = DMatrix::from_fn(rb, k, |p, c| self.cols[c][basis[p]]);
            let dirs = if rb == k {
                mb.clone().try_inverse()
            } else {
                None
            };
            let dirs = match dirs {
                Some(inv) => inv,
                None => match mb.pseudo_inverse(1e-12) {
                    Ok(p) => p,
                    Err(_) => return false,
                },
            };
            let current = self.objective();
            let mut best: Option<(f64, usize, usize, f64)> = None; // value, p, row, s
            for p in 0..rb {
                let d: Vec<f64> = (0..k).map(|c| dirs[(c, p)]).collect();
                let mut v = self.apply(&d);
                for (pp, &b) in basis.iter().enumerate() {
                    if pp != p {
                        v[b] = 0.0;
                    }
                }
                let vmax = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                for vi in v.iter_mut() {
                    if vi.abs() <= 1e-12 * vmax {
                        *vi = 0.0;
                    }
                }
                if let Some((s, row, value)) = self.line_search(&v) {
                    if row != basis[p]
                        && value < current - 1e-14 * (1.0 + current)
                        && best.is_none_or(|(bv, ..)| value < bv)
                    {
                        best = Some((value, p, row, s));
                    }
                }
            }
            let Some((_, p, row, s)) = best else {
                return true;
            };
            let d: Vec<f64> = (0..k).map(|c| dirs[(c, p)]).collect();
            self.step(&d, s);
            in_basis[basis[p]] = false;
            in_basis[row] = true;
            basis[p] = row;
        }
        false
    }
}
