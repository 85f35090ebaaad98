//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's solvers or selection rules.

#![allow(dead_code, clippy::too_many_arguments)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major dense matrix with unit-norm columns.
#[derive(Debug, Clone)]
pub struct Mat {
    pub m: usize,
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl Mat {
    pub fn gaussian_normalized(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        for j in 0..n {
            let norm = (0..m).map(|i| rows[i][j] * rows[i][j]).sum::<f64>().sqrt();
            for row in rows.iter_mut() {
                row[j] /= norm;
            }
        }
        Self { m, n, rows }
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn row_major(&self) -> Vec<f64> {
        self.rows.concat()
    }

    pub fn residual(&self, y: &[f64], z: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(y)
            .map(|(row, yi)| yi - row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fid {
    SquaredL2,
    L2,
    L1,
}

pub fn fidelity(f: Fid, r: &[f64]) -> f64 {
    match f {
        Fid::SquaredL2 => r.iter().map(|v| v * v).sum(),
        Fid::L2 => r.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Fid::L1 => r.iter().map(|v| v.abs()).sum(),
    }
}

/// Loss along the line `x + t e_j`, with `l0 = true` for the counting penalty.
pub fn line_loss(a: &Mat, y: &[f64], w: &[f64], lambda: f64, f: Fid, l0: bool, x: &[f64], j: usize, t: f64) -> f64 {
    let mut z = x.to_vec();
    z[j] += t;
    let pen: f64 = if l0 {
        z.iter().zip(w).filter(|(v, _)| **v != 0.0).map(|(_, w)| w * w).sum()
    } else {
        z.iter().zip(w).map(|(v, w)| v.abs() * w).sum()
    };
    fidelity(f, &a.residual(y, &z)) + lambda * pen
}

/// `G(x) - min_t G(x + t e_j)` by brute force: a coarse grid, golden-section
/// refinement around the best grid point (the loss is convex in `t` apart
/// from the single point `t = -x_j` where an `l0` term drops), and the
/// special points `0`, `-x_j` and every residual breakpoint.
pub fn grid_reduction(a: &Mat, y: &[f64], w: &[f64], lambda: f64, f: Fid, l0: bool, x: &[f64], j: usize) -> f64 {
    let g = |t: f64| line_loss(a, y, w, lambda, f, l0, x, j, t);
    let g0 = g(0.0);
    let r = a.residual(y, x);
    let aj = a.col(j);
    let ynorm: f64 = y.iter().map(|v| v.abs()).sum();
    let radius = 4.0 * (x[j].abs() + ynorm + 1.0);
    let steps = 4000;
    let h = 2.0 * radius / steps as f64;
    let mut best_t = 0.0;
    let mut best = g0;
    for i in 0..=steps {
        let t = -radius + h * i as f64;
        let v = g(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    // golden-section search on [best_t - h, best_t + h]
    let (mut lo, mut hi) = (best_t - h, best_t + h);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if gc < gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + phi * (hi - lo);
            gd = g(d);
        }
    }
    best = best.min(gc).min(gd);
    let mut special = vec![-x[j]];
    special.extend(r.iter().zip(&aj).filter(|(_, a)| **a != 0.0).map(|(ri, ai)| ri / ai));
    for t in special {
        best = best.min(g(t));
    }
    g0 - best
}

/// Least squares on the columns in `support` via the normal equations and a
/// Cholesky factorization.
pub fn normal_equations(a: &Mat, y: &[f64], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| a.col(j)).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let mut g = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for p in 0..k {
        b[p] = dot(&cols[p], y);
        for q in 0..k {
            g[p][q] = dot(&cols[p], &cols[q]);
        }
    }
    // g = L L^T
    let mut l = vec![vec![0.0; k]; k];
    for p in 0..k {
        for q in 0..=p {
            let s: f64 = (0..q).map(|r| l[p][r] * l[q][r]).sum();
            if p == q {
                l[p][p] = (g[p][p] - s).sqrt();
            } else {
                l[p][q] = (g[p][q] - s) / l[q][q];
            }
        }
    }
    let mut z = vec![0.0; k];
    for p in 0..k {
        z[p] = (b[p] - (0..p).map(|r| l[p][r] * z[r]).sum::<f64>()) / l[p][p];
    }
    let mut c = vec![0.0; k];
    for p in (0..k).rev() {
        c[p] = (z[p] - (p + 1..k).map(|r| l[r][p] * c[r]).sum::<f64>()) / l[p][p];
    }
    let mut x = vec![0.0; a.n];
    for (p, &j) in support.iter().enumerate() {
        x[j] = c[p];
    }
    x
}

/// Textbook OMP: largest absolute correlation with the residual (lowest
/// index on ties), least-squares refit through the normal equations.
pub fn plain_omp(a: &Mat, y: &[f64], k: usize) -> Vec<usize> {
    let mut support: Vec<usize> = Vec::new();
    let mut order = Vec::new();
    let mut x = vec![0.0; a.n];
    for _ in 0..k {
        let r = a.residual(y, &x);
        let mut best = (0, -1.0);
        for j in 0..a.n {
            let c = a.rows.iter().zip(&r).map(|(row, ri)| row[j] * ri).sum::<f64>().abs();
            if c > best.1 {
                best = (j, c);
            }
        }
        order.push(best.0);
        if !support.contains(&best.0) {
            support.push(best.0);
            support.sort_unstable();
        }
        x = normal_equations(a, y, &support);
    }
    order
}

/// Exact restricted LAD optimum for a two-column support: some optimum
/// interpolates two rows (a vertex), or one row when the columns are
/// parallel, so enumerate those.
pub fn lad_two_column_vertex(a: &Mat, y: &[f64], support: [usize; 2]) -> f64 {
    let (p, q) = (support[0], support[1]);
    let obj = |u: f64, v: f64| {
        let mut z = vec![0.0; a.n];
        z[p] = u;
        z[q] = v;
        fidelity(Fid::L1, &a.residual(y, &z))
    };
    let mut best = obj(0.0, 0.0);
    for i in 0..a.m {
        for k in i + 1..a.m {
            let (a11, a12, a21, a22) = (a.rows[i][p], a.rows[i][q], a.rows[k][p], a.rows[k][q]);
            let det = a11 * a22 - a12 * a21;
            if det.abs() < 1e-14 {
                continue;
            }
            let u = (y[i] * a22 - a12 * y[k]) / det;
            let v = (a11 * y[k] - a21 * y[i]) / det;
            best = best.min(obj(u, v));
        }
    }
    best
}

pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
