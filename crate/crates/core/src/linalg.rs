//! Dense column-major kernels used by the greedy solvers.
//!
//! Everything here is a pure function of its inputs. Columns are stored
//! contiguously so that `col(j)` is a slice and correlations `A^T r` are a
//! sequence of dot products.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Relative threshold on the pivoted `R` diagonal below which a column
/// submatrix is treated as numerically rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Real `m x N` matrix with finite entries, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        check_len("matrix entries", rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        check_len("matrix entries", rows * cols, data.len())?;
        let mut col_major = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                col_major[j * rows + i] = data[i * cols + j];
            }
        }
        Self::from_col_major(rows, cols, col_major)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(m * n);
        for row in rows {
            check_len("row length", n, row.len())?;
            flat.extend_from_slice(row);
        }
        Self::from_row_major(m, n, &flat)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self::from_col_major(rows, cols, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("iterate", self.cols, x.len())?;
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), &mut out);
            }
        }
        Ok(out)
    }

    /// `A^T r`
    pub fn tr_matvec(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len("residual", self.rows, r.len())?;
        Ok((0..self.cols).map(|j| dot(self.col(j), r)).collect())
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols).map(|j| norm2(self.col(j))).collect()
    }
}

/// Strictly increasing set of 0-based column indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a support from arbitrary indices; duplicates are rejected.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate support index {}",
                    w[0]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, len: n });
            }
        }
        Ok(Self { indices })
    }

    /// Converts 1-based indices (file and CLI convention) to a support.
    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self> {
        let zero_based = indices
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or(Error::IndexOutOfRange { index: i, len: n })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(zero_based, n)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Inserts `j`, returning `false` when it was already present.
    pub fn insert(&mut self, j: usize) -> bool {
        match self.indices.binary_search(&j) {
            Ok(_) => false,
            Err(pos) => {
                self.indices.insert(pos, j);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.iter().all(|j| other.contains(j))
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Scales every column to unit Euclidean norm.
///
/// Returns the normalized matrix and the original column norms, so that
/// `A = A_out * diag(scales)`.
pub fn normalize_columns(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let scales = a.column_norms();
    if let Some(j) = scales.iter().position(|&s| s == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let m = a.rows();
    let mut data = a.data.clone();
    for (j, &s) in scales.iter().enumerate() {
        for v in &mut data[j * m..(j + 1) * m] {
            *v /= s;
        }
    }
    Ok((DenseMatrix::from_col_major(m, a.cols(), data)?, scales))
}

/// `y - A x`, the residual convention used throughout the crate.
pub fn residual(a: &DenseMatrix, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len("measurements", a.rows(), y.len())?;
    let ax = a.matvec(x)?;
    Ok(y.iter().zip(&ax).map(|(yi, axi)| yi - axi).collect())
}

/// Outcome of a restricted least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LsqFit {
    /// Full-length solution, zero off the support.
    pub x: Vec<f64>,
    /// Numerical rank of the column submatrix.
    pub rank: usize,
    /// Set when `rank < |S|`; `x` is then the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Minimizes `||y - A z||_2` over `z` supported on `support`.
///
/// Uses Householder QR with column pivoting on `A_S`. When the numerical
/// rank (relative to the largest `R` diagonal) falls short of `|S|`, the
/// minimum-norm solution is returned instead and the fit is flagged.
pub fn least_squares_restricted(
    a: &DenseMatrix,
    y: &[f64],
    support: &SupportSet,
) -> Result<LsqFit> {
    check_len("measurements", a.rows(), y.len())?;
    let n = a.cols();
    if let Some(&last) = support.as_slice().last() {
        if last >= n {
            return Err(Error::IndexOutOfRange { index: last, len: n });
        }
    }
    let mut x = vec![0.0; n];
    if support.is_empty() {
        return Ok(LsqFit {
            x,
            rank: 0,
            rank_deficient: false,
        });
    }

    let m = a.rows();
    let k = support.len();
    let mut work: Vec<f64> = Vec::with_capacity(m * k);
    for j in support.iter() {
        work.extend_from_slice(a.col(j));
    }

    match pivoted_qr_solve(m, k, &mut work.clone(), y) {
        Some(z) => {
            for (pos, j) in support.iter().enumerate() {
                x[j] = z[pos];
            }
            Ok(LsqFit {
                x,
                rank: k,
                rank_deficient: false,
            })
        }
        None => {
            let (z, rank) = min_norm_solve(m, k, &work, y);
            for (pos, j) in support.iter().enumerate() {
                x[j] = z[pos];
            }
            Ok(LsqFit {
                x,
                rank,
                rank_deficient: true,
            })
        }
    }
}

/// Householder QR with column pivoting on the column-major `m x k` block in
/// `work`. Returns `None` when the block is numerically rank deficient.
fn pivoted_qr_solve(m: usize, k: usize, work: &mut [f64], y: &[f64]) -> Option<Vec<f64>> {
    if k > m {
        return None;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut qty = y.to_vec();
    let mut diag = vec![0.0; k];
    let mut v = vec![0.0; m];

    for p in 0..k {
        // pivot: remaining column with the largest trailing norm
        let mut best = p;
        let mut best_norm = -1.0;
        for q in p..k {
            let c = &work[q * m + p..(q + 1) * m];
            let nrm = dot(c, c);
            if nrm > best_norm {
                best_norm = nrm;
                best = q;
            }
        }
        if best != p {
            for i in 0..m {
                work.swap(p * m + i, best * m + i);
            }
            perm.swap(p, best);
        }

        let col = &work[p * m + p..(p + 1) * m];
        let alpha_norm = norm2(col);
        if alpha_norm == 0.0 {
            diag[p] = 0.0;
            break;
        }
        let alpha = if col[0] >= 0.0 { -alpha_norm } else { alpha_norm };
        let len = m - p;
        v[..len].copy_from_slice(col);
        v[0] -= alpha;
        let vnorm2 = dot(&v[..len], &v[..len]);
        diag[p] = alpha;
        if vnorm2 > 0.0 {
            let beta = 2.0 / vnorm2;
            for q in (p + 1)..k {
                let c = &mut work[q * m + p..(q + 1) * m];
                let s = beta * dot(&v[..len], c);
                axpy(-s, &v[..len], c);
            }
            let s = beta * dot(&v[..len], &qty[p..]);
            axpy(-s, &v[..len], &mut qty[p..]);
        }
        work[p * m + p] = alpha;
    }

    let largest = diag[0].abs();
    if largest == 0.0 || diag.iter().any(|d| d.abs() <= RANK_TOLERANCE * largest) {
        return None;
    }

    // back substitution on R z = (Q^T y)[..k]
    let mut z = vec![0.0; k];
    for p in (0..k).rev() {
        let mut s = qty[p];
        for q in (p + 1)..k {
            s -= work[q * m + p] * z[q];
        }
        z[p] = s / diag[p];
    }
    let mut out = vec![0.0; k];
    for (pos, &orig) in perm.iter().enumerate() {
        out[orig] = z[pos];
    }
    Some(out)
}

/// Minimum-norm least-squares solution via SVD, with singular values below
/// `RANK_TOLERANCE * sigma_max` discarded.
fn min_norm_solve(m: usize, k: usize, cols: &[f64], y: &[f64]) -> (Vec<f64>, usize) {
    let mat = DMatrix::from_column_slice(m, k, cols);
    let svd = mat.svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return (vec![0.0; k], 0);
    }
    let eps = RANK_TOLERANCE * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let rhs = DMatrix::from_column_slice(m, 1, y);
    let z = svd
        .solve(&rhs, eps)
        .expect("SVD computed with both factors");
    (z.column(0).iter().copied().collect(), rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal)).unwrap()
    }

    /// Independent oracle: Gaussian elimination on the normal equations.
    fn normal_equations(a: &DenseMatrix, y: &[f64], s: &[usize]) -> Vec<f64> {
        let k = s.len();
        let mut g = vec![vec![0.0; k + 1]; k];
        for (p, &jp) in s.iter().enumerate() {
            for (q, &jq) in s.iter().enumerate() {
                g[p][q] = dot(a.col(jp), a.col(jq));
            }
            g[p][k] = dot(a.col(jp), y);
        }
        for c in 0..k {
            let piv = (c..k)
                .max_by(|&i, &j| g[i][c].abs().total_cmp(&g[j][c].abs()))
                .unwrap();
            g.swap(c, piv);
            let pivot = g[c].clone();
            for (r, row) in g.iter_mut().enumerate() {
                if r != c {
                    let f = row[c] / pivot[c];
                    for (v, pv) in row[c..].iter_mut().zip(&pivot[c..]) {
                        *v -= f * pv;
                    }
                }
            }
        }
        (0..k).map(|p| g[p][k] / g[p][p]).collect()
    }

    #[test]
    fn normalize_identity_is_unchanged() {
        let a = DenseMatrix::identity(2).unwrap();
        let (b, s) = normalize_columns(&a).unwrap();
        assert_eq!(b, a);
        assert_eq!(s, vec![1.0, 1.0]);
    }

    #[test]
    fn normalize_three_four_five() {
        let a = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let (b, s) = normalize_columns(&a).unwrap();
        assert!((b.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((b.get(1, 0) - 0.8).abs() < 1e-15);
        assert_eq!(s, vec![5.0]);
    }

    #[test]
    fn normalize_random_gives_unit_columns_and_reconstructs() {
        let a = gaussian(8, 12, 7);
        let (b, s) = normalize_columns(&a).unwrap();
        for (j, &sj) in s.iter().enumerate() {
            assert!((norm2(b.col(j)) - 1.0).abs() < 1e-12);
            for i in 0..8 {
                assert!((b.get(i, j) * sj - a.get(i, j)).abs() < 1e-12 * sj);
            }
        }
    }

    #[test]
    fn normalize_rejects_zero_column() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(normalize_columns(&a), Err(Error::ZeroColumn(1))));
    }

    #[test]
    fn constructor_rejects_non_finite() {
        assert!(DenseMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![f64::INFINITY]]).is_err());
        assert!(matches!(
            DenseMatrix::from_col_major(0, 3, vec![]),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn residual_examples() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(residual(&a, &[0.0, 0.0], &[2.0, 3.0]).unwrap(), vec![2.0, 3.0]);
        assert_eq!(residual(&a, &[1.0, 1.0], &[2.0, 3.0]).unwrap(), vec![1.0, 1.0]);
        let i3 = DenseMatrix::identity(3).unwrap();
        assert_eq!(
            residual(&i3, &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            vec![0.0; 3]
        );
        assert!(matches!(
            residual(&a, &[1.0], &[2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lsq_empty_support_is_zero() {
        let a = gaussian(4, 5, 1);
        let fit = least_squares_restricted(&a, &[1.0; 4], &SupportSet::empty()).unwrap();
        assert_eq!(fit.x, vec![0.0; 5]);
        assert!(!fit.rank_deficient);
    }

    #[test]
    fn lsq_orthonormal_columns() {
        let a = DenseMatrix::identity(3).unwrap();
        let s = SupportSet::from_one_based(&[1, 3], 3).unwrap();
        let fit = least_squares_restricted(&a, &[1.0, 2.0, 3.0], &s).unwrap();
        for (got, want) in fit.x.iter().zip([1.0, 0.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn lsq_matches_normal_equations() {
        let a = gaussian(8, 12, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        let s = SupportSet::new(vec![1, 4, 7, 10], 12).unwrap();
        let fit = least_squares_restricted(&a, &y, &s).unwrap();
        let oracle = normal_equations(&a, &y, s.as_slice());
        for (pos, j) in s.iter().enumerate() {
            assert!((fit.x[j] - oracle[pos]).abs() < 1e-8);
        }
        // orthogonality certificate
        let r = residual(&a, &fit.x, &y).unwrap();
        for j in s.iter() {
            assert!(dot(a.col(j), &r).abs() <= 1e-10 * norm2(&y));
        }
    }

    #[test]
    fn lsq_rank_deficient_returns_min_norm() {
        // duplicated column
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s = SupportSet::new(vec![0, 1], 2).unwrap();
        let fit = least_squares_restricted(&a, &[2.0, 5.0, 2.0], &s).unwrap();
        assert!(fit.rank_deficient);
        assert_eq!(fit.rank, 1);
        assert!((fit.x[0] - 1.0).abs() < 1e-12 && (fit.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lsq_underdetermined_is_flagged() {
        let a = gaussian(3, 5, 9);
        let s = SupportSet::new(vec![0, 1, 2, 3], 5).unwrap();
        let y = [1.0, -1.0, 0.5];
        let fit = least_squares_restricted(&a, &y, &s).unwrap();
        assert!(fit.rank_deficient);
        assert_eq!(fit.rank, 3);
        let r = residual(&a, &fit.x, &y).unwrap();
        assert!(norm2(&r) < 1e-12);
    }

    #[test]
    fn support_set_basics() {
        let mut s = SupportSet::new(vec![4, 1], 6).unwrap();
        assert_eq!(s.as_slice(), &[1, 4]);
        assert!(s.insert(2));
        assert!(!s.insert(4));
        assert_eq!(s.to_one_based(), vec![2, 3, 5]);
        assert!(SupportSet::new(vec![1, 1], 3).is_err());
        assert!(SupportSet::new(vec![3], 3).is_err());
        assert!(SupportSet::from_one_based(&[0], 3).is_err());
    }
}
