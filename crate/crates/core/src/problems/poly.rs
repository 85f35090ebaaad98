//! Tensor Legendre polynomials on `[-1, 1]^d` and the function-approximation
//! setting built on them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_noise, draw_noise, rng_from, InstanceMeta, ProblemInstance};
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;
use crate::losses::Weights;

const DOMAIN_SLACK: f64 = 1e-12;

/// Ordered set of `d`-dimensional multi-indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawIndexSet")]
pub struct MultiIndexSet {
    d: usize,
    indices: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawIndexSet {
    d: usize,
    indices: Vec<Vec<usize>>,
}

impl TryFrom<RawIndexSet> for MultiIndexSet {
    type Error = Error;

    fn try_from(raw: RawIndexSet) -> Result<Self> {
        Self::new(raw.d, raw.indices)
    }
}

impl MultiIndexSet {
    /// Sorts the indices graded-lexicographically; rejects duplicates and
    /// tuples of the wrong length.
    pub fn new(d: usize, mut indices: Vec<Vec<usize>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if let Some(bad) = indices.iter().find(|nu| nu.len() != d) {
            return Err(Error::DimensionMismatch {
                what: "multi-index",
                expected: d,
                found: bad.len(),
            });
        }
        indices.sort_by(|a, b| degree(a).cmp(&degree(b)).then_with(|| a.cmp(b)));
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate multi-index".into()));
        }
        Ok(Self { d, indices })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, j: usize) -> &[usize] {
        &self.indices[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.indices.iter().map(Vec::as_slice)
    }

    pub fn position(&self, nu: &[usize]) -> Option<usize> {
        self.indices.iter().position(|v| v == nu)
    }

    /// Largest single-coordinate degree in each dimension.
    pub fn max_degrees(&self) -> Vec<usize> {
        let mut out = vec![0; self.d];
        for nu in &self.indices {
            for (o, &v) in out.iter_mut().zip(nu) {
                *o = (*o).max(v);
            }
        }
        out
    }
}

fn degree(nu: &[usize]) -> usize {
    nu.iter().sum()
}

/// `{nu in N_0^d : prod_k (nu_k + 1) <= n + 1}` in graded-lex order.
pub fn hyperbolic_cross(d: usize, n: usize) -> Result<MultiIndexSet> {
    fn descend(d: usize, budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        // (v + 1) * (product of the rest) <= budget, the rest being >= 1
        let mut v = 0;
        while v < budget {
            prefix.push(v);
            descend(d, budget / (v + 1), prefix, out);
            prefix.pop();
            v += 1;
        }
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let mut out = Vec::new();
    descend(d, n + 1, &mut Vec::with_capacity(d), &mut out);
    MultiIndexSet::new(d, out)
}

fn check_cube(t: &[f64]) -> Result<()> {
    if t.iter().all(|v| v.abs() <= 1.0 + DOMAIN_SLACK) {
        Ok(())
    } else {
        Err(Error::OutOfDomain)
    }
}

/// `psi_0(t), ..., psi_n(t)` with `psi_k = sqrt(2k + 1) P_k`, orthonormal for
/// the uniform probability measure on `[-1, 1]`.
pub fn legendre_table(n: usize, t: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if n == 0 {
        return;
    }
    out.push(t);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    for (k, v) in out.iter_mut().enumerate() {
        *v *= ((2 * k + 1) as f64).sqrt();
    }
}

/// Tensor-product orthonormal Legendre polynomial `Psi_nu(t)`.
pub fn legendre_eval(nu: &[usize], t: &[f64]) -> Result<f64> {
    check_len("point", nu.len(), t.len())?;
    check_cube(t)?;
    let mut table = Vec::new();
    Ok(nu
        .iter()
        .zip(t)
        .map(|(&n, &tk)| {
            legendre_table(n, tk, &mut table);
            table[n]
        })
        .product())
}

/// `w_nu = ||Psi_nu||_inf = prod_k sqrt(2 nu_k + 1)`
pub fn intrinsic_weights(set: &MultiIndexSet) -> Result<Weights> {
    Weights::new(
        set.iter()
            .map(|nu| nu.iter().map(|&v| ((2 * v + 1) as f64).sqrt()).product())
            .collect(),
    )
}

/// `exp(-sum_i t_i / (2d))`
pub fn iso_exponential(t: &[f64]) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    check_cube(t)?;
    let d = t.len() as f64;
    Ok((-t.iter().sum::<f64>() / (2.0 * d)).exp())
}

/// Evaluates every basis function of a multi-index set at a point, sharing
/// the univariate tables across the set.
#[derive(Debug, Clone)]
pub struct PolyBasis<'a> {
    set: &'a MultiIndexSet,
    max_deg: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl<'a> PolyBasis<'a> {
    pub fn new(set: &'a MultiIndexSet) -> Self {
        Self {
            set,
            max_deg: set.max_degrees(),
            tables: vec![Vec::new(); set.dim()],
        }
    }

    /// Writes `Psi_nu(t)` for every `nu` in set order into `out`.
    pub fn eval_into(&mut self, t: &[f64], out: &mut Vec<f64>) -> Result<()> {
        check_len("point", self.set.dim(), t.len())?;
        check_cube(t)?;
        for ((table, &n), &tk) in self.tables.iter_mut().zip(&self.max_deg).zip(t) {
            legendre_table(n, tk, table);
        }
        out.clear();
        out.extend(self.set.iter().map(|nu| {
            nu.iter()
                .zip(&self.tables)
                .map(|(&v, table)| table[v])
                .product::<f64>()
        }));
        Ok(())
    }
}

fn uniform_point(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Random sampling matrix `A_ij = Psi_j(t_i) / sqrt(m)` and measurements
/// `y_i = f(t_i) / sqrt(m) + e_i`, with `t_i` uniform on the cube and noise
/// as in the Gaussian setting. Weights are the intrinsic weights.
///
/// The matrix is not column-normalized; there is no ground-truth vector.
pub fn gen_function_approx(
    f: &dyn Fn(&[f64]) -> f64,
    set: &MultiIndexSet,
    m: usize,
    eta: f64,
    big_m: f64,
    k_corrupt: usize,
    seed: u64,
) -> Result<ProblemInstance> {
    if m == 0 || set.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    check_noise(m, eta, big_m, k_corrupt)?;
    let mut rng = rng_from(seed);
    let d = set.dim();
    let scale = 1.0 / (m as f64).sqrt();
    let mut basis = PolyBasis::new(set);
    let mut row = Vec::with_capacity(set.len());
    let mut rows = Vec::with_capacity(m * set.len());
    let mut y = Vec::with_capacity(m);
    for _ in 0..m {
        let t = uniform_point(d, &mut rng);
        basis.eval_into(&t, &mut row)?;
        rows.extend(row.iter().map(|v| v * scale));
        y.push(f(&t) * scale);
    }
    let a = DenseMatrix::from_row_major(m, set.len(), &rows)?;
    let noise = draw_noise(m, eta, big_m, k_corrupt, &mut rng);
    for (yi, (b, u)) in y.iter_mut().zip(noise.bounded.iter().zip(&noise.unbounded)) {
        *yi += b + u;
    }
    Ok(ProblemInstance {
        a,
        y,
        w: intrinsic_weights(set)?,
        x_true: None,
        noise: Some(noise),
        multi_indices: Some(set.clone()),
        meta: InstanceMeta {
            setting: "function-approx".into(),
            seed,
            m,
            n: set.len(),
            eta,
            big_m,
            k_corrupt,
            d: Some(d),
            ..InstanceMeta::default()
        },
    })
}

/// Monte Carlo estimate of the relative `L^2` error, with the basis values at
/// the sample points cached so that many coefficient vectors can be scored
/// against the same sample.
#[derive(Debug, Clone)]
pub struct McEvaluator {
    q: usize,
    /// `Psi_j(tau_q)`, column-major `Q x N`.
    values: Vec<f64>,
    f_values: Vec<f64>,
    f_energy: f64,
}

impl McEvaluator {
    pub fn new(
        f: &dyn Fn(&[f64]) -> f64,
        set: &MultiIndexSet,
        q: usize,
        seed: u64,
    ) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("need at least one sample point".into()));
        }
        let n = set.len();
        let mut rng = rng_from(seed);
        let mut basis = PolyBasis::new(set);
        let mut row = Vec::with_capacity(n);
        let mut values = vec![0.0; q * n];
        let mut f_values = Vec::with_capacity(q);
        for i in 0..q {
            let t = uniform_point(set.dim(), &mut rng);
            basis.eval_into(&t, &mut row)?;
            for (j, v) in row.iter().enumerate() {
                values[j * q + i] = *v;
            }
            f_values.push(f(&t));
        }
        let f_energy: f64 = f_values.iter().map(|v| v * v).sum();
        if f_energy == 0.0 {
            return Err(Error::ZeroFunction);
        }
        Ok(Self {
            q,
            values,
            f_values,
            f_energy,
        })
    }

    /// `sqrt(sum_q (f - sum_j x_j Psi_j)^2 / sum_q f^2)` over the cached sample.
    pub fn relative_error(&self, x_hat: &[f64]) -> Result<f64> {
        check_len("coefficients", self.values.len() / self.q, x_hat.len())?;
        let mut err = self.f_values.clone();
        for (j, &c) in x_hat.iter().enumerate() {
            if c != 0.0 {
                for (e, v) in err.iter_mut().zip(&self.values[j * self.q..(j + 1) * self.q]) {
                    *e -= c * v;
                }
            }
        }
        Ok((err.iter().map(|e| e * e).sum::<f64>() / self.f_energy).sqrt())
    }
}

/// One-shot form of [`McEvaluator`].
pub fn l2_error_estimate_mc(
    f: &dyn Fn(&[f64]) -> f64,
    set: &MultiIndexSet,
    x_hat: &[f64],
    q: usize,
    seed: u64,
) -> Result<f64> {
    check_len("coefficients", set.len(), x_hat.len())?;
    McEvaluator::new(f, set, q, seed)?.relative_error(x_hat)
}
