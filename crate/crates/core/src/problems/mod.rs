//! Problem generators: sparse Gaussian recovery with bounded and sparse
//! unbounded noise, oracle weights, and polynomial function approximation.

mod io;
mod poly;

pub use io::INSTANCE_FORMAT;
pub use poly::{
    gen_function_approx, hyperbolic_cross, intrinsic_weights, iso_exponential, l2_error_estimate_mc,
    legendre_eval, legendre_table, McEvaluator, MultiIndexSet, PolyBasis,
};

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, normalize_columns, DenseMatrix, SupportSet};
use crate::losses::Weights;

/// Additive noise, split into a dense bounded part and a sparse corruption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParts {
    pub bounded: Vec<f64>,
    pub unbounded: Vec<f64>,
}

/// How an instance was produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub setting: String,
    pub seed: u64,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    pub eta: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub k_corrupt: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hc_order: Option<usize>,
}

/// `y = A x_true + e_bounded + e_unbounded`, plus weights and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub y: Vec<f64>,
    pub w: Weights,
    pub x_true: Option<Vec<f64>>,
    pub noise: Option<NoiseParts>,
    pub multi_indices: Option<MultiIndexSet>,
    pub meta: InstanceMeta,
}

impl ProblemInstance {
    /// `max_i |y_i - (A x_true + e)_i|`, or `None` without truth and noise.
    pub fn consistency_defect(&self) -> Option<f64> {
        let x = self.x_true.as_ref()?;
        let noise = self.noise.as_ref()?;
        let ax = self.a.matvec(x).ok()?;
        Some(
            self.y
                .iter()
                .zip(&ax)
                .zip(noise.bounded.iter().zip(&noise.unbounded))
                .map(|((yi, axi), (b, u))| (yi - (axi + b + u)).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Support of the ground truth, if known.
    pub fn true_support(&self) -> Option<SupportSet> {
        let x = self.x_true.as_ref()?;
        let idx = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect();
        SupportSet::new(idx, x.len()).ok()
    }
}

/// Parameters of the sparse Gaussian setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    /// Exact Euclidean norm of the bounded noise.
    pub eta: f64,
    /// Standard deviation of the corruptions.
    pub big_m: f64,
    pub k_corrupt: usize,
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_noise(m: usize, eta: f64, big_m: f64, k_corrupt: usize) -> Result<()> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {eta}")));
    }
    if !(big_m >= 0.0 && big_m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "corruption scale must be >= 0, got {big_m}"
        )));
    }
    if k_corrupt > m {
        return Err(Error::InvalidParameter(format!(
            "{k_corrupt} corruptions exceed {m} measurements"
        )));
    }
    Ok(())
}

/// Gaussian noise rescaled to norm `eta`, plus `k_corrupt` entries at
/// distinct random positions drawn from `N(0, big_m^2)`.
pub(crate) fn draw_noise(
    m: usize,
    eta: f64,
    big_m: f64,
    k_corrupt: usize,
    rng: &mut ChaCha8Rng,
) -> NoiseParts {
    let mut bounded: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let norm = norm2(&bounded);
    if eta == 0.0 || norm == 0.0 {
        bounded.iter_mut().for_each(|v| *v = 0.0);
    } else {
        bounded.iter_mut().for_each(|v| *v *= eta / norm);
    }
    let mut unbounded = vec![0.0; m];
    let mut positions = sample(rng, m, k_corrupt).into_vec();
    positions.sort_unstable();
    for i in positions {
        let g: f64 = rng.sample(StandardNormal);
        unbounded[i] = big_m * g;
    }
    NoiseParts { bounded, unbounded }
}

/// Normalized Gaussian matrix, `s`-sparse standard normal signal on a
/// uniformly drawn support, bounded noise of norm exactly `eta` and
/// `k_corrupt` corruptions of scale `big_m`. Weights are all ones.
pub fn gen_gaussian_sparse(p: &GaussianParams, seed: u64) -> Result<ProblemInstance> {
    if p.n == 0 || p.m == 0 {
        return Err(Error::EmptyMatrix);
    }
    if p.s > p.n {
        return Err(Error::InvalidParameter(format!(
            "sparsity {} exceeds dimension {}",
            p.s, p.n
        )));
    }
    check_noise(p.m, p.eta, p.big_m, p.k_corrupt)?;
    let mut rng = rng_from(seed);
    let raw = DenseMatrix::from_fn(p.m, p.n, |_, _| rng.sample(StandardNormal))?;
    let (a, _) = normalize_columns(&raw)?;
    let mut support = sample(&mut rng, p.n, p.s).into_vec();
    support.sort_unstable();
    let mut x = vec![0.0; p.n];
    for j in support {
        x[j] = rng.sample(StandardNormal);
    }
    let noise = draw_noise(p.m, p.eta, p.big_m, p.k_corrupt, &mut rng);
    let ax = a.matvec(&x)?;
    let y = ax
        .iter()
        .zip(noise.bounded.iter().zip(&noise.unbounded))
        .map(|(v, (b, u))| v + b + u)
        .collect();
    Ok(ProblemInstance {
        a,
        y,
        w: Weights::ones(p.n),
        x_true: Some(x),
        noise: Some(noise),
        multi_indices: None,
        meta: InstanceMeta {
            setting: "gaussian-sparse".into(),
            seed,
            m: p.m,
            n: p.n,
            s: Some(p.s),
            eta: p.eta,
            big_m: p.big_m,
            k_corrupt: p.k_corrupt,
            ..InstanceMeta::default()
        },
    })
}

/// `w0` on a random `floor(known_fraction * |S|)`-subset of the true support,
/// 1 elsewhere.
pub fn gen_oracle_weights(
    true_support: &SupportSet,
    known_fraction: f64,
    w0: f64,
    n: usize,
    seed: u64,
) -> Result<Weights> {
    if !(0.0..=1.0).contains(&known_fraction) {
        return Err(Error::InvalidParameter(format!(
            "oracle fraction must lie in [0, 1], got {known_fraction}"
        )));
    }
    if !(w0 > 0.0 && w0 <= 1.0) {
        return Err(Error::InvalidParameter(format!("w0 must lie in (0, 1], got {w0}")));
    }
    if let Some(&last) = true_support.as_slice().last() {
        if last >= n {
            return Err(Error::IndexOutOfRange { index: last, len: n });
        }
    }
    if true_support.is_empty() && known_fraction > 0.0 {
        return Err(Error::EmptySupport);
    }
    let s = true_support.len();
    let known = (known_fraction * s as f64 + 1e-9).floor() as usize;
    let mut rng = rng_from(seed);
    let mut w = vec![1.0; n];
    for pos in sample(&mut rng, s, known.min(s)) {
        w[true_support.as_slice()[pos]] = w0;
    }
    Weights::new(w)
}
