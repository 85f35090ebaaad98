use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Rule;
use crate::problems::hyperbolic_cross;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    GaussianSparse,
    /// Gaussian setting with `w0` on part of the true support.
    GaussianOracle,
    FunctionApprox,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::GaussianSparse => "gaussian-sparse",
            Setting::GaussianOracle => "gaussian-oracle",
            Setting::FunctionApprox => "function-approx",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-sparse" => Ok(Setting::GaussianSparse),
            "gaussian-oracle" => Ok(Setting::GaussianOracle),
            "function-approx" => Ok(Setting::FunctionApprox),
            other => Err(Error::InvalidConfig(format!("unknown setting {other:?}"))),
        }
    }
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

fn one() -> f64 {
    1.0
}

fn default_mc_points() -> usize {
    10_000
}

fn default_lambda_count() -> usize {
    50
}

/// Sweep description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub setting: Setting,
    pub rule: Rule,
    /// Signal length; derived from the multi-index set for function
    /// approximation.
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    pub m: usize,
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub hc_order: Option<usize>,
    #[serde(default = "zero_list")]
    pub eta_list: Vec<f64>,
    /// Corruption standard deviation.
    #[serde(rename = "M", default)]
    pub big_m: f64,
    /// Fraction of corrupted measurements; rounded to the nearest count.
    #[serde(default = "zero_list")]
    pub corrupt_fraction_list: Vec<f64>,
    #[serde(default = "one")]
    pub w0: f64,
    #[serde(default)]
    pub oracle_fraction: f64,
    /// Grid bounds default to `1e-4..10` for the least-squares families and
    /// `1e-3..10` for LAD.
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[serde(default)]
    pub lambda_max: Option<f64>,
    #[serde(default = "default_lambda_count")]
    pub lambda_count: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// One noise/corruption configuration of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub id: usize,
    pub eta: f64,
    pub corrupt_fraction: f64,
    pub k_corrupt: usize,
}

impl Level {
    /// Comma-free description, safe as a CSV field.
    pub fn desc(&self, cfg: &SweepConfig) -> String {
        let mut s = format!("eta={} corrupt={}", self.eta, self.k_corrupt);
        if cfg.setting == Setting::GaussianOracle {
            s.push_str(&format!(" w0={}", cfg.w0));
        }
        s
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be positive".into());
        }
        if self.lambda_count == 0 {
            return bad("lambda_count must be positive".into());
        }
        let (lo, hi) = self.lambda_range();
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("need 0 < lambda_min <= lambda_max, got {lo} and {hi}"));
        }
        if self.eta_list.is_empty() || self.corrupt_fraction_list.is_empty() {
            return bad("eta_list and corrupt_fraction_list must be nonempty".into());
        }
        if self.eta_list.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return bad("noise levels must be finite and nonnegative".into());
        }
        if self
            .corrupt_fraction_list
            .iter()
            .any(|f| !(0.0..=1.0).contains(f))
        {
            return bad("corruption fractions must lie in [0, 1]".into());
        }
        if !(self.big_m >= 0.0 && self.big_m.is_finite()) {
            return bad("M must be finite and nonnegative".into());
        }
        if !(self.w0 > 0.0 && self.w0 <= 1.0) {
            return bad("w0 must lie in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.oracle_fraction) {
            return bad("oracle_fraction must lie in [0, 1]".into());
        }
        if self.mc_points == 0 {
            return bad("mc_points must be positive".into());
        }
        match self.setting {
            Setting::GaussianSparse | Setting::GaussianOracle => {
                let (Some(n), Some(s)) = (self.n, self.s) else {
                    return bad(format!("{} needs N and s", self.setting));
                };
                if n == 0 || s > n {
                    return bad(format!("need 0 < N and s <= N, got N={n} s={s}"));
                }
            }
            Setting::FunctionApprox => {
                let (Some(d), Some(order)) = (self.d, self.hc_order) else {
                    return bad("function-approx needs d and hc_order".into());
                };
                if d == 0 {
                    return bad("d must be positive".into());
                }
                if let Some(n) = self.n {
                    let size = hyperbolic_cross(d, order)?.len();
                    if n != size {
                        return bad(format!("N = {n} but the index set has {size} elements"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Grid bounds after applying the per-family defaults.
    pub fn lambda_range(&self) -> (f64, f64) {
        let lo = if self.rule.family.is_least_squares() { 1e-4 } else { 1e-3 };
        (self.lambda_min.unwrap_or(lo), self.lambda_max.unwrap_or(10.0))
    }

    /// Log-spaced grid from `lambda_min` to `lambda_max`, endpoints exact.
    pub fn lambda_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.lambda_range();
        log_grid(lo, hi, self.lambda_count)
    }

    /// Cartesian product of noise levels and corruption fractions, noise
    /// level outermost.
    pub fn levels(&self) -> Vec<Level> {
        let mut out = Vec::new();
        for &eta in &self.eta_list {
            for &frac in &self.corrupt_fraction_list {
                out.push(Level {
                    id: out.len(),
                    eta,
                    corrupt_fraction: frac,
                    k_corrupt: (frac * self.m as f64).round() as usize,
                });
            }
        }
        out
    }
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}
