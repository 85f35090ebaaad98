//! Weighted norms and the six regularized loss functionals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm1, norm2, residual, DenseMatrix};

/// Strictly positive weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        for (index, &value) in w.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        Ok(Self(w))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

/// Data-fidelity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossFamily {
    /// `||y - Az||_2^2`
    Lasso,
    /// `||y - Az||_2`
    SrLasso,
    /// `||y - Az||_1`
    LadLasso,
}

impl LossFamily {
    /// LASSO and SR-LASSO share the least-squares refit and need unit columns.
    pub fn is_least_squares(self) -> bool {
        !matches!(self, LossFamily::LadLasso)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regularizer {
    WeightedL1,
    WeightedL0,
}

/// One of the six (fidelity, regularizer) greedy rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rule {
    pub family: LossFamily,
    pub regularizer: Regularizer,
}

impl Rule {
    pub const LASSO_L1: Rule = Rule::new(LossFamily::Lasso, Regularizer::WeightedL1);
    pub const SRLASSO_L1: Rule = Rule::new(LossFamily::SrLasso, Regularizer::WeightedL1);
    pub const LADLASSO_L1: Rule = Rule::new(LossFamily::LadLasso, Regularizer::WeightedL1);
    pub const LASSO_L0: Rule = Rule::new(LossFamily::Lasso, Regularizer::WeightedL0);
    pub const SRLASSO_L0: Rule = Rule::new(LossFamily::SrLasso, Regularizer::WeightedL0);
    pub const LADLASSO_L0: Rule = Rule::new(LossFamily::LadLasso, Regularizer::WeightedL0);

    pub const ALL: [Rule; 6] = [
        Rule::LASSO_L1,
        Rule::SRLASSO_L1,
        Rule::LADLASSO_L1,
        Rule::LASSO_L0,
        Rule::SRLASSO_L0,
        Rule::LADLASSO_L0,
    ];

    pub const fn new(family: LossFamily, regularizer: Regularizer) -> Self {
        Self {
            family,
            regularizer,
        }
    }

    pub fn name(self) -> &'static str {
        match (self.family, self.regularizer) {
            (LossFamily::Lasso, Regularizer::WeightedL1) => "lasso-l1",
            (LossFamily::SrLasso, Regularizer::WeightedL1) => "srlasso-l1",
            (LossFamily::LadLasso, Regularizer::WeightedL1) => "ladlasso-l1",
            (LossFamily::Lasso, Regularizer::WeightedL0) => "lasso-l0",
            (LossFamily::SrLasso, Regularizer::WeightedL0) => "srlasso-l0",
            (LossFamily::LadLasso, Regularizer::WeightedL0) => "ladlasso-l0",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown rule '{s}'")))
    }
}

impl TryFrom<String> for Rule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Rule> for String {
    fn from(r: Rule) -> Self {
        r.name().to_owned()
    }
}

/// Loss family, regularizer and tuning parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub family: LossFamily,
    pub regularizer: Regularizer,
    lambda: f64,
}

impl LossSpec {
    pub fn new(rule: Rule, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidLambda(lambda));
        }
        Ok(Self {
            family: rule.family,
            regularizer: rule.regularizer,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rule(&self) -> Rule {
        Rule::new(self.family, self.regularizer)
    }
}

/// `sum_{j in supp z} w_j |z_j|`
pub fn weighted_l1_norm(z: &[f64], w: &Weights) -> Result<f64> {
    check_len("weights", z.len(), w.len())?;
    Ok(z
        .iter()
        .zip(w.as_slice())
        .filter(|(zj, _)| **zj != 0.0)
        .map(|(zj, wj)| wj * zj.abs())
        .sum())
}

/// `sum_{j in supp z} w_j^2`, with an exact zero test for the support.
pub fn weighted_l0_norm(z: &[f64], w: &Weights) -> Result<f64> {
    check_len("weights", z.len(), w.len())?;
    Ok(z
        .iter()
        .zip(w.as_slice())
        .filter(|(zj, _)| **zj != 0.0)
        .map(|(_, wj)| wj * wj)
        .sum())
}

/// Fidelity term evaluated on a residual vector.
pub fn fidelity(family: LossFamily, r: &[f64]) -> f64 {
    match family {
        LossFamily::Lasso => {
            let n = norm2(r);
            n * n
        }
        LossFamily::SrLasso => norm2(r),
        LossFamily::LadLasso => norm1(r),
    }
}

pub fn penalty(regularizer: Regularizer, z: &[f64], w: &Weights) -> Result<f64> {
    match regularizer {
        Regularizer::WeightedL1 => weighted_l1_norm(z, w),
        Regularizer::WeightedL0 => weighted_l0_norm(z, w),
    }
}

/// `G(z) = F(y - Az) + lambda R(z)` for the chosen family and regularizer.
pub fn eval_loss(
    spec: &LossSpec,
    a: &DenseMatrix,
    y: &[f64],
    w: &Weights,
    z: &[f64],
) -> Result<f64> {
    check_len("weights", a.cols(), w.len())?;
    let r = residual(a, z, y)?;
    let reg = if spec.lambda == 0.0 {
        0.0
    } else {
        spec.lambda * penalty(spec.regularizer, z, w)?
    };
    Ok(fidelity(spec.family, &r) + reg)
}
