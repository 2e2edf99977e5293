use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphEstimate;
use crate::lattice::SubsetIndex;
use crate::model::ThetaVector;

/// Edge classification counts over the `p(p−1)/2` unordered pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub fp: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fn_ + self.fp
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 1.0,
            t => (self.tp + self.tn) as f64 / t as f64,
        }
    }
}

pub fn confusion(truth: &GraphEstimate, est: &GraphEstimate) -> Result<ConfusionCounts> {
    if truth.p() != est.p() {
        return Err(Error::LengthMismatch {
            expected: truth.p(),
            found: est.p(),
        });
    }
    let mut c = ConfusionCounts::default();
    for i in 0..truth.p() {
        for j in i + 1..truth.p() {
            match (truth.has_edge(i, j), est.has_edge(i, j)) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
            }
        }
    }
    Ok(c)
}

/// Which entries of θ enter the relative error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ErrScope {
    /// Every non-empty subset.
    #[default]
    All,
    /// Subsets of size two.
    Pairwise,
    /// Subsets of size one and two.
    LowOrder,
    /// Every subset, the normalizer included.
    Full,
}

impl ErrScope {
    pub const VARIANTS: [ErrScope; 4] = [
        ErrScope::All,
        ErrScope::Pairwise,
        ErrScope::LowOrder,
        ErrScope::Full,
    ];

    pub fn includes(self, d: SubsetIndex) -> bool {
        match self {
            ErrScope::All => !d.is_empty(),
            ErrScope::Pairwise => d.len() == 2,
            ErrScope::LowOrder => (1..=2).contains(&d.len()),
            ErrScope::Full => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrScope::All => "all",
            ErrScope::Pairwise => "pairwise",
            ErrScope::LowOrder => "low-order",
            ErrScope::Full => "full",
        }
    }
}

impl fmt::Display for ErrScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrScope::VARIANTS
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown error scope `{s}`")))
    }
}

/// `‖θ − θ̂‖₂ / ‖θ‖₂` over the entries selected by `scope`.
pub fn relative_error(truth: &ThetaVector, est: &ThetaVector, scope: ErrScope) -> Result<f64> {
    if truth.p() != est.p() {
        return Err(Error::LengthMismatch {
            expected: truth.p(),
            found: est.p(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for d in SubsetIndex::full(truth.p()).subsets() {
        if scope.includes(d) {
            let (a, b) = (truth.get(d), est.get(d));
            num += (a - b) * (a - b);
            den += a * a;
        }
    }
    if den == 0.0 {
        return Err(Error::invalid(format!(
            "true parameter has zero norm on scope `{scope}`"
        )));
    }
    Ok((num / den).sqrt())
}
