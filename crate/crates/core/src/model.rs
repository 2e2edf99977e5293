//! The two parametrizations of a multivariate Bernoulli variable.
//!
//! A [`ProbabilityVector`] holds the outcome probabilities `p_D`, where the
//! outcome `D` is the set of coordinates equal to one. A [`ThetaVector`]
//! holds the log-linear parameters `θ_D` of
//! `p(x) = exp(Σ_{D ⊆ V} θ_D Π_{i ∈ D} x_i)`, with `θ_∅` acting as the
//! normalizing constant. The two are related by `log π = Zᵗ θ` and
//! `θ = Mᵗ log π`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::GraphEstimate;
use crate::lattice::{self, LatticeVector, SubsetIndex};

/// Tolerance on `Σ exp(Zᵗθ) = 1` accepted by [`ThetaVector::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Default cutoff below which a parameter counts as zero in support queries.
pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-10;

/// Largest log-potential accepted before `exp` is considered to overflow.
pub const MAX_LOG_POTENTIAL: f64 = 700.0;

fn sum_tolerance(len: usize) -> f64 {
    1e-12_f64.max(len as f64 * 2e-16)
}

fn check_node(p: usize, node: usize) -> Result<()> {
    if node >= p {
        return Err(Error::invalid(format!(
            "node {} out of range for {p} nodes",
            node + 1
        )));
    }
    Ok(())
}

fn check_subset(p: usize, d: SubsetIndex) -> Result<()> {
    if !d.is_subset_of(SubsetIndex::full(p)) {
        return Err(Error::invalid(format!("subset {d} outside {p} nodes")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector {
    probs: LatticeVector,
}

impl ProbabilityVector {
    /// Requires every entry in `(0, 1)` and a total of one.
    pub fn new(probs: LatticeVector) -> Result<Self> {
        if probs.p() == 0 {
            return Err(Error::invalid("a model needs at least one node"));
        }
        for (d, v) in probs.iter() {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Positivity {
                    subset: d,
                    value: v,
                });
            }
        }
        let sum: f64 = probs.values().iter().sum();
        if (sum - 1.0).abs() > sum_tolerance(probs.len()) {
            return Err(Error::NotNormalized { sum });
        }
        Ok(ProbabilityVector { probs })
    }

    /// Normalizes strictly positive weights into a distribution.
    pub fn from_weights(p: usize, weights: Vec<f64>) -> Result<Self> {
        let lv = LatticeVector::new(p, weights)?;
        if let Some((d, v)) = lv.iter().find(|&(_, v)| v <= 0.0) {
            return Err(Error::Positivity {
                subset: d,
                value: v,
            });
        }
        let total: f64 = lv.values().iter().sum();
        Self::new(LatticeVector::new(p, lv.map(|v| v / total))?)
    }

    pub fn uniform(p: usize) -> Result<Self> {
        lattice::check_dimension(p)?;
        Self::new(LatticeVector::new(p, vec![1.0 / (1u64 << p) as f64; 1 << p])?)
    }

    pub fn p(&self) -> usize {
        self.probs.p()
    }

    pub fn get(&self, d: SubsetIndex) -> f64 {
        self.probs.get(d)
    }

    pub fn lattice(&self) -> &LatticeVector {
        &self.probs
    }

    pub fn values(&self) -> &[f64] {
        self.probs.values()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaVector {
    theta: LatticeVector,
}

impl ThetaVector {
    /// Wraps an already normalized parameter vector.
    pub fn new(theta: LatticeVector) -> Result<Self> {
        if theta.p() == 0 {
            return Err(Error::invalid("a model needs at least one node"));
        }
        let log_p = lattice::zeta_transform(&theta)?;
        let sum: f64 = log_p.values().iter().map(|v| v.exp()).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(ThetaVector { theta })
    }

    /// Shifts `θ_∅` so the model is normalized and returns the shift that
    /// was applied. Only interaction terms need to be meaningful on input.
    pub fn normalize(mut theta: LatticeVector) -> Result<(Self, f64)> {
        if theta.p() == 0 {
            return Err(Error::invalid("a model needs at least one node"));
        }
        let log_p = lattice::zeta_transform(&theta)?;
        if let Some((d, v)) = log_p.iter().find(|&(_, v)| v > MAX_LOG_POTENTIAL) {
            return Err(Error::Overflow {
                subset: d,
                value: v,
            });
        }
        let shift = -log_sum_exp(log_p.values());
        let empty = theta.get(SubsetIndex::EMPTY);
        theta.set(SubsetIndex::EMPTY, empty + shift);
        Ok((ThetaVector { theta }, shift))
    }

    pub fn p(&self) -> usize {
        self.theta.p()
    }

    pub fn get(&self, d: SubsetIndex) -> f64 {
        self.theta.get(d)
    }

    /// `θ_{ij}` for 0-based nodes.
    pub fn pairwise(&self, i: usize, j: usize) -> f64 {
        self.theta.get(SubsetIndex::pair(i, j))
    }

    pub fn lattice(&self) -> &LatticeVector {
        &self.theta
    }

    pub fn values(&self) -> &[f64] {
        self.theta.values()
    }

    pub fn into_lattice(self) -> LatticeVector {
        self.theta
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `θ = Mᵗ log π`.
pub fn theta_from_probs(pi: &ProbabilityVector) -> Result<ThetaVector> {
    let logs = LatticeVector::new(pi.p(), pi.probs.map(f64::ln))?;
    ThetaVector::new(lattice::mobius_transform(&logs)?)
}

/// `π = exp(Zᵗ θ)`. Rounding in `θ_∅` is absorbed by renormalizing.
pub fn probs_from_theta(th: &ThetaVector) -> Result<ProbabilityVector> {
    Ok(probs_from_log_potentials(&th.theta)?.0)
}

/// Like [`probs_from_theta`] for a possibly unnormalized parameter vector;
/// also returns the shift applied to `θ_∅`.
pub fn probs_from_log_potentials(theta: &LatticeVector) -> Result<(ProbabilityVector, f64)> {
    let (th, shift) = ThetaVector::normalize(theta.clone())?;
    let log_p = lattice::zeta_transform(&th.theta)?;
    let raw = log_p.map(f64::exp);
    let total: f64 = raw.iter().sum();
    let probs = LatticeVector::new(th.p(), raw.iter().map(|v| v / total).collect())?;
    Ok((ProbabilityVector::new(probs)?, shift))
}

/// Logistic function evaluated without overflow for large `|s|`.
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `P(X_j = 1 | X_{V∖j} = rest)` where `rest` lists the other coordinates
/// equal to one (bit `j` is ignored).
pub fn conditional_success(th: &ThetaVector, j: usize, rest: SubsetIndex) -> Result<f64> {
    check_node(th.p(), j)?;
    check_subset(th.p(), rest)?;
    let s: f64 = rest
        .without(j)
        .subsets()
        .map(|sub| th.get(sub.with(j)))
        .sum();
    Ok(sigmoid(s))
}

/// Conditional odds ratio of `X_i, X_j` given the other coordinates, where
/// `rest` lists those equal to one (bits `i`, `j` are ignored).
pub fn conditional_odds_ratio(
    pi: &ProbabilityVector,
    i: usize,
    j: usize,
    rest: SubsetIndex,
) -> Result<f64> {
    check_node(pi.p(), i)?;
    check_node(pi.p(), j)?;
    check_subset(pi.p(), rest)?;
    if i == j {
        return Err(Error::invalid("odds ratio needs two distinct nodes"));
    }
    let r = rest.without(i).without(j);
    let p11 = pi.get(r.with(i).with(j));
    let p00 = pi.get(r);
    let p10 = pi.get(r.with(i));
    let p01 = pi.get(r.with(j));
    Ok((p11 * p00) / (p10 * p01))
}

/// Whether `X_A ⊥⊥ X_B | X_rest` holds according to the support of `θ`:
/// every `D` meeting both `A` and `B` must have `|θ_D| ≤ tol`.
pub fn independence_query(
    th: &ThetaVector,
    a: SubsetIndex,
    b: SubsetIndex,
    tol: f64,
) -> Result<bool> {
    check_subset(th.p(), a)?;
    check_subset(th.p(), b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("independence query needs non-empty sets"));
    }
    if a.intersects(b) {
        return Err(Error::invalid(format!("sets {a} and {b} overlap")));
    }
    Ok(th
        .lattice()
        .iter()
        .filter(|&(d, _)| d.intersects(a) && d.intersects(b))
        .all(|(_, v)| v.abs() <= tol))
}

/// Checks that a zero `θ_D` (non-empty `D`) forces zero on every superset.
pub fn is_hierarchical(th: &ThetaVector, tol: f64) -> bool {
    is_hierarchical_from_order(th, 1, tol)
}

/// As [`is_hierarchical`], but only zeros on sets of at least `min_order`
/// nodes are required to propagate upward.
pub fn is_hierarchical_from_order(th: &ThetaVector, min_order: usize, tol: f64) -> bool {
    let min_order = min_order.max(1);
    // number of zeroed trigger sets below each E
    let mut zero_below: Vec<u32> = th
        .lattice()
        .iter()
        .map(|(d, v)| (d.len() >= min_order && v.abs() <= tol) as u32)
        .collect();
    lattice::zeta_in_place(&mut zero_below).expect("lattice length is a power of two");
    th.lattice()
        .iter()
        .all(|(e, v)| e.is_empty() || v.abs() <= tol || zero_below[e.index()] == 0)
}

/// Drops from `support` every set that has a non-empty subset outside it.
/// `∅` is always kept.
pub fn hierarchical_closure(
    p: usize,
    support: &BTreeSet<SubsetIndex>,
) -> Result<BTreeSet<SubsetIndex>> {
    lattice::check_dimension(p)?;
    for &d in support {
        check_subset(p, d)?;
    }
    let mut out: BTreeSet<SubsetIndex> = support
        .iter()
        .copied()
        .filter(|d| {
            d.subsets()
                .all(|sub| sub.is_empty() || support.contains(&sub))
        })
        .collect();
    out.insert(SubsetIndex::EMPTY);
    Ok(out)
}

/// Edges `(i, j)` with `|θ_{ij}| > tol`, weighted by `θ_{ij}`.
pub fn pairwise_graph(th: &ThetaVector, tol: f64) -> GraphEstimate {
    let p = th.p();
    let mut g = GraphEstimate::new(p);
    for i in 0..p {
        for j in i + 1..p {
            let w = th.pairwise(i, j);
            if w.abs() > tol {
                g.set_weight(i, j, w).expect("indices in range, finite weight");
            }
        }
    }
    g
}
