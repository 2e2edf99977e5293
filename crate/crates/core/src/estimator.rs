//! Closed-form Möbius-inversion estimator.
//!
//! The estimate is built in three steps:
//!
//! 1. count how often each outcome `D` occurs ([`empirical_frequencies`]);
//! 2. take `θ̂ = Mᵗ log π̂` ([`estimate_theta`]);
//! 3. zero small entries of `θ̂` ([`apply_threshold`]).
//!
//! [`estimate_theta_by_parity`] computes the same quantity through the
//! even/odd ratio form `θ̂_D = Σ_i log(p̂_{D_e,i} / p̂_{D_o,i})` and exists to
//! cross-check the fast path.

use crate::error::{Error, Result};
use crate::graph::GraphEstimate;
use crate::lattice::{self, subset_parity_split, LatticeVector, SubsetIndex};
use crate::model::{pairwise_graph, ProbabilityVector, ThetaVector};
use crate::sampler::SampleMatrix;

/// Additive count smoothing used unless the caller asks otherwise.
pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Outcome counts with an optional additive smoothing constant `α`; the
/// smoothed frequency of `D` is `(count_D + α) / (n + α·2^p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyVector {
    p: usize,
    counts: Vec<f64>,
    total: f64,
    alpha: f64,
}

impl FrequencyVector {
    /// Counts may be fractional (e.g. population probabilities).
    pub fn from_counts(p: usize, counts: Vec<f64>) -> Result<Self> {
        let lv = LatticeVector::new(p, counts)?;
        if let Some((d, v)) = lv.iter().find(|&(_, v)| v < 0.0) {
            return Err(Error::invalid(format!("negative count {v} at {d}")));
        }
        let total: f64 = lv.values().iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("frequency vector has no mass"));
        }
        Ok(FrequencyVector {
            p,
            counts: lv.into_values(),
            total,
            alpha: 0.0,
        })
    }

    /// Population-level frequencies: counts equal to the probabilities.
    pub fn from_probabilities(pi: &ProbabilityVector) -> Self {
        FrequencyVector {
            p: pi.p(),
            counts: pi.values().to_vec(),
            total: pi.values().iter().sum(),
            alpha: 0.0,
        }
    }

    pub fn with_smoothing(mut self, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid(format!("smoothing {alpha} must be ≥ 0")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn count(&self, d: SubsetIndex) -> f64 {
        self.counts[d.index()]
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Unsmoothed `count_D / n`.
    pub fn frequency(&self, d: SubsetIndex) -> f64 {
        self.counts[d.index()] / self.total
    }

    pub fn smoothed(&self, d: SubsetIndex) -> f64 {
        let denom = self.total + self.alpha * self.counts.len() as f64;
        (self.counts[d.index()] + self.alpha) / denom
    }

    pub fn smoothed_values(&self) -> Vec<f64> {
        let denom = self.total + self.alpha * self.counts.len() as f64;
        self.counts.iter().map(|c| (c + self.alpha) / denom).collect()
    }

    /// Subsets whose smoothed frequency is zero.
    pub fn zero_cells(&self) -> Vec<SubsetIndex> {
        if self.alpha > 0.0 {
            return Vec::new();
        }
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0.0)
            .map(|(m, _)| SubsetIndex::new(m as u32))
            .collect()
    }

    fn ensure_positive(&self) -> Result<()> {
        let zeros = self.zero_cells();
        if zeros.is_empty() {
            Ok(())
        } else {
            Err(Error::ZeroFrequency { subsets: zeros })
        }
    }
}

/// Counts each row's outcome. The result carries no smoothing.
pub fn empirical_frequencies(data: &SampleMatrix) -> Result<FrequencyVector> {
    lattice::check_dimension(data.p())?;
    let mut counts = vec![0.0; 1 << data.p()];
    for d in data.outcomes() {
        counts[d.index()] += 1.0;
    }
    FrequencyVector::from_counts(data.p(), counts)
}

/// `θ̂ = Mᵗ log π̂` over the smoothed frequencies.
pub fn estimate_theta(freq: &FrequencyVector) -> Result<ThetaVector> {
    freq.ensure_positive()?;
    let logs: Vec<f64> = freq.smoothed_values().iter().map(|v| v.ln()).collect();
    let mut theta = LatticeVector::new(freq.p, logs)?;
    lattice::mobius_in_place(theta.values_mut())?;
    ThetaVector::new(theta)
}

/// Same estimate as [`estimate_theta`], computed entry by entry as a sum of
/// log ratios between even and odd subsets of `D`. Quadratic in the lattice
/// size; intended for cross-checks.
pub fn estimate_theta_by_parity(freq: &FrequencyVector) -> Result<ThetaVector> {
    freq.ensure_positive()?;
    let smoothed = freq.smoothed_values();
    let values = (0..smoothed.len() as u32)
        .map(SubsetIndex::new)
        .map(|d| {
            let (even, odd) = subset_parity_split(d);
            if d.is_empty() {
                return smoothed[0].ln();
            }
            even.iter()
                .zip(&odd)
                .map(|(e, o)| (smoothed[e.index()] / smoothed[o.index()]).ln())
                .sum()
        })
        .collect();
    ThetaVector::new(LatticeVector::new(freq.p, values)?)
}

/// Almost-sure bound on `|θ̂_D|`: `2^{|D|-1} log(max/min)` over the smoothed
/// frequencies of the subsets of `D`. For `D = ∅` the estimate is
/// `log p̂_∅` itself, so its magnitude is returned.
pub fn theta_bound(freq: &FrequencyVector, d: SubsetIndex) -> Result<f64> {
    freq.ensure_positive()?;
    if !d.is_subset_of(SubsetIndex::full(freq.p)) {
        return Err(Error::invalid(format!("subset {d} outside {} nodes", freq.p)));
    }
    if d.is_empty() {
        return Ok(freq.smoothed(d).ln().abs());
    }
    let (lo, hi) = d
        .subsets()
        .map(|s| freq.smoothed(s))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok((1u64 << (d.len() - 1)) as f64 * (hi / lo).ln())
}

/// Which entries a threshold may zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ThresholdScope {
    /// Only `θ_{ij}`.
    #[default]
    Pairwise,
    /// Every `θ_D` with `D ≠ ∅`.
    AllNonEmpty,
}

impl ThresholdScope {
    fn includes(self, d: SubsetIndex) -> bool {
        match self {
            ThresholdScope::Pairwise => d.len() == 2,
            ThresholdScope::AllNonEmpty => !d.is_empty(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ThresholdKind {
    #[default]
    None,
    /// Zero the scoped entries whose magnitude is at or below the `q`-th
    /// empirical quantile of the scoped magnitudes.
    Quantile(f64),
    /// Zero scoped entries with `|θ| ≤ t`.
    Absolute(f64),
    /// Keep the `d` largest `|θ_{ij}|` at every node; an edge survives if
    /// either endpoint keeps it.
    Degree(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ThresholdRule {
    pub kind: ThresholdKind,
    pub scope: ThresholdScope,
}

impl ThresholdRule {
    pub fn none() -> Self {
        ThresholdRule::default()
    }

    pub fn quantile(q: f64, scope: ThresholdScope) -> Self {
        ThresholdRule {
            kind: ThresholdKind::Quantile(q),
            scope,
        }
    }

    pub fn absolute(t: f64, scope: ThresholdScope) -> Self {
        ThresholdRule {
            kind: ThresholdKind::Absolute(t),
            scope,
        }
    }

    pub fn degree(d: usize) -> Self {
        ThresholdRule {
            kind: ThresholdKind::Degree(d),
            scope: ThresholdScope::Pairwise,
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        match self.kind {
            ThresholdKind::Quantile(q) if !(0.0..1.0).contains(&q) => {
                Err(Error::invalid(format!("quantile {q} must lie in [0, 1)")))
            }
            ThresholdKind::Absolute(t) if !(t >= 0.0 && t.is_finite()) => {
                Err(Error::invalid(format!("threshold {t} must be ≥ 0")))
            }
            ThresholdKind::Degree(d) if d + 1 > p => Err(Error::invalid(format!(
                "degree {d} exceeds p - 1 = {}",
                p - 1
            ))),
            _ => Ok(()),
        }
    }
}

/// The `q`-th empirical quantile `inf{x : F(x) ≥ q}` of `values`, i.e. the
/// `⌈q·m⌉`-th smallest of `m` values. `None` when nothing falls at or below
/// it (`q = 0` or no values).
pub fn empirical_quantile(values: &[f64], q: f64) -> Option<f64> {
    let m = values.len();
    // guard against q·m landing a hair above an integer
    let rank = (q * m as f64 - 1e-9).ceil();
    if m == 0 || rank < 1.0 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(rank as usize).min(m) - 1])
}

/// Zeros small entries according to `rule`, never touching `θ_∅`, and
/// renormalizes through `θ_∅`.
pub fn apply_threshold(th: &ThetaVector, rule: &ThresholdRule) -> Result<ThetaVector> {
    let p = th.p();
    rule.validate(p)?;
    let mut theta = th.lattice().clone();
    let scoped: Vec<SubsetIndex> = theta
        .iter()
        .map(|(d, _)| d)
        .filter(|&d| rule.scope.includes(d))
        .collect();
    match rule.kind {
        ThresholdKind::None => return Ok(th.clone()),
        ThresholdKind::Quantile(q) => {
            let mags: Vec<f64> = scoped.iter().map(|&d| theta.get(d).abs()).collect();
            if let Some(cut) = empirical_quantile(&mags, q) {
                for &d in &scoped {
                    if theta.get(d).abs() <= cut {
                        theta.set(d, 0.0);
                    }
                }
            }
        }
        ThresholdKind::Absolute(t) => {
            for &d in &scoped {
                if theta.get(d).abs() <= t {
                    theta.set(d, 0.0);
                }
            }
        }
        ThresholdKind::Degree(keep) => {
            let mut kept = vec![false; p * p];
            for j in 0..p {
                let mut others: Vec<usize> = (0..p).filter(|&i| i != j).collect();
                // stable sort keeps lower indices first among ties
                others.sort_by(|&a, &b| {
                    th.pairwise(b, j).abs().total_cmp(&th.pairwise(a, j).abs())
                });
                for &i in others.iter().take(keep) {
                    kept[i * p + j] = true;
                    kept[j * p + i] = true;
                }
            }
            for i in 0..p {
                for j in i + 1..p {
                    if !kept[i * p + j] {
                        theta.set(SubsetIndex::pair(i, j), 0.0);
                    }
                }
            }
        }
    }
    Ok(ThetaVector::normalize(theta)?.0)
}

/// Zeros every interaction of more than `max_order` nodes and renormalizes.
pub fn truncate_order(th: &ThetaVector, max_order: usize) -> Result<ThetaVector> {
    let mut theta = th.lattice().clone();
    for (d, v) in th.lattice().iter() {
        if d.len() > max_order && v != 0.0 {
            theta.set(d, 0.0);
        }
    }
    Ok(ThetaVector::normalize(theta)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantileCandidate {
    pub quantile: f64,
    pub edges: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantileSelection {
    pub quantile: f64,
    pub path: Vec<QuantileCandidate>,
}

/// Picks, among `quantiles`, the one whose thresholded estimate keeps the
/// number of edges closest to `expected_edges`. Earlier candidates win ties.
pub fn select_quantile(
    th: &ThetaVector,
    quantiles: &[f64],
    scope: ThresholdScope,
    expected_edges: usize,
) -> Result<QuantileSelection> {
    if quantiles.is_empty() {
        return Err(Error::invalid("no candidate quantiles given"));
    }
    let path = quantiles
        .iter()
        .map(|&q| {
            let t = apply_threshold(th, &ThresholdRule::quantile(q, scope))?;
            Ok(QuantileCandidate {
                quantile: q,
                edges: pairwise_graph(&t, 0.0).edge_count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = path
        .iter()
        .min_by_key(|c| c.edges.abs_diff(expected_edges))
        .expect("non-empty path");
    Ok(QuantileSelection {
        quantile: best.quantile,
        path,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MobiusOptions {
    pub rule: ThresholdRule,
    pub alpha: f64,
    /// Known bound on the interaction order; higher-order estimates are
    /// zeroed before thresholding.
    pub max_order: Option<usize>,
}

impl Default for MobiusOptions {
    fn default() -> Self {
        MobiusOptions {
            rule: ThresholdRule::none(),
            alpha: DEFAULT_SMOOTHING,
            max_order: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MobiusFit {
    pub theta: ThetaVector,
    pub graph: GraphEstimate,
}

/// Frequencies, Möbius inversion, optional order truncation and thresholding.
pub fn fit_mobius(data: &SampleMatrix, opts: &MobiusOptions) -> Result<MobiusFit> {
    if data.n() <= data.p() {
        return Err(Error::invalid(format!(
            "{} samples for {} nodes; the estimator needs n > p",
            data.n(),
            data.p()
        )));
    }
    let freq = empirical_frequencies(data)?.with_smoothing(opts.alpha)?;
    let mut theta = estimate_theta(&freq)?;
    if let Some(k) = opts.max_order {
        theta = truncate_order(&theta, k)?;
    }
    let theta = apply_threshold(&theta, &opts.rule)?;
    let graph = pairwise_graph(&theta, 0.0);
    Ok(MobiusFit { theta, graph })
}
