//! Exact sampling by enumeration of the `2^p` outcomes, and random sparse
//! model generation.
//!
//! All randomness comes from [`ChaCha8Rng`]. A master seed is split into
//! independent child seeds with [`child_seed`], which draws the first word
//! of ChaCha stream `index` under the master key, so replicate `r` of an
//! experiment is reproducible on its own.

use std::borrow::Cow;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeVector, SubsetIndex};
use crate::model::{probs_from_theta, ProbabilityVector, ThetaVector};

/// `n × p` binary observations, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMatrix {
    n: usize,
    p: usize,
    data: Vec<u8>,
}

impl SampleMatrix {
    pub fn new(p: usize, data: Vec<u8>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("samples need at least one column"));
        }
        if data.is_empty() || !data.len().is_multiple_of(p) {
            return Err(Error::invalid(format!(
                "{} entries do not form rows of {p} columns",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&v| v > 1) {
            return Err(Error::invalid(format!(
                "non-binary value {} in row {}, column {}",
                data[pos],
                pos / p + 1,
                pos % p + 1
            )));
        }
        Ok(SampleMatrix {
            n: data.len() / p,
            p,
            data,
        })
    }

    /// One row per outcome set: ones exactly on the nodes of each mask.
    pub fn from_outcomes(p: usize, outcomes: &[SubsetIndex]) -> Result<Self> {
        lattice::check_dimension(p)?;
        let full = SubsetIndex::full(p);
        let mut data = Vec::with_capacity(outcomes.len() * p);
        for &d in outcomes {
            if !d.is_subset_of(full) {
                return Err(Error::invalid(format!("outcome {d} outside {p} nodes")));
            }
            data.extend((0..p).map(|k| d.contains(k) as u8));
        }
        Self::new(p, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, k: usize) -> &[u8] {
        &self.data[k * self.p..(k + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.p)
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.p + col]
    }

    /// The set of coordinates equal to one in row `k`.
    pub fn outcome(&self, k: usize) -> SubsetIndex {
        row_outcome(self.row(k))
    }

    pub fn outcomes(&self) -> impl Iterator<Item = SubsetIndex> + '_ {
        self.rows().map(row_outcome)
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<SampleMatrix> {
        let mut data = Vec::with_capacity(rows.len() * self.p);
        for &r in rows {
            if r >= self.n {
                return Err(Error::invalid(format!("row {r} out of range")));
            }
            data.extend_from_slice(self.row(r));
        }
        SampleMatrix::new(self.p, data)
    }
}

fn row_outcome(row: &[u8]) -> SubsetIndex {
    SubsetIndex::new(
        row.iter()
            .enumerate()
            .fold(0u32, |m, (k, &v)| m | ((v as u32) << k)),
    )
}

/// Either parametrization can be sampled from.
pub trait OutcomeModel {
    fn probabilities(&self) -> Result<Cow<'_, ProbabilityVector>>;
}

impl OutcomeModel for ProbabilityVector {
    fn probabilities(&self) -> Result<Cow<'_, ProbabilityVector>> {
        Ok(Cow::Borrowed(self))
    }
}

impl OutcomeModel for ThetaVector {
    fn probabilities(&self) -> Result<Cow<'_, ProbabilityVector>> {
        Ok(Cow::Owned(probs_from_theta(self)?))
    }
}

/// Draws `n` i.i.d. rows by inverse CDF over the outcome probabilities.
pub fn sample<M: OutcomeModel + ?Sized>(model: &M, n: usize, seed: u64) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let pi = model.probabilities()?;
    let dist = WeightedIndex::new(pi.values())
        .map_err(|e| Error::invalid(format!("invalid outcome weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes: Vec<SubsetIndex> = (0..n)
        .map(|_| SubsetIndex::new(dist.sample(&mut rng) as u32))
        .collect();
    SampleMatrix::from_outcomes(pi.p(), &outcomes)
}

/// Independent seed for sub-task `index` of a run seeded with `master`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelPattern {
    /// Interactions up to order two.
    #[default]
    Pairwise,
    /// Additionally one `±coupling` term on every clique of three or more
    /// nodes in the drawn edge set.
    General,
}

/// How the drawn interaction sizes are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingCoding {
    /// `±coupling` is the 0/1 parameter `θ_D` itself.
    #[default]
    Binary,
    /// `±coupling` multiplies `Π_{k∈D} (2x_k − 1)`, the ±1 spin product;
    /// it is expanded into the 0/1 parameters of every subset of `D`.
    Spin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub p: usize,
    pub pattern: ModelPattern,
    pub coding: CouplingCoding,
    pub nonzero_pairs: usize,
    pub coupling: f64,
    /// Singleton terms are drawn from `U(-s, s)`; zero keeps them at zero.
    pub singleton_scale: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn mixed_coupling(p: usize, nonzero_pairs: usize, seed: u64) -> Self {
        ModelSpec {
            p,
            pattern: ModelPattern::Pairwise,
            coding: CouplingCoding::Binary,
            nonzero_pairs,
            coupling: 0.5,
            singleton_scale: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        lattice::check_dimension(self.p)?;
        if self.p < 2 {
            return Err(Error::invalid("random models need at least two nodes"));
        }
        let pairs = self.p * (self.p - 1) / 2;
        if self.nonzero_pairs > pairs {
            return Err(Error::invalid(format!(
                "{} nonzero pairs requested but only {pairs} exist",
                self.nonzero_pairs
            )));
        }
        if !self.coupling.is_finite() || !(self.singleton_scale.is_finite() && self.singleton_scale >= 0.0) {
            return Err(Error::invalid("coupling and singleton scale must be finite"));
        }
        Ok(())
    }
}

fn add_term(theta: &mut LatticeVector, d: SubsetIndex, value: f64, coding: CouplingCoding) {
    match coding {
        CouplingCoding::Binary => theta.set(d, theta.get(d) + value),
        CouplingCoding::Spin => {
            for s in d.subsets().filter(|s| !s.is_empty()) {
                let sign = if (d.len() - s.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
                let scale = (1u64 << s.len()) as f64;
                theta.set(s, theta.get(s) + sign * scale * value);
            }
        }
    }
}

/// Random sparse model with `nonzero_pairs` interactions of size
/// `±coupling`, normalized through `θ_∅`.
pub fn random_pairwise_model(spec: &ModelSpec) -> Result<ThetaVector> {
    spec.validate()?;
    let p = spec.p;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs: Vec<SubsetIndex> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| SubsetIndex::pair(i, j)))
        .collect();
    let mut chosen = index::sample(&mut rng, pairs.len(), spec.nonzero_pairs).into_vec();
    chosen.sort_unstable();

    let mut theta = LatticeVector::zeros(p)?;
    let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    for &k in &chosen {
        let s = sign(&mut rng);
        add_term(&mut theta, pairs[k], s * spec.coupling, spec.coding);
    }
    if spec.singleton_scale > 0.0 {
        for k in 0..p {
            let v = rng.random_range(-spec.singleton_scale..=spec.singleton_scale);
            add_term(&mut theta, SubsetIndex::singleton(k), v, spec.coding);
        }
    }
    if spec.pattern == ModelPattern::General {
        let chosen: Vec<SubsetIndex> = chosen.iter().map(|&k| pairs[k]).collect();
        let edge = |i: usize, j: usize| chosen.contains(&SubsetIndex::pair(i, j));
        let cliques: Vec<SubsetIndex> = (0..1u32 << p)
            .map(SubsetIndex::new)
            .filter(|d| d.len() >= 3)
            .filter(|d| {
                let nodes: Vec<usize> = d.nodes().collect();
                nodes
                    .iter()
                    .enumerate()
                    .all(|(a, &i)| nodes[a + 1..].iter().all(|&j| edge(i, j)))
            })
            .collect();
        for d in cliques {
            let s = sign(&mut rng);
            add_term(&mut theta, d, s * spec.coupling, spec.coding);
        }
    }
    Ok(ThetaVector::normalize(theta)?.0)
}
