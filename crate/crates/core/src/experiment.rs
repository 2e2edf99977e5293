//! Simulation sweep comparing the two estimators on shared data.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    apply_threshold, fit_mobius, select_quantile, MobiusOptions, ThresholdRule, ThresholdScope,
    DEFAULT_SMOOTHING,
};
use crate::graph::GraphEstimate;
use crate::logistic::{fit_lnm, GridSpec, LnmOptions, SolverConfig, SymmetrizationRule};
use crate::metrics::{confusion, relative_error, ConfusionCounts, ErrScope};
use crate::model::{pairwise_graph, ThetaVector};
use crate::sampler::{
    child_seed, random_pairwise_model, sample, CouplingCoding, ModelPattern, ModelSpec, SampleMatrix,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "M-I", alias = "mobius")]
    MobiusInversion,
    #[serde(rename = "L-N-M", alias = "lnm")]
    LogisticNeighborhood,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MobiusInversion => "M-I",
            Method::LogisticNeighborhood => "L-N-M",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M-I" | "mobius" => Ok(Method::MobiusInversion),
            "L-N-M" | "lnm" => Ok(Method::LogisticNeighborhood),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    #[default]
    Min,
    Max,
}

impl From<RuleName> for SymmetrizationRule {
    fn from(r: RuleName) -> Self {
        match r {
            RuleName::Min => SymmetrizationRule::MinMagnitude,
            RuleName::Max => SymmetrizationRule::MaxMagnitude,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeName {
    #[default]
    Pairwise,
    All,
}

impl From<ScopeName> for ThresholdScope {
    fn from(s: ScopeName) -> Self {
        match s {
            ScopeName::Pairwise => ThresholdScope::Pairwise,
            ScopeName::All => ThresholdScope::AllNonEmpty,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    pub nonzero_pairs: usize,
    pub coupling: f64,
    pub pattern: ModelPattern,
    pub coding: CouplingCoding,
    /// Singleton terms are drawn from U(−s, s); zero gives none.
    pub singleton_scale: f64,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub methods: Vec<Method>,
    /// Candidate quantiles for the M-I threshold; the one whose edge count
    /// is closest to `nonzero_pairs` is used.
    pub quantiles: Vec<f64>,
    pub threshold_scope: ScopeName,
    pub alpha: f64,
    /// Interaction order above which M-I estimates are set to zero.
    pub max_order: Option<usize>,
    /// Explicit λ grid; automatic per node when absent.
    pub grid: Option<Vec<f64>>,
    pub grid_size: usize,
    pub grid_min: f64,
    pub folds: usize,
    pub rule: RuleName,
    pub err_scopes: Vec<ErrScope>,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p: 5,
            nonzero_pairs: 6,
            coupling: 0.5,
            pattern: ModelPattern::Pairwise,
            coding: CouplingCoding::Binary,
            singleton_scale: 0.0,
            sample_sizes: vec![150, 500, 1000, 5000],
            replicates: 10,
            methods: vec![Method::MobiusInversion, Method::LogisticNeighborhood],
            quantiles: vec![0.2, 0.4, 0.5, 0.6, 0.7],
            threshold_scope: ScopeName::Pairwise,
            alpha: DEFAULT_SMOOTHING,
            max_order: Some(2),
            grid: None,
            grid_size: 20,
            grid_min: 1e-3,
            folds: 10,
            rule: RuleName::Min,
            err_scopes: ErrScope::VARIANTS.to_vec(),
            master_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_spec(0).validate()?;
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be ≥ 1"));
        }
        if self.sample_sizes.is_empty() || self.methods.is_empty() || self.err_scopes.is_empty() {
            return Err(Error::invalid(
                "sample_sizes, methods and err_scopes must be non-empty",
            ));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n <= self.p) {
            return Err(Error::invalid(format!("sample size {n} must exceed p = {}", self.p)));
        }
        if self.methods.contains(&Method::MobiusInversion) {
            if self.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
                return Err(Error::invalid("quantiles must lie in [0, 1]"));
            }
            if !(self.alpha.is_finite() && self.alpha >= 0.0) {
                return Err(Error::invalid("alpha must be ≥ 0"));
            }
        }
        if self.methods.contains(&Method::LogisticNeighborhood) {
            if self.folds < 2 {
                return Err(Error::invalid("folds must be ≥ 2"));
            }
            if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < self.folds) {
                return Err(Error::invalid(format!("sample size {n} is below {} folds", self.folds)));
            }
            self.grid_spec().resolve_check()?;
        }
        Ok(())
    }

    fn model_spec(&self, seed: u64) -> ModelSpec {
        ModelSpec {
            p: self.p,
            pattern: self.pattern,
            coding: self.coding,
            nonzero_pairs: self.nonzero_pairs,
            coupling: self.coupling,
            singleton_scale: self.singleton_scale,
            seed,
        }
    }

    fn grid_spec(&self) -> GridSpec {
        match &self.grid {
            Some(v) => GridSpec::Explicit(v.clone()),
            None => GridSpec::Auto {
                count: self.grid_size,
                min: self.grid_min,
            },
        }
    }

    pub fn lnm_options(&self) -> LnmOptions {
        LnmOptions {
            grid: self.grid_spec(),
            folds: self.folds,
            rule: self.rule.into(),
            solver: SolverConfig::default(),
        }
    }
}

impl GridSpec {
    fn resolve_check(&self) -> Result<()> {
        match self {
            GridSpec::Explicit(v) if v.is_empty() || v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) => {
                Err(Error::invalid("penalty grid must be non-empty and ≥ 0"))
            }
            GridSpec::Auto { count, min } if *count == 0 || !(*min > 0.0) => {
                Err(Error::invalid("automatic grid needs grid_size ≥ 1 and grid_min > 0"))
            }
            _ => Ok(()),
        }
    }
}

/// What a method produced on one replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutput {
    pub theta: ThetaVector,
    pub graph: GraphEstimate,
    /// Chosen quantile for M-I, mean chosen λ for L-N-M.
    pub tuning: f64,
}

/// Runs one method on one sample as the sweep does.
pub fn run_method(
    cfg: &ExperimentConfig,
    method: Method,
    data: &SampleMatrix,
    seed: u64,
) -> Result<MethodOutput> {
    match method {
        Method::MobiusInversion => {
            let fit = fit_mobius(
                data,
                &MobiusOptions {
                    rule: ThresholdRule::none(),
                    alpha: cfg.alpha,
                    max_order: cfg.max_order,
                },
            )?;
            if cfg.quantiles.is_empty() {
                return Ok(MethodOutput {
                    theta: fit.theta,
                    graph: fit.graph,
                    tuning: 0.0,
                });
            }
            let scope = cfg.threshold_scope.into();
            let sel = select_quantile(&fit.theta, &cfg.quantiles, scope, cfg.nonzero_pairs)?;
            let theta = apply_threshold(&fit.theta, &ThresholdRule::quantile(sel.quantile, scope))?;
            Ok(MethodOutput {
                graph: pairwise_graph(&theta, 0.0),
                theta,
                tuning: sel.quantile,
            })
        }
        Method::LogisticNeighborhood => {
            let fit = fit_lnm(data, &cfg.lnm_options(), seed)?;
            let finite: Vec<f64> = fit.lambdas.iter().copied().filter(|l| l.is_finite()).collect();
            let tuning = if finite.is_empty() {
                0.0
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            };
            Ok(MethodOutput {
                theta: fit.theta()?,
                graph: fit.graph,
                tuning,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord {
    pub method: Method,
    pub n: usize,
    pub replicate: usize,
    pub confusion: Option<ConfusionCounts>,
    /// One entry per configured scope, in config order.
    pub errors: Vec<f64>,
    pub tuning: Option<f64>,
    pub runtime_secs: f64,
    pub failure: Option<String>,
}

impl ReplicateRecord {
    pub fn accuracy(&self) -> Option<f64> {
        self.confusion.map(|c| c.accuracy())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Option<MeanSd> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(MeanSd { mean, sd })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub n: usize,
    pub completed: usize,
    pub failed: usize,
    pub accuracy: Option<MeanSd>,
    pub errors: Vec<Option<MeanSd>>,
    pub runtime: Option<MeanSd>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub err_scopes: Vec<ErrScope>,
    pub summary: Vec<SummaryRow>,
    pub records: Vec<ReplicateRecord>,
}

fn replicate_seed(master: u64, replicate: usize) -> u64 {
    child_seed(master, replicate as u64)
}

/// The model drawn for a replicate; the same model is used at every
/// sample size.
pub fn replicate_model(cfg: &ExperimentConfig, replicate: usize) -> Result<ThetaVector> {
    let seed = child_seed(replicate_seed(cfg.master_seed, replicate), 0);
    random_pairwise_model(&cfg.model_spec(seed))
}

pub fn replicate_sample(
    cfg: &ExperimentConfig,
    model: &ThetaVector,
    replicate: usize,
    n: usize,
) -> Result<SampleMatrix> {
    let seed = child_seed(replicate_seed(cfg.master_seed, replicate), 1 + n as u64);
    sample(model, n, seed)
}

fn evaluate(
    cfg: &ExperimentConfig,
    truth: &ThetaVector,
    true_graph: &GraphEstimate,
    out: &MethodOutput,
) -> Result<(ConfusionCounts, Vec<f64>)> {
    let c = confusion(true_graph, &out.graph)?;
    let errors = cfg
        .err_scopes
        .iter()
        .map(|&s| relative_error(truth, &out.theta, s))
        .collect::<Result<Vec<_>>>()?;
    Ok((c, errors))
}

/// Every (sample size, replicate, method) cell. Methods within a replicate
/// share the model and the sample. Failures are recorded, not raised.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut records = Vec::new();
    for r in 0..cfg.replicates {
        let truth = replicate_model(cfg, r)?;
        let true_graph = pairwise_graph(&truth, 0.0);
        for &n in &cfg.sample_sizes {
            let data = replicate_sample(cfg, &truth, r, n)?;
            let fit_seed = child_seed(replicate_seed(cfg.master_seed, r), u64::MAX - n as u64);
            for &method in &cfg.methods {
                let start = Instant::now();
                let fitted = run_method(cfg, method, &data, fit_seed);
                let runtime_secs = start.elapsed().as_secs_f64();
                let outcome = fitted.and_then(|out| {
                    evaluate(cfg, &truth, &true_graph, &out).map(|(c, e)| (c, e, out.tuning))
                });
                let record = match outcome {
                    Ok((c, errors, tuning)) => ReplicateRecord {
                        method,
                        n,
                        replicate: r,
                        confusion: Some(c),
                        errors,
                        tuning: Some(tuning),
                        runtime_secs,
                        failure: None,
                    },
                    Err(e) => {
                        log::warn!("{method} n={n} replicate {r}: {e}");
                        ReplicateRecord {
                            method,
                            n,
                            replicate: r,
                            confusion: None,
                            errors: Vec::new(),
                            tuning: None,
                            runtime_secs,
                            failure: Some(e.to_string()),
                        }
                    }
                };
                records.push(record);
            }
        }
    }
    records.sort_by_key(|rec| (rec.method, rec.n, rec.replicate));
    Ok(ExperimentReport {
        err_scopes: cfg.err_scopes.clone(),
        summary: summarize(&records, cfg.err_scopes.len()),
        records,
    })
}

fn summarize(records: &[ReplicateRecord], scopes: usize) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for chunk in records.chunk_by(|a, b| (a.method, a.n) == (b.method, b.n)) {
        let ok: Vec<&ReplicateRecord> = chunk.iter().filter(|r| r.failure.is_none()).collect();
        let acc: Vec<f64> = ok.iter().filter_map(|r| r.accuracy()).collect();
        let errors = (0..scopes)
            .map(|k| MeanSd::of(&ok.iter().map(|r| r.errors[k]).collect::<Vec<_>>()))
            .collect();
        let runtimes: Vec<f64> = ok.iter().map(|r| r.runtime_secs).collect();
        rows.push(SummaryRow {
            method: chunk[0].method,
            n: chunk[0].n,
            completed: ok.len(),
            failed: chunk.len() - ok.len(),
            accuracy: MeanSd::of(&acc),
            errors,
            runtime: MeanSd::of(&runtimes),
        });
    }
    rows
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl ExperimentReport {
    pub fn summary_row(&self, method: Method, n: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method && r.n == n)
    }

    /// Mean and sd of the relative error under `scope` for one cell.
    pub fn err(&self, method: Method, n: usize, scope: ErrScope) -> Option<MeanSd> {
        let k = self.err_scopes.iter().position(|&s| s == scope)?;
        self.summary_row(method, n)?.errors[k]
    }

    /// One row per (method, n) with mean and sd columns; runtime columns
    /// come last.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["method", "n", "completed", "failed", "accuracy_mean", "accuracy_sd"]
            .map(String::from)
            .to_vec();
        for s in &self.err_scopes {
            header.push(format!("err_{s}_mean"));
            header.push(format!("err_{s}_sd"));
        }
        header.push("runtime_mean".into());
        header.push("runtime_sd".into());
        w.write_record(&header)?;
        for row in &self.summary {
            let mut rec = vec![
                row.method.to_string(),
                row.n.to_string(),
                row.completed.to_string(),
                row.failed.to_string(),
                opt(row.accuracy.map(|m| m.mean)),
                opt(row.accuracy.map(|m| m.sd)),
            ];
            for e in &row.errors {
                rec.push(opt(e.map(|m| m.mean)));
                rec.push(opt(e.map(|m| m.sd)));
            }
            rec.push(opt(row.runtime.map(|m| m.mean)));
            rec.push(opt(row.runtime.map(|m| m.sd)));
            w.write_record(&rec)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
    }

    /// One row per replicate and method, sorted by method, n, replicate.
    pub fn raw_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = [
            "method", "n", "replicate", "tp", "tn", "fn", "fp", "accuracy",
        ]
        .map(String::from)
        .to_vec();
        header.extend(self.err_scopes.iter().map(|s| format!("err_{s}")));
        header.extend(["tuning", "failure", "runtime"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            let c = r.confusion;
            let mut rec = vec![
                r.method.to_string(),
                r.n.to_string(),
                r.replicate.to_string(),
                c.map_or_else(String::new, |c| c.tp.to_string()),
                c.map_or_else(String::new, |c| c.tn.to_string()),
                c.map_or_else(String::new, |c| c.fn_.to_string()),
                c.map_or_else(String::new, |c| c.fp.to_string()),
                opt(r.accuracy()),
            ];
            if r.errors.is_empty() {
                rec.extend(self.err_scopes.iter().map(|_| String::new()));
            } else {
                rec.extend(r.errors.iter().map(|e| e.to_string()));
            }
            rec.push(opt(r.tuning));
            rec.push(r.failure.clone().unwrap_or_default());
            rec.push(r.runtime_secs.to_string());
            w.write_record(&rec)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
    }
}
