//! Per-node ℓ1-penalized logistic regression for the pairwise model, with
//! symmetrization of the two directional estimates of every `θ_{ij}`.
//!
//! Node `j` is regressed on the other coordinates:
//! `P(X_j = 1 | x) = σ(θ_j + Σ_{i≠j} θ_{ij} x_i)`, minimizing the mean
//! negative conditional log-likelihood plus `λ Σ |θ_{ij}|`. The intercept
//! is not penalized.
//!
//! Because every covariate is binary, rows are grouped by covariate pattern
//! and the loss is evaluated once per distinct pattern.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::GraphEstimate;
use crate::lattice::{LatticeVector, SubsetIndex};
use crate::model::{sigmoid, ThetaVector};
use crate::sampler::{child_seed, SampleMatrix};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct PatternGroup {
    /// covariate values, one per entry of `covariates`
    x: Vec<f64>,
    total: f64,
    ones: f64,
}

/// The logistic regression of node `node` on all other nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRegressionProblem {
    node: usize,
    covariates: Vec<usize>,
    groups: Vec<PatternGroup>,
    n: f64,
    ones: f64,
    lambda: f64,
}

impl NodeRegressionProblem {
    pub fn new(data: &SampleMatrix, node: usize, lambda: f64) -> Result<Self> {
        let rows: Vec<usize> = (0..data.n()).collect();
        Self::from_rows(data, node, &rows, lambda)
    }

    /// Problem restricted to the listed rows.
    pub fn from_rows(data: &SampleMatrix, node: usize, rows: &[usize], lambda: f64) -> Result<Self> {
        if node >= data.p() {
            return Err(Error::invalid(format!("node {} out of range", node + 1)));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!("penalty {lambda} must be ≥ 0")));
        }
        if rows.is_empty() {
            return Err(Error::invalid("regression needs at least one row"));
        }
        let covariates: Vec<usize> = (0..data.p()).filter(|&k| k != node).collect();
        let mut index: HashMap<SubsetIndex, usize> = HashMap::new();
        let mut groups: Vec<PatternGroup> = Vec::new();
        let mut ones = 0.0;
        for &r in rows {
            if r >= data.n() {
                return Err(Error::invalid(format!("row {r} out of range")));
            }
            let pattern = data.outcome(r).without(node);
            let y = data.get(r, node) as f64;
            let g = *index.entry(pattern).or_insert_with(|| {
                groups.push(PatternGroup {
                    x: covariates.iter().map(|&k| pattern.contains(k) as u8 as f64).collect(),
                    total: 0.0,
                    ones: 0.0,
                });
                groups.len() - 1
            });
            groups[g].total += 1.0;
            groups[g].ones += y;
            ones += y;
        }
        Ok(NodeRegressionProblem {
            node,
            covariates,
            groups,
            n: rows.len() as f64,
            ones,
            lambda,
        })
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        NodeRegressionProblem {
            lambda,
            ..self.clone()
        }
    }

    /// Nodes whose coefficients make up `coefficients`, in order.
    pub fn covariates(&self) -> &[usize] {
        &self.covariates
    }

    pub fn response_mean(&self) -> f64 {
        self.ones / self.n
    }

    fn is_degenerate(&self) -> bool {
        self.ones == 0.0 || self.ones == self.n
    }

    fn eta(&self, g: &PatternGroup, intercept: f64, beta: &[f64]) -> f64 {
        intercept + g.x.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>()
    }

    /// Mean negative conditional log-likelihood.
    pub fn loss(&self, intercept: f64, beta: &[f64]) -> f64 {
        self.groups
            .iter()
            .map(|g| {
                let eta = self.eta(g, intercept, beta);
                g.total * softplus(eta) - g.ones * eta
            })
            .sum::<f64>()
            / self.n
    }

    /// Loss plus `λ‖β‖₁`.
    pub fn objective(&self, intercept: f64, beta: &[f64]) -> f64 {
        self.loss(intercept, beta) + self.lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Gradient of [`loss`](Self::loss): `(∂/∂intercept, ∂/∂β)`.
    pub fn gradient(&self, intercept: f64, beta: &[f64]) -> (f64, Vec<f64>) {
        let mut g0 = 0.0;
        let mut gb = vec![0.0; beta.len()];
        for g in &self.groups {
            let r = g.total * sigmoid(self.eta(g, intercept, beta)) - g.ones;
            g0 += r;
            for (acc, x) in gb.iter_mut().zip(&g.x) {
                *acc += r * x;
            }
        }
        gb.iter_mut().for_each(|v| *v /= self.n);
        (g0 / self.n, gb)
    }

    /// Largest violation of the subgradient optimality conditions.
    pub fn kkt_residual(&self, intercept: f64, beta: &[f64]) -> f64 {
        let (g0, gb) = self.gradient(intercept, beta);
        gb.iter()
            .zip(beta)
            .map(|(&g, &b)| {
                if b == 0.0 {
                    (g.abs() - self.lambda).max(0.0)
                } else {
                    (g + self.lambda * b.signum()).abs()
                }
            })
            .fold(g0.abs(), f64::max)
    }

    /// Smallest penalty at which all coefficients vanish.
    pub fn lambda_max(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateResponse { node: self.node });
        }
        let b0 = (self.ones / (self.n - self.ones)).ln();
        let (_, gb) = self.gradient(b0, &vec![0.0; self.covariates.len()]);
        Ok(gb.iter().fold(0.0, |m, g| m.max(g.abs())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative objective decrease below which iteration may stop.
    pub tolerance: f64,
    /// Required bound on the subgradient optimality residual at exit.
    pub kkt_tolerance: f64,
    /// Initial Lipschitz estimate for the smooth part.
    pub initial_lipschitz: f64,
    /// Factor applied to the Lipschitz estimate on each backtracking step.
    pub backtrack: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 100_000,
            tolerance: 1e-12,
            kkt_tolerance: 1e-8,
            initial_lipschitz: 0.05,
            backtrack: 2.0,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.tolerance > 0.0) || !(self.kkt_tolerance > 0.0) {
            return Err(Error::invalid(
                "solver needs max_iterations ≥ 1 and positive tolerances",
            ));
        }
        if !(self.initial_lipschitz > 0.0) || !(self.backtrack > 1.0) {
            return Err(Error::invalid("solver step parameters out of range"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSolution {
    pub node: usize,
    pub intercept: f64,
    /// Length `p`; entry `i` is `θ_{ij}` for `j = node`, with a zero at `node`.
    pub coefficients: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Objective value after every accepted iteration, starting with the
    /// initial point.
    pub trace: Vec<f64>,
}

impl NodeSolution {
    fn beta(&self, problem: &NodeRegressionProblem) -> Vec<f64> {
        problem.covariates.iter().map(|&k| self.coefficients[k]).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c != 0.0).count()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Solves one node problem from the intercept-only start.
pub fn solve_node(problem: &NodeRegressionProblem, cfg: &SolverConfig) -> Result<NodeSolution> {
    solve_node_from(problem, cfg, None)
}

/// Monotone accelerated proximal gradient with backtracking, optionally
/// warm-started.
pub fn solve_node_from(
    problem: &NodeRegressionProblem,
    cfg: &SolverConfig,
    start: Option<&NodeSolution>,
) -> Result<NodeSolution> {
    cfg.validate()?;
    if problem.is_degenerate() {
        return Err(Error::DegenerateResponse { node: problem.node });
    }
    let k = problem.covariates.len();
    let lambda = problem.lambda;
    // x = (intercept, β...)
    let mut x: Vec<f64> = match start {
        Some(s) if s.node == problem.node => {
            let mut v = vec![s.intercept];
            v.extend(s.beta(problem));
            v
        }
        _ => {
            let mut v = vec![(problem.ones / (problem.n - problem.ones)).ln()];
            v.extend(std::iter::repeat_n(0.0, k));
            v
        }
    };
    let objective = |v: &[f64]| problem.objective(v[0], &v[1..]);
    let smooth = |v: &[f64]| problem.loss(v[0], &v[1..]);

    let mut fx = objective(&x);
    let mut trace = vec![fx];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut lip = cfg.initial_lipschitz;
    let mut last_decrease = f64::INFINITY;

    for iter in 1..=cfg.max_iterations {
        // let the step grow again; a stale large estimate stalls progress
        lip = (lip / cfg.backtrack.sqrt()).max(f64::MIN_POSITIVE);
        let fy = smooth(&y);
        let (g0, gb) = problem.gradient(y[0], &y[1..]);
        let grad: Vec<f64> = std::iter::once(g0).chain(gb).collect();
        let z = loop {
            let step = 1.0 / lip;
            let z: Vec<f64> = y
                .iter()
                .zip(&grad)
                .enumerate()
                .map(|(c, (&yc, &gc))| {
                    let v = yc - step * gc;
                    if c == 0 {
                        v
                    } else {
                        soft_threshold(v, lambda * step)
                    }
                })
                .collect();
            let diff: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let sq: f64 = diff.iter().map(|d| d * d).sum();
            let model = fy + diff.iter().zip(&grad).map(|(d, g)| d * g).sum::<f64>() + 0.5 * lip * sq;
            // the value test loses resolution for tiny steps, so the local
            // curvature along the step must also be covered by `lip`
            let (h0, hb) = problem.gradient(z[0], &z[1..]);
            let curvature: f64 = std::iter::once(h0)
                .chain(hb)
                .zip(&grad)
                .zip(&diff)
                .map(|((a, b), d)| (a - b) * d)
                .sum();
            if smooth(&z) <= model + 1e-15 * fy.abs().max(1.0) && curvature <= lip * sq {
                break z;
            }
            lip *= cfg.backtrack;
            if !lip.is_finite() {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    objective: fx,
                    gap: last_decrease,
                    last_iterate: x,
                });
            }
        };

        let fz = objective(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let prev = x.clone();
        // near the optimum the objective change can drop below rounding;
        // then progress is judged by the optimality residual instead
        let accepted = fz <= fx
            || (fz - fx <= 8.0 * f64::EPSILON * fx.abs()
                && problem.kkt_residual(z[0], &z[1..]) < problem.kkt_residual(x[0], &x[1..]));
        if accepted {
            x = z.clone();
        }
        y = x
            .iter()
            .zip(&z)
            .zip(&prev)
            .map(|((&xc, &zc), &pc)| xc + (t / t_next) * (zc - xc) + ((t - 1.0) / t_next) * (xc - pc))
            .collect();
        t = if accepted { t_next } else { 1.0 };

        let f_new = objective(&x);
        last_decrease = fx - f_new;
        fx = f_new;
        trace.push(fx);

        if last_decrease <= cfg.tolerance * fx.abs().max(1.0)
            && problem.kkt_residual(x[0], &x[1..]) <= cfg.kkt_tolerance
        {
            // rounding can leave a coefficient a hair past the threshold
            let mut cleaned = x.clone();
            for b in &mut cleaned[1..] {
                if b.abs() <= cfg.kkt_tolerance {
                    *b = 0.0;
                }
            }
            if cleaned != x && problem.kkt_residual(cleaned[0], &cleaned[1..]) <= cfg.kkt_tolerance {
                x = cleaned;
                fx = objective(&x);
            }
            let mut coefficients = vec![0.0; problem.covariates.len() + 1];
            for (&node, &b) in problem.covariates.iter().zip(&x[1..]) {
                coefficients[node] = b;
            }
            return Ok(NodeSolution {
                node: problem.node,
                intercept: x[0],
                coefficients,
                objective: fx,
                iterations: iter,
                trace,
            });
        }
        if !accepted {
            // restart the momentum from the current point
            y = x.clone();
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        objective: fx,
        gap: last_decrease,
        last_iterate: x,
    })
}

/// `p × p` directional coefficients: entry `(i, j)` is the coefficient of
/// `x_i` in the regression of node `j`. The diagonal is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    p: usize,
    data: Vec<f64>,
}

impl CoefficientMatrix {
    pub fn zeros(p: usize) -> Self {
        CoefficientMatrix {
            p,
            data: vec![0.0; p * p],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("coefficient matrix must be square"));
        }
        let m = CoefficientMatrix {
            p,
            data: rows.into_iter().flatten().collect(),
        };
        if (0..p).any(|k| m.get(k, k) != 0.0) {
            return Err(Error::invalid("coefficient matrix diagonal must be zero"));
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(m)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.p + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SymmetrizationRule {
    /// The directional estimate with the larger magnitude wins.
    MaxMagnitude,
    /// The directional estimate with the smaller magnitude wins, so a zero
    /// on either side removes the edge.
    #[default]
    MinMagnitude,
}

/// Shared value for each pair from the two directional estimates.
pub fn symmetrize(raw: &CoefficientMatrix, rule: SymmetrizationRule) -> GraphEstimate {
    let p = raw.p();
    let mut g = GraphEstimate::new(p);
    for i in 0..p {
        for j in i + 1..p {
            let (a, b) = (raw.get(i, j), raw.get(j, i));
            let w = match rule {
                SymmetrizationRule::MaxMagnitude => {
                    if a.abs() > b.abs() {
                        a
                    } else {
                        b
                    }
                }
                SymmetrizationRule::MinMagnitude => {
                    if a.abs() < b.abs() {
                        a
                    } else {
                        b
                    }
                }
            };
            g.set_weight(i, j, w).expect("finite coefficients, valid pair");
        }
    }
    g
}

/// `count` log-spaced penalties from `hi` down to `lo`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (hi.ln(), lo.ln());
            (0..count)
                .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    /// `count` log-spaced values from `λ_max` of each node down to `min`.
    Auto { count: usize, min: f64 },
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            count: 20,
            min: 1e-3,
        }
    }
}

impl GridSpec {
    /// Penalties for `node`, largest first.
    pub fn resolve(&self, data: &SampleMatrix, node: usize) -> Result<Vec<f64>> {
        let mut grid = match self {
            GridSpec::Explicit(v) => {
                if v.is_empty() || v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return Err(Error::invalid("penalty grid must be non-empty and ≥ 0"));
                }
                v.clone()
            }
            GridSpec::Auto { count, min } => {
                let hi = NodeRegressionProblem::new(data, node, 0.0)?.lambda_max()?;
                if *count == 0 || !(*min > 0.0) {
                    return Err(Error::invalid("automatic grid needs count ≥ 1 and min > 0"));
                }
                if hi <= *min {
                    vec![*min]
                } else {
                    log_grid(*min, hi, *count)
                }
            }
        };
        grid.sort_by(|a, b| b.total_cmp(a));
        grid.dedup();
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvSelection {
    pub lambda: f64,
    /// Penalties tried, largest first.
    pub grid: Vec<f64>,
    /// Mean held-out negative log-likelihood per grid value; infinite where
    /// no fold produced a fit.
    pub mean_loss: Vec<f64>,
}

/// Stratified fold labels: rows of each response class are shuffled and
/// dealt round-robin.
fn fold_labels(data: &SampleMatrix, node: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![0; data.n()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..data.n()).filter(|&r| data.get(r, node) == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            labels[r] = next % folds;
            next += 1;
        }
    }
    labels
}

/// K-fold selection of the penalty for one node by held-out negative
/// log-likelihood. Ties go to the larger penalty. A constant response
/// yields the largest penalty.
pub fn cross_validate_lambda(
    data: &SampleMatrix,
    node: usize,
    grid: &[f64],
    folds: usize,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<CvSelection> {
    let mut grid = grid.to_vec();
    if grid.is_empty() || grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::invalid("penalty grid must be non-empty and ≥ 0"));
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    if folds < 2 || data.n() < folds {
        return Err(Error::invalid(format!(
            "{folds}-fold cross-validation on {} rows",
            data.n()
        )));
    }
    if node >= data.p() {
        return Err(Error::invalid(format!("node {} out of range", node + 1)));
    }
    let full = NodeRegressionProblem::new(data, node, 0.0)?;
    if full.is_degenerate() || grid.len() == 1 {
        if full.is_degenerate() {
            log::warn!("node {} has a constant response; using the largest penalty", node + 1);
        }
        return Ok(CvSelection {
            lambda: grid[0],
            mean_loss: vec![f64::NAN; grid.len()],
            grid,
        });
    }

    let labels = fold_labels(data, node, folds, seed);
    let mut sums = vec![0.0; grid.len()];
    let mut used = vec![0usize; grid.len()];
    for f in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..data.n()).partition(|&r| labels[r] == f);
        let train_problem = NodeRegressionProblem::from_rows(data, node, &train, grid[0])?;
        if train_problem.is_degenerate() || test.is_empty() {
            continue;
        }
        let test_problem = NodeRegressionProblem::from_rows(data, node, &test, 0.0)?;
        let mut warm: Option<NodeSolution> = None;
        for (k, &lambda) in grid.iter().enumerate() {
            match solve_node_from(&train_problem.with_lambda(lambda), cfg, warm.as_ref()) {
                Ok(sol) => {
                    let beta = sol.beta(&test_problem);
                    sums[k] += test_problem.loss(sol.intercept, &beta);
                    used[k] += 1;
                    warm = Some(sol);
                }
                Err(e) if e.is_numerical() => {
                    log::debug!("node {} fold {f} lambda {lambda}: {e}", node + 1);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let mean_loss: Vec<f64> = sums
        .iter()
        .zip(&used)
        .map(|(&s, &u)| if u == 0 { f64::INFINITY } else { s / u as f64 })
        .collect();
    let mut best = 0;
    for k in 1..grid.len() {
        if mean_loss[k] < mean_loss[best] {
            best = k;
        }
    }
    Ok(CvSelection {
        lambda: grid[best],
        grid,
        mean_loss,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LnmOptions {
    pub grid: GridSpec,
    pub folds: usize,
    pub rule: SymmetrizationRule,
    pub solver: SolverConfig,
}

impl Default for LnmOptions {
    fn default() -> Self {
        LnmOptions {
            grid: GridSpec::default(),
            folds: 10,
            rule: SymmetrizationRule::MinMagnitude,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LnmFit {
    pub graph: GraphEstimate,
    pub raw: CoefficientMatrix,
    pub intercepts: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl LnmFit {
    /// Pairwise model with the intercepts as singleton terms and the
    /// symmetrized weights as interactions, normalized through `θ_∅`.
    pub fn theta(&self) -> Result<ThetaVector> {
        let p = self.graph.p();
        let mut lv = LatticeVector::zeros(p)?;
        for (k, &b) in self.intercepts.iter().enumerate() {
            lv.set(SubsetIndex::singleton(k), b);
        }
        for ((i, j), w) in self.graph.edges() {
            lv.set(SubsetIndex::pair(i, j), w);
        }
        Ok(ThetaVector::normalize(lv)?.0)
    }
}

/// Cross-validated ℓ1-logistic fit of every node, then symmetrization.
/// Node `j` uses fold seed `child_seed(seed, j)`.
pub fn fit_lnm(data: &SampleMatrix, opts: &LnmOptions, seed: u64) -> Result<LnmFit> {
    let p = data.p();
    if p < 2 {
        return Err(Error::invalid("need at least two nodes"));
    }
    let mut raw = CoefficientMatrix::zeros(p);
    let mut intercepts = vec![0.0; p];
    let mut lambdas = vec![f64::NAN; p];
    for j in 0..p {
        let problem = NodeRegressionProblem::new(data, j, 0.0)?;
        if problem.is_degenerate() {
            log::warn!("node {} has a constant response; leaving it unconnected", j + 1);
            let ones = problem.ones;
            intercepts[j] = ((ones + 0.5) / (problem.n - ones + 0.5)).ln();
            continue;
        }
        let grid = opts.grid.resolve(data, j)?;
        let cv = cross_validate_lambda(data, j, &grid, opts.folds, &opts.solver, child_seed(seed, j as u64))?;
        let sol = solve_node(&problem.with_lambda(cv.lambda), &opts.solver)?;
        for i in 0..p {
            raw.set(i, j, sol.coefficients[i]);
        }
        intercepts[j] = sol.intercept;
        lambdas[j] = cv.lambda;
    }
    Ok(LnmFit {
        graph: symmetrize(&raw, opts.rule),
        raw,
        intercepts,
        lambdas,
    })
}
