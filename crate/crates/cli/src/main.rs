use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mbv_graph::estimator::{fit_mobius, MobiusOptions, ThresholdRule, ThresholdScope, DEFAULT_SMOOTHING};
use mbv_graph::experiment::{run_experiment, ExperimentConfig};
use mbv_graph::io::{self, GraphFormat};
use mbv_graph::logistic::{fit_lnm, GridSpec, LnmOptions, SymmetrizationRule};
use mbv_graph::metrics::{confusion, relative_error, ErrScope};
use mbv_graph::model::pairwise_graph;
use mbv_graph::sampler::{random_pairwise_model, sample, CouplingCoding, ModelPattern, ModelSpec};
use mbv_graph::{Error, GraphEstimate};

/// Graph structure learning for multivariate Bernoulli data.
#[derive(Parser)]
#[command(name = "mbvg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw i.i.d. rows from a model file.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a random sparse pairwise model.
    GenModel {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        coupling: f64,
        #[arg(long, value_enum, default_value_t = Coding::Binary)]
        coding: Coding,
        #[arg(long, value_enum, default_value_t = Pattern::Pairwise)]
        pattern: Pattern,
        #[arg(long, default_value_t = 0.0)]
        singleton_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Möbius-inversion estimate from a sample file.
    FitMobius {
        #[arg(long)]
        data: PathBuf,
        /// Zero scoped entries at or below this quantile of |θ̂|.
        #[arg(long)]
        quantile: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
        alpha: f64,
        /// Zero every interaction above this order before thresholding.
        #[arg(long)]
        max_order: Option<usize>,
        #[arg(long, value_enum, default_value_t = Scope::Pairwise)]
        scope: Scope,
        #[arg(long)]
        out_model: Option<PathBuf>,
        /// Format follows the extension: .dot, .csv or .json.
        #[arg(long)]
        out_graph: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
    /// ℓ1-logistic neighborhood estimate with cross-validated penalties.
    FitLnm {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// `auto`, a comma-separated list, or a file of penalties.
        #[arg(long, default_value = "auto")]
        grid: String,
        #[arg(long, value_enum, default_value_t = Rule::Min)]
        rule: Rule,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_graph: Option<PathBuf>,
        /// Directional coefficient matrix, column j from node j's regression.
        #[arg(long)]
        out_raw: Option<PathBuf>,
        #[arg(long)]
        out_model: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
    /// Compare an estimated model against the true one.
    Metrics {
        #[arg(long = "true")]
        truth: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long, default_value = "all")]
        scope: String,
    },
    /// Run a simulation sweep from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Convert a graph JSON file.
    Export {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "dot")]
        format: String,
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
        /// Standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Coding {
    Binary,
    Spin,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    Pairwise,
    General,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Pairwise,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Min,
    Max,
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| with_path(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| with_path(path, e))
}

fn write_graph(path: &Path, g: &GraphEstimate, labels: Option<&[String]>) -> Result<(), Error> {
    let format = GraphFormat::from_path(path).unwrap_or(GraphFormat::Dot);
    write(path, &io::export_graph(g, format, labels)?)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sample { model, n, seed, out } => {
            let pi = io::parse_model(&read(&model)?)?.probabilities()?;
            let data = sample(&pi, n, seed)?;
            write(&out, &io::write_samples(&data)?)
        }
        Command::GenModel {
            p,
            edges,
            coupling,
            coding,
            pattern,
            singleton_scale,
            seed,
            out,
        } => {
            let spec = ModelSpec {
                p,
                pattern: match pattern {
                    Pattern::Pairwise => ModelPattern::Pairwise,
                    Pattern::General => ModelPattern::General,
                },
                coding: match coding {
                    Coding::Binary => CouplingCoding::Binary,
                    Coding::Spin => CouplingCoding::Spin,
                },
                nonzero_pairs: edges,
                coupling,
                singleton_scale,
                seed,
            };
            write(&out, &io::write_theta_model(&random_pairwise_model(&spec)?)?)
        }
        Command::FitMobius {
            data,
            quantile,
            alpha,
            max_order,
            scope,
            out_model,
            out_graph,
            labels,
        } => {
            let data = io::parse_samples(&read(&data)?)?;
            let scope = match scope {
                Scope::Pairwise => ThresholdScope::Pairwise,
                Scope::All => ThresholdScope::AllNonEmpty,
            };
            let rule = quantile.map_or_else(ThresholdRule::none, |q| ThresholdRule::quantile(q, scope));
            let fit = fit_mobius(
                &data,
                &MobiusOptions {
                    rule,
                    alpha,
                    max_order,
                },
            )?;
            if let Some(path) = out_model {
                write(&path, &io::write_theta_model(&fit.theta)?)?;
            }
            if let Some(path) = out_graph {
                write_graph(&path, &fit.graph, labels.as_deref())?;
            }
            for ((i, j), w) in fit.graph.edges() {
                println!("{},{},{w}", i + 1, j + 1);
            }
            Ok(())
        }
        Command::FitLnm {
            data,
            folds,
            grid,
            rule,
            seed,
            out_graph,
            out_raw,
            out_model,
            labels,
        } => {
            let data = io::parse_samples(&read(&data)?)?;
            let grid = if grid == "auto" {
                GridSpec::default()
            } else if Path::new(&grid).is_file() {
                GridSpec::Explicit(io::parse_grid(&read(Path::new(&grid))?)?)
            } else {
                GridSpec::Explicit(io::parse_grid(&grid)?)
            };
            let opts = LnmOptions {
                grid,
                folds,
                rule: match rule {
                    Rule::Min => SymmetrizationRule::MinMagnitude,
                    Rule::Max => SymmetrizationRule::MaxMagnitude,
                },
                ..LnmOptions::default()
            };
            let fit = fit_lnm(&data, &opts, seed)?;
            if let Some(path) = out_graph {
                write_graph(&path, &fit.graph, labels.as_deref())?;
            }
            if let Some(path) = out_raw {
                write(&path, &io::write_coefficient_matrix(&fit.raw)?)?;
            }
            if let Some(path) = out_model {
                write(&path, &io::write_theta_model(&fit.theta()?)?)?;
            }
            for ((i, j), w) in fit.graph.edges() {
                println!("{},{},{w}", i + 1, j + 1);
            }
            Ok(())
        }
        Command::Metrics { truth, est, scope } => {
            let scope: ErrScope = scope.parse()?;
            let truth = io::parse_model(&read(&truth)?)?.theta()?;
            let est = io::parse_model(&read(&est)?)?.theta()?;
            let c = confusion(&pairwise_graph(&truth, 0.0), &pairwise_graph(&est, 0.0))?;
            println!("tp,tn,fn,fp,accuracy,err_{scope}");
            println!(
                "{},{},{},{},{},{}",
                c.tp,
                c.tn,
                c.fn_,
                c.fp,
                c.accuracy(),
                relative_error(&truth, &est, scope)?
            );
            Ok(())
        }
        Command::Bench { config, out, raw } => {
            let cfg = ExperimentConfig::from_json(&read(&config)?)?;
            let report = run_experiment(&cfg)?;
            write(&out, &report.summary_csv()?)?;
            if let Some(path) = raw {
                write(&path, &report.raw_csv()?)?;
            }
            let failed: usize = report.summary.iter().map(|r| r.failed).sum();
            if failed > 0 {
                log::warn!("{failed} replicate fits failed; see the failed column");
            }
            Ok(())
        }
        Command::Export {
            graph,
            format,
            labels,
            out,
        } => {
            let format: GraphFormat = format.parse()?;
            let g = io::parse_graph_json(&read(&graph)?)?;
            let text = io::export_graph(&g, format, labels.as_deref())?;
            match out {
                Some(path) => write(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() {
                1
            } else if e.is_numerical() {
                3
            } else {
                2
            })
        }
    }
}
