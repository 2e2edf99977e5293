//! Text formats. Nodes are numbered from 1 in every file.
//!
//! Model JSON, either parametrization:
//!
//! ```json
//! {"p": 3, "theta": [{"set": [1], "value": -0.2}, {"set": [1, 2], "value": 0.5}]}
//! {"p": 1, "probabilities": [{"set": [], "value": 0.4}, {"set": [1], "value": 0.6}]}
//! ```
//!
//! θ entries that are left out are zero; when `θ_∅` is left out it is
//! computed from the others. A probability file lists every outcome.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphEstimate;
use crate::lattice::{check_dimension, LatticeVector, SubsetIndex};
use crate::logistic::CoefficientMatrix;
use crate::model::{probs_from_theta, theta_from_probs, ProbabilityVector, ThetaVector};
use crate::sampler::SampleMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    set: Vec<usize>,
    value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaFile {
    p: usize,
    theta: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbabilityFile {
    p: usize,
    probabilities: Vec<Term>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyModelFile {
    Theta(ThetaFile),
    Probabilities(ProbabilityFile),
}

/// A model read from disk in whichever parametrization it was written.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelFile {
    Theta(ThetaVector),
    Probabilities(ProbabilityVector),
}

impl ModelFile {
    pub fn p(&self) -> usize {
        match self {
            ModelFile::Theta(t) => t.p(),
            ModelFile::Probabilities(pi) => pi.p(),
        }
    }

    pub fn theta(&self) -> Result<ThetaVector> {
        match self {
            ModelFile::Theta(t) => Ok(t.clone()),
            ModelFile::Probabilities(pi) => theta_from_probs(pi),
        }
    }

    pub fn probabilities(&self) -> Result<ProbabilityVector> {
        match self {
            ModelFile::Theta(t) => probs_from_theta(t),
            ModelFile::Probabilities(pi) => Ok(pi.clone()),
        }
    }
}

fn subset_from_nodes(p: usize, set: &[usize]) -> Result<SubsetIndex> {
    let mut mask = 0u32;
    let mut prev = 0;
    for &node in set {
        if node == 0 || node > p {
            return Err(Error::invalid(format!("node {node} outside 1..={p}")));
        }
        if node <= prev {
            return Err(Error::invalid(format!(
                "node set {set:?} must be strictly increasing"
            )));
        }
        prev = node;
        mask |= 1 << (node - 1);
    }
    Ok(SubsetIndex::new(mask))
}

fn nodes_of(d: SubsetIndex) -> Vec<usize> {
    d.nodes().map(|k| k + 1).collect()
}

fn collect_terms(p: usize, terms: &[Term]) -> Result<(LatticeVector, BTreeSet<SubsetIndex>)> {
    check_dimension(p)?;
    let mut lv = LatticeVector::zeros(p)?;
    let mut seen = BTreeSet::new();
    for t in terms {
        let d = subset_from_nodes(p, &t.set)?;
        if !t.value.is_finite() {
            return Err(Error::NonFinite(d));
        }
        if !seen.insert(d) {
            return Err(Error::invalid(format!("subset {d} listed twice")));
        }
        lv.set(d, t.value);
    }
    Ok((lv, seen))
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    match serde_json::from_str::<AnyModelFile>(text)? {
        AnyModelFile::Theta(f) => {
            let (lv, seen) = collect_terms(f.p, &f.theta)?;
            let th = if seen.contains(&SubsetIndex::EMPTY) {
                ThetaVector::new(lv)?
            } else {
                ThetaVector::normalize(lv)?.0
            };
            Ok(ModelFile::Theta(th))
        }
        AnyModelFile::Probabilities(f) => {
            let (lv, seen) = collect_terms(f.p, &f.probabilities)?;
            if seen.len() != lv.len() {
                return Err(Error::invalid(format!(
                    "probability model lists {} of {} outcomes",
                    seen.len(),
                    lv.len()
                )));
            }
            Ok(ModelFile::Probabilities(ProbabilityVector::new(lv)?))
        }
    }
}

/// Writes `θ_∅` and every nonzero term.
pub fn write_theta_model(th: &ThetaVector) -> Result<String> {
    let theta = SubsetIndex::full(th.p())
        .subsets()
        .filter(|&d| d.is_empty() || th.get(d) != 0.0)
        .map(|d| Term {
            set: nodes_of(d),
            value: th.get(d),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&ThetaFile { p: th.p(), theta })?)
}

pub fn write_probability_model(pi: &ProbabilityVector) -> Result<String> {
    let probabilities = SubsetIndex::full(pi.p())
        .subsets()
        .map(|d| Term {
            set: nodes_of(d),
            value: pi.get(d),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&ProbabilityFile {
        p: pi.p(),
        probabilities,
    })?)
}

/// 0/1 sample rows, comma separated, with an optional header line
/// (any first line that is not all 0/1 fields).
pub fn parse_samples(text: &str) -> Result<SampleMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut p = None;
    let mut data = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k + 1, |pos| pos.line() as usize);
        let is_binary = record.iter().all(|f| f == "0" || f == "1");
        if k == 0 && !is_binary {
            continue;
        }
        match p {
            None => p = Some(record.len()),
            Some(width) if width != record.len() => {
                return Err(Error::parse(
                    line,
                    format!("expected {width} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for field in record.iter() {
            data.push(match field {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::parse(line, format!("`{other}` is not 0 or 1"))),
            });
        }
    }
    let p = p.ok_or_else(|| Error::parse(1, "no sample rows"))?;
    SampleMatrix::new(p, data)
}

pub fn write_samples(data: &SampleMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=data.p()).map(|k| format!("x{k}")))?;
    for row in data.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRow {
    i: usize,
    j: usize,
    weight: f64,
}

fn insert_edge(g: &mut GraphEstimate, row: &EdgeRow, line: usize) -> Result<()> {
    if row.i == 0 || row.j == 0 {
        return Err(Error::parse(line, "nodes are numbered from 1"));
    }
    if row.weight == 0.0 {
        return Err(Error::parse(line, "edge weight must be nonzero"));
    }
    if g.has_edge(row.i - 1, row.j - 1) {
        return Err(Error::parse(line, format!("edge ({}, {}) repeated", row.i, row.j)));
    }
    g.set_weight(row.i - 1, row.j - 1, row.weight)
        .map_err(|e| Error::parse(line, e.to_string()))
}

/// `i,j,weight` rows for a graph on `p` nodes.
pub fn parse_edge_csv(text: &str, p: usize) -> Result<GraphEstimate> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["i", "j", "weight"] {
        return Err(Error::parse(1, "header must be `i,j,weight`"));
    }
    let mut g = GraphEstimate::new(p);
    for (k, row) in reader.deserialize::<EdgeRow>().enumerate() {
        insert_edge(&mut g, &row?, k + 2)?;
    }
    Ok(g)
}

pub fn write_edge_csv(g: &GraphEstimate) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(["i", "j", "weight"])?;
    for ((i, j), weight) in g.edges() {
        w.serialize(EdgeRow {
            i: i + 1,
            j: j + 1,
            weight,
        })?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    p: usize,
    edges: Vec<EdgeRow>,
}

pub fn parse_graph_json(text: &str) -> Result<GraphEstimate> {
    let f: GraphFile = serde_json::from_str(text)?;
    check_dimension(f.p)?;
    let mut g = GraphEstimate::new(f.p);
    for (k, row) in f.edges.iter().enumerate() {
        insert_edge(&mut g, row, k + 1)?;
    }
    Ok(g)
}

pub fn write_graph_json(g: &GraphEstimate) -> Result<String> {
    let edges = g
        .edges()
        .map(|((i, j), weight)| EdgeRow {
            i: i + 1,
            j: j + 1,
            weight,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&GraphFile { p: g.p(), edges })?)
}

/// Undirected DOT graph; nodes are named by index unless labels are given.
pub fn write_dot(g: &GraphEstimate, labels: Option<&[String]>) -> Result<String> {
    if let Some(l) = labels {
        if l.len() != g.p() {
            return Err(Error::invalid(format!(
                "{} labels for {} nodes",
                l.len(),
                g.p()
            )));
        }
    }
    let mut out = String::from("graph mbv {\n");
    for k in 0..g.p() {
        let label = labels.map_or_else(|| (k + 1).to_string(), |l| l[k].clone());
        let label = label.replace('\\', "\\\\").replace('"', "\\\"");
        writeln!(out, "  {} [label=\"{}\"];", k + 1, label).unwrap();
    }
    for ((i, j), w) in g.edges() {
        writeln!(out, "  {} -- {} [label=\"{w}\", weight={w}];", i + 1, j + 1).unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    EdgeCsv,
    Json,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(GraphFormat::Dot),
            "edge-csv" => Ok(GraphFormat::EdgeCsv),
            "json" => Ok(GraphFormat::Json),
            other => Err(Error::invalid(format!("unknown graph format `{other}`"))),
        }
    }
}

impl fmt::Display for GraphFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphFormat::Dot => "dot",
            GraphFormat::EdgeCsv => "edge-csv",
            GraphFormat::Json => "json",
        })
    }
}

impl GraphFormat {
    /// Guess from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "dot" | "gv" => Some(GraphFormat::Dot),
            "csv" => Some(GraphFormat::EdgeCsv),
            "json" => Some(GraphFormat::Json),
            _ => None,
        }
    }
}

pub fn export_graph(g: &GraphEstimate, format: GraphFormat, labels: Option<&[String]>) -> Result<String> {
    match format {
        GraphFormat::Dot => write_dot(g, labels),
        GraphFormat::EdgeCsv => write_edge_csv(g),
        GraphFormat::Json => write_graph_json(g),
    }
}

/// `p × p` matrix, one row per line, no header.
pub fn write_coefficient_matrix(m: &CoefficientMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for i in 0..m.p() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii"))
}

pub fn parse_coefficient_matrix(text: &str) -> Result<CoefficientMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(k + 1, format!("`{f}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    CoefficientMatrix::from_rows(rows)
}

/// Penalty values separated by commas, whitespace or newlines.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| Error::invalid(format!("bad penalty `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::invalid("empty penalty grid"));
    }
    Ok(values)
}
