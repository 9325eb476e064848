//! JSON documents read and written by the command line tool. Indices are
//! zero-based everywhere in files.

use std::fs;
use std::io::Write;
use std::path::Path;

use ocot::bounds::{BoundReport, BranchBound};
use ocot::search::{Expansion, NodeStatus, SearchResult};
use ocot::{validate_problem, Matrix, OrderedVariates, Problem, TransportPlan};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub type Pair = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "D")]
    pub cost: Vec<Vec<f64>>,
    /// Most important first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_rows: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_cols: Option<Vec<String>>,
}

impl ProblemFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        read_json(path)
    }

    pub fn from_parts(problem: &Problem, oc: &OrderedVariates) -> Self {
        ProblemFile {
            a: problem.a().to_vec(),
            b: problem.b().to_vec(),
            cost: problem.cost().to_rows(),
            constraints: to_pairs(&oc.ranked()),
            labels_rows: None,
            labels_cols: None,
        }
    }

    pub fn problem(&self) -> CliResult<Problem> {
        let cost = matrix_from_rows(&self.cost, "D")?;
        for (what, labels, len) in [("labels_rows", &self.labels_rows, self.a.len()), ("labels_cols", &self.labels_cols, self.b.len())] {
            if let Some(l) = labels {
                if l.len() != len {
                    return Err(CliError::Invalid(format!("{what} has {} entries, expected {len}", l.len())));
                }
            }
        }
        Ok(validate_problem(self.a.clone(), self.b.clone(), cost, false)?)
    }

    pub fn variates(&self) -> CliResult<OrderedVariates> {
        let ranked = self.constraints.iter().map(|&[i, j]| (i, j)).collect();
        Ok(OrderedVariates::from_ranked(ranked, self.a.len(), self.b.len())?)
    }

    pub fn load(path: &Path) -> CliResult<(Problem, OrderedVariates)> {
        let file = Self::read(path)?;
        let problem = file.problem()?;
        let oc = file.variates()?;
        Ok((problem, oc))
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> CliResult<Matrix> {
    if rows.is_empty() {
        return Err(CliError::Invalid(format!("{what} has no rows")));
    }
    Matrix::from_rows(rows).map_err(|e| CliError::Invalid(format!("{what}: {e}")))
}

pub fn to_pairs(v: &[(usize, usize)]) -> Vec<Pair> {
    v.iter().map(|&(i, j)| [i, j]).collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.display().to_string(), source })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("documents contain only plain data")
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    let name = path.map_or_else(|| "stdout".to_string(), |p| p.display().to_string());
    let result = match path {
        Some(p) => fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.write_all(b"\n")) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
    };
    result.map_err(|source| CliError::Write { path: name, source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub constraints: Vec<Pair>,
    pub objective: f64,
    pub plan: Vec<Vec<f64>>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<Vec<f64>>>,
}

impl PlanDocument {
    pub fn new(plan: &TransportPlan, oc: &OrderedVariates, emit_z: bool) -> Self {
        PlanDocument {
            constraints: to_pairs(&oc.ranked()),
            objective: plan.objective,
            plan: plan.x.to_rows(),
            primal_residual: plan.primal_residual,
            dual_residual: plan.dual_residual,
            iterations: plan.iterations,
            termination: plan.termination.as_str().to_string(),
            z: emit_z.then(|| plan.z.to_rows()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDocument {
    /// `null` when the feasible range for the bottom value is empty.
    pub value: Option<f64>,
    pub argmin: Option<f64>,
    pub range: [f64; 2],
}

impl From<&BranchBound> for BranchDocument {
    fn from(b: &BranchBound) -> Self {
        BranchDocument { value: b.value.is_finite().then_some(b.value), argmin: b.argmin, range: [b.range.0, b.range.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundDocument {
    pub constraints: Vec<Pair>,
    pub bound: f64,
    pub rows: BranchDocument,
    pub cols: BranchDocument,
}

impl BoundDocument {
    pub fn new(report: &BoundReport, oc: &OrderedVariates) -> Self {
        BoundDocument {
            constraints: to_pairs(&oc.ranked()),
            bound: report.value,
            rows: (&report.rows).into(),
            cols: (&report.cols).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDocument {
    pub rank: usize,
    pub node: usize,
    pub constraints: Vec<Pair>,
    pub objective: f64,
    pub iterations: usize,
    pub termination: String,
    pub plan: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub constraints: Vec<Pair>,
    pub saturation: f64,
    pub bound: Option<f64>,
    pub objective: Option<f64>,
    pub status: String,
    pub expansion: String,
    pub visit: Option<usize>,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDocument {
    pub seed: Option<u64>,
    pub solves: usize,
    pub candidates: Vec<CandidateDocument>,
    pub subtree: Vec<usize>,
    pub nodes: Vec<NodeDocument>,
}

pub fn status_str(s: NodeStatus) -> &'static str {
    match s {
        NodeStatus::Solved => "solved",
        NodeStatus::PrunedBound => "pruned-bound",
        NodeStatus::Pending => "pending",
    }
}

pub fn expansion_str(e: Expansion) -> String {
    match e {
        Expansion::Expanded(n) => format!("expanded:{n}"),
        Expansion::SkippedDepth => "depth-limit".into(),
        Expansion::SkippedParentCost => "parent-cost".into(),
        Expansion::None => "none".into(),
    }
}

impl SearchDocument {
    pub fn new(result: &SearchResult, seed: Option<u64>) -> Self {
        let candidates = result
            .candidates
            .iter()
            .enumerate()
            .map(|(r, c)| CandidateDocument {
                rank: r + 1,
                node: c.node,
                constraints: to_pairs(&c.variates.ranked()),
                objective: c.objective,
                iterations: c.plan.iterations,
                termination: c.plan.termination.as_str().to_string(),
                plan: c.plan.x.to_rows(),
            })
            .collect();
        let nodes = result
            .nodes
            .iter()
            .map(|n| NodeDocument {
                id: n.id,
                parent: n.parent,
                depth: n.depth(),
                constraints: to_pairs(&n.variates.ranked()),
                saturation: n.phi,
                bound: n.bound,
                objective: n.objective,
                status: status_str(n.status).into(),
                expansion: expansion_str(n.expansion),
                visit: n.visit,
                rank: result.rank_of(n.id).map(|r| r + 1),
            })
            .collect();
        SearchDocument { seed, solves: result.solves, candidates, subtree: result.subtree.clone(), nodes }
    }
}
