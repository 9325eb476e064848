//! Command implementations behind the `ocot` binary. Each command returns the
//! text it would print so tests can drive it without a subprocess.

pub mod bench;
pub mod color;
pub mod dot;
pub mod error;
pub mod formats;

use std::path::Path;

use ocot::admm::solve_plan;
use ocot::bounds::lower_bound_report;
use ocot::oracle::{kkt_verify, lp_solve_oc, pgd_project, KktReport};
use ocot::projections::project_c2_epava;
use ocot::search::{branch_and_bound, SearchConfig, SearchResult};
use ocot::{OrderedVariates, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::color::{color_problem, read_color_constraints, recolor, SegmentTable};
use crate::error::{CliError, CliResult};
use crate::formats::{matrix_from_rows, to_json, BoundDocument, Pair, PlanDocument, ProblemFile, SearchDocument};

pub use error::ErrorKind;

pub fn cmd_solve(input: &Path, solver: &SolverConfig, emit_z: bool) -> CliResult<String> {
    let (problem, oc) = ProblemFile::load(input)?;
    let plan = solve_plan(&problem, &oc, solver)?;
    Ok(to_json(&PlanDocument::new(&plan, &oc, emit_z)))
}

pub struct SearchOutput {
    pub document: String,
    pub dot: String,
    pub result: SearchResult,
}

pub fn cmd_search(input: &Path, cfg: &SearchConfig, solver: &SolverConfig, seed: Option<u64>) -> CliResult<SearchOutput> {
    let (problem, oc) = ProblemFile::load(input)?;
    if !oc.is_empty() {
        return Err(CliError::Invalid("search starts from the unconstrained problem; remove `constraints`".into()));
    }
    let result = branch_and_bound(&problem, cfg, solver)?;
    Ok(SearchOutput {
        document: to_json(&SearchDocument::new(&result, seed)),
        dot: dot::search_dot(&result, cfg.k2),
        result,
    })
}

pub fn cmd_bound(input: &Path) -> CliResult<String> {
    let (problem, oc) = ProblemFile::load(input)?;
    if !oc.rows_cols_distinct() {
        return Err(ocot::Error::RepeatedIndices.into());
    }
    let report = lower_bound_report(&problem, &oc)?;
    Ok(to_json(&BoundDocument::new(&report, &oc)))
}

pub struct ColorArgs<'a> {
    pub source: &'a Path,
    pub target: &'a Path,
    pub constraints: Option<&'a Path>,
    pub search: SearchConfig,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorRow {
    pub rank: usize,
    pub objective: f64,
    pub segment_id: String,
    pub weight: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub new_r: f64,
    pub new_g: f64,
    pub new_b: f64,
}

/// Recolors the source palette. With constraints, one plan; otherwise the
/// top candidates of a search, ranked.
pub fn cmd_color_transfer(args: &ColorArgs) -> CliResult<Vec<ColorRow>> {
    let source = SegmentTable::read(args.source)?;
    let target = SegmentTable::read(args.target)?;
    let problem = color_problem(&source, &target)?;
    let plans: Vec<(f64, ocot::Matrix)> = match args.constraints {
        Some(path) => {
            let oc = read_color_constraints(path, &source, &target)?;
            let plan = solve_plan(&problem, &oc, &args.solver)?;
            vec![(plan.objective, plan.x)]
        }
        None => {
            let mut cfg = args.search;
            cfg.k3 = cfg.k3.min(problem.rows().min(problem.cols()));
            branch_and_bound(&problem, &cfg, &args.solver)?
                .candidates
                .into_iter()
                .map(|c| (c.objective, c.plan.x))
                .collect()
        }
    };
    let mut rows = Vec::new();
    for (rank, (objective, plan)) in plans.iter().enumerate() {
        for (i, c) in recolor(plan, &source, &target).into_iter().enumerate() {
            let [r, g, b] = source.colors[i];
            rows.push(ColorRow {
                rank: rank + 1,
                objective: *objective,
                segment_id: source.ids[i].clone(),
                weight: source.weights[i],
                r,
                g,
                b,
                new_r: c[0],
                new_g: c[1],
                new_b: c[2],
            });
        }
    }
    Ok(rows)
}

pub fn color_csv(rows: &[ColorRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpDocument {
    pub constraints: Vec<Pair>,
    pub optimum: f64,
    pub plan: Vec<Vec<f64>>,
}

pub fn cmd_oracle_lp(input: &Path) -> CliResult<String> {
    let (problem, oc) = ProblemFile::load(input)?;
    let (optimum, plan) = lp_solve_oc(&problem, &oc)?;
    Ok(to_json(&LpDocument { constraints: formats::to_pairs(&oc.ranked()), optimum, plan: plan.to_rows() }))
}

/// Input for the projection oracle: a matrix and ranked constraints.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectFile {
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    pub constraints: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectDocument {
    pub projection: Vec<Vec<f64>>,
    pub reference: Vec<Vec<f64>>,
    pub max_deviation: f64,
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub dual_sign: f64,
    pub complementary_slackness: f64,
}

pub fn cmd_oracle_project(input: &Path, tol: f64) -> CliResult<String> {
    let file: ProjectFile = formats::read_json(input)?;
    let x = matrix_from_rows(&file.x, "X")?;
    let ranked = file.constraints.iter().map(|&[i, j]| (i, j)).collect();
    let oc = OrderedVariates::from_ranked(ranked, x.rows(), x.cols())?;
    let y = project_c2_epava(&x, &oc)?;
    let reference = pgd_project(&x, &oc, tol)?;
    let KktReport { stationarity, primal_feasibility, dual_sign, complementary_slackness } = kkt_verify(&x, &y, &oc, 1e-9)?;
    Ok(to_json(&ProjectDocument {
        max_deviation: y.max_abs_diff(&reference),
        projection: y.to_rows(),
        reference: reference.to_rows(),
        stationarity,
        primal_feasibility,
        dual_sign,
        complementary_slackness,
    }))
}
