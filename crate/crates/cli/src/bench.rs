//! Timing harness over a grid of random problems.

use std::time::Instant;

use ocot::admm::solve_plan;
use ocot::oracle::{lp_solve_oc, LP_SIZE_LIMIT};
use ocot::{Matrix, OrderedVariates, Problem, SolverConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub ks: Vec<usize>,
    pub seed: u64,
    pub repeats: usize,
    pub solver: SolverConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            rows: vec![10, 20, 40],
            cols: vec![10, 20, 40],
            ks: vec![1, 2, 4, 10],
            seed: 0,
            repeats: 1,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub iterations: usize,
    pub termination: &'static str,
    pub objective: f64,
    /// Relative gap to the exact optimum; empty above the oracle size limit.
    pub oracle_gap: Option<f64>,
    pub seconds: f64,
    pub micros_per_iteration: f64,
}

/// Whether uniform marginals with every constrained value at `1/max(m, n)`
/// are guaranteed to admit a feasible plan.
pub fn uniform_guard(m: usize, n: usize, k: usize) -> bool {
    let big = m.max(n) as f64;
    let frac = k as f64 / big;
    frac < 1.0 && m.min(n) as f64 >= 1.0 / (1.0 - frac)
}

pub fn random_instance(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> (Problem, OrderedVariates) {
    let mut weights = |len: usize| {
        let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.5..1.5)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let a = weights(m);
    let b = weights(n);
    let cost = Matrix::from_fn(m, n, |_, _| rng.gen_range(0.0..1.0));
    let mut rows: Vec<usize> = (0..m).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    let pairs = rows.into_iter().zip(cols).take(k).collect();
    let problem = Problem::new(a, b, cost).expect("generated marginals are normalized");
    let oc = OrderedVariates::new(pairs, m, n).expect("generated pairs are distinct");
    (problem, oc)
}

/// Runs the grid. Cells that cannot be built are reported through `warn` and skipped.
pub fn run_bench(cfg: &BenchConfig, mut warn: impl FnMut(String)) -> CliResult<Vec<BenchRow>> {
    cfg.solver.validate()?;
    let mut cases = Vec::new();
    for &m in &cfg.rows {
        for &n in &cfg.cols {
            for &k in &cfg.ks {
                if m == 0 || n == 0 || k > m.min(n) {
                    warn(format!("skipping m={m} n={n} k={k}: needs k distinct rows and columns"));
                    continue;
                }
                if k > 0 && !uniform_guard(m, n, k) {
                    warn(format!("m={m} n={n} k={k} is outside the sufficient feasibility condition; the solve may not reach the constraint set"));
                }
                let cell = cases.len() as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(cell);
                cases.push(random_instance(&mut rng, m, n, k));
            }
        }
    }
    let mut rows = Vec::with_capacity(cases.len());
    for (problem, oc) in &cases {
        let mut best = f64::INFINITY;
        let mut plan = None;
        for _ in 0..cfg.repeats.max(1) {
            let start = Instant::now();
            let p = solve_plan(problem, oc, &cfg.solver)?;
            best = best.min(start.elapsed().as_secs_f64());
            plan = Some(p);
        }
        let plan = plan.expect("at least one repeat");
        rows.push(BenchRow {
            m: problem.rows(),
            n: problem.cols(),
            k: oc.len(),
            iterations: plan.iterations,
            termination: plan.termination.as_str(),
            objective: plan.objective,
            oracle_gap: None,
            seconds: best,
            micros_per_iteration: best * 1e6 / plan.iterations.max(1) as f64,
        });
    }
    let gaps: Vec<Option<f64>> = cases
        .par_iter()
        .map(|(problem, oc)| {
            if problem.rows().max(problem.cols()) > LP_SIZE_LIMIT {
                return None;
            }
            lp_solve_oc(problem, oc).ok().map(|(opt, _)| opt)
        })
        .collect();
    for (row, opt) in rows.iter_mut().zip(gaps) {
        row.oracle_gap = opt.map(|opt| (row.objective - opt).abs() / opt.abs().max(1e-12));
    }
    Ok(rows)
}

pub fn write_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}
