//! ADMM for order-constrained transport: alternating exact projections onto
//! the marginal set and the order cone with a scaled dual variable.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{OrderedVariates, Problem};
use crate::projections::{project_c2, project_marginals_into};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Also return running averages of the iterates.
    pub track_averages: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { rho: 1.0, max_iters: 10_000, tol: 1e-4, track_averages: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Converged,
    MaxIters,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

/// Solver output. `x` has exact marginals, `z` satisfies the order
/// constraints exactly; they differ by `primal_residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub x: Matrix,
    pub z: Matrix,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub x_avg: Option<Matrix>,
    pub z_avg: Option<Matrix>,
}

/// Runs the solver and discards the per-iteration trace.
pub fn solve_plan(problem: &Problem, oc: &OrderedVariates, cfg: &SolverConfig) -> Result<TransportPlan> {
    run(problem, oc, cfg, false).map(|(plan, _)| plan)
}

/// Runs the solver from zero primal and dual iterates.
pub fn solve(problem: &Problem, oc: &OrderedVariates, cfg: &SolverConfig) -> Result<(TransportPlan, SolverTrace)> {
    run(problem, oc, cfg, true)
}

fn run(
    problem: &Problem,
    oc: &OrderedVariates,
    cfg: &SolverConfig,
    record: bool,
) -> Result<(TransportPlan, SolverTrace)> {
    cfg.validate()?;
    let (m, n) = (problem.rows(), problem.cols());
    if let Some(&(i, j)) = oc.pairs().iter().find(|&&(i, j)| i >= m || j >= n) {
        return Err(Error::VariateOutOfRange { row: i, col: j, rows: m, cols: n });
    }
    let d = problem.cost().scale(1.0 / cfg.rho);
    let mut z = Matrix::zeros(m, n);
    let mut dual = Matrix::zeros(m, n);
    let mut x = Matrix::zeros(m, n);
    let mut x_sum = cfg.track_averages.then(|| Matrix::zeros(m, n));
    let mut z_sum = cfg.track_averages.then(|| Matrix::zeros(m, n));
    let mut records = Vec::new();
    let (mut primal_res, mut dual_res) = (f64::INFINITY, f64::INFINITY);
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        for (((xv, zv), mv), dv) in
            x.as_mut_slice().iter_mut().zip(z.as_slice()).zip(dual.as_slice()).zip(d.as_slice())
        {
            *xv = zv - mv - dv;
        }
        project_marginals_into(problem.a(), problem.b(), &mut x);

        let mut shifted = x.clone();
        for (s, mv) in shifted.as_mut_slice().iter_mut().zip(dual.as_slice()) {
            *s += mv;
        }
        let z_next = project_c2(&shifted, oc)?;

        let (mut p2, mut d2) = (0.0, 0.0);
        for (((mv, xv), zn), zo) in dual
            .as_mut_slice()
            .iter_mut()
            .zip(x.as_slice())
            .zip(z_next.as_slice())
            .zip(z.as_slice())
        {
            let r = xv - zn;
            *mv += r;
            p2 += r * r;
            d2 += (zn - zo) * (zn - zo);
        }
        primal_res = p2.sqrt();
        dual_res = cfg.rho * d2.sqrt();
        z = z_next;

        if let (Some(xs), Some(zs)) = (x_sum.as_mut(), z_sum.as_mut()) {
            accumulate(xs, &x);
            accumulate(zs, &z);
        }
        if record {
            records.push(IterationRecord {
                objective: problem.cost().dot(&x),
                primal_residual: primal_res,
                dual_residual: dual_res,
            });
        }
        if primal_res <= cfg.tol && dual_res <= cfg.tol {
            termination = Termination::Converged;
            break;
        }
    }

    let inv = 1.0 / iterations as f64;
    let plan = TransportPlan {
        objective: problem.cost().dot(&x),
        x,
        z,
        primal_residual: primal_res,
        dual_residual: dual_res,
        iterations,
        termination,
        x_avg: x_sum.map(|s| s.scale(inv)),
        z_avg: z_sum.map(|s| s.scale(inv)),
    };
    Ok((plan, SolverTrace { records, termination }))
}

fn accumulate(acc: &mut Matrix, x: &Matrix) {
    for (a, v) in acc.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *a += v;
    }
}
