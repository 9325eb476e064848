//! Unconstrained base plans: entropic scaling and the plain ADMM solve.

use crate::admm::{solve_plan, SolverConfig, TransportPlan};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{OrderedVariates, Problem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicConfig {
    pub iterations: usize,
    /// Regularization strength; `None` means `0.05 * max(D)` (or 1 when D is zero).
    pub epsilon: Option<f64>,
}

impl Default for EntropicConfig {
    fn default() -> Self {
        EntropicConfig { iterations: 20, epsilon: None }
    }
}

impl EntropicConfig {
    pub fn epsilon_for(&self, cost: &Matrix) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            let dmax = cost.max();
            if dmax > 0.0 {
                0.05 * dmax
            } else {
                1.0
            }
        })
    }

    fn validate(&self, eps: f64) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("entropic iterations must be at least 1".into()));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {eps}")));
        }
        Ok(())
    }
}

/// Alternating marginal scaling of the Gibbs kernel `exp(-D / eps)`. The last
/// half-step matches the rows, so row sums are exact and column sums are not.
pub fn sinkhorn_scaling(problem: &Problem, cfg: &EntropicConfig) -> Result<Matrix> {
    let eps = cfg.epsilon_for(problem.cost());
    cfg.validate(eps)?;
    let (m, n) = (problem.rows(), problem.cols());
    let kernel = problem.cost().map(|d| (-d / eps).exp());
    if kernel.min() <= f64::MIN_POSITIVE {
        return Err(Error::NumericalUnderflow { epsilon: eps });
    }
    let (a, b) = (problem.a(), problem.b());
    let mut u = vec![1.0; m];
    let mut v = vec![1.0; n];
    for _ in 0..cfg.iterations {
        for j in 0..n {
            let s: f64 = (0..m).map(|i| kernel[(i, j)] * u[i]).sum();
            v[j] = b[j] / s;
        }
        for (i, ui) in u.iter_mut().enumerate() {
            let s: f64 = kernel.row(i).iter().zip(&v).map(|(k, vj)| k * vj).sum();
            *ui = a[i] / s;
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::NumericalUnderflow { epsilon: eps });
        }
    }
    Ok(Matrix::from_fn(m, n, |i, j| u[i] * kernel[(i, j)] * v[j]))
}

/// Moves an approximate plan onto the transport polytope: rows and columns
/// with excess mass are scaled down, then the deficit is spread as a rank-one
/// correction.
pub fn round_to_polytope(problem: &Problem, plan: &Matrix) -> Result<Matrix> {
    plan.check_shape(problem.rows(), problem.cols())?;
    let (a, b) = (problem.a(), problem.b());
    let mut x = plan.clone();
    let rs = x.row_sums();
    for i in 0..x.rows() {
        if rs[i] > a[i] {
            let f = a[i] / rs[i];
            for j in 0..x.cols() {
                x[(i, j)] *= f;
            }
        }
    }
    let cs = x.col_sums();
    for j in 0..x.cols() {
        if cs[j] > b[j] {
            let f = b[j] / cs[j];
            for i in 0..x.rows() {
                x[(i, j)] *= f;
            }
        }
    }
    let er: Vec<f64> = a.iter().zip(x.row_sums()).map(|(ai, s)| (ai - s).max(0.0)).collect();
    let ec: Vec<f64> = b.iter().zip(x.col_sums()).map(|(bj, s)| (bj - s).max(0.0)).collect();
    let total: f64 = er.iter().sum();
    if total > 0.0 {
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                x[(i, j)] += er[i] * ec[j] / total;
            }
        }
    }
    Ok(x)
}

/// Entropic base plan: scaling followed by rounding onto the polytope.
pub fn solve_entropic(problem: &Problem, cfg: &EntropicConfig) -> Result<Matrix> {
    let cost = problem.cost();
    if cost.max() == cost.min() {
        cfg.validate(cfg.epsilon_for(cost))?;
        return Ok(problem.product_plan());
    }
    let scaled = sinkhorn_scaling(problem, cfg)?;
    round_to_polytope(problem, &scaled)
}

/// Plain optimal transport via ADMM with no order constraints.
pub fn solve_exact_unconstrained(problem: &Problem, cfg: &SolverConfig) -> Result<TransportPlan> {
    solve_plan(problem, &OrderedVariates::empty(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entropy(x: &Matrix) -> f64 {
        -x.as_slice().iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
    }

    fn col_error(p: &Problem, x: &Matrix) -> f64 {
        x.col_sums().iter().zip(p.b()).map(|(s, b)| (s - b).abs()).sum()
    }

    fn skewed() -> Problem {
        Problem::new(
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.15, 0.6],
            Matrix::from_fn(4, 3, |i, j| ((3 * i + 5 * j) % 7) as f64 / 7.0),
        )
        .unwrap()
    }

    #[test]
    fn constant_cost_gives_product() {
        let p = Problem::new(vec![0.3, 0.7], vec![0.6, 0.4], Matrix::filled(2, 2, 2.5)).unwrap();
        assert_eq!(solve_entropic(&p, &EntropicConfig::default()).unwrap(), p.product_plan());
    }

    #[test]
    fn small_epsilon_approaches_matching() {
        let p = Problem::new(vec![0.5, 0.5], vec![0.5, 0.5], Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap())
            .unwrap();
        let cfg = EntropicConfig { iterations: 50, epsilon: Some(0.05) };
        let x = solve_entropic(&p, &cfg).unwrap();
        let diag = Matrix::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert!(x.max_abs_diff(&diag) < 1e-2);
    }

    #[test]
    fn rounded_plan_is_positive_with_exact_marginals() {
        let p = skewed();
        let x = solve_entropic(&p, &EntropicConfig::default()).unwrap();
        assert!(x.min() > 0.0);
        for (s, a) in x.row_sums().iter().zip(p.a()) {
            assert!((s - a).abs() < 1e-15);
        }
        assert!(col_error(&p, &x) < 1e-6);
    }

    #[test]
    fn scaling_column_error_nonincreasing() {
        let p = skewed();
        let mut last = f64::INFINITY;
        for it in 1..40 {
            let x = sinkhorn_scaling(&p, &EntropicConfig { iterations: it, epsilon: Some(0.02) }).unwrap();
            for (s, a) in x.row_sums().iter().zip(p.a()) {
                assert!((s - a).abs() < 1e-14);
            }
            let e = col_error(&p, &x);
            assert!(e <= last + 1e-15, "iteration {it}: {e} > {last}");
            last = e;
        }
    }

    #[test]
    fn entropy_grows_with_epsilon() {
        let p = skewed();
        let mut last = f64::NEG_INFINITY;
        for eps in [0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 5.0] {
            let x = solve_entropic(&p, &EntropicConfig { iterations: 200, epsilon: Some(eps) }).unwrap();
            let h = entropy(&x);
            assert!(h >= last - 1e-12, "eps {eps}: {h} < {last}");
            last = h;
        }
    }

    #[test]
    fn underflow_detected() {
        let p = skewed();
        let cfg = EntropicConfig { iterations: 5, epsilon: Some(1e-6) };
        assert!(matches!(solve_entropic(&p, &cfg), Err(Error::NumericalUnderflow { .. })));
    }

    #[test]
    fn unconstrained_singleton() {
        let p = Problem::new(vec![1.0], vec![1.0], Matrix::zeros(1, 1)).unwrap();
        let plan = solve_exact_unconstrained(&p, &SolverConfig::default()).unwrap();
        assert!((plan.x[(0, 0)] - 1.0).abs() < 1e-12);
    }
}
