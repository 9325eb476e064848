//! Python bindings. Matrices cross the boundary as lists of rows; constraint
//! lists are zero-based `(row, col)` tuples, most important first.

use ocot::baseline::{solve_entropic, EntropicConfig};
use ocot::bounds;
use ocot::oracle::lp_solve_oc;
use ocot::projections;
use ocot::search::{branch_and_bound, SearchConfig};
use ocot::{Matrix, OrderedVariates, Problem, SolverConfig, TransportPlan};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(ocot_py, OcotError, PyValueError);

fn err(e: ocot::Error) -> PyErr {
    OcotError::new_err(e.to_string())
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    if rows.is_empty() {
        return Err(OcotError::new_err("matrix has no rows"));
    }
    Matrix::from_rows(rows).map_err(err)
}

fn variates(ranked: Option<Vec<(usize, usize)>>, rows: usize, cols: usize) -> PyResult<OrderedVariates> {
    OrderedVariates::from_ranked(ranked.unwrap_or_default(), rows, cols).map_err(err)
}

#[pyclass(name = "Problem", module = "ocot_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProblem {
    inner: Problem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (a, b, cost, renormalize = false))]
    fn new(a: Vec<f64>, b: Vec<f64>, cost: Vec<Vec<f64>>, renormalize: bool) -> PyResult<Self> {
        let cost = to_matrix(&cost)?;
        Ok(PyProblem { inner: ocot::validate_problem(a, b, cost, renormalize).map_err(err)? })
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.inner.a().to_vec()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b().to_vec()
    }

    #[getter]
    fn cost(&self) -> Vec<Vec<f64>> {
        self.inner.cost().to_rows()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    fn __repr__(&self) -> String {
        format!("Problem(shape={}x{})", self.inner.rows(), self.inner.cols())
    }
}

#[pyclass(name = "TransportPlan", module = "ocot_py", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyPlan {
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    objective: f64,
    primal_residual: f64,
    dual_residual: f64,
    iterations: usize,
    termination: String,
}

impl From<&TransportPlan> for PyPlan {
    fn from(p: &TransportPlan) -> Self {
        PyPlan {
            x: p.x.to_rows(),
            z: p.z.to_rows(),
            objective: p.objective,
            primal_residual: p.primal_residual,
            dual_residual: p.dual_residual,
            iterations: p.iterations,
            termination: p.termination.as_str().to_string(),
        }
    }
}

#[pymethods]
impl PyPlan {
    fn __repr__(&self) -> String {
        format!("TransportPlan(objective={}, iterations={}, termination={})", self.objective, self.iterations, self.termination)
    }
}

#[pyclass(name = "Candidate", module = "ocot_py", frozen, skip_from_py_object, get_all)]
#[derive(Clone)]
struct PyCandidate {
    rank: usize,
    constraints: Vec<(usize, usize)>,
    objective: f64,
    plan: PyPlan,
}

#[pymethods]
impl PyCandidate {
    fn __repr__(&self) -> String {
        format!("Candidate(rank={}, constraints={:?}, objective={})", self.rank, self.constraints, self.objective)
    }
}

#[pyfunction]
#[pyo3(signature = (problem, constraints = None, rho = 1.0, max_iters = 10_000, tol = 1e-4))]
fn solve(
    py: Python<'_>,
    problem: &PyProblem,
    constraints: Option<Vec<(usize, usize)>>,
    rho: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<PyPlan> {
    let p = &problem.inner;
    let oc = variates(constraints, p.rows(), p.cols())?;
    let cfg = SolverConfig { rho, max_iters, tol, ..Default::default() };
    let plan = py.detach(|| ocot::admm::solve_plan(p, &oc, &cfg)).map_err(err)?;
    Ok((&plan).into())
}

#[pyfunction]
fn project_c1(problem: &PyProblem, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(projections::project_c1(&problem.inner, &to_matrix(&x)?).map_err(err)?.to_rows())
}

#[pyfunction]
fn project_c2(x: Vec<Vec<f64>>, constraints: Vec<(usize, usize)>) -> PyResult<Vec<Vec<f64>>> {
    let x = to_matrix(&x)?;
    let oc = variates(Some(constraints), x.rows(), x.cols())?;
    Ok(projections::project_c2(&x, &oc).map_err(err)?.to_rows())
}

#[pyfunction]
fn lower_bound(problem: &PyProblem, constraints: Vec<(usize, usize)>) -> PyResult<f64> {
    let p = &problem.inner;
    bounds::lower_bound(p, &variates(Some(constraints), p.rows(), p.cols())?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (problem, constraints = None))]
fn lp_optimum(problem: &PyProblem, constraints: Option<Vec<(usize, usize)>>) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let p = &problem.inner;
    let (f, x) = lp_solve_oc(p, &variates(constraints, p.rows(), p.cols())?).map_err(err)?;
    Ok((f, x.to_rows()))
}

#[pyfunction]
#[pyo3(signature = (problem, iterations = 20, epsilon = None))]
fn entropic(problem: &PyProblem, iterations: usize, epsilon: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    Ok(solve_entropic(&problem.inner, &EntropicConfig { iterations, epsilon }).map_err(err)?.to_rows())
}

#[pyfunction]
fn feasible_point(problem: &PyProblem, constraints: Vec<(usize, usize)>, values: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let p = &problem.inner;
    let oc = variates(Some(constraints), p.rows(), p.cols())?;
    // values arrive in the same most-important-first order as the constraints
    let bottom_up: Vec<f64> = values.into_iter().rev().collect();
    Ok(ocot::feasible_point(p, &oc, &bottom_up).map_err(err)?.to_rows())
}

#[pyfunction]
fn membership_violation(problem: &PyProblem, constraints: Vec<(usize, usize)>, x: Vec<Vec<f64>>) -> PyResult<f64> {
    let p = &problem.inner;
    let oc = variates(Some(constraints), p.rows(), p.cols())?;
    Ok(ocot::check_membership(p, &oc, &to_matrix(&x)?).map_err(err)?.max_violation())
}

#[pyfunction]
#[pyo3(signature = (
    problem, tau1 = 0.5, tau2 = 0.5, k1 = 20, k2 = 5, k3 = 2, greedy = false, pruning = true,
    rho = 1.0, max_iters = 10_000, tol = 1e-4
))]
#[allow(clippy::too_many_arguments)]
fn search(
    py: Python<'_>,
    problem: &PyProblem,
    tau1: f64,
    tau2: f64,
    k1: usize,
    k2: usize,
    k3: usize,
    greedy: bool,
    pruning: bool,
    rho: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<Vec<PyCandidate>> {
    let cfg = SearchConfig { tau1, tau2, k1, k2, k3, greedy, pruning, ..Default::default() };
    let solver = SolverConfig { rho, max_iters, tol, ..Default::default() };
    let p = &problem.inner;
    let result = py.detach(|| branch_and_bound(p, &cfg, &solver)).map_err(err)?;
    Ok(result
        .candidates
        .iter()
        .enumerate()
        .map(|(r, c)| PyCandidate {
            rank: r + 1,
            constraints: c.variates.ranked(),
            objective: c.objective,
            plan: (&c.plan).into(),
        })
        .collect())
}

#[pymodule]
fn ocot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("OcotError", m.py().get_type::<OcotError>())?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyPlan>()?;
    m.add_class::<PyCandidate>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(project_c1, m)?)?;
    m.add_function(wrap_pyfunction!(project_c2, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lp_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(entropic, m)?)?;
    m.add_function(wrap_pyfunction!(feasible_point, m)?)?;
    m.add_function(wrap_pyfunction!(membership_violation, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranked_constraints_reverse_into_storage_order() {
        let oc = variates(Some(vec![(0, 1), (1, 0)]), 2, 2).unwrap();
        assert_eq!(oc.pairs(), &[(1, 0), (0, 1)]);
        assert!(variates(None, 2, 2).unwrap().is_empty());
    }

    #[test]
    fn plan_conversion_keeps_fields() {
        let p = Problem::new(vec![0.5, 0.5], vec![0.5, 0.5], Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap();
        let plan = ocot::admm::solve_plan(&p, &OrderedVariates::empty(), &SolverConfig::default()).unwrap();
        let py: PyPlan = (&plan).into();
        assert_eq!(py.x, plan.x.to_rows());
        assert_eq!(py.termination, "converged");
    }
}
