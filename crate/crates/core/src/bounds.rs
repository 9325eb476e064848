//! Packing-based lower bounds on the order-constrained transport optimum.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{OrderedVariates, Problem};

fn feas_tol(alpha: f64) -> f64 {
    1e-12 * alpha.abs().max(1.0)
}

/// Costs sorted ascending with prefix sums, answering packing queries in O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct SortedCosts {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl SortedCosts {
    pub fn new(costs: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..costs.len()).collect();
        idx.sort_by(|&p, &q| costs[p].total_cmp(&costs[q]).then(p.cmp(&q)));
        let sorted: Vec<f64> = idx.iter().map(|&p| costs[p]).collect();
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &c in &sorted {
            acc += c;
            prefix.push(acc);
        }
        SortedCosts { sorted, prefix }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of costs strictly below `v`.
    pub fn count_below(&self, v: f64) -> usize {
        self.sorted.partition_point(|&c| c < v)
    }

    /// Cheapest way to place total mass `alpha` on the items with at most `u` per item.
    pub fn packing(&self, u: f64, alpha: f64) -> Result<f64> {
        let n = self.sorted.len();
        let tol = feas_tol(alpha);
        let infeasible = || Error::Infeasible { capacity: u, items: n, budget: alpha };
        if alpha < -tol || u < 0.0 {
            return Err(infeasible());
        }
        let alpha = alpha.max(0.0);
        if alpha == 0.0 {
            return Ok(0.0);
        }
        if n == 0 || u * (n as f64) < alpha - tol {
            return Err(infeasible());
        }
        if u >= alpha {
            return Ok(alpha * self.sorted[0]);
        }
        let full = ((alpha / u).floor() as usize).min(n);
        let rest = alpha - full as f64 * u;
        Ok(u * self.prefix[full] + rest * self.sorted[full.min(n - 1)])
    }
}

/// Greedy packing optimum: `min phi.x` s.t. `sum x = alpha`, `0 <= x <= u`.
pub fn packing(costs: &[f64], u: f64, alpha: f64) -> Result<f64> {
    SortedCosts::new(costs).packing(u, alpha)
}

/// Packing of a row (or column) holding no constrained entry.
pub fn mu(u: f64, costs: &[f64], alpha: f64) -> Result<f64> {
    packing(costs, u, alpha)
}

/// Packing of the remaining entries of a row whose constrained entry holds `u`.
pub fn nu(u: f64, costs: &[f64], alpha: f64) -> Result<f64> {
    packing(costs, u, alpha - u)
}

enum Line {
    Free { costs: SortedCosts, mass: f64 },
    // the bottom constrained entry, fixed at x
    Bottom { costs: SortedCosts, mass: f64, cost: f64 },
    // a higher constrained entry, free to sit anywhere at or above x
    Upper { costs: SortedCosts, mass: f64, cost: f64, cheaper: usize },
}

impl Line {
    fn eval(&self, x: f64) -> Result<f64> {
        match *self {
            Line::Free { ref costs, mass } => costs.packing(x, mass),
            Line::Bottom { ref costs, mass, cost } => Ok(cost * x + costs.packing(x, mass - x)?),
            Line::Upper { ref costs, mass, cost, cheaper } => {
                let moved = (mass - x).min(cheaper as f64 * x).max(0.0);
                Ok(cost * (mass - moved) + costs.packing(x, moved)?)
            }
        }
    }
}

/// The relaxed optimum as a convex piecewise-linear function of the bottom
/// constrained value `x`, decoupled over the rows of the problem.
pub struct BranchFunction {
    lines: Vec<Line>,
    lo: f64,
    hi: f64,
    breakpoints: Vec<f64>,
}

impl BranchFunction {
    /// Decouples over rows. Requires at least one constrained variate and
    /// row/column-distinct constraints.
    pub fn rows(problem: &Problem, oc: &OrderedVariates) -> Self {
        let (m, n) = (problem.rows(), problem.cols());
        let d = problem.cost();
        let (a, b) = (problem.a(), problem.b());
        let pairs = oc.pairs();
        let mut lines = Vec::with_capacity(m);
        let mut lo: f64 = 0.0;
        let mut hi = f64::INFINITY;
        for &(i, j) in pairs {
            hi = hi.min(a[i]).min(b[j]);
        }
        for p in 0..m {
            let slot = pairs.iter().position(|&(i, _)| i == p);
            let line = match slot {
                None => Line::Free { costs: SortedCosts::new(d.row(p)), mass: a[p] },
                Some(l) => {
                    let jl = pairs[l].1;
                    let others: Vec<f64> = (0..n).filter(|&q| q != jl).map(|q| d[(p, q)]).collect();
                    let costs = SortedCosts::new(&others);
                    let cost = d[(p, jl)];
                    if l == 0 {
                        Line::Bottom { costs, mass: a[p], cost }
                    } else {
                        let cheaper = costs.count_below(cost);
                        Line::Upper { costs, mass: a[p], cost, cheaper }
                    }
                }
            };
            // a row without an upper constrained entry has its maximum at or below x
            if !matches!(line, Line::Upper { .. }) {
                lo = lo.max(a[p] / n as f64);
            }
            lines.push(line);
        }
        for q in 0..n {
            if !pairs[1..].iter().any(|&(_, j)| j == q) {
                lo = lo.max(b[q] / m as f64);
            }
        }
        let mut breakpoints = vec![lo, hi];
        if lo <= hi {
            for &ap in a {
                for s in 1..=n {
                    let x = ap / s as f64;
                    if x > lo && x < hi {
                        breakpoints.push(x);
                    }
                }
            }
        }
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        BranchFunction { lines, lo, hi, breakpoints }
    }

    /// Admissible range of the bottom constrained value.
    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Relaxed cost at bottom value `x`; errors where a packing term is infeasible.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.lines.iter().map(|l| l.eval(x)).sum()
    }

    /// Minimum over the range and its minimizer, or `None` when no point of
    /// the range is feasible.
    pub fn minimize(&self) -> Option<(f64, f64)> {
        if self.lo > self.hi + feas_tol(self.hi) {
            return None;
        }
        self.breakpoints
            .iter()
            .filter(|&&x| x >= self.lo && x <= self.hi.max(self.lo))
            .filter_map(|&x| self.eval(x).ok().map(|v| (v, x)))
            .min_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)))
    }
}

/// One decoupled branch of the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchBound {
    /// Branch minimum; `-inf` when the range admits no feasible point.
    pub value: f64,
    pub argmin: Option<f64>,
    pub range: (f64, f64),
}

impl BranchBound {
    pub fn is_empty(&self) -> bool {
        self.argmin.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub value: f64,
    pub rows: BranchBound,
    pub cols: BranchBound,
}

fn branch(f: &BranchFunction) -> BranchBound {
    match f.minimize() {
        Some((value, x)) => BranchBound { value, argmin: Some(x), range: f.range() },
        None => BranchBound { value: f64::NEG_INFINITY, argmin: None, range: f.range() },
    }
}

fn transpose_oc(oc: &OrderedVariates, rows: usize, cols: usize) -> Result<OrderedVariates> {
    OrderedVariates::new(oc.pairs().iter().map(|&(i, j)| (j, i)).collect(), cols, rows)
}

fn cheapest_fill(cost: &Matrix, mass: &[f64]) -> f64 {
    mass.iter().enumerate().map(|(p, &w)| w * cost.row(p).iter().copied().fold(f64::INFINITY, f64::min)).sum()
}

/// Lower bound with the per-branch minima and minimizers.
pub fn lower_bound_report(problem: &Problem, oc: &OrderedVariates) -> Result<BoundReport> {
    if !oc.rows_cols_distinct() {
        return Err(Error::RepeatedIndices);
    }
    let (m, n) = (problem.rows(), problem.cols());
    if let Some(&(i, j)) = oc.pairs().iter().find(|&&(i, j)| i >= m || j >= n) {
        return Err(Error::VariateOutOfRange { row: i, col: j, rows: m, cols: n });
    }
    if oc.is_empty() {
        let r = cheapest_fill(problem.cost(), problem.a());
        let c = cheapest_fill(&problem.cost().transpose(), problem.b());
        let unbounded = (0.0, f64::INFINITY);
        return Ok(BoundReport {
            value: r.max(c),
            rows: BranchBound { value: r, argmin: None, range: unbounded },
            cols: BranchBound { value: c, argmin: None, range: unbounded },
        });
    }
    let rows = branch(&BranchFunction::rows(problem, oc));
    let cols = branch(&BranchFunction::rows(&problem.transpose(), &transpose_oc(oc, m, n)?));
    Ok(BoundReport { value: rows.value.max(cols.value), rows, cols })
}

/// Lower bound on the optimal cost under the order constraints of `oc`.
pub fn lower_bound(problem: &Problem, oc: &OrderedVariates) -> Result<f64> {
    lower_bound_report(problem, oc).map(|r| r.value)
}
