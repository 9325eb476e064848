//! Problem instances, order constraints, objective evaluation and the
//! closed-form feasible point for row/column-distinct constraints.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Inputs whose mass deviates from 1 by at most this much are accepted unchanged.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Relative slack for the product-versus-constraint order check.
const ORDER_TOL: f64 = 1e-12;

/// A balanced transport problem: marginals `a` (length m), `b` (length n)
/// and a non-negative finite cost matrix of shape m x n.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Matrix,
}

impl Problem {
    /// Validates and builds a problem. Marginals must already sum to 1.
    pub fn new(a: Vec<f64>, b: Vec<f64>, cost: Matrix) -> Result<Self> {
        validate_problem(a, b, cost, false)
    }

    #[inline]
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    #[inline]
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn cost(&self) -> &Matrix {
        &self.cost
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.a.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.b.len()
    }

    /// The product coupling `a b^T`, always a member of the transport polytope.
    pub fn product_plan(&self) -> Matrix {
        Matrix::outer(&self.a, &self.b)
    }

    pub fn transpose(&self) -> Problem {
        Problem { a: self.b.clone(), b: self.a.clone(), cost: self.cost.transpose() }
    }
}

/// Validates marginals and costs. With `renormalize`, marginals whose mass is
/// off by more than [`NORMALIZATION_TOL`] are rescaled instead of rejected.
pub fn validate_problem(
    mut a: Vec<f64>,
    mut b: Vec<f64>,
    cost: Matrix,
    renormalize: bool,
) -> Result<Problem> {
    if cost.shape() != (a.len(), b.len()) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", a.len(), b.len()),
            found: format!("{}x{}", cost.rows(), cost.cols()),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: "at least one row and one column".into(),
            found: format!("{}x{}", a.len(), b.len()),
        });
    }
    check_measure("a", &mut a, renormalize)?;
    check_measure("b", &mut b, renormalize)?;
    for i in 0..cost.rows() {
        for j in 0..cost.cols() {
            let d = cost[(i, j)];
            if !d.is_finite() {
                return Err(Error::NonFiniteCost { row: i, col: j });
            }
            if d < 0.0 {
                return Err(Error::NegativeEntry { what: "D", index: i * cost.cols() + j, value: d });
            }
        }
    }
    Ok(Problem { a, b, cost })
}

fn check_measure(what: &'static str, v: &mut [f64], renormalize: bool) -> Result<()> {
    for (index, &value) in v.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NegativeEntry { what, index, value });
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        if !renormalize || sum <= 0.0 {
            return Err(Error::NotNormalized { what, sum });
        }
        v.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(())
}

/// A zero-based (row, column) index into a plan.
pub type Variate = (usize, usize);

/// The constrained variates of an order constraint.
///
/// Pairs are stored bottom-up: `pairs()[0]` is the lowest constrained entry
/// (which must dominate every unconstrained entry) and the last pair is the
/// topmost. External formats list pairs most-important-first; use
/// [`OrderedVariates::from_ranked`] for those.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OrderedVariates {
    pairs: Vec<Variate>,
    rows_cols_distinct: bool,
}

impl OrderedVariates {
    /// No constraints: plain optimal transport.
    pub fn empty() -> Self {
        OrderedVariates { pairs: Vec::new(), rows_cols_distinct: true }
    }

    /// Builds from pairs listed bottom-up (lowest constrained entry first).
    pub fn new(pairs: Vec<Variate>, rows: usize, cols: usize) -> Result<Self> {
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if i >= rows || j >= cols {
                return Err(Error::VariateOutOfRange { row: i, col: j, rows, cols });
            }
            if pairs[..k].contains(&(i, j)) {
                return Err(Error::DuplicateVariate { row: i, col: j });
            }
        }
        let rows_cols_distinct = pairs.iter().enumerate().all(|(k, &(i, j))| {
            pairs[..k].iter().all(|&(p, q)| p != i && q != j)
        });
        Ok(OrderedVariates { pairs, rows_cols_distinct })
    }

    /// Builds from pairs listed most-important-first (top of the order first).
    pub fn from_ranked(mut ranked: Vec<Variate>, rows: usize, cols: usize) -> Result<Self> {
        ranked.reverse();
        OrderedVariates::new(ranked, rows, cols)
    }

    /// Bottom-up pairs.
    #[inline]
    pub fn pairs(&self) -> &[Variate] {
        &self.pairs
    }

    /// Pairs most-important-first.
    pub fn ranked(&self) -> Vec<Variate> {
        self.pairs.iter().rev().copied().collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True iff no row and no column index repeats among the pairs.
    #[inline]
    pub fn rows_cols_distinct(&self) -> bool {
        self.rows_cols_distinct
    }

    pub fn contains(&self, v: Variate) -> bool {
        self.pairs.contains(&v)
    }

    pub fn uses_row(&self, i: usize) -> bool {
        self.pairs.iter().any(|&(p, _)| p == i)
    }

    pub fn uses_col(&self, j: usize) -> bool {
        self.pairs.iter().any(|&(_, q)| q == j)
    }

    /// Extends the order with a new variate placed below every current pair.
    pub fn push_bottom(&self, v: Variate, rows: usize, cols: usize) -> Result<Self> {
        let mut pairs = Vec::with_capacity(self.pairs.len() + 1);
        pairs.push(v);
        pairs.extend_from_slice(&self.pairs);
        OrderedVariates::new(pairs, rows, cols)
    }

    /// Flat row-major indices of the unconstrained set V.
    pub fn complement(&self, rows: usize, cols: usize) -> Vec<usize> {
        let mut mask = vec![false; rows * cols];
        for &(i, j) in &self.pairs {
            mask[i * cols + j] = true;
        }
        (0..rows * cols).filter(|&f| !mask[f]).collect()
    }
}

/// Orders flat indices by descending value, ties broken by ascending index
/// (row-major). This is the rank function used throughout the crate.
pub fn descending_order(values: &[f64], indices: &mut [usize]) {
    indices.sort_unstable_by(|&p, &q| rank_cmp(values[p], p, values[q], q));
}

#[inline]
pub(crate) fn rank_cmp(vp: f64, p: usize, vq: f64, q: usize) -> Ordering {
    vq.total_cmp(&vp).then(p.cmp(&q))
}

/// Transport cost `trace(D^T X)`.
pub fn objective(problem: &Problem, x: &Matrix) -> Result<f64> {
    x.check_shape(problem.rows(), problem.cols())?;
    Ok(problem.cost().dot(x))
}

/// Builds the closed-form plan for row/column-distinct constraints with
/// prescribed values `c` (bottom-up, `c[0]` is the lowest constrained entry).
///
/// Constrained entries get `c`; every unconstrained entry `(p, q)` gets the
/// product of the residual marginals divided by `alpha = 1 - sum(c)`. The
/// plan lies in the order-constrained polytope when
/// `a_p b_q / alpha <= c[0] <= c[1] <= ... <= c[k-1]` for all unconstrained
/// `(p, q)`, and when every constrained variate is saturated
/// (`c_l = a_{i_l}` or `c_l = b_{j_l}`), which is what keeps the marginals exact.
pub fn feasible_point(problem: &Problem, oc: &OrderedVariates, c: &[f64]) -> Result<Matrix> {
    if !oc.rows_cols_distinct() {
        return Err(Error::RepeatedIndices);
    }
    if c.len() != oc.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} constraint values", oc.len()),
            found: format!("{}", c.len()),
        });
    }
    let (m, n) = (problem.rows(), problem.cols());
    let (a, b) = (problem.a(), problem.b());
    for (l, (&(i, j), &cl)) in oc.pairs().iter().zip(c).enumerate() {
        let cap = a[i].min(b[j]);
        if !(0.0..=cap).contains(&cl) {
            return Err(Error::CapacityViolated { index: l, value: cl, cap });
        }
    }
    let alpha = 1.0 - c.iter().sum::<f64>();
    if alpha < -NORMALIZATION_TOL {
        return Err(Error::OrderCheckFailed(format!("alpha = {alpha} < 0")));
    }
    let alpha = alpha.max(0.0);

    for l in 1..c.len() {
        if c[l] < c[l - 1] {
            return Err(Error::OrderCheckFailed(format!(
                "c[{}] = {} < c[{}] = {}",
                l,
                c[l],
                l - 1,
                c[l - 1]
            )));
        }
    }

    let mut a_res = a.to_vec();
    let mut b_res = b.to_vec();
    for (&(i, j), &cl) in oc.pairs().iter().zip(c) {
        a_res[i] -= cl;
        b_res[j] -= cl;
    }

    let mut plan = Matrix::zeros(m, n);
    if let (Some(&c_low), true) = (c.first(), alpha > 0.0) {
        for p in 0..m {
            for q in 0..n {
                if oc.contains((p, q)) {
                    continue;
                }
                let bound = a[p] * b[q] / alpha;
                if bound > c_low + ORDER_TOL * c_low.max(f64::MIN_POSITIVE) {
                    return Err(Error::OrderCheckFailed(format!(
                        "a[{p}] b[{q}] / alpha = {bound} exceeds the lowest constrained value {c_low}"
                    )));
                }
            }
        }
    }
    for p in 0..m {
        for q in 0..n {
            plan[(p, q)] = if alpha > 0.0 { a_res[p] * b_res[q] / alpha } else { 0.0 };
        }
    }
    for (&(i, j), &cl) in oc.pairs().iter().zip(c) {
        plan[(i, j)] = cl;
    }

    // Unsaturated variates leave residual mass in their own cell's product term.
    let (rows, cols) = (plan.row_sums(), plan.col_sums());
    for (l, &(i, j)) in oc.pairs().iter().enumerate() {
        let error = (rows[i] - a[i]).abs().max((cols[j] - b[j]).abs());
        if error > 1e-12 {
            return Err(Error::MarginalsViolated { index: l, error });
        }
    }
    Ok(plan)
}

/// Membership diagnostics for the order-constrained transport polytope.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MembershipReport {
    pub max_row_error: f64,
    pub max_col_error: f64,
    /// Magnitude of the most negative entry (0 when the plan is non-negative).
    pub negativity: f64,
    /// Largest amount by which an order constraint is violated.
    pub order_violation: f64,
}

impl MembershipReport {
    pub fn max_violation(&self) -> f64 {
        self.max_row_error
            .max(self.max_col_error)
            .max(self.negativity)
            .max(self.order_violation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

/// Measures how far `x` is from `U(a, b)` intersected with the order cone.
pub fn check_membership(problem: &Problem, oc: &OrderedVariates, x: &Matrix) -> Result<MembershipReport> {
    x.check_shape(problem.rows(), problem.cols())?;
    let max_err = |got: Vec<f64>, want: &[f64]| {
        got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max)
    };
    let negativity = (-x.min()).max(0.0);
    let mut order_violation = 0.0_f64;
    if let Some(&(i1, j1)) = oc.pairs().first() {
        let bottom = x[(i1, j1)];
        let n = x.cols();
        for f in oc.complement(x.rows(), n) {
            order_violation = order_violation.max(x.as_slice()[f] - bottom);
        }
        for w in oc.pairs().windows(2) {
            order_violation = order_violation.max(x[w[0]] - x[w[1]]);
        }
    }
    Ok(MembershipReport {
        max_row_error: max_err(x.row_sums(), problem.a()),
        max_col_error: max_err(x.col_sums(), problem.b()),
        negativity,
        order_violation: order_violation.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym2() -> Problem {
        Problem::new(vec![0.5, 0.5], vec![0.5, 0.5], Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap())
            .unwrap()
    }

    fn uniform(m: usize, n: usize) -> Problem {
        Problem::new(vec![1.0 / m as f64; m], vec![1.0 / n as f64; n], Matrix::filled(m, n, 1.0)).unwrap()
    }

    #[test]
    fn validation_errors() {
        let d = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(Problem::new(vec![0.5, 0.5], vec![0.5, 0.5], d.clone()).is_ok());
        assert!(matches!(
            Problem::new(vec![0.7, 0.2], vec![0.5, 0.5], d.clone()),
            Err(Error::NotNormalized { what: "a", .. })
        ));
        let neg = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            Problem::new(vec![0.5, 0.5], vec![0.5, 0.5], neg),
            Err(Error::NegativeEntry { what: "D", .. })
        ));
        let nan = Matrix::from_rows(&[[0.0, f64::NAN], [1.0, 0.0]]).unwrap();
        assert!(matches!(
            Problem::new(vec![0.5, 0.5], vec![0.5, 0.5], nan),
            Err(Error::NonFiniteCost { row: 0, col: 1 })
        ));
        assert!(matches!(
            Problem::new(vec![1.0], vec![0.5, 0.5], d.clone()),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(matches!(
            Problem::new(vec![0.5, -0.1, 0.6], vec![1.0], Matrix::zeros(3, 1)),
            Err(Error::NegativeEntry { what: "a", index: 1, .. })
        ));
    }

    #[test]
    fn renormalize_flag() {
        let d = Matrix::zeros(2, 2);
        let p = validate_problem(vec![0.7, 0.2], vec![1.0, 1.0], d, true).unwrap();
        assert!((p.a()[0] - 0.7 / 0.9).abs() < 1e-15);
        assert_eq!(p.b(), &[0.5, 0.5]);
        // within tolerance: left untouched
        let p = validate_problem(vec![0.5 + 1e-10, 0.5], vec![1.0], Matrix::zeros(2, 1), false).unwrap();
        assert_eq!(p.a()[0], 0.5 + 1e-10);
    }

    #[test]
    fn objective_examples() {
        let p = sym2();
        let diag = Matrix::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap();
        assert_eq!(objective(&p, &diag).unwrap(), 0.0);
        assert_eq!(objective(&p, &Matrix::filled(2, 2, 0.25)).unwrap(), 0.5);
        let ones = uniform(3, 4);
        assert!((objective(&ones, &ones.product_plan()).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(objective(&p, &Matrix::zeros(3, 2)), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn ordered_variates_bookkeeping() {
        let oc = OrderedVariates::from_ranked(vec![(0, 1), (2, 0)], 3, 3).unwrap();
        assert_eq!(oc.pairs(), &[(2, 0), (0, 1)]);
        assert_eq!(oc.ranked(), vec![(0, 1), (2, 0)]);
        assert!(oc.rows_cols_distinct());
        assert_eq!(oc.complement(3, 3).len(), 7);

        let rep = OrderedVariates::new(vec![(0, 1), (0, 2)], 3, 3).unwrap();
        assert!(!rep.rows_cols_distinct());
        assert!(matches!(
            OrderedVariates::new(vec![(0, 1), (0, 1)], 3, 3),
            Err(Error::DuplicateVariate { .. })
        ));
        assert!(matches!(
            OrderedVariates::new(vec![(3, 0)], 3, 3),
            Err(Error::VariateOutOfRange { .. })
        ));
        let child = oc.push_bottom((1, 2), 3, 3).unwrap();
        assert_eq!(child.pairs(), &[(1, 2), (2, 0), (0, 1)]);
    }

    #[test]
    fn rank_ties_row_major() {
        let values = [0.2, 0.5, 0.5, 0.1];
        let mut idx = vec![0, 1, 2, 3];
        descending_order(&values, &mut idx);
        assert_eq!(idx, vec![1, 2, 0, 3]);
        let mut again = vec![3, 2, 1, 0];
        descending_order(&values, &mut again);
        assert_eq!(idx, again);
    }

    #[test]
    fn feasible_point_examples() {
        let p = uniform(2, 2);
        let oc = OrderedVariates::new(vec![(0, 0)], 2, 2).unwrap();
        let plan = feasible_point(&p, &oc, &[0.5]).unwrap();
        assert_eq!(plan, Matrix::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap());

        let plan0 = feasible_point(&p, &OrderedVariates::empty(), &[]).unwrap();
        assert_eq!(plan0, p.product_plan());

        let p10 = uniform(10, 10);
        let oc10 = OrderedVariates::new(vec![(3, 7)], 10, 10).unwrap();
        let plan = feasible_point(&p10, &oc10, &[0.1]).unwrap();
        let report = check_membership(&p10, &oc10, &plan).unwrap();
        assert!(report.passes(1e-12), "{report:?}");
    }

    #[test]
    fn feasible_point_errors() {
        let p = uniform(3, 3);
        let oc = OrderedVariates::new(vec![(0, 0), (1, 1)], 3, 3).unwrap();
        assert!(matches!(feasible_point(&p, &oc, &[0.5, 0.2]), Err(Error::CapacityViolated { index: 0, .. })));
        // descending values violate the bottom-up ordering
        assert!(matches!(feasible_point(&p, &oc, &[1.0 / 3.0, 0.3]), Err(Error::OrderCheckFailed(_))));
        let rep = OrderedVariates::new(vec![(0, 0), (0, 1)], 3, 3).unwrap();
        assert!(matches!(feasible_point(&p, &rep, &[0.1, 0.1]), Err(Error::RepeatedIndices)));
        // tail bound a_p b_q / alpha = (1/9)/(0.9) exceeds c = 0.1
        let single = OrderedVariates::new(vec![(2, 2)], 3, 3).unwrap();
        assert!(matches!(feasible_point(&p, &single, &[0.1]), Err(Error::OrderCheckFailed(_))));
        // order check passes but the unsaturated entry breaks the marginals
        let p4 = uniform(4, 4);
        let oc4 = OrderedVariates::new(vec![(1, 2)], 4, 4).unwrap();
        assert!(matches!(feasible_point(&p4, &oc4, &[0.2]), Err(Error::MarginalsViolated { index: 0, .. })));
        // every row and column pinned: no free mass left
        let full = OrderedVariates::new(vec![(0, 2), (1, 0), (2, 1)], 3, 3).unwrap();
        let plan = feasible_point(&p, &full, &[1.0 / 3.0; 3]).unwrap();
        assert!(check_membership(&p, &full, &plan).unwrap().passes(1e-15));
    }

    #[test]
    fn membership_reports() {
        let p = uniform(2, 2);
        let oc = OrderedVariates::new(vec![(0, 0)], 2, 2).unwrap();
        let plan = feasible_point(&p, &oc, &[0.5]).unwrap();
        assert!(check_membership(&p, &oc, &plan).unwrap().passes(1e-12));

        // product plan with a non-uniform b: the variate is not at the argmax
        let q = Problem::new(vec![0.5, 0.5], vec![0.3, 0.7], Matrix::zeros(2, 2)).unwrap();
        let r = check_membership(&q, &oc, &q.product_plan()).unwrap();
        assert!((r.order_violation - 0.2).abs() < 1e-15);

        let mut bad = plan.clone();
        bad[(0, 1)] = -1e-3;
        let r = check_membership(&p, &oc, &bad).unwrap();
        assert!((r.negativity - 1e-3).abs() < 1e-18);
    }
}
