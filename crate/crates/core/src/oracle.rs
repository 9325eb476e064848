//! Slow reference implementations: a dense simplex LP solver, an alternating
//! projection onto the order cone, and a KKT checker for cone projections.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{OrderedVariates, Problem};

/// Largest side length accepted by [`lp_solve_oc`].
pub const LP_SIZE_LIMIT: usize = 8;

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

/// `min c.x` subject to `a_eq x = b_eq`, `a_ub x <= b_ub`, `x >= 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    width: usize,
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            let f = row[c];
            if i != r && f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = cost[bv];
            if cb != 0.0 {
                for (v, tv) in self.obj.iter_mut().zip(&self.t[i]) {
                    *v -= cb * tv;
                }
            }
        }
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving basic variable.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..allowed).find(|&j| self.obj[j] < -PIVOT_EPS) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[self.width] / row[c];
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => {
                            ratio < br - 1e-14 || (ratio <= br + 1e-14 && self.basis[i] < bb)
                        }
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = best else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(r, c);
        }
        Err(Error::MaxIterations(MAX_PIVOTS))
    }
}

/// Two-phase dense simplex with Bland's anti-cycling rule.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    let nv = lp.c.len();
    let n_ub = lp.a_ub.len();
    let rows: Vec<(&Vec<f64>, f64, Option<usize>)> = lp
        .a_eq
        .iter()
        .zip(&lp.b_eq)
        .map(|(r, &b)| (r, b, None))
        .chain(lp.a_ub.iter().zip(&lp.b_ub).enumerate().map(|(s, (r, &b))| (r, b, Some(s))))
        .collect();
    for (r, _, _) in &rows {
        if r.len() != nv {
            return Err(Error::ShapeMismatch { expected: format!("{nv} coefficients"), found: format!("{}", r.len()) });
        }
    }

    // Rows whose slack enters with +1 after sign normalization start with the
    // slack basic; every other row gets an artificial.
    let needs_art: Vec<bool> = rows.iter().map(|&(_, b, s)| s.is_none() || b < 0.0).collect();
    let n_art = needs_art.iter().filter(|&&x| x).count();
    let art0 = nv + n_ub;
    let width = art0 + n_art;
    let mut t = Vec::with_capacity(rows.len());
    let mut basis = Vec::with_capacity(rows.len());
    let mut next_art = art0;
    for (i, &(coef, b, slack)) in rows.iter().enumerate() {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for (v, c) in row.iter_mut().zip(coef.iter()) {
            *v = sign * c;
        }
        if let Some(s) = slack {
            row[nv + s] = sign;
        }
        row[width] = sign * b;
        if needs_art[i] {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(nv + slack.unwrap());
        }
        t.push(row);
    }
    let mut tab = Tableau { width, t, obj: Vec::new(), basis };

    if n_art > 0 {
        let mut phase1 = vec![0.0; width];
        phase1[art0..].iter_mut().for_each(|v| *v = 1.0);
        tab.set_objective(&phase1);
        tab.optimize(width)?;
        let infeas = -tab.obj[width];
        let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return Err(Error::LpInfeasible);
        }
        // Drive zero-level artificials out of the basis where possible;
        // rows that cannot be pivoted are redundant and stay inert.
        for r in 0..tab.basis.len() {
            if tab.basis[r] >= art0 {
                if let Some(c) = (0..art0).find(|&j| tab.t[r][j].abs() > 1e-9) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    let mut cost = lp.c.clone();
    cost.resize(width, 0.0);
    tab.set_objective(&cost);
    tab.optimize(art0)?;

    let mut x = vec![0.0; nv];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < nv {
            x[bv] = tab.t[r][width];
        }
    }
    let objective = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { objective, x })
}

/// The order-constrained transport LP over the explicit inequality list.
pub fn oc_linear_program(problem: &Problem, oc: &OrderedVariates) -> LinearProgram {
    let (m, n) = (problem.rows(), problem.cols());
    let nv = m * n;
    let mut lp = LinearProgram { c: problem.cost().as_slice().to_vec(), ..Default::default() };
    for i in 0..m {
        let mut row = vec![0.0; nv];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 1.0);
        lp.a_eq.push(row);
        lp.b_eq.push(problem.a()[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; nv];
        (0..m).for_each(|i| row[i * n + j] = 1.0);
        lp.a_eq.push(row);
        lp.b_eq.push(problem.b()[j]);
    }
    let flat = |(i, j): (usize, usize)| i * n + j;
    let mut le = |lo: usize, hi: usize| {
        let mut row = vec![0.0; nv];
        row[lo] = 1.0;
        row[hi] = -1.0;
        lp.a_ub.push(row);
        lp.b_ub.push(0.0);
    };
    if let Some(&bottom) = oc.pairs().first() {
        for f in oc.complement(m, n) {
            le(f, flat(bottom));
        }
        for w in oc.pairs().windows(2) {
            le(flat(w[0]), flat(w[1]));
        }
    }
    lp
}

/// Exact optimum and an optimal vertex of the order-constrained transport LP.
pub fn lp_solve_oc(problem: &Problem, oc: &OrderedVariates) -> Result<(f64, Matrix)> {
    let (m, n) = (problem.rows(), problem.cols());
    if m > LP_SIZE_LIMIT || n > LP_SIZE_LIMIT {
        return Err(Error::TooLarge { rows: m, cols: n, limit: LP_SIZE_LIMIT });
    }
    let sol = lp_solve(&oc_linear_program(problem, oc))?;
    Ok((sol.objective, Matrix::new(m, n, sol.x)?))
}

/// Projects onto the order cone by Dykstra's alternating projections over the
/// explicit halfspaces and the non-negative orthant.
pub fn pgd_project(x: &Matrix, oc: &OrderedVariates, tol: f64) -> Result<Matrix> {
    const MAX_CYCLES: usize = 2_000_000;
    let n = x.cols();
    let mut y = x.as_slice().to_vec();
    let flat = |(i, j): (usize, usize)| i * n + j;
    let mut halfspaces: Vec<(usize, usize)> = Vec::new();
    if let Some(&bottom) = oc.pairs().first() {
        halfspaces.extend(oc.complement(x.rows(), n).into_iter().map(|f| (f, flat(bottom))));
        halfspaces.extend(oc.pairs().windows(2).map(|w| (flat(w[0]), flat(w[1]))));
    }
    // Corrections: a scalar along e_lo - e_hi per halfspace, a full vector for the orthant.
    let mut corr = vec![0.0; halfspaces.len()];
    let mut orth = vec![0.0; y.len()];
    for _ in 0..MAX_CYCLES {
        let before = y.clone();
        for (h, &(lo, hi)) in halfspaces.iter().enumerate() {
            let (ylo, yhi) = (y[lo] + corr[h], y[hi] - corr[h]);
            let s = if ylo > yhi { 0.5 * (ylo - yhi) } else { 0.0 };
            y[lo] = ylo - s;
            y[hi] = yhi + s;
            corr[h] = s;
        }
        for (v, o) in y.iter_mut().zip(orth.iter_mut()) {
            let shifted = *v + *o;
            *v = shifted.max(0.0);
            *o = shifted - *v;
        }
        let change = y.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change <= tol {
            return Matrix::new(x.rows(), n, y);
        }
    }
    Err(Error::MaxIterations(MAX_CYCLES))
}

/// Largest violation per family of optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub dual_sign: f64,
    pub complementary_slackness: f64,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.stationarity.max(self.primal_feasibility).max(self.dual_sign).max(self.complementary_slackness)
    }
}

/// Checks that `y` is the projection of `x` onto the order cone by
/// reconstructing multipliers from stationarity. `tol` decides which
/// constraints count as active.
pub fn kkt_verify(x: &Matrix, y: &Matrix, oc: &OrderedVariates, tol: f64) -> Result<KktReport> {
    y.check_shape(x.rows(), x.cols())?;
    let mut rep = KktReport::default();
    let (xs, ys) = (x.as_slice(), y.as_slice());
    rep.primal_feasibility = (-y.min()).max(0.0);
    let Some(&bottom) = oc.pairs().first() else {
        // orthant only: d = delta >= 0, supported where y = 0
        for (&xv, &yv) in xs.iter().zip(ys) {
            let d = yv - xv;
            rep.dual_sign = rep.dual_sign.max(-d);
            if yv > tol {
                rep.stationarity = rep.stationarity.max(d.abs());
            }
            rep.complementary_slackness = rep.complementary_slackness.max((d.max(0.0) * yv).abs());
        }
        return Ok(rep);
    };
    let n = x.cols();
    let flat = |(i, j): (usize, usize)| i * n + j;
    let y1 = ys[flat(bottom)];

    let mut lambda_sum = 0.0;
    for f in oc.complement(x.rows(), n) {
        let d = ys[f] - xs[f];
        let gap = y1 - ys[f];
        rep.primal_feasibility = rep.primal_feasibility.max(-gap);
        if d < 0.0 {
            if gap.abs() <= tol {
                lambda_sum += -d;
                rep.complementary_slackness = rep.complementary_slackness.max((d * gap).abs());
            } else {
                rep.stationarity = rep.stationarity.max(-d);
            }
        } else if d > 0.0 && ys[f] > tol {
            rep.stationarity = rep.stationarity.max(d);
        }
    }

    let pairs = oc.pairs();
    let k = pairs.len();
    let mut eta = 0.0;
    for l in (1..k).rev() {
        let (yl, xl) = (ys[flat(pairs[l])], xs[flat(pairs[l])]);
        eta += yl - xl;
        let gap = yl - ys[flat(pairs[l - 1])];
        rep.primal_feasibility = rep.primal_feasibility.max(-gap);
        rep.dual_sign = rep.dual_sign.max(-eta);
        rep.complementary_slackness = rep.complementary_slackness.max((eta * gap).abs());
    }
    let delta = y1 - xs[flat(bottom)] + eta - lambda_sum;
    if y1 > tol {
        rep.stationarity = rep.stationarity.max(delta.abs());
    } else {
        rep.dual_sign = rep.dual_sign.max(-delta);
        rep.complementary_slackness = rep.complementary_slackness.max((delta * y1).abs());
    }
    Ok(rep)
}
