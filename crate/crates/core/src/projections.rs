//! Exact Euclidean projections onto the marginal set and the order cone.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{rank_cmp, OrderedVariates, Problem};

/// Marginal masses may differ by at most this much.
const MASS_TOL: f64 = 1e-9;

/// Projects `x` onto the affine set of matrices with row sums `a` and column
/// sums `b` (entries unconstrained in sign). Runs in O(mn).
pub fn project_c1(problem: &Problem, x: &Matrix) -> Result<Matrix> {
    project_marginals(problem.a(), problem.b(), x)
}

/// [`project_c1`] for raw marginal vectors.
pub fn project_marginals(a: &[f64], b: &[f64], x: &Matrix) -> Result<Matrix> {
    let (m, n) = (a.len(), b.len());
    x.check_shape(m, n)?;
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if (sa - sb).abs() > MASS_TOL * sa.abs().max(sb.abs()).max(1.0) {
        return Err(Error::UnequalMass { a: sa, b: sb });
    }
    let mut out = x.clone();
    project_marginals_into(a, b, &mut out);
    Ok(out)
}

/// In-place projection; shapes and masses are the caller's responsibility.
pub(crate) fn project_marginals_into(a: &[f64], b: &[f64], x: &mut Matrix) {
    let (m, n) = (a.len(), b.len());
    let (mf, nf) = (m as f64, n as f64);
    let r: Vec<f64> = x.row_sums().iter().zip(a).map(|(s, ai)| ai - s).collect();
    let c: Vec<f64> = x.col_sums().iter().zip(b).map(|(s, bj)| bj - s).collect();
    let r_shift = r.iter().sum::<f64>() / (mf + nf);
    let c_shift = c.iter().sum::<f64>() / (mf + nf);
    let rc: Vec<f64> = r.iter().map(|v| (v - r_shift) / nf).collect();
    let cc: Vec<f64> = c.iter().map(|v| (v - c_shift) / mf).collect();
    let data = x.as_mut_slice();
    for i in 0..m {
        let row = &mut data[i * n..(i + 1) * n];
        for (v, cj) in row.iter_mut().zip(&cc) {
            *v += rc[i] + cj;
        }
    }
}

/// Sorted view of the free entries together with the bottom constrained entry,
/// answering threshold queries in O(log) time.
///
/// With `tail` the free values sorted descending and `S_s` the sum of the
/// first `s` of them, the pooled average at shift `eta` is
/// `tau(s, eta) = (x_top - eta + S_s) / (s + 1)`.
#[derive(Debug, Clone)]
pub struct ThresholdEvaluator {
    x_top: f64,
    tail: Vec<f64>,
    order: Vec<usize>,
    prefix: Vec<f64>,
    // knots[s]: smallest eta at which tail entry s joins the pooled block.
    knots: Vec<f64>,
}

impl ThresholdEvaluator {
    /// `values` are the free entries; their positions in the slice act as the
    /// tie-breaking index.
    pub fn new(x_top: f64, values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_unstable_by(|&p, &q| rank_cmp(values[p], p, values[q], q));
        Self::from_sorted(x_top, order.iter().map(|&p| values[p]).collect(), order)
    }

    /// Builds from a plan and its constraints. `order` entries are flat
    /// row-major indices into `x`.
    pub fn from_matrix(x: &Matrix, oc: &OrderedVariates) -> Result<Self> {
        let &bottom = oc.pairs().first().ok_or(Error::EmptyConstraints)?;
        let data = x.as_slice();
        let mut keyed: Vec<(f64, usize)> =
            oc.complement(x.rows(), x.cols()).into_iter().map(|f| (data[f], f)).collect();
        keyed.sort_unstable_by(|p, q| rank_cmp(p.0, p.1, q.0, q.1));
        let (tail, order) = keyed.into_iter().unzip();
        Ok(Self::from_sorted(x[bottom], tail, order))
    }

    fn from_sorted(x_top: f64, tail: Vec<f64>, order: Vec<usize>) -> Self {
        let mut prefix = Vec::with_capacity(tail.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in &tail {
            acc += v;
            prefix.push(acc);
        }
        let mut knots = Vec::with_capacity(tail.len());
        if let Some(&first) = tail.first() {
            let mut k = x_top - first;
            knots.push(k);
            for s in 1..tail.len() {
                k += (s as f64 + 1.0) * (tail[s - 1] - tail[s]);
                knots.push(k);
            }
        }
        ThresholdEvaluator { x_top, tail, order, prefix, knots }
    }

    #[inline]
    pub fn x_top(&self) -> f64 {
        self.x_top
    }

    /// Free values, descending.
    #[inline]
    pub fn sorted_tail(&self) -> &[f64] {
        &self.tail
    }

    /// `prefix_sums()[s]` is the sum of the `s` largest free values.
    #[inline]
    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix
    }

    /// Values of `eta` where the pooled block size changes.
    #[inline]
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots
    }

    #[inline]
    pub fn tau(&self, s: usize, eta: f64) -> f64 {
        (self.x_top - eta + self.prefix[s]) / (s as f64 + 1.0)
    }

    /// Number of free entries pooled with the bottom constrained entry at `eta`.
    #[inline]
    pub fn pooled(&self, eta: f64) -> usize {
        self.knots.partition_point(|&k| k <= eta)
    }

    /// Returns `(T(eta), t(eta))`: the clamped pooled value and the pool size.
    pub fn threshold(&self, eta: f64) -> (f64, usize) {
        let t = self.pooled(eta);
        (self.tau(t, eta).max(0.0), t)
    }

    #[inline]
    pub fn value(&self, eta: f64) -> f64 {
        self.threshold(eta).0
    }
}

/// Finds `eta >= 0` with `T(eta) = delta + eta / (q - 1)`.
///
/// `q` counts the constrained entries of the merged bottom block, the bottom
/// entry included, so `q >= 2`. The left side is non-increasing and the right
/// side strictly increasing, so the root is unique when it exists.
pub fn solve_eta(ev: &ThresholdEvaluator, q: usize, delta: f64) -> Result<f64> {
    if q < 2 {
        return Err(Error::NoZero(format!("block size {q} < 2")));
    }
    let w = (q - 1) as f64;
    let g = |eta: f64| ev.value(eta) - delta - eta / w;
    let scale = 1.0 + ev.x_top.abs() + delta.abs() + ev.tail.first().map_or(0.0, |v| v.abs());
    let g0 = g(0.0);
    if g0 <= 0.0 {
        if g0 >= -1e-12 * scale {
            return Ok(0.0);
        }
        return Err(Error::NoZero(format!("g(0) = {g0:e} < 0")));
    }

    // Last positive knot with g >= 0 bounds the piece holding the root.
    let first_pos = ev.knots.partition_point(|&k| k <= 0.0);
    let pos = &ev.knots[first_pos..];
    let idx = pos.partition_point(|&k| g(k) >= 0.0);
    let lo = if idx == 0 { 0.0 } else { pos[idx - 1] };
    let hi = pos.get(idx).copied();

    let t = ev.pooled(lo);
    let tf = t as f64 + 1.0;
    let linear = (ev.x_top + ev.prefix[t] - tf * delta) / (1.0 + tf / w);
    let clamped = -w * delta;
    let in_piece = |eta: f64| eta >= lo && hi.map_or(true, |h| eta <= h);
    for cand in [linear, clamped] {
        if cand.is_finite() && in_piece(cand) && g(cand).abs() <= 1e-12 * scale {
            return Ok(cand.max(0.0));
        }
    }

    let (mut a, mut b) = (lo, hi.unwrap_or(lo.max(1.0)));
    while g(b) > 0.0 {
        b = 2.0 * b + 1.0;
        if !b.is_finite() {
            return Err(Error::NoZero("upper bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if g(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Block structure produced by the order-cone projection. Indices refer to the
/// bottom-up position of constrained pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    pub le: Vec<usize>,
    pub ri: Vec<usize>,
    pub val: Vec<f64>,
    pub eta_tilde: f64,
}

impl BlockPartition {
    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.val.is_empty()
    }

    /// Projected value of the constrained pair at bottom-up position `l`.
    pub fn value_at(&self, l: usize) -> f64 {
        let b = self.ri.partition_point(|&r| r < l);
        self.val[b]
    }
}

/// Projects `x` onto the order cone of `oc` (requires at least one constraint).
pub fn project_c2_epava(x: &Matrix, oc: &OrderedVariates) -> Result<Matrix> {
    epava(x, oc).map(|(out, _)| out)
}

/// [`project_c2_epava`] returning the block partition as well.
pub fn epava(x: &Matrix, oc: &OrderedVariates) -> Result<(Matrix, BlockPartition)> {
    let pairs = oc.pairs();
    if pairs.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= x.rows() || j >= x.cols()) {
        return Err(Error::VariateOutOfRange { row: i, col: j, rows: x.rows(), cols: x.cols() });
    }
    let ev = ThresholdEvaluator::from_matrix(x, oc)?;
    let k = pairs.len();
    let xs: Vec<f64> = pairs.iter().map(|&p| x[p]).collect();
    let mut cum = vec![0.0; k + 1];
    for l in 0..k {
        cum[l + 1] = cum[l] + xs[l];
    }
    let mean = |lo: usize, hi: usize| (cum[hi + 1] - cum[lo]) / (hi + 1 - lo) as f64;

    let mut bp = BlockPartition { le: vec![0], ri: vec![0], val: vec![ev.value(0.0)], eta_tilde: 0.0 };
    for l in 1..k {
        bp.le.push(l);
        bp.ri.push(l);
        bp.val.push(xs[l]);
        while bp.val.len() >= 2 && bp.val[bp.val.len() - 1] <= bp.val[bp.val.len() - 2] {
            let nb = bp.val.len();
            let q = bp.ri[nb - 1];
            if nb == 2 {
                bp.eta_tilde = solve_eta(&ev, q + 1, mean(1, q))?;
                bp.val[0] = ev.value(bp.eta_tilde);
            } else {
                bp.val[nb - 2] = mean(bp.le[nb - 2], q);
            }
            bp.ri[nb - 2] = q;
            bp.le.pop();
            bp.ri.pop();
            bp.val.pop();
        }
    }

    let mut out = x.map(|v| v.max(0.0));
    let (top, t) = ev.threshold(bp.eta_tilde);
    let data = out.as_mut_slice();
    for &f in &ev.order[..t] {
        data[f] = top;
    }
    let mut b = 0;
    for (l, &p) in pairs.iter().enumerate() {
        while bp.ri[b] < l {
            b += 1;
        }
        out[p] = bp.val[b];
    }
    Ok((out, bp))
}

/// Projects onto the order cone, or onto the non-negative orthant when `oc` is empty.
pub fn project_c2(x: &Matrix, oc: &OrderedVariates) -> Result<Matrix> {
    if oc.is_empty() {
        Ok(x.map(|v| v.max(0.0)))
    } else {
        project_c2_epava(x, oc)
    }
}
