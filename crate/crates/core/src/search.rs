//! Saturation statistics and the best-first branch-and-bound over order
//! constraints that collects a diverse set of low-cost plans.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use crate::admm::{solve_plan, SolverConfig, TransportPlan};
use crate::baseline::{solve_entropic, EntropicConfig};
use crate::bounds::lower_bound;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::problem::{OrderedVariates, Problem, Variate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub tau1: f64,
    pub tau2: f64,
    /// Budget of constrained solves.
    pub k1: usize,
    /// Number of plans kept.
    pub k2: usize,
    /// Maximum number of constrained variates per node.
    pub k3: usize,
    /// Keep only the least saturated candidate variate per expansion.
    pub greedy: bool,
    /// Skip solves and expansions that cannot reach the top plans.
    pub pruning: bool,
    pub entropic: EntropicConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            tau1: 0.5,
            tau2: 0.5,
            k1: 20,
            k2: 5,
            k3: 2,
            greedy: false,
            pruning: true,
            entropic: EntropicConfig::default(),
        }
    }
}

impl SearchConfig {
    /// Thresholds suited to palette transfer, where neighbours tend to be saturated.
    pub fn color_preset() -> Self {
        SearchConfig { tau1: 0.5, tau2: 1.0, ..Default::default() }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.tau1) || !unit.contains(&self.tau2) {
            return Err(Error::InvalidConfig(format!(
                "thresholds must lie in [0, 1], got ({}, {})",
                self.tau1, self.tau2
            )));
        }
        if self.k2 == 0 || self.k1 < self.k2 {
            return Err(Error::InvalidConfig(format!("need k1 >= k2 >= 1, got k1={} k2={}", self.k1, self.k2)));
        }
        let side = problem.rows().min(problem.cols());
        if self.k3 == 0 || self.k3 > side {
            return Err(Error::InvalidConfig(format!("need 1 <= k3 <= {side}, got {}", self.k3)));
        }
        Ok(())
    }
}

/// Normalized plan mass and the neighbourhood statistics derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Saturation {
    /// Entry mass over `min(a_i, b_j)`; 1 where that minimum is zero.
    pub phi: Matrix,
    /// Largest saturation among the other entries of the same row.
    pub phi_row: Matrix,
    /// Largest saturation among the other entries of the same column.
    pub phi_col: Matrix,
    /// `min(phi_row, phi_col)`.
    pub big_phi: Matrix,
}

fn max_excluding(values: impl Iterator<Item = f64> + Clone) -> impl Fn(usize) -> f64 {
    // top two values with the index of the first, so each exclusion is O(1)
    let (mut best, mut arg, mut second) = (f64::NEG_INFINITY, usize::MAX, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best {
            second = best;
            best = v;
            arg = i;
        } else if v > second {
            second = v;
        }
    }
    move |i| {
        let m = if i == arg { second } else { best };
        if m == f64::NEG_INFINITY {
            0.0
        } else {
            m
        }
    }
}

pub fn saturation(problem: &Problem, plan: &Matrix) -> Result<Saturation> {
    let (m, n) = (problem.rows(), problem.cols());
    plan.check_shape(m, n)?;
    let (a, b) = (problem.a(), problem.b());
    let phi = Matrix::from_fn(m, n, |i, j| {
        let cap = a[i].min(b[j]);
        if cap > 0.0 {
            plan[(i, j)] / cap
        } else {
            1.0
        }
    });
    let mut phi_row = Matrix::zeros(m, n);
    for i in 0..m {
        let f = max_excluding(phi.row(i).iter().copied());
        for j in 0..n {
            phi_row[(i, j)] = f(j);
        }
    }
    let mut phi_col = Matrix::zeros(m, n);
    for j in 0..n {
        let f = max_excluding((0..m).map(|i| phi[(i, j)]));
        for i in 0..m {
            phi_col[(i, j)] = f(i);
        }
    }
    let big_phi = Matrix::from_fn(m, n, |i, j| phi_row[(i, j)].min(phi_col[(i, j)]));
    Ok(Saturation { phi, phi_row, phi_col, big_phi })
}

fn select(sat: &Saturation, tau1: f64, tau2: f64, greedy: bool, allowed: impl Fn(Variate) -> bool) -> Vec<(Variate, f64)> {
    let (m, n) = sat.phi.shape();
    let mut out: Vec<(Variate, f64)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&v| sat.phi[v] <= tau1 && sat.big_phi[v] <= tau2 && allowed(v))
        .map(|v| (v, sat.big_phi[v]))
        .collect();
    if greedy {
        // first minimum in row-major order
        let best = out.iter().copied().reduce(|p, q| if q.1 < p.1 { q } else { p });
        out = best.into_iter().collect();
    }
    out
}

/// Variates with low self and neighbourhood saturation, row-major, with their
/// neighbourhood statistic.
pub fn candidate_variates(problem: &Problem, plan: &Matrix, cfg: &SearchConfig) -> Result<Vec<(Variate, f64)>> {
    let sat = saturation(problem, plan)?;
    Ok(select(&sat, cfg.tau1, cfg.tau2, cfg.greedy, |_| true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Solved,
    PrunedBound,
    Pending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expansion {
    /// Children pushed onto the queue.
    Expanded(usize),
    SkippedDepth,
    /// The node's plan was no better than the current k2-th plan.
    SkippedParentCost,
    /// Never reached: pending or pruned before solving.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub variates: OrderedVariates,
    /// Neighbourhood saturation of the newest variate (0 for the root).
    pub phi: f64,
    pub bound: Option<f64>,
    pub objective: Option<f64>,
    pub status: NodeStatus,
    pub expansion: Expansion,
    /// Position in the pop sequence.
    pub visit: Option<usize>,
}

impl SearchNode {
    pub fn depth(&self) -> usize {
        self.variates.len()
    }

    /// The most recently added variate.
    pub fn newest(&self) -> Option<Variate> {
        self.variates.pairs().first().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub node: usize,
    pub variates: OrderedVariates,
    pub objective: f64,
    pub plan: TransportPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Best plans, cheapest first.
    pub candidates: Vec<Candidate>,
    /// Every node created, indexed by id; the root is node 0.
    pub nodes: Vec<SearchNode>,
    /// Ids of the top candidates and all their ancestors, ascending.
    pub subtree: Vec<usize>,
    pub solves: usize,
}

impl SearchResult {
    /// Rank (0 = best) of a node among the returned candidates.
    pub fn rank_of(&self, node: usize) -> Option<usize> {
        self.candidates.iter().position(|c| c.node == node)
    }
}

struct Queued {
    phi: f64,
    seq: Vec<Variate>,
    id: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // reversed so the max-heap pops the smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        other.phi.total_cmp(&self.phi).then_with(|| other.seq.cmp(&self.seq))
    }
}

fn candidate_order(p: &Candidate, q: &Candidate) -> Ordering {
    p.objective.total_cmp(&q.objective).then_with(|| p.variates.pairs().cmp(q.variates.pairs()))
}

struct TopK {
    k: usize,
    items: Vec<Candidate>,
}

impl TopK {
    fn threshold(&self) -> Option<f64> {
        (self.items.len() >= self.k).then(|| self.items[self.k - 1].objective)
    }

    fn offer(&mut self, c: Candidate) {
        let pos = self.items.partition_point(|x| candidate_order(x, &c) == Ordering::Less);
        if pos < self.k {
            self.items.insert(pos, c);
            self.items.truncate(self.k);
        }
    }
}

/// Best-first search over nested order constraints.
///
/// The unconstrained plan is the root and first candidate. Nodes are seeded
/// from the low-saturation variates of an entropic base plan and popped in
/// ascending saturation order. A popped node is solved unless its lower bound
/// already reaches the k2-th best objective, and it spawns children (its
/// variates extended by one new bottom variate on an unused row and column)
/// from its own plan when that plan beats the k2-th best objective.
pub fn branch_and_bound(problem: &Problem, cfg: &SearchConfig, solver: &SolverConfig) -> Result<SearchResult> {
    cfg.validate(problem)?;
    solver.validate()?;
    let (m, n) = (problem.rows(), problem.cols());

    let root_plan = solve_plan(problem, &OrderedVariates::empty(), solver)?;
    let mut nodes = vec![SearchNode {
        id: 0,
        parent: None,
        variates: OrderedVariates::empty(),
        phi: 0.0,
        bound: None,
        objective: Some(root_plan.objective),
        status: NodeStatus::Solved,
        expansion: Expansion::None,
        visit: Some(0),
    }];
    let mut top = TopK { k: cfg.k2, items: Vec::new() };
    top.offer(Candidate {
        node: 0,
        variates: OrderedVariates::empty(),
        objective: root_plan.objective,
        plan: root_plan,
    });

    let mut heap = BinaryHeap::new();
    let base = solve_entropic(problem, &cfg.entropic)?;
    let seeds = select(&saturation(problem, &base)?, cfg.tau1, cfg.tau2, cfg.greedy, |_| true);
    nodes[0].expansion = Expansion::Expanded(seeds.len());
    for (v, phi) in seeds {
        let variates = OrderedVariates::new(vec![v], m, n)?;
        push_node(&mut nodes, &mut heap, Some(0), variates, phi);
    }

    let mut solves = 0;
    let mut visits = 1;
    while solves < cfg.k1 {
        let Some(entry) = heap.pop() else { break };
        let id = entry.id;
        nodes[id].visit = Some(visits);
        visits += 1;
        let variates = nodes[id].variates.clone();

        let threshold = top.threshold();
        let mut solved_plan = None;
        let skip = if cfg.pruning {
            let bound = lower_bound(problem, &variates)?;
            nodes[id].bound = Some(bound);
            threshold.is_some_and(|f| bound >= f)
        } else {
            false
        };
        if skip {
            nodes[id].status = NodeStatus::PrunedBound;
        } else {
            let plan = solve_plan(problem, &variates, solver)?;
            solves += 1;
            nodes[id].status = NodeStatus::Solved;
            nodes[id].objective = Some(plan.objective);
            top.offer(Candidate { node: id, variates: variates.clone(), objective: plan.objective, plan: plan.clone() });
            solved_plan = Some(plan);
        }

        if variates.len() >= cfg.k3 {
            nodes[id].expansion = Expansion::SkippedDepth;
            continue;
        }
        let Some(plan) = solved_plan else { continue };
        let threshold = top.threshold();
        if cfg.pruning && threshold.is_some_and(|f| plan.objective >= f) {
            nodes[id].expansion = Expansion::SkippedParentCost;
            continue;
        }
        let sat = saturation(problem, &plan.x)?;
        let children = select(&sat, cfg.tau1, cfg.tau2, cfg.greedy, |(i, j)| {
            !variates.uses_row(i) && !variates.uses_col(j)
        });
        nodes[id].expansion = Expansion::Expanded(children.len());
        for (v, phi) in children {
            let child = variates.push_bottom(v, m, n)?;
            push_node(&mut nodes, &mut heap, Some(id), child, phi);
        }
    }

    let mut keep = BTreeSet::new();
    for c in &top.items {
        let mut cur = Some(c.node);
        while let Some(id) = cur {
            if !keep.insert(id) {
                break;
            }
            cur = nodes[id].parent;
        }
    }
    Ok(SearchResult { candidates: top.items, nodes, subtree: keep.into_iter().collect(), solves })
}

fn push_node(
    nodes: &mut Vec<SearchNode>,
    heap: &mut BinaryHeap<Queued>,
    parent: Option<usize>,
    variates: OrderedVariates,
    phi: f64,
) {
    let id = nodes.len();
    heap.push(Queued { phi, seq: variates.pairs().to_vec(), id });
    nodes.push(SearchNode {
        id,
        parent,
        variates,
        phi,
        bound: None,
        objective: None,
        status: NodeStatus::Pending,
        expansion: Expansion::None,
        visit: None,
    });
}
