use ocot::oracle::lp_solve_oc;
use ocot::search::{branch_and_bound, NodeStatus, SearchConfig};
use ocot::{Matrix, Problem, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, side: usize) -> Problem {
    let w = |rng: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..side).map(|_| rng.gen_range(0.8..1.2)).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let a = w(rng);
    let b = w(rng);
    Problem::new(a, b, Matrix::from_fn(side, side, |_, _| rng.gen_range(0.0..1.0))).unwrap()
}

#[test]
fn pruning_preserves_top_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let solver = SolverConfig::default();
    for case in 0..6 {
        let p = random_problem(&mut rng, 4 + case % 2);
        let on = SearchConfig { k1: 10_000, k2: 3, k3: 2, tau1: 1.0, tau2: 1.0, ..Default::default() };
        let off = SearchConfig { pruning: false, ..on };
        let a = branch_and_bound(&p, &on, &solver).unwrap();
        let b = branch_and_bound(&p, &off, &solver).unwrap();
        let pruned = a.nodes.iter().filter(|n| n.status == NodeStatus::PrunedBound).count();
        eprintln!("case {case}: nodes {} / {}, solves {} / {}, pruned {pruned}", a.nodes.len(), b.nodes.len(), a.solves, b.solves);
        assert_eq!(a.candidates.len(), b.candidates.len());
        for (x, y) in a.candidates.iter().zip(&b.candidates) {
            assert_eq!(x.variates, y.variates);
            assert!((x.objective - y.objective).abs() <= 1e-6);
        }
    }
}

#[test]
fn pruned_nodes_are_no_better_than_kept_plans() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_problem(&mut rng, 4);
    let cfg = SearchConfig { k1: 10_000, k2: 2, k3: 2, tau1: 1.0, tau2: 1.0, ..Default::default() };
    let res = branch_and_bound(&p, &cfg, &SolverConfig::default()).unwrap();
    let worst_kept = res.candidates.last().unwrap().objective;
    for node in res.nodes.iter().filter(|n| n.status == NodeStatus::PrunedBound) {
        let (opt, _) = lp_solve_oc(&p, &node.variates).unwrap();
        assert!(opt >= worst_kept - 1e-3, "pruned node {} has optimum {opt} < {worst_kept}", node.id);
    }
}
