//! Acceptance suite. Runs every criterion in sequence (timings stay
//! uncontended) and prints one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use ocot::admm::solve_plan;
use ocot::bounds::{lower_bound, packing};
use ocot::oracle::{kkt_verify, lp_solve, lp_solve_oc, pgd_project, LinearProgram};
use ocot::projections::{project_c1, project_c2_epava};
use ocot::search::{branch_and_bound, SearchConfig};
use ocot::{check_membership, feasible_point, Error, Matrix, OrderedVariates, Problem, SolverConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn near_uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.8..1.2)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Problem {
    let a = near_uniform(rng, m);
    let b = near_uniform(rng, n);
    Problem::new(a, b, Matrix::from_fn(m, n, |_, _| rng.gen_range(0.0..1.0))).unwrap()
}

fn distinct_pairs(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> OrderedVariates {
    let mut rows: Vec<usize> = (0..m).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    OrderedVariates::new(rows.into_iter().zip(cols).take(k).collect(), m, n).unwrap()
}

fn solver_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = SolverConfig::default();
    let ks = [0, 1, 2, 4];
    let mut gaps = Vec::with_capacity(100);
    let mut resampled = 0;
    while gaps.len() < 100 {
        let k = ks[gaps.len() % 4];
        let m = rng.gen_range(k.max(2)..=8);
        let n = rng.gen_range(k.max(2)..=8);
        let p = random_problem(&mut rng, m, n);
        let oc = distinct_pairs(&mut rng, m, n, k);
        let Ok((opt, _)) = lp_solve_oc(&p, &oc) else {
            resampled += 1;
            continue;
        };
        let plan = solve_plan(&p, &oc, &cfg).unwrap();
        gaps.push((plan.objective - opt).abs() / opt.abs().max(1e-12));
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let max = gaps.iter().copied().fold(0.0, f64::max);
    outcome(
        mean <= 0.01 && max <= 0.03,
        format!("mean gap {:.4}%, max gap {:.4}% over 100 instances ({resampled} resampled)", mean * 100.0, max * 100.0),
    )
}

fn analytic_instance() -> Outcome {
    let p = Problem::new(vec![0.5, 0.5], vec![0.5, 0.5], Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap())
        .unwrap();
    let oc = OrderedVariates::from_ranked(vec![(0, 1)], 2, 2).unwrap();
    let plan = solve_plan(&p, &oc, &SolverConfig::default()).unwrap();
    let obj_err = (plan.objective - 0.5).abs();
    let entry_err = plan.x.max_abs_diff(&Matrix::filled(2, 2, 0.25));
    outcome(
        obj_err <= 1e-3 && entry_err <= 1e-3,
        format!("objective {:.6}, max entry error {entry_err:.2e}", plan.objective),
    )
}

fn random_cone_case(rng: &mut ChaCha8Rng) -> (Matrix, OrderedVariates) {
    let m = rng.gen_range(1..=6);
    let n = rng.gen_range(1..=6);
    let x = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut cells: Vec<usize> = (0..m * n).collect();
    cells.shuffle(rng);
    let k = rng.gen_range(1..=3.min(m * n));
    let pairs = cells[..k].iter().map(|&f| (f / n, f % n)).collect();
    (x, OrderedVariates::new(pairs, m, n).unwrap())
}

fn cone_projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut dev, mut kkt) = (0.0_f64, 0.0_f64);
    for _ in 0..200 {
        let (x, oc) = random_cone_case(&mut rng);
        let y = project_c2_epava(&x, &oc).unwrap();
        dev = dev.max(y.max_abs_diff(&pgd_project(&x, &oc, 1e-13).unwrap()));
        kkt = kkt.max(kkt_verify(&x, &y, &oc, 1e-8).unwrap().max_violation());
    }
    outcome(dev <= 1e-6 && kkt <= 1e-8, format!("max deviation from Dykstra {dev:.2e}, max KKT violation {kkt:.2e}"))
}

fn pseudo_inverse_projection(a: &[f64], b: &[f64], x: &Matrix) -> Matrix {
    let (m, n) = (a.len(), b.len());
    let mut op = DMatrix::<f64>::zeros(m + n, m * n);
    for i in 0..m {
        for j in 0..n {
            op[(i, i * n + j)] = 1.0;
            op[(m + j, i * n + j)] = 1.0;
        }
    }
    let v = DVector::from_column_slice(x.as_slice());
    let target = DVector::from_iterator(m + n, a.iter().chain(b).copied());
    let gram = &op * op.transpose();
    let pinv = gram.pseudo_inverse(1e-12).unwrap();
    let y = &v - op.transpose() * (pinv * (&op * &v - target));
    Matrix::new(m, n, y.as_slice().to_vec()).unwrap()
}

fn marginal_projection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut sums, mut idem, mut kkt) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..200 {
        let m = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=6);
        let p = random_problem(&mut rng, m, n);
        let x = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let y = project_c1(&p, &x).unwrap();
        let r = check_membership(&p, &OrderedVariates::empty(), &y).unwrap();
        sums = sums.max(r.max_row_error).max(r.max_col_error);
        idem = idem.max(project_c1(&p, &y).unwrap().max_abs_diff(&y));
        kkt = kkt.max(pseudo_inverse_projection(p.a(), p.b(), &x).max_abs_diff(&y));
    }
    outcome(
        sums <= 1e-10 && idem <= 1e-10 && kkt <= 1e-8,
        format!("sum error {sums:.2e}, idempotence {idem:.2e}, pseudo-inverse deviation {kkt:.2e}"),
    )
}

fn bound_admissibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    while checked < 100 {
        let m = rng.gen_range(2..=6);
        let n = rng.gen_range(2..=6);
        let k = rng.gen_range(1..=2);
        let p = random_problem(&mut rng, m, n);
        let oc = distinct_pairs(&mut rng, m, n, k);
        let Ok((opt, _)) = lp_solve_oc(&p, &oc) else { continue };
        let bound = lower_bound(&p, &oc).unwrap();
        worst = worst.max(bound - opt);
        if bound > opt + 1e-9 {
            violations += 1;
        }
        checked += 1;
    }
    let mut pack_err = 0.0_f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let alpha = rng.gen_range(0.0..1.0);
        let u = rng.gen_range(alpha / n as f64..=alpha.max(1e-9));
        let lp = LinearProgram {
            c: costs.clone(),
            a_eq: vec![vec![1.0; n]],
            b_eq: vec![alpha],
            a_ub: (0..n).map(|i| (0..n).map(|q| f64::from(q == i)).collect()).collect(),
            b_ub: vec![u; n],
        };
        let exact = lp_solve(&lp).unwrap().objective;
        pack_err = pack_err.max((exact - packing(&costs, u, alpha).unwrap()).abs());
    }
    outcome(
        violations == 0 && pack_err <= 1e-10,
        format!(
            "{violations} bound violations in 100 instances (max bound - optimum {worst:.3e}), packing max error {pack_err:.2e}"
        ),
    )
}

fn pruning_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let solver = SolverConfig::default();
    let mut mismatches = 0;
    let (mut solves_on, mut solves_off) = (0, 0);
    for case in 0..20 {
        let side = 4 + case % 2;
        let p = random_problem(&mut rng, side, side);
        let on = SearchConfig {
            tau1: 1.0,
            tau2: 1.0,
            k1: 1_000_000,
            k2: 1 + case % 3,
            k3: 1 + (case / 3) % 2,
            ..Default::default()
        };
        let off = SearchConfig { pruning: false, ..on };
        let a = branch_and_bound(&p, &on, &solver).unwrap();
        let b = branch_and_bound(&p, &off, &solver).unwrap();
        solves_on += a.solves;
        solves_off += b.solves;
        let same = a.candidates.len() == b.candidates.len()
            && a.candidates.iter().zip(&b.candidates).all(|(x, y)| {
                x.variates == y.variates && (x.objective - y.objective).abs() <= 1e-6
            });
        if !same {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches in 20 searches; {solves_on} solves with pruning vs {solves_off} without"),
    )
}

fn time_per_iteration(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Duration {
    let p = random_problem(rng, m, n);
    let oc = distinct_pairs(rng, m, n, 1);
    let iters = (2_000_000 / (m * n)).clamp(100, 20_000);
    let cfg = SolverConfig { max_iters: iters, tol: 1e-300, ..Default::default() };
    (0..5)
        .map(|_| {
            let start = Instant::now();
            let plan = solve_plan(&p, &oc, &cfg).unwrap();
            start.elapsed() / plan.iterations as u32
        })
        .min()
        .unwrap()
}

fn scaling_trend() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = [(10, 10), (10, 20), (20, 20), (20, 40), (40, 40), (40, 80), (80, 80), (100, 100)];
    let times: Vec<(usize, Duration)> = grid.iter().map(|&(m, n)| (m * n, time_per_iteration(m, n, &mut rng))).collect();
    let mut worst = 0.0_f64;
    let mut cells = Vec::new();
    for w in times.windows(2) {
        let doublings = (w[1].0 as f64 / w[0].0 as f64).log2();
        let growth = (w[1].1.as_secs_f64() / w[0].1.as_secs_f64()).powf(1.0 / doublings);
        worst = worst.max(growth);
        cells.push(format!("{:.2}", growth));
    }
    let us: Vec<String> = times.iter().map(|(mn, t)| format!("{mn}:{:.1}us", t.as_secs_f64() * 1e6)).collect();
    outcome(
        worst <= 2.5,
        format!("worst growth per doubling {worst:.2} [{}]; per-iteration {}", cells.join(" "), us.join(" ")),
    )
}

fn feasibility_constructor() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ok = 0;
    let mut worst = 0.0_f64;
    while ok < 100 {
        let m = rng.gen_range(2..=12);
        let n = rng.gen_range(2..=12);
        let big = m.max(n) as f64;
        let k = rng.gen_range(1..=m.min(n));
        if (m.min(n) as f64) < 1.0 / (1.0 - k as f64 / big) {
            continue;
        }
        let p = Problem::new(vec![1.0 / m as f64; m], vec![1.0 / n as f64; n], Matrix::zeros(m, n)).unwrap();
        let oc = distinct_pairs(&mut rng, m, n, k);
        let c = vec![1.0 / big; k];
        match feasible_point(&p, &oc, &c) {
            Ok(plan) => worst = worst.max(check_membership(&p, &oc, &plan).unwrap().max_violation()),
            Err(e) => return outcome(false, format!("qualifying instance {m}x{n} k={k} rejected: {e}")),
        }
        ok += 1;
    }
    let mut raised = 0;
    for _ in 0..20 {
        let m = rng.gen_range(2..=8);
        let n = rng.gen_range(2..=8);
        let p = Problem::new(vec![1.0 / m as f64; m], vec![1.0 / n as f64; n], Matrix::zeros(m, n)).unwrap();
        let oc = distinct_pairs(&mut rng, m, n, 1);
        // strictly below every free product a_p b_q / alpha
        let c = vec![rng.gen_range(0.1..0.9) / (m * n) as f64];
        if matches!(feasible_point(&p, &oc, &c), Err(Error::OrderCheckFailed(_))) {
            raised += 1;
        }
    }
    outcome(
        worst <= 1e-12 && raised == 20,
        format!("100 feasible constructions, max membership violation {worst:.2e}; {raised}/20 violations raised"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("solver accuracy vs LP", solver_accuracy),
        ("analytic 2x2 instance", analytic_instance),
        ("order-cone projection", cone_projection),
        ("marginal projection", marginal_projection),
        ("bound admissibility and packing", bound_admissibility),
        ("pruning equivalence", pruning_equivalence),
        ("per-iteration scaling", scaling_trend),
        ("feasibility constructor", feasibility_constructor),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {tag} ({:.1}s) {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
