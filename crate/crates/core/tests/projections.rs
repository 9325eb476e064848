use ocot::oracle::{kkt_verify, pgd_project};
use ocot::projections::{epava, project_c2};
use ocot::{Matrix, OrderedVariates};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_case(rng: &mut ChaCha8Rng, max_side: usize, max_k: usize) -> (Matrix, OrderedVariates) {
    let m = rng.gen_range(1..=max_side);
    let n = rng.gen_range(1..=max_side);
    let x = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut cells: Vec<usize> = (0..m * n).collect();
    cells.shuffle(rng);
    let k = rng.gen_range(1..=max_k.min(m * n));
    let pairs = cells[..k].iter().map(|&f| (f / n, f % n)).collect();
    (x, OrderedVariates::new(pairs, m, n).unwrap())
}

#[test]
fn epava_agrees_with_dykstra_and_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let (x, oc) = random_case(&mut rng, 6, 3);
        let (y, bp) = epava(&x, &oc).unwrap();
        let reference = pgd_project(&x, &oc, 1e-13).unwrap();
        let dev = y.max_abs_diff(&reference);
        assert!(dev <= 1e-6, "case {case}: deviation {dev}");
        let kkt = kkt_verify(&x, &y, &oc, 1e-8).unwrap();
        assert!(kkt.max_violation() <= 1e-8, "case {case}: {kkt:?}");
        assert!(bp.val.windows(2).all(|w| w[0] < w[1]));
        assert!(bp.eta_tilde >= 0.0);
    }
}

#[test]
fn long_chains_and_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (x, oc) = random_case(&mut rng, 4, 16);
        // quantize to force ties among free and constrained values
        let x = x.map(|v| (v * 4.0).round() / 4.0);
        let y = project_c2(&x, &oc).unwrap();
        let reference = pgd_project(&x, &oc, 1e-13).unwrap();
        assert!(y.max_abs_diff(&reference) <= 1e-6);
        assert!(kkt_verify(&x, &y, &oc, 1e-8).unwrap().max_violation() <= 1e-8);
    }
}
