use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use covert_qmac::qlinalg::{
    c, fidelity, hermitian_eig, matrix_function, max_abs_diff, partial_trace, support_projector, trace, trace_distance,
    trace_norm, CMatrix, DensityMatrix, Projector,
};
use covert_qmac::random;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), d in 1usize..=64) {
        let mut r = rng(seed);
        let h = random::hermitian(&mut r, d);
        let sd = hermitian_eig(&h).unwrap();
        prop_assert!(max_abs_diff(&sd.reconstruct(), &h) <= 1e-10);
        prop_assert!(sd.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn partial_trace_preserves_trace_and_is_linear(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4, dc in 1usize..=3) {
        let mut r = rng(seed);
        let dims = [da, db, dc];
        let d = da * db * dc;
        let x = random::ginibre(&mut r, d, d);
        let y = random::ginibre(&mut r, d, d);
        let (a, b) = (c(0.3, -1.2), c(-0.7, 0.4));
        for keep in [&[0usize][..], &[1], &[2], &[0, 2], &[0, 1, 2], &[]] {
            let px = partial_trace(&x, &dims, keep).unwrap();
            prop_assert!((trace(&px) - trace(&x)).norm() <= 1e-12 * (1.0 + trace(&x).norm()));
            let combo = partial_trace(&(x.scale(1.0) * a + &y * b), &dims, keep).unwrap();
            let py = partial_trace(&y, &dims, keep).unwrap();
            prop_assert!(max_abs_diff(&combo, &(px * a + py * b)) <= 1e-12);
        }
    }

    #[test]
    fn trace_norm_triangle_and_unitary_invariance(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let a = random::ginibre(&mut r, d, d);
        let b = random::ginibre(&mut r, d, d);
        prop_assert!(trace_norm(&(&a + &b)) <= trace_norm(&a) + trace_norm(&b) + 1e-10);
        let u = random::unitary(&mut r, d);
        let v = random::unitary(&mut r, d);
        prop_assert!((trace_norm(&(&u * &a * &v)) - trace_norm(&a)).abs() <= 1e-10);
    }

    #[test]
    fn fidelity_symmetric_and_detects_equality(seed in any::<u64>(), d in 1usize..=8, rank in 1usize..=8) {
        let mut r = rng(seed);
        let rho = random::density_with_rank(&mut r, d, rank.min(d));
        let sigma = random::density(&mut r, d);
        let f1 = fidelity(&rho, &sigma).unwrap();
        let f2 = fidelity(&sigma, &rho).unwrap();
        prop_assert!((f1 - f2).abs() <= 1e-10);
        prop_assert!((-1e-12..=1.0 + 1e-10).contains(&f1));
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() <= 1e-8);
        if trace_distance(&rho, &sigma).unwrap() > 1e-8 {
            prop_assert!(f1 < 1.0 - 1e-12);
        }
    }

    #[test]
    fn function_and_inverse_give_support(seed in any::<u64>(), d in 1usize..=8, rank in 1usize..=8) {
        let mut r = rng(seed);
        let rho = random::density_with_rank(&mut r, d, rank.min(d)).into_matrix();
        let f = matrix_function(&rho, |x| x.sqrt(), true).unwrap();
        let back = matrix_function(&f, |y| y * y, true).unwrap();
        let g = matrix_function(&rho, |x| 1.0 / x, true).unwrap();
        prop_assert!(max_abs_diff(&(&rho * &g), &support_projector(&rho).unwrap()) <= 1e-8);
        prop_assert!(max_abs_diff(&back, &rho) <= 1e-10);
    }

    #[test]
    fn projector_intersection_is_below_both(seed in any::<u64>(), d in 1usize..=6, r1 in 0usize..=6, r2 in 0usize..=6) {
        let mut r = rng(seed);
        let p = random::projector(&mut r, d, r1.min(d));
        let q = random::projector(&mut r, d, r2.min(d));
        let i = p.intersect(&q).unwrap();
        prop_assert!(max_abs_diff(&(p.matrix() * i.matrix()), i.matrix()) <= 1e-8);
        prop_assert!(max_abs_diff(&(q.matrix() * i.matrix()), i.matrix()) <= 1e-8);
        let pp = p.intersect(&p).unwrap();
        prop_assert_eq!(pp.rank(), p.rank());
    }
}

#[test]
fn density_with_tiny_negative_eigenvalue_is_rejected() {
    let m = CMatrix::from_row_slice(2, 2, &[c(1.001, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.001, 0.0)]);
    assert!(DensityMatrix::new(m).is_err());
}

#[test]
fn projector_rejects_non_idempotent() {
    let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    assert!(Projector::new(m).is_err());
}
