use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use covert_qmac::channel::{marginals, CqTable};
use covert_qmac::codingsim::{
    build_srm_decoder, cond_typical_projector, covertness_report, encode_joint_state, exact_error, generate_codebook,
    packing_experiment, resolvability_experiment, simulate, srm_from_operators, typical_projector, warden_state,
    Codebook, Conditioning, SimMode, SimParams,
};
use covert_qmac::infomeasures::{von_neumann_entropy, InputDistribution};
use covert_qmac::qlinalg::{
    c, identity, max_abs_diff, real_diag, min_eigenvalue, tensor, tensor_all, trace, trace_distance, CMatrix, DensityMatrix,
};
use covert_qmac::random;
use covert_qmac::Error;

fn rand_table(r: &mut ChaCha8Rng, sizes: [usize; 3], db: usize, de: usize) -> CqTable {
    let n: usize = sizes.iter().product();
    let joint = (0..n).map(|_| random::density(r, db * de).into_matrix()).collect();
    CqTable::new(sizes, db, de, joint, random::density(r, de).into_matrix()).unwrap()
}

fn rand_dist(r: &mut ChaCha8Rng, sizes: [usize; 3]) -> InputDistribution {
    let p1 = random::probability_vector(r, sizes[0]);
    let p2 = random::probability_vector(r, sizes[1]);
    let p3 = (0..sizes[0] * sizes[1]).map(|_| random::probability_vector(r, sizes[2])).collect();
    InputDistribution::new(p1, p2, p3).unwrap()
}

#[test]
fn empirical_symbol_frequencies_match_p1() {
    let dist = InputDistribution::product(vec![0.2, 0.5, 0.3], vec![1.0], vec![1.0]).unwrap();
    let p = SimParams { n: 10, r1: 1.0, ..SimParams::default() };
    let mut counts = [0usize; 3];
    let mut total = 0;
    for k in 0..10 {
        let cb = generate_codebook(&dist, &p, k).unwrap();
        for m in 0..cb.m1() {
            for &s in cb.codeword(m, 0).unwrap().0 {
                counts[s] += 1;
                total += 1;
            }
        }
    }
    assert!(total >= 10_000);
    for (i, &q) in [0.2, 0.5, 0.3].iter().enumerate() {
        let sd = (q * (1.0 - q) / total as f64).sqrt();
        assert!((counts[i] as f64 / total as f64 - q).abs() <= 3.0 * sd, "symbol {i}");
    }
}

#[test]
fn encoding_matches_explicit_tensor() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let t = rand_table(&mut r, [2, 2, 2], 2, 2);
    let cb = Codebook::from_parts(vec![vec![0, 1, 1]], vec![vec![1, 0, 1]], vec![vec![1, 1, 0]]).unwrap();
    let got = encode_joint_state(&cb, 0, 0, &t).unwrap();
    let want = tensor_all([
        t.joint_state([0, 1, 1]).matrix(),
        t.joint_state([1, 0, 1]).matrix(),
        t.joint_state([1, 1, 0]).matrix(),
    ]);
    assert!(max_abs_diff(got.matrix(), &want) <= 1e-12);
    assert!(encode_joint_state(&cb, 1, 0, &t).is_err());
}

#[test]
fn warden_state_is_the_average_of_four() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let t = rand_table(&mut r, [2, 2, 2], 2, 2);
    let cb = Codebook::from_parts(
        vec![vec![0, 1], vec![1, 1]],
        vec![vec![0, 0], vec![1, 0]],
        vec![vec![0, 1], vec![1, 1], vec![0, 0], vec![1, 0]],
    )
    .unwrap();
    let mut avg = CMatrix::zeros(4, 4);
    for m1 in 0..2 {
        for m2 in 0..2 {
            let (x1, x2, x3) = cb.codeword(m1, m2).unwrap();
            let e = |t_: usize| t.e_state([x1[t_], x2[t_], x3[t_]]).matrix().clone();
            avg += tensor(&e(0), &e(1)).scale(0.25);
        }
    }
    assert!(max_abs_diff(warden_state(&cb, &t).unwrap().matrix(), &avg) <= 1e-12);
}

#[test]
fn single_pair_trace_distance_matches_direct_computation() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let t = rand_table(&mut r, [1, 1, 1], 2, 2);
    let dist = InputDistribution::uniform([1, 1, 1]);
    let cb = Codebook::from_parts(vec![vec![0, 0]], vec![vec![0, 0]], vec![vec![0, 0]]).unwrap();
    let rep = covertness_report(&cb, &t, &dist).unwrap();
    let sigma = t.e_state([0, 0, 0]).tensor_power(2);
    let want = trace_distance(&sigma, &t.rho0().tensor_power(2)).unwrap();
    assert!((rep.trace_distance - want).abs() <= 1e-12);
    assert!(rep.rel_entropy.value().abs() <= 1e-10);
}

#[test]
fn srm_examples() {
    let p = real_diag(&[1.0, 0.0, 1.0]);
    let (els, comp) = srm_from_operators(&[p.clone()]).unwrap();
    assert!(max_abs_diff(&els[0], &p) <= 1e-12);
    assert!(max_abs_diff(&comp, &(identity(3) - &p)) <= 1e-12);

    let a = real_diag(&[0.5, 0.0, 0.0]);
    let b = real_diag(&[0.0, 0.3, 0.2]);
    let (els, _) = srm_from_operators(&[a, b]).unwrap();
    assert!(max_abs_diff(&els[0], &real_diag(&[1.0, 0.0, 0.0])) <= 1e-12);
    assert!(max_abs_diff(&els[1], &real_diag(&[0.0, 1.0, 1.0])) <= 1e-12);
}

/// Two qubit operators: `S^{-1/2}` from the closed form for a 2x2 positive matrix.
#[test]
fn srm_two_message_qubit_oracle() {
    let u = CMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.3, 0.0)]);
    let v = CMatrix::from_row_slice(2, 2, &[c(0.2, 0.0), c(-0.1, 0.0), c(-0.1, 0.0), c(0.5, 0.0)]);
    let s = &u + &v;
    // √S = (S + √det S · I) / √(tr S + 2√det S), then invert the 2x2 directly.
    let det = (s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)]).re;
    let tr = trace(&s).re;
    let sq = (&s + identity(2).scale(det.sqrt())).scale(1.0 / (tr + 2.0 * det.sqrt()).sqrt());
    let d2 = sq[(0, 0)] * sq[(1, 1)] - sq[(0, 1)] * sq[(1, 0)];
    let inv = CMatrix::from_row_slice(2, 2, &[sq[(1, 1)] / d2, -sq[(0, 1)] / d2, -sq[(1, 0)] / d2, sq[(0, 0)] / d2]);
    let (els, comp) = srm_from_operators(&[u.clone(), v.clone()]).unwrap();
    assert!(max_abs_diff(&els[0], &(&inv * &u * &inv)) <= 1e-10);
    assert!(max_abs_diff(&els[1], &(&inv * &v * &inv)) <= 1e-10);
    assert!(max_abs_diff(&comp, &CMatrix::zeros(2, 2)) <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoder_is_a_povm_and_projectors_nest(seed in any::<u64>(), n in 1usize..=3, delta in 0.05f64..1.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [2, 2, 2];
        let t = rand_table(&mut r, sizes, 2, 2);
        let dist = rand_dist(&mut r, sizes);
        let p = SimParams { n, r1: 0.7, r2: 0.5, delta, seed, ..SimParams::default() };
        let cb = generate_codebook(&dist, &p, 0).unwrap();
        let dec = build_srm_decoder(&cb, &t, &dist, delta).unwrap();
        let d = 2usize.pow(n as u32);
        let mut sum = dec.completion.clone();
        for e in &dec.elements {
            let ev = covert_qmac::qlinalg::eigenvalues(e).unwrap();
            prop_assert!(ev.iter().all(|&x| (-1e-10..=1.0 + 1e-10).contains(&x)));
            sum += e;
        }
        prop_assert!(max_abs_diff(&sum, &identity(d)) <= 1e-9);
        prop_assert!(min_eigenvalue(&dec.completion).unwrap() >= -1e-9);

        let (x1, x2, x3) = cb.codeword(0, 0).unwrap();
        let full = cond_typical_projector(&t, &dist, x1, x2, x3, Conditioning::Full, delta).unwrap();
        let code = cond_typical_projector(&t, &dist, x1, x2, x3, Conditioning::None, delta).unwrap();
        for c1 in [Conditioning::X1, Conditioning::X2] {
            let pi = cond_typical_projector(&t, &dist, x1, x2, x3, c1, delta).unwrap();
            prop_assert!(min_eigenvalue(&(pi.matrix() - full.matrix())).unwrap() >= -1e-9);
            prop_assert!(min_eigenvalue(&(code.matrix() - pi.matrix())).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn typical_rank_bounded(seed in any::<u64>(), d in 2usize..=3, n in 1usize..=5, delta in 0.0f64..1.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let rho = random::density(&mut r, d);
        if d.pow(n as u32) <= 4096 {
            let p = typical_projector(&rho, n, delta).unwrap();
            let h = von_neumann_entropy(&rho);
            prop_assert!(p.rank() as f64 <= 2f64.powf(n as f64 * (h + delta)) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn relabelling_messages_changes_nothing(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [2, 2, 2];
        let t = rand_table(&mut r, sizes, 2, 2);
        let dist = rand_dist(&mut r, sizes);
        let p = SimParams { n, r1: 1.0, r2: 1.0, seed, ..SimParams::default() };
        let cb = generate_codebook(&dist, &p, 1).unwrap();
        let mut perm1: Vec<usize> = (0..cb.m1()).collect();
        let mut perm2: Vec<usize> = (0..cb.m2()).collect();
        perm1.shuffle(&mut r);
        perm2.shuffle(&mut r);
        let rc = cb.relabel(&perm1, &perm2).unwrap();
        let w = warden_state(&cb, &t).unwrap();
        let wr = warden_state(&rc, &t).unwrap();
        prop_assert!(max_abs_diff(w.matrix(), wr.matrix()) <= 1e-12);
        prop_assert!((trace(w.matrix()).re - 1.0).abs() <= 1e-10);
        let e = exact_error(&cb, &build_srm_decoder(&cb, &t, &dist, 0.5).unwrap(), &t).unwrap();
        let er = exact_error(&rc, &build_srm_decoder(&rc, &t, &dist, 0.5).unwrap(), &t).unwrap();
        prop_assert!((e - er).abs() <= 1e-10);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn trace_distance_respects_pinsker_when_covert(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [2, 2, 2];
        let t0 = rand_table(&mut r, sizes, 2, 2);
        let dist = rand_dist(&mut r, sizes);
        let t = t0.with_rho0(marginals(&t0, &dist).unwrap().rho_e).unwrap();
        let p = SimParams { n, r1: 0.5, r2: 0.5, seed, ..SimParams::default() };
        let cb = generate_codebook(&dist, &p, 2).unwrap();
        let rep = covertness_report(&cb, &t, &dist).unwrap();
        let d = rep.rel_entropy.value();
        prop_assert!(d >= -1e-9);
        prop_assert!(rep.trace_distance <= (2.0 * std::f64::consts::LN_2 * d).sqrt() + 1e-9);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&rep.trace_distance));
    }
}

#[test]
fn identical_states_give_three_quarters() {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let sigma = random::density(&mut r, 2);
    let es: Vec<DensityMatrix> = (0..8).map(|_| random::density(&mut r, 2)).collect();
    let t = CqTable::from_product([2, 2, 2], &vec![sigma; 8], &es, &es[0]).unwrap();
    let dist = rand_dist(&mut r, [2, 2, 2]);
    let p = SimParams { n: 2, r1: 0.5, r2: 0.5, delta: 10.0, num_codebooks: 5, ..SimParams::default() };
    let rep = packing_experiment(&t, &dist, &p).unwrap();
    assert_eq!((rep.m1, rep.m2), (2, 2));
    for o in &rep.outcomes {
        assert!((o.error.unwrap() - 0.75).abs() <= 1e-9);
    }
}

#[test]
fn noiseless_classical_embedding_decodes_perfectly() {
    // B = |x1 x2⟩ exactly; codewords that differ are orthogonal.
    let bs: Vec<DensityMatrix> = (0..4).map(|i| DensityMatrix::basis(4, i).unwrap()).collect();
    let e = DensityMatrix::maximally_mixed(2);
    let t = CqTable::from_product([2, 2, 1], &bs, &vec![e.clone(); 4], &e).unwrap();
    let dist = InputDistribution::uniform([2, 2, 1]);
    let cb = Codebook::from_parts(vec![vec![0, 0], vec![1, 1]], vec![vec![0, 1], vec![1, 0]], vec![vec![0, 0]; 4]).unwrap();
    let dec = build_srm_decoder(&cb, &t, &dist, 10.0).unwrap();
    assert!(exact_error(&cb, &dec, &t).unwrap() <= 1e-9);
}

#[test]
fn all_equal_warden_states_give_zero_divergence_and_positive_bound() {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let rho0 = random::density(&mut r, 2);
    let bs: Vec<DensityMatrix> = (0..8).map(|_| random::density(&mut r, 2)).collect();
    let t = CqTable::from_product([2, 2, 2], &bs, &vec![rho0.clone(); 8], &rho0).unwrap();
    let dist = rand_dist(&mut r, [2, 2, 2]);
    let p = SimParams { n: 3, r1: 0.4, r2: 0.4, num_codebooks: 6, ..SimParams::default() };
    let rep = resolvability_experiment(&t, &dist, &p).unwrap();
    for o in &rep.outcomes {
        assert!(o.rel_entropy.unwrap().value().abs() <= 1e-10);
        assert!(o.trace_distance.unwrap() <= 1e-10);
    }
    assert!(rep.bound_resolvability.unwrap().value > 0.0);
}

#[test]
fn reports_are_deterministic() {
    let mut r = ChaCha8Rng::seed_from_u64(12);
    let t = rand_table(&mut r, [2, 2, 2], 2, 2);
    let dist = rand_dist(&mut r, [2, 2, 2]);
    let p = SimParams { n: 2, r1: 0.6, r2: 0.6, num_codebooks: 8, seed: 99, ..SimParams::default() };
    let a = simulate(&t, &dist, &p, SimMode::Both).unwrap();
    let b = simulate(&t, &dist, &p, SimMode::Both).unwrap();
    assert_eq!(a, b);
    let c2 = simulate(&t, &dist, &SimParams { seed: 100, ..p }, SimMode::Both).unwrap();
    assert_ne!(a.outcomes, c2.outcomes);
}

#[test]
fn dimension_cap_is_enforced_before_work() {
    let mut r = ChaCha8Rng::seed_from_u64(13);
    let t = rand_table(&mut r, [2, 2, 2], 4, 4);
    let dist = rand_dist(&mut r, [2, 2, 2]);
    let p = SimParams { n: 7, ..SimParams::default() };
    assert!(matches!(simulate(&t, &dist, &p, SimMode::Both), Err(Error::DimensionCap { .. })));
}
