use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use covert_qmac::channel::{compile_cq_table, marginals, CqTable, InnocentConfig, PhysicalChannel, SignalEnsemble};
use covert_qmac::infomeasures::{
    holevo_cmi, pinching_map, quantum_rel_entropy, region_bounds, sandwiched_renyi, von_neumann_entropy,
    InputDistribution, Pinching, Registers, Target, DEFAULT_GROUP_TOL,
};
use covert_qmac::qlinalg::{commutator_norm, max_abs_diff, trace, CMatrix, DensityMatrix};
use covert_qmac::random;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_dist(r: &mut ChaCha8Rng, sizes: [usize; 3]) -> InputDistribution {
    let p1 = random::probability_vector(r, sizes[0]);
    let p2 = random::probability_vector(r, sizes[1]);
    let p3 = (0..sizes[0] * sizes[1]).map(|_| random::probability_vector(r, sizes[2])).collect();
    InputDistribution::new(p1, p2, p3).unwrap()
}

fn rand_table(r: &mut ChaCha8Rng, sizes: [usize; 3], db: usize, de: usize) -> CqTable {
    let n: usize = sizes.iter().product();
    let joint = (0..n).map(|_| random::density(r, db * de).into_matrix()).collect();
    CqTable::new(sizes, db, de, joint, random::density(r, de).into_matrix()).unwrap()
}

/// Random state whose spectrum has repeated levels.
fn sigma_with_spectrum(r: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let levels = r.gen_range(1..=d);
    let vals: Vec<f64> = (0..levels).map(|_| r.gen::<f64>() + 0.1).collect();
    let spec: Vec<f64> = (0..d).map(|i| vals[i % levels]).collect();
    let s: f64 = spec.iter().sum();
    random::with_spectrum(r, &spec.iter().map(|x| x / s).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pinching_preserves_trace_and_commutes(seed in any::<u64>(), d in 2usize..=8) {
        let mut r = rng(seed);
        let sigma = DensityMatrix::new(sigma_with_spectrum(&mut r, d)).unwrap();
        let rho = random::density(&mut r, d);
        let (out, v) = pinching_map(&sigma, &rho, DEFAULT_GROUP_TOL).unwrap();
        prop_assert!((trace(out.matrix()).re - 1.0).abs() <= 1e-12);
        prop_assert!(commutator_norm(out.matrix(), sigma.matrix()) <= 1e-10);
        prop_assert!(v >= 1 && v <= d);
    }

    #[test]
    fn data_processing_under_pinching(seed in any::<u64>(), d in 2usize..=6, a in 1usize..=10) {
        let mut r = rng(seed);
        let alpha = a as f64 / 10.0;
        let sigma = sigma_with_spectrum(&mut r, d);
        let p = Pinching::new(&sigma, DEFAULT_GROUP_TOL).unwrap();
        let rho = random::density(&mut r, d);
        let tau = random::density(&mut r, d);
        let prho = DensityMatrix::new(p.apply(rho.matrix()).unwrap()).unwrap();
        let ptau = DensityMatrix::new(p.apply(tau.matrix()).unwrap()).unwrap();
        let before = sandwiched_renyi(&rho, &tau, alpha).unwrap().value();
        let after = sandwiched_renyi(&prho, &ptau, alpha).unwrap().value();
        prop_assert!(after <= before + 1e-9);
        let before = quantum_rel_entropy(&rho, &tau).unwrap().value();
        let after = quantum_rel_entropy(&prho, &ptau).unwrap().value();
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn renyi_increases_with_order_and_tends_to_relative_entropy(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random::density(&mut r, d);
        let sigma = random::density(&mut r, d);
        let d1 = quantum_rel_entropy(&rho, &sigma).unwrap().value();
        let mut prev = d1 - 1e-9;
        for a in [1e-4, 0.1, 0.3, 0.6, 1.0] {
            let v = sandwiched_renyi(&rho, &sigma, a).unwrap().value();
            prop_assert!(v >= prev - 1e-9);
            prev = v;
        }
        prop_assert!((sandwiched_renyi(&rho, &sigma, 1e-4).unwrap().value() - d1).abs() <= 0.01);
    }

    #[test]
    fn additivity_over_copies(seed in any::<u64>(), d in 2usize..=3, n in 1usize..=3) {
        let mut r = rng(seed);
        let rho = random::density(&mut r, d);
        // Near-singular σ^{⊗n} makes log σ ill-conditioned, which is not what this checks.
        let s = random::density(&mut r, d).into_matrix().scale(0.9) + DensityMatrix::maximally_mixed(d).into_matrix().scale(0.1);
        let sigma = DensityMatrix::new(s).unwrap();
        let h = von_neumann_entropy(&rho);
        prop_assert!((von_neumann_entropy(&rho.tensor_power(n)) - n as f64 * h).abs() <= 1e-9);
        let dd = quantum_rel_entropy(&rho, &sigma).unwrap().value();
        let dn = quantum_rel_entropy(&rho.tensor_power(n), &sigma.tensor_power(n)).unwrap().value();
        prop_assert!((dn - n as f64 * dd).abs() <= 1e-9);
    }

    #[test]
    fn holevo_nonnegative_and_zero_for_product_tables(seed in any::<u64>(), n1 in 1usize..=3, n2 in 1usize..=3, n3 in 1usize..=3) {
        let mut r = rng(seed);
        let sizes = [n1, n2, n3];
        let t = rand_table(&mut r, sizes, 2, 2);
        let dist = rand_dist(&mut r, sizes);
        let regs = [Registers::X1, Registers::X2, Registers::X3, Registers::X1 | Registers::X3];
        for a in regs {
            for cond in [Registers::NONE, Registers::X2] {
                if a.intersects(cond) { continue; }
                for target in [Target::B, Target::E] {
                    prop_assert!(holevo_cmi(&t, &dist, target, a, cond).unwrap() >= -1e-9);
                }
            }
        }
        let b = random::density(&mut r, 2);
        let e = random::density(&mut r, 2);
        let k = n1 * n2 * n3;
        let flat = CqTable::from_product(sizes, &vec![b; k], &vec![e.clone(); k], &e).unwrap();
        for v in region_bounds(&flat, &dist).unwrap().as_array() {
            prop_assert!(v.abs() <= 1e-9);
        }
    }

    #[test]
    fn marginals_trace_one_and_linear_in_distribution(seed in any::<u64>(), lam in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let sizes = [2, 2, 2];
        let t = rand_table(&mut r, sizes, 2, 3);
        let p = rand_dist(&mut r, sizes);
        // Shared (p1, p2) keeps the mixture of conditionals a mixture of joints.
        let q3: Vec<Vec<f64>> = (0..4).map(|_| random::probability_vector(&mut r, 2)).collect();
        let q = InputDistribution::new(p.p1.clone(), p.p2.clone(), q3).unwrap();
        let mix3 = p.p3.iter().zip(&q.p3).map(|(a, b)| a.iter().zip(b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect()).collect();
        let mix = InputDistribution::new(p.p1.clone(), p.p2.clone(), mix3).unwrap();
        let (mp, mq, mm) = (marginals(&t, &p).unwrap(), marginals(&t, &q).unwrap(), marginals(&t, &mix).unwrap());
        for s in [&mp.rho_b, &mp.rho_e, &mm.rho_e] {
            prop_assert!((trace(s.matrix()).re - 1.0).abs() <= 1e-10);
        }
        let lin = mp.rho_e.matrix().scale(lam) + mq.rho_e.matrix().scale(1.0 - lam);
        prop_assert!(max_abs_diff(&lin, mm.rho_e.matrix()) <= 1e-12);
    }
}

/// Orthogonal pure inputs through a channel that measures in that basis.
#[test]
fn measuring_channel_gives_classical_table() {
    let mut r = rng(11);
    let dims = [2usize, 2, 2];
    // Kraus K_{x,k} = |out(x), k⟩⟨x| with out(x) ~ W(·|x) realised by sqrt weights.
    let w: Vec<Vec<f64>> = (0..8).map(|_| random::probability_vector(&mut r, 4)).collect();
    let mut kraus = Vec::new();
    for x in 0..8 {
        for y in 0..4 {
            let mut k = CMatrix::zeros(4, 8);
            k[(y, x)] = covert_qmac::qlinalg::c(w[x][y].sqrt(), 0.0);
            kraus.push(k);
        }
    }
    let ch = PhysicalChannel { input_dims: dims, output_dims: (2, 2), kraus };
    let ens = |_: usize| SignalEnsemble::basis(2, 2).unwrap();
    let t = compile_cq_table(&ch, &ens(0), &ens(1), &ens(2), &InnocentConfig::Symbols([0, 0, 0])).unwrap();
    assert!(t.is_classical(1e-12));
    for x in 0..8 {
        let s = t.joint_state(t.symbol(x)).matrix();
        for y in 0..4 {
            assert!((s[(y, y)].re - w[x][y]).abs() <= 1e-12);
        }
        assert!((trace(s).re - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn random_unitary_channel_compiles_to_valid_states() {
    let mut r = rng(12);
    let u = random::unitary(&mut r, 8);
    let v = random::unitary(&mut r, 8);
    let k0 = (&u).scale(0.6f64.sqrt());
    let k1 = (&v).scale(0.4f64.sqrt());
    let ch = PhysicalChannel { input_dims: [2, 2, 2], output_dims: (2, 4), kraus: vec![k0, k1] };
    let ens = SignalEnsemble::new(vec![random::density(&mut r, 2), random::density(&mut r, 2), random::density(&mut r, 2)]).unwrap();
    let t = compile_cq_table(&ch, &ens, &ens, &ens, &InnocentConfig::States([
        DensityMatrix::maximally_mixed(2),
        DensityMatrix::maximally_mixed(2),
        DensityMatrix::maximally_mixed(2),
    ]))
    .unwrap();
    assert_eq!(t.alphabet_sizes(), [3, 3, 3]);
    assert!((trace(t.rho0().matrix()).re - 1.0).abs() <= 1e-10);
}
