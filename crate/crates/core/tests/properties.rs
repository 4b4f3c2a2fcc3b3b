use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use superhp::grassmann::{random as grandom, Algebra, ParamSpec, Parity, SuperScalar};
use superhp::lattices::{build_eta_lattice, EtaCase};
use superhp::moebius::{act, cocycle_j, SuperPoint};
use superhp::superfunctions::{eta_squared, QExpansion};
use superhp::supermatrix::{lie, random as mrandom};

fn spec() -> impl Strategy<Value = ParamSpec> {
    prop_oneof![
        Just(ParamSpec::Trivial),
        (2u8..4).prop_map(|n| ParamSpec::Polynomial { n }),
        (1u8..4).prop_map(|m| ParamSpec::Exterior { m }),
    ]
}

fn parity() -> impl Strategy<Value = Parity> {
    prop_oneof![Just(Parity::Even), Just(Parity::Odd)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graded_commutativity(seed: u64, s in spec(), r in 0usize..4, pa in parity(), pb in parity()) {
        let alg = Algebra::new(s, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = grandom::scalar(&mut rng, alg, pa, true, true);
        let b = grandom::scalar(&mut rng, alg, pb, true, true);
        let sign = if pa == Parity::Odd && pb == Parity::Odd { -1.0 } else { 1.0 };
        prop_assert_eq!(&a * &b, (&b * &a).scale_re(sign));
        let ab = &a * &b;
        if !ab.is_empty() {
            let want = if (pa == Parity::Odd) ^ (pb == Parity::Odd) { Parity::Odd } else { Parity::Even };
            prop_assert_eq!(ab.parity(), Some(want));
        }
    }

    #[test]
    fn associativity_and_distributivity(seed: u64, s in spec(), r in 0usize..4) {
        let alg = Algebra::new(s, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = grandom::scalar(&mut rng, alg, Parity::Odd, true, true);
        let b = grandom::scalar(&mut rng, alg, Parity::Even, true, true);
        let c = grandom::scalar(&mut rng, alg, Parity::Odd, true, true);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn units_invert(seed: u64, s in spec(), r in 0usize..4, body in 0.3f64..3.0) {
        let alg = Algebra::new(s, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = &SuperScalar::real(alg, body) + &grandom::scalar(&mut rng, alg, Parity::Even, false, false);
        let inv = u.invert_unit().unwrap();
        prop_assert!((&u * &inv).dist(&SuperScalar::one(alg)) < 1e-12);
        prop_assert!(u.nilpotent_part().invert_unit().is_err());
    }

    #[test]
    fn real_powers_compose(seed: u64, s in spec(), a in -2.5f64..2.5, b in -2.5f64..2.5) {
        let alg = Algebra::new(s, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = &SuperScalar::real(alg, 1.3) + &grandom::scalar(&mut rng, alg, Parity::Even, false, false);
        let lhs = u.power_real(a + b).unwrap();
        let rhs = &u.power_real(a).unwrap() * &u.power_real(b).unwrap();
        prop_assert!(lhs.dist(&rhs) < 1e-10 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn berezinian_of_inverse(seed: u64, r in 1usize..4, m in 1u8..3) {
        let alg = Algebra::new(ParamSpec::Exterior { m }, r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = mrandom::point(&mut rng, alg, 0.5);
        let inv = g.inverse().unwrap();
        let prod = &g.berezinian().unwrap() * &inv.berezinian().unwrap();
        prop_assert!(prod.dist(&SuperScalar::one(alg)) < 1e-11);
        prop_assert!(g.matmul(&inv).dist(&superhp::supermatrix::SuperMatrix::identity(alg)) < 1e-11);
    }

    #[test]
    fn one_parameter_subgroups(seed: u64, s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let alg = Algebra::new(ParamSpec::Polynomial { n: 3 }, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = lie::random_param_element(&mut rng, alg, 0.4, true);
        let lhs = x.exp_point(s + t);
        let rhs = x.exp_point(s).matmul(&x.exp_point(t));
        prop_assert!(lhs.dist(&rhs) < 1e-10 * (1.0 + lhs.max_abs()));
        prop_assert!(x.exp_point(s).is_member(1e-10));
    }

    #[test]
    fn action_respects_products(seed: u64, x in -1.0f64..1.0, y in 0.3f64..2.0) {
        let alg = Algebra::new(ParamSpec::Exterior { m: 2 }, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = mrandom::point(&mut rng, alg, 0.4);
        let h = mrandom::point(&mut rng, alg, 0.4);
        let p = SuperPoint::standard(alg, Complex64::new(x, y));
        let lhs = act(&g.matmul(&h), &p).unwrap();
        let rhs = act(&g, &act(&h, &p).unwrap()).unwrap();
        prop_assert!(lhs.dist(&rhs) < 1e-10);
        prop_assert!(lhs.body().im > 0.0);
        let j = cocycle_j(&g.matmul(&h), &p).unwrap();
        let jj = &cocycle_j(&g, &act(&h, &p).unwrap()).unwrap() * &cocycle_j(&h, &p).unwrap();
        prop_assert!(j.dist(&jj) < 1e-10);
    }

    #[test]
    fn qexpansion_file_roundtrip(t in 1usize..80, shift in -5i64..5, den in 1u32..5) {
        let q = eta_squared(t);
        let q = QExpansion::new(q.nu0 + num_rational::Rational64::new(shift, 7), den, q.coeffs);
        let text = serde_json::to_string(&q.to_file()).unwrap();
        let back = QExpansion::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, q);
    }

    #[test]
    fn invariant_spaces_are_periodic(k in -20i64..40, rho in 0usize..2) {
        for case in [EtaCase::Even, EtaCase::Odd] {
            let lat = build_eta_lattice(case).unwrap();
            let n = lat.gamma0_order as i64;
            let a = lat.vk_rho(k, rho);
            let b = lat.vk_rho(k + n, rho);
            prop_assert_eq!(a.dim, b.dim);
            prop_assert!(superhp::supermatrix::max_norm(&(&a.projector - &b.projector)) < 1e-12);
        }
    }
}
