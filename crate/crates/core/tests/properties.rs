use hominduce::analysis::{massey_transfer, rescale_products};
use hominduce::exactlin::{fmt_scalar, parse_scalar, q, qq, Scalar};
use hominduce::homotopydata::HomotopyData;
use hominduce::instances::{catalogue, gen_interval, gen_perturbed, PerturbSpec};
use hominduce::multimap::{a_infinity_defect, hom_differential, MultiMap};
use hominduce::towers::{del_b, hmi_m2, hmi_m2_tilde, hmi_tower_sc, ht_tower, m2ht, residual_ry};
use proptest::prelude::*;

fn interval() -> HomotopyData {
    gen_interval(&catalogue("exterior:1").unwrap()).unwrap()
}

fn rational() -> impl Strategy<Value = Scalar> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| qq(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scalar_text_round_trip(n in any::<i64>(), d in 1i64..1_000_000) {
        let x = qq(n, d);
        prop_assert_eq!(parse_scalar(&fmt_scalar(&x)).unwrap(), x);
    }

    #[test]
    fn lemma_identity_for_rational_coefficients(k1 in rational(), k2 in rational(), seed in 0u64..16) {
        let inst = gen_perturbed(&interval(), &PerturbSpec::new(seed, &[], &["SC_right"])).unwrap();
        let (m2, _) = hmi_m2(&inst, &k1, &k2).unwrap();
        let (mt, _) = hmi_m2_tilde(&inst, &k1, &k2).unwrap();
        let rhs = m2.sub(&m2ht(&inst).unwrap().scale(&(&k1 + &k2))).unwrap();
        prop_assert!(del_b(&inst, &mt).unwrap().sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn residual_vanishes_for_opposite_or_degenerate_coefficients(k in rational(), seed in 0u64..16) {
        let inst = gen_perturbed(&interval(), &PerturbSpec::new(seed, &[], &["SC_right", "WSC"])).unwrap();
        prop_assert!(residual_ry(&inst, &k, &-k.clone()).unwrap().0.is_zero());
        prop_assert!(residual_ry(&inst, &k, &q(0)).unwrap().0.is_zero());
        prop_assert!(residual_ry(&inst, &q(0), &k).unwrap().0.is_zero());
    }

    #[test]
    fn rescaled_towers_stay_a_infinity(k1 in rational(), k2 in rational(), lambda in rational()) {
        let inst = interval();
        for t in [hmi_tower_sc(&inst, &k1, &k2, 4).unwrap(), ht_tower(&inst, 4).unwrap()] {
            let scaled = rescale_products(&t.products, &lambda);
            for n in 1..=4 {
                prop_assert!(a_infinity_defect(&scaled, n).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn perturbed_fixtures_have_requested_flags(seed in 0u64..64) {
        let base = gen_interval(&catalogue("exterior:2").unwrap()).unwrap();
        let inst = gen_perturbed(&base, &PerturbSpec::new(seed, &["SC_left"], &["SC_right"])).unwrap();
        prop_assert!(inst.flags().get("SC_left"));
        prop_assert!(!inst.flags().get("SC_right"));
        prop_assert!(inst.validate().is_ok());
    }

    #[test]
    fn hom_differential_squares_to_zero(entries in proptest::collection::vec((0usize..6, 0usize..6, 0usize..6, -3i64..=3), 0..12)) {
        let inst = interval();
        let b = inst.b().clone();
        let mut phi = MultiMap::zero(2, -1, b.clone(), b.clone());
        for (i, j, out, c) in entries {
            if b.degree_of(out) == b.degree_of(i) + b.degree_of(j) - 1 {
                phi.add_to(vec![i, j], &[(out, q(c))].into_iter().collect(), &q(1));
            }
        }
        let d = hom_differential(&phi, inst.d_b(), inst.d_b()).unwrap();
        prop_assert!(hom_differential(&d, inst.d_b(), inst.d_b()).unwrap().is_zero());
    }

    #[test]
    fn second_massey_product_scales_with_the_coefficient_sum(k1 in rational(), k2 in rational()) {
        let inst = interval();
        let t = hmi_tower_sc(&inst, &k1, &k2, 3).unwrap();
        let m = massey_transfer(&inst, &t, 3).unwrap();
        prop_assert!(m.m2().sub(&m.m2_ht().scale(&(&k1 + &k2))).unwrap().is_zero());
    }
}
