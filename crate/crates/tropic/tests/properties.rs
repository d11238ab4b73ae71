mod common;

use num_traits::{Signed, Zero};
use proptest::prelude::*;

use common::*;
use tropic::cli_io::{emit_curve, parse_curve};
use tropic::curve_model::identity;
use tropic::exact_linalg::{
    annihilator_basis, det, hnf_rows, lattice_equal, lattice_index, smith_invariants, Index, Int, IntVec, LatticeMap, Rat,
};
use tropic::kuranishi_leading::{edge_length_residual, leading_contribution, NodeRatios, ScaledRatio};
use tropic::moduli_space::{deformation_space, superabundance_report};
use tropic::obstruction_space::{compatible_numbering_dim, dual_obstruction_basis};
use tropic::well_spacedness::smoothability_verdict;

fn matrix(n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-6i64..=6, n), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn numbering_dimension_is_genus(seed in any::<u64>(), v in 1usize..=40, g in 0usize..=6) {
        let mut r = rng(seed);
        if let Some(graph) = random_trivalent_graph(&mut r, v, g) {
            prop_assert_eq!(compatible_numbering_dim(&graph).unwrap(), graph_genus(&graph));
        }
    }

    #[test]
    fn index_matches_coset_count(m in prop_oneof![matrix(2), matrix(3)]) {
        let d = det_i64(&m);
        prop_assume!(d != 0 && d.abs() <= 40);
        let rows: Vec<IntVec> = m.iter().map(|r| iv(r)).collect();
        let n = m.len();
        prop_assert_eq!(lattice_index(&rows, &identity(n), n).unwrap(), Index::Finite(Int::from(coset_count(&m))));
    }

    #[test]
    fn smith_invariants_divide_and_multiply_to_det(m in prop_oneof![matrix(2), matrix(3), matrix(4)]) {
        let rows: Vec<IntVec> = m.iter().map(|r| iv(r)).collect();
        let d = det(&rows);
        let s = smith_invariants(&LatticeMap::new(m.len(), rows.clone()));
        if d.is_zero() {
            prop_assert!(s.len() < m.len());
        } else {
            prop_assert_eq!(s.iter().product::<Int>(), d.abs());
            prop_assert!(s.windows(2).all(|w| (&w[1] % &w[0]).is_zero()));
        }
        // Hermite form spans the same lattice.
        prop_assert!(lattice_equal(&hnf_rows(&rows, m.len()), &rows, m.len()));
    }

    #[test]
    fn leading_order_is_path_length_and_coefficient_is_stable(seed in any::<u64>(), s in 1i64..=9, node in 0usize..6) {
        let mut r = rng(seed);
        let c = random_prelog_config(&mut r);
        let len = length_oracle(&c);
        match leading_contribution(&c) {
            Ok(lead) => {
                prop_assert_eq!(Rat::from_integer(lead.order.clone()), len);
                prop_assert_eq!(&lead.coefficient, &coefficient_oracle(&c));
                let i = node % c.nodes.len();
                let scaled = leading_contribution(&c.rescale_node(i, &q(-s, 2))).unwrap();
                prop_assert_eq!(scaled.coefficient, lead.coefficient);
            }
            Err(_) => prop_assert!(!len.is_integer()),
        }
    }

    #[test]
    fn dimension_identity_on_random_curves(seed in any::<u64>(), n in 2usize..=5, genus_one in any::<bool>(), splits in 0usize..=5) {
        let c = random_immersive_curve(&mut rng(seed), n, genus_one, splits);
        let h = dual_obstruction_basis(&c).unwrap().dimension();
        let r = superabundance_report(&c, h);
        prop_assert_eq!(r.identity_holds, Some(true));
        prop_assert_eq!(deformation_space(&c).dimension(), r.actual_dim);
    }

    #[test]
    fn genus_one_obstructions_annihilate_the_loop(seed in any::<u64>(), n in 3usize..=5) {
        let c = random_immersive_curve(&mut rng(seed), n, true, 2);
        let h = dual_obstruction_basis(&c).unwrap();
        let cov: Vec<IntVec> = (0..h.dimension()).map(|j| h.global_covector(j).unwrap().clone()).collect();
        let dirs: Vec<IntVec> = c.bouquet_decomposition().loop_edges.iter().filter_map(|&e| c.edges[e].direction.clone()).collect();
        prop_assert!(lattice_equal(&cov, &annihilator_basis(&dirs, n), n));
    }

    #[test]
    fn unimodular_transforms_preserve_analysis(seed in any::<u64>(), n in 2usize..=4, genus_one in any::<bool>()) {
        let mut r = rng(seed);
        let c = random_immersive_curve(&mut r, n, genus_one, 3);
        let t = random_unimodular(&mut r, n);
        let tc = c.transform(&t, &random_shift(&mut r, n)).unwrap();
        let (h, th) = (dual_obstruction_basis(&c).unwrap().dimension(), dual_obstruction_basis(&tc).unwrap().dimension());
        prop_assert_eq!(h, th);
        prop_assert_eq!(superabundance_report(&c, h), superabundance_report(&tc, th));
        prop_assert_eq!(
            smoothability_verdict(&c, 7).unwrap().verdict,
            smoothability_verdict(&tc, 7).unwrap().verdict
        );
    }

    #[test]
    fn curve_documents_round_trip(seed in any::<u64>(), n in 2usize..=4, genus_one in any::<bool>(), splits in 0usize..=5) {
        let c = random_immersive_curve(&mut rng(seed), n, genus_one, splits);
        let text = emit_curve(&c);
        let again = parse_curve(&text).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(emit_curve(&again), text);
    }

    #[test]
    fn cancelling_chains_have_log_gap(
        k in prop::collection::vec((1i64..=9, 0i64..=4), 3),
        c_num in 2i64..=50,
        c_den in 1i64..=7,
    ) {
        // Chain P: arbitrary ratios; chain Q: the same exponents with the
        // coefficient product divided by c.
        let c = q(c_num, c_den);
        let p: Vec<NodeRatios> = k.iter().map(|&(a, e)| NodeRatios {
            k_over_m: ScaledRatio { coefficient: q(a, 1), exponent: q(e, 2) },
            l_over_m: ScaledRatio { coefficient: q(1, a), exponent: q(e, 3) },
        }).collect();
        let mut qq = p.clone();
        qq[0].k_over_m.coefficient = &qq[0].k_over_m.coefficient / &c;
        for tau in [1e3, 1e6] {
            let (res, dp, dq) = edge_length_residual(&p, &qq, &c, tau).unwrap();
            prop_assert!(res.abs() < 1e-9 * dp.abs().max(dq.abs()).max(1.0));
        }
    }
}
