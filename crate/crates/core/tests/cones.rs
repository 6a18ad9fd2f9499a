mod common;

use common::{dot, norm1};
use proptest::prelude::*;
use vngale::cones::{validate_g3, ConeSpec, Generator, RandomCone};
use vngale::model_io::load_model;
use vngale::scenario_tree::{ScenarioNode, ScenarioTree};
use vngale::VngError;

fn gen_strategy(dim: usize) -> impl Strategy<Value = Vec<Generator>> {
    prop::collection::vec(
        (prop::collection::vec(0.0f64..3.0, dim), prop::collection::vec(0.0f64..3.0, dim)),
        1..5,
    )
    .prop_map(|gs| gs.into_iter().map(|(a, b)| Generator::new(a, b)).collect())
}

/// Identity inputs plus the random generators, so (G.1) and (G.2) hold.
fn cone_with_identity(dim: usize, extra: Vec<Generator>) -> ConeSpec {
    let mut gens: Vec<Generator> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            Generator::new(e.clone(), e)
        })
        .collect();
    gens.extend(extra.into_iter().filter(|g| norm1(&g.a) > 0.0));
    ConeSpec::new(dim, gens).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dual_membership_matches_generator_inequalities(
        gens in gen_strategy(2),
        c in prop::collection::vec(0.0f64..2.0, 2),
        d in prop::collection::vec(0.0f64..2.0, 2),
    ) {
        let cone = ConeSpec::new(2, gens.clone());
        prop_assume!(cone.is_ok());
        let cone = cone.unwrap();
        let oracle = gens.iter().all(|g| dot(&c, &g.a) - dot(&d, &g.b) >= -1e-9);
        prop_assert_eq!(cone.dual_contains(&c, &d, 1e-9).unwrap(), oracle);
    }

    #[test]
    fn conic_combinations_are_members(
        gens in gen_strategy(2),
        weights in prop::collection::vec(0.0f64..2.0, 4),
    ) {
        let cone = cone_with_identity(2, gens);
        let mut a = vec![0.0; 2];
        let mut b = vec![0.0; 2];
        for (g, w) in cone.generators().iter().zip(weights.iter().cycle()) {
            for i in 0..2 {
                a[i] += w * g.a[i];
                b[i] += w * g.b[i];
            }
        }
        prop_assert!(cone.primal_contains(&a, &b, 1e-9).unwrap());
        // every member obeys |b| <= M |a|
        let m = cone.validate_g2().unwrap();
        let outside: Vec<f64> = a.iter().map(|x| x * (m + 1.0) + 1.0).collect();
        prop_assert!(!cone.primal_contains(&a, &outside, 1e-9).unwrap());
    }

    #[test]
    fn g3_witness_is_feasible_for_its_program(gens in gen_strategy(2)) {
        let cone = cone_with_identity(2, gens);
        let (gamma, a_hat, b_hat) = cone.g3_witness().unwrap();
        prop_assert!(gamma > 0.0);
        prop_assert!(norm1(&a_hat) <= 1.0 + 1e-9);
        prop_assert!(b_hat.iter().all(|&b| b >= gamma - 1e-9));
        prop_assert!(cone.primal_contains(&a_hat, &b_hat, 1e-9).unwrap());
        // identity inputs alone already give gamma >= 1/dim
        prop_assert!(gamma >= 0.5 - 1e-9);
    }

    #[test]
    fn free_disposal_shrinks_the_dual_cone(
        gens in gen_strategy(2),
        c in prop::collection::vec(0.0f64..2.0, 2),
        d in prop::collection::vec(0.0f64..2.0, 2),
    ) {
        let cone = cone_with_identity(2, gens);
        let closed = cone.with_free_disposal().unwrap();
        for g in cone.generators() {
            prop_assert!(closed.primal_contains(&g.a, &g.b, 1e-9).unwrap());
        }
        if closed.dual_contains(&c, &d, 1e-9).unwrap() {
            prop_assert!(cone.dual_contains(&c, &d, 1e-9).unwrap());
        }
    }
}

#[test]
fn half_productivity_floor() {
    let cone = ConeSpec::new(1, vec![Generator::new(vec![2.0], vec![1.0])]).unwrap();
    let (gamma, a_hat, b_hat) = cone.g3_witness().unwrap();
    assert!((gamma - 0.5).abs() < 1e-12);
    assert!((a_hat[0] - 1.0).abs() < 1e-12);
    assert!((b_hat[0] - 0.5).abs() < 1e-12);
}

#[test]
fn lipschitz_bound_and_its_failure() {
    let cone = ConeSpec::new(
        2,
        vec![
            Generator::new(vec![1.0, 0.0], vec![0.0, 3.0]),
            Generator::new(vec![0.0, 2.0], vec![1.0, 1.0]),
        ],
    )
    .unwrap();
    assert!((cone.validate_g2().unwrap() - 3.0).abs() < 1e-15);
    let bad = ConeSpec::new(1, vec![Generator::new(vec![1.0], vec![1.0]), Generator::new(vec![0.0], vec![1.0])]).unwrap();
    assert_eq!(bad.validate_g2(), Err(1));
    let no_input = ConeSpec::new(2, vec![Generator::new(vec![1.0, 0.0], vec![1.0, 1.0])]).unwrap();
    assert!(!no_input.validate_g1().unwrap());
}

#[test]
fn negative_coordinates_are_rejected() {
    let err = ConeSpec::new(1, vec![Generator::new(vec![-1.0], vec![1.0])]).unwrap_err();
    assert!(matches!(err, VngError::Cone { .. }));
}

#[test]
fn doubling_chain_constants() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chain2.json");
    let loaded = load_model(&path, 1e-9).unwrap();
    let c = &loaded.constants;
    assert_eq!(c.horizon(), 6);
    for t in 1..=6 {
        assert!((c.m(t) - 2.0).abs() < 1e-12);
        assert!((c.gamma(t) - 2.0).abs() < 1e-12);
        assert!((c.c(t) - 0.5).abs() < 1e-12);
        // C^t and M^t against the closed-form prices and states
        let (x, p, _) = common::chain2_closed_form(t);
        assert!((c.c_cumulative(t) - p).abs() < 1e-12);
        assert!((c.m_cumulative(t) - x).abs() < 1e-12);
    }
}

#[test]
fn level_floor_is_the_worst_node() {
    let records = vec![
        ScenarioNode::new("r", 0, None, 1.0),
        ScenarioNode::new("u", 1, Some("r"), 0.5),
        ScenarioNode::new("d", 1, Some("r"), 0.5),
    ];
    let tree = ScenarioTree::build(&records, 1).unwrap();
    let cones = RandomCone::new(
        &tree,
        vec![
            None,
            Some(ConeSpec::new(1, vec![Generator::new(vec![1.0], vec![3.0])]).unwrap()),
            Some(ConeSpec::new(1, vec![Generator::new(vec![2.0], vec![1.0])]).unwrap()),
        ],
    )
    .unwrap();
    let level = validate_g3(&tree, &cones, 1, 1e-9).unwrap();
    assert!((level.gamma - 0.5).abs() < 1e-12);
    assert_eq!(level.witnesses.len(), 2);
}
