use bpmf_core::exact_oracle::{enumerate_joint, exact_marginals, grid_mf_minimize, mf_free_energy_direct, MAX_JOINT_STATES};
use bpmf_core::free_energy::variational_free_energy;
use bpmf_core::instances;
use bpmf_core::{Error, GraphBuilder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn single_unary_factor() {
    let mut b = GraphBuilder::new();
    let x = b.discrete("x", 2);
    b.add_table("f", &[x], vec![2.0, 6.0]).unwrap();
    let g = b.build().unwrap();
    let m = exact_marginals(&g).unwrap();
    assert!((m.vars[0][0] - 0.25).abs() < 1e-15 && (m.vars[0][1] - 0.75).abs() < 1e-15);
    assert!((m.log_z - 8f64.ln()).abs() < 1e-15);
}

#[test]
fn parity_triangle_is_uniform_over_codewords() {
    let inst = instances::parity_triangle().unwrap();
    let joint = enumerate_joint(&inst.graph).unwrap();
    let checks = [[0, 1, 3], [1, 2, 4], [2, 0, 5]];
    let mut words = 0;
    for (config, p) in joint.iter() {
        let valid = checks.iter().all(|c| (config[c[0]] + config[c[1]] + config[c[2]]) % 2 == 0);
        if valid {
            words += 1;
            assert!((p - 0.125).abs() < 1e-15);
        } else {
            assert_eq!(p, 0.0);
        }
    }
    assert_eq!(words, 8);
}

#[test]
fn chain_pairwise_marginals_follow_chain_rule() {
    let inst = instances::binary_chain().unwrap();
    let m = exact_marginals(&inst.graph).unwrap();
    let p01 = m.factors[inst.graph.factor_by_name("p01").unwrap().0].linear();
    let p12 = m.factors[inst.graph.factor_by_name("p12").unwrap().0].linear();
    // Pairwise marginals agree on the shared variable x1.
    for x1 in 0..2 {
        let a = p01[x1] + p01[2 + x1];
        let b = p12[2 * x1] + p12[2 * x1 + 1];
        assert!((a - b).abs() < 1e-15);
        assert!((a - m.vars[1][x1]).abs() < 1e-15);
    }
    // p(x0, x1, x2) = p(x0, x1) p(x2 | x1) reproduces the joint.
    let joint = enumerate_joint(&inst.graph).unwrap();
    for (c, p) in joint.iter() {
        let chain = p01[2 * c[0] + c[1]] * p12[2 * c[1] + c[2]] / m.vars[1][c[1]];
        assert!((chain - p).abs() < 1e-14);
    }
}

#[test]
fn contradiction_and_state_limit() {
    let inst = instances::contradictory_parity().unwrap();
    assert!(matches!(enumerate_joint(&inst.graph), Err(Error::Contradiction(_))));
    let mut b = GraphBuilder::new();
    let vars: Vec<_> = (0..21).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    for (k, &v) in vars.iter().enumerate() {
        b.add_table(format!("f{k}"), &[v], vec![1.0, 1.0]).unwrap();
    }
    let g = b.build().unwrap();
    const { assert!(MAX_JOINT_STATES < 1 << 21) };
    assert!(matches!(enumerate_joint(&g), Err(Error::TooManyStates { .. })));
}

#[test]
fn exact_joint_has_zero_variational_free_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let inst = instances::random_tree(&mut rng, 6, 3).unwrap();
    let joint = enumerate_joint(&inst.graph).unwrap();
    assert!(joint.log_z.abs() < 1e-12);
    let v = variational_free_energy(&joint.probs, &joint.probs).unwrap().to_f64();
    assert_eq!(v, 0.0);
}

#[test]
fn mean_field_is_exact_on_product_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let inst = instances::product_instance(&mut rng, 4).unwrap();
    let search = grid_mf_minimize(&inst.graph, 5, 1).unwrap();
    assert_eq!(search.fixed_points.len(), 1);
    assert!(search.best_free_energy.to_f64().abs() < 1e-12);
    let exact = exact_marginals(&inst.graph).unwrap();
    for (q, p) in search.best.iter().zip(&exact.vars) {
        for (a, b) in q.iter().zip(p) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn frustrated_pair_has_several_fixed_points() {
    let inst = instances::frustrated_pair(3.0).unwrap();
    let search = grid_mf_minimize(&inst.graph, 40, 3).unwrap();
    assert!(search.fixed_points.len() >= 2, "{:?}", search.fixed_points);
    for (q, f) in &search.fixed_points {
        assert_eq!(mf_free_energy_direct(&inst.graph, q).unwrap(), *f);
        assert!(search.best_free_energy <= *f);
    }
}
