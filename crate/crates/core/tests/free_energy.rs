use approx::assert_relative_eq;
use bpmf_core::exact_oracle::{enumerate_joint, exact_marginals, log_unnormalized};
use bpmf_core::free_energy::{
    bethe_free_energy, combined_free_energy, combined_free_energy_parts, constraint_residuals, free_energy_lower_bound,
    mf_free_energy, stationarity_residual, variational_free_energy,
};
use bpmf_core::instances::{self, Instance};
use bpmf_core::message_passing::{BeliefState, FactorBelief, MessageState, UpdateConfig, VarBelief};
use bpmf_core::scheduler::{run_algorithm1, RunOptions, StopRule};
use bpmf_core::tabular::Table;
use bpmf_core::{BpMfPartition, Extended, GraphBuilder, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Belief state holding the exact marginals of `source` on the graph of `target`
/// (both graphs must have the same structure).
fn exact_state(target: &Instance, source: &Instance) -> BeliefState {
    let ex = exact_marginals(&source.graph).unwrap();
    BeliefState {
        vars: ex.vars.iter().map(|p| VarBelief::Discrete(p.clone())).collect(),
        factors: ex
            .factors
            .into_iter()
            .enumerate()
            .map(|(a, t)| target.partition.is_bp(bpmf_core::FactorId(a)).then_some(FactorBelief::Table(t)))
            .collect(),
        messages: MessageState::new(&target.graph),
    }
}

fn chain(rng: &mut ChaCha8Rng) -> Instance {
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..3).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    let mut w = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(0.1..2.0)).collect() };
    b.add_table("u", &[x[0]], w(2)).unwrap();
    b.add_table("p01", &[x[0], x[1]], w(4)).unwrap();
    b.add_table("p12", &[x[1], x[2]], w(4)).unwrap();
    let g = b.build().unwrap();
    let partition = BpMfPartition::all_bp(&g).unwrap();
    Instance { graph: g, partition, em: Default::default() }
}

#[test]
fn variational_examples() {
    assert_eq!(variational_free_energy(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), Extended::Finite(0.0));
    let v = variational_free_energy(&[1.0, 0.0], &[0.5, 0.5]).unwrap().finite().unwrap();
    assert_relative_eq!(v, 2f64.ln(), max_relative = 1e-15);
    let b = Table::new(vec![VarId(0)], vec![3], vec![0.2, 0.5, 0.3]).unwrap();
    let q = Table::new(vec![VarId(0)], vec![3], vec![0.4, 0.4, 0.2]).unwrap();
    let v = variational_free_energy(&b.linear(), &q.linear()).unwrap();
    assert_relative_eq!(v.to_f64(), b.kl(&q).unwrap().to_f64(), max_relative = 1e-14);
}

#[test]
fn bethe_is_zero_at_exact_tree_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let inst = instances::random_tree(&mut rng, 8, 4).unwrap();
        let state = exact_state(&inst, &inst);
        let f = bethe_free_energy(&inst.graph, &state).unwrap().to_f64();
        assert!(f.abs() < 1e-12, "{f}");
        let c = constraint_residuals(&inst.graph, &inst.partition, &state).unwrap();
        assert!(c.max_marg_residual < 1e-14 && c.max_norm_residual < 1e-14);
    }
}

#[test]
fn bethe_equals_variational_on_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let p = chain(&mut rng);
        let q = chain(&mut rng);
        let state = exact_state(&p, &q);
        let joint_q = enumerate_joint(&q.graph).unwrap();
        let p_vals: Vec<f64> = joint_q.iter().map(|(c, _)| log_unnormalized(&p.graph, &c).unwrap().exp()).collect();
        let v = variational_free_energy(&joint_q.probs, &p_vals).unwrap().to_f64();
        let f = bethe_free_energy(&p.graph, &state).unwrap().to_f64();
        assert!((f - v).abs() < 1e-10, "{f} vs {v}");
    }
}

#[test]
fn reductions_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let inst = instances::random_tree(&mut rng, 6, 3).unwrap();
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
        let a = combined_free_energy(&inst.graph, &inst.partition, &res.state).unwrap();
        let b = bethe_free_energy(&inst.graph, &res.state).unwrap();
        assert_eq!(a.to_f64().to_bits(), b.to_f64().to_bits());

        let mf = instances::random_mf(&mut rng).unwrap();
        let res = run_algorithm1(&mf.graph, &mf.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
        let a = combined_free_energy(&mf.graph, &mf.partition, &res.state).unwrap();
        let b = mf_free_energy(&mf.graph, &res.state).unwrap();
        assert_eq!(a.to_f64().to_bits(), b.to_f64().to_bits());
    }
}

#[test]
fn split_form_agrees_and_lower_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..30 {
        let inst = instances::random_applicable(&mut rng, false).unwrap();
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
        let f = combined_free_energy(&inst.graph, &inst.partition, &res.state).unwrap().to_f64();
        let [f1, f2, f3] = combined_free_energy_parts(&inst.graph, &inst.partition, &res.state).unwrap();
        assert!((f1.to_f64() + f2.to_f64() + f3.to_f64() - f).abs() < 1e-10 * f.abs().max(1.0));
        assert!(f >= free_energy_lower_bound(&inst.graph).unwrap() - 1e-12);
    }
}

#[test]
fn single_normalized_factor_has_zero_bethe() {
    let mut b = GraphBuilder::new();
    let x = b.discrete("x", 3);
    let y = b.discrete("y", 2);
    b.add_table("f", &[x, y], vec![0.1, 0.2, 0.05, 0.15, 0.3, 0.2]).unwrap();
    let g = b.build().unwrap();
    let partition = BpMfPartition::all_bp(&g).unwrap();
    let inst = Instance { graph: g, partition, em: Default::default() };
    let state = exact_state(&inst, &inst);
    assert!(bethe_free_energy(&inst.graph, &state).unwrap().to_f64().abs() < 1e-15);
}

#[test]
fn mass_on_a_hard_zero_is_infinite() {
    let inst = instances::parity_triangle().unwrap();
    let mut state = exact_state(&inst, &inst);
    assert!(combined_free_energy(&inst.graph, &inst.partition, &state).unwrap().is_finite());
    let t = Table::new(inst.graph.scope(bpmf_core::FactorId(0)).to_vec(), vec![2, 2, 2], vec![0.125; 8]).unwrap();
    state.factors[0] = Some(FactorBelief::Table(t));
    assert_eq!(combined_free_energy(&inst.graph, &inst.partition, &state).unwrap(), Extended::PosInfinity);
}

#[test]
fn perturbed_belief_shows_in_marginal_residual() {
    let inst = instances::binary_chain().unwrap();
    let mut state = exact_state(&inst, &inst);
    if let VarBelief::Discrete(p) = &mut state.vars[1] {
        p[0] += 0.1;
        p[1] -= 0.1;
    }
    let c = constraint_residuals(&inst.graph, &inst.partition, &state).unwrap();
    assert!((c.max_marg_residual - 0.1).abs() < 1e-12);
    assert!(c.max_norm_residual < 1e-15);
}

#[test]
fn stationarity_detects_a_half_step() {
    let inst = instances::mixed_chain_gaussian().unwrap();
    let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
    let r0 = stationarity_residual(&inst.graph, &inst.partition, &res.state, &inst.em).unwrap();
    assert!(r0 < 1e-8);
    let mut state = res.state.clone();
    let x1 = inst.graph.var_by_name("x1").unwrap();
    if let VarBelief::Discrete(p) = &mut state.vars[x1.0] {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = 0.5 * *v + 0.5 * u);
    }
    let r1 = stationarity_residual(&inst.graph, &inst.partition, &state, &inst.em).unwrap();
    assert!(r1 > 1e-3, "{r1}");
}
