use bpmf_core::exact_oracle::{exact_marginals, mf_coordinate_descent};
use bpmf_core::free_energy::{bethe_free_energy, constraint_residuals, stationarity_residual};
use bpmf_core::instances;
use bpmf_core::message_passing::UpdateConfig;
use bpmf_core::numeric::max_abs_diff;
use bpmf_core::scheduler::{run_algorithm1, run_loopy, LoopySchedule, RunOptions, StopRule, Termination};
use bpmf_core::{Error, Extended};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn substep_opts() -> RunOptions {
    RunOptions {
        record_substeps: true,
        ..RunOptions::default()
    }
}

#[test]
fn random_trees_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let inst = instances::random_tree(&mut rng, 8, 4).unwrap();
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
        assert!(res.converged());
        let exact = exact_marginals(&inst.graph).unwrap();
        for i in inst.graph.vars() {
            let d = max_abs_diff(res.state.probs(i).unwrap(), &exact.vars[i.0]);
            assert!(d < 1e-10, "{d}");
        }
        let f = bethe_free_energy(&inst.graph, &res.state).unwrap().finite().unwrap();
        assert!(f.abs() < 1e-9, "{f}");
    }
}

#[test]
fn mean_field_is_monotone_and_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let inst = instances::random_mf(&mut rng).unwrap();
        let stop = StopRule {
            max_outer: 10_000,
            rel_free_energy_tol: None,
            message_delta_tol: 1e-13,
        };
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &stop, &substep_opts()).unwrap();
        assert!(res.converged());
        let fs: Vec<f64> = res.trace.substeps.iter().map(|s| s.free_energy.to_f64()).collect();
        for w in fs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        let r = stationarity_residual(&inst.graph, &inst.partition, &res.state, &inst.em).unwrap();
        assert!(r < 1e-9, "{r}");
    }
}

#[test]
fn mean_field_matches_independent_coordinate_descent() {
    let inst = instances::frustrated_pair(0.2).unwrap();
    let stop = StopRule {
        max_outer: 10_000,
        rel_free_energy_tol: None,
        message_delta_tol: 1e-14,
    };
    let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &stop, &RunOptions::default()).unwrap();
    let init = vec![vec![0.5, 0.5]; 2];
    let q = mf_coordinate_descent(&inst.graph, init, 1e-15, 100_000).unwrap();
    for i in inst.graph.vars() {
        assert!(max_abs_diff(res.state.probs(i).unwrap(), &q[i.0]) < 1e-10);
    }
}

#[test]
fn combined_schedule_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..100 {
        let inst = instances::random_applicable(&mut rng, k % 3 == 0).unwrap();
        let stop = StopRule {
            max_outer: 5_000,
            rel_free_energy_tol: None,
            message_delta_tol: 1e-12,
        };
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &stop, &RunOptions::default()).unwrap();
        assert!(res.converged(), "instance {k}");
        let fs: Vec<f64> = res.trace.free_energies().iter().map(|f| f.to_f64()).collect();
        for w in fs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "instance {k}: {} -> {}", w[0], w[1]);
        }
        let r = stationarity_residual(&inst.graph, &inst.partition, &res.state, &inst.em).unwrap();
        assert!(r < 1e-8, "instance {k}: {r}");
        let c = constraint_residuals(&inst.graph, &inst.partition, &res.state).unwrap();
        assert!(c.max_norm_residual < 1e-9 && c.max_marg_residual < 1e-9);
    }
}

#[test]
fn substeps_never_raise_free_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let inst = instances::random_applicable(&mut rng, true).unwrap();
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &substep_opts()).unwrap();
        let fs: Vec<f64> = res.trace.substeps.iter().map(|s| s.free_energy.to_f64()).collect();
        for w in fs.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn mixed_chain_with_gaussian_converges() {
    let inst = instances::mixed_chain_gaussian().unwrap();
    let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
    assert!(res.converged());
    let r = stationarity_residual(&inst.graph, &inst.partition, &res.state, &inst.em).unwrap();
    assert!(r < 1e-8, "{r}");
}

#[test]
fn binary_chain_matches_enumeration() {
    let inst = instances::binary_chain().unwrap();
    let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
    let exact = exact_marginals(&inst.graph).unwrap();
    for i in inst.graph.vars() {
        assert!(max_abs_diff(res.state.probs(i).unwrap(), &exact.vars[i.0]) < 1e-12);
    }
}

#[test]
fn loopy_four_cycle_is_close_to_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = instances::weak_four_cycle(&mut rng).unwrap();
    let res = run_loopy(&inst.graph, &inst.partition, &UpdateConfig::loopy(), &StopRule::default(), &LoopySchedule::default(), &RunOptions::default()).unwrap();
    assert!(res.converged());
    let exact = exact_marginals(&inst.graph).unwrap();
    for i in inst.graph.vars() {
        assert!(max_abs_diff(res.state.probs(i).unwrap(), &exact.vars[i.0]) < 1e-3);
    }
}

#[test]
fn cycle_is_refused_with_witness() {
    let inst = instances::three_cycle([[2.0, 1.0, 1.0, 2.0]; 3]).unwrap();
    let err = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap_err();
    match err {
        Error::NotApplicable(msg) => assert!(msg.contains("loopy"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn em_converges_to_posterior_mode() {
    for init in 0..3 {
        let inst = instances::em_toy(init).unwrap();
        let cfg = UpdateConfig {
            em: inst.em.clone(),
            ..UpdateConfig::default()
        };
        let res = run_algorithm1(&inst.graph, &inst.partition, &cfg, &StopRule::default(), &RunOptions::default()).unwrap();
        assert!(res.converged());
        let theta = inst.graph.var_by_name("theta").unwrap();
        let exact = exact_marginals(&inst.graph).unwrap();
        let mode = bpmf_core::numeric::argmax(&exact.vars[theta.0]);
        let p = res.state.probs(theta).unwrap();
        assert_eq!(p[mode], 1.0, "init {init}: {p:?} vs exact {:?}", exact.vars[theta.0]);
    }
}

#[test]
fn parity_chain_respects_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inst = instances::parity_chain(&mut rng).unwrap();
    let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
    assert!(res.converged());
    let f = res.trace.free_energies();
    assert!(f.last().unwrap().is_finite());
    assert!(matches!(res.termination, Termination::Converged));
    let _ = Extended::ZERO;
}

#[test]
fn loopy_on_a_tree_matches_exact_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let inst = instances::random_tree(&mut rng, 8, 3).unwrap();
        let cfg = UpdateConfig::default();
        let a = run_algorithm1(&inst.graph, &inst.partition, &cfg, &StopRule::default(), &RunOptions::default()).unwrap();
        let stop = StopRule {
            rel_free_energy_tol: None,
            message_delta_tol: 1e-14,
            ..StopRule::default()
        };
        let b = run_loopy(&inst.graph, &inst.partition, &cfg, &stop, &LoopySchedule::default(), &RunOptions::default()).unwrap();
        for i in inst.graph.vars() {
            assert!(max_abs_diff(a.state.probs(i).unwrap(), b.state.probs(i).unwrap()) < 1e-12);
        }
    }
}

#[test]
fn uniform_factors_give_uniform_marginals() {
    let mut b = bpmf_core::GraphBuilder::new();
    let x = b.discrete("x", 3);
    let y = b.discrete("y", 2);
    b.add_table("f", &[x, y], vec![1.0; 6]).unwrap();
    let g = b.build().unwrap();
    let p = bpmf_core::BpMfPartition::all_bp(&g).unwrap();
    let res = run_algorithm1(&g, &p, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
    assert!(max_abs_diff(res.state.probs(x).unwrap(), &[1.0 / 3.0; 3]) < 1e-15);
    assert!(max_abs_diff(res.state.probs(y).unwrap(), &[0.5; 2]) < 1e-15);
}

#[test]
fn parity_chain_marginals_match_codeword_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inst = instances::parity_chain(&mut rng).unwrap();
    // Pure-BP version of the same graph is a tree: exact.
    let all_bp = bpmf_core::BpMfPartition::all_bp(&inst.graph).unwrap();
    let res = run_algorithm1(&inst.graph, &all_bp, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
    let exact = exact_marginals(&inst.graph).unwrap();
    for i in inst.graph.vars() {
        assert!(max_abs_diff(res.state.probs(i).unwrap(), &exact.vars[i.0]) < 1e-12);
    }
    for a in inst.graph.factor_ids() {
        if let Some(bpmf_core::message_passing::FactorBelief::Table(t)) = &res.state.factors[a.0] {
            let f = match &inst.graph.factor(a).potential {
                bpmf_core::Potential::Table(f) => f.linear(),
                _ => unreachable!(),
            };
            for (bv, fv) in t.linear().iter().zip(f) {
                if fv == 0.0 {
                    assert_eq!(*bv, 0.0);
                }
            }
        }
    }
    assert!(res.trace.free_energies().last().unwrap().is_finite());
}

#[test]
fn trace_csv_layout() {
    let inst = instances::binary_chain().unwrap();
    let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default()).unwrap();
    let csv = res.trace.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "iteration,free_energy,marg_residual,stat_residual,max_delta");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 5);
    assert_eq!(row[0], "1");
    // 17 significant digits: one before the point, sixteen after.
    let mantissa = row[1].split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.len(), 18);
}

#[test]
fn contradictions_surface_as_errors() {
    let inst = instances::contradictory_parity().unwrap();
    let stop = StopRule::default();
    let err = run_loopy(&inst.graph, &inst.partition, &UpdateConfig::loopy(), &stop, &LoopySchedule::default(), &RunOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Contradiction(_)), "{err:?}");
}
