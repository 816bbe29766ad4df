//! Oracle-backed verification suite.
//!
//! Every check draws its instances from a generator seeded by the suite seed,
//! compares the message-passing result against brute-force enumeration or a
//! closed form, and returns a one-line summary. Reports contain no timings so
//! that identical seeds give byte-identical output.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use bpmf_core::exact_oracle::{exact_marginals, mf_coordinate_descent};
use bpmf_core::free_energy::{
    bethe_free_energy, combined_free_energy, constraint_residuals, mf_free_energy, stationarity_residual,
};
use bpmf_core::gaussian_mf::{gaussian_product, posterior_update, CMatrix, CVector, ComplexGaussian, QuadraticEvidence};
use bpmf_core::instances::{self, Instance};
use bpmf_core::message_passing::{
    log_inverse_z, rescaling_check, BeliefState, FactorBelief, MessageState, Normalization, RescaleReport,
    UnnormalizedSolution, UpdateConfig,
};
use bpmf_core::numeric::{argmax, max_abs_diff, next_config};
use bpmf_core::scheduler::{forward_backward, run_algorithm1, run_loopy, LoopySchedule, RunOptions, StopRule};
use bpmf_core::{BpMfPartition, Complex64, Error, Extended, FactorGraph, FactorId};
use bpmf_ofdm::{BerPoint, ReceiverKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solver used by the tree checks; replaceable to test the suite itself.
pub type TreeSolver = fn(&FactorGraph, &BpMfPartition) -> bpmf_core::Result<BeliefState>;

/// Exact schedule with default settings.
pub fn default_tree_solver(graph: &FactorGraph, partition: &BpMfPartition) -> bpmf_core::Result<BeliefState> {
    let res = run_algorithm1(graph, partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default())?;
    Ok(res.state)
}

#[derive(Clone, Debug)]
pub struct Suite {
    pub seed: u64,
    /// Random instances per randomized check.
    pub instances: usize,
    pub tree_solver: TreeSolver,
}

impl Suite {
    pub fn new(seed: u64) -> Self {
        Suite {
            seed,
            instances: 100,
            tree_solver: default_tree_solver,
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Result of one named check.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: &'static str,
    pub name: &'static str,
    /// The property of the method the check exercises.
    pub anchor: &'static str,
    pub result: Result<String, String>,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.result.is_ok()
    }

    /// Report line without timing.
    pub fn line(&self) -> String {
        let (tag, msg) = match &self.result {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        format!("[{tag}] {} {} ({}): {msg}", self.id, self.name, self.anchor)
    }
}

type CheckFn = fn(&Suite) -> Result<String, String>;

/// `(id, name, anchor, check)` for the structural checks.
pub const CHECKS: [(&str, &str, &str, CheckFn); 8] = [
    ("1", "tree-exactness", "BP fixed points on trees give exact marginals and zero Bethe free energy", tree_exactness),
    ("2", "mf-monotonicity", "mean-field coordinate updates never raise the MF free energy", mf_monotonicity),
    ("3", "combined-monotonicity", "the combined schedule descends the BP/MF free energy to a stationary point", combined_monotonicity),
    ("4", "reductions", "the combined free energy reduces to Bethe without MF factors and to MF without BP factors", reductions),
    ("5", "hard-constraints", "beliefs stay inside the support of hard BP factors", hard_constraints),
    ("6", "rescaling", "unnormalized fixed points are rescalable exactly when omega = g_i z_a", rescaling),
    ("7", "gaussian", "Gaussian messages multiply by adding precisions and precision-weighted means", gaussian),
    ("8", "em", "EM is mean field with point-mass beliefs", em),
];

fn timed(id: &'static str, name: &'static str, anchor: &'static str, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let start = Instant::now();
    let result = f();
    Outcome {
        id,
        name,
        anchor,
        result,
        elapsed: start.elapsed(),
    }
}

/// Runs one structural check by id.
pub fn run_check(suite: &Suite, id: &str) -> Option<Outcome> {
    CHECKS
        .iter()
        .find(|c| c.0 == id)
        .map(|&(id, name, anchor, f)| timed(id, name, anchor, || f(suite)))
}

/// Runs all structural checks in order.
pub fn run_structural(suite: &Suite) -> Vec<Outcome> {
    CHECKS
        .iter()
        .map(|&(id, name, anchor, f)| timed(id, name, anchor, || f(suite)))
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn tree_exactness(s: &Suite) -> Result<String, String> {
    let mut rng = s.rng(1);
    let (mut worst, mut worst_f) = (0.0f64, 0.0f64);
    for k in 0..s.instances {
        let inst = instances::random_tree(&mut rng, 8, 4).map_err(err)?;
        let state = (s.tree_solver)(&inst.graph, &inst.partition).map_err(err)?;
        let exact = exact_marginals(&inst.graph).map_err(err)?;
        for i in inst.graph.vars() {
            let b = state.probs(i).ok_or("missing discrete belief")?;
            worst = worst.max(max_abs_diff(b, &exact.vars[i.0]));
        }
        let f = bethe_free_energy(&inst.graph, &state).map_err(err)?.to_f64();
        worst_f = worst_f.max(f.abs());
        ensure(worst < 1e-10 && worst_f < 1e-9, || {
            format!("instance {k}: marginal error {worst:.3e}, |Bethe| {worst_f:.3e}")
        })?;
    }
    Ok(format!(
        "{} trees, max marginal error {worst:.1e}, max |Bethe| {worst_f:.1e}",
        s.instances
    ))
}

fn mf_monotonicity(s: &Suite) -> Result<String, String> {
    let mut rng = s.rng(2);
    let stop = StopRule {
        max_outer: 10_000,
        rel_free_energy_tol: None,
        message_delta_tol: 1e-13,
    };
    let opts = RunOptions {
        record_substeps: true,
        ..RunOptions::default()
    };
    let (mut rise, mut resid, mut updates) = (f64::NEG_INFINITY, 0.0f64, 0usize);
    for k in 0..s.instances {
        let inst = instances::random_mf(&mut rng).map_err(err)?;
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &stop, &opts).map_err(err)?;
        ensure(res.converged(), || format!("instance {k} did not converge"))?;
        let fs: Vec<f64> = res.trace.substeps.iter().map(|x| x.free_energy.to_f64()).collect();
        updates += fs.len();
        for w in fs.windows(2) {
            rise = rise.max(w[1] - w[0]);
        }
        resid = resid.max(stationarity_residual(&inst.graph, &inst.partition, &res.state, &inst.em).map_err(err)?);
        ensure(rise <= 1e-12 && resid < 1e-9, || {
            format!("instance {k}: largest rise {rise:.3e}, stationarity residual {resid:.3e}")
        })?;
    }
    Ok(format!(
        "{} instances, {updates} coordinate updates, largest rise {:.1e}, max residual {resid:.1e}",
        s.instances,
        rise.max(0.0)
    ))
}

fn combined_monotonicity(s: &Suite) -> Result<String, String> {
    let mut rng = s.rng(3);
    let stop = StopRule {
        max_outer: 5_000,
        rel_free_energy_tol: None,
        message_delta_tol: 1e-12,
    };
    let (mut rise, mut resid, mut cons) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for k in 0..s.instances {
        let inst = instances::random_applicable(&mut rng, k % 3 == 0).map_err(err)?;
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &stop, &RunOptions::default())
            .map_err(err)?;
        ensure(res.converged(), || format!("instance {k} did not converge"))?;
        let fs: Vec<f64> = res.trace.free_energies().iter().map(|f| f.to_f64()).collect();
        for w in fs.windows(2) {
            rise = rise.max(w[1] - w[0]);
        }
        resid = resid.max(stationarity_residual(&inst.graph, &inst.partition, &res.state, &inst.em).map_err(err)?);
        let c = constraint_residuals(&inst.graph, &inst.partition, &res.state).map_err(err)?;
        cons = cons.max(c.max_marg_residual).max(c.max_norm_residual);
        ensure(rise <= 1e-12 && resid < 1e-8 && cons < 1e-9, || {
            format!("instance {k}: largest rise {rise:.3e}, stationarity {resid:.3e}, constraints {cons:.3e}")
        })?;
    }
    Ok(format!(
        "{} instances, largest rise {:.1e}, stationarity {resid:.1e}, constraints {cons:.1e}",
        s.instances,
        rise.max(0.0)
    ))
}

fn reductions(s: &Suite) -> Result<String, String> {
    let mut rng = s.rng(4);
    let n = s.instances.min(20);
    for k in 0..n {
        // Pure BP: the combined schedule and the combined free energy against
        // plain forward/backward and the Bethe free energy.
        let inst = instances::random_tree(&mut rng, 6, 3).map_err(err)?;
        let state = (s.tree_solver)(&inst.graph, &inst.partition).map_err(err)?;
        let mut msgs = MessageState::new(&inst.graph);
        let evidence = vec![Vec::new(); inst.graph.num_vars()];
        forward_backward(&inst.graph, &inst.partition, &mut msgs, &evidence, &UpdateConfig::default()).map_err(err)?;
        let same_msgs = msgs.n.iter().zip(&state.messages.n).all(|(a, b)| bits_equal(a, b))
            && msgs
                .m
                .iter()
                .zip(&state.messages.m)
                .all(|(a, b)| bits_equal(a.logs().unwrap_or(&[]), b.logs().unwrap_or(&[])));
        ensure(same_msgs, || format!("tree {k}: combined messages differ from pure BP"))?;
        let a = combined_free_energy(&inst.graph, &inst.partition, &state).map_err(err)?;
        let b = bethe_free_energy(&inst.graph, &state).map_err(err)?;
        ensure(a.to_f64().to_bits() == b.to_f64().to_bits(), || format!("tree {k}: {a:?} vs Bethe {b:?}"))?;

        // Pure MF: combined free energy against the MF functional and the
        // schedule against independent coordinate descent.
        let mf = instances::random_mf(&mut rng).map_err(err)?;
        let stop = StopRule {
            max_outer: 10_000,
            rel_free_energy_tol: None,
            message_delta_tol: 1e-14,
        };
        let res = run_algorithm1(&mf.graph, &mf.partition, &UpdateConfig::default(), &stop, &RunOptions::default())
            .map_err(err)?;
        let a = combined_free_energy(&mf.graph, &mf.partition, &res.state).map_err(err)?;
        let b = mf_free_energy(&mf.graph, &res.state).map_err(err)?;
        ensure(a.to_f64().to_bits() == b.to_f64().to_bits(), || format!("MF {k}: {a:?} vs MF {b:?}"))?;
        let init = mf.graph.vars().map(|i| vec![1.0 / mf.graph.card(i).unwrap() as f64; mf.graph.card(i).unwrap()]);
        let q = mf_coordinate_descent(&mf.graph, init.collect(), 1e-15, 100_000).map_err(err)?;
        let d = mf
            .graph
            .vars()
            .map(|i| max_abs_diff(res.state.probs(i).unwrap(), &q[i.0]))
            .fold(0.0, f64::max);
        ensure(d < 1e-9, || format!("MF {k}: beliefs differ from coordinate descent by {d:.3e}"))?;
    }
    Ok(format!("{n} pure-BP and {n} pure-MF instances reproduced bit for bit"))
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Largest belief mass on configurations where the factor is zero.
fn mass_outside_support(graph: &FactorGraph, partition: &BpMfPartition, state: &BeliefState) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for a in partition.bp_factors() {
        let Some(FactorBelief::Table(t)) = &state.factors[a.0] else {
            continue;
        };
        let cards = t.cards().to_vec();
        let probs = t.linear();
        let mut config = vec![0; cards.len()];
        for p in probs {
            if graph.log_factor_value(a, &config).map_err(err)? == f64::NEG_INFINITY {
                worst = worst.max(p);
            }
            next_config(&mut config, &cards);
        }
    }
    Ok(worst)
}

fn hard_constraints(s: &Suite) -> Result<String, String> {
    let mut rng = s.rng(5);
    let mut runs = 0;
    for k in 0..s.instances.min(20) {
        let inst = instances::parity_chain(&mut rng).map_err(err)?;
        let res = run_algorithm1(&inst.graph, &inst.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default())
            .map_err(err)?;
        check_support(&inst, &res.state, &format!("parity chain {k}"))?;
        runs += 1;
    }
    let tri = instances::parity_triangle().map_err(err)?;
    let res = run_loopy(&tri.graph, &tri.partition, &UpdateConfig::loopy(), &StopRule::default(), &LoopySchedule::default(), &RunOptions::default())
        .map_err(err)?;
    check_support(&tri, &res.state, "parity triangle")?;

    // Move the belief of one parity factor to the uniform table.
    let mut forced = res.state.clone();
    let scope = tri.graph.scope(FactorId(0)).to_vec();
    let uniform = bpmf_core::tabular::Table::new(scope, vec![2, 2, 2], vec![0.125; 8]).map_err(err)?;
    forced.factors[0] = Some(FactorBelief::Table(uniform));
    let f = combined_free_energy(&tri.graph, &tri.partition, &forced).map_err(err)?;
    ensure(f == Extended::PosInfinity, || format!("mass on a zero of f_a gave {f:?}"))?;

    let bad = instances::contradictory_parity().map_err(err)?;
    let r = run_algorithm1(&bad.graph, &bad.partition, &UpdateConfig::default(), &StopRule::default(), &RunOptions::default());
    ensure(matches!(r, Err(Error::Contradiction(_))), || "contradictory evidence was not reported".into())?;
    Ok(format!(
        "{runs} parity chains and the parity triangle stay in support with finite F; forced mass gives +inf; contradiction detected"
    ))
}

fn check_support(inst: &Instance, state: &BeliefState, what: &str) -> Result<(), String> {
    let out = mass_outside_support(&inst.graph, &inst.partition, state)?;
    ensure(out == 0.0, || format!("{what}: mass {out:e} outside the factor support"))?;
    let f = combined_free_energy(&inst.graph, &inst.partition, state).map_err(err)?;
    ensure(f.is_finite(), || format!("{what}: free energy {f:?}"))
}

fn rescaling(s: &Suite) -> Result<String, String> {
    let mut rng = s.rng(6);
    let cfg = UpdateConfig {
        normalization: Normalization::Unnormalized { omega: 1.0 },
        ..UpdateConfig::default()
    };
    let n = s.instances.min(20);
    for k in 0..n {
        let inst = instances::random_tree(&mut rng, 8, 4).map_err(err)?;
        let mut msgs = MessageState::new(&inst.graph);
        let evidence = vec![Vec::new(); inst.graph.num_vars()];
        forward_backward(&inst.graph, &inst.partition, &mut msgs, &evidence, &cfg).map_err(err)?;
        let sol = UnnormalizedSolution {
            n: msgs.n.clone(),
            m: msgs.m.iter().map(|x| x.logs().unwrap().to_vec()).collect(),
            log_omega: vec![0.0; inst.graph.num_edges()],
        };
        match rescaling_check(&inst.graph, &sol, 1e-9).map_err(err)? {
            RescaleReport::Rescalable { g, .. } => {
                let d = g.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
                ensure(d < 1e-9, || format!("tree {k}: g deviates from 1 by {d:.3e}"))?;
            }
            other => return Err(format!("tree {k}: {other:?}")),
        }
    }
    let tri = instances::three_cycle([[3.0, 1.0, 1.0, 2.0], [1.0, 2.0, 4.0, 1.0], [2.0, 1.0, 1.0, 1.0]]).map_err(err)?;
    let sol = instances::unnormalized_flooding(&tri.graph, 60).map_err(err)?;
    let report = rescaling_check(&tri.graph, &sol, 1e-6).map_err(err)?;
    ensure(matches!(report, RescaleReport::NotRescalable { .. }), || format!("loopy counterexample: {report:?}"))?;
    let inv_z = log_inverse_z(&tri.graph, &sol.n).map_err(err)?;
    let grid: Vec<f64> = (-2000..=2000).map(|k| k as f64 * 0.01).collect();
    let mut best: f64 = 0.0;
    for i in tri.graph.vars() {
        let v = grid
            .iter()
            .map(|&lg| {
                tri.graph
                    .neighbors(i)
                    .iter()
                    .map(|&(a, _)| ((lg - inv_z[a.0]).exp() - 1.0).abs())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        best = best.max(v);
    }
    ensure(best > 1e-3, || format!("grid search found g with defect {best:.3e}"))?;
    Ok(format!(
        "{n} trees rescalable with g = 1; loopy counterexample not rescalable, best grid defect {best:.3}"
    ))
}

fn gaussian(s: &Suite) -> Result<String, String> {
    let c = Complex64::new;
    let mut rng = s.rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut scalar = || {
            let mu = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lam = rng.gen_range(0.2..3.0);
            ComplexGaussian::new(CVector::from_element(1, mu), CMatrix::from_element(1, 1, c(lam, 0.0))).map_err(err)
        };
        let (a, b) = (scalar()?, scalar()?);
        let p = gaussian_product(&[(&a).into(), (&b).into()]).map_err(err)?;
        let mut offset = None;
        for i in -12..=12 {
            for j in -12..=12 {
                let x = CVector::from_element(1, c(i as f64 * 0.25, j as f64 * 0.25));
                let d = a.log_density(&x) + b.log_density(&x) - p.log_density(&x);
                let o = *offset.get_or_insert(d);
                worst = worst.max((d - o).abs());
            }
        }
    }
    ensure(worst < 1e-9, || format!("grid log-density defect {worst:.3e}"))?;

    // Pilot-aided posterior against the LMMSE closed form.
    let n = 16;
    let cov = CMatrix::from_fn(n, n, |k, l| {
        let d = k as f64 - l as f64;
        c(1.0, 0.0) / c(1.0, 2.0 * std::f64::consts::PI * d * 0.05) + if k == l { c(0.01, 0.0) } else { c(0.0, 0.0) }
    });
    let prior = ComplexGaussian::from_covariance(CVector::zeros(n), cov.clone()).map_err(err)?;
    let pilots = [0usize, 5, 10, 15];
    let xp: Vec<Complex64> = (0..4)
        .map(|k| c(if k & 1 == 0 { 1.0 } else { -1.0 }, if k & 2 == 0 { 1.0 } else { -1.0 }) / 2f64.sqrt())
        .collect();
    let y: Vec<Complex64> = (0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let gamma = 8.0;
    let mut ev = QuadraticEvidence::zeros(n);
    for (k, &p) in pilots.iter().enumerate() {
        ev.precision[p] = gamma * xp[k].norm_sqr();
        ev.info[p] = y[k] * xp[k].conj() * gamma;
    }
    let post = posterior_update(&prior, &ev).map_err(err)?;
    let a = CMatrix::from_fn(pilots.len(), n, |r, k| if pilots[r] == k { xp[r] } else { c(0.0, 0.0) });
    let sm = &a * &cov * a.adjoint() + CMatrix::identity(4, 4) * c(1.0 / gamma, 0.0);
    let s_inv = sm.try_inverse().ok_or("singular innovation covariance")?;
    let h = &cov * a.adjoint() * &s_inv * CVector::from_vec(y);
    let post_cov = &cov - &cov * a.adjoint() * &s_inv * &a * &cov;
    let dm = (post.mean() - h).camax();
    let dc = (post.covariance() - post_cov).camax();
    ensure(dm < 1e-10 && dc < 1e-10, || format!("LMMSE mismatch: mean {dm:.3e}, covariance {dc:.3e}"))?;
    Ok(format!(
        "grid defect {worst:.1e}; 16-carrier pilot posterior vs LMMSE: mean {dm:.1e}, covariance {dc:.1e}"
    ))
}

fn em(_: &Suite) -> Result<String, String> {
    for init in 0..3 {
        let inst = instances::em_toy(init).map_err(err)?;
        let cfg = UpdateConfig {
            em: inst.em.clone(),
            ..UpdateConfig::default()
        };
        let res = run_algorithm1(&inst.graph, &inst.partition, &cfg, &StopRule::default(), &RunOptions::default())
            .map_err(err)?;
        ensure(res.converged(), || format!("init {init} did not converge"))?;
        let theta = inst.graph.var_by_name("theta").ok_or("missing theta")?;
        let exact = exact_marginals(&inst.graph).map_err(err)?;
        let mode = argmax(&exact.vars[theta.0]);
        let p = res.state.probs(theta).ok_or("missing theta belief")?;
        ensure(p[mode] == 1.0, || format!("init {init}: belief {p:?}, exact posterior {:?}", exact.vars[theta.0]))?;
    }
    Ok("all 3 initializations reach the exact posterior mode".into())
}

/// Criterion 9 checks on a finished desk-scale sweep.
pub fn ber_checks(points: &[BerPoint]) -> Vec<Outcome> {
    let series = |r: ReceiverKind| -> Vec<&BerPoint> { points.iter().filter(|p| p.receiver == r).collect() };
    let mut out = Vec::new();

    let a = (|| {
        for r in ReceiverKind::ALL {
            let s = series(r);
            ensure(!s.is_empty(), || format!("no points for {r}"))?;
            for w in s.windows(2) {
                ensure(w[1].ber() <= w[0].ber(), || {
                    format!("{r}: BER rises from {:.3e} at {} dB to {:.3e} at {} dB", w[0].ber(), w[0].snr_db, w[1].ber(), w[1].snr_db)
                })?;
            }
        }
        Ok("BER non-increasing in Eb/N0 for bp-mf, bp-gauss and perfect-csi".to_string())
    })();
    out.push(Outcome {
        id: "9a",
        name: "ber-monotone",
        anchor: "BER curves fall with SNR",
        result: a,
        elapsed: Duration::ZERO,
    });

    let b = (|| {
        let (m, g) = (series(ReceiverKind::BpMf), series(ReceiverKind::BpGauss));
        let mut compared = 0;
        for (x, y) in m.iter().zip(&g) {
            if x.ber() > 1e-4 || y.ber() > 1e-4 {
                compared += 1;
                ensure(x.ber() <= y.ber(), || {
                    format!("{} dB: bp-mf {:.3e} > bp-gauss {:.3e}", x.snr_db, x.ber(), y.ber())
                })?;
            }
        }
        Ok(format!("bp-mf <= bp-gauss at all {compared} points above 1e-4"))
    })();
    out.push(Outcome {
        id: "9b",
        name: "ber-ordering",
        anchor: "BP-MF outperforms BP with Gaussian-approximated channel messages",
        result: b,
        elapsed: Duration::ZERO,
    });

    let c = (|| {
        let m = *series(ReceiverKind::BpMf).last().ok_or("no bp-mf points")?;
        let p = *series(ReceiverKind::PerfectCsi).last().ok_or("no perfect-csi points")?;
        // Zero observed errors are read as one error in the simulated bits.
        let floor = 1.0 / p.bits as f64;
        let reference = p.ber().max(floor);
        ensure(m.ber() <= 10.0 * reference, || {
            format!("{} dB: bp-mf {:.3e} vs perfect-csi {:.3e}", m.snr_db, m.ber(), p.ber())
        })?;
        Ok(format!(
            "{} dB: bp-mf {:.3e} ({} errors) vs perfect-csi {:.3e} ({} errors), floor {floor:.1e}",
            m.snr_db,
            m.ber(),
            m.bit_errors,
            p.ber(),
            p.bit_errors
        ))
    })();
    out.push(Outcome {
        id: "9c",
        name: "ber-near-perfect-csi",
        anchor: "BP-MF is close to decoding with perfect channel knowledge",
        result: c,
        elapsed: Duration::ZERO,
    });
    out
}

/// Full report text, one line per outcome plus a summary.
pub fn report(outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        let _ = writeln!(s, "{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    let _ = writeln!(s, "{} checks, {failed} failed", outcomes.len());
    s
}
