//! Schedules for the combined message passing.
//!
//! [`run_algorithm1`] alternates an exact forward/backward pass over the BP
//! part (a forest) with sequential mean-field updates of the variables outside
//! `I_BP`; every step lowers the combined free energy. [`run_loopy`] replaces
//! the exact pass by damped flooding sweeps and carries no such guarantee.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::factor_graph::{check_algorithm1_applicable, BpMfPartition, FactorGraph, FactorId, VarId, VarKind};
use crate::free_energy::{combined_free_energy, constraint_residuals, stationarity_residual, ConstraintResiduals};
use crate::gaussian_mf::{ComplexGaussian, InformationForm};
use crate::message_passing::{
    all_but_one, factor_belief, factor_sum_product, mf_factor_to_var, point_mass, scale_factor_message,
    BeliefState, FactorMessage, MessageState, Normalization, UpdateConfig, VarBelief,
};
use crate::numeric::{argmax, max_abs_diff, softmax};

/// Termination rule of the outer loop.
#[derive(Clone, Debug, PartialEq)]
pub struct StopRule {
    pub max_outer: usize,
    /// Stop when `|F_t - F_{t-1}| <= tol * max(1, |F_t|)`.
    pub rel_free_energy_tol: Option<f64>,
    /// Stop when the largest change of any belief or BP message between two
    /// outer iterations is below this value.
    pub message_delta_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_outer: 200,
            rel_free_energy_tol: Some(1e-9),
            message_delta_tol: 1e-8,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return Err(Error::InvalidArgument("max_outer must be positive".into()));
        }
        if !(self.message_delta_tol > 0.0) || self.rel_free_energy_tol.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters of the loopy BP part.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopySchedule {
    /// Flooding sweeps per outer iteration.
    pub inner_sweeps: usize,
    /// Divergence is declared when the message change grows for this many
    /// consecutive sweeps.
    pub divergence_window: usize,
}

impl Default for LoopySchedule {
    fn default() -> Self {
        LoopySchedule {
            inner_sweeps: 5,
            divergence_window: 10,
        }
    }
}

/// What to compute and record while running.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Record constraint and stationarity residuals each outer iteration.
    pub diagnostics: bool,
    /// Record the free energy after every step inside an outer iteration.
    pub record_substeps: bool,
    /// Always evaluate the free energy (it is also evaluated whenever the
    /// stop rule uses it or diagnostics are on).
    pub free_energy: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            diagnostics: true,
            record_substeps: false,
            free_energy: true,
        }
    }
}

/// Per-outer-iteration record.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub iteration: usize,
    pub free_energy: Option<Extended>,
    pub constraints: Option<ConstraintResiduals>,
    pub stat_residual: Option<f64>,
    pub max_delta: f64,
    pub elapsed: Duration,
}

/// Free energy after one step of an outer iteration.
#[derive(Clone, Debug)]
pub struct SubstepRecord {
    pub iteration: usize,
    /// `"bp"` for the BP pass, otherwise the name of the updated variable.
    pub label: String,
    pub free_energy: Extended,
}

/// Convergence trace of a run.
#[derive(Clone, Debug, Default)]
pub struct ScheduleTrace {
    pub records: Vec<TraceRecord>,
    pub substeps: Vec<SubstepRecord>,
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        Some(v) if v == f64::INFINITY => "inf".into(),
        Some(_) => "nan".into(),
        None => String::new(),
    }
}

impl ScheduleTrace {
    /// CSV with columns `iteration,free_energy,marg_residual,stat_residual,max_delta`
    /// and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,free_energy,marg_residual,stat_residual,max_delta\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iteration,
                fmt_opt(r.free_energy.map(Extended::to_f64)),
                fmt_opt(r.constraints.map(|c| c.max_marg_residual)),
                fmt_opt(r.stat_residual),
                fmt_opt(Some(r.max_delta)),
            ));
        }
        s
    }

    /// Free energies of all outer iterations that computed one.
    pub fn free_energies(&self) -> Vec<Extended> {
        self.records.iter().filter_map(|r| r.free_energy).collect()
    }
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The loopy BP part diverged at the given sweep.
    Diverged { sweep: usize },
}

/// Result of a schedule.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: BeliefState,
    pub trace: ScheduleTrace,
    pub termination: Termination,
    pub iterations: usize,
}

impl RunResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Log evidence per variable (empty vector when absent).
pub type Evidence = Vec<Vec<f64>>;

fn discrete_logs(m: &FactorMessage) -> &[f64] {
    m.logs().expect("discrete edge carries a discrete message")
}

/// Sum of the stored MF messages into every variable of `I_BP`.
pub fn mf_evidence(graph: &FactorGraph, partition: &BpMfPartition, messages: &MessageState) -> Evidence {
    graph
        .vars()
        .map(|i| {
            if !partition.in_ibp(i) {
                return Vec::new();
            }
            let card = graph.card(i).expect("BP variables are discrete");
            let mut acc = vec![0.0; card];
            for &(a, s) in partition.n_mf(i) {
                acc.iter_mut()
                    .zip(discrete_logs(&messages.m[graph.edge(a, s)]))
                    .for_each(|(x, y)| *x += y);
            }
            acc
        })
        .collect()
}

fn base_of(evidence: &[Vec<f64>], i: VarId, card: usize) -> Vec<f64> {
    match evidence.get(i.0) {
        Some(e) if !e.is_empty() => e.clone(),
        _ => vec![0.0; card],
    }
}

/// Recomputes `n_{i->a}` for all BP edges of `i`.
fn bp_var_side(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    messages: &mut MessageState,
    evidence: &[Vec<f64>],
    i: VarId,
) -> Result<()> {
    let card = graph.card(i).expect("BP variables are discrete");
    let edges: Vec<usize> = partition.n_bp(i).iter().map(|&(a, s)| graph.edge(a, s)).collect();
    let base = base_of(evidence, i, card);
    let ext = {
        let msgs: Vec<&[f64]> = edges.iter().map(|&e| discrete_logs(&messages.m[e])).collect();
        all_but_one(&base, &msgs)
    };
    for (e, n) in edges.into_iter().zip(ext) {
        if n.iter().all(|&l| l == f64::NEG_INFINITY) {
            return Err(Error::Contradiction(format!("all-zero message from `{}`", graph.variable(i).name)));
        }
        messages.n[e] = n;
    }
    Ok(())
}

/// Recomputes `m_{a->i}` for all edges of BP factor `a`; returns the largest
/// change of a normalized message.
fn bp_factor_side(
    graph: &FactorGraph,
    messages: &mut MessageState,
    a: FactorId,
    cfg: &UpdateConfig,
    damping: f64,
) -> Result<f64> {
    let edges: Vec<usize> = graph.factor_edges(a).collect();
    let km = {
        let incoming: Vec<&[f64]> = edges.iter().map(|&e| messages.n[e].as_slice()).collect();
        factor_sum_product(graph, a, &incoming)?
    };
    let mut delta: f64 = 0.0;
    for (k, (&e, out)) in edges.iter().zip(km.outgoing).enumerate() {
        let new = scale_factor_message(out, km.log_partition, cfg).map_err(|err| match err {
            Error::Contradiction(_) => Error::Contradiction(format!(
                "all-zero message from `{}` to `{}`",
                graph.factor(a).name,
                graph.variable(graph.scope(a)[k]).name
            )),
            other => other,
        })?;
        let old = discrete_logs(&messages.m[e]);
        let old_p = softmax(old).unwrap_or_else(|| vec![0.0; old.len()]);
        let mut new_p = softmax(&new).expect("nonzero message");
        let stored = if damping > 0.0 {
            for (p, q) in new_p.iter_mut().zip(&old_p) {
                *p = (1.0 - damping) * *p + damping * q;
            }
            new_p.iter().map(|&p| crate::numeric::ln0(p)).collect()
        } else {
            new
        };
        delta = delta.max(max_abs_diff(&new_p, &old_p));
        messages.m[e] = FactorMessage::Discrete(stored);
    }
    Ok(delta)
}

#[derive(Clone, Copy)]
enum Visit {
    Var(VarId, Option<usize>),
    Factor(FactorId, Option<usize>),
}

/// Exact two-pass message schedule over the BP part, which must be a forest.
/// `evidence` enters every BP variable as a fixed unary term.
pub fn forward_backward(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    messages: &mut MessageState,
    evidence: &[Vec<f64>],
    cfg: &UpdateConfig,
) -> Result<()> {
    if cfg.normalization == Normalization::ZNormalized {
        return Err(Error::InvalidArgument(
            "forward/backward computes raw or per-message normalized messages; rescale afterwards".into(),
        ));
    }
    let mut var_seen = vec![false; graph.num_vars()];
    let mut fac_seen = vec![false; graph.num_factors()];
    let mut order: Vec<Visit> = Vec::new();
    for root in partition.ibp() {
        if var_seen[root.0] {
            continue;
        }
        var_seen[root.0] = true;
        let start = order.len();
        order.push(Visit::Var(root, None));
        let mut k = start;
        while k < order.len() {
            match order[k] {
                Visit::Var(i, parent) => {
                    for &(a, s) in partition.n_bp(i) {
                        let e = graph.edge(a, s);
                        if Some(e) == parent {
                            continue;
                        }
                        if fac_seen[a.0] {
                            return Err(Error::Cycle(format!("factor `{}`", graph.factor(a).name)));
                        }
                        fac_seen[a.0] = true;
                        order.push(Visit::Factor(a, Some(e)));
                    }
                }
                Visit::Factor(a, parent) => {
                    for e in graph.factor_edges(a) {
                        if Some(e) == parent {
                            continue;
                        }
                        let (_, _, v) = graph.edge_info(e);
                        if var_seen[v.0] {
                            return Err(Error::Cycle(format!("variable `{}`", graph.variable(v).name)));
                        }
                        var_seen[v.0] = true;
                        order.push(Visit::Var(v, Some(e)));
                    }
                }
            }
            k += 1;
        }
    }
    // Inward pass: children before parents.
    for visit in order.iter().rev() {
        match *visit {
            Visit::Var(i, Some(_)) => bp_var_side(graph, partition, messages, evidence, i)?,
            Visit::Factor(a, Some(_)) => {
                bp_factor_side(graph, messages, a, cfg, 0.0)?;
            }
            _ => {}
        }
    }
    // Outward pass: parents before children.
    for visit in &order {
        match *visit {
            Visit::Var(i, _) => bp_var_side(graph, partition, messages, evidence, i)?,
            Visit::Factor(a, _) => {
                bp_factor_side(graph, messages, a, cfg, 0.0)?;
            }
        }
    }
    Ok(())
}

/// Outcome of a batch of flooding sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub sweeps: usize,
    pub last_delta: f64,
    pub diverged: bool,
}

/// Tracks consecutive growth of the per-sweep message change.
#[derive(Clone, Debug, Default)]
pub struct DivergenceMonitor {
    prev: Option<f64>,
    growing: usize,
    pub total_sweeps: usize,
}

impl DivergenceMonitor {
    fn observe(&mut self, delta: f64, window: usize) -> bool {
        self.total_sweeps += 1;
        if let Some(p) = self.prev {
            if delta > p {
                self.growing += 1;
            } else {
                self.growing = 0;
            }
        }
        self.prev = Some(delta);
        window > 0 && self.growing >= window
    }
}

/// Damped flooding sweeps over the BP part with fixed unary evidence.
/// Stops early when a sweep changes no normalized message by more than
/// `early_tol`.
#[allow(clippy::too_many_arguments)]
pub fn bp_sweeps(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    messages: &mut MessageState,
    evidence: &[Vec<f64>],
    cfg: &UpdateConfig,
    sweeps: usize,
    early_tol: f64,
    window: usize,
    monitor: &mut DivergenceMonitor,
) -> Result<SweepReport> {
    let vars = partition.ibp();
    let factors: Vec<FactorId> = partition.bp_factors().collect();
    for &i in &vars {
        bp_var_side(graph, partition, messages, evidence, i)?;
    }
    let mut last = 0.0;
    for s in 0..sweeps {
        let mut delta: f64 = 0.0;
        for &a in &factors {
            delta = delta.max(bp_factor_side(graph, messages, a, cfg, cfg.damping)?);
        }
        for &i in &vars {
            bp_var_side(graph, partition, messages, evidence, i)?;
        }
        last = delta;
        if monitor.observe(delta, window) {
            return Ok(SweepReport {
                sweeps: s + 1,
                last_delta: delta,
                diverged: true,
            });
        }
        if delta <= early_tol {
            return Ok(SweepReport {
                sweeps: s + 1,
                last_delta: delta,
                diverged: false,
            });
        }
    }
    Ok(SweepReport {
        sweeps,
        last_delta: last,
        diverged: false,
    })
}

/// A posteriori belief of a BP variable: evidence times all BP messages.
pub fn bp_var_belief(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    messages: &MessageState,
    evidence: &[Vec<f64>],
    i: VarId,
) -> Result<Vec<f64>> {
    let card = graph.card(i).ok_or_else(|| Error::InvalidArgument("BP belief of a Gaussian variable".into()))?;
    let mut acc = base_of(evidence, i, card);
    for &(a, s) in partition.n_bp(i) {
        acc.iter_mut()
            .zip(discrete_logs(&messages.m[graph.edge(a, s)]))
            .for_each(|(x, y)| *x += y);
    }
    softmax(&acc).ok_or_else(|| Error::Contradiction(format!("belief of `{}` vanishes", graph.variable(i).name)))
}

/// Sets beliefs of `I_BP` variables and BP factors from the current messages
/// and copies the beliefs into the messages towards MF factors.
fn finalize_bp(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    state: &mut BeliefState,
    evidence: &[Vec<f64>],
) -> Result<()> {
    for i in partition.ibp() {
        let b = bp_var_belief(graph, partition, &state.messages, evidence, i)?;
        for &(a, s) in partition.n_mf(i) {
            state.messages.n[graph.edge(a, s)] = b.iter().map(|&p| crate::numeric::ln0(p)).collect();
        }
        state.vars[i.0] = VarBelief::Discrete(b);
    }
    for a in partition.bp_factors() {
        let incoming: Vec<&[f64]> = graph.factor_edges(a).map(|e| state.messages.n[e].as_slice()).collect();
        state.factors[a.0] = Some(factor_belief(graph, a, &incoming)?);
    }
    Ok(())
}

/// Recomputes and stores every MF message into `i`.
fn refresh_mf_messages(graph: &FactorGraph, partition: &BpMfPartition, state: &mut BeliefState, i: VarId) -> Result<()> {
    for &(a, s) in partition.n_mf(i) {
        let m = mf_factor_to_var(graph, a, s, &state.vars)?;
        state.messages.m[graph.edge(a, s)] = m;
    }
    Ok(())
}

/// Coordinate update of a variable outside `I_BP`.
fn update_mf_var(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    state: &mut BeliefState,
    cfg: &UpdateConfig,
    i: VarId,
) -> Result<()> {
    refresh_mf_messages(graph, partition, state, i)?;
    let belief = match graph.variable(i).kind {
        VarKind::Discrete { card } => {
            let mut acc = vec![0.0; card];
            for &(a, s) in partition.n_mf(i) {
                acc.iter_mut()
                    .zip(discrete_logs(&state.messages.m[graph.edge(a, s)]))
                    .for_each(|(x, y)| *x += y);
            }
            if acc.iter().all(|&l| l == f64::NEG_INFINITY) {
                return Err(Error::Contradiction(format!("belief of `{}` vanishes", graph.variable(i).name)));
            }
            let p = if cfg.em.contains(i) {
                point_mass(card, argmax(&acc))
            } else {
                softmax(&acc).expect("nonzero")
            };
            for &(a, s) in partition.n_mf(i) {
                state.messages.n[graph.edge(a, s)] = p.iter().map(|&v| crate::numeric::ln0(v)).collect();
            }
            VarBelief::Discrete(p)
        }
        VarKind::Gaussian { dim } => {
            let mut acc = InformationForm::zeros(dim);
            for &(a, s) in partition.n_mf(i) {
                match &state.messages.m[graph.edge(a, s)] {
                    FactorMessage::Gaussian(ev) => ev.accumulate(&mut acc)?,
                    FactorMessage::Discrete(_) => unreachable!("Gaussian edge"),
                }
            }
            VarBelief::Gaussian(acc.to_gaussian()?)
        }
    };
    state.vars[i.0] = belief;
    Ok(())
}

/// Initial state: uniform discrete beliefs (point masses for EM variables) and
/// Gaussian beliefs formed from the factors that involve only that variable.
pub fn init_state(graph: &FactorGraph, partition: &BpMfPartition, cfg: &UpdateConfig) -> Result<BeliefState> {
    let mut messages = MessageState::new(graph);
    let mut vars = Vec::with_capacity(graph.num_vars());
    for i in graph.vars() {
        let b = match graph.variable(i).kind {
            VarKind::Discrete { card } => match cfg.em.vars.get(&i) {
                Some(&x) => VarBelief::Discrete(point_mass(card, x)),
                None => VarBelief::Discrete(vec![1.0 / card as f64; card]),
            },
            VarKind::Gaussian { dim } => {
                let mut acc = InformationForm::zeros(dim);
                let placeholder: Vec<VarBelief> = Vec::new();
                for &(a, s) in graph.neighbors(i) {
                    if graph.scope(a).len() == 1 {
                        let m = mf_factor_to_var(graph, a, s, &placeholder)?;
                        if let FactorMessage::Gaussian(ev) = &m {
                            ev.accumulate(&mut acc)?;
                        }
                        messages.m[graph.edge(a, s)] = m;
                    }
                }
                VarBelief::Gaussian(acc.to_gaussian().unwrap_or_else(|_| ComplexGaussian::standard(dim)))
            }
        };
        if let VarBelief::Discrete(p) = &b {
            for &(a, s) in partition.n_mf(i) {
                messages.n[graph.edge(a, s)] = p.iter().map(|&v| crate::numeric::ln0(v)).collect();
            }
        }
        vars.push(b);
    }
    Ok(BeliefState {
        vars,
        factors: vec![None; graph.num_factors()],
        messages,
    })
}

struct Snapshot {
    vars: Vec<VarBelief>,
    bp: Vec<Vec<f64>>,
}

fn snapshot(graph: &FactorGraph, partition: &BpMfPartition, state: &BeliefState) -> Snapshot {
    let mut bp = Vec::new();
    for a in partition.bp_factors() {
        for e in graph.factor_edges(a) {
            let l = discrete_logs(&state.messages.m[e]);
            bp.push(softmax(l).unwrap_or_else(|| vec![0.0; l.len()]));
        }
    }
    Snapshot {
        vars: state.vars.clone(),
        bp,
    }
}

fn snapshot_delta(a: &Snapshot, b: &Snapshot) -> f64 {
    let mut d: f64 = 0.0;
    for (x, y) in a.vars.iter().zip(&b.vars) {
        d = d.max(match (x, y) {
            (VarBelief::Discrete(p), VarBelief::Discrete(q)) => max_abs_diff(p, q),
            (VarBelief::Gaussian(g), VarBelief::Gaussian(h)) => {
                let dm = (g.mean() - h.mean()).camax();
                let dv = max_abs_diff(&g.marginal_variances(), &h.marginal_variances());
                dm.max(dv)
            }
            _ => f64::INFINITY,
        });
    }
    for (p, q) in a.bp.iter().zip(&b.bp) {
        d = d.max(max_abs_diff(p, q));
    }
    d
}

enum BpStep<'s> {
    Exact,
    Loopy(&'s LoopySchedule),
}

fn run(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    cfg: &UpdateConfig,
    stop: &StopRule,
    opts: &RunOptions,
    step: BpStep<'_>,
) -> Result<RunResult> {
    cfg.validate()?;
    stop.validate()?;
    cfg.em.validate(graph, partition)?;
    let start = Instant::now();
    let mut state = init_state(graph, partition, cfg)?;
    let mut trace = ScheduleTrace::default();
    let mut prev = snapshot(graph, partition, &state);
    let mut prev_f: Option<Extended> = None;
    let boundary = partition.boundary();
    let mf_only = partition.mf_only();
    let mut monitor = DivergenceMonitor::default();
    let want_f = opts.free_energy || opts.diagnostics || stop.rel_free_energy_tol.is_some();
    for t in 1..=stop.max_outer {
        for &i in &boundary {
            refresh_mf_messages(graph, partition, &mut state, i)?;
        }
        let evidence = mf_evidence(graph, partition, &state.messages);
        match &step {
            BpStep::Exact => forward_backward(graph, partition, &mut state.messages, &evidence, cfg)?,
            BpStep::Loopy(schedule) => {
                let report = bp_sweeps(
                    graph,
                    partition,
                    &mut state.messages,
                    &evidence,
                    cfg,
                    schedule.inner_sweeps,
                    0.0,
                    schedule.divergence_window,
                    &mut monitor,
                )?;
                if report.diverged {
                    finalize_bp(graph, partition, &mut state, &evidence)?;
                    return Ok(RunResult {
                        state,
                        trace,
                        termination: Termination::Diverged {
                            sweep: monitor.total_sweeps,
                        },
                        iterations: t,
                    });
                }
            }
        }
        finalize_bp(graph, partition, &mut state, &evidence)?;
        if opts.record_substeps {
            trace.substeps.push(SubstepRecord {
                iteration: t,
                label: "bp".into(),
                free_energy: combined_free_energy(graph, partition, &state)?,
            });
        }
        for &i in &mf_only {
            update_mf_var(graph, partition, &mut state, cfg, i)?;
            if opts.record_substeps {
                trace.substeps.push(SubstepRecord {
                    iteration: t,
                    label: graph.variable(i).name.clone(),
                    free_energy: combined_free_energy(graph, partition, &state)?,
                });
            }
        }
        let now = snapshot(graph, partition, &state);
        let delta = snapshot_delta(&now, &prev);
        prev = now;
        let f = if want_f {
            Some(combined_free_energy(graph, partition, &state)?)
        } else {
            None
        };
        let (constraints, stat) = if opts.diagnostics {
            (
                Some(constraint_residuals(graph, partition, &state)?),
                Some(stationarity_residual(graph, partition, &state, &cfg.em)?),
            )
        } else {
            (None, None)
        };
        trace.records.push(TraceRecord {
            iteration: t,
            free_energy: f,
            constraints,
            stat_residual: stat,
            max_delta: delta,
            elapsed: start.elapsed(),
        });
        let mut done = t >= 2 && delta < stop.message_delta_tol;
        if let (Some(tol), Some(Extended::Finite(cur)), Some(Extended::Finite(old))) =
            (stop.rel_free_energy_tol, f, prev_f)
        {
            if t >= 2 && (cur - old).abs() <= tol * cur.abs().max(1.0) {
                done = true;
            }
        }
        prev_f = f;
        if done {
            return Ok(RunResult {
                state,
                trace,
                termination: Termination::Converged,
                iterations: t,
            });
        }
    }
    Ok(RunResult {
        state,
        trace,
        termination: Termination::MaxIterations,
        iterations: stop.max_outer,
    })
}

/// Exact schedule: forward/backward over the BP forest with the MF messages as
/// fixed evidence, then sequential updates of the variables in `I_MF \ I_BP`
/// in ascending id order. Refuses instances whose BP part has a cycle or whose
/// MF factors touch more than one BP variable.
pub fn run_algorithm1(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    cfg: &UpdateConfig,
    stop: &StopRule,
    opts: &RunOptions,
) -> Result<RunResult> {
    let app = check_algorithm1_applicable(graph, partition);
    if !app.is_applicable() {
        return Err(Error::NotApplicable(app.describe(graph)));
    }
    run(graph, partition, cfg, stop, opts, BpStep::Exact)
}

/// Loopy schedule: like [`run_algorithm1`] but the BP part is updated by
/// `inner_sweeps` damped flooding sweeps per outer iteration, warm-started
/// from the previous messages.
pub fn run_loopy(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    cfg: &UpdateConfig,
    stop: &StopRule,
    schedule: &LoopySchedule,
    opts: &RunOptions,
) -> Result<RunResult> {
    if schedule.inner_sweeps == 0 {
        return Err(Error::InvalidArgument("inner_sweeps must be positive".into()));
    }
    run(graph, partition, cfg, stop, opts, BpStep::Loopy(schedule))
}
