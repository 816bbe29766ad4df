//! Receiver factor graph and the three receivers.
//!
//! All receivers share one graph per received OFDM symbol:
//!
//! * BP part: the code constraint over `(U, C)`, one modulation constraint per
//!   data carrier tying `X_n` to its `L` interleaved code bits, and a zero
//!   constraint on every padding bit.
//! * MF part: the channel prior on `H`, one observation per pilot on `H` alone
//!   and one observation per data carrier on `(H, X_n)`.
//!
//! The BP-MF receiver runs the generic loopy schedule on this graph. The
//! baseline and the perfect-CSI receiver reuse its BP part and replace the MF
//! part with their own channel handling.

use std::sync::Arc;

use bpmf_core::factor_graph::Observation;
use bpmf_core::gaussian_mf::{coordinate_moments, posterior_update, ComplexGaussian, QuadraticEvidence};
use bpmf_core::message_passing::{MessageState, UpdateConfig};
use bpmf_core::scheduler::{
    bp_sweeps, bp_var_belief, run_loopy, DivergenceMonitor, LoopySchedule, RunOptions, StopRule, Termination,
};
use bpmf_core::{BpMfPartition, FactorGraph, FactorId, GraphBuilder, Potential, VarId};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::code::TrellisKernel;
use crate::scenario::OfdmScenario;
use crate::OfdmError;

/// Receiver selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReceiverKind {
    #[serde(rename = "bp-mf")]
    BpMf,
    #[serde(rename = "bp-gauss")]
    BpGauss,
    #[serde(rename = "perfect-csi")]
    PerfectCsi,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [ReceiverKind::BpMf, ReceiverKind::BpGauss, ReceiverKind::PerfectCsi];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::BpMf => "bp-mf",
            ReceiverKind::BpGauss => "bp-gauss",
            ReceiverKind::PerfectCsi => "perfect-csi",
        }
    }
}

impl std::str::FromStr for ReceiverKind {
    type Err = OfdmError;

    fn from_str(s: &str) -> Result<Self, OfdmError> {
        ReceiverKind::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| OfdmError::Config(format!("unknown receiver `{s}` (expected bp-mf, bp-gauss or perfect-csi)")))
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Output of one receiver on one received symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub bits: Vec<u8>,
    pub outer_iterations: usize,
    pub free_energy: Option<f64>,
    pub converged: bool,
}

/// Ground truth next to the decision.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub info: Vec<u8>,
    pub decoded: Vec<u8>,
    pub bit_errors: usize,
    pub outer_iterations: usize,
    pub free_energy: Option<f64>,
    pub converged: bool,
}

impl TrialRecord {
    pub fn new(info: &[u8], d: Decision) -> Self {
        let bit_errors = info.iter().zip(&d.bits).filter(|(a, b)| a != b).count();
        TrialRecord {
            info: info.to_vec(),
            decoded: d.bits,
            bit_errors,
            outer_iterations: d.outer_iterations,
            free_energy: d.free_energy,
            converged: d.converged,
        }
    }
}

/// Factor graph of one received symbol with handles to its variables.
#[derive(Debug)]
pub struct ReceiverGraph {
    pub graph: FactorGraph,
    pub partition: BpMfPartition,
    pub h: VarId,
    pub info: Vec<VarId>,
    /// Code and padding bits in codeword order.
    pub bits: Vec<VarId>,
    /// Symbol variables in the order of `data_idx`.
    pub symbols: Vec<VarId>,
    pub code_factor: FactorId,
    pub modulation: Vec<FactorId>,
    pub data_obs: Vec<FactorId>,
}

pub fn build_graph(sc: &OfdmScenario, y: &[Complex64], gamma: f64) -> Result<ReceiverGraph, OfdmError> {
    if y.len() != sc.carriers() {
        return Err(OfdmError::LengthMismatch {
            expected: sc.carriers(),
            got: y.len(),
        });
    }
    let cons = &sc.constellation;
    let l = cons.bits_per_symbol();
    let mut b = GraphBuilder::new();
    let h = b.gaussian("h", sc.carriers());
    let info: Vec<VarId> = (0..sc.k).map(|k| b.discrete(format!("u{k}"), 2)).collect();
    let bits: Vec<VarId> = (0..sc.perm.len()).map(|j| b.discrete(format!("c{j}"), 2)).collect();
    let symbols: Vec<VarId> = sc.data_idx.iter().map(|d| b.discrete(format!("x{d}"), cons.size())).collect();
    let mut bp = Vec::new();

    let kernel = TrellisKernel::new(sc.code.clone(), sc.k);
    let scope: Vec<VarId> = info.iter().chain(&bits[..sc.coded_len]).copied().collect();
    debug_assert_eq!(scope.len(), kernel.arity());
    let code_factor = b.add_factor("code", &scope, Potential::Kernel(Arc::new(kernel)))?;
    bp.push(code_factor);
    for (j, &v) in bits.iter().enumerate().skip(sc.coded_len) {
        bp.push(b.add_table(format!("pad{j}"), &[v], vec![1.0, 0.0])?);
    }
    let mut modulation = Vec::with_capacity(symbols.len());
    for (t, &x) in symbols.iter().enumerate() {
        let mut scope = vec![x];
        scope.extend((0..l).map(|j| bits[sc.perm[t * l + j]]));
        let mut values = Vec::with_capacity(cons.size() << l);
        for s in 0..cons.size() {
            for pattern in 0..(1usize << l) {
                values.push(if pattern == s { 1.0 } else { 0.0 });
            }
        }
        let f = b.add_table(format!("mod{}", sc.data_idx[t]), &scope, values)?;
        bp.push(f);
        modulation.push(f);
    }

    b.add_factor("prior", &[h], Potential::GaussianPrior(sc.prior.clone()))?;
    for (&p, &s) in sc.pilot_idx.iter().zip(&sc.pilot_symbols) {
        let obs = Observation {
            y: y[p],
            gamma,
            coord: p,
            symbols: vec![s],
        };
        b.add_factor(format!("pilot{p}"), &[h], Potential::Observation(obs))?;
    }
    let mut data_obs = Vec::with_capacity(symbols.len());
    for (&d, &x) in sc.data_idx.iter().zip(&symbols) {
        let obs = Observation {
            y: y[d],
            gamma,
            coord: d,
            symbols: cons.points().to_vec(),
        };
        data_obs.push(b.add_factor(format!("obs{d}"), &[h, x], Potential::Observation(obs))?);
    }
    let graph = b.build()?;
    let partition = BpMfPartition::new(&graph, &bp)?;
    Ok(ReceiverGraph {
        graph,
        partition,
        h,
        info,
        bits,
        symbols,
        code_factor,
        modulation,
        data_obs,
    })
}

/// Bitwise decision, ties to 0.
fn decide(p: &[f64]) -> u8 {
    u8::from(p[1] > p[0])
}

fn stop_rule(sc: &OfdmScenario) -> StopRule {
    let r = &sc.config.receiver;
    StopRule {
        max_outer: r.max_outer,
        rel_free_energy_tol: r.rel_free_energy_tol,
        message_delta_tol: r.message_delta_tol,
    }
}

fn update_config(sc: &OfdmScenario) -> UpdateConfig {
    UpdateConfig {
        damping: sc.config.receiver.damping,
        ..UpdateConfig::default()
    }
}

/// Joint channel estimation and decoding with BP in the discrete part and
/// mean field for the channel.
pub fn run_bpmf_receiver(sc: &OfdmScenario, y: &[Complex64], gamma: f64) -> Result<Decision, OfdmError> {
    let rg = build_graph(sc, y, gamma)?;
    let schedule = LoopySchedule {
        inner_sweeps: sc.config.receiver.inner_sweeps,
        ..LoopySchedule::default()
    };
    let opts = RunOptions {
        diagnostics: false,
        record_substeps: false,
        free_energy: true,
    };
    let res = run_loopy(&rg.graph, &rg.partition, &update_config(sc), &stop_rule(sc), &schedule, &opts)?;
    let bits = rg
        .info
        .iter()
        .map(|&u| decide(res.state.probs(u).expect("information bits are discrete")))
        .collect();
    let free_energy = res
        .trace
        .records
        .last()
        .and_then(|r| r.free_energy)
        .map(|f| f.to_f64());
    Ok(Decision {
        bits,
        outer_iterations: res.iterations,
        free_energy,
        converged: res.termination == Termination::Converged,
    })
}

/// Channel posterior from the pilots alone: prior times one scalar
/// observation per pilot.
pub fn pilot_channel_estimate(sc: &OfdmScenario, y: &[Complex64], gamma: f64) -> Result<ComplexGaussian, OfdmError> {
    Ok(posterior_update(&sc.prior, &pilot_evidence(sc, y, gamma))?)
}

fn pilot_evidence(sc: &OfdmScenario, y: &[Complex64], gamma: f64) -> QuadraticEvidence {
    let mut ev = QuadraticEvidence::zeros(sc.carriers());
    for (&p, &s) in sc.pilot_idx.iter().zip(&sc.pilot_symbols) {
        ev.precision[p] = gamma * s.norm_sqr();
        ev.info[p] = y[p] * s.conj() * gamma;
    }
    ev
}

/// Gaussian message on `h` obtained by moment matching
/// `sum_s w_s CN(y; h s, 1/gamma)`, returned as `(precision, precision * mean)`.
///
/// As a function of `h` each component is `CN(h; y/s, 1/(gamma |s|^2))`
/// scaled by `1/|s|^2`, so the mixture weights are `w_s / |s|^2`.
pub fn mixture_channel_message(y: Complex64, gamma: f64, weights: &[f64], points: &[Complex64]) -> (f64, Complex64) {
    let mut total = 0.0;
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    for (&w, &s) in weights.iter().zip(points) {
        let e = s.norm_sqr();
        if w == 0.0 || e == 0.0 {
            continue;
        }
        let pi = w / e;
        let c = y / s;
        total += pi;
        mean += c * pi;
        second += pi * (c.norm_sqr() + 1.0 / (gamma * e));
    }
    mean /= total;
    let var = second / total - mean.norm_sqr();
    // Guard against cancellation when all weight sits on one component.
    let floor = points
        .iter()
        .map(|s| 1.0 / (gamma * s.norm_sqr()))
        .fold(f64::INFINITY, f64::min);
    let var = var.max(floor * 1e-12);
    (1.0 / var, mean / var)
}

/// `ln CN(y; mu s, var |s|^2 + 1/gamma)` for every point `s`.
pub fn marginalized_symbol_logs(y: Complex64, gamma: f64, mu: Complex64, var: f64, points: &[Complex64]) -> Vec<f64> {
    points
        .iter()
        .map(|&s| {
            let v = var * s.norm_sqr() + 1.0 / gamma;
            -(std::f64::consts::PI * v).ln() - (y - mu * s).norm_sqr() / v
        })
        .collect()
}

fn empty_evidence(graph: &FactorGraph) -> Vec<Vec<f64>> {
    vec![Vec::new(); graph.num_vars()]
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// BP decoding combined with Gaussian channel messages: the observation on a
/// data carrier sends `h` the moment-matched mixture over the extrinsic
/// symbol probabilities, and sends the symbol the observation likelihood
/// averaged over the extrinsic channel marginal.
pub fn run_bp_gauss_baseline(sc: &OfdmScenario, y: &[Complex64], gamma: f64) -> Result<Decision, OfdmError> {
    let rg = build_graph(sc, y, gamma)?;
    let (graph, partition) = (&rg.graph, &rg.partition);
    let cfg = update_config(sc);
    let stop = stop_rule(sc);
    let window = LoopySchedule::default().divergence_window;
    let points = sc.constellation.points();
    let pilots = pilot_evidence(sc, y, gamma);
    let mut b_h = posterior_update(&sc.prior, &pilots)?;
    let mut data_msg = vec![(0.0, Complex64::new(0.0, 0.0)); sc.data_idx.len()];
    let mut messages = MessageState::new(graph);
    let mut monitor = DivergenceMonitor::default();
    let mut evidence = empty_evidence(graph);
    let mut prev: Option<Vec<Vec<f64>>> = None;
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=stop.max_outer {
        iterations = t;
        let moments = coordinate_moments(&b_h);
        for (n, &d) in sc.data_idx.iter().enumerate() {
            let (mu, var) = moments[d];
            let (lam, eta) = data_msg[n];
            let lam_ext = 1.0 / var - lam;
            let (mu_e, var_e) = if lam > 0.0 && lam_ext > 1e-12 / var {
                let v = 1.0 / lam_ext;
                (v * (mu / var - eta), v)
            } else {
                (mu, var)
            };
            evidence[rg.symbols[n].0] = marginalized_symbol_logs(y[d], gamma, mu_e, var_e, points);
        }
        let report = bp_sweeps(
            graph,
            partition,
            &mut messages,
            &evidence,
            &cfg,
            sc.config.receiver.inner_sweeps,
            stop.message_delta_tol,
            window,
            &mut monitor,
        )?;
        let mut channel_ev = pilots.clone();
        for (n, &d) in sc.data_idx.iter().enumerate() {
            let w = bp_var_belief(graph, partition, &messages, &[], rg.symbols[n])?;
            data_msg[n] = mixture_channel_message(y[d], gamma, &w, points);
            channel_ev.precision[d] += data_msg[n].0;
            channel_ev.info[d] += data_msg[n].1;
        }
        b_h = posterior_update(&sc.prior, &channel_ev)?;
        let snapshot = rg
            .info
            .iter()
            .chain(&rg.symbols)
            .map(|&v| bp_var_belief(graph, partition, &messages, &evidence, v))
            .collect::<Result<Vec<_>, _>>()?;
        let delta = prev.as_ref().map(|p| {
            p.iter()
                .zip(&snapshot)
                .map(|(a, b)| max_diff(a, b))
                .fold(0.0, f64::max)
        });
        prev = Some(snapshot);
        if report.diverged {
            break;
        }
        if t >= 2 && delta.is_some_and(|d| d < stop.message_delta_tol) {
            converged = true;
            break;
        }
    }
    let beliefs = prev.expect("at least one outer iteration");
    let bits = beliefs[..rg.info.len()].iter().map(|p| decide(p)).collect();
    Ok(Decision {
        bits,
        outer_iterations: iterations,
        free_energy: None,
        converged,
    })
}

/// BP decoding with the true channel: symbol evidence `-gamma |y - h s|^2`.
pub fn run_perfect_csi(sc: &OfdmScenario, y: &[Complex64], h: &[Complex64], gamma: f64) -> Result<Decision, OfdmError> {
    if h.len() != sc.carriers() {
        return Err(OfdmError::LengthMismatch {
            expected: sc.carriers(),
            got: h.len(),
        });
    }
    let rg = build_graph(sc, y, gamma)?;
    let points = sc.constellation.points();
    let mut evidence = empty_evidence(&rg.graph);
    for (n, &d) in sc.data_idx.iter().enumerate() {
        evidence[rg.symbols[n].0] = points.iter().map(|&s| -gamma * (y[d] - h[d] * s).norm_sqr()).collect();
    }
    let mut messages = MessageState::new(&rg.graph);
    let mut monitor = DivergenceMonitor::default();
    let report = bp_sweeps(
        &rg.graph,
        &rg.partition,
        &mut messages,
        &evidence,
        &update_config(sc),
        sc.config.receiver.perfect_csi_sweeps,
        sc.config.receiver.message_delta_tol,
        0,
        &mut monitor,
    )?;
    let bits = rg
        .info
        .iter()
        .map(|&u| bp_var_belief(&rg.graph, &rg.partition, &messages, &evidence, u).map(|p| decide(&p)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Decision {
        bits,
        outer_iterations: 1,
        free_energy: None,
        converged: report.last_delta <= sc.config.receiver.message_delta_tol,
    })
}

/// Runs the selected receiver on one observation.
pub fn run_receiver(
    kind: ReceiverKind,
    sc: &OfdmScenario,
    y: &[Complex64],
    h: &[Complex64],
    gamma: f64,
) -> Result<Decision, OfdmError> {
    match kind {
        ReceiverKind::BpMf => run_bpmf_receiver(sc, y, gamma),
        ReceiverKind::BpGauss => run_bp_gauss_baseline(sc, y, gamma),
        ReceiverKind::PerfectCsi => run_perfect_csi(sc, y, h, gamma),
    }
}
