//! Free-energy functionals and diagnostics of a belief state.
//!
//! All functionals use the conventions `0 ln 0 = 0`, `0 ln(0/0) = 0` and
//! `a ln(a/0) = +inf` for `a > 0`; results are [`Extended`] values.
//! Entropy terms of Gaussian variables use the differential entropy.

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::factor_graph::{BpMfPartition, FactorGraph, FactorId, Potential, VarId};
use crate::message_passing::{
    all_but_one, factor_belief, mf_factor_to_var, point_mass, var_belief_from_messages, BeliefState,
    EmConstraintSet, FactorBelief, FactorMessage, GaussianEvidence, VarBelief,
};
use crate::numeric::{argmax, max_abs_diff, next_config, softmax, xlogx};

/// `sum_x b ln b` for discrete beliefs, minus the differential entropy for
/// Gaussian ones.
pub fn neg_entropy(b: &VarBelief) -> f64 {
    match b {
        VarBelief::Discrete(p) => p.iter().map(|&v| xlogx(v)).sum(),
        VarBelief::Gaussian(g) => -g.entropy(),
    }
}

/// `E[ln f_a]` under the fully factorized product of the variable beliefs.
/// May be `-inf` when a belief puts mass on a zero of the factor.
pub fn expected_log_factor(graph: &FactorGraph, a: FactorId, beliefs: &[VarBelief]) -> Result<f64> {
    let f = graph.factor(a);
    match &f.potential {
        Potential::Table(t) => {
            let probs: Vec<&[f64]> = f
                .scope
                .iter()
                .map(|v| beliefs[v.0].probs().ok_or_else(|| Error::InvalidArgument("Gaussian belief in a table factor".into())))
                .collect::<Result<_>>()?;
            let cards = t.cards();
            let logs = t.logs();
            let mut config = vec![0usize; cards.len()];
            let mut acc = 0.0;
            for &lf in &logs {
                let w: f64 = probs.iter().zip(&config).map(|(p, &x)| p[x]).product();
                if w > 0.0 {
                    if lf == f64::NEG_INFINITY {
                        return Ok(f64::NEG_INFINITY);
                    }
                    acc += w * lf;
                }
                next_config(&mut config, cards);
            }
            Ok(acc)
        }
        Potential::GaussianPrior(g) => {
            let b = beliefs[f.scope[0].0]
                .gaussian()
                .ok_or_else(|| Error::InvalidArgument("prior on a non-Gaussian belief".into()))?;
            g.expected_log_density(b)
        }
        Potential::Observation(o) => {
            let h = beliefs[f.scope[0].0]
                .gaussian()
                .ok_or_else(|| Error::InvalidArgument("observation on a non-Gaussian belief".into()))?;
            let mu = h.mean()[o.coord];
            let var = h.covariance()[(o.coord, o.coord)].re;
            let (sm, s2) = if f.scope.len() == 1 {
                (o.symbols[0], o.symbols[0].norm_sqr())
            } else {
                let p = beliefs[f.scope[1].0]
                    .probs()
                    .ok_or_else(|| Error::InvalidArgument("symbol belief must be discrete".into()))?;
                let sm = p.iter().zip(&o.symbols).map(|(w, s)| s * w).sum();
                let s2 = p.iter().zip(&o.symbols).map(|(w, s)| w * s.norm_sqr()).sum();
                (sm, s2)
            };
            Ok((o.gamma / std::f64::consts::PI).ln()
                - o.gamma * (o.y.norm_sqr() - 2.0 * (o.y.conj() * mu * sm).re + (var + mu.norm_sqr()) * s2))
        }
        Potential::Kernel(_) => Err(Error::KernelInMeanField(f.name.clone())),
    }
}

/// `sum_{x_a} b_a ln(b_a / f_a)` for a BP factor belief.
pub fn factor_kl(graph: &FactorGraph, a: FactorId, belief: &FactorBelief) -> Result<Extended> {
    match (belief, &graph.factor(a).potential) {
        (FactorBelief::Table(b), Potential::Table(f)) => b.kl(f),
        (FactorBelief::Implicit { kl, .. }, Potential::Kernel(_)) => Ok(*kl),
        _ => Err(Error::InvalidArgument(format!(
            "belief type does not match factor `{}`",
            graph.factor(a).name
        ))),
    }
}

fn neg_expectation(e: f64) -> Extended {
    if e == f64::NEG_INFINITY {
        Extended::PosInfinity
    } else {
        Extended::Finite(-e)
    }
}

fn bp_belief<'s>(graph: &FactorGraph, state: &'s BeliefState, a: FactorId) -> Result<&'s FactorBelief> {
    state.factors[a.0]
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("no belief stored for BP factor `{}`", graph.factor(a).name)))
}

/// Combined free energy
/// `sum_{a in A_BP} sum b_a ln(b_a/f_a) - sum_{a in A_MF} E[ln f_a]
///  - sum_i (|N_BP(i)| - 1) sum b_i ln b_i`.
pub fn combined_free_energy(graph: &FactorGraph, partition: &BpMfPartition, state: &BeliefState) -> Result<Extended> {
    let mut acc = Extended::ZERO;
    for a in graph.factor_ids() {
        if partition.is_bp(a) {
            acc += factor_kl(graph, a, bp_belief(graph, state, a)?)?;
        } else {
            acc += neg_expectation(expected_log_factor(graph, a, &state.vars)?);
        }
    }
    for i in graph.vars() {
        let c = partition.n_bp(i).len() as f64 - 1.0;
        acc += Extended::Finite(-c * neg_entropy(&state.vars[i.0]));
    }
    Ok(acc)
}

/// Bethe free energy
/// `sum_a sum b_a ln(b_a/f_a) - sum_i (|N(i)| - 1) sum b_i ln b_i`.
pub fn bethe_free_energy(graph: &FactorGraph, state: &BeliefState) -> Result<Extended> {
    let mut acc = Extended::ZERO;
    for a in graph.factor_ids() {
        acc += factor_kl(graph, a, bp_belief(graph, state, a)?)?;
    }
    for i in graph.vars() {
        let c = graph.neighbors(i).len() as f64 - 1.0;
        acc += Extended::Finite(-c * neg_entropy(&state.vars[i.0]));
    }
    Ok(acc)
}

/// Mean-field free energy `sum_i sum b_i ln b_i - sum_a E[ln f_a]`, summed
/// factor terms first.
pub fn mf_free_energy(graph: &FactorGraph, state: &BeliefState) -> Result<Extended> {
    let mut acc = Extended::ZERO;
    for a in graph.factor_ids() {
        acc += neg_expectation(expected_log_factor(graph, a, &state.vars)?);
    }
    for i in graph.vars() {
        acc += Extended::Finite(neg_entropy(&state.vars[i.0]));
    }
    Ok(acc)
}

/// The combined free energy split as `F1 + F2 + F3` with
/// `F1 = sum_{A_BP} KL(b_a || f_a)`, `F2 = sum_{A_MF} KL(prod_i b_i || f_a)` and
/// `F3 = -sum_i (|N_BP(i)| + |N_MF(i)| - 1) sum b_i ln b_i`.
pub fn combined_free_energy_parts(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    state: &BeliefState,
) -> Result<[Extended; 3]> {
    let mut f1 = Extended::ZERO;
    let mut f2 = Extended::ZERO;
    let mut f3 = Extended::ZERO;
    for a in graph.factor_ids() {
        if partition.is_bp(a) {
            f1 += factor_kl(graph, a, bp_belief(graph, state, a)?)?;
        } else {
            let ent: f64 = graph.scope(a).iter().map(|v| neg_entropy(&state.vars[v.0])).sum();
            f2 += neg_expectation(expected_log_factor(graph, a, &state.vars)?) + ent;
        }
    }
    for i in graph.vars() {
        let c = (partition.n_bp(i).len() + partition.n_mf(i).len()) as f64 - 1.0;
        f3 += Extended::Finite(-c * neg_entropy(&state.vars[i.0]));
    }
    Ok([f1, f2, f3])
}

/// `sum_x b(x) ln(b(x)/p(x))` over a joint state space (linear values).
pub fn variational_free_energy(b: &[f64], p: &[f64]) -> Result<Extended> {
    if b.len() != p.len() {
        return Err(Error::DimensionMismatch("joint tables differ in size".into()));
    }
    let mut acc = 0.0;
    for (&bv, &pv) in b.iter().zip(p) {
        if bv > 0.0 {
            if pv == 0.0 {
                return Ok(Extended::PosInfinity);
            }
            acc += bv * (bv / pv).ln();
        }
    }
    Ok(Extended::Finite(acc))
}

/// `-sum_a ln k_a` with `k_a = sum_{x_a} f_a(x_a)`, a lower bound of the
/// combined free energy for discrete graphs.
pub fn free_energy_lower_bound(graph: &FactorGraph) -> Result<f64> {
    let mut acc = 0.0;
    for a in graph.factor_ids() {
        match &graph.factor(a).potential {
            Potential::Table(t) => acc -= t.log_mass(),
            _ => return Err(Error::InvalidArgument("lower bound needs table factors".into())),
        }
    }
    Ok(acc)
}

/// Violations of the normalization and marginalization constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintResiduals {
    pub max_norm_residual: f64,
    pub max_marg_residual: f64,
}

/// Normalization of all discrete beliefs and BP factor beliefs, and
/// consistency between each BP factor belief and the beliefs of its variables.
pub fn constraint_residuals(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    state: &BeliefState,
) -> Result<ConstraintResiduals> {
    let mut norm: f64 = 0.0;
    let mut marg: f64 = 0.0;
    for b in &state.vars {
        if let VarBelief::Discrete(p) = b {
            norm = norm.max((p.iter().sum::<f64>() - 1.0).abs());
        }
    }
    for a in partition.bp_factors() {
        let fb = bp_belief(graph, state, a)?;
        norm = norm.max((fb.mass() - 1.0).abs());
        for (slot, v) in graph.scope(a).iter().enumerate() {
            let m = fb.marginal(slot)?;
            let p = state.vars[v.0].probs().ok_or_else(|| Error::InvalidArgument("Gaussian variable in BP factor".into()))?;
            marg = marg.max(max_abs_diff(&m, p));
        }
    }
    Ok(ConstraintResiduals {
        max_norm_residual: norm,
        max_marg_residual: marg,
    })
}

fn probs_or_zero(logs: &[f64]) -> Vec<f64> {
    softmax(logs).unwrap_or_else(|| vec![0.0; logs.len()])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn evidence_diff(a: &GaussianEvidence, b: &GaussianEvidence) -> f64 {
    match (a, b) {
        (
            GaussianEvidence::Diagonal { coord: c1, precision: p1, info: i1 },
            GaussianEvidence::Diagonal { coord: c2, precision: p2, info: i2 },
        ) if c1 == c2 => rel(*p1, *p2).max((i1 - i2).norm() / i1.norm().max(i2.norm()).max(1.0)),
        (GaussianEvidence::Full(x), GaussianEvidence::Full(y)) if x.dim() == y.dim() => {
            let dp = (&x.precision - &y.precision).camax();
            let di = (&x.info - &y.info).camax();
            let scale = x.precision.camax().max(x.info.camax()).max(1.0);
            dp.max(di) / scale
        }
        _ => f64::INFINITY,
    }
}

fn belief_diff(a: &VarBelief, b: &VarBelief) -> f64 {
    match (a, b) {
        (VarBelief::Discrete(p), VarBelief::Discrete(q)) => max_abs_diff(p, q),
        (VarBelief::Gaussian(g), VarBelief::Gaussian(h)) => {
            let dm = (g.mean() - h.mean()).camax() / g.mean().camax().max(1.0);
            let dv = g
                .marginal_variances()
                .iter()
                .zip(h.marginal_variances())
                .map(|(x, y)| rel(*x, y))
                .fold(0.0, f64::max);
            dm.max(dv)
        }
        _ => f64::INFINITY,
    }
}

/// Largest change produced by recomputing every message and belief once from
/// the stored state with the combined update rules. Discrete quantities are
/// compared as normalized probability vectors (absolute difference);
/// Gaussian parameters by relative difference. Zero at a fixed point.
pub fn stationarity_residual(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    state: &BeliefState,
    em: &EmConstraintSet,
) -> Result<f64> {
    let msgs = &state.messages;
    let mut worst: f64 = 0.0;
    for i in graph.vars() {
        let b_new = var_belief_from_messages(graph, i, msgs, em)?;
        worst = worst.max(belief_diff(&b_new, &state.vars[i.0]));
        let Some(card) = graph.card(i) else { continue };
        let bp = partition.n_bp(i);
        let mut base = vec![0.0; card];
        for &(a, s) in partition.n_mf(i) {
            let l = msgs.m[graph.edge(a, s)].logs().expect("discrete edge");
            base.iter_mut().zip(l).for_each(|(x, y)| *x += y);
        }
        let bp_msgs: Vec<&[f64]> = bp
            .iter()
            .map(|&(a, s)| msgs.m[graph.edge(a, s)].logs().expect("discrete edge"))
            .collect();
        let ext = all_but_one(&base, &bp_msgs);
        for (k, &(a, s)) in bp.iter().enumerate() {
            let stored = probs_or_zero(&msgs.n[graph.edge(a, s)]);
            worst = worst.max(max_abs_diff(&probs_or_zero(&ext[k]), &stored));
        }
        let app = match &b_new {
            VarBelief::Discrete(p) => p.clone(),
            VarBelief::Gaussian(_) => unreachable!(),
        };
        for &(a, s) in partition.n_mf(i) {
            let stored = probs_or_zero(&msgs.n[graph.edge(a, s)]);
            worst = worst.max(max_abs_diff(&app, &stored));
        }
        if em.contains(i) {
            let p = state.vars[i.0].probs().expect("discrete");
            worst = worst.max(max_abs_diff(p, &point_mass(card, argmax(p))));
        }
    }
    for a in graph.factor_ids() {
        let edges: Vec<usize> = graph.factor_edges(a).collect();
        if partition.is_bp(a) {
            let incoming: Vec<&[f64]> = edges.iter().map(|&e| msgs.n[e].as_slice()).collect();
            let km = crate::message_passing::factor_sum_product(graph, a, &incoming)?;
            for (k, &e) in edges.iter().enumerate() {
                let stored = probs_or_zero(msgs.m[e].logs().expect("discrete edge"));
                worst = worst.max(max_abs_diff(&probs_or_zero(&km.outgoing[k]), &stored));
            }
            let fb_new = factor_belief(graph, a, &incoming)?;
            let fb = bp_belief(graph, state, a)?;
            let d = match (&fb_new, fb) {
                (FactorBelief::Table(x), FactorBelief::Table(y)) => max_abs_diff(&x.linear(), &y.linear()),
                (FactorBelief::Implicit { marginals: x, .. }, FactorBelief::Implicit { marginals: y, .. }) => x
                    .iter()
                    .zip(y)
                    .map(|(p, q)| max_abs_diff(p, q))
                    .fold(0.0, f64::max),
                _ => f64::INFINITY,
            };
            worst = worst.max(d);
        } else {
            for (k, &e) in edges.iter().enumerate() {
                let fresh = mf_factor_to_var(graph, a, k, &state.vars)?;
                let d = match (&fresh, &msgs.m[e]) {
                    (FactorMessage::Discrete(x), FactorMessage::Discrete(y)) => {
                        max_abs_diff(&probs_or_zero(x), &probs_or_zero(y))
                    }
                    (FactorMessage::Gaussian(x), FactorMessage::Gaussian(y)) => evidence_diff(x, y),
                    _ => f64::INFINITY,
                };
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

/// Beliefs of the variables listed, as probability vectors (panics on Gaussian variables).
pub fn discrete_beliefs(state: &BeliefState, vars: &[VarId]) -> Vec<Vec<f64>> {
    vars.iter()
        .map(|v| state.vars[v.0].probs().expect("discrete variable").to_vec())
        .collect()
}
