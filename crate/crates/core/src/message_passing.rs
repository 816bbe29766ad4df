//! Update kernels for the combined BP/MF message passing.
//!
//! Discrete messages are log-domain vectors (`-inf` marks an exact zero).
//! Products that exclude one neighbour are formed from prefix and suffix sums
//! rather than by dividing out the excluded message, so hard zeros never
//! produce `0/0`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::factor_graph::{
    BpMfPartition, FactorGraph, FactorId, KernelMessages, Potential, VarId, VarKind,
};
use crate::gaussian_mf::{symbol_statistics, ComplexGaussian, InformationForm};
use crate::numeric::{argmax, log_add_exp, log_sum_exp, next_config, normalize_logs, softmax};
use crate::tabular::{Message, Table};

/// Scaling convention of factor-to-variable BP messages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Normalization {
    /// Every message is scaled to unit mass.
    PerMessage,
    /// Messages carry the factor normalizer `z_a = 1 / sum_{x_a} f_a prod n`.
    ZNormalized,
    /// Messages are scaled by a fixed constant `omega`.
    Unnormalized { omega: f64 },
}

/// Treatment of exact zeros in messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroPolicy {
    /// Any zero entry in a BP message is an error (strictly positive models).
    Strict,
    /// Zeros are propagated exactly; only an all-zero message is an error.
    AllowHard,
}

/// Variables whose beliefs are constrained to point masses (EM updates).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmConstraintSet {
    /// Variable and its current point estimate.
    pub vars: BTreeMap<VarId, usize>,
}

impl EmConstraintSet {
    pub fn new(vars: BTreeMap<VarId, usize>) -> Self {
        EmConstraintSet { vars }
    }

    pub fn contains(&self, i: VarId) -> bool {
        self.vars.contains_key(&i)
    }

    /// EM variables must be discrete, outside `I_BP`, and start in range.
    pub fn validate(&self, graph: &FactorGraph, partition: &BpMfPartition) -> Result<()> {
        for (&i, &x) in &self.vars {
            if i.0 >= graph.num_vars() {
                return Err(Error::UnknownVariable(format!("{i} in EM set")));
            }
            let name = &graph.variable(i).name;
            match graph.card(i) {
                Some(card) if x < card => {}
                Some(_) => return Err(Error::InvalidArgument(format!("EM initial state out of range for `{name}`"))),
                None => return Err(Error::InvalidArgument(format!("EM variable `{name}` must be discrete"))),
            }
            if partition.in_ibp(i) {
                return Err(Error::InvalidArgument(format!("EM variable `{name}` belongs to I_BP")));
            }
        }
        Ok(())
    }
}

/// Parameters of the update rules.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateConfig {
    pub normalization: Normalization,
    /// Weight of the previous message in loopy sweeps, in `[0, 1)`.
    pub damping: f64,
    pub zero_policy: ZeroPolicy,
    pub em: EmConstraintSet,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            normalization: Normalization::PerMessage,
            damping: 0.0,
            zero_policy: ZeroPolicy::AllowHard,
            em: EmConstraintSet::default(),
        }
    }
}

impl UpdateConfig {
    /// Defaults for loopy schedules (damping 0.3).
    pub fn loopy() -> Self {
        UpdateConfig {
            damping: 0.3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!("damping {} not in [0, 1)", self.damping)));
        }
        if let Normalization::Unnormalized { omega } = self.normalization {
            if !(omega > 0.0 && omega.is_finite()) {
                return Err(Error::InvalidArgument("omega must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Belief of a single variable.
#[derive(Clone, Debug)]
pub enum VarBelief {
    /// Probability vector.
    Discrete(Vec<f64>),
    Gaussian(ComplexGaussian),
}

impl VarBelief {
    pub fn probs(&self) -> Option<&[f64]> {
        match self {
            VarBelief::Discrete(p) => Some(p),
            VarBelief::Gaussian(_) => None,
        }
    }

    pub fn gaussian(&self) -> Option<&ComplexGaussian> {
        match self {
            VarBelief::Gaussian(g) => Some(g),
            VarBelief::Discrete(_) => None,
        }
    }

    /// Uniform belief for discrete variables, `CN(0, I)` for Gaussian ones.
    pub fn uniform(kind: VarKind) -> Self {
        match kind {
            VarKind::Discrete { card } => VarBelief::Discrete(vec![1.0 / card as f64; card]),
            VarKind::Gaussian { dim } => VarBelief::Gaussian(ComplexGaussian::standard(dim)),
        }
    }
}

/// Mean-field message towards a Gaussian variable.
#[derive(Clone, Debug, PartialEq)]
pub enum GaussianEvidence {
    /// Precision increment and precision-weighted mean on one coordinate.
    Diagonal { coord: usize, precision: f64, info: Complex64 },
    /// Full information-form contribution.
    Full(InformationForm),
}

impl GaussianEvidence {
    /// Adds this contribution to an accumulator.
    pub fn accumulate(&self, acc: &mut InformationForm) -> Result<()> {
        match self {
            GaussianEvidence::Diagonal { coord, precision, info } => {
                if *coord >= acc.dim() {
                    return Err(Error::DimensionMismatch("evidence coordinate".into()));
                }
                acc.add_diagonal(*coord, *precision, *info);
                Ok(())
            }
            GaussianEvidence::Full(f) => acc.add(f),
        }
    }
}

/// Factor-to-variable message of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorMessage {
    /// Log-domain message over a discrete variable.
    Discrete(Vec<f64>),
    Gaussian(GaussianEvidence),
}

impl FactorMessage {
    pub fn logs(&self) -> Option<&[f64]> {
        match self {
            FactorMessage::Discrete(l) => Some(l),
            FactorMessage::Gaussian(_) => None,
        }
    }
}

/// Messages on every edge of a graph.
#[derive(Clone, Debug)]
pub struct MessageState {
    /// Variable-to-factor log messages; empty vectors on Gaussian edges.
    pub n: Vec<Vec<f64>>,
    /// Factor-to-variable messages.
    pub m: Vec<FactorMessage>,
}

impl MessageState {
    /// All discrete messages set to ones; Gaussian edges carry flat evidence.
    pub fn new(graph: &FactorGraph) -> Self {
        let mut n = Vec::with_capacity(graph.num_edges());
        let mut m = Vec::with_capacity(graph.num_edges());
        for e in 0..graph.num_edges() {
            let (_, _, v) = graph.edge_info(e);
            match graph.variable(v).kind {
                VarKind::Discrete { card } => {
                    n.push(vec![0.0; card]);
                    m.push(FactorMessage::Discrete(vec![0.0; card]));
                }
                VarKind::Gaussian { dim } => {
                    n.push(Vec::new());
                    m.push(FactorMessage::Gaussian(GaussianEvidence::Full(InformationForm::zeros(dim))));
                }
            }
        }
        MessageState { n, m }
    }
}

/// Belief of a BP factor.
#[derive(Clone, Debug)]
pub enum FactorBelief {
    /// Explicit normalized table (linear domain).
    Table(Table),
    /// Belief `z_a f_a prod n` of a kernel factor, represented by its slot
    /// marginals and its KL term `sum b_a ln(b_a / f_a)`.
    Implicit { marginals: Vec<Vec<f64>>, kl: Extended },
}

impl FactorBelief {
    /// Marginal of the belief on one slot of the scope.
    pub fn marginal(&self, slot: usize) -> Result<Vec<f64>> {
        match self {
            FactorBelief::Table(t) => Ok(t.marginalize(&[t.scope()[slot]])?.linear()),
            FactorBelief::Implicit { marginals, .. } => Ok(marginals[slot].clone()),
        }
    }

    /// Total mass (one for normalized beliefs).
    pub fn mass(&self) -> f64 {
        match self {
            FactorBelief::Table(t) => t.linear().iter().sum(),
            FactorBelief::Implicit { marginals, .. } => marginals.first().map(|m| m.iter().sum()).unwrap_or(1.0),
        }
    }
}

/// Beliefs, factor beliefs and messages of a run.
#[derive(Clone, Debug)]
pub struct BeliefState {
    pub vars: Vec<VarBelief>,
    /// Beliefs of BP factors (`None` for MF factors).
    pub factors: Vec<Option<FactorBelief>>,
    pub messages: MessageState,
}

impl BeliefState {
    /// Probability vector of a discrete variable.
    pub fn probs(&self, i: VarId) -> Option<&[f64]> {
        self.vars[i.0].probs()
    }
}

/// Sum-product evaluation of a discrete table.
pub fn table_sum_product(table: &Table, incoming: &[&[f64]]) -> Result<KernelMessages> {
    let cards = table.cards();
    if incoming.len() != cards.len() || incoming.iter().zip(cards).any(|(n, c)| n.len() != *c) {
        return Err(Error::DimensionMismatch("incoming messages do not match the table scope".into()));
    }
    let s = cards.len();
    let logs = table.logs();
    let mut outgoing: Vec<Vec<f64>> = cards.iter().map(|&c| vec![f64::NEG_INFINITY; c]).collect();
    let mut log_partition = f64::NEG_INFINITY;
    let mut config = vec![0usize; s];
    let mut prefix = vec![0.0; s + 1];
    let mut suffix = vec![0.0; s + 1];
    for &lf in &logs {
        if lf != f64::NEG_INFINITY {
            prefix[0] = lf;
            for k in 0..s {
                prefix[k + 1] = prefix[k] + incoming[k][config[k]];
            }
            suffix[s] = 0.0;
            for k in (0..s).rev() {
                suffix[k] = suffix[k + 1] + incoming[k][config[k]];
            }
            for j in 0..s {
                let v = prefix[j] + suffix[j + 1];
                let slot = &mut outgoing[j][config[j]];
                *slot = log_add_exp(*slot, v);
            }
            log_partition = log_add_exp(log_partition, prefix[s]);
        }
        next_config(&mut config, cards);
    }
    Ok(KernelMessages {
        outgoing,
        log_partition,
    })
}

/// Sum-product evaluation of a discrete factor (table or custom kernel).
pub fn factor_sum_product(graph: &FactorGraph, a: FactorId, incoming: &[&[f64]]) -> Result<KernelMessages> {
    match &graph.factor(a).potential {
        Potential::Table(t) => table_sum_product(t, incoming),
        Potential::Kernel(k) => k.sum_product(incoming),
        _ => Err(Error::InvalidArgument(format!(
            "factor `{}` has no sum-product kernel",
            graph.factor(a).name
        ))),
    }
}

fn scale_bp(
    mut out: Vec<f64>,
    log_partition: f64,
    cfg: &UpdateConfig,
    what: impl Fn() -> String,
) -> Result<Vec<f64>> {
    if out.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::Contradiction(format!("all-zero message {}", what())));
    }
    if cfg.zero_policy == ZeroPolicy::Strict && out.contains(&f64::NEG_INFINITY) {
        return Err(Error::Contradiction(format!("zero entry in message {} under the strict policy", what())));
    }
    match cfg.normalization {
        Normalization::PerMessage => {
            normalize_logs(&mut out);
        }
        Normalization::ZNormalized => {
            for l in out.iter_mut() {
                *l -= log_partition;
            }
        }
        Normalization::Unnormalized { omega } => {
            let lo = omega.ln();
            for l in out.iter_mut() {
                *l += lo;
            }
        }
    }
    Ok(out)
}

/// BP message `m_{a->i}` from factor `a` to the variable in `slot`.
///
/// `incoming` holds `n_{j->a}` for every slot of the scope (the entry of the
/// target slot only enters the normalizer `z_a`).
pub fn bp_factor_to_var(
    graph: &FactorGraph,
    a: FactorId,
    slot: usize,
    incoming: &[Message],
    cfg: &UpdateConfig,
) -> Result<Message> {
    let refs: Vec<&[f64]> = incoming.iter().map(|m| m.logs()).collect();
    let km = factor_sum_product(graph, a, &refs)?;
    let out = km.outgoing.into_iter().nth(slot).ok_or_else(|| {
        Error::InvalidArgument(format!("slot {slot} out of range for factor `{}`", graph.factor(a).name))
    })?;
    let v = graph.scope(a)[slot];
    let out = scale_bp(out, km.log_partition, cfg, || {
        format!("from `{}` to `{}`", graph.factor(a).name, graph.variable(v).name)
    })?;
    Ok(Message::from_logs(out))
}

/// Scales a raw sum-product output according to the configuration.
pub fn scale_factor_message(out: Vec<f64>, log_partition: f64, cfg: &UpdateConfig) -> Result<Vec<f64>> {
    scale_bp(out, log_partition, cfg, String::new)
}

fn sum_logs(card: usize, groups: &[&[&Message]]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; card];
    for group in groups {
        for m in group.iter() {
            if m.len() != card {
                return Err(Error::DimensionMismatch(format!("message of length {} for cardinality {card}", m.len())));
            }
            for (a, l) in acc.iter_mut().zip(m.logs()) {
                *a += l;
            }
        }
    }
    Ok(acc)
}

/// BP message `n_{i->a} = prod_{c in N(i) \ a} m_{c->i}`; the caller passes
/// the messages of every neighbour except `a`.
pub fn bp_var_to_factor(card: usize, incoming: &[&Message]) -> Result<Message> {
    let acc = sum_logs(card, &[incoming])?;
    if acc.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::Contradiction("all-zero variable-to-factor message".into()));
    }
    Ok(Message::from_logs(acc))
}

/// Combined variable-to-factor message
/// `n_{i->a} = z_i prod_{c in bp} m^BP_{c->i} prod_{c in mf} m^MF_{c->i}`.
///
/// For `a` in the BP part, `bp` excludes `a` (extrinsic message); for `a` in
/// the MF part, `bp` and `mf` hold every neighbour (the belief). With
/// `normalize` the result is scaled to unit mass (`z_i` for variables outside
/// `I_BP`); otherwise `z_i = 1`.
pub fn combined_var_to_factor(
    card: usize,
    bp: &[&Message],
    mf: &[&Message],
    normalize: bool,
) -> Result<Message> {
    let mut acc = sum_logs(card, &[bp, mf])?;
    if acc.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::Contradiction("all-zero variable-to-factor message".into()));
    }
    if normalize {
        normalize_logs(&mut acc);
    }
    Ok(Message::from_logs(acc))
}

/// For every `k`, `base + sum_{j != k} msgs[j]`, computed with prefix and
/// suffix sums.
pub fn all_but_one(base: &[f64], msgs: &[&[f64]]) -> Vec<Vec<f64>> {
    let d = msgs.len();
    let card = base.len();
    let mut prefix: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    prefix.push(base.to_vec());
    for k in 0..d {
        let next: Vec<f64> = prefix[k].iter().zip(msgs[k]).map(|(a, b)| a + b).collect();
        prefix.push(next);
    }
    let mut out = vec![Vec::new(); d];
    let mut suffix = vec![0.0; card];
    for k in (0..d).rev() {
        out[k] = prefix[k].iter().zip(&suffix).map(|(a, b)| a + b).collect();
        for (s, m) in suffix.iter_mut().zip(msgs[k]) {
            *s += m;
        }
    }
    out
}

/// Mean-field message from factor `a` to the variable in `slot`, using the
/// current beliefs of all other variables of the scope (indexed by variable id).
pub fn mf_factor_to_var(
    graph: &FactorGraph,
    a: FactorId,
    slot: usize,
    beliefs: &[VarBelief],
) -> Result<FactorMessage> {
    let f = graph.factor(a);
    let scope = &f.scope;
    if slot >= scope.len() {
        return Err(Error::InvalidArgument(format!("slot {slot} out of range for factor `{}`", f.name)));
    }
    match &f.potential {
        Potential::Table(t) => {
            let cards = t.cards();
            let probs: Vec<&[f64]> = scope
                .iter()
                .map(|v| {
                    beliefs[v.0]
                        .probs()
                        .ok_or_else(|| Error::InvalidArgument("discrete factor with Gaussian belief".into()))
                })
                .collect::<Result<_>>()?;
            let logs = t.logs();
            let mut out = vec![0.0; cards[slot]];
            let mut config = vec![0usize; cards.len()];
            for &lf in &logs {
                let mut w = 1.0;
                for (k, p) in probs.iter().enumerate() {
                    if k != slot {
                        w *= p[config[k]];
                    }
                }
                if w > 0.0 {
                    let x = config[slot];
                    if lf == f64::NEG_INFINITY {
                        if scope.len() > 1 {
                            return Err(Error::HardConstraintInMeanField(f.name.clone()));
                        }
                        out[x] = f64::NEG_INFINITY;
                    } else if out[x] != f64::NEG_INFINITY {
                        out[x] += w * lf;
                    }
                }
                next_config(&mut config, cards);
            }
            if out.iter().all(|&l| l == f64::NEG_INFINITY) {
                return Err(Error::Contradiction(format!("all-zero mean-field message from `{}`", f.name)));
            }
            Ok(FactorMessage::Discrete(out))
        }
        Potential::GaussianPrior(g) => Ok(FactorMessage::Gaussian(GaussianEvidence::Full(InformationForm::from(g)))),
        Potential::Observation(o) => {
            if slot == 0 {
                let (mu, var) = if scope.len() == 1 {
                    (o.symbols[0], 0.0)
                } else {
                    let p = beliefs[scope[1].0]
                        .probs()
                        .ok_or_else(|| Error::InvalidArgument("symbol belief must be discrete".into()))?;
                    symbol_statistics(p, &o.symbols)?
                };
                Ok(FactorMessage::Gaussian(GaussianEvidence::Diagonal {
                    coord: o.coord,
                    precision: o.gamma * (var + mu.norm_sqr()),
                    info: o.y * mu.conj() * o.gamma,
                }))
            } else {
                let h = beliefs[scope[0].0]
                    .gaussian()
                    .ok_or_else(|| Error::InvalidArgument("channel belief must be Gaussian".into()))?;
                let mu = h.mean()[o.coord];
                let var = h.covariance()[(o.coord, o.coord)].re;
                Ok(FactorMessage::Discrete(observation_symbol_logs(o.y, o.gamma, mu, var, &o.symbols)))
            }
        }
        Potential::Kernel(_) => Err(Error::KernelInMeanField(f.name.clone())),
    }
}

/// `E_h[ln f(h, s)]` for every symbol `s`, with `h ~ CN(mu, var)` and
/// `f = (gamma/pi) exp(-gamma |y - h s|^2)`.
pub fn observation_symbol_logs(y: Complex64, gamma: f64, mu: Complex64, var: f64, symbols: &[Complex64]) -> Vec<f64> {
    let c = (gamma / std::f64::consts::PI).ln();
    let e2 = var + mu.norm_sqr();
    symbols
        .iter()
        .map(|s| c - gamma * (y.norm_sqr() - 2.0 * (y.conj() * mu * s).re + e2 * s.norm_sqr()))
        .collect()
}

/// EM update of a point-mass variable: index of the largest entry of
/// `prod m^MF_{a->i}`, lowest index on ties.
pub fn em_var_update(card: usize, incoming: &[&Message]) -> Result<usize> {
    let acc = sum_logs(card, &[incoming])?;
    if acc.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::Contradiction("EM update over an all-zero message".into()));
    }
    Ok(argmax(&acc))
}

/// One-hot vector.
pub fn point_mass(card: usize, x: usize) -> Vec<f64> {
    let mut p = vec![0.0; card];
    p[x] = 1.0;
    p
}

/// Belief of a BP factor, `z_a f_a prod_j n_{j->a}`, from incoming log messages.
pub fn factor_belief(graph: &FactorGraph, a: FactorId, incoming: &[&[f64]]) -> Result<FactorBelief> {
    let name = || graph.factor(a).name.clone();
    match &graph.factor(a).potential {
        Potential::Table(t) => {
            let cards = t.cards();
            let mut logs = t.logs();
            let mut config = vec![0usize; cards.len()];
            for l in logs.iter_mut() {
                if *l != f64::NEG_INFINITY {
                    for (k, n) in incoming.iter().enumerate() {
                        *l += n[config[k]];
                    }
                }
                next_config(&mut config, cards);
            }
            if normalize_logs(&mut logs).is_none() {
                return Err(Error::Contradiction(format!("belief of factor `{}` vanishes", name())));
            }
            let table = Table::from_log(t.scope().to_vec(), cards.to_vec(), logs)?;
            Ok(FactorBelief::Table(table.to_repr(crate::tabular::Repr::Linear)))
        }
        Potential::Kernel(k) => {
            let km = k.sum_product(incoming)?;
            if km.log_partition == f64::NEG_INFINITY {
                return Err(Error::Contradiction(format!("belief of factor `{}` vanishes", name())));
            }
            let mut marginals = Vec::with_capacity(incoming.len());
            let mut kl = -km.log_partition;
            for (n, out) in incoming.iter().zip(&km.outgoing) {
                let joint: Vec<f64> = n.iter().zip(out).map(|(a, b)| a + b).collect();
                let b = softmax(&joint).ok_or_else(|| Error::Contradiction(format!("belief of factor `{}` vanishes", name())))?;
                for (p, l) in b.iter().zip(n.iter()) {
                    if *p > 0.0 {
                        kl += p * l;
                    }
                }
                marginals.push(b);
            }
            Ok(FactorBelief::Implicit {
                marginals,
                kl: Extended::Finite(kl),
            })
        }
        _ => Err(Error::InvalidArgument(format!("factor `{}` is not a BP factor", name()))),
    }
}

/// Beliefs implied by a set of messages:
/// `b_i = z_i prod_{a in N(i)} m_{a->i}` and, for BP factors,
/// `b_a = z_a f_a prod n_{i->a}`. EM-constrained variables receive the point
/// mass at the largest entry of the product.
pub fn compute_beliefs(
    graph: &FactorGraph,
    partition: &BpMfPartition,
    messages: &MessageState,
    em: &EmConstraintSet,
) -> Result<BeliefState> {
    let mut vars = Vec::with_capacity(graph.num_vars());
    for i in graph.vars() {
        vars.push(var_belief_from_messages(graph, i, messages, em)?);
    }
    let mut factors = vec![None; graph.num_factors()];
    for a in partition.bp_factors() {
        let incoming: Vec<&[f64]> = graph.factor_edges(a).map(|e| messages.n[e].as_slice()).collect();
        factors[a.0] = Some(factor_belief(graph, a, &incoming)?);
    }
    Ok(BeliefState {
        vars,
        factors,
        messages: messages.clone(),
    })
}

/// Belief of one variable from its incoming factor messages.
pub fn var_belief_from_messages(
    graph: &FactorGraph,
    i: VarId,
    messages: &MessageState,
    em: &EmConstraintSet,
) -> Result<VarBelief> {
    match graph.variable(i).kind {
        VarKind::Discrete { card } => {
            let mut acc = vec![0.0; card];
            for &(a, slot) in graph.neighbors(i) {
                let e = graph.edge(a, slot);
                let l = messages.m[e]
                    .logs()
                    .ok_or_else(|| Error::InvalidArgument("Gaussian message on a discrete edge".into()))?;
                for (x, v) in acc.iter_mut().zip(l) {
                    *x += v;
                }
            }
            if acc.iter().all(|&l| l == f64::NEG_INFINITY) {
                return Err(Error::Contradiction(format!("belief of `{}` vanishes", graph.variable(i).name)));
            }
            if em.contains(i) {
                return Ok(VarBelief::Discrete(point_mass(card, argmax(&acc))));
            }
            Ok(VarBelief::Discrete(softmax(&acc).expect("checked nonzero")))
        }
        VarKind::Gaussian { dim } => {
            let mut acc = InformationForm::zeros(dim);
            for &(a, slot) in graph.neighbors(i) {
                match &messages.m[graph.edge(a, slot)] {
                    FactorMessage::Gaussian(ev) => ev.accumulate(&mut acc)?,
                    FactorMessage::Discrete(_) => {
                        return Err(Error::InvalidArgument("discrete message on a Gaussian edge".into()))
                    }
                }
            }
            Ok(VarBelief::Gaussian(acc.to_gaussian()?))
        }
    }
}

/// A solution of the unnormalized fixed-point system
/// `m_{a->i} = omega_{a,i} sum f_a prod_{j != i} n_{j->a}`,
/// `n_{i->a} = prod_{c != a} m_{c->i}` on a pure-BP graph.
#[derive(Clone, Debug)]
pub struct UnnormalizedSolution {
    /// Log variable-to-factor messages per edge.
    pub n: Vec<Vec<f64>>,
    /// Log factor-to-variable messages per edge.
    pub m: Vec<Vec<f64>>,
    /// `ln omega_{a,i}` per edge.
    pub log_omega: Vec<f64>,
}

/// Outcome of [`rescaling_check`].
#[derive(Clone, Debug, PartialEq)]
pub enum RescaleReport {
    /// `omega_{a,i} = g_i z_a` holds; `g` lists `g_i` per variable.
    Rescalable { g: Vec<f64>, max_rel_defect: f64 },
    /// The ratio `omega_{a,i} / z_a` differs across the factors of `var`.
    NotRescalable { var: VarId, factor: FactorId, rel_defect: f64 },
}

/// Log normalizers `ln(1/z_a) = ln sum f_a prod n` for every factor.
pub fn log_inverse_z(graph: &FactorGraph, n: &[Vec<f64>]) -> Result<Vec<f64>> {
    graph
        .factor_ids()
        .map(|a| {
            let incoming: Vec<&[f64]> = graph.factor_edges(a).map(|e| n[e].as_slice()).collect();
            Ok(factor_sum_product(graph, a, &incoming)?.log_partition)
        })
        .collect()
}

/// Decides whether a solution of the unnormalized system can be rescaled into
/// a solution of the `z_a`-normalized system, i.e. whether there are `g_i > 0`
/// with `omega_{a,i} = g_i z_a` for every edge.
pub fn rescaling_check(graph: &FactorGraph, sol: &UnnormalizedSolution, rel_tol: f64) -> Result<RescaleReport> {
    let inv_z = log_inverse_z(graph, &sol.n)?;
    let mut g = vec![0.0; graph.num_vars()];
    let mut worst: f64 = 0.0;
    for i in graph.vars() {
        let mut base: Option<f64> = None;
        for &(a, slot) in graph.neighbors(i) {
            let lr = sol.log_omega[graph.edge(a, slot)] + inv_z[a.0];
            match base {
                None => base = Some(lr),
                Some(b) => {
                    let defect = ((lr - b).exp() - 1.0).abs();
                    if defect > rel_tol {
                        return Ok(RescaleReport::NotRescalable {
                            var: i,
                            factor: a,
                            rel_defect: defect,
                        });
                    }
                    worst = worst.max(defect);
                }
            }
        }
        g[i.0] = base.map(f64::exp).unwrap_or(1.0);
    }
    Ok(RescaleReport::Rescalable {
        g,
        max_rel_defect: worst,
    })
}

/// Infers `ln omega_{a,i}` from messages as `ln m_{a->i}(x) - ln sum f prod_{j != i} n`.
/// Returns the per-edge values and the largest spread over `x` (zero for an
/// exact solution of the unnormalized system).
pub fn infer_log_omegas(graph: &FactorGraph, n: &[Vec<f64>], m: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let mut out = vec![0.0; graph.num_edges()];
    let mut spread: f64 = 0.0;
    for a in graph.factor_ids() {
        let edges: Vec<usize> = graph.factor_edges(a).collect();
        let incoming: Vec<&[f64]> = edges.iter().map(|&e| n[e].as_slice()).collect();
        let km = factor_sum_product(graph, a, &incoming)?;
        for (k, &e) in edges.iter().enumerate() {
            let diffs: Vec<f64> = m[e]
                .iter()
                .zip(&km.outgoing[k])
                .filter(|(_, o)| **o != f64::NEG_INFINITY)
                .map(|(x, o)| x - o)
                .collect();
            let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max(hi - lo);
            out[e] = diffs.iter().sum::<f64>() / diffs.len() as f64;
        }
    }
    Ok((out, spread))
}

/// Applies the rescaling `m = m~ / g_i^{1/|N(i)|}`, `n = n~ / g_i^{1 - 1/|N(i)|}`.
pub fn rescale_solution(graph: &FactorGraph, sol: &UnnormalizedSolution, g: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut n = sol.n.clone();
    let mut m = sol.m.clone();
    for e in 0..graph.num_edges() {
        let (_, _, v) = graph.edge_info(e);
        let deg = graph.neighbors(v).len() as f64;
        let lg = g[v.0].ln();
        let lk = lg / deg;
        let lt = lg * (1.0 - 1.0 / deg);
        m[e].iter_mut().for_each(|x| *x -= lk);
        n[e].iter_mut().for_each(|x| *x -= lt);
    }
    (n, m)
}

/// Largest absolute violation of the `z_a`-normalized fixed-point system
/// (log domain for messages, linear domain for the belief masses).
pub fn znormalized_residual(graph: &FactorGraph, n: &[Vec<f64>], m: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in graph.factor_ids() {
        let edges: Vec<usize> = graph.factor_edges(a).collect();
        let incoming: Vec<&[f64]> = edges.iter().map(|&e| n[e].as_slice()).collect();
        let km = factor_sum_product(graph, a, &incoming)?;
        for (k, &e) in edges.iter().enumerate() {
            for (x, o) in m[e].iter().zip(&km.outgoing[k]) {
                if *o != f64::NEG_INFINITY {
                    worst = worst.max((x - (o - km.log_partition)).abs());
                }
            }
        }
    }
    for i in graph.vars() {
        let nb = graph.neighbors(i);
        let msgs: Vec<&[f64]> = nb.iter().map(|&(a, s)| m[graph.edge(a, s)].as_slice()).collect();
        let card = msgs[0].len();
        let ext = all_but_one(&vec![0.0; card], &msgs);
        for (k, &(a, s)) in nb.iter().enumerate() {
            for (x, y) in n[graph.edge(a, s)].iter().zip(&ext[k]) {
                if *y != f64::NEG_INFINITY {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        let total: Vec<f64> = ext[0].iter().zip(msgs[0]).map(|(a, b)| a + b).collect();
        worst = worst.max((log_sum_exp(&total).exp() - 1.0).abs());
    }
    Ok(worst)
}
