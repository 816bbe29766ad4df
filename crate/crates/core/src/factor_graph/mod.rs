//! Factor graph topology, potentials and the BP/MF partition.

mod applicability;
mod regions;
pub mod spec;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian_mf::ComplexGaussian;
use crate::tabular::Table;

pub use applicability::{check_algorithm1_applicable, Applicability, Node};
pub use regions::{region_set_bethe, region_set_bpmf, region_set_mf, Region, RegionSet};

/// Identifier of a variable node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Identifier of a factor node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactorId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// Domain of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// Finite alphabet `{0, .., card-1}`.
    Discrete { card: usize },
    /// Circularly symmetric complex Gaussian vector of the given dimension.
    Gaussian { dim: usize },
}

/// A variable node.
#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

/// Scalar observation `y = h[coord] * s + noise` with noise precision `gamma`,
/// i.e. the factor `(gamma/pi) exp(-gamma |y - h[coord] s|^2)`.
///
/// The scope is either `[h]` with a single known symbol, or `[h, x]` where the
/// discrete variable `x` selects the symbol from `symbols`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub y: Complex64,
    pub gamma: f64,
    pub coord: usize,
    pub symbols: Vec<Complex64>,
}

impl Observation {
    /// `ln f` at a given channel coefficient and symbol.
    pub fn log_value(&self, h: Complex64, s: Complex64) -> f64 {
        (self.gamma / std::f64::consts::PI).ln() - self.gamma * (self.y - h * s).norm_sqr()
    }
}

/// Output of a sum-product evaluation of one factor.
#[derive(Clone, Debug)]
pub struct KernelMessages {
    /// For every slot `j`, `ln sum_{x_a \ x_j} f(x_a) prod_{k != j} n_k(x_k)`,
    /// unnormalized.
    pub outgoing: Vec<Vec<f64>>,
    /// `ln sum_{x_a} f(x_a) prod_k n_k(x_k)`.
    pub log_partition: f64,
}

/// Discrete factor whose sum-product messages are computed by custom code
/// instead of a table (for example a code constraint evaluated on a trellis).
pub trait FactorKernel: Send + Sync + fmt::Debug {
    /// Cardinality expected for each slot of the scope.
    fn cards(&self) -> Vec<usize>;
    /// Sum-product messages for all slots given log incoming messages.
    fn sum_product(&self, incoming: &[&[f64]]) -> Result<KernelMessages>;
    /// `ln f` at one configuration (`-inf` outside the support).
    fn log_value(&self, config: &[usize]) -> f64;
}

/// Potential attached to a factor.
#[derive(Clone, Debug)]
pub enum Potential {
    /// Discrete table over the factor scope.
    Table(Table),
    /// Complex Gaussian density on a single Gaussian variable.
    GaussianPrior(ComplexGaussian),
    /// Scalar observation coupling a Gaussian variable and optionally a symbol.
    Observation(Observation),
    /// Custom discrete kernel.
    Kernel(Arc<dyn FactorKernel>),
}

/// A factor node with its ordered scope.
#[derive(Clone, Debug)]
pub struct Factor {
    pub name: String,
    pub scope: Vec<VarId>,
    pub potential: Potential,
}

/// Incremental construction of a [`FactorGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    variables: Vec<Variable>,
    factors: Vec<Factor>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn discrete(&mut self, name: impl Into<String>, card: usize) -> VarId {
        self.add_variable(name, VarKind::Discrete { card })
    }

    pub fn gaussian(&mut self, name: impl Into<String>, dim: usize) -> VarId {
        self.add_variable(name, VarKind::Gaussian { dim })
    }

    /// Adds a factor after validating scope and potential.
    pub fn add_factor(
        &mut self,
        name: impl Into<String>,
        scope: &[VarId],
        potential: Potential,
    ) -> Result<FactorId> {
        let name = name.into();
        if scope.is_empty() {
            return Err(Error::EmptyScope(name));
        }
        for (k, v) in scope.iter().enumerate() {
            if v.0 >= self.variables.len() {
                return Err(Error::UnknownVariable(format!("{v} in factor `{name}`")));
            }
            if scope[..k].contains(v) {
                return Err(Error::DuplicateScopeVariable {
                    factor: name,
                    var: self.variables[v.0].name.clone(),
                });
            }
        }
        self.validate_potential(&name, scope, &potential)?;
        self.factors.push(Factor {
            name,
            scope: scope.to_vec(),
            potential,
        });
        Ok(FactorId(self.factors.len() - 1))
    }

    /// Adds a discrete table factor with row-major linear values.
    pub fn add_table(
        &mut self,
        name: impl Into<String>,
        scope: &[VarId],
        values: Vec<f64>,
    ) -> Result<FactorId> {
        let name = name.into();
        if scope.is_empty() {
            return Err(Error::EmptyScope(name));
        }
        if let Some(k) = (1..scope.len()).find(|&k| scope[..k].contains(&scope[k])) {
            return Err(Error::DuplicateScopeVariable {
                var: self.variables.get(scope[k].0).map_or_else(|| scope[k].to_string(), |v| v.name.clone()),
                factor: name,
            });
        }
        let cards = scope
            .iter()
            .map(|v| match self.variables.get(v.0).map(|x| x.kind) {
                Some(VarKind::Discrete { card }) => Ok(card),
                Some(VarKind::Gaussian { .. }) => Err(Error::InvalidTable(format!(
                    "factor `{name}`: table over continuous variable `{}`",
                    self.variables[v.0].name
                ))),
                None => Err(Error::UnknownVariable(format!("{v} in factor `{name}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let table = Table::new(scope.to_vec(), cards, values)
            .map_err(|e| Error::InvalidTable(format!("factor `{name}`: {e}")))?;
        self.add_factor(name, scope, Potential::Table(table))
    }

    /// Cardinality of an already added discrete variable.
    ///
    /// Panics if `v` is unknown or Gaussian.
    pub fn card_of(&self, v: VarId) -> usize {
        self.card(v).expect("discrete variable")
    }

    fn card(&self, v: VarId) -> Option<usize> {
        match self.variables[v.0].kind {
            VarKind::Discrete { card } => Some(card),
            VarKind::Gaussian { .. } => None,
        }
    }

    fn validate_potential(&self, name: &str, scope: &[VarId], p: &Potential) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("factor `{name}`: {msg}")));
        match p {
            Potential::Table(t) => {
                if t.scope() != scope {
                    return bad("table scope differs from factor scope".into());
                }
                for (v, c) in scope.iter().zip(t.cards()) {
                    if self.card(*v) != Some(*c) {
                        return bad(format!("cardinality mismatch for `{}`", self.variables[v.0].name));
                    }
                }
                Ok(())
            }
            Potential::GaussianPrior(g) => match (scope, scope.first().map(|v| self.variables[v.0].kind)) {
                ([_], Some(VarKind::Gaussian { dim })) if dim == g.dim() => Ok(()),
                _ => bad("a Gaussian prior needs exactly one Gaussian variable of matching dimension".into()),
            },
            Potential::Observation(o) => {
                let dim = match self.variables[scope[0].0].kind {
                    VarKind::Gaussian { dim } => dim,
                    VarKind::Discrete { .. } => return bad("first scope variable of an observation must be Gaussian".into()),
                };
                if o.coord >= dim {
                    return bad(format!("coordinate {} out of range for dimension {dim}", o.coord));
                }
                if !(o.gamma > 0.0 && o.gamma.is_finite()) {
                    return bad("noise precision must be positive".into());
                }
                match scope.len() {
                    1 if o.symbols.len() == 1 => Ok(()),
                    2 if self.card(scope[1]) == Some(o.symbols.len()) => Ok(()),
                    _ => bad("observation symbols must match the scope (one fixed symbol, or one per state of the discrete variable)".into()),
                }
            }
            Potential::Kernel(k) => {
                let cards = k.cards();
                if cards.len() != scope.len() {
                    return bad("kernel arity differs from scope length".into());
                }
                for (v, c) in scope.iter().zip(&cards) {
                    if self.card(*v) != Some(*c) {
                        return bad(format!("cardinality mismatch for `{}`", self.variables[v.0].name));
                    }
                }
                Ok(())
            }
        }
    }

    /// Finalizes the graph and derives the neighbourhoods `N(i)`.
    pub fn build(self) -> Result<FactorGraph> {
        let mut neighbors: Vec<Vec<(FactorId, usize)>> = vec![Vec::new(); self.variables.len()];
        let mut edge_offsets = Vec::with_capacity(self.factors.len() + 1);
        let mut edges = Vec::new();
        for (a, f) in self.factors.iter().enumerate() {
            edge_offsets.push(edges.len());
            for (slot, v) in f.scope.iter().enumerate() {
                neighbors[v.0].push((FactorId(a), slot));
                edges.push((FactorId(a), slot, *v));
            }
        }
        edge_offsets.push(edges.len());
        for (i, n) in neighbors.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::IsolatedVariable(self.variables[i].name.clone()));
            }
        }
        Ok(FactorGraph {
            variables: self.variables,
            factors: self.factors,
            neighbors,
            edge_offsets,
            edges,
        })
    }
}

/// Identifier of a factor-variable edge.
pub type EdgeId = usize;

/// Immutable bipartite factor graph.
#[derive(Clone, Debug)]
pub struct FactorGraph {
    variables: Vec<Variable>,
    factors: Vec<Factor>,
    neighbors: Vec<Vec<(FactorId, usize)>>,
    edge_offsets: Vec<usize>,
    edges: Vec<(FactorId, usize, VarId)>,
}

impl FactorGraph {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn variable(&self, i: VarId) -> &Variable {
        &self.variables[i.0]
    }

    pub fn factor(&self, a: FactorId) -> &Factor {
        &self.factors[a.0]
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn factor_ids(&self) -> impl Iterator<Item = FactorId> {
        (0..self.factors.len()).map(FactorId)
    }

    pub fn scope(&self, a: FactorId) -> &[VarId] {
        &self.factors[a.0].scope
    }

    /// `N(i)`: factors containing `i` (ascending id) with the slot of `i` in each scope.
    pub fn neighbors(&self, i: VarId) -> &[(FactorId, usize)] {
        &self.neighbors[i.0]
    }

    /// Edge between factor `a` and the variable in `slot` of its scope.
    pub fn edge(&self, a: FactorId, slot: usize) -> EdgeId {
        self.edge_offsets[a.0] + slot
    }

    /// Edges of factor `a` in scope order.
    pub fn factor_edges(&self, a: FactorId) -> std::ops::Range<EdgeId> {
        self.edge_offsets[a.0]..self.edge_offsets[a.0 + 1]
    }

    /// `(factor, slot, variable)` of an edge.
    pub fn edge_info(&self, e: EdgeId) -> (FactorId, usize, VarId) {
        self.edges[e]
    }

    /// Cardinality of a discrete variable.
    pub fn card(&self, i: VarId) -> Option<usize> {
        match self.variables[i.0].kind {
            VarKind::Discrete { card } => Some(card),
            VarKind::Gaussian { .. } => None,
        }
    }

    pub fn is_discrete(&self, i: VarId) -> bool {
        self.card(i).is_some()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    pub fn factor_by_name(&self, name: &str) -> Option<FactorId> {
        self.factors.iter().position(|f| f.name == name).map(FactorId)
    }

    /// Cardinalities of a factor's scope (`None` entries for Gaussian variables).
    pub fn scope_cards(&self, a: FactorId) -> Vec<Option<usize>> {
        self.scope(a).iter().map(|&v| self.card(v)).collect()
    }

    /// `ln f_a` at a configuration of a fully discrete factor.
    pub fn log_factor_value(&self, a: FactorId, config: &[usize]) -> Result<f64> {
        match &self.factors[a.0].potential {
            Potential::Table(t) => Ok(t.log_value(config)),
            Potential::Kernel(k) => Ok(k.log_value(config)),
            _ => Err(Error::InvalidArgument(format!(
                "factor `{}` is not discrete",
                self.factors[a.0].name
            ))),
        }
    }
}

/// Disjoint split of the factor set into a BP part and an MF part, with the
/// derived variable sets `I_BP`, `I_MF` and neighbourhoods `N_BP(i)`, `N_MF(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpMfPartition {
    is_bp: Vec<bool>,
    in_bp: Vec<bool>,
    in_mf: Vec<bool>,
    n_bp: Vec<Vec<(FactorId, usize)>>,
    n_mf: Vec<Vec<(FactorId, usize)>>,
}

impl BpMfPartition {
    /// Partition with the given BP factors; every other factor is MF.
    pub fn new(graph: &FactorGraph, bp_factors: &[FactorId]) -> Result<Self> {
        let mut is_bp = vec![false; graph.num_factors()];
        for a in bp_factors {
            if a.0 >= graph.num_factors() {
                return Err(Error::InvalidArgument(format!("unknown factor {a}")));
            }
            is_bp[a.0] = true;
        }
        Self::from_flags(graph, is_bp)
    }

    /// Partition from one flag per factor (`true` = BP).
    pub fn from_flags(graph: &FactorGraph, is_bp: Vec<bool>) -> Result<Self> {
        if is_bp.len() != graph.num_factors() {
            return Err(Error::DimensionMismatch("one flag per factor expected".into()));
        }
        let n = graph.num_vars();
        let mut in_bp = vec![false; n];
        let mut in_mf = vec![false; n];
        let mut n_bp = vec![Vec::new(); n];
        let mut n_mf = vec![Vec::new(); n];
        for a in graph.factor_ids() {
            let f = graph.factor(a);
            if is_bp[a.0] {
                for &v in &f.scope {
                    if !graph.is_discrete(v) {
                        return Err(Error::ContinuousInBp {
                            var: graph.variable(v).name.clone(),
                            factor: f.name.clone(),
                        });
                    }
                }
            } else if matches!(f.potential, Potential::Kernel(_)) {
                return Err(Error::KernelInMeanField(f.name.clone()));
            }
        }
        for i in graph.vars() {
            for &(a, slot) in graph.neighbors(i) {
                if is_bp[a.0] {
                    in_bp[i.0] = true;
                    n_bp[i.0].push((a, slot));
                } else {
                    in_mf[i.0] = true;
                    n_mf[i.0].push((a, slot));
                }
            }
        }
        Ok(BpMfPartition {
            is_bp,
            in_bp,
            in_mf,
            n_bp,
            n_mf,
        })
    }

    /// Every factor in the BP part.
    pub fn all_bp(graph: &FactorGraph) -> Result<Self> {
        Self::from_flags(graph, vec![true; graph.num_factors()])
    }

    /// Every factor in the MF part.
    pub fn all_mf(graph: &FactorGraph) -> Result<Self> {
        Self::from_flags(graph, vec![false; graph.num_factors()])
    }

    pub fn is_bp(&self, a: FactorId) -> bool {
        self.is_bp[a.0]
    }

    /// `i` in `I_BP`.
    pub fn in_ibp(&self, i: VarId) -> bool {
        self.in_bp[i.0]
    }

    /// `i` in `I_MF`.
    pub fn in_imf(&self, i: VarId) -> bool {
        self.in_mf[i.0]
    }

    pub fn n_bp(&self, i: VarId) -> &[(FactorId, usize)] {
        &self.n_bp[i.0]
    }

    pub fn n_mf(&self, i: VarId) -> &[(FactorId, usize)] {
        &self.n_mf[i.0]
    }

    pub fn bp_factors(&self) -> impl Iterator<Item = FactorId> + '_ {
        self.is_bp.iter().enumerate().filter(|(_, b)| **b).map(|(a, _)| FactorId(a))
    }

    pub fn mf_factors(&self) -> impl Iterator<Item = FactorId> + '_ {
        self.is_bp.iter().enumerate().filter(|(_, b)| !**b).map(|(a, _)| FactorId(a))
    }

    /// Variables in `I_BP`, ascending.
    pub fn ibp(&self) -> Vec<VarId> {
        (0..self.in_bp.len()).filter(|&i| self.in_bp[i]).map(VarId).collect()
    }

    /// Variables in `I_MF`, ascending.
    pub fn imf(&self) -> Vec<VarId> {
        (0..self.in_mf.len()).filter(|&i| self.in_mf[i]).map(VarId).collect()
    }

    /// Variables in `I_MF \ I_BP`, ascending.
    pub fn mf_only(&self) -> Vec<VarId> {
        (0..self.in_mf.len())
            .filter(|&i| self.in_mf[i] && !self.in_bp[i])
            .map(VarId)
            .collect()
    }

    /// Variables in `I_BP ∩ I_MF`, ascending.
    pub fn boundary(&self) -> Vec<VarId> {
        (0..self.in_mf.len())
            .filter(|&i| self.in_mf[i] && self.in_bp[i])
            .map(VarId)
            .collect()
    }
}
