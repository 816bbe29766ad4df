//! JSON description of a factor graph with its BP/MF partition.
//!
//! ```json
//! {
//!   "variables": [
//!     {"name": "a", "card": 2},
//!     {"name": "h", "gaussian_dim": 1}
//!   ],
//!   "factors": [
//!     {"name": "fa", "scope": ["a"], "part": "bp", "table": [0.3, 0.7]},
//!     {"name": "ph", "scope": ["h"], "part": "mf",
//!      "gaussian_prior": {"mean": [[0, 0]], "precision": [[[1, 0]]]}},
//!     {"name": "obs", "scope": ["h", "a"], "part": "mf",
//!      "observation": {"y": [0.9, 0.1], "gamma": 4.0, "coord": 0,
//!                      "symbols": [[1, 0], [-1, 0]]}}
//!   ],
//!   "em": [{"var": "theta", "init": 0}]
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Tables are row-major with the last
//! scope variable varying fastest. `part` defaults to `"bp"`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{BpMfPartition, FactorGraph, FactorId, GraphBuilder, Observation, Potential, VarId, VarKind};
use crate::error::{Error, Result};
use crate::gaussian_mf::{CMatrix, CVector, ComplexGaussian};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub card: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_dim: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    #[default]
    Bp,
    Mf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPriorSpec {
    pub mean: Vec<[f64; 2]>,
    pub precision: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub y: [f64; 2],
    pub gamma: f64,
    #[serde(default)]
    pub coord: usize,
    pub symbols: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub name: String,
    pub scope: Vec<String>,
    #[serde(default)]
    pub part: Part,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian_prior: Option<GaussianPriorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSpec {
    pub var: String,
    #[serde(default)]
    pub init: usize,
}

/// Top-level JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub variables: Vec<VariableSpec>,
    pub factors: Vec<FactorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub em: Vec<EmSpec>,
}

/// A loaded graph with its partition and EM-constrained variables.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: FactorGraph,
    pub partition: BpMfPartition,
    /// EM-constrained variables with their initial point estimates.
    pub em: BTreeMap<VarId, usize>,
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl GraphSpec {
    /// Parses a JSON document; errors carry the line and column reported by the parser.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Builds the graph, partition and EM set.
    pub fn build(&self) -> Result<LoadedGraph> {
        let mut b = GraphBuilder::new();
        let mut names: BTreeMap<&str, VarId> = BTreeMap::new();
        for (k, v) in self.variables.iter().enumerate() {
            let kind = match (v.card, v.gaussian_dim) {
                (Some(card), None) if card > 0 => VarKind::Discrete { card },
                (None, Some(dim)) if dim > 0 => VarKind::Gaussian { dim },
                _ => {
                    return Err(Error::Parse(format!(
                        "variables[{k}] (`{}`): give exactly one of a positive `card` or `gaussian_dim`",
                        v.name
                    )))
                }
            };
            if names.insert(&v.name, b.add_variable(v.name.clone(), kind)).is_some() {
                return Err(Error::Parse(format!("variables[{k}]: duplicate name `{}`", v.name)));
            }
        }
        let mut flags = Vec::new();
        for (k, f) in self.factors.iter().enumerate() {
            let ctx = |msg: String| Error::Parse(format!("factors[{k}] (`{}`): {msg}", f.name));
            let scope = f
                .scope
                .iter()
                .map(|n| names.get(n.as_str()).copied().ok_or_else(|| ctx(format!("unknown variable `{n}` in `scope`"))))
                .collect::<Result<Vec<_>>>()?;
            let given = [f.table.is_some(), f.gaussian_prior.is_some(), f.observation.is_some()]
                .iter()
                .filter(|x| **x)
                .count();
            if given != 1 {
                return Err(ctx("give exactly one of `table`, `gaussian_prior`, `observation`".into()));
            }
            let id: FactorId = if let Some(t) = &f.table {
                b.add_table(f.name.clone(), &scope, t.clone()).map_err(|e| ctx(e.to_string()))?
            } else if let Some(g) = &f.gaussian_prior {
                let d = g.mean.len();
                if g.precision.len() != d || g.precision.iter().any(|r| r.len() != d) {
                    return Err(ctx("`gaussian_prior.precision` must be square with the size of `mean`".into()));
                }
                let mean = CVector::from_iterator(d, g.mean.iter().map(|&p| c(p)));
                let prec = CMatrix::from_fn(d, d, |r, col| c(g.precision[r][col]));
                let g = ComplexGaussian::new(mean, prec).map_err(|e| ctx(format!("`gaussian_prior`: {e}")))?;
                b.add_factor(f.name.clone(), &scope, Potential::GaussianPrior(g))
                    .map_err(|e| ctx(e.to_string()))?
            } else {
                let o = f.observation.as_ref().expect("checked above");
                let obs = Observation {
                    y: c(o.y),
                    gamma: o.gamma,
                    coord: o.coord,
                    symbols: o.symbols.iter().map(|&p| c(p)).collect(),
                };
                b.add_factor(f.name.clone(), &scope, Potential::Observation(obs))
                    .map_err(|e| ctx(e.to_string()))?
            };
            debug_assert_eq!(id.0, flags.len());
            flags.push(f.part == Part::Bp);
        }
        let graph = b.build()?;
        let partition = BpMfPartition::from_flags(&graph, flags)?;
        let mut em = BTreeMap::new();
        for (k, e) in self.em.iter().enumerate() {
            let v = *names
                .get(e.var.as_str())
                .ok_or_else(|| Error::Parse(format!("em[{k}]: unknown variable `{}`", e.var)))?;
            em.insert(v, e.init);
        }
        Ok(LoadedGraph { graph, partition, em })
    }
}

/// Parses and builds a graph from JSON text.
pub fn load_graph(text: &str) -> Result<LoadedGraph> {
    GraphSpec::from_json(text)?.build()
}
