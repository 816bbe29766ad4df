//! Region sets with counting numbers.

use std::collections::BTreeSet;

use super::{BpMfPartition, FactorGraph, FactorId, VarId};
use crate::error::{Error, Result};

/// A region `(I_R, A_R)` with counting number `c_R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub vars: BTreeSet<VarId>,
    pub factors: BTreeSet<FactorId>,
    pub counting: i64,
}

/// Ordered collection of regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionSet {
    pub regions: Vec<Region>,
}

impl RegionSet {
    /// Checks that every region contains the scopes of its factors and that
    /// counting numbers sum to one for every factor and every variable.
    pub fn validate(&self, graph: &FactorGraph) -> Result<()> {
        for (r, region) in self.regions.iter().enumerate() {
            for &a in &region.factors {
                if let Some(v) = graph.scope(a).iter().find(|v| !region.vars.contains(v)) {
                    return Err(Error::InvalidArgument(format!(
                        "region {r} contains factor `{}` but not its variable `{}`",
                        graph.factor(a).name,
                        graph.variable(*v).name
                    )));
                }
            }
        }
        for a in graph.factor_ids() {
            let s: i64 = self
                .regions
                .iter()
                .filter(|r| r.factors.contains(&a))
                .map(|r| r.counting)
                .sum();
            if s != 1 {
                return Err(Error::InvalidArgument(format!(
                    "counting numbers of factor `{}` sum to {s}",
                    graph.factor(a).name
                )));
            }
        }
        for i in graph.vars() {
            let s: i64 = self
                .regions
                .iter()
                .filter(|r| r.vars.contains(&i))
                .map(|r| r.counting)
                .sum();
            if s != 1 {
                return Err(Error::InvalidArgument(format!(
                    "counting numbers of variable `{}` sum to {s}",
                    graph.variable(i).name
                )));
            }
        }
        Ok(())
    }
}

fn large_region(graph: &FactorGraph, a: FactorId) -> Region {
    Region {
        vars: graph.scope(a).iter().copied().collect(),
        factors: [a].into_iter().collect(),
        counting: 1,
    }
}

fn small_region(i: VarId, counting: i64) -> Region {
    Region {
        vars: [i].into_iter().collect(),
        factors: BTreeSet::new(),
        counting,
    }
}

/// Single region holding the whole graph.
pub fn region_set_mf(graph: &FactorGraph) -> RegionSet {
    RegionSet {
        regions: vec![Region {
            vars: graph.vars().collect(),
            factors: graph.factor_ids().collect(),
            counting: 1,
        }],
    }
}

/// One large region per factor and one small region per variable with
/// counting number `1 - |N(i)|`.
pub fn region_set_bethe(graph: &FactorGraph) -> RegionSet {
    let mut regions: Vec<Region> = graph.factor_ids().map(|a| large_region(graph, a)).collect();
    for i in graph.vars() {
        regions.push(small_region(i, 1 - graph.neighbors(i).len() as i64));
    }
    RegionSet { regions }
}

/// One large region per BP factor, one small region per variable in `I_BP`
/// with counting number `1 - |N_BP(i)| - [i in I_MF]`, and a single region
/// `(I_MF, A_MF)` when the MF part is nonempty.
pub fn region_set_bpmf(graph: &FactorGraph, partition: &BpMfPartition) -> RegionSet {
    let mut regions: Vec<Region> = partition
        .bp_factors()
        .map(|a| large_region(graph, a))
        .collect();
    for i in partition.ibp() {
        let c = 1 - partition.n_bp(i).len() as i64 - i64::from(partition.in_imf(i));
        regions.push(small_region(i, c));
    }
    let mf: BTreeSet<FactorId> = partition.mf_factors().collect();
    if !mf.is_empty() {
        regions.push(Region {
            vars: partition.imf().into_iter().collect(),
            factors: mf,
            counting: 1,
        });
    }
    RegionSet { regions }
}
