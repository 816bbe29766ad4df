//! Brute-force ground truth for small discrete graphs.
//!
//! Everything here enumerates joint configurations directly from the factor
//! values, without touching the message-passing kernels, so it can serve as
//! an independent reference in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::factor_graph::{FactorGraph, FactorId, VarId};
use crate::numeric::{log_sum_exp, max_abs_diff, next_config, xlogx};
use crate::tabular::Table;

/// Largest joint state space the oracle will enumerate.
pub const MAX_JOINT_STATES: usize = 1 << 20;

/// Normalized joint pmf over all variables, row-major in variable id order.
#[derive(Clone, Debug)]
pub struct JointTable {
    pub cards: Vec<usize>,
    pub probs: Vec<f64>,
    /// `ln Z` with `Z = sum_x prod_a f_a(x_a)`.
    pub log_z: f64,
}

impl JointTable {
    /// Iterates `(configuration, probability)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let mut config = vec![0; self.cards.len()];
        let mut first = true;
        self.probs.iter().map(move |&p| {
            if !first {
                next_config(&mut config, &self.cards);
            }
            first = false;
            (config.clone(), p)
        })
    }
}

fn discrete_cards(graph: &FactorGraph) -> Result<Vec<usize>> {
    graph
        .vars()
        .map(|i| {
            graph.card(i).ok_or_else(|| {
                Error::InvalidArgument(format!("oracle needs discrete variables, `{}` is Gaussian", graph.variable(i).name))
            })
        })
        .collect()
}

fn state_count(cards: &[usize]) -> Result<usize> {
    let mut n: usize = 1;
    for &c in cards {
        n = n
            .checked_mul(c)
            .filter(|&n| n <= MAX_JOINT_STATES)
            .ok_or(Error::TooManyStates {
                states: usize::MAX,
                limit: MAX_JOINT_STATES,
            })?;
    }
    Ok(n)
}

/// `ln prod_a f_a(x_a)` at a full configuration.
pub fn log_unnormalized(graph: &FactorGraph, config: &[usize]) -> Result<f64> {
    let mut s = 0.0;
    for a in graph.factor_ids() {
        let local: Vec<usize> = graph.scope(a).iter().map(|v| config[v.0]).collect();
        s += graph.log_factor_value(a, &local)?;
    }
    Ok(s)
}

/// Enumerates and normalizes the joint distribution.
pub fn enumerate_joint(graph: &FactorGraph) -> Result<JointTable> {
    let cards = discrete_cards(graph)?;
    let n = state_count(&cards)?;
    let mut logs = Vec::with_capacity(n);
    let mut config = vec![0; cards.len()];
    loop {
        logs.push(log_unnormalized(graph, &config)?);
        if !next_config(&mut config, &cards) {
            break;
        }
    }
    let log_z = log_sum_exp(&logs);
    if log_z == f64::NEG_INFINITY {
        return Err(Error::Contradiction("every configuration has zero probability".into()));
    }
    let probs = logs.iter().map(|l| (l - log_z).exp()).collect();
    Ok(JointTable { cards, probs, log_z })
}

/// Exact single-variable and factor-scope marginals.
#[derive(Clone, Debug)]
pub struct ExactMarginals {
    pub vars: Vec<Vec<f64>>,
    /// One table per factor over the factor's scope (in scope order).
    pub factors: Vec<Table>,
    pub log_z: f64,
}

pub fn exact_marginals(graph: &FactorGraph) -> Result<ExactMarginals> {
    let joint = enumerate_joint(graph)?;
    let mut vars: Vec<Vec<f64>> = joint.cards.iter().map(|&c| vec![0.0; c]).collect();
    let mut fac: Vec<Vec<f64>> = graph
        .factor_ids()
        .map(|a| vec![0.0; graph.scope(a).iter().map(|v| joint.cards[v.0]).product()])
        .collect();
    let fac_cards: Vec<Vec<usize>> = graph
        .factor_ids()
        .map(|a| graph.scope(a).iter().map(|v| joint.cards[v.0]).collect())
        .collect();
    for (config, p) in joint.iter() {
        for (i, x) in config.iter().enumerate() {
            vars[i][*x] += p;
        }
        for a in graph.factor_ids() {
            let mut idx = 0;
            for (v, c) in graph.scope(a).iter().zip(&fac_cards[a.0]) {
                idx = idx * c + config[v.0];
            }
            fac[a.0][idx] += p;
        }
    }
    let factors = graph
        .factor_ids()
        .zip(fac)
        .map(|(a, vals)| Table::new(graph.scope(a).to_vec(), fac_cards[a.0].clone(), vals))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactMarginals {
        vars,
        factors,
        log_z: joint.log_z,
    })
}

/// Expected `ln f_a` under a product of independent marginals. Zero-probability
/// configurations are skipped; a supported zero of `f_a` gives `-inf`.
fn expected_log(graph: &FactorGraph, a: FactorId, q: &[Vec<f64>]) -> Result<f64> {
    let scope = graph.scope(a);
    let cards: Vec<usize> = scope.iter().map(|v| q[v.0].len()).collect();
    let mut config = vec![0; cards.len()];
    let mut s = 0.0;
    loop {
        let w: f64 = scope.iter().zip(&config).map(|(v, &x)| q[v.0][x]).product();
        if w > 0.0 {
            s += w * graph.log_factor_value(a, &config)?;
        }
        if !next_config(&mut config, &cards) {
            break;
        }
    }
    Ok(s)
}

/// `F_MF(q) = sum_i sum q ln q - sum_a E_q[ln f_a]`, computed by enumeration.
pub fn mf_free_energy_direct(graph: &FactorGraph, q: &[Vec<f64>]) -> Result<Extended> {
    let mut f = 0.0;
    for a in graph.factor_ids() {
        let e = expected_log(graph, a, q)?;
        if e == f64::NEG_INFINITY {
            return Ok(Extended::PosInfinity);
        }
        f -= e;
    }
    for qi in q {
        f += qi.iter().map(|&p| xlogx(p)).sum::<f64>();
    }
    Ok(Extended::Finite(f))
}

/// One coordinate update `q_i ∝ exp(sum_a E_{q without i}[ln f_a])`.
fn coordinate_update(graph: &FactorGraph, q: &[Vec<f64>], i: VarId) -> Result<Vec<f64>> {
    let card = q[i.0].len();
    let mut logs = vec![0.0; card];
    for &(a, slot) in graph.neighbors(i) {
        let scope = graph.scope(a);
        let cards: Vec<usize> = scope.iter().map(|v| q[v.0].len()).collect();
        let mut config = vec![0; cards.len()];
        loop {
            let w: f64 = scope
                .iter()
                .zip(&config)
                .enumerate()
                .filter(|(k, _)| *k != slot)
                .map(|(_, (v, &x))| q[v.0][x])
                .product();
            if w > 0.0 {
                logs[config[slot]] += w * graph.log_factor_value(a, &config)?;
            }
            if !next_config(&mut config, &cards) {
                break;
            }
        }
    }
    let lse = log_sum_exp(&logs);
    if !lse.is_finite() {
        return Err(Error::Contradiction(format!("coordinate update of `{}` vanishes", graph.variable(i).name)));
    }
    Ok(logs.iter().map(|l| (l - lse).exp()).collect())
}

/// Coordinate descent from `init` until the largest change is below `tol`.
pub fn mf_coordinate_descent(graph: &FactorGraph, init: Vec<Vec<f64>>, tol: f64, max_sweeps: usize) -> Result<Vec<Vec<f64>>> {
    let mut q = init;
    for _ in 0..max_sweeps {
        let mut delta: f64 = 0.0;
        for i in graph.vars() {
            let new = coordinate_update(graph, &q, i)?;
            delta = delta.max(max_abs_diff(&new, &q[i.0]));
            q[i.0] = new;
        }
        if delta < tol {
            break;
        }
    }
    Ok(q)
}

/// Result of a multi-start mean-field search.
#[derive(Clone, Debug)]
pub struct MfSearch {
    pub best: Vec<Vec<f64>>,
    pub best_free_energy: Extended,
    /// Distinct fixed points (by max abs difference > 1e-6) with their `F_MF`.
    pub fixed_points: Vec<(Vec<Vec<f64>>, Extended)>,
}

/// Runs mean-field coordinate descent from `restarts` random strictly positive
/// initializations and returns the lowest free energy found together with the
/// distinct fixed points.
pub fn grid_mf_minimize(graph: &FactorGraph, restarts: usize, seed: u64) -> Result<MfSearch> {
    let cards = discrete_cards(graph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fixed_points: Vec<(Vec<Vec<f64>>, Extended)> = Vec::new();
    for _ in 0..restarts.max(1) {
        let init: Vec<Vec<f64>> = cards
            .iter()
            .map(|&c| {
                let w: Vec<f64> = (0..c).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let q = mf_coordinate_descent(graph, init, 1e-13, 100_000)?;
        let f = mf_free_energy_direct(graph, &q)?;
        let seen = fixed_points.iter().any(|(p, _)| {
            p.iter().zip(&q).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max) <= 1e-6
        });
        if !seen {
            fixed_points.push((q, f));
        }
    }
    let (best, best_free_energy) = fixed_points
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .cloned()
        .expect("at least one restart");
    Ok(MfSearch {
        best,
        best_free_energy,
        fixed_points,
    })
}

/// Maximizer of the exact posterior marginal of `i` (lowest index on ties).
pub fn exact_map_marginal(graph: &FactorGraph, i: VarId) -> Result<usize> {
    let m = exact_marginals(graph)?;
    Ok(crate::numeric::argmax(&m.vars[i.0]))
}
