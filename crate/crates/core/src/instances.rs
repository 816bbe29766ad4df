//! Small reference models used by tests, the acceptance suite and `verify`.
//!
//! Random generators take a caller-owned RNG so that a seed fully determines
//! the instance.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::factor_graph::{BpMfPartition, FactorGraph, FactorId, GraphBuilder, Observation, Potential, VarId};
use crate::gaussian_mf::ComplexGaussian;
use crate::message_passing::{all_but_one, factor_sum_product, EmConstraintSet, UnnormalizedSolution};

/// A graph with its BP/MF split and EM constraints.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: FactorGraph,
    pub partition: BpMfPartition,
    pub em: EmConstraintSet,
}

impl Instance {
    fn new(graph: FactorGraph, bp: &[FactorId]) -> Result<Self> {
        let partition = BpMfPartition::new(&graph, bp)?;
        Ok(Instance {
            graph,
            partition,
            em: EmConstraintSet::default(),
        })
    }
}

fn positive_values<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.1..2.0)).collect()
}

/// Conditional table `p(children | parent)` normalized over the children for
/// every parent value, laid out with the parent first.
fn conditional<R: Rng>(rng: &mut R, parent_card: usize, child_states: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(parent_card * child_states);
    for _ in 0..parent_card {
        let w = positive_values(rng, child_states);
        let s: f64 = w.iter().sum();
        out.extend(w.into_iter().map(|x| x / s));
    }
    out
}

/// Random tree-structured distribution with `Z = 1`: a root prior followed by
/// conditionals `p(children | parent)` with one or two children per factor.
/// Up to `max_vars` variables with alphabets `2..=max_card`; all factors BP.
pub fn random_tree<R: Rng>(rng: &mut R, max_vars: usize, max_card: usize) -> Result<Instance> {
    let n = rng.gen_range(2..=max_vars.max(2));
    let mut b = GraphBuilder::new();
    let vars: Vec<VarId> = (0..n).map(|k| b.discrete(format!("x{k}"), rng.gen_range(2..=max_card.max(2)))).collect();
    let card = |b: &GraphBuilder, v: VarId| b.card_of(v);
    let prior = conditional(rng, 1, card(&b, vars[0]));
    b.add_table("prior_x0", &[vars[0]], prior)?;
    let mut next = 1;
    let mut k = 0;
    while next < n {
        let parent = vars[rng.gen_range(0..next)];
        let two = next + 1 < n && rng.gen_bool(0.3);
        let children: Vec<VarId> = if two { vec![vars[next], vars[next + 1]] } else { vec![vars[next]] };
        next += children.len();
        let states: usize = children.iter().map(|&c| card(&b, c)).product();
        let t = conditional(rng, card(&b, parent), states);
        let mut scope = vec![parent];
        scope.extend(&children);
        b.add_table(format!("cond{k}"), &scope, t)?;
        k += 1;
    }
    let graph = b.build()?;
    let partition = BpMfPartition::all_bp(&graph)?;
    Ok(Instance {
        graph,
        partition,
        em: EmConstraintSet::default(),
    })
}

/// Random fully mean-field instance: 2..=6 variables with alphabets 2..=3,
/// positive unary factors and random pairwise couplings (cycles allowed).
pub fn random_mf<R: Rng>(rng: &mut R) -> Result<Instance> {
    let n = rng.gen_range(2..=6);
    let mut b = GraphBuilder::new();
    let vars: Vec<VarId> = (0..n).map(|k| b.discrete(format!("x{k}"), rng.gen_range(2..=3))).collect();
    for (k, &v) in vars.iter().enumerate() {
        let c = b.card_of(v);
        b.add_table(format!("u{k}"), &[v], positive_values(rng, c))?;
    }
    let pairs = rng.gen_range(1..=n + 1);
    for k in 0..pairs {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let c = b.card_of(vars[i]) * b.card_of(vars[j]);
        b.add_table(format!("p{k}"), &[vars[i], vars[j]], positive_values(rng, c))?;
    }
    let graph = b.build()?;
    let partition = BpMfPartition::all_mf(&graph)?;
    Ok(Instance {
        graph,
        partition,
        em: EmConstraintSet::default(),
    })
}

/// Random instance satisfying the exact-schedule conditions: the BP part is a
/// tree over 2..=5 discrete variables, and every MF factor touches at most one
/// BP variable. Optionally adds a scalar Gaussian variable observed through
/// some of the BP variables.
pub fn random_applicable<R: Rng>(rng: &mut R, with_gaussian: bool) -> Result<Instance> {
    let nb = rng.gen_range(2..=5);
    let nm = rng.gen_range(1..=3);
    let mut b = GraphBuilder::new();
    let bp_vars: Vec<VarId> = (0..nb).map(|k| b.discrete(format!("b{k}"), rng.gen_range(2..=3))).collect();
    let mf_vars: Vec<VarId> = (0..nm).map(|k| b.discrete(format!("m{k}"), rng.gen_range(2..=3))).collect();
    let mut bp = Vec::new();
    for k in 1..nb {
        let parent = bp_vars[rng.gen_range(0..k)];
        let c = b.card_of(parent) * b.card_of(bp_vars[k]);
        bp.push(b.add_table(format!("t{k}"), &[parent, bp_vars[k]], positive_values(rng, c))?);
    }
    for (k, &m) in mf_vars.iter().enumerate() {
        let cm = b.card_of(m);
        b.add_table(format!("um{k}"), &[m], positive_values(rng, cm))?;
        let target = bp_vars[rng.gen_range(0..nb)];
        let c = cm * b.card_of(target);
        b.add_table(format!("c{k}"), &[m, target], positive_values(rng, c))?;
        if k > 0 && rng.gen_bool(0.5) {
            let other = mf_vars[rng.gen_range(0..k)];
            let c = cm * b.card_of(other);
            b.add_table(format!("mm{k}"), &[m, other], positive_values(rng, c))?;
        }
    }
    for (k, &v) in bp_vars.iter().enumerate() {
        if rng.gen_bool(0.4) {
            let c = b.card_of(v);
            b.add_table(format!("e{k}"), &[v], positive_values(rng, c))?;
        }
    }
    if with_gaussian {
        let h = b.gaussian("h", 1);
        let prior = ComplexGaussian::new(
            DVector::from_element(1, Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))),
            DMatrix::from_element(1, 1, Complex64::new(rng.gen_range(0.5..2.0), 0.0)),
        )?;
        b.add_factor("h_prior", &[h], Potential::GaussianPrior(prior))?;
        for (k, &v) in bp_vars.iter().enumerate() {
            if k == 0 || rng.gen_bool(0.5) {
                let symbols: Vec<Complex64> = (0..b.card_of(v))
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let obs = Observation {
                    y: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    gamma: rng.gen_range(0.5..4.0),
                    coord: 0,
                    symbols,
                };
                b.add_factor(format!("y{k}"), &[h, v], Potential::Observation(obs))?;
            }
        }
    }
    Instance::new(b.build()?, &bp)
}

fn parity_values(n: usize) -> Vec<f64> {
    (0..1usize << n).map(|c| if c.count_ones() % 2 == 0 { 1.0 } else { 0.0 }).collect()
}

/// Six bits tied by three even-parity checks `(x0,x1,x3)`, `(x1,x2,x4)`,
/// `(x2,x0,x5)`; the joint is uniform over the 8 codewords.
pub fn parity_triangle() -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..6).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    let checks = [[0, 1, 3], [1, 2, 4], [2, 0, 5]];
    let mut bp = Vec::new();
    for (k, c) in checks.iter().enumerate() {
        bp.push(b.add_table(format!("chk{k}"), &[x[c[0]], x[c[1]], x[c[2]]], parity_values(3))?);
    }
    Instance::new(b.build()?, &bp)
}

/// Parity-constrained chain with soft MF evidence on every bit and one MF-only
/// variable coupled to the first bit. The BP part (the checks) is a tree.
pub fn parity_chain<R: Rng>(rng: &mut R) -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..7).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    let s = b.discrete("s", 2);
    let mut bp = Vec::new();
    for (k, c) in [[0, 1, 2], [2, 3, 4], [4, 5, 6]].iter().enumerate() {
        bp.push(b.add_table(format!("chk{k}"), &[x[c[0]], x[c[1]], x[c[2]]], parity_values(3))?);
    }
    for (k, &v) in x.iter().enumerate() {
        b.add_table(format!("ev{k}"), &[v], positive_values(rng, 2))?;
    }
    b.add_table("s_prior", &[s], positive_values(rng, 2))?;
    b.add_table("s_x0", &[s, x[0]], positive_values(rng, 4))?;
    Instance::new(b.build()?, &bp)
}

/// Three bits under an even-parity check with hard evidence `x = (1, 0, 0)`:
/// no configuration survives, and message passing on this tree finds out.
pub fn contradictory_parity() -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..3).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    let mut bp = vec![b.add_table("chk", &x, parity_values(3))?];
    for (k, bit) in [1usize, 0, 0].into_iter().enumerate() {
        let mut v = vec![0.0; 2];
        v[bit] = 1.0;
        bp.push(b.add_table(format!("obs{k}"), &[x[k]], v)?);
    }
    Instance::new(b.build()?, &bp)
}

/// Two binary variables with coupling `exp(j [x0 == x1])` and weak fields;
/// for large `|j|` mean field has two distinct fixed points.
pub fn frustrated_pair(j: f64) -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let x0 = b.discrete("x0", 2);
    let x1 = b.discrete("x1", 2);
    b.add_table("f0", &[x0], vec![1.0, 1.05])?;
    b.add_table("f1", &[x1], vec![1.0, 0.95])?;
    b.add_table("pair", &[x0, x1], vec![j.exp(), 1.0, 1.0, j.exp()])?;
    let graph = b.build()?;
    let partition = BpMfPartition::all_mf(&graph)?;
    Ok(Instance {
        graph,
        partition,
        em: EmConstraintSet::default(),
    })
}

/// Product distribution: independent binary/ternary variables with unary
/// factors only, normalized so that `Z = 1`.
pub fn product_instance<R: Rng>(rng: &mut R, n: usize) -> Result<Instance> {
    let mut b = GraphBuilder::new();
    for k in 0..n {
        let c = rng.gen_range(2..=3);
        let v = b.discrete(format!("x{k}"), c);
        b.add_table(format!("u{k}"), &[v], conditional(rng, 1, c))?;
    }
    let graph = b.build()?;
    let partition = BpMfPartition::all_mf(&graph)?;
    Ok(Instance {
        graph,
        partition,
        em: EmConstraintSet::default(),
    })
}

/// Three binary variables on a cycle with pairwise BP factors.
pub fn three_cycle(couplings: [[f64; 4]; 3]) -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..3).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    let mut bp = Vec::new();
    for k in 0..3 {
        bp.push(b.add_table(format!("f{k}"), &[x[k], x[(k + 1) % 3]], couplings[k].to_vec())?);
    }
    Instance::new(b.build()?, &bp)
}

/// Binary 4-cycle with weak random couplings and unary fields, all BP.
pub fn weak_four_cycle<R: Rng>(rng: &mut R) -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..4).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    let mut bp = Vec::new();
    for k in 0..4 {
        bp.push(b.add_table(format!("u{k}"), &[x[k]], positive_values(rng, 2))?);
        let w: f64 = rng.gen_range(-0.3..0.3);
        bp.push(b.add_table(format!("p{k}"), &[x[k], x[(k + 1) % 4]], vec![w.exp(), 1.0, 1.0, w.exp()])?);
    }
    Instance::new(b.build()?, &bp)
}

/// Chain of three binary variables with soft unary evidence, all BP.
pub fn binary_chain() -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..3).map(|k| b.discrete(format!("x{k}"), 2)).collect();
    let bp = vec![
        b.add_table("e0", &[x[0]], vec![0.7, 0.3])?,
        b.add_table("e1", &[x[1]], vec![0.4, 0.6])?,
        b.add_table("e2", &[x[2]], vec![0.2, 0.8])?,
        b.add_table("p01", &[x[0], x[1]], vec![0.9, 0.1, 0.2, 0.8])?,
        b.add_table("p12", &[x[1], x[2]], vec![0.6, 0.4, 0.3, 0.7])?,
    ];
    Instance::new(b.build()?, &bp)
}

/// Parameter `theta` (3 values, EM-constrained, MF) driving two hidden binary
/// variables on a BP chain with soft evidence. The exact posterior marginal of
/// `theta` has a clear maximizer.
pub fn em_toy(theta_init: usize) -> Result<Instance> {
    let mut b = GraphBuilder::new();
    let theta = b.discrete("theta", 3);
    let h0 = b.discrete("h0", 2);
    let h1 = b.discrete("h1", 2);
    let bp = vec![
        b.add_table("h_link", &[h0, h1], vec![0.8, 0.2, 0.3, 0.7])?,
        b.add_table("obs0", &[h0], vec![0.2, 0.8])?,
        b.add_table("obs1", &[h1], vec![0.35, 0.65])?,
    ];
    b.add_table("theta_prior", &[theta], vec![0.3, 0.3, 0.4])?;
    // p(h | theta) for theta = 0, 1, 2.
    let emission = vec![0.8, 0.2, 0.5, 0.5, 0.15, 0.85];
    b.add_table("em0", &[theta, h0], emission.clone())?;
    b.add_table("em1", &[theta, h1], emission)?;
    let graph = b.build()?;
    let partition = BpMfPartition::new(&graph, &bp)?;
    Ok(Instance {
        graph,
        partition,
        em: EmConstraintSet::new(BTreeMap::from([(theta, theta_init)])),
    })
}

/// Three QPSK symbols on a BP chain observed through one scalar Gaussian
/// channel coefficient (MF), with one pilot observation.
pub fn mixed_chain_gaussian() -> Result<Instance> {
    let qpsk: Vec<Complex64> = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
        .iter()
        .map(|&(re, im)| Complex64::new(re, im) / 2f64.sqrt())
        .collect();
    let mut b = GraphBuilder::new();
    let x: Vec<VarId> = (0..3).map(|k| b.discrete(format!("x{k}"), 4)).collect();
    let h = b.gaussian("h", 1);
    let mut bp = Vec::new();
    let link: Vec<f64> = (0..16).map(|c| if c / 4 == c % 4 { 0.55 } else { 0.15 }).collect();
    bp.push(b.add_table("l01", &[x[0], x[1]], link.clone())?);
    bp.push(b.add_table("l12", &[x[1], x[2]], link)?);
    b.add_factor(
        "h_prior",
        &[h],
        Potential::GaussianPrior(ComplexGaussian::standard(1)),
    )?;
    let h_true = Complex64::new(0.8, -0.3);
    b.add_factor(
        "pilot",
        &[h],
        Potential::Observation(Observation {
            y: h_true * qpsk[0] + Complex64::new(0.05, -0.02),
            gamma: 10.0,
            coord: 0,
            symbols: vec![qpsk[0]],
        }),
    )?;
    let sent = [1usize, 1, 3];
    let noise = [Complex64::new(0.1, 0.05), Complex64::new(-0.2, 0.1), Complex64::new(0.03, -0.15)];
    for k in 0..3 {
        b.add_factor(
            format!("y{k}"),
            &[h, x[k]],
            Potential::Observation(Observation {
                y: h_true * qpsk[sent[k]] + noise[k],
                gamma: 10.0,
                coord: 0,
                symbols: qpsk.clone(),
            }),
        )?;
    }
    Instance::new(b.build()?, &bp)
}

/// Candidate solution of the unnormalized system with `omega = 1` on a pure-BP
/// graph, taken from `iterations` raw flooding sweeps started at all-ones
/// messages: `m = sum f prod n_prev` holds exactly with `omega = 1`, while
/// `n_prev` differs from `prod m` by a per-edge scale when the loop gain is
/// not one. The message shapes converge, the scales do not.
pub fn unnormalized_flooding(graph: &FactorGraph, iterations: usize) -> Result<UnnormalizedSolution> {
    let ne = graph.num_edges();
    let mut n: Vec<Vec<f64>> = (0..ne)
        .map(|e| vec![0.0; graph.card(graph.edge_info(e).2).expect("discrete graph")])
        .collect();
    let mut m = n.clone();
    let mut n_prev = n.clone();
    for _ in 0..iterations.max(1) {
        for a in graph.factor_ids() {
            let edges: Vec<usize> = graph.factor_edges(a).collect();
            let incoming: Vec<&[f64]> = edges.iter().map(|&e| n[e].as_slice()).collect();
            let km = factor_sum_product(graph, a, &incoming)?;
            for (e, out) in edges.into_iter().zip(km.outgoing) {
                m[e] = out;
            }
        }
        n_prev = n.clone();
        for i in graph.vars() {
            let nb = graph.neighbors(i);
            let msgs: Vec<&[f64]> = nb.iter().map(|&(a, s)| m[graph.edge(a, s)].as_slice()).collect();
            let ext = all_but_one(&vec![0.0; msgs[0].len()], &msgs);
            for (&(a, s), v) in nb.iter().zip(ext) {
                n[graph.edge(a, s)] = v;
            }
        }
    }
    Ok(UnnormalizedSolution {
        n: n_prev,
        m,
        log_omega: vec![0.0; ne],
    })
}
