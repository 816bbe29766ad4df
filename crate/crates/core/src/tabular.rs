//! Discrete tables and single-variable messages.
//!
//! A [`Table`] holds a nonnegative function over the joint states of an
//! ordered scope of discrete variables, in row-major order (the last variable
//! varies fastest). Values are kept either in the linear domain or as natural
//! logarithms; exact zeros are `-inf` in the log representation, so hard
//! constraints survive every operation exactly.

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::factor_graph::VarId;
use crate::numeric::{log_add_exp, log_sum_exp, ln0, next_config, strides, xlogx};

/// Maximum number of joint states of a single table.
pub const MAX_TABLE_STATES: usize = 1 << 16;

/// Storage domain of a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Repr {
    Linear,
    Log,
}

/// Nonnegative function over the joint states of a scope.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    data: Vec<f64>,
    repr: Repr,
}

fn check_shape(scope: &[VarId], cards: &[usize], len: usize) -> Result<()> {
    if scope.len() != cards.len() {
        return Err(Error::InvalidTable(format!(
            "scope has {} variables but {} cardinalities were given",
            scope.len(),
            cards.len()
        )));
    }
    for (k, v) in scope.iter().enumerate() {
        if scope[..k].contains(v) {
            return Err(Error::InvalidTable(format!("variable {v} repeated in scope")));
        }
    }
    if cards.contains(&0) {
        return Err(Error::InvalidTable("zero cardinality".into()));
    }
    let mut states: usize = 1;
    for &c in cards {
        states = states.saturating_mul(c);
    }
    if states > MAX_TABLE_STATES {
        return Err(Error::TooManyStates {
            states,
            limit: MAX_TABLE_STATES,
        });
    }
    if states != len {
        return Err(Error::InvalidTable(format!(
            "expected {states} values, got {len}"
        )));
    }
    Ok(())
}

impl Table {
    /// Builds a table from linear-domain values. Values must be finite and
    /// nonnegative with at least one positive entry.
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_shape(&scope, &cards, values.len())?;
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidTable(format!("entry {v} is not a finite nonnegative number")));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::AllZero("table construction".into()));
        }
        Ok(Table {
            scope,
            cards,
            data: values,
            repr: Repr::Linear,
        })
    }

    /// Builds a table from natural-log values (`-inf` encodes an exact zero).
    pub fn from_log(scope: Vec<VarId>, cards: Vec<usize>, logs: Vec<f64>) -> Result<Self> {
        check_shape(&scope, &cards, logs.len())?;
        if let Some(v) = logs.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(Error::InvalidTable(format!("log entry {v} is not allowed")));
        }
        if logs.iter().all(|&v| v == f64::NEG_INFINITY) {
            return Err(Error::AllZero("table construction".into()));
        }
        Ok(Table {
            scope,
            cards,
            data: logs,
            repr: Repr::Log,
        })
    }

    /// Constant-one table.
    pub fn ones(scope: Vec<VarId>, cards: Vec<usize>) -> Result<Self> {
        let n = cards.iter().product();
        Table::new(scope, cards, vec![1.0; n])
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    /// Number of joint states.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Raw storage in the table's own representation.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// Linear-domain values.
    pub fn linear(&self) -> Vec<f64> {
        match self.repr {
            Repr::Linear => self.data.clone(),
            Repr::Log => self.data.iter().map(|l| l.exp()).collect(),
        }
    }

    /// Log-domain values with `-inf` for zeros.
    pub fn logs(&self) -> Vec<f64> {
        match self.repr {
            Repr::Linear => self.data.iter().map(|&v| ln0(v)).collect(),
            Repr::Log => self.data.clone(),
        }
    }

    /// Same function in the requested representation.
    pub fn to_repr(&self, repr: Repr) -> Table {
        let data = match repr {
            Repr::Linear => self.linear(),
            Repr::Log => self.logs(),
        };
        Table {
            scope: self.scope.clone(),
            cards: self.cards.clone(),
            data,
            repr,
        }
    }

    /// Flat index of a joint configuration given in scope order.
    pub fn index_of(&self, config: &[usize]) -> usize {
        let st = strides(&self.cards);
        config.iter().zip(&st).map(|(x, s)| x * s).sum()
    }

    /// Linear value at a joint configuration.
    pub fn value(&self, config: &[usize]) -> f64 {
        let v = self.data[self.index_of(config)];
        match self.repr {
            Repr::Linear => v,
            Repr::Log => v.exp(),
        }
    }

    /// Log value at a joint configuration.
    pub fn log_value(&self, config: &[usize]) -> f64 {
        let v = self.data[self.index_of(config)];
        match self.repr {
            Repr::Linear => ln0(v),
            Repr::Log => v,
        }
    }

    /// Total mass in the log domain.
    pub fn log_mass(&self) -> f64 {
        match self.repr {
            Repr::Linear => ln0(self.data.iter().sum()),
            Repr::Log => log_sum_exp(&self.data),
        }
    }

    /// Scales the table to unit mass. Returns the normalized table and the
    /// multiplicative constant that was applied (the reciprocal of the mass).
    pub fn normalize(&self) -> Result<(Table, f64)> {
        let lm = self.log_mass();
        if lm == f64::NEG_INFINITY {
            return Err(Error::AllZero("normalize".into()));
        }
        let data = match self.repr {
            Repr::Linear => {
                let mass: f64 = self.data.iter().sum();
                self.data.iter().map(|v| v / mass).collect()
            }
            Repr::Log => self.data.iter().map(|l| l - lm).collect(),
        };
        let z = match self.repr {
            Repr::Linear => 1.0 / self.data.iter().sum::<f64>(),
            Repr::Log => (-lm).exp(),
        };
        Ok((
            Table {
                scope: self.scope.clone(),
                cards: self.cards.clone(),
                data,
                repr: self.repr,
            },
            z,
        ))
    }

    /// Pointwise product of tables. The result scope is the union of the input
    /// scopes in order of first appearance; the representation follows the
    /// first table.
    pub fn product(tables: &[&Table]) -> Result<Table> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidArgument("product of zero tables".into()))?;
        let mut scope: Vec<VarId> = Vec::new();
        let mut cards: Vec<usize> = Vec::new();
        for t in tables {
            for (v, c) in t.scope.iter().zip(&t.cards) {
                match scope.iter().position(|s| s == v) {
                    Some(p) if cards[p] != *c => {
                        return Err(Error::DimensionMismatch(format!(
                            "variable {v} has cardinality {} and {c}",
                            cards[p]
                        )))
                    }
                    Some(_) => {}
                    None => {
                        scope.push(*v);
                        cards.push(*c);
                    }
                }
            }
        }
        let n: usize = cards.iter().product();
        check_shape(&scope, &cards, n)?;
        let maps: Vec<Vec<usize>> = tables
            .iter()
            .map(|t| t.scope.iter().map(|v| scope.iter().position(|s| s == v).unwrap()).collect())
            .collect();
        let sub_strides: Vec<Vec<usize>> = tables.iter().map(|t| strides(&t.cards)).collect();
        let mut data = Vec::with_capacity(n);
        let mut config = vec![0usize; scope.len()];
        loop {
            let mut acc = match first.repr {
                Repr::Linear => 1.0,
                Repr::Log => 0.0,
            };
            for (t, (map, st)) in tables.iter().zip(maps.iter().zip(&sub_strides)) {
                let idx: usize = map.iter().zip(st).map(|(&p, &s)| config[p] * s).sum();
                let v = t.data[idx];
                match (first.repr, t.repr) {
                    (Repr::Linear, Repr::Linear) => acc *= v,
                    (Repr::Linear, Repr::Log) => acc *= v.exp(),
                    (Repr::Log, Repr::Log) => acc += v,
                    (Repr::Log, Repr::Linear) => acc += ln0(v),
                }
            }
            data.push(acc);
            if !next_config(&mut config, &cards) {
                break;
            }
        }
        let all_zero = match first.repr {
            Repr::Linear => data.iter().all(|&v| v == 0.0),
            Repr::Log => data.iter().all(|&v| v == f64::NEG_INFINITY),
        };
        if all_zero {
            return Err(Error::AllZero("product".into()));
        }
        Ok(Table {
            scope,
            cards,
            data,
            repr: first.repr,
        })
    }

    /// Sums out every variable not listed in `keep`. The result scope follows
    /// the order of `keep`.
    pub fn marginalize(&self, keep: &[VarId]) -> Result<Table> {
        let pos: Vec<usize> = keep
            .iter()
            .map(|v| {
                self.scope
                    .iter()
                    .position(|s| s == v)
                    .ok_or_else(|| Error::UnknownVariable(format!("{v} is not in the table scope")))
            })
            .collect::<Result<_>>()?;
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let st = strides(&cards);
        let n: usize = cards.iter().product();
        let mut data = match self.repr {
            Repr::Linear => vec![0.0; n],
            Repr::Log => vec![f64::NEG_INFINITY; n],
        };
        let mut config = vec![0usize; self.scope.len()];
        for &v in &self.data {
            let idx: usize = pos.iter().zip(&st).map(|(&p, &s)| config[p] * s).sum();
            match self.repr {
                Repr::Linear => data[idx] += v,
                Repr::Log => data[idx] = log_add_exp(data[idx], v),
            }
            next_config(&mut config, &self.cards);
        }
        Ok(Table {
            scope: keep.to_vec(),
            cards,
            data,
            repr: self.repr,
        })
    }

    /// Shannon entropy `-sum t ln t` of the normalized table.
    pub fn entropy(&self) -> Result<f64> {
        let (p, _) = self.to_repr(Repr::Linear).normalize()?;
        Ok(-p.data.iter().map(|&v| xlogx(v)).sum::<f64>())
    }

    /// `sum p ln(p/q)` with `0 ln(0/q) = 0` and `p ln(p/0) = +inf` for `p > 0`.
    /// Both tables must share scope and cardinalities; neither is normalized.
    pub fn kl(&self, q: &Table) -> Result<Extended> {
        if self.scope != q.scope || self.cards != q.cards {
            return Err(Error::DimensionMismatch("kl requires identical scopes".into()));
        }
        let p = self.linear();
        let lq = q.logs();
        let mut acc = 0.0;
        for (&pv, &lqv) in p.iter().zip(&lq) {
            if pv == 0.0 {
                continue;
            }
            if lqv == f64::NEG_INFINITY {
                return Ok(Extended::PosInfinity);
            }
            acc += pv * (pv.ln() - lqv);
        }
        Ok(Extended::Finite(acc))
    }
}

/// Message over the states of a single discrete variable, stored as natural
/// logarithms (`-inf` for exact zeros).
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    logs: Vec<f64>,
}

impl Message {
    /// Builds a message from linear nonnegative values, not all zero.
    pub fn from_linear(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty message".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!("message entry {v} is not a finite nonnegative number")));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::AllZero("message".into()));
        }
        Ok(Message {
            logs: values.iter().map(|&v| ln0(v)).collect(),
        })
    }

    /// Builds a message from log values.
    pub fn from_logs(logs: Vec<f64>) -> Self {
        Message { logs }
    }

    /// Uniform unnormalized message (all ones).
    pub fn ones(card: usize) -> Self {
        Message {
            logs: vec![0.0; card],
        }
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn into_logs(self) -> Vec<f64> {
        self.logs
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// Linear values.
    pub fn linear(&self) -> Vec<f64> {
        self.logs.iter().map(|l| l.exp()).collect()
    }

    /// Normalized probability vector; fails when the message is identically zero.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        crate::numeric::softmax(&self.logs).ok_or_else(|| Error::AllZero("message".into()))
    }

    /// True when every entry is an exact zero.
    pub fn is_all_zero(&self) -> bool {
        self.logs.iter().all(|&l| l == f64::NEG_INFINITY)
    }
}
