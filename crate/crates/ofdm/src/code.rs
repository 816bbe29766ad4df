//! Terminated feedforward convolutional code and its trellis factor.

use bpmf_core::factor_graph::{FactorKernel, KernelMessages};
use bpmf_core::{Error as CoreError, Result as CoreResult};

use crate::OfdmError;

/// Rate `1/n` feedforward convolutional code given by octal generators.
///
/// The most significant tap of each generator multiplies the current input
/// bit. Encoding starts in the zero state and appends `memory` zero tail bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvCode {
    generators: Vec<u32>,
    memory: usize,
    next: Vec<[usize; 2]>,
    output: Vec<[u32; 2]>,
}

fn parity(x: u32) -> u32 {
    x.count_ones() & 1
}

impl ConvCode {
    /// Builds the code from octal generator strings such as `"133"`.
    pub fn from_octal(generators: &[String]) -> Result<Self, OfdmError> {
        let gens = generators
            .iter()
            .map(|g| {
                u32::from_str_radix(g.trim(), 8)
                    .map_err(|_| OfdmError::Config(format!("generator `{g}` is not an octal number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(gens)
    }

    pub fn new(generators: Vec<u32>) -> Result<Self, OfdmError> {
        if generators.is_empty() || generators.len() > 8 {
            return Err(OfdmError::Config("a code needs between 1 and 8 generators".into()));
        }
        let constraint = generators.iter().map(|g| 32 - g.leading_zeros() as usize).max().unwrap_or(0);
        if !(2..=12).contains(&constraint) {
            return Err(OfdmError::Config(format!("constraint length {constraint} outside 2..=12")));
        }
        let memory = constraint - 1;
        let states = 1usize << memory;
        let mut next = Vec::with_capacity(states);
        let mut output = Vec::with_capacity(states);
        for s in 0..states {
            let mut nx = [0; 2];
            let mut out = [0; 2];
            for b in 0..2 {
                let reg = ((b as u32) << memory) | s as u32;
                nx[b] = (reg >> 1) as usize;
                out[b] = generators
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (r, g)| acc | (parity(reg & g) << r));
            }
            next.push(nx);
            output.push(out);
        }
        Ok(ConvCode {
            generators,
            memory,
            next,
            output,
        })
    }

    /// Output bits per input bit.
    pub fn outputs(&self) -> usize {
        self.generators.len()
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn states(&self) -> usize {
        self.next.len()
    }

    /// Codeword length for `k` information bits, tail included.
    pub fn coded_len(&self, k: usize) -> usize {
        (k + self.memory) * self.outputs()
    }

    /// Encodes `u` followed by the zero tail.
    pub fn encode(&self, u: &[u8]) -> Vec<u8> {
        let n = self.outputs();
        let mut c = Vec::with_capacity(self.coded_len(u.len()));
        let mut s = 0;
        for b in u.iter().map(|&b| (b & 1) as usize).chain(std::iter::repeat_n(0, self.memory)) {
            let o = self.output[s][b];
            c.extend((0..n).map(|r| ((o >> r) & 1) as u8));
            s = self.next[s][b];
        }
        c
    }
}

/// Code constraint `p(c | u)` as a factor over `K` information bits followed
/// by the `(K + memory) n` code bits, evaluated by forward/backward recursions
/// on the trellis.
#[derive(Clone, Debug)]
pub struct TrellisKernel {
    code: ConvCode,
    k: usize,
}

impl TrellisKernel {
    pub fn new(code: ConvCode, k: usize) -> Self {
        TrellisKernel { code, k }
    }

    pub fn info_bits(&self) -> usize {
        self.k
    }

    pub fn arity(&self) -> usize {
        self.k + self.code.coded_len(self.k)
    }
}

/// Linear-domain copy of a binary log message shifted by its maximum.
fn shifted(logs: &[f64]) -> CoreResult<([f64; 2], f64)> {
    let m = logs[0].max(logs[1]);
    if m == f64::NEG_INFINITY {
        return Err(CoreError::Contradiction("all-zero message into the code factor".into()));
    }
    Ok(([(logs[0] - m).exp(), (logs[1] - m).exp()], m))
}

impl FactorKernel for TrellisKernel {
    fn cards(&self) -> Vec<usize> {
        vec![2; self.arity()]
    }

    fn sum_product(&self, incoming: &[&[f64]]) -> CoreResult<KernelMessages> {
        if incoming.len() != self.arity() || incoming.iter().any(|m| m.len() != 2) {
            return Err(CoreError::DimensionMismatch("code factor expects binary messages on every slot".into()));
        }
        let code = &self.code;
        let n = code.outputs();
        let ns = code.states();
        let steps = self.k + code.memory;
        let mut shift_total = 0.0;
        let mut pu = Vec::with_capacity(self.k);
        let mut u_shift = Vec::with_capacity(self.k);
        for m in &incoming[..self.k] {
            let (p, s) = shifted(m)?;
            pu.push(p);
            u_shift.push(s);
            shift_total += s;
        }
        let mut pc = Vec::with_capacity(steps * n);
        let mut c_shift = Vec::with_capacity(steps * n);
        for m in &incoming[self.k..] {
            let (p, s) = shifted(m)?;
            pc.push(p);
            c_shift.push(s);
            shift_total += s;
        }
        let input_p = |t: usize, b: usize| -> f64 {
            if t < self.k {
                pu[t][b]
            } else if b == 0 {
                1.0
            } else {
                0.0
            }
        };
        let branch = |t: usize, o: u32, skip: usize| -> f64 {
            (0..n)
                .filter(|&r| r != skip)
                .map(|r| pc[t * n + r][((o >> r) & 1) as usize])
                .product()
        };

        // Normalized forward and backward metrics with their log scales.
        let mut alpha = vec![vec![0.0; ns]; steps + 1];
        let mut a_log = vec![0.0; steps + 1];
        alpha[0][0] = 1.0;
        for t in 0..steps {
            let mut nxt = vec![0.0; ns];
            for s in 0..ns {
                let a = alpha[t][s];
                if a == 0.0 {
                    continue;
                }
                for b in 0..2 {
                    let w = input_p(t, b);
                    if w == 0.0 {
                        continue;
                    }
                    nxt[code.next[s][b]] += a * w * branch(t, code.output[s][b], usize::MAX);
                }
            }
            let z: f64 = nxt.iter().sum();
            if z == 0.0 {
                return Ok(vanishing(self.arity()));
            }
            nxt.iter_mut().for_each(|v| *v /= z);
            alpha[t + 1] = nxt;
            a_log[t + 1] = a_log[t] + z.ln();
        }
        let end = alpha[steps][0];
        if end == 0.0 {
            return Ok(vanishing(self.arity()));
        }
        let log_partition = a_log[steps] + end.ln() + shift_total;

        let mut beta = vec![vec![0.0; ns]; steps + 1];
        let mut b_log = vec![0.0; steps + 1];
        beta[steps][0] = 1.0;
        for t in (0..steps).rev() {
            let mut cur = vec![0.0; ns];
            for (s, c) in cur.iter_mut().enumerate() {
                for b in 0..2 {
                    let w = input_p(t, b);
                    if w == 0.0 {
                        continue;
                    }
                    *c += w * branch(t, code.output[s][b], usize::MAX) * beta[t + 1][code.next[s][b]];
                }
            }
            let z: f64 = cur.iter().sum();
            if z == 0.0 {
                return Ok(vanishing(self.arity()));
            }
            cur.iter_mut().for_each(|v| *v /= z);
            beta[t] = cur;
            b_log[t] = b_log[t + 1] + z.ln();
        }

        // Scope order: information bits, then code bits.
        let mut outgoing = Vec::with_capacity(self.arity());
        let mut c_out = vec![[0.0f64; 2]; steps * n];
        for t in 0..steps {
            let mut u_acc = [0.0; 2];
            for s in 0..ns {
                let a = alpha[t][s];
                if a == 0.0 {
                    continue;
                }
                for b in 0..2 {
                    let o = code.output[s][b];
                    let be = beta[t + 1][code.next[s][b]];
                    if be == 0.0 {
                        continue;
                    }
                    if t < self.k {
                        u_acc[b] += a * branch(t, o, usize::MAX) * be;
                    }
                    let w = input_p(t, b);
                    if w == 0.0 {
                        continue;
                    }
                    for r in 0..n {
                        c_out[t * n + r][((o >> r) & 1) as usize] += a * w * branch(t, o, r) * be;
                    }
                }
            }
            if t < self.k {
                let base = a_log[t] + b_log[t + 1] + shift_total - u_shift[t];
                outgoing.push(u_acc.iter().map(|v| v.ln() + base).collect());
            }
        }
        for t in 0..steps {
            for r in 0..n {
                let j = t * n + r;
                let base = a_log[t] + b_log[t + 1] + shift_total - c_shift[j];
                outgoing.push(c_out[j].iter().map(|v| v.ln() + base).collect());
            }
        }
        Ok(KernelMessages {
            outgoing,
            log_partition,
        })
    }

    fn log_value(&self, config: &[usize]) -> f64 {
        if config.len() != self.arity() {
            return f64::NEG_INFINITY;
        }
        let u: Vec<u8> = config[..self.k].iter().map(|&b| b as u8).collect();
        let c = self.code.encode(&u);
        if c.iter().zip(&config[self.k..]).all(|(&a, &b)| a as usize == b) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn vanishing(arity: usize) -> KernelMessages {
    KernelMessages {
        outgoing: vec![vec![f64::NEG_INFINITY; 2]; arity],
        log_partition: f64::NEG_INFINITY,
    }
}
