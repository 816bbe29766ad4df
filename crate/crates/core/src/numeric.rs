//! Small numerical helpers for log-domain arithmetic.

/// `ln(exp(a) + exp(b))` with exact handling of `-inf`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum(exp(x)))`, `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// Natural log that maps exact zeros to `-inf`.
#[inline]
pub fn ln0(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// `x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Converts log-values into a probability vector. Returns `None` when every
/// entry is `-inf`.
pub fn softmax(logs: &[f64]) -> Option<Vec<f64>> {
    let lse = log_sum_exp(logs);
    if lse == f64::NEG_INFINITY {
        return None;
    }
    Some(logs.iter().map(|&l| (l - lse).exp()).collect())
}

/// Shifts log-values in place so that they sum to one in the linear domain and
/// returns the log of the removed mass.
pub fn normalize_logs(logs: &mut [f64]) -> Option<f64> {
    let lse = log_sum_exp(logs);
    if lse == f64::NEG_INFINITY {
        return None;
    }
    for l in logs.iter_mut() {
        *l -= lse;
    }
    Some(lse)
}

/// Maximum absolute elementwise difference of two equally long slices.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = k;
        }
    }
    best
}

/// Strides for row-major indexing (last variable fastest).
pub fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for k in (0..cards.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * cards[k + 1];
    }
    s
}

/// Odometer increment over a mixed-radix configuration. Returns `false` after
/// the last configuration.
#[inline]
pub fn next_config(config: &mut [usize], cards: &[usize]) -> bool {
    for k in (0..config.len()).rev() {
        config[k] += 1;
        if config[k] < cards[k] {
            return true;
        }
        config[k] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sums_handle_zeros() {
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(softmax(&[f64::NEG_INFINITY; 3]), None);
    }

    #[test]
    fn odometer_visits_row_major_order() {
        let cards = [2, 3];
        let mut c = [0, 0];
        let mut seen = vec![c];
        while next_config(&mut c, &cards) {
            seen.push(c);
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], [0, 1]);
        assert_eq!(seen[3], [1, 0]);
        assert_eq!(strides(&cards), vec![3, 1]);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }
}
