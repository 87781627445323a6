//! Scalar helpers: `libm` wrappers, log-space arithmetic, deterministic
//! reductions and discrete divergences.

use alloc::vec::Vec;

pub use core::f64::consts::{LN_2, LOG2_E};

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn nats_to_bits(x: f64) -> f64 {
    x * LOG2_E
}

#[inline]
pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so sums are reproducible bit for bit.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 16;
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `ln Σ exp(x_i)`; `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let mut acc = 0.0;
    for &x in xs {
        acc += exp(x - max);
    }
    max + ln(acc)
}

/// `ln Σ exp(a_i + b_i)` without materializing the sums.
pub fn log_sum_exp_pair(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut max = f64::NEG_INFINITY;
    for (x, y) in a.iter().zip(b) {
        let s = x + y;
        if s > max {
            max = s;
        }
    }
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += exp(x + y - max);
    }
    max + ln(acc)
}

/// Normalizes log-weights in place and returns the log normalizer.
pub fn normalize_log(weights: &mut [f64]) -> f64 {
    let z = log_sum_exp(weights);
    if z.is_finite() {
        for w in weights.iter_mut() {
            *w -= z;
        }
    }
    z
}

/// `x ln(x / y)` with the conventions `0 ln(0/y) = 0`, `x ln(x/0) = +inf`.
#[inline]
pub fn rel_entr(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if y <= 0.0 {
        f64::INFINITY
    } else {
        x * ln(x / y)
    }
}

/// `D(p || q)` in nats for two probability vectors on the same alphabet.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        acc += rel_entr(pi, qi);
    }
    acc.max(0.0)
}

/// `ln (n! / Π c_i!)`.
pub fn ln_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut acc = ln_gamma(n as f64 + 1.0);
    for &c in counts {
        acc -= ln_gamma(c as f64 + 1.0);
    }
    acc
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, sqrt(var / n as f64))
}

/// Normal quantile used for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Half-width of the normal-approximation binomial interval.
pub fn binomial_half_width(p: f64, draws: usize) -> f64 {
    if draws == 0 {
        return f64::INFINITY;
    }
    Z95 * sqrt((p * (1.0 - p)).max(0.0) / draws as f64)
}

/// Median of a slice (NaNs sort last).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Every composition of `total` into `parts` nonnegative counts, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=rem {
            cur.push(c);
            rec(rem - c, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        return out;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Number of compositions of `total` into `parts` counts, saturating.
pub fn composition_count(total: usize, parts: usize) -> u128 {
    if parts == 0 {
        return 0;
    }
    // C(total + parts - 1, parts - 1)
    let k = (parts - 1) as u128;
    let n = total as u128 + k;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}
