//! Binomial probabilities in log space, accurate for tails far below machine
//! epsilon and for trial counts up to ~1e17.

use statrs::function::gamma::ln_gamma;

/// Below this many factors `ln C(m, w)` is summed directly; above it the
/// gamma-function form is used.
const DIRECT_CHOOSE_LIMIT: u64 = 64;

/// `ln C(m, w)`.
pub fn ln_choose(m: u64, w: u64) -> f64 {
    if w > m {
        return f64::NEG_INFINITY;
    }
    let w = w.min(m - w);
    if w <= DIRECT_CHOOSE_LIMIT {
        (0..w)
            .map(|i| ((m - i) as f64 / (i + 1) as f64).ln())
            .sum()
    } else {
        let (m, w) = (m as f64, w as f64);
        ln_gamma(m + 1.0) - ln_gamma(w + 1.0) - ln_gamma(m - w + 1.0)
    }
}

/// `Pr[Binomial(m, p) = w]`.
pub fn pmf(m: u64, p: f64, w: u64) -> f64 {
    if w > m {
        return 0.0;
    }
    if p <= 0.0 {
        return if w == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if w == m { 1.0 } else { 0.0 };
    }
    (ln_choose(m, w) + w as f64 * p.ln() + (m - w) as f64 * (-p).ln_1p()).exp()
}

/// Full probability vector over weights `0..=m`.
pub fn distribution(m: u64, p: f64) -> Vec<f64> {
    (0..=m).map(|w| pmf(m, p, w)).collect()
}

/// `Pr[Binomial(m, p) > k]`.
///
/// Sums the tail directly when it lies above the mean, where every term is
/// small, and otherwise takes the complement of the lower sum.
pub fn upper_tail(m: u64, p: f64, k: u64) -> f64 {
    if k >= m || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let mean = m as f64 * p;
    let ratio = p / (1.0 - p);
    if (k + 1) as f64 >= mean {
        let mut term = pmf(m, p, k + 1);
        let mut sum = 0.0;
        let mut w = k + 1;
        loop {
            sum += term;
            if w == m {
                break;
            }
            term *= (m - w) as f64 / (w + 1) as f64 * ratio;
            w += 1;
            if term <= sum * 1e-18 || term == 0.0 {
                break;
            }
        }
        sum.min(1.0)
    } else {
        (1.0 - lower_sum(m, p, k)).max(0.0)
    }
}

/// `Pr[Binomial(m, p) ≤ k]` summed downward from `k`, for `k` below the mean.
fn lower_sum(m: u64, p: f64, k: u64) -> f64 {
    let inv_ratio = (1.0 - p) / p;
    let mut term = pmf(m, p, k);
    let mut sum = 0.0;
    let mut w = k;
    loop {
        sum += term;
        if w == 0 {
            break;
        }
        term *= w as f64 / (m - w + 1) as f64 * inv_ratio;
        w -= 1;
        if term <= sum * 1e-18 || term == 0.0 {
            break;
        }
    }
    sum
}

/// Smallest `k` with `Pr[Binomial(m, p) > k] ≤ eps`.
pub fn minimal_truncation(m: u64, p: f64, eps: f64) -> u64 {
    if upper_tail(m, p, 0) <= eps {
        return 0;
    }
    // tail is nonincreasing in k; find the crossing by doubling then bisection
    let mut lo = 0u64;
    let mut hi = 1u64;
    while hi < m && upper_tail(m, p, hi) > eps {
        lo = hi;
        hi = hi.saturating_mul(2).min(m);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if upper_tail(m, p, mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `E[min(W, k)]` for `W ~ Binomial(m, p)`.
pub fn expected_truncated(m: u64, p: f64, k: u64) -> f64 {
    // E[min(W,k)] = Σ_{j=0}^{k-1} Pr[W > j]
    (0..k.min(m)).map(|j| upper_tail(m, p, j)).sum()
}
