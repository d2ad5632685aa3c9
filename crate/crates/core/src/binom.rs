//! Exact binomial and multinomial tail probabilities in log space.
//!
//! Tails are summed outward from the mode with compensated accumulation,
//! so probabilities far below the normal f64 range are still reported
//! accurately through their logarithms.

use statrs::function::gamma::ln_gamma;

/// ln C(n, k); `f64::NEG_INFINITY` when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// ln P[X = k] for X ~ Binomial(n, p).
pub fn ln_pmf(n: u64, k: u64, p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    // ln(1 - p) via ln_1p for accuracy at small p.
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// Relative size below which further unimodal terms are dropped.
const TERM_CUTOFF: f64 = 1e-22;

/// Sums exp(ln_pmf) over `lo..=hi` in log space, scanning outward from the
/// index of the largest term. Returns the log of the sum.
fn ln_sum_range(n: u64, lo: u64, hi: u64, p: f64) -> f64 {
    if lo > hi || lo > n {
        return f64::NEG_INFINITY;
    }
    let hi = hi.min(n);
    if p == 0.0 {
        return if lo == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if hi == n { 0.0 } else { f64::NEG_INFINITY };
    }
    // The pmf is unimodal with mode floor((n + 1) p).
    let mode = (((n + 1) as f64) * p).floor() as u64;
    let peak = mode.clamp(lo, hi);
    let ln_peak = ln_pmf(n, peak, p);
    if ln_peak == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // Kahan-compensated sum of exp(ln_term - ln_peak), outward on each side.
    let mut sum = 1.0f64;
    let mut comp = 0.0f64;
    let add = |x: f64, sum: &mut f64, comp: &mut f64| {
        let y = x - *comp;
        let t = *sum + y;
        *comp = (t - *sum) - y;
        *sum = t;
    };
    let mut k = peak;
    while k > lo {
        k -= 1;
        let term = (ln_pmf(n, k, p) - ln_peak).exp();
        add(term, &mut sum, &mut comp);
        if term < TERM_CUTOFF * sum {
            break;
        }
    }
    let mut k = peak;
    while k < hi {
        k += 1;
        let term = (ln_pmf(n, k, p) - ln_peak).exp();
        add(term, &mut sum, &mut comp);
        if term < TERM_CUTOFF * sum {
            break;
        }
    }
    ln_peak + sum.ln()
}

/// ln P[X >= k] for X ~ Binomial(n, p).
pub fn ln_tail_ge(n: u64, k: u64, p: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    ln_sum_range(n, k, n, p)
}

/// ln P[X <= k] for X ~ Binomial(n, p).
pub fn ln_tail_le(n: u64, k: u64, p: f64) -> f64 {
    if k >= n {
        return 0.0;
    }
    ln_sum_range(n, 0, k, p)
}

/// P[X >= k]; underflows to 0 below the f64 range (use [`ln_tail_ge`] there).
pub fn tail_ge(n: u64, k: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mean = n as f64 * p;
    if (k as f64) > mean {
        ln_tail_ge(n, k, p).exp()
    } else {
        // Upper tail is the bulk; compute the small complement instead.
        (1.0 - ln_tail_le(n, k - 1, p).exp()).max(0.0)
    }
}

/// P[X <= k], the cumulative distribution function.
pub fn cdf_le(n: u64, k: u64, p: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    let mean = n as f64 * p;
    if (k as f64) < mean {
        ln_tail_le(n, k, p).exp()
    } else {
        (1.0 - ln_tail_ge(n, k + 1, p).exp()).max(0.0)
    }
}

/// ln of the multinomial pmf: counts `k` over categories with probabilities
/// `probs`, where `sum(k) = n`.
pub fn ln_multinomial_pmf(n: u64, counts: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(counts.len(), probs.len());
    debug_assert_eq!(counts.iter().sum::<u64>(), n);
    let mut ln = ln_gamma(n as f64 + 1.0);
    for (&k, &p) in counts.iter().zip(probs) {
        if k > 0 && p == 0.0 {
            return f64::NEG_INFINITY;
        }
        ln -= ln_gamma(k as f64 + 1.0);
        if k > 0 {
            ln += k as f64 * p.ln();
        }
    }
    ln
}

/// Streaming log-sum-exp accumulator for sums of wildly scaled terms.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.max {
            self.sum = self.sum * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        } else {
            self.sum += (ln_term - self.max).exp();
        }
    }

    pub fn ln_total(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_cases_match_direct_sums() {
        // Bin(4, 0.5): P[X >= 3] = 5/16, P[X <= 1] = 5/16.
        assert_abs_diff_eq!(tail_ge(4, 3, 0.5), 5.0 / 16.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cdf_le(4, 1, 0.5), 5.0 / 16.0, epsilon = 1e-14);
        assert_abs_diff_eq!(tail_ge(4, 0, 0.5), 1.0, epsilon = 0.0);
        assert_eq!(tail_ge(4, 5, 0.5), 0.0);
    }

    #[test]
    fn tails_are_complementary() {
        for &(n, k, p) in &[(30u64, 11u64, 0.3f64), (100, 60, 0.55), (7, 2, 0.9)] {
            let total = tail_ge(n, k, p) + cdf_le(n, k - 1, p);
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn deep_tail_stays_in_log_space() {
        // P[Bin(1000, 0.5) = 1000] = 2^-1000.
        let ln = ln_tail_ge(1000, 1000, 0.5);
        assert_abs_diff_eq!(ln, 1000.0 * 0.5f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn degenerate_probabilities() {
        assert_eq!(tail_ge(10, 1, 0.0), 0.0);
        assert_eq!(cdf_le(10, 9, 1.0), 0.0);
        assert_eq!(cdf_le(10, 10, 1.0), 1.0);
        assert_eq!(tail_ge(10, 10, 1.0), 1.0);
    }

    #[test]
    fn multinomial_reduces_to_binomial() {
        let ln = ln_multinomial_pmf(10, &[3, 7], &[0.2, 0.8]);
        assert_abs_diff_eq!(ln, ln_pmf(10, 3, 0.2), epsilon = 1e-12);
    }

    #[test]
    fn logsumexp_matches_direct() {
        let mut acc = LogSumExp::new();
        for ln in [-700.0, -701.0, -699.5] {
            acc.add(ln);
        }
        let direct: f64 = [-700.0f64, -701.0, -699.5]
            .iter()
            .map(|x| (x + 700.0).exp())
            .sum();
        assert_abs_diff_eq!(acc.ln_total(), direct.ln() - 700.0, epsilon = 1e-12);
    }
}
