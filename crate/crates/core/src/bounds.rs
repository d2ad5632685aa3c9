//! Supermartingale concentration machinery.
//!
//! The tail bound `exp(-t^2 / 2n)` applies to sums of adaptively chosen
//! Bernoulli variables whose conditional success probability, given the
//! history prefix, never exceeds a per-step cap. Monte Carlo verification
//! runs the bound against adversarially adaptive processes, including the
//! one that saturates its cap at every step.

use serde::{Deserialize, Serialize};

use crate::exec::{self, ExecMode};
use crate::seeding::{derive_seed, stream_rng};
use rand::Rng;

/// `exp(-t^2 / (2n))`.
pub fn azuma_supermartingale_bound(n: u64, t: f64) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    assert!(t >= 0.0, "t must be nonnegative");
    (-(t * t) / (2.0 * n as f64)).exp()
}

/// How the process picks its actual success probability under the cap,
/// as a function of the history prefix.
#[derive(Debug, Clone)]
pub enum AdaptiveRule {
    /// Always uses exactly the cap.
    Saturate,
    /// Never succeeds.
    Never,
    /// Cap scaled by `factor^(successes so far)`.
    DecayOnSuccess { factor: f64 },
}

impl AdaptiveRule {
    pub fn prob(&self, cap: f64, successes_so_far: u64) -> f64 {
        match self {
            Self::Saturate => cap,
            Self::Never => 0.0,
            Self::DecayOnSuccess { factor } => cap * factor.powi(successes_so_far as i32),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Saturate => "saturate",
            Self::Never => "never",
            Self::DecayOnSuccess { .. } => "decay-on-success",
        }
    }

    pub fn builtin_suite() -> Vec<AdaptiveRule> {
        vec![
            Self::Saturate,
            Self::Never,
            Self::DecayOnSuccess { factor: 0.9 },
        ]
    }
}

/// An adaptive Bernoulli process: `n` steps with per-step caps and a rule
/// choosing the actual probability (at most the cap) from the history.
#[derive(Debug, Clone)]
pub struct AdaptiveBernoulliSpec {
    pub n: usize,
    pub caps: Vec<f64>,
    pub rule: AdaptiveRule,
}

impl AdaptiveBernoulliSpec {
    pub fn new(caps: Vec<f64>, rule: AdaptiveRule) -> Self {
        assert!(caps.iter().all(|p| (0.0..=1.0).contains(p)));
        Self {
            n: caps.len(),
            caps,
            rule,
        }
    }

    pub fn uniform(n: usize, cap: f64, rule: AdaptiveRule) -> Self {
        Self::new(vec![cap; n], rule)
    }
}

/// One tail comparison: the bound at deviation `t` against the empirical
/// exceedance frequency, passing with one-sided 3-sigma Monte Carlo slack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailCheck {
    pub t: f64,
    pub bound: f64,
    pub empirical: f64,
    pub trials: u64,
    pub passed: bool,
}

pub fn verify_tail(
    spec: &AdaptiveBernoulliSpec,
    t_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Vec<TailCheck> {
    verify_tail_with(spec, t_grid, trials, seed, ExecMode::default())
}

/// Simulates `sum X_i - sum caps` and checks the empirical tail against
/// the bound at every grid point. Deterministic given the seed.
pub fn verify_tail_with(
    spec: &AdaptiveBernoulliSpec,
    t_grid: &[f64],
    trials: u64,
    seed: u64,
    exec_mode: ExecMode,
) -> Vec<TailCheck> {
    assert!(trials >= 1000, "trials must be at least 1000");
    let caps_sum: f64 = spec.caps.iter().sum();
    let base = derive_seed(seed, 0x54_41_49_4c); // "TAIL"
    const BLOCK: usize = 256;

    let exceed_counts = exec::blocked_fold(
        exec_mode,
        trials as usize,
        BLOCK,
        |_, range| {
            let mut counts = vec![0u64; t_grid.len()];
            for trial in range {
                let mut rng = stream_rng(base, trial as u64);
                let mut successes = 0u64;
                for &cap in &spec.caps {
                    let p = spec.rule.prob(cap, successes);
                    if rng.gen::<f64>() < p {
                        successes += 1;
                    }
                }
                let deviation = successes as f64 - caps_sum;
                for (slot, &t) in counts.iter_mut().zip(t_grid) {
                    if deviation >= t {
                        *slot += 1;
                    }
                }
            }
            counts
        },
        vec![0u64; t_grid.len()],
        |mut acc, counts| {
            for (a, c) in acc.iter_mut().zip(counts) {
                *a += c;
            }
            acc
        },
    );

    t_grid
        .iter()
        .zip(exceed_counts)
        .map(|(&t, count)| {
            let bound = azuma_supermartingale_bound(spec.n as u64, t);
            let empirical = count as f64 / trials as f64;
            let slack = 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
            TailCheck {
                t,
                bound,
                empirical,
                trials,
                passed: empirical <= bound + slack,
            }
        })
        .collect()
}

/// The standard deviation grid `{0.5 sqrt(n), sqrt(n), 2 sqrt(n), 3 sqrt(n)}`.
pub fn standard_t_grid(n: usize) -> Vec<f64> {
    let root = (n as f64).sqrt();
    vec![0.5 * root, root, 2.0 * root, 3.0 * root]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bound_spot_values() {
        assert_abs_diff_eq!(
            azuma_supermartingale_bound(100, 10.0),
            (-0.5f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(azuma_supermartingale_bound(17, 0.0), 1.0);
        assert_abs_diff_eq!(
            azuma_supermartingale_bound(100_000, 500.0),
            (-1.25f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn bound_is_monotone() {
        let mut prev = 1.0;
        for t in 1..=20 {
            let b = azuma_supermartingale_bound(50, t as f64);
            assert!(b < prev);
            prev = b;
        }
        let mut prev = 0.0;
        for n in [10, 20, 40, 80, 160] {
            let b = azuma_supermartingale_bound(n, 10.0);
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn saturating_rule_respects_the_bound() {
        let spec = AdaptiveBernoulliSpec::uniform(400, 0.5, AdaptiveRule::Saturate);
        let checks = verify_tail(&spec, &standard_t_grid(400), 4000, 21);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn never_rule_has_empty_tail() {
        let spec = AdaptiveBernoulliSpec::uniform(100, 0.8, AdaptiveRule::Never);
        let checks = verify_tail(&spec, &[1.0], 1000, 4);
        assert_eq!(checks[0].empirical, 0.0);
        assert!(checks[0].passed);
    }

    #[test]
    fn decaying_rule_respects_the_bound() {
        let spec =
            AdaptiveBernoulliSpec::uniform(400, 0.6, AdaptiveRule::DecayOnSuccess { factor: 0.9 });
        let checks = verify_tail(&spec, &standard_t_grid(400), 4000, 8);
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn verification_is_deterministic_across_exec_modes() {
        let spec = AdaptiveBernoulliSpec::uniform(50, 0.5, AdaptiveRule::Saturate);
        let a = verify_tail_with(&spec, &[2.0, 5.0], 2000, 13, ExecMode::Parallel);
        let b = verify_tail_with(&spec, &[2.0, 5.0], 2000, 13, ExecMode::Sequential);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn chernoff_bound_is_the_matching_azuma_instance() {
        // exp(-2 n delta^2) = exp(-t^2/2n) at t = 2 n delta.
        let n = 200;
        let delta = 0.15 - crate::qrac::error_prob();
        let t = 2.0 * n as f64 * delta;
        assert_abs_diff_eq!(
            azuma_supermartingale_bound(n as u64, t),
            crate::protocol::chernoff_failure_bound(n),
            epsilon = 1e-15
        );
    }
}
