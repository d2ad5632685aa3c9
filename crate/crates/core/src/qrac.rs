//! The fixed optimal 2->1 qubit random access code.
//!
//! Two classical bits are encoded into one of four real pure states
//! `psi_theta = cos(theta)|0> + sin(theta)|1>` at angles that are exact
//! multiples of pi/8, placed so the Z basis decodes the first bit and the
//! `psi_{+-pi/4}` basis decodes the second, each with success probability
//! `cos^2(pi/8) = 1/2 + sqrt(2)/4`.
//!
//! Angles are materialized with double-precision trig in one place
//! ([`code_angle`]) so every golden value has a single source of truth.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;

use crate::qmath::{born_prob, HermitianOp2, QubitPovm};

/// `cos^2(pi/8)`, the per-bit success probability of the code, in the
/// exact half-angle form `1/2 + sqrt(2)/4`.
pub fn optimal_success_prob() -> f64 {
    0.5 + SQRT_2 / 4.0
}

/// `sin^2(pi/8) = 1/2 - sqrt(2)/4`, the per-bit error probability.
pub fn error_prob() -> f64 {
    0.5 - SQRT_2 / 4.0
}

/// Code-state angle for the bit pair, as the multiple-of-pi/8 table
/// `(0,0) -> 1, (0,1) -> -1, (1,0) -> -5, (1,1) -> 5`.
pub fn code_angle(b0: bool, b1: bool) -> f64 {
    let eighths: f64 = match (b0, b1) {
        (false, false) => 1.0,
        (false, true) => -1.0,
        (true, false) => -5.0,
        (true, true) => 5.0,
    };
    eighths * PI / 8.0
}

/// Projector onto the real state `cos(theta)|0> + sin(theta)|1>`.
pub fn real_state_projector(theta: f64) -> HermitianOp2 {
    HermitianOp2::projector(theta.cos().into(), theta.sin().into())
}

/// One encoded qubit: the bit pair and its rank-1 code state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QracState {
    b0: bool,
    b1: bool,
    rho: HermitianOp2,
}

impl QracState {
    pub fn b0(&self) -> bool {
        self.b0
    }

    pub fn b1(&self) -> bool {
        self.b1
    }

    pub fn bit(&self, alpha: bool) -> bool {
        if alpha {
            self.b1
        } else {
            self.b0
        }
    }

    pub fn rho(&self) -> &HermitianOp2 {
        &self.rho
    }
}

/// Encodes a bit pair into its code state.
pub fn encode(b0: bool, b1: bool) -> QracState {
    QracState {
        b0,
        b1,
        rho: real_state_projector(code_angle(b0, b1)),
    }
}

/// One of the two decoding measurements: effect `e_b` is the outcome that
/// decodes to bit value `b`.
///
/// `alpha = 0` is the Z basis; `alpha = 1` projects onto `psi_{+-pi/4}`.
#[derive(Debug, Clone, Copy)]
pub struct DecodingBasis {
    alpha: bool,
    effects: QubitPovm,
}

impl DecodingBasis {
    pub fn new(alpha: bool) -> Self {
        let effects = if alpha {
            QubitPovm::new(real_state_projector(PI / 4.0), real_state_projector(-PI / 4.0))
        } else {
            QubitPovm::new(real_state_projector(0.0), real_state_projector(PI / 2.0))
        }
        .expect("decoding projectors form a POVM");
        Self { alpha, effects }
    }

    pub fn alpha(&self) -> bool {
        self.alpha
    }

    pub fn effects(&self) -> &QubitPovm {
        &self.effects
    }
}

/// Probability that measuring `state` in `DecodingBasis(alpha)` yields the
/// encoded bit `b_alpha`.
pub fn decode_prob(alpha: bool, state: &QracState) -> f64 {
    let basis = DecodingBasis::new(alpha);
    let effect = basis.effects.effect(state.bit(alpha));
    born_prob(effect, state.rho()).expect("code states and decoding projectors are valid")
}

/// Samples the decoded bit: measures `state` in `DecodingBasis(alpha)` and
/// returns the outcome label.
pub fn sample_decode<R: Rng + ?Sized>(alpha: bool, state: &QracState, rng: &mut R) -> bool {
    let basis = DecodingBasis::new(alpha);
    let p_one = born_prob(basis.effects.e1(), state.rho())
        .expect("code states and decoding projectors are valid");
    rng.gen::<f64>() < p_one
}

/// `rho_b0 = (encode(b0, 0) + encode(b0, 1)) / 2`, the mixture seen by a
/// decoder of the first bit.
pub fn mixture_rho(b0: bool) -> HermitianOp2 {
    (*encode(b0, false).rho() + *encode(b0, true).rho()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream_rng;
    use approx::assert_abs_diff_eq;

    const BITS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

    #[test]
    fn encodings_are_pure_states() {
        for (b0, b1) in BITS {
            let state = encode(b0, b1);
            assert_abs_diff_eq!(state.rho().trace(), 1.0, epsilon = 1e-15);
            let (lo, hi) = state.rho().eigenvalues();
            assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn encode_00_matches_angle_pi_over_8() {
        let rho = *encode(false, false).rho();
        let t = PI / 8.0;
        assert_abs_diff_eq!(rho.a00(), t.cos() * t.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(rho.a01().re, t.cos() * t.sin(), epsilon = 1e-15);
        assert_eq!(rho.a01().im, 0.0);
    }

    #[test]
    fn every_matching_bit_decodes_at_the_optimum() {
        for (b0, b1) in BITS {
            let state = encode(b0, b1);
            for alpha in [false, true] {
                assert_abs_diff_eq!(
                    decode_prob(alpha, &state),
                    optimal_success_prob(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn mismatched_bit_is_uniform() {
        // Probability of guessing the *other* bit from the wrong basis,
        // averaged over that bit's two encodings, is exactly 1/2.
        for alpha in [false, true] {
            for fixed in [false, true] {
                let mut total = 0.0;
                for other in [false, true] {
                    let (b0, b1) = if alpha { (other, fixed) } else { (fixed, other) };
                    let state = encode(b0, b1);
                    let basis = DecodingBasis::new(!alpha);
                    let effect = basis.effects().effect(state.bit(alpha));
                    total += born_prob(effect, state.rho()).unwrap();
                }
                assert_abs_diff_eq!(total / 2.0, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn success_ceiling_is_respected() {
        for (b0, b1) in BITS {
            for alpha in [false, true] {
                assert!(decode_prob(alpha, &encode(b0, b1)) < 0.854);
            }
        }
    }

    #[test]
    fn mixture_bloch_form() {
        let (a0, v) = mixture_rho(false).to_bloch();
        assert_abs_diff_eq!(a0, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.z, 0.5 / SQRT_2, epsilon = 1e-15);

        let (_, v) = mixture_rho(true).to_bloch();
        assert_abs_diff_eq!(v.z, -0.5 / SQRT_2, epsilon = 1e-15);

        // Half-angle identity: Tr[|0><0| rho_0] = cos^2(pi/8).
        let z0 = real_state_projector(0.0);
        assert_abs_diff_eq!(
            z0.trace_product(&mixture_rho(false)),
            optimal_success_prob(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn sample_decode_is_deterministic_given_seed() {
        let state = encode(false, false);
        let run = |seed| -> Vec<bool> {
            let mut rng = stream_rng(seed, 0);
            (0..64).map(|_| sample_decode(false, &state, &mut rng)).collect()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn sample_decode_matches_born_rule() {
        let state = encode(false, false);
        let mut rng = stream_rng(5, 0);
        let trials = 200_000;
        let hits = (0..trials)
            .filter(|_| sample_decode(false, &state, &mut rng) == state.b0())
            .count();
        let mean = hits as f64 / trials as f64;
        // 3 sigma of a Bernoulli(0.8536) mean over 2e5 trials.
        assert_abs_diff_eq!(mean, optimal_success_prob(), epsilon = 3.0 * 8e-4);
    }
}
