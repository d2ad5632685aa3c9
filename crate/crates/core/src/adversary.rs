//! Attack-side experiments: product strategies, exact unlock tails, the
//! proof-constant arithmetic, and real-vs-simulated distinguishing runs.
//!
//! Only product strategies are simulated: one per-qubit measurement plus
//! classical post-processing, applied independently at every position.
//! That family covers every quantity the soundness argument manipulates
//! (per-bit success probabilities, binomial unlock tails, and the guessing
//! cap after a committed measurement); collective attacks over the whole
//! register are out of scope.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binom::{self, LogSumExp};
use crate::disturbance::{guess_bound, objective, PovmParams};
use crate::exec::{self, ExecMode};
use crate::protocol::{unlock_threshold, BitString, Message, OracleMode, OtmInstance};
use crate::qmath::{born_prob, QubitPovm};
use crate::qrac::{encode, real_state_projector};
use crate::seeding::{derive_seed, stream_rng, MeasurementStreams};

/// Per-bit success level separating "high" from "low" positions.
pub const PROFILE_THRESHOLD: f64 = 0.83;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("strategy output alphabet exceeds 2^16 values")]
    OutputSpaceTooLarge,
}

/// One per-qubit measurement plus classical post-processing, applied
/// independently to every position.
///
/// `guess0[o]` / `guess1[o]` are the guesses for the two encoded bits when
/// the measurement yields outcome `o`.
#[derive(Debug, Clone)]
pub struct ProductStrategy {
    povm: QubitPovm,
    guess0: [bool; 2],
    guess1: [bool; 2],
    label: String,
}

const IDENTITY_MAP: [bool; 2] = [false, true];
const ALL_MAPS: [[bool; 2]; 4] = [
    [false, false],
    [false, true],
    [true, false],
    [true, true],
];

impl ProductStrategy {
    pub fn new(povm: QubitPovm, guess0: [bool; 2], guess1: [bool; 2], label: &str) -> Self {
        Self {
            povm,
            guess0,
            guess1,
            label: label.to_string(),
        }
    }

    /// Projective measurement onto `psi_theta` and its complement.
    pub fn projective(theta: f64, guess0: [bool; 2], guess1: [bool; 2], label: &str) -> Self {
        let povm = QubitPovm::new(
            real_state_projector(theta),
            real_state_projector(theta + std::f64::consts::FRAC_PI_2),
        )
        .expect("orthogonal projectors form a POVM");
        Self::new(povm, guess0, guess1, label)
    }

    /// Z-basis measurement, outcome taken as the guess for both bits.
    pub fn z_basis() -> Self {
        Self::projective(0.0, IDENTITY_MAP, IDENTITY_MAP, "z-basis")
    }

    /// Measurement in the second decoding basis.
    pub fn x_basis() -> Self {
        Self::projective(
            std::f64::consts::FRAC_PI_4,
            IDENTITY_MAP,
            IDENTITY_MAP,
            "x-basis",
        )
    }

    /// The uninformative POVM `(I/2, I/2)` with a constant guess.
    pub fn trivial_coin() -> Self {
        let half = crate::qmath::HermitianOp2::identity() * 0.5;
        let povm = QubitPovm::new(half, half).expect("trivial POVM");
        Self::new(povm, [false, false], [false, false], "trivial-coin")
    }

    /// Best single projective measurement for unlocking both oracles:
    /// sweeps the angle at 0.01-degree granularity, choosing for each
    /// angle the post-processing maps that maximize each per-bit success,
    /// and keeping the angle maximizing the smaller of the two.
    pub fn best_single_angle() -> Self {
        let steps = 18_000; // [0, 180) degrees
        let mut best: Option<(f64, usize, [bool; 2], [bool; 2])> = None;
        for j in 0..steps {
            let theta = (j as f64) * 0.01f64.to_radians();
            let (q0, g0) = best_map_success(theta, false);
            let (q1, g1) = best_map_success(theta, true);
            let score = q0.min(q1);
            let better = match &best {
                None => true,
                Some((s, _, _, _)) => score > *s,
            };
            if better {
                best = Some((score, j, g0, g1));
            }
        }
        let (_, j, g0, g1) = best.expect("sweep is nonempty");
        let theta = (j as f64) * 0.01f64.to_radians();
        Self::projective(theta, g0, g1, &format!("single-angle-{:.2}deg", j as f64 * 0.01))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn povm(&self) -> &QubitPovm {
        &self.povm
    }

    pub fn params(&self) -> PovmParams {
        PovmParams::from_povm(&self.povm)
    }

    /// Joint per-bit pmf over (first guess correct, second guess correct),
    /// averaged over the four equiprobable encodings.
    pub fn per_bit_joint(&self) -> [[f64; 2]; 2] {
        let mut joint = [[0.0; 2]; 2];
        for b0 in [false, true] {
            for b1 in [false, true] {
                let state = encode(b0, b1);
                for outcome in [false, true] {
                    let p = born_prob(self.povm.effect(outcome), state.rho())
                        .expect("strategy POVM and code states are valid");
                    let c0 = self.guess0[outcome as usize] == b0;
                    let c1 = self.guess1[outcome as usize] == b1;
                    joint[c0 as usize][c1 as usize] += 0.25 * p;
                }
            }
        }
        joint
    }

    /// Probability the per-bit guess for bit `alpha` is correct.
    pub fn per_bit_success(&self, alpha: bool) -> f64 {
        let joint = self.per_bit_joint();
        if alpha {
            joint[0][1] + joint[1][1]
        } else {
            joint[1][0] + joint[1][1]
        }
    }

    fn sample_outcome(&self, state: &crate::qrac::QracState, rng: &mut ChaCha12Rng) -> bool {
        let p_one = born_prob(self.povm.e1(), state.rho())
            .expect("strategy POVM and code states are valid");
        rng.gen::<f64>() < p_one
    }

    /// Measures every qubit and returns the two guess strings.
    fn measure_all(&self, inst: &OtmInstance, streams: &MeasurementStreams) -> (BitString, BitString) {
        let mut x0 = Vec::with_capacity(inst.n());
        let mut x1 = Vec::with_capacity(inst.n());
        for (i, state) in inst.qubits().iter().enumerate() {
            let mut rng = streams.qubit_rng(i as u64);
            let outcome = self.sample_outcome(state, &mut rng);
            x0.push(self.guess0[outcome as usize]);
            x1.push(self.guess1[outcome as usize]);
        }
        (BitString::from_bits(x0), BitString::from_bits(x1))
    }
}

/// Per-bit success of the best post-processing map at a projective angle.
fn best_map_success(theta: f64, alpha: bool) -> (f64, [bool; 2]) {
    // w[o][b] = joint probability of outcome o and bit value b.
    let e0 = real_state_projector(theta);
    let e1 = real_state_projector(theta + std::f64::consts::FRAC_PI_2);
    let mut w = [[0.0f64; 2]; 2];
    for b0 in [false, true] {
        for b1 in [false, true] {
            let state = encode(b0, b1);
            let b = if alpha { b1 } else { b0 };
            w[0][b as usize] += 0.25 * e0.trace_product(state.rho());
            w[1][b as usize] += 0.25 * e1.trace_product(state.rho());
        }
    }
    let mut best = (f64::NEG_INFINITY, IDENTITY_MAP);
    for map in ALL_MAPS {
        let q = w[0][map[0] as usize] + w[1][map[1] as usize];
        if q > best.0 {
            best = (q, map);
        }
    }
    best
}

/// Exact per-position success probabilities of a strategy, partitioned at
/// [`PROFILE_THRESHOLD`]. For product strategies all entries are equal.
#[derive(Debug, Clone, Serialize)]
pub struct SuccessProfile {
    pub p: Vec<f64>,
    pub threshold: f64,
    pub set_lo: Vec<usize>,
    pub set_hi: Vec<usize>,
}

pub fn profile_of(strategy: &ProductStrategy, alpha: bool, n: usize) -> SuccessProfile {
    let q = strategy.per_bit_success(alpha);
    let p = vec![q; n];
    let (mut set_lo, mut set_hi) = (Vec::new(), Vec::new());
    for (i, &pi) in p.iter().enumerate() {
        if pi < PROFILE_THRESHOLD {
            set_lo.push(i);
        } else {
            set_hi.push(i);
        }
    }
    SuccessProfile {
        p,
        threshold: PROFILE_THRESHOLD,
        set_lo,
        set_hi,
    }
}

/// Arithmetic of the first-accepting-input argument: the per-position
/// mean success cap when at least 2/5 of the positions sit under 0.83.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaAccInputBound {
    pub mean_cap: f64,
    pub holds: bool,
}

pub fn lemma_acc_input_bound() -> LemmaAccInputBound {
    let mean_cap = 0.854 * (3.0 / 5.0) + 0.83 * (2.0 / 5.0);
    LemmaAccInputBound {
        mean_cap,
        holds: mean_cap <= 0.845,
    }
}

/// Arithmetic of the soundness fraction: guessing everything on the low
/// set and 7/10 of the high set stays under the unlock fraction.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SoundnessFraction {
    pub fraction: f64,
    pub holds: bool,
}

pub fn soundness_fraction() -> SoundnessFraction {
    let fraction = 2.0 / 5.0 + 0.7 * (3.0 / 5.0);
    SoundnessFraction {
        fraction,
        holds: fraction <= 0.85,
    }
}

/// Guessing cap implied by the disturbance objective for a strategy whose
/// first-bit recovery meets [`PROFILE_THRESHOLD`]; `None` when the premise
/// fails and the corollary says nothing.
pub fn corollary_guess_cap(strategy: &ProductStrategy) -> Option<f64> {
    let q0 = strategy.per_bit_success(false);
    if q0 < PROFILE_THRESHOLD {
        return None;
    }
    let (obj, _) = objective(&strategy.params()).expect("strategy POVM is feasible");
    Some(guess_bound(obj))
}

/// Outcome of an attack experiment; `trials = 0` marks exact mode, where
/// the unlock probabilities are tails of the per-bit distribution and
/// `sim_total_variation` is 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridReport {
    pub strategy: String,
    pub n: usize,
    pub trials: u64,
    pub p_unlock0: f64,
    pub p_unlock1: f64,
    pub p_unlock_both: f64,
    pub sim_total_variation: f64,
}

/// Exact unlock probabilities when the strategy measures every qubit once
/// and submits its guess strings to both oracles. No sampling: binomial
/// and multinomial tails are evaluated in log space.
pub fn attack_unlock_probs(strategy: &ProductStrategy, n: usize) -> HybridReport {
    assert!(n >= 1, "n must be at least 1");
    let joint = strategy.per_bit_joint();
    let q0 = joint[1][0] + joint[1][1];
    let q1 = joint[0][1] + joint[1][1];
    let needed = (n - unlock_threshold(n)) as u64;
    HybridReport {
        strategy: strategy.label().to_string(),
        n,
        trials: 0,
        p_unlock0: binom::tail_ge(n as u64, needed, q0),
        p_unlock1: binom::tail_ge(n as u64, needed, q1),
        p_unlock_both: joint_unlock_tail(n as u64, needed, &joint),
        sim_total_variation: 0.0,
    }
}

/// `P[#correct_0 >= needed and #correct_1 >= needed]` for n iid draws
/// from the per-bit joint pmf.
fn joint_unlock_tail(n: u64, needed: u64, joint: &[[f64; 2]; 2]) -> f64 {
    let probs = [joint[0][0], joint[0][1], joint[1][0], joint[1][1]];
    let mut acc = LogSumExp::new();
    // Counts (n01, n10, n11): correct_0 = n10 + n11, correct_1 = n01 + n11.
    let n11_lo = (2 * needed).saturating_sub(n);
    for n11 in n11_lo..=n {
        let rest = n - n11;
        let n10_lo = needed.saturating_sub(n11);
        for n10 in n10_lo..=rest {
            let n01_lo = needed.saturating_sub(n11);
            if n01_lo > rest - n10 {
                continue;
            }
            for n01 in n01_lo..=(rest - n10) {
                let n00 = rest - n10 - n01;
                acc.add(binom::ln_multinomial_pmf(
                    n,
                    &[n00, n01, n10, n11],
                    &probs,
                ));
            }
        }
    }
    acc.ln_total().exp().min(1.0)
}

/// An adversary procedure for the real-vs-simulated distinguishing
/// experiment. Outputs live in a small discrete alphabet.
#[derive(Debug, Clone)]
pub enum SimStrategy {
    /// Honest read of the declared oracle; outputs whether a message came
    /// back. Never queries the other oracle.
    HonestReader { alpha: bool },
    /// Measures every qubit with a product strategy, then queries each
    /// oracle once with the corresponding guess string; outputs both
    /// accept bits.
    MeasureBoth {
        strategy: ProductStrategy,
        alpha: bool,
    },
    /// Ignores the state and queries the non-target oracle with one
    /// uniform string; outputs the accept bit.
    RandomQuerier { alpha: bool },
    /// No queries, constant output.
    Null,
}

impl SimStrategy {
    pub fn label(&self) -> String {
        match self {
            Self::HonestReader { alpha } => format!("honest-reader-{}", *alpha as u8),
            Self::MeasureBoth { strategy, alpha } => {
                format!("measure-both-{}-{}", strategy.label(), *alpha as u8)
            }
            Self::RandomQuerier { alpha } => format!("random-querier-{}", *alpha as u8),
            Self::Null => "null".to_string(),
        }
    }

    /// The oracle the simulator answers honestly; the other is nulled.
    pub fn target_alpha(&self) -> bool {
        match self {
            Self::HonestReader { alpha }
            | Self::MeasureBoth { alpha, .. }
            | Self::RandomQuerier { alpha } => *alpha,
            Self::Null => false,
        }
    }

    pub fn output_cardinality(&self) -> u64 {
        match self {
            Self::HonestReader { .. } | Self::RandomQuerier { .. } => 2,
            Self::MeasureBoth { .. } => 4,
            Self::Null => 1,
        }
    }

    /// Exact probability, in the real world, of an accepting query to the
    /// oracle the simulator replaces with the null oracle. This caps the
    /// total variation between the two worlds.
    pub fn exact_null_accept_prob(&self, n: usize) -> f64 {
        let needed = (n - unlock_threshold(n)) as u64;
        match self {
            Self::HonestReader { .. } | Self::Null => 0.0,
            Self::MeasureBoth { strategy, alpha } => {
                let q = strategy.per_bit_success(!*alpha);
                binom::tail_ge(n as u64, needed, q)
            }
            Self::RandomQuerier { .. } => binom::tail_ge(n as u64, needed, 0.5),
        }
    }

    /// The strategies exercised by the standard experiment battery.
    pub fn builtin_suite() -> Vec<SimStrategy> {
        vec![
            Self::HonestReader { alpha: false },
            Self::MeasureBoth {
                strategy: ProductStrategy::z_basis(),
                alpha: false,
            },
            Self::MeasureBoth {
                strategy: ProductStrategy::best_single_angle(),
                alpha: false,
            },
            Self::RandomQuerier { alpha: false },
            Self::Null,
        ]
    }

    fn run(
        &self,
        inst: &mut OtmInstance,
        rng: &mut ChaCha12Rng,
        streams: &MeasurementStreams,
    ) -> u16 {
        match self {
            Self::HonestReader { alpha } => {
                crate::protocol::otm_read(inst, *alpha, streams).is_some() as u16
            }
            Self::MeasureBoth { strategy, .. } => {
                let (x0, x1) = strategy.measure_all(inst, streams);
                let acc0 = inst.oracle_mut(false).query(&x0).is_some() as u16;
                let acc1 = inst.oracle_mut(true).query(&x1).is_some() as u16;
                acc0 | (acc1 << 1)
            }
            Self::RandomQuerier { alpha } => {
                let q = BitString::random(inst.n(), rng);
                inst.oracle_mut(!*alpha).query(&q).is_some() as u16
            }
            Self::Null => 0,
        }
    }
}

const REAL_M0: [u8; 4] = [0xa0, 0x11, 0x22, 0x33];
const REAL_M1: [u8; 4] = [0xb1, 0x44, 0x55, 0x66];

/// Runs the strategy against the real protocol and against the simulated
/// world (the non-target message replaced by a uniform one and its oracle
/// nulled), and reports the empirical total variation between the two
/// output distributions along with real-world unlock frequencies.
pub fn simulator_experiment(
    strategy: &SimStrategy,
    n: usize,
    trials: u64,
    seed: u64,
    exec_mode: ExecMode,
) -> Result<HybridReport, AdversaryError> {
    assert!(trials >= 1, "trials must be at least 1");
    let cardinality = strategy.output_cardinality();
    if cardinality > 1 << 16 {
        return Err(AdversaryError::OutputSpaceTooLarge);
    }
    let card = cardinality as usize;
    let alpha = strategy.target_alpha();

    struct Partial {
        real_counts: Vec<u64>,
        sim_counts: Vec<u64>,
        unlock0: u64,
        unlock1: u64,
        unlock_both: u64,
    }

    let base_real = derive_seed(seed, 0x52_45_41_4c); // "REAL"
    let base_sim = derive_seed(seed, 0x53_49_4d_55); // "SIMU"
    const BLOCK: usize = 512;

    let totals = exec::blocked_fold(
        exec_mode,
        trials as usize,
        BLOCK,
        |_, range| {
            let mut part = Partial {
                real_counts: vec![0; card],
                sim_counts: vec![0; card],
                unlock0: 0,
                unlock1: 0,
                unlock_both: 0,
            };
            for t in range {
                let t = t as u64;
                // Disjoint per-trial tags: 4t for the instance, 4t+1 for the
                // strategy's own randomness, 4t+2 for measurement streams,
                // 4t+3 for the simulator's replacement message.
                // Real world.
                let m0 = Message::new(REAL_M0.to_vec()).expect("fits");
                let m1 = Message::new(REAL_M1.to_vec()).expect("fits");
                let mut inst = crate::protocol::otm_prep(n, m0, m1, derive_seed(base_real, 4 * t));
                let mut rng = stream_rng(derive_seed(base_real, 4 * t + 1), 0);
                let streams = MeasurementStreams::new(derive_seed(base_real, 4 * t + 2));
                let out = strategy.run(&mut inst, &mut rng, &streams) as usize;
                part.real_counts[out.min(card - 1)] += 1;
                let a0 = inst.oracle(false).any_accepting();
                let a1 = inst.oracle(true).any_accepting();
                part.unlock0 += a0 as u64;
                part.unlock1 += a1 as u64;
                part.unlock_both += (a0 && a1) as u64;

                // Simulated world: non-target message uniform, its oracle null.
                let mut msg_rng = stream_rng(derive_seed(base_sim, 4 * t + 3), 0);
                let mut other = [0u8; 4];
                msg_rng.fill(&mut other);
                let real0 = Message::new(REAL_M0.to_vec()).expect("fits");
                let real1 = Message::new(REAL_M1.to_vec()).expect("fits");
                let uniform = Message::new(other.to_vec()).expect("fits");
                let (sm0, sm1) = if alpha { (uniform, real1) } else { (real0, uniform) };
                let mut sim_inst =
                    crate::protocol::otm_prep(n, sm0, sm1, derive_seed(base_sim, 4 * t));
                sim_inst.oracle_mut(!alpha).set_mode(OracleMode::Null);
                let mut rng = stream_rng(derive_seed(base_sim, 4 * t + 1), 0);
                let streams = MeasurementStreams::new(derive_seed(base_sim, 4 * t + 2));
                let out = strategy.run(&mut sim_inst, &mut rng, &streams) as usize;
                part.sim_counts[out.min(card - 1)] += 1;
            }
            part
        },
        Partial {
            real_counts: vec![0; card],
            sim_counts: vec![0; card],
            unlock0: 0,
            unlock1: 0,
            unlock_both: 0,
        },
        |mut acc, part| {
            for i in 0..card {
                acc.real_counts[i] += part.real_counts[i];
                acc.sim_counts[i] += part.sim_counts[i];
            }
            acc.unlock0 += part.unlock0;
            acc.unlock1 += part.unlock1;
            acc.unlock_both += part.unlock_both;
            acc
        },
    );

    let t = trials as f64;
    let tv = 0.5
        * totals
            .real_counts
            .iter()
            .zip(&totals.sim_counts)
            .map(|(&r, &s)| (r as f64 / t - s as f64 / t).abs())
            .sum::<f64>();
    Ok(HybridReport {
        strategy: strategy.label(),
        n,
        trials,
        p_unlock0: totals.unlock0 as f64 / t,
        p_unlock1: totals.unlock1 as f64 / t,
        p_unlock_both: totals.unlock_both as f64 / t,
        sim_total_variation: tv,
    })
}
