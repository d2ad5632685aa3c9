//! The one-time-memory protocol and its unlock oracles.
//!
//! Preparation samples two secret bitstrings, encodes them pairwise into
//! per-qubit code states (the protocol never entangles, so the state is
//! kept as a sequence of single-qubit density operators), and wraps each
//! secret in a fuzzy-lock oracle that releases its message when a query
//! lands within relative Hamming distance 0.15 of the secret.
//!
//! Oracles are in-process callables standing in for stateless hardware:
//! no query limit is enforced, but every query is recorded in a transcript
//! for post-hoc accounting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binom;
use crate::qrac::{encode, error_prob, sample_decode, QracState};
use crate::seeding::{derive_seed, stream_rng, MeasurementStreams};

/// Maximum message length in octets.
pub const MESSAGE_MAX_LEN: usize = 64;

/// Fraction of bits a query must get right to unlock.
pub const UNLOCK_FRACTION: f64 = 0.85;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("message exceeds {MESSAGE_MAX_LEN} octets (got {0})")]
    MessageTooLong(usize),
    #[error("invalid instance record: {0}")]
    InvalidRecord(String),
}

/// An octet-string message, at most [`MESSAGE_MAX_LEN`] long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message(Vec<u8>);

impl Message {
    pub fn new(bytes: Vec<u8>) -> Result<Self, ProtocolError> {
        if bytes.len() > MESSAGE_MAX_LEN {
            return Err(ProtocolError::MessageTooLong(bytes.len()));
        }
        Ok(Self(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, ProtocolError> {
        let bytes =
            hex::decode(s).map_err(|e| ProtocolError::InvalidRecord(format!("message: {e}")))?;
        Self::new(bytes)
    }
}

/// A fixed-length bitstring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Hamming distance; both strings must have the same length.
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len(), other.len(), "length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Hex packing: bit `i` goes to byte `i / 8`, most significant bit
    /// first; the final byte is zero-padded.
    pub fn to_hex(&self) -> String {
        let mut bytes = vec![0u8; self.0.len().div_ceil(8)];
        for (i, &bit) in self.0.iter().enumerate() {
            if bit {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        hex::encode(bytes)
    }

    /// Inverse of [`BitString::to_hex`] for a declared bit length.
    pub fn from_hex(s: &str, n: usize) -> Result<Self, ProtocolError> {
        let bytes =
            hex::decode(s).map_err(|e| ProtocolError::InvalidRecord(format!("bitstring: {e}")))?;
        if bytes.len() != n.div_ceil(8) {
            return Err(ProtocolError::InvalidRecord(format!(
                "bitstring: expected {} bytes for {n} bits, got {}",
                n.div_ceil(8),
                bytes.len()
            )));
        }
        let bits = (0..n)
            .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
            .collect();
        Ok(Self(bits))
    }
}

/// Hamming-distance budget for unlocking at length `n`:
/// `floor((1 - 0.85) n)`, computed as the exact rational `3n/20` so no
/// float rounding can move the threshold.
pub fn unlock_threshold(n: usize) -> usize {
    3 * n / 20
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Real,
    /// Replies bottom to every query.
    Null,
}

/// One served query and its reply (`None` is bottom).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub query: BitString,
    pub reply: Option<Message>,
}

/// Classical-accessible unlock oracle with a query transcript.
#[derive(Debug, Clone)]
pub struct FuzzyLockOracle {
    r: BitString,
    message: Message,
    threshold: usize,
    mode: OracleMode,
    transcript: Vec<TranscriptEntry>,
}

impl FuzzyLockOracle {
    pub fn new(r: BitString, message: Message) -> Self {
        let threshold = unlock_threshold(r.len());
        Self {
            r,
            message,
            threshold,
            mode: OracleMode::Real,
            transcript: Vec::new(),
        }
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: OracleMode) {
        self.mode = mode;
    }

    /// The locked secret; exposed for experiment bookkeeping.
    pub fn secret(&self) -> &BitString {
        &self.r
    }

    /// Serves one query and records it. Real mode replies with the message
    /// iff the query is within the Hamming budget; null mode always
    /// replies bottom. Wrong-length queries never unlock.
    pub fn query(&mut self, q: &BitString) -> Option<Message> {
        let reply = match self.mode {
            OracleMode::Null => None,
            OracleMode::Real => {
                if q.len() == self.r.len() && q.hamming(&self.r) <= self.threshold {
                    Some(self.message.clone())
                } else {
                    None
                }
            }
        };
        self.transcript.push(TranscriptEntry {
            query: q.clone(),
            reply: reply.clone(),
        });
        reply
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Whether any served query unlocked.
    pub fn any_accepting(&self) -> bool {
        self.transcript.iter().any(|e| e.reply.is_some())
    }
}

/// A prepared one-time memory: the encoded qubits and both oracles.
#[derive(Debug, Clone)]
pub struct OtmInstance {
    n: usize,
    r0: BitString,
    r1: BitString,
    qubits: Vec<QracState>,
    oracle0: FuzzyLockOracle,
    oracle1: FuzzyLockOracle,
    seed: u64,
}

impl OtmInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self, alpha: bool) -> &BitString {
        if alpha {
            &self.r1
        } else {
            &self.r0
        }
    }

    pub fn qubits(&self) -> &[QracState] {
        &self.qubits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn oracle(&self, alpha: bool) -> &FuzzyLockOracle {
        if alpha {
            &self.oracle1
        } else {
            &self.oracle0
        }
    }

    pub fn oracle_mut(&mut self, alpha: bool) -> &mut FuzzyLockOracle {
        if alpha {
            &mut self.oracle1
        } else {
            &mut self.oracle0
        }
    }
}

/// Prepares an instance: samples `r0, r1` uniformly and independently
/// from the seed, encodes them pairwise, and wraps both oracles.
pub fn otm_prep(n: usize, m0: Message, m1: Message, seed: u64) -> OtmInstance {
    assert!(n >= 1, "n must be at least 1");
    let mut rng = stream_rng(derive_seed(seed, 0x50_52_45_50), 0); // "PREP"
    let r0 = BitString::random(n, &mut rng);
    let r1 = BitString::random(n, &mut rng);
    let qubits = (0..n).map(|i| encode(r0.bit(i), r1.bit(i))).collect();
    OtmInstance {
        n,
        oracle0: FuzzyLockOracle::new(r0.clone(), m0),
        oracle1: FuzzyLockOracle::new(r1.clone(), m1),
        r0,
        r1,
        qubits,
        seed,
    }
}

/// Honest read: measures every qubit in the decoding basis for `alpha`
/// (one independent randomness stream per qubit) and queries that oracle
/// with the measured string. Never touches the other oracle.
pub fn otm_read(
    inst: &mut OtmInstance,
    alpha: bool,
    streams: &MeasurementStreams,
) -> Option<Message> {
    let decoded: Vec<bool> = inst
        .qubits
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let mut rng = streams.qubit_rng(i as u64);
            sample_decode(alpha, state, &mut rng)
        })
        .collect();
    inst.oracle_mut(alpha).query(&BitString::from_bits(decoded))
}

/// Exact probability that an honest read unlocks:
/// `P[Binomial(n, sin^2(pi/8)) <= floor(0.15 n)]`.
pub fn honest_success_exact(n: usize) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    binom::cdf_le(n as u64, unlock_threshold(n) as u64, error_prob())
}

/// Hoeffding-style upper bound `exp(-2 n delta^2)` on the honest-read
/// failure probability, with `delta = 0.15 - sin^2(pi/8)`.
pub fn chernoff_failure_bound(n: usize) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    let delta = 0.15 - error_prob();
    (-2.0 * n as f64 * delta * delta).exp()
}

/// Flat serialization of an instance. Transcripts and oracle modes are
/// runtime state and are not exported; import reconstructs fresh
/// real-mode oracles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub n: usize,
    pub r0: String,
    pub r1: String,
    pub seed: u64,
    pub m0: String,
    pub m1: String,
}

impl OtmInstance {
    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            n: self.n,
            r0: self.r0.to_hex(),
            r1: self.r1.to_hex(),
            seed: self.seed,
            m0: self.oracle0.message.to_hex(),
            m1: self.oracle1.message.to_hex(),
        }
    }

    pub fn from_record(record: &InstanceRecord) -> Result<Self, ProtocolError> {
        if record.n == 0 {
            return Err(ProtocolError::InvalidRecord("n must be at least 1".into()));
        }
        let r0 = BitString::from_hex(&record.r0, record.n)?;
        let r1 = BitString::from_hex(&record.r1, record.n)?;
        let m0 = Message::from_hex(&record.m0)?;
        let m1 = Message::from_hex(&record.m1)?;
        let qubits = (0..record.n).map(|i| encode(r0.bit(i), r1.bit(i))).collect();
        Ok(Self {
            n: record.n,
            oracle0: FuzzyLockOracle::new(r0.clone(), m0),
            oracle1: FuzzyLockOracle::new(r1.clone(), m1),
            r0,
            r1,
            qubits,
            seed: record.seed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("record serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, ProtocolError> {
        let record: InstanceRecord =
            serde_json::from_str(json).map_err(|e| ProtocolError::InvalidRecord(e.to_string()))?;
        Self::from_record(&record)
    }
}

/// Both transcripts as CSV rows `query_hex,reply,oracle_id,index`; the
/// reply column is the message in hex, empty for bottom.
pub fn transcripts_csv(inst: &OtmInstance) -> String {
    let mut out = String::from("query_hex,reply,oracle_id,index\n");
    for (oracle_id, oracle) in [(0, &inst.oracle0), (1, &inst.oracle1)] {
        for (index, entry) in oracle.transcript().iter().enumerate() {
            let reply = entry.reply.as_ref().map(Message::to_hex).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                entry.query.to_hex(),
                reply,
                oracle_id,
                index
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn msg(byte: u8) -> Message {
        Message::new(vec![byte; 4]).unwrap()
    }

    #[test]
    fn message_length_is_enforced() {
        assert!(Message::new(vec![0; MESSAGE_MAX_LEN]).is_ok());
        assert_eq!(
            Message::new(vec![0; MESSAGE_MAX_LEN + 1]).unwrap_err(),
            ProtocolError::MessageTooLong(MESSAGE_MAX_LEN + 1)
        );
    }

    #[test]
    fn unlock_threshold_is_exact() {
        assert_eq!(unlock_threshold(1), 0);
        assert_eq!(unlock_threshold(19), 2);
        assert_eq!(unlock_threshold(20), 3);
        assert_eq!(unlock_threshold(1_000_000), 150_000);
    }

    #[test]
    fn prep_is_deterministic_and_consistent() {
        let a = otm_prep(40, msg(1), msg(2), 11);
        let b = otm_prep(40, msg(1), msg(2), 11);
        assert_eq!(a.r(false), b.r(false));
        assert_eq!(a.r(true), b.r(true));
        for i in 0..40 {
            assert_eq!(a.qubits()[i].b0(), a.r(false).bit(i));
            assert_eq!(a.qubits()[i].b1(), a.r(true).bit(i));
        }
        let c = otm_prep(40, msg(1), msg(2), 12);
        assert!(c.r(false) != a.r(false) || c.r(true) != a.r(true));
    }

    #[test]
    fn oracle_accepts_within_threshold_only() {
        let inst = otm_prep(20, msg(1), msg(2), 5);
        let mut oracle = inst.oracle(false).clone();
        assert_eq!(oracle.threshold(), 3);

        let exact = inst.r(false).clone();
        assert_eq!(oracle.query(&exact).unwrap(), msg(1));

        let mut bits = exact.bits().to_vec();
        for b in bits.iter_mut().take(3) {
            *b = !*b;
        }
        assert!(oracle.query(&BitString::from_bits(bits.clone())).is_some());

        bits[3] = !bits[3]; // distance threshold + 1
        assert!(oracle.query(&BitString::from_bits(bits)).is_none());
        assert_eq!(oracle.transcript().len(), 3);
    }

    #[test]
    fn null_oracle_matches_real_on_rejecting_queries() {
        let inst = otm_prep(24, msg(1), msg(2), 6);
        let mut real = inst.oracle(true).clone();
        let mut null = inst.oracle(true).clone();
        null.set_mode(OracleMode::Null);

        let mut rng = stream_rng(99, 0);
        for _ in 0..50 {
            let q = BitString::random(24, &mut rng);
            let r_real = real.query(&q);
            let r_null = null.query(&q);
            if r_real.is_none() {
                assert_eq!(r_real, r_null);
            }
        }
        // Identical query sequences produce identical transcripts.
        let mut replay = inst.oracle(true).clone();
        for entry in real.transcript().to_vec() {
            replay.query(&entry.query);
        }
        assert_eq!(replay.transcript(), real.transcript());
    }

    #[test]
    fn wrong_length_queries_never_unlock() {
        let inst = otm_prep(20, msg(1), msg(2), 5);
        let mut oracle = inst.oracle(false).clone();
        assert!(oracle.query(&BitString::from_bits(vec![false; 19])).is_none());
    }

    #[test]
    fn honest_read_touches_only_its_oracle() {
        let mut inst = otm_prep(30, msg(1), msg(2), 7);
        let streams = MeasurementStreams::new(derive_seed(7, 1));
        let _ = otm_read(&mut inst, false, &streams);
        assert_eq!(inst.oracle(false).transcript().len(), 1);
        assert!(inst.oracle(true).transcript().is_empty());
    }

    #[test]
    fn honest_success_small_cases() {
        // n = 1: threshold 0, success iff the single bit decodes.
        assert_abs_diff_eq!(
            honest_success_exact(1),
            crate::qrac::optimal_success_prob(),
            epsilon = 1e-14
        );
        // n = 20 against a direct finite sum with integer coefficients.
        let p = error_prob();
        let q = 1.0 - p;
        let direct: f64 = [1.0, 20.0, 190.0, 1140.0]
            .iter()
            .enumerate()
            .map(|(k, c)| c * p.powi(k as i32) * q.powi(20 - k as i32))
            .sum();
        assert_abs_diff_eq!(honest_success_exact(20), direct, epsilon = 1e-12);
        assert_abs_diff_eq!(honest_success_exact(20), 0.66, epsilon = 0.01);
    }

    #[test]
    fn honest_success_monotone_on_threshold_aligned_sizes() {
        let mut prev = 0.0;
        for n in (20..=200).step_by(20) {
            let s = honest_success_exact(n);
            assert!(s >= prev - 1e-12, "n={n}: {s} < {prev}");
            prev = s;
        }
    }

    #[test]
    fn exact_failure_is_below_the_chernoff_bound() {
        for n in (20..=200).step_by(20) {
            let failure = 1.0 - honest_success_exact(n);
            assert!(failure <= chernoff_failure_bound(n) + 1e-12);
        }
        // delta spot value.
        assert_abs_diff_eq!(0.15 - error_prob(), 0.003553, epsilon = 1e-6);
        // Monotone exponent.
        assert!(chernoff_failure_bound(10_000_000) < chernoff_failure_bound(1_000_000));
    }

    #[test]
    fn record_round_trip() {
        let inst = otm_prep(21, msg(3), msg(4), 13);
        let json = inst.to_json();
        let back = OtmInstance::from_json(&json).unwrap();
        assert_eq!(back.r(false), inst.r(false));
        assert_eq!(back.r(true), inst.r(true));
        assert_eq!(back.n(), inst.n());
        assert_eq!(back.qubits().len(), 21);
        assert_eq!(back.oracle(false).mode(), OracleMode::Real);
        assert!(back.oracle(false).transcript().is_empty());
    }

    #[test]
    fn transcript_csv_shape() {
        let mut inst = otm_prep(16, msg(1), msg(2), 3);
        let q = inst.r(false).clone();
        inst.oracle_mut(false).query(&q);
        let csv = transcripts_csv(&inst);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "query_hex,reply,oracle_id,index");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].ends_with(",0,0"));
        assert!(lines[1].contains(&msg(1).to_hex()));
    }

    #[test]
    fn bitstring_hex_round_trip() {
        let mut rng = stream_rng(4, 0);
        for n in [1, 7, 8, 9, 20, 64] {
            let s = BitString::random(n, &mut rng);
            let back = BitString::from_hex(&s.to_hex(), n).unwrap();
            assert_eq!(s, back);
        }
        assert!(BitString::from_hex("ff", 20).is_err());
    }
}
