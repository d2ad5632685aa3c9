//! One-time memories from qubit random access codes.
//!
//! The library is organized around the pieces of the construction:
//!
//! - [`qmath`]: closed-form 2x2 complex Hermitian linear algebra (density
//!   operators, POVMs, trace distance, post-measurement mixtures).
//! - [`qrac`]: the fixed optimal 2->1 random access code and its decoders.
//! - [`disturbance`]: the nonconvex POVM optimization bounding how much
//!   recovering one encoded bit collapses the other, with multistart,
//!   evolutionary, and grid-certifier solvers.
//! - [`protocol`]: the one-time-memory protocol built from per-qubit code
//!   states and fuzzy-lock unlock oracles, with exact correctness tails.
//! - [`adversary`]: product-strategy attack experiments, exact unlock
//!   tails, and real-vs-simulated distinguishing runs.
//! - [`bounds`]: the supermartingale tail bound and Monte Carlo checks
//!   against adaptive Bernoulli processes.
//!
//! All randomized stages are driven by explicit seeds through [`seeding`],
//! and the embarrassingly parallel loops run through [`exec`] so results
//! are identical whether executed sequentially or on a thread pool.

pub mod adversary;
pub mod binom;
pub mod bounds;
pub mod disturbance;
pub mod exec;
pub mod protocol;
pub mod qmath;
pub mod qrac;
pub mod seeding;
