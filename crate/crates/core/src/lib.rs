//! Exact additive combinatorics over the group F_2^n.
//!
//! The crate covers Walsh–Hadamard spectra, dissociated sets, additive
//! energies, permanents, connectedness refinement, rectangle extraction
//! and a bench of instance-level inequality checkers. Every verdict is
//! decided in exact integer or rational arithmetic.

pub mod bench;
pub mod cli;
pub mod dissociation;
pub mod energy;
pub mod error;
pub mod exact;
pub mod f2n;
pub mod inverse;
pub mod permanent;
pub mod spectrum;

pub use error::{Error, Result};
pub use f2n::{F2Element, F2Set};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator used by every randomized routine.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
