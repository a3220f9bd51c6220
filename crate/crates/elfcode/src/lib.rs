//! Toolkit for convolutional block codes expurgated by an outer ELF
//! (expurgating linear function).
//!
//! An ELF is a degree-`m` binary polynomial `E(x)` with unit constant term.
//! Appending `m` parity bits to a `K`-bit message yields an input sequence
//! whose polynomial is divisible by `E(x)`; feeding that sequence to a rate
//! `1/n` feedforward convolutional encoder (zero-terminated or tail-biting)
//! produces a block code whose low-weight codewords have been expurgated.
//!
//! The crate provides:
//!
//! - [`gf2poly`]: GF(2) polynomial arithmetic and the parsing conventions
//!   used for generator and ELF polynomials.
//! - [`codec`]: encoders (ELF append, convolutional, puncturing) and the
//!   [`codec::ConcatSpec`] describing a complete concatenated code.
//! - [`wef`]: exact truncated weight enumerators via transfer-matrix vector
//!   propagation, and distance-spectrum union bounds on the AWGN channel.
//! - [`listdec`]: serial list Viterbi decoding and ordered codeword
//!   enumeration by weight.
//! - [`sieve`]: the list-decoding sieve that finds distance-optimal ELFs,
//!   and enumeration-based expurgated spectra.
//! - [`simkit`]: a deterministic Monte-Carlo AWGN simulation harness.
//! - [`exhaustive`]: brute-force reference implementations used as oracles
//!   in tests and sanity checks.

pub mod codec;
pub mod exhaustive;
pub mod gf2poly;
pub mod listdec;
pub mod sieve;
pub mod simkit;
pub mod wef;

pub use codec::{ConcatSpec, ConvCode, ElfCode, Mode, PuncturePattern};
pub use gf2poly::{Gf2Poly, PolyFormat};
pub use listdec::{CodewordEnumerator, DecodeOutcome, DecodeStatus, ListDecoder, PathCandidate};
pub use sieve::SieveResult;
pub use simkit::{SimConfig, SimStats};
pub use wef::{ChannelParams, TransitionSystem, TruncatedWef};

/// Errors reported by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("cannot parse {text:?} as {format}: {reason}")]
    Parse {
        text: String,
        format: &'static str,
        reason: String,
    },
    #[error("invalid ELF polynomial: {0}")]
    InvalidElf(String),
    #[error("invalid convolutional code: {0}")]
    InvalidCode(String),
    #[error("invalid puncturing pattern: {0}")]
    InvalidPattern(String),
    #[error("{context}: expected length {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("tail-biting requires at least {nu} input bits, got {len}")]
    TailBitingTooShort { nu: usize, len: usize },
    #[error("counter overflow during weight enumeration (weight {weight})")]
    CountOverflow { weight: usize },
    #[error("sieve inconclusive: {survivors} candidates survive all classes up to weight {limit}; raise the weight limit")]
    SieveInconclusive { survivors: usize, limit: usize },
    #[error("configuration out of supported range: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
