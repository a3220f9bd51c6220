//! Brute-force reference implementations.
//!
//! Everything here enumerates all `2^k` messages and is guarded to small
//! `k`. These functions exist to cross-check the transfer-matrix engine,
//! the codeword enumerator and the list decoder on instances small enough
//! to verify directly; production paths never call them.

use crate::codec::ConcatSpec;
use crate::wef::TruncatedWef;
use crate::{Error, Result};
use num_bigint::BigUint;

const MAX_K: usize = 24;

fn check_size(k: usize) -> Result<()> {
    if k > MAX_K {
        return Err(Error::Unsupported(format!(
            "exhaustive enumeration is limited to k <= {MAX_K}, got {k}"
        )));
    }
    Ok(())
}

fn message_bits(value: u32, k: usize) -> Vec<u8> {
    (0..k).map(|i| ((value >> i) & 1) as u8).collect()
}

/// All `2^k` codewords in message-index order (message bit `i` = bit `i` of
/// the index).
pub fn codebook(spec: &ConcatSpec) -> Result<Vec<Vec<u8>>> {
    check_size(spec.k)?;
    (0..1u32 << spec.k)
        .map(|v| spec.encode(&message_bits(v, spec.k)))
        .collect()
}

/// Weight spectrum of the full codebook, truncated at `wmax`. The all-zeros
/// codeword of the zero message is excluded, matching the transfer-matrix
/// convention; a catastrophic inner code may still leave `A_0 > 0`.
pub fn codebook_spectrum(spec: &ConcatSpec, wmax: usize) -> Result<TruncatedWef> {
    check_size(spec.k)?;
    let mut counts = vec![0u64; wmax + 1];
    for v in 0..1u32 << spec.k {
        let w = spec
            .encode(&message_bits(v, spec.k))?
            .iter()
            .map(|&b| b as usize)
            .sum::<usize>();
        if w <= wmax {
            counts[w] += 1;
        }
    }
    counts[0] -= 1;
    Ok(TruncatedWef::new(
        wmax,
        counts.into_iter().map(BigUint::from).collect(),
    ))
}

/// Scores every codeword against a received vector with the negative
/// correlation metric `sum -x_t (1 - 2 c_t)` and returns the best
/// `(metric, message)`, ties broken by smallest message index. This is the
/// ML decision by definition.
pub fn ml_message(spec: &ConcatSpec, channel: &[f64]) -> Result<(f64, Vec<u8>)> {
    check_size(spec.k)?;
    if channel.len() != spec.blocklength() {
        return Err(Error::LengthMismatch {
            context: "ml_message channel values",
            expected: spec.blocklength(),
            actual: channel.len(),
        });
    }
    let mut best: Option<(f64, u32)> = None;
    for v in 0..1u32 << spec.k {
        let cw = spec.encode(&message_bits(v, spec.k))?;
        let metric: f64 = cw
            .iter()
            .zip(channel)
            .map(|(&c, &x)| -x * (1.0 - 2.0 * c as f64))
            .sum();
        if best.is_none_or(|(m, _)| metric < m) {
            best = Some((metric, v));
        }
    }
    let (metric, v) = best.unwrap();
    Ok((metric, message_bits(v, spec.k)))
}
