//! List-decoding sieve over candidate expurgating polynomials.
//!
//! Candidates for degree `m` are the `2^(m-1)` binary polynomials with both
//! the constant and the degree-`m` coefficient set. The sieve walks the
//! inner code's nonzero codewords in nondecreasing weight order (see
//! [`crate::listdec::enumerate_codewords_by_weight`]) and eliminates a
//! candidate as soon as some codeword's input polynomial is divisible by
//! it, because that codeword would survive expurgation. Elimination is
//! class-atomic: all codewords of one weight are charged before anyone is
//! removed, so the outcome does not depend on ordering within a class.
//!
//! The first weight class that would eliminate every remaining candidate is
//! the best achievable expurgated minimum distance `w*`; the winners are
//! the candidates entering that class with the fewest divisible codewords,
//! i.e. the smallest multiplicity at `d_min = w*`.

use crate::codec::{ConvCode, ElfCode, Mode, PuncturePattern};
use crate::gf2poly::{divides, rem_words_small, Gf2Poly};
use crate::listdec::{CodewordEnumerator, PathCandidate};
use crate::wef::TruncatedWef;
use crate::{Error, Result};
use num_bigint::BigUint;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Outcome of a sieve run. `winners` holds `(elf, d_min, a_dmin)` tuples,
/// all sharing `d_min == w_star`; `survivors_by_weight` maps each fully
/// processed (non-final) class weight to the candidate bit patterns still
/// alive after it.
#[derive(Clone, Debug)]
pub struct SieveResult {
    pub m: usize,
    pub winners: Vec<(ElfCode, usize, u64)>,
    pub survivors_by_weight: BTreeMap<usize, Vec<u64>>,
    pub w_star: usize,
}

impl SieveResult {
    /// The numerically smallest winning polynomial, the one the CLI marks.
    pub fn canonical_winner(&self) -> &(ElfCode, usize, u64) {
        self.winners
            .iter()
            .min_by_key(|(e, _, _)| e.bits())
            .expect("sieve result has at least one winner")
    }
}

fn candidate_set(m: usize) -> Result<Vec<u64>> {
    if m == 0 || m > 63 {
        return Err(Error::InvalidElf(format!(
            "sieve degree must be in 1..=63, got {m}"
        )));
    }
    Ok((0..1u64 << (m - 1))
        .map(|mid| 1 | (mid << 1) | (1 << m))
        .collect())
}

/// For each candidate, how many codewords in `class` have an input
/// polynomial divisible by it.
fn count_kills(class: &[PathCandidate], candidates: &[u64]) -> Vec<u64> {
    let tally = |chunk: &[PathCandidate]| {
        let mut local = vec![0u64; candidates.len()];
        for c in chunk {
            let words = c.input_bits.words();
            let nbits = c.input_bits.len();
            for (slot, &e) in local.iter_mut().zip(candidates) {
                if rem_words_small(words, nbits, e) == 0 {
                    *slot += 1;
                }
            }
        }
        local
    };
    if class.len() * candidates.len() < 1 << 14 {
        tally(class)
    } else {
        class
            .par_chunks(512)
            .map(tally)
            .reduce(
                || vec![0u64; candidates.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            )
    }
}

/// Independent confirmation that a winner really divides some codeword of
/// the final class, using the generic polynomial arithmetic rather than the
/// word-level fast path.
fn verify_witness(winner: u64, class: &[PathCandidate]) -> bool {
    let divisor = Gf2Poly::from_u64(winner);
    class
        .iter()
        .any(|c| divides(&divisor, &c.input_bits.to_poly()))
}

/// Finds the optimal degree-`m` expurgating polynomials for the inner code
/// over `input_len` free input bits. Codewords are examined up to
/// `weight_limit`; if that limit is reached with more than one possible
/// outcome still open, the search fails with
/// [`Error::SieveInconclusive`].
pub fn sieve_search(
    conv: &ConvCode,
    input_len: usize,
    m: usize,
    weight_limit: usize,
    mode: Mode,
    pattern: Option<&PuncturePattern>,
) -> Result<SieveResult> {
    let mut survivors = candidate_set(m)?;
    let mut enumerator = CodewordEnumerator::new(conv, input_len, mode, pattern, weight_limit)?;
    let mut survivors_by_weight = BTreeMap::new();
    while let Some((w, class)) = enumerator.next_class() {
        let kills = count_kills(&class, &survivors);
        if kills.iter().all(|&k| k > 0) {
            let a_min = *kills.iter().min().unwrap();
            let mut winners = Vec::new();
            for (&bits, &k) in survivors.iter().zip(&kills) {
                if k != a_min {
                    continue;
                }
                if !verify_witness(bits, &class) {
                    return Err(Error::InvalidElf(format!(
                        "witness re-verification failed for candidate {bits:#x}"
                    )));
                }
                winners.push((ElfCode::new(Gf2Poly::from_u64(bits))?, w, a_min));
            }
            return Ok(SieveResult {
                m,
                winners,
                survivors_by_weight,
                w_star: w,
            });
        }
        survivors = survivors
            .iter()
            .zip(&kills)
            .filter(|(_, &k)| k == 0)
            .map(|(&e, _)| e)
            .collect();
        survivors_by_weight.insert(w, survivors.clone());
    }
    Err(Error::SieveInconclusive {
        survivors: survivors.len(),
        limit: weight_limit,
    })
}

/// Truncated weight spectrum of the code expurgated by `elf`: counts the
/// inner codewords of weight `<= weight_limit` whose input polynomial the
/// ELF divides. Exact per weight because the enumeration is exhaustive up
/// to the limit.
pub fn expurgated_spectrum(
    conv: &ConvCode,
    input_len: usize,
    elf: &ElfCode,
    weight_limit: usize,
    mode: Mode,
    pattern: Option<&PuncturePattern>,
) -> Result<TruncatedWef> {
    let mut out = expurgated_spectra(
        conv,
        input_len,
        std::slice::from_ref(elf),
        weight_limit,
        mode,
        pattern,
    )?;
    Ok(out.pop().unwrap())
}

/// [`expurgated_spectrum`] for several ELFs over a single enumeration pass;
/// results line up with `elfs`.
pub fn expurgated_spectra(
    conv: &ConvCode,
    input_len: usize,
    elfs: &[ElfCode],
    weight_limit: usize,
    mode: Mode,
    pattern: Option<&PuncturePattern>,
) -> Result<Vec<TruncatedWef>> {
    if elfs.is_empty() {
        return Ok(Vec::new());
    }
    let divisors: Vec<u64> = elfs.iter().map(|e| e.bits()).collect();
    let mut counts = vec![vec![0u64; weight_limit + 1]; elfs.len()];
    let mut enumerator = CodewordEnumerator::new(conv, input_len, mode, pattern, weight_limit)?;
    while let Some((w, class)) = enumerator.next_class() {
        let per_elf: Vec<u64> = divisors
            .par_iter()
            .map(|&e| {
                if e == 1 {
                    return class.len() as u64;
                }
                class
                    .iter()
                    .filter(|c| rem_words_small(c.input_bits.words(), c.input_bits.len(), e) == 0)
                    .count() as u64
            })
            .collect();
        for (row, k) in counts.iter_mut().zip(per_elf) {
            row[w] += k;
        }
    }
    Ok(counts
        .into_iter()
        .map(|row| {
            TruncatedWef::new(
                weight_limit,
                row.into_iter().map(BigUint::from).collect(),
            )
        })
        .collect())
}
