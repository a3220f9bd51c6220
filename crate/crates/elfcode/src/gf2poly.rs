//! Polynomials over GF(2) and the parsing conventions for code polynomials.
//!
//! Coefficients are packed LSB-first: bit `i` (of limb `i / 64`) holds the
//! coefficient of `x^i`. Two textual conventions are supported:
//!
//! - **Octal generators**: `"561"` denotes `0o561 = 0b101110001`, i.e.
//!   `1 + x^4 + x^5 + x^6 + x^8`.
//! - **Hex ELFs**: `"0xF"` denotes `x^3 + x^2 + x + 1`. A valid ELF has a
//!   unit constant term, so an even hex value is rejected at parse time.
//!
//! The zero polynomial has no degree ([`Gf2Poly::degree`] returns `None`).

use crate::{Error, Result};
use smallvec::SmallVec;
use std::fmt;

/// A binary polynomial with LSB-first packed coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gf2Poly {
    /// Invariant: no trailing zero limbs (the zero polynomial is empty).
    limbs: Vec<u64>,
}

/// Textual conventions accepted by [`parse_poly`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyFormat {
    /// Octal digits, e.g. `"561"`; used for convolutional generators.
    OctalGenerator,
    /// Hex digits with optional `0x` prefix, e.g. `"0x1565"`; used for ELFs.
    /// The value must be odd (unit constant term).
    HexElf,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { limbs: Vec::new() }
    }

    pub fn one() -> Self {
        Gf2Poly { limbs: vec![1] }
    }

    /// Polynomial whose coefficient bits are the bits of `v`.
    pub fn from_u64(v: u64) -> Self {
        let mut p = Gf2Poly { limbs: vec![v] };
        p.normalize();
        p
    }

    /// Polynomial from LSB-first limbs.
    pub fn from_limbs(limbs: Vec<u64>) -> Self {
        let mut p = Gf2Poly { limbs };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let last = *self.limbs.last()?;
        Some((self.limbs.len() - 1) * 64 + (63 - last.leading_zeros() as usize))
    }

    /// Coefficient of `x^i`.
    pub fn coeff(&self, i: usize) -> bool {
        self.limbs
            .get(i / 64)
            .is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    pub fn set_coeff(&mut self, i: usize, value: bool) {
        let limb = i / 64;
        if value {
            if self.limbs.len() <= limb {
                self.limbs.resize(limb + 1, 0);
            }
            self.limbs[limb] |= 1 << (i % 64);
        } else if limb < self.limbs.len() {
            self.limbs[limb] &= !(1 << (i % 64));
            self.normalize();
        }
    }

    /// The value of the low 64 coefficient bits.
    pub fn low_u64(&self) -> u64 {
        self.limbs.first().copied().unwrap_or(0)
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    /// Multiplication by `x^k`.
    pub fn shl(&self, k: usize) -> Self {
        if self.is_zero() {
            return Gf2Poly::zero();
        }
        let (words, bits) = (k / 64, k % 64);
        let mut limbs = vec![0u64; self.limbs.len() + words + 1];
        for (i, &w) in self.limbs.iter().enumerate() {
            limbs[i + words] |= w << bits;
            if bits > 0 {
                limbs[i + words + 1] |= w >> (64 - bits);
            }
        }
        Gf2Poly::from_limbs(limbs)
    }

    fn xor_assign(&mut self, other: &Gf2Poly) {
        if self.limbs.len() < other.limbs.len() {
            self.limbs.resize(other.limbs.len(), 0);
        }
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a ^= b;
        }
        self.normalize();
    }

    /// XOR `other << shift` into `self` (carry-less shifted add).
    fn xor_shifted(&mut self, other: &Gf2Poly, shift: usize) {
        let (words, bits) = (shift / 64, shift % 64);
        let need = other.limbs.len() + words + 1;
        if self.limbs.len() < need {
            self.limbs.resize(need, 0);
        }
        for (i, &w) in other.limbs.iter().enumerate() {
            self.limbs[i + words] ^= w << bits;
            if bits > 0 {
                self.limbs[i + words + 1] ^= w >> (64 - bits);
            }
        }
        self.normalize();
    }

    /// Carry-less product.
    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        let (short, long) = if self.limbs.len() <= other.limbs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = Gf2Poly::zero();
        for (li, &word) in short.limbs.iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let bit = w.trailing_zeros() as usize;
                acc.xor_shifted(long, li * 64 + bit);
                w &= w - 1;
            }
        }
        acc
    }

    /// Quotient and remainder; fails on a zero divisor.
    pub fn divmod(&self, divisor: &Gf2Poly) -> Result<(Gf2Poly, Gf2Poly)> {
        let dd = divisor.degree().ok_or(Error::DivisionByZero)?;
        let mut rem = self.clone();
        let mut quot = Gf2Poly::zero();
        while let Some(dr) = rem.degree() {
            if dr < dd {
                break;
            }
            let shift = dr - dd;
            quot.set_coeff(shift, true);
            rem.xor_shifted(divisor, shift);
        }
        Ok((quot, rem))
    }

    /// Whether `divisor` divides `self` exactly. The zero polynomial is
    /// divisible by everything nonzero.
    pub fn divisible_by(&self, divisor: &Gf2Poly) -> bool {
        match self.divmod(divisor) {
            Ok((_, r)) => r.is_zero(),
            Err(_) => false,
        }
    }

    /// Bit-reversal over `n` coefficient positions (reciprocal polynomial
    /// when `n = degree + 1`).
    pub fn reverse(&self, n: usize) -> Gf2Poly {
        let mut out = Gf2Poly::zero();
        for i in 0..n {
            if self.coeff(i) {
                out.set_coeff(n - 1 - i, true);
            }
        }
        out
    }

    pub fn to_octal_string(&self) -> String {
        to_radix_string(&self.limbs, 3)
    }

    pub fn to_hex_string(&self) -> String {
        format!("0x{}", to_radix_string(&self.limbs, 4))
    }
}

/// `divisor | value`, the divisibility predicate used by the sieve and the
/// decoder acceptance check.
pub fn divides(divisor: &Gf2Poly, value: &Gf2Poly) -> bool {
    value.divisible_by(divisor)
}

fn to_radix_string(limbs: &[u64], bits_per_digit: usize) -> String {
    let total_bits = match limbs.last() {
        None => return "0".into(),
        Some(last) => (limbs.len() - 1) * 64 + (64 - last.leading_zeros() as usize),
    };
    let ndigits = total_bits.div_ceil(bits_per_digit);
    let mut s = String::with_capacity(ndigits);
    for d in (0..ndigits).rev() {
        let lo = d * bits_per_digit;
        let mut v = 0u32;
        for b in 0..bits_per_digit {
            let i = lo + b;
            if i < total_bits && (limbs[i / 64] >> (i % 64)) & 1 == 1 {
                v |= 1 << b;
            }
        }
        s.push(char::from_digit(v, 16).unwrap().to_ascii_uppercase());
    }
    s
}

/// Parse a polynomial under one of the two supported conventions.
pub fn parse_poly(text: &str, format: PolyFormat) -> Result<Gf2Poly> {
    let (digits, radix_bits, name) = match format {
        PolyFormat::OctalGenerator => (text, 3, "octal generator"),
        PolyFormat::HexElf => (
            text.strip_prefix("0x").or(text.strip_prefix("0X")).unwrap_or(text),
            4,
            "hex ELF",
        ),
    };
    let err = |reason: &str| Error::Parse {
        text: text.into(),
        format: name,
        reason: reason.into(),
    };
    if digits.is_empty() {
        return Err(err("empty digit string"));
    }
    let mut limbs = vec![0u64; (digits.len() * radix_bits).div_ceil(64) + 1];
    let mut pos = 0;
    for c in digits.chars().rev() {
        let v = c
            .to_digit(1 << radix_bits)
            .ok_or_else(|| err(&format!("invalid digit {c:?}")))?;
        limbs[pos / 64] |= (v as u64) << (pos % 64);
        if pos % 64 + radix_bits > 64 {
            limbs[pos / 64 + 1] |= (v as u64) >> (64 - pos % 64);
        }
        pos += radix_bits;
    }
    let poly = Gf2Poly::from_limbs(limbs);
    if format == PolyFormat::HexElf && !poly.coeff(0) {
        return Err(err("even value: an ELF needs a unit constant term"));
    }
    Ok(poly)
}

impl fmt::Display for Gf2Poly {
    /// Algebraic form in descending powers, e.g. `x^8 + x^6 + x^5 + x^4 + 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(deg) = self.degree() else {
            return write!(f, "0");
        };
        let mut first = true;
        for i in (0..=deg).rev() {
            if !self.coeff(i) {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "1")?,
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Poly({self})")
    }
}

impl std::ops::Add for &Gf2Poly {
    type Output = Gf2Poly;
    fn add(self, rhs: &Gf2Poly) -> Gf2Poly {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

/// A fixed-length bit sequence in trellis stage order. Bit `t` is the input
/// at stage `t` and the coefficient of `x^t` of the associated polynomial,
/// so the packed words coincide with [`Gf2Poly`] limbs.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitSeq {
    words: SmallVec<[u64; 3]>,
    len: usize,
}

impl BitSeq {
    /// All-zero sequence of the given length.
    pub fn new(len: usize) -> Self {
        BitSeq {
            words: smallvec::smallvec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut s = BitSeq::new(bits.len());
        for (t, &b) in bits.iter().enumerate() {
            s.set(t, b != 0);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, t: usize) -> bool {
        debug_assert!(t < self.len);
        (self.words[t / 64] >> (t % 64)) & 1 == 1
    }

    pub fn set(&mut self, t: usize, value: bool) {
        debug_assert!(t < self.len);
        if value {
            self.words[t / 64] |= 1 << (t % 64);
        } else {
            self.words[t / 64] &= !(1 << (t % 64));
        }
    }

    /// The `width` bits starting at `lo`, as an integer (`width <= 64`).
    pub fn window(&self, lo: usize, width: usize) -> u64 {
        debug_assert!(width <= 64 && lo + width <= self.len);
        if width == 0 {
            return 0;
        }
        let mut v = self.words[lo / 64] >> (lo % 64);
        if lo % 64 + width > 64 {
            v |= self.words[lo / 64 + 1] << (64 - lo % 64);
        }
        if width == 64 {
            v
        } else {
            v & ((1 << width) - 1)
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The associated polynomial (bit `t` is the coefficient of `x^t`).
    pub fn to_poly(&self) -> Gf2Poly {
        Gf2Poly::from_limbs(self.words.to_vec())
    }

    pub fn to_bit_vec(&self) -> Vec<u8> {
        (0..self.len).map(|t| self.get(t) as u8).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|t| self.get(t))
    }
}

/// Remainder of a packed bit sequence modulo a small polynomial (`degree
/// >= 1`, fits in a `u64` with its leading bit). This is plain long division
/// from the top coefficient; it is the hot path of the sieve.
pub(crate) fn rem_words_small(words: &[u64], nbits: usize, divisor: u64) -> u64 {
    debug_assert!(divisor > 1);
    let dd = 63 - divisor.leading_zeros();
    let mut r = 0u64;
    for t in (0..nbits).rev() {
        let bit = (words[t / 64] >> (t % 64)) & 1;
        r = (r << 1) | bit;
        if (r >> dd) & 1 == 1 {
            r ^= divisor;
        }
    }
    r
}
