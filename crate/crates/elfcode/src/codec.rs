//! Encoders and code descriptions.
//!
//! A concatenated code is built from three layers:
//!
//! 1. [`ElfCode::append`] extends a `K`-bit message with `m` parity bits so
//!    that the resulting input sequence, read as a polynomial (stage index =
//!    degree), is divisible by the ELF `E(x)`.
//! 2. [`ConvCode`] encodes the input sequence with a rate `1/n` feedforward
//!    convolutional code, either zero-terminated ([`Mode::Zt`], `nu` flush
//!    zeros appended) or tail-biting ([`Mode::Tb`], the encoder starts and
//!    ends in the state given by the last `nu` input bits).
//! 3. An optional [`PuncturePattern`] deletes one output bit per marked
//!    stage.
//!
//! Bits are `u8` values in `{0, 1}`. Output order is stage-major: the `n`
//! outputs of stage `t` appear before those of stage `t + 1`, and within a
//! stage position `j` is the output of generator `j` (0-based; a puncture
//! index `p` deletes position `p - 1`).

use crate::gf2poly::{parse_poly, BitSeq, Gf2Poly, PolyFormat};
use crate::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Termination mode of the convolutional layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Zero-terminated: the encoder starts in state 0 and `nu` zero flush
    /// bits drive it back to state 0.
    Zt,
    /// Tail-biting: the encoder starts in the state formed by the last `nu`
    /// input bits, so the path starts and ends in the same state.
    Tb,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Zt => "zt",
            Mode::Tb => "tb",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zt" => Ok(Mode::Zt),
            "tb" => Ok(Mode::Tb),
            other => Err(Error::Parse {
                text: other.into(),
                format: "mode",
                reason: "expected \"zt\" or \"tb\"".into(),
            }),
        }
    }
}

/// A rate `1/n` feedforward convolutional code with memory `nu`.
///
/// State bit `j` holds the input bit delayed by `j + 1` stages, so the state
/// transition on input `b` is `s' = ((s << 1) | b) & (2^nu - 1)`. With the
/// stage window `w = (s << 1) | b` (bit 0 = current input, bit `k` = input
/// `k` stages ago), output `j` is `parity(w & g_j)`.
#[derive(Clone, Debug)]
pub struct ConvCode {
    generators: Vec<Gf2Poly>,
    taps: Vec<u64>,
    nu: usize,
    n: usize,
}

impl ConvCode {
    /// Builds a code from generator polynomials; `nu` is the maximum degree.
    pub fn new(generators: Vec<Gf2Poly>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidCode("no generator polynomials".into()));
        }
        let nu = generators
            .iter()
            .map(|g| g.degree().unwrap_or(0))
            .max()
            .unwrap();
        if generators.iter().any(|g| g.is_zero()) {
            return Err(Error::InvalidCode("zero generator polynomial".into()));
        }
        if nu == 0 {
            return Err(Error::InvalidCode(
                "memoryless code: some generator must have degree >= 1".into(),
            ));
        }
        if nu > 24 {
            return Err(Error::Unsupported(format!(
                "memory nu = {nu} exceeds the supported maximum of 24"
            )));
        }
        let taps = generators.iter().map(|g| g.low_u64()).collect();
        let n = generators.len();
        Ok(ConvCode {
            generators,
            taps,
            nu,
            n,
        })
    }

    /// Builds a code from octal generator strings, e.g. `["561", "753"]`.
    pub fn from_octal(gens: &[&str]) -> Result<Self> {
        let gens = gens
            .iter()
            .map(|g| parse_poly(g, PolyFormat::OctalGenerator))
            .collect::<Result<Vec<_>>>()?;
        ConvCode::new(gens)
    }

    /// Outputs per stage.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Encoder memory (trellis has `2^nu` states).
    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn generators(&self) -> &[Gf2Poly] {
        &self.generators
    }

    pub fn state_count(&self) -> usize {
        1 << self.nu
    }

    #[inline]
    pub fn next_state(&self, state: u32, bit: u8) -> u32 {
        ((state << 1) | bit as u32) & ((1u32 << self.nu) - 1)
    }

    /// The `n` output bits of one stage, packed with generator `j` at bit `j`.
    #[inline]
    pub fn output_mask(&self, state: u32, bit: u8) -> u32 {
        let window = ((state as u64) << 1) | bit as u64;
        let mut mask = 0u32;
        for (j, &g) in self.taps.iter().enumerate() {
            mask |= (((window & g).count_ones() & 1) as u32) << j;
        }
        mask
    }

    #[inline]
    pub fn stage_weight(&self, state: u32, bit: u8) -> u32 {
        self.output_mask(state, bit).count_ones()
    }

    /// The tail-biting start state for an input sequence: its last `nu` bits,
    /// with the most recent bit in state bit 0.
    pub fn tb_start_state(&self, u: &[u8]) -> Result<u32> {
        if u.len() < self.nu {
            return Err(Error::TailBitingTooShort {
                nu: self.nu,
                len: u.len(),
            });
        }
        let mut s = 0u32;
        for j in 0..self.nu {
            s |= (u[u.len() - 1 - j] as u32) << j;
        }
        Ok(s)
    }

    /// Encodes an input sequence. ZT output has `n * (len + nu)` bits, TB
    /// output `n * len` bits.
    pub fn encode(&self, u: &[u8], mode: Mode) -> Result<Vec<u8>> {
        let mut state = match mode {
            Mode::Zt => 0,
            Mode::Tb => self.tb_start_state(u)?,
        };
        let flush = match mode {
            Mode::Zt => self.nu,
            Mode::Tb => 0,
        };
        let mut out = Vec::with_capacity(self.n * (u.len() + flush));
        for t in 0..u.len() + flush {
            let b = if t < u.len() { u[t] } else { 0 };
            let mask = self.output_mask(state, b);
            for j in 0..self.n {
                out.push(((mask >> j) & 1) as u8);
            }
            state = self.next_state(state, b);
        }
        Ok(out)
    }
}

/// Convolutional encoding of an input sequence (free-function form of
/// [`ConvCode::encode`]).
pub fn conv_encode(u: &[u8], code: &ConvCode, mode: Mode) -> Result<Vec<u8>> {
    code.encode(u, mode)
}

/// An expurgating linear function: a degree-`m` polynomial `E(x)` with unit
/// constant term. `m = 0` (`E = 1`) is the identity ELF (no expurgation).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElfCode {
    poly: Gf2Poly,
    m: usize,
}

impl ElfCode {
    pub fn new(poly: Gf2Poly) -> Result<Self> {
        if !poly.coeff(0) {
            return Err(Error::InvalidElf(format!(
                "{poly} has no unit constant term"
            )));
        }
        let m = poly.degree().unwrap();
        if m > 63 {
            return Err(Error::Unsupported(format!(
                "ELF degree m = {m} exceeds the supported maximum of 63"
            )));
        }
        Ok(ElfCode { poly, m })
    }

    /// Like [`ElfCode::new`] but checks the polynomial against a declared
    /// degree (the `m` of a sieve row or CLI flag).
    pub fn with_degree(poly: Gf2Poly, m: usize) -> Result<Self> {
        let elf = ElfCode::new(poly)?;
        if elf.m != m {
            return Err(Error::InvalidElf(format!(
                "{} has degree {}, expected m = {m}",
                elf.poly, elf.m
            )));
        }
        Ok(elf)
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        ElfCode::new(parse_poly(text, PolyFormat::HexElf)?)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn poly(&self) -> &Gf2Poly {
        &self.poly
    }

    /// The ELF polynomial as a bit mask (bit `i` = coefficient of `x^i`).
    pub fn bits(&self) -> u64 {
        self.poly.low_u64()
    }

    /// One step of the multiply-by-`x^{-1}` division register. The register
    /// state after feeding bits `u_0 .. u_{t-1}` is `(sum u_i x^i) * x^{-t}
    /// mod E(x)`, so a sequence returns the all-zero register to zero exactly
    /// when its polynomial is divisible by `E(x)`.
    #[inline]
    pub fn register_step(&self, state: u64, bit: u8) -> u64 {
        let mut t = state ^ bit as u64;
        if t & 1 == 1 {
            t ^= self.bits();
        }
        t >> 1
    }

    /// Appends `m` parity bits to the message. The result is systematic
    /// (message bits first) and its polynomial `u(x) = msg(x) + x^K sigma(x)`
    /// is divisible by `E(x)`, where `sigma = msg(x) x^{-K} mod E(x)` is the
    /// register state after the message bits.
    pub fn append(&self, msg: &[u8]) -> Vec<u8> {
        let mut u = Vec::with_capacity(msg.len() + self.m);
        let mut state = 0u64;
        for &b in msg {
            u.push(b);
            state = self.register_step(state, b);
        }
        for j in 0..self.m {
            u.push(((state >> j) & 1) as u8);
        }
        u
    }

    /// Whether an input sequence belongs to the ELF code (its polynomial is
    /// divisible by `E(x)`).
    pub fn is_member(&self, u: &[u8]) -> bool {
        let seq = BitSeq::from_bits(u);
        crate::gf2poly::divides(&self.poly, &seq.to_poly())
    }
}

/// ELF parity append (free-function form of [`ElfCode::append`]).
pub fn elf_append(msg: &[u8], elf: &ElfCode) -> Vec<u8> {
    elf.append(msg)
}

/// A periodic puncturing pattern. Entry `t mod q` gives the puncture index
/// for stage `t`: `0` keeps all `n` outputs, `p in 1..=n` deletes the output
/// of generator `p` (1-based) at that stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuncturePattern {
    indices: Vec<u8>,
}

impl PuncturePattern {
    pub fn new(indices: Vec<u8>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidPattern("empty pattern".into()));
        }
        Ok(PuncturePattern { indices })
    }

    /// Pattern period `q`.
    pub fn period(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    /// Expands the pattern over `stages` stages for a code with `n` outputs
    /// per stage. A short pattern repeats periodically; if the period does
    /// not divide `stages` (or the pattern is longer than `stages`) the final
    /// repetition is truncated and a warning is logged.
    pub fn expand(&self, stages: usize, n: usize) -> Result<Vec<u8>> {
        if let Some(&bad) = self.indices.iter().find(|&&p| p as usize > n) {
            return Err(Error::InvalidPattern(format!(
                "puncture index {bad} exceeds the number of outputs n = {n}"
            )));
        }
        if stages % self.period() != 0 {
            log::warn!(
                "puncture pattern of period {} does not divide {} stages; truncating the final repetition",
                self.period(),
                stages
            );
        }
        Ok((0..stages).map(|t| self.indices[t % self.period()]).collect())
    }

    /// Number of bits deleted over `stages` stages.
    pub fn punctured_bits(&self, stages: usize) -> usize {
        (0..stages)
            .filter(|&t| self.indices[t % self.period()] != 0)
            .count()
    }
}

/// Deletes punctured output bits from a stage-major codeword. `per_stage`
/// must hold one puncture index per stage (see [`PuncturePattern::expand`]).
pub fn puncture_apply(codeword: &[u8], n: usize, per_stage: &[u8]) -> Result<Vec<u8>> {
    if codeword.len() != n * per_stage.len() {
        return Err(Error::LengthMismatch {
            context: "puncture_apply codeword",
            expected: n * per_stage.len(),
            actual: codeword.len(),
        });
    }
    let mut out = Vec::with_capacity(codeword.len());
    for (t, &p) in per_stage.iter().enumerate() {
        for j in 0..n {
            if p as usize != j + 1 {
                out.push(codeword[t * n + j]);
            }
        }
    }
    Ok(out)
}

/// A complete concatenated code: ELF, convolutional layer, termination mode
/// and optional puncturing, for `k`-bit messages.
#[derive(Clone, Debug)]
pub struct ConcatSpec {
    pub conv: ConvCode,
    pub elf: ElfCode,
    pub k: usize,
    pub mode: Mode,
    pub puncture: Option<PuncturePattern>,
}

impl ConcatSpec {
    pub fn new(
        conv: ConvCode,
        elf: ElfCode,
        k: usize,
        mode: Mode,
        puncture: Option<PuncturePattern>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidCode("message length k must be >= 1".into()));
        }
        let spec = ConcatSpec {
            conv,
            elf,
            k,
            mode,
            puncture,
        };
        if spec.mode == Mode::Tb && spec.input_len() < spec.conv.nu() {
            return Err(Error::TailBitingTooShort {
                nu: spec.conv.nu(),
                len: spec.input_len(),
            });
        }
        if let Some(p) = &spec.puncture {
            // validate indices against n eagerly
            p.expand(spec.trellis_stages(), spec.conv.n())?;
        }
        Ok(spec)
    }

    /// Input bits entering the convolutional encoder: `k + m`.
    pub fn input_len(&self) -> usize {
        self.k + self.elf.m()
    }

    /// Trellis stages: `k + m`, plus `nu` flush stages in ZT mode.
    pub fn trellis_stages(&self) -> usize {
        self.input_len()
            + match self.mode {
                Mode::Zt => self.conv.nu(),
                Mode::Tb => 0,
            }
    }

    /// Per-stage puncture indices over the full trellis (all zero if
    /// unpunctured).
    pub fn per_stage_puncture(&self) -> Result<Vec<u8>> {
        match &self.puncture {
            Some(p) => p.expand(self.trellis_stages(), self.conv.n()),
            None => Ok(vec![0; self.trellis_stages()]),
        }
    }

    /// Blocklength after puncturing.
    pub fn blocklength(&self) -> usize {
        let gross = self.conv.n() * self.trellis_stages();
        match &self.puncture {
            Some(p) => gross - p.punctured_bits(self.trellis_stages()),
            None => gross,
        }
    }

    /// Code rate `k / N`.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.blocklength() as f64
    }

    /// Full encode: ELF append, convolutional encode, puncture.
    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.k {
            return Err(Error::LengthMismatch {
                context: "concat_encode message",
                expected: self.k,
                actual: msg.len(),
            });
        }
        let u = self.elf.append(msg);
        let cw = self.conv.encode(&u, self.mode)?;
        match &self.puncture {
            Some(p) => puncture_apply(&cw, self.conv.n(), &p.expand(self.trellis_stages(), self.conv.n())?),
            None => Ok(cw),
        }
    }
}

/// Full concatenated encode (free-function form of [`ConcatSpec::encode`]).
pub fn concat_encode(msg: &[u8], spec: &ConcatSpec) -> Result<Vec<u8>> {
    spec.encode(msg)
}
