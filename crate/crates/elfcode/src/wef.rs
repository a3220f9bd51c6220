//! Transfer-matrix weight enumerators and distance-spectrum union bounds.
//!
//! The combined encoder state of a concatenated code is `s = s_C + 2^nu *
//! s_E`, where `s_C` is the convolutional shift register and `s_E` the ELF
//! division register. Per input bit the state moves along one of two edges
//! whose weight is the Hamming weight of the stage's (possibly punctured)
//! outputs. Weight enumerators are computed by propagating a vector of
//! truncated weight polynomials through this transition system, one stage at
//! a time; the `2^(nu+m) x 2^(nu+m)` matrix itself is never materialized.
//!
//! Zero-terminated enumerators propagate from combined state 0 back to 0
//! over `K + m + nu` stages (ending in `s_C = 0` forces the flush zeros).
//! Tail-biting enumerators sum the diagonal over all start states with
//! `s_E = 0` over `K + m` stages. Both subtract the all-zeros path.
//!
//! Exact counts use 64-bit counters with checked arithmetic and rerun with
//! arbitrary-precision integers if a counter overflows.

use crate::codec::{ConcatSpec, ConvCode, ElfCode, Mode, PuncturePattern};
use crate::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

/// Maximum `nu + m` for transition-system construction; beyond this the
/// state space is too large for vector propagation and the enumeration
/// engine should be used instead.
const MAX_STATE_BITS: usize = 24;

/// Per-buffer memory cap for propagation (64-bit counter path).
const MAX_BUFFER_BYTES: u128 = 4 << 30;

/// State-count threshold separating "parallelize over start states" (small
/// systems) from "parallelize within each stage" (large systems).
const OUTER_PARALLEL_MAX_STATES: usize = 1 << 16;

/// AWGN channel operating point for BPSK with `E_s = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    ebn0_db: f64,
    rate: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::Unsupported(format!(
                "code rate must lie in (0, 1], got {rate}"
            )));
        }
        if !ebn0_db.is_finite() {
            return Err(Error::Unsupported(format!(
                "E_b/N_0 must be finite, got {ebn0_db}"
            )));
        }
        Ok(ChannelParams { ebn0_db, rate })
    }

    pub fn ebn0_db(&self) -> f64 {
        self.ebn0_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `E_s / sigma^2 = 2 * rate * 10^(ebn0_db / 10)`.
    pub fn es_over_sigma2(&self) -> f64 {
        2.0 * self.rate * 10f64.powf(self.ebn0_db / 10.0)
    }

    /// Noise variance per channel use (with `E_s = 1`).
    pub fn sigma2(&self) -> f64 {
        1.0 / self.es_over_sigma2()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2().sqrt()
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// A weight spectrum truncated at `wmax`: `counts[w] = A_w` for
/// `w = 0..=wmax`, exact. Counts below `wmax` are unaffected by the choice
/// of `wmax` (stage weights are nonnegative, so truncation never corrupts
/// lower coefficients). `A_0` stores whatever remains at weight zero after
/// removing the all-zeros codeword; it is zero for non-catastrophic codes
/// and is excluded from all bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedWef {
    wmax: usize,
    counts: Vec<BigUint>,
}

impl TruncatedWef {
    pub fn new(wmax: usize, counts: Vec<BigUint>) -> Self {
        assert_eq!(counts.len(), wmax + 1, "counts must cover w = 0..=wmax");
        TruncatedWef { wmax, counts }
    }

    pub fn wmax(&self) -> usize {
        self.wmax
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// `A_w`; panics if `w > wmax`.
    pub fn count(&self, w: usize) -> &BigUint {
        &self.counts[w]
    }

    /// `A_w` as `u64` when it fits.
    pub fn count_u64(&self, w: usize) -> Option<u64> {
        self.counts[w].to_u64()
    }

    /// Smallest `w >= 1` with `A_w > 0`, if any within the truncation.
    pub fn d_min(&self) -> Option<usize> {
        (1..=self.wmax).find(|&w| !self.counts[w].is_zero())
    }

    /// `sum A_w` over `w >= 1`.
    pub fn total(&self) -> BigUint {
        self.counts[1..].iter().sum()
    }

    /// Truncated enumerator value `sum_{w >= 1} A_w x^w`.
    pub fn eval(&self, x: f64) -> f64 {
        self.counts
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, a)| !a.is_zero())
            .map(|(w, a)| a.to_f64().unwrap_or(f64::INFINITY) * x.powi(w as i32))
            .sum()
    }

    /// `(w, A_w)` for the nonzero coefficients with `w >= 1`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &BigUint)> {
        self.counts
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, a)| !a.is_zero())
    }
}

/// The per-stage transition system of a concatenated code: convolutional
/// part, ELF division-register part, and stage weights adjusted for a single
/// puncture index. Combined states are indexed `s = s_C + 2^nu * s_E`.
#[derive(Clone, Debug)]
pub struct TransitionSystem {
    conv_state_bits: usize,
    elf_state_bits: usize,
    outputs: usize,
    pattern_index: u8,
    /// Indexed `(s_C << 1) | b`.
    conv_next: Vec<u32>,
    /// Unpunctured output bits, indexed `(s_C << 1) | b`.
    out_mask: Vec<u32>,
    /// Puncture-adjusted stage weight, indexed `(s_C << 1) | b`.
    weight: Vec<u8>,
    /// Indexed `(s_E << 1) | b`.
    elf_next: Vec<u32>,
    /// Inverse of `elf_next` per input bit: `elf_prev[(s' << 1) | b]` is the
    /// unique `s` with `elf_next[(s << 1) | b] = s'` (the register step is a
    /// bijection for each bit value).
    elf_prev: Vec<u32>,
}

/// Builds the transition system for a convolutional code, an optional ELF,
/// and a puncture index `p in 0..=n` (`0` = no puncturing; `p` deletes the
/// output of generator `p` at every stage, reducing affected edge weights by
/// one).
pub fn build_transition(
    conv: &ConvCode,
    elf: Option<&ElfCode>,
    pattern_index: u8,
) -> Result<TransitionSystem> {
    let n = conv.n();
    if pattern_index as usize > n {
        return Err(Error::InvalidPattern(format!(
            "puncture index {pattern_index} exceeds the number of outputs n = {n}"
        )));
    }
    let nu = conv.nu();
    let m = elf.map_or(0, |e| e.m());
    if nu + m > MAX_STATE_BITS {
        return Err(Error::Unsupported(format!(
            "combined state space of 2^{} exceeds 2^{MAX_STATE_BITS}; use the enumeration engine",
            nu + m
        )));
    }
    let mut conv_next = vec![0u32; 2 << nu];
    let mut out_mask = vec![0u32; 2 << nu];
    let mut weight = vec![0u8; 2 << nu];
    for sc in 0..1u32 << nu {
        for b in 0..2u8 {
            let idx = ((sc as usize) << 1) | b as usize;
            let mask = conv.output_mask(sc, b);
            conv_next[idx] = conv.next_state(sc, b);
            out_mask[idx] = mask;
            let mut w = mask.count_ones() as u8;
            if pattern_index > 0 && (mask >> (pattern_index - 1)) & 1 == 1 {
                w -= 1;
            }
            weight[idx] = w;
        }
    }
    let mut elf_next = vec![0u32; 2 << m];
    let mut elf_prev = vec![0u32; 2 << m];
    for se in 0..1u64 << m {
        for b in 0..2u8 {
            let next = match elf {
                Some(e) => e.register_step(se, b) as u32,
                None => 0,
            };
            elf_next[((se as usize) << 1) | b as usize] = next;
            elf_prev[((next as usize) << 1) | b as usize] = se as u32;
        }
    }
    Ok(TransitionSystem {
        conv_state_bits: nu,
        elf_state_bits: m,
        outputs: n,
        pattern_index,
        conv_next,
        out_mask,
        weight,
        elf_next,
        elf_prev,
    })
}

impl TransitionSystem {
    pub fn state_count(&self) -> usize {
        1 << (self.conv_state_bits + self.elf_state_bits)
    }

    pub fn conv_state_bits(&self) -> usize {
        self.conv_state_bits
    }

    pub fn elf_state_bits(&self) -> usize {
        self.elf_state_bits
    }

    pub fn pattern_index(&self) -> u8 {
        self.pattern_index
    }

    /// The edge leaving combined state `s` on input `bit`: destination state
    /// and puncture-adjusted weight.
    pub fn edge(&self, s: u32, bit: u8) -> (u32, u8) {
        let nu = self.conv_state_bits;
        let sc = (s & ((1 << nu) - 1)) as usize;
        let se = (s >> nu) as usize;
        let dst_c = self.conv_next[(sc << 1) | bit as usize];
        let dst_e = self.elf_next[(se << 1) | bit as usize];
        (dst_c | (dst_e << nu), self.weight[(sc << 1) | bit as usize])
    }

    /// Unpunctured output bits of the stage leaving `s` on `bit` (generator
    /// `j` at bit `j`).
    pub fn output_mask(&self, s: u32, bit: u8) -> u32 {
        let sc = (s & ((1 << self.conv_state_bits) - 1)) as usize;
        self.out_mask[(sc << 1) | bit as usize]
    }
}

/// Exact counter for spectrum propagation.
trait Counter: Clone + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_nil(&self) -> bool;
    /// `self += other`; `false` on overflow.
    #[must_use]
    fn add_from(&mut self, other: &Self) -> bool;
    /// `self -= 1`; `false` on underflow.
    #[must_use]
    fn sub_one(&mut self) -> bool;
}

impl Counter for u64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn add_from(&mut self, other: &Self) -> bool {
        match self.checked_add(*other) {
            Some(v) => {
                *self = v;
                true
            }
            None => false,
        }
    }
    fn sub_one(&mut self) -> bool {
        match self.checked_sub(1) {
            Some(v) => {
                *self = v;
                true
            }
            None => false,
        }
    }
}

impl Counter for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_from(&mut self, other: &Self) -> bool {
        *self += other;
        true
    }
    fn sub_one(&mut self) -> bool {
        if Zero::is_zero(self) {
            false
        } else {
            *self -= 1u32;
            true
        }
    }
}

/// One stage of truncated-polynomial propagation in gather form: every
/// destination cell is rebuilt from its exactly two predecessor cells, so
/// destination rows (fixed `s_E`) are write-disjoint and the result is
/// independent of how rows are scheduled across threads.
fn step_counts<C: Counter>(
    ts: &TransitionSystem,
    wmax: usize,
    src: &[C],
    dst: &mut [C],
    parallel: bool,
) -> Result<()> {
    let nu = ts.conv_state_bits;
    let cw = wmax + 1;
    let row = (1usize << nu) * cw;
    let half = 1usize << (nu - 1);
    let gather = |se_dst: usize, drow: &mut [C]| -> Result<()> {
        let se_b0 = ts.elf_prev[se_dst << 1] as usize;
        let se_b1 = ts.elf_prev[(se_dst << 1) | 1] as usize;
        for sc_dst in 0..1usize << nu {
            let b = sc_dst & 1;
            let se_src = if b == 0 { se_b0 } else { se_b1 };
            let cell = &mut drow[sc_dst * cw..(sc_dst + 1) * cw];
            for x in cell.iter_mut() {
                *x = C::zero();
            }
            for top in 0..2usize {
                let sc_src = (sc_dst >> 1) | (top * half);
                let w = ts.weight[(sc_src << 1) | b] as usize;
                if w > wmax {
                    continue;
                }
                let sbase = ((se_src << nu) | sc_src) * cw;
                let scell = &src[sbase..sbase + cw];
                for j in 0..cw - w {
                    if scell[j].is_nil() {
                        continue;
                    }
                    if !cell[j + w].add_from(&scell[j]) {
                        return Err(Error::CountOverflow { weight: j + w });
                    }
                }
            }
        }
        Ok(())
    };
    if parallel {
        dst.par_chunks_mut(row)
            .enumerate()
            .try_for_each(|(se, drow)| gather(se, drow))
    } else {
        dst.chunks_mut(row)
            .enumerate()
            .try_for_each(|(se, drow)| gather(se, drow))
    }
}

/// Propagates a unit vector at `start` through the stage schedule and
/// returns the truncated weight polynomial accumulated at `end`.
fn propagate_counts<C: Counter>(
    schedule: &[&TransitionSystem],
    wmax: usize,
    start: usize,
    end: usize,
    parallel: bool,
    bufs: &mut (Vec<C>, Vec<C>),
) -> Result<Vec<C>> {
    let cw = wmax + 1;
    let (src, dst) = (&mut bufs.0, &mut bufs.1);
    for x in src.iter_mut() {
        *x = C::zero();
    }
    src[start * cw] = C::one();
    for ts in schedule {
        step_counts(ts, wmax, src, dst, parallel)?;
        std::mem::swap(src, dst);
    }
    Ok(src[end * cw..(end + 1) * cw].to_vec())
}

fn add_vec<C: Counter>(acc: &mut [C], v: &[C]) -> Result<()> {
    for (w, (a, b)) in acc.iter_mut().zip(v).enumerate() {
        if !a.add_from(b) {
            return Err(Error::CountOverflow { weight: w });
        }
    }
    Ok(())
}

/// Runs the full spectrum computation over a per-stage schedule. ZT uses the
/// single start/end state 0; TB sums the diagonal over all starts with
/// `s_E = 0`. The all-zeros path is subtracted from `A_0`.
fn run_schedule<C: Counter>(
    schedule: &[&TransitionSystem],
    mode: Mode,
    wmax: usize,
) -> Result<Vec<C>> {
    let ts0 = schedule
        .first()
        .ok_or_else(|| Error::Unsupported("empty stage schedule".into()))?;
    let states = ts0.state_count();
    let cw = wmax + 1;
    let bytes = (states * cw) as u128 * std::mem::size_of::<C>() as u128;
    if bytes > MAX_BUFFER_BYTES {
        return Err(Error::Unsupported(format!(
            "propagation buffer of {bytes} bytes exceeds the cap; lower wmax or use the enumeration engine"
        )));
    }
    debug_assert!(schedule
        .iter()
        .all(|ts| ts.state_count() == states && ts.conv_state_bits == ts0.conv_state_bits));

    let starts: Vec<usize> = match mode {
        Mode::Zt => vec![0],
        Mode::Tb => (0..1usize << ts0.conv_state_bits).collect(),
    };
    let mut total = vec![C::zero(); cw];
    if states <= OUTER_PARALLEL_MAX_STATES && starts.len() > 1 {
        let per_start: Vec<Vec<C>> = starts
            .par_iter()
            .map_init(
                || (vec![C::zero(); states * cw], vec![C::zero(); states * cw]),
                |bufs, &s| propagate_counts(schedule, wmax, s, s, false, bufs),
            )
            .collect::<Result<_>>()?;
        for v in &per_start {
            add_vec(&mut total, v)?;
        }
    } else {
        let parallel = states > OUTER_PARALLEL_MAX_STATES;
        let mut bufs = (vec![C::zero(); states * cw], vec![C::zero(); states * cw]);
        for &s in &starts {
            let v = propagate_counts(schedule, wmax, s, s, parallel, &mut bufs)?;
            add_vec(&mut total, &v)?;
        }
    }
    if !total[0].sub_one() {
        return Err(Error::Unsupported(
            "internal: all-zeros path missing from the spectrum".into(),
        ));
    }
    Ok(total)
}

/// 64-bit first, escalating to arbitrary precision on overflow.
fn spectrum_schedule(
    schedule: &[&TransitionSystem],
    mode: Mode,
    wmax: usize,
) -> Result<TruncatedWef> {
    let counts = match run_schedule::<u64>(schedule, mode, wmax) {
        Ok(c) => c.into_iter().map(BigUint::from).collect(),
        Err(Error::CountOverflow { weight }) => {
            log::info!("64-bit counter overflow at weight {weight}; rerunning with big integers");
            run_schedule::<BigUint>(schedule, mode, wmax)?
        }
        Err(e) => return Err(e),
    };
    Ok(TruncatedWef::new(wmax, counts))
}

fn elf_m(elf: Option<&ElfCode>) -> usize {
    elf.map_or(0, |e| e.m())
}

/// Weight enumerator of the zero-terminated code with `k` message bits (the
/// stage count is `k + m + nu`; ending in state 0 enforces the flush zeros
/// and the ELF constraint).
pub fn wef_zt(
    conv: &ConvCode,
    elf: Option<&ElfCode>,
    k: usize,
    wmax: usize,
) -> Result<TruncatedWef> {
    let ts = build_transition(conv, elf, 0)?;
    let stages = k + elf_m(elf) + conv.nu();
    spectrum_schedule(&vec![&ts; stages], Mode::Zt, wmax)
}

/// Weight enumerator of the tail-biting code with `k` message bits over
/// `k + m` stages.
pub fn wef_tb(
    conv: &ConvCode,
    elf: Option<&ElfCode>,
    k: usize,
    wmax: usize,
) -> Result<TruncatedWef> {
    let len = k + elf_m(elf);
    if len < conv.nu() {
        return Err(Error::TailBitingTooShort {
            nu: conv.nu(),
            len,
        });
    }
    let ts = build_transition(conv, elf, 0)?;
    spectrum_schedule(&vec![&ts; len], Mode::Tb, wmax)
}

/// Builds one transition system per distinct puncture index in `per_stage`
/// and the corresponding schedule of references.
fn punctured_systems(
    conv: &ConvCode,
    elf: Option<&ElfCode>,
    per_stage: &[u8],
) -> Result<Vec<Option<TransitionSystem>>> {
    let mut systems: Vec<Option<TransitionSystem>> = vec![None; conv.n() + 1];
    for &p in per_stage {
        if systems[p as usize].is_none() {
            systems[p as usize] = Some(build_transition(conv, elf, p)?);
        }
    }
    Ok(systems)
}

fn punctured_stage_count(conv: &ConvCode, elf: Option<&ElfCode>, k: usize, mode: Mode) -> usize {
    k + elf_m(elf)
        + match mode {
            Mode::Zt => conv.nu(),
            Mode::Tb => 0,
        }
}

/// Punctured weight enumerator via the general stage-by-stage product: one
/// transition application per stage with that stage's puncture index,
/// handling patterns whose period does not divide the stage count.
pub fn wef_punctured_stagewise(
    conv: &ConvCode,
    elf: Option<&ElfCode>,
    k: usize,
    mode: Mode,
    pattern: &PuncturePattern,
    wmax: usize,
) -> Result<TruncatedWef> {
    if mode == Mode::Tb && k + elf_m(elf) < conv.nu() {
        return Err(Error::TailBitingTooShort {
            nu: conv.nu(),
            len: k + elf_m(elf),
        });
    }
    let stages = punctured_stage_count(conv, elf, k, mode);
    let per_stage = pattern.expand(stages, conv.n())?;
    let systems = punctured_systems(conv, elf, &per_stage)?;
    let schedule: Vec<&TransitionSystem> = per_stage
        .iter()
        .map(|&p| systems[p as usize].as_ref().unwrap())
        .collect();
    spectrum_schedule(&schedule, mode, wmax)
}

/// Punctured weight enumerator. When the pattern period divides the stage
/// count, the per-period stage composition is built once and applied
/// `stages / q` times; otherwise this falls back to the general
/// stage-by-stage product.
pub fn wef_punctured(
    conv: &ConvCode,
    elf: Option<&ElfCode>,
    k: usize,
    mode: Mode,
    pattern: &PuncturePattern,
    wmax: usize,
) -> Result<TruncatedWef> {
    let stages = punctured_stage_count(conv, elf, k, mode);
    let q = pattern.period();
    if stages % q != 0 {
        return wef_punctured_stagewise(conv, elf, k, mode, pattern, wmax);
    }
    if mode == Mode::Tb && k + elf_m(elf) < conv.nu() {
        return Err(Error::TailBitingTooShort {
            nu: conv.nu(),
            len: k + elf_m(elf),
        });
    }
    let period = pattern.expand(q, conv.n())?;
    let systems = punctured_systems(conv, elf, &period)?;
    let period_schedule: Vec<&TransitionSystem> = period
        .iter()
        .map(|&p| systems[p as usize].as_ref().unwrap())
        .collect();
    let mut schedule = Vec::with_capacity(stages);
    for _ in 0..stages / q {
        schedule.extend_from_slice(&period_schedule);
    }
    spectrum_schedule(&schedule, mode, wmax)
}

/// Weight enumerator of a complete concatenated code description.
pub fn wef_for_spec(spec: &ConcatSpec, wmax: usize) -> Result<TruncatedWef> {
    match &spec.puncture {
        Some(p) => wef_punctured(&spec.conv, Some(&spec.elf), spec.k, spec.mode, p, wmax),
        None => match spec.mode {
            Mode::Zt => wef_zt(&spec.conv, Some(&spec.elf), spec.k, wmax),
            Mode::Tb => wef_tb(&spec.conv, Some(&spec.elf), spec.k, wmax),
        },
    }
}

/// One stage of real-valued propagation: the stage weight `w` becomes a
/// scalar factor `x^w`. Same gather structure as the exact engine.
fn step_scalar(ts: &TransitionSystem, src: &[f64], dst: &mut [f64], xpow: &[f64], parallel: bool) {
    let nu = ts.conv_state_bits;
    let row = 1usize << nu;
    let half = 1usize << (nu - 1);
    let gather = |se_dst: usize, drow: &mut [f64]| {
        let se_b0 = ts.elf_prev[se_dst << 1] as usize;
        let se_b1 = ts.elf_prev[(se_dst << 1) | 1] as usize;
        for (sc_dst, out) in drow.iter_mut().enumerate() {
            let b = sc_dst & 1;
            let se_src = if b == 0 { se_b0 } else { se_b1 };
            let mut acc = 0.0;
            for top in 0..2usize {
                let sc_src = (sc_dst >> 1) | (top * half);
                let w = ts.weight[(sc_src << 1) | b] as usize;
                acc += src[(se_src << nu) | sc_src] * xpow[w];
            }
            *out = acc;
        }
    };
    if parallel {
        dst.par_chunks_mut(row)
            .enumerate()
            .for_each(|(se, drow)| gather(se, drow));
    } else {
        dst.chunks_mut(row)
            .enumerate()
            .for_each(|(se, drow)| gather(se, drow));
    }
}

/// Real-valued propagation from `start` to `end`. With `exclude_zero_path`
/// (used for start state 0) the all-zeros path is kept out of the buffer
/// entirely: the buffer starts empty and the zero path's departure edge
/// (input 1 from state 0) is injected at every stage. Subtracting 1 after
/// the fact would cancel catastrophically when `A(x)` is many orders of
/// magnitude below the zero path's contribution of 1.
fn propagate_scalar(
    schedule: &[&TransitionSystem],
    start: usize,
    end: usize,
    xpow: &[f64],
    parallel: bool,
    bufs: &mut (Vec<f64>, Vec<f64>),
    exclude_zero_path: bool,
) -> f64 {
    let (src, dst) = (&mut bufs.0, &mut bufs.1);
    src.fill(0.0);
    if !exclude_zero_path {
        src[start] = 1.0;
    }
    for ts in schedule {
        step_scalar(ts, src, dst, xpow, parallel);
        if exclude_zero_path {
            let (s1, w1) = ts.edge(0, 1);
            dst[s1 as usize] += xpow[w1 as usize];
        }
        std::mem::swap(src, dst);
    }
    src[end]
}

/// Evaluates the full (untruncated) weight enumerator `A(x) = sum_{w >= 1}
/// A_w x^w` at a scalar point by real-valued vector propagation. Start-state
/// contributions are summed in ascending order for run-to-run
/// reproducibility (all terms are nonnegative).
fn eval_schedule(schedule: &[&TransitionSystem], mode: Mode, x: f64) -> f64 {
    let ts0 = schedule.first().expect("empty stage schedule");
    let states = ts0.state_count();
    let xpow: Vec<f64> = (0..=ts0.outputs).map(|w| x.powi(w as i32)).collect();
    let starts: Vec<usize> = match mode {
        Mode::Zt => vec![0],
        Mode::Tb => (0..1usize << ts0.conv_state_bits).collect(),
    };
    let mut vals: Vec<f64> = if states <= OUTER_PARALLEL_MAX_STATES && starts.len() > 1 {
        starts
            .par_iter()
            .map_init(
                || (vec![0.0; states], vec![0.0; states]),
                |bufs, &s| propagate_scalar(schedule, s, s, &xpow, false, bufs, s == 0),
            )
            .collect()
    } else {
        let parallel = states > OUTER_PARALLEL_MAX_STATES;
        let mut bufs = (vec![0.0; states], vec![0.0; states]);
        starts
            .iter()
            .map(|&s| propagate_scalar(schedule, s, s, &xpow, parallel, &mut bufs, s == 0))
            .collect()
    };
    vals.sort_unstable_by(f64::total_cmp);
    vals.iter().sum()
}

/// `A(x)` for a uniform (unpunctured) transition system over `stages`
/// stages. For ZT pass the full stage count including the `nu` flush stages.
pub fn wef_eval(ts: &TransitionSystem, stages: usize, mode: Mode, x: f64) -> f64 {
    eval_schedule(&vec![ts; stages], mode, x)
}

/// Truncated distance-spectrum union bound on codeword error rate:
/// `sum_{w >= 1} A_w Q(sqrt(w E_s / sigma^2))`. This is a partial sum of the
/// full union bound, cut off at the spectrum's `wmax`.
pub fn dsu_bound_spectrum(wef: &TruncatedWef, ch: &ChannelParams) -> f64 {
    let c = ch.es_over_sigma2();
    wef.nonzero()
        .map(|(w, a)| a.to_f64().unwrap_or(f64::INFINITY) * q_function((w as f64 * c).sqrt()))
        .sum()
}

/// Product-form union bound from the full enumerator: `Q(sqrt(d_min c)) *
/// exp(d_min c / 2) * A(exp(-c / 2))` with `c = E_s / sigma^2`, using
/// `Q(sqrt(x + y)) <= Q(sqrt(x)) exp(-y / 2)` term by term. Slightly looser
/// than the exact union sum but needs no truncation. `d_min` comes from a
/// truncated spectrum run.
pub fn dsu_bound_wef(
    ts: &TransitionSystem,
    stages: usize,
    mode: Mode,
    d_min: usize,
    ch: &ChannelParams,
) -> f64 {
    let c = ch.es_over_sigma2();
    let a = wef_eval(ts, stages, mode, (-c / 2.0).exp());
    let d = d_min as f64;
    q_function((d * c).sqrt()) * (d * c / 2.0 + a.ln()).exp()
}

/// [`dsu_bound_wef`] for a complete code description, including puncturing.
pub fn dsu_bound_wef_spec(spec: &ConcatSpec, d_min: usize, ch: &ChannelParams) -> Result<f64> {
    let per_stage = spec.per_stage_puncture()?;
    let systems = punctured_systems(&spec.conv, Some(&spec.elf), &per_stage)?;
    let schedule: Vec<&TransitionSystem> = per_stage
        .iter()
        .map(|&p| systems[p as usize].as_ref().unwrap())
        .collect();
    let c = ch.es_over_sigma2();
    let a = eval_schedule(&schedule, spec.mode, (-c / 2.0).exp());
    let d = d_min as f64;
    Ok(q_function((d * c).sqrt()) * (d * c / 2.0 + a.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaustive;
    use proptest::prelude::*;

    fn conv(gens: &[&str]) -> ConvCode {
        ConvCode::from_octal(gens).unwrap()
    }

    fn elf(hex: &str) -> ElfCode {
        ElfCode::from_hex(hex).unwrap()
    }

    fn counts_u64(wef: &TruncatedWef) -> Vec<u64> {
        (0..=wef.wmax()).map(|w| wef.count_u64(w).unwrap()).collect()
    }

    #[test]
    fn transition_system_five_seven() {
        let ts = build_transition(&conv(&["5", "7"]), None, 0).unwrap();
        assert_eq!(ts.state_count(), 4);
        assert_eq!(ts.edge(0, 0), (0, 0));
        assert_eq!(ts.edge(0, 1), (1, 2));
        // every state has exactly two outgoing edges with weights <= n
        for s in 0..4u32 {
            for b in 0..2u8 {
                let (dst, w) = ts.edge(s, b);
                assert!(dst < 4 && w <= 2);
            }
        }
    }

    #[test]
    fn identity_elf_matches_no_elf() {
        let c = conv(&["27", "31"]);
        let a = wef_tb(&c, None, 10, 12).unwrap();
        let b = wef_tb(&c, Some(&elf("0x1")), 10, 12).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn puncturing_reduces_weight_by_one() {
        let c = conv(&["5", "7"]);
        let plain = build_transition(&c, None, 0).unwrap();
        for p in 1..=2u8 {
            let pu = build_transition(&c, None, p).unwrap();
            for s in 0..4u32 {
                for b in 0..2u8 {
                    let (dst, w) = plain.edge(s, b);
                    let hit = (plain.output_mask(s, b) >> (p - 1)) & 1;
                    assert_eq!(pu.edge(s, b), (dst, w - hit as u8));
                }
            }
        }
    }

    #[test]
    fn zt_single_message_single_codeword() {
        let wef = wef_zt(&conv(&["5", "7"]), None, 1, 8).unwrap();
        let mut want = vec![0u64; 9];
        want[5] = 1;
        assert_eq!(counts_u64(&wef), want);
    }

    #[test]
    fn zt_matches_exhaustive() {
        let spec = ConcatSpec::new(conv(&["5", "7"]), elf("0x1"), 8, Mode::Zt, None).unwrap();
        let n = spec.blocklength();
        let a = wef_zt(&spec.conv, Some(&spec.elf), 8, n).unwrap();
        let b = exhaustive::codebook_spectrum(&spec, n).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), BigUint::from(255u32));
    }

    #[test]
    fn tb_matches_exhaustive_with_elf() {
        let spec = ConcatSpec::new(conv(&["5", "7"]), elf("0xB"), 6, Mode::Tb, None).unwrap();
        let n = spec.blocklength();
        let a = wef_tb(&spec.conv, Some(&spec.elf), 6, n).unwrap();
        let b = exhaustive::codebook_spectrum(&spec, n).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tb_mother_code_spectrum() {
        let wef = wef_tb(&conv(&["561", "753"]), None, 76, 20).unwrap();
        let c = counts_u64(&wef);
        assert_eq!(&c[..12], &[0; 12]);
        assert_eq!(
            (c[12], c[14], c[16], c[18], c[20]),
            (836, 3800, 21736, 123880, 732564)
        );
        assert_eq!((c[13], c[15], c[17], c[19]), (0, 0, 0, 0));
    }

    #[test]
    fn tb_expurgated_spectrum_m3() {
        let wef = wef_tb(&conv(&["561", "753"]), Some(&elf("0xF")), 73, 16).unwrap();
        let c = counts_u64(&wef);
        assert!(c[..14].iter().all(|&x| x == 0));
        assert_eq!((c[14], c[16]), (380, 3344));
    }

    #[test]
    fn truncation_exactness() {
        let c = conv(&["27", "31"]);
        let e = elf("0x7");
        let full = wef_tb(&c, Some(&e), 9, 20).unwrap();
        for wmax in [6, 11, 15] {
            let t = wef_tb(&c, Some(&e), 9, wmax).unwrap();
            assert_eq!(t.counts(), &full.counts()[..=wmax]);
        }
    }

    #[test]
    fn tb_too_short_rejected() {
        assert!(matches!(
            wef_tb(&conv(&["561", "753"]), None, 5, 10),
            Err(Error::TailBitingTooShort { .. })
        ));
    }

    #[test]
    fn expurgation_nesting() {
        // 0x3 divides 0xF, so the 0xF code's counts can never exceed the
        // 0x3 code's.
        let c = conv(&["561", "753"]);
        let a1 = wef_tb(&c, Some(&elf("0x3")), 75, 16).unwrap();
        let a2 = wef_tb(&c, Some(&elf("0xF")), 73, 16).unwrap();
        for w in 1..=16 {
            assert!(a2.count(w) <= a1.count(w), "w = {w}");
        }
    }

    #[test]
    fn counter_escalation_reaches_big_counts() {
        // 2^70 tail-biting codewords force the 64-bit pass to overflow.
        let c = conv(&["5", "7"]);
        let wef = wef_tb(&c, None, 70, 140).unwrap();
        let want = (BigUint::from(1u32) << 70u32) - 1u32;
        assert_eq!(wef.total(), want);
    }

    #[test]
    fn punctured_all_zero_pattern_is_identity() {
        let c = conv(&["27", "31"]);
        let e = elf("0x7");
        let pat = PuncturePattern::new(vec![0]).unwrap();
        let a = wef_punctured(&c, Some(&e), 9, Mode::Tb, &pat, 14).unwrap();
        let b = wef_tb(&c, Some(&e), 9, 14).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn punctured_matches_exhaustive() {
        let pat = PuncturePattern::new(vec![0, 1, 2, 0]).unwrap();
        for mode in [Mode::Zt, Mode::Tb] {
            let spec = ConcatSpec::new(
                conv(&["5", "7"]),
                elf("0x3"),
                7,
                mode,
                Some(pat.clone()),
            )
            .unwrap();
            let n = spec.blocklength();
            let a = wef_punctured(&spec.conv, Some(&spec.elf), 7, mode, &pat, n).unwrap();
            let b = exhaustive::codebook_spectrum(&spec, n).unwrap();
            assert_eq!(a, b, "mode {mode}");
        }
    }

    #[test]
    fn periodic_and_stagewise_paths_agree() {
        let c = conv(&["27", "31"]);
        let e = elf("0xB");
        // period 3 divides the 12 tail-biting stages
        let pat = PuncturePattern::new(vec![0, 2, 0]).unwrap();
        let a = wef_punctured(&c, Some(&e), 9, Mode::Tb, &pat, 16).unwrap();
        let b = wef_punctured_stagewise(&c, Some(&e), 9, Mode::Tb, &pat, 16).unwrap();
        assert_eq!(a, b);
        // period 5 does not divide 12: both entry points take the general
        // path and must agree with brute force
        let pat = PuncturePattern::new(vec![0, 1, 0, 0, 2]).unwrap();
        let spec =
            ConcatSpec::new(c.clone(), e.clone(), 9, Mode::Tb, Some(pat.clone())).unwrap();
        let a = wef_punctured(&c, Some(&e), 9, Mode::Tb, &pat, 20).unwrap();
        let b = exhaustive::codebook_spectrum(&spec, 20).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn q_function_reference_values() {
        // reference values from a 40-digit erfc evaluation
        let table = [
            (0.0, 0.5),
            (0.1, 0.46017216272297101853),
            (0.5, 0.30853753872598689636),
            (1.0, 0.15865525393145705141),
            (1.5, 0.066807201268858066004),
            (2.0, 0.022750131948179207200),
            (3.0, 0.0013498980316300945267),
            (4.2, 0.000013345749015906338353),
            (5.0, 2.8665157187919391167e-7),
            (6.5, 4.0160005838591178083e-11),
            (8.0, 6.2209605742717841235e-16),
            (10.0, 7.6198530241605260660e-24),
            (13.25, 2.2560163396857890795e-40),
            (17.0, 4.1059962020989062896e-65),
            (20.0, 2.7536241186062336951e-89),
            (25.0, 3.0566967063825609164e-138),
            (30.0, 4.9067139271481870595e-198),
            (35.0, 1.1249107064724062440e-268),
        ];
        for (x, want) in table {
            let got = q_function(x);
            assert!(
                (got - want).abs() <= 1e-12 * want,
                "Q({x}) = {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn q_function_symmetry() {
        for x in [0.1, 0.7, 1.3, 2.9] {
            assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn truncated_bound_single_term() {
        let mut counts = vec![BigUint::ZERO; 11];
        counts[10] = BigUint::from(1u32);
        let wef = TruncatedWef::new(10, counts);
        let ch = ChannelParams::new(2.0, 0.5).unwrap();
        let want = q_function((10.0 * ch.es_over_sigma2()).sqrt());
        assert!((dsu_bound_spectrum(&wef, &ch) - want).abs() < 1e-18);
        // monotone decreasing in SNR
        let hi = ChannelParams::new(4.0, 0.5).unwrap();
        assert!(dsu_bound_spectrum(&wef, &hi) < dsu_bound_spectrum(&wef, &ch));
    }

    #[test]
    fn wef_bound_single_codeword_collapses_to_q() {
        // K = 1 ZT (5,7): one codeword of weight 5, so the enumerator is a
        // single monomial and the exponential factors cancel.
        let c = conv(&["5", "7"]);
        let ts = build_transition(&c, None, 0).unwrap();
        let ch = ChannelParams::new(1.5, 1.0 / 10.0).unwrap();
        let got = dsu_bound_wef(&ts, 3, Mode::Zt, 5, &ch);
        let want = q_function((5.0 * ch.es_over_sigma2()).sqrt());
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn wef_eval_matches_bruteforce_enumerator() {
        let spec = ConcatSpec::new(conv(&["5", "7"]), elf("0x1"), 8, Mode::Zt, None).unwrap();
        let n = spec.blocklength();
        let full = exhaustive::codebook_spectrum(&spec, n).unwrap();
        let ts = build_transition(&spec.conv, Some(&spec.elf), 0).unwrap();
        for x in [0.9, 0.5, 0.2, 0.05] {
            let got = wef_eval(&ts, spec.trellis_stages(), Mode::Zt, x);
            let want = full.eval(x);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs(),
                "x = {x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn wef_bound_dominates_truncated_bound() {
        let spec = ConcatSpec::new(conv(&["5", "7"]), elf("0x1"), 8, Mode::Zt, None).unwrap();
        let n = spec.blocklength();
        let wef = wef_zt(&spec.conv, Some(&spec.elf), 8, n).unwrap();
        let d_min = wef.d_min().unwrap();
        let ts = build_transition(&spec.conv, Some(&spec.elf), 0).unwrap();
        for tenth in 0..=50 {
            let ch = ChannelParams::new(tenth as f64 / 10.0, spec.rate()).unwrap();
            let loose = dsu_bound_wef(&ts, spec.trellis_stages(), Mode::Zt, d_min, &ch);
            let tight = dsu_bound_spectrum(&wef, &ch);
            assert!(
                loose >= tight * (1.0 - 1e-12),
                "at {} dB: {loose} < {tight}",
                tenth as f64 / 10.0
            );
        }
    }

    #[test]
    fn channel_params_conversion() {
        let ch = ChannelParams::new(0.0, 0.5).unwrap();
        assert!((ch.es_over_sigma2() - 1.0).abs() < 1e-15);
        assert!((ch.sigma2() - 1.0).abs() < 1e-15);
        assert!(ChannelParams::new(1.0, 0.0).is_err());
        assert!(ChannelParams::new(1.0, 1.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn engines_agree_on_random_small_codes(
            g1 in 1u64..16,
            g2 in 1u64..16,
            k in 4usize..9,
            elf_val in prop::sample::select(vec![0x1u64, 0x3, 0x5, 0x7, 0xB, 0xD]),
            zt in any::<bool>(),
            pat in prop::option::of(prop::collection::vec(0u8..3, 1..4)),
        ) {
            let code = match ConvCode::new(vec![
                crate::gf2poly::Gf2Poly::from_u64(g1),
                crate::gf2poly::Gf2Poly::from_u64(g2),
            ]) {
                Ok(c) => c,
                Err(_) => return Ok(()),
            };
            let e = ElfCode::new(crate::gf2poly::Gf2Poly::from_u64(elf_val)).unwrap();
            let mode = if zt { Mode::Zt } else { Mode::Tb };
            let pattern = pat.map(|p| PuncturePattern::new(p).unwrap());
            let spec = match ConcatSpec::new(code, e, k, mode, pattern) {
                Ok(s) => s,
                Err(_) => return Ok(()),
            };
            let n = spec.blocklength();
            let a = wef_for_spec(&spec, n).unwrap();
            let b = exhaustive::codebook_spectrum(&spec, n).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
