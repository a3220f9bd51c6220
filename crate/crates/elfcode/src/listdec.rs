//! Inner-code trellis, serial list Viterbi decoding, and weight-ordered
//! codeword enumeration.
//!
//! The trellis covers only the convolutional code (`2^nu` states); the ELF
//! is enforced by checking divisibility of a candidate path's input
//! polynomial, never by enlarging the state space. Serial list Viterbi
//! decoding ([`ListDecoder::decode`]) emits trellis paths in nondecreasing
//! metric order, globally across all tail-biting start states, and returns
//! the first path that closes (start = end) and whose input polynomial is
//! divisible by the ELF: with a sufficient list budget this is the ML
//! codeword decision.
//!
//! [`enumerate_codewords_by_weight`] is the noiseless counterpart used by
//! the sieve: it yields every nonzero inner codeword up to a weight limit in
//! nondecreasing weight order, with deterministic tie-breaking (smaller
//! start state first, then lexicographically smaller input sequence).

use crate::codec::{ConcatSpec, ConvCode, ElfCode, Mode, PuncturePattern};
use crate::gf2poly::{rem_words_small, BitSeq};
use crate::{Error, Result};
use rayon::prelude::*;
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

/// Decode/enumeration trellis: the inner convolutional code unrolled over
/// the block, with per-stage puncture indices. ZT blocks carry `nu` flush
/// stages whose zero inputs are implied by the end-state constraint.
#[derive(Clone, Debug)]
pub struct Trellis {
    nu: usize,
    n: usize,
    input_stages: usize,
    stages: usize,
    mode: Mode,
    per_stage: Vec<u8>,
    /// Channel position of each stage's first kept output.
    stage_offset: Vec<usize>,
    blocklength: usize,
    /// Indexed `(s << 1) | b`.
    next: Vec<u32>,
    out_mask: Vec<u32>,
}

impl Trellis {
    /// Builds the trellis for `input_stages` free input bits (`K + m`); ZT
    /// mode appends `nu` flush stages.
    pub fn new(
        conv: &ConvCode,
        input_stages: usize,
        mode: Mode,
        pattern: Option<&PuncturePattern>,
    ) -> Result<Self> {
        if mode == Mode::Tb && input_stages < conv.nu() {
            return Err(Error::TailBitingTooShort {
                nu: conv.nu(),
                len: input_stages,
            });
        }
        let stages = input_stages
            + match mode {
                Mode::Zt => conv.nu(),
                Mode::Tb => 0,
            };
        let per_stage = match pattern {
            Some(p) => p.expand(stages, conv.n())?,
            None => vec![0; stages],
        };
        let mut stage_offset = Vec::with_capacity(stages + 1);
        let mut pos = 0usize;
        for &p in &per_stage {
            stage_offset.push(pos);
            pos += conv.n() - (p != 0) as usize;
        }
        stage_offset.push(pos);
        let nu = conv.nu();
        let mut next = vec![0u32; 2 << nu];
        let mut out_mask = vec![0u32; 2 << nu];
        for s in 0..1u32 << nu {
            for b in 0..2u8 {
                let idx = ((s as usize) << 1) | b as usize;
                next[idx] = conv.next_state(s, b);
                out_mask[idx] = conv.output_mask(s, b);
            }
        }
        Ok(Trellis {
            nu,
            n: conv.n(),
            input_stages,
            stages,
            mode,
            per_stage,
            blocklength: pos,
            stage_offset,
            next,
            out_mask,
        })
    }

    pub fn for_spec(spec: &ConcatSpec) -> Result<Self> {
        Trellis::new(
            &spec.conv,
            spec.input_len(),
            spec.mode,
            spec.puncture.as_ref(),
        )
    }

    pub fn states(&self) -> usize {
        1 << self.nu
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Free input bits (`K + m`); ZT trellises have `nu` more stages than
    /// this, carrying the implied flush zeros.
    pub fn input_stages(&self) -> usize {
        self.input_stages
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Kept channel bits over the whole block.
    pub fn blocklength(&self) -> usize {
        self.blocklength
    }

    #[inline]
    fn next_state(&self, s: u32, b: u8) -> u32 {
        self.next[((s as usize) << 1) | b as usize]
    }

    #[inline]
    fn output(&self, s: u32, b: u8) -> u32 {
        self.out_mask[((s as usize) << 1) | b as usize]
    }

    /// Punctured Hamming weight of the stage-`t` edge from `s` on `b`.
    #[inline]
    fn weight(&self, t: usize, s: u32, b: u8) -> u32 {
        let mask = self.output(s, b);
        let p = self.per_stage[t];
        mask.count_ones() - if p > 0 { (mask >> (p - 1)) & 1 } else { 0 }
    }
}

/// A trellis path emitted by the enumerator: its metric (Hamming weight in
/// noiseless enumeration), endpoint states, the full input bit sequence
/// (stage `t` = bit `t`; ZT paths include the trailing flush zeros), and its
/// 1-based position in the global emission order.
#[derive(Clone, Debug)]
pub struct PathCandidate {
    pub metric: f64,
    pub start_state: u32,
    pub end_state: u32,
    pub input_bits: BitSeq,
    pub rank: usize,
}

const WINF: u32 = u32::MAX / 2;

/// Per-start-state backward weight bounds: `bmin/bmax[t * S + s]` bound the
/// total punctured weight of any path from `(t, s)` to the required end
/// state. `bmin = WINF` marks unreachable nodes.
struct WeightTables {
    bmin: Vec<u32>,
    bmax: Vec<u32>,
}

fn weight_tables(tr: &Trellis, end: u32) -> WeightTables {
    let states = tr.states();
    let len = (tr.stages + 1) * states;
    let mut bmin = vec![WINF; len];
    let mut bmax = vec![0u32; len];
    bmin[tr.stages * states + end as usize] = 0;
    for t in (0..tr.stages).rev() {
        for s in 0..states as u32 {
            let mut lo = WINF;
            let mut hi = 0;
            for b in 0..2u8 {
                let ns = tr.next_state(s, b) as usize;
                let clo = bmin[(t + 1) * states + ns];
                if clo == WINF {
                    continue;
                }
                let w = tr.weight(t, s, b);
                lo = lo.min(w + clo);
                hi = hi.max(w + bmax[(t + 1) * states + ns]);
            }
            bmin[t * states + s as usize] = lo;
            bmax[t * states + s as usize] = hi;
        }
    }
    WeightTables { bmin, bmax }
}

/// Depth-first collection of all paths of exact weight `w` from `start` to
/// the end state baked into `tab`. Bit 0 is explored before bit 1, so paths
/// come out in lexicographic input order.
fn class_dfs(
    tr: &Trellis,
    tab: &WeightTables,
    start: u32,
    end: u32,
    w: u32,
    out: &mut Vec<PathCandidate>,
) {
    let states = tr.states();
    let root_lo = tab.bmin[start as usize];
    if root_lo == WINF || root_lo > w || tab.bmax[start as usize] < w {
        return;
    }
    struct Frame {
        state: u32,
        acc: u32,
        next_bit: u8,
    }
    let mut frames = Vec::with_capacity(tr.stages + 1);
    frames.push(Frame {
        state: start,
        acc: 0,
        next_bit: 0,
    });
    let mut bits = BitSeq::new(tr.stages);
    loop {
        let t = frames.len().wrapping_sub(1);
        let Some(top) = frames.last_mut() else {
            break;
        };
        if t == tr.stages {
            debug_assert_eq!(top.acc, w);
            debug_assert_eq!(top.state, end);
            out.push(PathCandidate {
                metric: w as f64,
                start_state: start,
                end_state: end,
                input_bits: bits.clone(),
                rank: 0,
            });
            frames.pop();
            continue;
        }
        if top.next_bit > 1 {
            frames.pop();
            continue;
        }
        let b = top.next_bit;
        top.next_bit += 1;
        let (s, acc) = (top.state, top.acc);
        let ns = tr.next_state(s, b);
        let a = acc + tr.weight(t, s, b);
        let idx = (t + 1) * states + ns as usize;
        let lo = tab.bmin[idx];
        if lo != WINF && a + lo <= w && a + tab.bmax[idx] >= w {
            bits.set(t, b == 1);
            frames.push(Frame {
                state: ns,
                acc: a,
                next_bit: 0,
            });
        }
    }
}

/// Streams every nonzero inner codeword of punctured weight `<= limit`,
/// exactly once, in nondecreasing weight order. Within a weight class,
/// candidates come from smaller start states first and in lexicographic
/// input order. Classes can also be consumed whole via
/// [`CodewordEnumerator::next_class`], which is what the sieve does.
pub struct CodewordEnumerator {
    trellis: Trellis,
    starts: Vec<u32>,
    /// Per-start backward tables; populated up front for small `nu`,
    /// recomputed per class otherwise.
    cached: Option<Vec<WeightTables>>,
    weight_limit: usize,
    next_weight: usize,
    emitted: usize,
    buffer: VecDeque<PathCandidate>,
}

/// Memory cap for caching per-start backward tables (all starts kept).
const CACHE_MAX_NU: usize = 8;

impl CodewordEnumerator {
    pub fn new(
        conv: &ConvCode,
        input_stages: usize,
        mode: Mode,
        pattern: Option<&PuncturePattern>,
        weight_limit: usize,
    ) -> Result<Self> {
        let trellis = Trellis::new(conv, input_stages, mode, pattern)?;
        let starts: Vec<u32> = match mode {
            Mode::Zt => vec![0],
            Mode::Tb => (0..trellis.states() as u32).collect(),
        };
        let cached = if conv.nu() <= CACHE_MAX_NU {
            Some(
                starts
                    .par_iter()
                    .map(|&s| weight_tables(&trellis, s))
                    .collect(),
            )
        } else {
            None
        };
        Ok(CodewordEnumerator {
            trellis,
            starts,
            cached,
            weight_limit,
            next_weight: 0,
            emitted: 0,
            buffer: VecDeque::new(),
        })
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    /// Codewords emitted so far (rank of the last emitted candidate).
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    fn class_candidates(&self, w: usize) -> Vec<PathCandidate> {
        let tr = &self.trellis;
        let per_start: Vec<Vec<PathCandidate>> = self
            .starts
            .par_iter()
            .enumerate()
            .map(|(i, &start)| {
                let mut out = Vec::new();
                match &self.cached {
                    Some(tables) => class_dfs(tr, &tables[i], start, start, w as u32, &mut out),
                    None => {
                        let tab = weight_tables(tr, start);
                        class_dfs(tr, &tab, start, start, w as u32, &mut out);
                    }
                }
                out
            })
            .collect();
        let mut all: Vec<PathCandidate> = per_start.into_iter().flatten().collect();
        if w == 0 {
            // drop the all-zeros input path; other weight-0 paths (possible
            // only for catastrophic codes) are real codewords and stay
            all.retain(|c| c.input_bits.words().iter().any(|&x| x != 0));
        }
        all
    }

    /// The next nonempty weight class `(w, candidates)`, or `None` once the
    /// weight limit is exhausted. Ranks are assigned globally across
    /// classes.
    pub fn next_class(&mut self) -> Option<(usize, Vec<PathCandidate>)> {
        while self.next_weight <= self.weight_limit {
            let w = self.next_weight;
            self.next_weight += 1;
            let mut class = self.class_candidates(w);
            if class.is_empty() {
                continue;
            }
            for c in class.iter_mut() {
                self.emitted += 1;
                c.rank = self.emitted;
            }
            return Some((w, class));
        }
        None
    }
}

impl Iterator for CodewordEnumerator {
    type Item = PathCandidate;

    fn next(&mut self) -> Option<PathCandidate> {
        if self.buffer.is_empty() {
            let (_, class) = self.next_class()?;
            self.buffer.extend(class);
        }
        self.buffer.pop_front()
    }
}

/// See [`CodewordEnumerator`]. `input_stages` counts the free input bits;
/// in ZT mode the trellis gains `nu` flush stages whose inputs are zero.
pub fn enumerate_codewords_by_weight(
    conv: &ConvCode,
    input_stages: usize,
    mode: Mode,
    pattern: Option<&PuncturePattern>,
    weight_limit: usize,
) -> Result<CodewordEnumerator> {
    CodewordEnumerator::new(conv, input_stages, mode, pattern, weight_limit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeStatus {
    Found,
    Nack,
}

/// Result of a list decode. On `Found`, `message` holds the `K` message
/// bits, `list_rank` the winning path's 1-based position in the global
/// metric order and `metric` its path metric. On `Nack` (list budget or
/// path supply exhausted without an acceptable path), `message` is `None`,
/// `metric` is infinite and `list_rank` equals `paths_explored`.
#[derive(Clone, Debug)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    pub message: Option<Vec<u8>>,
    pub list_rank: usize,
    pub metric: f64,
    pub paths_explored: usize,
}

/// Serial list Viterbi decoder for one concatenated code. Holds only
/// immutable tables, so one decoder can be shared across threads; each
/// `decode` call owns its working memory.
#[derive(Clone, Debug)]
pub struct ListDecoder {
    trellis: Trellis,
    elf: ElfCode,
    k: usize,
}

/// Candidate queue entry. `Seed` is an unmaterialized tail-biting start
/// state ordered by an admissible lower bound on its best path metric;
/// materializing it costs one backward Viterbi pass.
enum EntryKind {
    Seed,
    Node { detours: SmallVec<[u32; 6]> },
}

struct Entry {
    metric: f64,
    sigma: u32,
    seq: u64,
    kind: EntryKind,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // BinaryHeap is a max-heap: smaller metric must compare greater.
    // Exact metric ties fall back to start state, then insertion order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .metric
            .total_cmp(&self.metric)
            .then_with(|| other.sigma.cmp(&self.sigma))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Walk {
    bits: BitSeq,
    /// State before each stage; `states[stages]` is the end state.
    states: Vec<u32>,
}

impl ListDecoder {
    pub fn new(spec: &ConcatSpec) -> Result<Self> {
        if spec.conv.n() > 8 {
            return Err(Error::Unsupported(format!(
                "list decoder supports n <= 8 outputs per stage, got {}",
                spec.conv.n()
            )));
        }
        Ok(ListDecoder {
            trellis: Trellis::for_spec(spec)?,
            elf: spec.elf.clone(),
            k: spec.k,
        })
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    /// Branch metric table: `bm[t * 2^n + mask]` is the negative correlation
    /// of stage `t`'s kept outputs (given by `mask`) with the channel
    /// values. Punctured positions carry no channel value and contribute
    /// nothing.
    fn branch_metrics(&self, channel: &[f64]) -> Vec<f64> {
        let tr = &self.trellis;
        let masks = 1usize << tr.n;
        let mut bm = vec![0.0; tr.stages * masks];
        for t in 0..tr.stages {
            let p = tr.per_stage[t];
            let row = &mut bm[t * masks..(t + 1) * masks];
            for (mask, out) in row.iter_mut().enumerate() {
                let mut pos = tr.stage_offset[t];
                let mut acc = 0.0;
                for j in 0..tr.n {
                    if p as usize == j + 1 {
                        continue;
                    }
                    let sign = 1.0 - 2.0 * ((mask >> j) & 1) as f64;
                    acc -= channel[pos] * sign;
                    pos += 1;
                }
                *out = acc;
            }
        }
        bm
    }

    #[inline]
    fn edge_metric(&self, bm: &[f64], t: usize, s: u32, b: u8) -> f64 {
        bm[t * (1 << self.trellis.n) + self.trellis.output(s, b) as usize]
    }

    /// Backward Viterbi pass to a fixed end state; `btab[t * S + s]` is the
    /// best metric-to-go. Infinite entries are unreachable.
    fn backward_to_end(&self, bm: &[f64], end: u32) -> Vec<f64> {
        let tr = &self.trellis;
        let states = tr.states();
        let mut btab = vec![f64::INFINITY; (tr.stages + 1) * states];
        btab[tr.stages * states + end as usize] = 0.0;
        self.backward_fill(bm, &mut btab);
        btab
    }

    /// Backward pass with a free end state (all end metrics zero): an
    /// admissible relaxation shared by every tail-biting instance.
    fn backward_free_end(&self, bm: &[f64]) -> Vec<f64> {
        let tr = &self.trellis;
        let states = tr.states();
        let mut btab = vec![f64::INFINITY; (tr.stages + 1) * states];
        for s in 0..states {
            btab[tr.stages * states + s] = 0.0;
        }
        self.backward_fill(bm, &mut btab);
        btab
    }

    fn backward_fill(&self, bm: &[f64], btab: &mut [f64]) {
        let tr = &self.trellis;
        let states = tr.states();
        for t in (0..tr.stages).rev() {
            for s in 0..states as u32 {
                let mut best = f64::INFINITY;
                for b in 0..2u8 {
                    let f = self.edge_metric(bm, t, s, b)
                        + btab[(t + 1) * states + tr.next_state(s, b) as usize];
                    if f < best {
                        best = f;
                    }
                }
                btab[t * states + s as usize] = best;
            }
        }
    }

    /// Forward pass with a free start state: best metric of any path
    /// reaching `(stages, s)`.
    fn forward_free_start(&self, bm: &[f64]) -> Vec<f64> {
        let tr = &self.trellis;
        let states = tr.states();
        let mut cur = vec![0.0f64; states];
        let mut nxt = vec![f64::INFINITY; states];
        for t in 0..tr.stages {
            nxt.fill(f64::INFINITY);
            for s in 0..states as u32 {
                let base = cur[s as usize];
                if !base.is_finite() {
                    continue;
                }
                for b in 0..2u8 {
                    let ns = tr.next_state(s, b) as usize;
                    let f = base + self.edge_metric(bm, t, s, b);
                    if f < nxt[ns] {
                        nxt[ns] = f;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut nxt);
        }
        cur
    }

    /// Best bit, its metric-to-go, and the detour penalty at `(t, s)` for an
    /// instance's backward table. Ties prefer bit 0.
    #[inline]
    fn decide(&self, bm: &[f64], btab: &[f64], t: usize, s: u32) -> (u8, f64, f64) {
        let tr = &self.trellis;
        let states = tr.states();
        let f0 = self.edge_metric(bm, t, s, 0) + btab[(t + 1) * states + tr.next_state(s, 0) as usize];
        let f1 = self.edge_metric(bm, t, s, 1) + btab[(t + 1) * states + tr.next_state(s, 1) as usize];
        if f0 <= f1 {
            (0, f0, f1 - f0)
        } else {
            (1, f1, f0 - f1)
        }
    }

    /// Reconstructs the path of a detour set: backward-optimal decisions,
    /// flipped at each detour stage.
    fn walk(&self, bm: &[f64], btab: &[f64], sigma: u32, detours: &[u32]) -> Walk {
        let tr = &self.trellis;
        let mut bits = BitSeq::new(tr.stages);
        let mut states = Vec::with_capacity(tr.stages + 1);
        let mut s = sigma;
        let mut di = 0usize;
        for t in 0..tr.stages {
            states.push(s);
            let (bstar, _, _) = self.decide(bm, btab, t, s);
            let flip = di < detours.len() && detours[di] == t as u32;
            if flip {
                di += 1;
            }
            let b = bstar ^ flip as u8;
            bits.set(t, b == 1);
            s = tr.next_state(s, b);
        }
        states.push(s);
        Walk { bits, states }
    }

    /// Smallest `(penalty, stage)` detour strictly after `after` and
    /// strictly greater than `floor` (for sibling generation), along the
    /// walked path.
    fn best_detour(
        &self,
        bm: &[f64],
        btab: &[f64],
        walk: &Walk,
        after: Option<u32>,
        floor: Option<(f64, u32)>,
    ) -> Option<(f64, u32)> {
        let from = after.map_or(0, |t| t as usize + 1);
        let mut best: Option<(f64, u32)> = None;
        for t in from..self.trellis.stages {
            let (_, _, delta) = self.decide(bm, btab, t, walk.states[t]);
            if !delta.is_finite() {
                continue;
            }
            let key = (delta, t as u32);
            let above_floor = match floor {
                Some(f) => (key.0.total_cmp(&f.0)).then_with(|| key.1.cmp(&f.1)) == Ordering::Greater,
                None => true,
            };
            if !above_floor {
                continue;
            }
            let better = match best {
                Some(b) => (key.0.total_cmp(&b.0)).then_with(|| key.1.cmp(&b.1)) == Ordering::Less,
                None => true,
            };
            if better {
                best = Some(key);
            }
        }
        best
    }

    fn accepts(&self, bits: &BitSeq) -> bool {
        self.elf.m() == 0 || rem_words_small(bits.words(), bits.len(), self.elf.bits()) == 0
    }

    /// Serial list Viterbi decode of one received block (negative
    /// correlation metric, lower is better). Examines candidate paths in
    /// global metric order until one passes the tail-biting closure and ELF
    /// divisibility checks, or `max_list` candidates have been examined.
    pub fn decode(&self, channel: &[f64], max_list: usize) -> Result<DecodeOutcome> {
        let tr = &self.trellis;
        if channel.len() != tr.blocklength() {
            return Err(Error::LengthMismatch {
                context: "decode channel values",
                expected: tr.blocklength(),
                actual: channel.len(),
            });
        }
        if channel.iter().any(|x| !x.is_finite()) {
            return Err(Error::Unsupported("non-finite channel value".into()));
        }
        if max_list == 0 {
            return Err(Error::Unsupported("max_list must be >= 1".into()));
        }
        let bm = self.branch_metrics(channel);
        let states = tr.states();
        let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
        let mut seq = 0u64;
        let push = |heap: &mut BinaryHeap<Entry>, seq: &mut u64, metric, sigma, kind| {
            heap.push(Entry {
                metric,
                sigma,
                seq: *seq,
                kind,
            });
            *seq += 1;
        };
        match tr.mode {
            Mode::Zt => {
                push(&mut heap, &mut seq, f64::NEG_INFINITY, 0, EntryKind::Seed);
            }
            Mode::Tb => {
                let back_any = self.backward_free_end(&bm);
                let fwd_free = self.forward_free_start(&bm);
                for sigma in 0..states as u32 {
                    let lb = back_any[sigma as usize].max(fwd_free[sigma as usize]);
                    if lb.is_finite() {
                        push(&mut heap, &mut seq, lb, sigma, EntryKind::Seed);
                    }
                }
            }
        }
        let mut instances: Vec<Option<Box<[f64]>>> = vec![None; states];
        let mut explored = 0usize;
        while let Some(entry) = heap.pop() {
            let sigma = entry.sigma;
            match entry.kind {
                EntryKind::Seed => {
                    let btab = self.backward_to_end(&bm, sigma).into_boxed_slice();
                    let best = btab[sigma as usize];
                    instances[sigma as usize] = Some(btab);
                    if best.is_finite() {
                        push(
                            &mut heap,
                            &mut seq,
                            best,
                            sigma,
                            EntryKind::Node {
                                detours: SmallVec::new(),
                            },
                        );
                    }
                }
                EntryKind::Node { detours } => {
                    explored += 1;
                    let btab = instances[sigma as usize].as_ref().unwrap();
                    let walk = self.walk(&bm, btab, sigma, &detours);
                    if self.accepts(&walk.bits) {
                        let message = walk.bits.to_bit_vec()[..self.k].to_vec();
                        return Ok(DecodeOutcome {
                            status: DecodeStatus::Found,
                            message: Some(message),
                            list_rank: explored,
                            metric: entry.metric,
                            paths_explored: explored,
                        });
                    }
                    if explored >= max_list {
                        break;
                    }
                    // first child: one more detour anywhere past the last
                    let last = detours.last().copied();
                    if let Some((delta, t)) = self.best_detour(&bm, btab, &walk, last, None) {
                        let mut d = detours.clone();
                        d.push(t);
                        push(
                            &mut heap,
                            &mut seq,
                            entry.metric + delta,
                            sigma,
                            EntryKind::Node { detours: d },
                        );
                    }
                    // next sibling: re-place this node's own last detour
                    if let Some(&own) = detours.last() {
                        let parent = &detours[..detours.len() - 1];
                        let pwalk = self.walk(&bm, btab, sigma, parent);
                        let (_, _, own_delta) = self.decide(&bm, btab, own as usize, pwalk.states[own as usize]);
                        let after = parent.last().copied();
                        if let Some((delta, t)) =
                            self.best_detour(&bm, btab, &pwalk, after, Some((own_delta, own)))
                        {
                            let mut d: SmallVec<[u32; 6]> = SmallVec::from_slice(parent);
                            d.push(t);
                            push(
                                &mut heap,
                                &mut seq,
                                entry.metric - own_delta + delta,
                                sigma,
                                EntryKind::Node { detours: d },
                            );
                        }
                    }
                }
            }
        }
        Ok(DecodeOutcome {
            status: DecodeStatus::Nack,
            message: None,
            list_rank: explored,
            metric: f64::INFINITY,
            paths_explored: explored,
        })
    }
}

/// One-shot serial list Viterbi decode; builds a [`ListDecoder`] and
/// decodes a single block.
pub fn slvd_decode(
    channel_values: &[f64],
    spec: &ConcatSpec,
    max_list: usize,
) -> Result<DecodeOutcome> {
    ListDecoder::new(spec)?.decode(channel_values, max_list)
}
