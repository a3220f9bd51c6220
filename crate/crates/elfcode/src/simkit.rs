//! Monte-Carlo AWGN simulation of list Viterbi decoding.
//!
//! Every trial owns a counter-based RNG substream keyed by `(snr index,
//! trial index)`, so results are bit-identical for a given seed regardless
//! of how trials are scheduled across threads. Trials are processed in
//! fixed-size chunks folded in index order; the stopping rule is evaluated
//! at chunk boundaries only, which keeps the stopping decision (and hence
//! every reported number) scheduler-independent.

use crate::codec::ConcatSpec;
use crate::listdec::{DecodeStatus, ListDecoder};
use crate::wef::ChannelParams;
use crate::{Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Trials per accounting chunk; the stopping rule fires only at multiples
/// of this, so totals do not depend on thread count.
const CHUNK: u64 = 4096;

/// Simulation sweep configuration. `min_errors` and `max_trials` bound
/// each SNR point: a point stops at the first chunk boundary where the
/// error count reaches `min_errors`, or after `max_trials` trials.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub spec: ConcatSpec,
    pub ebn0_points: Vec<f64>,
    pub max_list: usize,
    pub min_errors: u64,
    pub max_trials: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(spec: ConcatSpec, ebn0_points: Vec<f64>) -> Self {
        SimConfig {
            spec,
            ebn0_points,
            max_list: 1 << 20,
            min_errors: 100,
            max_trials: 10_000_000,
            seed: 0,
        }
    }
}

/// Per-SNR-point statistics. `cer` is the codeword error rate (decoding
/// failures, NACKs included) with a 95% Wilson score interval; list ranks
/// average the winning rank over all trials, counting a NACK at the number
/// of paths it examined.
#[derive(Clone, Debug, PartialEq)]
pub struct SimStats {
    pub ebn0_db: f64,
    pub trials: u64,
    pub codeword_errors: u64,
    pub nacks: u64,
    pub cer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_list_rank: f64,
    pub max_list_rank: u64,
}

/// Outcome of one simulated transmission.
#[derive(Clone, Copy, Debug)]
pub struct TrialResult {
    pub error: bool,
    pub nack: bool,
    pub list_rank: u64,
}

/// Standard normal pair by the Box-Muller transform.
fn gaussian_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            break v;
        }
    };
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// One transmission: draw a uniform message from `rng`, BPSK-modulate the
/// codeword at unit symbol energy, add white Gaussian noise of standard
/// deviation `sigma`, list-decode. The draw order (message bits, then
/// noise pairs) is part of the reproducibility contract.
pub fn run_trial(
    spec: &ConcatSpec,
    decoder: &ListDecoder,
    sigma: f64,
    rng: &mut impl RngCore,
    max_list: usize,
) -> Result<TrialResult> {
    let msg: Vec<u8> = (0..spec.k).map(|_| rng.random::<bool>() as u8).collect();
    let cw = spec.encode(&msg)?;
    let mut x: Vec<f64> = cw.iter().map(|&b| 1.0 - 2.0 * b as f64).collect();
    let mut i = 0;
    while i < x.len() {
        let (z0, z1) = gaussian_pair(rng);
        x[i] += sigma * z0;
        if i + 1 < x.len() {
            x[i + 1] += sigma * z1;
        }
        i += 2;
    }
    let out = decoder.decode(&x, max_list)?;
    let nack = out.status == DecodeStatus::Nack;
    Ok(TrialResult {
        error: nack || out.message.as_deref() != Some(&msg[..]),
        nack,
        list_rank: match out.status {
            DecodeStatus::Found => out.list_rank as u64,
            DecodeStatus::Nack => out.paths_explored as u64,
        },
    })
}

#[derive(Clone, Copy, Debug, Default)]
struct ChunkStats {
    trials: u64,
    errors: u64,
    nacks: u64,
    rank_sum: u64,
    rank_max: u64,
}

impl ChunkStats {
    fn fold(&mut self, other: &ChunkStats) {
        self.trials += other.trials;
        self.errors += other.errors;
        self.nacks += other.nacks;
        self.rank_sum += other.rank_sum;
        self.rank_max = self.rank_max.max(other.rank_max);
    }
}

/// 95% Wilson score interval for `errors` successes in `trials` draws.
fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // at the extremes the bound is exactly the point estimate; rounding in
    // center - half would otherwise leave a sliver just past it
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

fn run_chunk(
    cfg: &SimConfig,
    decoder: &ListDecoder,
    sigma: f64,
    snr_idx: usize,
    lo: u64,
    hi: u64,
) -> Result<ChunkStats> {
    let mut s = ChunkStats::default();
    for trial in lo..hi {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(((snr_idx as u64) << 48) | trial);
        let r = run_trial(&cfg.spec, decoder, sigma, &mut rng, cfg.max_list)?;
        s.trials += 1;
        s.errors += r.error as u64;
        s.nacks += r.nack as u64;
        s.rank_sum += r.list_rank;
        s.rank_max = s.rank_max.max(r.list_rank);
    }
    Ok(s)
}

/// Simulates every configured SNR point. Deterministic for a given
/// `seed`: per-trial RNG substreams and chunk-ordered accounting make the
/// output independent of the rayon worker count.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<SimStats>> {
    if cfg.max_trials == 0 {
        return Err(Error::Unsupported("max_trials must be >= 1".into()));
    }
    if cfg.max_list == 0 {
        return Err(Error::Unsupported("max_list must be >= 1".into()));
    }
    if cfg.ebn0_points.len() >= 1 << 16 {
        return Err(Error::Unsupported(
            "at most 65535 SNR points per sweep".into(),
        ));
    }
    if cfg.ebn0_points.iter().any(|x| !x.is_finite()) {
        return Err(Error::Unsupported("non-finite SNR point".into()));
    }
    if cfg.max_trials >= 1 << 48 {
        return Err(Error::Unsupported(
            "max_trials must fit the 48-bit trial substream index".into(),
        ));
    }
    let decoder = ListDecoder::new(&cfg.spec)?;
    let mut out = Vec::with_capacity(cfg.ebn0_points.len());
    for (snr_idx, &ebn0_db) in cfg.ebn0_points.iter().enumerate() {
        let sigma = ChannelParams::new(ebn0_db, cfg.spec.rate())?.sigma();
        let total_chunks = cfg.max_trials.div_ceil(CHUNK);
        let wave = (rayon::current_num_threads().max(1) as u64) * 2;
        let mut agg = ChunkStats::default();
        let mut next = 0u64;
        'point: while next < total_chunks {
            let wave_end = (next + wave).min(total_chunks);
            let results: Result<Vec<ChunkStats>> = (next..wave_end)
                .into_par_iter()
                .map(|c| {
                    let lo = c * CHUNK;
                    let hi = ((c + 1) * CHUNK).min(cfg.max_trials);
                    run_chunk(cfg, &decoder, sigma, snr_idx, lo, hi)
                })
                .collect();
            for chunk in results? {
                agg.fold(&chunk);
                if agg.errors >= cfg.min_errors {
                    break 'point;
                }
            }
            next = wave_end;
        }
        let (ci_lo, ci_hi) = wilson_interval(agg.errors, agg.trials);
        out.push(SimStats {
            ebn0_db,
            trials: agg.trials,
            codeword_errors: agg.errors,
            nacks: agg.nacks,
            cer: agg.errors as f64 / agg.trials as f64,
            ci_lo,
            ci_hi,
            mean_list_rank: agg.rank_sum as f64 / agg.trials as f64,
            max_list_rank: agg.rank_max,
        });
        log::info!(
            "simulated {} dB: {} errors / {} trials (cer {:.3e})",
            ebn0_db,
            agg.errors,
            agg.trials,
            out.last().unwrap().cer
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{ConvCode, ElfCode, Mode, PuncturePattern};

    fn small_spec() -> ConcatSpec {
        ConcatSpec::new(
            ConvCode::from_octal(&["5", "7"]).unwrap(),
            ElfCode::from_hex("0xB").unwrap(),
            8,
            Mode::Tb,
            None,
        )
        .unwrap()
    }

    #[test]
    fn trial_without_noise_never_errs() {
        let spec = small_spec();
        let dec = ListDecoder::new(&spec).unwrap();
        for t in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            rng.set_stream(t);
            let r = run_trial(&spec, &dec, 0.0, &mut rng, 1 << 12).unwrap();
            assert!(!r.error);
            assert!(!r.nack);
            assert_eq!(r.list_rank, 1);
        }
    }

    #[test]
    fn gaussian_moments_are_sane() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n / 2 {
            let (a, b) = gaussian_pair(&mut rng);
            sum += a + b;
            sq += a * a + b * b;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn wilson_interval_brackets_point_estimate() {
        for (e, n) in [(0u64, 100u64), (1, 100), (50, 100), (100, 100), (7, 4096)] {
            let (lo, hi) = wilson_interval(e, n);
            let p = e as f64 / n as f64;
            assert!((0.0..=1.0).contains(&lo));
            assert!((0.0..=1.0).contains(&hi));
            assert!(lo <= p && p <= hi);
        }
        // textbook check: 50/100 at 95% is about [0.404, 0.596]
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.40383).abs() < 5e-4, "lo {lo}");
        assert!((hi - 0.59617).abs() < 5e-4, "hi {hi}");
    }

    #[test]
    fn sweep_is_deterministic_across_thread_counts() {
        let mut cfg = SimConfig::new(small_spec(), vec![1.0, 4.0]);
        cfg.min_errors = 25;
        cfg.max_trials = 20_000;
        cfg.max_list = 256;
        cfg.seed = 42;
        let baseline = run_sweep(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let single = pool.install(|| run_sweep(&cfg).unwrap());
        assert_eq!(baseline, single);
        // and the statistics look like a channel simulation at all
        assert!(baseline[0].cer > baseline[1].cer);
        assert!(baseline[0].trials <= cfg.max_trials);
        for s in &baseline {
            assert!(s.nacks <= s.codeword_errors);
            assert!(s.mean_list_rank >= 1.0);
            assert!(s.max_list_rank as f64 >= s.mean_list_rank);
            assert!(s.ci_lo <= s.cer && s.cer <= s.ci_hi);
        }
    }

    #[test]
    fn sweep_respects_trial_cap() {
        let mut cfg = SimConfig::new(small_spec(), vec![9.0]);
        cfg.min_errors = 1_000_000;
        cfg.max_trials = 5000;
        cfg.max_list = 64;
        cfg.seed = 1;
        let stats = run_sweep(&cfg).unwrap();
        assert_eq!(stats[0].trials, 5000);
        assert!(stats[0].cer < 0.05);
    }

    #[test]
    fn punctured_spec_simulates() {
        let pat = PuncturePattern::new(vec![0, 1, 0, 2]).unwrap();
        let spec = ConcatSpec::new(
            ConvCode::from_octal(&["13", "17"]).unwrap(),
            ElfCode::from_hex("0x7").unwrap(),
            9,
            Mode::Tb,
            Some(pat),
        )
        .unwrap();
        let mut cfg = SimConfig::new(spec, vec![5.0]);
        cfg.min_errors = 10;
        cfg.max_trials = 8192;
        cfg.max_list = 512;
        let stats = run_sweep(&cfg).unwrap();
        assert_eq!(stats.len(), 1);
        assert!(stats[0].trials > 0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(small_spec(), vec![1.0]);
        cfg.max_trials = 0;
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = SimConfig::new(small_spec(), vec![f64::NAN]);
        cfg.max_trials = 10;
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = SimConfig::new(small_spec(), vec![1.0]);
        cfg.max_list = 0;
        assert!(run_sweep(&cfg).is_err());
    }
}
