//! Command line frontend for the elfcode library.
//!
//! Every subcommand writes three files next to the chosen output base:
//! `{base}.csv` (primary tabular result), `{base}.json` (the same data,
//! machine readable, exact counts as decimal strings) and
//! `{base}.manifest.json` (resolved configuration, tool version, engine
//! and timing). Exit codes: 0 success, 1 usage error, 2 inconclusive
//! result (e.g. a sieve that exhausts its weight limit), 3 internal error.

use clap::{Args, Parser, Subcommand};
use elfcode::wef::{self, ChannelParams};
use elfcode::{sieve, simkit, ConcatSpec, ConvCode, ElfCode, Mode, PuncturePattern};
use serde_json::json;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "elfcode", version, about = "expurgating-linear-function code toolkit")]
struct Cli {
    /// Worker threads (overrides the ELFCODE_WORKERS environment variable;
    /// default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Truncated weight spectrum of a concatenated code.
    Spectrum(SpectrumArgs),
    /// Union bounds on the codeword error rate over an SNR range.
    Bound(BoundArgs),
    /// Search for optimal expurgating polynomials of the given degrees.
    Sieve(SieveArgs),
    /// Monte-Carlo AWGN simulation of list Viterbi decoding.
    Simulate(SimulateArgs),
    /// Spectrum and rate accounting for a puncturing pattern.
    PunctureEval(PunctureEvalArgs),
}

/// Code selection flags shared by most subcommands.
#[derive(Args, Clone)]
struct CodeArgs {
    /// Octal generator polynomials, comma separated (e.g. 561,753).
    #[arg(long, value_delimiter = ',', required = true)]
    gens: Vec<String>,
    /// ELF polynomial in hex (0x1 disables expurgation).
    #[arg(long, default_value = "0x1")]
    elf: String,
    /// Message bits; exactly one of --k / --stages.
    #[arg(long)]
    k: Option<usize>,
    /// Total input stages (message bits + ELF degree); exactly one of
    /// --k / --stages.
    #[arg(long, conflicts_with = "k")]
    stages: Option<usize>,
    /// Termination: tb (tail-biting) or zt (zero-tail).
    #[arg(long, default_value = "tb")]
    mode: String,
    /// Per-stage puncture indices, space or comma separated; 0 keeps the
    /// stage intact, j deletes generator j's output. The pattern repeats
    /// periodically over the block.
    #[arg(long)]
    pattern: Option<String>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Largest codeword weight counted.
    #[arg(long, default_value_t = 24)]
    wmax: usize,
    /// Output base path.
    #[arg(long, default_value = "spectrum")]
    out: String,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Spectrum truncation depth for the truncated bound.
    #[arg(long, default_value_t = 24)]
    wmax: usize,
    /// SNR range in dB as lo:step:hi, or a single value.
    #[arg(long, value_name = "LO:STEP:HI")]
    snr_db: String,
    #[arg(long, default_value = "bound")]
    out: String,
}

#[derive(Args)]
struct SieveArgs {
    /// Octal generator polynomials, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    gens: Vec<String>,
    /// ELF degrees to search, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    /// Fixed message bits (input length = k + m per degree); exactly one
    /// of --k / --stages.
    #[arg(long)]
    k: Option<usize>,
    /// Fixed total input stages across all degrees; exactly one of
    /// --k / --stages.
    #[arg(long, conflicts_with = "k")]
    stages: Option<usize>,
    #[arg(long, default_value = "tb")]
    mode: String,
    #[arg(long)]
    pattern: Option<String>,
    /// Codeword weight limit for the sieve.
    #[arg(long, default_value_t = 24)]
    limit: usize,
    #[arg(long, default_value = "sieve")]
    out: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// SNR range in dB as lo:step:hi, or a single value.
    #[arg(long, value_name = "LO:STEP:HI")]
    snr_db: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_trials: u64,
    #[arg(long, default_value_t = 1 << 20)]
    max_list: usize,
    #[arg(long, default_value = "simulate")]
    out: String,
}

#[derive(Args)]
struct PunctureEvalArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, default_value_t = 24)]
    wmax: usize,
    #[arg(long, default_value = "puncture_eval")]
    out: String,
}

enum CliError {
    Usage(String),
    Inconclusive(String),
    Internal(anyhow::Error),
}

/// Library errors triggered by bad user input map to usage errors at the
/// parse/build boundary via [`usage`]; anything escaping a computation is
/// either an inconclusive search or an internal failure.
impl From<elfcode::Error> for CliError {
    fn from(e: elfcode::Error) -> Self {
        match e {
            elfcode::Error::SieveInconclusive { .. } => CliError::Inconclusive(e.to_string()),
            other => CliError::Internal(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.into())
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are success, everything else is usage
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let workers = cli.workers.or_else(|| {
        std::env::var("ELFCODE_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = workers {
        if n == 0 {
            eprintln!("error: --workers must be >= 1");
            return 1;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: failed to build thread pool: {e}");
            return 3;
        }
    }
    let started = Instant::now();
    let result = match &cli.cmd {
        Cmd::Spectrum(a) => cmd_spectrum(a, started),
        Cmd::Bound(a) => cmd_bound(a, started),
        Cmd::Sieve(a) => cmd_sieve(a, started),
        Cmd::Simulate(a) => cmd_simulate(a, started),
        Cmd::PunctureEval(a) => cmd_puncture_eval(a, started),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Inconclusive(msg)) => {
            eprintln!("inconclusive: {msg}");
            2
        }
        Err(CliError::Internal(e)) => {
            eprintln!("error: {e:#}");
            3
        }
    }
}

/// 17 significant digits; enough to round-trip any f64.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_pattern(text: &str) -> Result<PuncturePattern, CliError> {
    let indices: Vec<u8> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u8>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("bad puncture pattern: {e}")))?;
    PuncturePattern::new(indices).map_err(usage)
}

fn parse_snr_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("bad SNR range {text:?}: {e}")))?;
    match nums[..] {
        [single] => Ok(vec![single]),
        [lo, step, hi] => {
            if step <= 0.0 || hi < lo {
                return Err(usage(format!(
                    "bad SNR range {text:?}: need lo <= hi and step > 0"
                )));
            }
            let mut pts = Vec::new();
            let mut i = 0u32;
            loop {
                let v = lo + f64::from(i) * step;
                if v > hi + 1e-9 {
                    break;
                }
                pts.push(v);
                i += 1;
            }
            Ok(pts)
        }
        _ => Err(usage(format!(
            "bad SNR range {text:?}: expected a value or lo:step:hi"
        ))),
    }
}

fn build_spec(c: &CodeArgs) -> Result<ConcatSpec, CliError> {
    let gens: Vec<&str> = c.gens.iter().map(String::as_str).collect();
    let conv = ConvCode::from_octal(&gens).map_err(usage)?;
    let elf = ElfCode::from_hex(&c.elf).map_err(usage)?;
    let k = resolve_k(c.k, c.stages, elf.m())?;
    let mode: Mode = c.mode.parse().map_err(usage)?;
    let pattern = c.pattern.as_deref().map(parse_pattern).transpose()?;
    ConcatSpec::new(conv, elf, k, mode, pattern).map_err(usage)
}

fn resolve_k(k: Option<usize>, stages: Option<usize>, m: usize) -> Result<usize, CliError> {
    match (k, stages) {
        (Some(k), None) => Ok(k),
        (None, Some(s)) if s > m => Ok(s - m),
        (None, Some(s)) => Err(usage(format!(
            "--stages {s} leaves no message bits after the degree-{m} ELF"
        ))),
        _ => Err(usage("exactly one of --k / --stages is required")),
    }
}

fn code_config_json(c: &CodeArgs, spec: &ConcatSpec) -> serde_json::Value {
    json!({
        "gens": c.gens,
        "elf": format!("{:#x}", spec.elf.bits()),
        "elf_degree": spec.elf.m(),
        "k": spec.k,
        "input_stages": spec.input_len(),
        "mode": spec.mode.to_string(),
        "pattern": spec.puncture.as_ref().map(|p| p.indices().to_vec()),
        "blocklength": spec.blocklength(),
        "rate": spec.rate(),
    })
}

fn write_outputs(
    base: &str,
    header: &str,
    rows: &[String],
    body: serde_json::Value,
    command: &str,
    config: serde_json::Value,
    engine: Option<&str>,
    seed: Option<u64>,
    started: Instant,
) -> Result<(), CliError> {
    let csv_path = format!("{base}.csv");
    let json_path = format!("{base}.json");
    let manifest_path = format!("{base}.manifest.json");
    let mut csv = String::new();
    let _ = writeln!(csv, "# manifest: {manifest_path}");
    let _ = writeln!(csv, "{header}");
    for row in rows {
        let _ = writeln!(csv, "{row}");
    }
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&json_path, format!("{:#}\n", body))?;
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "engine": engine,
        "seed": seed,
        "workers": rayon::current_num_threads(),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "outputs": [csv_path.clone(), json_path.clone()],
    });
    std::fs::write(&manifest_path, format!("{:#}\n", manifest))?;
    println!("wrote {csv_path}, {json_path}, {manifest_path}");
    Ok(())
}

/// Spectrum of a spec via the engine suited to its state space: the
/// transfer matrix covers combined ELF+encoder states up to 2^14, larger
/// products go through trellis enumeration with divisibility filtering.
fn spectrum_for(spec: &ConcatSpec, wmax: usize) -> Result<(wef::TruncatedWef, &'static str), CliError> {
    if spec.elf.m() + spec.conv.nu() > 14 {
        let s = sieve::expurgated_spectrum(
            &spec.conv,
            spec.input_len(),
            &spec.elf,
            wmax,
            spec.mode,
            spec.puncture.as_ref(),
        )?;
        Ok((s, "enumeration"))
    } else {
        Ok((wef::wef_for_spec(spec, wmax)?, "transfer-matrix"))
    }
}

fn spectrum_rows(s: &wef::TruncatedWef) -> (Vec<String>, serde_json::Value) {
    let rows: Vec<String> = (0..=s.wmax()).map(|w| format!("{w},{}", s.count(w))).collect();
    let counts: Vec<String> = (0..=s.wmax()).map(|w| s.count(w).to_string()).collect();
    let body = json!({
        "wmax": s.wmax(),
        "counts": counts,
        "d_min": s.d_min(),
    });
    (rows, body)
}

fn cmd_spectrum(a: &SpectrumArgs, started: Instant) -> Result<(), CliError> {
    let spec = build_spec(&a.code)?;
    let (s, engine) = spectrum_for(&spec, a.wmax)?;
    let (rows, mut body) = spectrum_rows(&s);
    body["blocklength"] = json!(spec.blocklength());
    body["rate"] = json!(spec.rate());
    let mut config = code_config_json(&a.code, &spec);
    config["wmax"] = json!(a.wmax);
    write_outputs(
        &a.out, "w,count", &rows, body, "spectrum", config, Some(engine), None, started,
    )
}

fn cmd_bound(a: &BoundArgs, started: Instant) -> Result<(), CliError> {
    let spec = build_spec(&a.code)?;
    let snrs = parse_snr_range(&a.snr_db)?;
    let spect = wef::wef_for_spec(&spec, a.wmax)?;
    let d_min = spect.d_min().ok_or_else(|| {
        CliError::Inconclusive(format!(
            "no nonzero codeword of weight <= {}; raise --wmax",
            a.wmax
        ))
    })?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &snr in &snrs {
        let ch = ChannelParams::new(snr, spec.rate())?;
        let truncated = wef::dsu_bound_spectrum(&spect, &ch);
        let full = wef::dsu_bound_wef_spec(&spec, d_min, &ch)?;
        rows.push(format!("{},{},{}", real(snr), real(truncated), real(full)));
        points.push(json!({
            "ebn0_db": snr,
            "truncated_bound": truncated,
            "wef_bound": full,
        }));
    }
    let body = json!({
        "d_min": d_min,
        "wmax": a.wmax,
        "points": points,
    });
    let mut config = code_config_json(&a.code, &spec);
    config["wmax"] = json!(a.wmax);
    config["snr_db"] = json!(a.snr_db);
    write_outputs(
        &a.out,
        "ebn0_db,truncated_bound,wef_bound",
        &rows,
        body,
        "bound",
        config,
        Some("transfer-matrix"),
        None,
        started,
    )
}

fn cmd_sieve(a: &SieveArgs, started: Instant) -> Result<(), CliError> {
    let gens: Vec<&str> = a.gens.iter().map(String::as_str).collect();
    let conv = ConvCode::from_octal(&gens).map_err(usage)?;
    let mode: Mode = a.mode.parse().map_err(usage)?;
    let pattern = a.pattern.as_deref().map(parse_pattern).transpose()?;
    if a.m.is_empty() {
        return Err(usage("at least one --m degree is required"));
    }
    let mut rows = Vec::new();
    let mut degrees = Vec::new();
    for &m in &a.m {
        let input_len = match (a.k, a.stages) {
            (Some(k), None) => k + m,
            (None, Some(s)) => s,
            _ => return Err(usage("exactly one of --k / --stages is required")),
        };
        let r = sieve::sieve_search(&conv, input_len, m, a.limit, mode, pattern.as_ref())?;
        let canonical = r.canonical_winner().0.bits();
        let mut winners = Vec::new();
        for (elf, d_min, a_dmin) in &r.winners {
            rows.push(format!(
                "{m},{:#x},{d_min},{a_dmin},{}",
                elf.bits(),
                u8::from(elf.bits() == canonical)
            ));
            winners.push(json!({
                "elf": format!("{:#x}", elf.bits()),
                "d_min": d_min,
                "a_dmin": a_dmin,
                "canonical": elf.bits() == canonical,
            }));
        }
        let survivor_counts: serde_json::Map<String, serde_json::Value> = r
            .survivors_by_weight
            .iter()
            .map(|(w, s)| (w.to_string(), json!(s.len())))
            .collect();
        degrees.push(json!({
            "m": m,
            "input_stages": input_len,
            "w_star": r.w_star,
            "winners": winners,
            "survivors_by_weight": survivor_counts,
        }));
    }
    let body = json!({ "degrees": degrees });
    let config = json!({
        "gens": a.gens,
        "m": a.m,
        "k": a.k,
        "stages": a.stages,
        "mode": mode.to_string(),
        "pattern": pattern.as_ref().map(|p| p.indices().to_vec()),
        "limit": a.limit,
    });
    write_outputs(
        &a.out,
        "m,elf,d_min,a_dmin,canonical",
        &rows,
        body,
        "sieve",
        config,
        Some("enumeration"),
        None,
        started,
    )
}

fn cmd_simulate(a: &SimulateArgs, started: Instant) -> Result<(), CliError> {
    let spec = build_spec(&a.code)?;
    let snrs = parse_snr_range(&a.snr_db)?;
    let mut cfg = simkit::SimConfig::new(spec, snrs);
    cfg.max_list = a.max_list;
    cfg.min_errors = a.min_errors;
    cfg.max_trials = a.max_trials;
    cfg.seed = a.seed;
    let stats = simkit::run_sweep(&cfg)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for s in &stats {
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{}",
            real(s.ebn0_db),
            s.trials,
            s.codeword_errors,
            s.nacks,
            real(s.cer),
            real(s.ci_lo),
            real(s.ci_hi),
            real(s.mean_list_rank),
            s.max_list_rank,
        ));
        points.push(json!({
            "ebn0_db": s.ebn0_db,
            "trials": s.trials,
            "errors": s.codeword_errors,
            "nacks": s.nacks,
            "cer": s.cer,
            "ci_lo": s.ci_lo,
            "ci_hi": s.ci_hi,
            "mean_list": s.mean_list_rank,
            "max_list": s.max_list_rank,
        }));
    }
    let body = json!({ "points": points });
    let mut config = code_config_json(&a.code, &cfg.spec);
    config["snr_db"] = json!(a.snr_db);
    config["seed"] = json!(a.seed);
    config["min_errors"] = json!(a.min_errors);
    config["max_trials"] = json!(a.max_trials);
    config["max_list"] = json!(a.max_list);
    write_outputs(
        &a.out,
        "ebn0_db,trials,errors,nacks,cer,ci_lo,ci_hi,mean_list,max_list",
        &rows,
        body,
        "simulate",
        config,
        None,
        Some(a.seed),
        started,
    )
}

fn cmd_puncture_eval(a: &PunctureEvalArgs, started: Instant) -> Result<(), CliError> {
    if a.code.pattern.is_none() {
        return Err(usage("puncture-eval requires --pattern"));
    }
    let spec = build_spec(&a.code)?;
    let pattern = spec.puncture.as_ref().unwrap();
    let (s, engine) = spectrum_for(&spec, a.wmax)?;
    let (rows, mut body) = spectrum_rows(&s);
    body["blocklength"] = json!(spec.blocklength());
    body["rate"] = json!(spec.rate());
    body["period"] = json!(pattern.period());
    body["punctured_bits"] = json!(pattern.punctured_bits(spec.trellis_stages()));
    let mut config = code_config_json(&a.code, &spec);
    config["wmax"] = json!(a.wmax);
    write_outputs(
        &a.out,
        "w,count",
        &rows,
        body,
        "puncture-eval",
        config,
        Some(engine),
        None,
        started,
    )
}
