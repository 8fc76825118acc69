//! Command-line front end: code generation, one-shot decoding, Monte Carlo
//! sweeps, per-node profiling and the quantization study.
//!
//! Exit codes: 0 success, 1 usage error, 2 input-file error, 3 construction
//! failure.

use clap::{Args, Parser, Subcommand};
use nbldpc::decoder::{decode, DecodeOptions, Domain};
use nbldpc::harness::{
    critical_path_time, profile_csv, profile_node_counts, quantize_csv, quantize_study,
    run_montecarlo, simulate_csv, ChannelSpec, CostModel, QuantizeConfig, SimConfig,
};
use nbldpc::{FieldTable, Gf, SparseParityCheck};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nbldpc",
    about = "Non-binary LDPC decoding over GF(2^m): four message-passing variants, \
             simulation and node-computation profiling",
    after_help = "AWGN sweep points are Eb/N0 in dB, converted through \
                  sigma^2 = 1/(2 R Eb/N0) at the code's design rate R = 1 - M/N; \
                  qsc points are symbol error probabilities."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random (j,k)-regular code and write it as an alist file.
    GenCode(GenCodeArgs),
    /// Decode one received word from a CSV of per-symbol prior vectors.
    Decode(DecodeArgs),
    /// Monte Carlo BER/SER/FER sweep over channel points.
    Simulate(SimulateArgs),
    /// Per-node operation counts and critical-path latency for one iteration.
    Profile(ProfileArgs),
    /// Fixed-point message quantization study (prob-with-transform vs
    /// signed-log spectrum domain).
    Quantize(QuantizeArgs),
}

#[derive(Args)]
struct GenCodeArgs {
    /// Code length in symbols.
    #[arg(long)]
    n: usize,
    /// Column weight (variable-node degree).
    #[arg(long)]
    j: usize,
    /// Row weight (check-node degree).
    #[arg(long)]
    k: usize,
    /// Extension degree of GF(2^m).
    #[arg(long)]
    m: u32,
    /// Primitive polynomial mask in hex (coefficients of x^0..x^{m-1}).
    #[arg(long, value_parser = parse_hex)]
    poly: Option<u32>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output alist file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    alist: PathBuf,
    #[arg(long, default_value = "prob")]
    domain: Domain,
    /// CSV of priors: one row per symbol, 2^m probabilities per row.
    #[arg(long)]
    priors: PathBuf,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Print per-iteration tentative decisions.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    alist: PathBuf,
    #[arg(long, default_value = "prob")]
    domain: Domain,
    #[arg(long, default_value = "awgn")]
    channel: ChannelSpec,
    /// Comma-separated channel points (Eb/N0 dB for awgn, epsilon for qsc).
    #[arg(long, value_parser = parse_points)]
    points: Points,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// 0 disables decoding and scores raw channel decisions.
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output CSV (point,trials,ber,ser,fer,avg_iters).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    alist: PathBuf,
    #[arg(long, default_value = "log")]
    domain: Domain,
    /// Override the 2^{2m} unit cost of one pairwise convolution.
    #[arg(long)]
    cost_conv: Option<u64>,
    /// Override the 2^m unit cost of one component-wise combine.
    #[arg(long)]
    cost_add: Option<u64>,
    /// Output CSV (node_class,pairwise_conv,pairwise_add,permutes,latency_units).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long)]
    alist: PathBuf,
    /// Comma-separated quantizer widths in bits (4..=16).
    #[arg(long, value_parser = parse_bits)]
    bits: Bits,
    #[arg(long, default_value = "qsc")]
    channel: ChannelSpec,
    /// Channel point (epsilon for qsc, Eb/N0 dB for awgn).
    #[arg(long)]
    channel_point: f64,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 30)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Log-magnitude grid width (defaults to bits/2 per width).
    #[arg(long)]
    log_range: Option<f64>,
    /// Output CSV (bits,domain,ber,fer).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone)]
struct Points(Vec<f64>);

#[derive(Clone)]
struct Bits(Vec<u32>);

fn parse_hex(s: &str) -> Result<u32, String> {
    let s = s.trim_start_matches("0x").trim_start_matches("0X");
    u32::from_str_radix(s, 16).map_err(|e| format!("invalid hex mask: {e}"))
}

fn parse_points(s: &str) -> Result<Points, String> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| format!("invalid point list: {e}"))?;
    if vals.is_empty() {
        return Err("empty point list".into());
    }
    Ok(Points(vals))
}

fn parse_bits(s: &str) -> Result<Bits, String> {
    let vals: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse::<u32>()).collect();
    let vals = vals.map_err(|e| format!("invalid bits list: {e}"))?;
    if vals.iter().any(|&b| !(4..=16).contains(&b)) {
        return Err("quantizer widths must lie in 4..=16".into());
    }
    Ok(Bits(vals))
}

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CONSTRUCTION: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INPUT, message: message.into() }
    }

    fn construction(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_CONSTRUCTION, message: message.into() }
    }
}

fn check_qsc_points(channel: ChannelSpec, points: &[f64]) -> Result<(), Failure> {
    if channel == ChannelSpec::Qsc {
        if let Some(bad) = points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Failure::usage(format!("qsc point {bad} outside [0, 1]")));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes, like other line-oriented
    // tools; Rust's default turns EPIPE into a panic.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, anything else is a
            // usage error.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::GenCode(args) => gen_code(args),
        Command::Decode(args) => decode_cmd(args),
        Command::Simulate(args) => simulate(args),
        Command::Profile(args) => profile(args),
        Command::Quantize(args) => quantize(args),
    }
}

fn build_field(m: u32, poly: Option<u32>) -> Result<FieldTable, Failure> {
    match poly {
        Some(p) => FieldTable::with_poly(m, p),
        None => FieldTable::new(m),
    }
    .map_err(|e| Failure::construction(e.to_string()))
}

fn load_code(path: &Path) -> Result<(SparseParityCheck, FieldTable), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let h = SparseParityCheck::from_alist(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let field = build_field(h.degree(), None)?;
    Ok((h, field))
}

fn write_out(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn gen_code(args: GenCodeArgs) -> Result<(), Failure> {
    let field = build_field(args.m, args.poly)?;
    let h = SparseParityCheck::generate_regular(args.n, args.j, args.k, &field, args.seed)
        .map_err(|e| Failure::construction(e.to_string()))?;
    write_out(&args.out, &h.to_alist())?;
    println!(
        "wrote {}: N={} M={} GF({}) rate {:.4}",
        args.out.display(),
        h.num_cols(),
        h.num_rows(),
        h.field_size(),
        h.rate()
    );
    Ok(())
}

fn load_priors(path: &Path, n: usize, q: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut priors = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| {
            Failure::input(format!("{} line {}: {e}", path.display(), lineno + 1))
        })?;
        if row.len() != q {
            return Err(Failure::input(format!(
                "{} line {}: expected {} probabilities, got {}",
                path.display(),
                lineno + 1,
                q,
                row.len()
            )));
        }
        priors.push(row);
    }
    if priors.len() != n {
        return Err(Failure::input(format!(
            "{}: expected {} prior rows, got {}",
            path.display(),
            n,
            priors.len()
        )));
    }
    Ok(priors)
}

fn decode_cmd(args: DecodeArgs) -> Result<(), Failure> {
    let (h, field) = load_code(&args.alist)?;
    let priors = load_priors(&args.priors, h.num_cols(), h.field_size())?;
    let opts = DecodeOptions {
        max_iter: args.max_iter,
        trace: args.trace,
        ..DecodeOptions::for_domain(args.domain)
    };
    let result = decode(&h, &field, &priors, &opts)
        .map_err(|e| Failure::input(format!("decode failed: {e}")))?;
    println!(
        "converged={} iterations={} domain={}",
        result.converged, result.iterations, args.domain
    );
    if let Some(trace) = &result.trace {
        for (i, entry) in trace.iter().enumerate() {
            let syms: Vec<String> = entry.symbols.iter().map(|s| s.0.to_string()).collect();
            println!("iter {:>3}: {}", i + 1, syms.join(" "));
        }
    }
    let syms: Vec<String> = result.symbols.iter().map(|s| s.0.to_string()).collect();
    println!("symbols: {}", syms.join(" "));
    let bits: String = result.bits.iter().map(|b| char::from(b'0' + b)).collect();
    println!("bits: {bits}");
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let (h, field) = load_code(&args.alist)?;
    check_qsc_points(args.channel, &args.points.0)?;
    let cfg = SimConfig {
        channel: args.channel,
        points: args.points.0.clone(),
        trials: args.trials,
        max_iter: args.max_iter,
        master_seed: args.seed,
        workers: args.workers,
        domain: args.domain,
        check_via_wht: false,
        quantizer: None,
    };
    let summaries = run_montecarlo(&h, &field, &cfg);
    write_out(&args.out, &simulate_csv(&summaries, h.num_cols(), field.degree()))?;
    println!("wrote {} ({} points x {} trials)", args.out.display(), summaries.len(), args.trials);
    Ok(())
}

fn profile(args: ProfileArgs) -> Result<(), Failure> {
    let (h, field) = load_code(&args.alist)?;
    let report = profile_node_counts(&h, &field, args.domain, 1)
        .map_err(|e| Failure::input(e.to_string()))?;
    let mut cost = CostModel::for_degree(field.degree());
    if let Some(c) = args.cost_conv {
        cost.conv_cost = c;
    }
    if let Some(a) = args.cost_add {
        cost.add_cost = a;
    }
    write_out(&args.out, &profile_csv(&report, &cost))?;
    let path = critical_path_time(&report, &cost);
    println!(
        "domain={} per-iteration latency {} units, bottleneck {} node ({} units)",
        args.domain, path.per_iteration_units, path.bottleneck, path.max_node_units
    );
    Ok(())
}

fn quantize(args: QuantizeArgs) -> Result<(), Failure> {
    let (h, field) = load_code(&args.alist)?;
    check_qsc_points(args.channel, &[args.channel_point])?;
    let cfg = QuantizeConfig {
        bits: args.bits.0.clone(),
        channel: args.channel,
        point: args.channel_point,
        trials: args.trials,
        max_iter: args.max_iter,
        master_seed: args.seed,
        log_range: args.log_range,
    };
    let rows = quantize_study(&h, &field, &cfg);
    write_out(&args.out, &quantize_csv(&rows, h.num_cols(), field.degree()))?;
    println!("wrote {} ({} conditions)", args.out.display(), rows.len());
    Ok(())
}

// Gf is re-exported for the priors CSV docs in --help output.
#[allow(dead_code)]
fn _assert_types(_: Gf) {}
