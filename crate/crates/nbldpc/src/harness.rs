//! Simulation and profiling harness.
//!
//! Three jobs live here: Monte Carlo error-rate sweeps over a channel
//! parameter grid, per-node operation profiling that tallies how many
//! pairwise convolutions and component-wise combines each node class
//! performs per iteration, and the critical-path model that converts those
//! tallies into per-iteration latency units for a node-parallel decoder. The
//! latency of a node-parallel iteration is governed by the most expensive
//! single node computation, which is exactly what the spectrum-domain
//! variants shrink.

use crate::channel::{ebn0_db_to_sigma, ChannelModel};
use crate::code::SparseParityCheck;
use crate::decoder::{
    decode, DecodeError, DecodeOptions, DecodeResult, Decoder, Domain, IterationCounters,
    NodeCounts, Quantizer,
};
use crate::gf::{FieldTable, Gf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Per-node operation profile
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Variable,
    Check,
    Tentative,
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeClass::Variable => "variable",
            NodeClass::Check => "check",
            NodeClass::Tentative => "tentative",
        })
    }
}

/// Operation tallies for a single node of one class during one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeClassProfile {
    pub class: NodeClass,
    pub counts: NodeCounts,
}

/// Per-node-class profile of one decoding iteration on a regular code.
#[derive(Debug, Clone)]
pub struct ProfileReport {
    pub domain: Domain,
    pub m: u32,
    pub var_degree: usize,
    pub check_degree: usize,
    pub num_vars: usize,
    pub num_checks: usize,
    /// Variable, check and tentative profiles, per single node.
    pub classes: [NodeClassProfile; 3],
    /// Whole-graph totals for one iteration.
    pub totals: IterationCounters,
}

impl ProfileReport {
    pub fn class(&self, class: NodeClass) -> &NodeClassProfile {
        self.classes.iter().find(|c| c.class == class).expect("all classes present")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("profiling requires a (j,k)-regular parity-check matrix")]
    NotRegular,
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Run `iterations` full decoding iterations with counters and report the
/// per-node tallies of each node class. Counts are value-independent, so the
/// run uses uniform priors; irregular matrices are rejected.
pub fn profile_node_counts(
    h: &SparseParityCheck,
    field: &FieldTable,
    domain: Domain,
    iterations: usize,
) -> Result<ProfileReport, ProfileError> {
    if iterations == 0 {
        return Err(ProfileError::ZeroIterations);
    }
    let (j, k) = h.regularity().ok_or(ProfileError::NotRegular)?;
    let q = field.size();
    let priors = vec![vec![1.0 / q as f64; q]; h.num_cols()];
    let opts = DecodeOptions {
        max_iter: iterations,
        stop_on_convergence: false,
        ..DecodeOptions::for_domain(domain)
    };
    let result = decode(h, field, &priors, &opts)?;
    let totals = result.counters[0];
    debug_assert!(result.counters.iter().all(|c| *c == totals));

    let per_node = |counts: NodeCounts, nodes: usize| -> NodeCounts {
        let div = |x: u64| {
            debug_assert!(x.is_multiple_of(nodes as u64), "count not uniform across nodes");
            x / nodes as u64
        };
        NodeCounts {
            pairwise_conv: div(counts.pairwise_conv),
            pairwise_add: div(counts.pairwise_add),
            permutes: div(counts.permutes),
        }
    };

    Ok(ProfileReport {
        domain,
        m: field.degree(),
        var_degree: j,
        check_degree: k,
        num_vars: h.num_cols(),
        num_checks: h.num_rows(),
        classes: [
            NodeClassProfile {
                class: NodeClass::Variable,
                counts: per_node(totals.variable, h.num_cols()),
            },
            NodeClassProfile {
                class: NodeClass::Check,
                counts: per_node(totals.check, h.num_rows()),
            },
            NodeClassProfile {
                class: NodeClass::Tentative,
                counts: per_node(totals.tentative, h.num_cols()),
            },
        ],
        totals,
    })
}

// ---------------------------------------------------------------------------
// Critical-path cost model
// ---------------------------------------------------------------------------

/// Unit costs of the three operation kinds. One pairwise convolution of
/// length-2^m vectors costs `2^{2m}` units, one component-wise combine
/// `2^m`. Permutations are pure index remaps and are priced at zero by
/// default; the field is configurable for studies that charge them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    pub conv_cost: u64,
    pub add_cost: u64,
    pub permute_cost: u64,
}

impl CostModel {
    pub fn for_degree(m: u32) -> Self {
        CostModel { conv_cost: 1 << (2 * m), add_cost: 1 << m, permute_cost: 0 }
    }

    pub fn node_units(&self, counts: &NodeCounts) -> u64 {
        counts.pairwise_conv * self.conv_cost
            + counts.pairwise_add * self.add_cost
            + counts.permutes * self.permute_cost
    }
}

/// Per-iteration latency of a fully node-parallel decoder: each phase costs
/// its most expensive node, phases run back to back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriticalPath {
    pub variable_node_units: u64,
    pub check_node_units: u64,
    pub tentative_node_units: u64,
    /// Sum over the three phases.
    pub per_iteration_units: u64,
    /// The single most expensive node computation.
    pub max_node_units: u64,
    pub bottleneck: NodeClass,
}

pub fn critical_path_time(profile: &ProfileReport, cost: &CostModel) -> CriticalPath {
    let variable = cost.node_units(&profile.class(NodeClass::Variable).counts);
    let check = cost.node_units(&profile.class(NodeClass::Check).counts);
    let tentative = cost.node_units(&profile.class(NodeClass::Tentative).counts);
    // First listed class wins ties, so a variable/tentative tie reports the
    // variable phase.
    let mut bottleneck = NodeClass::Variable;
    let mut max_node_units = variable;
    for (class, units) in [(NodeClass::Check, check), (NodeClass::Tentative, tentative)] {
        if units > max_node_units {
            bottleneck = class;
            max_node_units = units;
        }
    }
    CriticalPath {
        variable_node_units: variable,
        check_node_units: check,
        tentative_node_units: tentative,
        per_iteration_units: variable + check + tentative,
        max_node_units,
        bottleneck,
    }
}

/// Profile CSV with one row per node class:
/// `node_class,pairwise_conv,pairwise_add,permutes,latency_units`.
pub fn profile_csv(profile: &ProfileReport, cost: &CostModel) -> String {
    let mut out = String::from("node_class,pairwise_conv,pairwise_add,permutes,latency_units\n");
    for class in &profile.classes {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            class.class,
            class.counts.pairwise_conv,
            class.counts.pairwise_add,
            class.counts.permutes,
            cost.node_units(&class.counts),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Monte Carlo simulation
// ---------------------------------------------------------------------------

/// Channel family for a sweep; the per-point parameter is Eb/N0 in dB for
/// AWGN and the symbol error probability for the symmetric channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSpec {
    AwgnBpsk,
    Qsc,
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelSpec::AwgnBpsk => "awgn",
            ChannelSpec::Qsc => "qsc",
        })
    }
}

impl FromStr for ChannelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "awgn" => Ok(ChannelSpec::AwgnBpsk),
            "qsc" => Ok(ChannelSpec::Qsc),
            other => Err(format!("unknown channel '{other}' (expected awgn or qsc)")),
        }
    }
}

impl ChannelSpec {
    fn model(&self, m: u32, point: f64, rate: f64) -> ChannelModel {
        match self {
            ChannelSpec::AwgnBpsk => {
                ChannelModel::awgn_bpsk(m, ebn0_db_to_sigma(point, rate)).expect("positive sigma")
            }
            ChannelSpec::Qsc => ChannelModel::qsc(m, point).expect("epsilon in range"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub channel: ChannelSpec,
    pub points: Vec<f64>,
    pub trials: u64,
    /// 0 disables decoding: decisions are taken straight from the priors.
    pub max_iter: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub domain: Domain,
    pub check_via_wht: bool,
    pub quantizer: Option<Quantizer>,
}

impl SimConfig {
    pub fn new(channel: ChannelSpec, points: Vec<f64>, trials: u64, domain: Domain) -> Self {
        SimConfig {
            channel,
            points,
            trials,
            max_iter: 50,
            master_seed: 1,
            workers: 1,
            domain,
            check_via_wht: false,
            quantizer: None,
        }
    }
}

/// Accumulated error statistics for one channel point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PointSummary {
    pub point_millionths: i64,
    pub trials: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub frame_errors: u64,
    pub iterations_total: u64,
    pub decode_failures: u64,
}

impl PointSummary {
    pub fn point(&self) -> f64 {
        self.point_millionths as f64 / 1e6
    }

    pub fn ber(&self, n: usize, m: u32) -> f64 {
        self.bit_errors as f64 / (self.trials as f64 * (n as f64) * m as f64)
    }

    pub fn ser(&self, n: usize) -> f64 {
        self.symbol_errors as f64 / (self.trials as f64 * n as f64)
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.trials as f64
    }

    pub fn avg_iters(&self) -> f64 {
        self.iterations_total as f64 / self.trials as f64
    }

    fn absorb(&mut self, other: &PointSummary) {
        self.trials += other.trials;
        self.bit_errors += other.bit_errors;
        self.symbol_errors += other.symbol_errors;
        self.frame_errors += other.frame_errors;
        self.iterations_total += other.iterations_total;
        self.decode_failures += other.decode_failures;
    }
}

/// Per-trial seed derivation: a counter mixed through splitmix64 so the
/// schedule of random draws is independent of worker count.
fn trial_seed(master: u64, point_idx: usize, trial: u64) -> u64 {
    let mut z = master
        ^ (point_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ trial.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn prior_argmax(p: &[f64]) -> Gf {
    let mut best = 0usize;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    Gf(best as u16)
}

/// Outcome of one simulated transmission and decode attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    /// The swept channel parameter (Eb/N0 in dB or epsilon).
    pub point: f64,
    pub iterations: u64,
    pub converged: bool,
    pub symbol_errors: u64,
    pub bit_errors: u64,
    pub frame_error: bool,
    /// True when the decode attempt died of total cancellation; the whole
    /// frame is then counted as errored.
    pub decode_failure: bool,
    pub wall: std::time::Duration,
}

/// One decode trial against the all-zero codeword.
fn run_trial(
    decoder: Option<&Decoder>,
    h: &SparseParityCheck,
    field: &FieldTable,
    channel: &ChannelModel,
    point: f64,
    seed: u64,
    max_iter: usize,
) -> TrialRecord {
    let started = std::time::Instant::now();
    let n = h.num_cols();
    let m = field.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero_word = vec![Gf::ZERO; n];
    let received = channel.transmit(&zero_word, &mut rng);
    let priors = channel.priors(&received);

    let record = match decoder {
        None => {
            let symbols: Vec<Gf> = priors.iter().map(|p| prior_argmax(p)).collect();
            let symbol_errors = symbols.iter().filter(|s| !s.is_zero()).count() as u64;
            let bit_errors =
                symbols.iter().flat_map(|s| (0..m).map(move |i| s.bit(i))).filter(|&b| b != 0).count()
                    as u64;
            TrialRecord {
                seed,
                point,
                iterations: 0,
                converged: false,
                symbol_errors,
                bit_errors,
                frame_error: symbol_errors > 0,
                decode_failure: false,
                wall: started.elapsed(),
            }
        }
        Some(dec) => match dec.decode(&priors) {
            Ok(DecodeResult { symbols, bits, iterations, converged, .. }) => {
                let bit_errors = bits.iter().filter(|&&b| b != 0).count() as u64;
                let symbol_errors = symbols.iter().filter(|s| !s.is_zero()).count() as u64;
                TrialRecord {
                    seed,
                    point,
                    iterations: iterations as u64,
                    converged,
                    symbol_errors,
                    bit_errors,
                    frame_error: bit_errors > 0 || symbol_errors > 0,
                    decode_failure: false,
                    wall: started.elapsed(),
                }
            }
            Err(DecodeError::NumericalFailure { .. }) => TrialRecord {
                seed,
                point,
                iterations: max_iter as u64,
                converged: false,
                symbol_errors: n as u64,
                bit_errors: n as u64 * m as u64,
                frame_error: true,
                decode_failure: true,
                wall: started.elapsed(),
            },
            Err(other) => panic!("unexpected decode error: {other}"),
        },
    };
    debug_assert!(record.symbol_errors <= n as u64);
    debug_assert!(record.bit_errors <= n as u64 * m as u64);
    record
}

/// Monte Carlo sweep over the configured channel points. Transmits the
/// all-zero codeword each trial and accumulates bit, symbol and frame error
/// counts. Results are bit-identical for any worker count.
pub fn run_montecarlo(
    h: &SparseParityCheck,
    field: &FieldTable,
    cfg: &SimConfig,
) -> Vec<PointSummary> {
    assert!(cfg.trials >= 1, "at least one trial per point");
    let rate = h.rate();
    let decoder_opts = DecodeOptions {
        max_iter: cfg.max_iter.max(1),
        check_via_wht: cfg.check_via_wht,
        quantizer: cfg.quantizer,
        ..DecodeOptions::for_domain(cfg.domain)
    };
    let decoder =
        (cfg.max_iter > 0).then(|| Decoder::new(h, field, decoder_opts));

    cfg.points
        .iter()
        .enumerate()
        .map(|(point_idx, &point)| {
            let channel = cfg.channel.model(field.degree(), point, rate);
            let workers = cfg.workers.max(1).min(cfg.trials as usize);
            let mut summary = PointSummary {
                point_millionths: (point * 1e6).round() as i64,
                ..PointSummary::default()
            };
            let worker_run = |worker: usize| -> PointSummary {
                let mut local = PointSummary::default();
                let mut trial = worker as u64;
                while trial < cfg.trials {
                    let seed = trial_seed(cfg.master_seed, point_idx, trial);
                    let record = run_trial(
                        decoder.as_ref(),
                        h,
                        field,
                        &channel,
                        point,
                        seed,
                        cfg.max_iter,
                    );
                    local.trials += 1;
                    local.bit_errors += record.bit_errors;
                    local.symbol_errors += record.symbol_errors;
                    local.frame_errors += u64::from(record.frame_error);
                    local.iterations_total += record.iterations;
                    local.decode_failures += u64::from(record.decode_failure);
                    trial += workers as u64;
                }
                local
            };
            if workers <= 1 {
                summary.absorb(&worker_run(0));
            } else {
                let locals: Vec<PointSummary> = std::thread::scope(|scope| {
                    let handles: Vec<_> =
                        (0..workers).map(|w| scope.spawn(move || worker_run(w))).collect();
                    handles.into_iter().map(|jh| jh.join().expect("worker panicked")).collect()
                });
                for local in &locals {
                    summary.absorb(local);
                }
            }
            summary
        })
        .collect()
}

/// Sweep CSV: `point,trials,ber,ser,fer,avg_iters`.
pub fn simulate_csv(summaries: &[PointSummary], n: usize, m: u32) -> String {
    let mut out = String::from("point,trials,ber,ser,fer,avg_iters\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{:.6e},{:.6e},{:.6e},{:.4}\n",
            s.point(),
            s.trials,
            s.ber(n, m),
            s.ser(n),
            s.fer(),
            s.avg_iters(),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Quantization study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct QuantizeConfig {
    pub bits: Vec<u32>,
    pub channel: ChannelSpec,
    pub point: f64,
    pub trials: u64,
    pub max_iter: usize,
    pub master_seed: u64,
    /// Log-magnitude grid width; None picks the per-width default.
    pub log_range: Option<f64>,
}

impl QuantizeConfig {
    pub fn new(bits: Vec<u32>, channel: ChannelSpec, point: f64, trials: u64) -> Self {
        QuantizeConfig {
            bits,
            channel,
            point,
            trials,
            max_iter: 30,
            master_seed: 1,
            log_range: None,
        }
    }
}

/// Error counts for one (width, domain) condition; all conditions decode the
/// same received words so rows are paired trial by trial.
#[derive(Debug, Clone)]
pub struct QuantizePoint {
    /// None marks the unquantized baseline.
    pub bits: Option<u32>,
    pub domain: Domain,
    pub per_trial_bit_errors: Vec<u64>,
    pub decode_failures: u64,
}

impl QuantizePoint {
    pub fn total_bit_errors(&self) -> u64 {
        self.per_trial_bit_errors.iter().sum()
    }

    pub fn ber(&self, n: usize, m: u32) -> f64 {
        self.total_bit_errors() as f64
            / (self.per_trial_bit_errors.len() as f64 * n as f64 * m as f64)
    }

    pub fn fer(&self) -> f64 {
        self.per_trial_bit_errors.iter().filter(|&&e| e > 0).count() as f64
            / self.per_trial_bit_errors.len() as f64
    }
}

/// Fixed-point behaviour comparison at one channel point: the probability
/// domain decoding its check nodes through the transform, against the
/// signed-log spectrum domain, with outgoing messages snapped to `bits`-wide
/// grids. Baseline rows with `bits = None` run the same trials unquantized.
pub fn quantize_study(
    h: &SparseParityCheck,
    field: &FieldTable,
    cfg: &QuantizeConfig,
) -> Vec<QuantizePoint> {
    assert!(
        cfg.bits.iter().all(|b| (4..=16).contains(b)),
        "quantizer widths must lie in 4..=16"
    );
    let rate = h.rate();
    let channel = cfg.channel.model(field.degree(), cfg.point, rate);
    let n = h.num_cols();
    let m = field.degree();
    let zero_word = vec![Gf::ZERO; n];

    let run_condition = |bits: Option<u32>, domain: Domain| -> QuantizePoint {
        let quantizer = bits.map(|b| match cfg.log_range {
            Some(range) => Quantizer { bits: b, log_range: range },
            None => Quantizer::new(b),
        });
        let opts = DecodeOptions {
            max_iter: cfg.max_iter,
            check_via_wht: domain == Domain::Prob,
            quantizer,
            ..DecodeOptions::for_domain(domain)
        };
        let decoder = Decoder::new(h, field, opts);
        let mut per_trial = Vec::with_capacity(cfg.trials as usize);
        let mut decode_failures = 0;
        for trial in 0..cfg.trials {
            let seed = trial_seed(cfg.master_seed, 0, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let received = channel.transmit(&zero_word, &mut rng);
            let priors = channel.priors(&received);
            let bit_errors = match decoder.decode(&priors) {
                Ok(result) => result.bits.iter().filter(|&&b| b != 0).count() as u64,
                Err(DecodeError::NumericalFailure { .. }) => {
                    decode_failures += 1;
                    n as u64 * m as u64
                }
                Err(other) => panic!("unexpected decode error: {other}"),
            };
            per_trial.push(bit_errors);
        }
        QuantizePoint { bits, domain, per_trial_bit_errors: per_trial, decode_failures }
    };

    let mut rows = vec![
        run_condition(None, Domain::Prob),
        run_condition(None, Domain::LogFourier),
    ];
    for &bits in &cfg.bits {
        rows.push(run_condition(Some(bits), Domain::Prob));
        rows.push(run_condition(Some(bits), Domain::LogFourier));
    }
    rows
}

/// Quantization CSV: `bits,domain,ber,fer` with `unquantized` baseline rows.
pub fn quantize_csv(rows: &[QuantizePoint], n: usize, m: u32) -> String {
    let mut out = String::from("bits,domain,ber,fer\n");
    for row in rows {
        let bits = match row.bits {
            Some(b) => b.to_string(),
            None => "unquantized".to_string(),
        };
        out.push_str(&format!(
            "{},{},{:.6e},{:.6e}\n",
            bits,
            row.domain,
            row.ber(n, m),
            row.fer(),
        ));
    }
    out
}
