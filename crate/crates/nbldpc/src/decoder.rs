//! The four message-passing decoders under one schedule driver.
//!
//! All variants run the same flooding schedule — check-to-variable sweep,
//! variable-to-check sweep, tentative decision, convergence test — and differ
//! only in the message representation and the two node kernels:
//!
//! | domain       | check kernel        | variable kernel      |
//! |--------------|---------------------|----------------------|
//! | `prob`       | convolution         | pointwise product    |
//! | `log`        | log-convolution     | pointwise sum        |
//! | `fourier`    | pointwise product   | convolution          |
//! | `logfourier` | pointwise pair sum  | signed log-convolution |
//!
//! The spectrum-domain variants (`fourier`, `logfourier`) swap the roles of
//! the node types, moving the expensive convolutions from the degree-k check
//! nodes onto the degree-j variable nodes. They also support deciding bits
//! and testing syndromes straight from the spectrum aggregates, without an
//! inverse transform: bit `i` of symbol `v` is read off the sign of the
//! aggregate at the unit vector `alpha^{i-1}`, and syndrome bits come from
//! sign products along each check row.

use crate::code::{SparseParityCheck, TannerGraph};
use crate::gf::{FieldTable, Gf};
use crate::transform::{
    convolve, field_permute, gamma, gamma_inv, iwht, log_convolve, signed_log_convolve, wht,
    PermuteDirection, SignedLog, DEFAULT_LOG_FLOOR,
};
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Message representation selector; one value per algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Prob,
    Log,
    Fourier,
    LogFourier,
}

impl Domain {
    pub const ALL: [Domain; 4] = [Domain::Prob, Domain::Log, Domain::Fourier, Domain::LogFourier];

    /// True for the spectrum-domain variants.
    pub fn is_fourier(self) -> bool {
        matches!(self, Domain::Fourier | Domain::LogFourier)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Domain::Prob => "prob",
            Domain::Log => "log",
            Domain::Fourier => "fourier",
            Domain::LogFourier => "logfourier",
        };
        f.write_str(s)
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prob" => Ok(Domain::Prob),
            "log" => Ok(Domain::Log),
            "fourier" => Ok(Domain::Fourier),
            "logfourier" => Ok(Domain::LogFourier),
            other => Err(format!(
                "unknown domain '{other}' (expected prob, log, fourier or logfourier)"
            )),
        }
    }
}

/// Variable-to-check normalization rule in the probability domain. The
/// decoding output is the same either way; both are kept so that invariance
/// can be tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbNormalization {
    /// Divide by the entry sum.
    SumToOne,
    /// Divide by the entry at symbol 0.
    ValueAtZero,
}

/// Uniform mid-tread quantizer applied to outgoing messages, for fixed-point
/// behaviour studies. Probability entries snap to a grid on `[0,1]`, spectrum
/// entries to `[-1,1]`, log magnitudes to `[-log_range, 0]` (exact zeros stay
/// at the floor; sign bits are untouched).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub bits: u32,
    pub log_range: f64,
}

impl Quantizer {
    /// Default log-magnitude grid width of half a unit per bit: coarse grids
    /// keep resolution near zero where spectrum magnitudes live, fine grids
    /// reach deep enough to be transparent.
    pub fn new(bits: u32) -> Self {
        Quantizer { bits, log_range: bits as f64 / 2.0 }
    }

    fn levels(&self) -> f64 {
        ((1u64 << self.bits) - 1) as f64
    }

    pub fn unit(&self, x: f64) -> f64 {
        let l = self.levels();
        (x.clamp(0.0, 1.0) * l).round() / l
    }

    pub fn symmetric(&self, x: f64) -> f64 {
        let l = self.levels();
        ((x.clamp(-1.0, 1.0) + 1.0) * 0.5 * l).round() / l * 2.0 - 1.0
    }

    pub fn log_mag(&self, x: f64, floor: f64) -> f64 {
        if x <= floor {
            return floor;
        }
        let l = self.levels();
        let lo = -self.log_range;
        ((x.clamp(lo, 0.0) - lo) / self.log_range * l).round() / l * self.log_range + lo
    }
}

#[derive(Debug, Clone)]
pub struct DecodeOptions {
    pub domain: Domain,
    pub max_iter: usize,
    /// Record per-iteration tentative decisions.
    pub trace: bool,
    /// Run the check and variable sweeps node-parallel (same results, the
    /// message buffers are double-buffered between phases either way).
    pub parallel: bool,
    pub log_floor: f64,
    /// When false the loop always runs `max_iter` iterations; used when the
    /// caller wants fixed-point beliefs rather than early codeword exits.
    pub stop_on_convergence: bool,
    pub prob_normalization: ProbNormalization,
    /// Probability domain only: compute check-node convolutions through the
    /// transform instead of directly. Never used by the log-domain variants.
    pub check_via_wht: bool,
    pub quantizer: Option<Quantizer>,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            domain: Domain::Prob,
            max_iter: 50,
            trace: false,
            parallel: false,
            log_floor: DEFAULT_LOG_FLOOR,
            stop_on_convergence: true,
            prob_normalization: ProbNormalization::SumToOne,
            check_via_wht: false,
            quantizer: None,
        }
    }
}

impl DecodeOptions {
    pub fn for_domain(domain: Domain) -> Self {
        DecodeOptions { domain, ..Default::default() }
    }
}

/// Pairwise-operation tallies for one node class in one sweep. An n-fold
/// combine of t messages records t-1 pairwise operations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounts {
    /// Pairwise convolutions (direct, log or signed-log) of two vectors.
    pub pairwise_conv: u64,
    /// Pairwise component-wise combines (adds or multiplies) of two vectors.
    pub pairwise_add: u64,
    /// Coefficient index remaps of one vector.
    pub permutes: u64,
}

impl NodeCounts {
    pub fn merge(self, other: NodeCounts) -> NodeCounts {
        NodeCounts {
            pairwise_conv: self.pairwise_conv + other.pairwise_conv,
            pairwise_add: self.pairwise_add + other.pairwise_add,
            permutes: self.permutes + other.permutes,
        }
    }

    pub fn total_pairwise(&self) -> u64 {
        self.pairwise_conv + self.pairwise_add
    }
}

/// Per-iteration tallies, split by node class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IterationCounters {
    pub check: NodeCounts,
    pub variable: NodeCounts,
    pub tentative: NodeCounts,
}

/// One tentative decision snapshot.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub symbols: Vec<Gf>,
    /// Smallest top-two aggregate ratio across the symbols, in probability
    /// scale; near 1 flags a decision tie.
    pub min_margin: f64,
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub symbols: Vec<Gf>,
    /// Bit decisions, symbol-major: bit `i` of symbol `v` at `v*m + i`. In
    /// the spectrum domains these come from the fast sign rule.
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
    pub counters: Vec<IterationCounters>,
    pub trace: Option<Vec<IterationTrace>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("total cancellation at iteration {iteration}, variable node {node}")]
    NumericalFailure { iteration: usize, node: usize },
    #[error("got {got} prior vectors for code length {expected}")]
    PriorLengthMismatch { expected: usize, got: usize },
    #[error("prior vector {node} has {got} entries, expected {expected}")]
    PriorWidthMismatch { node: usize, expected: usize, got: usize },
    #[error("max_iter must be at least 1")]
    ZeroIterations,
}

// ---------------------------------------------------------------------------
// Fast spectrum-domain decision and syndrome rules
// ---------------------------------------------------------------------------

/// Assemble symbols from symbol-major bit decisions.
pub fn symbols_from_bits(bits: &[u8], m: u32) -> Vec<Gf> {
    bits.chunks(m as usize)
        .map(|chunk| {
            let mut v = 0u16;
            for (i, &b) in chunk.iter().enumerate() {
                v |= (b as u16 & 1) << i;
            }
            Gf(v)
        })
        .collect()
}

/// Bit decisions straight from spectrum aggregates: bit `i` of symbol `v` is
/// 0 when `Q_v(alpha^{i-1}) > 0` and 1 when it is negative. `alpha^{i-1}` has
/// the unit bit-vector representation, so the probe index is `1 << i`. Exact
/// zeros decide 0.
pub fn fast_map_bits_fourier(aggregates: &[Vec<f64>], m: u32) -> Vec<u8> {
    aggregates
        .iter()
        .flat_map(|q| (0..m).map(move |i| u8::from(q[1usize << i] < 0.0)))
        .collect()
}

/// Signed-log variant: the bit is the sign entry of `M_v(alpha^{i-1})`.
/// Floored magnitudes decide 0.
pub fn fast_map_bits_logfourier(aggregates: &[Vec<SignedLog>], m: u32, floor: f64) -> Vec<u8> {
    aggregates
        .iter()
        .flat_map(|mv| {
            (0..m).map(move |i| {
                let e = mv[1usize << i];
                if e.mag <= floor {
                    0
                } else {
                    e.sign & 1
                }
            })
        })
        .collect()
}

/// Syndrome bits straight from spectrum aggregates, check-major: bit `i` of
/// check `c` is the sign of `prod_{v in V_c} Q_v(H_cv alpha^{i-1})`, taken as
/// the GF(2) sum of the factor signs so magnitudes cannot underflow the
/// product. All-zero output is the convergence criterion.
pub fn fast_syndrome_fourier(
    aggregates: &[Vec<f64>],
    h: &SparseParityCheck,
    field: &FieldTable,
) -> Vec<u8> {
    let m = field.degree();
    let mut out = Vec::with_capacity(h.num_rows() * m as usize);
    for c in 0..h.num_rows() {
        for i in 0..m {
            let mut bit = 0u8;
            for &(v, coeff) in h.row(c) {
                let z = field.fourier_matrix(coeff).apply(Gf(1 << i));
                bit ^= u8::from(aggregates[v][z.0 as usize] < 0.0);
            }
            out.push(bit);
        }
    }
    out
}

/// Signed-log variant: the GF(2) sum of the sign entries of
/// `M_v(H_cv alpha^{i-1})` along each check row.
pub fn fast_syndrome_logfourier(
    aggregates: &[Vec<SignedLog>],
    h: &SparseParityCheck,
    field: &FieldTable,
    floor: f64,
) -> Vec<u8> {
    let m = field.degree();
    let mut out = Vec::with_capacity(h.num_rows() * m as usize);
    for c in 0..h.num_rows() {
        for i in 0..m {
            let mut bit = 0u8;
            for &(v, coeff) in h.row(c) {
                let z = field.fourier_matrix(coeff).apply(Gf(1 << i));
                let e = aggregates[v][z.0 as usize];
                if e.mag > floor {
                    bit ^= e.sign & 1;
                }
            }
            out.push(bit);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Domain kernels
// ---------------------------------------------------------------------------

struct FoldCtx<'q> {
    floor: f64,
    via_wht: bool,
    quantizer: Option<&'q Quantizer>,
    pairwise: u64,
}

trait Kernel {
    type Msg: Clone + Send + Sync;
    /// Whether the check (resp. variable) kernel is a convolution; the other
    /// bucket is a component-wise combine.
    const CHECK_IS_CONV: bool;
    const VAR_IS_CONV: bool;
    /// Index remap applied to incoming messages at a check node, and its
    /// inverse applied to the combined output.
    const PRE: PermuteDirection;
    const POST: PermuteDirection;

    fn from_prior(prior: &[f64], floor: f64) -> Self::Msg;
    fn permute(msg: &Self::Msg, h: Gf, dir: PermuteDirection, field: &FieldTable) -> Self::Msg;
    /// Identity element of the check kernel, for degree-1 checks.
    fn check_identity(q: usize, floor: f64) -> Self::Msg;
    /// Combine the given messages with the check kernel, counting pairwise
    /// operations into the context.
    fn check_fold(others: &[&Self::Msg], ctx: &mut FoldCtx) -> Self::Msg;
    fn var_combine(a: &Self::Msg, b: &Self::Msg, floor: f64) -> Self::Msg;
    /// Normalize an outgoing variable message. Returns false on total
    /// cancellation (an all-zero belief).
    fn normalize(msg: &mut Self::Msg, norm: ProbNormalization, floor: f64) -> bool;
    fn quantize(msg: &mut Self::Msg, qz: &Quantizer, floor: f64);
    /// Symbol decision from an unnormalized aggregate: argmax index (lowest
    /// index on ties) plus the top-two ratio in probability scale.
    fn decide(agg: &Self::Msg, floor: f64) -> (usize, f64);
    fn fast_bits(aggs: &[Self::Msg], m: u32, floor: f64) -> Option<Vec<u8>>;
    fn fast_syndrome(
        aggs: &[Self::Msg],
        h: &SparseParityCheck,
        field: &FieldTable,
        floor: f64,
    ) -> Option<Vec<u8>>;
}

fn argmax_with_ratio(values: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let mut second = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if i != best && v > second {
            second = v;
        }
    }
    (best, values[best] / second.max(0.0))
}

struct ProbKernel;

impl Kernel for ProbKernel {
    type Msg = Vec<f64>;
    const CHECK_IS_CONV: bool = true;
    const VAR_IS_CONV: bool = false;
    const PRE: PermuteDirection = PermuteDirection::ByHInv;
    const POST: PermuteDirection = PermuteDirection::ByH;

    fn from_prior(prior: &[f64], _floor: f64) -> Vec<f64> {
        prior.to_vec()
    }

    fn permute(msg: &Vec<f64>, h: Gf, dir: PermuteDirection, field: &FieldTable) -> Vec<f64> {
        field_permute(msg, h, dir, field)
    }

    fn check_identity(q: usize, _floor: f64) -> Vec<f64> {
        let mut delta = vec![0.0; q];
        delta[0] = 1.0;
        delta
    }

    fn check_fold(others: &[&Vec<f64>], ctx: &mut FoldCtx) -> Vec<f64> {
        if ctx.via_wht {
            // Transform once per input, multiply pointwise, transform back.
            // With a quantizer active the spectrum intermediates are snapped
            // too, mimicking a fixed-point transform pipeline.
            let snap = |v: &mut Vec<f64>, qz: Option<&Quantizer>| {
                if let Some(qz) = qz {
                    for x in v.iter_mut() {
                        *x = qz.symmetric(*x);
                    }
                }
            };
            let mut spectra: Vec<Vec<f64>> = others
                .iter()
                .map(|p| {
                    let mut s = wht(p);
                    snap(&mut s, ctx.quantizer);
                    s
                })
                .collect();
            let mut prod = spectra.swap_remove(0);
            for s in &spectra {
                for (a, b) in prod.iter_mut().zip(s.iter()) {
                    *a *= b;
                }
                ctx.pairwise += 1;
                snap(&mut prod, ctx.quantizer);
            }
            let mut out = iwht(&prod);
            for x in out.iter_mut() {
                *x = x.max(0.0);
            }
            out
        } else {
            let mut acc = others[0].clone();
            for other in &others[1..] {
                acc = convolve(&acc, other);
                ctx.pairwise += 1;
            }
            acc
        }
    }

    fn var_combine(a: &Vec<f64>, b: &Vec<f64>, _floor: f64) -> Vec<f64> {
        a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
    }

    fn normalize(msg: &mut Vec<f64>, norm: ProbNormalization, _floor: f64) -> bool {
        let denom = match norm {
            ProbNormalization::SumToOne => msg.iter().sum::<f64>(),
            ProbNormalization::ValueAtZero => msg[0],
        };
        if !denom.is_finite() || denom <= 1e-300 {
            return false;
        }
        for x in msg.iter_mut() {
            *x /= denom;
        }
        true
    }

    fn quantize(msg: &mut Vec<f64>, qz: &Quantizer, _floor: f64) {
        for x in msg.iter_mut() {
            *x = qz.unit(*x);
        }
    }

    fn decide(agg: &Vec<f64>, _floor: f64) -> (usize, f64) {
        argmax_with_ratio(agg)
    }

    fn fast_bits(_aggs: &[Vec<f64>], _m: u32, _floor: f64) -> Option<Vec<u8>> {
        None
    }

    fn fast_syndrome(
        _aggs: &[Vec<f64>],
        _h: &SparseParityCheck,
        _field: &FieldTable,
        _floor: f64,
    ) -> Option<Vec<u8>> {
        None
    }
}

struct LogKernel;

impl Kernel for LogKernel {
    type Msg = Vec<f64>;
    const CHECK_IS_CONV: bool = true;
    const VAR_IS_CONV: bool = false;
    const PRE: PermuteDirection = PermuteDirection::ByHInv;
    const POST: PermuteDirection = PermuteDirection::ByH;

    fn from_prior(prior: &[f64], floor: f64) -> Vec<f64> {
        let mut msg: Vec<f64> = prior
            .iter()
            .map(|&p| if p > 0.0 { p.ln().max(floor) } else { floor })
            .collect();
        Self::normalize(&mut msg, ProbNormalization::SumToOne, floor);
        msg
    }

    fn permute(msg: &Vec<f64>, h: Gf, dir: PermuteDirection, field: &FieldTable) -> Vec<f64> {
        field_permute(msg, h, dir, field)
    }

    fn check_identity(q: usize, floor: f64) -> Vec<f64> {
        let mut delta = vec![floor; q];
        delta[0] = 0.0;
        delta
    }

    fn check_fold(others: &[&Vec<f64>], ctx: &mut FoldCtx) -> Vec<f64> {
        let mut acc = others[0].clone();
        for other in &others[1..] {
            acc = log_convolve(&acc, other, ctx.floor);
            ctx.pairwise += 1;
        }
        acc
    }

    fn var_combine(a: &Vec<f64>, b: &Vec<f64>, floor: f64) -> Vec<f64> {
        a.iter()
            .zip(b.iter())
            .map(|(&x, &y)| {
                if x <= floor || y <= floor {
                    floor
                } else {
                    x + y
                }
            })
            .collect()
    }

    fn normalize(msg: &mut Vec<f64>, _norm: ProbNormalization, floor: f64) -> bool {
        if msg.iter().all(|&x| x <= floor) {
            return false;
        }
        let anchor = msg[0];
        for x in msg.iter_mut() {
            if *x > floor {
                *x -= anchor;
            }
        }
        true
    }

    fn quantize(msg: &mut Vec<f64>, qz: &Quantizer, floor: f64) {
        for x in msg.iter_mut() {
            *x = qz.log_mag(*x, floor);
        }
    }

    fn decide(agg: &Vec<f64>, _floor: f64) -> (usize, f64) {
        let mut best = 0usize;
        for (i, &v) in agg.iter().enumerate() {
            if v > agg[best] {
                best = i;
            }
        }
        let mut second = f64::NEG_INFINITY;
        for (i, &v) in agg.iter().enumerate() {
            if i != best && v > second {
                second = v;
            }
        }
        (best, (agg[best] - second).exp())
    }

    fn fast_bits(_aggs: &[Vec<f64>], _m: u32, _floor: f64) -> Option<Vec<u8>> {
        None
    }

    fn fast_syndrome(
        _aggs: &[Vec<f64>],
        _h: &SparseParityCheck,
        _field: &FieldTable,
        _floor: f64,
    ) -> Option<Vec<u8>> {
        None
    }
}

struct FourierKernel;

impl Kernel for FourierKernel {
    type Msg = Vec<f64>;
    const CHECK_IS_CONV: bool = false;
    const VAR_IS_CONV: bool = true;
    const PRE: PermuteDirection = PermuteDirection::FourierByH;
    const POST: PermuteDirection = PermuteDirection::FourierByHInv;

    fn from_prior(prior: &[f64], _floor: f64) -> Vec<f64> {
        wht(prior)
    }

    fn permute(msg: &Vec<f64>, h: Gf, dir: PermuteDirection, field: &FieldTable) -> Vec<f64> {
        field_permute(msg, h, dir, field)
    }

    fn check_identity(q: usize, _floor: f64) -> Vec<f64> {
        vec![1.0; q]
    }

    fn check_fold(others: &[&Vec<f64>], ctx: &mut FoldCtx) -> Vec<f64> {
        let mut acc = others[0].clone();
        for other in &others[1..] {
            for (a, b) in acc.iter_mut().zip(other.iter()) {
                *a *= b;
            }
            ctx.pairwise += 1;
        }
        acc
    }

    fn var_combine(a: &Vec<f64>, b: &Vec<f64>, _floor: f64) -> Vec<f64> {
        convolve(a, b)
    }

    fn normalize(msg: &mut Vec<f64>, _norm: ProbNormalization, _floor: f64) -> bool {
        let dc = msg[0];
        if !dc.is_finite() || dc <= 1e-300 {
            return false;
        }
        for x in msg.iter_mut() {
            *x /= dc;
        }
        true
    }

    fn quantize(msg: &mut Vec<f64>, qz: &Quantizer, _floor: f64) {
        for x in msg.iter_mut() {
            *x = qz.symmetric(*x);
        }
    }

    fn decide(agg: &Vec<f64>, _floor: f64) -> (usize, f64) {
        argmax_with_ratio(&iwht(agg))
    }

    fn fast_bits(aggs: &[Vec<f64>], m: u32, _floor: f64) -> Option<Vec<u8>> {
        Some(fast_map_bits_fourier(aggs, m))
    }

    fn fast_syndrome(
        aggs: &[Vec<f64>],
        h: &SparseParityCheck,
        field: &FieldTable,
        _floor: f64,
    ) -> Option<Vec<u8>> {
        Some(fast_syndrome_fourier(aggs, h, field))
    }
}

struct LogFourierKernel;

impl Kernel for LogFourierKernel {
    type Msg = Vec<SignedLog>;
    const CHECK_IS_CONV: bool = false;
    const VAR_IS_CONV: bool = true;
    const PRE: PermuteDirection = PermuteDirection::FourierByH;
    const POST: PermuteDirection = PermuteDirection::FourierByHInv;

    fn from_prior(prior: &[f64], floor: f64) -> Vec<SignedLog> {
        wht(prior).iter().map(|&x| gamma(x, floor)).collect()
    }

    fn permute(
        msg: &Vec<SignedLog>,
        h: Gf,
        dir: PermuteDirection,
        field: &FieldTable,
    ) -> Vec<SignedLog> {
        field_permute(msg, h, dir, field)
    }

    fn check_identity(q: usize, _floor: f64) -> Vec<SignedLog> {
        vec![SignedLog::new(0, 0.0); q]
    }

    fn check_fold(others: &[&Vec<SignedLog>], ctx: &mut FoldCtx) -> Vec<SignedLog> {
        let mut acc = others[0].clone();
        for other in &others[1..] {
            for (a, b) in acc.iter_mut().zip(other.iter()) {
                *a = a.mul(*b, ctx.floor);
            }
            ctx.pairwise += 1;
        }
        acc
    }

    fn var_combine(a: &Vec<SignedLog>, b: &Vec<SignedLog>, floor: f64) -> Vec<SignedLog> {
        signed_log_convolve(a, b, floor)
    }

    fn normalize(msg: &mut Vec<SignedLog>, _norm: ProbNormalization, floor: f64) -> bool {
        let dc = msg[0];
        // The entry at z = 0 is the belief mass and is positive in exact
        // arithmetic; anything else is a cancelled message.
        if dc.mag <= floor || dc.sign == 1 {
            return false;
        }
        for x in msg.iter_mut() {
            *x = x.div(dc, floor);
        }
        true
    }

    fn quantize(msg: &mut Vec<SignedLog>, qz: &Quantizer, floor: f64) {
        for x in msg.iter_mut() {
            x.mag = qz.log_mag(x.mag, floor);
        }
    }

    fn decide(agg: &Vec<SignedLog>, floor: f64) -> (usize, f64) {
        let reals: Vec<f64> = agg.iter().map(|&s| gamma_inv(s, floor)).collect();
        argmax_with_ratio(&iwht(&reals))
    }

    fn fast_bits(aggs: &[Vec<SignedLog>], m: u32, floor: f64) -> Option<Vec<u8>> {
        Some(fast_map_bits_logfourier(aggs, m, floor))
    }

    fn fast_syndrome(
        aggs: &[Vec<SignedLog>],
        h: &SparseParityCheck,
        field: &FieldTable,
        floor: f64,
    ) -> Option<Vec<u8>> {
        Some(fast_syndrome_logfourier(aggs, h, field, floor))
    }
}

// ---------------------------------------------------------------------------
// Schedule driver
// ---------------------------------------------------------------------------

/// A decoding instance bound to one parity-check matrix. Immutable, so one
/// instance can serve many concurrent decode calls.
pub struct Decoder<'a> {
    h: &'a SparseParityCheck,
    field: &'a FieldTable,
    graph: TannerGraph,
    opts: DecodeOptions,
}

/// One-shot convenience wrapper around [`Decoder`].
pub fn decode(
    h: &SparseParityCheck,
    field: &FieldTable,
    priors: &[Vec<f64>],
    opts: &DecodeOptions,
) -> Result<DecodeResult, DecodeError> {
    Decoder::new(h, field, opts.clone()).decode(priors)
}

impl<'a> Decoder<'a> {
    pub fn new(h: &'a SparseParityCheck, field: &'a FieldTable, opts: DecodeOptions) -> Self {
        assert_eq!(h.degree(), field.degree(), "matrix and field degree disagree");
        Decoder { h, field, graph: TannerGraph::new(h), opts }
    }

    pub fn options(&self) -> &DecodeOptions {
        &self.opts
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn decode(&self, priors: &[Vec<f64>]) -> Result<DecodeResult, DecodeError> {
        match self.opts.domain {
            Domain::Prob => self.run::<ProbKernel>(priors),
            Domain::Log => self.run::<LogKernel>(priors),
            Domain::Fourier => self.run::<FourierKernel>(priors),
            Domain::LogFourier => self.run::<LogFourierKernel>(priors),
        }
    }

    fn validate(&self, priors: &[Vec<f64>]) -> Result<(), DecodeError> {
        if self.opts.max_iter == 0 {
            return Err(DecodeError::ZeroIterations);
        }
        let n = self.h.num_cols();
        if priors.len() != n {
            return Err(DecodeError::PriorLengthMismatch { expected: n, got: priors.len() });
        }
        let q = self.field.size();
        for (v, p) in priors.iter().enumerate() {
            if p.len() != q {
                return Err(DecodeError::PriorWidthMismatch { node: v, expected: q, got: p.len() });
            }
        }
        Ok(())
    }

    fn run<K: Kernel>(&self, priors: &[Vec<f64>]) -> Result<DecodeResult, DecodeError> {
        self.validate(priors)?;
        let floor = self.opts.log_floor;
        let n = self.h.num_cols();
        let m = self.field.degree();

        let mut init: Vec<K::Msg> =
            priors.iter().map(|p| K::from_prior(p, floor)).collect();
        if let Some(qz) = &self.opts.quantizer {
            for msg in init.iter_mut() {
                K::quantize(msg, qz, floor);
            }
        }

        // v2c is variable-major, c2v check-major; each sweep writes one
        // buffer in contiguous per-node blocks while reading the other.
        let mut v2c: Vec<K::Msg> = Vec::with_capacity(self.graph.num_edges());
        for (v, msg) in init.iter().enumerate() {
            for _ in 0..self.graph.var(v).len() {
                v2c.push(msg.clone());
            }
        }
        let placeholder = K::check_identity(self.field.size(), floor);
        let mut c2v: Vec<K::Msg> = vec![placeholder; self.graph.num_edges()];

        let mut counters = Vec::new();
        let mut trace: Vec<IterationTrace> = Vec::new();
        let mut last_symbols: Vec<Gf> = vec![Gf::ZERO; n];
        let mut last_bits: Vec<u8> = vec![0; n * m as usize];

        for iteration in 1..=self.opts.max_iter {
            let check_counts = self.check_phase::<K>(&v2c, &mut c2v);
            let variable_counts = self.variable_phase::<K>(&init, &c2v, &mut v2c, iteration)?;
            let (aggs, tentative_counts) = self.aggregates::<K>(&init, &c2v);

            let mut min_margin = f64::INFINITY;
            let symbols: Vec<Gf> = aggs
                .iter()
                .map(|agg| {
                    let (idx, margin) = K::decide(agg, floor);
                    // NaN poisons the iteration margin so callers treat the
                    // whole snapshot as a tie.
                    min_margin = if margin.is_nan() || min_margin.is_nan() {
                        f64::NAN
                    } else {
                        min_margin.min(margin)
                    };
                    Gf(idx as u16)
                })
                .collect();
            let bits = match K::fast_bits(&aggs, m, floor) {
                Some(b) => b,
                None => symbols
                    .iter()
                    .flat_map(|s| (0..m).map(move |i| s.bit(i)))
                    .collect(),
            };

            counters.push(IterationCounters {
                check: check_counts,
                variable: variable_counts,
                tentative: tentative_counts,
            });
            if self.opts.trace {
                trace.push(IterationTrace { symbols: symbols.clone(), min_margin });
            }

            let converged_word: Option<Vec<Gf>> =
                match K::fast_syndrome(&aggs, self.h, self.field, floor) {
                    Some(syndrome) => {
                        if syndrome.iter().all(|&b| b == 0) {
                            // The sign rule can momentarily disagree with the
                            // decided word on weak aggregates; confirm before
                            // declaring convergence.
                            let word = symbols_from_bits(&bits, m);
                            if self.h.is_codeword(self.field, &word) {
                                Some(word)
                            } else {
                                None
                            }
                        } else {
                            None
                        }
                    }
                    None => {
                        if self.h.is_codeword(self.field, &symbols) {
                            Some(symbols.clone())
                        } else {
                            None
                        }
                    }
                };

            last_symbols = symbols;
            last_bits = bits;

            if let Some(word) = converged_word {
                if self.opts.stop_on_convergence {
                    let bits = word.iter().flat_map(|s| (0..m).map(move |i| s.bit(i))).collect();
                    return Ok(DecodeResult {
                        symbols: word,
                        bits,
                        converged: true,
                        iterations: iteration,
                        counters,
                        trace: self.opts.trace.then_some(trace),
                    });
                }
            }
        }

        Ok(DecodeResult {
            symbols: last_symbols,
            bits: last_bits,
            converged: false,
            iterations: self.opts.max_iter,
            counters,
            trace: self.opts.trace.then_some(trace),
        })
    }

    /// Check-to-variable sweep: reads `v2c`, writes `c2v`.
    fn check_phase<K: Kernel>(&self, v2c: &[K::Msg], c2v: &mut [K::Msg]) -> NodeCounts {
        let chunks = split_chunks(c2v, self.graph.check_degrees());
        let node = |c: usize, out: &mut [K::Msg]| -> NodeCounts {
            let adj = self.graph.check(c);
            let mut counts = NodeCounts::default();
            let tilde: Vec<K::Msg> = adj
                .iter()
                .map(|e| {
                    counts.permutes += 1;
                    K::permute(&v2c[e.v2c_slot], e.coeff, K::PRE, self.field)
                })
                .collect();
            for (i, e) in adj.iter().enumerate() {
                let others: Vec<&K::Msg> = tilde
                    .iter()
                    .enumerate()
                    .filter_map(|(j, msg)| (j != i).then_some(msg))
                    .collect();
                let mut ctx = FoldCtx {
                    floor: self.opts.log_floor,
                    via_wht: self.opts.check_via_wht,
                    quantizer: self.opts.quantizer.as_ref(),
                    pairwise: 0,
                };
                let combined = if others.is_empty() {
                    K::check_identity(self.field.size(), self.opts.log_floor)
                } else {
                    K::check_fold(&others, &mut ctx)
                };
                if K::CHECK_IS_CONV {
                    counts.pairwise_conv += ctx.pairwise;
                } else {
                    counts.pairwise_add += ctx.pairwise;
                }
                counts.permutes += 1;
                let mut msg = K::permute(&combined, e.coeff, K::POST, self.field);
                if let Some(qz) = &self.opts.quantizer {
                    K::quantize(&mut msg, qz, self.opts.log_floor);
                }
                out[i] = msg;
            }
            counts
        };
        if self.opts.parallel {
            chunks
                .into_par_iter()
                .enumerate()
                .map(|(c, out)| node(c, out))
                .reduce(NodeCounts::default, NodeCounts::merge)
        } else {
            chunks
                .into_iter()
                .enumerate()
                .fold(NodeCounts::default(), |acc, (c, out)| acc.merge(node(c, out)))
        }
    }

    /// Variable-to-check sweep: reads `c2v` and the initial messages, writes
    /// `v2c`.
    fn variable_phase<K: Kernel>(
        &self,
        init: &[K::Msg],
        c2v: &[K::Msg],
        v2c: &mut [K::Msg],
        iteration: usize,
    ) -> Result<NodeCounts, DecodeError> {
        let chunks = split_chunks(v2c, self.graph.var_degrees());
        let node = |v: usize, out: &mut [K::Msg]| -> Result<NodeCounts, DecodeError> {
            let adj = self.graph.var(v);
            let mut counts = NodeCounts::default();
            for (i, _) in adj.iter().enumerate() {
                let mut combined = init[v].clone();
                let mut ops = 0u64;
                for (j, e2) in adj.iter().enumerate() {
                    if j != i {
                        combined = K::var_combine(&combined, &c2v[e2.c2v_slot], self.opts.log_floor);
                        ops += 1;
                    }
                }
                if K::VAR_IS_CONV {
                    counts.pairwise_conv += ops;
                } else {
                    counts.pairwise_add += ops;
                }
                if !K::normalize(&mut combined, self.opts.prob_normalization, self.opts.log_floor) {
                    return Err(DecodeError::NumericalFailure { iteration, node: v });
                }
                if let Some(qz) = &self.opts.quantizer {
                    K::quantize(&mut combined, qz, self.opts.log_floor);
                }
                out[i] = combined;
            }
            Ok(counts)
        };
        if self.opts.parallel {
            chunks
                .into_par_iter()
                .enumerate()
                .map(|(v, out)| node(v, out))
                .try_reduce(NodeCounts::default, |a, b| Ok(a.merge(b)))
        } else {
            let mut total = NodeCounts::default();
            for (v, out) in chunks.into_iter().enumerate() {
                total = total.merge(node(v, out)?);
            }
            Ok(total)
        }
    }

    /// Tentative-decision aggregates: the initial message combined with all
    /// incoming check messages (no leave-one-out), unnormalized.
    fn aggregates<K: Kernel>(&self, init: &[K::Msg], c2v: &[K::Msg]) -> (Vec<K::Msg>, NodeCounts) {
        let mut counts = NodeCounts::default();
        let aggs = (0..self.h.num_cols())
            .map(|v| {
                let mut agg = init[v].clone();
                let mut ops = 0u64;
                for e in self.graph.var(v) {
                    agg = K::var_combine(&agg, &c2v[e.c2v_slot], self.opts.log_floor);
                    ops += 1;
                }
                if K::VAR_IS_CONV {
                    counts.pairwise_conv += ops;
                } else {
                    counts.pairwise_add += ops;
                }
                agg
            })
            .collect();
        (aggs, counts)
    }
}

fn split_chunks<T>(
    mut buf: &mut [T],
    sizes: impl Iterator<Item = usize>,
) -> Vec<&mut [T]> {
    let mut out = Vec::new();
    for size in sizes {
        let (head, tail) = buf.split_at_mut(size);
        out.push(head);
        buf = tail;
    }
    debug_assert!(buf.is_empty());
    out
}
