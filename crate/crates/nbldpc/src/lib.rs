//! Non-binary LDPC decoding over GF(2^m).
//!
//! The crate implements four equivalent message-passing decoders for codes
//! defined by sparse parity-check matrices over GF(2^m) — the sum-product
//! algorithm on probability vectors, its logarithm-domain form, and both
//! again with messages kept in the Walsh-spectrum domain — plus the
//! infrastructure to compare them: channel models, random regular code
//! construction with alist I/O, per-node operation profiling, a critical-path
//! latency model for node-parallel decoding, Monte Carlo error-rate sweeps
//! and a fixed-point quantization study.
//!
//! The spectrum-domain decoders swap the node roles: convolutions move from
//! the high-degree check nodes to the degree-2 variable nodes, which evens
//! out the per-node work and removes the check-node bottleneck of
//! node-parallel decoding. Bit decisions and syndrome tests are read directly
//! off spectrum signs, with no inverse transform.

pub mod channel;
pub mod code;
pub mod decoder;
pub mod gf;
pub mod harness;
pub mod transform;

pub use channel::{ebn0_db_to_sigma, ChannelKind, ChannelModel, ReceivedWord};
pub use code::{AlistError, CodeError, SparseParityCheck, TannerGraph};
pub use decoder::{
    decode, DecodeError, DecodeOptions, DecodeResult, Decoder, Domain, Quantizer,
};
pub use gf::{dot_parity, BinMatrix, FieldTable, Gf, GfError};
pub use harness::{
    critical_path_time, profile_node_counts, quantize_study, run_montecarlo, ChannelSpec,
    CostModel, CriticalPath, NodeClass, ProfileReport, QuantizeConfig, SimConfig, TrialRecord,
};
pub use transform::{
    convolve, gamma, gamma_inv, iwht, log_convolve, signed_log_convolve, wht, SignedLog,
    DEFAULT_LOG_FLOOR,
};
