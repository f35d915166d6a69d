//! Streaming time-causal and time-recursive multi-scale wavelet analysis.
//!
//! The library smooths a signal with a cascade of first-order recursive
//! filters whose time constants follow a geometric ladder of temporal
//! scales, and derives wavelet-style representations (scale-normalized
//! temporal derivatives, bandpass channels, quasi quadrature) from the
//! smoothed channels. All processing is strictly causal: filtering a
//! stream needs only the current per-scale channel values plus a
//! two-frame memory, so the state is O(K) regardless of stream length.
//!
//! Module map:
//! - [`cascade`]: scale ladders, time constants, delay characterizations
//! - [`engine`]: the streaming recursive filter bank and equivalent kernels
//! - [`wavelet`]: difference operators, scale normalization, bandpass,
//!   reconstruction, quasi quadrature
//! - [`oracle`]: high-accuracy continuous-theory reference computations
//! - [`select`]: scale-space extremum detection and scale-selection sweeps
//! - [`signal`]: test-signal generators and CSV/WAV ingestion

pub mod cascade;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod select;
pub mod signal;
pub mod wavelet;

pub use cascade::{build_cascade, CascadeMode, CascadeSpec, LevelPlan};
pub use engine::{ChannelBank, KernelSamples};
pub use error::{Error, Result};
pub use wavelet::{Normalization, Scalogram};
