//! Error-corrected iris template matching built on QC-LDPC codes.
//!
//! The crate bundles everything needed to reproduce the matcher end to end:
//!
//! - [`code_registry`]: the seven QC-LDPC code configurations and their
//!   expanded sparse parity-check matrices.
//! - [`codec`]: systematic encoding and quantized layered min-sum decoding.
//! - [`iris_features`]: 1D log-Gabor feature extraction and binarization.
//! - [`template_protocol`]: enrollment with parity escrow and
//!   error-corrected verification.
//! - [`mode_manager`]: the multi-mode decoder model with reconfiguration
//!   and energy accounting.
//! - [`synth_data`]: reproducible synthetic subjects and captures.
//! - [`eval`]: FAR/TAR sweeps and pipeline comparison tables.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod code_registry;
pub mod codec;
pub mod eval;
pub mod iris_features;
pub mod mode_manager;
pub mod synth_data;
pub mod template_protocol;

pub use code_registry::{load_registry, QcCodeSpec, Registry};
pub use codec::{decode_layered_minsum, encode, DecodeParams, DecodeResult, LlrWord, Qbits};
pub use iris_features::{binarize, extract_gray_code, BitCode, GrayCode, NormalizedTexture};
pub use template_protocol::{enroll, verify, verify_baseline, EnrollRecord, VerifyOutcome};
