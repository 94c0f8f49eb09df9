//! Enrollment and verification of protected iris templates.
//!
//! Enrollment binarizes a reference gray code, encodes it block by block
//! and escrows the parity bits. Verification averages two probe captures,
//! forms soft LLRs from the averaged gray values together with the escrowed
//! parity at full confidence, decodes, and matches the decoded info bits
//! against the enrolled ones by fractional Hamming distance.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::code_registry::{QcCodeSpec, Registry};
use crate::codec::{
    decode_layered_minsum, encode, CodecError, DecodeParams, DecodeResult, LlrWord, Qbits,
};
use crate::iris_features::{binarize, BitCode, GrayCode};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("gray code of {len} samples does not fit {blocks} block(s) of k={k}")]
    CodeTooSmall { len: usize, blocks: usize, k: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty bit codes cannot be compared")]
    EmptyCode,
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error("{path}: bad enroll record: {reason}")]
    BadRecord { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Gray value used for pad positions at verification. It maps to the
/// full-confidence zero-bit LLR at every quantization width, matching the
/// zero pad bits written at enrollment.
const PAD_GRAY: u8 = 1;

/// Stored reference template: binarized info bits plus escrowed parity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrollRecord {
    pub code_name: String,
    /// Binarized reference bits, zero-padded to `blocks * k`.
    pub x0_prime: BitCode,
    /// Escrowed parity bits, `blocks * (n - k)` in total.
    pub p0_prime: Vec<u8>,
    /// Number of appended zero pad bits.
    pub pad_len: usize,
}

impl EnrollRecord {
    /// Length of the real (unpadded) template.
    pub fn template_len(&self) -> usize {
        self.x0_prime.len() - self.pad_len
    }
}

/// Per-block decoding summary attached to a verification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockDecode {
    pub iterations_used: usize,
    pub converged: bool,
}

impl From<&DecodeResult> for BlockDecode {
    fn from(r: &DecodeResult) -> Self {
        BlockDecode {
            iterations_used: r.iterations_used,
            converged: r.converged,
        }
    }
}

/// Result of one verification attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub matched: bool,
    /// Fractional Hamming distance in [0, 1].
    pub hd: f64,
    /// One entry per decoded block; empty for the baseline path.
    pub decode: Vec<BlockDecode>,
    pub mode_name: String,
}

/// Matching-side options of the verification path.
#[derive(Debug, Clone, Copy)]
pub struct VerifyParams {
    pub qbits: Qbits,
    pub decode: DecodeParams,
    pub threshold: f64,
    /// Circular alignment search window at matching time (0 disables).
    pub align_shifts: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            qbits: Qbits::Q8,
            decode: DecodeParams::default(),
            threshold: 0.32,
            align_shifts: 0,
        }
    }
}

/// Enrolls a reference gray code: binarize, zero-pad to the code's block
/// capacity, encode each block and keep the parity.
pub fn enroll(x0: &GrayCode, spec: &QcCodeSpec) -> Result<EnrollRecord, ProtocolError> {
    let capacity = spec.template_info_capacity();
    if x0.len() > capacity {
        return Err(ProtocolError::CodeTooSmall {
            len: x0.len(),
            blocks: spec.blocks_per_template,
            k: spec.k,
        });
    }
    let mut bits = binarize(x0).0;
    let pad_len = capacity - bits.len();
    bits.resize(capacity, 0);

    let mut p0 = Vec::with_capacity(spec.blocks_per_template * spec.parity_len());
    for b in 0..spec.blocks_per_template {
        let info = &bits[b * spec.k..(b + 1) * spec.k];
        let cw = encode(info, spec)?;
        p0.extend_from_slice(&cw[spec.k..]);
    }

    Ok(EnrollRecord {
        code_name: spec.name.clone(),
        x0_prime: BitCode(bits),
        p0_prime: p0,
        pad_len,
    })
}

/// Element-wise average of two gray codes, rounding halves up.
pub fn arithmetic_mean(x1: &GrayCode, x2: &GrayCode) -> Result<GrayCode, ProtocolError> {
    if x1.len() != x2.len() {
        return Err(ProtocolError::LengthMismatch {
            expected: x1.len(),
            got: x2.len(),
        });
    }
    Ok(GrayCode(
        x1.values()
            .iter()
            .zip(x2.values())
            .map(|(&a, &b)| ((a as u16 + b as u16 + 1) >> 1) as u8)
            .collect(),
    ))
}

/// Builds the soft word for one block: systematic positions carry
/// `128 - gray`, parity positions carry the escrowed bits at full
/// confidence (+S for 0, -S for 1, with S the saturation magnitude).
///
/// For widths below 8 bits the systematic values are rescaled by `S/128`
/// and rounded, with a floor of one LSB so a nonzero opinion never
/// quantizes to an erasure.
pub fn form_llr(
    x3_block: &[u8],
    parity_block: &[u8],
    qbits: Qbits,
) -> Result<LlrWord, CodecError> {
    let saturation = qbits.saturation();
    let systematic = x3_block.iter().map(|&g| {
        let raw = 128.0 - g as f64;
        match qbits {
            Qbits::Float => raw,
            Qbits::Q8 => raw.clamp(-128.0, 127.0),
            q => {
                let (lo, hi) = q.range().expect("fixed width");
                let scaled = (raw * saturation / 128.0).round();
                let floored = if raw != 0.0 && scaled == 0.0 {
                    raw.signum()
                } else {
                    scaled
                };
                floored.clamp(lo as f64, hi as f64)
            }
        }
    });
    let parity = parity_block
        .iter()
        .map(|&b| if b == 0 { saturation } else { -saturation });
    let values: Vec<f64> = systematic.chain(parity).collect();
    match qbits {
        Qbits::Float => Ok(LlrWord::float(values)),
        q => LlrWord::fixed(q, values),
    }
}

/// Fractional Hamming distance between two equal-length bit codes.
pub fn hamming_fraction(a: &BitCode, b: &BitCode) -> Result<f64, ProtocolError> {
    if a.len() != b.len() {
        return Err(ProtocolError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(ProtocolError::EmptyCode);
    }
    let diff = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(x, y)| x != y)
        .count();
    Ok(diff as f64 / a.len() as f64)
}

/// Hamming distance with an optional circular alignment search: the probe
/// bits are rotated within +-window and the minimum distance wins.
fn aligned_hd(probe: &BitCode, reference: &BitCode, window: usize) -> Result<f64, ProtocolError> {
    let mut best = hamming_fraction(probe, reference)?;
    if window == 0 {
        return Ok(best);
    }
    let len = probe.len();
    let mut rotated = vec![0u8; len];
    for shift in 1..=window.min(len - 1) {
        for dir in [shift, len - shift] {
            for (i, r) in rotated.iter_mut().enumerate() {
                *r = probe.bits()[(i + dir) % len];
            }
            best = best.min(hamming_fraction(&BitCode(rotated.clone()), reference)?);
        }
    }
    Ok(best)
}

fn probe_mean(
    record: &EnrollRecord,
    x1: &GrayCode,
    x2: &GrayCode,
) -> Result<GrayCode, ProtocolError> {
    let m = record.template_len();
    if x1.len() != m {
        return Err(ProtocolError::LengthMismatch {
            expected: m,
            got: x1.len(),
        });
    }
    arithmetic_mean(x1, x2)
}

/// Full verification: average the probes, decode each block against the
/// escrowed parity, and match the decoded info bits against the enrolled
/// reference.
pub fn verify(
    record: &EnrollRecord,
    spec: &QcCodeSpec,
    x1: &GrayCode,
    x2: &GrayCode,
    params: &VerifyParams,
) -> Result<VerifyOutcome, ProtocolError> {
    debug_assert_eq!(record.code_name, spec.name);
    let x3 = probe_mean(record, x1, x2)?;
    let m = record.template_len();
    let h = spec.matrix();

    let mut decoded_info = Vec::with_capacity(spec.template_info_capacity());
    let mut summaries = Vec::with_capacity(spec.blocks_per_template);
    for b in 0..spec.blocks_per_template {
        let start = b * spec.k;
        let mut gray_block = vec![PAD_GRAY; spec.k];
        if start < m {
            let real = (m - start).min(spec.k);
            gray_block[..real].copy_from_slice(&x3.values()[start..start + real]);
        }
        let parity_block = &record.p0_prime[b * spec.parity_len()..(b + 1) * spec.parity_len()];
        let llr = form_llr(&gray_block, parity_block, params.qbits)?;
        let result = decode_layered_minsum(h, &llr, &params.decode)?;
        decoded_info.extend_from_slice(&result.hard_bits[..spec.k]);
        summaries.push(BlockDecode::from(&result));
    }

    let x1_prime = BitCode(decoded_info[..m].to_vec());
    let x0_prime = BitCode(record.x0_prime.bits()[..m].to_vec());
    let hd = aligned_hd(&x1_prime, &x0_prime, params.align_shifts)?;
    Ok(VerifyOutcome {
        matched: hd <= params.threshold,
        hd,
        decode: summaries,
        mode_name: params.qbits.label().to_string(),
    })
}

/// Baseline matcher without error correction: binarize the averaged probes
/// and compare directly.
pub fn verify_baseline(
    record: &EnrollRecord,
    x1: &GrayCode,
    x2: &GrayCode,
    threshold: f64,
    align_shifts: usize,
) -> Result<VerifyOutcome, ProtocolError> {
    let x3 = probe_mean(record, x1, x2)?;
    let m = record.template_len();
    let x1_prime = binarize(&x3);
    let x0_prime = BitCode(record.x0_prime.bits()[..m].to_vec());
    let hd = aligned_hd(&x1_prime, &x0_prime, align_shifts)?;
    Ok(VerifyOutcome {
        matched: hd <= threshold,
        hd,
        decode: Vec::new(),
        mode_name: "baseline".to_string(),
    })
}

// ---------------------------------------------------------------------------
// Record file I/O
// ---------------------------------------------------------------------------

/// Packs bits LSB-first into bytes: bit 0 of each byte holds the lowest
/// code index.
fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (i % 8);
    }
    out
}

fn unpack_bits(bytes: &[u8], n_bits: usize) -> Vec<u8> {
    (0..n_bits).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect()
}

/// Writes a record as a small text file: labeled header lines followed by
/// hex-encoded bit fields, LF line endings.
pub fn save_record(path: &Path, record: &EnrollRecord) -> Result<(), ProtocolError> {
    let mut out = String::new();
    let _ = writeln!(out, "code_name: {}", record.code_name);
    let _ = writeln!(out, "k_total: {}", record.x0_prime.len());
    let _ = writeln!(out, "pad_len: {}", record.pad_len);
    let _ = writeln!(out, "x0: {}", hex::encode(pack_bits(record.x0_prime.bits())));
    let _ = writeln!(out, "p0: {}", hex::encode(pack_bits(&record.p0_prime)));
    std::fs::write(path, out).map_err(|source| ProtocolError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a record and validates it against the registry: dimensions, zero
/// pad bits, and parity consistency (re-encoding each block must reproduce
/// the escrowed parity).
pub fn load_record(path: &Path, registry: &Registry) -> Result<EnrollRecord, ProtocolError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProtocolError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let bad = |reason: &str| ProtocolError::BadRecord {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };

    let mut code_name = None;
    let mut k_total = None;
    let mut pad_len = None;
    let mut x0_hex = None;
    let mut p0_hex = None;
    for line in text.lines() {
        let (key, value) = line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let value = value.trim().to_string();
        match key.trim() {
            "code_name" => code_name = Some(value),
            "k_total" => k_total = value.parse::<usize>().ok(),
            "pad_len" => pad_len = value.parse::<usize>().ok(),
            "x0" => x0_hex = Some(value),
            "p0" => p0_hex = Some(value),
            other => return Err(bad(&format!("unknown field {other:?}"))),
        }
    }
    let code_name = code_name.ok_or_else(|| bad("missing code_name"))?;
    let k_total = k_total.ok_or_else(|| bad("missing or malformed k_total"))?;
    let pad_len = pad_len.ok_or_else(|| bad("missing or malformed pad_len"))?;
    let spec = registry
        .get(&code_name)
        .ok_or_else(|| ProtocolError::UnknownCode(code_name.clone()))?;
    if k_total != spec.template_info_capacity() || pad_len > k_total {
        return Err(bad("dimensions disagree with the code"));
    }

    let parity_total = spec.blocks_per_template * spec.parity_len();
    let decode_field = |hex_str: Option<String>, n_bits: usize, what: &str| {
        let s = hex_str.ok_or_else(|| bad(&format!("missing {what}")))?;
        let bytes = hex::decode(&s).map_err(|_| bad(&format!("{what} is not valid hex")))?;
        if bytes.len() != n_bits.div_ceil(8) {
            return Err(bad(&format!("{what} has wrong length")));
        }
        Ok(unpack_bits(&bytes, n_bits))
    };
    let x0 = decode_field(x0_hex, k_total, "x0")?;
    let p0 = decode_field(p0_hex, parity_total, "p0")?;

    if x0[k_total - pad_len..].iter().any(|&b| b != 0) {
        return Err(bad("pad bits are not zero"));
    }
    for b in 0..spec.blocks_per_template {
        let cw = encode(&x0[b * spec.k..(b + 1) * spec.k], spec)?;
        if cw[spec.k..] != p0[b * spec.parity_len()..(b + 1) * spec.parity_len()] {
            return Err(bad("parity does not match the info bits"));
        }
    }

    Ok(EnrollRecord {
        code_name,
        x0_prime: BitCode(x0),
        p0_prime: p0,
        pad_len,
    })
}
