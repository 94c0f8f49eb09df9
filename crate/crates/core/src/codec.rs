//! Systematic QC-LDPC encoding and soft-decision layered min-sum decoding.
//!
//! The decoder runs a horizontal layered schedule over the base-matrix rows:
//! each layer refreshes the accumulated LLRs of its z checks before the next
//! layer reads them, which converges noticeably faster than a flooding
//! schedule at the same iteration cap. Arithmetic is either `f64` or
//! saturating fixed point at a total width of 2, 4 or 8 bits, mirroring the
//! widths a hardware decoder would use.

use thiserror::Error;

use crate::code_registry::{ParityCheckMatrix, QcCodeSpec, BLANK};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("max_iter must be at least 1")]
    InvalidMaxIter,
    #[error("operation requires a fixed-point width, got {0:?}")]
    NotFixedPoint(Qbits),
    #[error("scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error("value {value} invalid for {qbits:?} at position {index}")]
    ValueOutOfRange {
        qbits: Qbits,
        value: f64,
        index: usize,
    },
    #[error("base matrix lacks the expected encoder structure: {0}")]
    UnsupportedStructure(String),
}

/// Value width of a soft word: floating point or a total fixed-point bit
/// count (sign included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Qbits {
    Float,
    Q2,
    Q4,
    Q8,
}

impl Qbits {
    /// All fixed-point widths, narrowest last.
    pub const FIXED: [Qbits; 3] = [Qbits::Q8, Qbits::Q4, Qbits::Q2];

    pub fn fixed_bits(self) -> Option<u32> {
        match self {
            Qbits::Float => None,
            Qbits::Q2 => Some(2),
            Qbits::Q4 => Some(4),
            Qbits::Q8 => Some(8),
        }
    }

    /// Inclusive value range in fixed-point mode.
    pub fn range(self) -> Option<(i32, i32)> {
        self.fixed_bits()
            .map(|b| (-(1 << (b - 1)), (1 << (b - 1)) - 1))
    }

    /// Full-confidence magnitude: `2^(b-1) - 1`, and 127 in float mode.
    pub fn saturation(self) -> f64 {
        match self.range() {
            Some((_, hi)) => hi as f64,
            None => 127.0,
        }
    }

    pub fn parse(s: &str) -> Option<Qbits> {
        match s {
            "float" | "FLOAT" => Some(Qbits::Float),
            "2" | "q2" => Some(Qbits::Q2),
            "4" | "q4" => Some(Qbits::Q4),
            "8" | "q8" => Some(Qbits::Q8),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Qbits::Float => "float",
            Qbits::Q2 => "q2",
            Qbits::Q4 => "q4",
            Qbits::Q8 => "q8",
        }
    }
}

/// A length-n word of soft log-likelihood values.
///
/// Convention: value > 0 means bit 0 is more likely, value < 0 means bit 1.
/// In fixed-point mode every value is an integer within the width's range.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrWord {
    qbits: Qbits,
    values: Vec<f64>,
}

impl LlrWord {
    pub fn float(values: Vec<f64>) -> LlrWord {
        LlrWord {
            qbits: Qbits::Float,
            values,
        }
    }

    /// Wraps pre-quantized values, validating integrality and range.
    pub fn fixed(qbits: Qbits, values: Vec<f64>) -> Result<LlrWord, CodecError> {
        let (lo, hi) = qbits.range().ok_or(CodecError::NotFixedPoint(qbits))?;
        for (i, &v) in values.iter().enumerate() {
            if v.fract() != 0.0 || v < lo as f64 || v > hi as f64 {
                return Err(CodecError::ValueOutOfRange {
                    qbits,
                    value: v,
                    index: i,
                });
            }
        }
        Ok(LlrWord { qbits, values })
    }

    pub fn qbits(&self) -> Qbits {
        self.qbits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Decoder output: hard decisions plus convergence bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Hard decision per codeword position (0 or 1); bit 0 wherever the
    /// accumulated LLR is >= 0.
    pub hard_bits: Vec<u8>,
    /// Full iterations executed before stopping. 0 when the input already
    /// satisfied every check.
    pub iterations_used: usize,
    /// Whether the final hard decision has an all-zero syndrome.
    pub converged: bool,
}

/// Knobs of the layered min-sum decoder.
#[derive(Debug, Clone, Copy)]
pub struct DecodeParams {
    pub max_iter: usize,
    /// Normalization factor applied to check-message magnitudes; 1.0 is
    /// plain min-sum. The default damps messages because plain min-sum
    /// oscillates under saturating arithmetic when inputs arrive near full
    /// scale, as the escrowed parity bits do.
    pub alpha: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            max_iter: 50,
            alpha: 0.75,
        }
    }
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Applies the circulant with shift `s` to a z-bit block:
/// `out[r] = block[(r + s) mod z]`.
fn rotate_into(out: &mut [u8], block: &[u8], s: usize) {
    let z = block.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o ^= block[(r + s) % z];
    }
}

/// Encodes `info` (k bits as 0/1 bytes) into a systematic codeword of
/// length n: info bits first, then parity.
///
/// Uses the dual-diagonal structure of the 802.16 base matrices: the first
/// parity block column carries a repeated shift at its top and bottom rows
/// and a zero shift in between, so the first parity block is the XOR of all
/// block-row partial sums and the rest follow by forward substitution.
pub fn encode(info: &[u8], spec: &QcCodeSpec) -> Result<Vec<u8>, CodecError> {
    if info.len() != spec.k {
        return Err(CodecError::LengthMismatch {
            expected: spec.k,
            got: info.len(),
        });
    }
    let z = spec.z;
    let mb = spec.base.rows();
    let kb = spec.k / z;

    // lambda[i] = sum over info blocks of the shifted block contributions.
    let mut lambda = vec![vec![0u8; z]; mb];
    for i in 0..mb {
        for j in 0..kb {
            let p = spec.base.at(i, j);
            if p != BLANK {
                let s = crate::code_registry::scale_shift(p as u32, z, spec.rate) as usize;
                rotate_into(&mut lambda[i], &info[j * z..(j + 1) * z], s);
            }
        }
    }

    // First parity block: the twin shifts of the h column cancel when all
    // block rows are summed, leaving p0 itself.
    let mut p0 = vec![0u8; z];
    for l in &lambda {
        for (a, b) in p0.iter_mut().zip(l) {
            *a ^= b;
        }
    }

    // v[i] = lambda[i] + (h-column contribution of p0, where present).
    let mut parity = vec![0u8; spec.n - spec.k];
    parity[..z].copy_from_slice(&p0);
    let mut v = lambda;
    for (i, vi) in v.iter_mut().enumerate() {
        let p = spec.base.at(i, kb);
        if p != BLANK {
            let s = crate::code_registry::scale_shift(p as u32, z, spec.rate) as usize;
            rotate_into(vi, &p0, s);
        }
    }

    // Forward substitution down the dual diagonal.
    for i in 0..mb - 1 {
        let (done, rest) = parity.split_at_mut((i + 1) * z);
        let prev = if i == 0 {
            // Row 0 touches only p1.
            None
        } else {
            Some(&done[i * z..])
        };
        let next = &mut rest[..z];
        next.copy_from_slice(&v[i]);
        if let Some(prev) = prev {
            for (a, b) in next.iter_mut().zip(prev) {
                *a ^= b;
            }
        }
    }

    let mut bits = Vec::with_capacity(spec.n);
    bits.extend_from_slice(info);
    bits.extend_from_slice(&parity);

    // Any structural surprise in the base matrix shows up here.
    if syndrome(spec.matrix(), &bits)?.iter().any(|&s| s != 0) {
        return Err(CodecError::UnsupportedStructure(format!(
            "{}: encoded word does not satisfy H",
            spec.name
        )));
    }
    Ok(bits)
}

/// Computes the syndrome of `bits` against `h`: entry r is the XOR of the
/// bits at row r's column indices.
pub fn syndrome(h: &ParityCheckMatrix, bits: &[u8]) -> Result<Vec<u8>, CodecError> {
    if bits.len() != h.n_cols() {
        return Err(CodecError::LengthMismatch {
            expected: h.n_cols(),
            got: bits.len(),
        });
    }
    Ok((0..h.n_rows())
        .map(|r| h.row(r).iter().fold(0u8, |acc, &c| acc ^ bits[c as usize]))
        .collect())
}

/// Quantizes real LLR values into a fixed-point word:
/// `clamp(round(v * scale), -2^(b-1), 2^(b-1)-1)`, rounding half away
/// from zero.
pub fn quantize_llr(values: &[f64], qbits: Qbits, scale: f64) -> Result<LlrWord, CodecError> {
    let (lo, hi) = qbits.range().ok_or(CodecError::NotFixedPoint(qbits))?;
    if !(scale > 0.0) {
        return Err(CodecError::InvalidScale(scale));
    }
    let out = values
        .iter()
        .map(|v| (v * scale).round().clamp(lo as f64, hi as f64))
        .collect();
    Ok(LlrWord { qbits, values: out })
}

// ---------------------------------------------------------------------------
// Layered min-sum decoding
// ---------------------------------------------------------------------------

/// Arithmetic abstraction shared by the float and fixed-point engines.
trait Cell: Copy + PartialOrd + std::fmt::Debug {
    const ZERO: Self;
    const MAX_MAG: Self;
    fn hard_bit(self) -> u8;
    fn mag(self) -> Self;
    fn signed(mag: Self, negative: bool, lim: (Self, Self)) -> Self;
    fn scaled(self, alpha: f64) -> Self;
    fn add_sat(self, rhs: Self, lim: (Self, Self)) -> Self;
    fn sub_sat(self, rhs: Self, lim: (Self, Self)) -> Self;
}

impl Cell for f64 {
    const ZERO: f64 = 0.0;
    const MAX_MAG: f64 = f64::INFINITY;

    #[inline]
    fn hard_bit(self) -> u8 {
        (self < 0.0) as u8
    }
    #[inline]
    fn mag(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn signed(mag: f64, negative: bool, _lim: (f64, f64)) -> f64 {
        if negative {
            -mag
        } else {
            mag
        }
    }
    #[inline]
    fn scaled(self, alpha: f64) -> f64 {
        self * alpha
    }
    #[inline]
    fn add_sat(self, rhs: f64, _lim: (f64, f64)) -> f64 {
        self + rhs
    }
    #[inline]
    fn sub_sat(self, rhs: f64, _lim: (f64, f64)) -> f64 {
        self - rhs
    }
}

impl Cell for i32 {
    const ZERO: i32 = 0;
    const MAX_MAG: i32 = i32::MAX;

    #[inline]
    fn hard_bit(self) -> u8 {
        (self < 0) as u8
    }
    #[inline]
    fn mag(self) -> i32 {
        self.abs()
    }
    #[inline]
    fn signed(mag: i32, negative: bool, lim: (i32, i32)) -> i32 {
        let v = if negative { -mag } else { mag };
        v.clamp(lim.0, lim.1)
    }
    #[inline]
    fn scaled(self, alpha: f64) -> i32 {
        (self as f64 * alpha).round() as i32
    }
    #[inline]
    fn add_sat(self, rhs: i32, lim: (i32, i32)) -> i32 {
        (self + rhs).clamp(lim.0, lim.1)
    }
    #[inline]
    fn sub_sat(self, rhs: i32, lim: (i32, i32)) -> i32 {
        (self - rhs).clamp(lim.0, lim.1)
    }
}

fn syndrome_clear<T: Cell>(h: &ParityCheckMatrix, acc: &[T]) -> bool {
    (0..h.n_rows()).all(|r| {
        h.row(r)
            .iter()
            .fold(0u8, |s, &c| s ^ acc[c as usize].hard_bit())
            == 0
    })
}

fn hard_decisions<T: Cell>(acc: &[T]) -> Vec<u8> {
    acc.iter().map(|v| v.hard_bit()).collect()
}

fn run_layered<T: Cell>(
    h: &ParityCheckMatrix,
    init: &[T],
    msg_lim: (T, T),
    acc_lim: (T, T),
    params: &DecodeParams,
) -> DecodeResult {
    let mut acc: Vec<T> = init.to_vec();

    // Clean inputs cost zero iterations.
    if syndrome_clear(h, &acc) {
        return DecodeResult {
            hard_bits: hard_decisions(&acc),
            iterations_used: 0,
            converged: true,
        };
    }

    let mut msgs: Vec<T> = vec![T::ZERO; h.n_edges()];
    let max_weight = (0..h.n_rows())
        .map(|r| h.row(r).len())
        .max()
        .unwrap_or(0);
    let mut extrinsic: Vec<T> = vec![T::ZERO; max_weight];
    let z = h.z();

    for iteration in 1..=params.max_iter {
        for layer in 0..h.layers() {
            for check in layer * z..(layer + 1) * z {
                let cols = h.row(check);
                let edges = h.row_edges(check);

                // Peel off this check's previous messages and find the two
                // smallest extrinsic magnitudes plus the sign parity.
                let mut negative = false;
                let mut min1 = T::MAX_MAG;
                let mut min2 = T::MAX_MAG;
                let mut min_slot = usize::MAX;
                for (slot, (&c, e)) in cols.iter().zip(edges.clone()).enumerate() {
                    let t = acc[c as usize].sub_sat(msgs[e], acc_lim);
                    extrinsic[slot] = t;
                    if t < T::ZERO {
                        negative = !negative;
                    }
                    let m = t.mag();
                    if m < min1 {
                        min2 = min1;
                        min1 = m;
                        min_slot = slot;
                    } else if m < min2 {
                        min2 = m;
                    }
                }

                // New messages and accumulator write-back.
                for (slot, (&c, e)) in cols.iter().zip(edges).enumerate() {
                    let m = if slot == min_slot { min2 } else { min1 };
                    let m = if params.alpha == 1.0 {
                        m
                    } else {
                        m.scaled(params.alpha)
                    };
                    let t = extrinsic[slot];
                    let msg = T::signed(m, negative ^ (t < T::ZERO), msg_lim);
                    msgs[e] = msg;
                    debug_assert!(
                        msg >= msg_lim.0 && msg <= msg_lim.1,
                        "message out of range: {msg:?}"
                    );
                    let updated = t.add_sat(msg, acc_lim);
                    debug_assert!(
                        updated >= acc_lim.0 && updated <= acc_lim.1,
                        "accumulator out of range: {updated:?}"
                    );
                    acc[c as usize] = updated;
                }
            }
        }

        if syndrome_clear(h, &acc) {
            return DecodeResult {
                hard_bits: hard_decisions(&acc),
                iterations_used: iteration,
                converged: true,
            };
        }
    }

    DecodeResult {
        hard_bits: hard_decisions(&acc),
        iterations_used: params.max_iter,
        converged: false,
    }
}

/// Guard bits on the accumulated LLRs beyond the message width. Messages
/// saturate at the word's range; accumulators keep this much headroom so
/// subtracting a stale check message cannot erase a strong belief. Without
/// the headroom the layered schedule falls into limit cycles once inputs
/// arrive near full scale.
pub const ACC_GUARD_BITS: u32 = 2;

/// Decodes a soft word with the layered min-sum schedule.
///
/// Layers are the base-matrix rows in ascending order. The syndrome of the
/// running hard decision is checked once before the first iteration and
/// after each full sweep; decoding stops early when it clears. In
/// fixed-point mode stored messages saturate to the word's range and
/// accumulators to the guard-extended range.
pub fn decode_layered_minsum(
    h: &ParityCheckMatrix,
    llr: &LlrWord,
    params: &DecodeParams,
) -> Result<DecodeResult, CodecError> {
    if llr.len() != h.n_cols() {
        return Err(CodecError::LengthMismatch {
            expected: h.n_cols(),
            got: llr.len(),
        });
    }
    if params.max_iter == 0 {
        return Err(CodecError::InvalidMaxIter);
    }
    let inf = (f64::NEG_INFINITY, f64::INFINITY);
    match llr.qbits().range() {
        None => Ok(run_layered(h, llr.values(), inf, inf, params)),
        Some((lo, hi)) => {
            let init: Vec<i32> = llr.values().iter().map(|&v| v as i32).collect();
            let acc_lim = (lo << ACC_GUARD_BITS, ((hi + 1) << ACC_GUARD_BITS) - 1);
            Ok(run_layered(h, &init, (lo, hi), acc_lim, params))
        }
    }
}

/// Maps a codeword to full-confidence LLRs at the given width.
pub fn full_confidence_llr(bits: &[u8], qbits: Qbits) -> LlrWord {
    let s = qbits.saturation();
    let values: Vec<f64> = bits.iter().map(|&b| if b == 0 { s } else { -s }).collect();
    match qbits {
        Qbits::Float => LlrWord::float(values),
        q => LlrWord::fixed(q, values).expect("saturation value is in range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_registry::Registry;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_info(k: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
        (0..k).map(|_| rng.gen_range(0..=1u8)).collect()
    }

    /// Independent dense GF(2) expansion used as the encoding oracle.
    fn dense_h(spec: &crate::code_registry::QcCodeSpec) -> Vec<Vec<u8>> {
        let z = spec.z;
        let mut h = vec![vec![0u8; spec.n]; spec.n - spec.k];
        for i in 0..spec.base.rows() {
            for j in 0..spec.base.cols() {
                let p = spec.base.at(i, j);
                if p == BLANK {
                    continue;
                }
                let s = crate::code_registry::scale_shift(p as u32, z, spec.rate) as usize;
                for r in 0..z {
                    h[i * z + r][j * z + (r + s) % z] ^= 1;
                }
            }
        }
        h
    }

    fn dense_syndrome(h: &[Vec<u8>], bits: &[u8]) -> Vec<u8> {
        h.iter()
            .map(|row| {
                row.iter()
                    .zip(bits)
                    .fold(0u8, |acc, (&a, &b)| acc ^ (a & b))
            })
            .collect()
    }

    #[test]
    fn all_zero_info_encodes_to_all_zero() {
        let reg = Registry::builtin();
        for spec in reg.codes() {
            let cw = encode(&vec![0u8; spec.k], spec).unwrap();
            assert!(cw.iter().all(|&b| b == 0), "{}", spec.name);
        }
    }

    #[test]
    fn random_words_satisfy_dense_gf2_oracle() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let dense = dense_h(spec);
        let mut r = rng(1);
        for _ in 0..20 {
            let cw = encode(&random_info(spec.k, &mut r), spec).unwrap();
            assert!(dense_syndrome(&dense, &cw).iter().all(|&s| s == 0));
            assert!(syndrome(spec.matrix(), &cw).unwrap().iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn codewords_are_closed_under_addition() {
        let reg = Registry::builtin();
        let spec = reg.get("n1920_k1280").unwrap();
        let mut r = rng(2);
        let a = encode(&random_info(spec.k, &mut r), spec).unwrap();
        let b = encode(&random_info(spec.k, &mut r), spec).unwrap();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert!(syndrome(spec.matrix(), &sum).unwrap().iter().all(|&s| s == 0));
    }

    #[test]
    fn encode_rejects_wrong_length() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        assert!(matches!(
            encode(&vec![0u8; spec.k - 1], spec),
            Err(CodecError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_flip_syndrome_weight_is_column_weight() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let h = spec.matrix();
        let mut r = rng(3);
        let mut cw = encode(&random_info(spec.k, &mut r), spec).unwrap();
        let pos = r.gen_range(0..spec.n);
        cw[pos] ^= 1;
        let s = syndrome(h, &cw).unwrap();
        let weight: usize = s.iter().map(|&b| b as usize).sum();
        assert_eq!(weight, h.column_weights()[pos]);
        assert!(weight > 0);
    }

    #[test]
    fn syndrome_of_all_zero_is_zero() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k800").unwrap();
        let s = syndrome(spec.matrix(), &vec![0u8; spec.n]).unwrap();
        assert!(s.iter().all(|&b| b == 0));
    }

    #[test]
    fn quantize_examples() {
        let w = quantize_llr(&[127.0], Qbits::Q8, 1.0).unwrap();
        assert_eq!(w.values(), &[127.0]);
        let w = quantize_llr(&[200.0], Qbits::Q8, 1.0).unwrap();
        assert_eq!(w.values(), &[127.0]);
        let w = quantize_llr(&[-5.4], Qbits::Q4, 1.0).unwrap();
        assert_eq!(w.values(), &[-5.0]);
        // Saturation at the asymmetric negative edge.
        let w = quantize_llr(&[-300.0, 300.0], Qbits::Q4, 1.0).unwrap();
        assert_eq!(w.values(), &[-8.0, 7.0]);
        assert!(matches!(
            quantize_llr(&[1.0], Qbits::Float, 1.0),
            Err(CodecError::NotFixedPoint(_))
        ));
        assert!(matches!(
            quantize_llr(&[1.0], Qbits::Q8, 0.0),
            Err(CodecError::InvalidScale(_))
        ));
    }

    #[test]
    fn q4_clamp_bounds_by_enumeration() {
        // Every integer input from -20 to 20 lands inside [-8, 7].
        let values: Vec<f64> = (-20..=20).map(|v| v as f64).collect();
        let w = quantize_llr(&values, Qbits::Q4, 1.0).unwrap();
        for (&v, &q) in values.iter().zip(w.values()) {
            assert_eq!(q, v.clamp(-8.0, 7.0));
        }
    }

    #[test]
    fn noiseless_word_converges_in_zero_iterations() {
        let reg = Registry::builtin();
        for spec in reg.codes() {
            let mut r = rng(4);
            let cw = encode(&random_info(spec.k, &mut r), spec).unwrap();
            for qbits in [Qbits::Float, Qbits::Q8, Qbits::Q4, Qbits::Q2] {
                let llr = full_confidence_llr(&cw, qbits);
                let res =
                    decode_layered_minsum(spec.matrix(), &llr, &DecodeParams::default()).unwrap();
                assert!(res.converged);
                assert_eq!(res.iterations_used, 0, "{} {qbits:?}", spec.name);
                assert_eq!(res.hard_bits, cw);
            }
        }
    }

    #[test]
    fn all_zero_llr_decodes_to_all_zero() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let llr = LlrWord::float(vec![0.0; spec.n]);
        let res = decode_layered_minsum(spec.matrix(), &llr, &DecodeParams::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations_used, 0);
        assert!(res.hard_bits.iter().all(|&b| b == 0));
    }

    /// Flips `count` random info positions of a codeword and returns float
    /// LLRs: flipped positions carry the wrong sign at `weak`, everything
    /// else the right sign at `strong`.
    fn flip_noise_llr(
        cw: &[u8],
        k: usize,
        count: usize,
        weak: f64,
        strong: f64,
        rng: &mut ChaCha8Rng,
    ) -> LlrWord {
        let mut values: Vec<f64> = cw
            .iter()
            .map(|&b| if b == 0 { strong } else { -strong })
            .collect();
        let mut positions: Vec<usize> = (0..k).collect();
        positions.shuffle(rng);
        for &p in positions.iter().take(count) {
            values[p] = if cw[p] == 0 { -weak } else { weak };
        }
        LlrWord::float(values)
    }

    #[test]
    fn recovers_ten_weak_flips_on_n960_k640() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let mut r = rng(5);
        for _ in 0..10 {
            let cw = encode(&random_info(spec.k, &mut r), spec).unwrap();
            let llr = flip_noise_llr(&cw, spec.k, 10, 16.0, 48.0, &mut r);
            let res = decode_layered_minsum(spec.matrix(), &llr, &DecodeParams::default()).unwrap();
            assert!(res.converged);
            assert_eq!(res.hard_bits, cw);
            assert!(res.iterations_used >= 1);
        }
    }

    #[test]
    fn decoding_is_deterministic() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let mut r = rng(6);
        let cw = encode(&random_info(spec.k, &mut r), spec).unwrap();
        let llr = flip_noise_llr(&cw, spec.k, 30, 16.0, 48.0, &mut r);
        let a = decode_layered_minsum(spec.matrix(), &llr, &DecodeParams::default()).unwrap();
        let b = decode_layered_minsum(spec.matrix(), &llr, &DecodeParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn converged_flag_always_matches_syndrome() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let h = spec.matrix();
        let mut r = rng(7);
        // Sweep flip counts from trivial to hopeless; the flag must track
        // the syndrome either way.
        for count in [0, 5, 40, 200, 400] {
            let cw = encode(&random_info(spec.k, &mut r), spec).unwrap();
            let llr = flip_noise_llr(&cw, spec.k, count, 40.0, 48.0, &mut r);
            let res = decode_layered_minsum(h, &llr, &DecodeParams::default()).unwrap();
            let clean = syndrome(h, &res.hard_bits).unwrap().iter().all(|&s| s == 0);
            assert_eq!(res.converged, clean, "flips={count}");
        }
    }

    #[test]
    fn quantization_fidelity_ordering_small_corpus() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let h = spec.matrix();
        let mut r = rng(8);
        let params = DecodeParams::default();
        let mut agree = [0usize; 3]; // q8, q4, q2
        let trials = 40;
        for _ in 0..trials {
            let cw = encode(&random_info(spec.k, &mut r), spec).unwrap();
            let llr = flip_noise_llr(&cw, spec.k, 8, 16.0, 48.0, &mut r);
            let reference = decode_layered_minsum(h, &llr, &params).unwrap();
            for (slot, qbits) in Qbits::FIXED.iter().enumerate() {
                let scale = qbits.saturation() / 48.0;
                let q = quantize_llr(llr.values(), *qbits, scale).unwrap();
                let res = decode_layered_minsum(h, &q, &params).unwrap();
                if res.hard_bits == reference.hard_bits {
                    agree[slot] += 1;
                }
            }
        }
        assert!(agree[0] >= agree[1], "q8 {} < q4 {}", agree[0], agree[1]);
        assert!(agree[1] >= agree[2], "q4 {} < q2 {}", agree[1], agree[2]);
        assert!(agree[0] * 100 >= trials * 95, "q8 agreement too low");
    }

    #[test]
    fn rejects_bad_decode_arguments() {
        let reg = Registry::builtin();
        let spec = reg.get("n960_k640").unwrap();
        let llr = LlrWord::float(vec![0.0; 10]);
        assert!(matches!(
            decode_layered_minsum(spec.matrix(), &llr, &DecodeParams::default()),
            Err(CodecError::LengthMismatch { .. })
        ));
        let llr = LlrWord::float(vec![0.0; spec.n]);
        let params = DecodeParams {
            max_iter: 0,
            alpha: 1.0,
        };
        assert!(matches!(
            decode_layered_minsum(spec.matrix(), &llr, &params),
            Err(CodecError::InvalidMaxIter)
        ));
    }

    #[test]
    fn llr_word_validation() {
        assert!(LlrWord::fixed(Qbits::Q4, vec![7.0, -8.0]).is_ok());
        assert!(matches!(
            LlrWord::fixed(Qbits::Q4, vec![8.0]),
            Err(CodecError::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            LlrWord::fixed(Qbits::Q4, vec![1.5]),
            Err(CodecError::ValueOutOfRange { .. })
        ));
    }
}
