//! Minimal feature extraction: 1D log-Gabor filtering of pre-normalized
//! iris textures into grayscale codes, and binarization into bit codes.
//!
//! Segmentation and normalization are out of scope; this module starts from
//! a normalized texture (rows of grayscale samples) and ends at the
//! byte-per-sample gray code the template protocol consumes.

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("signal too short: {0} samples (need >= 8)")]
    SignalTooShort(usize),
    #[error("center frequency {0} outside (0, 0.5)")]
    BadCenterFrequency(f64),
    #[error("sigma ratio {0} outside (0, 1)")]
    BadSigmaRatio(f64),
    #[error("texture {rows}x{cols} too small for code length {m}")]
    TextureTooSmall { rows: usize, cols: usize, m: usize },
    #[error("texture dimensions invalid: {rows}x{cols}")]
    BadTextureDims { rows: usize, cols: usize },
    #[error("{path}: not a supported texture file: {reason}")]
    BadTextureFile { path: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A normalized iris texture: `rows` strips of `cols` grayscale samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedTexture {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl NormalizedTexture {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self, FeatureError> {
        if rows == 0 || cols < 8 || pixels.len() != rows * cols {
            return Err(FeatureError::BadTextureDims { rows, cols });
        }
        Ok(NormalizedTexture { rows, cols, pixels })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.pixels[r * self.cols..(r + 1) * self.cols]
    }
}

/// Length-m iris code as 8-bit grayscale values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayCode(pub Vec<u8>);

impl GrayCode {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }
}

/// Length-m iris code as binary values (one byte per bit, 0 or 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitCode(pub Vec<u8>);

impl BitCode {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

/// Parameters of the extraction pipeline.
#[derive(Debug, Clone, Copy)]
pub struct FeatureParams {
    /// Log-Gabor center frequency in cycles/sample.
    pub f0: f64,
    /// Bandwidth parameter sigma/f0.
    pub sigma_ratio: f64,
    /// Output code length.
    pub m: usize,
    /// Gain applied to filter responses before the byte offset; the default
    /// spreads a unit-variance response over roughly +-3 sigma of the byte
    /// range.
    pub gain: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            f0: 1.0 / 16.0,
            sigma_ratio: 0.5,
            m: 1280,
            gain: 42.0,
        }
    }
}

/// Log-Gabor transfer function, zero at DC.
fn log_gabor_gain(f: f64, f0: f64, sigma_ratio: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    let num = (f / f0).ln().powi(2);
    let den = 2.0 * sigma_ratio.ln().powi(2);
    (-num / den).exp()
}

/// Filters a real signal with a 1D log-Gabor kernel in the frequency
/// domain, returning the analytic (complex) response.
///
/// The forward transform's positive-frequency bins are weighted by
/// `exp(-ln^2(f/f0) / (2 ln^2(sigma_ratio)))`; DC and negative frequencies
/// are zeroed before the inverse transform.
pub fn log_gabor_response(
    signal: &[f64],
    f0: f64,
    sigma_ratio: f64,
) -> Result<Vec<Complex64>, FeatureError> {
    let len = signal.len();
    if len < 8 {
        return Err(FeatureError::SignalTooShort(len));
    }
    if !(f0 > 0.0 && f0 < 0.5) {
        return Err(FeatureError::BadCenterFrequency(f0));
    }
    if !(sigma_ratio > 0.0 && sigma_ratio < 1.0) {
        return Err(FeatureError::BadSigmaRatio(sigma_ratio));
    }

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(len);
    let ifft = planner.plan_fft_inverse(len);

    let mut spectrum: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.process(&mut spectrum);

    spectrum[0] = Complex64::new(0.0, 0.0);
    for (b, value) in spectrum.iter_mut().enumerate().skip(1) {
        if b <= len / 2 {
            let f = b as f64 / len as f64;
            *value *= log_gabor_gain(f, f0, sigma_ratio);
        } else {
            *value = Complex64::new(0.0, 0.0);
        }
    }

    ifft.process(&mut spectrum);
    let scale = 1.0 / len as f64;
    for v in spectrum.iter_mut() {
        *v *= scale;
    }
    Ok(spectrum)
}

/// Runs the filter over every texture row, resamples the concatenated real
/// parts to `m` values with a uniform stride, and maps each value `v` to
/// `clamp(round(128 + gain * v), 0, 255)`.
pub fn extract_gray_code(
    texture: &NormalizedTexture,
    params: &FeatureParams,
) -> Result<GrayCode, FeatureError> {
    let total = texture.rows() * texture.cols();
    if total < params.m {
        return Err(FeatureError::TextureTooSmall {
            rows: texture.rows(),
            cols: texture.cols(),
            m: params.m,
        });
    }

    let mut responses = Vec::with_capacity(total);
    for r in 0..texture.rows() {
        let signal: Vec<f64> = texture.row(r).iter().map(|&p| p as f64).collect();
        let resp = log_gabor_response(&signal, params.f0, params.sigma_ratio)?;
        responses.extend(resp.iter().map(|c| c.re));
    }

    let gray = (0..params.m)
        .map(|i| {
            let idx = i * total / params.m;
            let v = 128.0 + params.gain * responses[idx];
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok(GrayCode(gray))
}

/// Thresholds a gray code at 128: bit 1 wherever the gray value is >= 128.
pub fn binarize(gray: &GrayCode) -> BitCode {
    BitCode(gray.0.iter().map(|&g| (g >= 128) as u8).collect())
}

// ---------------------------------------------------------------------------
// Texture file I/O
// ---------------------------------------------------------------------------

const TEXTURE_MAGIC: &[u8; 4] = b"IRT1";

/// Reads a texture from either the raw `IRT1` container or a binary PGM
/// (P5, maxval 255) file.
pub fn load_texture(path: &Path) -> Result<NormalizedTexture, FeatureError> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
    let bad = |reason: &str| FeatureError::BadTextureFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };

    if data.starts_with(TEXTURE_MAGIC) {
        if data.len() < 16 {
            return Err(bad("truncated header"));
        }
        let rows = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
        let body = &data[16..];
        if body.len() != rows * cols {
            return Err(bad(&format!(
                "expected {} pixels, found {}",
                rows * cols,
                body.len()
            )));
        }
        return NormalizedTexture::new(rows, cols, body.to_vec());
    }

    if data.starts_with(b"P5") {
        return parse_pgm(&data).ok_or_else(|| bad("malformed PGM"));
    }
    Err(bad("unknown magic"))
}

pub fn save_texture(path: &Path, texture: &NormalizedTexture) -> Result<(), FeatureError> {
    let mut out = Vec::with_capacity(16 + texture.pixels.len());
    out.extend_from_slice(TEXTURE_MAGIC);
    out.extend_from_slice(&(texture.rows as u32).to_le_bytes());
    out.extend_from_slice(&(texture.cols as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    out.extend_from_slice(&texture.pixels);
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn parse_pgm(data: &[u8]) -> Option<NormalizedTexture> {
    // Header: "P5" <ws> width <ws> height <ws> maxval <single ws> raster.
    let mut pos = 2;
    let mut fields = Vec::new();
    while fields.len() < 3 {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        fields.push(std::str::from_utf8(&data[start..pos]).ok()?.to_string());
    }
    pos += 1; // single whitespace after maxval
    let cols: usize = fields[0].parse().ok()?;
    let rows: usize = fields[1].parse().ok()?;
    let maxval: usize = fields[2].parse().ok()?;
    if maxval != 255 || data.len() < pos + rows * cols {
        return None;
    }
    NormalizedTexture::new(rows, cols, data[pos..pos + rows * cols].to_vec()).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_texture(rows: usize, cols: usize, value: u8) -> NormalizedTexture {
        NormalizedTexture::new(rows, cols, vec![value; rows * cols]).unwrap()
    }

    /// Brute-force O(L^2) DFT reference of the same filtering convention.
    fn reference_response(signal: &[f64], f0: f64, sigma_ratio: f64) -> Vec<Complex64> {
        let len = signal.len();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); len];
        for (b, s) in spectrum.iter_mut().enumerate() {
            for (t, &x) in signal.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * b as f64 * t as f64 / len as f64;
                *s += Complex64::new(x, 0.0) * Complex64::new(angle.cos(), angle.sin());
            }
        }
        for (b, s) in spectrum.iter_mut().enumerate() {
            let gain = if b >= 1 && b <= len / 2 {
                log_gabor_gain(b as f64 / len as f64, f0, sigma_ratio)
            } else {
                0.0
            };
            *s *= gain;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (t, o) in out.iter_mut().enumerate() {
            for (b, &s) in spectrum.iter().enumerate() {
                let angle = 2.0 * std::f64::consts::PI * b as f64 * t as f64 / len as f64;
                *o += s * Complex64::new(angle.cos(), angle.sin());
            }
            *o /= len as f64;
        }
        out
    }

    #[test]
    fn constant_signal_has_zero_response() {
        let resp = log_gabor_response(&[100.0; 64], 1.0 / 16.0, 0.5).unwrap();
        for c in resp {
            assert!(c.norm() < 1e-9);
        }
    }

    #[test]
    fn zero_signal_has_zero_response() {
        let resp = log_gabor_response(&[0.0; 64], 1.0 / 16.0, 0.5).unwrap();
        for c in resp {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_at_center_frequency_maximizes_response() {
        // Sweep single tones over the bin grid; the tone at f0 must win.
        let len = 256usize;
        let f0 = 1.0 / 16.0; // bin 16
        let energy = |bin: usize| -> f64 {
            let signal: Vec<f64> = (0..len)
                .map(|t| (2.0 * std::f64::consts::PI * bin as f64 * t as f64 / len as f64).cos())
                .collect();
            log_gabor_response(&signal, f0, 0.5)
                .unwrap()
                .iter()
                .map(|c| c.norm_sqr())
                .sum()
        };
        let center = energy(16);
        for bin in (1..len / 2).filter(|&b| b != 16) {
            assert!(energy(bin) < center, "bin {bin} beats the center bin");
        }
    }

    #[test]
    fn fft_path_matches_reference_dft() {
        let signal: Vec<f64> = (0..96)
            .map(|t| {
                128.0
                    + 40.0 * (2.0 * std::f64::consts::PI * 7.0 * t as f64 / 96.0).cos()
                    + 15.0 * (2.0 * std::f64::consts::PI * 3.0 * t as f64 / 96.0).sin()
            })
            .collect();
        let fast = log_gabor_response(&signal, 1.0 / 16.0, 0.5).unwrap();
        let slow = reference_response(&signal, 1.0 / 16.0, 0.5);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(
            log_gabor_response(&[0.0; 4], 0.1, 0.5),
            Err(FeatureError::SignalTooShort(4))
        ));
        assert!(matches!(
            log_gabor_response(&[0.0; 16], 0.5, 0.5),
            Err(FeatureError::BadCenterFrequency(_))
        ));
        assert!(matches!(
            log_gabor_response(&[0.0; 16], 0.1, 1.0),
            Err(FeatureError::BadSigmaRatio(_))
        ));
    }

    #[test]
    fn constant_texture_extracts_all_128() {
        let texture = constant_texture(10, 128, 77);
        let gray = extract_gray_code(&texture, &FeatureParams::default()).unwrap();
        assert_eq!(gray.len(), 1280);
        assert!(gray.values().iter().all(|&g| g == 128));
        // ...which binarizes to all ones under the >=128 rule.
        let bits = binarize(&gray);
        assert!(bits.bits().iter().all(|&b| b == 1));
    }

    #[test]
    fn exact_fit_texture_uses_stride_one() {
        let pixels: Vec<u8> = (0..1280u32).map(|i| (i % 251) as u8).collect();
        let texture = NormalizedTexture::new(10, 128, pixels).unwrap();
        let params = FeatureParams::default();
        let gray = extract_gray_code(&texture, &params).unwrap();

        // With rows*cols == m the resampler must visit every index once.
        let mut expected = Vec::new();
        for r in 0..texture.rows() {
            let signal: Vec<f64> = texture.row(r).iter().map(|&p| p as f64).collect();
            let resp = log_gabor_response(&signal, params.f0, params.sigma_ratio).unwrap();
            expected.extend(resp.iter().map(|c| {
                (128.0 + params.gain * c.re).round().clamp(0.0, 255.0) as u8
            }));
        }
        assert_eq!(gray.values(), &expected[..]);
    }

    #[test]
    fn sinusoidal_texture_matches_independent_oracle() {
        let cols = 128usize;
        let rows = 10usize;
        let pixels: Vec<u8> = (0..rows * cols)
            .map(|i| {
                let t = (i % cols) as f64;
                let phase = (i / cols) as f64;
                (128.0 + 60.0 * (2.0 * std::f64::consts::PI * (t + 3.0 * phase) / 16.0).cos())
                    .round() as u8
            })
            .collect();
        let texture = NormalizedTexture::new(rows, cols, pixels).unwrap();
        let params = FeatureParams::default();
        let gray = extract_gray_code(&texture, &params).unwrap();

        // Independent pipeline: brute-force DFT filter, then the same
        // resample-and-quantize arithmetic.
        let total = rows * cols;
        let mut responses = Vec::with_capacity(total);
        for r in 0..rows {
            let signal: Vec<f64> = texture.row(r).iter().map(|&p| p as f64).collect();
            responses.extend(
                reference_response(&signal, params.f0, params.sigma_ratio)
                    .iter()
                    .map(|c| c.re),
            );
        }
        let oracle: Vec<u8> = (0..params.m)
            .map(|i| {
                let v = 128.0 + params.gain * responses[i * total / params.m];
                // Keep the oracle off rounding boundaries so both float
                // paths agree bit for bit.
                assert!((v - v.round()).abs() < 0.49999);
                v.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        assert_eq!(gray.values(), &oracle[..]);
    }

    #[test]
    fn binarize_threshold_cases() {
        let gray = GrayCode(vec![0, 127, 128, 255]);
        assert_eq!(binarize(&gray).bits(), &[0, 0, 1, 1]);
        let all_mid = GrayCode(vec![128; 16]);
        assert!(binarize(&all_mid).bits().iter().all(|&b| b == 1));
    }

    #[test]
    fn gray_bit_consistency_and_scale_covariance() {
        let cols = 64usize;
        let base: Vec<u8> = (0..cols * 4)
            .map(|i| (128.0 + 20.0 * ((i as f64) / 5.0).sin()) as u8)
            .collect();
        let texture = NormalizedTexture::new(4, cols, base).unwrap();
        // Low gain keeps doubled responses inside the byte range.
        let params = FeatureParams {
            m: 256,
            gain: 4.0,
            ..FeatureParams::default()
        };
        let gray = extract_gray_code(&texture, &params).unwrap();
        let bits = binarize(&gray);
        for (g, b) in gray.values().iter().zip(bits.bits()) {
            assert_eq!(*b, (*g >= 128) as u8);
        }

        // Doubling the gain doubles the pre-clamp offset from 128 for
        // small-amplitude inputs where nothing clamps or rounds across.
        let double = FeatureParams {
            gain: params.gain * 2.0,
            ..params
        };
        let gray2 = extract_gray_code(&texture, &double).unwrap();
        for (a, b) in gray.values().iter().zip(gray2.values()) {
            let da = *a as i32 - 128;
            let db = *b as i32 - 128;
            assert!((db - 2 * da).abs() <= 1, "a={a} b={b}");
        }
    }

    #[test]
    fn texture_too_small_is_rejected() {
        let texture = constant_texture(2, 64, 10);
        assert!(matches!(
            extract_gray_code(&texture, &FeatureParams::default()),
            Err(FeatureError::TextureTooSmall { .. })
        ));
    }

    #[test]
    fn texture_file_roundtrip_and_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let pixels: Vec<u8> = (0..1280u32).map(|i| (i * 7 % 256) as u8).collect();
        let texture = NormalizedTexture::new(10, 128, pixels.clone()).unwrap();

        let raw = dir.path().join("t.irt");
        save_texture(&raw, &texture).unwrap();
        assert_eq!(load_texture(&raw).unwrap(), texture);

        let pgm = dir.path().join("t.pgm");
        let mut data = format!("P5\n128 10\n255\n").into_bytes();
        data.extend_from_slice(&pixels);
        std::fs::write(&pgm, data).unwrap();
        assert_eq!(load_texture(&pgm).unwrap(), texture);

        let bad = dir.path().join("bad.irt");
        std::fs::write(&bad, b"IRT1\x01\x00\x00\x00").unwrap();
        assert!(load_texture(&bad).is_err());
    }
}
