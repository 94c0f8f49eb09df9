//! Reproducible synthetic subjects and noisy captures, standing in for a
//! real iris database, plus gray-code file I/O.
//!
//! Every derived quantity is a pure function of a master seed. Captures are
//! the subject template plus clamped Gaussian sensor noise, optionally hit
//! by a burst (a contiguous run replaced with uniform random values) that
//! plays the role of localized occlusion.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::iris_features::GrayCode;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: bad gray-code file: {reason}")]
    BadFile { path: String, reason: String },
    #[error("{path}: bad manifest line {line}: {reason}")]
    BadManifest {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Capture noise model of one subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Standard deviation of the per-sample Gaussian noise, in gray levels.
    pub gauss_sigma: f64,
    /// Probability that a capture contains one occlusion burst.
    pub burst_prob: f64,
    /// Mean length of a burst, in samples.
    pub burst_len_mean: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            gauss_sigma: 18.0,
            burst_prob: 0.3,
            burst_len_mean: 40.0,
        }
    }
}

/// Template synthesis parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Code length m.
    pub code_len: usize,
    /// Correlation length of the template. 1 draws every gray value
    /// independently; larger values interpolate between control points
    /// that far apart, giving the smooth, run-structured codes that real
    /// textures produce.
    pub control_spacing: usize,
    /// Per-subject noise levels; subjects draw one of these sigmas. A
    /// single entry gives every subject the same noise.
    pub sigma_levels: Vec<f64>,
    pub burst_prob: f64,
    pub burst_len_mean: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        let noise = NoiseParams::default();
        GenParams {
            code_len: 1280,
            control_spacing: 1,
            sigma_levels: vec![noise.gauss_sigma],
            burst_prob: noise.burst_prob,
            burst_len_mean: noise.burst_len_mean,
        }
    }
}

/// Ground truth for one synthetic subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectModel {
    pub id: u64,
    pub template: GrayCode,
    pub noise: NoiseParams,
}

/// All captures of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSet {
    pub subject_id: u64,
    pub captures: Vec<GrayCode>,
}

/// A complete synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub subjects: Vec<SubjectModel>,
    pub captures: Vec<CaptureSet>,
}

impl Dataset {
    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn captures_of(&self, subject: usize) -> &[GrayCode] {
        &self.captures[subject].captures
    }
}

/// Dataset-level knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    pub subjects: usize,
    pub captures_per_subject: usize,
    pub master_seed: u64,
    pub gen: GenParams,
}

impl Default for DatasetParams {
    fn default() -> Self {
        DatasetParams {
            subjects: 50,
            captures_per_subject: 6,
            master_seed: 0x1715,
            gen: GenParams::default(),
        }
    }
}

/// splitmix64, used to derive independent stream seeds.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Generates a subject deterministically from `seed`.
///
/// With the default spacing of 1 every gray value is uniform in [0, 255]
/// and independent, so binarized codes of different subjects differ in
/// about half their positions.
pub fn gen_subject(seed: u64, params: &GenParams) -> SubjectModel {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed));
    let m = params.code_len;
    let spacing = params.control_spacing.max(1);
    let template = if spacing == 1 {
        (0..m).map(|_| rng.gen()).collect()
    } else {
        let n_ctrl = m.div_ceil(spacing) + 1;
        let ctrl: Vec<f64> = (0..n_ctrl).map(|_| rng.gen_range(0..=255) as f64).collect();
        (0..m)
            .map(|i| {
                let seg = i / spacing;
                let frac = (i % spacing) as f64 / spacing as f64;
                let v = ctrl[seg] * (1.0 - frac) + ctrl[seg + 1] * frac;
                v.round() as u8
            })
            .collect()
    };
    let sigma = params.sigma_levels[rng.gen_range(0..params.sigma_levels.len())];
    SubjectModel {
        id: seed,
        template: GrayCode(template),
        noise: NoiseParams {
            gauss_sigma: sigma,
            burst_prob: params.burst_prob,
            burst_len_mean: params.burst_len_mean,
        },
    }
}

/// Produces one capture of a subject, deterministic in (subject, seed).
pub fn capture(subject: &SubjectModel, seed: u64) -> GrayCode {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(subject.id).wrapping_add(mix(seed)));
    let m = subject.template.len();
    let mut values: Vec<u8> = if subject.noise.gauss_sigma > 0.0 {
        let normal = Normal::new(0.0, subject.noise.gauss_sigma).expect("sigma >= 0");
        subject
            .template
            .values()
            .iter()
            .map(|&t| (t as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
            .collect()
    } else {
        subject.template.values().to_vec()
    };

    if subject.noise.burst_prob > 0.0 && rng.gen_bool(subject.noise.burst_prob.min(1.0)) {
        let start = rng.gen_range(0..m);
        // Geometric run length with the configured mean.
        let p = (1.0 / subject.noise.burst_len_mean.max(1.0)).min(1.0);
        let geo = rand_distr::Geometric::new(p).expect("0 < p <= 1");
        let len = geo.sample(&mut rng) as usize + 1;
        for v in values.iter_mut().skip(start).take(len) {
            *v = rng.gen();
        }
    }
    GrayCode(values)
}

/// Generates the whole dataset from its master seed.
pub fn gen_dataset(params: &DatasetParams) -> Dataset {
    let mut subjects = Vec::with_capacity(params.subjects);
    let mut captures = Vec::with_capacity(params.subjects);
    for s in 0..params.subjects {
        let subject_seed = mix(params.master_seed).wrapping_add(s as u64);
        let subject = gen_subject(subject_seed, &params.gen);
        let caps = (0..params.captures_per_subject)
            .map(|c| capture(&subject, 0x0c00 + c as u64))
            .collect();
        captures.push(CaptureSet {
            subject_id: subject.id,
            captures: caps,
        });
        subjects.push(subject);
    }
    Dataset { subjects, captures }
}

// ---------------------------------------------------------------------------
// Gray-code and manifest files
// ---------------------------------------------------------------------------

const GRAY_MAGIC: &[u8; 4] = b"IGC1";

pub fn save_gray_code(path: &Path, code: &GrayCode) -> Result<(), DataError> {
    let mut out = Vec::with_capacity(8 + code.len());
    out.extend_from_slice(GRAY_MAGIC);
    out.extend_from_slice(&(code.len() as u32).to_le_bytes());
    out.extend_from_slice(code.values());
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })
}

pub fn load_gray_code(path: &Path) -> Result<GrayCode, DataError> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    let bad = |reason: &str| DataError::BadFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    if data.len() < 8 || &data[..4] != GRAY_MAGIC {
        return Err(bad("missing IGC1 header"));
    }
    let len = u32::from_le_bytes(data[4..8].try_into().unwrap()) as usize;
    if data.len() != 8 + len {
        return Err(bad(&format!(
            "declared {len} samples, file holds {}",
            data.len() - 8
        )));
    }
    Ok(GrayCode(data[8..].to_vec()))
}

/// Writes every capture as `s<subject>_c<capture>.igc` plus a manifest
/// mapping subject ids to their capture files. Returns the manifest path.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<PathBuf, DataError> {
    let io_err = |source: std::io::Error| DataError::Io {
        path: dir.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut manifest = String::new();
    for (s, set) in dataset.captures.iter().enumerate() {
        let mut line = format!("{}", set.subject_id);
        for (c, code) in set.captures.iter().enumerate() {
            let name = format!("s{s:03}_c{c}.igc");
            save_gray_code(&dir.join(&name), code)?;
            line.push(' ');
            line.push_str(&name);
        }
        manifest.push_str(&line);
        manifest.push('\n');
    }
    let manifest_path = dir.join("manifest.txt");
    std::fs::write(&manifest_path, manifest).map_err(io_err)?;
    Ok(manifest_path)
}

/// Parses a manifest back into (subject id, capture paths) entries, paths
/// resolved relative to the manifest location.
pub fn load_manifest(path: &Path) -> Result<Vec<(u64, Vec<PathBuf>)>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id = fields
            .next()
            .and_then(|f| f.parse::<u64>().ok())
            .ok_or_else(|| DataError::BadManifest {
                path: path.display().to_string(),
                line: i + 1,
                reason: "missing subject id".into(),
            })?;
        let paths: Vec<PathBuf> = fields.map(|f| base.join(f)).collect();
        if paths.is_empty() {
            return Err(DataError::BadManifest {
                path: path.display().to_string(),
                line: i + 1,
                reason: "no capture files".into(),
            });
        }
        out.push((id, paths));
    }
    Ok(out)
}
