//! Command-line front end wiring all modules together.
//!
//! Exit codes: 0 for success (and for a verified match), 1 for a clean
//! non-match from `verify`, 2 and up for errors of any kind.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::code_registry::{load_registry, Registry, RegistryError};
use crate::codec::{CodecError, DecodeParams, Qbits};
use crate::eval::{
    best_per_target, build_plan, compare_curves, default_thresholds, roc_csv, run_roc, score_plan,
    summary_csv, EvalError, EvalOptions, PairScores, Pipeline, PipelineKind, RocPoint, SummaryRow,
    FAR_TARGETS,
};
use crate::iris_features::{extract_gray_code, load_texture, FeatureError, FeatureParams};
use crate::mode_manager::{default_modes, load_modes, ModeError, ModeManager, UsageStats};
use crate::synth_data::{
    gen_dataset, load_gray_code, save_gray_code, write_dataset, DataError, Dataset, DatasetParams,
    GenParams,
};
use crate::template_protocol::{
    enroll, load_record, save_record, verify, ProtocolError, VerifyParams,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: cannot parse config: {reason}")]
    BadConfig { path: String, reason: String },
    #[error("bad flag value: {0}")]
    BadFlag(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Parser)]
#[command(
    name = "iris-ldpc",
    version,
    about = "QC-LDPC error-corrected iris template matching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the code registry.
    Codes(CodesArgs),
    /// Extract a gray code from a normalized texture file.
    Extract(ExtractArgs),
    /// Enroll a gray code into a protected record.
    Enroll(EnrollArgs),
    /// Verify two probe captures against a record.
    Verify(VerifyArgs),
    /// Generate a synthetic dataset on disk.
    GenDataset(GenDatasetArgs),
    /// List decoder modes and their model constants.
    Modes(ModesArgs),
    /// Run the full FAR/TAR evaluation.
    Eval(EvalArgs),
}

#[derive(Args)]
struct CodesArgs {
    /// Directory of base-matrix files; defaults to the built-in tables.
    #[arg(long)]
    config_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Input texture (IRT1 raw or PGM P5).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Output gray-code file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, default_value_t = FeatureParams::default().f0)]
    f0: f64,
    #[arg(long, default_value_t = FeatureParams::default().sigma_ratio)]
    sigma_ratio: f64,
    /// Code length.
    #[arg(long, default_value_t = FeatureParams::default().m)]
    m: usize,
    #[arg(long, default_value_t = FeatureParams::default().gain)]
    gain: f64,
}

#[derive(Args)]
struct EnrollArgs {
    /// Registry code to enroll with.
    #[arg(long, default_value = "n1920_k1280")]
    code: String,
    /// Input gray-code file.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Output record file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long)]
    config_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Enroll record to verify against.
    #[arg(long, value_name = "FILE")]
    record: PathBuf,
    /// First probe capture.
    #[arg(long, value_name = "FILE")]
    x1: PathBuf,
    /// Second probe capture.
    #[arg(long, value_name = "FILE")]
    x2: PathBuf,
    /// Match threshold on fractional Hamming distance.
    #[arg(long, default_value_t = 0.32)]
    threshold: f64,
    /// Decoder quantization: 2, 4, 8 or float.
    #[arg(long, default_value = "8", conflicts_with = "mode")]
    qbits: String,
    /// Decoder iterations.
    #[arg(long, default_value_t = 50)]
    iters: usize,
    /// Min-sum normalization factor.
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    /// Decode through a named mode (fast, low_power, accuracy) instead of
    /// direct decoder settings; prints the accounting afterwards.
    #[arg(long)]
    mode: Option<String>,
    /// Circular alignment search window at matching (0 = off).
    #[arg(long, default_value_t = 0)]
    align_shifts: usize,
    /// Skip error correction entirely (baseline matcher).
    #[arg(long, default_value_t = false, conflicts_with_all = ["mode", "qbits"])]
    baseline: bool,
    #[arg(long)]
    config_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Output directory for capture files and the manifest.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 8)]
    subjects: usize,
    #[arg(long, default_value_t = 4)]
    captures: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Per-subject noise levels (gray levels), comma separated.
    #[arg(long, default_value = "18", value_delimiter = ',')]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    control_spacing: usize,
    #[arg(long, default_value_t = 0.3)]
    burst_prob: f64,
    #[arg(long, default_value_t = 40.0)]
    burst_len_mean: f64,
    /// Code length.
    #[arg(long, default_value_t = 1280)]
    m: usize,
}

#[derive(Args)]
struct ModesArgs {
    /// Mode definitions file; defaults to the built-in three modes.
    #[arg(long, value_name = "FILE")]
    modes_config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Evaluation config file; every field has a default.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override the dataset master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Worker thread cap (0 = hardware count).
    #[arg(long)]
    threads: Option<usize>,
}

// ---------------------------------------------------------------------------
// Evaluation config
// ---------------------------------------------------------------------------

/// One pipeline entry: either an explicit kind, or a `mode` reference that
/// resolves to the mode's code and quantization.
#[derive(Debug, Clone, Deserialize, Default)]
pub struct PipelineConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// "baseline" or "ldpc".
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub code: Option<String>,
    #[serde(default)]
    pub qbits: Option<String>,
    #[serde(default)]
    pub mode: Option<String>,
}

/// Full evaluation configuration with calibrated defaults; `eval` runs
/// with no arguments at all.
#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Dataset master seed.
    pub seed: u64,
    /// Comparison-plan sampling seed.
    pub plan_seed: u64,
    /// Cap on genuine pairs and on impostor pairs.
    pub max_pairs: usize,
    pub out_dir: PathBuf,
    /// Worker thread cap (0 = hardware count).
    pub threads: usize,
    pub subjects: usize,
    pub captures_per_subject: usize,
    pub code_len: usize,
    /// Template correlation length; see the dataset module.
    pub control_spacing: usize,
    pub sigma_levels: Vec<f64>,
    pub burst_prob: f64,
    pub burst_len_mean: f64,
    pub max_iter: usize,
    pub alpha: f64,
    pub align_shifts: usize,
    pub pipelines: Vec<PipelineConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20260809,
            plan_seed: 7,
            max_pairs: 1500,
            out_dir: PathBuf::from("out"),
            threads: 0,
            subjects: 50,
            captures_per_subject: 6,
            code_len: 1280,
            control_spacing: 64,
            sigma_levels: vec![35.0, 65.0],
            burst_prob: 0.3,
            burst_len_mean: 40.0,
            max_iter: 50,
            alpha: 0.75,
            align_shifts: 0,
            pipelines: vec![
                PipelineConfig {
                    name: Some("baseline".into()),
                    kind: Some("baseline".into()),
                    code: Some("n1920_k1280".into()),
                    ..PipelineConfig::default()
                },
                PipelineConfig {
                    name: Some("ldpc_accuracy".into()),
                    mode: Some("accuracy".into()),
                    ..PipelineConfig::default()
                },
            ],
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::BadConfig {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn dataset_params(&self) -> DatasetParams {
        DatasetParams {
            subjects: self.subjects,
            captures_per_subject: self.captures_per_subject,
            master_seed: self.seed,
            gen: GenParams {
                code_len: self.code_len,
                control_spacing: self.control_spacing,
                sigma_levels: self.sigma_levels.clone(),
                burst_prob: self.burst_prob,
                burst_len_mean: self.burst_len_mean,
            },
        }
    }
}

/// A resolved pipeline plus the decoder mode it maps to, when any.
#[derive(Debug, Clone)]
struct ResolvedPipeline {
    pipeline: Pipeline,
    mode: Option<String>,
}

fn resolve_pipelines(
    configs: &[PipelineConfig],
    manager: &ModeManager,
) -> Result<Vec<ResolvedPipeline>, CliError> {
    configs
        .iter()
        .map(|cfg| {
            if let Some(mode_name) = &cfg.mode {
                let mode = manager
                    .mode(mode_name)
                    .ok_or_else(|| ModeError::UnknownMode(mode_name.clone()))?;
                let name = cfg
                    .name
                    .clone()
                    .unwrap_or_else(|| format!("ldpc_{mode_name}"));
                return Ok(ResolvedPipeline {
                    pipeline: Pipeline {
                        name,
                        kind: PipelineKind::Ldpc {
                            code: mode.spec_name.clone(),
                            qbits: mode.qbits,
                        },
                    },
                    mode: Some(mode_name.clone()),
                });
            }
            let kind = cfg.kind.as_deref().unwrap_or("ldpc");
            let code = cfg
                .code
                .clone()
                .ok_or_else(|| CliError::BadFlag(format!("pipeline {:?} needs a code", cfg.name)))?;
            let pipeline = match kind {
                "baseline" => Pipeline {
                    name: cfg.name.clone().unwrap_or_else(|| "baseline".into()),
                    kind: PipelineKind::Baseline { code },
                },
                "ldpc" => {
                    let qbits_str = cfg.qbits.as_deref().unwrap_or("8");
                    let qbits = Qbits::parse(qbits_str)
                        .ok_or_else(|| CliError::BadFlag(format!("bad qbits {qbits_str:?}")))?;
                    Pipeline {
                        name: cfg
                            .name
                            .clone()
                            .unwrap_or_else(|| format!("ldpc_{}", qbits.label())),
                        kind: PipelineKind::Ldpc { code, qbits },
                    }
                }
                other => return Err(CliError::BadFlag(format!("bad pipeline kind {other:?}"))),
            };
            Ok(ResolvedPipeline {
                pipeline,
                mode: None,
            })
        })
        .collect()
}

/// Everything one evaluation run produced.
pub struct EvalReport {
    pub scores: Vec<(String, PairScores)>,
    pub curves: Vec<(String, Vec<RocPoint>)>,
    pub summary: Vec<SummaryRow>,
    pub roc_files: Vec<PathBuf>,
    pub summary_file: PathBuf,
    pub events_file: Option<PathBuf>,
    pub model_stats: Option<UsageStats>,
    pub wall_seconds: f64,
}

/// Runs the evaluation: dataset, plan, one scoring pass per pipeline, ROC
/// sweeps, the comparison summary, and the mode-accounting ledger for
/// pipelines that map to a decoder mode.
pub fn run_eval(config: &RunConfig) -> Result<EvalReport, CliError> {
    let started = Instant::now();
    let registry = Registry::builtin();
    let manager = ModeManager::with_default_modes(registry.clone())?;
    let resolved = resolve_pipelines(&config.pipelines, &manager)?;
    if resolved.is_empty() {
        return Err(CliError::BadFlag("no pipelines configured".into()));
    }

    let dataset = gen_dataset(&config.dataset_params());
    let plan = build_plan(&dataset, config.plan_seed, config.max_pairs)?;
    let options = EvalOptions {
        decode: DecodeParams {
            max_iter: config.max_iter,
            alpha: config.alpha,
        },
        align_shifts: config.align_shifts,
    };

    let score_all = || -> Result<Vec<(String, PairScores)>, CliError> {
        resolved
            .iter()
            .map(|r| {
                let scores = score_plan(&dataset, &plan, &r.pipeline, &registry, &options)?;
                Ok((r.pipeline.name.clone(), scores))
            })
            .collect()
    };
    let scores = if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| CliError::BadFlag(format!("cannot build thread pool: {e}")))?;
        pool.install(score_all)?
    } else {
        score_all()?
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|source| CliError::Io {
        path: config.out_dir.display().to_string(),
        source,
    })?;
    let write = |path: &Path, text: &str| -> Result<(), CliError> {
        std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
    };

    let thresholds = default_thresholds();
    let mut curves = Vec::new();
    let mut roc_files = Vec::new();
    for (name, s) in &scores {
        let points = run_roc(s, &thresholds)?;
        let file = config.out_dir.join(format!("roc_{name}.csv"));
        write(&file, &roc_csv(&points))?;
        roc_files.push(file);
        curves.push((name.clone(), points));
    }

    let summary = compare_curves(&curves, &FAR_TARGETS)?;
    let summary_file = config.out_dir.join("summary.csv");
    write(&summary_file, &summary_csv(&summary))?;

    // Cost-model accounting: replay each mode pipeline's decodes in plan
    // order on the shared manager ledger.
    let n_templates = (plan.genuine.len() + plan.impostor.len()) as u64;
    let mut any_mode = false;
    for r in &resolved {
        if let Some(mode) = &r.mode {
            any_mode = true;
            manager.switch_mode(mode)?;
            for _ in 0..n_templates {
                manager.charge_decode()?;
            }
        }
    }
    let (events_file, model_stats) = if any_mode {
        let file = config.out_dir.join("modes_events.csv");
        manager.write_event_csv(&file)?;
        (Some(file), Some(manager.stats()))
    } else {
        (None, None)
    };

    Ok(EvalReport {
        scores,
        curves,
        summary,
        roc_files,
        summary_file,
        events_file,
        model_stats,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Command implementations
// ---------------------------------------------------------------------------

fn registry_from(config_dir: &Option<PathBuf>) -> Result<Registry, CliError> {
    match config_dir {
        Some(dir) => Ok(load_registry(dir)?),
        None => Ok(Registry::builtin()),
    }
}

fn cmd_codes(args: &CodesArgs) -> Result<i32, CliError> {
    let registry = registry_from(&args.config_dir)?;
    println!(
        "{:<14} {:>5} {:>5} {:>4} {:>5} {:>7} {:>7}  {}",
        "name", "n", "k", "z", "rate", "layers", "blocks", "notes"
    );
    for c in registry.codes() {
        println!(
            "{:<14} {:>5} {:>5} {:>4} {:>5} {:>7} {:>7}  {}",
            c.name,
            c.n,
            c.k,
            c.z,
            c.rate.label(),
            c.layers(),
            c.blocks_per_template,
            c.notes
        );
    }
    Ok(0)
}

fn cmd_extract(args: &ExtractArgs) -> Result<i32, CliError> {
    let texture = load_texture(&args.input)?;
    let params = FeatureParams {
        f0: args.f0,
        sigma_ratio: args.sigma_ratio,
        m: args.m,
        gain: args.gain,
    };
    let gray = extract_gray_code(&texture, &params)?;
    save_gray_code(&args.out, &gray)?;
    println!(
        "extracted {} samples from {}x{} texture -> {}",
        gray.len(),
        texture.rows(),
        texture.cols(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_enroll(args: &EnrollArgs) -> Result<i32, CliError> {
    let registry = registry_from(&args.config_dir)?;
    let spec = registry
        .get(&args.code)
        .ok_or_else(|| ProtocolError::UnknownCode(args.code.clone()))?;
    let gray = load_gray_code(&args.input)?;
    let record = enroll(&gray, spec)?;
    save_record(&args.out, &record)?;
    println!(
        "enrolled {} samples with {} ({} block(s), {} parity bits, {} pad bits) -> {}",
        gray.len(),
        spec.name,
        spec.blocks_per_template,
        record.p0_prime.len(),
        record.pad_len,
        args.out.display()
    );
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let registry = registry_from(&args.config_dir)?;
    let record = load_record(&args.record, &registry)?;
    let x1 = load_gray_code(&args.x1)?;
    let x2 = load_gray_code(&args.x2)?;

    let outcome = if let Some(mode_name) = &args.mode {
        let mut manager = ModeManager::with_default_modes(registry.clone())?;
        manager.set_decode_params(DecodeParams {
            max_iter: args.iters,
            alpha: args.alpha,
        });
        manager.switch_mode(mode_name)?;
        let outcome = manager.verify_with_active_mode(&record, &x1, &x2, args.threshold)?;
        let stats = manager.stats();
        println!(
            "model: latency {} ns, energy {:.3} uJ, swaps {} ({} ms)",
            stats.total_model_latency_ns,
            stats.total_model_energy_uj,
            stats.swaps,
            stats.total_swap_ms
        );
        outcome
    } else if args.baseline {
        crate::template_protocol::verify_baseline(
            &record,
            &x1,
            &x2,
            args.threshold,
            args.align_shifts,
        )?
    } else {
        let qbits = Qbits::parse(&args.qbits)
            .ok_or_else(|| CliError::BadFlag(format!("bad qbits {:?}", args.qbits)))?;
        let spec = registry
            .get(&record.code_name)
            .ok_or_else(|| ProtocolError::UnknownCode(record.code_name.clone()))?;
        let params = VerifyParams {
            qbits,
            decode: DecodeParams {
                max_iter: args.iters,
                alpha: args.alpha,
            },
            threshold: args.threshold,
            align_shifts: args.align_shifts,
        };
        verify(&record, spec, &x1, &x2, &params)?
    };

    let iters: Vec<String> = outcome
        .decode
        .iter()
        .map(|d| {
            format!(
                "{}{}",
                d.iterations_used,
                if d.converged { "" } else { "!" }
            )
        })
        .collect();
    println!(
        "mode {}  hd {:.6}  matched {}  iterations [{}]",
        outcome.mode_name,
        outcome.hd,
        outcome.matched,
        iters.join(",")
    );
    Ok(if outcome.matched { 0 } else { 1 })
}

fn cmd_gen_dataset(args: &GenDatasetArgs) -> Result<i32, CliError> {
    if args.sigma.is_empty() {
        return Err(CliError::BadFlag("need at least one sigma level".into()));
    }
    let params = DatasetParams {
        subjects: args.subjects,
        captures_per_subject: args.captures,
        master_seed: args.seed,
        gen: GenParams {
            code_len: args.m,
            control_spacing: args.control_spacing,
            sigma_levels: args.sigma.clone(),
            burst_prob: args.burst_prob,
            burst_len_mean: args.burst_len_mean,
        },
    };
    let dataset: Dataset = gen_dataset(&params);
    let manifest = write_dataset(&args.out_dir, &dataset)?;
    println!(
        "wrote {} subjects x {} captures under {} (manifest {})",
        args.subjects,
        args.captures,
        args.out_dir.display(),
        manifest.display()
    );
    Ok(0)
}

fn cmd_modes(args: &ModesArgs) -> Result<i32, CliError> {
    let modes = match &args.modes_config {
        Some(path) => load_modes(path)?,
        None => default_modes(),
    };
    println!(
        "{:<10} {:<13} {:>5} {:<19} {:>11} {:>8} {:>12}",
        "name", "code", "qbits", "scheme", "latency_ns", "power_mw", "bitstream_kb"
    );
    for m in &modes {
        println!(
            "{:<10} {:<13} {:>5} {:<19} {:>11} {:>8} {:>12}",
            m.name,
            m.spec_name,
            m.qbits.label(),
            m.scheme.label(),
            m.latency_ns,
            m.power_mw,
            m.bitstream_kb
        );
    }
    Ok(0)
}

fn cmd_eval(args: &EvalArgs) -> Result<i32, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(threads) = args.threads {
        config.threads = threads;
    }

    let report = run_eval(&config)?;
    for file in &report.roc_files {
        println!("wrote {}", file.display());
    }
    println!("wrote {}", report.summary_file.display());
    if let Some(file) = &report.events_file {
        println!("wrote {}", file.display());
    }

    println!("\n{:<16} {:>10} {:>10}", "pipeline", "far_target", "tar");
    for row in &report.summary {
        match row.tar {
            Some(t) => println!("{:<16} {:>10.3} {:>10.6}", row.pipeline, row.far_target, t),
            None => println!("{:<16} {:>10.3} {:>10}", row.pipeline, row.far_target, "-"),
        }
    }
    for (target, best) in best_per_target(&report.summary) {
        match best {
            Some(name) => println!("best at FAR {target}: {name}"),
            None => println!("best at FAR {target}: unreached by every pipeline"),
        }
    }
    if let Some(stats) = &report.model_stats {
        println!(
            "\nmodel totals: {} decodes, {} ns, {:.3} uJ, {} swaps ({} ms)",
            stats.decodes,
            stats.total_model_latency_ns,
            stats.total_model_energy_uj,
            stats.swaps,
            stats.total_swap_ms
        );
    }
    println!("wall time: {:.2} s", report.wall_seconds);
    Ok(0)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Codes(args) => cmd_codes(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Enroll(args) => cmd_enroll(args),
        Command::Verify(args) => cmd_verify(args),
        Command::GenDataset(args) => cmd_gen_dataset(args),
        Command::Modes(args) => cmd_modes(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_self_consistent() {
        let config = RunConfig::default();
        assert_eq!(config.pipelines.len(), 2);
        let registry = Registry::builtin();
        let manager = ModeManager::with_default_modes(registry).unwrap();
        let resolved = resolve_pipelines(&config.pipelines, &manager).unwrap();
        assert_eq!(resolved[0].pipeline.name, "baseline");
        assert_eq!(resolved[1].pipeline.name, "ldpc_accuracy");
        assert_eq!(resolved[1].mode.as_deref(), Some("accuracy"));
        match &resolved[1].pipeline.kind {
            PipelineKind::Ldpc { code, qbits } => {
                assert_eq!(code, "n1920_k1280");
                assert_eq!(*qbits, Qbits::Q8);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn config_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.toml");
        std::fs::write(
            &path,
            r#"
subjects = 4
captures_per_subject = 3
max_pairs = 20

[[pipelines]]
name = "only"
kind = "ldpc"
code = "n960_k640"
qbits = "4"
"#,
        )
        .unwrap();
        let config = RunConfig::from_file(&path).unwrap();
        assert_eq!(config.subjects, 4);
        assert_eq!(config.max_pairs, 20);
        assert_eq!(config.seed, RunConfig::default().seed);
        assert_eq!(config.pipelines.len(), 1);

        std::fs::write(&path, "subjects = \"many\"").unwrap();
        assert!(matches!(
            RunConfig::from_file(&path),
            Err(CliError::BadConfig { .. })
        ));
    }

    #[test]
    fn tiny_eval_run_produces_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            subjects: 4,
            captures_per_subject: 3,
            max_pairs: 12,
            out_dir: dir.path().join("out"),
            sigma_levels: vec![10.0],
            burst_prob: 0.0,
            control_spacing: 1,
            ..RunConfig::default()
        };
        let report = run_eval(&config).unwrap();
        assert_eq!(report.roc_files.len(), 2);
        for f in &report.roc_files {
            assert!(f.exists());
        }
        assert!(report.summary_file.exists());
        let events = report.events_file.as_ref().unwrap();
        assert!(events.exists());
        let stats = report.model_stats.unwrap();
        assert_eq!(stats.swaps, 1);
        assert_eq!(
            stats.decodes,
            (report.scores[0].1.genuine_hd.len() + report.scores[0].1.impostor_hd.len()) as u64
        );
    }
}
