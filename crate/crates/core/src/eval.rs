//! Genuine/impostor comparison plans, ROC sweeps and pipeline comparison
//! tables.
//!
//! Distances are computed once per pair and reused across the whole
//! threshold grid; pair evaluations are independent and run in parallel.

use std::collections::HashSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::code_registry::Registry;
use crate::codec::{DecodeParams, Qbits};
use crate::synth_data::Dataset;
use crate::template_protocol::{
    enroll, verify, verify_baseline, EnrollRecord, ProtocolError, VerifyParams,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("subject {subject} has {captures} captures; need at least 3")]
    TooFewCaptures { subject: usize, captures: usize },
    #[error("comparison plan has no {0} pairs")]
    EmptyPlan(&'static str),
    #[error("thresholds must be sorted ascending within [0, 0.5]")]
    BadThresholds,
    #[error("curves do not share a threshold grid")]
    GridMismatch,
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// One within-subject comparison: enroll capture 0, probe with two others.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenuinePair {
    pub subject: usize,
    pub x1: usize,
    pub x2: usize,
}

/// One cross-subject comparison: enrolled subject vs a probe pair from a
/// different subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImpostorPair {
    pub enroll_subject: usize,
    pub probe_subject: usize,
    pub x1: usize,
    pub x2: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonPlan {
    pub genuine: Vec<GenuinePair>,
    pub impostor: Vec<ImpostorPair>,
}

/// Builds a deterministic comparison plan. Genuine pairs enumerate all
/// within-subject probe pairs (captures 1.., enrollment is capture 0) up to
/// `max_pairs`; impostor pairs are sampled without replacement up to the
/// same cap.
pub fn build_plan(
    dataset: &Dataset,
    seed: u64,
    max_pairs: usize,
) -> Result<ComparisonPlan, EvalError> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let n = dataset.n_subjects();
    for s in 0..n {
        let captures = dataset.captures_of(s).len();
        if captures < 3 {
            return Err(EvalError::TooFewCaptures {
                subject: s,
                captures,
            });
        }
    }

    let mut genuine = Vec::new();
    'outer: for s in 0..n {
        let captures = dataset.captures_of(s).len();
        for i in 1..captures {
            for j in i + 1..captures {
                if genuine.len() >= max_pairs {
                    break 'outer;
                }
                genuine.push(GenuinePair { subject: s, x1: i, x2: j });
            }
        }
    }

    let mut impostor = Vec::new();
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = HashSet::new();
        let mut attempts = 0usize;
        let attempt_cap = max_pairs.saturating_mul(64).max(4096);
        while impostor.len() < max_pairs && attempts < attempt_cap {
            attempts += 1;
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let captures = dataset.captures_of(b).len();
            let i = rng.gen_range(1..captures);
            let j = rng.gen_range(1..captures);
            if i == j {
                continue;
            }
            let (i, j) = (i.min(j), i.max(j));
            if seen.insert((a, b, i, j)) {
                impostor.push(ImpostorPair {
                    enroll_subject: a,
                    probe_subject: b,
                    x1: i,
                    x2: j,
                });
            }
        }
    }

    Ok(ComparisonPlan { genuine, impostor })
}

/// A matcher variant under evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub name: String,
    pub kind: PipelineKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineKind {
    /// Binarize-and-compare, no error correction.
    Baseline { code: String },
    /// Decode against the escrowed parity before matching.
    Ldpc { code: String, qbits: Qbits },
}

impl PipelineKind {
    pub fn code(&self) -> &str {
        match self {
            PipelineKind::Baseline { code } | PipelineKind::Ldpc { code, .. } => code,
        }
    }
}

/// Matching-side evaluation options shared by all pairs.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub decode: DecodeParams,
    pub align_shifts: usize,
}

impl EvalOptions {
    pub fn new(decode: DecodeParams) -> Self {
        EvalOptions {
            decode,
            align_shifts: 0,
        }
    }
}

/// Cached per-pair distances of one pipeline over one plan.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScores {
    pub genuine_hd: Vec<f64>,
    pub impostor_hd: Vec<f64>,
}

/// Scores every pair of the plan under one pipeline. Pair order follows
/// the plan, so results are deterministic regardless of worker count.
pub fn score_plan(
    dataset: &Dataset,
    plan: &ComparisonPlan,
    pipeline: &Pipeline,
    registry: &Registry,
    options: &EvalOptions,
) -> Result<PairScores, EvalError> {
    let code = pipeline.kind.code();
    let spec = registry
        .get(code)
        .ok_or_else(|| EvalError::UnknownCode(code.to_string()))?;

    // Enroll every subject once on capture 0.
    let records: Vec<EnrollRecord> = (0..dataset.n_subjects())
        .map(|s| enroll(&dataset.captures_of(s)[0], spec))
        .collect::<Result<_, _>>()?;

    let hd_of = |record: &EnrollRecord, probe_subject: usize, x1: usize, x2: usize| {
        let caps = dataset.captures_of(probe_subject);
        match &pipeline.kind {
            PipelineKind::Baseline { .. } => {
                verify_baseline(record, &caps[x1], &caps[x2], 0.5, options.align_shifts)
                    .map(|o| o.hd)
            }
            PipelineKind::Ldpc { qbits, .. } => {
                let params = VerifyParams {
                    qbits: *qbits,
                    decode: options.decode,
                    threshold: 0.5,
                    align_shifts: options.align_shifts,
                };
                verify(record, spec, &caps[x1], &caps[x2], &params).map(|o| o.hd)
            }
        }
    };

    let genuine_hd: Vec<f64> = plan
        .genuine
        .par_iter()
        .map(|p| hd_of(&records[p.subject], p.subject, p.x1, p.x2))
        .collect::<Result<_, _>>()?;
    let impostor_hd: Vec<f64> = plan
        .impostor
        .par_iter()
        .map(|p| hd_of(&records[p.enroll_subject], p.probe_subject, p.x1, p.x2))
        .collect::<Result<_, _>>()?;

    Ok(PairScores {
        genuine_hd,
        impostor_hd,
    })
}

/// One ROC operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub tar: f64,
    pub n_genuine: usize,
    pub n_impostor: usize,
}

/// The default threshold grid: 0.00 to 0.50 in steps of 0.01.
pub fn default_thresholds() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 100.0).collect()
}

/// Sweeps the thresholds over cached pair scores.
pub fn run_roc(scores: &PairScores, thresholds: &[f64]) -> Result<Vec<RocPoint>, EvalError> {
    if scores.genuine_hd.is_empty() {
        return Err(EvalError::EmptyPlan("genuine"));
    }
    if scores.impostor_hd.is_empty() {
        return Err(EvalError::EmptyPlan("impostor"));
    }
    if thresholds.is_empty()
        || thresholds.windows(2).any(|w| w[0] >= w[1])
        || thresholds[0] < 0.0
        || *thresholds.last().unwrap() > 0.5
    {
        return Err(EvalError::BadThresholds);
    }

    let mut genuine = scores.genuine_hd.clone();
    let mut impostor = scores.impostor_hd.clone();
    genuine.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);
    let at_most = |sorted: &[f64], t: f64| sorted.partition_point(|&h| h <= t);

    Ok(thresholds
        .iter()
        .map(|&t| RocPoint {
            threshold: t,
            far: at_most(&impostor, t) as f64 / impostor.len() as f64,
            tar: at_most(&genuine, t) as f64 / genuine.len() as f64,
            n_genuine: genuine.len(),
            n_impostor: impostor.len(),
        })
        .collect())
}

/// TAR of one pipeline at one FAR operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub pipeline: String,
    pub far_target: f64,
    /// None when the curve never reaches the requested FAR.
    pub tar: Option<f64>,
}

/// The fixed FAR operating points of the comparison table.
pub const FAR_TARGETS: [f64; 3] = [0.001, 0.01, 0.05];

/// TAR at a FAR target by linear interpolation on the FAR axis.
///
/// Flat FAR runs keep the largest TAR at or below the target, so the value
/// is the best TAR achievable without exceeding the target.
pub fn tar_at_far(points: &[RocPoint], target: f64) -> Option<f64> {
    let last = points.last()?;
    if last.far < target {
        return None; // unreached
    }
    let below = points.iter().rposition(|p| p.far <= target);
    match below {
        None => {
            // Even the first grid point overshoots; interpolate from the
            // (0, 0) origin.
            let first = points.first()?;
            Some(first.tar * target / first.far)
        }
        Some(i) if points[i].far == target => Some(points[i].tar),
        Some(i) => {
            let a = points[i];
            let b = points[i + 1];
            Some(a.tar + (target - a.far) / (b.far - a.far) * (b.tar - a.tar))
        }
    }
}

/// Builds the comparison table over named curves sharing one threshold
/// grid.
pub fn compare_curves(
    curves: &[(String, Vec<RocPoint>)],
    far_targets: &[f64],
) -> Result<Vec<SummaryRow>, EvalError> {
    if let Some((_, first)) = curves.first() {
        for (_, pts) in curves.iter().skip(1) {
            if pts.len() != first.len()
                || pts
                    .iter()
                    .zip(first)
                    .any(|(a, b)| a.threshold != b.threshold)
            {
                return Err(EvalError::GridMismatch);
            }
        }
    }
    let mut rows = Vec::new();
    for &target in far_targets {
        for (name, pts) in curves {
            rows.push(SummaryRow {
                pipeline: name.clone(),
                far_target: target,
                tar: tar_at_far(pts, target),
            });
        }
    }
    Ok(rows)
}

/// Best pipeline per operating point, by TAR (unreached curves lose).
pub fn best_per_target(rows: &[SummaryRow]) -> Vec<(f64, Option<String>)> {
    let mut targets: Vec<f64> = rows.iter().map(|r| r.far_target).collect();
    targets.dedup();
    targets
        .into_iter()
        .map(|t| {
            let best = rows
                .iter()
                .filter(|r| r.far_target == t && r.tar.is_some())
                .max_by(|a, b| a.tar.partial_cmp(&b.tar).unwrap())
                .map(|r| r.pipeline.clone());
            (t, best)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// ROC curve as CSV with 6-decimal fractions and LF endings.
pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold,far,tar,n_genuine,n_impostor\n");
    for p in points {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{},{}\n",
            p.threshold, p.far, p.tar, p.n_genuine, p.n_impostor
        ));
    }
    out
}

/// Summary table as CSV; `tar` is empty on unreached operating points.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("pipeline,far_target,tar,reached\n");
    for r in rows {
        match r.tar {
            Some(t) => out.push_str(&format!(
                "{},{:.6},{:.6},yes\n",
                r.pipeline, r.far_target, t
            )),
            None => out.push_str(&format!("{},{:.6},,unreached\n", r.pipeline, r.far_target)),
        }
    }
    out
}
