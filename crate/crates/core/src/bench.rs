//! Synthetic correspondence sets with known ground truth, and the
//! precision/recall/error bookkeeping used to sweep outlier ratios.
//!
//! Randomness comes from `ChaCha8Rng` (rand_chacha 0.9) seeded with
//! `seed_from_u64`; Gaussian noise from `rand_distr::Normal` (0.5). Both are
//! platform independent, so a seed pins the generated set bit for bit.

use std::collections::HashSet;
use std::io::Write;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GrorError, Result};
use crate::geom::{axis_angle_rotation, rotation_error, translation_error, RigidTransform, Vec3};
use crate::graph::CorrespondenceSet;
use crate::registration::{register, GrorParams, RegistrationResult};

/// Reported rotation error of a failed trial.
pub const FAILED_ROTATION_ERROR_DEG: f64 = 180.0;
/// Reported translation error of a failed trial.
pub const FAILED_TRANSLATION_ERROR: f64 = f64::MAX;

pub const CSV_HEADER: [&str; 8] = [
    "ratio",
    "trials",
    "mean_rot_err_deg",
    "mean_trans_err",
    "mean_precision",
    "mean_recall",
    "mean_time_s",
    "max_rot_err_deg",
];

/// 60° about (1, 1, 1)/√3, then (0.1, −0.05, 0.2).
pub fn default_ground_truth() -> RigidTransform {
    let axis = Vec3::new(1.0, 1.0, 1.0).normalize();
    RigidTransform::new(
        axis_angle_rotation(&axis, 60f64.to_radians()).expect("unit axis"),
        Vec3::new(0.1, -0.05, 0.2),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationSpec {
    pub n_inliers: usize,
    /// Outliers as a fraction of all correspondences.
    pub outlier_ratio: f64,
    /// Per-coordinate standard deviation of the target-side noise.
    pub noise_sigma: f64,
    pub rho: f64,
    pub ground_truth: RigidTransform,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            n_inliers: 80,
            outlier_ratio: 0.0,
            noise_sigma: 0.002,
            rho: 0.002,
            ground_truth: default_ground_truth(),
            seed: 42,
        }
    }
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_inliers < 3 {
            return Err(GrorError::InvalidParameter(format!(
                "n_inliers must be at least 3, got {}",
                self.n_inliers
            )));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return Err(GrorError::InvalidParameter(format!(
                "outlier ratio must lie in [0, 1), got {}",
                self.outlier_ratio
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(GrorError::InvalidParameter(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(GrorError::InvalidParameter(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        Ok(())
    }

    /// `N_out = round(N_in · r / (1 − r))`.
    pub fn n_outliers(&self) -> usize {
        let r = self.outlier_ratio;
        (self.n_inliers as f64 * r / (1.0 - r)).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledCorrespondences {
    /// Correspondences with `delta = rho`.
    pub set: CorrespondenceSet,
    /// Ids of the true inliers, ascending.
    pub inlier_ids: Vec<usize>,
}

fn uniform_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random(), rng.random(), rng.random())
}

/// Inliers: source points uniform in the unit cube, targets moved by the
/// ground truth plus Gaussian noise. Outliers: targets uniform in the ball
/// around the inlier target centroid whose radius is the inlier target
/// bounding-box diagonal, each paired with a source inlier point drawn with
/// replacement. The result is shuffled.
pub fn generate(spec: &SimulationSpec) -> Result<LabeledCorrespondences> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| GrorError::InvalidParameter(format!("noise: {e}")))?;

    let q_in: Vec<Vec3> = (0..spec.n_inliers)
        .map(|_| uniform_unit(&mut rng))
        .collect();
    let p_in: Vec<Vec3> = q_in
        .iter()
        .map(|q| {
            let n = Vec3::new(
                noise.sample(&mut rng),
                noise.sample(&mut rng),
                noise.sample(&mut rng),
            );
            spec.ground_truth.apply(q) + n
        })
        .collect();

    let centroid = p_in.iter().sum::<Vec3>() / p_in.len() as f64;
    let (lo, hi) = p_in.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    let radius = (hi - lo).norm();

    let mut pairs: Vec<(Vec3, Vec3, bool)> = p_in
        .iter()
        .zip(&q_in)
        .map(|(p, q)| (*p, *q, true))
        .collect();
    for _ in 0..spec.n_outliers() {
        let offset = loop {
            let v = uniform_unit(&mut rng) * 2.0 - Vec3::repeat(1.0);
            if v.norm_squared() <= 1.0 {
                break v;
            }
        };
        let q = q_in[rng.random_range(0..q_in.len())];
        pairs.push((centroid + offset * radius, q, false));
    }
    pairs.shuffle(&mut rng);

    let inlier_ids = pairs
        .iter()
        .enumerate()
        .filter_map(|(id, &(_, _, inlier))| inlier.then_some(id))
        .collect();
    let set = CorrespondenceSet::new(pairs.into_iter().map(|(p, q, _)| (p, q)), spec.rho)?;
    Ok(LabeledCorrespondences { set, inlier_ids })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub rotation_error_deg: f64,
    pub translation_error: f64,
    pub precision: f64,
    pub recall: f64,
    pub elapsed_s: f64,
    pub consensus_size: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub succeeded: bool,
}

impl TrialReport {
    pub fn failed(elapsed: Duration) -> Self {
        Self {
            rotation_error_deg: FAILED_ROTATION_ERROR_DEG,
            translation_error: FAILED_TRANSLATION_ERROR,
            precision: 0.0,
            recall: 0.0,
            elapsed_s: elapsed.as_secs_f64(),
            consensus_size: 0,
            true_positives: 0,
            false_positives: 0,
            succeeded: false,
        }
    }
}

/// Scores a consensus against the true inliers.
pub fn evaluate(
    result: &RegistrationResult,
    labels: &LabeledCorrespondences,
    spec: &SimulationSpec,
) -> TrialReport {
    let truth: HashSet<usize> = labels.inlier_ids.iter().copied().collect();
    let tp = result
        .consensus
        .iter()
        .filter(|id| truth.contains(id))
        .count();
    let fp = result.consensus.len() - tp;
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if truth.is_empty() {
        0.0
    } else {
        tp as f64 / truth.len() as f64
    };
    TrialReport {
        rotation_error_deg: rotation_error(&spec.ground_truth.rotation, &result.transform.rotation),
        translation_error: translation_error(
            &spec.ground_truth.translation,
            &result.transform.translation,
        ),
        precision,
        recall,
        elapsed_s: result.elapsed().as_secs_f64(),
        consensus_size: result.consensus.len(),
        true_positives: tp,
        false_positives: fp,
        succeeded: true,
    }
}

/// Generates, registers and scores one trial. Registration failures become
/// [`TrialReport::failed`].
pub fn run_trial(spec: &SimulationSpec, params: &GrorParams) -> Result<TrialReport> {
    let labels = generate(spec)?;
    let start = std::time::Instant::now();
    Ok(match register(&labels.set, params) {
        Ok(result) => evaluate(&result, &labels, spec),
        Err(GrorError::NoConsensus | GrorError::DegenerateConfiguration(_)) => {
            TrialReport::failed(start.elapsed())
        }
        Err(e) => return Err(e),
    })
}

/// Mean or maximum of every numeric report field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub rotation_error_deg: f64,
    pub translation_error: f64,
    pub precision: f64,
    pub recall: f64,
    pub elapsed_s: f64,
    pub consensus_size: f64,
}

impl TrialStats {
    fn fields(r: &TrialReport) -> [f64; 6] {
        [
            r.rotation_error_deg,
            r.translation_error,
            r.precision,
            r.recall,
            r.elapsed_s,
            r.consensus_size as f64,
        ]
    }

    fn from_fields(f: [f64; 6]) -> Self {
        Self {
            rotation_error_deg: f[0],
            translation_error: f[1],
            precision: f[2],
            recall: f[3],
            elapsed_s: f[4],
            consensus_size: f[5],
        }
    }

    /// Running mean, so `f64::MAX` failure sentinels do not overflow.
    pub fn mean(reports: &[TrialReport]) -> Self {
        let mut acc = [0.0; 6];
        for (n, r) in reports.iter().enumerate() {
            for (a, v) in acc.iter_mut().zip(Self::fields(r)) {
                *a += (v - *a) / (n + 1) as f64;
            }
        }
        Self::from_fields(acc)
    }

    pub fn max(reports: &[TrialReport]) -> Self {
        let mut acc = [f64::NEG_INFINITY; 6];
        for r in reports {
            for (a, v) in acc.iter_mut().zip(Self::fields(r)) {
                *a = a.max(v);
            }
        }
        if reports.is_empty() {
            acc = [0.0; 6];
        }
        Self::from_fields(acc)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioSummary {
    pub ratio: f64,
    pub reports: Vec<TrialReport>,
    pub mean: TrialStats,
    pub max: TrialStats,
    pub failures: usize,
}

/// One output row; field order matches [`CSV_HEADER`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub ratio: f64,
    pub trials: usize,
    pub mean_rot_err_deg: f64,
    pub mean_trans_err: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_time_s: f64,
    pub max_rot_err_deg: f64,
}

impl From<&RatioSummary> for TrialRow {
    fn from(s: &RatioSummary) -> Self {
        Self {
            ratio: s.ratio,
            trials: s.reports.len(),
            mean_rot_err_deg: s.mean.rotation_error_deg,
            mean_trans_err: s.mean.translation_error,
            mean_precision: s.mean.precision,
            mean_recall: s.mean.recall,
            mean_time_s: s.mean.elapsed_s,
            max_rot_err_deg: s.max.rotation_error_deg,
        }
    }
}

/// Runs `trials_per_ratio` seeded trials (seed = template seed + trial
/// index) for every ratio. Trials run on `params.threads` threads; each
/// registration itself is single-threaded.
pub fn run_trials(
    template: &SimulationSpec,
    ratios: &[f64],
    trials_per_ratio: usize,
    params: &GrorParams,
) -> Result<Vec<RatioSummary>> {
    if trials_per_ratio == 0 {
        return Err(GrorError::InvalidParameter(
            "at least one trial per ratio is required".into(),
        ));
    }
    params.validate()?;
    let per_trial = GrorParams {
        threads: 1,
        ..*params
    };
    let run_ratio = |ratio: f64| -> Result<RatioSummary> {
        let specs: Vec<SimulationSpec> = (0..trials_per_ratio)
            .map(|t| SimulationSpec {
                outlier_ratio: ratio,
                seed: template.seed.wrapping_add(t as u64),
                ..*template
            })
            .collect();
        let reports: Vec<TrialReport> = if params.threads > 1 {
            specs
                .par_iter()
                .map(|s| run_trial(s, &per_trial))
                .collect::<Result<_>>()?
        } else {
            specs
                .iter()
                .map(|s| run_trial(s, &per_trial))
                .collect::<Result<_>>()?
        };
        Ok(RatioSummary {
            ratio,
            mean: TrialStats::mean(&reports),
            max: TrialStats::max(&reports),
            failures: reports.iter().filter(|r| !r.succeeded).count(),
            reports,
        })
    };
    for &r in ratios {
        SimulationSpec {
            outlier_ratio: r,
            ..*template
        }
        .validate()?;
    }
    if params.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.threads)
            .build()
            .map_err(|e| GrorError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| ratios.iter().map(|&r| run_ratio(r)).collect())
    } else {
        ratios.iter().map(|&r| run_ratio(r)).collect()
    }
}

pub fn write_csv<W: Write>(rows: &[TrialRow], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn to_json(rows: &[TrialRow]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(rows)
}
