//! JSON and plain-text outputs of `gror register`.

use std::fmt::Write as _;

use gror_core::{CorrespondenceSet, GrorParams, RegistrationResult, RigidTransform, StageTimings};
use serde::{Deserialize, Serialize};

pub const TOOL_NAME: &str = "gror";

/// Stage timings in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingsReport {
    pub degrees_s: f64,
    pub top_k_s: f64,
    pub sweep_s: f64,
    pub refit_s: f64,
    pub total_s: f64,
}

impl From<&StageTimings> for TimingsReport {
    fn from(t: &StageTimings) -> Self {
        Self {
            degrees_s: t.degrees.as_secs_f64(),
            top_k_s: t.top_k.as_secs_f64(),
            sweep_s: t.sweep.as_secs_f64(),
            refit_s: t.refit.as_secs_f64(),
            total_s: t.total.as_secs_f64(),
        }
    }
}

/// The report written by `gror register --out`. Field order is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformReport {
    pub tool: String,
    pub version: String,
    /// Row-major homogeneous transform mapping source points onto targets.
    pub matrix: [[f64; 4]; 4],
    pub consensus_ids: Vec<usize>,
    pub consensus_size: usize,
    /// `‖p − (R q + t)‖` for each consensus id, in the same order.
    pub residuals: Vec<f64>,
    pub delta: f64,
    pub k: usize,
    pub correspondences: usize,
    pub candidates: usize,
    pub best_edge: [usize; 2],
    pub best_tight_degree: usize,
    pub edges_total: usize,
    pub edges_evaluated_loose: usize,
    pub edges_evaluated_tight: usize,
    pub timings: TimingsReport,
}

impl TransformReport {
    /// `set` must be the full input set, so that ids are positions.
    pub fn new(
        set: &CorrespondenceSet,
        params: &GrorParams,
        result: &RegistrationResult,
        timings: bool,
    ) -> Self {
        let tf = &result.transform;
        let residuals = result
            .consensus
            .iter()
            .map(|&id| {
                let c = set.get(id);
                (c.p - tf.apply(&c.q)).norm()
            })
            .collect();
        Self {
            tool: TOOL_NAME.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            matrix: tf.homogeneous_rows(),
            consensus_ids: result.consensus.clone(),
            consensus_size: result.consensus.len(),
            residuals,
            delta: params.delta,
            k: params.k,
            correspondences: set.len(),
            candidates: result.candidate_count,
            best_edge: [result.best_edge.0, result.best_edge.1],
            best_tight_degree: result.best_tight,
            edges_total: result.edges_total,
            edges_evaluated_loose: result.edges_evaluated_loose,
            edges_evaluated_tight: result.edges_evaluated_tight,
            timings: if timings {
                TimingsReport::from(&result.timings)
            } else {
                TimingsReport::default()
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Four lines of four space-separated values.
pub fn format_matrix(tf: &RigidTransform) -> String {
    let mut out = String::new();
    for row in tf.homogeneous_rows() {
        let _ = writeln!(
            out,
            "{:.16e} {:.16e} {:.16e} {:.16e}",
            row[0], row[1], row[2], row[3]
        );
    }
    out
}
