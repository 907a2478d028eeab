//! Maximum-consensus search over candidate edges and the final refit.
//!
//! Every length-consistent edge of the top-K set is aligned and scored first
//! with the cheap loose constraint, then, unless it provably cannot beat the
//! best edge so far, with the tight rotation search. The winning edge gives
//! an initial transform that is rechecked against the full correspondence
//! set and refined by least squares.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::align::{align_edge_pair, loose_indicator, transform_residual_nodes, EdgeAlignment};
use crate::error::{GrorError, Result};
use crate::geom::{axis_angle_rotation, procrustes_fit, RigidTransform, Vec3};
use crate::graph::{
    candidate_edges, node_degrees, node_degrees_parallel, select_top_k, CorrespondenceSet,
};
use crate::rotsearch::{tight_degree, StabbingResult};

pub const DEFAULT_K: usize = 800;

/// Edges scored between two updates of the shared best score. Fixed so that
/// results and counters do not depend on the thread count.
const EDGE_BATCH: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrorParams {
    /// Size of the candidate set kept after node-degree ranking.
    pub k: usize,
    /// Noise bound used by every consistency test.
    pub delta: f64,
    /// Smallest consensus (edge endpoints included) worth reporting.
    pub min_consensus: usize,
    /// Skip the tight score when the loose score already rules an edge out.
    pub prune: bool,
    pub threads: usize,
}

impl GrorParams {
    pub fn new(delta: f64) -> Self {
        Self {
            k: DEFAULT_K,
            delta,
            min_consensus: 3,
            prune: true,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(GrorError::InvalidParameter(format!(
                "k must be at least 3, got {}",
                self.k
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(GrorError::InvalidParameter(format!(
                "delta must be positive and finite, got {}",
                self.delta
            )));
        }
        if self.min_consensus < 3 {
            return Err(GrorError::InvalidParameter(format!(
                "min_consensus must be at least 3, got {}",
                self.min_consensus
            )));
        }
        if self.threads == 0 {
            return Err(GrorError::InvalidParameter(
                "threads must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Scores of one candidate edge; `tight` is `None` when the edge was pruned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeScore {
    /// Endpoint indices into the candidate set.
    pub edge: (usize, usize),
    pub loose: usize,
    pub tight: Option<usize>,
}

/// Outcome of the edge sweep over the candidate set.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub transform: RigidTransform,
    /// Original ids of the winning edge's consensus, endpoints included,
    /// ascending.
    pub consensus: Vec<usize>,
    /// Original ids of the winning edge endpoints.
    pub best_edge: (usize, usize),
    pub best_tight: usize,
    pub theta_star: f64,
    pub edges_total: usize,
    pub edges_evaluated_loose: usize,
    pub edges_evaluated_tight: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub degrees: Duration,
    pub top_k: Duration,
    pub sweep: Duration,
    pub refit: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegistrationResult {
    pub transform: RigidTransform,
    /// Original ids `i` with `‖pᵢ − (R qᵢ + t)‖ < δ` under `transform`,
    /// ascending.
    pub consensus: Vec<usize>,
    pub initial_transform: RigidTransform,
    /// Consensus reported by the edge sweep, before the global recheck.
    pub sweep_consensus: Vec<usize>,
    pub best_edge: (usize, usize),
    pub best_tight: usize,
    pub candidate_count: usize,
    pub edges_total: usize,
    pub edges_evaluated_loose: usize,
    pub edges_evaluated_tight: usize,
    pub timings: StageTimings,
}

impl RegistrationResult {
    pub fn elapsed(&self) -> Duration {
        self.timings.total
    }
}

struct Winner {
    tight: usize,
    alignment: EdgeAlignment,
    stab: StabbingResult,
}

fn score_edge(
    hr: &CorrespondenceSet,
    edge: (usize, usize),
    prune_below: Option<usize>,
) -> Result<(EdgeScore, Option<Winner>)> {
    let alignment = align_edge_pair(hr, edge.0, edge.1)?;
    let mask = loose_indicator(hr, &alignment);
    let loose = mask.iter().filter(|&&m| m).count();
    if prune_below.is_some_and(|floor| loose < floor) {
        return Ok((
            EdgeScore {
                edge,
                loose,
                tight: None,
            },
            None,
        ));
    }
    // The tight search only considers nodes that pass the loose test, which
    // makes tight ≤ loose hold exactly and keeps pruning sound under noise.
    let nodes: Vec<_> = transform_residual_nodes(hr, &alignment)
        .into_iter()
        .zip(&mask)
        .filter_map(|(n, &m)| m.then_some(n))
        .collect();
    let (tight, stab) = tight_degree(&alignment, &nodes, hr.delta());
    Ok((
        EdgeScore {
            edge,
            loose,
            tight: Some(tight),
        },
        Some(Winner {
            tight,
            alignment,
            stab,
        }),
    ))
}

fn sweep(
    hr: &CorrespondenceSet,
    params: &GrorParams,
    mut trace: Option<&mut Vec<EdgeScore>>,
) -> Result<SweepOutcome> {
    params.validate()?;
    if hr.len() < 3 {
        return Err(GrorError::DegenerateConfiguration(format!(
            "{} candidate correspondences, at least 3 required",
            hr.len()
        )));
    }
    let edges = candidate_edges(hr);

    // Best tight score so far; an edge must beat it strictly to take over.
    // Starting at min_consensus − 3 means a winner explains at least
    // min_consensus correspondences once its two endpoints are counted.
    let mut best_tight = params.min_consensus - 3;
    let mut best: Option<Winner> = None;
    let mut evaluated_tight = 0usize;

    for batch in edges.chunks(EDGE_BATCH) {
        // An edge whose loose score is below the current best tight score
        // cannot win: its own tight score is bounded by its loose score.
        let prune_below = params.prune.then_some(best_tight);
        let scored: Vec<Result<(EdgeScore, Option<Winner>)>> = if params.threads > 1 {
            batch
                .par_iter()
                .map(|&e| score_edge(hr, e, prune_below))
                .collect()
        } else {
            batch
                .iter()
                .map(|&e| score_edge(hr, e, prune_below))
                .collect()
        };
        for item in scored {
            let (score, winner) = item?;
            if let Some(t) = trace.as_deref_mut() {
                t.push(score);
            }
            if let Some(w) = winner {
                evaluated_tight += 1;
                if w.tight > best_tight {
                    best_tight = w.tight;
                    best = Some(w);
                }
            }
        }
    }

    let w = best.ok_or(GrorError::NoConsensus)?;
    let (i, j) = (w.alignment.i, w.alignment.j);
    let rotation = axis_angle_rotation(&w.alignment.axis_dir, w.stab.theta_star)?
        * w.alignment.transform.rotation;

    let mut members: Vec<usize> = w.stab.stabbed.clone();
    members.push(i);
    members.push(j);
    let sum = members.iter().fold(Vec3::zeros(), |acc, &k| {
        let c = hr.get(k);
        acc + (c.p - rotation.apply(&c.q))
    });
    let translation = sum / members.len() as f64;

    let mut consensus: Vec<usize> = members.iter().map(|&k| hr.get(k).id).collect();
    consensus.sort_unstable();

    Ok(SweepOutcome {
        transform: RigidTransform::new(rotation, translation),
        consensus,
        best_edge: (hr.get(i).id, hr.get(j).id),
        best_tight: w.tight,
        theta_star: w.stab.theta_star,
        edges_total: edges.len(),
        edges_evaluated_loose: edges.len(),
        edges_evaluated_tight: evaluated_tight,
    })
}

/// Sweeps all candidate edges of `hr` (the top-K set) in lexicographic order
/// and returns the best edge's transform and consensus.
pub fn run_algorithm1(hr: &CorrespondenceSet, params: &GrorParams) -> Result<SweepOutcome> {
    sweep(hr, params, None)
}

/// As [`run_algorithm1`], also recording the score of every edge in sweep
/// order.
pub fn run_algorithm1_traced(
    hr: &CorrespondenceSet,
    params: &GrorParams,
    trace: &mut Vec<EdgeScore>,
) -> Result<SweepOutcome> {
    sweep(hr, params, Some(trace))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refit {
    pub transform: RigidTransform,
    /// Ids within `delta` of the refit transform, ascending.
    pub consensus: Vec<usize>,
    /// Ids within `delta` of the initial transform (the refit's input).
    pub rechecked: Vec<usize>,
}

/// Positions (not ids) of correspondences within `delta` of `tf`.
fn within(h: &CorrespondenceSet, tf: &RigidTransform, delta: f64) -> Vec<usize> {
    h.items()
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.p - tf.apply(&c.q)).norm() < delta)
        .map(|(n, _)| n)
        .collect()
}

fn ids_of(h: &CorrespondenceSet, positions: &[usize]) -> Vec<usize> {
    let mut ids: Vec<usize> = positions.iter().map(|&n| h.get(n).id).collect();
    ids.sort_unstable();
    ids
}

/// Rechecks every correspondence against `initial`, refits on the survivors
/// and rethresholds once with the refit transform.
pub fn global_recheck_refit(
    h: &CorrespondenceSet,
    initial: &RigidTransform,
    delta: f64,
) -> Result<Refit> {
    let rechecked = within(h, initial, delta);
    if rechecked.len() < 3 {
        return Err(GrorError::DegenerateConfiguration(format!(
            "{} correspondences within delta of the initial transform",
            rechecked.len()
        )));
    }
    let pairs: Vec<_> = rechecked
        .iter()
        .map(|&n| (h.get(n).p, h.get(n).q))
        .collect();
    let transform = procrustes_fit(&pairs)?;
    let consensus = within(h, &transform, delta);
    if consensus.len() < 3 {
        return Err(GrorError::DegenerateConfiguration(format!(
            "{} correspondences within delta of the refit transform",
            consensus.len()
        )));
    }
    Ok(Refit {
        transform,
        consensus: ids_of(h, &consensus),
        rechecked: ids_of(h, &rechecked),
    })
}

fn register_inner(h: &CorrespondenceSet, params: &GrorParams) -> Result<RegistrationResult> {
    let start = Instant::now();
    let degrees = if params.threads > 1 {
        node_degrees_parallel(h)?
    } else {
        node_degrees(h)?
    };
    let t_degrees = start.elapsed();

    let hr = select_top_k(h, &degrees, params.k);
    let t_top_k = start.elapsed();

    let sweep = run_algorithm1(&hr, params)?;
    let t_sweep = start.elapsed();

    let refit = global_recheck_refit(h, &sweep.transform, params.delta)?;
    let t_total = start.elapsed();

    Ok(RegistrationResult {
        transform: refit.transform,
        consensus: refit.consensus,
        initial_transform: sweep.transform,
        sweep_consensus: sweep.consensus,
        best_edge: sweep.best_edge,
        best_tight: sweep.best_tight,
        candidate_count: hr.len(),
        edges_total: sweep.edges_total,
        edges_evaluated_loose: sweep.edges_evaluated_loose,
        edges_evaluated_tight: sweep.edges_evaluated_tight,
        timings: StageTimings {
            degrees: t_degrees,
            top_k: t_top_k - t_degrees,
            sweep: t_sweep - t_top_k,
            refit: t_total - t_sweep,
            total: t_total,
        },
    })
}

/// Full pipeline: node degrees, top-K selection, edge sweep, global recheck
/// and refit. `h.delta()` is replaced by `params.delta`.
pub fn register(h: &CorrespondenceSet, params: &GrorParams) -> Result<RegistrationResult> {
    params.validate()?;
    if h.len() < 3 {
        return Err(GrorError::DegenerateConfiguration(format!(
            "{} correspondences, at least 3 required",
            h.len()
        )));
    }
    let owned;
    let h = if h.delta() == params.delta {
        h
    } else {
        owned = h.with_delta(params.delta)?;
        &owned
    };
    if params.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.threads)
            .build()
            .map_err(|e| GrorError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| register_inner(h, params))
    } else {
        register_inner(h, params)
    }
}
