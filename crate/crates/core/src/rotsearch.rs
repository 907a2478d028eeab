//! One-parameter rotation search about an aligned edge.
//!
//! Each residual correspondence admits a closed arc of rotation angles about
//! the edge line for which `‖p − R(θ) q‖ < δ`. The best angle is the one
//! contained in the most arcs, found by sweeping sorted arc endpoints.

use std::f64::consts::TAU;

use nalgebra::Matrix3;

use crate::align::{EdgeAlignment, ResidualNode};
use crate::geom::{rodrigues_align, Vec3, EPS_LEN};

/// Feasible rotation angles for one correspondence.
///
/// `lo` and `hi` lie in `[0, 2π)`. A wrapping interval covers
/// `[lo, 2π) ∪ [0, hi]`; a full interval covers every angle and has
/// `lo = hi = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleInterval {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub wraps: bool,
    pub full: bool,
}

impl AngleInterval {
    pub fn full(k: usize) -> Self {
        Self {
            k,
            lo: 0.0,
            hi: 0.0,
            wraps: false,
            full: true,
        }
    }

    /// Interval `[center − half_width, center + half_width]` reduced into
    /// `[0, 2π)`.
    pub fn centered(k: usize, center: f64, half_width: f64) -> Self {
        if half_width >= TAU / 2.0 {
            return Self::full(k);
        }
        let lo = wrap_angle(center - half_width);
        let hi = wrap_angle(center + half_width);
        Self {
            k,
            lo,
            hi,
            wraps: lo > hi,
            full: false,
        }
    }

    /// `theta` must already be in `[0, 2π)`.
    pub fn contains(&self, theta: f64) -> bool {
        if self.full {
            true
        } else if self.wraps {
            theta >= self.lo || theta <= self.hi
        } else {
            self.lo <= theta && theta <= self.hi
        }
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly 2π.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabbingResult {
    pub theta_star: f64,
    pub count: usize,
    /// `k` of every interval containing `theta_star`, ascending.
    pub stabbed: Vec<usize>,
}

/// Frame with the edge axis along +z and its origin at the axis midpoint.
#[derive(Clone, Copy, Debug)]
pub struct AxisFrame {
    to_z: Matrix3<f64>,
    origin: Vec3,
}

impl AxisFrame {
    pub fn new(axis_dir: &Vec3, axis_origin: &Vec3) -> Self {
        let to_z =
            rodrigues_align(&Vec3::z(), axis_dir).expect("axis direction must be a unit vector");
        Self {
            to_z: *to_z.matrix(),
            origin: *axis_origin,
        }
    }

    pub fn for_alignment(a: &EdgeAlignment) -> Self {
        Self::new(&a.axis_dir, &a.axis_origin)
    }

    pub fn to_local(&self, v: &Vec3) -> Vec3 {
        self.to_z * (v - self.origin)
    }

    /// Angles `θ` with `‖p − R(θ) q‖ < delta`, `R(θ)` a rotation about the
    /// frame axis; `None` when no angle works.
    pub fn interval(&self, k: usize, p: &Vec3, q: &Vec3, delta: f64) -> Option<AngleInterval> {
        local_interval(k, &self.to_local(p), &self.to_local(q), delta)
    }
}

fn local_interval(k: usize, pz: &Vec3, qz: &Vec3, delta: f64) -> Option<AngleInterval> {
    let dz = (qz.z - pz.z).abs();
    if dz >= delta {
        return None;
    }
    let delta_xy = (delta * delta - dz * dz).sqrt();
    let rp = pz.x.hypot(pz.y);
    let rq = qz.x.hypot(qz.y);
    if (rp - rq).abs() > delta_xy {
        return None;
    }
    if rp + rq <= delta_xy || rq < EPS_LEN || rp < EPS_LEN {
        return Some(AngleInterval::full(k));
    }
    let omega = pz.y.atan2(pz.x) - qz.y.atan2(qz.x);
    let cos_gamma = ((rq * rq + rp * rp - delta_xy * delta_xy) / (2.0 * rq * rp)).clamp(-1.0, 1.0);
    Some(AngleInterval::centered(k, omega, cos_gamma.acos()))
}

/// Feasible rotation interval of `q` onto `p` about the line through
/// `axis_origin` with direction `axis_dir`.
pub fn angle_interval(
    k: usize,
    p: &Vec3,
    q: &Vec3,
    axis_dir: &Vec3,
    axis_origin: &Vec3,
    delta: f64,
) -> Option<AngleInterval> {
    AxisFrame::new(axis_dir, axis_origin).interval(k, p, q, delta)
}

#[derive(Clone, Copy)]
struct Event {
    angle: f64,
    // Starts sort before ends at the same angle: arcs are closed.
    is_end: bool,
}

/// Angle contained in the largest number of intervals.
///
/// Wrapping intervals are split at zero, so candidate regions are arcs of
/// the line `[0, 2π]`. Among maximal regions the one with the smallest start
/// wins and `theta_star` is its midpoint.
pub fn interval_stabbing(intervals: &[AngleInterval]) -> StabbingResult {
    let mut events = Vec::with_capacity(intervals.len() * 2 + 2);
    let mut push_arc = |lo: f64, hi: f64| {
        events.push(Event {
            angle: lo,
            is_end: false,
        });
        events.push(Event {
            angle: hi,
            is_end: true,
        });
    };
    for iv in intervals {
        if iv.full {
            push_arc(0.0, TAU);
        } else if iv.wraps {
            push_arc(iv.lo, TAU);
            push_arc(0.0, iv.hi);
        } else {
            push_arc(iv.lo, iv.hi);
        }
    }
    events.sort_by(|a, b| {
        a.angle
            .total_cmp(&b.angle)
            .then_with(|| a.is_end.cmp(&b.is_end))
    });

    let mut depth = 0usize;
    let mut best = 0usize;
    let mut best_arc = (0.0, 0.0);
    for (n, e) in events.iter().enumerate() {
        if e.is_end {
            depth -= 1;
            continue;
        }
        depth += 1;
        if depth > best {
            best = depth;
            // The next event closes this region (a further start would
            // have raised the depth again and replaced it).
            let end = events.get(n + 1).map_or(e.angle, |next| next.angle);
            best_arc = (e.angle, end);
        }
    }

    if best == 0 {
        return StabbingResult {
            theta_star: 0.0,
            count: 0,
            stabbed: Vec::new(),
        };
    }
    let theta_star = wrap_angle(best_arc.0 + (best_arc.1 - best_arc.0) / 2.0);
    let mut stabbed: Vec<usize> = intervals
        .iter()
        .filter(|iv| iv.contains(theta_star))
        .map(|iv| iv.k)
        .collect();
    stabbed.sort_unstable();
    stabbed.dedup();
    debug_assert_eq!(stabbed.len(), best);
    StabbingResult {
        theta_star,
        count: stabbed.len(),
        stabbed,
    }
}

/// Tight degree of an aligned edge over the given residual nodes.
///
/// `stabbed` holds the residual node indices (`ResidualNode::index`).
pub fn tight_degree(
    a: &EdgeAlignment,
    nodes: &[ResidualNode],
    delta: f64,
) -> (usize, StabbingResult) {
    let frame = AxisFrame::for_alignment(a);
    let intervals: Vec<AngleInterval> = nodes
        .iter()
        .filter_map(|n| frame.interval(n.index, &n.p, &n.q, delta))
        .collect();
    let result = interval_stabbing(&intervals);
    (result.count, result)
}

/// Brute-force optimum: the best angle always sits at some interval start.
#[cfg(test)]
pub(crate) fn brute_force_max(intervals: &[AngleInterval]) -> usize {
    let mut candidates = vec![0.0];
    candidates.extend(intervals.iter().map(|iv| iv.lo));
    candidates
        .iter()
        .map(|&t| intervals.iter().filter(|iv| iv.contains(t)).count())
        .max()
        .unwrap_or(0)
}
