//! Correspondence graph: pairwise length consistency, node degrees and
//! top-K selection.
//!
//! The adjacency matrix is never stored. Two correspondences are adjacent
//! when the distance between their target points and the distance between
//! their source points agree to within `delta`; a node's degree is the
//! number of adjacent partners.

use rayon::prelude::*;

use crate::error::{GrorError, Result};
use crate::geom::{Vec3, EPS_LEN};

/// A putative match between a target point `p` and a source point `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    /// Index into the original, full correspondence set.
    pub id: usize,
    pub p: Vec3,
    pub q: Vec3,
}

/// An ordered list of correspondences sharing one noise bound.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceSet {
    items: Vec<Correspondence>,
    delta: f64,
}

impl CorrespondenceSet {
    /// Builds a set from `(p, q)` pairs, assigning ids `0..N` in order.
    pub fn new(pairs: impl IntoIterator<Item = (Vec3, Vec3)>, delta: f64) -> Result<Self> {
        let items: Vec<_> = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (p, q))| Correspondence { id, p, q })
            .collect();
        Self::from_items(items, delta)
    }

    /// Builds a set that keeps the given ids. Ids must be unique.
    pub fn from_items(items: Vec<Correspondence>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(GrorError::InvalidParameter(format!(
                "delta must be positive and finite, got {delta}"
            )));
        }
        for c in &items {
            if !(c.p.iter().chain(c.q.iter()).all(|v| v.is_finite())) {
                return Err(GrorError::NonFinite(c.id));
            }
        }
        let mut ids: Vec<usize> = items.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(GrorError::InvalidParameter(
                "duplicate correspondence id".into(),
            ));
        }
        Ok(Self { items, delta })
    }

    pub fn items(&self) -> &[Correspondence] {
        &self.items
    }

    pub fn get(&self, index: usize) -> &Correspondence {
        &self.items[index]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Same correspondences under a different noise bound.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::from_items(self.items.clone(), delta)
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|c| c.id)
    }
}

/// Per-node count of length-consistent partners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<usize>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[inline]
fn lengths_agree(a: &Correspondence, b: &Correspondence, delta: f64) -> bool {
    ((a.p - b.p).norm() - (a.q - b.q).norm()).abs() < delta
}

/// `| ‖p₁ − p₂‖ − ‖q₁ − q₂‖ | < delta`.
pub fn edge_consistent(c1: &Correspondence, c2: &Correspondence, delta: f64) -> bool {
    lengths_agree(c1, c2, delta)
}

/// Degree of every node, `O(N²)` time and `O(N)` memory.
pub fn node_degrees(set: &CorrespondenceSet) -> Result<DegreeVector> {
    let items = set.items();
    if items.len() < 2 {
        return Err(GrorError::EmptySet(items.len()));
    }
    let delta = set.delta();
    let mut degrees = vec![0usize; items.len()];
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            if lengths_agree(&items[i], &items[j], delta) {
                degrees[i] += 1;
                degrees[j] += 1;
            }
        }
    }
    Ok(DegreeVector(degrees))
}

/// Row-parallel variant of [`node_degrees`]; identical output.
pub fn node_degrees_parallel(set: &CorrespondenceSet) -> Result<DegreeVector> {
    let items = set.items();
    if items.len() < 2 {
        return Err(GrorError::EmptySet(items.len()));
    }
    let delta = set.delta();
    let degrees = (0..items.len())
        .into_par_iter()
        .map(|i| {
            let a = &items[i];
            items
                .iter()
                .enumerate()
                .filter(|&(j, b)| j != i && lengths_agree(a, b, delta))
                .count()
        })
        .collect();
    Ok(DegreeVector(degrees))
}

/// Keeps the `min(k, N)` highest-degree correspondences, ordered by degree
/// descending and then by id ascending.
pub fn select_top_k(
    set: &CorrespondenceSet,
    degrees: &DegreeVector,
    k: usize,
) -> CorrespondenceSet {
    assert_eq!(set.len(), degrees.len(), "degree vector does not match set");
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| {
        degrees.0[b]
            .cmp(&degrees.0[a])
            .then_with(|| set.get(a).id.cmp(&set.get(b).id))
    });
    order.truncate(k.min(set.len()));
    CorrespondenceSet {
        items: order.into_iter().map(|i| *set.get(i)).collect(),
        delta: set.delta(),
    }
}

/// Index pairs `(i, j)`, `i < j`, of length-consistent, non-degenerate
/// edges in lexicographic order.
pub fn candidate_edges(set: &CorrespondenceSet) -> Vec<(usize, usize)> {
    let items = set.items();
    let delta = set.delta();
    let mut edges = Vec::new();
    for i in 0..items.len() {
        for j in (i + 1)..items.len() {
            let (a, b) = (&items[i], &items[j]);
            let lp = (a.p - b.p).norm();
            let lq = (a.q - b.q).norm();
            if (lp - lq).abs() < delta && lp >= EPS_LEN && lq >= EPS_LEN {
                edges.push((i, j));
            }
        }
    }
    edges
}
