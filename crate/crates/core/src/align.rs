//! Edge-pair alignment and the loose (projection) reliability score.
//!
//! Aligning the source edge `q_i → q_j` onto the target edge `p_i → p_j`
//! fixes five degrees of freedom. What remains is a rotation about the
//! target edge line, handled in [`crate::rotsearch`].

use crate::error::Result;
use crate::geom::{rodrigues_align, RigidTransform, Vec3};
use crate::graph::CorrespondenceSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeAlignment {
    /// Endpoint indices into the candidate set.
    pub i: usize,
    pub j: usize,
    pub transform: RigidTransform,
    /// Unit direction of `p_j − p_i`.
    pub axis_dir: Vec3,
    /// Midpoint of `p_i` and `p_j`.
    pub axis_origin: Vec3,
}

/// A correspondence other than the edge endpoints, with its source point
/// moved by the edge alignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualNode {
    pub index: usize,
    pub p: Vec3,
    pub q: Vec3,
}

/// Rotation mapping the source edge direction onto the target one, with the
/// translation averaged over both endpoints.
pub fn align_edge_pair(set: &CorrespondenceSet, i: usize, j: usize) -> Result<EdgeAlignment> {
    let (ci, cj) = (set.get(i), set.get(j));
    let edge_p = cj.p - ci.p;
    let rotation = rodrigues_align(&edge_p, &(cj.q - ci.q))?;
    let translation = ((ci.p - rotation.apply(&ci.q)) + (cj.p - rotation.apply(&cj.q))) / 2.0;
    Ok(EdgeAlignment {
        i,
        j,
        transform: RigidTransform::new(rotation, translation),
        axis_dir: edge_p.normalize(),
        axis_origin: (ci.p + cj.p) / 2.0,
    })
}

/// All correspondences except the edge endpoints, in set order, with
/// `q' = R q + t`.
pub fn transform_residual_nodes(set: &CorrespondenceSet, a: &EdgeAlignment) -> Vec<ResidualNode> {
    set.items()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != a.i && k != a.j)
        .map(|(k, c)| ResidualNode {
            index: k,
            p: c.p,
            q: a.transform.apply(&c.q),
        })
        .collect()
}

/// Loose-constraint indicator for every residual node (set order, endpoints
/// skipped): the scalar projections of `p_k − p_i` onto the target edge and
/// of `q_k − q_i` onto the source edge agree in magnitude to within `delta`.
pub fn loose_indicator(set: &CorrespondenceSet, a: &EdgeAlignment) -> Vec<bool> {
    let (ci, cj) = (set.get(a.i), set.get(a.j));
    let dir_p = a.axis_dir;
    let dir_q = (cj.q - ci.q).normalize();
    let delta = set.delta();
    set.items()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != a.i && k != a.j)
        .map(|(_, c)| {
            let proj_p = (c.p - ci.p).dot(&dir_p).abs();
            let proj_q = (c.q - ci.q).dot(&dir_q).abs();
            (proj_p - proj_q).abs() - delta < 0.0
        })
        .collect()
}

/// Number of residual nodes passing the loose constraint.
pub fn loose_degree(set: &CorrespondenceSet, a: &EdgeAlignment) -> usize {
    loose_indicator(set, a).into_iter().filter(|&m| m).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{axis_angle_rotation, rotation_error, Rotation};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rigid_set(
        rng: &mut ChaCha8Rng,
        n: usize,
        tf: &RigidTransform,
        delta: f64,
    ) -> CorrespondenceSet {
        let pairs: Vec<_> = (0..n)
            .map(|_| {
                let q = Vec3::new(rng.random(), rng.random(), rng.random());
                (tf.apply(&q), q)
            })
            .collect();
        CorrespondenceSet::new(pairs, delta).unwrap()
    }

    fn some_transform() -> RigidTransform {
        RigidTransform::new(
            axis_angle_rotation(&Vec3::new(0.0, 0.6, 0.8), 2.1).unwrap(),
            Vec3::new(0.3, -1.0, 0.5),
        )
    }

    #[test]
    fn exact_copy_aligns_both_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = rigid_set(&mut rng, 5, &some_transform(), 0.01);
        let a = align_edge_pair(&set, 1, 3).unwrap();
        for k in [1, 3] {
            let c = set.get(k);
            assert_relative_eq!(a.transform.apply(&c.q), c.p, epsilon = 1e-9);
        }
        assert_relative_eq!(a.axis_dir.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_points_give_identity() {
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 1.0),
            Vec3::x(),
        ];
        let set =
            CorrespondenceSet::new(pts.iter().map(|p| (*p, *p)).collect::<Vec<_>>(), 0.1).unwrap();
        let a = align_edge_pair(&set, 0, 1).unwrap();
        assert!(rotation_error(&Rotation::identity(), &a.transform.rotation) < 1e-9);
        assert!(a.transform.translation.norm() < 1e-12);
        let nodes = transform_residual_nodes(&set, &a);
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].index, 2);
        assert_relative_eq!(nodes[0].q, Vec3::x(), epsilon = 1e-12);
    }

    #[test]
    fn mismatched_lengths_split_the_residual() {
        // Source edge is longer by delta/2: residuals are opposite along the edge.
        let delta = 0.02;
        let set = CorrespondenceSet::new(
            vec![
                (Vec3::new(0.0, 0.0, 0.0), Vec3::new(5.0, 5.0, 5.0)),
                (
                    Vec3::new(1.0, 0.0, 0.0),
                    Vec3::new(5.0, 5.0 + 1.0 + delta / 2.0, 5.0),
                ),
            ],
            delta,
        )
        .unwrap();
        let a = align_edge_pair(&set, 0, 1).unwrap();
        let r0 = set.get(0).p - a.transform.apply(&set.get(0).q);
        let r1 = set.get(1).p - a.transform.apply(&set.get(1).q);
        assert_relative_eq!(r0 + r1, Vec3::zeros(), epsilon = 1e-12);
        assert_relative_eq!(r0.norm(), delta / 4.0, epsilon = 1e-12);
        assert_relative_eq!(r0.normalize().dot(&a.axis_dir).abs(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_edge_is_rejected() {
        let p = Vec3::new(1.0, 1.0, 1.0);
        let set = CorrespondenceSet::new(vec![(p, p), (p, p)], 0.1).unwrap();
        assert!(align_edge_pair(&set, 0, 1).is_err());
    }

    #[test]
    fn residual_nodes_lie_within_twice_the_axis_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let set = rigid_set(&mut rng, 12, &some_transform(), 0.01);
        let a = align_edge_pair(&set, 4, 9).unwrap();
        let nodes = transform_residual_nodes(&set, &a);
        assert_eq!(nodes.len(), 10);
        for n in &nodes {
            // q' is p rotated about the edge line: chord ≤ 2 × radius.
            let off = n.p - a.axis_origin;
            let radius = (off - a.axis_dir * off.dot(&a.axis_dir)).norm();
            assert!((n.p - n.q).norm() <= 2.0 * radius + 1e-9);
            assert!((n.p - n.q).norm() <= 2.0 * off.norm() + 1e-9);
        }
    }

    #[test]
    fn exact_inliers_have_full_loose_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = rigid_set(&mut rng, 20, &some_transform(), 1e-6);
        let a = align_edge_pair(&set, 0, 7).unwrap();
        assert_eq!(loose_degree(&set, &a), 18);
    }

    #[test]
    fn equal_length_outlier_with_different_projection_is_rejected() {
        // Third point keeps its distance to p_i but swings off the edge:
        // the length test admits it, the projection test does not.
        let v = |x, y, z| Vec3::new(x, y, z);
        let set = CorrespondenceSet::new(
            vec![
                (v(0.0, 0.0, 0.0), v(0.0, 0.0, 0.0)),
                (v(1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)),
                (v(0.5, 0.2, 0.0), v(0.2, 0.5, 0.0)),
                (v(0.3, 0.1, 0.4), v(0.3, 0.1, 0.4)),
            ],
            0.01,
        )
        .unwrap();
        assert!(crate::graph::edge_consistent(set.get(0), set.get(2), 0.01));
        let a = align_edge_pair(&set, 0, 1).unwrap();
        assert_eq!(loose_indicator(&set, &a), vec![false, true]);
    }

    #[test]
    fn reflected_point_passes_the_loose_test() {
        // Mirror of an inlier across the edge axis: same projection, wrong
        // position. The loose test cannot tell them apart.
        let v = |x, y, z| Vec3::new(x, y, z);
        let set = CorrespondenceSet::new(
            vec![
                (v(0.0, 0.0, 0.0), v(0.0, 0.0, 0.0)),
                (v(1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)),
                (v(0.4, 0.3, 0.2), v(0.4, -0.3, -0.2)),
            ],
            0.01,
        )
        .unwrap();
        let a = align_edge_pair(&set, 0, 1).unwrap();
        assert_eq!(loose_degree(&set, &a), 1);
    }

    proptest! {
        #[test]
        fn swapping_endpoints_gives_same_rotation(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<_> = (0..2)
                .map(|_| {
                    let q = Vec3::new(rng.random(), rng.random(), rng.random());
                    let p = Vec3::new(rng.random(), rng.random(), rng.random());
                    (p, q)
                })
                .collect();
            let set = CorrespondenceSet::new(pairs, 0.5).unwrap();
            let a = align_edge_pair(&set, 0, 1).unwrap();
            let b = align_edge_pair(&set, 1, 0).unwrap();
            let diff = a.transform.rotation.matrix() - b.transform.rotation.matrix();
            prop_assert!(diff.amax() < 1e-9);
        }

        #[test]
        fn loose_degree_ignores_motion_of_the_source_side(seed in any::<u64>(), angle in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<_> = (0..30)
                .map(|i| {
                    let q = Vec3::new(rng.random(), rng.random(), rng.random());
                    let p = if i % 2 == 0 { q } else { Vec3::new(rng.random(), rng.random(), rng.random()) };
                    (p, q)
                })
                .collect();
            let set = CorrespondenceSet::new(pairs, 0.02).unwrap();
            let r = axis_angle_rotation(&Vec3::new(0.6, 0.0, 0.8), angle).unwrap();
            let moved = CorrespondenceSet::new(
                set.items().iter().map(|c| (c.p, r.apply(&c.q) - Vec3::y())).collect::<Vec<_>>(),
                0.02,
            ).unwrap();
            let a = align_edge_pair(&set, 0, 2).unwrap();
            let b = align_edge_pair(&moved, 0, 2).unwrap();
            let d = loose_degree(&set, &a);
            prop_assert_eq!(d, loose_degree(&moved, &b));
            prop_assert!(d <= 28);
        }
    }
}
