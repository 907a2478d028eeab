//! Rigid point-cloud registration from putative 3D correspondences.
//!
//! The pipeline ranks correspondences by their degree in a length-consistency
//! graph, keeps the top `K`, and then scores every consistent pair of them as
//! an anchor edge. An edge fixes the transform up to one rotation about its
//! own axis; that angle is found by interval stabbing. The best edge's
//! transform is rechecked against every correspondence and refit by least
//! squares.
//!
//! ```
//! use gror_core::{register, CorrespondenceSet, GrorParams, Vec3};
//!
//! let pts = [
//!     Vec3::new(0.0, 0.0, 0.0),
//!     Vec3::new(1.0, 0.0, 0.0),
//!     Vec3::new(0.0, 1.0, 0.0),
//!     Vec3::new(0.0, 0.0, 1.0),
//! ];
//! let shift = Vec3::new(0.5, -0.25, 2.0);
//! let set = CorrespondenceSet::new(pts.iter().map(|q| (q + shift, *q)), 0.01).unwrap();
//! let result = register(&set, &GrorParams::new(0.01)).unwrap();
//! assert!((result.transform.translation - shift).norm() < 1e-9);
//! assert_eq!(result.consensus, vec![0, 1, 2, 3]);
//! ```

pub mod align;
pub mod bench;
pub mod error;
pub mod geom;
pub mod graph;
pub mod registration;
pub mod rotsearch;

pub use align::{align_edge_pair, loose_degree, EdgeAlignment, ResidualNode};
pub use error::{GrorError, Result};
pub use geom::{
    axis_angle_rotation, procrustes_fit, rodrigues_align, rotation_error, translation_error,
    RigidTransform, Rotation, Vec3,
};
pub use graph::{
    candidate_edges, node_degrees, select_top_k, Correspondence, CorrespondenceSet, DegreeVector,
};
pub use registration::{register, GrorParams, RegistrationResult, StageTimings, DEFAULT_K};
pub use rotsearch::{angle_interval, interval_stabbing, AngleInterval, StabbingResult};
