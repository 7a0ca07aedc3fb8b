//! Point-cloud to triangle-mesh reconstruction built around alpha-shape
//! filtering of a 3D Delaunay complex.
//!
//! The pipeline is:
//!
//! 1. [`delaunay::delaunay_complex`] tetrahedralizes the input points.
//! 2. [`alphashape::triangulate`] keeps tetrahedra whose circumradius is at most
//!    a threshold `tau` and extracts the boundary surface.
//! 3. [`policy`] learns which `tau` to use for a given cloud with an
//!    epsilon-greedy contextual bandit trained on an F1 reward.
//! 4. [`refine::build_baseline`] produces a smoothed, re-triangulated baseline
//!    and [`refine::refine_mesh`] moves vertices by gradient descent on the
//!    loss suite in [`loss`].
//! 5. [`metrics`] scores reconstructions under several published evaluation
//!    protocols.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod alphashape;
pub mod delaunay;
pub mod error;
pub mod loss;
pub mod mesh;
pub mod meshio;
pub mod metrics;
pub mod policy;
pub mod refine;
pub mod sampling;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
pub use mesh::{Mesh, Point3, PointCloud, TriangleFace, Vec3};
