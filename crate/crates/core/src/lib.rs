//! Fast pseudo-distances between probability measures living in different
//! tree metric spaces.
//!
//! A measure on a rooted weighted tree induces a one-dimensional *flow
//! profile*: each support contributes its mass at its path distance from
//! the root. Matching two profiles is a univariate optimal transport
//! problem with a closed-form monotone solution, which makes the resulting
//! flow alignment discrepancy cheap enough for root searches, tree-sliced
//! averaging, barycenters and clustering pipelines on top of it. The depth
//! alignment variant matches flows level by level instead, following both
//! tree hierarchies.
//!
//! When supports are raw points rather than tree nodes, the sampling module
//! builds tree metrics over them by recursive farthest-point clustering;
//! rooting each tree at its measure's support mean aligns roots across
//! measures by construction.

pub mod barycenter;
pub mod depth;
pub mod error;
pub mod flow;
pub mod io;
pub mod points;
pub mod sampling;
pub mod sliced;
pub mod tree;
pub mod univariate;
pub mod util;

pub use barycenter::{f_beta, flow_barycenter, kmeans, ClusteringResult, FlowBarycenter, KmeansOptions};
pub use depth::{aligned_depth_align, depth_align, two_depth_measure, AlignmentItem, TwoDepthMeasure};
pub use error::{Error, Result};
pub use flow::{
    aligned_flow_align, flow_align, gw_objective, RootCandidates, RootSearchResult, SearchStrategy,
};
pub use points::{Point, WeightedPointSet};
pub use sampling::{
    farthest_point_clustering, sample_aligned_root_trees, sample_tree_metric, Embedding, RootMode,
    SamplerConfig,
};
pub use sliced::{sliced_gw, tree_sliced_discrepancy, zero_pad, BaseDiscrepancy, SliceSpec};
pub use tree::{flow_profile, flow_profile_indexed, FlowProfile, Measure, NodeId, Tree};
pub use univariate::{monotone_merge, univariate_ot, LossKind, TransportPlan};
