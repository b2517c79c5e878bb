//! Modal clustering for mixture and kernel densities.
//!
//! Clusters are the basins of attraction of density modes: the regions whose
//! gradient-ascent paths climb to the same local maximum. This crate computes
//! that partition for normal mixtures and Gaussian-kernel density estimates
//! via the mean-shift recursion with convergence-guaranteed step matrices,
//! builds univariate cluster trees from level sets, and measures distances
//! between clusterings with the transfer distance (optimal-assignment mass
//! moved) and the Hausdorff distance over symmetric-difference mass, both in
//! population and empirical form. A seeded experiment harness probes how
//! data-based clusterings approach the population clustering as samples grow.

pub mod assignment;
pub mod cluster_tree;
pub mod density;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod mode_seek;
pub mod partition;

pub use density::{
    CriticalKind, CriticalPoint, Density, KernelModel, KernelProfile, Model, NormalMixture,
};
pub use error::{Error, Result};
pub use metrics::{
    dist_dp_family, dist_hausdorff, dist_transfer, dp_distance, empirical_overlap,
    hausdorff_distance, overlap_from_partitions, transfer_distance, DpOrder, OverlapTable,
    TransferReport,
};
pub use mode_seek::{
    ascend, classify_critical, find_modes, partition_carrier, shift_step, Ascent, ModeSet,
    ShiftConfig, StepRule,
};
pub use partition::{Carrier, CarrierKind, GridSpec, Partition};
