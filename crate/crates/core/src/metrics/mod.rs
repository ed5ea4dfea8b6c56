//! The ten evaluation metrics, as pure functions over recommendation lists.
//!
//! Per-user metrics return `None` when undefined for that user (for example
//! no matched genres); such users are left out of averages rather than
//! counted as zero. None of the metrics depend on within-list order.

mod accuracy;
mod alignment;
mod fairness;
pub mod groups;
mod sensitivity;

pub use accuracy::{precision_at_k, recall_at_k};
pub use alignment::{gpa, pas};
pub use fairness::{demographic_parity, equal_opportunity, ilf, true_positive_rate};
pub use groups::{AgeGroups, Attribute, GroupAssignment, MIN_GROUP_SIZE};
pub use sensitivity::{group_overlaps, jaccard_k, overlap_fraction, snsr, snsv};
