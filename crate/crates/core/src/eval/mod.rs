//! The same-different word discrimination task.

mod ap;
mod dtw;
mod report;
mod scoring;

pub use ap::{average_precision, PrCurve, PrPoint, ScoredPair, ScoredPairList};
pub use dtw::dtw_distance;
pub use report::{same_different_report, SameDifferentInput, SameDifferentReport};
pub use scoring::{score_pairs, score_pairs_cosine, score_pairs_dtw};
