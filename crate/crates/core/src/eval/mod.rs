//! Scoring the online pipeline: clustering agreement with the offline
//! oracle, prediction accuracy, and the decomposed Hellinger regret.

mod accuracy;
mod agreement;
mod hellinger;
mod oracle;
mod regret;
mod state_map;

pub use accuracy::{accuracy, Accuracy};
pub use agreement::{clustering_agreement, AgreementScores};
pub use hellinger::{hellinger_split, HellingerSplit};
pub use oracle::OfflineOracle;
pub use regret::{quartile_means, regret_curve, RegretAccumulator, RegretRecord};
pub use state_map::{build_state_map, StateMap};
