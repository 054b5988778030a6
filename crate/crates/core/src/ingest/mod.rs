//! Raw GPS logs to trips, corpus filtering, CSV formats and the synthetic
//! corpus generator.

mod filter;
mod io;
mod segment;
mod synth;

use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;

pub use filter::{filter_corpus, FilterParams};
pub use io::{group_by_user, read_fixes, read_trips, write_trips, ReadReport};
pub use segment::{extract_trips, merge_close_trips, DistanceMode, SegmentParams};
pub use synth::{
    generate_synthetic, parse_key_values, SynthCorpus, SynthSpec, TransitionKind, UserModel, UserTruth,
};

#[derive(Clone, Debug, PartialEq)]
pub struct GpsFix {
    pub user_id: String,
    pub t: f64,
    pub pos: GeoPoint,
    /// km/h, when the logger reports it
    pub speed: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub user_id: String,
    pub t_start: f64,
    pub t_end: f64,
    pub source: GeoPoint,
    pub dest: GeoPoint,
    /// meters
    pub distance: f64,
    /// seconds
    pub duration: f64,
}
