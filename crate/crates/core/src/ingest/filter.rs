use std::collections::BTreeMap;

use super::Trip;

const DAY: f64 = 86_400.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    /// meters
    pub min_distance: f64,
    /// seconds
    pub min_duration: f64,
    pub min_span_days: f64,
    pub min_trips_per_day: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            min_distance: 100.0,
            min_duration: 240.0,
            min_span_days: 30.0,
            min_trips_per_day: 1.0,
        }
    }
}

/// Drops short trips, then users whose remaining history is too short or
/// too sparse.
pub fn filter_corpus(corpus: BTreeMap<String, Vec<Trip>>, params: &FilterParams) -> BTreeMap<String, Vec<Trip>> {
    corpus
        .into_iter()
        .filter_map(|(user, trips)| {
            let trips: Vec<Trip> = trips
                .into_iter()
                .filter(|t| t.distance >= params.min_distance && t.duration >= params.min_duration)
                .collect();
            let (first, last) = (trips.first()?, trips.last()?);
            let span_days = (last.t_end - first.t_start) / DAY;
            if span_days < params.min_span_days || (trips.len() as f64) / span_days < params.min_trips_per_day {
                return None;
            }
            Some((user, trips))
        })
        .collect()
}
