use crate::error::{Error, Result};
use crate::geo::haversine_distance;

use super::{GpsFix, Trip};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    Polyline,
    Straight,
}

impl std::str::FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polyline" => Ok(DistanceMode::Polyline),
            "straight" => Ok(DistanceMode::Straight),
            other => Err(Error::Config(format!("unknown distance mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentParams {
    /// Inter-fix gap (s) treated as loss of fixation.
    pub fix_gap: f64,
    /// km/h
    pub stop_speed: f64,
    /// Minimum length (s) of a slow run that ends a trip.
    pub stop_duration: f64,
    /// Trips closer than this (s) are joined.
    pub merge_gap: f64,
    pub distance: DistanceMode,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            fix_gap: 300.0,
            stop_speed: 0.1,
            stop_duration: 600.0,
            merge_gap: 10.0,
            distance: DistanceMode::Polyline,
        }
    }
}

fn speed_kmh(a: &GpsFix, b: &GpsFix) -> Option<f64> {
    let dt = b.t - a.t;
    (dt > 0.0).then(|| haversine_distance(a.pos, b.pos) / dt * 3.6)
}

/// A fix is slow when its reported speed is below the threshold, or, with no
/// reported speed, when the displacement rate from the previous fix is.
fn slow_flags(fixes: &[GpsFix], threshold: f64) -> Vec<bool> {
    (0..fixes.len())
        .map(|i| {
            if let Some(v) = fixes[i].speed {
                return v < threshold;
            }
            let rate = if i > 0 {
                speed_kmh(&fixes[i - 1], &fixes[i])
            } else {
                fixes.get(1).and_then(|next| speed_kmh(&fixes[0], next))
            };
            rate.is_some_and(|v| v < threshold)
        })
        .collect()
}

fn make_trip(fixes: &[GpsFix], mode: DistanceMode) -> Option<Trip> {
    let (first, last) = (fixes.first()?, fixes.last()?);
    if last.t <= first.t {
        return None;
    }
    let distance = match mode {
        DistanceMode::Polyline => fixes.windows(2).map(|w| haversine_distance(w[0].pos, w[1].pos)).sum(),
        DistanceMode::Straight => haversine_distance(first.pos, last.pos),
    };
    Some(Trip {
        user_id: first.user_id.clone(),
        t_start: first.t,
        t_end: last.t,
        source: first.pos,
        dest: last.pos,
        distance,
        duration: last.t - first.t,
    })
}

/// Splits one user's fixes into trips. A trip ends at a fixation gap longer
/// than `fix_gap`, or at the first fix of a slow run lasting at least
/// `stop_duration`; the next trip then starts at the run's last fix.
pub fn extract_trips(fixes: &[GpsFix], params: &SegmentParams) -> Result<Vec<Trip>> {
    if let Some(w) = fixes.windows(2).find(|w| w[1].t < w[0].t) {
        return Err(Error::TimeWentBackwards { t: w[1].t, last: w[0].t });
    }
    let mut trips = Vec::new();
    let mut run_start = 0;
    for end in 1..=fixes.len() {
        if end < fixes.len() && fixes[end].t - fixes[end - 1].t <= params.fix_gap {
            continue;
        }
        split_on_stops(&fixes[run_start..end], params, &mut trips);
        run_start = end;
    }
    Ok(merge_close_trips(trips, params))
}

fn split_on_stops(run: &[GpsFix], params: &SegmentParams, out: &mut Vec<Trip>) {
    let slow = slow_flags(run, params.stop_speed);
    let mut seg_start = 0;
    let mut i = 0;
    while i < run.len() {
        if !slow[i] {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < run.len() && slow[j + 1] {
            j += 1;
        }
        if run[j].t - run[i].t >= params.stop_duration {
            out.extend(make_trip(&run[seg_start..=i], params.distance));
            seg_start = j;
        }
        i = j + 1;
    }
    out.extend(make_trip(&run[seg_start..], params.distance));
}

/// Joins consecutive trips separated by less than `merge_gap` seconds.
pub fn merge_close_trips(trips: Vec<Trip>, params: &SegmentParams) -> Vec<Trip> {
    let mut out: Vec<Trip> = Vec::with_capacity(trips.len());
    for trip in trips {
        match out.last_mut() {
            Some(prev) if trip.t_start - prev.t_end < params.merge_gap => {
                prev.distance = match params.distance {
                    DistanceMode::Polyline => {
                        prev.distance + haversine_distance(prev.dest, trip.source) + trip.distance
                    }
                    DistanceMode::Straight => haversine_distance(prev.source, trip.dest),
                };
                prev.dest = trip.dest;
                prev.t_end = trip.t_end;
                prev.duration = prev.t_end - prev.t_start;
            }
            _ => out.push(trip),
        }
    }
    out
}
