use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

use super::{GpsFix, Trip};

const FIX_HEADER: [&str; 5] = ["user_id", "t", "lat", "lon", "speed_kmh"];
const TRIP_HEADER: [&str; 9] = [
    "user_id", "t_start", "t_end", "src_lat", "src_lon", "dst_lat", "dst_lon", "dist_m", "dur_s",
];

/// Rows read and rows skipped as malformed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadReport {
    pub rows: usize,
    pub skipped: usize,
}

#[derive(Deserialize)]
struct FixRow {
    user_id: String,
    t: f64,
    lat: f64,
    lon: f64,
    speed_kmh: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct TripRow {
    user_id: String,
    t_start: f64,
    t_end: f64,
    src_lat: f64,
    src_lon: f64,
    dst_lat: f64,
    dst_lon: f64,
    dist_m: f64,
    dur_s: f64,
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "bad header `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

fn read_rows<R: Read, T: serde::de::DeserializeOwned, U>(
    input: R,
    header: &[&str],
    convert: impl Fn(T) -> Option<U>,
) -> Result<(Vec<U>, ReadReport)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(input);
    check_header(&mut reader, header)?;
    let mut out = Vec::new();
    let mut report = ReadReport::default();
    for row in reader.deserialize::<T>() {
        report.rows += 1;
        match row.ok().and_then(&convert) {
            Some(v) => out.push(v),
            None => report.skipped += 1,
        }
    }
    Ok((out, report))
}

pub fn read_fixes<R: Read>(input: R) -> Result<(Vec<GpsFix>, ReadReport)> {
    read_rows(input, &FIX_HEADER, |r: FixRow| {
        if !r.t.is_finite() || r.speed_kmh.is_some_and(|v| !v.is_finite() || v < 0.0) {
            return None;
        }
        Some(GpsFix {
            user_id: r.user_id,
            t: r.t,
            pos: GeoPoint::new(r.lat, r.lon).ok()?,
            speed: r.speed_kmh,
        })
    })
}

pub fn read_trips<R: Read>(input: R) -> Result<(Vec<Trip>, ReadReport)> {
    read_rows(input, &TRIP_HEADER, |r: TripRow| {
        if !(r.t_start.is_finite() && r.t_end > r.t_start && r.dist_m >= 0.0) {
            return None;
        }
        Some(Trip {
            user_id: r.user_id,
            t_start: r.t_start,
            t_end: r.t_end,
            source: GeoPoint::new(r.src_lat, r.src_lon).ok()?,
            dest: GeoPoint::new(r.dst_lat, r.dst_lon).ok()?,
            distance: r.dist_m,
            duration: r.t_end - r.t_start,
        })
    })
}

pub fn write_trips<'a, W: Write>(out: W, trips: impl IntoIterator<Item = &'a Trip>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRIP_HEADER)?;
    for t in trips {
        w.serialize(TripRow {
            user_id: t.user_id.clone(),
            t_start: t.t_start,
            t_end: t.t_end,
            src_lat: t.source.lat,
            src_lon: t.source.lon,
            dst_lat: t.dest.lat,
            dst_lon: t.dest.lon,
            dist_m: t.distance,
            dur_s: t.duration,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Splits records per user, each sorted by `key` (stable, so ties keep
/// file order).
pub fn group_by_user<T>(
    items: Vec<T>,
    user: impl Fn(&T) -> &str,
    key: impl Fn(&T) -> f64,
) -> BTreeMap<String, Vec<T>> {
    let mut out: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for item in items {
        out.entry(user(&item).to_string()).or_default().push(item);
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| key(a).total_cmp(&key(b)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixes_with_bad_rows() {
        let text = "user_id,t,lat,lon,speed_kmh\n\
                    a,0,57.7,11.9,\n\
                    a,15,57.7,11.91,30.5\n\
                    a,oops,57.7,11.9,\n\
                    b,3,95.0,11.9,\n\
                    b,4,57.0\n";
        let (fixes, report) = read_fixes(text.as_bytes()).unwrap();
        assert_eq!(fixes.len(), 2);
        assert_eq!(fixes[0].speed, None);
        assert_eq!(fixes[1].speed, Some(30.5));
        assert_eq!(report, ReadReport { rows: 5, skipped: 3 });
    }

    #[test]
    fn bad_header_aborts() {
        assert!(read_fixes("user,t,lat,lon\n".as_bytes()).is_err());
        assert!(read_trips("".as_bytes()).is_err());
    }

    #[test]
    fn empty_with_header() {
        let (trips, report) = read_trips(format!("{}\n", TRIP_HEADER.join(",")).as_bytes()).unwrap();
        assert!(trips.is_empty());
        assert_eq!(report, ReadReport::default());
    }

    #[test]
    fn trip_roundtrip() {
        let t = Trip {
            user_id: "u1".into(),
            t_start: 1.5,
            t_end: 301.25,
            source: GeoPoint::new(57.123456789, 11.5).unwrap(),
            dest: GeoPoint::new(-33.9, 151.2).unwrap(),
            distance: 1234.5678,
            duration: 299.75,
        };
        let mut buf = Vec::new();
        write_trips(&mut buf, [&t]).unwrap();
        let (back, report) = read_trips(buf.as_slice()).unwrap();
        assert_eq!(report.skipped, 0);
        assert_eq!(back, vec![t]);
    }

    #[test]
    fn grouping_sorts_per_user() {
        let items = vec![("b", 2.0), ("a", 5.0), ("b", 1.0), ("a", 3.0)];
        let g = group_by_user(items, |x| x.0, |x| x.1);
        assert_eq!(g["a"], vec![("a", 3.0), ("a", 5.0)]);
        assert_eq!(g["b"], vec![("b", 1.0), ("b", 2.0)]);
    }
}
