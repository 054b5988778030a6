//! Great-circle geometry on latitude/longitude points.
//!
//! All distances are in meters on a sphere of radius [`EARTH_RADIUS_M`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IUGG mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A WGS-84 style position in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validated constructor: both fields finite, lat in [-90, 90], lon in [-180, 180].
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
            Ok(GeoPoint { lat, lon })
        } else {
            Err(Error::InvalidPoint { lat, lon })
        }
    }

    /// Moves the point by `east_m` / `north_m` meters in the local tangent
    /// plane. Longitude wraps into [-180, 180] and latitude is clamped.
    pub fn offset(self, east_m: f64, north_m: f64) -> GeoPoint {
        let lat_rad = self.lat.to_radians();
        let dlat = (north_m / EARTH_RADIUS_M).to_degrees();
        let cos_lat = lat_rad.cos().max(1e-12);
        let dlon = (east_m / (EARTH_RADIUS_M * cos_lat)).to_degrees();
        let lat = (self.lat + dlat).clamp(-90.0, 90.0);
        let mut lon = self.lon + dlon;
        while lon > 180.0 {
            lon -= 360.0;
        }
        while lon < -180.0 {
            lon += 360.0;
        }
        GeoPoint { lat, lon }
    }

    fn to_unit_vector(self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }
}

/// Haversine great-circle distance in meters.
///
/// The arcsine argument is clamped into [0, 1], so antipodal inputs cannot
/// produce NaN through floating-point overshoot.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    // canonical argument order makes the result bit-for-bit symmetric
    let (a, b) = if (a.lat, a.lon) <= (b.lat, b.lon) { (a, b) } else { (b, a) };
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = (lat1 - lat2) / 2.0;
    let dlon = (a.lon.to_radians() - b.lon.to_radians()) / 2.0;
    let h = dlat.sin().powi(2) + lat1.cos() * lat2.cos() * dlon.sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().clamp(0.0, 1.0).asin()
}

/// Weighted spherical mean of points (mean of unit vectors, renormalized).
///
/// Falls back to the heaviest point when the vectors cancel out.
pub fn weighted_mean(points: &[(GeoPoint, f64)]) -> Option<GeoPoint> {
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    if points.is_empty() || total <= 0.0 {
        return None;
    }
    let mut acc = [0.0; 3];
    for (p, w) in points {
        let v = p.to_unit_vector();
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    let norm = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
    if norm < 1e-12 {
        return points
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| *p);
    }
    let lat = (acc[2] / norm).clamp(-1.0, 1.0).asin().to_degrees();
    let lon = acc[1].atan2(acc[0]).to_degrees();
    Some(GeoPoint { lat, lon })
}
