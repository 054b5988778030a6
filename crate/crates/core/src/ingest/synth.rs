use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint};

use super::Trip;

const EPOCH: f64 = 1_600_000_000.0;
const ROW_TOLERANCE: f64 = 1e-9;
const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Parses `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    Uniform,
    /// Rows drawn from a symmetric Dirichlet.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub users: usize,
    pub k_true: usize,
    /// Gaussian destination noise per axis, meters.
    pub noise_m: f64,
    pub outlier_prob: f64,
    pub trips_per_user: usize,
    pub area_lat: f64,
    pub area_lon: f64,
    pub area_radius_km: f64,
    pub seed: u64,
    pub transition: TransitionKind,
    pub concentration: f64,
    /// Minimum distance between one user's planted locations.
    pub min_separation_m: f64,
    pub trips_per_day: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            users: 10,
            k_true: 5,
            noise_m: 20.0,
            outlier_prob: 0.1,
            trips_per_user: 200,
            area_lat: 57.7,
            area_lon: 11.97,
            area_radius_km: 15.0,
            seed: 1,
            transition: TransitionKind::Random,
            concentration: 0.5,
            min_separation_m: 1000.0,
            trips_per_day: 3.0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl SynthSpec {
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let mut s = SynthSpec::default();
        for (k, v) in kv {
            match k.as_str() {
                "users" => s.users = parse_value(k, v)?,
                "k_true" => s.k_true = parse_value(k, v)?,
                "noise_m" => s.noise_m = parse_value(k, v)?,
                "outlier_prob" => s.outlier_prob = parse_value(k, v)?,
                "trips_per_user" => s.trips_per_user = parse_value(k, v)?,
                "area_lat" => s.area_lat = parse_value(k, v)?,
                "area_lon" => s.area_lon = parse_value(k, v)?,
                "area_radius_km" => s.area_radius_km = parse_value(k, v)?,
                "seed" => s.seed = parse_value(k, v)?,
                "transition" => {
                    s.transition = match v.as_str() {
                        "uniform" => TransitionKind::Uniform,
                        "random" => TransitionKind::Random,
                        _ => return Err(Error::Config(format!("bad value `{v}` for `transition`"))),
                    }
                }
                "concentration" => s.concentration = parse_value(k, v)?,
                "min_separation_m" => s.min_separation_m = parse_value(k, v)?,
                "trips_per_day" => s.trips_per_day = parse_value(k, v)?,
                other => return Err(Error::Config(format!("unknown synth key `{other}`"))),
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_true < 1 {
            return Err(Error::param("k_true", "must be at least 1"));
        }
        if !(self.noise_m >= 0.0 && self.noise_m.is_finite()) {
            return Err(Error::param("noise_m", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.outlier_prob) {
            return Err(Error::param("outlier_prob", "must lie in [0, 1]"));
        }
        if !(self.area_radius_km > 0.0 && self.area_radius_km.is_finite()) {
            return Err(Error::param("area_radius_km", "must be positive"));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::param("concentration", "must be positive"));
        }
        if !(self.trips_per_day > 0.0 && self.trips_per_day.is_finite()) {
            return Err(Error::param("trips_per_day", "must be positive"));
        }
        if self.min_separation_m.is_nan() || self.min_separation_m < 0.0 {
            return Err(Error::param("min_separation_m", "must be non-negative"));
        }
        GeoPoint::new(self.area_lat, self.area_lon)?;
        Ok(())
    }
}

/// One user's planted locations and Markov transition matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserModel {
    pub locations: Vec<GeoPoint>,
    pub transition: Vec<Vec<f64>>,
}

impl UserModel {
    pub fn validate(&self) -> Result<()> {
        let k = self.locations.len();
        if k < 1 {
            return Err(Error::param("k_true", "must be at least 1"));
        }
        if self.transition.len() != k {
            return Err(Error::LengthMismatch { left: self.transition.len(), right: k });
        }
        for row in &self.transition {
            if row.len() != k {
                return Err(Error::LengthMismatch { left: row.len(), right: k });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE || row.iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(Error::NotNormalized { sum });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserTruth {
    #[serde(flatten)]
    pub model: UserModel,
    /// Planted location index of each trip destination, `-1` for outlier trips.
    pub labels: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthCorpus {
    pub seed: u64,
    pub users: BTreeMap<String, Vec<Trip>>,
    pub truth: BTreeMap<String, UserTruth>,
}

fn random_in_disc(rng: &mut ChaCha8Rng, center: GeoPoint, radius_m: f64) -> GeoPoint {
    let r = radius_m * rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    center.offset(r * theta.cos(), r * theta.sin())
}

fn plant_user(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<UserModel> {
    let center = GeoPoint::new(spec.area_lat, spec.area_lon)?;
    let radius = spec.area_radius_km * 1000.0;
    let mut locations: Vec<GeoPoint> = Vec::with_capacity(spec.k_true);
    let mut attempts = 0;
    while locations.len() < spec.k_true {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS {
            return Err(Error::InvalidInput(format!(
                "cannot place {} locations {} m apart within {} km",
                spec.k_true, spec.min_separation_m, spec.area_radius_km
            )));
        }
        let p = random_in_disc(rng, center, radius);
        if locations.iter().all(|q| haversine_distance(p, *q) >= spec.min_separation_m) {
            locations.push(p);
        }
    }
    let k = spec.k_true;
    let transition = match spec.transition {
        TransitionKind::Uniform => vec![vec![1.0 / k as f64; k]; k],
        TransitionKind::Random => {
            let gamma = Gamma::new(spec.concentration, 1.0).map_err(|e| Error::param("concentration", e.to_string()))?;
            (0..k)
                .map(|_| loop {
                    let row: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
                    let sum: f64 = row.iter().sum();
                    if sum > 0.0 {
                        break row.into_iter().map(|x| x / sum).collect();
                    }
                })
                .collect()
        }
    };
    Ok(UserModel { locations, transition })
}

/// Generates trips for one user from a planted model. Sources chain from
/// the previous destination; outlier trips go to a uniform point in the
/// area and leave the Markov state untouched.
fn simulate_user(
    user_id: &str,
    model: &UserModel,
    spec: &SynthSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Trip>, Vec<i64>)> {
    model.validate()?;
    let center = GeoPoint::new(spec.area_lat, spec.area_lon)?;
    let radius = spec.area_radius_km * 1000.0;
    let noise = Normal::new(0.0, spec.noise_m).map_err(|e| Error::param("noise_m", e.to_string()))?;
    let rows: Vec<WeightedIndex<f64>> = model
        .transition
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::InvalidInput(e.to_string())))
        .collect::<Result<_>>()?;
    let dwell = Exp::new(spec.trips_per_day / 86_400.0).map_err(|e| Error::param("trips_per_day", e.to_string()))?;
    let jitter = |rng: &mut ChaCha8Rng, p: GeoPoint| {
        if spec.noise_m == 0.0 {
            p
        } else {
            p.offset(noise.sample(rng), noise.sample(rng))
        }
    };

    let mut state = rng.random_range(0..model.locations.len());
    let mut position = jitter(rng, model.locations[state]);
    let mut t = EPOCH;
    let mut trips = Vec::with_capacity(spec.trips_per_user);
    let mut labels = Vec::with_capacity(spec.trips_per_user);
    for _ in 0..spec.trips_per_user {
        let dest = if spec.outlier_prob > 0.0 && rng.random::<f64>() < spec.outlier_prob {
            labels.push(-1);
            random_in_disc(rng, center, radius)
        } else {
            state = rows[state].sample(rng);
            labels.push(state as i64);
            jitter(rng, model.locations[state])
        };
        let straight = haversine_distance(position, dest);
        let distance = 1.3 * straight;
        // about 40 km/h plus parking
        let duration = (distance / 11.0 + 120.0).round();
        let t_start = t + dwell.sample(rng).round() + 1.0;
        let t_end = t_start + duration;
        trips.push(Trip {
            user_id: user_id.to_string(),
            t_start,
            t_end,
            source: position,
            dest,
            distance,
            duration,
        });
        t = t_end;
        position = dest;
    }
    Ok((trips, labels))
}

/// Deterministic synthetic corpus. Each user draws from its own ChaCha
/// stream, so users are independent of each other and of the user count.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut users = BTreeMap::new();
    let mut truth = BTreeMap::new();
    for u in 0..spec.users {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u as u64);
        let user_id = format!("u{u:04}");
        let model = plant_user(spec, &mut rng)?;
        let (trips, labels) = simulate_user(&user_id, &model, spec, &mut rng)?;
        users.insert(user_id.clone(), trips);
        truth.insert(user_id, UserTruth { model, labels });
    }
    Ok(SynthCorpus { seed, users, truth })
}
