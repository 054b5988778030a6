use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{DistanceMode, FilterParams, SegmentParams};
use crate::predict::{AbstainPolicy, ModelConfig, ModelKind};
use crate::stream_cluster::{ClusterParams, Variant};

/// Everything a run needs besides its input paths.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub cluster: ClusterParams,
    pub variant: Variant,
    pub models: Vec<ModelKind>,
    pub model: ModelConfig,
    /// Share of each user's history used for training.
    pub split: f64,
    pub seed: u64,
    /// Every how many trips online clustering agreement is recorded.
    pub agreement_stride: usize,
    pub segment: SegmentParams,
    pub filter: FilterParams,
    /// Write per-user model/clusterer snapshots.
    pub snapshots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cluster: ClusterParams::default(),
            variant: Variant::V1,
            models: ModelKind::ALL.to_vec(),
            model: ModelConfig::default(),
            split: 0.8,
            seed: 0,
            agreement_stride: 10,
            segment: SegmentParams::default(),
            filter: FilterParams::default(),
            snapshots: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.cluster;
        match key {
            "epsilon" => c.epsilon = parse(key, value)?,
            "min_pts" => c.min_pts = parse(key, value)?,
            "radii_fraction" => c.radii_fraction = parse(key, value)?,
            "delta" => c.delta = parse(key, value)?,
            "expire" => c.expire = parse(key, value)?,
            "d_max" => c.d_max = parse(key, value)?,
            "variant" => self.variant = value.parse()?,
            "models" => {
                self.models = value
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<Vec<ModelKind>>>()?;
            }
            "prior_global" => self.model.priors.global = parse(key, value)?,
            "prior_conditional" => self.model.priors.conditional = parse(key, value)?,
            "eta" => self.model.eta = parse(key, value)?,
            "expert_smoothing" => self.model.expert_smoothing = parse(key, value)?,
            "abstain" => self.model.abstain = value.parse()?,
            "split" => self.split = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "agreement_stride" => self.agreement_stride = parse(key, value)?,
            "fix_gap" => self.segment.fix_gap = parse(key, value)?,
            "stop_speed" => self.segment.stop_speed = parse(key, value)?,
            "stop_duration" => self.segment.stop_duration = parse(key, value)?,
            "merge_gap" => self.segment.merge_gap = parse(key, value)?,
            "distance_mode" => self.segment.distance = value.parse()?,
            "min_trip_m" => self.filter.min_distance = parse(key, value)?,
            "min_trip_s" => self.filter.min_duration = parse(key, value)?,
            "min_span_days" => self.filter.min_span_days = parse(key, value)?,
            "min_trips_per_day" => self.filter.min_trips_per_day = parse(key, value)?,
            "snapshots" => self.snapshots = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (k, v) in kv {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::param("split", "must lie in (0, 1)"));
        }
        if self.models.is_empty() {
            return Err(Error::param("models", "at least one model is required"));
        }
        if self.agreement_stride == 0 {
            return Err(Error::param("agreement_stride", "must be positive"));
        }
        let p = self.model.priors;
        if !(p.global >= 0.0 && p.conditional >= 0.0) {
            return Err(Error::param("priors", "must be non-negative"));
        }
        if !(self.model.eta > 0.0 && self.model.eta.is_finite()) {
            return Err(Error::param("eta", "must be positive"));
        }
        if self.model.expert_smoothing.is_nan() || self.model.expert_smoothing < 0.0 {
            return Err(Error::param("expert_smoothing", "must be non-negative"));
        }
        Ok(())
    }

    /// The resolved configuration in the same `key = value` format it is read from.
    pub fn to_text(&self) -> String {
        let c = &self.cluster;
        let models: Vec<&str> = self.models.iter().map(|m| m.name()).collect();
        let distance = match self.segment.distance {
            DistanceMode::Polyline => "polyline",
            DistanceMode::Straight => "straight",
        };
        let abstain = match self.model.abstain {
            AbstainPolicy::Abstain => "abstain",
            AbstainPolicy::Random => "random",
        };
        let rows: [(&str, String); 26] = [
            ("epsilon", c.epsilon.to_string()),
            ("min_pts", c.min_pts.to_string()),
            ("radii_fraction", c.radii_fraction.to_string()),
            ("delta", c.delta.to_string()),
            ("expire", c.expire.to_string()),
            ("d_max", c.d_max.to_string()),
            ("variant", self.variant.to_string()),
            ("models", models.join(",")),
            ("prior_global", self.model.priors.global.to_string()),
            ("prior_conditional", self.model.priors.conditional.to_string()),
            ("eta", self.model.eta.to_string()),
            ("expert_smoothing", self.model.expert_smoothing.to_string()),
            ("abstain", abstain.to_string()),
            ("split", self.split.to_string()),
            ("seed", self.seed.to_string()),
            ("agreement_stride", self.agreement_stride.to_string()),
            ("fix_gap", self.segment.fix_gap.to_string()),
            ("stop_speed", self.segment.stop_speed.to_string()),
            ("stop_duration", self.segment.stop_duration.to_string()),
            ("merge_gap", self.segment.merge_gap.to_string()),
            ("distance_mode", distance.to_string()),
            ("min_trip_m", self.filter.min_distance.to_string()),
            ("min_trip_s", self.filter.min_duration.to_string()),
            ("min_span_days", self.filter.min_span_days.to_string()),
            ("min_trips_per_day", self.filter.min_trips_per_day.to_string()),
            ("snapshots", self.snapshots.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_key_values;

    #[test]
    fn defaults_match_reference_setup() {
        let c = RunConfig::default();
        assert_eq!(c.cluster.epsilon, 100.0);
        assert_eq!(c.cluster.min_pts, 2);
        assert_eq!(c.cluster.radii_fraction, 0.5);
        assert_eq!(c.cluster.expire, 28.0 * 86_400.0);
        assert_eq!(c.split, 0.8);
        assert_eq!(c.model.eta, 0.5);
    }

    #[test]
    fn text_roundtrip() {
        let mut c = RunConfig::default();
        c.set("models", "bayes, expert").unwrap();
        c.set("variant", "v2").unwrap();
        c.set("expire", "inf").unwrap();
        c.set("abstain", "random").unwrap();
        let back = RunConfig::from_key_values(&parse_key_values(&c.to_text()).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_names() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("models", "bayes,oracle"), Err(Error::Config(_))));
        assert!(matches!(c.set("variant", "v3"), Err(Error::Config(_))));
        assert!(matches!(c.set("nope", "1"), Err(Error::Config(_))));
        c.split = 1.0;
        assert!(c.validate().is_err());
    }
}
