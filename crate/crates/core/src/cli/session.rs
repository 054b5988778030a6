use crate::error::Result;
use crate::ingest::Trip;
use crate::predict::{Model, ModelConfig, ModelKind, Prediction};
use crate::stream_cluster::{
    assign_source_label, remap_through, ClusterLabel, ClusterParams, DbscanFit, Observation, OnlineClusterer,
    Variant,
};

/// What one online step saw and produced.
#[derive(Clone, Debug)]
pub struct Step {
    /// Source label at prediction time.
    pub source: ClusterLabel,
    /// One prediction per model, in model order.
    pub predictions: Vec<Prediction>,
    pub observation: Observation,
}

/// Online pipeline for one user, fed one trip at a time: the source is
/// labelled and every model predicts before the destination is revealed.
#[derive(Clone, Debug)]
pub struct OnlineSession {
    params: ClusterParams,
    clusterer: OnlineClusterer,
    models: Vec<Model>,
}

impl OnlineSession {
    pub fn new(variant: Variant, params: ClusterParams, kinds: &[ModelKind], config: &ModelConfig) -> Result<Self> {
        Ok(OnlineSession {
            params,
            clusterer: OnlineClusterer::new(variant, params)?,
            models: kinds.iter().map(|&k| Model::new(k, &[], config)).collect(),
        })
    }

    pub fn step(&mut self, trip: &Trip) -> Result<Step> {
        let source = assign_source_label(&self.clusterer.distances_to_clusters(trip.source), &self.params);
        let predictions: Vec<Prediction> = self.models.iter_mut().map(|m| m.predict(source)).collect();
        let observation = self.clusterer.observe(trip.dest, trip.t_end)?;
        let remapped = remap_through(&observation.events, source);
        for m in &mut self.models {
            m.update(remapped, observation.label, &observation.events)?;
        }
        Ok(Step { source, predictions, observation })
    }

    pub fn clusterer(&self) -> &OnlineClusterer {
        &self.clusterer
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }
}

/// Offline pipeline for one user: DBSCAN and the models are fitted on the
/// training trips and then frozen.
#[derive(Clone, Debug)]
pub struct OfflineSession {
    params: ClusterParams,
    fit: DbscanFit,
    models: Vec<Model>,
}

impl OfflineSession {
    pub fn fit(train: &[Trip], params: ClusterParams, kinds: &[ModelKind], config: &ModelConfig) -> Result<Self> {
        let dests: Vec<_> = train.iter().map(|t| t.dest).collect();
        let fit = DbscanFit::fit(&dests, &params);
        let labels: Vec<ClusterLabel> = (0..fit.n_clusters() as u32).map(ClusterLabel::Id).collect();
        let mut models: Vec<Model> = kinds.iter().map(|&k| Model::new(k, &labels, config)).collect();
        for (trip, &dest) in train.iter().zip(&fit.labels) {
            let source = assign_source_label(&fit.distances_to_clusters(trip.source), &params);
            for m in &mut models {
                m.update(source, dest, &[])?;
            }
        }
        Ok(OfflineSession { params, fit, models })
    }

    /// Source label, predictions and the actual destination label of a
    /// held-out trip. The models are not updated.
    pub fn score(&mut self, trip: &Trip) -> (ClusterLabel, Vec<Prediction>, ClusterLabel) {
        let source = assign_source_label(&self.fit.distances_to_clusters(trip.source), &self.params);
        let predictions = self.models.iter_mut().map(|m| m.predict(source)).collect();
        (source, predictions, self.fit.assign(trip.dest))
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }
}

/// Predicted choice translated into the label space after `events`.
pub fn remap_choice(choice: Option<ClusterLabel>, obs: &Observation) -> Option<ClusterLabel> {
    choice.map(|c| remap_through(&obs.events, c))
}
