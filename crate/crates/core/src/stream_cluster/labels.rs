use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ClusterEvent;

/// Live label set with retirement bookkeeping. Labels are handed out in
/// increasing order and retired labels are never reused.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LabelBook {
    next: u32,
    live: BTreeSet<u32>,
    /// retired label -> label it was merged into
    redirect: BTreeMap<u32, u32>,
}

impl LabelBook {
    pub fn fresh(&mut self) -> (u32, ClusterEvent) {
        let label = self.next;
        self.next += 1;
        self.live.insert(label);
        (label, ClusterEvent::NewCluster(label))
    }

    /// Merges `labels` (at least two, all live) into the smallest one.
    pub fn merge(&mut self, labels: &BTreeSet<u32>) -> (u32, ClusterEvent) {
        debug_assert!(labels.len() >= 2);
        let survivor = *labels.iter().next().expect("merge of an empty label set");
        for &l in labels.iter().skip(1) {
            self.live.remove(&l);
            self.redirect.insert(l, survivor);
        }
        let sources = labels.iter().copied().collect();
        (survivor, ClusterEvent::Merge { sources, survivor })
    }

    /// Follows merge redirects to the live label.
    pub fn resolve(&self, mut label: u32) -> u32 {
        while let Some(&next) = self.redirect.get(&label) {
            label = next;
        }
        label
    }

    pub fn live(&self) -> &BTreeSet<u32> {
        &self.live
    }

    pub fn next_label(&self) -> u32 {
        self.next
    }
}
