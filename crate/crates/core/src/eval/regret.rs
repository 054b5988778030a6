use serde::Serialize;

use super::HellingerSplit;

/// One row of a regret curve. Cumulative columns sum the per-step values
/// up to and including this step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegretRecord {
    pub step: usize,
    pub h2: f64,
    pub h2_d: f64,
    pub h2_s: f64,
    pub cum_regret: f64,
    pub cum_h2_d: f64,
    pub cum_h2_s: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RegretAccumulator {
    cum: (f64, f64, f64),
    records: Vec<RegretRecord>,
}

impl RegretAccumulator {
    pub fn push(&mut self, step: usize, s: HellingerSplit) -> RegretRecord {
        self.cum.0 += s.h2;
        self.cum.1 += s.h2_d;
        self.cum.2 += s.h2_s;
        let r = RegretRecord {
            step,
            h2: s.h2,
            h2_d: s.h2_d,
            h2_s: s.h2_s,
            cum_regret: self.cum.0,
            cum_h2_d: self.cum.1,
            cum_h2_s: self.cum.2,
        };
        self.records.push(r);
        r
    }

    pub fn records(&self) -> &[RegretRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<RegretRecord> {
        self.records
    }
}

pub fn regret_curve(steps: &[(usize, HellingerSplit)]) -> Vec<RegretRecord> {
    let mut acc = RegretAccumulator::default();
    for &(step, s) in steps {
        acc.push(step, s);
    }
    acc.into_records()
}

/// Mean per-step `h2` over the first and the last quarter of a curve.
/// `None` when the curve has fewer than four points.
pub fn quartile_means(records: &[RegretRecord]) -> Option<(f64, f64)> {
    let q = records.len() / 4;
    if q == 0 {
        return None;
    }
    let mean = |rs: &[RegretRecord]| rs.iter().map(|r| r.h2).sum::<f64>() / rs.len() as f64;
    Some((mean(&records[..q]), mean(&records[records.len() - q..])))
}
