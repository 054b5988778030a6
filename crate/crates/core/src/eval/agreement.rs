//! Adjusted Rand index, adjusted mutual information (arithmetic-mean
//! normalization) and V-measure between two labelings.

use std::collections::BTreeMap;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::stream_cluster::ClusterLabel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgreementScores {
    pub ami: f64,
    pub ari: f64,
    pub v_measure: f64,
}

struct Contingency {
    n: u64,
    rows: Vec<u64>,
    cols: Vec<u64>,
    cells: Vec<((usize, usize), u64)>,
}

impl Contingency {
    fn new(truth: &[ClusterLabel], pred: &[ClusterLabel]) -> Self {
        let index = |labels: &[ClusterLabel]| -> BTreeMap<ClusterLabel, usize> {
            let mut m = BTreeMap::new();
            for &l in labels {
                let next = m.len();
                m.entry(l).or_insert(next);
            }
            m
        };
        let (ri, ci) = (index(truth), index(pred));
        let mut rows = vec![0; ri.len()];
        let mut cols = vec![0; ci.len()];
        let mut cells: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (t, p) in truth.iter().zip(pred) {
            let (r, c) = (ri[t], ci[p]);
            rows[r] += 1;
            cols[c] += 1;
            *cells.entry((r, c)).or_default() += 1;
        }
        Contingency {
            n: truth.len() as u64,
            rows,
            cols,
            cells: cells.into_iter().collect(),
        }
    }

    /// Every class maps onto exactly one cluster and vice versa.
    fn is_bijection(&self) -> bool {
        self.cells.len() == self.rows.len() && self.cells.len() == self.cols.len()
    }
}

fn comb2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

fn entropy(counts: &[u64], n: u64) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn adjusted_rand(c: &Contingency) -> f64 {
    let (r, k) = (c.rows.len(), c.cols.len());
    if (r == k && (r <= 1 || r as u64 == c.n)) || c.n < 2 {
        return 1.0;
    }
    let index = c.cells.iter().map(|&(_, x)| comb2(x)).sum::<u64>() as f64;
    let sum_rows = c.rows.iter().map(|&x| comb2(x)).sum::<u64>() as f64;
    let sum_cols = c.cols.iter().map(|&x| comb2(x)).sum::<u64>() as f64;
    let expected = sum_rows * sum_cols / comb2(c.n) as f64;
    let max_index = (sum_rows + sum_cols) / 2.0;
    if max_index == expected {
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}

fn mutual_information(c: &Contingency) -> f64 {
    let n = c.n as f64;
    let mi: f64 = c
        .cells
        .iter()
        .map(|&((i, j), x)| {
            let x = x as f64;
            x / n * (n * x / (c.rows[i] as f64 * c.cols[j] as f64)).ln()
        })
        .sum();
    mi.max(0.0)
}

/// Expected mutual information under the hypergeometric model of random
/// labelings with fixed marginals.
fn expected_mutual_information(c: &Contingency) -> f64 {
    let n = c.n;
    let nf = n as f64;
    let lg = |x: u64| ln_gamma(x as f64 + 1.0);
    let lg_n = lg(n);
    let mut emi = 0.0;
    for &a in &c.rows {
        for &b in &c.cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let base = lg(a) + lg(b) + lg(n - a) + lg(n - b) - lg_n;
            for nij in lo..=hi {
                let x = nij as f64;
                let term = x / nf * (nf * x / (a as f64 * b as f64)).ln();
                let log_p = base - lg(nij) - lg(a - nij) - lg(b - nij) - lg(n + nij - a - b);
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

fn adjusted_mutual_information(c: &Contingency, mi: f64, h_true: f64, h_pred: f64) -> f64 {
    let (r, k) = (c.rows.len(), c.cols.len());
    if r == k && r <= 1 {
        return 1.0;
    }
    let emi = expected_mutual_information(c);
    let normalizer = (h_true + h_pred) / 2.0;
    let mut denominator = normalizer - emi;
    if denominator < 0.0 {
        denominator = denominator.min(-f64::EPSILON);
    } else {
        denominator = denominator.max(f64::EPSILON);
    }
    (mi - emi) / denominator
}

fn v_measure(mi: f64, h_true: f64, h_pred: f64) -> f64 {
    let homogeneity = if h_true == 0.0 { 1.0 } else { mi / h_true };
    let completeness = if h_pred == 0.0 { 1.0 } else { mi / h_pred };
    if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    }
}

/// Agreement between a predicted and a reference labeling. Outlier is an
/// ordinary label value here.
pub fn clustering_agreement(pred: &[ClusterLabel], truth: &[ClusterLabel]) -> Result<AgreementScores> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let c = Contingency::new(truth, pred);
    if c.is_bijection() {
        return Ok(AgreementScores { ami: 1.0, ari: 1.0, v_measure: 1.0 });
    }
    let h_true = entropy(&c.rows, c.n);
    let h_pred = entropy(&c.cols, c.n);
    let mi = mutual_information(&c);
    Ok(AgreementScores {
        ami: adjusted_mutual_information(&c, mi, h_true, h_pred),
        ari: adjusted_rand(&c),
        v_measure: v_measure(mi, h_true, h_pred),
    })
}
