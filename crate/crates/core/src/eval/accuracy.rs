use crate::error::{Error, Result};
use crate::stream_cluster::ClusterLabel;

/// Share of correct predictions over all trips, and over trips whose
/// actual destination is a cluster. `None` when the denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accuracy {
    pub acc_all: Option<f64>,
    pub acc_clustered: Option<f64>,
}

/// `choices[i]` is the chosen destination (`None` = abstained).
pub fn accuracy(choices: &[Option<ClusterLabel>], actuals: &[ClusterLabel]) -> Result<Accuracy> {
    if choices.len() != actuals.len() {
        return Err(Error::LengthMismatch {
            left: choices.len(),
            right: actuals.len(),
        });
    }
    let correct = choices
        .iter()
        .zip(actuals)
        .filter(|(c, a)| !a.is_outlier() && **c == Some(**a))
        .count();
    let clustered = actuals.iter().filter(|a| !a.is_outlier()).count();
    let ratio = |den: usize| (den > 0).then(|| correct as f64 / den as f64);
    Ok(Accuracy {
        acc_all: ratio(actuals.len()),
        acc_clustered: ratio(clustered),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: ClusterLabel = ClusterLabel::Outlier;
    fn id(k: u32) -> ClusterLabel {
        ClusterLabel::Id(k)
    }

    #[test]
    fn outlier_actual_counts_only_in_all() {
        let choices = [Some(id(0)), Some(id(1)), Some(id(1)), Some(id(2))];
        let actuals = [id(0), id(1), id(1), O];
        let a = accuracy(&choices, &actuals).unwrap();
        assert_eq!(a.acc_all, Some(0.75));
        assert_eq!(a.acc_clustered, Some(1.0));
    }

    #[test]
    fn abstain_is_wrong() {
        let a = accuracy(&[None, None], &[id(0), id(1)]).unwrap();
        assert_eq!(a, Accuracy { acc_all: Some(0.0), acc_clustered: Some(0.0) });
    }

    #[test]
    fn empty_is_undefined() {
        let a = accuracy(&[], &[]).unwrap();
        assert_eq!(a, Accuracy { acc_all: None, acc_clustered: None });
        let a = accuracy(&[None], &[O]).unwrap();
        assert_eq!(a.acc_clustered, None);
    }
}
