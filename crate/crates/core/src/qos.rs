//! Dynamic QoS scoring.
//!
//! Each candidate's recent snapshots are aligned by recency into time-gap
//! slots. At every slot the pool's mean and population standard deviation
//! per attribute turn raw values into z-scores, which a weighted,
//! direction-aware sum folds into a utility value. The relative change of
//! utility between consecutive slots is summed into an aggregate change.
//! Latest utility and aggregate change are min-max normalized over the rated
//! pool and blended by the stability weight.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::registry::QosSnapshot;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QosError {
    #[error("snapshot at {timestamp} lacks QoS attribute `{attribute}`")]
    MissingAttribute { attribute: String, timestamp: String },
    #[error("invalid qos configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub direction: Direction,
    pub weight: f64,
}

impl AttributeSpec {
    pub fn new(name: &str, direction: Direction, weight: f64) -> Self {
        Self {
            name: name.to_owned(),
            direction,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosConfig {
    pub attributes: Vec<AttributeSpec>,
    pub n_gaps: usize,
    pub stability_weight: f64,
    pub epsilon: f64,
}

impl Default for QosConfig {
    fn default() -> Self {
        Self {
            attributes: vec![
                AttributeSpec::new("availability", Direction::Maximize, 0.4),
                AttributeSpec::new("executionTimeMs", Direction::Minimize, 0.4),
                AttributeSpec::new("totalCalls", Direction::Maximize, 0.2),
            ],
            n_gaps: 3,
            stability_weight: 0.7,
            epsilon: 1e-9,
        }
    }
}

impl QosConfig {
    pub fn validate(&self) -> Result<(), QosError> {
        let fail = |m: String| Err(QosError::Config(m));
        if self.attributes.is_empty() {
            return fail("at least one QoS attribute is required".into());
        }
        for spec in &self.attributes {
            if !(spec.weight > 0.0 && spec.weight <= 1.0) {
                return fail(format!("weight of `{}` must lie in (0, 1], got {}", spec.name, spec.weight));
            }
        }
        let mut names: Vec<_> = self.attributes.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return fail(format!("attribute `{}` listed twice", w[0]));
        }
        let sum: f64 = self.attributes.iter().map(|a| a.weight).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("attribute weights must sum to 1, got {sum}"));
        }
        if self.n_gaps == 0 {
            return fail("n_gaps must be at least 1".into());
        }
        if !(self.stability_weight > 0.0 && self.stability_weight <= 1.0) {
            return fail(format!("stability_weight must lie in (0, 1], got {}", self.stability_weight));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeStats {
    pub mean: f64,
    pub std_dev: f64,
    pub samples: usize,
}

impl AttributeStats {
    /// Population statistics. Values are summed in sorted order so the result
    /// does not depend on the order candidates were supplied in.
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std_dev: var.sqrt(),
            samples: sorted.len(),
        }
    }
}

/// Stats per attribute, for one time-gap slot.
pub type SlotStats = BTreeMap<String, AttributeStats>;

/// Stats per slot; slot `n_gaps - 1` is the most recent.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolStats {
    pub slots: Vec<SlotStats>,
}

/// A candidate's most recent snapshots and the slot the oldest one occupies.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub first_slot: usize,
    pub snapshots: &'a [QosSnapshot],
}

fn attribute_of(snap: &QosSnapshot, name: &str) -> Result<f64, QosError> {
    snap.attribute(name).ok_or_else(|| QosError::MissingAttribute {
        attribute: name.to_owned(),
        timestamp: snap.timestamp.to_rfc3339(),
    })
}

/// Takes each history's last `n_gaps` snapshots, right-aligned so the most
/// recent lands in the last slot, and computes pool statistics per slot over
/// the candidates present there. Empty histories contribute nothing.
pub fn align_snapshots<'a>(
    histories: &[&'a [QosSnapshot]],
    n_gaps: usize,
    specs: &[AttributeSpec],
) -> Result<(Vec<Window<'a>>, PoolStats), QosError> {
    let windows: Vec<Window> = histories
        .iter()
        .map(|h| {
            let take = h.len().min(n_gaps);
            Window {
                first_slot: n_gaps - take,
                snapshots: &h[h.len() - take..],
            }
        })
        .collect();

    let mut slots = Vec::with_capacity(n_gaps);
    for slot in 0..n_gaps {
        let present: Vec<&QosSnapshot> = windows
            .iter()
            .filter(|w| slot >= w.first_slot && !w.snapshots.is_empty())
            .map(|w| &w.snapshots[slot - w.first_slot])
            .collect();
        let mut stats = SlotStats::new();
        if !present.is_empty() {
            for spec in specs {
                let values = present
                    .iter()
                    .map(|s| attribute_of(s, &spec.name))
                    .collect::<Result<Vec<_>, _>>()?;
                stats.insert(spec.name.clone(), AttributeStats::of(&values));
            }
        }
        slots.push(stats);
    }
    Ok((windows, PoolStats { slots }))
}

/// `(q - mean) / std_dev`, or `None` when the pool does not vary.
pub fn z_term(value: f64, stats: &AttributeStats, epsilon: f64) -> Option<f64> {
    (stats.std_dev >= epsilon).then(|| (value - stats.mean) / stats.std_dev)
}

/// Weighted utility of one snapshot against its slot's statistics.
///
/// Maximized attributes add `w * z`, minimized ones `w * (1 - z)`. When an
/// attribute does not vary across the pool its z-score is taken as 0.
pub fn utility(
    snapshot: &QosSnapshot,
    stats: &SlotStats,
    specs: &[AttributeSpec],
    epsilon: f64,
) -> Result<f64, QosError> {
    let mut uf = 0.0;
    for spec in specs {
        let value = attribute_of(snapshot, &spec.name)?;
        let z = stats
            .get(&spec.name)
            .and_then(|st| z_term(value, st, epsilon))
            .unwrap_or(0.0);
        uf += match spec.direction {
            Direction::Maximize => spec.weight * z,
            Direction::Minimize => spec.weight * (1.0 - z),
        };
    }
    Ok(uf)
}

/// Relative change `later / earlier - 1`; 0 when `earlier` is within epsilon of zero.
pub fn change(earlier: f64, later: f64, epsilon: f64) -> f64 {
    if earlier.abs() >= epsilon {
        later / earlier - 1.0
    } else {
        0.0
    }
}

pub fn changes(series: &[f64], epsilon: f64) -> Vec<f64> {
    series.windows(2).map(|w| change(w[0], w[1], epsilon)).collect()
}

/// Sum of consecutive changes over a series ordered oldest to newest.
pub fn aggregate_change(series: &[f64], epsilon: f64) -> f64 {
    changes(series, epsilon).iter().sum()
}

/// Min-max onto [0, 1]. A pool whose spread is below epsilon maps to all ones.
pub fn normalize_pool(values: &[f64], epsilon: f64) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = max - min;
    values
        .iter()
        .map(|v| {
            if spread < epsilon {
                1.0
            } else {
                ((v - min) / spread).clamp(0.0, 1.0)
            }
        })
        .collect()
}

pub fn nfp_score(uf_latest_norm: f64, ac_norm: f64, stability_weight: f64) -> f64 {
    stability_weight * uf_latest_norm + (1.0 - stability_weight) * ac_norm
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QosScores {
    /// Utility per occupied slot, oldest to newest.
    pub uf_series: Vec<f64>,
    pub changes: Vec<f64>,
    pub aggregate_change: f64,
    pub ac_norm: f64,
    pub uf_latest_norm: f64,
    pub nfp: f64,
    pub rated: bool,
}

/// Scores a gated pool. Candidates without history are unrated and score 0.
pub fn score_pool(histories: &[&[QosSnapshot]], config: &QosConfig) -> Result<Vec<QosScores>, QosError> {
    let specs = &config.attributes;
    let eps = config.epsilon;
    let (windows, stats) = align_snapshots(histories, config.n_gaps, specs)?;

    let mut scores: Vec<QosScores> = windows
        .iter()
        .map(|w| {
            if w.snapshots.is_empty() {
                return Ok(QosScores::default());
            }
            let uf_series = w
                .snapshots
                .iter()
                .enumerate()
                .map(|(i, snap)| utility(snap, &stats.slots[w.first_slot + i], specs, eps))
                .collect::<Result<Vec<_>, _>>()?;
            let changes = changes(&uf_series, eps);
            Ok(QosScores {
                aggregate_change: changes.iter().sum(),
                uf_series,
                changes,
                rated: true,
                ..QosScores::default()
            })
        })
        .collect::<Result<_, QosError>>()?;

    let rated: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].rated).collect();
    let latest: Vec<f64> = rated.iter().map(|&i| *scores[i].uf_series.last().unwrap()).collect();
    let acs: Vec<f64> = rated.iter().map(|&i| scores[i].aggregate_change).collect();
    let latest_norm = normalize_pool(&latest, eps);
    let ac_norm = normalize_pool(&acs, eps);
    for (k, &i) in rated.iter().enumerate() {
        let s = &mut scores[i];
        s.uf_latest_norm = latest_norm[k];
        s.ac_norm = ac_norm[k];
        s.nfp = nfp_score(latest_norm[k], ac_norm[k], config.stability_weight);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn snap(month: u32, avail: f64, exec: f64) -> QosSnapshot {
        QosSnapshot::new(Utc.with_ymd_and_hms(2014, month, 14, 0, 0, 0).unwrap(), avail, exec, 10)
    }

    fn two_attr() -> Vec<AttributeSpec> {
        vec![
            AttributeSpec::new("availability", Direction::Maximize, 0.5),
            AttributeSpec::new("executionTimeMs", Direction::Minimize, 0.5),
        ]
    }

    fn config(specs: Vec<AttributeSpec>, w: f64) -> QosConfig {
        QosConfig {
            attributes: specs,
            n_gaps: 3,
            stability_weight: w,
            epsilon: 1e-9,
        }
    }

    #[test]
    fn default_config_is_valid() {
        QosConfig::default().validate().unwrap();
        let mut c = QosConfig::default();
        c.attributes[0].weight = 0.5;
        assert!(c.validate().is_err());
        let c = QosConfig { n_gaps: 0, ..QosConfig::default() };
        assert!(c.validate().is_err());
        let c = QosConfig { stability_weight: 0.0, ..QosConfig::default() };
        assert!(c.validate().is_err());
        let c = config(vec![AttributeSpec::new("availability", Direction::Maximize, 1.0)], 1.0);
        c.validate().unwrap();
    }

    #[test]
    fn hand_evaluated_utilities() {
        // mean (.8, 200), population std (.1, 100)
        let a = [snap(1, 0.9, 100.0)];
        let b = [snap(1, 0.7, 300.0)];
        let (_, stats) = align_snapshots(&[&a, &b], 1, &two_attr()).unwrap();
        let st = &stats.slots[0];
        assert!((st["availability"].mean - 0.8).abs() < 1e-12);
        assert!((st["availability"].std_dev - 0.1).abs() < 1e-12);
        assert_eq!(st["executionTimeMs"].mean, 200.0);
        assert_eq!(st["executionTimeMs"].std_dev, 100.0);

        let ua = utility(&a[0], st, &two_attr(), 1e-9).unwrap();
        let ub = utility(&b[0], st, &two_attr(), 1e-9).unwrap();
        assert!((ua - 1.5).abs() < 1e-12, "{ua}");
        assert!((ub + 0.5).abs() < 1e-12, "{ub}");
    }

    #[test]
    fn constant_pool_utility_is_minimize_weight() {
        let specs = QosConfig::default().attributes;
        let h = [snap(1, 0.9, 100.0)];
        let (_, stats) = align_snapshots(&[&h, &h, &h], 1, &specs).unwrap();
        let uf = utility(&h[0], &stats.slots[0], &specs, 1e-9).unwrap();
        assert_eq!(uf, 0.4);
    }

    #[test]
    fn missing_attribute_is_named() {
        let specs = vec![AttributeSpec::new("price", Direction::Minimize, 1.0)];
        let h = [snap(1, 0.9, 100.0)];
        let err = align_snapshots(&[&h], 1, &specs).unwrap_err();
        assert!(matches!(err, QosError::MissingAttribute { ref attribute, .. } if attribute == "price"));
        let err = utility(&h[0], &SlotStats::new(), &specs, 1e-9).unwrap_err();
        assert!(matches!(err, QosError::MissingAttribute { .. }));
    }

    #[test]
    fn alignment_by_recency() {
        let a = [snap(1, 0.9, 100.0), snap(2, 0.9, 100.0)];
        let b = [snap(1, 0.7, 300.0), snap(2, 0.7, 300.0)];
        let (w, stats) = align_snapshots(&[&a, &b], 3, &two_attr()).unwrap();
        assert_eq!((w[0].first_slot, w[0].snapshots.len()), (1, 2));
        assert!(stats.slots[0].is_empty());
        assert_eq!(stats.slots[1]["availability"].samples, 2);
        assert_eq!(stats.slots[2]["availability"].samples, 2);

        let (_, stats) = align_snapshots(&[&a], 3, &two_attr()).unwrap();
        assert!(stats.slots[1..].iter().all(|s| s.values().all(|st| st.std_dev == 0.0)));

        let long: Vec<_> = (1..=5).map(|m| snap(m, 0.5, 1.0)).collect();
        let empty: [QosSnapshot; 0] = [];
        let (w, stats) = align_snapshots(&[&long, &empty], 3, &two_attr()).unwrap();
        assert_eq!(w[0].snapshots[0].timestamp, long[2].timestamp);
        assert!(w[1].snapshots.is_empty());
        assert_eq!(stats.slots[0]["availability"].samples, 1);
    }

    #[test]
    fn change_examples() {
        assert!((change(1.0, 1.2, 1e-9) - 0.2).abs() < 1e-12);
        assert_eq!(change(0.37, 0.37, 1e-9), 0.0);
        assert_eq!(change(0.0, 2.0, 1e-9), 0.0);
    }

    #[test]
    fn aggregate_change_examples() {
        assert!((aggregate_change(&[1.0, 1.2, 0.6], 1e-9) + 0.3).abs() < 1e-12);
        assert_eq!(aggregate_change(&[0.4, 0.4, 0.4], 1e-9), 0.0);
        assert_eq!(aggregate_change(&[1.0, 2.0, 4.0], 1e-9), 2.0);
        assert_eq!(aggregate_change(&[], 1e-9), 0.0);
        assert_eq!(aggregate_change(&[3.0], 1e-9), 0.0);
    }

    #[test]
    fn nfp_examples() {
        assert!((nfp_score(1.0, 0.0, 0.7) - 0.7).abs() < 1e-12);
        assert_eq!(nfp_score(0.3, 0.9, 1.0), 0.3);
        assert_eq!(nfp_score(0.0, 0.0, 0.4), 0.0);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_pool(&[1.5, -0.5], 1e-9), [1.0, 0.0]);
        assert_eq!(normalize_pool(&[2.0, 2.0, 2.0], 1e-9), [1.0, 1.0, 1.0]);
        assert_eq!(normalize_pool(&[0.0, 5.0, 10.0], 1e-9), [0.0, 0.5, 1.0]);
        assert!(normalize_pool(&[], 1e-9).is_empty());
    }

    #[test]
    fn dominant_improving_candidate_takes_everything() {
        // slot 0: same exec time, so only availability separates them
        //   X = .5*1 + .5*1 = 1.0, Y = .5*-1 + .5*1 = 0.0
        // slot 1: X = 1.5, Y = -0.5 (hand-evaluated above)
        // AC: X = 1.5/1.0 - 1 = 0.5, Y = 0 (zero denominator)
        let x = [snap(1, 0.9, 100.0), snap(2, 0.9, 100.0)];
        let y = [snap(1, 0.7, 100.0), snap(2, 0.7, 300.0)];
        let scores = score_pool(&[&x, &y], &config(two_attr(), 0.7)).unwrap();
        let uf = &scores[0].uf_series;
        assert!((uf[0] - 1.0).abs() < 1e-12 && (uf[1] - 1.5).abs() < 1e-12, "{uf:?}");
        assert!((scores[0].aggregate_change - 0.5).abs() < 1e-12);
        assert_eq!(scores[1].aggregate_change, 0.0);
        assert!((scores[0].nfp - 1.0).abs() < 1e-12);
        assert!(scores[1].nfp.abs() < 1e-12);
    }

    #[test]
    fn single_and_unrated_pools() {
        let x = [snap(1, 0.9, 100.0), snap(2, 0.95, 90.0)];
        let scores = score_pool(&[&x], &config(two_attr(), 0.3)).unwrap();
        assert_eq!(scores[0].nfp, 1.0);
        assert!(scores[0].rated);

        let empty: [QosSnapshot; 0] = [];
        let scores = score_pool(&[&empty, &empty], &config(two_attr(), 0.3)).unwrap();
        assert!(scores.iter().all(|s| !s.rated && *s == QosScores::default()));

        let scores = score_pool(&[&x, &empty], &config(two_attr(), 0.3)).unwrap();
        assert_eq!(scores[0].nfp, 1.0);
        assert_eq!(scores[1].nfp, 0.0);
        assert!(!scores[1].rated);
    }

    #[test]
    fn changes_length_tracks_series() {
        let x: Vec<_> = (1..=5).map(|m| snap(m, 0.5 + m as f64 / 20.0, 100.0)).collect();
        let y: Vec<_> = (1..=5).map(|m| snap(m, 0.5, 100.0 + m as f64)).collect();
        for n in 1..=6 {
            let cfg = QosConfig { n_gaps: n, ..config(two_attr(), 0.5) };
            for s in score_pool(&[&x, &y], &cfg).unwrap() {
                assert_eq!(s.uf_series.len(), n.min(5));
                assert_eq!(s.changes.len(), s.uf_series.len() - 1);
            }
        }
    }
}
