//! Test metrics and report formats: MSE, margin fractions, segment
//! placements, label histograms, and reduction percentages.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::label_histogram;
use crate::nn::{Model, Tensor};
use crate::oracle::TensorData;

/// Eval-mode `(truth, prediction)` pairs over a dataset.
pub fn predict_pairs(model: &Model, data: &TensorData, chunk: usize) -> Result<Vec<(f64, f64)>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let shape = data.features.shape();
    let row = shape[1] * shape[2] * shape[3];
    let n = data.len();
    let mut pairs = Vec::with_capacity(n);
    let mut at = 0usize;
    while at < n {
        let to = (at + chunk).min(n);
        let batch = Tensor::from_vec(
            vec![to - at, shape[1], shape[2], shape[3]],
            data.features.data()[at * row..to * row].to_vec(),
        )?;
        let preds = model.forward_eval(&batch)?;
        for (i, &p) in preds.data().iter().enumerate() {
            pairs.push((data.labels[at + i], p));
        }
        at = to;
    }
    Ok(pairs)
}

/// Mean squared error of eval-mode predictions.
pub fn test_mse(model: &Model, data: &TensorData) -> Result<f64> {
    let pairs = predict_pairs(model, data, 256)?;
    Ok(mse_of_pairs(&pairs))
}

pub fn mse_of_pairs(pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|(y, p)| (y - p) * (y - p)).sum::<f64>() / pairs.len() as f64
}

/// Fraction of pairs with `|pred - truth| <= margin` (inclusive).
pub fn margin_fraction(pairs: &[(f64, f64)], margin: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidValue {
            name: "margin",
            message: format!("must be > 0, got {margin}"),
        });
    }
    let inside = pairs.iter().filter(|(y, p)| (p - y).abs() <= margin).count();
    Ok(inside as f64 / pairs.len() as f64)
}

/// Placement within one segment: how many truths fall in it, and what
/// fraction of their predictions land on the same side. The ratio is `None`
/// (flagged, not an error) when the segment is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStat {
    pub n_truth: usize,
    pub placed_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "below_0.2")]
    pub below: SegmentStat,
    pub middle: SegmentStat,
    #[serde(rename = "above_0.6")]
    pub above: SegmentStat,
}

/// Splits pairs at `lower`/`upper` on the truth axis and reports, per
/// segment, the fraction of predictions placed in the same segment.
pub fn segment_report(pairs: &[(f64, f64)], lower: f64, upper: f64) -> Result<SegmentReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0 < lower && lower < upper && upper < 1.0) {
        return Err(Error::InvalidValue {
            name: "segment bounds",
            message: format!("need 0 < lower < upper < 1, got ({lower}, {upper})"),
        });
    }
    let mut counts = [0usize; 3];
    let mut placed = [0usize; 3];
    for &(y, p) in pairs {
        let (idx, ok) = if y < lower {
            (0, p < lower)
        } else if y > upper {
            (2, p > upper)
        } else {
            (1, (lower..=upper).contains(&p))
        };
        counts[idx] += 1;
        if ok {
            placed[idx] += 1;
        }
    }
    let stat = |i: usize| SegmentStat {
        n_truth: counts[i],
        placed_ratio: (counts[i] > 0).then(|| placed[i] as f64 / counts[i] as f64),
    };
    Ok(SegmentReport {
        lower,
        upper,
        below: stat(0),
        middle: stat(1),
        above: stat(2),
    })
}

/// Percentage reduction from `old_mse` to `new_mse`, rounded to the nearest
/// 0.5 (the granularity the comparison tables use).
pub fn reduction_percent(old_mse: f64, new_mse: f64) -> Result<f64> {
    if !(old_mse > 0.0) {
        return Err(Error::InvalidValue {
            name: "old_mse",
            message: format!("must be > 0, got {old_mse}"),
        });
    }
    let raw = 100.0 * (old_mse - new_mse) / old_mse;
    Ok((raw * 2.0).round() / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginFractions {
    #[serde(rename = "0.10")]
    pub within_10: f64,
    #[serde(rename = "0.20")]
    pub within_20: f64,
}

/// The full evaluation summary of one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub test_mse: f64,
    pub margins: MarginFractions,
    pub segments: SegmentReport,
    /// Histogram of truth labels over 50 equal bins on [0, 1].
    pub histogram: Vec<usize>,
    /// Retained `(truth, pred)` pairs.
    pub predictions: Vec<(f64, f64)>,
}

pub const HISTOGRAM_BINS: usize = 50;

impl EvaluationReport {
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let truths: Vec<f64> = pairs.iter().map(|(y, _)| *y).collect();
        Ok(Self {
            test_mse: mse_of_pairs(&pairs),
            margins: MarginFractions {
                within_10: margin_fraction(&pairs, 0.10)?,
                within_20: margin_fraction(&pairs, 0.20)?,
            },
            segments: segment_report(&pairs, 0.2, 0.6)?,
            histogram: label_histogram(&truths, HISTOGRAM_BINS),
            predictions: pairs,
        })
    }
}

/// Writes the JSON report and a `truth,pred` CSV. Byte-stable for
/// identical inputs.
pub fn emit_report(report: &EvaluationReport, json_path: &Path, csv_path: &Path) -> Result<()> {
    if let Some(dir) = json_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    if let Some(dir) = csv_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(json_path, serde_json::to_string_pretty(report)?)?;
    let mut csv = String::from("truth,pred\n");
    for (y, p) in &report.predictions {
        csv.push_str(&format!("{y},{p}\n"));
    }
    std::fs::write(csv_path, csv)?;
    Ok(())
}

pub fn read_report(json_path: &Path) -> Result<EvaluationReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(json_path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor_scores_zero_and_full_placement() {
        let pairs: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 / 19.0, i as f64 / 19.0)).collect();
        assert_eq!(mse_of_pairs(&pairs), 0.0);
        assert_eq!(margin_fraction(&pairs, 0.1).unwrap(), 1.0);
        let seg = segment_report(&pairs, 0.2, 0.6).unwrap();
        assert_eq!(seg.below.placed_ratio, Some(1.0));
        assert_eq!(seg.middle.placed_ratio, Some(1.0));
        assert_eq!(seg.above.placed_ratio, Some(1.0));
    }

    #[test]
    fn mse_hand_example() {
        let pairs = vec![(0.0, 0.1), (1.0, 0.9)];
        assert!((mse_of_pairs(&pairs) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn constant_predictor_at_mean_scores_population_variance() {
        let truths = [0.1, 0.3, 0.5, 0.7];
        let mean = 0.4;
        let pairs: Vec<(f64, f64)> = truths.iter().map(|&y| (y, mean)).collect();
        let var = truths.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / 4.0;
        assert!((mse_of_pairs(&pairs) - var).abs() < 1e-15);
    }

    #[test]
    fn margin_hand_count_and_inclusivity() {
        let pairs = vec![(0.5, 0.65), (0.5, 0.55)];
        assert_eq!(margin_fraction(&pairs, 0.10).unwrap(), 0.5);
        // Boundary-sitting predictions count as inside.
        let boundary = vec![(0.5, 0.6)];
        assert_eq!(margin_fraction(&boundary, 0.10).unwrap(), 1.0);
    }

    #[test]
    fn margin_fraction_is_monotone_in_margin() {
        let pairs: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let y = i as f64 / 49.0;
                (y, y + ((i * 37) % 11) as f64 / 30.0 - 0.15)
            })
            .collect();
        let mut last = 0.0;
        for m in [0.02, 0.05, 0.1, 0.2, 0.4] {
            let f = margin_fraction(&pairs, m).unwrap();
            assert!(f >= last);
            last = f;
        }
    }

    #[test]
    fn segment_hand_count_and_partition() {
        let pairs = vec![(0.7, 0.5), (0.8, 0.9)];
        let seg = segment_report(&pairs, 0.2, 0.6).unwrap();
        assert_eq!(seg.above.n_truth, 2);
        assert_eq!(seg.above.placed_ratio, Some(0.5));
        assert_eq!(seg.below.n_truth, 0);
        assert_eq!(seg.below.placed_ratio, None);
        assert_eq!(
            seg.below.n_truth + seg.middle.n_truth + seg.above.n_truth,
            pairs.len()
        );
    }

    #[test]
    fn reduction_percent_matches_reference_rows() {
        assert_eq!(reduction_percent(9.28e-3, 5.70e-3).unwrap(), 38.5);
        assert_eq!(reduction_percent(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(reduction_percent(1.0, 0.5).unwrap(), 50.0);
        assert!(reduction_percent(0.0, 1.0).is_err());
    }

    #[test]
    fn reduction_percent_is_exact_on_the_half_grid() {
        let mut r = 0.0;
        while r <= 100.0 {
            let new = 1.0 * (1.0 - r / 100.0);
            assert_eq!(reduction_percent(1.0, new).unwrap(), r, "r = {r}");
            r += 0.5;
        }
    }

    #[test]
    fn report_roundtrip_and_byte_stability() {
        let pairs: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let y = i as f64 / 29.0;
                (y, y * 0.9 + 0.03)
            })
            .collect();
        let report = EvaluationReport::from_pairs(pairs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let json1 = dir.path().join("a.json");
        let csv1 = dir.path().join("a.csv");
        emit_report(&report, &json1, &csv1).unwrap();
        let json2 = dir.path().join("b.json");
        let csv2 = dir.path().join("b.csv");
        emit_report(&report, &json2, &csv2).unwrap();

        assert_eq!(
            std::fs::read(&json1).unwrap(),
            std::fs::read(&json2).unwrap()
        );
        assert_eq!(std::fs::read(&csv1).unwrap(), std::fs::read(&csv2).unwrap());

        let back = read_report(&json1).unwrap();
        assert_eq!(back, report);

        let csv = std::fs::read_to_string(&csv1).unwrap();
        assert_eq!(csv.lines().count(), report.predictions.len() + 1);
        assert!(csv.starts_with("truth,pred\n"));
    }

    #[test]
    fn report_json_uses_contract_field_names() {
        let pairs = vec![(0.1, 0.1), (0.5, 0.4), (0.9, 0.8)];
        let report = EvaluationReport::from_pairs(pairs).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        for key in ["test_mse", "margins", "segments", "histogram"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!(json["margins"].get("0.10").is_some());
        assert!(json["margins"].get("0.20").is_some());
        assert!(json["segments"].get("above_0.6").is_some());
        assert!(json["segments"].get("below_0.2").is_some());
        assert!(json["segments"].get("middle").is_some());
    }
}
