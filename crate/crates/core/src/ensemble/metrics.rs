use serde::{Deserialize, Serialize};

use super::EnsembleError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// `None` when y has zero variance.
    pub r2: Option<f64>,
    pub n: usize,
}

pub fn reg_metrics(y: &[f64], pred: &[f64]) -> Result<RegMetrics, EnsembleError> {
    if y.len() != pred.len() {
        return Err(EnsembleError::LengthMismatch {
            rows: pred.len(),
            targets: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(EnsembleError::TooFew { need: 2, got: y.len() });
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sse: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    let mae = y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    Ok(RegMetrics {
        rmse: (sse / n).sqrt(),
        mae,
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
        n: y.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Rows whose true label is this class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClsMetrics {
    pub per_class: Vec<ClassMetrics>,
    /// Macro averages over classes present in y or ŷ.
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// Classes absent from both y and ŷ (metrics 0, excluded from macro).
    pub absent: Vec<usize>,
}

/// One-vs-rest precision/recall/F1 per class; 0/0 ratios are 0.
pub fn cls_metrics(y: &[usize], pred: &[usize], k: usize) -> Result<ClsMetrics, EnsembleError> {
    if y.len() != pred.len() {
        return Err(EnsembleError::LengthMismatch {
            rows: pred.len(),
            targets: y.len(),
        });
    }
    if y.is_empty() {
        return Err(EnsembleError::TooFew { need: 1, got: 0 });
    }
    if let Some(i) = y.iter().chain(pred).position(|&c| c >= k) {
        return Err(EnsembleError::BadLabel(i % y.len()));
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut per_class = Vec::with_capacity(k);
    let mut absent = Vec::new();
    for c in 0..k {
        let tp = y.iter().zip(pred).filter(|&(&a, &b)| a == c && b == c).count();
        let actual = y.iter().filter(|&&a| a == c).count();
        let predicted = pred.iter().filter(|&&b| b == c).count();
        if actual == 0 && predicted == 0 {
            absent.push(c);
        }
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support: actual,
        });
    }
    let present: Vec<&ClassMetrics> = per_class.iter().enumerate().filter(|(c, _)| !absent.contains(c)).map(|(_, m)| m).collect();
    let avg = |f: fn(&ClassMetrics) -> f64| present.iter().map(|m| f(m)).sum::<f64>() / present.len() as f64;
    Ok(ClsMetrics {
        macro_precision: avg(|m| m.precision),
        macro_recall: avg(|m| m.recall),
        macro_f1: avg(|m| m.f1),
        accuracy: ratio(y.iter().zip(pred).filter(|(a, b)| a == b).count(), y.len()),
        per_class,
        absent,
    })
}

/// |P − T| / T; `None` unless T > 0.
pub fn relative_error(t: f64, p: f64) -> Option<f64> {
    (t > 0.0).then(|| (p - t).abs() / t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRecord {
    pub truth: f64,
    pub predictions: Vec<f64>,
    /// [min, max] over members of |P_ij − T_i|.
    pub ae_range: (f64, f64),
    /// [min, max] of relative error; `None` when T ≤ 0.
    pub re_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_ae_min: f64,
    pub mean_ae_max: f64,
    /// Over the bin's buildings with a relative error; `None` if there are none.
    pub mean_re_min: Option<f64>,
    pub mean_re_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub records: Vec<UncertaintyRecord>,
    /// Non-empty bins of `bin_width` true-height intervals, ascending.
    pub bins: Vec<UncertaintyBin>,
    /// Buildings with T ≤ 0 (AE only).
    pub re_undefined: Vec<usize>,
}

pub const UNCERTAINTY_BIN: f64 = 5.0;

/// `members[i]` holds building i's member predictions.
pub fn uncertainty(members: &[Vec<f64>], truth: &[f64]) -> Result<UncertaintyReport, EnsembleError> {
    if members.len() != truth.len() {
        return Err(EnsembleError::LengthMismatch {
            rows: members.len(),
            targets: truth.len(),
        });
    }
    let range = |v: &mut dyn Iterator<Item = f64>| v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let mut records = Vec::with_capacity(truth.len());
    let mut re_undefined = Vec::new();
    for (i, (p, &t)) in members.iter().zip(truth).enumerate() {
        if p.is_empty() {
            return Err(EnsembleError::TooFew { need: 1, got: 0 });
        }
        let ae_range = range(&mut p.iter().map(|&x| (x - t).abs()));
        let re_range = (t > 0.0).then(|| range(&mut p.iter().filter_map(|&x| relative_error(t, x))));
        if re_range.is_none() {
            re_undefined.push(i);
        }
        records.push(UncertaintyRecord {
            truth: t,
            predictions: p.clone(),
            ae_range,
            re_range,
        });
    }
    let mut bins: std::collections::BTreeMap<i64, Vec<&UncertaintyRecord>> = Default::default();
    for r in &records {
        bins.entry((r.truth / UNCERTAINTY_BIN).floor() as i64).or_default().push(r);
    }
    let bins = bins
        .into_iter()
        .map(|(b, rs)| {
            let n = rs.len() as f64;
            let re: Vec<(f64, f64)> = rs.iter().filter_map(|r| r.re_range).collect();
            let re_mean = |f: fn(&(f64, f64)) -> f64| (!re.is_empty()).then(|| re.iter().map(f).sum::<f64>() / re.len() as f64);
            UncertaintyBin {
                lo: b as f64 * UNCERTAINTY_BIN,
                hi: (b + 1) as f64 * UNCERTAINTY_BIN,
                count: rs.len(),
                mean_ae_min: rs.iter().map(|r| r.ae_range.0).sum::<f64>() / n,
                mean_ae_max: rs.iter().map(|r| r.ae_range.1).sum::<f64>() / n,
                mean_re_min: re_mean(|r| r.0),
                mean_re_max: re_mean(|r| r.1),
            }
        })
        .collect();
    Ok(UncertaintyReport {
        records,
        bins,
        re_undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reg_hand_values() {
        let m = reg_metrics(&[1., 2., 3.], &[2., 2., 2.]).unwrap();
        assert!((m.mae - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(m.r2, Some(0.0));
        let p = reg_metrics(&[1., 5., 3.], &[1., 5., 3.]).unwrap();
        assert_eq!((p.rmse, p.mae, p.r2), (0.0, 0.0, Some(1.0)));
        assert_eq!(reg_metrics(&[4., 4.], &[3., 5.]).unwrap().r2, None);
        assert!(reg_metrics(&[1.], &[1.]).is_err());
        assert!(reg_metrics(&[1., 2.], &[1.]).is_err());
    }

    #[test]
    fn cls_perfect_and_absent() {
        let y = [0, 1, 1, 3];
        let m = cls_metrics(&y, &y, 4).unwrap();
        assert_eq!(m.absent, vec![2]);
        assert_eq!(m.per_class[2], ClassMetrics { precision: 0.0, recall: 0.0, f1: 0.0, support: 0 });
        assert_eq!((m.macro_f1, m.accuracy), (1.0, 1.0));
        assert!(cls_metrics(&[0, 5], &[0, 0], 3).is_err());
    }

    #[test]
    fn cls_matches_confusion_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 5;
        let y: Vec<usize> = (0..100).map(|_| rng.gen_range(0..k)).collect();
        let p: Vec<usize> = (0..100).map(|_| rng.gen_range(0..k)).collect();
        let mut cm = vec![vec![0usize; k]; k];
        for (&a, &b) in y.iter().zip(&p) {
            cm[a][b] += 1;
        }
        let m = cls_metrics(&y, &p, k).unwrap();
        for c in 0..k {
            let tp = cm[c][c] as f64;
            let col: usize = (0..k).map(|r| cm[r][c]).sum();
            let row: usize = cm[c].iter().sum();
            assert_eq!(m.per_class[c].precision, tp / col as f64);
            assert_eq!(m.per_class[c].recall, tp / row as f64);
        }
        let diag: usize = (0..k).map(|c| cm[c][c]).sum();
        assert_eq!(m.accuracy, diag as f64 / 100.0);
    }

    #[test]
    fn eq12_examples() {
        assert!((relative_error(10.0, 12.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(relative_error(7.0, 7.0), Some(0.0));
        assert_eq!(relative_error(0.0, 1.0), None);
        let r = uncertainty(&[vec![12.0, 9.0, 10.0], vec![1.0]], &[10.0, 0.0]).unwrap();
        assert_eq!(r.records[0].ae_range, (0.0, 2.0));
        let (lo, hi) = r.records[0].re_range.unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2).abs() < 1e-15);
        assert_eq!(r.re_undefined, vec![1]);
        assert_eq!(r.bins.len(), 2);
        assert_eq!((r.bins[0].lo, r.bins[1].lo), (0.0, 10.0));
        assert_eq!(r.bins[0].mean_re_max, None);
    }

    proptest! {
        #[test]
        fn re_scale_invariant(t in 0.1f64..200.0, p in 0.0f64..300.0, c in 0.01f64..100.0) {
            let a = relative_error(t, p).unwrap();
            let b = relative_error(c * t, c * p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn r2_of_mean_is_zero(y in proptest::collection::vec(-100.0f64..100.0, 2..50)) {
            let m = y.iter().sum::<f64>() / y.len() as f64;
            if let Some(r2) = reg_metrics(&y, &vec![m; y.len()]).unwrap().r2 {
                prop_assert!(r2.abs() < 1e-9);
            }
        }
    }
}
