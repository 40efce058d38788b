use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ccc, rmse};
use crate::dataset::UtteranceRecord;
use crate::error::{invalid, Error, Result};
use crate::features::GroupingConfig;
use crate::model::{train, ModelConfig};
use crate::space::PaCoordinate;

/// Shuffle `ids` with `seed` and cut them into `k` contiguous folds; the
/// first `len % k` folds get one extra element.
pub fn kfold_split<T: Clone>(ids: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if k < 2 {
        return Err(invalid(format!("need at least 2 folds (got {k})")));
    }
    if ids.len() < k {
        return Err(invalid(format!(
            "{} items cannot fill {k} folds",
            ids.len()
        )));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = ids.len() / k;
    let extra = ids.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut rest = shuffled.as_slice();
    for i in 0..k {
        let (head, tail) = rest.split_at(base + usize::from(i < extra));
        folds.push(head.to_vec());
        rest = tail;
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskMetrics {
    pub rmse: f64,
    pub ccc: f64,
}

impl TaskMetrics {
    fn compute(truth: &[f64], pred: &[f64]) -> Result<Self> {
        Ok(Self {
            rmse: rmse(truth, pred)?,
            ccc: ccc(truth, pred)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_size: usize,
    pub pleasure: TaskMetrics,
    pub arousal: TaskMetrics,
}

/// Per-fold metrics, their mean, and metrics of the pooled out-of-fold
/// predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub folds: Vec<FoldMetrics>,
    pub mean_pleasure: TaskMetrics,
    pub mean_arousal: TaskMetrics,
    pub pooled_pleasure: TaskMetrics,
    pub pooled_arousal: TaskMetrics,
}

/// Flat row for the CSV form of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scope: String,
    pub n: usize,
    pub p_rmse: f64,
    pub p_ccc: f64,
    pub a_rmse: f64,
    pub a_ccc: f64,
}

impl MetricReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let total = self.folds.iter().map(|f| f.test_size).sum();
        let mut rows: Vec<ReportRow> = self
            .folds
            .iter()
            .map(|f| ReportRow {
                scope: format!("fold{}", f.fold),
                n: f.test_size,
                p_rmse: f.pleasure.rmse,
                p_ccc: f.pleasure.ccc,
                a_rmse: f.arousal.rmse,
                a_ccc: f.arousal.ccc,
            })
            .collect();
        for (scope, p, a) in [
            ("mean", self.mean_pleasure, self.mean_arousal),
            ("pooled", self.pooled_pleasure, self.pooled_arousal),
        ] {
            rows.push(ReportRow {
                scope: scope.into(),
                n: total,
                p_rmse: p.rmse,
                p_ccc: p.ccc,
                a_rmse: a.rmse,
                a_ccc: a.ccc,
            });
        }
        rows
    }

    pub fn to_csv(&self) -> Result<String> {
        crate::io::csv_string(&self.rows())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    /// Worker cap for fold-level parallelism; 1 runs folds in order.
    pub threads: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: MetricReport,
    /// Held-out prediction for every record, in dataset order, with the
    /// fold that produced it.
    pub predictions: Vec<(String, usize, PaCoordinate)>,
}

/// Cross-validate an arbitrary fit-and-predict routine. `fit_predict`
/// receives (fold index, training records, test records) and returns one
/// prediction per test record.
pub fn cross_validate_with<F>(
    dataset: &[UtteranceRecord],
    opts: CvOptions,
    fit_predict: F,
) -> Result<CvOutcome>
where
    F: Fn(usize, &[UtteranceRecord], &[UtteranceRecord]) -> Result<Vec<PaCoordinate>> + Sync,
{
    for r in dataset {
        r.require_label()?;
    }
    let index: Vec<usize> = (0..dataset.len()).collect();
    let folds = kfold_split(&index, opts.folds, opts.seed)?;
    let run = |fold: usize| -> Result<(Vec<usize>, Vec<PaCoordinate>)> {
        let test_idx = &folds[fold];
        let mut in_test = vec![false; dataset.len()];
        test_idx.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<UtteranceRecord> = (0..dataset.len())
            .filter(|&i| !in_test[i])
            .map(|i| dataset[i].clone())
            .collect();
        let test: Vec<UtteranceRecord> = test_idx.iter().map(|&i| dataset[i].clone()).collect();
        let preds = fit_predict(fold, &train, &test).map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;
        if preds.len() != test.len() {
            return Err(invalid(format!(
                "fold {fold}: {} predictions for {} records",
                preds.len(),
                test.len()
            )));
        }
        Ok((test_idx.clone(), preds))
    };
    let results: Vec<Result<(Vec<usize>, Vec<PaCoordinate>)>> = if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| invalid(e.to_string()))?;
        pool.install(|| (0..opts.folds).into_par_iter().map(run).collect())
    } else {
        (0..opts.folds).map(run).collect()
    };

    let mut fold_metrics = Vec::with_capacity(opts.folds);
    let mut pooled: Vec<Option<(usize, PaCoordinate)>> = vec![None; dataset.len()];
    for (fold, res) in results.into_iter().enumerate() {
        let (idx, preds) = res?;
        let truth: Vec<PaCoordinate> = idx
            .iter()
            .map(|&i| dataset[i].label.expect("checked"))
            .collect();
        let col = |f: fn(&PaCoordinate) -> f64, xs: &[PaCoordinate]| {
            xs.iter().map(f).collect::<Vec<f64>>()
        };
        fold_metrics.push(FoldMetrics {
            fold,
            test_size: idx.len(),
            pleasure: TaskMetrics::compute(
                &col(|c| c.pleasure, &truth),
                &col(|c| c.pleasure, &preds),
            )?,
            arousal: TaskMetrics::compute(
                &col(|c| c.arousal, &truth),
                &col(|c| c.arousal, &preds),
            )?,
        });
        for (&i, p) in idx.iter().zip(preds) {
            pooled[i] = Some((fold, p));
        }
    }
    let mean = |f: fn(&FoldMetrics) -> TaskMetrics| {
        let k = fold_metrics.len() as f64;
        TaskMetrics {
            rmse: fold_metrics.iter().map(|m| f(m).rmse).sum::<f64>() / k,
            ccc: fold_metrics.iter().map(|m| f(m).ccc).sum::<f64>() / k,
        }
    };
    let predictions: Vec<(String, usize, PaCoordinate)> = pooled
        .into_iter()
        .zip(dataset)
        .map(|(p, r)| {
            let (fold, c) = p.expect("every record is in exactly one test fold");
            (r.id.clone(), fold, c)
        })
        .collect();
    let truth_p: Vec<f64> = dataset
        .iter()
        .map(|r| r.label.expect("checked").pleasure)
        .collect();
    let truth_a: Vec<f64> = dataset
        .iter()
        .map(|r| r.label.expect("checked").arousal)
        .collect();
    let pred_p: Vec<f64> = predictions.iter().map(|p| p.2.pleasure).collect();
    let pred_a: Vec<f64> = predictions.iter().map(|p| p.2.arousal).collect();
    let report = MetricReport {
        mean_pleasure: mean(|m| m.pleasure),
        mean_arousal: mean(|m| m.arousal),
        pooled_pleasure: TaskMetrics::compute(&truth_p, &pred_p)?,
        pooled_arousal: TaskMetrics::compute(&truth_a, &pred_a)?,
        folds: fold_metrics,
    };
    Ok(CvOutcome {
        report,
        predictions,
    })
}

/// Report for one set of predictions scored against its labels, as a
/// single fold (mean and pooled metrics coincide).
pub fn score_predictions(truth: &[PaCoordinate], preds: &[PaCoordinate]) -> Result<MetricReport> {
    if truth.len() != preds.len() {
        return Err(invalid(format!(
            "{} labels but {} predictions",
            truth.len(),
            preds.len()
        )));
    }
    let col =
        |f: fn(&PaCoordinate) -> f64, xs: &[PaCoordinate]| xs.iter().map(f).collect::<Vec<f64>>();
    let p = TaskMetrics::compute(&col(|c| c.pleasure, truth), &col(|c| c.pleasure, preds))?;
    let a = TaskMetrics::compute(&col(|c| c.arousal, truth), &col(|c| c.arousal, preds))?;
    Ok(MetricReport {
        folds: vec![FoldMetrics {
            fold: 0,
            test_size: truth.len(),
            pleasure: p,
            arousal: a,
        }],
        mean_pleasure: p,
        mean_arousal: a,
        pooled_pleasure: p,
        pooled_arousal: a,
    })
}

pub(crate) fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(fold as u64 + 1)
}

/// k-fold cross-validation of a model configuration: train on k−1 folds,
/// score the held-out fold.
pub fn cross_validate(
    dataset: &[UtteranceRecord],
    config: &ModelConfig,
    grouping: &GroupingConfig,
    opts: CvOptions,
) -> Result<CvOutcome> {
    cross_validate_with(dataset, opts, |fold, train_set, test_set| {
        let (model, _) = train(train_set, config, grouping, fold_seed(opts.seed, fold))?;
        let refs: Vec<&UtteranceRecord> = test_set.iter().collect();
        model.predict_many(&refs)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ten_into_five() {
        let ids: Vec<u32> = (0..10).collect();
        let folds = kfold_split(&ids, 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        let all: HashSet<u32> = folds.iter().flatten().copied().collect();
        assert_eq!(all.len(), 10);
        assert_eq!(folds, kfold_split(&ids, 5, 1).unwrap());
    }

    #[test]
    fn remainder_goes_to_first_folds() {
        let ids: Vec<u32> = (0..11).collect();
        let sizes: Vec<usize> = kfold_split(&ids, 5, 3)
            .unwrap()
            .iter()
            .map(Vec::len)
            .collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn invalid_fold_counts() {
        assert!(kfold_split(&[1, 2, 3], 4, 0).is_err());
        assert!(kfold_split(&[1, 2, 3], 1, 0).is_err());
    }
}
