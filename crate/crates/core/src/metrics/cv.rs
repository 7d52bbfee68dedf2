use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Display;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{classification_report, ClassificationReport, MetricsError};
use crate::numeric::{mean, sample_stdev};

fn check(k: usize, n: usize) -> Result<(), MetricsError> {
    if k < 2 || n < k {
        return Err(MetricsError::InvalidFolds { k, n });
    }
    Ok(())
}

/// Test indices of each fold after a seeded shuffle, dealt round-robin.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, MetricsError> {
    check(k, n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(deal(&order, k))
}

fn deal(order: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Like [`kfold_indices`], but each class is shuffled separately and the
/// classes are dealt one after another, so every fold holds within one
/// example of each class's share.
pub fn stratified_kfold_indices<L: PartialEq + Display>(
    labels: &[L],
    label_set: &[L],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, MetricsError> {
    check(k, labels.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(labels.len());
    for l in label_set {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == *l).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(MetricsError::ClassTooRare {
                label: format!("{l}"),
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        order.extend(members);
    }
    if let Some(l) = labels.iter().find(|l| !label_set.contains(l)) {
        return Err(MetricsError::UnknownLabel(format!("{l}")));
    }
    Ok(deal(&order, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary<L> {
    pub folds: Vec<ClassificationReport<L>>,
    pub mean_accuracy: f64,
    pub stdev_accuracy: f64,
    pub mean_macro_f1: f64,
    pub stdev_macro_f1: f64,
}

/// Runs `trainer(train_indices, test_indices)` on every fold; it must return
/// one prediction per test index.
pub fn cross_validate<L, E, F>(
    labels: &[L],
    label_set: &[L],
    k: usize,
    stratified: bool,
    seed: u64,
    mut trainer: F,
) -> Result<CvSummary<L>, E>
where
    L: Clone + PartialEq + Display,
    E: From<MetricsError>,
    F: FnMut(&[usize], &[usize]) -> Result<Vec<L>, E>,
{
    let folds = if stratified {
        stratified_kfold_indices(labels, label_set, k, seed)?
    } else {
        kfold_indices(labels.len(), k, seed)?
    };
    let mut reports = Vec::with_capacity(k);
    for test in &folds {
        let train: Vec<usize> = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
        let pred = trainer(&train, test)?;
        let truth: Vec<L> = test.iter().map(|&i| labels[i].clone()).collect();
        reports.push(classification_report(&truth, &pred, label_set)?);
    }
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let f1: Vec<f64> = reports.iter().map(|r| r.macro_f1).collect();
    Ok(CvSummary {
        mean_accuracy: mean(&acc).unwrap_or(0.0),
        stdev_accuracy: sample_stdev(&acc).unwrap_or(0.0),
        mean_macro_f1: mean(&f1).unwrap_or(0.0),
        stdev_macro_f1: sample_stdev(&f1).unwrap_or(0.0),
        folds: reports,
    })
}
