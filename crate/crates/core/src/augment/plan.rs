use alloc::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::corpus::{LabelDistribution, TaskLabel, Utterance, UtteranceRef};
use crate::taxonomy::{Rc4, UtteranceType};

pub const DEFAULT_RHO: f64 = 0.15;

// Absorbs representation error in rho * n_max so exact boundaries give 0.
const EPS: f64 = 1e-9;

/// Extra variations per utterance for a class of size `n_c` when the largest
/// class has `n_max` members.
///
/// `ceil((rho * n_max - n_c) / n_c)` when `n_c < rho * n_max`, otherwise 0.
pub fn extra_variations(n_c: u64, n_max: u64, rho: f64) -> u32 {
    if n_c == 0 {
        return 0;
    }
    let goal = rho * n_max as f64;
    let deficit = goal - n_c as f64;
    if deficit <= EPS * goal.max(1.0) {
        return 0;
    }
    libm::ceil(deficit / n_c as f64 - EPS) as u32
}

/// Per-utterance extra-variation counts for the minority-boost pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostPlan {
    pub rho: f64,
    /// Only utterances with at least one extra are listed.
    pub extras: BTreeMap<UtteranceRef, u32>,
    pub ut_counts: LabelDistribution<UtteranceType>,
    pub rc_counts: LabelDistribution<Rc4>,
}

impl BoostPlan {
    pub fn extras_for(&self, reference: &UtteranceRef) -> u32 {
        self.extras.get(reference).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.extras.values().map(|&e| u64::from(e)).sum()
    }
}

fn task_extras<L: TaskLabel>(u: &Utterance, counts: &LabelDistribution<L>, rho: f64) -> u32 {
    let n_max = counts.counts.values().copied().max().unwrap_or(0);
    L::of(u).map_or(0, |l| extra_variations(counts.count(l), n_max, rho))
}

/// Computes UT and RC class counts over `train` independently and assigns
/// each utterance the larger of the two per-task requirements.
pub fn plan_minority_boost<'a, I>(train: I, rho: f64) -> Result<BoostPlan, AugmentError>
where
    I: IntoIterator<Item = &'a Utterance>,
    I::IntoIter: Clone,
{
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(AugmentError::InvalidRho(rho));
    }
    let rows = train.into_iter();
    let ut_counts = LabelDistribution::from_labels(rows.clone().map(|u| u.ut));
    let rc_counts = LabelDistribution::from_labels(rows.clone().map(|u| u.rc4));
    if ut_counts.total() == 0 && rc_counts.total() == 0 {
        return Err(AugmentError::EmptyTrain);
    }
    let mut extras = BTreeMap::new();
    for u in rows {
        let e = task_extras(u, &ut_counts, rho).max(task_extras(u, &rc_counts, rho));
        if e > 0 {
            extras.insert(u.reference(), e);
        }
    }
    Ok(BoostPlan {
        rho,
        extras,
        ut_counts,
        rc_counts,
    })
}
