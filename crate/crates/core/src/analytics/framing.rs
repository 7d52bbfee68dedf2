use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, Chain};
use crate::taxonomy::UtteranceType;

pub const DEFAULT_MIN_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingCell {
    pub initiation: UtteranceType,
    pub feedback: UtteranceType,
    pub count: usize,
    /// `None` when the cell is masked.
    pub mean_cci: Option<f64>,
    pub masked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingGrid {
    pub min_count: usize,
    /// Sorted by (initiation, feedback) code order.
    pub cells: Vec<FramingCell>,
}

impl FramingGrid {
    pub fn cell(&self, initiation: UtteranceType, feedback: UtteranceType) -> Option<&FramingCell> {
        self.cells
            .iter()
            .find(|c| c.initiation == initiation && c.feedback == feedback)
    }
}

/// Mean student CCI per (first teacher UT, second teacher UT), ignoring the
/// student UT. Cells with fewer than `min_count` chains are masked.
pub fn framing_grid(chains: &[Chain], min_count: usize) -> Result<FramingGrid, AnalyticsError> {
    if min_count == 0 {
        return Err(AnalyticsError::InvalidMinCount);
    }
    let mut acc: BTreeMap<(UtteranceType, UtteranceType), (u64, usize)> = BTreeMap::new();
    for c in chains {
        let e = acc.entry((c.trigram.first, c.trigram.second)).or_insert((0, 0));
        e.0 += u64::from(c.cci);
        e.1 += 1;
    }
    let cells = acc
        .into_iter()
        .map(|((initiation, feedback), (sum, count))| {
            let masked = count < min_count;
            FramingCell {
                initiation,
                feedback,
                count,
                mean_cci: (!masked).then(|| sum as f64 / count as f64),
                masked,
            }
        })
        .collect();
    Ok(FramingGrid { min_count, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::Trigram;
    use UtteranceType::*;

    fn chain(first: UtteranceType, student: UtteranceType, second: UtteranceType, cci: u8) -> Chain {
        Chain {
            session_id: "s".into(),
            center_turn: 0,
            trigram: Trigram::new(first, student, second),
            cci,
        }
    }

    #[test]
    fn student_code_is_collapsed_and_sparse_cells_masked() {
        let chains = [
            chain(Fq, Rs, Q, 3),
            chain(Fq, Rq, Q, 2),
            chain(Fq, O, Q, 1),
            chain(E, Rs, Fs, 2),
            chain(E, Rs, Fs, 2),
        ];
        let g = framing_grid(&chains, DEFAULT_MIN_COUNT).unwrap();
        let c = g.cell(Fq, Q).unwrap();
        assert_eq!((c.count, c.mean_cci, c.masked), (3, Some(2.0), false));
        let m = g.cell(E, Fs).unwrap();
        assert!(m.masked && m.mean_cci.is_none() && m.count == 2);
    }

    #[test]
    fn single_chain_visible_only_at_threshold_one() {
        let chains = [chain(P, O, P, 0)];
        assert!(!framing_grid(&chains, 1).unwrap().cells[0].masked);
        assert!(framing_grid(&chains, 2).unwrap().cells[0].masked);
        assert!(framing_grid(&chains, 0).is_err());
    }
}
