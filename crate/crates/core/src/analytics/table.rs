use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::taxonomy::Code;

/// Counts of column codes conditioned on row codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contingency<R, C> {
    pub rows: Vec<R>,
    pub columns: Vec<C>,
    pub counts: Vec<Vec<u64>>,
    pub row_totals: Vec<u64>,
    /// `counts / row total`; all zeros for an empty row.
    pub conditional: Vec<Vec<f64>>,
    pub empty_rows: Vec<R>,
}

impl<R: Code, C: Code> Contingency<R, C> {
    pub(crate) fn with_rows(rows: Vec<R>) -> Self {
        let columns = C::ALL.to_vec();
        Contingency {
            counts: vec![vec![0; columns.len()]; rows.len()],
            row_totals: vec![0; rows.len()],
            conditional: vec![vec![0.0; columns.len()]; rows.len()],
            empty_rows: Vec::new(),
            rows,
            columns,
        }
    }

    pub(crate) fn add(&mut self, row: R, column: C) {
        if let Some(r) = self.row_index(row) {
            self.counts[r][column.index()] += 1;
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        self.empty_rows.clear();
        for (r, row) in self.counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            self.row_totals[r] = total;
            self.conditional[r] = row
                .iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect();
            if total == 0 {
                self.empty_rows.push(self.rows[r]);
            }
        }
        self
    }

    pub fn row_index(&self, row: R) -> Option<usize> {
        self.rows.iter().position(|&r| r == row)
    }

    pub fn count(&self, row: R, column: C) -> u64 {
        self.row_index(row).map_or(0, |r| self.counts[r][column.index()])
    }

    pub fn row_total(&self, row: R) -> u64 {
        self.row_index(row).map_or(0, |r| self.row_totals[r])
    }

    /// `P(column | row)`, or `None` when the row is absent or empty.
    pub fn conditional(&self, row: R, column: C) -> Option<f64> {
        let r = self.row_index(row)?;
        (self.row_totals[r] > 0).then(|| self.conditional[r][column.index()])
    }

    pub fn total(&self) -> u64 {
        self.row_totals.iter().sum()
    }
}
