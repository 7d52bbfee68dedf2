use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lag::{teacher_rows, teacher_student_pairs};
use super::Contingency;
use crate::corpus::Session;
use crate::numeric::mean;
use crate::taxonomy::UtteranceType;

/// What students say right after each teacher move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RqTriggers {
    /// Teacher UT by student UT over lag-1 teacher to student adjacencies.
    pub table: Contingency<UtteranceType, UtteranceType>,
    /// Mean CCI of the RC4-labelled student turns, aligned with `table.rows`.
    pub mean_student_cci: Vec<Option<f64>>,
}

impl RqTriggers {
    pub fn p(&self, teacher: UtteranceType, student: UtteranceType) -> Option<f64> {
        self.table.conditional(teacher, student)
    }

    pub fn p_rq(&self, teacher: UtteranceType) -> Option<f64> {
        self.p(teacher, UtteranceType::Rq)
    }

    pub fn mean_cci(&self, teacher: UtteranceType) -> Option<f64> {
        self.table.row_index(teacher).and_then(|r| self.mean_student_cci[r])
    }
}

pub fn rq_triggers(sessions: &[Session]) -> RqTriggers {
    let rows = teacher_rows(sessions);
    let mut weights: Vec<Vec<f64>> = rows.iter().map(|_| Vec::new()).collect();
    let mut table = Contingency::with_rows(rows);
    for s in sessions {
        for (teacher, student) in teacher_student_pairs(s) {
            let Some(t) = teacher.ut else { continue };
            if let Some(su) = student.ut {
                table.add(t, su);
            }
            if let (Some(r), Some(w)) = (table.row_index(t), student.cci()) {
                weights[r].push(f64::from(w));
            }
        }
    }
    RqTriggers {
        table: table.finish(),
        mean_student_cci: weights.iter().map(|w| mean(w)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_sessions, Utterance};
    use crate::taxonomy::{Code, Rc4, SpeakerRole};

    #[test]
    fn rows_normalise_and_empty_rows_are_flagged() {
        let spec = [
            (SpeakerRole::Teacher, UtteranceType::P, None),
            (SpeakerRole::Student, UtteranceType::Rq, Some(Rc4::Sri)),
            (SpeakerRole::Teacher, UtteranceType::P, None),
            (SpeakerRole::Student, UtteranceType::Rs, Some(Rc4::Er)),
            (SpeakerRole::Teacher, UtteranceType::E, None),
        ];
        let rows = spec
            .iter()
            .enumerate()
            .map(|(i, &(r, ut, rc))| {
                let u = Utterance::new("s", i, r, "x").with_ut(ut);
                match rc {
                    Some(c) => u.with_rc4(c),
                    None => u,
                }
            })
            .collect();
        let s = assemble_sessions(rows).unwrap().sessions;
        let r = rq_triggers(&s);
        assert_eq!(r.p_rq(UtteranceType::P), Some(0.5));
        assert_eq!(r.mean_cci(UtteranceType::P), Some(2.0));
        assert_eq!(r.p_rq(UtteranceType::E), None);
        assert_eq!(r.table.empty_rows, [UtteranceType::E]);
        let sum: f64 = UtteranceType::ALL.iter().filter_map(|&c| r.p(UtteranceType::P, c)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let _ = UtteranceType::P.code();
    }
}
