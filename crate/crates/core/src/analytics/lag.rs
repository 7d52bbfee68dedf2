use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::Contingency;
use crate::corpus::{Session, Utterance};
use crate::taxonomy::{Rc4, SpeakerRole, UtteranceType};

/// Teacher UT at turn t by student RC4 at turn t+1.
pub type TransitionTable = Contingency<UtteranceType, Rc4>;

/// Teacher turns followed, within the same session, by a student turn.
pub(crate) fn teacher_student_pairs(session: &Session) -> impl Iterator<Item = (&Utterance, &Utterance)> {
    session
        .utterances
        .windows(2)
        .map(|w| (&w[0], &w[1]))
        .filter(|(t, s)| t.speaker == SpeakerRole::Teacher && s.speaker == SpeakerRole::Student)
}

/// UT codes used on teacher turns, in code order.
pub(crate) fn teacher_rows(sessions: &[Session]) -> Vec<UtteranceType> {
    let set: BTreeSet<UtteranceType> = sessions
        .iter()
        .flat_map(|s| s.utterances.iter())
        .filter(|u| u.speaker == SpeakerRole::Teacher)
        .filter_map(|u| u.ut)
        .collect();
    set.into_iter().collect()
}

/// Lag-1 transitions from a UT-labelled teacher turn to an RC4-labelled
/// student turn. Rows exist for every UT seen on a teacher turn; rows with
/// no qualifying transition are flagged empty.
pub fn lag_sequential(sessions: &[Session]) -> TransitionTable {
    let mut t = Contingency::with_rows(teacher_rows(sessions));
    for s in sessions {
        for (teacher, student) in teacher_student_pairs(s) {
            if let (Some(ut), Some(rc)) = (teacher.ut, student.rc4) {
                t.add(ut, rc);
            }
        }
    }
    t.finish()
}
