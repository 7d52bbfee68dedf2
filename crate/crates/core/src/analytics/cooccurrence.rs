use super::Contingency;
use crate::corpus::Utterance;
use crate::taxonomy::{Code, Rc4, UtteranceType};

/// UT by RC4 counts over doubly labelled utterances.
pub type CooccurrenceTable = Contingency<UtteranceType, Rc4>;

/// Every UT gets a row; rows with no labelled utterance are flagged empty.
pub fn cooccurrence<'a>(utterances: impl IntoIterator<Item = &'a Utterance>) -> CooccurrenceTable {
    let mut t = Contingency::with_rows(UtteranceType::ALL.to_vec());
    for u in utterances {
        if let (Some(ut), Some(rc)) = (u.ut, u.rc4) {
            t.add(ut, rc);
        }
    }
    t.finish()
}
