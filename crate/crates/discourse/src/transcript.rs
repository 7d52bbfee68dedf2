//! Reading and writing utterance tables.
//!
//! JSON Lines is the canonical format: one utterance per line with the fields
//! `session_id`, `turn_index`, `speaker`, `text`, `ut`, `rc6`, `rc4` and
//! `provenance`, plus optional `ut_confidence`, `rc_confidence` and
//! `timestamp`. CSV with the same header is accepted on input.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use discourse_core::corpus::{assemble_sessions, Corpus, CorpusError, Diagnostic, DiagnosticKind};
use discourse_core::{Code, Provenance, Rc4, Rc6, Session, SpeakerRole, Utterance, UtteranceType};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[value(name = "jsonl")]
    JsonLines,
    Csv,
}

impl Format {
    /// `.csv` files are CSV; everything else is treated as JSON Lines.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::JsonLines,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("reading transcript: {0}")]
    Io(#[from] io::Error),
    #[error("transcript is not valid UTF-8")]
    Utf8,
    #[error("line {line}: unknown speaker `{value}` (expected Teacher or Student)")]
    UnknownSpeaker { line: usize, value: String },
    #[error("CSV header: {0}")]
    Header(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    session_id: String,
    turn_index: usize,
    speaker: String,
    text: String,
    #[serde(default)]
    ut: Option<String>,
    #[serde(default)]
    rc6: Option<String>,
    #[serde(default)]
    rc4: Option<String>,
    #[serde(default)]
    provenance: Option<String>,
    #[serde(default)]
    ut_confidence: Option<f64>,
    #[serde(default)]
    rc_confidence: Option<f64>,
    #[serde(default)]
    timestamp: Option<f64>,
}

fn diagnostic(kind: DiagnosticKind, line: usize, record: Option<&RawRecord>, message: String) -> Diagnostic {
    Diagnostic {
        kind,
        line: Some(line),
        session_id: record.map(|r| r.session_id.clone()),
        turn_index: record.map(|r| r.turn_index),
        message,
    }
}

fn label<L: Code + FromStr>(
    value: Option<&str>,
    line: usize,
    record: &RawRecord,
    diagnostics: &mut Vec<Diagnostic>,
) -> Option<L>
where
    L::Err: std::fmt::Display,
{
    let v = value.map(str::trim).filter(|v| !v.is_empty())?;
    match v.parse() {
        Ok(l) => Some(l),
        Err(e) => {
            diagnostics.push(diagnostic(DiagnosticKind::UnknownLabel, line, Some(record), format!("{e}")));
            None
        }
    }
}

fn convert(record: RawRecord, line: usize, diagnostics: &mut Vec<Diagnostic>) -> Result<Utterance, TranscriptError> {
    let speaker: SpeakerRole = record.speaker.parse().map_err(|_| TranscriptError::UnknownSpeaker {
        line,
        value: record.speaker.clone(),
    })?;
    let mut u = Utterance::new(record.session_id.clone(), record.turn_index, speaker, record.text.clone());
    u.ut = label::<UtteranceType>(record.ut.as_deref(), line, &record, diagnostics);
    u.rc6 = label::<Rc6>(record.rc6.as_deref(), line, &record, diagnostics);
    u.rc4 = label::<Rc4>(record.rc4.as_deref(), line, &record, diagnostics);
    u.provenance = match record.provenance.as_deref().map(str::trim) {
        None | Some("") => Provenance::Human,
        Some(p) => match p.to_ascii_lowercase().as_str() {
            "human" => Provenance::Human,
            "synthetic" => Provenance::Synthetic,
            "pseudo" => Provenance::Pseudo,
            other => {
                diagnostics.push(diagnostic(
                    DiagnosticKind::MalformedRecord,
                    line,
                    Some(&record),
                    format!("unknown provenance `{other}`; treating as human"),
                ));
                Provenance::Human
            }
        },
    };
    u.ut_confidence = record.ut_confidence;
    u.rc_confidence = record.rc_confidence;
    u.timestamp = record.timestamp;
    Ok(u)
}

const REQUIRED_COLUMNS: [&str; 4] = ["session_id", "turn_index", "speaker", "text"];

/// Parses a transcript and groups it into sessions.
///
/// Records that cannot be decoded are skipped with a line-numbered
/// diagnostic, as are unrecognised label strings (the label is dropped). An
/// unknown speaker, a duplicate turn or a gap in turn indices is an error.
pub fn parse_transcript<R: Read>(mut reader: R, format: Format) -> Result<Corpus, TranscriptError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| TranscriptError::Utf8)?;
    let mut diagnostics = Vec::new();
    let mut rows = Vec::new();
    match format {
        Format::JsonLines => {
            for (i, raw) in text.lines().enumerate() {
                let line = i + 1;
                if raw.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<RawRecord>(raw) {
                    Ok(r) => rows.push(convert(r, line, &mut diagnostics)?),
                    Err(e) => diagnostics.push(diagnostic(DiagnosticKind::MalformedRecord, line, None, e.to_string())),
                }
            }
        }
        Format::Csv => {
            if text.trim().is_empty() {
                return Ok(Corpus::default());
            }
            let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::Headers).from_reader(text.as_bytes());
            let headers = csv.headers().map_err(|e| TranscriptError::Header(e.to_string()))?.clone();
            if let Some(missing) = REQUIRED_COLUMNS.iter().find(|c| !headers.iter().any(|h| h == **c)) {
                return Err(TranscriptError::Header(format!("missing column `{missing}`")));
            }
            for (i, record) in csv.deserialize::<RawRecord>().enumerate() {
                // Header is line 1.
                let line = i + 2;
                match record {
                    Ok(r) => rows.push(convert(r, line, &mut diagnostics)?),
                    Err(e) => diagnostics.push(diagnostic(DiagnosticKind::MalformedRecord, line, None, e.to_string())),
                }
            }
        }
    }
    let mut corpus = assemble_sessions(rows)?;
    diagnostics.append(&mut corpus.diagnostics);
    corpus.diagnostics = diagnostics;
    Ok(corpus)
}

pub fn read_corpus(path: &Path) -> Result<Corpus, TranscriptError> {
    parse_transcript(File::open(path)?, Format::from_path(path))
}

/// Writes one canonical JSON line per utterance, sessions in order.
pub fn write_jsonl<'a, W: Write>(mut writer: W, sessions: impl IntoIterator<Item = &'a Session>) -> io::Result<()> {
    for s in sessions {
        for u in &s.utterances {
            serde_json::to_writer(&mut writer, u)?;
            writer.write_all(b"\n")?;
        }
    }
    writer.flush()
}

pub fn write_corpus(path: &Path, sessions: &[Session]) -> io::Result<()> {
    write_jsonl(BufWriter::new(File::create(path)?), sessions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str, format: Format) -> Result<Corpus, TranscriptError> {
        parse_transcript(s.as_bytes(), format)
    }

    #[test]
    fn rc4_is_derived_from_rc6() {
        let c = parse(
            r#"{"session_id":"s1","turn_index":0,"speaker":"Teacher","text":"What is energy?","ut":"Q","rc6":"SK","rc4":null,"provenance":"human"}"#,
            Format::JsonLines,
        )
        .unwrap();
        assert_eq!(c.sessions.len(), 1);
        assert_eq!(c.sessions[0].utterances[0].rc4, Some(Rc4::Srd));
    }

    #[test]
    fn empty_stream_is_empty_corpus() {
        assert!(parse("", Format::JsonLines).unwrap().sessions.is_empty());
        assert!(parse("", Format::Csv).unwrap().sessions.is_empty());
    }

    #[test]
    fn gaps_and_duplicates_are_errors() {
        let rows = "{\"session_id\":\"s\",\"turn_index\":0,\"speaker\":\"Teacher\",\"text\":\"a\"}\n\
                    {\"session_id\":\"s\",\"turn_index\":2,\"speaker\":\"Student\",\"text\":\"b\"}\n";
        assert!(matches!(parse(rows, Format::JsonLines), Err(TranscriptError::Corpus(CorpusError::NonContiguous { .. }))));
        let dup = "{\"session_id\":\"s\",\"turn_index\":0,\"speaker\":\"Teacher\",\"text\":\"a\"}\n\
                   {\"session_id\":\"s\",\"turn_index\":0,\"speaker\":\"Student\",\"text\":\"b\"}\n";
        assert!(matches!(parse(dup, Format::JsonLines), Err(TranscriptError::Corpus(CorpusError::DuplicateTurn { .. }))));
    }

    #[test]
    fn unknown_speaker_is_an_error_and_bad_labels_are_diagnostics() {
        let bad = "{\"session_id\":\"s\",\"turn_index\":0,\"speaker\":\"Parent\",\"text\":\"a\"}\n";
        assert!(matches!(parse(bad, Format::JsonLines), Err(TranscriptError::UnknownSpeaker { line: 1, .. })));
        let rows = "\n{\"session_id\":\"s\",\"turn_index\":0,\"speaker\":\"Teacher\",\"text\":\"a\",\"ut\":\"ZZ\"}\nnot json\n";
        let c = parse(rows, Format::JsonLines).unwrap();
        assert_eq!(c.sessions[0].utterances[0].ut, None);
        let kinds: Vec<_> = c.diagnostics.iter().map(|d| (d.kind, d.line)).collect();
        assert_eq!(kinds, [(DiagnosticKind::UnknownLabel, Some(2)), (DiagnosticKind::MalformedRecord, Some(3))]);
    }

    #[test]
    fn csv_ingest() {
        let csv = "session_id,turn_index,speaker,text,ut,rc6,rc4,provenance\n\
                   s,0,Teacher,\"Why, though?\",Q,,NA,human\n\
                   s,1,Student,because,Rs,PD,,\n";
        let c = parse(csv, Format::Csv).unwrap();
        let u = &c.sessions[0].utterances;
        assert_eq!(u[0].text, "Why, though?");
        assert_eq!(u[0].rc4, Some(Rc4::O));
        assert_eq!(u[1].rc4, Some(Rc4::Sri));
        assert!(matches!(parse("session_id,text\n", Format::Csv), Err(TranscriptError::Header(_))));
    }
}
