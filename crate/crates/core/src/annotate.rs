//! The annotation ingestion gate: conservative JSON recovery, schema-gated
//! record validation, offset-resumable batch state, retry processing, and
//! dead-lettering.
//!
//! Records arrive as a newline-delimited stream of JSON documents, one per
//! line; the stream is append-only and may be re-presented from the start —
//! `next_offset` skips what was already consumed, which is what makes a
//! crash mid-batch safe. A record is a JSON object:
//!
//! ```json
//! {"sent_id": "q1897-034",
//!  "text": "Ερωτάται ο υπουργός.",
//!  "tokens": [{"form": "Ερωτάται", "lemma": "ερωτώ", "upos": "VERB",
//!              "feats": "Voice=Pass", "head": 0, "deprel": "root"}],
//!  "sidecars": {"archaic_lexeme_class": "infinitival_residue"}}
//! ```
//!
//! `lemma`, `feats`, `text`, and `sidecars` are optional; token ids are
//! implicit in array order. Sidecar values are stored in the MISC column as
//! `Kath:<name>=<value>` so the snapshot stays plain CoNLL-U.
//!
//! Rejected records enter the retry queue with a reason: `JSON_PARSE`
//! (unparseable or wrong shape, queued under a synthetic `@offset:<n>`
//! id), `EMPTY_SENTENCE`, `RESERVED_SENT_ID`, `BAD_SIDECAR`, or the first
//! failing validation code (`BAD_UPOS`, `BAD_DEPREL`,
//! `HEAD_OUT_OF_RANGE`, …). Duplicates of admitted ids are dead-lettered as
//! `DUPLICATE`, never queued, so the queue and the admitted set stay
//! disjoint. A replacement record may name a queued synthetic id
//! explicitly via `"replaces"`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{
    validate_sentence, IssueCode, Origin, Sentence, Severity, Strictness, Token,
};
use crate::conllu::Pairs;
use crate::schema::AnnotationSchema;

/// Errors from state handling and retry processing.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("STATE_CORRUPT: {0}")]
    StateCorrupt(String),
    #[error("UNKNOWN_RETRY_ID: {0}")]
    UnknownRetryId(String),
    #[error("ingest io: {0}")]
    Io(#[from] std::io::Error),
}

/// One rejected record awaiting a replacement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryEntry {
    pub sent_id: String,
    pub reason: String,
    pub attempt_count: u32,
}

/// Resumable ingestion state; the JSON form of this struct is the state
/// file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestState {
    /// Count of stream records consumed so far.
    pub next_offset: u64,
    pub admitted: Vec<String>,
    pub retry_queue: Vec<RetryEntry>,
    pub max_attempts: u32,
}

impl Default for IngestState {
    fn default() -> Self {
        IngestState {
            next_offset: 0,
            admitted: Vec::new(),
            retry_queue: Vec::new(),
            max_attempts: 3,
        }
    }
}

impl IngestState {
    fn check_invariants(&self) -> Result<(), IngestError> {
        for entry in &self.retry_queue {
            if self.admitted.contains(&entry.sent_id) {
                return Err(IngestError::StateCorrupt(format!(
                    "{:?} is both admitted and queued for retry",
                    entry.sent_id
                )));
            }
        }
        if (self.admitted.len() as u64) > self.next_offset {
            return Err(IngestError::StateCorrupt(format!(
                "{} admitted but only {} records consumed",
                self.admitted.len(),
                self.next_offset
            )));
        }
        if self.max_attempts == 0 {
            return Err(IngestError::StateCorrupt("max_attempts is 0".to_string()));
        }
        Ok(())
    }

    /// Parses and invariant-checks a state file.
    pub fn load(path: &Path) -> Result<IngestState, IngestError> {
        let text = std::fs::read_to_string(path)?;
        let state: IngestState = serde_json::from_str(&text)
            .map_err(|e| IngestError::StateCorrupt(format!("unparseable state file: {e}")))?;
        state.check_invariants()?;
        Ok(state)
    }

    /// [`IngestState::load`], or a fresh default when the file is absent.
    pub fn load_or_default(path: &Path) -> Result<IngestState, IngestError> {
        if path.exists() {
            IngestState::load(path)
        } else {
            Ok(IngestState::default())
        }
    }

    /// Atomic save: write to a sibling temp file, then rename over.
    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        self.check_invariants()?;
        let json = serde_json::to_string_pretty(self).expect("state serializes");
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json.as_bytes())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    fn queued(&self, sent_id: &str) -> bool {
        self.retry_queue.iter().any(|e| e.sent_id == sent_id)
    }
}

/// A record that could not be admitted and will not be retried.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadLetter {
    pub sent_id: String,
    pub reason: String,
    pub attempt_count: u32,
    /// The record text as it arrived, for manual inspection.
    pub raw: String,
}

/// What one ingestion (or retry) pass produced.
#[derive(Debug, Default)]
pub struct IngestOutcome {
    pub admitted: Vec<Sentence>,
    pub dead_letters: Vec<DeadLetter>,
}

/// Conservative recovery of near-valid JSON. Applies, in order: strip
/// leading/trailing code-fence lines; trim text before the first `{`/`[`
/// and after the last `}`/`]`; remove trailing commas before closing
/// brackets (outside strings). Nothing else — if the result still fails to
/// parse, the record is rejected.
///
/// The ordered passes repeat until nothing changes (each pass only deletes
/// characters, so this terminates), which makes the whole function
/// idempotent even when one pass exposes work for an earlier one.
pub fn recover_json(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = recover_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn recover_pass(text: &str) -> String {
    // strip code-fence lines at the edges; split('\n') (not lines()) so
    // that joining back is lossless when nothing is stripped
    let mut lines: Vec<&str> = text.split('\n').collect();
    while let Some(first) = lines.first() {
        if first.trim_start().starts_with("```") {
            lines.remove(0);
        } else {
            break;
        }
    }
    while let Some(last) = lines.last() {
        if last.trim_start().starts_with("```") {
            lines.pop();
        } else {
            break;
        }
    }
    let joined = lines.join("\n");

    // trim to the outermost bracket pair
    let start = joined.find(['{', '[']);
    let end = joined.rfind(['}', ']']);
    let core = match (start, end) {
        (Some(s), Some(e)) if s <= e => &joined[s..=e],
        _ => joined.as_str(),
    };

    // drop trailing commas before a closing bracket, outside strings
    let mut out = String::with_capacity(core.len());
    let mut in_string = false;
    let mut escaped = false;
    for c in core.chars() {
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                out.push(c);
            }
            '}' | ']' => {
                // remove every comma that directly precedes (over whitespace)
                loop {
                    let trimmed_len = out.trim_end().len();
                    if !out[..trimmed_len].ends_with(',') {
                        break;
                    }
                    let ws: String = out[trimmed_len..].to_string();
                    out.truncate(trimmed_len - 1);
                    out.push_str(&ws);
                }
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    sent_id: String,
    #[serde(default)]
    text: Option<String>,
    tokens: Vec<RawToken>,
    #[serde(default)]
    sidecars: BTreeMap<String, String>,
    /// Names the queued id this record replaces (defaults to `sent_id`).
    #[serde(default)]
    replaces: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToken {
    form: String,
    #[serde(default)]
    lemma: Option<String>,
    upos: String,
    #[serde(default)]
    feats: Option<String>,
    head: usize,
    deprel: String,
}

/// Why a parsed record cannot be admitted (the queue/dead-letter reason).
fn rejection_reason(record: &RawRecord, sentence: &Sentence, schema: &AnnotationSchema) -> Option<String> {
    if record.sent_id.starts_with('@') {
        return Some("RESERVED_SENT_ID".to_string());
    }
    if record.tokens.is_empty() {
        return Some("EMPTY_SENTENCE".to_string());
    }
    for (name, value) in &record.sidecars {
        match schema.sidecar(name) {
            None => return Some("BAD_SIDECAR".to_string()),
            Some(field) if !field.accepts(value) => return Some("BAD_SIDECAR".to_string()),
            Some(_) => {}
        }
    }
    let issues = validate_sentence(sentence, Strictness::Lenient, Some(schema));
    issues
        .iter()
        .find(|i| {
            i.severity == Severity::Error
                || matches!(i.code, IssueCode::BadUpos | IssueCode::BadDeprel)
        })
        .map(|i| i.code.as_str().to_string())
}

/// Builds the sentence a record describes (token ids from array order).
fn record_to_sentence(record: &RawRecord, origin: Origin) -> Sentence {
    let tokens = record
        .tokens
        .iter()
        .enumerate()
        .map(|(i, rt)| {
            let mut t = Token::new(i + 1, &rt.form, &rt.upos, rt.head, &rt.deprel);
            if let Some(lemma) = &rt.lemma {
                t.lemma = lemma.clone();
            }
            if let Some(feats) = &rt.feats {
                t.feats = Pairs::parse_column(feats);
            }
            t
        })
        .collect();
    let mut s = Sentence::new(&record.sent_id, record.text.as_deref(), origin, tokens);
    for (name, value) in &record.sidecars {
        if let Some(first) = s.tokens.first_mut() {
            first.misc.insert_sorted(&format!("Kath:{name}"), value);
        }
    }
    s
}

fn stream_records(input: &str) -> Vec<&str> {
    input
        .lines()
        .filter(|line| !line.trim().is_empty())
        .collect()
}

/// Consumes the not-yet-consumed suffix of a record stream.
///
/// Valid records are admitted with origin `batch`; failing records enter
/// the retry queue; duplicates of admitted or already-queued ids are
/// dead-lettered as `DUPLICATE`. `next_offset` advances per record, so an
/// interrupted run resumes exactly where it stopped when the stream is
/// presented again.
pub fn ingest_batch(
    input: &str,
    schema: &AnnotationSchema,
    state: &mut IngestState,
) -> IngestOutcome {
    let mut outcome = IngestOutcome::default();

    for (idx, raw) in stream_records(input).iter().enumerate() {
        if (idx as u64) < state.next_offset {
            continue;
        }

        let recovered = recover_json(raw);
        match serde_json::from_str::<RawRecord>(&recovered) {
            Err(_) => {
                state.retry_queue.push(RetryEntry {
                    sent_id: format!("@offset:{idx}"),
                    reason: "JSON_PARSE".to_string(),
                    attempt_count: 1,
                });
            }
            Ok(record) => {
                if state.admitted.contains(&record.sent_id) || state.queued(&record.sent_id) {
                    outcome.dead_letters.push(DeadLetter {
                        sent_id: record.sent_id.clone(),
                        reason: "DUPLICATE".to_string(),
                        attempt_count: 1,
                        raw: (*raw).to_string(),
                    });
                } else {
                    let sentence = record_to_sentence(&record, Origin::Batch);
                    match rejection_reason(&record, &sentence, schema) {
                        None => {
                            state.admitted.push(record.sent_id.clone());
                            outcome.admitted.push(sentence);
                        }
                        Some(reason) => {
                            state.retry_queue.push(RetryEntry {
                                sent_id: record.sent_id.clone(),
                                reason,
                                attempt_count: 1,
                            });
                        }
                    }
                }
            }
        }
        state.next_offset = idx as u64 + 1;
    }
    outcome
}

/// Applies replacement records to the retry queue.
///
/// Every replacement must target a currently queued id (its own `sent_id`,
/// or `replaces` for synthetic ids); otherwise the whole call fails with
/// `UNKNOWN_RETRY_ID` before any state changes. Valid replacements are
/// admitted with origin `retry`; invalid ones bump `attempt_count`, and an
/// entry whose count reaches `max_attempts` moves to the dead-letter list.
pub fn process_retries(
    input: &str,
    schema: &AnnotationSchema,
    state: &mut IngestState,
) -> Result<IngestOutcome, IngestError> {
    let records = stream_records(input);

    // validate the whole stream before touching state
    let mut parsed: Vec<(RawRecord, &str)> = Vec::new();
    let mut targets_seen = Vec::new();
    for raw in &records {
        let recovered = recover_json(raw);
        let record: RawRecord = serde_json::from_str(&recovered).map_err(|e| {
            IngestError::UnknownRetryId(format!("unparseable replacement record: {e}"))
        })?;
        let target = record.replaces.clone().unwrap_or_else(|| record.sent_id.clone());
        if !state.queued(&target) {
            return Err(IngestError::UnknownRetryId(target));
        }
        if targets_seen.contains(&target) {
            return Err(IngestError::UnknownRetryId(format!(
                "{target} targeted twice in one replacement stream"
            )));
        }
        targets_seen.push(target);
        parsed.push((record, raw));
    }

    let mut outcome = IngestOutcome::default();
    for (record, raw) in parsed {
        let target = record.replaces.clone().unwrap_or_else(|| record.sent_id.clone());
        let pos = state
            .retry_queue
            .iter()
            .position(|e| e.sent_id == target)
            .expect("validated above");

        let duplicate = state.admitted.contains(&record.sent_id);
        let sentence = record_to_sentence(&record, Origin::Retry);
        let reason = if duplicate {
            Some("DUPLICATE".to_string())
        } else {
            rejection_reason(&record, &sentence, schema)
        };

        match reason {
            None => {
                state.retry_queue.remove(pos);
                state.admitted.push(record.sent_id.clone());
                outcome.admitted.push(sentence);
            }
            Some(reason) => {
                let entry = &mut state.retry_queue[pos];
                entry.attempt_count += 1;
                entry.reason = reason.clone();
                if entry.attempt_count >= state.max_attempts {
                    let entry = state.retry_queue.remove(pos);
                    outcome.dead_letters.push(DeadLetter {
                        sent_id: entry.sent_id,
                        reason,
                        attempt_count: entry.attempt_count,
                        raw: raw.to_string(),
                    });
                }
            }
        }
    }
    Ok(outcome)
}
