//! OCR-aware text reconstruction applied before annotation.
//!
//! Three rewrite operations — dehyphenation, lexicon-gated split-word
//! joining, and sentence-boundary punctuation cleanup — plus a flagging
//! pass for overlong enumerative sentences. Every rule is conservative:
//! it fires only on positive evidence, and every change is recorded in an
//! audit trail so reported counts can be replayed.
//!
//! All operations are idempotent: applying one twice equals applying it
//! once.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::conllu::Treebank;

/// Tuning knobs for the reconstruction passes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructionConfig {
    /// Characters treated as line-break hyphens at end of line.
    pub hyphen_chars: BTreeSet<char>,
    /// Maximum distance in lines a dehyphenation merge may span;
    /// 0 disables merging, 1 merges a line with the one directly below.
    pub max_join_gap: usize,
    /// Token count above which a sentence is flagged as overlong. Must be > 0.
    pub enum_split_threshold: usize,
    /// Sentence-final punctuation characters.
    pub boundary_punct: BTreeSet<char>,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            // '-' hyphen-minus, '\u{2010}' hyphen, '\u{00AD}' soft hyphen
            hyphen_chars: ['-', '\u{2010}', '\u{00AD}'].into_iter().collect(),
            max_join_gap: 1,
            enum_split_threshold: 120,
            boundary_punct: ['.', ';', '\u{0387}', '!', '?'].into_iter().collect(),
        }
    }
}

/// Which rewrite produced an audit entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionRule {
    Dehyphenate,
    JoinSplitWords,
    BoundaryPunct,
}

/// One applied rewrite: where it happened and what changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub rule: ReconstructionRule,
    /// 1-based line number in the input.
    pub line: usize,
    pub before: String,
    pub after: String,
}

/// Counts plus the audit trail that justifies them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub joins_performed: usize,
    pub hyphens_removed: usize,
    pub boundary_fixes: usize,
    pub long_sentences_flagged: usize,
    pub audit: Vec<AuditEntry>,
}

impl ReconstructionReport {
    /// Records one rewrite, keeping each counter equal to the number of
    /// audit entries for its rule.
    fn record(&mut self, rule: ReconstructionRule, line: usize, before: &str, after: &str) {
        match rule {
            ReconstructionRule::Dehyphenate => self.hyphens_removed += 1,
            ReconstructionRule::JoinSplitWords => self.joins_performed += 1,
            ReconstructionRule::BoundaryPunct => self.boundary_fixes += 1,
        }
        self.audit.push(AuditEntry {
            rule,
            line,
            before: before.to_string(),
            after: after.to_string(),
        });
    }

    /// Merges another report into this one (audit lines are kept as-is).
    pub fn merge(&mut self, other: ReconstructionReport) {
        self.joins_performed += other.joins_performed;
        self.hyphens_removed += other.hyphens_removed;
        self.boundary_fixes += other.boundary_fixes;
        self.long_sentences_flagged += other.long_sentences_flagged;
        self.audit.extend(other.audit);
    }
}

fn ends_with_hyphen(line: &str, cfg: &ReconstructionConfig) -> bool {
    line.chars().last().is_some_and(|c| cfg.hyphen_chars.contains(&c))
}

fn starts_with_letter(line: &str) -> bool {
    line.chars().next().is_some_and(|c| c.is_alphabetic())
}

/// Merges lines broken by end-of-line hyphens.
///
/// A line whose last character is a hyphen character merges with the next
/// line when that line starts with a letter; the hyphen and the line break
/// are removed and nothing else changes. Blank lines block merges. Chains
/// of hyphenated lines resolve in a single pass.
pub fn dehyphenate(
    lines: &[String],
    cfg: &ReconstructionConfig,
) -> (Vec<String>, ReconstructionReport) {
    let mut report = ReconstructionReport::default();
    if cfg.max_join_gap == 0 {
        return (lines.to_vec(), report);
    }

    let mut out = Vec::with_capacity(lines.len());
    let mut i = 0;
    while i < lines.len() {
        let mut cur = lines[i].clone();
        while i + 1 < lines.len()
            && ends_with_hyphen(&cur, cfg)
            && starts_with_letter(&lines[i + 1])
        {
            let next = &lines[i + 1];
            let before = format!("{cur}\n{next}");
            let mut merged: String = cur.chars().collect();
            merged.pop();
            merged.push_str(next);
            // the hyphen sits at the end of original line i (0-based)
            report.record(ReconstructionRule::Dehyphenate, i + 1, &before, &merged);
            cur = merged;
            i += 1;
        }
        out.push(cur);
        i += 1;
    }
    (out, report)
}

/// Joins adjacent in-line fragments `A B` into `AB` when the lexicon
/// contains `AB` but neither `A` nor `B`. Without a lexicon this is the
/// identity.
///
/// A joined word is itself in the lexicon, so it can never be a fragment
/// of a further join — one left-to-right pass is idempotent.
pub fn join_split_words(
    lines: &[String],
    _cfg: &ReconstructionConfig,
    lexicon: Option<&BTreeSet<String>>,
) -> (Vec<String>, ReconstructionReport) {
    let mut report = ReconstructionReport::default();
    let Some(lexicon) = lexicon else {
        return (lines.to_vec(), report);
    };

    let mut out = Vec::with_capacity(lines.len());
    for (idx, line) in lines.iter().enumerate() {
        // byte spans of whitespace-separated words
        let spans: Vec<(usize, usize)> = {
            let mut spans = Vec::new();
            let mut start = None;
            for (pos, ch) in line.char_indices() {
                if ch.is_whitespace() {
                    if let Some(s) = start.take() {
                        spans.push((s, pos));
                    }
                } else if start.is_none() {
                    start = Some(pos);
                }
            }
            if let Some(s) = start {
                spans.push((s, line.len()));
            }
            spans
        };

        let mut rebuilt = String::with_capacity(line.len());
        let mut cursor = 0; // byte position in `line` copied so far
        let mut k = 0;
        while k < spans.len() {
            let (a_start, a_end) = spans[k];
            let joined = if k + 1 < spans.len() {
                let (b_start, b_end) = spans[k + 1];
                let a = &line[a_start..a_end];
                let b = &line[b_start..b_end];
                let ab = format!("{a}{b}");
                if lexicon.contains(&ab) && !lexicon.contains(a) && !lexicon.contains(b) {
                    rebuilt.push_str(&line[cursor..a_start]);
                    rebuilt.push_str(&ab);
                    report.record(
                        ReconstructionRule::JoinSplitWords,
                        idx + 1,
                        &line[a_start..b_end],
                        &ab,
                    );
                    cursor = b_end;
                    k += 2;
                    true
                } else {
                    false
                }
            } else {
                false
            };
            if !joined {
                rebuilt.push_str(&line[cursor..a_end]);
                cursor = a_end;
                k += 1;
            }
        }
        rebuilt.push_str(&line[cursor..]);
        out.push(rebuilt);
    }
    (out, report)
}

fn is_inline_space(c: char) -> bool {
    c == ' ' || c == '\t'
}

/// Removes spaces and tabs standing directly before a boundary character.
fn strip_space_before_punct(
    text: &str,
    cfg: &ReconstructionConfig,
    report: &mut ReconstructionReport,
) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut line = 1;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_inline_space(c) {
            let mut j = i;
            while j < chars.len() && is_inline_space(chars[j]) {
                j += 1;
            }
            if j < chars.len() && cfg.boundary_punct.contains(&chars[j]) {
                let before: String = chars[i..=j].iter().collect();
                report.record(
                    ReconstructionRule::BoundaryPunct,
                    line,
                    &before,
                    &chars[j].to_string(),
                );
                i = j; // drop the whitespace run, keep the punct
                continue;
            }
            out.extend(&chars[i..j]);
            i = j;
            continue;
        }
        if c == '\n' {
            line += 1;
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Collapses runs of one repeated boundary character to a single one.
fn collapse_identical_punct(
    text: &str,
    cfg: &ReconstructionConfig,
    report: &mut ReconstructionReport,
) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut line = 1;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
        }
        if cfg.boundary_punct.contains(&c) {
            let mut j = i;
            while j < chars.len() && chars[j] == c {
                j += 1;
            }
            if j - i > 1 {
                let before: String = chars[i..j].iter().collect();
                report.record(
                    ReconstructionRule::BoundaryPunct,
                    line,
                    &before,
                    &c.to_string(),
                );
            }
            out.push(c);
            i = j;
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Ensures exactly one space between a boundary character and a following
/// letter (inserting or collapsing spaces/tabs; newlines are left alone).
fn space_after_punct(
    text: &str,
    cfg: &ReconstructionConfig,
    report: &mut ReconstructionReport,
) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut line = 1;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
        }
        out.push(c);
        if cfg.boundary_punct.contains(&c) {
            let mut j = i + 1;
            while j < chars.len() && is_inline_space(chars[j]) {
                j += 1;
            }
            if j < chars.len() && chars[j].is_alphabetic() {
                let gap_ok = j == i + 2 && chars[i + 1] == ' ';
                if !gap_ok {
                    let before: String = chars[i..=j].iter().collect();
                    let after = format!("{} {}", c, chars[j]);
                    report.record(ReconstructionRule::BoundaryPunct, line, &before, &after);
                }
                out.push(' ');
                out.push(chars[j]);
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Cleans punctuation around sentence boundaries, in three ordered steps:
/// drop whitespace before a boundary character, collapse runs of one
/// repeated boundary character, then guarantee exactly one space between a
/// boundary character and a following letter. The composite is idempotent.
pub fn normalize_boundary_punct(
    text: &str,
    cfg: &ReconstructionConfig,
) -> (String, ReconstructionReport) {
    let mut report = ReconstructionReport::default();
    let step1 = strip_space_before_punct(text, cfg, &mut report);
    let step2 = collapse_identical_punct(&step1, cfg, &mut report);
    let step3 = space_after_punct(&step2, cfg, &mut report);
    (step3, report)
}

/// Returns the ids of sentences whose token count exceeds
/// `enum_split_threshold`. Flagging only; nothing is rewritten.
pub fn flag_long_sentences(tb: &Treebank, cfg: &ReconstructionConfig) -> Vec<String> {
    assert!(cfg.enum_split_threshold > 0, "threshold must be positive");
    tb.sentences
        .iter()
        .filter(|s| s.tokens.len() > cfg.enum_split_threshold)
        .map(|s| s.sent_id.clone())
        .collect()
}
