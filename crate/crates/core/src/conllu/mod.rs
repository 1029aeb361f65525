//! CoNLL-U data model, bit-exact reading/writing, and structural validation.
//!
//! The representation is deliberately lossless: comment lines are kept
//! verbatim, multiword-token ranges and empty-node rows are carried as
//! pass-through rows, and every column is stored as read, so
//! `serialize(parse(file))` reproduces the input byte for byte (modulo a
//! single trailing newline, which is always emitted).

mod parse;
mod validate;
mod write;

pub use parse::{parse_treebank, parse_treebank_file, ParseResult};
pub(crate) use validate::find_cycles;
pub use validate::{validate_sentence, validate_treebank, UD_V2_UPOS};
pub use write::{serialize_sentence, serialize_treebank};

use serde::{Deserialize, Serialize};

/// A `key=value` item from a FEATS or MISC column.
///
/// `value` is `None` for bare segments without `=`, which some treebanks
/// place in MISC; they serialize back without a separator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub key: String,
    pub value: Option<String>,
}

/// Ordered `|`-separated key/value list (FEATS, MISC).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pairs(pub Vec<Pair>);

impl Pairs {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|p| p.key == key)
            .and_then(|p| p.value.as_deref())
    }

    /// Parses a FEATS/MISC column; `_` maps to the empty list.
    pub fn parse_column(column: &str) -> Pairs {
        if column == "_" {
            return Pairs::default();
        }
        let items = column
            .split('|')
            .map(|seg| match seg.split_once('=') {
                Some((k, v)) => Pair {
                    key: k.to_string(),
                    value: Some(v.to_string()),
                },
                None => Pair {
                    key: seg.to_string(),
                    value: None,
                },
            })
            .collect();
        Pairs(items)
    }

    /// Serializes back to column form, preserving item order.
    pub fn to_column(&self) -> String {
        if self.0.is_empty() {
            return "_".to_string();
        }
        self.0
            .iter()
            .map(|p| match &p.value {
                Some(v) => format!("{}={}", p.key, v),
                None => p.key.clone(),
            })
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Inserts a synthesized pair keeping keys unique and sorted.
    ///
    /// Items parsed from input keep their original order; this is only for
    /// pairs the toolkit adds itself.
    pub fn insert_sorted(&mut self, key: &str, value: &str) {
        if let Some(existing) = self.0.iter_mut().find(|p| p.key == key) {
            existing.value = Some(value.to_string());
            return;
        }
        let pair = Pair {
            key: key.to_string(),
            value: Some(value.to_string()),
        };
        let pos = self
            .0
            .iter()
            .position(|p| p.key.as_str() > key)
            .unwrap_or(self.0.len());
        self.0.insert(pos, pair);
    }
}

/// One regular CoNLL-U token row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based id as read from the file.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Pairs,
    /// Head position; 0 is the root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: Pairs,
}

impl Token {
    /// A token with the given core fields and `_` everywhere else.
    pub fn new(id: usize, form: &str, upos: &str, head: usize, deprel: &str) -> Token {
        Token {
            id,
            form: form.to_string(),
            lemma: "_".to_string(),
            upos: upos.to_string(),
            xpos: "_".to_string(),
            feats: Pairs::default(),
            head,
            deprel: deprel.to_string(),
            deps: "_".to_string(),
            misc: Pairs::default(),
        }
    }
}

/// Provenance of a sentence in the annotation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Batch,
    Retry,
    Unknown,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Batch => "batch",
            Origin::Retry => "retry",
            Origin::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Origin {
        match s {
            "batch" => Origin::Batch,
            "retry" => Origin::Retry,
            _ => Origin::Unknown,
        }
    }
}

/// A non-token row kept verbatim inside the token block: a multiword-token
/// range (`n-m`), an empty node (`n.m`), or a stray comment line.
///
/// `after_token` counts how many regular tokens precede the row, so
/// serialization restores the original interleaving.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassthroughRow {
    pub raw: String,
    pub after_token: usize,
}

/// An ordered sentence: comment metadata plus token rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub sent_id: String,
    pub text: Option<String>,
    pub origin: Origin,
    pub tokens: Vec<Token>,
    /// Leading comment lines, verbatim (including the `#`).
    pub comments: Vec<String>,
    pub passthrough: Vec<PassthroughRow>,
}

impl Sentence {
    /// Builds a sentence from tokens, synthesizing the comment block.
    pub fn new(sent_id: &str, text: Option<&str>, origin: Origin, tokens: Vec<Token>) -> Sentence {
        let mut comments = vec![format!("# sent_id = {sent_id}")];
        if let Some(t) = text {
            comments.push(format!("# text = {t}"));
        }
        if origin != Origin::Unknown {
            comments.push(format!("# origin = {}", origin.as_str()));
        }
        Sentence {
            sent_id: sent_id.to_string(),
            text: text.map(str::to_string),
            origin,
            tokens,
            comments,
            passthrough: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Rewrites (or inserts) the `# origin = …` comment and the field.
    pub fn set_origin(&mut self, origin: Origin) {
        self.origin = origin;
        let line = format!("# origin = {}", origin.as_str());
        for c in &mut self.comments {
            if let Some((key, _)) = split_comment_kv(c) {
                if key == "origin" {
                    *c = line;
                    return;
                }
            }
        }
        self.comments.push(line);
    }
}

/// An ordered collection of sentences; the unit of freezing, splitting, and
/// scoring.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Treebank {
    pub sentences: Vec<Sentence>,
    pub source_path: String,
}

impl Treebank {
    pub fn new(sentences: Vec<Sentence>) -> Treebank {
        Treebank {
            sentences,
            source_path: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sent_ids(&self) -> Vec<String> {
        self.sentences.iter().map(|s| s.sent_id.clone()).collect()
    }

    pub fn get(&self, sent_id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.sent_id == sent_id)
    }
}

/// Validation strictness profile.
///
/// `Strict` models UD-conformant tree checking; `Lenient` models scorers
/// that only require resolvable heads and well-formed rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    Cycle,
    MultiRoot,
    NoRoot,
    HeadOutOfRange,
    BadUpos,
    BadDeprel,
    BadFieldCount,
    DuplicateSentId,
    NonprojectiveInfo,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::Cycle => "CYCLE",
            IssueCode::MultiRoot => "MULTI_ROOT",
            IssueCode::NoRoot => "NO_ROOT",
            IssueCode::HeadOutOfRange => "HEAD_OUT_OF_RANGE",
            IssueCode::BadUpos => "BAD_UPOS",
            IssueCode::BadDeprel => "BAD_DEPREL",
            IssueCode::BadFieldCount => "BAD_FIELD_COUNT",
            IssueCode::DuplicateSentId => "DUPLICATE_SENT_ID",
            IssueCode::NonprojectiveInfo => "NONPROJECTIVE_INFO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One finding from validation; the severity is a deterministic function of
/// the code and the strictness profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub sent_id: String,
    pub token_id: Option<usize>,
    pub code: IssueCode,
    pub severity: Severity,
    pub message: String,
}

/// Errors from parsing or file handling.
#[derive(Debug, thiserror::Error)]
pub enum ConlluError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8")]
    InvalidUtf8 { path: String },
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },
}

/// Splits a `# key = value` comment into `(key, value)`.
pub(crate) fn split_comment_kv(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?;
    let (key, value) = body.split_once('=')?;
    Some((key.trim(), value.trim()))
}
