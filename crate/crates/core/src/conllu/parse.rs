//! CoNLL-U parsing.
//!
//! Rows with ten tab-separated columns and a plain integer id become
//! [`Token`]s; multiword-token ranges (`3-4`), empty nodes (`5.1`), and
//! comment lines inside the token block are kept verbatim as pass-through
//! rows. Malformed rows are fatal under [`Strictness::Strict`] and are
//! skipped (with a `BAD_FIELD_COUNT` issue) under [`Strictness::Lenient`].

use std::fs;
use std::path::Path;

use super::{
    split_comment_kv, ConlluError, IssueCode, Origin, Pairs, PassthroughRow, Sentence, Severity,
    Strictness, Token, Treebank, ValidationIssue,
};

/// A parsed treebank plus the row-level issues found while reading it.
#[derive(Debug)]
pub struct ParseResult {
    pub treebank: Treebank,
    pub issues: Vec<ValidationIssue>,
}

/// Parses an in-memory CoNLL-U document.
///
/// Input must already be valid UTF-8 (readers reject other encodings).
/// CRLF line endings are accepted; output is always LF.
pub fn parse_treebank(input: &str, profile: Strictness) -> Result<ParseResult, ConlluError> {
    let mut sentences = Vec::new();
    let mut issues = Vec::new();
    let mut builder = SentenceBuilder::new();

    for (idx, raw_line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);

        if line.trim().is_empty() {
            builder.flush(&mut sentences, &mut issues, profile)?;
            continue;
        }

        if line.starts_with('#') {
            if builder.tokens.is_empty() && builder.passthrough.is_empty() {
                builder.comments.push(line.to_string());
            } else {
                // comment inside the token block: preserve in place
                builder.passthrough.push(PassthroughRow {
                    raw: line.to_string(),
                    after_token: builder.tokens.len(),
                });
            }
            continue;
        }

        match classify_row(line) {
            RowKind::Token(token) => builder.tokens.push(token),
            RowKind::Passthrough => builder.passthrough.push(PassthroughRow {
                raw: line.to_string(),
                after_token: builder.tokens.len(),
            }),
            RowKind::Malformed(message) => {
                if profile == Strictness::Strict {
                    return Err(ConlluError::MalformedRow {
                        line: line_no,
                        message,
                    });
                }
                issues.push(ValidationIssue {
                    sent_id: builder.sent_id_hint(),
                    token_id: None,
                    code: IssueCode::BadFieldCount,
                    severity: Severity::Error,
                    message: format!("line {line_no}: {message} (row skipped)"),
                });
            }
        }
    }
    builder.flush(&mut sentences, &mut issues, profile)?;

    Ok(ParseResult {
        treebank: Treebank::new(sentences),
        issues,
    })
}

/// Reads and parses a CoNLL-U file.
pub fn parse_treebank_file(
    path: impl AsRef<Path>,
    profile: Strictness,
) -> Result<ParseResult, ConlluError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| ConlluError::Io {
        path: display.clone(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|_| ConlluError::InvalidUtf8 {
        path: display.clone(),
    })?;
    let mut result = parse_treebank(&text, profile)?;
    result.treebank.source_path = display;
    Ok(result)
}

enum RowKind {
    Token(Token),
    Passthrough,
    Malformed(String),
}

fn classify_row(line: &str) -> RowKind {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return RowKind::Malformed(format!(
            "expected 10 tab-separated columns, found {}",
            cols.len()
        ));
    }
    if let Some(pos) = cols.iter().position(|c| c.is_empty()) {
        return RowKind::Malformed(format!("column {} is empty", pos + 1));
    }

    let id_col = cols[0];
    if is_mwt_range(id_col) || is_empty_node(id_col) {
        return RowKind::Passthrough;
    }

    let id: usize = match id_col.parse() {
        Ok(v) if v >= 1 => v,
        _ => return RowKind::Malformed(format!("token id {id_col:?} is not a positive integer")),
    };
    let head: usize = match cols[6].parse() {
        Ok(v) => v,
        Err(_) => {
            return RowKind::Malformed(format!("head {:?} is not a non-negative integer", cols[6]))
        }
    };

    RowKind::Token(Token {
        id,
        form: cols[1].to_string(),
        lemma: cols[2].to_string(),
        upos: cols[3].to_string(),
        xpos: cols[4].to_string(),
        feats: Pairs::parse_column(cols[5]),
        head,
        deprel: cols[7].to_string(),
        deps: cols[8].to_string(),
        misc: Pairs::parse_column(cols[9]),
    })
}

fn is_mwt_range(col: &str) -> bool {
    match col.split_once('-') {
        Some((a, b)) => is_digits(a) && is_digits(b),
        None => false,
    }
}

fn is_empty_node(col: &str) -> bool {
    match col.split_once('.') {
        Some((a, b)) => is_digits(a) && is_digits(b),
        None => false,
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

struct SentenceBuilder {
    comments: Vec<String>,
    tokens: Vec<Token>,
    passthrough: Vec<PassthroughRow>,
}

impl SentenceBuilder {
    fn new() -> SentenceBuilder {
        SentenceBuilder {
            comments: Vec::new(),
            tokens: Vec::new(),
            passthrough: Vec::new(),
        }
    }

    fn sent_id_hint(&self) -> String {
        comment_value(&self.comments, "sent_id").unwrap_or_default()
    }

    fn flush(
        &mut self,
        sentences: &mut Vec<Sentence>,
        issues: &mut Vec<ValidationIssue>,
        profile: Strictness,
    ) -> Result<(), ConlluError> {
        if self.comments.is_empty() && self.tokens.is_empty() && self.passthrough.is_empty() {
            return Ok(());
        }
        let comments = std::mem::take(&mut self.comments);
        let tokens = std::mem::take(&mut self.tokens);
        let passthrough = std::mem::take(&mut self.passthrough);

        let sent_id = comment_value(&comments, "sent_id").unwrap_or_default();
        let text = comment_value(&comments, "text");
        let origin = comment_value(&comments, "origin")
            .map(|v| Origin::parse(&v))
            .unwrap_or(Origin::Unknown);

        let sequential = tokens.iter().enumerate().all(|(i, t)| t.id == i + 1);
        if !sequential {
            let message = format!("sentence {sent_id:?}: token ids are not 1..n in order");
            if profile == Strictness::Strict {
                return Err(ConlluError::MalformedRow { line: 0, message });
            }
            issues.push(ValidationIssue {
                sent_id: sent_id.clone(),
                token_id: None,
                code: IssueCode::BadFieldCount,
                severity: Severity::Error,
                message,
            });
        }

        sentences.push(Sentence {
            sent_id,
            text,
            origin,
            tokens,
            comments,
            passthrough,
        });
        Ok(())
    }
}

fn comment_value(comments: &[String], key: &str) -> Option<String> {
    comments.iter().find_map(|line| {
        split_comment_kv(line)
            .filter(|(k, _)| *k == key)
            .map(|(_, v)| v.to_string())
    })
}
