//! CoNLL-U serialization.
//!
//! Output always uses LF line endings and ends each sentence with a blank
//! line, matching the usual on-disk layout of `.conllu` files.

use super::{Sentence, Token, Treebank};

/// Serializes one token to its ten-column row.
pub fn token_line(t: &Token) -> String {
    [
        t.id.to_string(),
        t.form.clone(),
        t.lemma.clone(),
        t.upos.clone(),
        t.xpos.clone(),
        t.feats.to_column(),
        t.head.to_string(),
        t.deprel.clone(),
        t.deps.clone(),
        t.misc.to_column(),
    ]
    .join("\t")
}

/// Serializes a sentence block: comments, then token and pass-through rows
/// in their original interleaving. No trailing blank line.
pub fn serialize_sentence(s: &Sentence) -> String {
    let mut lines: Vec<String> = s.comments.clone();
    let mut pass = s.passthrough.iter().peekable();
    for k in 0..=s.tokens.len() {
        while pass.peek().is_some_and(|p| p.after_token == k) {
            lines.push(pass.next().unwrap().raw.clone());
        }
        if k < s.tokens.len() {
            lines.push(token_line(&s.tokens[k]));
        }
    }
    lines.join("\n")
}

/// Serializes a whole treebank; each sentence is followed by one blank
/// line, and the empty treebank serializes to the empty string.
pub fn serialize_treebank(tb: &Treebank) -> String {
    let mut out = String::new();
    for s in &tb.sentences {
        out.push_str(&serialize_sentence(s));
        out.push('\n');
        out.push('\n');
    }
    out
}
