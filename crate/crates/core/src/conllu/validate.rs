//! Structural validation of sentences and treebanks.
//!
//! Checks operate on 1-based token positions. Pass-through rows (multiword
//! ranges, empty nodes) are never inspected.

use std::collections::{BTreeMap, BTreeSet};

use super::{IssueCode, Sentence, Severity, Strictness, Treebank, ValidationIssue};
use crate::schema::AnnotationSchema;

/// The 17 universal POS tags of UD v2, used when no schema is given.
pub const UD_V2_UPOS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

/// Severity of an issue code under a strictness profile.
///
/// The strict profile treats every structural and label problem as an
/// error; the lenient profile only fails on unresolvable heads and
/// malformed rows. Non-projectivity is informational in both.
pub fn severity_for(code: IssueCode, profile: Strictness) -> Severity {
    match (profile, code) {
        (_, IssueCode::NonprojectiveInfo) => Severity::Warning,
        (Strictness::Strict, _) => Severity::Error,
        (Strictness::Lenient, IssueCode::HeadOutOfRange | IssueCode::BadFieldCount) => {
            Severity::Error
        }
        (Strictness::Lenient, _) => Severity::Warning,
    }
}

fn issue(
    s: &Sentence,
    token_id: Option<usize>,
    code: IssueCode,
    profile: Strictness,
    message: String,
) -> ValidationIssue {
    ValidationIssue {
        sent_id: s.sent_id.clone(),
        token_id,
        code,
        severity: severity_for(code, profile),
        message,
    }
}

/// Validates one sentence: head range, root count, cycles, label sets, and
/// projectivity info. Issues are returned, never thrown.
///
/// Without a schema, UPOS is checked against [`UD_V2_UPOS`] and DEPREL is
/// not checked.
pub fn validate_sentence(
    s: &Sentence,
    profile: Strictness,
    schema: Option<&AnnotationSchema>,
) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let n = s.tokens.len();

    if n == 0 {
        issues.push(issue(
            s,
            None,
            IssueCode::NoRoot,
            profile,
            "sentence has no tokens".to_string(),
        ));
        return issues;
    }

    // heads are addressed by 1-based position
    let heads: Vec<usize> = s.tokens.iter().map(|t| t.head).collect();

    for (pos, &head) in heads.iter().enumerate() {
        if head > n {
            issues.push(issue(
                s,
                Some(pos + 1),
                IssueCode::HeadOutOfRange,
                profile,
                format!("head {head} out of range 0..{n}"),
            ));
        }
    }

    let roots: Vec<usize> = (1..=n).filter(|&p| heads[p - 1] == 0).collect();
    if roots.is_empty() {
        issues.push(issue(
            s,
            None,
            IssueCode::NoRoot,
            profile,
            "no token has head 0".to_string(),
        ));
    } else if roots.len() > 1 {
        issues.push(issue(
            s,
            None,
            IssueCode::MultiRoot,
            profile,
            format!("{} tokens have head 0: {:?}", roots.len(), roots),
        ));
    }

    for cycle in find_cycles(&heads) {
        let anchor = *cycle.iter().min().unwrap();
        issues.push(issue(
            s,
            Some(anchor),
            IssueCode::Cycle,
            profile,
            format!("head cycle through tokens {cycle:?}"),
        ));
    }

    let default_upos: BTreeSet<String> = UD_V2_UPOS.iter().map(|t| t.to_string()).collect();
    let upos_set = schema.map(|sc| &sc.upos_set).unwrap_or(&default_upos);
    for (pos, t) in s.tokens.iter().enumerate() {
        if !upos_set.contains(&t.upos) {
            issues.push(issue(
                s,
                Some(pos + 1),
                IssueCode::BadUpos,
                profile,
                format!("UPOS {:?} not in schema", t.upos),
            ));
        }
        if let Some(sc) = schema {
            if !sc.deprel_set.contains(&t.deprel) {
                issues.push(issue(
                    s,
                    Some(pos + 1),
                    IssueCode::BadDeprel,
                    profile,
                    format!("DEPREL {:?} not in schema", t.deprel),
                ));
            }
        }
    }

    for dep in nonprojective_tokens(&heads) {
        issues.push(issue(
            s,
            Some(dep),
            IssueCode::NonprojectiveInfo,
            profile,
            "arc crosses another arc".to_string(),
        ));
    }

    issues
}

/// Validates a whole treebank: the union of per-sentence issues plus
/// duplicate sent_id detection.
pub fn validate_treebank(
    tb: &Treebank,
    profile: Strictness,
    schema: Option<&AnnotationSchema>,
) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    for s in &tb.sentences {
        issues.extend(validate_sentence(s, profile, schema));
    }

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &tb.sentences {
        *counts.entry(s.sent_id.as_str()).or_default() += 1;
    }
    for (id, count) in counts {
        if count > 1 {
            issues.push(ValidationIssue {
                sent_id: id.to_string(),
                token_id: None,
                code: IssueCode::DuplicateSentId,
                severity: severity_for(IssueCode::DuplicateSentId, profile),
                message: format!("sent_id {id:?} used by {count} sentences"),
            });
        }
    }
    issues
}

/// Finds all head-pointer cycles. `heads[p-1]` is the head of position `p`;
/// pointers to 0 or out of range terminate a walk without forming a cycle.
///
/// Each node has one outgoing pointer, so cycles are disjoint; they are
/// returned in order of discovery with members listed along the cycle.
pub(crate) fn find_cycles(heads: &[usize]) -> Vec<Vec<usize>> {
    let n = heads.len();
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut color = vec![0u8; n + 1];
    let mut cycles = Vec::new();

    for start in 1..=n {
        if color[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut p = start;
        loop {
            color[p] = 1;
            path.push(p);
            let next = heads[p - 1];
            if next == 0 || next > n || color[next] == 2 {
                break;
            }
            if color[next] == 1 {
                let at = path.iter().position(|&q| q == next).unwrap();
                cycles.push(path[at..].to_vec());
                break;
            }
            p = next;
        }
        for &q in &path {
            color[q] = 2;
        }
    }
    cycles
}

/// Positions whose arc crosses at least one other arc.
fn nonprojective_tokens(heads: &[usize]) -> Vec<usize> {
    let n = heads.len();
    let arcs: Vec<(usize, usize, usize)> = (1..=n)
        .filter(|&d| heads[d - 1] >= 1 && heads[d - 1] <= n && heads[d - 1] != d)
        .map(|d| {
            let h = heads[d - 1];
            (d, d.min(h), d.max(h))
        })
        .collect();
    let mut out = Vec::new();
    for &(dep, lo, hi) in &arcs {
        let crosses = arcs.iter().any(|&(_, lo2, hi2)| {
            (lo < lo2 && lo2 < hi && hi < hi2) || (lo2 < lo && lo < hi2 && hi2 < hi)
        });
        if crosses {
            out.push(dep);
        }
    }
    out
}
