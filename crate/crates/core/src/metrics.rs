//! The four evaluation measures over aligned gold/predicted treebanks:
//! UPOS accuracy, weighted DEPREL F1, UAS, and LAS — plus report diffing.
//!
//! All metrics are ratios of integer counts gathered in a single pass, so
//! they can be materialized in any [`MetricScalar`]: `f64` for reports,
//! `num::BigRational` for exact oracle checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::Treebank;
use crate::scalar::{ratio, MetricScalar};

/// Errors from alignment checking and report construction.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ALIGNMENT_MISMATCH: {0}")]
    AlignmentMismatch(String),
    #[error("no tokens to evaluate")]
    EmptyInput,
}

/// Scoring options.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetricsOptions {
    /// Compare DEPREL truncated at the first ':' (universal part only).
    pub universal_deprel_only: bool,
    /// Drop tokens whose gold UPOS is PUNCT from every count.
    pub exclude_punct: bool,
}

/// Proof that two treebanks are comparable: same sentences in the same
/// order with the same token boundaries. Metrics only accept this handle,
/// so the precondition is encoded in the type.
#[derive(Debug)]
pub struct Alignment<'a> {
    gold: &'a Treebank,
    pred: &'a Treebank,
}

/// Verifies sentence-by-sentence, token-by-token comparability.
/// The first offending sentence and position is named in the error.
pub fn check_alignment<'a>(
    gold: &'a Treebank,
    pred: &'a Treebank,
) -> Result<Alignment<'a>, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::AlignmentMismatch(format!(
            "sentence counts differ: gold {} vs pred {}",
            gold.len(),
            pred.len()
        )));
    }
    for (g, p) in gold.sentences.iter().zip(&pred.sentences) {
        if g.sent_id != p.sent_id {
            return Err(MetricsError::AlignmentMismatch(format!(
                "sent_id order differs: gold {:?} vs pred {:?}",
                g.sent_id, p.sent_id
            )));
        }
        if g.tokens.len() != p.tokens.len() {
            return Err(MetricsError::AlignmentMismatch(format!(
                "sentence {:?}: token counts differ: gold {} vs pred {}",
                g.sent_id,
                g.tokens.len(),
                p.tokens.len()
            )));
        }
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            if gt.form != pt.form {
                return Err(MetricsError::AlignmentMismatch(format!(
                    "sentence {:?} token {}: FORM differs: gold {:?} vs pred {:?}",
                    g.sent_id, gt.id, gt.form, pt.form
                )));
            }
        }
    }
    Ok(Alignment { gold, pred })
}

#[derive(Debug, Default, Clone)]
struct LabelCounts {
    tp: u64,
    fp: u64,
    fn_: u64,
    gold_support: u64,
}

#[derive(Debug, Default, Clone)]
struct Counts {
    tokens: u64,
    sentences: u64,
    upos_correct: u64,
    head_correct: u64,
    head_label_correct: u64,
    labels: BTreeMap<String, LabelCounts>,
}

fn effective_deprel<'t>(deprel: &'t str, opts: &MetricsOptions) -> &'t str {
    if opts.universal_deprel_only {
        deprel.split(':').next().unwrap_or(deprel)
    } else {
        deprel
    }
}

/// The single counting pass every metric is derived from.
fn count(al: &Alignment, opts: &MetricsOptions) -> Counts {
    let mut c = Counts {
        sentences: al.gold.len() as u64,
        ..Counts::default()
    };
    for (g, p) in al.gold.sentences.iter().zip(&al.pred.sentences) {
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            if opts.exclude_punct && gt.upos == "PUNCT" {
                continue;
            }
            c.tokens += 1;
            if gt.upos == pt.upos {
                c.upos_correct += 1;
            }
            let gold_label = effective_deprel(&gt.deprel, opts);
            let pred_label = effective_deprel(&pt.deprel, opts);
            let head_ok = gt.head == pt.head;
            if head_ok {
                c.head_correct += 1;
                if gold_label == pred_label {
                    c.head_label_correct += 1;
                }
            }
            if gold_label == pred_label {
                let e = c.labels.entry(gold_label.to_string()).or_default();
                e.tp += 1;
                e.gold_support += 1;
            } else {
                c.labels.entry(gold_label.to_string()).or_default().fn_ += 1;
                c.labels
                    .entry(gold_label.to_string())
                    .or_default()
                    .gold_support += 1;
                c.labels.entry(pred_label.to_string()).or_default().fp += 1;
            }
        }
    }
    c
}

fn nonempty(c: &Counts) -> Result<(), MetricsError> {
    if c.tokens == 0 {
        Err(MetricsError::EmptyInput)
    } else {
        Ok(())
    }
}

/// Fraction of tokens with the gold UPOS tag.
pub fn upos_accuracy<T: MetricScalar>(
    al: &Alignment,
    opts: &MetricsOptions,
) -> Result<T, MetricsError> {
    let c = count(al, opts);
    nonempty(&c)?;
    Ok(ratio(c.upos_correct, c.tokens))
}

/// Unlabeled attachment score: fraction of tokens with the gold head.
pub fn uas<T: MetricScalar>(al: &Alignment, opts: &MetricsOptions) -> Result<T, MetricsError> {
    let c = count(al, opts);
    nonempty(&c)?;
    Ok(ratio(c.head_correct, c.tokens))
}

/// Labeled attachment score: fraction of tokens with gold head AND gold
/// relation label.
pub fn las<T: MetricScalar>(al: &Alignment, opts: &MetricsOptions) -> Result<T, MetricsError> {
    let c = count(al, opts);
    nonempty(&c)?;
    Ok(ratio(c.head_label_correct, c.tokens))
}

/// Precision/recall/F1 for one relation label, with its gold support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub gold_support: u64,
}

fn f1_of<T: MetricScalar>(lc: &LabelCounts) -> LabelScore<T> {
    let precision: T = ratio(lc.tp, lc.tp + lc.fp);
    let recall: T = ratio(lc.tp, lc.tp + lc.fn_);
    let denom = precision.clone() + recall.clone();
    let f1 = if denom.is_zero() {
        T::zero()
    } else {
        let two = T::one() + T::one();
        two * precision.clone() * recall.clone() / denom
    };
    LabelScore {
        precision,
        recall,
        f1,
        gold_support: lc.gold_support,
    }
}

/// Label-only classification F1 (heads ignored), averaged with gold-support
/// weights. Labels predicted but absent from gold appear in the map with
/// support 0 and weight 0.
pub fn deprel_weighted_f1<T: MetricScalar>(
    al: &Alignment,
    opts: &MetricsOptions,
) -> Result<(T, BTreeMap<String, LabelScore<T>>), MetricsError> {
    let c = count(al, opts);
    nonempty(&c)?;
    Ok(weighted_f1_from(&c))
}

fn weighted_f1_from<T: MetricScalar>(c: &Counts) -> (T, BTreeMap<String, LabelScore<T>>) {
    let mut per_label = BTreeMap::new();
    // Σ support·F1, divided once at the end: distributively equal to
    // Σ (support/tokens)·F1, but exact when every F1 is exactly 1 (the
    // identity case must score exactly 1.0 even in floating point).
    let mut weighted_sum = T::zero();
    for (label, lc) in &c.labels {
        let score: LabelScore<T> = f1_of(lc);
        let support = T::from_u64(lc.gold_support).expect("support fits the scalar");
        weighted_sum = weighted_sum + support * score.f1.clone();
        per_label.insert(label.clone(), score);
    }
    let tokens = T::from_u64(c.tokens).expect("token count fits the scalar");
    let weighted = if c.tokens == 0 { T::zero() } else { weighted_sum / tokens };
    (weighted, per_label)
}

/// The full four-metric report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    #[serde(rename = "upos")]
    pub upos_accuracy: T,
    #[serde(rename = "deprel_f1")]
    pub deprel_weighted_f1: T,
    pub uas: T,
    pub las: T,
    #[serde(rename = "tokens")]
    pub token_count: u64,
    #[serde(rename = "sentences")]
    pub sentence_count: u64,
    pub per_label: BTreeMap<String, LabelScore<T>>,
}

/// Computes all four metrics from one counting pass.
pub fn evaluate<T: MetricScalar>(
    al: &Alignment,
    opts: &MetricsOptions,
) -> Result<EvalReport<T>, MetricsError> {
    let c = count(al, opts);
    nonempty(&c)?;
    let (weighted, per_label) = weighted_f1_from(&c);
    Ok(EvalReport {
        upos_accuracy: ratio(c.upos_correct, c.tokens),
        deprel_weighted_f1: weighted,
        uas: ratio(c.head_correct, c.tokens),
        las: ratio(c.head_label_correct, c.tokens),
        token_count: c.tokens,
        sentence_count: c.sentences,
        per_label,
    })
}

/// Absolute and relative change of one metric from report `a` to report
/// `b`; relative is undefined (None/null) when the base is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta<T> {
    pub absolute: T,
    pub relative: Option<T>,
}

fn delta_of<T: MetricScalar>(a: &T, b: &T) -> MetricDelta<T> {
    let absolute = b.clone() - a.clone();
    let relative = if *a > T::zero() {
        Some(absolute.clone() / a.clone())
    } else {
        None
    };
    MetricDelta { absolute, relative }
}

/// Per-metric differences between two reports (`b` minus `a`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta<T> {
    pub upos: MetricDelta<T>,
    pub deprel_f1: MetricDelta<T>,
    pub uas: MetricDelta<T>,
    pub las: MetricDelta<T>,
}

/// Diffs two reports metric-by-metric: absolute = b − a, relative =
/// absolute / a when a > 0.
pub fn diff_reports<T: MetricScalar>(a: &EvalReport<T>, b: &EvalReport<T>) -> ReportDelta<T> {
    ReportDelta {
        upos: delta_of(&a.upos_accuracy, &b.upos_accuracy),
        deprel_f1: delta_of(&a.deprel_weighted_f1, &b.deprel_weighted_f1),
        uas: delta_of(&a.uas, &b.uas),
        las: delta_of(&a.las, &b.las),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{Origin, Sentence, Token, Treebank};
    use num::rational::BigRational;
    use num::FromPrimitive;

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// One sentence whose tokens carry the given (upos, head, deprel).
    fn tb(rows: &[(&str, usize, &str)]) -> Treebank {
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, (upos, head, deprel))| {
                Token::new(i + 1, &format!("w{}", i + 1), upos, *head, deprel)
            })
            .collect();
        Treebank::new(vec![Sentence::new("s1", None, Origin::Unknown, tokens)])
    }

    #[test]
    fn identical_input_scores_all_ones() {
        let gold = tb(&[("NOUN", 2, "nsubj"), ("VERB", 0, "root"), ("NOUN", 2, "obj")]);
        let al = check_alignment(&gold, &gold).unwrap();
        let report: EvalReport<BigRational> = evaluate(&al, &MetricsOptions::default()).unwrap();
        let one = BigRational::from_i64(1).unwrap();
        assert_eq!(report.upos_accuracy, one);
        assert_eq!(report.deprel_weighted_f1, one);
        assert_eq!(report.uas, one);
        assert_eq!(report.las, one);
        assert_eq!(report.token_count, 3);
        assert_eq!(report.sentence_count, 1);
        assert!(report.per_label.values().all(|s| s.f1 == one));
    }

    #[test]
    fn upos_accuracy_hand_count() {
        let gold = tb(&[("NOUN", 0, "root"), ("VERB", 1, "dep"), ("NOUN", 1, "dep")]);
        let pred = tb(&[("NOUN", 0, "root"), ("VERB", 1, "dep"), ("ADJ", 1, "dep")]);
        let al = check_alignment(&gold, &pred).unwrap();
        let acc: BigRational = upos_accuracy(&al, &MetricsOptions::default()).unwrap();
        assert_eq!(acc, rational(2, 3));
    }

    #[test]
    fn attachment_scores_hand_count() {
        // heads gold [2,0,2] vs pred [2,0,1], labels all equal
        let gold = tb(&[("NOUN", 2, "nsubj"), ("VERB", 0, "root"), ("NOUN", 2, "obj")]);
        let pred = tb(&[("NOUN", 2, "nsubj"), ("VERB", 0, "root"), ("NOUN", 1, "obj")]);
        let al = check_alignment(&gold, &pred).unwrap();
        let u: BigRational = uas(&al, &MetricsOptions::default()).unwrap();
        let l: BigRational = las(&al, &MetricsOptions::default()).unwrap();
        assert_eq!(u, rational(2, 3));
        assert_eq!(l, rational(2, 3));
    }

    #[test]
    fn las_counts_label_mismatch_on_correct_head() {
        // heads all correct, one of 4 labels wrong
        let gold = tb(&[
            ("NOUN", 2, "nsubj"),
            ("VERB", 0, "root"),
            ("NOUN", 2, "obj"),
            ("PUNCT", 2, "punct"),
        ]);
        let pred = tb(&[
            ("NOUN", 2, "nsubj"),
            ("VERB", 0, "root"),
            ("NOUN", 2, "iobj"),
            ("PUNCT", 2, "punct"),
        ]);
        let al = check_alignment(&gold, &pred).unwrap();
        let u: BigRational = uas(&al, &MetricsOptions::default()).unwrap();
        let l: BigRational = las(&al, &MetricsOptions::default()).unwrap();
        assert_eq!(u, rational(1, 1));
        assert_eq!(l, rational(3, 4));
    }

    #[test]
    fn weighted_f1_worked_example() {
        // gold labels [nsubj,obj,obj], pred [nsubj,obj,nsubj]
        let gold = tb(&[("NOUN", 0, "nsubj"), ("NOUN", 1, "obj"), ("NOUN", 1, "obj")]);
        let pred = tb(&[("NOUN", 0, "nsubj"), ("NOUN", 1, "obj"), ("NOUN", 1, "nsubj")]);
        let al = check_alignment(&gold, &pred).unwrap();
        let (weighted, per_label): (BigRational, _) =
            deprel_weighted_f1(&al, &MetricsOptions::default()).unwrap();
        assert_eq!(weighted, rational(2, 3));
        assert_eq!(per_label["nsubj"].f1, rational(2, 3));
        assert_eq!(per_label["obj"].f1, rational(2, 3));
        assert_eq!(per_label["nsubj"].gold_support, 1);
        assert_eq!(per_label["obj"].gold_support, 2);

        let (weighted_f, _): (f64, _) =
            deprel_weighted_f1(&al, &MetricsOptions::default()).unwrap();
        assert!((weighted_f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn predicted_only_label_has_zero_weight() {
        let gold = tb(&[("NOUN", 0, "root"), ("NOUN", 1, "obj")]);
        let pred = tb(&[("NOUN", 0, "root"), ("NOUN", 1, "xcomp")]);
        let al = check_alignment(&gold, &pred).unwrap();
        let (_, per_label): (BigRational, _) =
            deprel_weighted_f1(&al, &MetricsOptions::default()).unwrap();
        assert_eq!(per_label["xcomp"].gold_support, 0);
        assert_eq!(per_label["xcomp"].f1, rational(0, 1));
    }

    #[test]
    fn alignment_rejects_shape_mismatches() {
        let gold = tb(&[("NOUN", 0, "root"), ("VERB", 1, "dep")]);
        let missing = Treebank::new(vec![]);
        assert!(check_alignment(&gold, &missing).is_err());

        let mut renamed = tb(&[("NOUN", 0, "root"), ("VERB", 1, "dep")]);
        renamed.sentences[0].sent_id = "other".to_string();
        assert!(check_alignment(&gold, &renamed).is_err());

        let mut reformed = tb(&[("NOUN", 0, "root"), ("VERB", 1, "dep")]);
        reformed.sentences[0].tokens[1].form = "άλλο".to_string();
        let err = check_alignment(&gold, &reformed).unwrap_err();
        assert!(err.to_string().contains("token 2"));
    }

    #[test]
    fn empty_input_is_an_error() {
        let empty = Treebank::new(vec![]);
        let al = check_alignment(&empty, &empty).unwrap();
        assert!(matches!(
            evaluate::<f64>(&al, &MetricsOptions::default()),
            Err(MetricsError::EmptyInput)
        ));
    }

    #[test]
    fn universal_truncation_and_punct_exclusion() {
        let gold = tb(&[("NOUN", 2, "nsubj:pass"), ("VERB", 0, "root"), ("PUNCT", 2, "punct")]);
        let pred = tb(&[("NOUN", 2, "nsubj"), ("VERB", 0, "root"), ("PUNCT", 1, "punct")]);
        let al = check_alignment(&gold, &pred).unwrap();

        let plain: EvalReport<BigRational> =
            evaluate(&al, &MetricsOptions::default()).unwrap();
        assert_eq!(plain.las, rational(1, 3)); // nsubj:pass ≠ nsubj, punct head wrong

        let universal: EvalReport<BigRational> = evaluate(
            &al,
            &MetricsOptions {
                universal_deprel_only: true,
                ..MetricsOptions::default()
            },
        )
        .unwrap();
        assert_eq!(universal.las, rational(2, 3));

        let no_punct: EvalReport<BigRational> = evaluate(
            &al,
            &MetricsOptions {
                universal_deprel_only: true,
                exclude_punct: true,
            },
        )
        .unwrap();
        assert_eq!(no_punct.token_count, 2);
        assert_eq!(no_punct.las, rational(2, 2));
    }

    #[test]
    fn report_round_trips_with_pinned_keys() {
        let gold = tb(&[("NOUN", 0, "root"), ("VERB", 1, "obj")]);
        let al = check_alignment(&gold, &gold).unwrap();
        let report: EvalReport<f64> = evaluate(&al, &MetricsOptions::default()).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        for key in ["\"upos\"", "\"deprel_f1\"", "\"uas\"", "\"las\"", "\"tokens\"", "\"sentences\"", "\"per_label\""] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back: EvalReport<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    fn report_with_las(las: f64) -> EvalReport<f64> {
        EvalReport {
            upos_accuracy: 0.5,
            deprel_weighted_f1: 0.5,
            uas: 0.5,
            las,
            token_count: 100,
            sentence_count: 10,
            per_label: BTreeMap::new(),
        }
    }

    #[test]
    fn diff_matches_published_delta_arithmetic() {
        let a = report_with_las(0.4183);
        let b = report_with_las(0.5162);
        let delta = diff_reports(&a, &b);
        assert!((delta.las.absolute - 0.0979).abs() < 1e-12);
        let rel = delta.las.relative.unwrap();
        assert!((rel - 0.2340).abs() < 5e-4);
    }

    #[test]
    fn diff_of_identical_reports_is_zero() {
        let a = report_with_las(0.4183);
        let delta = diff_reports(&a, &a);
        assert_eq!(delta.las.absolute, 0.0);
        assert_eq!(delta.las.relative, Some(0.0));
        assert_eq!(delta.upos.absolute, 0.0);
    }

    #[test]
    fn diff_with_zero_base_has_null_relative() {
        let a = report_with_las(0.0);
        let b = report_with_las(0.5);
        let delta = diff_reports(&a, &b);
        assert_eq!(delta.las.relative, None);
        let json = serde_json::to_string(&delta).unwrap();
        assert!(json.contains("\"relative\":null"));
    }

    #[test]
    fn las_never_exceeds_uas_on_scrambled_pairs() {
        // a little deterministic scrambling, checked exhaustively
        let labels = ["root", "obj", "nsubj"];
        for seed in 0..81usize {
            let mut digits = seed;
            let mut rows = Vec::new();
            for i in 0..4 {
                let head = digits % 3;
                digits /= 3;
                rows.push(("NOUN", head.min(i), labels[(seed + i) % 3]));
            }
            let gold = tb(&[("NOUN", 0, "root"), ("NOUN", 1, "obj"), ("NOUN", 1, "nsubj"), ("NOUN", 2, "obj")]);
            let pred = tb(&rows);
            let al = check_alignment(&gold, &pred).unwrap();
            let u: BigRational = uas(&al, &MetricsOptions::default()).unwrap();
            let l: BigRational = las(&al, &MetricsOptions::default()).unwrap();
            assert!(l <= u, "seed {seed}: las {l} > uas {u}");
        }
    }
}
