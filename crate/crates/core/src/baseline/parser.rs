//! Training, greedy inference, and tree repair for the baseline parser.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::conllu::{find_cycles, validate_sentence, Sentence, Severity, Strictness, Treebank};
use crate::scalar::RealScalar;

use super::features::{extract_arc_features, extract_tag_features, FeatureVector};
use super::logistic::{softmax, LinearModel};
use super::TrainConfig;

/// Errors from [`train`].
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("EMPTY_TRAINING_SET: no sentences to train on")]
    EmptyTrainingSet,
    #[error("NO_VALID_SENTENCES: every sentence failed lenient validation")]
    NoValidSentences,
}

/// The three trained components plus the configuration they share.
#[derive(Debug, Clone, PartialEq)]
pub struct ParserModel<S> {
    /// UPOS classifier.
    pub tagger: LinearModel<S>,
    /// Single-row scorer softmaxed across head candidates per dependent.
    pub arc_scorer: LinearModel<S>,
    /// DEPREL classifier over (dependent, head) pairs.
    pub labeler: LinearModel<S>,
    pub config: TrainConfig,
}

/// Learning rate at update counter `t`: lr0 / (1 + decay·t), computed in
/// f64 and then converted, so every scalar type sees the same schedule.
fn lr_at<S: RealScalar>(config: &TrainConfig, t: u64) -> S {
    S::from_f64(config.lr0 / (1.0 + config.decay * t as f64)).expect("lr representable")
}

/// Head candidates for `dep` in a sentence of `n` tokens: root (0) plus
/// every position within `window`, ascending. During training the gold
/// head is inserted even when it lies outside the window.
fn candidates(dep: usize, n: usize, window: usize, gold: Option<usize>) -> Vec<usize> {
    let mut c = vec![0usize];
    let lo = dep.saturating_sub(window).max(1);
    let hi = (dep + window).min(n);
    for h in lo..=hi {
        if h != dep {
            c.push(h);
        }
    }
    if let Some(g) = gold {
        if g != dep && !c.contains(&g) {
            c.push(g);
            c.sort_unstable();
        }
    }
    c
}

fn gold_tags(s: &Sentence) -> Vec<String> {
    s.tokens.iter().map(|t| t.upos.clone()).collect()
}

/// Trains tagger, arc scorer, and labeler by single-threaded SGD on
/// cross-entropy, sentence order fixed, each component with its own update
/// counter. Teacher forcing throughout: the tagger sees gold previous tags
/// and the arc/label components see gold tags and gold heads.
///
/// Sentences failing lenient validation (unresolvable heads) are skipped;
/// self-headed tokens are skipped by the arc and label components.
/// Fully deterministic: two runs produce bit-equal weights.
pub fn train<S: RealScalar>(
    train_tb: &Treebank,
    config: &TrainConfig,
) -> Result<ParserModel<S>, TrainError> {
    if train_tb.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let usable: Vec<&Sentence> = train_tb
        .sentences
        .iter()
        .filter(|s| {
            !s.tokens.is_empty()
                && validate_sentence(s, Strictness::Lenient, None)
                    .iter()
                    .all(|i| i.severity != Severity::Error)
        })
        .collect();
    if usable.is_empty() {
        return Err(TrainError::NoValidSentences);
    }

    let upos_classes: Vec<String> = usable
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.upos.clone()))
        .collect::<BTreeSet<String>>()
        .into_iter()
        .collect();
    let deprel_classes: Vec<String> = usable
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.deprel.clone()))
        .collect::<BTreeSet<String>>()
        .into_iter()
        .collect();

    let dim = config.hash_dim;
    let mut tagger: LinearModel<S> = LinearModel::zeros(upos_classes, dim, config.seed);
    let mut arc_scorer: LinearModel<S> =
        LinearModel::zeros(vec!["arc".to_string()], dim, config.seed);
    let mut labeler: LinearModel<S> = LinearModel::zeros(deprel_classes, dim, config.seed);
    let l2 = S::from_f64(config.l2).expect("l2 representable");

    // tagger
    let mut t: u64 = 0;
    for _ in 0..config.epochs {
        for s in &usable {
            let tags = gold_tags(s);
            for i in 1..=s.tokens.len() {
                let fv = extract_tag_features(s, i, &tags[..i - 1], dim);
                let gold = tagger
                    .class_index(&s.tokens[i - 1].upos)
                    .expect("gold tag is a training class");
                tagger.sgd_step(&fv, gold, lr_at(config, t), l2);
                t += 1;
            }
        }
    }

    // arc scorer: per dependent, softmax one shared row across candidates.
    // The shared bias cancels in the softmax, so only weights are updated.
    let mut t: u64 = 0;
    for _ in 0..config.epochs {
        for s in &usable {
            let tags = gold_tags(s);
            let n = s.tokens.len();
            for dep in 1..=n {
                let gold_head = s.tokens[dep - 1].head;
                if gold_head == dep {
                    continue;
                }
                let cands = candidates(dep, n, config.window, Some(gold_head));
                let fvs: Vec<FeatureVector> = cands
                    .iter()
                    .map(|&h| extract_arc_features(s, dep, h, &tags, dim))
                    .collect();
                let scores: Vec<S> =
                    fvs.iter().map(|fv| arc_scorer.score_class(0, fv)).collect();
                let probs = softmax(&scores);
                let lr: S = lr_at(config, t);
                for (k, &h) in cands.iter().enumerate() {
                    let g = if h == gold_head {
                        probs[k] - S::one()
                    } else {
                        probs[k]
                    };
                    let row = &mut arc_scorer.weights[0];
                    for &i in fvs[k].indices() {
                        let w = row[i as usize];
                        row[i as usize] = w - lr * (g + l2 * w);
                    }
                }
                t += 1;
            }
        }
    }

    // labeler over gold (dep, gold head) pairs
    let mut t: u64 = 0;
    for _ in 0..config.epochs {
        for s in &usable {
            let tags = gold_tags(s);
            for dep in 1..=s.tokens.len() {
                let gold_head = s.tokens[dep - 1].head;
                if gold_head == dep {
                    continue;
                }
                let fv = extract_arc_features(s, dep, gold_head, &tags, dim);
                let gold = labeler
                    .class_index(&s.tokens[dep - 1].deprel)
                    .expect("gold label is a training class");
                labeler.sgd_step(&fv, gold, lr_at(config, t), l2);
                t += 1;
            }
        }
    }

    tagger.trained_epochs = u64::from(config.epochs);
    arc_scorer.trained_epochs = u64::from(config.epochs);
    labeler.trained_epochs = u64::from(config.epochs);

    Ok(ParserModel {
        tagger,
        arc_scorer,
        labeler,
        config: *config,
    })
}

/// Head candidates and their softmax probabilities for one dependent, given
/// the tags to featurize with. Exposed for inspection; the probabilities of
/// any dependent sum to 1 (within float tolerance).
pub fn arc_probabilities<S: RealScalar>(
    m: &ParserModel<S>,
    s: &Sentence,
    dep: usize,
    tags: &[String],
) -> (Vec<usize>, Vec<S>) {
    let n = s.tokens.len();
    let cands = candidates(dep, n, m.config.window, None);
    let scores: Vec<S> = cands
        .iter()
        .map(|&h| {
            m.arc_scorer
                .score_class(0, &extract_arc_features(s, dep, h, tags, m.config.hash_dim))
        })
        .collect();
    let probs = softmax(&scores);
    (cands, probs)
}

/// Greedy left-to-right prediction: tags first (feeding its own previous
/// predictions), then per-dependent head argmax over the windowed
/// candidates, then labels given the predicted heads. Ties break to the
/// lowest candidate / class index. Output may violate tree constraints;
/// see [`repair_tree`].
pub fn predict_sentence<S: RealScalar>(m: &ParserModel<S>, s: &Sentence) -> Sentence {
    let n = s.tokens.len();
    let dim = m.config.hash_dim;
    let mut out = s.clone();

    let mut tags: Vec<String> = Vec::with_capacity(n);
    for i in 1..=n {
        let fv = extract_tag_features(s, i, &tags, dim);
        let c = m.tagger.predict(&fv);
        let tag = m
            .tagger
            .class_labels
            .get(c)
            .cloned()
            .unwrap_or_else(|| "X".to_string());
        tags.push(tag);
    }

    let mut heads = vec![0usize; n];
    for dep in 1..=n {
        let cands = candidates(dep, n, m.config.window, None);
        let mut best = 0usize;
        let mut best_score = S::neg_infinity();
        for (k, &h) in cands.iter().enumerate() {
            let fv = extract_arc_features(s, dep, h, &tags, dim);
            let score = m.arc_scorer.score_class(0, &fv);
            if score > best_score {
                best_score = score;
                best = k;
            }
        }
        heads[dep - 1] = cands[best];
    }

    for dep in 1..=n {
        let fv = extract_arc_features(s, dep, heads[dep - 1], &tags, dim);
        let c = m.labeler.predict(&fv);
        let label = m
            .labeler
            .class_labels
            .get(c)
            .cloned()
            .unwrap_or_else(|| "dep".to_string());
        let token = &mut out.tokens[dep - 1];
        token.upos = tags[dep - 1].clone();
        token.head = heads[dep - 1];
        token.deprel = label;
    }
    out
}

/// Rewrites heads so the sentence forms a single rooted tree, leaving
/// labels intact: out-of-range heads become roots, extra roots reattach to
/// the first root, and each head cycle is broken by reattaching its
/// lowest-position member to the root (which it becomes, if none exists).
pub fn repair_tree(s: &Sentence) -> Sentence {
    let mut out = s.clone();
    let n = out.tokens.len();
    if n == 0 {
        return out;
    }

    let mut heads: Vec<usize> = out
        .tokens
        .iter()
        .map(|t| if t.head > n { 0 } else { t.head })
        .collect();

    let mut first_root = heads.iter().position(|&h| h == 0).map(|p| p + 1);
    if let Some(root) = first_root {
        for p in 1..=n {
            if heads[p - 1] == 0 && p != root {
                heads[p - 1] = root;
            }
        }
    }

    for cycle in find_cycles(&heads) {
        let lowest = *cycle.iter().min().expect("cycles are non-empty");
        match first_root {
            None => {
                heads[lowest - 1] = 0;
                first_root = Some(lowest);
            }
            Some(root) => heads[lowest - 1] = root,
        }
    }

    for (token, head) in out.tokens.iter_mut().zip(heads) {
        token.head = head;
    }
    out
}
