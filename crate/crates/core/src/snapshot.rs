//! Deterministic snapshot freezing and the seeded, fixed train/test split.
//!
//! Freezing merges ordered annotation batches with retry replacements into
//! one validated treebank plus a manifest whose digest pins the file bytes.
//! Splitting shuffles sentence indices with a pinned PRNG (splitmix64
//! driving a Fisher–Yates pass) so any implementation of the same
//! recurrence reproduces the same membership, bit for bit.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conllu::{
    serialize_treebank, validate_sentence, Origin, Sentence, Severity, Strictness, Treebank,
};
use crate::schema::AnnotationSchema;

/// Errors from freezing and splitting.
#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("UNMATCHED_RETRY: no batch sentence with id(s) {0:?}")]
    UnmatchedRetry(Vec<String>),
    #[error("VALIDATION_REJECT: sentence(s) failed validation: {0:?}")]
    ValidationReject(Vec<String>),
    #[error("duplicate sent_id {0:?} in freeze input")]
    DuplicateSentId(String),
    #[error("test fraction {0:?} is not a rational in (0, 1)")]
    BadFraction(String),
    #[error("cannot split {0} sentence(s); need at least 2")]
    SplitTooSmall(usize),
}

/// One step of the splitmix64 recurrence: all arithmetic mod 2^64.
pub fn splitmix64_next(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (state, z ^ (z >> 31))
}

/// Stateful wrapper around [`splitmix64_next`], seeded directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        let (state, value) = splitmix64_next(self.state);
        self.state = state;
        value
    }
}

/// An exact rational in (0, 1), kept reduced. Exact integer arithmetic
/// avoids the floating-point floor traps (e.g. 0.7 × 10 = 6.999…).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    /// Accepts `"N/D"` or a decimal like `"0.2"` / `".25"`; the value must
    /// lie strictly between 0 and 1.
    pub fn parse(s: &str) -> Result<Fraction, SnapshotError> {
        let bad = || SnapshotError::BadFraction(s.to_string());
        let (num, den) = if let Some((n, d)) = s.split_once('/') {
            let num: u64 = n.trim().parse().map_err(|_| bad())?;
            let den: u64 = d.trim().parse().map_err(|_| bad())?;
            (num, den)
        } else if let Some((int_part, dec_part)) = s.split_once('.') {
            if !(int_part.is_empty() || int_part == "0")
                || dec_part.is_empty()
                || dec_part.len() > 18
                || !dec_part.bytes().all(|b| b.is_ascii_digit())
            {
                return Err(bad());
            }
            let num: u64 = dec_part.parse().map_err(|_| bad())?;
            (num, 10u64.pow(dec_part.len() as u32))
        } else {
            return Err(bad());
        };
        if den == 0 || num == 0 || num >= den {
            return Err(bad());
        }
        let g = gcd(num, den);
        Ok(Fraction {
            num: num / g,
            den: den / g,
        })
    }

    /// floor((1 − self) × n), computed exactly: ((den − num) × n) / den.
    pub fn train_size(&self, n: usize) -> usize {
        let sized = (self.den - self.num) as u128 * n as u128 / self.den as u128;
        sized as usize
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl std::str::FromStr for Fraction {
    type Err = SnapshotError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Fraction::parse(s)
    }
}

/// Frozen split membership; the JSON form of this struct is the interchange
/// artifact other systems consume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    /// Reduced exact form, e.g. "1/5".
    pub test_fraction: String,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub membership_sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Digest over `"train\n" + train ids + "\ntest\n" + test ids`, each list
/// newline-joined.
pub fn membership_digest(train_ids: &[String], test_ids: &[String]) -> String {
    let payload = format!(
        "train\n{}\ntest\n{}",
        train_ids.join("\n"),
        test_ids.join("\n")
    );
    sha256_hex(payload.as_bytes())
}

/// Splits a treebank into train/test membership as a pure function of
/// (sentence order, seed, fraction).
///
/// Indices 0..n−1 are shuffled by Fisher–Yates, iterating i from n−1 down
/// to 1 with j = value mod (i+1); the first n − floor((1−f)·n) shuffled
/// indices form the test set; both lists are then re-sorted into document
/// order.
pub fn deterministic_split(
    tb: &Treebank,
    seed: u64,
    test_fraction: Fraction,
) -> Result<SplitManifest, SnapshotError> {
    let n = tb.len();
    if n < 2 {
        return Err(SnapshotError::SplitTooSmall(n));
    }

    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }

    let train_size = test_fraction.train_size(n);
    let test_size = n - train_size;
    let mut test_idx = indices[..test_size].to_vec();
    let mut train_idx = indices[test_size..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();

    let ids = tb.sent_ids();
    let train_ids: Vec<String> = train_idx.into_iter().map(|i| ids[i].clone()).collect();
    let test_ids: Vec<String> = test_idx.into_iter().map(|i| ids[i].clone()).collect();
    let membership_sha256 = membership_digest(&train_ids, &test_ids);

    Ok(SplitManifest {
        seed,
        test_fraction: test_fraction.to_string(),
        train_ids,
        test_ids,
        membership_sha256,
    })
}

/// Manifest anchoring a frozen snapshot to its bytes and provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub total_sentences: usize,
    pub batch_origin: usize,
    pub retry_origin: usize,
    pub content_sha256: String,
    pub created_from: Vec<String>,
    pub tool_version: String,
}

/// Merges annotation batches and retry replacements into one validated
/// snapshot.
///
/// Retry sentences replace same-id batch sentences in place; output keeps
/// batch order. Sentences without an origin tag are counted by provenance
/// (batches → batch, retries → retry) in memory only — no comment lines
/// are added or rewritten, so freezing with empty retries reproduces the
/// concatenated input bytes, and refreezing a frozen snapshot is
/// byte-identical.
///
/// The freeze is all-or-nothing: if any output sentence fails validation
/// at the given profile, the whole operation fails with the rejected ids.
pub fn freeze(
    batches: &[Treebank],
    retries: &Treebank,
    profile: Strictness,
    schema: Option<&AnnotationSchema>,
) -> Result<(Treebank, SnapshotManifest), SnapshotError> {
    let mut seen = std::collections::BTreeSet::new();
    for tb in batches {
        for s in &tb.sentences {
            if !seen.insert(s.sent_id.clone()) {
                return Err(SnapshotError::DuplicateSentId(s.sent_id.clone()));
            }
        }
    }

    let mut replacements: std::collections::BTreeMap<&str, &Sentence> =
        std::collections::BTreeMap::new();
    let mut unmatched = Vec::new();
    for s in &retries.sentences {
        if replacements.insert(s.sent_id.as_str(), s).is_some() {
            return Err(SnapshotError::DuplicateSentId(s.sent_id.clone()));
        }
        if !seen.contains(&s.sent_id) {
            unmatched.push(s.sent_id.clone());
        }
    }
    if !unmatched.is_empty() {
        return Err(SnapshotError::UnmatchedRetry(unmatched));
    }

    let mut sentences = Vec::new();
    for tb in batches {
        for s in &tb.sentences {
            let mut out = match replacements.get(s.sent_id.as_str()) {
                Some(replacement) => (*replacement).clone(),
                None => s.clone(),
            };
            if out.origin == Origin::Unknown {
                out.origin = if replacements.contains_key(s.sent_id.as_str()) {
                    Origin::Retry
                } else {
                    Origin::Batch
                };
            }
            sentences.push(out);
        }
    }

    let rejected: Vec<String> = sentences
        .iter()
        .filter(|s| {
            validate_sentence(s, profile, schema)
                .iter()
                .any(|i| i.severity == Severity::Error)
        })
        .map(|s| s.sent_id.clone())
        .collect();
    if !rejected.is_empty() {
        return Err(SnapshotError::ValidationReject(rejected));
    }

    let batch_origin = sentences.iter().filter(|s| s.origin == Origin::Batch).count();
    let retry_origin = sentences.iter().filter(|s| s.origin == Origin::Retry).count();
    let snapshot = Treebank::new(sentences);
    let content = serialize_treebank(&snapshot);

    let mut created_from: Vec<String> = batches
        .iter()
        .map(|tb| tb.source_path.clone())
        .filter(|p| !p.is_empty())
        .collect();
    if !retries.source_path.is_empty() {
        created_from.push(retries.source_path.clone());
    }

    let manifest = SnapshotManifest {
        total_sentences: snapshot.len(),
        batch_origin,
        retry_origin,
        content_sha256: sha256_hex(content.as_bytes()),
        created_from,
        tool_version: crate::TOOL_VERSION.to_string(),
    };
    Ok((snapshot, manifest))
}

/// Recomputes the content digest of snapshot bytes (for manifest
/// re-verification).
pub fn content_digest(bytes: &[u8]) -> String {
    sha256_hex(bytes)
}
