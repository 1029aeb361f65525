//! Annotation schema: the label inventories a batch of annotations must
//! conform to before being admitted.
//!
//! Schemas are TOML documents:
//!
//! ```toml
//! schema_version = "1.0"
//!
//! # optional; defaults to the 17 universal POS tags
//! upos = ["NOUN", "VERB", "PUNCT"]
//!
//! deprel = ["root", "nsubj", "obj", "punct"]
//!
//! [[sidecar]]
//! name = "archaic_lexeme_class"
//! values = ["dative_form", "infinitival_residue"]
//!
//! [[sidecar]]
//! name = "orthographic_source"
//! free_text = true
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::conllu::UD_V2_UPOS;

/// Errors raised while loading a schema file.
#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("SCHEMA_PARSE_ERROR: {0}")]
    Io(#[from] std::io::Error),
    #[error("SCHEMA_PARSE_ERROR: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("SCHEMA_PARSE_ERROR: {0}")]
    Invalid(String),
    #[error("EMPTY_LABEL_SET: {0} has no labels")]
    EmptyLabelSet(&'static str),
}

/// One extra annotation field carried alongside the standard columns.
/// Either a closed value set or free text, never both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidecarField {
    pub name: String,
    /// `None` means the field accepts arbitrary text.
    pub allowed_values: Option<BTreeSet<String>>,
}

impl SidecarField {
    pub fn accepts(&self, value: &str) -> bool {
        match &self.allowed_values {
            None => true,
            Some(values) => values.contains(value),
        }
    }
}

/// Label inventories for validation and ingestion gating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSchema {
    pub schema_version: String,
    pub upos_set: BTreeSet<String>,
    pub deprel_set: BTreeSet<String>,
    pub sidecar_fields: Vec<SidecarField>,
}

impl AnnotationSchema {
    /// Looks up a sidecar field by name.
    pub fn sidecar(&self, name: &str) -> Option<&SidecarField> {
        self.sidecar_fields.iter().find(|f| f.name == name)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    schema_version: String,
    upos: Option<Vec<String>>,
    deprel: Vec<String>,
    #[serde(default)]
    sidecar: Vec<RawSidecar>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSidecar {
    name: String,
    values: Option<Vec<String>>,
    #[serde(default)]
    free_text: bool,
}

/// Parses a schema from TOML text.
pub fn parse_schema(input: &str) -> Result<AnnotationSchema, SchemaError> {
    let raw: RawSchema = toml::from_str(input)?;

    let upos_set: BTreeSet<String> = match raw.upos {
        None => UD_V2_UPOS.iter().map(|t| t.to_string()).collect(),
        Some(tags) => {
            if tags.is_empty() {
                return Err(SchemaError::EmptyLabelSet("upos"));
            }
            tags.into_iter().collect()
        }
    };

    if raw.deprel.is_empty() {
        return Err(SchemaError::EmptyLabelSet("deprel"));
    }
    let deprel_set: BTreeSet<String> = raw.deprel.into_iter().collect();

    let mut sidecar_fields = Vec::new();
    let mut seen = BTreeSet::new();
    for raw_field in raw.sidecar {
        if !seen.insert(raw_field.name.clone()) {
            return Err(SchemaError::Invalid(format!(
                "duplicate sidecar field {:?}",
                raw_field.name
            )));
        }
        let allowed_values = match (raw_field.values, raw_field.free_text) {
            (Some(values), false) => {
                if values.is_empty() {
                    return Err(SchemaError::EmptyLabelSet("sidecar"));
                }
                Some(values.into_iter().collect())
            }
            (None, true) => None,
            (Some(_), true) => {
                return Err(SchemaError::Invalid(format!(
                    "sidecar field {:?} sets both values and free_text",
                    raw_field.name
                )));
            }
            (None, false) => {
                return Err(SchemaError::Invalid(format!(
                    "sidecar field {:?} needs either values or free_text",
                    raw_field.name
                )));
            }
        };
        sidecar_fields.push(SidecarField {
            name: raw_field.name,
            allowed_values,
        });
    }

    Ok(AnnotationSchema {
        schema_version: raw.schema_version,
        upos_set,
        deprel_set,
        sidecar_fields,
    })
}

/// Reads and parses a schema file.
pub fn load_schema(path: &Path) -> Result<AnnotationSchema, SchemaError> {
    let text = std::fs::read_to_string(path)?;
    parse_schema(&text)
}
