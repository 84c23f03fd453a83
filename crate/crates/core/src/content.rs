//! Herb knowledge base: species, morphology and ecology text per herb.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::targetdb::TargetDatabase;

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("catalog parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate content id {0:?}")]
    DuplicateId(String),
    #[error("entry {index} ({content_id:?}) is missing section {section:?}")]
    MissingSection {
        index: usize,
        content_id: String,
        section: &'static str,
    },
    #[error("content id {0:?} not found")]
    NotFound(String),
}

impl From<serde_json::Error> for ContentError {
    fn from(e: serde_json::Error) -> Self {
        ContentError::ParseError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Morphology {
    pub roots: String,
    pub stems: String,
    pub leaves: String,
    pub seeds: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ecology {
    pub environment: String,
    pub life_cycle: String,
}

/// One herb's record. The species section is the four flat name/source/usage
/// fields; morphology and ecology are nested objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HerbEntry {
    pub content_id: String,
    pub name_cn: String,
    pub name_en: String,
    pub source_area: String,
    pub usage: String,
    pub morphology: Morphology,
    pub ecology: Ecology,
}

const SPECIES_FIELDS: [&str; 4] = ["name_cn", "name_en", "source_area", "usage"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    entries: BTreeMap<String, HerbEntry>,
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &HerbEntry> {
        self.entries.values()
    }

    pub fn get(&self, content_id: &str) -> Option<&HerbEntry> {
        self.entries.get(content_id)
    }

    pub fn from_entries(entries: impl IntoIterator<Item = HerbEntry>) -> Result<Self, ContentError> {
        let mut map = BTreeMap::new();
        for e in entries {
            if e.content_id.is_empty() {
                return Err(ContentError::MissingSection {
                    index: map.len(),
                    content_id: String::new(),
                    section: "content_id",
                });
            }
            if map.contains_key(&e.content_id) {
                return Err(ContentError::DuplicateId(e.content_id));
            }
            map.insert(e.content_id.clone(), e);
        }
        Ok(Catalog { entries: map })
    }

    /// Serializes as a JSON array ordered by content id.
    pub fn to_json(&self) -> String {
        let list: Vec<&HerbEntry> = self.entries.values().collect();
        serde_json::to_string_pretty(&list).expect("catalog serializes")
    }
}

/// Parses and validates a catalog JSON array.
pub fn load_catalog(source: &str) -> Result<Catalog, ContentError> {
    let raw: Vec<serde_json::Value> = serde_json::from_str(source)?;
    let mut entries = Vec::with_capacity(raw.len());
    for (index, value) in raw.into_iter().enumerate() {
        let content_id = value
            .get("content_id")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        let missing = |section| ContentError::MissingSection {
            index,
            content_id: content_id.clone(),
            section,
        };
        if content_id.is_empty() {
            return Err(missing("content_id"));
        }
        if SPECIES_FIELDS.iter().any(|f| value.get(f).is_none()) {
            return Err(missing("species"));
        }
        if !value.get("morphology").is_some_and(|v| v.is_object()) {
            return Err(missing("morphology"));
        }
        if !value.get("ecology").is_some_and(|v| v.is_object()) {
            return Err(missing("ecology"));
        }
        let entry: HerbEntry = serde_json::from_value(value).map_err(|e| ContentError::ParseError {
            line: 0,
            column: 0,
            message: format!("entry {index}: {e}"),
        })?;
        entries.push(entry);
    }
    Catalog::from_entries(entries)
}

pub fn get_entry<'a>(catalog: &'a Catalog, content_id: &str) -> Result<&'a HerbEntry, ContentError> {
    catalog
        .get(content_id)
        .ok_or_else(|| ContentError::NotFound(content_id.to_string()))
}

/// Referential-integrity findings between a catalog and a database.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Content ids referenced by targets but absent from the catalog.
    pub missing_entries: Vec<MissingEntry>,
    /// Catalog content ids no target references.
    pub orphan_entries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingEntry {
    pub target_id: u32,
    pub target_name: String,
    pub content_id: String,
}

impl ValidationReport {
    pub fn is_consistent(&self) -> bool {
        self.missing_entries.is_empty() && self.orphan_entries.is_empty()
    }
}

pub fn validate_against_db(catalog: &Catalog, db: &TargetDatabase) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut referenced = BTreeSet::new();
    for t in db.targets() {
        referenced.insert(t.content_id.as_str());
        if catalog.get(&t.content_id).is_none() {
            report.missing_entries.push(MissingEntry {
                target_id: t.id,
                target_name: t.name.clone(),
                content_id: t.content_id.clone(),
            });
        }
    }
    report.orphan_entries = catalog
        .entries
        .keys()
        .filter(|k| !referenced.contains(k.as_str()))
        .cloned()
        .collect();
    report
}
