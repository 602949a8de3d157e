//! The twelve error types, their output tokens, guideline templates and the
//! mapping onto an external benchmark's bug categories.

mod labels;
mod templates;

use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use labels::ErrorLabelSet;
pub use templates::{parse_blocks, render_blocks, FilledGuideline, GuidelineTemplate, LocalizationBlock, Slot, TemplateData};

/// Size of the error-token vocabulary.
pub const TOKEN_SLOTS: usize = 32;
pub const NULL_TOKEN: &str = "[ERR]_∅";
const _: () = assert!(TOKEN_SLOTS >= ErrorType::ALL.len());

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    AttributeMismatch = 1,
    AttributeRedundancy = 2,
    AttributeMissing = 3,
    TableMismatch = 4,
    TableRedundancy = 5,
    TableMissing = 6,
    ValueError = 7,
    ConditionMissing = 8,
    ConditionError = 9,
    FunctionError = 10,
    ClauseError = 11,
    ModifierError = 12,
}

impl ErrorType {
    pub const ALL: [ErrorType; 12] = [
        ErrorType::AttributeMismatch,
        ErrorType::AttributeRedundancy,
        ErrorType::AttributeMissing,
        ErrorType::TableMismatch,
        ErrorType::TableRedundancy,
        ErrorType::TableMissing,
        ErrorType::ValueError,
        ErrorType::ConditionMissing,
        ErrorType::ConditionError,
        ErrorType::FunctionError,
        ErrorType::ClauseError,
        ErrorType::ModifierError,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: usize) -> Option<ErrorType> {
        Self::ALL.get(id.checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::AttributeMismatch => "attribute_mismatch",
            ErrorType::AttributeRedundancy => "attribute_redundancy",
            ErrorType::AttributeMissing => "attribute_missing",
            ErrorType::TableMismatch => "table_mismatch",
            ErrorType::TableRedundancy => "table_redundancy",
            ErrorType::TableMissing => "table_missing",
            ErrorType::ValueError => "value_error",
            ErrorType::ConditionMissing => "condition_missing",
            ErrorType::ConditionError => "condition_error",
            ErrorType::FunctionError => "function_error",
            ErrorType::ClauseError => "clause_error",
            ErrorType::ModifierError => "modifier_error",
        }
    }

    /// Accepts snake_case names and display names, case-insensitively.
    pub fn from_name(s: &str) -> Option<ErrorType> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_lowercase() })
            .collect();
        Self::ALL.into_iter().find(|t| t.name() == norm)
    }

    pub fn info(self) -> &'static ErrorTypeInfo {
        &taxonomy().types[self as usize - 1]
    }

    pub fn display_name(self) -> &'static str {
        &self.info().display_name
    }

    pub fn has_static_rule(self) -> bool {
        self.info().has_static_rule
    }

    pub fn token(self) -> String {
        format!("[ERR]_{}", self.id())
    }

    /// 0 = table, 1 = attribute, 2 = condition/value, 3 = function/clause/modifier.
    pub fn tier(self) -> u8 {
        use ErrorType::*;
        match self {
            TableMissing | TableMismatch | TableRedundancy => 0,
            AttributeMismatch | AttributeRedundancy | AttributeMissing => 1,
            ValueError | ConditionMissing | ConditionError => 2,
            FunctionError | ClauseError | ModifierError => 3,
        }
    }
}

impl std::fmt::Display for ErrorType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Refinement priority; lower ranks are handled first.
pub fn priority(label: ErrorType) -> u32 {
    u32::from(label.tier()) * 100 + u32::from(label.id())
}

pub fn sort_by_priority(labels: &mut [ErrorType]) {
    labels.sort_by_key(|l| priority(*l));
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorToken {
    pub surface: String,
    pub maps_to: Option<ErrorType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("reserved token slot {0}")]
    ReservedToken(usize),
}

pub fn token_for(label: Option<ErrorType>) -> ErrorToken {
    match label {
        Some(l) => ErrorToken {
            surface: l.token(),
            maps_to: Some(l),
        },
        None => ErrorToken {
            surface: NULL_TOKEN.to_string(),
            maps_to: None,
        },
    }
}

pub fn label_for(surface: &str) -> Result<Option<ErrorType>, TokenError> {
    if surface == NULL_TOKEN {
        return Ok(None);
    }
    let idx = surface
        .strip_prefix("[ERR]_")
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) && !d.starts_with('0'))
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| TokenError::UnknownToken(surface.to_string()))?;
    match idx {
        i if i <= ErrorType::ALL.len() => Ok(ErrorType::from_id(i)),
        i if i <= TOKEN_SLOTS => Err(TokenError::ReservedToken(i)),
        _ => Err(TokenError::UnknownToken(surface.to_string())),
    }
}

/// Every surface the detector may emit: `[ERR]_1..=12` plus the null token.
pub fn allowed_token_surfaces() -> Vec<String> {
    ErrorType::ALL
        .iter()
        .map(|t| t.token())
        .chain(std::iter::once(NULL_TOKEN.to_string()))
        .collect()
}

/// The full vocabulary including reserved slots.
pub fn vocabulary() -> Vec<ErrorToken> {
    (1..=TOKEN_SLOTS)
        .map(|i| ErrorToken {
            surface: format!("[ERR]_{i}"),
            maps_to: ErrorType::from_id(i),
        })
        .chain(std::iter::once(token_for(None)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTypeInfo {
    pub id: u8,
    pub name: ErrorType,
    pub display_name: String,
    pub description: String,
    pub example: String,
    pub related_words: Vec<String>,
    pub has_static_rule: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReservedInfo {
    pub first: usize,
    pub display_name: String,
    pub description: String,
    pub example: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoErrorInfo {
    pub token: String,
    pub display_name: String,
    pub description: String,
    pub example: String,
    pub related_words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyData {
    pub version: u32,
    pub reserved_slots: usize,
    pub types: Vec<ErrorTypeInfo>,
    pub reserved: ReservedInfo,
    pub no_error: NoErrorInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRow {
    pub category: String,
    pub subcategory: String,
    pub token: Option<String>,
    pub error_type: Option<ErrorType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingData {
    pub version: u32,
    pub benchmark: String,
    pub rows: Vec<MappingRow>,
}

pub const TAXONOMY_JSON: &str = include_str!("../../resources/taxonomy.json");
pub const MAPPING_JSON: &str = include_str!("../../resources/external_mapping.json");
pub const TEMPLATES_JSON: &str = include_str!("../../resources/templates.json");

static TAXONOMY: LazyLock<TaxonomyData> =
    LazyLock::new(|| serde_json::from_str(TAXONOMY_JSON).expect("embedded taxonomy is valid"));
static MAPPING: LazyLock<MappingData> =
    LazyLock::new(|| serde_json::from_str(MAPPING_JSON).expect("embedded mapping is valid"));
static TEMPLATES: LazyLock<TemplateData> =
    LazyLock::new(|| serde_json::from_str(TEMPLATES_JSON).expect("embedded templates are valid"));

pub fn taxonomy() -> &'static TaxonomyData {
    &TAXONOMY
}

pub fn external_mapping() -> &'static MappingData {
    &MAPPING
}

pub fn templates() -> &'static TemplateData {
    &TEMPLATES
}

pub fn template_for(label: ErrorType) -> &'static GuidelineTemplate {
    TEMPLATES
        .templates
        .iter()
        .find(|t| t.error_type == label)
        .expect("every type has a template")
}

/// External (category, subcategory) pairs covered by a label.
pub fn map_external(label: ErrorType) -> Vec<(String, String)> {
    MAPPING
        .rows
        .iter()
        .filter(|r| r.error_type == Some(label))
        .map(|r| (r.category.clone(), r.subcategory.clone()))
        .collect()
}

/// External subcategories with no counterpart in the taxonomy.
pub fn uncovered_external() -> Vec<(String, String)> {
    MAPPING
        .rows
        .iter()
        .filter(|r| r.error_type.is_none())
        .map(|r| (r.category.clone(), r.subcategory.clone()))
        .collect()
}

/// External top-level categories a label maps into.
pub fn external_categories(label: ErrorType) -> Vec<String> {
    let mut out: Vec<String> = map_external(label).into_iter().map(|(c, _)| c).collect();
    out.dedup();
    out
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Write the taxonomy, external mapping and templates as JSON files.
pub fn export_resources(dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let files = [
        ("taxonomy.json", to_pretty_json(taxonomy())),
        ("external_mapping.json", to_pretty_json(external_mapping())),
        ("templates.json", to_pretty_json(templates())),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        out.push(path);
    }
    Ok(out)
}
