use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ErrorType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub slot: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidelineTemplate {
    pub error_type: ErrorType,
    /// True when the slot inventory was authored by analogy rather than
    /// taken from a published template.
    pub extrapolated: bool,
    pub localization: Vec<Slot>,
    pub analysis: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateData {
    pub version: u32,
    pub templates: Vec<GuidelineTemplate>,
}

impl GuidelineTemplate {
    pub fn slot_names(&self) -> Vec<&str> {
        self.localization
            .iter()
            .chain(&self.analysis)
            .map(|s| s.slot.as_str())
            .collect()
    }

    /// Unfilled template with `{slot}` placeholders.
    pub fn render_blank(&self) -> String {
        let mut out = format!("[Error Type] {}\n[Localization]\n", self.error_type.display_name());
        for s in &self.localization {
            out.push_str(&format!("{}: {{{}}}\n", s.label, s.slot));
        }
        out.push_str("[Analysis]\n");
        for s in &self.analysis {
            out.push_str(&format!("{}: {{{}}}\n", s.label, s.slot));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilledGuideline {
    pub error_type: ErrorType,
    pub values: BTreeMap<String, String>,
}

impl FilledGuideline {
    /// Slots of the template that have no value.
    pub fn missing_slots(&self) -> Vec<String> {
        super::template_for(self.error_type)
            .slot_names()
            .into_iter()
            .filter(|s| !self.values.contains_key(*s))
            .map(str::to_string)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_slots().is_empty()
    }

    pub fn render(&self) -> String {
        let t = super::template_for(self.error_type);
        let mut out = format!("[Error Type] {}\n[Localization]\n", self.error_type.display_name());
        let value = |s: &str| self.values.get(s).map(String::as_str).unwrap_or("");
        for s in &t.localization {
            out.push_str(&format!("{}: {}\n", s.label, value(&s.slot)));
        }
        out.push_str("[Analysis]\n");
        for s in &t.analysis {
            out.push_str(&format!("{}: {}\n", s.label, value(&s.slot)));
        }
        out
    }
}

/// One localized error as exchanged with the localizer: the erroneous
/// fragments, the schema elements involved and the remaining template slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalizationBlock {
    pub error_type: ErrorType,
    pub nodes: Vec<String>,
    pub schema: Vec<String>,
    pub slots: BTreeMap<String, String>,
}

impl LocalizationBlock {
    pub fn new(error_type: ErrorType) -> Self {
        LocalizationBlock {
            error_type,
            nodes: Vec::new(),
            schema: Vec::new(),
            slots: BTreeMap::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("[ERROR] {}\n", self.error_type.name());
        out.push_str(&format!("nodes: {}\n", self.nodes.join(" | ")));
        out.push_str(&format!("schema: {}\n", self.schema.join(" | ")));
        for (k, v) in &self.slots {
            out.push_str(&format!("{k}: {}\n", v.replace('\n', " ")));
        }
        out.push_str("[END]\n");
        out
    }
}

pub fn render_blocks(blocks: &[LocalizationBlock]) -> String {
    blocks.iter().map(LocalizationBlock::render).collect()
}

fn split_list(v: &str) -> Vec<String> {
    v.split(" | ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parse every well-formed block; text outside blocks is ignored. Blocks
/// with an unknown error type are skipped.
pub fn parse_blocks(text: &str) -> Vec<LocalizationBlock> {
    let mut out = Vec::new();
    let mut cur: Option<LocalizationBlock> = None;
    for line in text.lines().map(str::trim) {
        if let Some(rest) = line.strip_prefix("[ERROR]") {
            let rest = rest.trim();
            let ty = ErrorType::from_name(rest).or_else(|| super::label_for(rest).ok().flatten());
            cur = ty.map(LocalizationBlock::new);
        } else if line == "[END]" {
            out.extend(cur.take());
        } else if let (Some(b), Some((k, v))) = (cur.as_mut(), line.split_once(':')) {
            let (k, v) = (k.trim(), v.trim());
            match k {
                "nodes" => b.nodes = split_list(v),
                "schema" => b.schema = split_list(v),
                _ => {
                    b.slots.insert(k.to_string(), v.to_string());
                }
            }
        }
    }
    out.extend(cur);
    out
}
