use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ErrorType, NULL_TOKEN};

/// Either the no-error marker or a non-empty set of error types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum ErrorLabelSet {
    #[default]
    NoError,
    Errors(BTreeSet<ErrorType>),
}

impl ErrorLabelSet {
    pub fn from_labels<I: IntoIterator<Item = ErrorType>>(labels: I) -> Self {
        let set: BTreeSet<ErrorType> = labels.into_iter().collect();
        if set.is_empty() {
            ErrorLabelSet::NoError
        } else {
            ErrorLabelSet::Errors(set)
        }
    }

    pub fn single(label: ErrorType) -> Self {
        Self::from_labels([label])
    }

    pub fn is_no_error(&self) -> bool {
        matches!(self, ErrorLabelSet::NoError)
    }

    /// Error types in id order; empty for the no-error marker.
    pub fn labels(&self) -> Vec<ErrorType> {
        match self {
            ErrorLabelSet::NoError => Vec::new(),
            ErrorLabelSet::Errors(s) => s.iter().copied().collect(),
        }
    }

    pub fn contains(&self, label: ErrorType) -> bool {
        matches!(self, ErrorLabelSet::Errors(s) if s.contains(&label))
    }

    pub fn len(&self) -> usize {
        match self {
            ErrorLabelSet::NoError => 0,
            ErrorLabelSet::Errors(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn union(&self, other: &ErrorLabelSet) -> ErrorLabelSet {
        Self::from_labels(self.labels().into_iter().chain(other.labels()))
    }

    pub fn tokens(&self) -> Vec<String> {
        match self {
            ErrorLabelSet::NoError => vec![NULL_TOKEN.to_string()],
            ErrorLabelSet::Errors(s) => s.iter().map(|t| t.token()).collect(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            ErrorLabelSet::NoError => vec!["no_error".to_string()],
            ErrorLabelSet::Errors(s) => s.iter().map(|t| t.name().to_string()).collect(),
        }
    }
}

impl Serialize for ErrorLabelSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.names().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ErrorLabelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names: Vec<String> = Vec::deserialize(d)?;
        let mut labels = Vec::new();
        for n in &names {
            if n == "no_error" {
                continue;
            }
            labels.push(
                ErrorType::from_name(n)
                    .ok_or_else(|| serde::de::Error::custom(format!("unknown error type {n}")))?,
            );
        }
        if names.iter().any(|n| n == "no_error") && !labels.is_empty() {
            return Err(serde::de::Error::custom("no_error cannot co-occur with error types"));
        }
        Ok(ErrorLabelSet::from_labels(labels))
    }
}
