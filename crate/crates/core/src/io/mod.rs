//! Reading and writing feature models: the SXFM interchange format (subset)
//! and a native line-oriented text format.

mod native;
mod sxfm;

pub use native::{parse_native, serialize_native};
pub use sxfm::parse_sxfm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FeatureModel, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("parse error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported construct at line {line}: {message}")]
    Unsupported { line: usize, message: String },
    #[error("duplicate feature name {name} at line {line}")]
    DuplicateName { line: usize, name: String },
    #[error("invalid model: {0}")]
    Invalid(ValidationReport),
}

impl ParseError {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFormat {
    Sxfm,
    Native,
}

impl fmt::Display for ModelFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFormat::Sxfm => "sxfm",
            ModelFormat::Native => "native",
        })
    }
}

impl FromStr for ModelFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sxfm" => Ok(ModelFormat::Sxfm),
            "native" => Ok(ModelFormat::Native),
            other => Err(format!("unknown model format {other:?} (expected sxfm or native)")),
        }
    }
}

impl ModelFormat {
    /// Guesses the format from the text: markup means SXFM.
    pub fn detect(text: &str) -> Self {
        if text.trim_start().starts_with('<') {
            ModelFormat::Sxfm
        } else {
            ModelFormat::Native
        }
    }
}

/// A parsed model together with its source text.
#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub format: ModelFormat,
    pub source: String,
    pub model: FeatureModel,
}

impl ModelDocument {
    pub fn parse(format: ModelFormat, source: impl Into<String>) -> Result<Self, ParseError> {
        let source = source.into();
        let model = parse(format, &source)?;
        Ok(ModelDocument {
            format,
            source,
            model,
        })
    }
}

pub fn parse(format: ModelFormat, text: &str) -> Result<FeatureModel, ParseError> {
    match format {
        ModelFormat::Sxfm => parse_sxfm(text),
        ModelFormat::Native => parse_native(text),
    }
}
