//! Versioned prompt templates with `{{placeholder}}` slots.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template `{template}` has no `{{{{{key}}}}}` placeholder")]
    MissingPlaceholder { template: String, key: String },
    #[error("template `{template}` left placeholder `{{{{{key}}}}}` unfilled")]
    Unfilled { template: String, key: String },
    #[error("cannot read template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    text: String,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            text: text.into(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, TemplateError> {
        let text = fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(PromptTemplate { name, text })
    }

    pub fn metaphor_single() -> Self {
        Self::new("metaphor_single_v1", include_str!("../prompts/metaphor_single_v1.txt"))
    }

    pub fn metaphor_multi() -> Self {
        Self::new("metaphor_multi_v1", include_str!("../prompts/metaphor_multi_v1.txt"))
    }

    pub fn coref_pair() -> Self {
        Self::new("coref_pair_v1", include_str!("../prompts/coref_pair_v1.txt"))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Hex SHA-256 of the template text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }

    /// Substitutes every `{{key}}`. Each key must occur in the template and no
    /// placeholder may remain afterwards.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        let mut out = self.text.clone();
        for (key, value) in values {
            let slot = format!("{{{{{key}}}}}");
            if !self.text.contains(&slot) {
                return Err(TemplateError::MissingPlaceholder {
                    template: self.name.clone(),
                    key: key.to_string(),
                });
            }
            out = out.replace(&slot, value);
        }
        // Only scan the template text: substituted values may contain braces.
        if let Some(key) = placeholders(&self.text)
            .into_iter()
            .find(|k| !values.iter().any(|(v, _)| v == k))
        {
            return Err(TemplateError::Unfilled {
                template: self.name.clone(),
                key,
            });
        }
        Ok(out)
    }
}

fn placeholders(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                out.push(after[..end].to_string());
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    out
}
