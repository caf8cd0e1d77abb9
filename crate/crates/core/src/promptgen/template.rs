use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PromptError;

const PLACEHOLDERS: [&str; 4] = ["sentence", "gold", "examples", "options"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    DistractorGen,
    PretrainSimile,
    TaskIcl,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 3] = [TemplateKind::DistractorGen, TemplateKind::PretrainSimile, TemplateKind::TaskIcl];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateKind::DistractorGen => "distractor_gen",
            TemplateKind::PretrainSimile => "pretrain_simile",
            TemplateKind::TaskIcl => "task_icl",
        }
    }

    pub fn required(self) -> &'static [&'static str] {
        match self {
            TemplateKind::DistractorGen => &["sentence", "gold"],
            TemplateKind::PretrainSimile => &["sentence"],
            TemplateKind::TaskIcl => &["examples", "sentence", "options"],
        }
    }

    fn default_body(self) -> &'static str {
        match self {
            TemplateKind::DistractorGen => include_str!("../../templates/distractor_gen.txt"),
            TemplateKind::PretrainSimile => include_str!("../../templates/pretrain_simile.txt"),
            TemplateKind::TaskIcl => include_str!("../../templates/task_icl.txt"),
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PromptError::UnknownKind(s.to_string()))
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"))
}

/// Prompt text with `{name}` placeholders. Braces around any other name
/// are left as literal text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    kind: TemplateKind,
    body: String,
}

impl PromptTemplate {
    pub fn new(kind: TemplateKind, body: impl Into<String>) -> Result<Self, PromptError> {
        let body = body.into();
        for name in PLACEHOLDERS {
            let count = placeholder_re()
                .captures_iter(&body)
                .filter(|c| &c[1] == name)
                .count();
            let required = kind.required().contains(&name);
            if required && count != 1 {
                return Err(PromptError::Placeholder {
                    kind,
                    name: name.to_string(),
                    count,
                });
            }
            if !required && count > 0 {
                return Err(PromptError::UnexpectedPlaceholder {
                    kind,
                    name: name.to_string(),
                });
            }
        }
        Ok(Self { kind, body })
    }

    /// The template shipped with the crate.
    pub fn builtin(kind: TemplateKind) -> Self {
        Self::new(kind, kind.default_body()).expect("builtin templates are valid")
    }

    pub fn from_file(kind: TemplateKind, path: &Path) -> crate::Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::new(kind, body)?)
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub(crate) fn expect_kind(&self, kind: TemplateKind) -> Result<(), PromptError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(PromptError::WrongKind {
                expected: kind,
                found: self.kind,
            })
        }
    }

    /// Single-pass substitution: inserted values are never rescanned.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        for name in self.kind.required() {
            if !values.iter().any(|(k, _)| k == name) {
                return Err(PromptError::MissingValue(name.to_string()));
            }
        }
        let out = placeholder_re().replace_all(&self.body, |c: &regex::Captures<'_>| {
            values
                .iter()
                .find(|(k, _)| *k == &c[1])
                .map_or_else(|| c[0].to_string(), |(_, v)| v.to_string())
        });
        Ok(out.into_owned())
    }
}
