//! Prompt templates kept as versioned text files.
//!
//! A template file starts with a `# <name> v<version>` header line. The body
//! holds a system part and a user part separated by a line containing only
//! `---`; a body without the separator is all user part. Placeholders are
//! written `{{name}}`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::gateway::ChatMessage;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("unknown template {0:?}")]
    Unknown(String),
    #[error("template {file}: bad header, expected `# <name> v<version>`")]
    BadHeader { file: String },
    #[error("template {template}: no value for placeholder {var:?}")]
    MissingVar { template: String, var: String },
    #[error("cannot read templates: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub version: u32,
    system: Option<String>,
    user: String,
}

impl Template {
    pub fn parse(file: &str, text: &str) -> Result<Self, TemplateError> {
        let bad = || TemplateError::BadHeader { file: file.into() };
        let (header, body) = text.split_once('\n').ok_or_else(bad)?;
        let (name, version) = header
            .strip_prefix("# ")
            .and_then(|h| h.trim().rsplit_once(" v"))
            .ok_or_else(bad)?;
        let version = version.parse().map_err(|_| bad())?;
        let (system, user) = match body.split_once("\n---\n") {
            Some((s, u)) => (Some(s.trim().to_owned()), u.trim().to_owned()),
            None => (None, body.trim().to_owned()),
        };
        Ok(Self {
            name: name.to_owned(),
            version,
            system,
            user,
        })
    }

    /// Renders to chat messages: an optional system message and one user message.
    pub fn render(&self, vars: &[(&str, &str)]) -> Result<Vec<ChatMessage>, TemplateError> {
        let mut out = Vec::new();
        if let Some(s) = &self.system {
            out.push(ChatMessage::system(self.fill(s, vars)?));
        }
        out.push(ChatMessage::user(self.fill(&self.user, vars)?));
        Ok(out)
    }

    /// Renders the user part alone.
    pub fn render_user(&self, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
        self.fill(&self.user, vars)
    }

    fn fill(&self, text: &str, vars: &[(&str, &str)]) -> Result<String, TemplateError> {
        let vars: HashMap<&str, &str> = vars.iter().copied().collect();
        let mut out = String::with_capacity(text.len());
        let mut rest = text;
        while let Some(start) = rest.find("{{") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            let Some(end) = after.find("}}") else {
                out.push_str(&rest[start..]);
                return Ok(out);
            };
            let key = after[..end].trim();
            let value = vars.get(key).ok_or_else(|| TemplateError::MissingVar {
                template: self.name.clone(),
                var: key.to_owned(),
            })?;
            out.push_str(value);
            rest = &after[end + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

const BUILTIN: &[(&str, &str)] = &[
    ("analyze_execution", include_str!("../templates/analyze_execution.txt")),
    ("confirm_generate", include_str!("../templates/confirm_generate.txt")),
    ("construct_intent_tree", include_str!("../templates/construct_intent_tree.txt")),
    ("extract_triple", include_str!("../templates/extract_triple.txt")),
    ("generate_code", include_str!("../templates/generate_code.txt")),
    ("modify_graph", include_str!("../templates/modify_graph.txt")),
    ("paraphrase_intent_tree", include_str!("../templates/paraphrase_intent_tree.txt")),
    ("propose_updates", include_str!("../templates/propose_updates.txt")),
    ("repair", include_str!("../templates/repair.txt")),
    ("simulate_user", include_str!("../templates/simulate_user.txt")),
    ("student_extract", include_str!("../templates/student_extract.txt")),
];

#[derive(Clone, Debug)]
pub struct Templates {
    by_name: BTreeMap<String, Template>,
}

impl Default for Templates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Templates {
    /// Templates compiled into the binary from the repo's `templates/` directory.
    pub fn builtin() -> Self {
        let by_name = BUILTIN
            .iter()
            .map(|(file, text)| {
                let t = Template::parse(file, text).expect("builtin templates are well formed");
                (t.name.clone(), t)
            })
            .collect();
        Self { by_name }
    }

    /// Builtins overridden by every `*.txt` file in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut out = Self::builtin();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                let text = std::fs::read_to_string(&path)?;
                let t = Template::parse(&path.display().to_string(), &text)?;
                out.by_name.insert(t.name.clone(), t);
            }
        }
        Ok(out)
    }

    pub fn get(&self, name: &str) -> Result<&Template, TemplateError> {
        self.by_name
            .get(name)
            .ok_or_else(|| TemplateError::Unknown(name.to_owned()))
    }

    pub fn render(
        &self,
        name: &str,
        vars: &[(&str, &str)],
    ) -> Result<Vec<ChatMessage>, TemplateError> {
        self.get(name)?.render(vars)
    }
}
