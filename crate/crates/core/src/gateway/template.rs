//! Role templates: an intro, a rule block and exemplars per LLM role,
//! stored as editable text assets with `[intro]`, `[rules]` and
//! `[exemplars]` sections.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Simplify,
    Solve,
    Summarize,
    Supervise,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Simplify, Role::Solve, Role::Summarize, Role::Supervise];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Simplify => "simplify",
            Role::Solve => "solve",
            Role::Summarize => "summarize",
            Role::Supervise => "supervise",
        }
    }

    fn bundled(self) -> &'static str {
        match self {
            Role::Simplify => include_str!("../../assets/templates/simplify.txt"),
            Role::Solve => include_str!("../../assets/templates/solve.txt"),
            Role::Summarize => include_str!("../../assets/templates/summarize.txt"),
            Role::Supervise => include_str!("../../assets/templates/supervise.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleTemplate {
    pub role: Role,
    pub intro: String,
    pub rules: String,
    pub exemplars: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template for {role} is missing the [{section}] section")]
    MissingSection { role: &'static str, section: &'static str },
    #[error("template for {role} has unknown section [{section}] on line {line}")]
    UnknownSection { role: &'static str, section: String, line: usize },
    #[error("template for {role} has text before the first section header")]
    Preamble { role: &'static str },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RoleTemplate {
    pub fn parse(role: Role, text: &str) -> Result<Self, TemplateError> {
        let mut sections: [Option<String>; 3] = [None, None, None];
        let mut current: Option<usize> = None;
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.starts_with('[') && trimmed.ends_with(']') && !trimmed.contains(' ') {
                let name = &trimmed[1..trimmed.len() - 1];
                let idx = match name {
                    "intro" => 0,
                    "rules" => 1,
                    "exemplars" => 2,
                    _ => {
                        return Err(TemplateError::UnknownSection {
                            role: role.as_str(),
                            section: name.to_string(),
                            line: i + 1,
                        })
                    }
                };
                sections[idx] = Some(String::new());
                current = Some(idx);
                continue;
            }
            match current {
                Some(idx) => {
                    let s = sections[idx].as_mut().expect("section opened");
                    s.push_str(line);
                    s.push('\n');
                }
                None if trimmed.is_empty() => {}
                None => return Err(TemplateError::Preamble { role: role.as_str() }),
            }
        }
        let [intro, rules, exemplars] = sections;
        let take = |s: Option<String>, section: &'static str| {
            s.map(|t| t.trim().to_string())
                .ok_or(TemplateError::MissingSection {
                    role: role.as_str(),
                    section,
                })
        };
        Ok(RoleTemplate {
            role,
            intro: take(intro, "intro")?,
            rules: take(rules, "rules")?,
            exemplars: take(exemplars, "exemplars")?,
        })
    }

    pub fn bundled(role: Role) -> Self {
        RoleTemplate::parse(role, role.bundled()).expect("bundled templates are well-formed")
    }
}

/// One template per role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub simplify: RoleTemplate,
    pub solve: RoleTemplate,
    pub summarize: RoleTemplate,
    pub supervise: RoleTemplate,
}

impl Default for Templates {
    fn default() -> Self {
        Templates {
            simplify: RoleTemplate::bundled(Role::Simplify),
            solve: RoleTemplate::bundled(Role::Solve),
            summarize: RoleTemplate::bundled(Role::Summarize),
            supervise: RoleTemplate::bundled(Role::Supervise),
        }
    }
}

impl Templates {
    /// Loads `<role>.txt` files from `dir`; missing files fall back to the
    /// bundled template.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let load = |role: Role| -> Result<RoleTemplate, TemplateError> {
            let path = dir.join(format!("{}.txt", role.as_str()));
            if !path.exists() {
                return Ok(RoleTemplate::bundled(role));
            }
            let text = std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })?;
            RoleTemplate::parse(role, &text)
        };
        Ok(Templates {
            simplify: load(Role::Simplify)?,
            solve: load(Role::Solve)?,
            summarize: load(Role::Summarize)?,
            supervise: load(Role::Supervise)?,
        })
    }
}
