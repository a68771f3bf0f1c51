use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ast::{FuncDef, StmtKind};
use super::check::check_learned_body;
use super::diagnostic::{Diagnostic, DiagnosticCode, Phase, Pos};
use super::format::format;
use super::parse;
use super::Program;

/// Primitive robot APIs every program may call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoreApi {
    Pick,
    PlaceOn,
    PlaceAt,
    Move,
    GetObjPose,
    GetObjMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Object,
    Number,
}

impl CoreApi {
    pub const ALL: [CoreApi; 6] = [
        CoreApi::Pick,
        CoreApi::PlaceOn,
        CoreApi::PlaceAt,
        CoreApi::Move,
        CoreApi::GetObjPose,
        CoreApi::GetObjMass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoreApi::Pick => "pick",
            CoreApi::PlaceOn => "place_on",
            CoreApi::PlaceAt => "place_at",
            CoreApi::Move => "move",
            CoreApi::GetObjPose => "get_obj_pose",
            CoreApi::GetObjMass => "get_obj_mass",
        }
    }

    pub fn from_name(name: &str) -> Option<CoreApi> {
        CoreApi::ALL.into_iter().find(|api| api.name() == name)
    }

    pub fn params(self) -> &'static [(&'static str, ParamKind)] {
        match self {
            CoreApi::Pick => &[("obj", ParamKind::Object)],
            CoreApi::PlaceOn => &[("base", ParamKind::Object)],
            CoreApi::PlaceAt => &[("x", ParamKind::Number), ("y", ParamKind::Number), ("z", ParamKind::Number)],
            CoreApi::Move => &[("dx", ParamKind::Number), ("dy", ParamKind::Number), ("dz", ParamKind::Number)],
            CoreApi::GetObjPose => &[("obj", ParamKind::Object)],
            CoreApi::GetObjMass => &[("obj", ParamKind::Object)],
        }
    }

    pub fn doc(self) -> &'static str {
        match self {
            CoreApi::Pick => "pick(obj) -- grasp the named object; the hand must be empty and nothing may rest on the object",
            CoreApi::PlaceOn => "place_on(base) -- release the held object on top of base, or inside it when base is a cup",
            CoreApi::PlaceAt => "place_at(x, y, z) -- release the held object with its center at (x, y, z) meters",
            CoreApi::Move => "move(dx, dy, dz) -- move the gripper by the offsets in meters (+x forward, +y left, +z up)",
            CoreApi::GetObjPose => "get_obj_pose(obj) -- return the object's center as a pose with fields .x .y .z",
            CoreApi::GetObjMass => "get_obj_mass(obj) -- return the object's mass in kilograms; the only way to read a hidden mass",
        }
    }
}

pub const CORE_API_NAMES: [&str; 6] = ["pick", "place_on", "place_at", "move", "get_obj_pose", "get_obj_mass"];

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedApi {
    pub name: String,
    pub def: FuncDef,
    /// Canonically formatted definition.
    pub source: String,
    pub doc: String,
}

/// Core APIs plus the high-level APIs learned from successful episodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApiRegistry {
    learned: Vec<LearnedApi>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RegistryFile {
    version: u32,
    learned: Vec<RegistryRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RegistryRecord {
    name: String,
    source: String,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryFileError {
    #[error("registry file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed registry file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported registry file version {0}")]
    Version(u32),
    #[error("learned API '{name}' no longer validates: {diagnostic}")]
    Invalid { name: String, diagnostic: Diagnostic },
}

fn collision(pos: Pos, message: String) -> Diagnostic {
    Diagnostic::new(Phase::Check, pos, DiagnosticCode::UnknownApi, message)
}

impl ApiRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn learned(&self) -> &[LearnedApi] {
        &self.learned
    }

    pub fn get_learned(&self, name: &str) -> Option<&LearnedApi> {
        self.learned.iter().find(|api| api.name == name)
    }

    pub fn is_known(&self, name: &str) -> bool {
        CoreApi::from_name(name).is_some() || self.get_learned(name).is_some()
    }

    /// Parses a single function definition, validates its body against the
    /// APIs known right now, and adds it. The registry is unchanged on error.
    pub fn register_api(&mut self, funcdef_source: &str) -> Result<&LearnedApi, Diagnostic> {
        let program = parse(funcdef_source)?;
        let def = single_funcdef(&program)?;
        let pos = program
            .statements
            .iter()
            .find(|s| matches!(s.kind, StmtKind::FuncDef(_)))
            .map(|s| s.pos)
            .unwrap_or_default();
        if CoreApi::from_name(&def.name).is_some() {
            return Err(collision(pos, format!("'{}' is a core API and cannot be redefined", def.name)));
        }
        if self.get_learned(&def.name).is_some() {
            return Err(collision(pos, format!("learned API '{}' is already registered", def.name)));
        }
        if let Some(first) = check_learned_body(&def, self).into_iter().next() {
            return Err(first);
        }
        let mut used: Vec<String> = Vec::new();
        for stmt in &def.body {
            let mut names = Vec::new();
            super::ast::collect_stmt_calls(stmt, &mut names);
            for n in names {
                if !used.contains(&n) {
                    used.push(n);
                }
            }
        }
        let doc = if used.is_empty() {
            format!("{}({}) -- learned API", def.name, def.params.join(", "))
        } else {
            format!(
                "{}({}) -- learned API built on {}",
                def.name,
                def.params.join(", "),
                used.join(", ")
            )
        };
        let source = format(&Program {
            statements: vec![super::ast::Stmt::new(StmtKind::FuncDef(def.clone()), Pos::new(1, 1))],
        });
        self.learned.push(LearnedApi {
            name: def.name.clone(),
            def,
            source,
            doc,
        });
        Ok(self.learned.last().expect("just pushed"))
    }

    /// One-line signature per API, core first, learned in registration order.
    pub fn docs(&self) -> Vec<String> {
        CoreApi::ALL
            .iter()
            .map(|api| api.doc().to_string())
            .chain(self.learned.iter().map(|api| api.doc.clone()))
            .collect()
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for api in &self.learned {
            h.update(api.name.as_bytes());
            h.update([0]);
            h.update(api.source.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }

    pub fn to_json(&self) -> String {
        let file = RegistryFile {
            version: 1,
            learned: self
                .learned
                .iter()
                .map(|api| RegistryRecord {
                    name: api.name.clone(),
                    source: api.source.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("registry serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryFileError> {
        let file: RegistryFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(RegistryFileError::Version(file.version));
        }
        let mut registry = ApiRegistry::new();
        for record in file.learned {
            registry
                .register_api(&record.source)
                .map_err(|diagnostic| RegistryFileError::Invalid {
                    name: record.name.clone(),
                    diagnostic,
                })?;
        }
        Ok(registry)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), RegistryFileError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RegistryFileError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn single_funcdef(program: &Program) -> Result<FuncDef, Diagnostic> {
    let mut found = None;
    for stmt in &program.statements {
        match &stmt.kind {
            StmtKind::Comment(_) => {}
            StmtKind::FuncDef(def) if found.is_none() => found = Some(def.clone()),
            _ => {
                return Err(Diagnostic::new(
                    Phase::Parse,
                    stmt.pos,
                    DiagnosticCode::Syntax,
                    "expected exactly one function definition",
                ))
            }
        }
    }
    found.ok_or_else(|| {
        Diagnostic::new(
            Phase::Parse,
            Pos::new(1, 1),
            DiagnosticCode::Syntax,
            "expected a function definition ('def name(params): ... end')",
        )
    })
}
