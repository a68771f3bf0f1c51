//! Parsing of the `--backend` flag.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};

use triples_core::gateway::{
    ChatBackend, FaultyBackend, OracleBackend, RemoteBackend, RemoteConfig, ScriptedBackend,
};
use triples_core::pipeline::Backends;

#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Oracle,
    Scripted(PathBuf),
    Remote,
    Faulty(usize),
}

impl FromStr for BackendSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        Ok(match (kind, arg) {
            ("oracle", None) => BackendSpec::Oracle,
            ("remote", None) => BackendSpec::Remote,
            ("scripted", Some(path)) if !path.is_empty() => {
                BackendSpec::Scripted(PathBuf::from(path))
            }
            ("faulty", Some(n)) => BackendSpec::Faulty(
                n.parse()
                    .with_context(|| format!("faulty backend needs a fault count, got '{n}'"))?,
            ),
            _ => {
                bail!("unknown backend '{s}' (expected oracle, scripted:PATH, remote or faulty:N)")
            }
        })
    }
}

impl BackendSpec {
    /// One backend instance shared by every role.
    pub fn build(&self, remote: &RemoteConfig) -> Result<Backends> {
        let backend: Arc<dyn ChatBackend> = match self {
            BackendSpec::Oracle => Arc::new(OracleBackend::new()),
            BackendSpec::Scripted(path) => Arc::new(
                ScriptedBackend::load(path)
                    .with_context(|| format!("loading script {}", path.display()))?,
            ),
            BackendSpec::Remote => Arc::new(RemoteBackend::new(remote)?),
            BackendSpec::Faulty(n) => {
                Arc::new(FaultyBackend::new(Arc::new(OracleBackend::new()), *n))
            }
        };
        Ok(Backends::uniform(backend))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        assert_eq!(
            "oracle".parse::<BackendSpec>().unwrap(),
            BackendSpec::Oracle
        );
        assert_eq!(
            "remote".parse::<BackendSpec>().unwrap(),
            BackendSpec::Remote
        );
        assert_eq!(
            "faulty:2".parse::<BackendSpec>().unwrap(),
            BackendSpec::Faulty(2)
        );
        assert_eq!(
            "scripted:a/b.json".parse::<BackendSpec>().unwrap(),
            BackendSpec::Scripted(PathBuf::from("a/b.json"))
        );
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "gpt",
            "oracle:1",
            "faulty:x",
            "faulty",
            "scripted",
            "scripted:",
        ] {
            assert!(bad.parse::<BackendSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn remote_without_endpoint_fails_to_build() {
        let err = BackendSpec::Remote
            .build(&RemoteConfig::default())
            .err()
            .unwrap();
        assert!(err.to_string().contains("endpoint"));
    }
}
