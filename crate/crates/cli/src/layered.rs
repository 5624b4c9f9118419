//! Flag > config file > default, with the winning source of every leaf
//! recorded for the manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// A resolved configuration plus the origin of each leaf value.
pub struct Layered<T> {
    pub value: T,
    pub snapshot: Value,
    pub sources: BTreeMap<String, String>,
}

/// Parses a TOML or JSON file by extension; anything not ending in `.json`
/// is read as TOML.
pub fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let v: Value = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
    } else {
        let t: toml::Value = toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t).map_err(|e| CliError::usage(e.to_string()))?
    };
    if !v.is_object() {
        return Err(CliError::usage(format!("{}: config must be a table", path.display())));
    }
    Ok(v)
}

fn merge(base: &mut Value, over: &Value, prefix: &str, source: &str, sources: &mut BTreeMap<String, String>) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                let slot = b.entry(k.clone()).or_insert(Value::Null);
                if slot.is_object() && v.is_object() {
                    merge(slot, v, &path, source, sources);
                } else {
                    *slot = v.clone();
                    mark(v, &path, source, sources);
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

fn mark(v: &Value, path: &str, source: &str, sources: &mut BTreeMap<String, String>) {
    match v {
        Value::Object(m) if !m.is_empty() => {
            for (k, x) in m {
                mark(x, &format!("{path}.{k}"), source, sources);
            }
        }
        _ => {
            sources.insert(path.to_string(), source.to_string());
        }
    }
}

fn nest(path: &str, v: Value) -> Value {
    path.rsplit('.').fold(v, |acc, key| {
        let mut m = Map::new();
        m.insert(key.to_string(), acc);
        Value::Object(m)
    })
}

/// Layers `file` and then `flags` (dotted paths) over `defaults`.
pub fn resolve<T: Serialize + DeserializeOwned>(
    defaults: &T,
    file: Option<&Path>,
    flags: Vec<(&str, Value)>,
) -> Result<Layered<T>, CliError> {
    let mut snapshot = serde_json::to_value(defaults).map_err(|e| CliError::usage(e.to_string()))?;
    let mut sources = BTreeMap::new();
    mark(&snapshot, "", "default", &mut sources);
    sources = sources.into_iter().map(|(k, v)| (k.trim_start_matches('.').to_string(), v)).collect();
    if let Some(path) = file {
        let over = read_config_file(path)?;
        merge(&mut snapshot, &over, "", "file", &mut sources);
    }
    for (path, v) in flags {
        merge(&mut snapshot, &nest(path, v), "", "flag", &mut sources);
    }
    let value: T = serde_json::from_value(snapshot.clone()).map_err(|e| CliError::usage(format!("config: {e}")))?;
    // Re-serialize so the snapshot shows the effective values after defaults.
    let snapshot = serde_json::to_value(&value).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(Layered { value, snapshot, sources })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Serialize, Deserialize, Default)]
    struct Inner {
        a: u32,
        b: u32,
    }
    #[derive(Serialize, Deserialize, Default)]
    struct Outer {
        inner: Inner,
        c: f64,
    }

    #[test]
    fn precedence_and_sources() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "c = 2.5\n[inner]\na = 7\nb = 8\n").unwrap();
        let l = resolve(&Outer::default(), Some(&p), vec![("inner.b", json!(9))]).unwrap();
        assert_eq!((l.value.inner.a, l.value.inner.b, l.value.c), (7, 9, 2.5));
        assert_eq!(l.sources["inner.a"], "file");
        assert_eq!(l.sources["inner.b"], "flag");
        assert_eq!(l.sources["c"], "file");
        let l = resolve(&Outer::default(), None, vec![]).unwrap();
        assert!(l.sources.values().all(|s| s == "default"));
        assert_eq!(l.sources.len(), 3);
    }

    #[test]
    fn json_files_and_type_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"inner": {"a": "x"}}"#).unwrap();
        assert!(resolve(&Outer::default(), Some(&p), vec![]).is_err());
    }
}
