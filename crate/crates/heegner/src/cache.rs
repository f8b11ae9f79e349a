//! Append-only JSONL disk caches. One file per kind ("anplus.jsonl",
//! "modpoly.jsonl", "classpoly.jsonl") under a configurable directory; each
//! line is one JSON object {"v": schema, "key": string, "payload": value}.
//! Stale schema versions are ignored and recomputed.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "HEEGNER_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct CacheLine {
    v: u32,
    key: String,
    payload: serde_json::Value,
}

/// Process-global cache location; `None` disables disk caching.
fn global_dir() -> &'static RwLock<Option<PathBuf>> {
    static DIR: OnceLock<RwLock<Option<PathBuf>>> = OnceLock::new();
    DIR.get_or_init(|| RwLock::new(std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)))
}

/// Serializes all cache writes.
fn write_lock() -> &'static Mutex<()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
}

pub fn set_cache_dir(dir: Option<&Path>) {
    *global_dir().write().unwrap() = dir.map(Path::to_path_buf);
}

pub fn cache_dir() -> Option<PathBuf> {
    global_dir().read().unwrap().clone()
}

fn file_for(kind: &str) -> Option<PathBuf> {
    cache_dir().map(|d| d.join(format!("{kind}.jsonl")))
}

/// Latest payload stored under (kind, key) at the current schema version.
pub fn lookup(kind: &str, key: &str) -> Option<serde_json::Value> {
    let path = file_for(kind)?;
    let f = std::fs::File::open(path).ok()?;
    let mut out = None;
    for line in std::io::BufReader::new(f).lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let Ok(rec) = serde_json::from_str::<CacheLine>(&line) else {
            continue;
        };
        if rec.v == SCHEMA_VERSION && rec.key == key {
            out = Some(rec.payload);
        }
    }
    out
}

/// Append (kind, key, payload). Failures are silent: the cache is an
/// optimization, never a source of truth.
pub fn store(kind: &str, key: &str, payload: &serde_json::Value) {
    let Some(path) = file_for(kind) else { return };
    let _guard = write_lock().lock().unwrap();
    if let Some(parent) = path.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    let line = CacheLine {
        v: SCHEMA_VERSION,
        key: key.to_string(),
        payload: payload.clone(),
    };
    if let Ok(mut f) = std::fs::OpenOptions::new().create(true).append(true).open(&path) {
        if let Ok(s) = serde_json::to_string(&line) {
            let _ = writeln!(f, "{s}");
        }
    }
}

/// Keys present for a kind (for reporting).
pub fn keys(kind: &str) -> Vec<String> {
    let Some(path) = file_for(kind) else { return vec![] };
    let Ok(f) = std::fs::File::open(path) else { return vec![] };
    let mut seen = HashMap::new();
    for line in std::io::BufReader::new(f).lines() {
        let Ok(line) = line else { break };
        if let Ok(rec) = serde_json::from_str::<CacheLine>(&line) {
            if rec.v == SCHEMA_VERSION {
                seen.insert(rec.key, ());
            }
        }
    }
    let mut out: Vec<String> = seen.into_keys().collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_version_filtering() {
        let dir = tempfile::tempdir().unwrap();
        set_cache_dir(Some(dir.path()));
        assert!(lookup("t", "k").is_none());
        store("t", "k", &serde_json::json!({"x": 1}));
        assert_eq!(lookup("t", "k").unwrap()["x"], 1);
        // a stale-version line is ignored
        let path = dir.path().join("t.jsonl");
        let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
        writeln!(f, "{}", serde_json::json!({"v": 0, "key": "old", "payload": 5})).unwrap();
        assert!(lookup("t", "old").is_none());
        // later lines win
        store("t", "k", &serde_json::json!({"x": 2}));
        assert_eq!(lookup("t", "k").unwrap()["x"], 2);
        set_cache_dir(None);
    }
}
