//! Building knowledge bases from a source tree and storing them as JSON.

use std::path::{Path, PathBuf};

use manimkit_core::docs::{module_name, parse_source, ApiEntry, KbFile, KnowledgeBase};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{io_err, KitError, KitResult};

/// Python files under `root`, as (relative path with `/` separators, absolute path), sorted.
fn python_files(root: &Path) -> KitResult<Vec<(String, PathBuf)>> {
    if !root.is_dir() {
        return Err(KitError::Environment(format!("{}: not a directory", root.display())));
    }
    let mut files = Vec::new();
    for e in WalkDir::new(root).sort_by_file_name() {
        let e = e.map_err(|e| KitError::Environment(format!("{}: {e}", root.display())))?;
        if e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "py") {
            let rel = e.path().strip_prefix(root).unwrap_or(e.path());
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            files.push((rel, e.into_path()));
        }
    }
    files.sort();
    Ok(files)
}

#[derive(Clone, Debug)]
pub struct BuiltKb {
    pub kb: KnowledgeBase,
    /// Hex SHA-256 over every file's relative path and contents.
    pub source_hash: String,
    pub files: usize,
    pub skipped: Vec<String>,
}

/// Parses every `.py` file under `root`. Files that cannot be tokenized are
/// logged and skipped.
pub fn build_kb(root: &Path) -> KitResult<BuiltKb> {
    let files = python_files(root)?;
    let sources: Vec<(String, String)> = files
        .iter()
        .map(|(rel, abs)| {
            let bytes = std::fs::read(abs).map_err(io_err(abs))?;
            Ok((rel.clone(), String::from_utf8_lossy(&bytes).into_owned()))
        })
        .collect::<KitResult<_>>()?;
    let mut h = Sha256::new();
    for (rel, src) in &sources {
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(src.as_bytes());
        h.update([0]);
    }
    let parsed: Vec<(String, Option<Vec<ApiEntry>>)> = sources
        .par_iter()
        .map(|(rel, src)| (rel.clone(), parse_source(src, &module_name(rel), rel).ok()))
        .collect();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (rel, r) in parsed {
        match r {
            Some(e) => entries.extend(e),
            None => {
                log::warn!("{rel}: could not be tokenized, skipped");
                skipped.push(rel);
            }
        }
    }
    Ok(BuiltKb { kb: KnowledgeBase::new(entries), source_hash: hex::encode(h.finalize()), files: files.len(), skipped })
}

pub fn save_kb(path: &Path, kb: &KnowledgeBase, source_hash: &str) -> KitResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let text = serde_json::to_string_pretty(&kb.to_file(source_hash))?;
    std::fs::write(path, text).map_err(io_err(path))
}

/// The knowledge base and its source hash.
pub fn load_kb(path: &Path) -> KitResult<(KnowledgeBase, String)> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let file: KbFile = serde_json::from_str(&text)?;
    let hash = file.source_hash.clone();
    Ok((KnowledgeBase::from_file(file)?, hash))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(d.path().join("pkg/sub")).unwrap();
        std::fs::write(d.path().join("pkg/__init__.py"), "def top(a):\n    \"\"\"Top.\n\n    Parameters\n    ----------\n    a\n        A.\n    \"\"\"\n").unwrap();
        std::fs::write(d.path().join("pkg/sub/shapes.py"), "class Dot:\n    \"\"\"A dot.\"\"\"\n    def __init__(self, r=1):\n        pass\n").unwrap();
        std::fs::write(d.path().join("pkg/bad.py"), "x = \"\"\"never closed\n").unwrap();
        std::fs::write(d.path().join("pkg/notes.txt"), "ignored").unwrap();
        d
    }

    #[test]
    fn build_save_load() {
        let d = tree();
        let built = build_kb(&d.path().join("pkg")).unwrap();
        assert_eq!(built.files, 3);
        assert_eq!(built.skipped, ["bad.py"]);
        let names: Vec<&str> = built.kb.entries().iter().map(|e| e.qualified_name.as_str()).collect();
        assert_eq!(names, ["sub.shapes.Dot", "top"]);
        assert_eq!(built.kb.lookup("Dot")[0].signature, "Dot(r=1)");
        let path = d.path().join("out/kb.json");
        save_kb(&path, &built.kb, &built.source_hash).unwrap();
        let (kb, hash) = load_kb(&path).unwrap();
        assert_eq!((kb, hash), (built.kb.clone(), built.source_hash.clone()));
        let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(raw["version"], 1);
    }

    #[test]
    fn hash_tracks_contents() {
        let d = tree();
        let a = build_kb(d.path()).unwrap().source_hash;
        assert_eq!(a, build_kb(d.path()).unwrap().source_hash);
        std::fs::write(d.path().join("pkg/extra.py"), "\n").unwrap();
        assert_ne!(a, build_kb(d.path()).unwrap().source_hash);
        assert!(build_kb(&d.path().join("missing")).is_err());
    }
}
