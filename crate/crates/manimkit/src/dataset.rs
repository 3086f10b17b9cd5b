//! JSONL datasets and offline completion files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, KitError, KitResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub description: String,
    pub reference_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_video: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub id: String,
    pub completion: String,
}

/// Non-blank lines parsed as `T`, with 1-based line numbers.
fn read_jsonl<T: DeserializeOwned>(path: &Path) -> KitResult<Vec<(usize, T)>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(line).map_err(|e| KitError::Dataset(format!("line {}: {e}", i + 1)))?;
        out.push((i + 1, v));
    }
    Ok(out)
}

fn check_unique<'a>(ids: impl Iterator<Item = (usize, &'a str)>) -> KitResult<()> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (line, id) in ids {
        if let Some(first) = seen.insert(id, line) {
            return Err(KitError::Dataset(format!("duplicate id {id:?} on lines {first} and {line}")));
        }
    }
    Ok(())
}

/// Records in file order. Relative `reference_video` paths resolve against
/// the dataset file's directory.
pub fn load_dataset(path: &Path) -> KitResult<Vec<DatasetRecord>> {
    let rows: Vec<(usize, DatasetRecord)> = read_jsonl(path)?;
    for (line, r) in &rows {
        if r.id.is_empty() {
            return Err(KitError::Dataset(format!("line {line}: empty id")));
        }
        if r.reference_code.trim().is_empty() {
            return Err(KitError::Dataset(format!("line {line}: empty reference_code")));
        }
    }
    check_unique(rows.iter().map(|(l, r)| (*l, r.id.as_str())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(rows
        .into_iter()
        .map(|(_, mut r)| {
            r.reference_video = r.reference_video.map(|v| base.join(v));
            r
        })
        .collect())
}

/// `{"id", "completion"}` lines keyed by id.
pub fn load_completions(path: &Path) -> KitResult<HashMap<String, String>> {
    let rows: Vec<(usize, Completion)> = read_jsonl(path)?;
    check_unique(rows.iter().map(|(l, c)| (*l, c.id.as_str())))?;
    Ok(rows.into_iter().map(|(_, c)| (c.id, c.completion)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> (tempfile::TempDir, PathBuf) {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("data.jsonl");
        std::fs::write(&p, text).unwrap();
        (d, p)
    }

    fn line(id: &str) -> String {
        format!("{{\"id\":\"{id}\",\"description\":\"d\",\"reference_code\":\"x = 1\"}}\n")
    }

    #[test]
    fn records_in_order() {
        let (_d, p) = write(&format!("{}\n{}{}", line("a"), line("b"), line("c")));
        let ids: Vec<String> = load_dataset(&p).unwrap().into_iter().map(|r| r.id).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn missing_field_names_the_line() {
        let (_d, p) = write(&format!("{}{{\"id\":\"b\",\"description\":\"d\"}}\n", line("a")));
        let e = load_dataset(&p).unwrap_err().to_string();
        assert!(e.contains("line 2: missing field"), "{e}");
    }

    #[test]
    fn duplicate_names_both_lines() {
        let (_d, p) = write(&format!("{}{}{}{}", line("a"), line("b"), line("c"), line("a")));
        let e = load_dataset(&p).unwrap_err().to_string();
        assert!(e.contains("lines 1 and 4"), "{e}");
    }

    #[test]
    fn video_paths_resolve_and_completions_load() {
        let (d, p) = write("{\"id\":\"a\",\"description\":\"d\",\"reference_code\":\"x\",\"reference_video\":\"v/a.mp4\"}\n");
        assert_eq!(load_dataset(&p).unwrap()[0].reference_video.as_deref(), Some(d.path().join("v/a.mp4").as_path()));
        let c = d.path().join("c.jsonl");
        std::fs::write(&c, "{\"id\":\"a\",\"completion\":\"hi\"}\n").unwrap();
        assert_eq!(load_completions(&c).unwrap()["a"], "hi");
        std::fs::write(&c, "{\"id\":\"a\",\"completion\":\"hi\"}\n{\"id\":\"a\",\"completion\":\"x\"}\n").unwrap();
        assert!(load_completions(&c).is_err());
    }
}
