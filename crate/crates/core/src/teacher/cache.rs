use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::prompt::PromptKind;
use super::verdict::TeacherVerdict;

type Key = (String, PromptKind, String);

fn key_of(v: &TeacherVerdict) -> Key {
    (v.message_id.clone(), v.prompt_kind, v.teacher_model.clone())
}

/// Verdicts keyed by (message id, prompt kind, teacher model). When backed by
/// a file, every new verdict is appended as one JSON line; on reload the first
/// line for a key wins.
#[derive(Default)]
pub struct LabelCache {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

#[derive(Default)]
struct Inner {
    entries: HashMap<Key, TeacherVerdict>,
    sink: Option<Box<dyn Write + Send>>,
}

impl std::fmt::Debug for LabelCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LabelCache").field("path", &self.path).field("len", &self.len()).finish()
    }
}

impl LabelCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(path: &Path) -> io::Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            for v in read_verdicts(path)? {
                entries.entry(key_of(&v)).or_insert(v);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            inner: Mutex::new(Inner {
                entries,
                sink: Some(Box::new(file)),
            }),
        })
    }

    /// Empty cache appending its records to `sink`.
    pub fn with_sink(sink: Box<dyn Write + Send>) -> Self {
        Self {
            path: None,
            inner: Mutex::new(Inner {
                entries: HashMap::new(),
                sink: Some(sink),
            }),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, message_id: &str, kind: PromptKind, model: &str) -> Option<TeacherVerdict> {
        let key = (message_id.to_string(), kind, model.to_string());
        self.inner.lock().unwrap().entries.get(&key).cloned()
    }

    /// Stores the verdict unless its key is present. Returns whether it was new.
    pub fn insert(&self, verdict: TeacherVerdict) -> io::Result<bool> {
        let mut inner = self.inner.lock().unwrap();
        let key = key_of(&verdict);
        if inner.entries.contains_key(&key) {
            return Ok(false);
        }
        if let Some(sink) = inner.sink.as_mut() {
            let mut line = serde_json::to_string(&verdict).map_err(io::Error::other)?;
            line.push('\n');
            sink.write_all(line.as_bytes())?;
            sink.flush()?;
        }
        inner.entries.insert(key, verdict);
        Ok(true)
    }

    pub fn verdicts(&self) -> Vec<TeacherVerdict> {
        let mut v: Vec<TeacherVerdict> = self.inner.lock().unwrap().entries.values().cloned().collect();
        v.sort_by_key(|a| key_of(a));
        v
    }
}

/// Every verdict in a cache file, in file order.
pub fn read_verdicts(path: &Path) -> io::Result<Vec<TeacherVerdict>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}
