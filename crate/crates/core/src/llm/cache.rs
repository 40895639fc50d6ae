//! Append-only JSON-lines store of chat exchanges.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use super::{ChatExchange, GatewayError};

/// In-memory index of a cache file, keyed by request key.
///
/// Only the first exchange recorded for a key is served on lookup.
#[derive(Debug, Default)]
pub struct ExchangeCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, String>>,
    writer: Mutex<Option<File>>,
}

fn cache_err(path: &Path, message: impl ToString) -> GatewayError {
    GatewayError::Cache {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

fn parse_lines(path: &Path, text: &str) -> Result<HashMap<String, String>, GatewayError> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut entries = HashMap::new();
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str::<ChatExchange>(line) {
            Ok(exchange) => {
                entries
                    .entry(exchange.key)
                    .or_insert(exchange.response_text);
            }
            // A crash mid-append can leave a partial final record.
            Err(err) if i + 1 == lines.len() => {
                log::warn!(
                    "{}: ignoring corrupt trailing record: {err}",
                    path.display()
                );
            }
            Err(err) => return Err(cache_err(path, format!("line {}: {err}", i + 1))),
        }
    }
    Ok(entries)
}

impl ExchangeCache {
    /// Loads a cache file for read-only lookups.
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path).map_err(|e| cache_err(path, e))?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            entries: RwLock::new(parse_lines(path, &text)?),
            writer: Mutex::new(None),
        })
    }

    /// Opens (or creates) a cache file, loading existing records and
    /// positioning for appends.
    pub fn open_for_append(path: &Path) -> Result<Self, GatewayError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| cache_err(path, e))?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| cache_err(path, e))?;
        let mut text = String::new();
        file.read_to_string(&mut text)
            .map_err(|e| cache_err(path, e))?;
        let entries = parse_lines(path, &text)?;
        if !text.is_empty() && !text.ends_with('\n') {
            file.seek(SeekFrom::End(0))
                .map_err(|e| cache_err(path, e))?;
            file.write_all(b"\n").map_err(|e| cache_err(path, e))?;
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn from_exchanges<I: IntoIterator<Item = ChatExchange>>(exchanges: I) -> Self {
        let mut entries = HashMap::new();
        for e in exchanges {
            entries.entry(e.key).or_insert(e.response_text);
        }
        Self {
            path: None,
            entries: RwLock::new(entries),
            writer: Mutex::new(None),
        }
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(key)
            .cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes one record as a single line and indexes it.
    pub fn append(&self, exchange: ChatExchange) -> Result<(), GatewayError> {
        let path = self.path.clone().unwrap_or_default();
        let mut line = serde_json::to_string(&exchange).map_err(|e| cache_err(&path, e))?;
        line.push('\n');
        {
            let mut writer = self.writer.lock().expect("cache writer poisoned");
            if let Some(file) = writer.as_mut() {
                file.write_all(line.as_bytes())
                    .map_err(|e| cache_err(&path, e))?;
                file.flush().map_err(|e| cache_err(&path, e))?;
            }
        }
        self.entries
            .write()
            .expect("cache lock poisoned")
            .entry(exchange.key)
            .or_insert(exchange.response_text);
        Ok(())
    }
}
