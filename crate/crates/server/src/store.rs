//! Crash-safe session persistence.
//!
//! Each session owns a directory holding an append-only `events.jsonl` and a
//! periodic `snapshot.json`. Every event line carries the session state it
//! produced, so recovery is: load the snapshot, then take the newest intact
//! event past it. A torn final line from an interrupted write is cut off on
//! load.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::session::Session;

/// A snapshot is written after this many events.
pub const SNAPSHOT_EVERY: u64 = 8;

const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub kind: String,
    /// Request that caused the transition.
    pub input: serde_json::Value,
    pub state: Session,
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// Durably appends one event, then snapshots if due.
    pub fn append(&self, event: &EventRecord) -> std::io::Result<()> {
        let dir = self.dir(&event.state.id);
        fs::create_dir_all(&dir)?;
        let mut line = serde_json::to_string(event).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(EVENTS))?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        if event.seq % SNAPSHOT_EVERY == 0 {
            self.snapshot(&event.state)?;
        }
        Ok(())
    }

    /// Writes the snapshot through a temporary file and an atomic rename.
    pub fn snapshot(&self, session: &Session) -> std::io::Result<()> {
        let dir = self.dir(&session.id);
        let tmp = dir.join(format!("{SNAPSHOT}.tmp"));
        let mut f = File::create(&tmp)?;
        serde_json::to_writer(&mut f, session).map_err(std::io::Error::other)?;
        f.sync_all()?;
        fs::rename(&tmp, dir.join(SNAPSHOT))?;
        if let Ok(d) = File::open(&dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    /// Every session found on disk.
    pub fn load_all(&self) -> std::io::Result<Vec<Session>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            let id = entry.file_name().to_string_lossy().into_owned();
            if let Some(s) = self.load(&id)? {
                out.push(s);
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    /// Latest committed state of one session.
    pub fn load(&self, id: &str) -> std::io::Result<Option<Session>> {
        let dir = self.dir(id);
        let mut best: Option<Session> = match fs::read(dir.join(SNAPSHOT)) {
            Ok(bytes) => match serde_json::from_slice(&bytes) {
                Ok(s) => Some(s),
                Err(e) => {
                    warn!(session = id, error = %e, "ignoring unreadable snapshot");
                    None
                }
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e),
        };
        let path = dir.join(EVENTS);
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(best),
            Err(e) => return Err(e),
        };
        let mut reader = BufReader::new(file);
        let mut good_len = 0u64;
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            let complete = line.ends_with('\n');
            match serde_json::from_str::<EventRecord>(line.trim_end()) {
                Ok(ev) if complete => {
                    good_len += n as u64;
                    if best.as_ref().is_none_or(|b| ev.seq > b.seq) {
                        best = Some(ev.state);
                    }
                }
                _ => {
                    warn!(session = id, "truncating torn event log tail");
                    OpenOptions::new().write(true).open(&path)?.set_len(good_len)?;
                    break;
                }
            }
        }
        Ok(best)
    }
}
