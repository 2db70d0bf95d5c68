use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, FixedOffset, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::StoreError;
use crate::model::{EventRecord, ResolvedEvent};

pub const STORE_VERSION: u64 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct StoreFile {
    version: u64,
    events: Vec<EventRecord>,
}

/// Where serialized store snapshots go.
pub trait StoreSink: Send + Sync {
    fn write(&self, path: &Path, bytes: &[u8]) -> io::Result<()>;
}

/// Writes a sibling temp file, syncs it and renames it over the target.
#[derive(Debug, Default)]
pub struct AtomicFileSink;

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl StoreSink for AtomicFileSink {
    fn write(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let tmp = dir.join(format!(
            ".{name}.{}.{}.tmp",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result
    }
}

/// Local calendar: a JSON file mirrored in memory.
///
/// Records stay sorted by start instant, ties broken by id. Writers are
/// serialized; a failed write leaves both file and memory untouched.
pub struct CalendarStore {
    path: PathBuf,
    records: RwLock<Vec<EventRecord>>,
    writer: Mutex<()>,
    sink: Box<dyn StoreSink>,
}

impl std::fmt::Debug for CalendarStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CalendarStore")
            .field("path", &self.path)
            .field("len", &self.len())
            .finish()
    }
}

fn sort_records(records: &mut [EventRecord]) {
    records.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.id.cmp(&b.id)));
}

impl CalendarStore {
    /// Opens `path`, loading existing records. A missing file is an empty store.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        Self::open_with_sink(path, Box::new(AtomicFileSink))
    }

    pub fn open_with_sink(
        path: impl Into<PathBuf>,
        sink: Box<dyn StoreSink>,
    ) -> Result<Self, StoreError> {
        let path = path.into();
        let records = match fs::read(&path) {
            Ok(bytes) => Self::decode(&path, &bytes)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(source) => {
                return Err(StoreError::Io {
                    path: path.display().to_string(),
                    source,
                });
            }
        };
        Ok(Self {
            path,
            records: RwLock::new(records),
            writer: Mutex::new(()),
            sink,
        })
    }

    fn decode(path: &Path, bytes: &[u8]) -> Result<Vec<EventRecord>, StoreError> {
        let file: StoreFile = serde_json::from_slice(bytes).map_err(|e| StoreError::Corrupt {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if file.version != STORE_VERSION {
            return Err(StoreError::Version(file.version));
        }
        let mut records = file.events;
        sort_records(&mut records);
        let mut ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(StoreError::Corrupt {
                path: path.display().to_string(),
                message: "duplicate record id".into(),
            });
        }
        Ok(records)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of every record, in store order.
    pub fn records(&self) -> Vec<EventRecord> {
        self.records.read().expect("store lock poisoned").clone()
    }

    pub fn get(&self, id: &str) -> Option<EventRecord> {
        self.records
            .read()
            .expect("store lock poisoned")
            .iter()
            .find(|r| r.id == id)
            .cloned()
    }

    /// Applies `change` to a copy of the records, persists it, then publishes.
    fn mutate<T>(
        &self,
        change: impl FnOnce(&mut Vec<EventRecord>) -> Result<T, StoreError>,
    ) -> Result<T, StoreError> {
        let _guard = self.writer.lock().expect("store writer poisoned");
        let mut next = self.records.read().expect("store lock poisoned").clone();
        let out = change(&mut next)?;
        sort_records(&mut next);
        let doc = StoreFile {
            version: STORE_VERSION,
            events: next,
        };
        let bytes = serde_json::to_vec_pretty(&doc).expect("store document serializes");
        self.sink
            .write(&self.path, &bytes)
            .map_err(|source| StoreError::Io {
                path: self.path.display().to_string(),
                source,
            })?;
        *self.records.write().expect("store lock poisoned") = doc.events;
        Ok(out)
    }

    pub fn create_event(&self, event: &ResolvedEvent) -> Result<EventRecord, StoreError> {
        self.create_event_at(event, Utc::now().fixed_offset())
    }

    /// Like [`create_event`](Self::create_event) with an explicit creation time.
    pub fn create_event_at(
        &self,
        event: &ResolvedEvent,
        created_at: DateTime<FixedOffset>,
    ) -> Result<EventRecord, StoreError> {
        self.mutate(|records| {
            let mut id = Uuid::new_v4().to_string();
            while records.iter().any(|r| r.id == id) {
                id = Uuid::new_v4().to_string();
            }
            let record = EventRecord::from_resolved(id, event, created_at);
            records.push(record.clone());
            Ok(record)
        })
    }

    /// Records a provider id on a local record that has none yet.
    pub fn set_external_id(&self, id: &str, external_id: &str) -> Result<EventRecord, StoreError> {
        self.mutate(|records| {
            let record = records
                .iter_mut()
                .find(|r| r.id == id)
                .ok_or_else(|| StoreError::NotFound(id.to_string()))?;
            if record.external_id.is_some() {
                return Err(StoreError::AlreadySynced(id.to_string()));
            }
            record.external_id = Some(external_id.to_string());
            Ok(record.clone())
        })
    }

    /// Records intersecting the half-open range `[range_start, range_end)`.
    /// An empty or inverted range yields nothing.
    pub fn list_events(
        &self,
        range_start: &DateTime<FixedOffset>,
        range_end: &DateTime<FixedOffset>,
    ) -> Vec<EventRecord> {
        if range_start >= range_end {
            return Vec::new();
        }
        self.records
            .read()
            .expect("store lock poisoned")
            .iter()
            .filter(|r| r.overlaps(range_start, range_end))
            .cloned()
            .collect()
    }

    /// Records overlapping the candidate's window.
    pub fn find_conflicts(&self, candidate: &ResolvedEvent) -> Vec<EventRecord> {
        let records = self.records.read().expect("store lock poisoned");
        // sorted by start: nothing at or after candidate.end can overlap
        let upper = records.partition_point(|r| r.start < candidate.end);
        records[..upper]
            .iter()
            .filter(|r| candidate.start < r.end)
            .cloned()
            .collect()
    }
}
