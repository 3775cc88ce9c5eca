//! Directory-backed session persistence: one JSON document per patient,
//! replaced atomically on every write.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dbn::PredictionTrace;
use crate::pgm::Assignment;

/// Everything a session needs to be rebuilt after a restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub patient_id: String,
    pub static_evidence: Assignment,
    /// Accepted daily observations; index 0 is day 1.
    pub days: Vec<Assignment>,
    pub trace: PredictionTrace,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
}

const SUFFIX: &str = ".session.json";

/// Patient ids double as file names, so they are restricted to a safe
/// alphabet.
pub fn valid_patient_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, patient_id: &str) -> PathBuf {
        self.dir.join(format!("{patient_id}{SUFFIX}"))
    }

    /// Writes to a temporary file and renames it over the old snapshot, so a
    /// crash leaves either the old or the new version.
    pub fn save(&self, record: &SessionRecord) -> std::io::Result<()> {
        let final_path = self.path(&record.patient_id);
        let tmp = self.dir.join(format!(".{}{SUFFIX}.tmp", record.patient_id));
        let mut text = serde_json::to_string_pretty(record).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(&tmp, text)?;
        fs::rename(&tmp, &final_path)
    }

    /// Every stored session, ordered by patient id.
    pub fn load_all(&self) -> Result<Vec<SessionRecord>, String> {
        let mut out = Vec::new();
        let entries = fs::read_dir(&self.dir).map_err(|e| format!("{}: {e}", self.dir.display()))?;
        for entry in entries {
            let path = entry.map_err(|e| e.to_string())?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.starts_with('.') || !name.ends_with(SUFFIX) {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let rec: SessionRecord = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            out.push(rec);
        }
        out.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
        Ok(out)
    }
}
