use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Label;
use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 5] = ["path", "label", "patient_id", "split", "noisy"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
    Unassigned,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
            SplitTag::Unassigned => "",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitTag::Unassigned => f.write_str("unassigned"),
            other => f.write_str(other.as_str()),
        }
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(SplitTag::Train),
            "test" => Ok(SplitTag::Test),
            "" | "unassigned" => Ok(SplitTag::Unassigned),
            other => Err(Error::InvalidInput(format!("unknown split tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub path: String,
    pub label: Label,
    pub patient_id: String,
    pub split: SplitTag,
    pub noisy: bool,
}

impl ManifestRecord {
    /// Record id: the path as written in the manifest.
    pub fn id(&self) -> &str {
        &self.path
    }
}

/// Corpus index. Relative record paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(records: Vec<ManifestRecord>) -> Result<Self> {
        let m = DatasetManifest { records, base_dir: PathBuf::new() };
        m.check_unique()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        let p = Path::new(&record.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.path.as_str()) {
                return Err(Error::DuplicatePath(r.path.clone()));
            }
        }
        Ok(())
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Some(false),
        "1" | "true" | "yes" => Some(true),
        _ => None,
    }
}

/// Loads a manifest CSV with header `path,label,patient_id,split,noisy`.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_err(path, 1, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, 1, e))?.clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::Manifest {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                MANIFEST_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_err(path, line, e))?;
        let bad = |message: String| Error::Manifest { path: path.to_path_buf(), line, message };
        let rec_path = row[0].to_string();
        if rec_path.is_empty() {
            return Err(bad("empty path".into()));
        }
        let label = row[1].parse::<Label>().map_err(|e| bad(e.to_string()))?;
        let split = row[3].parse::<SplitTag>().map_err(|e| bad(e.to_string()))?;
        let noisy = parse_bool(&row[4]).ok_or_else(|| bad(format!("bad noisy flag {:?}", &row[4])))?;
        if !seen.insert(rec_path.clone()) {
            return Err(Error::DuplicatePath(rec_path));
        }
        records.push(ManifestRecord { path: rec_path, label, patient_id: row[2].to_string(), split, noisy });
    }
    Ok(DatasetManifest { records, base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default() })
}

pub fn write_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, 0, e))?;
    w.write_record(MANIFEST_HEADER)?;
    for r in &m.records {
        w.write_record([
            r.path.as_str(),
            r.label.as_str(),
            r.patient_id.as_str(),
            r.split.as_str(),
            if r.noisy { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, line: usize, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::io(path, io);
        }
        unreachable!()
    }
    Error::Manifest { path: path.to_path_buf(), line, message: e.to_string() }
}

/// Maps every extrasystole record to normal.
pub fn relabel_extrasys_to_normal(m: &DatasetManifest) -> DatasetManifest {
    let mut out = m.clone();
    for r in &mut out.records {
        if r.label == Label::Extrasys {
            r.label = Label::Normal;
        }
    }
    out
}

/// Gives each unlabeled record the label of its patient's labeled records.
///
/// A patient must carry a single label among normal and murmur. Extrasystole
/// records count as normal for the consistency check and are left untouched.
pub fn label_unlabeled_by_patient(m: &DatasetManifest) -> Result<DatasetManifest> {
    let mut by_patient: BTreeMap<&str, Label> = BTreeMap::new();
    for r in m.records.iter().filter(|r| r.label.is_labeled()) {
        let class = match r.label {
            Label::Murmur => Label::Murmur,
            _ => Label::Normal,
        };
        match by_patient.get(r.patient_id.as_str()) {
            Some(&prev) if prev != class => {
                return Err(Error::ConflictingLabels(r.patient_id.clone()));
            }
            _ => {
                by_patient.insert(r.patient_id.as_str(), class);
            }
        }
    }

    let mut out = m.clone();
    for r in &mut out.records {
        if r.label.is_labeled() {
            continue;
        }
        r.label =
            *by_patient.get(r.patient_id.as_str()).ok_or_else(|| Error::UnlabeledPatient(r.patient_id.clone()))?;
    }
    Ok(out)
}
