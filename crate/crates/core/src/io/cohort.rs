//! Cohort files (`subject_id label` per line) and dataset directories.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::timeseries::load_timeseries;
use crate::spectra::{Label, SubjectRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortEntry {
    pub id: String,
    pub label: Label,
}

pub fn parse_cohort(text: &str, source_name: &str) -> Result<Vec<CohortEntry>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, label] = fields[..] else {
            return Err(err(format!(
                "expected `subject_id label`, found {} fields",
                fields.len()
            )));
        };
        let label = label.parse().map_err(|e: Error| err(e.to_string()))?;
        if out.iter().any(|e: &CohortEntry| e.id == id) {
            return Err(err(format!("duplicate subject `{id}`")));
        }
        out.push(CohortEntry {
            id: id.to_string(),
            label,
        });
    }
    Ok(out)
}

pub fn load_cohort(path: impl AsRef<Path>) -> Result<Vec<CohortEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cohort(&text, &path.display().to_string())
}

pub fn cohort_text(entries: &[CohortEntry]) -> String {
    let mut out = String::from("# subject_id\tlabel\n");
    for e in entries {
        let _ = writeln!(out, "{}\t{}", e.id, e.label);
    }
    out
}

/// What to do when a time-series file has more columns than the atlas has
/// ROIs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiColumns {
    /// Column count must equal the atlas size.
    #[default]
    Exact,
    /// Keep the first `r` columns (e.g. AAL90 out of an AAL116 export).
    First,
}

#[derive(Debug, Clone)]
pub struct DatasetLayout {
    pub timeseries_dir: PathBuf,
    /// File name template; `{id}` is replaced by the subject id.
    pub pattern: String,
    pub roi_columns: RoiColumns,
}

impl DatasetLayout {
    pub fn new(timeseries_dir: impl Into<PathBuf>) -> Self {
        Self {
            timeseries_dir: timeseries_dir.into(),
            pattern: "{id}.txt".into(),
            roi_columns: RoiColumns::Exact,
        }
    }

    pub fn path_for(&self, id: &str) -> PathBuf {
        self.timeseries_dir.join(self.pattern.replace("{id}", id))
    }
}

/// Loads every cohort member's time-series in parallel. Errors name the
/// subject.
pub fn load_dataset(cohort: &[CohortEntry], layout: &DatasetLayout, r: usize) -> Result<Vec<SubjectRecord>> {
    cohort
        .par_iter()
        .map(|entry| {
            let mut x = load_timeseries(layout.path_for(&entry.id)).map_err(|e| Error::subject(&entry.id, e))?;
            let rows = x.nrows();
            match layout.roi_columns {
                RoiColumns::First if rows > r => x = x.rows(0, r).clone_owned(),
                _ if rows != r => {
                    return Err(Error::Subject {
                        subject: entry.id.clone(),
                        message: format!("time-series has {rows} ROI columns but the atlas has {r}"),
                    })
                }
                _ => {}
            }
            SubjectRecord::new(entry.id.clone(), entry.label, x)
        })
        .collect()
}

/// Writes a dataset as a cohort file plus one time-series file per subject.
pub fn write_dataset(dir: impl AsRef<Path>, subjects: &[SubjectRecord]) -> Result<()> {
    let dir = dir.as_ref();
    let ts_dir = dir.join("timeseries");
    std::fs::create_dir_all(&ts_dir).map_err(|e| Error::io(&ts_dir, e))?;
    let entries: Vec<CohortEntry> = subjects
        .iter()
        .map(|s| CohortEntry {
            id: s.id.clone(),
            label: s.label,
        })
        .collect();
    super::atomic_write(dir.join("cohort.tsv"), cohort_text(&entries).as_bytes())?;
    subjects.par_iter().try_for_each(|s| {
        super::atomic_write(
            ts_dir.join(format!("{}.txt", s.id)),
            super::timeseries::timeseries_text(s.signals()).as_bytes(),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cohort_parse() {
        let c = parse_cohort("# c\ns1\tASD\ns2 NT\n", "c").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].label, Label::Nt);
        assert!(parse_cohort("s1 ASD\ns1 NT\n", "c").is_err());
        assert!(parse_cohort("s1\n", "c").is_err());
        assert!(parse_cohort("s1 XX\n", "c").is_err());
        assert_eq!(parse_cohort(&cohort_text(&c), "c").unwrap(), c);
    }

    #[test]
    fn row_count_mismatch_names_subject() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("subA.txt"), "1 2 3\n4 5 6\n").unwrap();
        let cohort = vec![CohortEntry {
            id: "subA".into(),
            label: Label::Asd,
        }];
        let mut layout = DatasetLayout::new(dir.path());
        let err = load_dataset(&cohort, &layout, 2).unwrap_err().to_string();
        assert!(err.contains("subA") && err.contains("3 ROI columns"), "{err}");
        layout.roi_columns = RoiColumns::First;
        let d = load_dataset(&cohort, &layout, 2).unwrap();
        assert_eq!(d[0].signals().shape(), (2, 2));
        assert!(load_dataset(&cohort, &layout, 4).is_err());
    }
}
