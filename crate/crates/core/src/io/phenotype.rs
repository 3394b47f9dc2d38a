//! Phenotype tables and inclusion-criteria filtering.
//!
//! The table is comma-separated with a header row. Column names and value
//! codes default to the public ABIDE phenotypic file and can be remapped.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeRecord {
    pub subject_id: String,
    pub diagnosis: Label,
    pub age_years: f64,
    pub eyes_open: bool,
    /// Mean framewise displacement, millimeters.
    pub mean_fd: f64,
    pub site: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub id: String,
    pub diagnosis: String,
    pub age: String,
    pub eyes: String,
    pub fd: String,
    pub site: String,
    pub asd_code: String,
    pub nt_code: String,
    pub eyes_open_code: String,
    pub eyes_closed_code: String,
    /// Cell values treated as missing, besides the empty string.
    pub missing: Vec<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            id: "FILE_ID".into(),
            diagnosis: "DX_GROUP".into(),
            age: "AGE_AT_SCAN".into(),
            eyes: "EYE_STATUS_AT_SCAN".into(),
            fd: "func_mean_fd".into(),
            site: "SITE_ID".into(),
            asd_code: "1".into(),
            nt_code: "2".into(),
            eyes_open_code: "1".into(),
            eyes_closed_code: "2".into(),
            missing: vec!["-9999".into(), "no_filename".into(), "NA".into(), "n/a".into()],
        }
    }
}

impl ColumnMap {
    /// Overrides one entry by key (`id`, `diagnosis`, `age`, `eyes`, `fd`,
    /// `site`, `asd_code`, `nt_code`, `eyes_open_code`, `eyes_closed_code`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let slot = match key {
            "id" => &mut self.id,
            "diagnosis" => &mut self.diagnosis,
            "age" => &mut self.age,
            "eyes" => &mut self.eyes,
            "fd" => &mut self.fd,
            "site" => &mut self.site,
            "asd_code" => &mut self.asd_code,
            "nt_code" => &mut self.nt_code,
            "eyes_open_code" => &mut self.eyes_open_code,
            "eyes_closed_code" => &mut self.eyes_closed_code,
            _ => return Err(Error::invalid(format!("unknown phenotype column key `{key}`"))),
        };
        *slot = value.to_string();
        Ok(())
    }
}

/// A table row that could not become a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    /// 1-based line number in the file, header included.
    pub line: usize,
    pub subject_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhenotypeTable {
    pub records: Vec<PhenotypeRecord>,
    pub skipped: Vec<SkippedRow>,
}

pub fn parse_phenotypes<R: std::io::Read>(reader: R, map: &ColumnMap) -> Result<PhenotypeTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::invalid(format!("phenotype table has no column `{name}`")))
    };
    let cols = [
        col(&map.id)?,
        col(&map.diagnosis)?,
        col(&map.age)?,
        col(&map.eyes)?,
        col(&map.fd)?,
        col(&map.site)?,
    ];
    let mut table = PhenotypeTable::default();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let cell = |c: usize| {
            row.get(c)
                .map(str::trim)
                .filter(|v| !v.is_empty() && !map.missing.iter().any(|m| m == v))
        };
        let id = cell(cols[0]).map(str::to_string);
        match record_from(&cell, &cols, map, id.clone()) {
            Ok(rec) => table.records.push(rec),
            Err(reason) => {
                log::warn!("phenotype line {line} ({}): {reason}", id.as_deref().unwrap_or("?"));
                table.skipped.push(SkippedRow {
                    line,
                    subject_id: id,
                    reason,
                });
            }
        }
    }
    Ok(table)
}

fn record_from<'a>(
    cell: &dyn Fn(usize) -> Option<&'a str>,
    cols: &[usize; 6],
    map: &ColumnMap,
    id: Option<String>,
) -> std::result::Result<PhenotypeRecord, String> {
    let need = |c: usize, name: &str| cell(c).ok_or_else(|| format!("missing {name}"));
    let subject_id = id.ok_or("missing subject id")?;
    let dx = need(cols[1], "diagnosis")?;
    let diagnosis = if dx == map.asd_code {
        Label::Asd
    } else if dx == map.nt_code {
        Label::Nt
    } else {
        return Err(format!("unknown diagnosis code `{dx}`"));
    };
    let age_years: f64 = need(cols[2], "age")?
        .parse()
        .map_err(|_| "unparsable age".to_string())?;
    if age_years.is_nan() || age_years <= 0.0 {
        return Err(format!("invalid age {age_years}"));
    }
    let eyes = need(cols[3], "eye status")?;
    let eyes_open = if eyes == map.eyes_open_code {
        true
    } else if eyes == map.eyes_closed_code {
        false
    } else {
        return Err(format!("unknown eye status code `{eyes}`"));
    };
    let mean_fd: f64 = need(cols[4], "framewise displacement")?
        .parse()
        .map_err(|_| "unparsable framewise displacement".to_string())?;
    if mean_fd.is_nan() || mean_fd < 0.0 {
        return Err(format!("invalid framewise displacement {mean_fd}"));
    }
    Ok(PhenotypeRecord {
        subject_id,
        diagnosis,
        age_years,
        eyes_open,
        mean_fd,
        site: cell(cols[5]).unwrap_or("").to_string(),
    })
}

pub fn load_phenotypes(path: impl AsRef<Path>, map: &ColumnMap) -> Result<PhenotypeTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_phenotypes(file, map)
}

/// Inclusion criteria. Every bound is strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub eyes_open: Option<bool>,
    pub min_age: Option<f64>,
    pub max_age: Option<f64>,
    pub max_fd: Option<f64>,
}

impl Criteria {
    /// Eyes open, younger than 18, mean FD below 0.2 mm.
    pub fn adolescents() -> Self {
        Self {
            eyes_open: Some(true),
            min_age: None,
            max_age: Some(18.0),
            max_fd: Some(0.2),
        }
    }

    /// Eyes open, older than 18, mean FD below 0.2 mm.
    pub fn adults() -> Self {
        Self {
            eyes_open: Some(true),
            min_age: Some(18.0),
            max_age: None,
            max_fd: Some(0.2),
        }
    }

    pub fn accepts(&self, r: &PhenotypeRecord) -> bool {
        self.eyes_open.is_none_or(|e| r.eyes_open == e)
            && self.min_age.is_none_or(|a| r.age_years > a)
            && self.max_age.is_none_or(|a| r.age_years < a)
            && self.max_fd.is_none_or(|f| r.mean_fd < f)
    }
}

/// Records meeting every criterion, in input order.
pub fn filter_records<'a>(records: &'a [PhenotypeRecord], criteria: &Criteria) -> Vec<&'a PhenotypeRecord> {
    records.iter().filter(|r| criteria.accepts(r)).collect()
}

pub fn filter_subjects(records: &[PhenotypeRecord], criteria: &Criteria) -> Vec<String> {
    filter_records(records, criteria)
        .into_iter()
        .map(|r| r.subject_id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "\
SUB_ID,FILE_ID,SITE_ID,DX_GROUP,AGE_AT_SCAN,EYE_STATUS_AT_SCAN,func_mean_fd
1,Pitt_1,PITT,1,12.5,1,0.10
2,Pitt_2,PITT,2,18.0,1,0.05
3,Pitt_3,PITT,2,17.9,2,0.05
4,no_filename,PITT,1,11,1,0.05
5,NYU_5,NYU,1,14,1,0.2
6,NYU_6,NYU,2,30,1,0.01
7,NYU_7,NYU,2,,1,0.01
";

    #[test]
    fn parses_and_skips_missing_fields() {
        let t = parse_phenotypes(TABLE.as_bytes(), &ColumnMap::default()).unwrap();
        assert_eq!(t.records.len(), 5);
        assert_eq!(t.skipped.len(), 2);
        assert_eq!(t.skipped[0].line, 5);
        assert_eq!(t.skipped[1].subject_id.as_deref(), Some("NYU_7"));
        assert!(t.skipped[1].reason.contains("age"));
    }

    #[test]
    fn strict_bounds() {
        let t = parse_phenotypes(TABLE.as_bytes(), &ColumnMap::default()).unwrap();
        // Pitt_2 is exactly 18, NYU_5 has FD exactly 0.2, Pitt_3 had eyes closed.
        assert_eq!(filter_subjects(&t.records, &Criteria::adolescents()), vec!["Pitt_1"]);
        assert_eq!(filter_subjects(&t.records, &Criteria::adults()), vec!["NYU_6"]);
        let first = filter_subjects(&t.records, &Criteria::adolescents());
        assert_eq!(first, filter_subjects(&t.records, &Criteria::adolescents()));
    }

    #[test]
    fn missing_column_is_an_error() {
        let map = ColumnMap {
            fd: "meanFD".into(),
            ..ColumnMap::default()
        };
        assert!(parse_phenotypes(TABLE.as_bytes(), &map).is_err());
    }
}
