//! Region-of-interest atlases: named ROI centroids in millimeter space.
//!
//! The text format is one ROI per line, `index name x y z`, whitespace
//! separated. Blank lines and lines starting with `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    /// 1-based position in the atlas.
    pub index: usize,
    pub name: String,
    /// Centroid in millimeters.
    pub coord: [f64; 3],
}

impl Roi {
    /// Name without a trailing hemisphere suffix (`SFGdor.L` -> `SFGdor`).
    pub fn label(&self) -> &str {
        match self.name.rsplit_once('.') {
            Some((base, "L" | "R")) => base,
            _ => &self.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiAtlas {
    rois: Vec<Roi>,
}

impl RoiAtlas {
    pub fn new(rois: Vec<Roi>) -> Result<Self> {
        if rois.len() < 2 {
            return Err(Error::invalid(format!(
                "an atlas needs at least 2 ROIs, got {}",
                rois.len()
            )));
        }
        let mut seen = HashSet::new();
        for (pos, roi) in rois.iter().enumerate() {
            if !seen.insert(roi.index) {
                return Err(Error::invalid(format!("duplicate ROI index {}", roi.index)));
            }
            if roi.index != pos + 1 {
                return Err(Error::invalid(format!(
                    "ROI index {} out of sequence (expected {})",
                    roi.index,
                    pos + 1
                )));
            }
            if roi.coord.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!("non-finite coordinate for ROI {}", roi.index)));
            }
        }
        Ok(Self { rois })
    }

    /// Builds an atlas from bare coordinates, naming ROIs `roi1..roiN`.
    pub fn from_coords(coords: &[[f64; 3]]) -> Result<Self> {
        Self::new(
            coords
                .iter()
                .enumerate()
                .map(|(i, &coord)| Roi {
                    index: i + 1,
                    name: format!("roi{}", i + 1),
                    coord,
                })
                .collect(),
        )
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut rois = Vec::new();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(parse_err(
                    lineno,
                    format!("expected `index name x y z`, found {} fields", fields.len()),
                ));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad ROI index `{}`", fields[0])))?;
            if !seen.insert(index) {
                return Err(parse_err(lineno, format!("duplicate ROI index {index}")));
            }
            let mut coord = [0.0_f64; 3];
            for (c, field) in coord.iter_mut().zip(&fields[2..]) {
                *c = field
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad coordinate `{field}`")))?;
                if !c.is_finite() {
                    return Err(parse_err(lineno, format!("non-finite coordinate `{field}`")));
                }
            }
            if index != rois.len() + 1 {
                return Err(parse_err(
                    lineno,
                    format!("ROI index {index} out of sequence (expected {})", rois.len() + 1),
                ));
            }
            rois.push(Roi {
                index,
                name: fields[1].to_string(),
                coord,
            });
        }
        Self::new(rois).map_err(|e| parse_err(text.lines().count(), e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The bundled AAL90 centroid table.
    pub fn aal90() -> Self {
        Self::parse(include_str!("../data/aal90.txt"), "aal90.txt").expect("bundled AAL90 atlas is valid")
    }

    pub fn len(&self) -> usize {
        self.rois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rois.is_empty()
    }

    pub fn rois(&self) -> &[Roi] {
        &self.rois
    }

    /// ROI by 1-based index.
    pub fn roi(&self, index: usize) -> Option<&Roi> {
        index.checked_sub(1).and_then(|i| self.rois.get(i))
    }

    /// Euclidean distance between rows `i` and `j` (0-based).
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.rois[i].coord, self.rois[j].coord);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for roi in &self.rois {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                roi.index,
                roi.name,
                fmt_f64(roi.coord[0]),
                fmt_f64(roi.coord[1]),
                fmt_f64(roi.coord[2])
            );
        }
        out
    }

    /// SHA-256 of the canonical text rendering, hex encoded.
    pub fn checksum(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_atlas() {
        let atlas = RoiAtlas::parse("1 a 0 0 0\n2 b 1 0 0\n", "t").unwrap();
        assert_eq!(atlas.len(), 2);
        assert_eq!(atlas.distance(0, 1), 1.0);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let atlas = RoiAtlas::parse("# header\n\n1 a 0 0 0\n  # x\n2 b 1 0 0\n", "t").unwrap();
        assert_eq!(atlas.len(), 2);
    }

    #[test]
    fn duplicate_index_names_the_index() {
        let text = "1 a 0 0 0\n2 b 1 0 0\n3 c 2 0 0\n4 d 3 0 0\n5 e 4 0 0\n5 f 5 0 0\n";
        let err = RoiAtlas::parse(text, "t").unwrap_err().to_string();
        assert!(err.contains("duplicate ROI index 5"), "{err}");
        assert!(err.contains(":6:"), "{err}");
    }

    #[test]
    fn malformed_rows() {
        assert!(RoiAtlas::parse("1 a 0 0\n2 b 1 0 0\n", "t").is_err());
        assert!(RoiAtlas::parse("1 a 0 x 0\n2 b 1 0 0\n", "t").is_err());
        let err = RoiAtlas::parse("1 a 0 0 0\n2 b inf 0 0\n", "t")
            .unwrap_err()
            .to_string();
        assert!(err.contains("non-finite") && err.contains(":2:"), "{err}");
        assert!(RoiAtlas::parse("1 a 0 0 0\n", "t").is_err());
        assert!(RoiAtlas::parse("1 a 0 0 0\n3 b 1 0 0\n", "t").is_err());
    }

    #[test]
    fn bundled_aal90() {
        let atlas = RoiAtlas::aal90();
        assert_eq!(atlas.len(), 90);
        assert_eq!(atlas.roi(3).unwrap().label(), "SFGdor");
        assert_eq!(atlas.roi(1).unwrap().label(), "PreCG");
        assert_eq!(atlas.roi(90).unwrap().label(), "ITG");
        // Odd indices are left hemisphere.
        for roi in atlas.rois() {
            let left = roi.name.ends_with(".L");
            assert_eq!(left, roi.index % 2 == 1, "{}", roi.name);
            assert_eq!(left, roi.coord[0] < 0.0, "{}", roi.name);
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let atlas = RoiAtlas::from_coords(&[[0.1, -2.5, 1e-3], [1.0 / 3.0, 7.0, -0.0]]).unwrap();
        let back = RoiAtlas::parse(&atlas.to_text(), "t").unwrap();
        assert_eq!(atlas, back);
        assert_eq!(atlas.checksum(), back.checksum());
    }
}
