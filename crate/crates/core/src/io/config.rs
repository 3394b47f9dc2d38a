//! `key = value` run configuration files.
//!
//! Blank lines and text after `#` are ignored. Relative paths are resolved
//! against the directory holding the file. Every key is optional; see
//! `docs/config.md` for the list.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{DimensionCount, ExperimentConfig, Method, Protocol};
use crate::features::Banding;
use crate::graph::GraphKind;
use crate::io::cohort::{DatasetLayout, RoiColumns};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodName {
    Ours,
    Gft,
    Sfm,
}

impl std::str::FromStr for MethodName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ours" => Ok(Self::Ours),
            "gft" => Ok(Self::Gft),
            "sfm" => Ok(Self::Sfm),
            _ => Err(format!("unknown method `{s}` (expected ours, gft or sfm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` selects the built-in AAL90 atlas.
    pub atlas: Option<PathBuf>,
    pub cohort: Option<PathBuf>,
    pub timeseries_dir: Option<PathBuf>,
    pub timeseries_pattern: String,
    pub roi_columns: RoiColumns,
    pub method: MethodName,
    pub graph: String,
    pub k: usize,
    pub graph_seed: u64,
    pub banding: Banding,
    pub m: DimensionCount,
    pub protocol: Protocol,
    pub seed: u64,
    pub tuning_grid: Vec<usize>,
    pub inner_folds: usize,
    pub stratify: bool,
    pub compare: Vec<MethodName>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            atlas: None,
            cohort: None,
            timeseries_dir: None,
            timeseries_pattern: "{id}.txt".into(),
            roi_columns: RoiColumns::Exact,
            method: MethodName::Ours,
            graph: "knn".into(),
            k: 2,
            graph_seed: 0,
            banding: Banding::PerMode,
            m: DimensionCount::Count(3),
            protocol: Protocol::Split {
                test_fraction: 0.05,
                trials: 10,
            },
            seed: 0,
            tuning_grid: ExperimentConfig::DEFAULT_GRID.to_vec(),
            inner_folds: 5,
            stratify: false,
            compare: Vec::new(),
            output: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a valid value for {key}"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!(
            "`{value}` is not a valid value for {key} (expected true or false)"
        )),
    }
}

impl RunConfig {
    /// Applies one setting. Paths are taken as given.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let (key, value) = (key.trim(), value.trim());
        match key {
            "atlas" => self.atlas = (value != "aal90").then(|| PathBuf::from(value)),
            "cohort" => self.cohort = Some(value.into()),
            "timeseries_dir" => self.timeseries_dir = Some(value.into()),
            "timeseries_pattern" => {
                if !value.contains("{id}") {
                    return Err("timeseries_pattern must contain {id}".into());
                }
                self.timeseries_pattern = value.into();
            }
            "roi_columns" => {
                self.roi_columns = match value {
                    "exact" => RoiColumns::Exact,
                    "first" => RoiColumns::First,
                    _ => return Err(format!("unknown roi_columns `{value}` (expected exact or first)")),
                }
            }
            "method" => self.method = value.parse()?,
            "graph" => {
                if !["knn", "wfc", "uc", "randwfc"].contains(&value) {
                    return Err(format!("unknown graph `{value}` (expected knn, wfc, uc or randwfc)"));
                }
                self.graph = value.into();
            }
            "k" => self.k = parse_num(key, value)?,
            "graph_seed" => self.graph_seed = parse_num(key, value)?,
            "banding" => {
                self.banding = match value {
                    "modes" | "per_mode" => Banding::PerMode,
                    "bands" | "three_bands" => Banding::ThreeBands,
                    _ => return Err(format!("unknown banding `{value}` (expected modes or bands)")),
                }
            }
            "m" => {
                self.m = if value == "all" {
                    DimensionCount::All
                } else {
                    DimensionCount::Count(parse_num(key, value)?)
                }
            }
            "protocol" => {
                self.protocol = match value {
                    "loocv" => Protocol::Loocv,
                    "split" => match self.protocol {
                        p @ Protocol::Split { .. } => p,
                        Protocol::Loocv => Protocol::Split {
                            test_fraction: 0.05,
                            trials: 10,
                        },
                    },
                    _ => return Err(format!("unknown protocol `{value}` (expected split or loocv)")),
                }
            }
            "test_fraction" | "trials" => {
                let (mut frac, mut trials) = match self.protocol {
                    Protocol::Split { test_fraction, trials } => (test_fraction, trials),
                    Protocol::Loocv => (0.05, 10),
                };
                if key == "trials" {
                    trials = parse_num(key, value)?;
                } else {
                    frac = parse_num(key, value)?;
                    if !(frac > 0.0 && frac < 1.0) {
                        return Err(format!("test_fraction {frac} must lie in (0, 1)"));
                    }
                }
                self.protocol = Protocol::Split {
                    test_fraction: frac,
                    trials,
                };
            }
            "seed" => self.seed = parse_num(key, value)?,
            "tuning_grid" => {
                self.tuning_grid = value
                    .split(',')
                    .map(|v| parse_num(key, v.trim()))
                    .collect::<std::result::Result<_, _>>()?;
                if self.tuning_grid.is_empty() || self.tuning_grid.contains(&0) {
                    return Err("tuning_grid needs positive leaf sizes".into());
                }
            }
            "inner_folds" => self.inner_folds = parse_num(key, value)?,
            "stratify" => self.stratify = parse_bool(key, value)?,
            "compare" => {
                self.compare = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()?;
            }
            "output" => self.output = Some(value.into()),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies a `key=value` override string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("override `{assignment}` is not key=value")))?;
        self.set(key, value).map_err(Error::InvalidInput)
    }

    pub fn graph_kind(&self) -> GraphKind {
        match self.graph.as_str() {
            "wfc" => GraphKind::Wfc,
            "uc" => GraphKind::Uc,
            "randwfc" => GraphKind::RandWfc { seed: self.graph_seed },
            _ => GraphKind::Knn { k: self.k },
        }
    }

    pub fn method_for(&self, name: MethodName) -> Method {
        match name {
            MethodName::Ours => Method::Ours {
                graph: self.graph_kind(),
            },
            MethodName::Gft => Method::Gft {
                graph: self.graph_kind(),
                banding: self.banding,
            },
            MethodName::Sfm => Method::Sfm,
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            method: self.method_for(self.method),
            m: self.m,
            protocol: self.protocol,
            seed: self.seed,
            tuning_grid: self.tuning_grid.clone(),
            inner_folds: self.inner_folds,
            stratify: self.stratify,
        }
    }

    /// Dataset layout, if a time-series directory is configured.
    pub fn layout(&self) -> Option<DatasetLayout> {
        self.timeseries_dir.as_ref().map(|dir| DatasetLayout {
            timeseries_dir: dir.clone(),
            pattern: self.timeseries_pattern.clone(),
            roi_columns: self.roi_columns,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.atlas,
            &mut self.cohort,
            &mut self.timeseries_dir,
            &mut self.output,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

pub fn parse_config(text: &str, source_name: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, found `{line}`")))?;
        cfg.set(key, value).map_err(err)?;
    }
    Ok(cfg)
}

/// Reads a config file, resolving relative paths against its directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text, &path.display().to_string())?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg = parse_config(
            "# run\nmethod = ours\ngraph = knn  # anatomical\nk = 4\nm = all\ntrials = 20\ntest_fraction = 0.1\n\
             tuning_grid = 2, 4\ncompare = sfm, gft\nbanding = bands\nstratify = true\n",
            "mem",
        )
        .unwrap();
        let e = cfg.experiment();
        assert_eq!(
            e.method,
            Method::Ours {
                graph: GraphKind::Knn { k: 4 }
            }
        );
        assert_eq!(e.m, DimensionCount::All);
        assert_eq!(
            e.protocol,
            Protocol::Split {
                test_fraction: 0.1,
                trials: 20
            }
        );
        assert_eq!(e.tuning_grid, vec![2, 4]);
        assert!(e.stratify);
        assert_eq!(cfg.compare, vec![MethodName::Sfm, MethodName::Gft]);
        assert_eq!(
            cfg.method_for(MethodName::Gft),
            Method::Gft {
                graph: GraphKind::Knn { k: 4 },
                banding: Banding::ThreeBands
            }
        );
    }

    #[test]
    fn defaults_match_experiment_defaults() {
        let cfg = parse_config("", "mem").unwrap();
        assert_eq!(
            cfg.experiment(),
            ExperimentConfig::new(Method::Ours {
                graph: GraphKind::Knn { k: 2 }
            })
        );
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_config("k = 2\nbogus = 1\n", "run.cfg").unwrap_err().to_string();
        assert!(
            err.contains("run.cfg") && err.contains('2') && err.contains("bogus"),
            "{err}"
        );
        assert!(parse_config("k two\n", "x").is_err());
        assert!(parse_config("test_fraction = 1.5\n", "x").is_err());
    }

    #[test]
    fn overrides_and_loocv() {
        let mut cfg = parse_config("protocol = loocv\n", "mem").unwrap();
        assert_eq!(cfg.protocol, Protocol::Loocv);
        cfg.apply_override("seed=7").unwrap();
        assert_eq!(cfg.seed, 7);
        assert!(cfg.apply_override("seed").is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        std::fs::write(&p, "cohort = cohort.tsv\ntimeseries_dir = ts\natlas = /abs/atlas.txt\n").unwrap();
        let cfg = load_config(&p).unwrap();
        assert_eq!(cfg.cohort.clone().unwrap(), dir.path().join("cohort.tsv"));
        assert_eq!(cfg.layout().unwrap().timeseries_dir, dir.path().join("ts"));
        assert_eq!(cfg.atlas.unwrap(), PathBuf::from("/abs/atlas.txt"));
    }
}
