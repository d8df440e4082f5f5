//! Run configuration: one JSON file, overridden field by field from flags.

use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use funreg_core::fpca::TruncationRule;
use funreg_core::pipeline::{PipelineConfig, RegressorConfig, SideConfig};
use funreg_core::smoothing::KernelSpec;

use crate::error::{Error, Result};
use crate::io::GridSizes;

const DEFAULT_GRID: usize = 101;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SideOptions {
    /// Falls back to the schema file, then to 101.
    pub grid_size: Option<usize>,
    pub kernel: KernelSpec,
    pub truncation: TruncationRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Share of subjects held out for testing; 0 trains on everything.
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub model: Option<PathBuf>,
    /// Directory for diagnostics and test-split reports.
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub covariate: SideOptions,
    pub response: SideOptions,
    pub regressor: RegressorConfig,
    pub split: SplitSpec,
    pub paths: Paths,
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub reports: Option<PathBuf>,
    pub seed: Option<u64>,
    pub baseline_fflm: bool,
    pub test_fraction: Option<f64>,
}

/// A validated configuration with every path resolved.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub pipeline: PipelineConfig,
    pub split: SplitSpec,
    pub data: PathBuf,
    pub schema: PathBuf,
    pub model: PathBuf,
    pub reports: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let paths = &mut self.paths;
        for (slot, flag) in [
            (&mut paths.data, &o.data),
            (&mut paths.schema, &o.schema),
            (&mut paths.model, &o.model),
            (&mut paths.reports, &o.reports),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if o.baseline_fflm {
            self.regressor = RegressorConfig::Fflm { ridge: 0.0 };
        }
        if let Some(seed) = o.seed {
            self.split.seed = seed;
            if let RegressorConfig::Network { seed: s, train, .. } = &mut self.regressor {
                *s = seed;
                train.seed = seed;
            }
        }
        if let Some(f) = o.test_fraction {
            self.split.test_fraction = f;
        }
    }

    /// Checks the invariants and fills in defaults. `schema_grid` comes from
    /// the schema file, if it declares one.
    pub fn resolve(&self, schema_grid: Option<GridSizes>) -> Result<ResolvedRun> {
        let f = self.split.test_fraction;
        if !(0.0..=0.5).contains(&f) {
            return Err(Error::Config(format!("test_fraction must lie in [0, 0.5], got {f}")));
        }
        let need = |p: &Option<PathBuf>, what: &str| {
            p.clone()
                .ok_or_else(|| Error::Config(format!("no {what} path given (flag --{what} or paths.{what})")))
        };
        let data = need(&self.paths.data, "data")?;
        let schema = need(&self.paths.schema, "schema")?;
        let model = need(&self.paths.model, "model")?;
        let reports = match &self.paths.reports {
            Some(r) => r.clone(),
            None => model
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
        };
        let all = [("data", &data), ("schema", &schema), ("model", &model), ("reports", &reports)];
        for (i, (a, pa)) in all.iter().enumerate() {
            for (b, pb) in &all[i + 1..] {
                if same_path(pa, pb) {
                    return Err(Error::Config(format!("{a} and {b} paths must differ ({})", pa.display())));
                }
            }
        }
        let side = |o: &SideOptions, schema_g: Option<usize>| SideConfig {
            grid_size: o.grid_size.or(schema_g).unwrap_or(DEFAULT_GRID),
            kernel: o.kernel,
            truncation: o.truncation,
        };
        let pipeline = PipelineConfig {
            covariate: side(&self.covariate, schema_grid.map(|g| g.covariate)),
            response: side(&self.response, schema_grid.map(|g| g.response)),
            regressor: self.regressor.clone(),
        };
        pipeline.validate()?;
        Ok(ResolvedRun {
            pipeline,
            split: self.split,
            data,
            schema,
            model,
            reports,
        })
    }
}

fn same_path(a: &Path, b: &Path) -> bool {
    let norm = |p: &Path| {
        p.components()
            .filter(|c| !matches!(c, Component::CurDir))
            .collect::<PathBuf>()
    };
    norm(a) == norm(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_paths() -> RunConfig {
        RunConfig {
            paths: Paths {
                data: Some("d.csv".into()),
                schema: Some("s.json".into()),
                model: Some("out/model.json".into()),
                reports: None,
            },
            ..Default::default()
        }
    }

    #[test]
    fn flags_win_over_file() {
        let mut c = with_paths();
        c.apply(&Overrides {
            data: Some("other.csv".into()),
            seed: Some(9),
            baseline_fflm: true,
            ..Default::default()
        });
        let r = c.resolve(None).unwrap();
        assert_eq!(r.data, PathBuf::from("other.csv"));
        assert_eq!(r.split.seed, 9);
        assert_eq!(r.pipeline.regressor, RegressorConfig::Fflm { ridge: 0.0 });
        assert_eq!(r.reports, PathBuf::from("out"));
    }

    #[test]
    fn seed_reaches_network() {
        let mut c = with_paths();
        c.apply(&Overrides {
            seed: Some(4),
            ..Default::default()
        });
        match c.resolve(None).unwrap().pipeline.regressor {
            RegressorConfig::Network { seed, train, .. } => assert_eq!((seed, train.seed), (4, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn paths_must_be_distinct() {
        let mut c = with_paths();
        c.paths.schema = Some("./d.csv".into());
        assert!(matches!(c.resolve(None), Err(Error::Config(_))));
    }

    #[test]
    fn fraction_out_of_range_is_rejected() {
        let mut c = with_paths();
        c.split.test_fraction = 0.6;
        assert!(matches!(c.resolve(None), Err(Error::Config(_))));
    }

    #[test]
    fn grid_size_precedence() {
        let mut c = with_paths();
        let g = Some(GridSizes {
            covariate: 41,
            response: 61,
        });
        let r = c.resolve(g).unwrap();
        assert_eq!((r.pipeline.covariate.grid_size, r.pipeline.response.grid_size), (41, 61));
        c.covariate.grid_size = Some(21);
        assert_eq!(c.resolve(g).unwrap().pipeline.covariate.grid_size, 21);
        assert_eq!(with_paths().resolve(None).unwrap().pipeline.response.grid_size, 101);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = serde_json::from_str::<RunConfig>(r#"{"split": {"fraction": 0.2}}"#);
        assert!(e.is_err());
    }
}
