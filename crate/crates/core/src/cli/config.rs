//! `key = value` run configuration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::dynamics::{
    CompetitionModel, PopulationState, SimulationConfig, DEFAULT_DT, DEFAULT_EXTINCTION_FRACTION,
    DEFAULT_STEADY_TOL, DEFAULT_T_FINAL,
};
use crate::grid::{SpatialGrid, DEFAULT_CELLS, MIN_CELLS};
use crate::profiles::{sample, Expression, ProfileSet};

pub const KEYS: [&str; 16] = [
    "L",
    "n_cells",
    "K",
    "r",
    "P",
    "Q",
    "a",
    "b",
    "alpha",
    "beta",
    "dt",
    "t_final",
    "steady_tol",
    "extinction_fraction",
    "u0",
    "v0",
];
pub const REQUIRED: [&str; 7] = ["L", "K", "r", "P", "Q", "a", "b"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("missing required key `{key}`")]
    Missing { key: &'static str },
    #[error("{}`{key}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub length: f64,
    pub n_cells: usize,
    pub profiles: ProfileSet,
    pub alpha: f64,
    pub beta: f64,
    pub sim: SimulationConfig<f64>,
    /// Initial densities, as expressions in `x`.
    pub u0: String,
    pub v0: String,
    lines: HashMap<&'static str, usize>,
}

fn invalid(key: &str, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values: HashMap<&'static str, (usize, String)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::Malformed { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Malformed { line });
            }
            let key = *KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })?;
            if let Some((first, _)) = values.get(key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                    first: *first,
                });
            }
            values.insert(key, (line, value.to_string()));
        }
        for key in REQUIRED {
            if !values.contains_key(key) {
                return Err(ConfigError::Missing { key });
            }
        }
        let lines = values.iter().map(|(k, (l, _))| (*k, *l)).collect();
        let text_of = |key: &str| values.get(key).map(|(_, v)| v.as_str());
        let number = |key: &'static str, default: f64| -> Result<f64, ConfigError> {
            match values.get(key) {
                None => Ok(default),
                Some((line, v)) => v
                    .parse::<f64>()
                    .map_err(|_| invalid(key, Some(*line), format!("`{v}` is not a number"))),
            }
        };
        let n_cells = match values.get("n_cells") {
            None => DEFAULT_CELLS,
            Some((line, v)) => v
                .parse::<usize>()
                .map_err(|_| invalid("n_cells", Some(*line), format!("`{v}` is not a cell count")))?,
        };
        let expr = |key: &str| text_of(key).unwrap_or("2.1").to_string();
        let cfg = RunConfig {
            length: number("L", 0.0)?,
            n_cells,
            profiles: ProfileSet::new(
                text_of("K").expect("required"),
                text_of("r").expect("required"),
                text_of("P").expect("required"),
                text_of("Q").expect("required"),
                text_of("a").expect("required"),
                text_of("b").expect("required"),
            ),
            alpha: number("alpha", 0.0)?,
            beta: number("beta", 0.0)?,
            sim: SimulationConfig {
                dt: number("dt", DEFAULT_DT)?,
                t_final: number("t_final", DEFAULT_T_FINAL)?,
                steady_tol: number("steady_tol", DEFAULT_STEADY_TOL)?,
                extinction_fraction: number("extinction_fraction", DEFAULT_EXTINCTION_FRACTION)?,
                ..SimulationConfig::default()
            },
            u0: expr("u0"),
            v0: expr("v0"),
            lines,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    /// Range and syntax checks; everything that can be decided without
    /// sampling the profiles.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |key: &str, ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(invalid(key, self.line(key), msg))
            }
        };
        check("L", self.length.is_finite() && self.length > 0.0, "must be positive")?;
        check(
            "n_cells",
            self.n_cells >= MIN_CELLS,
            &format!("must be at least {MIN_CELLS}"),
        )?;
        for (key, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            check(key, v.is_finite() && v >= 0.0, "must be nonnegative")?;
        }
        let s = &self.sim;
        check("dt", s.dt.is_finite() && s.dt > 0.0, "must be positive")?;
        check("t_final", s.t_final.is_finite() && s.t_final > 0.0, "must be positive")?;
        check("steady_tol", s.steady_tol.is_finite() && s.steady_tol > 0.0, "must be positive")?;
        check(
            "extinction_fraction",
            s.extinction_fraction > 0.0 && s.extinction_fraction < 1.0,
            "must lie in (0, 1)",
        )?;
        let p = &self.profiles;
        for (key, src) in [
            ("K", &p.k),
            ("r", &p.r),
            ("P", &p.p),
            ("Q", &p.q),
            ("a", &p.a),
            ("b", &p.b),
            ("u0", &self.u0),
            ("v0", &self.v0),
        ] {
            Expression::parse(src).map_err(|e| invalid(key, self.line(key), e.to_string()))?;
        }
        Ok(())
    }

    /// Replaces `alpha` / `beta` from command-line flags and rechecks ranges.
    pub fn with_rates(mut self, alpha: Option<f64>, beta: Option<f64>) -> Result<Self, ConfigError> {
        if let Some(a) = alpha {
            self.alpha = a;
            self.lines.remove("alpha");
        }
        if let Some(b) = beta {
            self.beta = b;
            self.lines.remove("beta");
        }
        self.validate()?;
        Ok(self)
    }

    pub fn grid(&self) -> crate::Result<SpatialGrid<f64>> {
        SpatialGrid::new(self.length, self.n_cells)
    }

    pub fn model(&self) -> crate::Result<CompetitionModel<f64>> {
        CompetitionModel::new(self.profiles.build(&self.grid()?)?)
    }

    pub fn initial_state(&self, grid: &SpatialGrid<f64>) -> crate::Result<PopulationState<f64>> {
        let u = sample(&Expression::parse(&self.u0)?, grid)?;
        let v = sample(&Expression::parse(&self.v0)?, grid)?;
        PopulationState::new(u, v)
    }

    /// Stable text form of every setting, used for cache keys.
    pub fn canonical(&self) -> String {
        let p = &self.profiles;
        let mut out = String::new();
        for (k, v) in [
            ("L", format!("{:?}", self.length)),
            ("n_cells", self.n_cells.to_string()),
            ("K", p.k.clone()),
            ("r", p.r.clone()),
            ("P", p.p.clone()),
            ("Q", p.q.clone()),
            ("a", p.a.clone()),
            ("b", p.b.clone()),
            ("alpha", format!("{:?}", self.alpha)),
            ("beta", format!("{:?}", self.beta)),
            ("dt", format!("{:?}", self.sim.dt)),
            ("t_final", format!("{:?}", self.sim.t_final)),
            ("steady_tol", format!("{:?}", self.sim.steady_tol)),
            ("extinction_fraction", format!("{:?}", self.sim.extinction_fraction)),
            ("u0", self.u0.clone()),
            ("v0", self.v0.clone()),
        ] {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}
