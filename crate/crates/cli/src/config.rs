//! Flat `key = value` run configuration.

use std::collections::BTreeMap;

use dqpt_core::model::{Axis, Grid2d, Plane};
use dqpt_core::{CouplingSet, MomentumGrid, QuenchSpec};

use crate::CliError;

/// Every accepted key with its default. `size = auto` leaves the ring length
/// to the command.
const KEYS: &[(&str, &str)] = &[
    ("gamma", "0.8"),
    ("initial_lambda1", "1.5"),
    ("initial_lambda2", "0"),
    ("initial_dm", "0"),
    ("final_lambda1", "0"),
    ("final_lambda2", "0.2"),
    ("final_dm", "0"),
    ("n_modes", "2048"),
    ("t_max", "20"),
    ("dt", "0.01"),
    ("eps_crit", "1e-6"),
    ("tau", "20"),
    ("size", "auto"),
    ("engine", "covariance"),
    ("plane_x", "lambda1"),
    ("plane_y", "lambda2"),
    ("plane_fixed", "0"),
    ("x_min", "-2"),
    ("x_max", "2"),
    ("nx", "21"),
    ("y_min", "-2"),
    ("y_max", "2"),
    ("ny", "21"),
    ("threads", "0"),
];

const MAX_MODES: usize = 1 << 20;
const MAX_GRID: usize = 1000;
const MAX_TIME: f64 = 1e4;

/// Raw key-value pairs after defaults, file and overrides are merged.
#[derive(Debug, Clone)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }
}

impl RawConfig {
    /// Applies the contents of a config file on top of the defaults.
    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("config line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(CliError::Validation(format!("config key `{key}`: empty value")));
            }
            if seen.insert(key.to_string(), lineno + 1).is_some() {
                return Err(CliError::Validation(format!("config key `{key}`: given more than once")));
            }
            self.set(key, value)?;
        }
        if seen.is_empty() {
            return Err(CliError::Validation("config file has no entries".into()));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(CliError::Validation(format!("unknown config key `{key}`"))),
        }
    }

    fn raw(&self, key: &str) -> &str {
        &self.values[key]
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.raw(key).parse().map_err(|_| bad(key, "not a number"))?;
        if !v.is_finite() {
            return Err(bad(key, "must be finite"));
        }
        Ok(v)
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.raw(key).parse().map_err(|_| bad(key, "not a non-negative integer"))
    }

    fn positive(&self, key: &str, max: f64) -> Result<f64, CliError> {
        let v = self.f64(key)?;
        if !(v > 0.0 && v <= max) {
            return Err(bad(key, &format!("must lie in (0, {max}]")));
        }
        Ok(v)
    }

    fn axis(&self, key: &str) -> Result<Axis, CliError> {
        Axis::parse(self.raw(key)).ok_or_else(|| bad(key, "expected lambda1, lambda2 or dm"))
    }
}

fn bad(key: &str, why: &str) -> CliError {
    CliError::Validation(format!("config key `{key}`: {why}"))
}

fn core_bad(key: &str, e: dqpt_core::Error) -> CliError {
    CliError::Validation(format!("config key `{key}`: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    Covariance,
    Exact,
}

/// Validated settings. Every field has been range checked.
#[derive(Debug, Clone)]
pub struct Settings {
    pub initial: CouplingSet,
    pub target: CouplingSet,
    pub n_modes: usize,
    pub t_max: f64,
    pub dt: f64,
    pub eps_crit: f64,
    pub tau: f64,
    /// Ring length; `None` leaves the choice to the command.
    pub size: Option<usize>,
    pub engine: EngineChoice,
    pub plane: Plane,
    pub grid: Grid2d,
    pub threads: usize,
}

impl Settings {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let gamma = raw.f64("gamma")?;
        let coupling = |prefix: &str| -> Result<CouplingSet, CliError> {
            let l1 = raw.f64(&format!("{prefix}_lambda1"))?;
            let l2 = raw.f64(&format!("{prefix}_lambda2"))?;
            let d = raw.f64(&format!("{prefix}_dm"))?;
            CouplingSet::new(gamma, l1, l2, d).map_err(|e| core_bad(&format!("{prefix}_*"), e))
        };
        let initial = coupling("initial")?;
        let target = coupling("final")?;
        let n_modes = raw.usize("n_modes")?;
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(bad("n_modes", &format!("must lie in [1, {MAX_MODES}]")));
        }
        let t_max = raw.positive("t_max", MAX_TIME)?;
        let dt = raw.positive("dt", t_max)?;
        let eps_crit = raw.positive("eps_crit", 0.5)?;
        let tau = raw.positive("tau", MAX_TIME)?;
        let size = match raw.raw("size") {
            "auto" => None,
            _ => Some(raw.usize("size")?),
        };
        let engine = match raw.raw("engine") {
            "covariance" => EngineChoice::Covariance,
            "exact" => EngineChoice::Exact,
            _ => return Err(bad("engine", "expected covariance or exact")),
        };
        let (px, py) = (raw.axis("plane_x")?, raw.axis("plane_y")?);
        let plane = Plane::new(px, py, raw.f64("plane_fixed")?).map_err(|e| core_bad("plane_y", e))?;
        let (nx, ny) = (raw.usize("nx")?, raw.usize("ny")?);
        for (k, n) in [("nx", nx), ("ny", ny)] {
            if n == 0 || n > MAX_GRID {
                return Err(bad(k, &format!("must lie in [1, {MAX_GRID}]")));
            }
        }
        let grid = Grid2d::new((raw.f64("x_min")?, raw.f64("x_max")?), nx, (raw.f64("y_min")?, raw.f64("y_max")?), ny)
            .map_err(|e| core_bad("x_min/x_max/y_min/y_max", e))?;
        let threads = raw.usize("threads")?;
        if threads > 1024 {
            return Err(bad("threads", "must be at most 1024"));
        }
        Ok(Self { initial, target, n_modes, t_max, dt, eps_crit, tau, size, engine, plane, grid, threads })
    }

    pub fn quench(&self) -> Result<QuenchSpec, CliError> {
        QuenchSpec::new(self.initial, self.target).map_err(|e| core_bad("initial_*/final_*", e))
    }

    pub fn momenta(&self) -> Result<MomentumGrid, CliError> {
        MomentumGrid::midpoint(self.n_modes).map_err(|e| core_bad("n_modes", e))
    }
}

/// The merged key-value pairs, echoed into the run metadata.
pub fn echo(raw: &RawConfig) -> BTreeMap<String, String> {
    raw.values.clone()
}
