//! Experiment configuration: defaults, a flat `key = value` file format and
//! validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{ConvergenceConfig, HORIZON, TIME_POINTS};
use crate::galerkin::{fmt17, Rectangle};
use crate::hjb::PolicyIterConfig;
use crate::models::Preset;

/// Keys accepted in configuration files.
pub const KEYS: [&str; 14] = [
    "preset",
    "degree",
    "domain",
    "tol_abs",
    "tol_rel",
    "max_iters",
    "test_grid",
    "horizon",
    "time_points",
    "out",
    "seed",
    "value_function",
    "convergence_steps",
    "convergence_reference_step",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Empty means the pendulum and Van der Pol presets.
    pub presets: Vec<Preset>,
    /// Per-preset default when `None`.
    pub degree: Option<usize>,
    /// Per-preset default when `None`.
    pub domain: Option<Rectangle>,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    pub test_grid: usize,
    pub horizon: f64,
    pub time_points: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub value_function: Option<PathBuf>,
    pub convergence_steps: Vec<f64>,
    pub convergence_reference_step: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let conv = ConvergenceConfig::default();
        ExperimentConfig {
            presets: Vec::new(),
            degree: None,
            domain: None,
            tol_abs: 1e-14,
            tol_rel: 1e-10,
            max_iters: 30,
            test_grid: 100,
            horizon: HORIZON,
            time_points: TIME_POINTS,
            out: PathBuf::from("out"),
            seed: 0,
            value_function: None,
            convergence_steps: conv.steps,
            convergence_reference_step: conv.reference_step,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_num(key, v)).collect()
}

/// `x_lo,x_hi,y_lo,y_hi`.
pub fn parse_domain(value: &str) -> Result<Rectangle> {
    let v = parse_list("domain", value)?;
    if v.len() != 4 {
        return Err(Error::Config(format!(
            "domain: expected x_lo,x_hi,y_lo,y_hi, got {} values",
            v.len()
        )));
    }
    Rectangle::new(v[0], v[1], v[2], v[3])
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "preset" => {
                self.presets = value
                    .split(',')
                    .map(|p| Preset::from_name(p.trim()))
                    .collect::<Result<_>>()?
            }
            "degree" => self.degree = Some(parse_num(key, value)?),
            "domain" => self.domain = Some(parse_domain(value)?),
            "tol_abs" => self.tol_abs = parse_num(key, value)?,
            "tol_rel" => self.tol_rel = parse_num(key, value)?,
            "max_iters" => self.max_iters = parse_num(key, value)?,
            "test_grid" => self.test_grid = parse_num(key, value)?,
            "horizon" => self.horizon = parse_num(key, value)?,
            "time_points" => self.time_points = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse_num(key, value)?,
            "value_function" => self.value_function = Some(PathBuf::from(value)),
            "convergence_steps" => self.convergence_steps = parse_list(key, value)?,
            "convergence_reference_step" => self.convergence_reference_step = parse_num(key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key '{key}' (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a configuration file. Blank lines and lines starting with `#`
    /// or `;` are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value', got '{line}'", no + 1))
            })?;
            self.set(key.trim(), value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", no + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(0) = self.degree {
            return bad("degree must be at least 1".into());
        }
        if !(self.tol_abs >= 0.0) || !(self.tol_rel >= 0.0) {
            return bad("tolerances must be nonnegative".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if self.test_grid < 2 {
            return bad("test_grid must be at least 2".into());
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.time_points < 2 {
            return bad(format!(
                "time_points must be at least 2, got {}",
                self.time_points
            ));
        }
        if self.convergence_steps.len() < 2 || self.convergence_steps.iter().any(|s| !(*s > 0.0)) {
            return bad("convergence_steps needs at least two positive steps".into());
        }
        if !(self.convergence_reference_step > 0.0) {
            return bad("convergence_reference_step must be positive".into());
        }
        if self.value_function.is_some() && self.presets.len() != 1 {
            return bad("value_function requires exactly one preset".into());
        }
        Ok(())
    }

    /// Presets to run; pendulum and Van der Pol by default.
    pub fn selected_presets(&self) -> Vec<Preset> {
        if self.presets.is_empty() {
            vec![Preset::Pendulum, Preset::VanDerPol]
        } else {
            self.presets.clone()
        }
    }

    pub fn policy_config(&self, preset: Preset) -> PolicyIterConfig {
        let mut cfg = PolicyIterConfig::new(
            self.degree.unwrap_or(preset.degree()),
            self.domain.unwrap_or(preset.domain()),
        );
        cfg.tol_abs = self.tol_abs;
        cfg.tol_rel = self.tol_rel;
        cfg.max_iters = self.max_iters;
        cfg.test_grid_per_axis = self.test_grid;
        cfg
    }

    pub fn convergence_config(&self) -> ConvergenceConfig {
        ConvergenceConfig {
            steps: self.convergence_steps.clone(),
            reference_step: self.convergence_reference_step,
            horizon: self.horizon,
            ..ConvergenceConfig::default()
        }
    }

    /// The configuration in the file format accepted by [`apply_text`](Self::apply_text).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let presets: Vec<&str> = self.selected_presets().iter().map(|p| p.name()).collect();
        let list = |v: &[f64]| v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "preset = {}", presets.join(","));
        if let Some(d) = self.degree {
            let _ = writeln!(s, "degree = {d}");
        }
        if let Some(r) = self.domain {
            let _ = writeln!(s, "domain = {}", list(&[r.x_lo, r.x_hi, r.y_lo, r.y_hi]));
        }
        let _ = writeln!(s, "tol_abs = {}", fmt17(self.tol_abs));
        let _ = writeln!(s, "tol_rel = {}", fmt17(self.tol_rel));
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "test_grid = {}", self.test_grid);
        let _ = writeln!(s, "horizon = {}", fmt17(self.horizon));
        let _ = writeln!(s, "time_points = {}", self.time_points);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(v) = &self.value_function {
            let _ = writeln!(s, "value_function = {}", v.display());
        }
        let _ = writeln!(s, "convergence_steps = {}", list(&self.convergence_steps));
        let _ = writeln!(
            s,
            "convergence_reference_step = {}",
            fmt17(self.convergence_reference_step)
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(
            "# comment\npreset = vdp-paper\ndegree = 12\ndomain = -1,1,-2,2\n\ntime_points = 100\n",
        )
        .unwrap();
        assert_eq!(cfg.presets, vec![Preset::VanDerPol]);
        assert_eq!(cfg.degree, Some(12));
        assert_eq!(cfg.domain.unwrap().y_hi, 2.0);
        cfg.validate().unwrap();

        let mut again = ExperimentConfig::default();
        again.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = ExperimentConfig::default();
        let err = cfg.apply_text("degre = 3").unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("line 1"));
        assert!(cfg.apply_text("degree = three").is_err());
        assert!(cfg.apply_text("no equals sign").is_err());

        let cfg = ExperimentConfig {
            degree: Some(0),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            time_points: 1,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_follow_presets() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.selected_presets(), vec![Preset::Pendulum, Preset::VanDerPol]);
        let pc = cfg.policy_config(Preset::VanDerPol);
        assert_eq!(pc.degree, 15);
        assert_eq!(pc.domain, Preset::VanDerPol.domain());
        assert_eq!(pc.tol_abs, 1e-14);
    }
}
