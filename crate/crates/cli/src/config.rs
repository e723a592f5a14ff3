//! TOML run configuration: tensor selection, problem data, solver knobs,
//! report tolerances, and the optional sweep section.

use ricciwarp_core::general::GeneralOptions;
use ricciwarp_core::hamilton::HamiltonOptions;
use ricciwarp_core::tensor::{PrescribedTensor, TensorError};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tensor: TensorConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct TensorConfig {
    /// `round_product`, `perturbed`, or `csv`.
    pub kind: String,
    pub d1: u32,
    pub d2: u32,
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Table path for `kind = "csv"` (header `t,T1,T2`), resolved relative
    /// to the config file.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Required for `csv` tensors; built-ins fix their own constants.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub a: f64,
    /// Constraint level; omitted means "realize from a probe run".
    pub s: Option<f64>,
    pub f1_mid: f64,
    pub f2_value: f64,
    /// `auto` dispatches on T2 constancy; `hamilton` / `general` force.
    pub solver: String,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { a: 1.0, s: None, f1_mid: 1.0, f2_value: 1.0, solver: "auto".into() }
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub c1_step_tol: f64,
    pub boundary_tol: f64,
    pub grid_n_half: usize,
    pub validation_grid_n: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GeneralOptions::default();
        let h = HamiltonOptions::default();
        Self {
            rel_tol: g.step.rel_tol,
            abs_tol: g.step.abs_tol,
            newton_tol: g.newton_tol,
            newton_max_iters: g.newton_max_iters,
            c1_step_tol: g.c1_step_tol,
            boundary_tol: h.boundary_tol,
            grid_n_half: g.grid_n_half,
            validation_grid_n: 256,
        }
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub oracle_window_lo: f64,
    pub oracle_window_hi: f64,
    pub residual_tol: f64,
    pub sigma_tol: f64,
    pub regularity_tol: f64,
    pub f1pp_tol: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            oracle_window_lo: 1e-3,
            oracle_window_hi: 1.0 - 1e-3,
            residual_tol: 1e-6,
            sigma_tol: 1e-6,
            regularity_tol: 1e-3,
            f1pp_tol: 1e-4,
        }
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// `kappa`, `a`, or `d1`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Deserialize, Clone, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    Invalid(String),
    Tensor(TensorError),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "config io error: {e}"),
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::Invalid(e) => write!(f, "invalid config: {e}"),
            ConfigError::Tensor(e) => write!(f, "tensor: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        let mut cfg: RunConfig =
            toml::from_str(&raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
        // tensor table paths are relative to the config file
        if let Some(p) = cfg.tensor.path.take() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.tensor.path = Some(if p.is_absolute() { p } else { base.join(p) });
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        if !(p.a > 0.0) {
            return Err(ConfigError::Invalid(format!("problem.a = {} must be > 0", p.a)));
        }
        if let Some(s) = p.s {
            if !(s > 0.0) {
                return Err(ConfigError::Invalid(format!("problem.s = {s} must be > 0")));
            }
        }
        if !(p.f1_mid > 0.0) || !(p.f2_value > 0.0) {
            return Err(ConfigError::Invalid("f1_mid and f2_value must be > 0".into()));
        }
        if !matches!(p.solver.as_str(), "auto" | "hamilton" | "general") {
            return Err(ConfigError::Invalid(format!("unknown solver '{}'", p.solver)));
        }
        let s = &self.solver;
        for (name, v) in [
            ("rel_tol", s.rel_tol),
            ("abs_tol", s.abs_tol),
            ("newton_tol", s.newton_tol),
            ("c1_step_tol", s.c1_step_tol),
            ("boundary_tol", s.boundary_tol),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("solver.{name} = {v} must be > 0")));
            }
        }
        let r = &self.report;
        for (name, v) in [
            ("residual_tol", r.residual_tol),
            ("sigma_tol", r.sigma_tol),
            ("regularity_tol", r.regularity_tol),
            ("f1pp_tol", r.f1pp_tol),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("report.{name} = {v} must be > 0")));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(ConfigError::Invalid("sweep.values is empty".into()));
            }
            if !matches!(sw.parameter.as_str(), "kappa" | "a" | "d1") {
                return Err(ConfigError::Invalid(format!(
                    "unknown sweep parameter '{}'",
                    sw.parameter
                )));
            }
        }
        match self.tensor.kind.as_str() {
            "round_product" | "perturbed" => {}
            "csv" => {
                if self.tensor.path.is_none() {
                    return Err(ConfigError::Invalid("csv tensor needs tensor.path".into()));
                }
                if self.tensor.alpha.is_none() {
                    return Err(ConfigError::Invalid("csv tensor needs tensor.alpha".into()));
                }
            }
            other => {
                return Err(ConfigError::Invalid(format!("unknown tensor kind '{other}'")));
            }
        }
        Ok(())
    }

    pub fn build_tensor(&self) -> Result<PrescribedTensor, ConfigError> {
        let t = &self.tensor;
        match t.kind.as_str() {
            "round_product" => {
                PrescribedTensor::round_product(t.d1, t.d2).map_err(ConfigError::Tensor)
            }
            "perturbed" => {
                PrescribedTensor::perturbed_family(t.d1, t.d2, t.kappa.unwrap_or(0.0))
                    .map_err(ConfigError::Tensor)
            }
            "csv" => {
                let path = t.path.as_ref().unwrap();
                let (ts, t1s, t2s) = read_tensor_table(path)?;
                PrescribedTensor::from_table(
                    t.d1,
                    t.d2,
                    t.alpha.unwrap(),
                    t.beta.unwrap_or(0.0),
                    &ts,
                    &t1s,
                    &t2s,
                )
                .map_err(ConfigError::Tensor)
            }
            _ => unreachable!("checked in load"),
        }
    }

    pub fn hamilton_options(&self) -> HamiltonOptions {
        let mut h = HamiltonOptions::default();
        h.boundary_tol = self.solver.boundary_tol;
        h.grid_n_half = self.solver.grid_n_half;
        h.oracle_window = (self.report.oracle_window_lo, self.report.oracle_window_hi);
        h.regularity_tol = self.report.regularity_tol;
        h.f1pp_tol = self.report.f1pp_tol;
        h
    }

    pub fn general_options(&self) -> GeneralOptions {
        let mut g = GeneralOptions::default();
        g.step.rel_tol = self.solver.rel_tol;
        g.step.abs_tol = self.solver.abs_tol;
        g.newton_tol = self.solver.newton_tol;
        g.newton_max_iters = self.solver.newton_max_iters;
        g.c1_step_tol = self.solver.c1_step_tol;
        g.grid_n_half = self.solver.grid_n_half;
        g.oracle_window = (self.report.oracle_window_lo, self.report.oracle_window_hi);
        g.regularity_tol = self.report.regularity_tol;
        g.f1pp_tol = self.report.f1pp_tol;
        g
    }
}

/// Reads a `t,T1,T2` table (strictly increasing `t` covering `[0.5, 1.0]`).
pub fn read_tensor_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
    let mut lines = raw.lines();
    match lines.next() {
        Some(h) if h.trim() == "t,T1,T2" => {}
        other => {
            return Err(ConfigError::Invalid(format!(
                "tensor table must start with header 't,T1,T2', got {other:?}"
            )))
        }
    }
    let mut ts = Vec::new();
    let mut t1s = Vec::new();
    let mut t2s = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(ConfigError::Invalid(format!("tensor table row {k}: need 3 columns")));
        }
        let parse = |s: &str| -> Result<f64, ConfigError> {
            s.trim().parse().map_err(|e| ConfigError::Invalid(format!("row {k}: {e}")))
        };
        ts.push(parse(cols[0])?);
        t1s.push(parse(cols[1])?);
        t2s.push(parse(cols[2])?);
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::Invalid("tensor table t column must be strictly increasing".into()));
    }
    Ok((ts, t1s, t2s))
}
