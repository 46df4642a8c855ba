//! Run configuration, read from TOML. Every section and key is optional;
//! an empty file gives the reference settings.
//!
//! ```toml
//! [model]
//! alpha = 0.7
//! rate = 1.0
//! kernel = { kind = "truncated_normal", mu = 0.5, sigma = 0.25 }
//!
//! [grids]
//! intervals = 4096
//! xi_half_width = 50.0
//! xi_step = 0.05
//! u_grid = { u_min = -12.0, u_max = 0.0, points = 2048 }
//!
//! [estimation]
//! delta_max = 50
//! v = 10
//! rule = "crit1"
//!
//! [campaign]
//! n = 30000
//! runs = 100
//! master_seed = 1
//! rules = ["crit1", "crit2", "oracle"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandwidth::{BandwidthFamily, Rule, MAX_SPLITS};
use crate::bench::{CampaignConfig, SampleSource};
use crate::error::{Error, Result};
use crate::estimator::UGrid;
use crate::kernels::{DivisionKernel, KernelSpec};
use crate::simulate::DEFAULT_MAX_CELLS;
use crate::spectrum::XiGrid;
use crate::stationary::{Model, SolverMethod, SolverOptions, XGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: f64,
    pub rate: f64,
    pub kernel: KernelSpec,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            alpha: 0.7,
            rate: 1.0,
            kernel: KernelSpec::Beta22,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// `None` means `12 α / R`.
    pub x_max: Option<f64>,
    pub intervals: usize,
    pub xi_half_width: f64,
    pub xi_step: f64,
    pub u_grid: UGrid,
    /// Points of the symmetric x grid `ĥ` is reported on.
    pub x_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            x_max: None,
            intervals: 4096,
            xi_half_width: 50.0,
            xi_step: 0.05,
            u_grid: UGrid::default(),
            x_points: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: SolverMethod,
    pub gamma_nodes: usize,
    pub max_iter: usize,
    pub fixed_point_tol: f64,
    pub march_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverSection {
            method: d.method,
            gamma_nodes: d.gamma_nodes,
            max_iter: d.max_iter,
            fixed_point_tol: d.fixed_point_tol,
            march_tol: d.march_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSection {
    pub delta_max: u32,
    pub v: usize,
    pub rule: Rule,
    /// Fixed bandwidth for `estimate` when no rule is run.
    pub ell: f64,
}

impl Default for EstimationSection {
    fn default() -> Self {
        EstimationSection {
            delta_max: 50,
            v: 10,
            rule: Rule::Crit1,
            ell: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialLaw {
    /// Every initial cell has size 1.
    #[default]
    Ones,
    /// Initial sizes drawn from the stationary density.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub k: usize,
    pub t_end: f64,
    pub initial: InitialLaw,
    /// Number of initial cells; `None` means `k`.
    pub initial_cells: Option<usize>,
    pub max_cells: usize,
    pub track_labels: bool,
    pub track_divisions: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            k: 1000,
            t_end: 5.0,
            initial: InitialLaw::Ones,
            initial_cells: None,
            max_cells: DEFAULT_MAX_CELLS,
            track_labels: false,
            track_divisions: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub n: usize,
    pub runs: usize,
    pub master_seed: u64,
    pub rules: Vec<Rule>,
    pub source: SampleSource,
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection {
            n: 30_000,
            runs: 100,
            master_seed: 1,
            rules: vec![Rule::Crit1, Rule::Crit2, Rule::Oracle],
            source: SampleSource::Stationary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grids: GridSection,
    pub solver: SolverSection,
    pub estimation: EstimationSection,
    pub simulation: SimulationSection,
    pub campaign: CampaignSection,
    /// Directory relative paths in the file resolve against; set by
    /// [`parse_config`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Reads, fills defaults and validates.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg = parse_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.validate()?;
    Ok(cfg)
}

/// Parses without validating.
pub fn parse_str(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kernel(&self) -> Result<DivisionKernel> {
        DivisionKernel::from_spec(&self.model.kernel, &self.base_dir)
    }

    pub fn model(&self) -> Result<Model> {
        Model::new(self.kernel()?, self.model.alpha, self.model.rate)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            x_max: self.grids.x_max,
            intervals: self.grids.intervals,
            gamma_nodes: self.solver.gamma_nodes,
            method: self.solver.method,
            max_iter: self.solver.max_iter,
            fixed_point_tol: self.solver.fixed_point_tol,
            march_tol: self.solver.march_tol,
        }
    }

    pub fn xi_grid(&self) -> Result<XiGrid> {
        XiGrid::new(self.grids.xi_half_width, self.grids.xi_step)
    }

    pub fn family(&self) -> Result<BandwidthFamily> {
        BandwidthFamily::standard(self.estimation.delta_max)
    }

    pub fn campaign(&self) -> Result<CampaignConfig> {
        Ok(CampaignConfig {
            kernel: self.kernel()?,
            alpha: self.model.alpha,
            rate: self.model.rate,
            n: self.campaign.n,
            v: self.estimation.v,
            rules: self.campaign.rules.clone(),
            runs: self.campaign.runs,
            master_seed: self.campaign.master_seed,
            delta_max: self.estimation.delta_max,
            xi: self.xi_grid()?,
            u_grid: self.grids.u_grid,
            solver: self.solver_options(),
            source: self.campaign.source,
        })
    }

    /// Re-checks every constraint of the modules the config feeds.
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.alpha > 0.0) || !m.alpha.is_finite() {
            return Err(Error::invalid("stationary", format!("model.alpha must be positive, got {}", m.alpha)));
        }
        if !(m.rate > 0.0) || !m.rate.is_finite() {
            return Err(Error::invalid("stationary", format!("model.rate must be positive, got {}", m.rate)));
        }
        self.model()?;
        let g = &self.grids;
        XGrid::new(g.x_max.unwrap_or(12.0 * m.alpha / m.rate), g.intervals)?;
        if self.solver.gamma_nodes < 2 {
            return Err(Error::invalid("stationary", "solver.gamma_nodes must be at least 2"));
        }
        if !(self.solver.fixed_point_tol > 0.0) || !(self.solver.march_tol > 0.0) {
            return Err(Error::invalid("stationary", "solver tolerances must be positive"));
        }
        let xi = self.xi_grid()?;
        g.u_grid.validate()?;
        if g.u_grid.u_max > 0.0 {
            return Err(Error::invalid("estimator", "grids.u_grid.u_max must not exceed 0"));
        }
        if g.x_points < 2 {
            return Err(Error::invalid("estimator", "grids.x_points must be at least 2"));
        }
        let e = &self.estimation;
        self.family()?.cutoffs(&xi)?;
        if e.v == 0 || e.v > MAX_SPLITS {
            return Err(Error::invalid("bandwidth", format!("estimation.v must lie in 1..={MAX_SPLITS}, got {}", e.v)));
        }
        if !(e.ell > 0.0) || 1.0 / e.ell > xi.half_width() + 1e-9 {
            return Err(Error::invalid(
                "estimator",
                format!("estimation.ell = {} needs 1/ell within the xi half width {}", e.ell, xi.half_width()),
            ));
        }
        let s = &self.simulation;
        if s.k == 0 || s.initial_cells == Some(0) {
            return Err(Error::invalid("simulate", "simulation.k and simulation.initial_cells must be at least 1"));
        }
        if !(s.t_end >= 0.0) || !s.t_end.is_finite() {
            return Err(Error::invalid("simulate", format!("simulation.t_end must be nonnegative, got {}", s.t_end)));
        }
        let c = &self.campaign;
        if c.n < 2 || c.n % 2 != 0 {
            return Err(Error::invalid("bandwidth", format!("campaign.n must be even and at least 2, got {}", c.n)));
        }
        if c.runs == 0 {
            return Err(Error::invalid("bench", "campaign.runs must be at least 1"));
        }
        if c.rules.is_empty() {
            return Err(Error::invalid("bench", "campaign.rules is empty"));
        }
        if let SampleSource::Simulation { k, t_end } = c.source {
            if k == 0 || !(t_end >= 0.0) {
                return Err(Error::invalid("bench", "campaign.source needs k >= 1 and t_end >= 0"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_str("").unwrap();
        c.validate().unwrap();
        assert_eq!(c.model.alpha, 0.7);
        assert_eq!(c.model.rate, 1.0);
        assert_eq!(c.campaign.n, 30_000);
        assert_eq!(c.estimation.v, 10);
        assert!((c.family().unwrap().min() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn negative_alpha_names_the_constraint() {
        let c = parse_str("[model]\nalpha = -1\n").unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("alpha") && e.contains("positive") && e.contains("stationary"), "{e}");
    }

    #[test]
    fn errors_name_their_module() {
        let cases = [
            ("[campaign]\nn = 31\n", "bandwidth"),
            ("[estimation]\nv = 0\n", "bandwidth"),
            ("[grids]\nxi_half_width = 10.0\n", "bandwidth"),
            ("[grids]\nxi_step = 0.3\n", "stationary"),
            ("[simulation]\nk = 0\n", "simulate"),
            ("[campaign]\nruns = 0\n", "bench"),
        ];
        for (text, module) in cases {
            let e = parse_str(text).unwrap().validate().unwrap_err().to_string();
            assert!(e.contains(module), "{text}: {e}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_str("[model]\nalpah = 1\n").is_err());
        assert!(parse_str("[modle]\n").is_err());
    }

    #[test]
    fn kernels_parse() {
        let c = parse_str("[model]\nkernel = { kind = \"truncated_normal\", mu = 0.5, sigma = 0.25 }\n").unwrap();
        assert_eq!(c.kernel().unwrap().name(), "truncated_normal");
        let c = parse_str("[campaign]\nrules = [\"oracle\"]\nsource = { kind = \"simulation\", k = 100, t_end = 3.0 }\n").unwrap();
        c.validate().unwrap();
        assert_eq!(c.campaign.rules, vec![Rule::Oracle]);
    }

    #[test]
    fn toml_round_trip() {
        let mut c = parse_str("[model]\nalpha = 0.9\n").unwrap();
        c.campaign.rules = vec![Rule::Crit2];
        let back = parse_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
