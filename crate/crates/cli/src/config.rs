//! Run configuration shared by the solver subcommands.

use crate::error::CliError;
use agnr::scattering::{PotentialSpec, SolverConfig};
use agnr::{spectrum, RibbonGeometry};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn default_r0() -> f64 {
    3.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(rename = "J_modes", default)]
    pub j_modes: Option<usize>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(rename = "X", default)]
    pub x: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    /// Gauss nodes per cross-section for q-form tables.
    #[serde(default = "QuadratureSection::default_nodes")]
    pub n_quad: usize,
    /// Born-integral panels per unit length; checked against twice as many.
    #[serde(default)]
    pub panels: Option<usize>,
}

impl QuadratureSection {
    fn default_nodes() -> usize {
        128
    }
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            n_quad: 128,
            panels: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub smatrix: Option<PathBuf>,
    #[serde(default)]
    pub born: Option<PathBuf>,
    #[serde(default)]
    pub scan: Option<PathBuf>,
}

/// Contents of a `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "L")]
    pub width: f64,
    #[serde(rename = "R0", default = "default_r0")]
    pub r0: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// `ω = ω_N − eps`; exclusive with `omega`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    /// Overrides the δ stored with the potential.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    /// Potential JSON, relative paths taken from the config file's directory.
    /// Without it the potential is zero.
    #[serde(default)]
    pub potential_path: Option<PathBuf>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A validated configuration, ready for solves.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub geom: RibbonGeometry,
    pub n: usize,
    /// `None` only for configs loaded without an energy (scans supply their own grid).
    pub eps: Option<f64>,
    pub potential: PotentialSpec,
    pub solver: SolverConfig,
    pub config: RunConfig,
}

impl RunConfig {
    /// Read and validate; `need_energy` demands one of `eps` / `omega`.
    pub fn load(path: &Path, need_energy: bool) -> Result<Resolved, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base, need_energy)
    }

    /// Check every range against the spectrum before anything is solved.
    pub fn resolve(self, base: &Path, need_energy: bool) -> Result<Resolved, CliError> {
        let geom = RibbonGeometry::new(self.width, self.r0)?;
        if self.n == 0 {
            return Err(CliError::Validation("N must be at least 1".into()));
        }
        let omega_n = spectrum::threshold(&geom, self.n)?.omega;
        let eps = match (self.eps, self.omega) {
            (Some(e), None) => Some(e),
            (None, Some(w)) => Some(omega_n - w),
            (Some(_), Some(_)) => return Err(CliError::Validation("give either eps or omega, not both".into())),
            (None, None) if need_energy => return Err(CliError::Validation("one of eps or omega is required".into())),
            (None, None) => None,
        };
        if let Some(eps) = eps {
            let eps0 = spectrum::eps0(&geom, self.n)?;
            if !(eps > 0.0 && eps <= eps0) {
                return Err(agnr::Error::EpsOutOfRange { eps, eps0, n: self.n }.into());
            }
        }
        let mut potential = match &self.potential_path {
            Some(p) => {
                let path = if p.is_absolute() { p.clone() } else { base.join(p) };
                read_potential(&path)?
            }
            None => PotentialSpec::zero(&geom),
        };
        if (potential.width - geom.width).abs() > 1e-12 {
            return Err(CliError::Validation(format!(
                "potential is for L = {}, config has L = {}",
                potential.width, geom.width
            )));
        }
        if potential.r0 > geom.r0 + 1e-12 {
            return Err(CliError::Validation(format!(
                "potential support R0 = {} exceeds config R0 = {}",
                potential.r0, geom.r0
            )));
        }
        if let Some(d) = self.delta {
            potential.delta = d;
        }
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            j_modes: self.solver.j_modes,
            nx: self.solver.nx.unwrap_or(defaults.nx),
            x_half: self.solver.x,
            tol: self.solver.tol.unwrap_or(defaults.tol),
            ..defaults
        };
        solver.validate(self.n)?;
        if let Some(x) = solver.x_half {
            if x <= geom.r0 {
                return Err(CliError::Validation(format!("X = {x} must exceed R0 = {}", geom.r0)));
            }
        }
        if self.quadrature.n_quad < 8 {
            return Err(CliError::Validation("quadrature.n_quad must be at least 8".into()));
        }
        Ok(Resolved {
            geom,
            n: self.n,
            eps,
            potential,
            solver,
            config: self,
        })
    }
}

pub fn read_potential(path: &Path) -> Result<PotentialSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read potential {}: {e}", path.display())))?;
    Ok(PotentialSpec::from_json(&text)?)
}
