//! Run configuration read from TOML.
//!
//! Every section is optional. An empty file describes `Disk(1)` on a
//! 128×256 grid at `λ = 20`, `ε = 10⁻⁴` with spins `(+1, −1)` in axis mode.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sinhrobin_core::ansatz::Params;
use sinhrobin_core::hamiltonian::{Constraint, MassRule, SpinConfig};
use sinhrobin_core::{Domain, Error, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Star { coeffs: Vec<f64> },
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Disk { radius: 1.0 }
    }
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain, Error> {
        match self {
            DomainSpec::Disk { radius } => Domain::disk(*radius),
            DomainSpec::Annulus { inner, outer } => Domain::annulus(*inner, *outer),
            DomainSpec::Star { coeffs } => Domain::star(coeffs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_radial: usize,
    pub n_angular: usize,
    pub grading: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_radial: 128, n_angular: 256, grading: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    AxisSymmetric,
    PerComponent,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassRuleSpec {
    AsWritten,
    SpinProduct,
}

impl From<MassRuleSpec> for MassRule {
    fn from(m: MassRuleSpec) -> Self {
        match m {
            MassRuleSpec::AsWritten => MassRule::AsWritten,
            MassRuleSpec::SpinProduct => MassRule::SpinProduct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenSource {
    /// Grid solve of the regular part.
    Grid,
    /// Eigenfunction series, disks only.
    Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Concentration {
    pub spins: Vec<i64>,
    pub mode: Mode,
    /// Boundary component per point in `per_component` mode.
    pub components: Option<Vec<usize>>,
    /// Fixed concentration points; the minimizer of the reduced functional
    /// is used when absent.
    pub points: Option<Vec<[f64; 2]>>,
    pub k: f64,
    pub separation: Option<f64>,
    pub mass_rule: MassRuleSpec,
    pub mass_bound: f64,
    /// Green function used by the minimizer.
    pub green: GreenSource,
}

impl Default for Concentration {
    fn default() -> Self {
        Concentration {
            spins: vec![1, -1],
            mode: Mode::AxisSymmetric,
            components: None,
            points: None,
            k: 20.0,
            separation: None,
            mass_rule: MassRuleSpec::AsWritten,
            mass_bound: 1e6,
            green: GreenSource::Grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Regime {
    pub alpha: f64,
    pub eps0: f64,
    pub allow_out_of_regime: bool,
}

impl Default for Regime {
    fn default() -> Self {
        Regime { alpha: 1.0, eps0: 0.05, allow_out_of_regime: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Optimizer {
    pub starts: usize,
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    pub boundary_tol: f64,
    /// Depth samples per face for the boundary-gap check.
    pub gap_samples: usize,
}

impl Default for Optimizer {
    fn default() -> Self {
        let o = sinhrobin_core::hamiltonian::MinimizeOptions::default();
        Optimizer {
            starts: o.starts,
            max_evals: o.max_evals,
            xtol: o.xtol,
            ftol: o.ftol,
            boundary_tol: o.boundary_tol,
            gap_samples: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Newton {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Newton {
    fn default() -> Self {
        Newton { tol: 1e-9, max_iter: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profile {
    /// Range of `λd` sampled along the positive x-axis.
    pub lambda_d: [f64; 2],
    pub samples: usize,
}

impl Default for Profile {
    fn default() -> Self {
        Profile { lambda_d: [0.5, 2.0], samples: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub grid: GridSpec,
    pub lambda: Vec<f64>,
    pub eps: Vec<f64>,
    pub regime: Regime,
    pub concentration: Concentration,
    pub sigma: f64,
    pub optimizer: Optimizer,
    pub newton: Newton,
    pub profile: Profile,
    /// Points for `green-table`.
    pub probes: Vec<[f64; 2]>,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainSpec::default(),
            grid: GridSpec::default(),
            lambda: vec![20.0],
            eps: vec![1e-4],
            regime: Regime::default(),
            concentration: Concentration::default(),
            sigma: 0.5,
            optimizer: Optimizer::default(),
            newton: Newton::default(),
            profile: Profile::default(),
            probes: Vec::new(),
            seed: 0,
            workers: 1,
            output_dir: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks everything that can be checked without running the numerics.
    pub fn validate(&self) -> Result<(), Error> {
        let domain = self.domain.build()?;
        let spins = self.spins()?;
        if self.lambda.is_empty() || self.eps.is_empty() {
            return Err(Error::Config("lambda and eps lists must be nonempty".into()));
        }
        for &lambda in &self.lambda {
            for &eps in &self.eps {
                Params::new(eps, lambda, self.regime.alpha, self.regime.eps0, self.regime.allow_out_of_regime)?;
            }
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::Config(format!("sigma must lie in (0, 1), got {}", self.sigma)));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let c = &self.concentration;
        if let Some(points) = &c.points {
            if points.len() != spins.len() {
                return Err(Error::Config(format!("{} points but {} spins", points.len(), spins.len())));
            }
            for p in points {
                if !domain.contains(Point::new(p[0], p[1])) {
                    return Err(Error::OutsideDomain { x: p[0], y: p[1] });
                }
            }
        }
        if c.mode == Mode::PerComponent {
            let comps = c
                .components
                .as_ref()
                .ok_or_else(|| Error::Config("per_component mode needs concentration.components".into()))?;
            if comps.len() != spins.len() {
                return Err(Error::Config(format!("{} components but {} spins", comps.len(), spins.len())));
            }
            if let Some(&bad) = comps.iter().find(|&&j| j >= domain.component_count()) {
                return Err(Error::Config(format!("boundary component {bad} does not exist")));
            }
        }
        if c.green == GreenSource::Series && !matches!(self.domain, DomainSpec::Disk { .. }) {
            return Err(Error::Config("the series Green function is available on disks only".into()));
        }
        if c.mode == Mode::AxisSymmetric && matches!(self.domain, DomainSpec::Annulus { .. }) {
            return Err(Error::Config("axis_symmetric mode needs a simply connected domain".into()));
        }
        if self.profile.samples < 2
            || !(self.profile.lambda_d[0] > 0.0 && self.profile.lambda_d[1] > self.profile.lambda_d[0])
        {
            return Err(Error::Config("profile needs samples ≥ 2 and 0 < lambda_d[0] < lambda_d[1]".into()));
        }
        Ok(())
    }

    pub fn spins(&self) -> Result<SpinConfig, Error> {
        SpinConfig::new(&self.concentration.spins)
    }

    pub fn constraint(&self) -> Constraint {
        match self.concentration.mode {
            Mode::AxisSymmetric => Constraint::Axis,
            Mode::PerComponent => Constraint::PerComponent(self.concentration.components.clone().unwrap_or_default()),
            Mode::Free => Constraint::Free,
        }
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn zero_spin_is_rejected() {
        let e = RunConfig::from_toml("[concentration]\nspins = [1, 0]\n").unwrap_err();
        assert!(e.to_string().contains("spin must be ±1"), "{e}");
    }

    #[test]
    fn unknown_fields_name_the_line() {
        let e = RunConfig::from_toml("lambda = [10.0]\n\n[grid]\nn_radail = 4\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("n_radail") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 1;
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn out_of_regime_needs_the_flag() {
        assert!(RunConfig::from_toml("eps = [0.01]\nlambda = [40.0]\n").unwrap_err().is_config());
        assert!(RunConfig::from_toml("eps = [0.01]\nlambda = [40.0]\n[regime]\nallow_out_of_regime = true\n").is_ok());
    }
}
