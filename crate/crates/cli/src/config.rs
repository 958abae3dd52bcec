//! Run configuration: a TOML tree whose every leaf has a default, plus `--set a.b=v` overrides.

use std::path::Path;

use cusplab_core::analysis::{CounterexampleParams, Disk, KornWeighting, MeshParams};
use cusplab_core::CuspDomain;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub gamma: f64,
    pub k: usize,
    pub m: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { gamma: 2.0, k: 1, m: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Gauss nodes per direction.
    pub order: usize,
    pub grading: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { order: 48, grading: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative divergence residual.
    pub residual: f64,
    /// Agreement of a quadrature with itself under refinement.
    pub quadrature: f64,
    /// Identities that hold exactly in real arithmetic.
    pub identity: f64,
    /// Absolute error against closed-form integrals.
    pub oracle: f64,
    /// Absolute error of the singular integral of `x^-2`.
    pub singular_mass: f64,
    /// Relative defect of the weak-derivative identity.
    pub weak_identity: f64,
    /// Relative slack on the Hardy bound.
    pub hardy_slack: f64,
    /// Allowed relative change of a stable constant between the last two levels.
    pub stability: f64,
    /// Relative gap of the lifted-measure identity.
    pub lifted: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-2,
            quadrature: 1e-5,
            identity: 1e-10,
            oracle: 1e-2,
            singular_mass: 1e-3,
            weak_identity: 1e-3,
            hardy_slack: 0.05,
            stability: 0.1,
            lifted: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory receiving `<command>.json` and `<command>.csv`.
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "cusplab-out".into() }
    }
}

/// Built-in right-hand sides; all are made mean-zero before solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// `x` minus its mean.
    Linear,
    /// `x^2 + y_1` minus its mean.
    Quadratic,
    /// `y_1`-derivative of a bump on the symmetry axis; exactly mean-zero.
    OddBump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivsolveConfig {
    pub beta: f64,
    pub eta: f64,
    pub p: f64,
    pub density: Density,
    pub ref_grading: f64,
    pub norm_order: usize,
    pub probes: usize,
    pub seed: u64,
    pub h_fd: f64,
}

impl Default for DivsolveConfig {
    fn default() -> Self {
        Self {
            beta: -1.0,
            eta: 0.0,
            p: 2.0,
            density: Density::Linear,
            ref_grading: 2.0,
            norm_order: 32,
            probes: 20,
            seed: 0,
            h_fd: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardyConfig {
    pub kappa: Vec<f64>,
    pub p: Vec<f64>,
    pub bumps: usize,
    pub seed: u64,
}

impl Default for HardyConfig {
    fn default() -> Self {
        Self {
            kappa: vec![0.0, 0.5, -0.5],
            p: vec![1.5, 2.0, 3.0],
            bumps: 10,
            seed: 0,
        }
    }
}

/// Expected behavior of a constant across levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    /// Last two levels agree within `tolerances.stability`.
    Stable,
    /// Strictly decreasing.
    Decreasing,
    /// Strictly increasing.
    Increasing,
    /// Only positivity is asserted.
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfSupConfig {
    pub levels: usize,
    /// Pressure weight exponent; `2 (gamma - 1)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_exponent: Option<f64>,
    pub expect: Expect,
    pub mesh: MeshParams,
}

impl Default for InfSupConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            weight_exponent: None,
            expect: Expect::Stable,
            mesh: MeshParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KornConfig {
    pub levels: usize,
    pub beta: f64,
    pub weighting: KornWeighting,
    pub expect: Expect,
    pub disk: Disk,
    pub mesh: MeshParams,
}

impl Default for KornConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            beta: 0.0,
            weighting: KornWeighting::Weighted,
            expect: Expect::Stable,
            disk: Disk::default(),
            mesh: MeshParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApcheckConfig {
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_steps: usize,
    pub p: Vec<f64>,
}

impl Default for ApcheckConfig {
    fn default() -> Self {
        Self {
            mu_min: -4.0,
            mu_max: 4.0,
            mu_steps: 81,
            p: vec![1.5, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanBetaConfig {
    pub p: f64,
    /// Distance of the first and last interior samples from the endpoints.
    pub delta: f64,
    /// Interior samples.
    pub steps: usize,
    pub density: Density,
    pub order: usize,
    pub norm_order: usize,
}

impl Default for ScanBetaConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            delta: 0.1,
            steps: 5,
            density: Density::OddBump,
            order: 32,
            norm_order: 24,
        }
    }
}

/// Integrands of the lifted-measure check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    One,
    Linear,
    InvSqrt,
    Oscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiftCheckConfig {
    pub n_prime: usize,
    pub s: f64,
    pub p: f64,
    pub integrand: Integrand,
}

impl Default for LiftCheckConfig {
    fn default() -> Self {
        Self {
            n_prime: 1,
            s: 1.0,
            p: 2.0,
            integrand: Integrand::InvSqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub quadrature: QuadratureConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
    pub divsolve: DivsolveConfig,
    pub hardy: HardyConfig,
    pub infsup: InfSupConfig,
    pub korn: KornConfig,
    pub counterexample: CounterexampleParams,
    pub apcheck: ApcheckConfig,
    pub scan_beta: ScanBetaConfig,
    pub lift_check: LiftCheckConfig,
}

/// Parses the right-hand side of `--set key=value` as a TOML value, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `a.b.c=value` to the tree, creating intermediate tables.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key segment")));
    }
    let (last, parents) = keys.split_last().expect("nonempty");
    let mut table = root;
    for (i, k) in parents.iter().enumerate() {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("override `{assignment}`: `{}` is not a table", keys[..=i].join(".")))
        })?;
    }
    table.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Reads, overrides, deserializes and validates the configuration.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Config(format!("{}: {}", p.display(), e.message())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Config(format!("key `{}`: {}", e.path(), e.inner().message())))?;
    config.validate()?;
    Ok(config)
}

fn require(ok: bool, key: &str, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("key `{key}`: {msg}")))
    }
}

impl RunConfig {
    pub fn cusp_domain(&self) -> Result<CuspDomain, CliError> {
        CuspDomain::new(self.domain.gamma, self.domain.k, self.domain.m)
            .map_err(|e| CliError::Config(format!("key `domain`: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.cusp_domain()?;
        require(self.quadrature.order >= 2, "quadrature.order", "must be >= 2")?;
        require(self.quadrature.grading >= 1.0, "quadrature.grading", "must be >= 1")?;
        let t = &self.tolerances;
        for (k, v) in [
            ("residual", t.residual),
            ("quadrature", t.quadrature),
            ("identity", t.identity),
            ("oracle", t.oracle),
            ("singular_mass", t.singular_mass),
            ("weak_identity", t.weak_identity),
            ("hardy_slack", t.hardy_slack),
            ("stability", t.stability),
            ("lifted", t.lifted),
        ] {
            require(v > 0.0 && v.is_finite(), &format!("tolerances.{k}"), "must be positive")?;
        }
        require(!self.output.dir.is_empty(), "output.dir", "must not be empty")?;
        require(self.divsolve.p > 1.0, "divsolve.p", "must be > 1")?;
        require(self.divsolve.probes >= 1, "divsolve.probes", "must be >= 1")?;
        require(self.divsolve.h_fd > 0.0, "divsolve.h_fd", "must be positive")?;
        require(self.divsolve.norm_order >= 2, "divsolve.norm_order", "must be >= 2")?;
        require(!self.hardy.kappa.is_empty(), "hardy.kappa", "must not be empty")?;
        require(self.hardy.p.iter().all(|&p| p > 1.0), "hardy.p", "entries must be > 1")?;
        require(self.hardy.bumps >= 1, "hardy.bumps", "must be >= 1")?;
        require((1..=6).contains(&self.infsup.levels), "infsup.levels", "must lie in 1..=6")?;
        require((1..=6).contains(&self.korn.levels), "korn.levels", "must lie in 1..=6")?;
        require(self.korn.beta >= 0.0, "korn.beta", "must be >= 0")?;
        require(self.apcheck.mu_steps >= 2, "apcheck.mu_steps", "must be >= 2")?;
        require(self.apcheck.mu_min < self.apcheck.mu_max, "apcheck.mu_min", "must be below apcheck.mu_max")?;
        require(self.apcheck.p.iter().all(|&p| p > 1.0), "apcheck.p", "entries must be > 1")?;
        require(self.scan_beta.p > 1.0, "scan_beta.p", "must be > 1")?;
        require(self.scan_beta.delta > 0.0, "scan_beta.delta", "must be positive")?;
        require(self.scan_beta.steps >= 1, "scan_beta.steps", "must be >= 1")?;
        require(self.lift_check.p >= 1.0, "lift_check.p", "must be >= 1")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_build_nested_values() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "divsolve.beta=-0.5").unwrap();
        apply_override(&mut t, "output.dir=somewhere").unwrap();
        apply_override(&mut t, "hardy.p=[2.0, 3.0]").unwrap();
        let c: RunConfig = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(c.divsolve.beta, -0.5);
        assert_eq!(c.output.dir, "somewhere");
        assert_eq!(c.hardy.p, vec![2.0, 3.0]);
        assert!(apply_override(&mut toml::Table::new(), "novalue").is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = load(None, &["divsolve.betta=1".into()]).unwrap_err();
        assert!(err.to_string().contains("divsolve"), "{err}");
        assert!(err.to_string().contains("betta"), "{err}");
        let err = load(None, &["domain.gamma=0.5".into()]).unwrap_err();
        assert!(err.to_string().contains("domain"), "{err}");
    }

    #[test]
    fn defaults_validate() {
        let c = load(None, &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }
}
