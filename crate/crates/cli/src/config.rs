//! Run configuration: a flat TOML file, overridden by `--set KEY=VALUE`
//! pairs and then by the dedicated flags.

use std::fmt;
use std::path::{Path, PathBuf};

use collapse_core::bullet::{BulletParams, GridSpec};
use collapse_core::collapse::{BasisMethod, ScanGrid, ThresholdPolicy};
use collapse_core::entanglement::EntropyUnit;
use collapse_core::experiment::InitialState;
use collapse_core::quantum::{build_hamiltonian, ModelKind, ModelSpec, PauliTermSum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Every key a config file may contain. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `transverse_coupled`, `degenerate_ising` or `custom`.
    pub model: String,
    /// Environment sizes to run.
    pub n: Vec<usize>,
    /// Coupling of the degenerate Ising model.
    pub g: f64,
    /// Custom model terms, each `"COEFF LABEL"`, e.g. `"0.5 XZI"`.
    pub terms: Vec<String>,
    pub initial_state: InitialState,
    /// Entangling-speed threshold; `inf` disables collapse.
    pub threshold: f64,
    pub basis_method: BasisMethod,
    /// Sampling and threshold-check interval.
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub format: OutputFormat,
    pub entropy_unit: EntropyUnit,
    pub scan_theta: usize,
    pub scan_phi: usize,
    pub scan_refine: bool,
    pub refine_tolerance: f64,
    /// Revival: trials per run and environment size.
    pub trials: usize,
    pub revival_n: usize,
    pub sample_clicks: bool,
    /// Worker threads; 0 uses every core.
    #[serde(skip_serializing)]
    pub jobs: usize,
    /// Bullet, SI units except `line_density_per_cm`.
    pub mass: f64,
    pub density: f64,
    pub barrier: f64,
    pub line_density_per_cm: f64,
    pub v0: f64,
    pub x0: f64,
    pub grid_half_width: f64,
    pub grid_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bullet = BulletParams::default();
        let grid = GridSpec::default();
        let scan = ScanGrid::default();
        Self {
            model: ModelKind::TransverseCoupled.name().into(),
            n: vec![2, 4, 6, 8],
            g: 1.0,
            terms: Vec::new(),
            initial_state: InitialState::AllPlus,
            threshold: 1.0,
            basis_method: BasisMethod::Scan,
            dt: 0.01,
            t_max: 3.0,
            seed: 0,
            out: PathBuf::from("out"),
            format: OutputFormat::Csv,
            entropy_unit: EntropyUnit::Nats,
            scan_theta: scan.n_theta,
            scan_phi: scan.n_phi,
            scan_refine: scan.refine,
            refine_tolerance: scan.refine_tolerance,
            trials: 100,
            revival_n: 6,
            sample_clicks: false,
            jobs: 0,
            mass: bullet.mass,
            density: bullet.density,
            barrier: bullet.barrier,
            line_density_per_cm: bullet.line_density / 100.0,
            v0: bullet.v0,
            x0: bullet.x0,
            grid_half_width: grid.half_width,
            grid_points: grid.points,
        }
    }
}

/// Command-line overrides, applied in order after the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub set: Vec<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// Parses a bare TOML value; anything that is not valid TOML is a string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for pair in &overrides.set {
            let (key, value) =
                pair.split_once('=').ok_or_else(|| ConfigError(format!("--set expects KEY=VALUE, got '{pair}'")))?;
            table.insert(key.trim().to_string(), parse_value(value.trim()));
        }
        let mut config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError(format!("invalid config: {}", e.message())))?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(jobs) = overrides.jobs {
            config.jobs = jobs;
        }
        if let Some(out) = &overrides.out {
            config.out = out.clone();
        }
        if let Some(format) = overrides.format {
            config.format = format;
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.n.is_empty() && self.model_kind()? != ModelKind::Custom {
            return err("n must list at least one environment size".into());
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return err(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.refine_tolerance > 0.0) {
            return err(format!("refine_tolerance must be positive, got {}", self.refine_tolerance));
        }
        if self.scan_theta < 2 || self.scan_phi < 1 {
            return err("scan_theta must be ≥ 2 and scan_phi ≥ 1".into());
        }
        if self.trials < 1 {
            return err("trials must be at least 1".into());
        }
        if self.revival_n < 1 {
            return err("revival_n must be at least 1".into());
        }
        if !(self.g > 0.0) || !self.g.is_finite() {
            return err(format!("g must be positive, got {}", self.g));
        }
        self.policy()?;
        self.models()?;
        self.bullet_params().validate().map_err(|e| ConfigError(e.to_string()))?;
        self.bullet_grid().validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(())
    }

    pub fn model_kind(&self) -> Result<ModelKind, ConfigError> {
        self.model.parse().map_err(|e: collapse_core::Error| ConfigError(e.to_string()))
    }

    /// One `(N, Hamiltonian)` per sweep point. A custom model is a single
    /// point whose N follows from its labels.
    pub fn models(&self) -> Result<Vec<(usize, PauliTermSum)>, ConfigError> {
        let specs = match self.model_kind()? {
            ModelKind::DegenerateIsing => self.n.iter().map(|&n| ModelSpec::DegenerateIsing { n, g: self.g }).collect(),
            ModelKind::TransverseCoupled => self.n.iter().map(|&n| ModelSpec::TransverseCoupled { n }).collect(),
            ModelKind::Custom => vec![self.custom_spec()?],
        };
        specs
            .iter()
            .map(|s| {
                let h = build_hamiltonian(s).map_err(|e| ConfigError(e.to_string()))?;
                Ok((h.num_sites() - 1, h))
            })
            .collect()
    }

    fn custom_spec(&self) -> Result<ModelSpec, ConfigError> {
        let mut terms = Vec::new();
        let mut sites = None;
        for t in &self.terms {
            let (coeff, label) =
                t.trim().split_once(char::is_whitespace).ok_or_else(|| ConfigError(format!("term '{t}' is not 'COEFF LABEL'")))?;
            let coeff: f64 = coeff.parse().map_err(|_| ConfigError(format!("bad coefficient in term '{t}'")))?;
            let label = label.trim().to_string();
            sites.get_or_insert(label.len());
            terms.push((num_complex::Complex64::new(coeff, 0.0), label));
        }
        let num_sites = sites.ok_or_else(|| ConfigError("model = \"custom\" needs at least one entry in terms".into()))?;
        Ok(ModelSpec::Custom { num_sites, terms })
    }

    pub fn model_tag(&self) -> &str {
        &self.model
    }

    pub fn policy(&self) -> Result<ThresholdPolicy, ConfigError> {
        ThresholdPolicy::new(self.threshold, self.dt).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn scan_grid(&self) -> ScanGrid {
        ScanGrid {
            n_theta: self.scan_theta,
            n_phi: self.scan_phi,
            refine: self.scan_refine,
            refine_tolerance: self.refine_tolerance,
        }
    }

    pub fn bullet_params(&self) -> BulletParams {
        BulletParams {
            mass: self.mass,
            density: self.density,
            barrier: self.barrier,
            line_density: 0.0,
            v0: self.v0,
            x0: self.x0,
        }
        .with_line_density_per_cm(self.line_density_per_cm)
    }

    pub fn bullet_grid(&self) -> GridSpec {
        GridSpec { half_width: self.grid_half_width, points: self.grid_points }
    }

    /// SHA-256 of the resolved configuration, excluding the output directory
    /// and thread count.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str, set: &[&str]) -> Result<RunConfig, ConfigError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, text).unwrap();
        let overrides = Overrides { set: set.iter().map(|s| s.to_string()).collect(), ..Overrides::default() };
        RunConfig::load(Some(&path), &overrides)
    }

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::load(None, &Overrides::default()).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = load_str("modle = \"x\"\n", &[]).unwrap_err();
        assert!(e.0.contains("modle"), "{e}");
    }

    #[test]
    fn set_overrides_file() {
        let c = load_str("n = [2]\nthreshold = 0.5\n", &["threshold=inf", "basis_method=auto", "n=[3, 5]"]).unwrap();
        assert!(c.threshold.is_infinite());
        assert_eq!(c.basis_method, BasisMethod::Auto);
        assert_eq!(c.n, vec![3, 5]);
    }

    #[test]
    fn hash_ignores_out_and_jobs() {
        let a = RunConfig::default();
        let b = RunConfig { out: "elsewhere".into(), jobs: 3, ..RunConfig::default() };
        let c = RunConfig { seed: 1, ..RunConfig::default() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(load_str("model = \"heisenberg\"\n", &[]).is_err());
        assert!(load_str("mass = -0.01\n", &[]).is_err());
        assert!(load_str("dt = 0\n", &[]).is_err());
        assert!(load_str("threshold = -1\n", &[]).is_err());
        assert!(load_str("n = \"four\"\n", &[]).is_err());
    }

    #[test]
    fn custom_model() {
        let c = load_str("model = \"custom\"\nterms = [\"1.0 XZ\", \"0.5 ZX\"]\n", &[]).unwrap();
        let models = c.models().unwrap();
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].0, 1);
    }
}
