//! Run configuration: one JSON document, validated before any work starts.

use std::path::{Path, PathBuf};

use fredstab::models::ModelDescriptor;
use fredstab::simulate::Integrator;
use fredstab::spectral::{IntervalConvention, SpectralSystem, SystemDoc};
use fredstab::synthesis::SeriesAcceleration;
use fredstab::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Direct,
    Iterative,
    /// Solve both ways and require agreement.
    Both,
}

/// Either an inline model descriptor or a path to a system JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Path(PathBuf),
    Descriptor(ModelDescriptor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Uniform coefficients in `[-1, 1]` divided by `n^decay`.
    Random {
        seed: u64,
        #[serde(default)]
        decay: f64,
    },
    /// A single unit mode.
    Mode { branch: usize, n: usize },
    /// Explicit `[re, im]` coefficients per branch.
    Modal(Vec<Vec<[f64; 2]>>),
    /// Uniform samples of `u_0` on `[0, 2 pi)`; Burgers only.
    Physical(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_bisections")]
    pub bisections: usize,
}

fn default_bisections() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub u0: InitialSpec,
    #[serde(rename = "T_end")]
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub integrator: Option<Integrator>,
    #[serde(default)]
    pub nonlinear: bool,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Rescale `u0` to this norm (L2 in physical space for Burgers).
    #[serde(default)]
    pub norm: Option<f64>,
    /// Sobolev index of the fitted norm.
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Also run RK4 and record the deviation from the exact semigroup.
    #[serde(default)]
    pub cross_check: bool,
    #[serde(default)]
    pub basin: Option<BasinSpec>,
}

fn default_samples() -> usize {
    201
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub lambda0: Option<Vec<f64>>,
    #[serde(rename = "N", default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
}

/// `(lambda0, N, gamma)`; `None` keeps the base value.
pub type GridPoint = (f64, Option<usize>, Option<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub lambda0: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub method: MethodChoice,
    #[serde(default)]
    pub acceleration: SeriesAcceleration,
    #[serde(default = "default_r_list")]
    pub r_list: Vec<f64>,
    #[serde(default)]
    pub interval_convention: IntervalConvention,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Overrides the declared control growth exponent on every branch.
    #[serde(default)]
    pub gamma: Option<f64>,
}

fn default_delta() -> f64 {
    0.25
}

fn default_r_list() -> Vec<f64> {
    vec![0.0]
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Schema(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config; relative model paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&read_text(path)?)?;
        if let ModelSpec::Path(p) = &mut cfg.model {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Schema(m));
        if !(self.lambda0 > 0.0) || !(self.delta > 0.0) {
            return bad(format!("lambda0 and delta must be positive (got {}, {})", self.lambda0, self.delta));
        }
        if self.n == Some(0) {
            return bad("N must be at least 1".into());
        }
        if self.r_list.iter().any(|r| !r.is_finite()) {
            return bad("r_list entries must be finite".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &self.scenarios {
            if s.name.is_empty() || !s.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("scenario name {:?} must be nonempty [A-Za-z0-9_-]", s.name));
            }
            if !names.insert(&s.name) {
                return bad(format!("duplicate scenario name {:?}", s.name));
            }
            if !(s.t_end > 0.0) || !(s.dt > 0.0) || s.samples < 2 {
                return bad(format!("scenario {}: need T_end > 0, dt > 0, samples >= 2", s.name));
            }
            if s.norm.is_some_and(|v| !(v > 0.0)) {
                return bad(format!("scenario {}: norm must be positive", s.name));
            }
            if s.basin.is_some() && !s.nonlinear {
                return bad(format!("scenario {}: basin search needs nonlinear = true", s.name));
            }
        }
        Ok(())
    }

    /// Builds the spectral system, applying the `N` and `gamma` overrides.
    pub fn build_system(&self) -> Result<SpectralSystem<f64>> {
        let mut sys = match &self.model {
            ModelSpec::Descriptor(d) => {
                let mut d = d.clone();
                if let Some(n) = self.n {
                    d.n = n;
                }
                d.build::<f64>()?
            }
            ModelSpec::Path(p) => {
                let doc: SystemDoc =
                    serde_json::from_str(&read_text(p)?).map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
                let sys = SpectralSystem::from_doc(&doc)?;
                match self.n {
                    Some(n) => sys.truncated(n),
                    None => sys,
                }
            }
        };
        if let Some(g) = self.gamma {
            for b in &mut sys.branches {
                b.gamma = g;
            }
        }
        Ok(sys)
    }

    /// Sweep grid points in `lambda0`-major order.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let empty = || Error::InvalidInput("sweep grid is empty".into());
        let g = self.sweep.as_ref().ok_or_else(empty)?;
        if g.lambda0.is_none() && g.n.is_none() && g.gamma.is_none() {
            return Err(empty());
        }
        let l0 = g.lambda0.clone().unwrap_or_else(|| vec![self.lambda0]);
        let ns: Vec<Option<usize>> = g.n.as_ref().map_or(vec![self.n], |v| v.iter().map(|&n| Some(n)).collect());
        let gs: Vec<Option<f64>> = g.gamma.as_ref().map_or(vec![self.gamma], |v| v.iter().map(|&x| Some(x)).collect());
        let mut out = Vec::new();
        for &l in &l0 {
            for &n in &ns {
                for &gm in &gs {
                    out.push((l, n, gm));
                }
            }
        }
        if out.is_empty() {
            return Err(empty());
        }
        Ok(out)
    }
}
