//! JSON scenario files (schema version 1).
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "grid": { "h": 0.1, "s_max": 3.0, "z_max": 6.0 },
//!   "driver": { "drift_b": 1.0, "gaussian_c": 1.0,
//!               "jump_marks": [{ "xi": 1.0, "w": 1.0 }],
//!               "wiener_factors": 1, "window": { "M": 1.0, "eps": 0.1 } },
//!   "volatility": { "kind": "improvement_vol",
//!                   "levy": { "type": "example", "which": 1 } },
//!   "initial": { "type": "gompertz", "theta": [2.0, 0.1, 1e-4, 0.1, 1e-3] },
//!   "simulation": { "mode": "improvements", "dt": 0.1, "t_end": 2.0,
//!                   "n_paths": 10000, "seed": 42 },
//!   "queries": [{ "t": 1.0, "T": 1.5, "x": 2.0 }]
//! }
//! ```
//!
//! Optional sections `cohort`, `pricing` and `validation` configure the
//! corresponding CLI subcommands. File paths are relative to the config
//! file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drift::{ClosedFormExample, LevyScalarVol, VolKind, VolatilityModel};
use crate::error::{Error, Result};
use crate::levy::{JumpMark, LevyDriverSpec, MomentWindow};
use crate::pricing::DiscountCurve;
use crate::simulate::{
    DriftMode, InitialCondition, ScenarioConfig, SimMode, SurvivalQuery, VolSpec,
};
use crate::surface::{
    gompertz_makeham_surfaces, io::load_surface, GompertzParams, Surface, SurfaceGrid,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridConfig,
    pub driver: DriverConfig,
    pub volatility: VolatilityConfig,
    pub initial: InitialConfig,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub queries: Vec<QueryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<CohortConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing: Option<PricingConfig>,
    #[serde(default)]
    pub validation: ValidationConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    pub s_max: f64,
    pub z_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkConfig {
    pub xi: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(rename = "M")]
    pub m: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    pub drift_b: f64,
    pub gaussian_c: f64,
    #[serde(default)]
    pub jump_marks: Vec<MarkConfig>,
    pub wiener_factors: usize,
    pub window: WindowConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindConfig {
    RateVol,
    ImprovementVol,
}

impl From<KindConfig> for VolKind {
    fn from(k: KindConfig) -> Self {
        match k {
            KindConfig::RateVol => VolKind::RateVol,
            KindConfig::ImprovementVol => VolKind::ImprovementVol,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// One loading surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadingConfig {
    Constant {
        value: f64,
    },
    /// `c0 + cs·s + cz·(s + y)`.
    Affine {
        c0: f64,
        cs: f64,
        cz: f64,
    },
    /// One of the closed-form volatilities: `b̂` for improvement kind, `σ̂`
    /// for rate kind.
    Example {
        which: u32,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Surface CSV with its JSON sidecar.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolatilityConfig {
    pub kind: KindConfig,
    /// Scalar Lévy loading; exclusive with `wiener`/`jumps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy: Option<LoadingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiener: Option<Vec<LoadingConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<Vec<LoadingConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Gompertz {
        theta: [f64; 5],
    },
    Constant {
        rate: f64,
    },
    /// Forward-rate surface CSV with sidecar.
    File {
        mu0: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    Rates,
    Improvements,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConfig {
    Consistent,
    Zero,
}

fn default_drift() -> DriftConfig {
    DriftConfig::Consistent
}

fn default_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub mode: ModeConfig,
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default = "default_drift")]
    pub drift: DriftConfig,
    #[serde(default = "default_every")]
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub t: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub x: f64,
}

fn default_knots() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortConfig {
    /// Age at time 0.
    pub x: f64,
    pub size: usize,
    /// Which simulated path drives the cohort.
    #[serde(default)]
    pub path: usize,
    /// Use a constant hazard instead of a simulated path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_hazard: Option<f64>,
    /// Horizon of the constant-hazard path; defaults to the simulation end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_knots")]
    pub knots: usize,
    pub lln_times: Vec<f64>,
    /// Defaults to the hazard knots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compensator_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DiscountConfig {
    Flat(f64),
    /// CSV with columns `t, r`.
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstrumentConfig {
    SurvivorBond { maturity: f64, x: f64 },
    Annuity { dates: Vec<f64>, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    pub discount: DiscountConfig,
    pub valuation_times: Vec<f64>,
    pub instruments: Vec<InstrumentConfig>,
}

fn d3() -> f64 {
    3.0
}
fn d10() -> f64 {
    10.0
}
fn d_oracle() -> f64 {
    1e-3
}
fn d_pass() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    /// `|z|` band for martingale checks.
    #[serde(default = "d3")]
    pub martingale_z: f64,
    /// Share of queries that must fall inside the band.
    #[serde(default = "d_pass")]
    pub martingale_pass_fraction: f64,
    #[serde(default = "d3")]
    pub lln_sigmas: f64,
    #[serde(default = "d3")]
    pub compensator_sigmas: f64,
    /// Identity bound `factor·(dt + h²)·scale`.
    #[serde(default = "d10")]
    pub identity_factor: f64,
    /// Sup-norm relative tolerance for closed-form drift oracles.
    #[serde(default = "d_oracle")]
    pub drift_oracle_rel_tol: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            martingale_z: d3(),
            martingale_pass_fraction: d_pass(),
            lln_sigmas: d3(),
            compensator_sigmas: d3(),
            identity_factor: d10(),
            drift_oracle_rel_tol: d_oracle(),
        }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    /// Canonical serialisation, used for hashing.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn grid(&self) -> Result<SurfaceGrid<f64>> {
        SurfaceGrid::from_extent(self.grid.h, self.grid.s_max, self.grid.z_max)
    }

    pub fn driver(&self) -> Result<LevyDriverSpec<f64>> {
        let d = &self.driver;
        let marks = d
            .jump_marks
            .iter()
            .map(|m| JumpMark {
                xi: m.xi,
                intensity: m.w,
            })
            .collect();
        let spec = LevyDriverSpec::new(
            d.drift_b,
            d.gaussian_c,
            marks,
            d.wiener_factors,
            MomentWindow::new(d.window.m, d.window.eps)?,
        )?;
        // improvement volatilities evaluate cumulants at unbounded
        // nonnegative arguments
        if self.volatility.kind == KindConfig::ImprovementVol
            || self.simulation.mode == ModeConfig::Improvements
        {
            spec.with_half_line_extension()
        } else {
            Ok(spec)
        }
    }

    /// Closed-form example selected by a scalar example loading, if any.
    pub fn example(&self) -> Option<(ClosedFormExample, f64)> {
        match &self.volatility.levy {
            Some(LoadingConfig::Example { which, scale }) => ClosedFormExample::from_index(*which)
                .ok()
                .map(|e| (e, *scale)),
            _ => None,
        }
    }

    fn loading(
        &self,
        spec: &LoadingConfig,
        grid: SurfaceGrid<f64>,
        base: &Path,
    ) -> Result<Surface<f64>> {
        let kind = self.volatility.kind;
        match spec {
            LoadingConfig::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::invalid("loading.value", "must be finite"));
                }
                Ok(Surface::constant(grid, *value))
            }
            LoadingConfig::Affine { c0, cs, cz } => {
                Surface::from_fn(grid, |s, y| c0 + cs * s + cz * (s + y))
            }
            LoadingConfig::Example { which, scale } => {
                let ex = ClosedFormExample::from_index(*which)?;
                Surface::from_fn(grid, |s, y| {
                    scale
                        * match kind {
                            KindConfig::ImprovementVol => ex.b(s, y),
                            KindConfig::RateVol => ex.sigma(s, y),
                        }
                })
            }
            LoadingConfig::File { path } => {
                let f = load_surface(&base.join(path))?;
                grid.ensure_compatible(f.grid())?;
                Ok(f)
            }
        }
    }

    pub fn vol_spec(&self, grid: SurfaceGrid<f64>, base: &Path) -> Result<VolSpec<f64>> {
        let v = &self.volatility;
        match (&v.levy, &v.wiener, &v.jumps) {
            (Some(l), None, None) => Ok(VolSpec::Levy(LevyScalarVol::new(
                self.loading(l, grid, base)?,
            ))),
            (None, w, j) if w.is_some() || j.is_some() => {
                let conv = |list: &Option<Vec<LoadingConfig>>| -> Result<Vec<Surface<f64>>> {
                    list.iter()
                        .flatten()
                        .map(|l| self.loading(l, grid, base))
                        .collect()
                };
                Ok(VolSpec::General(VolatilityModel::new(
                    grid,
                    v.kind.into(),
                    conv(w)?,
                    conv(j)?,
                )?))
            }
            _ => Err(Error::invalid(
                "volatility",
                "give either `levy` or `wiener`/`jumps`",
            )),
        }
    }

    pub fn initial(&self, grid: SurfaceGrid<f64>, base: &Path) -> Result<InitialCondition<f64>> {
        match &self.initial {
            InitialConfig::Gompertz { theta } => {
                let p = GompertzParams::from_array(*theta)?;
                let (j0, mu0, gamma0) = gompertz_makeham_surfaces(&p, grid)?;
                Ok(match self.simulation.mode {
                    ModeConfig::Improvements => InitialCondition::Improvements { j0, gamma0 },
                    ModeConfig::Rates => InitialCondition::Rates { mu0 },
                })
            }
            InitialConfig::Constant { rate } => {
                if !rate.is_finite() {
                    return Err(Error::invalid("initial.rate", "must be finite"));
                }
                Ok(InitialCondition::Rates {
                    mu0: Surface::constant(grid, *rate),
                })
            }
            InitialConfig::File { mu0 } => {
                let f = load_surface(&base.join(mu0))?;
                grid.ensure_compatible(f.grid())?;
                Ok(InitialCondition::Rates { mu0: f })
            }
        }
    }

    /// Gompertz parameters when the initial surface is Gompertz-Makeham.
    pub fn gompertz(&self) -> Option<GompertzParams<f64>> {
        match &self.initial {
            InitialConfig::Gompertz { theta } => GompertzParams::from_array(*theta).ok(),
            _ => None,
        }
    }

    /// Full scenario, with `record_spot` set when a simulated cohort is
    /// configured.
    pub fn scenario(&self, base: &Path) -> Result<ScenarioConfig<f64>> {
        let grid = self.grid()?;
        let sim = &self.simulation;
        let mut cfg = ScenarioConfig::new(
            grid,
            self.driver()?,
            self.vol_spec(grid, base)?,
            self.initial(grid, base)?,
            sim.dt,
            sim.t_end,
            match sim.mode {
                ModeConfig::Rates => SimMode::Rates,
                ModeConfig::Improvements => SimMode::Improvements,
            },
        );
        cfg.n_paths = sim.n_paths;
        cfg.seed = sim.seed;
        cfg.drift = match sim.drift {
            DriftConfig::Consistent => DriftMode::Consistent,
            DriftConfig::Zero => DriftMode::Zero,
        };
        cfg.checkpoint_every = sim.checkpoint_every;
        cfg.queries = self
            .queries
            .iter()
            .map(|q| SurvivalQuery {
                t: q.t,
                maturity: q.maturity,
                x: q.x,
            })
            .collect();
        cfg.record_spot = self
            .cohort
            .as_ref()
            .is_some_and(|c| c.constant_hazard.is_none());
        if let Some(c) = &self.cohort {
            if c.path >= sim.n_paths && c.constant_hazard.is_none() {
                return Err(Error::invalid("cohort.path", "exceeds n_paths"));
            }
        }
        Ok(cfg)
    }

    pub fn discount_curve(&self, base: &Path) -> Result<Option<DiscountCurve<f64>>> {
        match self.pricing.as_ref().map(|p| &p.discount) {
            None => Ok(None),
            Some(DiscountConfig::Flat(r)) => DiscountCurve::flat(*r).map(Some),
            Some(DiscountConfig::Csv(path)) => {
                DiscountCurve::from_csv(std::fs::File::open(base.join(path))?).map(Some)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "grid": { "h": 0.1, "s_max": 2.0, "z_max": 4.0 },
        "driver": { "drift_b": 1.0, "gaussian_c": 1.0,
                    "jump_marks": [{ "xi": 1.0, "w": 1.0 }],
                    "wiener_factors": 1, "window": { "M": 1.0, "eps": 0.1 } },
        "volatility": { "kind": "improvement_vol", "levy": { "type": "example", "which": 1 } },
        "initial": { "type": "gompertz", "theta": [2.0, 0.1, 1e-4, 0.1, 1e-3] },
        "simulation": { "mode": "improvements", "dt": 0.1, "t_end": 1.0, "n_paths": 4, "seed": 7 }
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ConfigFile::from_json(MINIMAL).unwrap();
        let sc = cfg.scenario(Path::new(".")).unwrap();
        assert_eq!(sc.n_paths, 4);
        assert_eq!(sc.grid.n_s(), 21);
        assert!(sc.driver.is_half_line_extended());
        assert!(matches!(sc.initial, InitialCondition::Improvements { .. }));
        assert_eq!(cfg.validation, ValidationConfig::default());
    }

    #[test]
    fn rejects_wrong_schema_and_unknown_fields() {
        let bumped = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(ConfigFile::from_json(&bumped)
            .unwrap_err()
            .is_config_error());
        let extra = MINIMAL.replace("\"seed\": 7", "\"seed\": 7, \"bogus\": 1");
        assert!(ConfigFile::from_json(&extra).is_err());
        assert!(ConfigFile::from_json("{").is_err());
    }

    #[test]
    fn ambiguous_volatility_rejected() {
        let mut cfg = ConfigFile::from_json(MINIMAL).unwrap();
        cfg.volatility.wiener = Some(vec![LoadingConfig::Constant { value: 1.0 }]);
        let grid = cfg.grid().unwrap();
        assert!(cfg.vol_spec(grid, Path::new(".")).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let cfg = ConfigFile::from_json(MINIMAL).unwrap();
        let again = ConfigFile::from_json(&cfg.canonical_json().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
