//! Experiment configuration: one TOML file with the sections `[kmd]`,
//! `[config]`, `[stream]`, `[grid]` and `[sweep]`. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::central::{AxialGrid, HelixConfig, Variant, DEFAULT_KAPPA};
use crate::error::{Error, Result};
use crate::kmd::{FilamentEnsemble, COLLISION_FRACTION};
use crate::lift::SampleBox;
use crate::stream::{H2Grid, StreamParams};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "format_version")]
    pub format_version: u32,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub kmd: Option<KmdSection>,
    #[serde(default)]
    pub config: Option<FamilySection>,
    #[serde(default)]
    pub stream: Option<StreamSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmdSection {
    /// Checked against the family in `[config]` when given.
    #[serde(default)]
    pub n_filaments: Option<usize>,
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Axial period in pitches `2πh`; defaults to `[config].periods`.
    #[serde(default)]
    pub periods: Option<usize>,
    #[serde(default)]
    pub kappa: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha_core: Option<Vec<f64>>,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "default_collision")]
    pub collision_fraction: f64,
}

fn default_modes() -> usize {
    64
}

fn one() -> usize {
    1
}

fn default_collision() -> f64 {
    COLLISION_FRACTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    pub variant: Variant,
    pub r: f64,
    #[serde(default = "unit")]
    pub h: f64,
    pub n_outer: usize,
    #[serde(default = "one")]
    pub periods: usize,
    #[serde(default = "default_kappa")]
    pub kappa_center: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    #[serde(default)]
    pub epsilon: Option<Vec<f64>>,
    pub r: f64,
    pub h: f64,
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub delta1: Option<f64>,
    /// Fixed rotation speed; the leading-order value when absent.
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_n_rho")]
    pub n_rho: usize,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    /// Half-width of the square on which `build-stream` samples `ψ*` and `H₂`.
    #[serde(default = "default_half_width")]
    pub sample_half_width: f64,
    #[serde(default = "default_sample_n")]
    pub sample_n: usize,
    /// Box of `lift-3d` samples: `[-w, w]³` with `lift_n` points per axis.
    #[serde(default = "default_half_width")]
    pub lift_half_width: f64,
    #[serde(default = "default_lift_n")]
    pub lift_n: usize,
}

fn default_radius() -> f64 {
    H2Grid::default().radius
}

fn default_n_rho() -> usize {
    H2Grid::default().n_rho
}

fn default_n_theta() -> usize {
    H2Grid::default().n_theta
}

fn default_half_width() -> f64 {
    0.5
}

fn default_sample_n() -> usize {
    101
}

fn default_lift_n() -> usize {
    11
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            radius: default_radius(),
            n_rho: default_n_rho(),
            n_theta: default_n_theta(),
            sample_half_width: default_half_width(),
            sample_n: default_sample_n(),
            lift_half_width: default_half_width(),
            lift_n: default_lift_n(),
        }
    }
}

impl GridSection {
    pub fn h2(&self) -> H2Grid {
        H2Grid {
            radius: self.radius,
            n_rho: self.n_rho,
            n_theta: self.n_theta,
        }
    }

    pub fn lift_box(&self) -> SampleBox {
        SampleBox::cube(self.lift_half_width, self.lift_n)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `|log ε|` values; an alternative to `[stream].epsilon`.
    #[serde(default)]
    pub log_eps: Option<Vec<f64>>,
    /// Run independent sweep points concurrently.
    #[serde(default)]
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    /// Polygon `N = 3` dynamics and the `(r, h, N) = (1, 1, 3)` stream
    /// function over `|log ε| ∈ {10, 20, 40, 80}`.
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            out: None,
            kmd: Some(KmdSection {
                n_filaments: Some(3),
                modes: 64,
                periods: None,
                kappa: None,
                alpha_core: None,
                dt: 1e-4,
                t_final: 1.0,
                stride: 100,
                collision_fraction: COLLISION_FRACTION,
            }),
            config: Some(FamilySection {
                variant: Variant::StraightPolygon,
                r: 1.0,
                h: 1.0,
                n_outer: 3,
                periods: 1,
                kappa_center: DEFAULT_KAPPA,
            }),
            stream: Some(StreamSection {
                epsilon: None,
                r: 1.0,
                h: 1.0,
                n: 3,
                delta: default_delta(),
                delta1: None,
                alpha: None,
            }),
            grid: GridSection::default(),
            sweep: SweepSection {
                log_eps: Some(vec![10.0, 20.0, 40.0, 80.0]),
                parallel: false,
            },
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses a comma-separated list of `ε` values. Besides plain numbers,
/// `e^-40` stands for `exp(−40)`.
pub fn parse_epsilon_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let v = match t.strip_prefix("e^") {
                Some(p) => p.parse::<f64>().map(f64::exp),
                None => t.parse::<f64>(),
            };
            v.map_err(|_| config_error(format!("cannot parse epsilon value {t:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| if v.is_empty() { Err(config_error("empty epsilon list")) } else { Ok(v) })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Replaces the sweep by an explicit list of `ε`.
    pub fn override_epsilons(&mut self, eps: Vec<f64>) -> Result<()> {
        let stream = self
            .stream
            .as_mut()
            .ok_or_else(|| config_error("--epsilon-override needs a [stream] section"))?;
        stream.epsilon = Some(eps);
        self.sweep.log_eps = None;
        Ok(())
    }

    pub fn epsilons(&self) -> Result<Vec<f64>> {
        let stream = self.stream_section()?;
        match (&stream.epsilon, &self.sweep.log_eps) {
            (Some(_), Some(_)) => Err(config_error("give either [stream].epsilon or [sweep].log_eps, not both")),
            (Some(e), None) => Ok(e.clone()),
            (None, Some(l)) => Ok(l.iter().map(|l| (-l).exp()).collect()),
            (None, None) => Err(config_error("no epsilon values: set [stream].epsilon or [sweep].log_eps")),
        }
    }

    pub fn stream_section(&self) -> Result<&StreamSection> {
        self.stream.as_ref().ok_or_else(|| config_error("missing [stream] section"))
    }

    /// Stream parameters at every sweep point, validated.
    pub fn stream_params(&self) -> Result<Vec<StreamParams>> {
        let s = self.stream_section()?;
        let eps = self.epsilons()?;
        if eps.is_empty() {
            return Err(config_error("empty epsilon list"));
        }
        eps.iter()
            .map(|&e| {
                let p = StreamParams {
                    epsilon: e,
                    r: s.r,
                    h: s.h,
                    n: s.n,
                    delta: s.delta,
                    delta1: s.delta1,
                    alpha: s.alpha,
                    grid: self.grid.h2(),
                };
                p.validate().map_err(|err| config_error(format!("[stream] at epsilon {e:e}: {err}")))?;
                Ok(p)
            })
            .collect()
    }

    pub fn family(&self) -> Result<HelixConfig> {
        let c = self.config.as_ref().ok_or_else(|| config_error("missing [config] section"))?;
        let fam = match c.variant {
            Variant::StraightPolygon => HelixConfig::straight_polygon(c.r, c.n_outer),
            Variant::PolygonHelix => HelixConfig::polygon_helix(c.r, c.h, c.n_outer),
            Variant::PolygonWithCenter => HelixConfig::polygon_with_center(c.r, c.h, c.n_outer).map(|mut f| {
                f.kappa_center = c.kappa_center;
                f
            }),
        };
        let fam = fam.and_then(HelixConfig::validated).map_err(|e| config_error(format!("[config]: {e}")))?;
        if c.periods == 0 {
            return Err(config_error("[config].periods must be at least 1"));
        }
        Ok(fam)
    }

    pub fn kmd_section(&self) -> Result<&KmdSection> {
        self.kmd.as_ref().ok_or_else(|| config_error("missing [kmd] section"))
    }

    /// Initial filament state: the `[config]` family at `t = 0` with the
    /// `[kmd]` sampling and optional κ/α overrides.
    pub fn initial_state(&self) -> Result<(HelixConfig, FilamentEnsemble)> {
        let k = self.kmd_section()?;
        let fam = self.family()?;
        let c = self.config.as_ref().expect("family() checked the section");
        let periods = match k.periods {
            Some(p) if p != c.periods => {
                return Err(config_error(format!(
                    "[kmd].periods = {p} disagrees with [config].periods = {}",
                    c.periods
                )))
            }
            Some(p) => p,
            None => c.periods,
        };
        if !(k.dt > 0.0 && k.t_final > 0.0 && k.dt <= k.t_final) {
            return Err(config_error(format!("[kmd] needs 0 < dt <= t_final (dt = {}, t_final = {})", k.dt, k.t_final)));
        }
        if k.stride == 0 {
            return Err(config_error("[kmd].stride must be at least 1"));
        }
        if !(k.collision_fraction >= 0.0 && k.collision_fraction < 1.0) {
            return Err(config_error("[kmd].collision_fraction must lie in [0, 1)"));
        }
        let n = fam.n_filaments();
        if let Some(nf) = k.n_filaments {
            if nf != n {
                return Err(config_error(format!("[kmd].n_filaments = {nf} but the family has {n} filaments")));
            }
        }
        let grid = AxialGrid::pitches(k.modes, fam.h, periods);
        let mut state = crate::central::sample(&fam, 0.0, grid).map_err(|e| config_error(format!("[kmd]: {e}")))?;
        for (name, v, target) in [
            ("kappa", &k.kappa, &mut state.circulations),
            ("alpha_core", &k.alpha_core, &mut state.core_constants),
        ] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(config_error(format!("[kmd].{name} has {} entries for {n} filaments", v.len())));
                }
                *target = v.clone();
            }
        }
        state.validate().map_err(|e| config_error(format!("[kmd]: {e}")))?;
        Ok((fam, state))
    }

    /// Checks everything the given subcommand will need before any work.
    pub fn validate_for(&self, sub: Subcommand) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(config_error(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.grid.h2().validate().map_err(|e| config_error(format!("[grid]: {e}")))?;
        match sub {
            Subcommand::SimulateKmd => self.initial_state().map(|_| ()),
            Subcommand::BuildStream | Subcommand::ResidualScan | Subcommand::AlphaSolve => {
                if sub == Subcommand::BuildStream && (self.grid.sample_n < 2 || !(self.grid.sample_half_width > 0.0)) {
                    return Err(config_error("[grid] needs sample_n >= 2 and sample_half_width > 0"));
                }
                if sub == Subcommand::ResidualScan && self.epsilons()?.len() < 2 {
                    return Err(config_error("residual-scan needs at least two epsilon values"));
                }
                self.stream_params().map(|_| ())
            }
            Subcommand::Lift3d => {
                self.grid.lift_box().validate().map_err(|e| config_error(format!("[grid]: {e}")))?;
                self.stream_params().map(|_| ())
            }
            Subcommand::Verify => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    SimulateKmd,
    BuildStream,
    ResidualScan,
    AlphaSolve,
    Lift3d,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::SimulateKmd => "simulate-kmd",
            Self::BuildStream => "build-stream",
            Self::ResidualScan => "residual-scan",
            Self::AlphaSolve => "alpha-solve",
            Self::Lift3d => "lift-3d",
            Self::Verify => "verify",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        for sub in [Subcommand::SimulateKmd, Subcommand::ResidualScan, Subcommand::AlphaSolve, Subcommand::Lift3d] {
            c.validate_for(sub).unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("[stream]\nr = 1.0\nh = 1.0\nn = 3\nepsilon_typo = [0.1]\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(ExperimentConfig::from_toml("[extra]\na = 1\n").is_err());
    }

    #[test]
    fn epsilon_sources() {
        assert_eq!(parse_epsilon_list("0.5, e^-2").unwrap(), vec![0.5, (-2.0f64).exp()]);
        assert!(parse_epsilon_list("x").is_err());
        let mut c = ExperimentConfig::default();
        assert_eq!(c.epsilons().unwrap().len(), 4);
        c.stream.as_mut().unwrap().epsilon = Some(vec![1e-5]);
        assert!(c.epsilons().is_err());
        c.override_epsilons(vec![1e-6, 1e-8]).unwrap();
        assert_eq!(c.epsilons().unwrap(), vec![1e-6, 1e-8]);
    }

    #[test]
    fn ranges_are_checked_before_running() {
        let mut c = ExperimentConfig::default();
        c.stream.as_mut().unwrap().delta = 0.9;
        assert!(matches!(c.validate_for(Subcommand::AlphaSolve), Err(Error::Config(_))));
        let mut c = ExperimentConfig::default();
        c.kmd.as_mut().unwrap().n_filaments = Some(4);
        assert!(matches!(c.validate_for(Subcommand::SimulateKmd), Err(Error::Config(_))));
        let mut c = ExperimentConfig::default();
        c.kmd.as_mut().unwrap().modes = 48;
        assert!(c.validate_for(Subcommand::SimulateKmd).is_err());
    }
}
