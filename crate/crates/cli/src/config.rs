//! Run configuration: TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twofluid::decay_lab::{Regime, TheoryGroup};
use twofluid::solver::Mode;
use twofluid::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output: PathBuf,
    pub seed: u64,
    pub regime: RegimeConfig,
    pub ell: Option<Vec<f64>>,
    pub groups: Option<Vec<TheoryGroup>>,
    pub window: Option<[f64; 2]>,
    pub physics: Physics,
    pub grid: GridConfig,
    pub solver: SolverSection,
    pub quadrature: QuadratureConfig,
    pub difference: DifferenceConfig,
    pub sweep: SweepConfig,
    pub lp: LpConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output: PathBuf::from("out"),
            seed: 7,
            regime: RegimeConfig::default(),
            ell: None,
            groups: None,
            window: None,
            physics: Physics::default(),
            grid: GridConfig::default(),
            solver: SolverSection::default(),
            quadrature: QuadratureConfig::default(),
            difference: DifferenceConfig::default(),
            sweep: SweepConfig::default(),
            lp: LpConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Exactly one of `s` and `p`; `s = 3/2` when neither is given.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    pub s: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub gamma: f64,
    /// Peak of the electron density bump on the grid.
    pub amplitude: f64,
    /// Masses of the quadrature profile.
    pub mass_e: f64,
    pub mass_i: f64,
    pub width_e: f64,
    pub width_i: f64,
    pub potential: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            gamma: 5.0 / 3.0,
            amplitude: 1e-2,
            mass_e: 1.0,
            mass_i: 1.0,
            width_e: std::f64::consts::SQRT_2,
            width_i: 2.0,
            potential: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 3, n: 32, length: 64.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub mode: Mode,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_every: usize,
    /// Write the binary snapshot container next to the manifest.
    pub write_snapshots: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { mode: Mode::Nonlinear, dt: 0.1, t_final: 40.0, snapshot_every: 10, write_snapshots: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub panels: usize,
    pub order: usize,
    pub times: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { r_min: 1e-5, r_max: 10.0, panels: 100, order: 10, times: 41 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceData {
    SingleMode,
    Band,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifferenceConfig {
    pub data: DifferenceData,
    pub n: usize,
    pub length: f64,
    pub amplitude: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    pub mode: [i64; 3],
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_every: usize,
}

impl Default for DifferenceConfig {
    fn default() -> Self {
        Self {
            data: DifferenceData::Band,
            n: 16,
            length: 4.0 * std::f64::consts::PI,
            amplitude: 1e-2,
            k_lo: 0.5,
            k_hi: 2.0,
            mode: [1, 0, 0],
            dt: 0.05,
            t_final: 30.0,
            snapshot_every: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub frequencies: usize,
    pub states: usize,
    pub radii: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub kappa: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { frequencies: 1000, states: 10_000, radii: 200, r_lo: 1e-3, r_hi: 1e3, kappa: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpConfig {
    pub n: usize,
    pub length: f64,
    pub samples: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self { n: 32, length: 32.0, samples: 100 }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn regime(&self) -> Result<Regime, ConfigError> {
        let r = match (self.regime.s, self.regime.p) {
            (Some(_), Some(_)) => return Err(ConfigError("regime: give either `s` or `p`, not both".into())),
            (Some(s), None) => Regime::S(s),
            (None, Some(p)) => Regime::P(p),
            (None, None) => Regime::S(1.5),
        };
        r.validate().map_err(|e| ConfigError(format!("regime: {e}")))?;
        Ok(r)
    }

    pub fn ells(&self, default: &[f64]) -> Vec<f64> {
        self.ell.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn groups(&self, default: &[TheoryGroup]) -> Vec<TheoryGroup> {
        self.groups.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn window(&self, default: (f64, f64)) -> Result<(f64, f64), ConfigError> {
        let w = self.window.map(|[a, b]| (a, b)).unwrap_or(default);
        if !(w.0 >= 0.0 && w.1 > w.0) {
            return Err(ConfigError(format!("window: need 0 <= t0 < t1, got [{}, {}]", w.0, w.1)));
        }
        Ok(w)
    }

    /// Range checks on values that no later stage validates with a useful key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, why: &str| Err(ConfigError(format!("{key}: {why}")));
        if let Some(ell) = &self.ell {
            if ell.is_empty() || ell.iter().any(|&l| l < 0.0 || !l.is_finite()) {
                return bad("ell", "need a nonempty list of finite values >= 0");
            }
        }
        if self.physics.amplitude <= 0.0 {
            return bad("physics.amplitude", "must be positive");
        }
        if self.physics.width_e <= 0.0 || self.physics.width_i <= 0.0 {
            return bad("physics.width_e/width_i", "must be positive");
        }
        if self.solver.dt <= 0.0 || self.solver.t_final <= 0.0 || self.solver.snapshot_every == 0 {
            return bad("solver", "dt, t_final and snapshot_every must be positive");
        }
        if self.difference.dt <= 0.0 || self.difference.t_final <= 0.0 || self.difference.snapshot_every == 0 {
            return bad("difference", "dt, t_final and snapshot_every must be positive");
        }
        if self.quadrature.times < 2 {
            return bad("quadrature.times", "need at least 2 sample times");
        }
        if self.sweep.r_lo <= 0.0 || self.sweep.r_hi <= self.sweep.r_lo || self.sweep.kappa <= 0.0 {
            return bad("sweep", "need 0 < r_lo < r_hi and kappa > 0");
        }
        if self.lp.samples == 0 {
            return bad("lp.samples", "must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::from_toml("[physics]\namplitud = 0.1\n").unwrap_err();
        assert!(e.0.contains("amplitud"), "{e}");
        let e = RunConfig::from_toml("sed = 3\n").unwrap_err();
        assert!(e.0.contains("sed"), "{e}");
    }

    #[test]
    fn regime_resolution() {
        let mut c = RunConfig::default();
        assert_eq!(c.regime().unwrap(), Regime::S(1.5));
        c.regime.p = Some(1.0);
        assert_eq!(c.regime().unwrap(), Regime::P(1.0));
        c.regime.s = Some(1.0);
        assert!(c.regime().is_err());
        c.regime.s = None;
        c.regime.p = Some(2.0);
        assert!(c.regime().unwrap_err().0.contains("regime"));
    }
}
