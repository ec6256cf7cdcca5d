//! Predicted decay exponents for the two component groups.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LabError;

/// Critical regularity `s_c = 5/2` of the data space.
pub const CRITICAL_REGULARITY: f64 = 2.5;

/// Degenerate components (densities and `E`) and non-degenerate ones (velocities and `n_e - n_i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryGroup {
    Densities,
    Velocities,
}

impl TheoryGroup {
    pub fn name(self) -> &'static str {
        match self {
            TheoryGroup::Densities => "densities",
            TheoryGroup::Velocities => "velocities",
        }
    }

    /// Largest admissible derivative index for the nonlinear estimates.
    pub fn max_ell(self) -> f64 {
        match self {
            TheoryGroup::Densities => CRITICAL_REGULARITY - 1.0,
            TheoryGroup::Velocities => CRITICAL_REGULARITY - 2.0,
        }
    }
}

/// Regularity of the data: negative Besov index `s` or Lebesgue exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    S(f64),
    P(f64),
}

impl Regime {
    pub fn validate(self) -> Result<(), LabError> {
        match self {
            Regime::S(s) if s > 0.0 && s <= 1.5 => Ok(()),
            Regime::P(p) if (1.0..2.0).contains(&p) => Ok(()),
            Regime::S(s) => Err(LabError::Regime(format!("s = {s} outside (0, 3/2]"))),
            Regime::P(p) => Err(LabError::Regime(format!("p = {p} outside [1, 2)"))),
        }
    }

    /// The `s` regime equivalent under the embedding `L^p -> B^{-3(1/p - 1/2)}_{2,inf}`.
    pub fn equivalent_s(self) -> f64 {
        match self {
            Regime::S(s) => s,
            Regime::P(p) => 3.0 * (1.0 / p - 0.5),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::S(s) => write!(f, "s={s}"),
            Regime::P(p) => write!(f, "p={p}"),
        }
    }
}

/// `gamma_{p,2} = (3/2)(1/p - 1/2)`.
pub fn gamma_p2(p: f64) -> f64 {
    1.5 * (1.0 / p - 0.5)
}

fn exponent(group: TheoryGroup, ell: f64, regime: Regime) -> f64 {
    let extra = match group {
        TheoryGroup::Densities => 0.0,
        TheoryGroup::Velocities => 0.5,
    };
    match regime {
        Regime::S(s) => -(s + ell) / 2.0 - extra,
        Regime::P(p) => -gamma_p2(p) - ell / 2.0 - extra,
    }
}

/// Exponent of `(1 + t)` in the decay of `||Lambda^ell group||_{L^2}` for the nonlinear problem.
pub fn theory_exponent(group: TheoryGroup, ell: f64, regime: Regime) -> Result<f64, LabError> {
    regime.validate()?;
    let max = group.max_ell();
    if !(0.0..=max).contains(&ell) {
        return Err(LabError::EllOutOfRange { ell, max, group: group.name().into() });
    }
    Ok(exponent(group, ell, regime))
}

/// Same rates for the linearized flow, where every `ell >= 0` is admissible.
pub fn theory_exponent_linear(group: TheoryGroup, ell: f64, regime: Regime) -> Result<f64, LabError> {
    regime.validate()?;
    if !(ell >= 0.0) {
        return Err(LabError::EllOutOfRange { ell, max: f64::INFINITY, group: group.name().into() });
    }
    Ok(exponent(group, ell, regime))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryKey {
    pub group: TheoryGroup,
    pub ell: f64,
    pub regime: Regime,
}

impl fmt::Display for TheoryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:ell={}:{}", self.group.name(), self.ell, self.regime)
    }
}

/// Predicted exponents keyed by `group:ell=..:s=..` strings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoryTable {
    pub entries: BTreeMap<String, f64>,
}

impl TheoryTable {
    /// Every `(group, ell)` combination; `linear` admits all `ell >= 0`.
    pub fn build(groups: &[TheoryGroup], ells: &[f64], regime: Regime, linear: bool) -> Result<Self, LabError> {
        let mut entries = BTreeMap::new();
        for &group in groups {
            for &ell in ells {
                let v = if linear {
                    theory_exponent_linear(group, ell, regime)?
                } else {
                    theory_exponent(group, ell, regime)?
                };
                entries.insert(TheoryKey { group, ell, regime }.to_string(), v);
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &TheoryKey) -> Option<f64> {
        self.entries.get(&key.to_string()).copied()
    }
}
