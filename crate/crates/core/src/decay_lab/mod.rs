//! Decay-rate laboratory: norm time series, log-linear fits, theoretical exponents,
//! time-weighted energy functionals and verdict reports.
//!
//! Series and fits are kept in `f64` whatever the scalar type of the trajectory.

pub mod functionals;
pub mod report;
pub mod theory;

use std::io::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::grid::Grid;
use crate::lp_besov::{BesovSpec, DyadicPartition, SumIndex};
use crate::scalar::{lit, to_f64, Scalar};
use crate::solver::{field_hat, Mode, Trajectory};
use crate::symbolics::quadrature::QuadratureRun;

pub use functionals::{energy_functionals, initial_size, EnergyFunctionals, FunctionalGrid};
pub use report::{compile_report, Report, ReportEntry};
pub use theory::{gamma_p2, theory_exponent, theory_exponent_linear, Regime, TheoryGroup, TheoryKey, TheoryTable};

type C<T> = Complex<T>;

/// Component groups whose norms are tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// `||sigma_e|| + ||sigma_i|| + ||E||`
    Densities,
    /// `||u_e|| + ||u_i|| + ||sigma_e - sigma_i||`
    Velocities,
    /// `||sigma_e - sigma_i||`
    Difference,
    /// `sqrt(1/2 (sum of squared component norms + w ||E||^2))`, `w = 2` for difference runs.
    Energy,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Densities => "densities",
            Group::Velocities => "velocities",
            Group::Difference => "difference",
            Group::Energy => "energy",
        }
    }
}

/// Norm applied to `Lambda^ell` of each field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    L2,
    Besov { s: f64, r: SumIndex, homogeneous: bool },
}

impl NormKind {
    fn spec<T: Scalar>(self) -> Option<BesovSpec<T>> {
        match self {
            NormKind::L2 => None,
            NormKind::Besov { s, r, homogeneous } => Some(BesovSpec { s: lit(s), r, homogeneous }),
        }
    }

    fn label(self) -> String {
        match self {
            NormKind::L2 => "L2".into(),
            NormKind::Besov { s, r, homogeneous } => {
                let r = match r {
                    SumIndex::One => "1",
                    SumIndex::Infinity => "inf",
                };
                format!("{}B^{s}_2,{r}", if homogeneous { "dot-" } else { "" })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantityTag {
    pub group: Group,
    pub ell: f64,
    pub norm: NormKind,
}

impl QuantityTag {
    pub fn label(&self) -> String {
        format!("{}:ell={}:{}", self.group.name(), self.ell, self.norm.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Quadrature,
    /// Grid solver on a box of side `length`.
    GridSolver { length: f64 },
}

impl Provenance {
    /// `(L / 2 pi)^2` for grid runs: past it the lowest box mode dominates.
    pub fn crossover(self) -> Option<f64> {
        match self {
            Provenance::Quadrature => None,
            Provenance::GridSolver { length } => Some((length / (2.0 * std::f64::consts::PI)).powi(2)),
        }
    }

    /// `[1e2, 1e4]` for quadrature; `[5, min(40, 0.8 crossover)]` for grid runs.
    pub fn default_window(self) -> (f64, f64) {
        match self.crossover() {
            None => (1e2, 1e4),
            Some(c) => (5.0, (0.8 * c).min(40.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub tag: QuantityTag,
    pub provenance: Provenance,
}

impl NormSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Two-column plot data.
    pub fn write_dat<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# {} ({:?})", self.tag.label(), self.provenance)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t:.9e} {v:.12e}")?;
        }
        Ok(())
    }
}

/// `||Lambda^ell f||` in the requested norm, with `f` a scalar or vector field given by its components.
pub(crate) fn field_norm<T: Scalar>(
    grid: &Grid<T>,
    partition: Option<&DyadicPartition<T>>,
    comps: &[&[C<T>]],
    ell: T,
    norm: NormKind,
) -> Result<T, LabError> {
    if ell < T::zero() {
        for c in comps {
            let mean = grid.mean_hat(c);
            let scale = grid.l2_norm_hat(c) / grid.volume().sqrt();
            if mean.abs() > lit::<T>(1e-12) * scale.max(T::min_positive_value()) {
                return Err(crate::error::ModelError::NonzeroMean { alpha: to_f64(ell), mean: to_f64(mean) }.into());
            }
        }
    }
    match (norm.spec::<T>(), partition) {
        (Some(spec), Some(p)) => {
            let mut blocks: Vec<(i32, T)> = Vec::new();
            for c in comps {
                let b = p.block_norms_hat(c, ell, spec.homogeneous);
                if blocks.is_empty() {
                    blocks = b.into_iter().map(|(q, v)| (q, v * v)).collect();
                } else {
                    blocks.iter_mut().zip(b).for_each(|(a, (_, v))| a.1 = a.1 + v * v);
                }
            }
            let blocks: Vec<(i32, T)> = blocks.into_iter().map(|(q, v)| (q, v.sqrt())).collect();
            Ok(spec.combine(&blocks))
        }
        _ => {
            let kmag = grid.kmags();
            let m = crate::scalar::from_usize::<T>(grid.len());
            let mut s = T::zero();
            for c in comps {
                for (z, &k) in c.iter().zip(kmag) {
                    let w = if ell == T::zero() {
                        T::one()
                    } else if k == T::zero() {
                        T::zero()
                    } else {
                        k.powf(ell + ell)
                    };
                    s = s + w * z.norm_sqr();
                }
            }
            Ok((s * grid.volume() / (m * m)).sqrt())
        }
    }
}

/// The group norm of one spectral state.
pub fn group_norm<T: Scalar>(
    grid: &Grid<T>,
    partition: Option<&DyadicPartition<T>>,
    mode: Mode,
    state: &crate::model::SpectralState<T>,
    group: Group,
    ell: T,
    norm: NormKind,
) -> Result<T, LabError> {
    let f = |comps: &[&[C<T>]]| field_norm(grid, partition, comps, ell, norm);
    let diff: Vec<C<T>> = state.sigma_e.iter().zip(&state.sigma_i).map(|(&a, &b)| a - b).collect();
    let ue: Vec<&[C<T>]> = state.u_e.iter().map(|v| v.as_slice()).collect();
    let ui: Vec<&[C<T>]> = state.u_i.iter().map(|v| v.as_slice()).collect();
    let need_field = matches!(group, Group::Densities | Group::Energy);
    let e = if need_field { Some(field_hat(grid, state)) } else { None };
    let ev: Vec<&[C<T>]> = e.iter().flat_map(|e| e.iter().map(|v| v.as_slice())).collect();
    Ok(match group {
        Group::Densities => f(&[&state.sigma_e])? + f(&[&state.sigma_i])? + f(&ev)?,
        Group::Velocities => f(&ue)? + f(&ui)? + f(&[&diff])?,
        Group::Difference => f(&[&diff])?,
        Group::Energy => {
            let w: T = if mode == Mode::LinearDifference { lit(2.0) } else { T::one() };
            let sq = |x: T| x * x;
            let s = sq(f(&[&state.sigma_e])?) + sq(f(&ue)?) + sq(f(&[&state.sigma_i])?) + sq(f(&ui)?) + w * sq(f(&ev)?);
            (s * lit(0.5)).sqrt()
        }
    })
}

/// Norm of `Lambda^ell` of a group at every stored snapshot of a grid trajectory.
pub fn norm_series<T: Scalar>(traj: &Trajectory<T>, group: Group, ell: f64, norm: NormKind) -> Result<NormSeries, LabError> {
    if traj.snapshots.is_empty() {
        return Err(LabError::NoStates);
    }
    let partition = matches!(norm, NormKind::Besov { .. }).then(|| DyadicPartition::for_grid(&traj.grid));
    let mut times = Vec::with_capacity(traj.snapshots.len());
    let mut values = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        times.push(to_f64(snap.time));
        values.push(to_f64(group_norm(&traj.grid, partition.as_ref(), traj.mode, &snap.state, group, lit(ell), norm)?));
    }
    Ok(NormSeries {
        times,
        values,
        tag: QuantityTag { group, ell, norm },
        provenance: Provenance::GridSolver { length: to_f64(traj.grid.length()) },
    })
}

/// Group norms from a radial quadrature run (homogeneous Besov norms use annulus-restricted integrals).
pub fn quadrature_series<T: Scalar>(run: &QuadratureRun<T>, group: Group, ell: f64, norm: NormKind) -> Result<NormSeries, LabError> {
    let times: Vec<f64> = run.times.iter().map(|&t| to_f64(t)).collect();
    let values: Vec<f64> = match (group, norm.spec::<T>()) {
        (Group::Energy, None) => (0..run.times.len())
            .map(|k| {
                let c = run.component_norms(k, lit(ell));
                to_f64(((c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3] + c[4] * c[4]) * lit(0.5)).sqrt())
            })
            .collect(),
        (Group::Energy, Some(_)) => return Err(LabError::Regime("energy group is only tracked in L2".into())),
        (g, spec) => {
            if spec.is_some_and(|s| !s.homogeneous) {
                return Err(LabError::Regime("quadrature Besov norms are homogeneous only".into()));
            }
            let groups = match spec {
                None => run.l2_norms(lit(ell)),
                Some(s) => run.besov_norms(lit(ell), &s),
            };
            groups
                .iter()
                .map(|n| {
                    to_f64(match g {
                        Group::Densities => n.densities,
                        Group::Velocities => n.velocities,
                        _ => n.difference,
                    })
                })
                .collect()
        }
    };
    Ok(NormSeries { times, values, tag: QuantityTag { group, ell, norm }, provenance: Provenance::Quadrature })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `v ~ (1 + t)^exponent`
    Power,
    /// `v ~ e^{-rate t}`
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: FitModel,
    /// Exponent for the power model, rate for the exponential model.
    pub value: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub crossover: Option<f64>,
    pub tag: QuantityTag,
}

pub const MIN_FIT_POINTS: usize = 10;

/// Least squares on `(log(1+t), log v)` or `(t, log v)` over the closed window.
pub fn fit_decay(series: &NormSeries, model: FitModel, window: (f64, f64)) -> Result<DecayFit, LabError> {
    let (t0, t1) = window;
    let (lo, hi) = match (series.times.first(), series.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(LabError::TooFewPoints { t0, t1, points: 0, needed: MIN_FIT_POINTS }),
    };
    let slack = 1e-9 * hi.abs().max(1.0);
    if !(t0 < t1) || t0 < lo - slack || t1 > hi + slack {
        return Err(LabError::WindowOutside { t0, t1, lo, hi });
    }
    let crossover = series.provenance.crossover();
    if let (Some(c), FitModel::Power) = (crossover, model) {
        if t1 > c {
            return Err(LabError::BeyondCrossover { t1, crossover: c });
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t < t0 - slack || t > t1 + slack {
            continue;
        }
        if !(v > 0.0) || !v.is_finite() {
            return Err(LabError::NonPositive { time: t, value: v });
        }
        xs.push(match model {
            FitModel::Power => (1.0 + t).ln(),
            FitModel::Exponential => t,
        });
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(LabError::TooFewPoints { t0, t1, points: n, needed: MIN_FIT_POINTS });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = if n > 2 { (ss_res / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let value = match model {
        FitModel::Power => slope,
        FitModel::Exponential => -slope,
    };
    Ok(DecayFit { model, value, stderr, intercept, r_squared, window, points: n, crossover, tag: series.tag })
}
