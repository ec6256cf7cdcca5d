//! Time-weighted energy functionals as running suprema over snapshots.
//!
//! With `s_c = 5/2`:
//! `E0(t) = sup ||w(tau)||_{B^{s_c}_{2,1}}`,
//! `E1(t) = sup_{ell < s_c - 1} sup (1+tau)^{(s+ell)/2} ||Lambda^ell w||_{B^{s_c-1-ell}_{2,1}}
//!        + sup (1+tau)^{(s+s_c-1)/2} ||Lambda^{s_c-1} w||_{Bdot^0_{2,1}}`,
//! and `E2` the same for `(u_e, u_i)` with `s_c - 2` and one extra half power.
//! The `ell` suprema are taken over a finite subgrid, so they underestimate the continuum ones.

use serde::{Deserialize, Serialize};

use super::field_norm;
use super::theory::CRITICAL_REGULARITY;
use crate::error::LabError;
use crate::grid::Grid;
use crate::lp_besov::{DyadicPartition, SumIndex};
use crate::model::SpectralState;
use crate::scalar::{lit, to_f64, Scalar};
use crate::solver::{field_hat, Trajectory};

use super::NormKind;

/// `ell` samples; values at the upper endpoint select the homogeneous endpoint term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalGrid {
    pub densities: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl Default for FunctionalGrid {
    fn default() -> Self {
        Self { densities: vec![0.0, 0.5, 1.0, 1.5], velocities: vec![0.0, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyFunctionals {
    pub s: f64,
    pub ell_grid: FunctionalGrid,
    pub times: Vec<f64>,
    pub e0: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    /// `E1 + E2`
    pub total: Vec<f64>,
}

fn inhomogeneous(s: f64) -> NormKind {
    NormKind::Besov { s, r: SumIndex::One, homogeneous: false }
}

fn homogeneous_zero() -> NormKind {
    NormKind::Besov { s: 0.0, r: SumIndex::One, homogeneous: true }
}

/// Sum of field norms of `Lambda^ell` over all of `w` or only the velocities.
fn state_norm<T: Scalar>(
    grid: &Grid<T>,
    p: &DyadicPartition<T>,
    state: &SpectralState<T>,
    e: &[Vec<num_complex::Complex<T>>; 3],
    ell: f64,
    norm: NormKind,
    velocities_only: bool,
) -> Result<f64, LabError> {
    let f = |comps: &[&[num_complex::Complex<T>]]| field_norm(grid, Some(p), comps, lit(ell), norm).map(to_f64);
    let ue: Vec<&[_]> = state.u_e.iter().map(|v| v.as_slice()).collect();
    let ui: Vec<&[_]> = state.u_i.iter().map(|v| v.as_slice()).collect();
    let mut total = f(&ue)? + f(&ui)?;
    if !velocities_only {
        let ev: Vec<&[_]> = e.iter().map(|v| v.as_slice()).collect();
        total += f(&[&state.sigma_e])? + f(&[&state.sigma_i])? + f(&ev)?;
    }
    Ok(total)
}

fn weighted_sup<T: Scalar>(
    grid: &Grid<T>,
    p: &DyadicPartition<T>,
    state: &SpectralState<T>,
    e: &[Vec<num_complex::Complex<T>>; 3],
    t: f64,
    s: f64,
    ells: &[f64],
    top: f64,
    extra: f64,
    velocities_only: bool,
) -> Result<f64, LabError> {
    let eps = 1e-12;
    let mut interior = 0.0f64;
    let mut endpoint = 0.0f64;
    for &ell in ells {
        if ell < top - eps {
            let n = state_norm(grid, p, state, e, ell, inhomogeneous(top - ell), velocities_only)?;
            interior = interior.max((1.0 + t).powf((s + ell) / 2.0 + extra) * n);
        } else {
            let n = state_norm(grid, p, state, e, top, homogeneous_zero(), velocities_only)?;
            endpoint = endpoint.max((1.0 + t).powf((s + top) / 2.0 + extra) * n);
        }
    }
    Ok(interior + endpoint)
}

/// `E0, E1, E2` and `E = E1 + E2` at every stored snapshot.
pub fn energy_functionals<T: Scalar>(
    traj: &Trajectory<T>,
    s: f64,
    ell_grid: &FunctionalGrid,
) -> Result<EnergyFunctionals, LabError> {
    if traj.snapshots.is_empty() {
        return Err(LabError::NoStates);
    }
    if !(s > 0.0 && s <= 1.5) {
        return Err(LabError::Regime(format!("s = {s} outside (0, 3/2]")));
    }
    let grid = &traj.grid;
    let p = DyadicPartition::for_grid(grid);
    let sc = CRITICAL_REGULARITY;
    let mut out = EnergyFunctionals {
        s,
        ell_grid: ell_grid.clone(),
        times: Vec::new(),
        e0: Vec::new(),
        e1: Vec::new(),
        e2: Vec::new(),
        total: Vec::new(),
    };
    let (mut m0, mut m1, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for snap in &traj.snapshots {
        let t = to_f64(snap.time);
        let e = field_hat(grid, &snap.state);
        let n0 = state_norm(grid, &p, &snap.state, &e, 0.0, inhomogeneous(sc), false)?;
        let n1 = weighted_sup(grid, &p, &snap.state, &e, t, s, &ell_grid.densities, sc - 1.0, 0.0, false)?;
        // the endpoint weight of E2 is (s + s_c - 1)/2 = (s + (s_c - 2) + 1)/2
        let n2 = weighted_sup(grid, &p, &snap.state, &e, t, s, &ell_grid.velocities, sc - 2.0, 0.5, true)?;
        m0 = m0.max(n0);
        m1 = m1.max(n1);
        m2 = m2.max(n2);
        out.times.push(t);
        out.e0.push(m0);
        out.e1.push(m1);
        out.e2.push(m2);
        out.total.push(m1 + m2);
    }
    Ok(out)
}

/// `M0 = ||w0||_{B^{s_c}_{2,1}} + ||w0||_{Bdot^{-s}_{2,inf}}` of the first snapshot.
pub fn initial_size<T: Scalar>(traj: &Trajectory<T>, s: f64) -> Result<f64, LabError> {
    let snap = traj.snapshots.first().ok_or(LabError::NoStates)?;
    let grid = &traj.grid;
    let p = DyadicPartition::for_grid(grid);
    let e = field_hat(grid, &snap.state);
    let high = state_norm(grid, &p, &snap.state, &e, 0.0, inhomogeneous(CRITICAL_REGULARITY), false)?;
    let low = state_norm(
        grid,
        &p,
        &snap.state,
        &e,
        0.0,
        NormKind::Besov { s: -s, r: SumIndex::Infinity, homogeneous: true },
        false,
    )?;
    Ok(high + low)
}
