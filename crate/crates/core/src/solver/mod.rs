//! Pseudospectral RK4 integration of the nonlinear system and its two linear references.
//!
//! The state is advanced in Fourier space. `E` is never evolved: every
//! stage re-solves it from the charge density. In `LinearDifference` mode the
//! electron slots hold the difference variables `(sigma~, u~)` and the ion
//! slots stay zero, so the same field solve yields `div E = sigma~`.

pub mod initial;
pub mod io;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::grid::Grid;
use crate::model::{field_from_charge_hat, nonlinear_hat, PressureLaw, SpectralState};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
pub use initial::{make_initial_data, InitialData};

type C<T> = Complex<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Nonlinear,
    LinearFull,
    LinearDifference,
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T: Scalar> {
    pub grid: Grid<T>,
    pub law: PressureLaw<T>,
    pub dt: T,
    pub t_final: T,
    /// Steps between snapshots; snapshots are also taken at `t = 0` and at the end.
    pub snapshot_every: usize,
    pub mode: Mode,
    pub initial: InitialData,
    /// Keep full spectral states at every snapshot (diagnostics are always kept).
    pub keep_states: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(grid: Grid<T>, mode: Mode, initial: InitialData, dt: T, t_final: T) -> Self {
        Self {
            grid,
            law: PressureLaw::default(),
            dt,
            t_final,
            snapshot_every: 1,
            mode,
            initial,
            keep_states: true,
        }
    }

    /// `0.5 / (k_max (1 + max|u|) + 1)` with `k_max` the largest dealiased wavenumber.
    pub fn cfl_bound(&self, max_speed: T) -> T {
        let kmax = self.grid.max_resolved_wavenumber();
        lit::<T>(0.5) / (kmax * (T::one() + max_speed) + T::one())
    }

    pub fn check_cfl(&self, state: &SpectralState<T>) -> Result<(), SolverError> {
        let speed = state.to_physical(&self.grid).max_speed();
        let bound = self.cfl_bound(speed);
        if !(self.dt > T::zero()) || self.dt > bound {
            return Err(SolverError::Cfl { dt: to_f64(self.dt), bound: to_f64(bound) });
        }
        Ok(())
    }

    /// Number of steps and the (possibly shortened) step that lands exactly on `t_final`.
    pub fn schedule(&self) -> (usize, T) {
        if self.t_final <= T::zero() {
            return (0, self.dt);
        }
        let ratio = self.t_final / self.dt;
        let nearest = ratio.round();
        let n = if (ratio - nearest).abs() <= lit::<T>(1e-9) * ratio { nearest } else { ratio.ceil() };
        let n = n.to_usize().unwrap_or(1).max(1);
        (n, self.t_final / from_usize(n))
    }
}

/// Per-snapshot scalar diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics<T> {
    pub time: T,
    pub mass_e: T,
    pub mass_i: T,
    /// `||sigma_e|| + ||sigma_i|| + ||E||`
    pub norm_densities: T,
    /// `||u_e|| + ||u_i|| + ||sigma_e - sigma_i||`
    pub norm_velocities: T,
    pub norm_difference: T,
    pub norm_field: T,
    /// `||div E - (sigma_e - sigma_i - mean)||`
    pub constraint_residual: T,
    pub curl_field: T,
    /// `1/2 (sum of squared component norms + ||E||^2)`; the field enters with weight 2 in difference mode.
    pub energy: T,
}

#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub time: T,
    pub state: SpectralState<T>,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T: Scalar> {
    pub grid: Grid<T>,
    pub mode: Mode,
    pub snapshots: Vec<Snapshot<T>>,
    pub diagnostics: Vec<Diagnostics<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.diagnostics.iter().map(|d| d.time).collect()
    }
}

/// Fourier coefficients of `E` slaved to a state.
pub fn field_hat<T: Scalar>(grid: &Grid<T>, state: &SpectralState<T>) -> [Vec<C<T>>; 3] {
    let rho: Vec<C<T>> = state.sigma_e.par_iter().zip(state.sigma_i.par_iter()).map(|(&a, &b)| a - b).collect();
    field_from_charge_hat(grid, &rho).0
}

pub fn diagnostics<T: Scalar>(grid: &Grid<T>, mode: Mode, time: T, state: &SpectralState<T>) -> Diagnostics<T> {
    let e = field_hat(grid, state);
    let norm = |v: &[C<T>]| grid.l2_norm_hat(v);
    let vnorm = |v: &[Vec<C<T>>; 3]| (v.iter().map(|c| grid.l2_norm_sq_hat(c)).sum::<T>()).sqrt();
    let rho: Vec<C<T>> = state.sigma_e.par_iter().zip(state.sigma_i.par_iter()).map(|(&a, &b)| a - b).collect();
    let mut rho_free = rho.clone();
    rho_free[0] = C::new(T::zero(), T::zero());
    let div = grid.divergence_hat(&e);
    let resid: Vec<C<T>> = div.par_iter().zip(rho_free.par_iter()).map(|(&a, &b)| a - b).collect();
    let curl = grid.curl_hat(&e);
    let (se, si, ue, ui, ef) = (norm(&state.sigma_e), norm(&state.sigma_i), vnorm(&state.u_e), vnorm(&state.u_i), vnorm(&e));
    let diff = norm(&rho);
    let field_weight = if mode == Mode::LinearDifference { lit::<T>(2.0) } else { T::one() };
    let half: T = lit(0.5);
    Diagnostics {
        time,
        mass_e: grid.integral_hat(&state.sigma_e),
        mass_i: grid.integral_hat(&state.sigma_i),
        norm_densities: se + si + ef,
        norm_velocities: ue + ui + diff,
        norm_difference: diff,
        norm_field: ef,
        constraint_residual: norm(&resid),
        curl_field: vnorm(&curl),
        energy: half * (se * se + si * si + ue * ue + ui * ui + field_weight * ef * ef),
    }
}

fn divergence_error<T: Scalar>(time: T, stage: usize, reason: impl Into<String>) -> SolverError {
    SolverError::Divergence { time: to_f64(time), stage, reason: reason.into() }
}

/// Time derivative of the state.
pub fn rhs<T: Scalar>(
    grid: &Grid<T>,
    law: &PressureLaw<T>,
    mode: Mode,
    state: &SpectralState<T>,
) -> Result<SpectralState<T>, crate::error::ModelError> {
    let wave = grid.wavevectors();
    let kmag = grid.kmags();
    let field_coupling = match mode {
        Mode::LinearDifference => lit::<T>(2.0),
        _ => T::one(),
    };
    let ions = mode != Mode::LinearDifference;
    let mut out = SpectralState::zeros(grid.len());
    // -i a
    let mi = |a: C<T>| C::new(a.im, -a.re);
    for i in 0..grid.len() {
        let k = wave[i];
        let k2 = kmag[i] * kmag[i];
        // E = grad Phi with Delta Phi = rho: E = -i k rho / |k|^2
        let e: [C<T>; 3] = if k2 > T::zero() {
            let phi = (state.sigma_e[i] - state.sigma_i[i]) * (field_coupling / k2);
            std::array::from_fn(|c| mi(phi * k[c]))
        } else {
            [C::new(T::zero(), T::zero()); 3]
        };
        let ue = [state.u_e[0][i], state.u_e[1][i], state.u_e[2][i]];
        out.sigma_e[i] = mi(ue[0] * k[0] + ue[1] * k[1] + ue[2] * k[2]);
        for c in 0..3 {
            out.u_e[c][i] = mi(state.sigma_e[i] * k[c]) - ue[c] + e[c];
        }
        if ions {
            let ui = [state.u_i[0][i], state.u_i[1][i], state.u_i[2][i]];
            out.sigma_i[i] = mi(ui[0] * k[0] + ui[1] * k[1] + ui[2] * k[2]);
            for c in 0..3 {
                out.u_i[c][i] = mi(state.sigma_i[i] * k[c]) - ui[c] - e[c];
            }
        }
    }
    if mode == Mode::Nonlinear {
        let nl = nonlinear_hat(grid, law, state, true)?;
        let add = |dst: &mut Vec<C<T>>, src: &Vec<C<T>>| {
            dst.par_iter_mut().zip(src.par_iter()).for_each(|(d, &s)| *d = *d + s);
        };
        add(&mut out.sigma_e, &nl.f1e);
        add(&mut out.sigma_i, &nl.f1i);
        for c in 0..3 {
            add(&mut out.u_e[c], &nl.f2e[c]);
            add(&mut out.u_i[c], &nl.f2i[c]);
        }
    }
    Ok(out)
}

/// One classical RK4 step from time `t`.
pub fn step<T: Scalar>(
    grid: &Grid<T>,
    law: &PressureLaw<T>,
    mode: Mode,
    state: &SpectralState<T>,
    t: T,
    dt: T,
) -> Result<SpectralState<T>, SolverError> {
    if !state.is_finite() {
        return Err(divergence_error(t, 1, "non-finite stage input"));
    }
    let half = dt * lit(0.5);
    let eval = |s: &SpectralState<T>, stage: usize, ts: T| {
        rhs(grid, law, mode, s).map_err(|e| divergence_error(ts, stage, e.to_string()))
    };
    let mut y = SpectralState::zeros(state.len());
    let k1 = eval(state, 1, t)?;
    if !y.assign_axpy(state, half, &k1) {
        return Err(divergence_error(t, 1, "non-finite stage derivative"));
    }
    let k2 = eval(&y, 2, t + half)?;
    if !y.assign_axpy(state, half, &k2) {
        return Err(divergence_error(t + half, 2, "non-finite stage derivative"));
    }
    let k3 = eval(&y, 3, t + half)?;
    if !y.assign_axpy(state, dt, &k3) {
        return Err(divergence_error(t + half, 3, "non-finite stage derivative"));
    }
    let k4 = eval(&y, 4, t + dt)?;
    let sixth = dt / lit(6.0);
    let third = sixth * lit(2.0);
    let mut finite = true;
    for (((((dst, x), a), b), c), d) in y
        .components_mut()
        .into_iter()
        .zip(state.components())
        .zip(k1.components())
        .zip(k2.components())
        .zip(k3.components())
        .zip(k4.components())
    {
        for i in 0..dst.len() {
            let o = x[i] + (a[i] + d[i]) * sixth + (b[i] + c[i]) * third;
            finite &= o.re.is_finite() && o.im.is_finite();
            dst[i] = o;
        }
    }
    if !finite {
        return Err(divergence_error(t + dt, 4, "non-finite stage derivative"));
    }
    Ok(y)
}

/// Integrates from the configured initial data.
pub fn run<T: Scalar>(config: &SolverConfig<T>) -> Result<Trajectory<T>, SolverError> {
    if config.mode == Mode::LinearDifference {
        return run_difference_linear(config);
    }
    let phys = make_initial_data(&config.grid, &config.initial)?;
    run_from(config, phys.to_spectral(&config.grid)?)
}

/// Integrates from an explicit spectral state.
pub fn run_from<T: Scalar>(config: &SolverConfig<T>, mut state: SpectralState<T>) -> Result<Trajectory<T>, SolverError> {
    let grid = &config.grid;
    if state.len() != grid.len() {
        return Err(SolverError::Precondition(format!("state has {} modes, grid {}", state.len(), grid.len())));
    }
    config.check_cfl(&state)?;
    let (n_steps, dt) = config.schedule();
    let every = config.snapshot_every.max(1);
    let mut traj = Trajectory { grid: grid.clone(), mode: config.mode, snapshots: Vec::new(), diagnostics: Vec::new() };
    let record = |t: T, s: &SpectralState<T>, traj: &mut Trajectory<T>| {
        traj.diagnostics.push(diagnostics(grid, config.mode, t, s));
        if config.keep_states {
            traj.snapshots.push(Snapshot { time: t, state: s.clone() });
        }
    };
    record(T::zero(), &state, &mut traj);
    for k in 0..n_steps {
        let t = dt * from_usize(k);
        state = step(grid, &config.law, config.mode, &state, t, dt)?;
        if (k + 1) % every == 0 || k + 1 == n_steps {
            record(dt * from_usize(k + 1), &state, &mut traj);
        }
    }
    log::debug!("run finished: {} steps, {} snapshots", n_steps, traj.diagnostics.len());
    Ok(traj)
}

/// Integrates the difference subsystem; requires `sigma~` mean-free and empty ion slots.
pub fn run_difference_linear<T: Scalar>(config: &SolverConfig<T>) -> Result<Trajectory<T>, SolverError> {
    let phys = make_initial_data(&config.grid, &config.initial)?;
    let mut state = phys.to_spectral(&config.grid)?;
    // the difference variables live in the electron slots
    let diff: Vec<C<T>> = state.sigma_e.iter().zip(&state.sigma_i).map(|(&a, &b)| a - b).collect();
    let du: [Vec<C<T>>; 3] =
        std::array::from_fn(|c| state.u_e[c].iter().zip(&state.u_i[c]).map(|(&a, &b)| a - b).collect());
    state = SpectralState { sigma_e: diff, u_e: du, ..SpectralState::zeros(config.grid.len()) };
    run_difference_linear_from(config, state)
}

pub fn run_difference_linear_from<T: Scalar>(
    config: &SolverConfig<T>,
    state: SpectralState<T>,
) -> Result<Trajectory<T>, SolverError> {
    if config.mode != Mode::LinearDifference {
        return Err(SolverError::Precondition("configuration mode is not linear_difference".into()));
    }
    let grid = &config.grid;
    let scale = grid.l2_norm_hat(&state.sigma_e).max(T::min_positive_value());
    let mean = grid.mean_hat(&state.sigma_e).abs() * grid.volume().sqrt();
    if mean > lit::<T>(1e-12) * scale && mean > T::zero() {
        return Err(SolverError::Precondition(format!(
            "div E = sigma~ is not solvable: sigma~ has mean {:.3e}",
            to_f64(grid.mean_hat(&state.sigma_e))
        )));
    }
    let ion = grid.l2_norm_hat(&state.sigma_i)
        + state.u_i.iter().map(|c| grid.l2_norm_hat(c)).sum::<T>();
    if ion > T::zero() {
        return Err(SolverError::Precondition("ion slots must be empty in linear_difference mode".into()));
    }
    run_from(config, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::{propagate, SpectralVector};

    fn grid3(n: usize, l: f64) -> Grid<f64> {
        Grid::new(3, n, l).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = grid3(8, 10.0);
        let z = SpectralState::zeros(g.len());
        for mode in [Mode::Nonlinear, Mode::LinearFull, Mode::LinearDifference] {
            let out = step(&g, &PressureLaw::default(), mode, &z, 0.0, 0.1).unwrap();
            assert_eq!(out, z);
        }
    }

    #[test]
    fn cfl_is_enforced() {
        let g = grid3(16, 10.0);
        let cfg = SolverConfig::new(g, Mode::Nonlinear, InitialData::RandomBand { amplitude: 1e-3, k_lo: 0.5, k_hi: 2.0, seed: 1 }, 1.0, 1.0);
        assert!(matches!(run(&cfg), Err(SolverError::Cfl { .. })));
    }

    #[test]
    fn fourth_order_local_error() {
        let g = grid3(16, 16.0);
        let init = InitialData::RandomBand { amplitude: 1e-2, k_lo: 0.3, k_hi: 1.2, seed: 11 };
        let s0 = make_initial_data(&g, &init).unwrap().to_spectral(&g).unwrap();
        let law = PressureLaw::default();
        let err = |dt: f64| {
            let coarse = step(&g, &law, Mode::Nonlinear, &s0, 0.0, dt).unwrap();
            let mut fine = s0.clone();
            let sub = 64;
            for k in 0..sub {
                fine = step(&g, &law, Mode::Nonlinear, &fine, k as f64 * dt / sub as f64, dt / sub as f64).unwrap();
            }
            let mut d = coarse.clone();
            d.axpy(-1.0, &fine);
            d.components().iter().map(|c| g.l2_norm_sq_hat(c)).sum::<f64>().sqrt()
        };
        let ratio = err(0.2) / err(0.1);
        assert!((24.0..=40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mass_is_conserved_per_step() {
        let g = grid3(16, 16.0);
        let init = InitialData::GaussianMass { mass: 0.05, width_e: 1.5, width_i: 2.0, potential: 0.3 };
        let s0 = make_initial_data(&g, &init).unwrap().to_spectral(&g).unwrap();
        let s1 = step(&g, &PressureLaw::default(), Mode::Nonlinear, &s0, 0.0, 0.05).unwrap();
        let (m0, m1) = (g.integral_hat(&s0.sigma_e), g.integral_hat(&s1.sigma_e));
        assert!((m1 - m0).abs() <= 1e-14 * m0.abs());
    }

    #[test]
    fn linear_mode_matches_matrix_exponential() {
        let g = grid3(8, 2.0 * std::f64::consts::PI * 2.0);
        let init = InitialData::RandomBand { amplitude: 1e-2, k_lo: 0.3, k_hi: 1.5, seed: 5 };
        let mut cfg = SolverConfig::new(g.clone(), Mode::LinearFull, init, 0.0025, 2.0);
        cfg.snapshot_every = 400;
        let traj = run(&cfg).unwrap();
        let first = &traj.snapshots[0];
        let last = traj.snapshots.last().unwrap();
        for idx in [1usize, 9, 73, 100] {
            let k = g.wavevector(idx);
            let pick = |s: &SpectralState<f64>| {
                let e = field_hat(&g, s);
                let mut w = [Complex::new(0.0, 0.0); 11];
                w[0] = s.sigma_e[idx];
                w[4] = s.sigma_i[idx];
                for c in 0..3 {
                    w[1 + c] = s.u_e[c][idx];
                    w[5 + c] = s.u_i[c][idx];
                    w[8 + c] = e[c][idx];
                }
                SpectralVector::new(k, w)
            };
            let want = propagate(&pick(&first.state), last.time).unwrap();
            let got = pick(&last.state);
            let d: f64 = want.w.iter().zip(&got.w).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(d <= 1e-8 * want.norm(), "mode {idx}: {d:e} vs {:e}", want.norm());
        }
    }

    #[test]
    fn difference_energy_is_nonincreasing() {
        let g = grid3(8, 8.0);
        let init = InitialData::RandomBand { amplitude: 1e-2, k_lo: 0.5, k_hi: 2.0, seed: 3 };
        let cfg = SolverConfig::new(g, Mode::LinearDifference, init, 0.05, 3.0);
        let traj = run_difference_linear(&cfg).unwrap();
        for w in traj.diagnostics.windows(2) {
            assert!(w[1].energy <= w[0].energy * (1.0 + 1e-12));
        }
    }

    #[test]
    fn difference_mode_rejects_charged_data() {
        let g = grid3(8, 8.0);
        let init = InitialData::GaussianMass { mass: 0.1, width_e: 1.0, width_i: 1.5, potential: 0.0 };
        let cfg = SolverConfig::new(g.clone(), Mode::LinearDifference, init, 0.05, 1.0);
        let mut s = make_initial_data(&g, &cfg.initial).unwrap().to_spectral(&g).unwrap();
        s.sigma_i = vec![Complex::new(0.0, 0.0); g.len()];
        s.u_i = std::array::from_fn(|_| vec![Complex::new(0.0, 0.0); g.len()]);
        assert!(matches!(run_difference_linear_from(&cfg, s), Err(SolverError::Precondition(_))));
        let zero = SpectralState::zeros(g.len());
        let traj = run_difference_linear_from(&cfg, zero).unwrap();
        assert!(traj.diagnostics.iter().all(|d| d.energy == 0.0));
    }

    #[test]
    fn divergence_reports_stage() {
        let g = grid3(8, 8.0);
        let mut s = SpectralState::zeros(g.len());
        s.sigma_e[3] = Complex::new(f64::NAN, 0.0);
        match step(&g, &PressureLaw::default(), Mode::LinearFull, &s, 1.5, 0.1) {
            Err(SolverError::Divergence { stage, time, .. }) => {
                assert_eq!(stage, 1);
                assert_eq!(time, 1.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
