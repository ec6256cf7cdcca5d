//! Initial data on periodic grids.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::fields::random_band_field;
use crate::grid::Grid;
use crate::model::PerturbationState;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Initial-data descriptor.
///
/// Velocities are always gradients of potentials, so the data is irrotational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `sigma_a = m (pi w_a^2)^{-n/2} e^{-|x - c|^2 / w_a^2}` centred in the box, equal masses;
    /// `u_a = grad(potential * sigma_a)`.
    GaussianMass { mass: f64, width_e: f64, width_i: f64, potential: f64 },
    /// The Gaussian data with the mean mode of every component projected out.
    WellPrepared { mass: f64, width_e: f64, width_i: f64, potential: f64 },
    /// Random fields with Fourier support in `k_lo <= |k| <= k_hi`, scaled to peak `amplitude`.
    RandomBand { amplitude: f64, k_lo: f64, k_hi: f64, seed: u64 },
    /// `sigma_e = amplitude cos(k . x)` for one grid mode, all else zero.
    SingleMode { amplitude: f64, mode: [i64; 3] },
}

impl InitialData {
    /// Gaussian data whose electron bump peaks at `amplitude` in dimension `dim`.
    pub fn gaussian_with_peak(dim: usize, amplitude: f64, width_e: f64, width_i: f64, potential: f64) -> Self {
        let mass = amplitude * (std::f64::consts::PI * width_e * width_e).powf(dim as f64 / 2.0);
        InitialData::GaussianMass { mass, width_e, width_i, potential }
    }
}

fn gaussian<T: Scalar>(grid: &Grid<T>, mass: f64, width: f64) -> Vec<T> {
    let dim = grid.dim();
    let center = to_f64(grid.length()) / 2.0;
    let norm = mass / (std::f64::consts::PI * width * width).powf(dim as f64 / 2.0);
    (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            let r2: f64 = (0..dim).map(|a| (to_f64(x[a]) - center).powi(2)).sum();
            lit(norm * (-r2 / (width * width)).exp())
        })
        .collect()
}

fn gradient<T: Scalar>(grid: &Grid<T>, potential: &[T]) -> [Vec<T>; 3] {
    let hat = grid.forward_real(potential);
    grid.gradient_hat(&hat).map(|g| grid.inverse_real(&g))
}

fn scale_to_peak<T: Scalar>(f: Vec<T>, peak: f64) -> Vec<T> {
    let m = f.iter().fold(0.0f64, |m, &x| m.max(to_f64(x).abs()));
    if m == 0.0 {
        return f;
    }
    let s: T = lit(peak / m);
    f.into_iter().map(|x| x * s).collect()
}

fn remove_mean<T: Scalar>(grid: &Grid<T>, f: &mut [T]) {
    let mean = grid.integral(f) / grid.volume();
    f.iter_mut().for_each(|x| *x = *x - mean);
}

/// Samples the descriptor on `grid` and checks density positivity.
pub fn make_initial_data<T: Scalar>(grid: &Grid<T>, data: &InitialData) -> Result<PerturbationState<T>, SolverError> {
    let state = match *data {
        InitialData::GaussianMass { mass, width_e, width_i, potential }
        | InitialData::WellPrepared { mass, width_e, width_i, potential } => {
            if !(width_e > 0.0 && width_i > 0.0) {
                return Err(SolverError::Amplitude("Gaussian widths must be positive".into()));
            }
            let mut sigma_e = gaussian(grid, mass, width_e);
            let mut sigma_i = gaussian(grid, mass, width_i);
            let pot: T = lit(potential);
            let mut u_e = gradient(grid, &sigma_e.iter().map(|&s| s * pot).collect::<Vec<_>>());
            let mut u_i = gradient(grid, &sigma_i.iter().map(|&s| s * pot).collect::<Vec<_>>());
            if matches!(data, InitialData::WellPrepared { .. }) {
                remove_mean(grid, &mut sigma_e);
                remove_mean(grid, &mut sigma_i);
                for c in 0..3 {
                    remove_mean(grid, &mut u_e[c]);
                    remove_mean(grid, &mut u_i[c]);
                }
            }
            PerturbationState { sigma_e, u_e, sigma_i, u_i }
        }
        InitialData::RandomBand { amplitude, k_lo, k_hi, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma_e = scale_to_peak(random_band_field(grid, k_lo, k_hi, &mut rng), amplitude);
            let sigma_i = scale_to_peak(random_band_field(grid, k_lo, k_hi, &mut rng), amplitude);
            let pe = random_band_field(grid, k_lo, k_hi, &mut rng);
            let pi = random_band_field(grid, k_lo, k_hi, &mut rng);
            let mut u_e = gradient(grid, &pe);
            let mut u_i = gradient(grid, &pi);
            let peak = u_e.iter().chain(u_i.iter()).flatten().fold(0.0f64, |m, &x| m.max(to_f64(x).abs()));
            if peak > 0.0 {
                let s: T = lit(amplitude / peak);
                u_e.iter_mut().chain(u_i.iter_mut()).flatten().for_each(|x| *x = *x * s);
            }
            PerturbationState { sigma_e, u_e, sigma_i, u_i }
        }
        InitialData::SingleMode { amplitude, mode } => {
            let idx = grid
                .index_of(mode)
                .ok_or_else(|| SolverError::Precondition(format!("mode {mode:?} not on the grid")))?;
            let mut hat = vec![Complex::new(T::zero(), T::zero()); grid.len()];
            hat[idx] = Complex::new(lit::<T>(amplitude) * from_usize::<T>(grid.len()), T::zero());
            let conj = grid.index_of([-mode[0], -mode[1], -mode[2]]).unwrap_or(idx);
            hat[conj] = hat[conj] + Complex::new(lit::<T>(amplitude) * from_usize::<T>(grid.len()), T::zero());
            // real part of the inverse of two conjugate modes gives 2 cos; halve it
            let sigma_e: Vec<T> = grid.inverse_real(&hat).into_iter().map(|x| x * lit(0.5)).collect();
            let mut s = PerturbationState::zeros(grid.len());
            s.sigma_e = sigma_e;
            s
        }
    };
    state.check_positivity().map_err(|e| SolverError::Amplitude(e.to_string()))?;
    Ok(state)
}
