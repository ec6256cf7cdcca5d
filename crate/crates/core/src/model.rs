//! The two-fluid perturbation system around the equilibrium `(1, 0, 1, 0, 0)`.
//!
//! Unknowns are `sigma_a = n_a - 1` and `u_a` for electrons (`a = e`) and
//! ions (`a = i`); the field `E = grad Phi` is slaved to the densities through
//! `div E = sigma_e - sigma_i`. Masses, relaxation times and the Debye length
//! are normalized to one.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::ModelError;
use crate::grid::Grid;
use crate::scalar::{lit, to_f64, Scalar};

type C<T> = Complex<T>;

/// Polytropic pressure `p(n) = n^gamma / gamma`, normalized so `p'(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw<T> {
    gamma: T,
}

impl<T: Scalar> Default for PressureLaw<T> {
    fn default() -> Self {
        Self { gamma: lit(5.0 / 3.0) }
    }
}

impl<T: Scalar> PressureLaw<T> {
    pub fn new(gamma: T) -> Result<Self, ModelError> {
        if !(gamma > T::one()) || !gamma.is_finite() {
            return Err(ModelError::InvalidGamma(to_f64(gamma)));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn pressure(&self, density: T) -> T {
        density.powf(self.gamma) / self.gamma
    }

    /// `p'(n) = n^(gamma - 1)`, positive for every `n > 0`.
    pub fn sound_speed_sq(&self, density: T) -> T {
        density.powf(self.gamma - T::one())
    }

    /// `h(sigma) = p'(1 + sigma) / (1 + sigma) - 1` without the domain check.
    #[inline]
    fn enthalpy_unchecked(&self, sigma: T) -> T {
        (T::one() + sigma).powf(self.gamma - lit(2.0)) - T::one()
    }
}

/// `h(sigma) = p'(n)/n - 1 = (1 + sigma)^(gamma - 2) - 1`.
pub fn enthalpy_coefficient<T: Scalar>(law: &PressureLaw<T>, sigma: T) -> Result<T, ModelError> {
    if !(T::one() + sigma > T::zero()) {
        return Err(ModelError::NonPhysicalDensity { index: 0, value: to_f64(T::one() + sigma) });
    }
    Ok(law.enthalpy_unchecked(sigma))
}

/// Real-space perturbation fields on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState<T> {
    pub sigma_e: Vec<T>,
    pub u_e: [Vec<T>; 3],
    pub sigma_i: Vec<T>,
    pub u_i: [Vec<T>; 3],
}

impl<T: Scalar> PerturbationState<T> {
    pub fn zeros(len: usize) -> Self {
        let z = || vec![T::zero(); len];
        Self { sigma_e: z(), u_e: [z(), z(), z()], sigma_i: z(), u_i: [z(), z(), z()] }
    }

    pub fn len(&self) -> usize {
        self.sigma_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_e.is_empty()
    }

    fn fields(&self) -> [&Vec<T>; 8] {
        [
            &self.sigma_e,
            &self.u_e[0],
            &self.u_e[1],
            &self.u_e[2],
            &self.sigma_i,
            &self.u_i[0],
            &self.u_i[1],
            &self.u_i[2],
        ]
    }

    fn check_shape(&self, grid: &Grid<T>) -> Result<(), ModelError> {
        for f in self.fields() {
            if f.len() != grid.len() {
                return Err(ModelError::ShapeMismatch { expected: grid.len(), got: f.len() });
            }
        }
        Ok(())
    }

    /// Checks `1 + sigma_a > 0` and finiteness everywhere.
    pub fn check_positivity(&self) -> Result<(), ModelError> {
        for sigma in [&self.sigma_e, &self.sigma_i] {
            check_density(sigma)?;
        }
        Ok(())
    }

    pub fn max_speed(&self) -> T {
        let speed = |u: &[Vec<T>; 3]| {
            (0..u[0].len())
                .into_par_iter()
                .map(|i| (u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i]).sqrt())
                .reduce(T::zero, T::max)
        };
        speed(&self.u_e).max(speed(&self.u_i))
    }

    pub fn to_spectral(&self, grid: &Grid<T>) -> Result<SpectralState<T>, ModelError> {
        self.check_shape(grid)?;
        Ok(SpectralState {
            sigma_e: grid.forward_real(&self.sigma_e),
            u_e: std::array::from_fn(|c| grid.forward_real(&self.u_e[c])),
            sigma_i: grid.forward_real(&self.sigma_i),
            u_i: std::array::from_fn(|c| grid.forward_real(&self.u_i[c])),
        })
    }
}

fn check_density<T: Scalar>(sigma: &[T]) -> Result<(), ModelError> {
    let bad = sigma
        .par_iter()
        .enumerate()
        .find_any(|(_, &s)| !(T::one() + s > T::zero()) || !s.is_finite());
    match bad {
        Some((index, &s)) => Err(ModelError::NonPhysicalDensity { index, value: to_f64(T::one() + s) }),
        None => Ok(()),
    }
}

/// Fourier coefficients of the eight evolved components.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState<T> {
    pub sigma_e: Vec<C<T>>,
    pub u_e: [Vec<C<T>>; 3],
    pub sigma_i: Vec<C<T>>,
    pub u_i: [Vec<C<T>>; 3],
}

impl<T: Scalar> SpectralState<T> {
    pub fn zeros(len: usize) -> Self {
        let z = || vec![C::new(T::zero(), T::zero()); len];
        Self { sigma_e: z(), u_e: [z(), z(), z()], sigma_i: z(), u_i: [z(), z(), z()] }
    }

    pub fn len(&self) -> usize {
        self.sigma_e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_e.is_empty()
    }

    /// Components in the order `(sigma_e, u_e, sigma_i, u_i)`.
    pub fn components(&self) -> [&Vec<C<T>>; 8] {
        [
            &self.sigma_e,
            &self.u_e[0],
            &self.u_e[1],
            &self.u_e[2],
            &self.sigma_i,
            &self.u_i[0],
            &self.u_i[1],
            &self.u_i[2],
        ]
    }

    pub fn components_mut(&mut self) -> [&mut Vec<C<T>>; 8] {
        let [ue0, ue1, ue2] = &mut self.u_e;
        let [ui0, ui1, ui2] = &mut self.u_i;
        [&mut self.sigma_e, ue0, ue1, ue2, &mut self.sigma_i, ui0, ui1, ui2]
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        for (dst, src) in self.components_mut().into_iter().zip(other.components()) {
            dst.par_iter_mut().zip(src.par_iter()).for_each(|(d, &s)| *d = *d + s * a);
        }
    }

    /// `self = base + a * k`; returns whether every written value is finite.
    pub fn assign_axpy(&mut self, base: &Self, a: T, k: &Self) -> bool {
        let mut finite = true;
        for ((dst, b), kk) in self.components_mut().into_iter().zip(base.components()).zip(k.components()) {
            for ((d, &x), &y) in dst.iter_mut().zip(b.iter()).zip(kk.iter()) {
                *d = x + y * a;
                finite &= d.re.is_finite() && d.im.is_finite();
            }
        }
        finite
    }

    pub fn to_physical(&self, grid: &Grid<T>) -> PerturbationState<T> {
        PerturbationState {
            sigma_e: grid.inverse_real(&self.sigma_e),
            u_e: std::array::from_fn(|c| grid.inverse_real(&self.u_e[c])),
            sigma_i: grid.inverse_real(&self.sigma_i),
            u_i: std::array::from_fn(|c| grid.inverse_real(&self.u_i[c])),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|f| f.par_iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

/// Electrostatic field slaved to the charge density.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldE<T> {
    pub e: [Vec<T>; 3],
    pub phi: Vec<T>,
    /// Mean of `sigma_e - sigma_i` removed to make the Poisson problem solvable.
    pub projected_mean: T,
}

/// Spectral solution of `Delta Phi = rho`, `E = grad Phi` in the zero-mean gauge.
///
/// Returns `(E_hat, Phi_hat)`; the zero mode of both is set to zero.
pub fn field_from_charge_hat<T: Scalar>(grid: &Grid<T>, rho_hat: &[C<T>]) -> ([Vec<C<T>>; 3], Vec<C<T>>) {
    let zero = C::new(T::zero(), T::zero());
    let kmag = grid.kmags();
    let phi: Vec<C<T>> = rho_hat
        .par_iter()
        .zip(kmag.par_iter())
        .map(|(&r, &k)| if k > T::zero() { -r / (k * k) } else { zero })
        .collect();
    let e = grid.gradient_hat(&phi);
    (e, phi)
}

/// Solves the field constraint `div E = sigma_e - sigma_i`, `E = grad Phi`.
///
/// A nonzero mean of the charge is projected out; the removed value is
/// reported in [`FieldE::projected_mean`] and logged when it is not at
/// round-off level.
pub fn poisson_field<T: Scalar>(
    grid: &Grid<T>,
    sigma_e: &[T],
    sigma_i: &[T],
) -> Result<FieldE<T>, ModelError> {
    for f in [sigma_e, sigma_i] {
        if f.len() != grid.len() {
            return Err(ModelError::ShapeMismatch { expected: grid.len(), got: f.len() });
        }
    }
    let rho: Vec<T> = sigma_e.par_iter().zip(sigma_i.par_iter()).map(|(&a, &b)| a - b).collect();
    let rho_hat = grid.forward_real(&rho);
    let mean = grid.mean_hat(&rho_hat);
    let scale = rho.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if mean.abs() > lit::<T>(1e-12) * scale.max(T::min_positive_value()) {
        log::warn!("charge density has nonzero mean {mean:e}; projected out before solving for E");
    }
    let (e_hat, phi_hat) = field_from_charge_hat(grid, &rho_hat);
    Ok(FieldE {
        e: std::array::from_fn(|c| grid.inverse_real(&e_hat[c])),
        phi: grid.inverse_real(&phi_hat),
        projected_mean: mean,
    })
}

/// Source terms of the nonlinear system, in real space.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity<T> {
    pub f1e: Vec<T>,
    pub f2e: [Vec<T>; 3],
    pub f1i: Vec<T>,
    pub f2i: [Vec<T>; 3],
    pub f3: [Vec<T>; 3],
}

/// Source terms in Fourier space.
#[derive(Debug, Clone)]
pub struct NonlinearityHat<T> {
    pub f1e: Vec<C<T>>,
    pub f2e: [Vec<C<T>>; 3],
    pub f1i: Vec<C<T>>,
    pub f2i: [Vec<C<T>>; 3],
    pub f3: [Vec<C<T>>; 3],
}

struct SpeciesSources<T> {
    f1: Vec<C<T>>,
    f2: [Vec<C<T>>; 3],
    flux: [Vec<C<T>>; 3],
}

fn species_sources<T: Scalar>(
    grid: &Grid<T>,
    law: &PressureLaw<T>,
    sigma_hat: &[C<T>],
    u_hat: &[Vec<C<T>>; 3],
    dealias: bool,
) -> Result<SpeciesSources<T>, ModelError> {
    let sigma = grid.inverse_real(sigma_hat);
    check_density(&sigma)?;
    let u: [Vec<T>; 3] = std::array::from_fn(|c| grid.inverse_real(&u_hat[c]));
    let grad_sigma: [Vec<T>; 3] = grid.gradient_hat(sigma_hat).map(|g| grid.inverse_real(&g));
    // grad_u[c][j] = d_j u_c
    let grad_u: [[Vec<T>; 3]; 3] =
        std::array::from_fn(|c| grid.gradient_hat(&u_hat[c]).map(|g| grid.inverse_real(&g)));

    let finish = |mut hat: Vec<C<T>>| {
        if dealias {
            grid.dealias(&mut hat);
        }
        hat
    };

    let flux: [Vec<C<T>>; 3] = std::array::from_fn(|c| {
        let prod: Vec<T> = sigma.par_iter().zip(u[c].par_iter()).map(|(&s, &v)| s * v).collect();
        finish(grid.forward_real(&prod))
    });
    let f1 = grid.divergence_hat(&flux).into_par_iter().map(|d| -d).collect();

    let f2: [Vec<C<T>>; 3] = std::array::from_fn(|c| {
        let vals: Vec<T> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let adv = u[0][i] * grad_u[c][0][i] + u[1][i] * grad_u[c][1][i] + u[2][i] * grad_u[c][2][i];
                -adv - law.enthalpy_unchecked(sigma[i]) * grad_sigma[c][i]
            })
            .collect();
        finish(grid.forward_real(&vals))
    });
    Ok(SpeciesSources { f1, f2, flux })
}

/// Pseudospectral evaluation of the nonlinear sources from Fourier data.
///
/// With `dealias` set, every product is truncated to the 2/3 band before it
/// is used. `f1` is formed in divergence form `-div(sigma u)`, so its zero
/// mode vanishes identically.
pub fn nonlinear_hat<T: Scalar>(
    grid: &Grid<T>,
    law: &PressureLaw<T>,
    state: &SpectralState<T>,
    dealias: bool,
) -> Result<NonlinearityHat<T>, ModelError> {
    let e = species_sources(grid, law, &state.sigma_e, &state.u_e, dealias)?;
    let i = species_sources(grid, law, &state.sigma_i, &state.u_i, dealias)?;
    let zero = C::new(T::zero(), T::zero());
    let wave = grid.wavevectors();
    let kmag = grid.kmags();
    // f3 = -grad Delta^{-1} div g  ->  -k (k . g_hat) / |k|^2
    let proj: Vec<C<T>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let k = wave[idx];
            let km = kmag[idx];
            if km > T::zero() {
                let g = |c: usize| e.flux[c][idx] - i.flux[c][idx];
                (g(0) * k[0] + g(1) * k[1] + g(2) * k[2]) / (km * km)
            } else {
                zero
            }
        })
        .collect();
    let f3 = std::array::from_fn(|c| {
        proj.par_iter().zip(wave.par_iter()).map(|(&p, k)| -p * k[c]).collect()
    });
    Ok(NonlinearityHat { f1e: e.f1, f2e: e.f2, f1i: i.f1, f2i: i.f2, f3 })
}

/// Evaluates `f1a = -div(sigma_a u_a)`, `f2a = -u_a . grad u_a - h(sigma_a) grad sigma_a`
/// and `f3 = -grad Delta^{-1} div(sigma_e u_e - sigma_i u_i)` with 2/3 dealiasing.
pub fn nonlinear_terms<T: Scalar>(
    grid: &Grid<T>,
    state: &PerturbationState<T>,
    law: &PressureLaw<T>,
) -> Result<Nonlinearity<T>, ModelError> {
    state.check_positivity()?;
    let hat = nonlinear_hat(grid, law, &state.to_spectral(grid)?, true)?;
    let inv = |v: &[C<T>]| grid.inverse_real(v);
    Ok(Nonlinearity {
        f1e: inv(&hat.f1e),
        f2e: std::array::from_fn(|c| inv(&hat.f2e[c])),
        f1i: inv(&hat.f1i),
        f2i: std::array::from_fn(|c| inv(&hat.f2i[c])),
        f3: std::array::from_fn(|c| inv(&hat.f3[c])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn enthalpy_examples() {
        let law = PressureLaw::new(5.0 / 3.0).unwrap();
        assert_eq!(enthalpy_coefficient(&law, 0.0).unwrap(), 0.0);
        let iso = PressureLaw::new(2.0).unwrap();
        for s in [-0.9, -0.3, 0.0, 0.7, 4.0] {
            assert_eq!(enthalpy_coefficient(&iso, s).unwrap(), 0.0);
        }
        let cubic = PressureLaw::new(3.0f64).unwrap();
        assert!((enthalpy_coefficient(&cubic, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            enthalpy_coefficient(&law, -1.0),
            Err(ModelError::NonPhysicalDensity { .. })
        ));
        assert!(PressureLaw::new(1.0).is_err());
    }

    #[test]
    fn enthalpy_vanishes_at_equilibrium_for_any_gamma() {
        for g in [1.01, 1.4, 5.0 / 3.0, 2.0, 3.0, 7.5] {
            let law = PressureLaw::new(g).unwrap();
            assert_eq!(enthalpy_coefficient(&law, 0.0).unwrap(), 0.0);
            assert!(law.sound_speed_sq(0.3) > 0.0);
        }
    }

    #[test]
    fn zero_state_has_zero_sources() {
        let g = Grid::<f64>::new(2, 16, 10.0).unwrap();
        let nl = nonlinear_terms(&g, &PerturbationState::zeros(g.len()), &PressureLaw::default()).unwrap();
        for f in [&nl.f1e, &nl.f1i, &nl.f2e[0], &nl.f2i[1], &nl.f3[0]] {
            assert_eq!(max_abs(f), 0.0);
        }
    }

    #[test]
    fn constant_density_without_flow_is_inert() {
        let g = Grid::<f64>::new(2, 16, 10.0).unwrap();
        let mut st = PerturbationState::zeros(g.len());
        st.sigma_e.iter_mut().for_each(|s| *s = 0.2);
        let nl = nonlinear_terms(&g, &st, &PressureLaw::default()).unwrap();
        assert!(max_abs(&nl.f1e) < 1e-15);
        for c in 0..3 {
            assert!(max_abs(&nl.f2e[c]) < 1e-15);
        }
    }

    #[test]
    fn continuity_source_of_single_mode() {
        let g = Grid::<f64>::new(1, 32, 2.0 * std::f64::consts::PI).unwrap();
        let (eps, k) = (0.01, 2.0);
        let mut st = PerturbationState::zeros(g.len());
        for i in 0..g.len() {
            let x = g.coords(i)[0];
            st.sigma_e[i] = eps * (k * x).cos();
            st.u_e[0][i] = eps * (k * x).sin();
        }
        let nl = nonlinear_terms(&g, &st, &PressureLaw::default()).unwrap();
        for i in 0..g.len() {
            let x = g.coords(i)[0];
            assert!((nl.f1e[i] + eps * eps * k * (2.0 * k * x).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn positivity_violation_is_rejected() {
        let g = Grid::<f64>::new(1, 8, 1.0).unwrap();
        let mut st = PerturbationState::zeros(g.len());
        st.sigma_i[3] = -1.5;
        let err = nonlinear_terms(&g, &st, &PressureLaw::default()).unwrap_err();
        assert!(matches!(err, ModelError::NonPhysicalDensity { index: 3, .. }));
    }

    #[test]
    fn poisson_examples() {
        let g = Grid::<f64>::new(2, 32, 8.0).unwrap();
        let same: Vec<f64> = (0..g.len()).map(|i| (g.coords(i)[0]).sin() * 0.1).collect();
        let f = poisson_field(&g, &same, &same).unwrap();
        assert_eq!(max_abs(&f.e[0]), 0.0);
        assert_eq!(max_abs(&f.phi), 0.0);

        let k = g.fundamental() * 2.0;
        let zeros = vec![0.0; g.len()];
        let rho: Vec<f64> = (0..g.len()).map(|i| (k * g.coords(i)[0]).cos()).collect();
        let f = poisson_field(&g, &rho, &zeros).unwrap();
        for i in 0..g.len() {
            assert!((f.e[0][i] - (k * g.coords(i)[0]).sin() / k).abs() < 1e-13);
            assert!(f.e[1][i].abs() < 1e-13);
        }
    }

    #[test]
    fn poisson_residual_on_random_charge() {
        let g = Grid::<f64>::new(3, 16, 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // odd derivatives annihilate the Nyquist plane, so sample below it
        let rho = crate::fields::random_band_field(&g, 0.0, 0.9 * g.max_resolved_wavenumber(), &mut rng);
        let zeros = vec![0.0; g.len()];
        let f = poisson_field(&g, &rho, &zeros).unwrap();
        let e_hat: [Vec<Complex<f64>>; 3] = std::array::from_fn(|c| g.forward_real(&f.e[c]));
        let div = g.inverse_real(&g.divergence_hat(&e_hat));
        let resid: Vec<f64> = div.iter().zip(&rho).map(|(a, b)| a - b).collect();
        assert!(max_abs(&resid) <= 1e-10 * max_abs(&rho));
        let curl = g.curl_hat(&e_hat);
        for c in 0..3 {
            assert!(g.l2_norm_hat(&curl[c]) <= 1e-12 * g.l2_norm(&f.e[0]).max(1.0));
        }
    }

    #[test]
    fn nonzero_mean_is_projected_and_reported() {
        let g = Grid::<f64>::new(1, 16, 4.0).unwrap();
        let rho = vec![0.25; g.len()];
        let f = poisson_field(&g, &rho, &vec![0.0; g.len()]).unwrap();
        assert!((f.projected_mean - 0.25).abs() < 1e-14);
        assert!(max_abs(&f.e[0]) < 1e-14);
    }

    #[test]
    fn sources_are_mean_free_and_f3_is_a_gradient() {
        let g = Grid::<f64>::new(3, 16, 20.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut st = PerturbationState::zeros(g.len());
        let mut rand_field = |amp: f64| -> Vec<f64> {
            let mut hat = vec![Complex::new(0.0, 0.0); g.len()];
            for (idx, c) in hat.iter_mut().enumerate() {
                let m = g.mode(idx);
                if m.iter().all(|x| x.abs() <= 3) {
                    *c = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let f = g.inverse_real(&hat);
            let s = max_abs(&f);
            f.into_iter().map(|x| amp * x / s).collect()
        };
        st.sigma_e = rand_field(0.05);
        st.sigma_i = rand_field(0.05);
        for c in 0..3 {
            st.u_e[c] = rand_field(0.05);
            st.u_i[c] = rand_field(0.05);
        }
        let nl = nonlinear_terms(&g, &st, &PressureLaw::default()).unwrap();
        let scale = max_abs(&nl.f1e).max(1e-300);
        assert!((g.integral(&nl.f1e) / g.volume()).abs() <= 1e-12 * scale);
        assert!((g.integral(&nl.f1i) / g.volume()).abs() <= 1e-12 * scale);
        let f3_hat: [Vec<Complex<f64>>; 3] = std::array::from_fn(|c| g.forward_real(&nl.f3[c]));
        let curl = g.curl_hat(&f3_hat);
        let norm = g.l2_norm(&nl.f3[0]) + g.l2_norm(&nl.f3[1]) + g.l2_norm(&nl.f3[2]);
        for c in 0..3 {
            assert!(g.l2_norm_hat(&curl[c]) <= 1e-12 * norm);
        }
    }
}
