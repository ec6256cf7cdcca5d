//! Whole-space norms of isotropic linear solutions by radial quadrature.
//!
//! For isotropic data the solution at `xi` is a rotation of the solution at
//! `|xi| e_1`, which only excites the parallel `5 x 5` block
//! `(sigma_e, u_e1, sigma_i, u_i1, E_1)`. Norms are
//! `||Lambda^ell f||^2 = 4 pi int r^{2 ell + 2} |f(r)|^2 dr`.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::ConfigError;
use crate::lp_besov::{block_multiplier, BesovSpec, ANNULUS_INNER, ANNULUS_OUTER};
use crate::scalar::{lit, to_f64, Scalar};
use crate::symbolics::{parallel_block, CMatrix};

type C<T> = Complex<T>;
type RadialFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Isotropic data: scalar densities and velocity potentials with `u_a = i xi phi_a`.
#[derive(Clone)]
pub struct RadialProfile<T> {
    pub sigma_e: RadialFn<T>,
    pub sigma_i: RadialFn<T>,
    pub phi_e: RadialFn<T>,
    pub phi_i: RadialFn<T>,
    pub label: String,
}

impl<T: Scalar> std::fmt::Debug for RadialProfile<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProfile").field("label", &self.label).finish()
    }
}

impl<T: Scalar> RadialProfile<T> {
    /// Transforms of Gaussians `m (pi w^2)^{-3/2} e^{-|x|^2/w^2}`, i.e. `m e^{-w^2 r^2/4}`;
    /// potentials are `potential * m_a e^{-w_a^2 r^2 / 4}`.
    pub fn gaussian_mass(mass_e: T, width_e: T, mass_i: T, width_i: T, potential: T) -> Self {
        let quarter: T = lit(0.25);
        let g = move |m: T, w: T| -> RadialFn<T> { Arc::new(move |r: T| m * (-quarter * w * w * r * r).exp()) };
        Self {
            sigma_e: g(mass_e, width_e),
            sigma_i: g(mass_i, width_i),
            phi_e: g(potential * mass_e, width_e),
            phi_i: g(potential * mass_i, width_i),
            label: format!(
                "gaussian-mass(m_e={mass_e}, w_e={width_e}, m_i={mass_i}, w_i={width_i}, phi={potential})"
            ),
        }
    }

    /// Gaussian profiles times `r^{s - 3/2}`, which lie in `B^{-s}_{2,inf}` and no better;
    /// `s = 3/2` is [`RadialProfile::gaussian_mass`].
    pub fn regime(s: T, mass_e: T, width_e: T, mass_i: T, width_i: T, potential: T) -> Self {
        let quarter: T = lit(0.25);
        let a = s - lit(1.5);
        let g = move |m: T, w: T| -> RadialFn<T> {
            Arc::new(move |r: T| m * r.powf(a) * (-quarter * w * w * r * r).exp())
        };
        Self {
            sigma_e: g(mass_e, width_e),
            sigma_i: g(mass_i, width_i),
            phi_e: g(potential * mass_e, width_e),
            phi_i: g(potential * mass_i, width_i),
            label: format!(
                "regime(s={s}, m_e={mass_e}, w_e={width_e}, m_i={mass_i}, w_i={width_i}, phi={potential})"
            ),
        }
    }

    /// Parallel constrained data at `xi = r e_1`: `(sigma_e, u_e1, sigma_i, u_i1, E_1)`.
    pub fn parallel_state(&self, r: T) -> [C<T>; 5] {
        let se = (self.sigma_e)(r);
        let si = (self.sigma_i)(r);
        let ue = C::new(T::zero(), r * (self.phi_e)(r));
        let ui = C::new(T::zero(), r * (self.phi_i)(r));
        let e = C::new(T::zero(), -(se - si) / r);
        [C::new(se, T::zero()), ue, C::new(si, T::zero()), ui, e]
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Composite Gauss rule on log-spaced panels.
#[derive(Debug, Clone)]
pub struct RadialQuadrature<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub r_min: T,
    pub r_max: T,
}

impl<T: Scalar> RadialQuadrature<T> {
    pub fn log_panels(r_min: T, r_max: T, panels: usize, order: usize) -> Result<Self, ConfigError> {
        let (lo, hi) = (to_f64(r_min), to_f64(r_max));
        if !(lo > 0.0 && hi > lo) || panels == 0 || order == 0 {
            return Err(ConfigError::Quadrature(format!(
                "need 0 < r_min < r_max and positive panel count/order, got [{lo}, {hi}], {panels} x {order}"
            )));
        }
        let (gx, gw) = gauss_legendre(order);
        let ratio = (hi / lo).ln() / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = lo * (ratio * p as f64).exp();
            let b = lo * (ratio * (p + 1) as f64).exp();
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(lit(0.5 * (a + b) + 0.5 * (b - a) * x));
                weights.push(lit(0.5 * (b - a) * w));
            }
        }
        Ok(Self { nodes, weights, r_min, r_max })
    }

    /// Default rule: 100 panels of 10 nodes on `[1e-5, 10]`.
    pub fn standard() -> Self {
        Self::log_panels(lit(1e-5), lit(10.0), 100, 10).expect("valid default quadrature")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Squared moduli of the propagated parallel components at every node and time.
#[derive(Debug, Clone)]
pub struct QuadratureRun<T> {
    pub times: Vec<T>,
    pub quadrature: RadialQuadrature<T>,
    /// `[node][time]` -> `|sigma_e|^2, |u_e|^2, |sigma_i|^2, |u_i|^2, |E|^2, |sigma_e - sigma_i|^2`
    samples: Vec<Vec<[T; 6]>>,
    profile_label: String,
}

/// Group norms at one time.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GroupNorms<T> {
    /// `||sigma_e|| + ||sigma_i|| + ||E||`
    pub densities: T,
    /// `||u_e|| + ||u_i|| + ||sigma_e - sigma_i||`
    pub velocities: T,
    pub difference: T,
}

const PARTS: usize = 6;

fn four_pi<T: Scalar>() -> T {
    lit(4.0 * std::f64::consts::PI)
}

/// Fraction of `int r^{2 ell + 2} |f|^2` lying beyond `r_max`, estimated on `[r_max, 4 r_max]`.
pub fn tail_fraction<T: Scalar>(profile: &RadialProfile<T>, quad: &RadialQuadrature<T>, ell: T) -> T {
    let tail_rule =
        RadialQuadrature::log_panels(quad.r_max, quad.r_max * lit(4.0), 20, 10).expect("valid tail rule");
    let energy = |nodes: &[T], weights: &[T]| -> T {
        nodes
            .iter()
            .zip(weights)
            .map(|(&r, &w)| {
                let s = profile.parallel_state(r);
                let m: T = s.iter().map(|z| z.norm_sqr()).sum();
                w * r.powf(lit::<T>(2.0) * ell + lit(2.0)) * m
            })
            .sum()
    };
    let body = energy(&quad.nodes, &quad.weights);
    let tail = energy(&tail_rule.nodes, &tail_rule.weights);
    if body > T::zero() {
        tail / body
    } else {
        T::zero()
    }
}

/// Propagates the profile to every time in `times` at every quadrature node.
pub fn quadrature_run<T: Scalar>(
    profile: &RadialProfile<T>,
    quad: &RadialQuadrature<T>,
    times: &[T],
) -> QuadratureRun<T> {
    let samples = quad
        .nodes
        .par_iter()
        .map(|&r| {
            let gen: CMatrix<T> = parallel_block(r).expect("positive node");
            let w0 = profile.parallel_state(r);
            times
                .iter()
                .map(|&t| {
                    let w = if t == T::zero() { w0.to_vec() } else { gen.scale_real(t).expm().matvec(&w0) };
                    [
                        w[0].norm_sqr(),
                        w[1].norm_sqr(),
                        w[2].norm_sqr(),
                        w[3].norm_sqr(),
                        w[4].norm_sqr(),
                        (w[0] - w[2]).norm_sqr(),
                    ]
                })
                .collect()
        })
        .collect();
    QuadratureRun { times: times.to_vec(), quadrature: quad.clone(), samples, profile_label: profile.label.clone() }
}

/// Like [`quadrature_run`], but rejects profiles whose tail beyond `r_max` exceeds `1e-6`
/// of the `t = 0` norm for any requested `ell`.
pub fn quadrature_norms<T: Scalar>(
    profile: &RadialProfile<T>,
    quad: &RadialQuadrature<T>,
    ells: &[T],
    times: &[T],
) -> Result<QuadratureRun<T>, ConfigError> {
    for &ell in ells {
        let tail = tail_fraction(profile, quad, ell);
        if tail > lit(1e-6) {
            return Err(ConfigError::ProfileTail { r_max: to_f64(quad.r_max), tail: to_f64(tail) });
        }
    }
    Ok(quadrature_run(profile, quad, times))
}

impl<T: Scalar> QuadratureRun<T> {
    pub fn profile_label(&self) -> &str {
        &self.profile_label
    }

    /// Per-component `||Lambda^ell .||^2` at time index `k`, with an optional radial weight.
    fn component_sq(&self, k: usize, ell: T, weight: impl Fn(T) -> T) -> [T; PARTS] {
        let mut acc = [T::zero(); PARTS];
        let power = lit::<T>(2.0) * ell + lit(2.0);
        for ((&r, &w), samp) in self.quadrature.nodes.iter().zip(&self.quadrature.weights).zip(&self.samples) {
            let wr = weight(r);
            if wr == T::zero() {
                continue;
            }
            let f = w * r.powf(power) * wr;
            for (a, &s) in acc.iter_mut().zip(&samp[k]) {
                *a = *a + f * s;
            }
        }
        acc.map(|a| a * four_pi())
    }

    fn groups(parts: [T; PARTS]) -> GroupNorms<T> {
        let n = parts.map(|p| p.sqrt());
        GroupNorms { densities: n[0] + n[2] + n[4], velocities: n[1] + n[3] + n[5], difference: n[5] }
    }

    /// `L^2` norms of `Lambda^ell` of each group at every time.
    pub fn l2_norms(&self, ell: T) -> Vec<GroupNorms<T>> {
        (0..self.times.len()).map(|k| Self::groups(self.component_sq(k, ell, |_| T::one()))).collect()
    }

    /// Per-component norms `(sigma_e, u_e, sigma_i, u_i, E, sigma_e - sigma_i)` at time index `k`.
    pub fn component_norms(&self, k: usize, ell: T) -> [T; PARTS] {
        self.component_sq(k, ell, |_| T::one()).map(|p| p.sqrt())
    }

    /// Dyadic range whose annuli meet `[r_min, r_max]`.
    pub fn dyadic_range(&self) -> (i32, i32) {
        let lo = (to_f64(self.quadrature.r_min) / ANNULUS_OUTER).log2().floor() as i32;
        let hi = (to_f64(self.quadrature.r_max) / ANNULUS_INNER).log2().ceil() as i32;
        (lo, hi)
    }

    /// Homogeneous Besov norms of `Lambda^ell` of each group, from annulus-restricted integrals.
    pub fn besov_norms(&self, ell: T, spec: &BesovSpec<T>) -> Vec<GroupNorms<T>> {
        let (lo, hi) = self.dyadic_range();
        (0..self.times.len())
            .map(|k| {
                let blocks: Vec<(i32, [T; PARTS])> = (lo..=hi)
                    .map(|q| {
                        let parts = self.component_sq(k, ell, |r| {
                            let m = block_multiplier(q, r);
                            m * m
                        });
                        (q, parts.map(|p| p.sqrt()))
                    })
                    .collect();
                let comp = |i: usize| -> T {
                    let b: Vec<(i32, T)> = blocks.iter().map(|(q, p)| (*q, p[i])).collect();
                    spec.combine(&b)
                };
                GroupNorms {
                    densities: comp(0) + comp(2) + comp(4),
                    velocities: comp(1) + comp(3) + comp(5),
                    difference: comp(5),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        for p in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
    }

    fn gaussian_moment(ell: f64, a: f64) -> f64 {
        // int_0^inf r^{2 ell + 2} e^{-a r^2} dr for ell = 0, 1
        let pi = std::f64::consts::PI;
        match ell as i32 {
            0 => pi.sqrt() / (4.0 * a.powf(1.5)),
            1 => 3.0 * pi.sqrt() / (8.0 * a.powf(2.5)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn initial_norms_match_gaussian_moments() {
        let (m, we, wi) = (1.0, 2f64.sqrt(), 2.0);
        let profile = RadialProfile::gaussian_mass(m, we, m, wi, 0.0);
        let quad = RadialQuadrature::standard();
        let run = quadrature_norms(&profile, &quad, &[0.0, 1.0], &[0.0]).unwrap();
        for ell in [0.0, 1.0] {
            let n = run.component_norms(0, ell);
            let want_e = (4.0 * std::f64::consts::PI * m * m * gaussian_moment(ell, we * we / 2.0)).sqrt();
            let want_i = (4.0 * std::f64::consts::PI * m * m * gaussian_moment(ell, wi * wi / 2.0)).sqrt();
            assert!((n[0] - want_e).abs() <= 1e-8 * want_e);
            assert!((n[2] - want_i).abs() <= 1e-8 * want_i);
        }
    }

    #[test]
    fn slowly_decaying_profile_is_rejected() {
        let profile = RadialProfile::gaussian_mass(1.0, 0.3, 1.0, 0.4, 0.0);
        let quad = RadialQuadrature::standard();
        assert!(matches!(
            quadrature_norms(&profile, &quad, &[1.5], &[0.0]),
            Err(ConfigError::ProfileTail { .. })
        ));
    }

    #[test]
    fn norms_decrease_in_time() {
        let profile = RadialProfile::gaussian_mass(1.0, 1.0, 1.0, 1.5, 0.2);
        let quad = RadialQuadrature::log_panels(1e-4, 10.0, 40, 8).unwrap();
        let times: Vec<f64> = (0..8).map(|k| 2f64.powi(k) - 1.0).collect();
        let run = quadrature_run(&profile, &quad, &times);
        let dens: Vec<f64> = run.l2_norms(0.0).iter().map(|g| g.densities).collect();
        for w in dens.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn regime_profile_reduces_to_gaussian_mass() {
        let a = RadialProfile::regime(1.5, 1.0, 1.0, 2.0, 1.5, 0.3);
        let b = RadialProfile::gaussian_mass(1.0, 1.0, 2.0, 1.5, 0.3);
        for r in [1e-3, 0.1, 1.0, 3.0] {
            assert_eq!(a.parallel_state(r), b.parallel_state(r));
        }
        let c = RadialProfile::<f64>::regime(0.5, 1.0, 1.0, 1.0, 1.0, 0.0);
        assert!(((c.sigma_e)(0.01) / (c.sigma_e)(0.04) - 4.0).abs() < 1e-2);
    }
}
