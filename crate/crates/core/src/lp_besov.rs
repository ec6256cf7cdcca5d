//! Littlewood-Paley blocks and `L^2`-based Besov norms on periodic grids.
//!
//! The annulus profile `phi_0` is a smooth radial bump supported on
//! `3/4 <= |xi| <= 8/3`, equal to one on `[1, 4/3]`, built from the
//! `e^{-1/x}` smooth step. Block multipliers are the normalized dilates
//! `F Phi_q = phi_0(2^-q xi) / sum_j phi_0(2^-j xi)`, so they sum to one on
//! every nonzero frequency. The radial functions here are shared with the
//! whole-space quadrature path in [`crate::symbolics::quadrature`].

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{ConfigError, ModelError};
use crate::grid::Grid;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

type C<T> = Complex<T>;

pub const ANNULUS_INNER: f64 = 3.0 / 4.0;
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;

fn theta<T: Scalar>(y: T) -> T {
    if y > T::zero() {
        (-T::one() / y).exp()
    } else {
        T::zero()
    }
}

fn smooth_step<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        let a = theta(x);
        a / (a + theta(T::one() - x))
    }
}

/// Unnormalized annulus profile `phi_0(r)`.
pub fn annulus_bump<T: Scalar>(r: T) -> T {
    let inner: T = lit(ANNULUS_INNER);
    let outer: T = lit(ANNULUS_OUTER);
    let plateau: T = lit(4.0 / 3.0);
    let rise = smooth_step((r - inner) / (T::one() - inner));
    // 1 - step(x) == step(1 - x), evaluated without cancellation
    let fall = smooth_step(T::one() - (r - plateau) / (outer - plateau));
    rise * fall
}

fn dyadic(q: i32) -> f64 {
    2f64.powi(q)
}

/// Indices `j` whose annulus may contain radius `r`.
fn active_range<T: Scalar>(r: T) -> (i32, i32) {
    let r = to_f64(r);
    let lo = (r / ANNULUS_OUTER).log2().floor() as i32;
    let hi = (r / ANNULUS_INNER).log2().ceil() as i32;
    (lo, hi)
}

fn bump_sum<T: Scalar>(r: T) -> T {
    let (lo, hi) = active_range(r);
    (lo..=hi).map(|j| annulus_bump(r * lit(dyadic(-j)))).sum()
}

/// `F Phi_q(r)` for `r = |xi|`; zero at the origin.
pub fn block_multiplier<T: Scalar>(q: i32, r: T) -> T {
    if !(r > T::zero()) {
        return T::zero();
    }
    let top = annulus_bump(r * lit(dyadic(-q)));
    if top == T::zero() {
        return T::zero();
    }
    top / bump_sum(r)
}

/// `F Psi(r) = 1 - sum_{q >= 0} F Phi_q(r)`; equal to one near the origin.
pub fn low_multiplier<T: Scalar>(r: T) -> T {
    if !(r > T::zero()) {
        return T::one();
    }
    let (_, hi) = active_range(r);
    if hi < 0 {
        return T::one();
    }
    let high: T = (0..=hi).map(|q| block_multiplier(q, r)).sum();
    (T::one() - high).max(T::zero())
}

/// Summation exponent of a Besov norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SumIndex {
    One,
    Infinity,
}

/// `B^s_{2,r}` (or its homogeneous counterpart); the integrability index is fixed to 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovSpec<T> {
    pub s: T,
    pub r: SumIndex,
    pub homogeneous: bool,
}

impl<T: Scalar> BesovSpec<T> {
    pub fn homogeneous(s: T, r: SumIndex) -> Self {
        Self { s, r, homogeneous: true }
    }

    pub fn inhomogeneous(s: T, r: SumIndex) -> Self {
        Self { s, r, homogeneous: false }
    }

    /// Combines weighted block norms `(q, ||Delta_q f||)`.
    pub fn combine(&self, blocks: &[(i32, T)]) -> T {
        let weighted = blocks.iter().map(|&(q, b)| lit::<T>(dyadic(q)).powf(self.s) * b);
        match self.r {
            SumIndex::One => weighted.sum(),
            SumIndex::Infinity => weighted.fold(T::zero(), T::max),
        }
    }
}

/// Dyadic multipliers sampled on a grid.
#[derive(Clone)]
pub struct DyadicPartition<T: Scalar> {
    grid: Grid<T>,
    q_min: i32,
    q_max: i32,
    blocks: Vec<Vec<T>>,
    low: Vec<T>,
}

impl<T: Scalar> std::fmt::Debug for DyadicPartition<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DyadicPartition").field("q_min", &self.q_min).field("q_max", &self.q_max).finish()
    }
}

/// Smallest dyadic range whose annuli cover every nonzero mode of `grid`.
pub fn covering_range<T: Scalar>(grid: &Grid<T>) -> (i32, i32) {
    let k_lo = to_f64(grid.fundamental());
    let k_hi = grid.kmags().iter().fold(0.0f64, |m, &k| m.max(to_f64(k)));
    // smallest q with (8/3) 2^q > k_lo, largest q with (3/4) 2^q < k_hi
    let mut q_min = (k_lo / ANNULUS_OUTER).log2().floor() as i32;
    while ANNULUS_OUTER * dyadic(q_min) <= k_lo {
        q_min += 1;
    }
    let mut q_max = (k_hi / ANNULUS_INNER).log2().ceil() as i32;
    while ANNULUS_INNER * dyadic(q_max) >= k_hi {
        q_max -= 1;
    }
    (q_min, q_max)
}

/// Samples the block multipliers `F Phi_q`, `q_min <= q <= q_max`, and `F Psi` on `grid`.
///
/// The range must cover every resolved nonzero frequency and its lowest
/// annulus must reach above the fundamental mode.
pub fn build_partition<T: Scalar>(
    grid: &Grid<T>,
    q_min: i32,
    q_max: i32,
) -> Result<DyadicPartition<T>, ConfigError> {
    let err = |reason: String| ConfigError::DyadicRange { q_min, q_max, reason };
    if q_min > q_max {
        return Err(err("empty range".into()));
    }
    let k0 = to_f64(grid.fundamental());
    if ANNULUS_OUTER * dyadic(q_min) <= k0 {
        return Err(err(format!(
            "annulus A_{q_min} lies below the fundamental mode {k0:.4e}; grid too coarse to resolve it"
        )));
    }
    let (need_lo, need_hi) = covering_range(grid);
    if q_min > need_lo || q_max < need_hi {
        return Err(err(format!("resolved band needs at least [{need_lo}, {need_hi}]")));
    }
    let kmag = grid.kmags();
    let blocks = (q_min..=q_max)
        .map(|q| kmag.par_iter().map(|&k| block_multiplier(q, k)).collect())
        .collect();
    let low = kmag.par_iter().map(|&k| low_multiplier(k)).collect();
    Ok(DyadicPartition { grid: grid.clone(), q_min, q_max, blocks, low })
}

impl<T: Scalar> DyadicPartition<T> {
    /// Partition over the tight covering range of `grid`.
    pub fn for_grid(grid: &Grid<T>) -> Self {
        let (lo, hi) = covering_range(grid);
        build_partition(grid, lo, hi).expect("covering range is always valid")
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    /// Sampled `F Phi_q`, or `None` if `q` is outside the stored range
    /// (such blocks vanish on every resolved mode).
    pub fn multiplier(&self, q: i32) -> Option<&[T]> {
        if q < self.q_min || q > self.q_max {
            None
        } else {
            Some(&self.blocks[(q - self.q_min) as usize])
        }
    }

    pub fn low_multiplier(&self) -> &[T] {
        &self.low
    }

    /// Block indices entering a norm: `q_min..=q_max` (homogeneous) or `-1..=q_max`.
    pub fn indices(&self, homogeneous: bool) -> std::ops::RangeInclusive<i32> {
        if homogeneous {
            self.q_min..=self.q_max
        } else {
            -1..=self.q_max.max(-1)
        }
    }

    fn weights(&self, q: i32, homogeneous: bool) -> Option<&[T]> {
        if homogeneous {
            self.multiplier(q)
        } else if q == -1 {
            Some(&self.low)
        } else if q < -1 {
            None
        } else {
            self.multiplier(q)
        }
    }

    /// Fourier coefficients of a dyadic block.
    pub fn block_hat(&self, hat: &[C<T>], q: i32, homogeneous: bool) -> Vec<C<T>> {
        match self.weights(q, homogeneous) {
            Some(w) => hat.par_iter().zip(w.par_iter()).map(|(&c, &m)| c * m).collect(),
            None => vec![C::new(T::zero(), T::zero()); hat.len()],
        }
    }

    /// `(q, ||Delta_q Lambda^ell f||_{L^2})` for every block index of the norm.
    pub fn block_norms_hat(&self, hat: &[C<T>], ell: T, homogeneous: bool) -> Vec<(i32, T)> {
        let kmag = self.grid.kmags();
        let m = from_usize::<T>(self.grid.len());
        let scale = self.grid.volume() / (m * m);
        self.indices(homogeneous)
            .map(|q| {
                let norm = match self.weights(q, homogeneous) {
                    Some(w) => {
                        let s: T = hat
                            .par_iter()
                            .zip(w.par_iter())
                            .zip(kmag.par_iter())
                            .map(|((c, &wq), &k)| {
                                if wq == T::zero() || (k == T::zero() && ell < T::zero()) {
                                    T::zero()
                                } else {
                                    let d = if ell == T::zero() { T::one() } else { k.powf(ell) };
                                    let v = wq * d;
                                    v * v * c.norm_sqr()
                                }
                            })
                            .sum();
                        (s * scale).sqrt()
                    }
                    None => T::zero(),
                };
                (q, norm)
            })
            .collect()
    }

    pub fn besov_norm_hat(&self, hat: &[C<T>], spec: &BesovSpec<T>) -> T {
        spec.combine(&self.block_norms_hat(hat, T::zero(), spec.homogeneous))
    }

    /// Besov norm of `Lambda^ell f`.
    pub fn besov_norm_of_derivative_hat(&self, hat: &[C<T>], ell: T, spec: &BesovSpec<T>) -> T {
        spec.combine(&self.block_norms_hat(hat, ell, spec.homogeneous))
    }
}

/// `Delta_q f` (homogeneous) or the inhomogeneous block with `Delta_{-1} = Psi *`.
pub fn dyadic_block<T: Scalar>(partition: &DyadicPartition<T>, f: &[T], q: i32, homogeneous: bool) -> Vec<T> {
    let grid = partition.grid();
    grid.inverse_real(&partition.block_hat(&grid.forward_real(f), q, homogeneous))
}

pub fn besov_norm<T: Scalar>(partition: &DyadicPartition<T>, f: &[T], spec: &BesovSpec<T>) -> T {
    partition.besov_norm_hat(&partition.grid().forward_real(f), spec)
}

/// Applies `|xi|^alpha` to Fourier data; the zero mode maps to zero for `alpha > 0`.
pub fn fractional_derivative_hat<T: Scalar>(
    grid: &Grid<T>,
    hat: &[C<T>],
    alpha: T,
) -> Result<Vec<C<T>>, ModelError> {
    if alpha == T::zero() {
        return Ok(hat.to_vec());
    }
    if alpha < T::zero() {
        let mean = grid.mean_hat(hat);
        let scale = grid.l2_norm_hat(hat) / grid.volume().sqrt();
        if mean.abs() > lit::<T>(1e-14) * scale.max(T::min_positive_value()) || hat[0].im != T::zero() {
            return Err(ModelError::NonzeroMean { alpha: to_f64(alpha), mean: to_f64(mean) });
        }
    }
    Ok(hat
        .par_iter()
        .zip(grid.kmags().par_iter())
        .map(|(&c, &k)| if k > T::zero() { c * k.powf(alpha) } else { C::new(T::zero(), T::zero()) })
        .collect())
}

/// `Lambda^alpha f = F^{-1} |xi|^alpha F f`.
pub fn fractional_derivative<T: Scalar>(grid: &Grid<T>, f: &[T], alpha: T) -> Result<Vec<T>, ModelError> {
    if alpha == T::zero() {
        return Ok(f.to_vec());
    }
    Ok(grid.inverse_real(&fractional_derivative_hat(grid, &grid.forward_real(f), alpha)?))
}
