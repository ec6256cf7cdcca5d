//! Synthetic test fields on periodic grids.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::grid::Grid;
use crate::scalar::{lit, to_f64, Scalar};

/// Pair of independent standard normals.
pub fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    (rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Real, mean-free random field with Fourier support in `k_lo <= |k| <= k_hi`,
/// normalized to unit `L^2` norm. Returns zeros if the band holds no mode.
pub fn random_band_field<T: Scalar, R: Rng + ?Sized>(grid: &Grid<T>, k_lo: f64, k_hi: f64, rng: &mut R) -> Vec<T> {
    let hat: Vec<Complex<T>> = grid
        .kmags()
        .iter()
        .map(|&k| {
            let k = to_f64(k);
            let (a, b) = normal_pair(rng);
            if k > 0.0 && k >= k_lo && k <= k_hi {
                Complex::new(lit(a), lit(b))
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    let f = grid.inverse_real(&hat);
    let n = grid.l2_norm(&f);
    if n > T::zero() {
        f.into_iter().map(|x| x / n).collect()
    } else {
        f
    }
}

/// Random field whose spectrum lies inside the annulus `a <= |k| <= b`.
pub fn random_annulus_field<T: Scalar, R: Rng + ?Sized>(grid: &Grid<T>, a: f64, b: f64, rng: &mut R) -> Vec<T> {
    random_band_field(grid, a, b, rng)
}

/// Standard normal sample.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    normal_pair(rng).0
}
