//! Uniform periodic grids and their discrete Fourier machinery.
//!
//! Fields are stored row-major with the last axis contiguous. The forward
//! transform is unnormalized with kernel `e^{-i k.x}`; the inverse carries the
//! `1/M` factor (`M` = number of grid points), so a physical sample is
//! `f_j = (1/M) sum_k c_k e^{i k.x_j}` and spatial derivatives act as `i k`.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::ModelError;
use crate::scalar::{from_usize, Scalar};

/// Upper bound on points per axis for any supported dimension.
const MAX_POINTS: usize = 1 << 24;

struct GridInner<T: Scalar> {
    dim: usize,
    n: usize,
    length: T,
    wave: Vec<[T; 3]>,
    kmag: Vec<T>,
    modes: Vec<[i64; 3]>,
    dealias: Vec<bool>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

/// Periodic box `[0, L)^n` sampled with `N` points per axis.
///
/// Cheap to clone; the wavenumber tables and FFT plans are shared.
#[derive(Clone)]
pub struct Grid<T: Scalar> {
    inner: Arc<GridInner<T>>,
}

impl<T: Scalar> std::fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl<T: Scalar> Grid<T> {
    pub fn new(dim: usize, n: usize, length: T) -> Result<Self, ModelError> {
        if !(1..=3).contains(&dim) {
            return Err(ModelError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(ModelError::InvalidGrid(format!("points per axis {n} must be even and >= 4")));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(ModelError::InvalidGrid(format!("box length {length} must be positive")));
        }
        let total = n.checked_pow(dim as u32).filter(|&t| t <= MAX_POINTS).ok_or_else(|| {
            ModelError::InvalidGrid(format!("{n}^{dim} points exceeds the supported size"))
        })?;

        let k0 = T::TAU() / length;
        let signed = |i: usize| -> i64 {
            if i < n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let mut wave = Vec::with_capacity(total);
        let mut kmag = Vec::with_capacity(total);
        let mut modes = Vec::with_capacity(total);
        let mut dealias = Vec::with_capacity(total);
        // |m| < N/3 on every axis.
        let keep = |m: i64| 3 * m.unsigned_abs() < n as u64;
        for flat in 0..total {
            let mut m = [0i64; 3];
            let mut rem = flat;
            for axis in (0..dim).rev() {
                m[axis] = signed(rem % n);
                rem /= n;
            }
            let k = [
                k0 * T::from_i64(m[0]).unwrap(),
                k0 * T::from_i64(m[1]).unwrap(),
                k0 * T::from_i64(m[2]).unwrap(),
            ];
            kmag.push((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt());
            wave.push(k);
            dealias.push(m.iter().take(dim).all(|&mi| keep(mi)));
            modes.push(m);
        }

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner { dim, n, length, wave, kmag, modes, dealias, fwd, inv }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> T {
        self.inner.length
    }

    /// Total number of grid points (and Fourier modes).
    pub fn len(&self) -> usize {
        self.inner.wave.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.wave.is_empty()
    }

    pub fn volume(&self) -> T {
        self.inner.length.powi(self.inner.dim as i32)
    }

    pub fn cell_volume(&self) -> T {
        self.volume() / from_usize(self.len())
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn fundamental(&self) -> T {
        T::TAU() / self.inner.length
    }

    pub fn wavevectors(&self) -> &[[T; 3]] {
        &self.inner.wave
    }

    pub fn wavevector(&self, idx: usize) -> [T; 3] {
        self.inner.wave[idx]
    }

    pub fn kmags(&self) -> &[T] {
        &self.inner.kmag
    }

    /// Signed integer mode numbers of a flat index (unused axes are zero).
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        self.inner.modes[idx]
    }

    /// Flat index of a signed mode triple, if it is representable.
    pub fn index_of(&self, mode: [i64; 3]) -> Option<usize> {
        let n = self.inner.n as i64;
        let mut flat = 0usize;
        for (axis, &m) in mode.iter().enumerate() {
            if axis >= self.inner.dim {
                if m != 0 {
                    return None;
                }
                continue;
            }
            if m < -n / 2 || m >= n / 2 {
                return None;
            }
            flat = flat * self.inner.n + m.rem_euclid(n) as usize;
        }
        Some(flat)
    }

    /// Whether a mode survives the 2/3-rule truncation.
    pub fn in_dealiased_band(&self, idx: usize) -> bool {
        self.inner.dealias[idx]
    }

    /// Largest `|k|` inside the dealiased band.
    pub fn max_resolved_wavenumber(&self) -> T {
        self.inner
            .kmag
            .iter()
            .zip(&self.inner.dealias)
            .filter(|(_, &keep)| keep)
            .map(|(&k, _)| k)
            .fold(T::zero(), T::max)
    }

    /// Physical coordinates of a grid point.
    pub fn coords(&self, idx: usize) -> [T; 3] {
        let n = self.inner.n;
        let h = self.inner.length / from_usize(n);
        let mut x = [T::zero(); 3];
        let mut rem = idx;
        for axis in (0..self.inner.dim).rev() {
            x[axis] = h * from_usize(rem % n);
            rem /= n;
        }
        x
    }

    /// Zeroes every mode outside the dealiased band.
    pub fn dealias(&self, data: &mut [Complex<T>]) {
        data.par_iter_mut().zip(self.inner.dealias.par_iter()).for_each(|(c, &keep)| {
            if !keep {
                *c = Complex::new(T::zero(), T::zero());
            }
        });
    }

    pub fn forward_real(&self, field: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = field.par_iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.forward_in_place(&mut data);
        data
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, hat: &[Complex<T>]) -> Vec<T> {
        let mut data = hat.to_vec();
        self.inverse_in_place(&mut data);
        data.into_par_iter().map(|c| c.re).collect()
    }

    pub fn forward_in_place(&self, data: &mut [Complex<T>]) {
        assert_eq!(data.len(), self.len(), "field does not match grid");
        for axis in 0..self.inner.dim {
            self.transform_axis(data, axis, &self.inner.fwd);
        }
    }

    pub fn inverse_in_place(&self, data: &mut [Complex<T>]) {
        assert_eq!(data.len(), self.len(), "field does not match grid");
        for axis in 0..self.inner.dim {
            self.transform_axis(data, axis, &self.inner.inv);
        }
        let scale = T::one() / from_usize(self.len());
        data.par_iter_mut().for_each(|c| *c = *c * scale);
    }

    fn transform_axis(&self, data: &mut [Complex<T>], axis: usize, plan: &Arc<dyn Fft<T>>) {
        let n = self.inner.n;
        let stride = n.pow((self.inner.dim - 1 - axis) as u32);
        let lines_per_task = (4096 / n).max(1);
        if stride == 1 {
            data.par_chunks_mut(n * lines_per_task).for_each(|chunk| {
                let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
                plan.process_with_scratch(chunk, &mut scratch);
            });
            return;
        }
        // Gather strided lines into contiguous rows, transform, scatter back.
        let block = n * stride;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); data.len()];
        {
            let src: &[Complex<T>] = data;
            buf.par_chunks_mut(n).enumerate().for_each(|(line, row)| {
                let outer = line / stride;
                let inner = line % stride;
                let base = outer * block + inner;
                for (i, slot) in row.iter_mut().enumerate() {
                    *slot = src[base + i * stride];
                }
            });
        }
        buf.par_chunks_mut(n * lines_per_task).for_each(|chunk| {
            let mut scratch = vec![Complex::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
        let buf = &buf;
        data.par_chunks_mut(block).enumerate().for_each(|(outer, blk)| {
            for i in 0..n {
                for inner in 0..stride {
                    blk[i * stride + inner] = buf[(outer * stride + inner) * n + i];
                }
            }
        });
    }

    /// Continuum `L^2(box)` norm of a field given by its unnormalized DFT.
    pub fn l2_norm_hat(&self, hat: &[Complex<T>]) -> T {
        self.l2_norm_sq_hat(hat).sqrt()
    }

    pub fn l2_norm_sq_hat(&self, hat: &[Complex<T>]) -> T {
        let m = from_usize::<T>(self.len());
        let s: T = hat.par_iter().map(|c| c.norm_sqr()).sum();
        s * self.volume() / (m * m)
    }

    /// Continuum `L^2(box)` norm of a physical field.
    pub fn l2_norm(&self, field: &[T]) -> T {
        let s: T = field.par_iter().map(|&x| x * x).sum();
        (s * self.cell_volume()).sqrt()
    }

    /// Continuum `L^1(box)` norm of a physical field.
    pub fn l1_norm(&self, field: &[T]) -> T {
        let s: T = field.par_iter().map(|&x| x.abs()).sum();
        s * self.cell_volume()
    }

    /// Spatial integral of a physical field.
    pub fn integral(&self, field: &[T]) -> T {
        let s: T = field.par_iter().copied().sum();
        s * self.cell_volume()
    }

    /// Spatial mean encoded in the zero mode of a DFT.
    pub fn mean_hat(&self, hat: &[Complex<T>]) -> T {
        hat[0].re / from_usize(self.len())
    }

    /// Spatial integral encoded in the zero mode of a DFT.
    pub fn integral_hat(&self, hat: &[Complex<T>]) -> T {
        hat[0].re * self.cell_volume()
    }

    /// Spectral gradient `i k f`.
    pub fn gradient_hat(&self, hat: &[Complex<T>]) -> [Vec<Complex<T>>; 3] {
        std::array::from_fn(|axis| {
            hat.par_iter()
                .zip(self.inner.wave.par_iter())
                .map(|(&c, k)| Complex::new(-k[axis] * c.im, k[axis] * c.re))
                .collect()
        })
    }

    /// Spectral divergence `i k . v`.
    pub fn divergence_hat(&self, v: &[Vec<Complex<T>>; 3]) -> Vec<Complex<T>> {
        (0..self.len())
            .into_par_iter()
            .map(|idx| {
                let k = self.inner.wave[idx];
                let s = v[0][idx] * k[0] + v[1][idx] * k[1] + v[2][idx] * k[2];
                Complex::new(-s.im, s.re)
            })
            .collect()
    }

    /// Spectral curl `i k x v`.
    pub fn curl_hat(&self, v: &[Vec<Complex<T>>; 3]) -> [Vec<Complex<T>>; 3] {
        let ik = |idx: usize, a: usize, c: Complex<T>| {
            let k = self.inner.wave[idx][a];
            Complex::new(-k * c.im, k * c.re)
        };
        std::array::from_fn(|comp| {
            let (a, b) = ((comp + 1) % 3, (comp + 2) % 3);
            (0..self.len())
                .into_par_iter()
                .map(|idx| ik(idx, a, v[b][idx]) - ik(idx, b, v[a][idx]))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::<f64>::new(4, 8, 1.0).is_err());
        assert!(Grid::<f64>::new(2, 7, 1.0).is_err());
        assert!(Grid::<f64>::new(2, 8, -1.0).is_err());
    }

    #[test]
    fn round_trip_3d() {
        let g = Grid::<f64>::new(3, 8, 2.0).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        let back = g.inverse_real(&g.forward_real(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let g = Grid::<f64>::new(2, 16, 4.0).unwrap();
        let k = g.fundamental() * 3.0;
        let f: Vec<f64> = (0..g.len()).map(|i| (k * g.coords(i)[1]).cos()).collect();
        let hat = g.forward_real(&f);
        let idx = g.index_of([0, 3, 0]).unwrap();
        assert!((hat[idx].re - g.len() as f64 / 2.0).abs() < 1e-9);
        let energy: f64 = hat.iter().map(|c| c.norm_sqr()).sum();
        assert!((2.0 * hat[idx].norm_sqr() - energy).abs() < 1e-6);
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::<f64>::new(1, 32, 6.0).unwrap();
        let k = g.fundamental() * 2.0;
        let f: Vec<f64> = (0..g.len()).map(|i| (k * g.coords(i)[0]).sin()).collect();
        let d = g.inverse_real(&g.gradient_hat(&g.forward_real(&f))[0]);
        for i in 0..g.len() {
            assert!((d[i] - k * (k * g.coords(i)[0]).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn dealias_band_is_two_thirds() {
        let g = Grid::<f64>::new(1, 48, 1.0).unwrap();
        let kept = (0..g.len()).filter(|&i| g.in_dealiased_band(i)).count();
        assert_eq!(kept, 31);
    }

    #[test]
    fn norms_match_physical_space() {
        let g = Grid::<f64>::new(2, 16, 3.0).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let hat = g.forward_real(&f);
        assert!((g.l2_norm(&f) - g.l2_norm_hat(&hat)).abs() < 1e-12);
        assert!((g.integral(&f) - g.integral_hat(&hat)).abs() < 1e-12);
    }
}
