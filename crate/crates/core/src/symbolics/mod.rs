//! Frequency-by-frequency analysis of the linearized system.
//!
//! State ordering at a frequency `xi` is
//! `(sigma_e, u_e[3], sigma_i, u_i[3], E[3])`; the linear flow is
//! `d/dt w = -A(xi) w`. The constraint subspace is `xi x E = 0`,
//! `i xi . E = sigma_e - sigma_i`.

pub mod matrix;
pub mod quadrature;

use num_complex::Complex;
use rand::Rng;

use crate::error::{ModelError, SolverError};
use crate::fields::normal_pair;
use crate::scalar::{lit, to_f64, Scalar};
pub use matrix::CMatrix;

type C<T> = Complex<T>;

pub const SIGMA_E: usize = 0;
pub const U_E: usize = 1;
pub const SIGMA_I: usize = 4;
pub const U_I: usize = 5;
pub const FIELD: usize = 8;
pub const STATE_DIM: usize = 11;
pub const FLUID_DIM: usize = 8;

/// Relative tolerance for the constrained flag.
pub const CONSTRAINT_TOL: f64 = 1e-10;

pub type Mat8<T> = [[T; FLUID_DIM]; FLUID_DIM];

fn czero<T: Scalar>() -> C<T> {
    C::new(T::zero(), T::zero())
}

fn norm3<T: Scalar>(xi: &[T; 3]) -> T {
    (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()
}

fn nonzero<T: Scalar>(xi: &[T; 3]) -> Result<T, ModelError> {
    let r = norm3(xi);
    if r > T::zero() && r.is_finite() {
        Ok(r)
    } else {
        Err(ModelError::ZeroFrequency)
    }
}

/// State vector at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector<T> {
    pub xi: [T; 3],
    pub w: [C<T>; STATE_DIM],
}

impl<T: Scalar> SpectralVector<T> {
    pub fn new(xi: [T; 3], w: [C<T>; STATE_DIM]) -> Self {
        Self { xi, w }
    }

    /// Builds a vector on the constraint subspace: `E = -i xi (sigma_e - sigma_i) / |xi|^2`.
    pub fn constrained(
        xi: [T; 3],
        sigma_e: C<T>,
        u_e: [C<T>; 3],
        sigma_i: C<T>,
        u_i: [C<T>; 3],
    ) -> Result<Self, ModelError> {
        let r = nonzero(&xi)?;
        let mut w = [czero(); STATE_DIM];
        w[SIGMA_E] = sigma_e;
        w[SIGMA_I] = sigma_i;
        let charge = (sigma_e - sigma_i) / (r * r);
        for j in 0..3 {
            w[U_E + j] = u_e[j];
            w[U_I + j] = u_i[j];
            w[FIELD + j] = C::new(T::zero(), -xi[j]) * charge;
        }
        Ok(Self { xi, w })
    }

    pub fn sigma_e(&self) -> C<T> {
        self.w[SIGMA_E]
    }

    pub fn sigma_i(&self) -> C<T> {
        self.w[SIGMA_I]
    }

    pub fn u_e(&self) -> [C<T>; 3] {
        std::array::from_fn(|j| self.w[U_E + j])
    }

    pub fn u_i(&self) -> [C<T>; 3] {
        std::array::from_fn(|j| self.w[U_I + j])
    }

    pub fn field(&self) -> [C<T>; 3] {
        std::array::from_fn(|j| self.w[FIELD + j])
    }

    /// Fluid part `w = (sigma_e, u_e, sigma_i, u_i)`.
    pub fn fluid(&self) -> [C<T>; FLUID_DIM] {
        std::array::from_fn(|j| self.w[j])
    }

    pub fn norm_sq(&self) -> T {
        self.w.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// `(|xi x E|, |i xi . E - (sigma_e - sigma_i)|)`.
    pub fn constraint_residuals(&self) -> (T, T) {
        let e = self.field();
        let x = &self.xi;
        let cross = [
            e[2] * x[1] - e[1] * x[2],
            e[0] * x[2] - e[2] * x[0],
            e[1] * x[0] - e[0] * x[1],
        ];
        let curl = cross.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        let div = (0..3).fold(czero::<T>(), |acc, j| acc + C::new(T::zero(), x[j]) * e[j]);
        (curl, (div - (self.sigma_e() - self.sigma_i())).norm())
    }

    /// Residuals relative to `|xi| |w|`.
    pub fn constraint_residual(&self) -> T {
        let (curl, div) = self.constraint_residuals();
        let r = norm3(&self.xi);
        let scale = (r * self.norm()).max(self.norm()).max(T::min_positive_value());
        curl.max(div) / scale
    }

    pub fn is_constrained(&self) -> bool {
        let r = self.constraint_residual();
        r <= lit(CONSTRAINT_TOL) || self.norm_sq() == T::zero()
    }
}

/// Flux matrices `A_j(0)`, `j = 1, 2, 3`, and the relaxation matrix `L = diag(0, I, 0, I)`.
pub fn flux_matrices<T: Scalar>() -> ([Mat8<T>; 3], Mat8<T>) {
    let mut a = [[[T::zero(); FLUID_DIM]; FLUID_DIM]; 3];
    for (j, aj) in a.iter_mut().enumerate() {
        for base in [0usize, 4] {
            aj[base][base + 1 + j] = T::one();
            aj[base + 1 + j][base] = T::one();
        }
    }
    let mut l = [[T::zero(); FLUID_DIM]; FLUID_DIM];
    for base in [0usize, 4] {
        for j in 1..4 {
            l[base + j][base + j] = T::one();
        }
    }
    (a, l)
}

/// Skew-symmetric compensator `K(xi)`: `n` in the density row, `-n` in the density column,
/// `n = xi / |xi|`, for each species.
pub fn compensator<T: Scalar>(xi: &[T; 3]) -> Result<Mat8<T>, ModelError> {
    let r = nonzero(xi)?;
    let mut k = [[T::zero(); FLUID_DIM]; FLUID_DIM];
    for base in [0usize, 4] {
        for j in 0..3 {
            let n = xi[j] / r;
            k[base][base + 1 + j] = n;
            k[base + 1 + j][base] = -n;
        }
    }
    Ok(k)
}

fn mat8_mul<T: Scalar>(a: &Mat8<T>, b: &Mat8<T>) -> Mat8<T> {
    let mut out = [[T::zero(); FLUID_DIM]; FLUID_DIM];
    for i in 0..FLUID_DIM {
        for k in 0..FLUID_DIM {
            for j in 0..FLUID_DIM {
                out[i][j] = out[i][j] + a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// `sum_j xi_j A_j(0)`.
pub fn flux_symbol<T: Scalar>(xi: &[T; 3]) -> Mat8<T> {
    let (a, _) = flux_matrices::<T>();
    let mut out = [[T::zero(); FLUID_DIM]; FLUID_DIM];
    for (j, aj) in a.iter().enumerate() {
        for r in 0..FLUID_DIM {
            for c in 0..FLUID_DIM {
                out[r][c] = out[r][c] + xi[j] * aj[r][c];
            }
        }
    }
    out
}

/// Frobenius norm of `K(xi) sum_j xi_j A_j(0) - blockdiag(|xi|, -xi xi^T/|xi|, |xi|, -xi xi^T/|xi|)`.
pub fn compensator_residual<T: Scalar>(xi: &[T; 3]) -> Result<T, ModelError> {
    let r = nonzero(xi)?;
    let prod = mat8_mul(&compensator(xi)?, &flux_symbol(xi));
    let mut target = [[T::zero(); FLUID_DIM]; FLUID_DIM];
    for base in [0usize, 4] {
        target[base][base] = r;
        for i in 0..3 {
            for j in 0..3 {
                target[base + 1 + i][base + 1 + j] = -xi[i] * xi[j] / r;
            }
        }
    }
    let mut s = T::zero();
    for i in 0..FLUID_DIM {
        for j in 0..FLUID_DIM {
            let d = prod[i][j] - target[i][j];
            s = s + d * d;
        }
    }
    Ok(s.sqrt())
}

/// Symbol `A(xi)` of the linearized operator, `d/dt w = -A(xi) w`.
pub fn symbol_matrix<T: Scalar>(xi: &[T; 3]) -> Result<CMatrix<T>, ModelError> {
    let r = nonzero(xi)?;
    let mut a = CMatrix::zeros(STATE_DIM);
    let one = C::new(T::one(), T::zero());
    for (sig, vel, sign) in [(SIGMA_E, U_E, -T::one()), (SIGMA_I, U_I, T::one())] {
        for j in 0..3 {
            let ixi = C::new(T::zero(), xi[j]);
            a[(sig, vel + j)] = ixi;
            a[(vel + j, sig)] = ixi;
            a[(vel + j, vel + j)] = one;
            a[(vel + j, FIELD + j)] = one * sign;
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let p = xi[i] * xi[j] / (r * r);
            a[(FIELD + i, U_E + j)] = C::new(p, T::zero());
            a[(FIELD + i, U_I + j)] = C::new(-p, T::zero());
        }
    }
    Ok(a)
}

/// `-A(xi) w`.
pub fn vector_field<T: Scalar>(w: &SpectralVector<T>) -> Result<[C<T>; STATE_DIM], ModelError> {
    let a = symbol_matrix(&w.xi)?;
    let v = a.matvec(&w.w);
    Ok(std::array::from_fn(|i| -v[i]))
}

fn k_form<T: Scalar>(k: &Mat8<T>, a: &[C<T>], b: &[C<T>]) -> C<T> {
    // b^H K a
    let mut s = czero::<T>();
    for i in 0..FLUID_DIM {
        for j in 0..FLUID_DIM {
            if k[i][j] != T::zero() {
                s = s + b[i].conj() * a[j] * k[i][j];
            }
        }
    }
    s
}

/// Modified energy `1/2 |w~|^2 + kappa/2 Im< c K w, w >`, `c = |xi|/(1+|xi|^2)`.
pub fn lyapunov<T: Scalar>(w: &SpectralVector<T>, kappa: T) -> Result<T, ModelError> {
    let r = nonzero(&w.xi)?;
    let k = compensator(&w.xi)?;
    let c = r / (T::one() + r * r);
    let fluid = w.fluid();
    let half: T = lit(0.5);
    Ok(half * w.norm_sq() + half * kappa * c * k_form(&k, &fluid, &fluid).im)
}

/// Outcome of [`lyapunov_decrement_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decrement<T> {
    /// `d/dt` of the modified energy along the linear flow.
    pub decrement: T,
    /// `kappa |xi|^2/(2(1+|xi|^2)) |w|^2 + kappa/(1+|xi|^2) |xi . E|^2`.
    pub dissipation: T,
    pub pass: bool,
}

/// Evaluates the Lyapunov decrement algebraically and checks
/// `d/dt E + dissipation <= 1e-10 |w~|^2`.
pub fn lyapunov_decrement_check<T: Scalar>(w: &SpectralVector<T>, kappa: T) -> Result<Decrement<T>, SolverError> {
    if !w.is_constrained() {
        return Err(SolverError::Precondition(format!(
            "spectral vector violates the field constraint (residual {:.3e})",
            to_f64(w.constraint_residual())
        )));
    }
    let r = nonzero(&w.xi)?;
    let k = compensator(&w.xi)?;
    let dw = vector_field(w)?;
    let c = r / (T::one() + r * r);
    let half: T = lit(0.5);
    let base: T = w.w.iter().zip(&dw).map(|(a, b)| (b * a.conj()).re).sum();
    let fluid = w.fluid();
    let dfluid: [C<T>; FLUID_DIM] = std::array::from_fn(|i| dw[i]);
    let corr = (k_form(&k, &fluid, &dfluid) + k_form(&k, &dfluid, &fluid)).im;
    let decrement = base + half * kappa * c * corr;
    let fluid_sq: T = fluid.iter().map(|z| z.norm_sqr()).sum();
    let e = w.field();
    let xi_e = (0..3).fold(czero::<T>(), |acc, j| acc + e[j] * w.xi[j]).norm_sqr();
    let denom = T::one() + r * r;
    let dissipation = kappa * r * r / (lit::<T>(2.0) * denom) * fluid_sq + kappa / denom * xi_e;
    let pass = decrement + dissipation <= lit::<T>(1e-10) * w.norm_sq();
    Ok(Decrement { decrement, dissipation, pass })
}

/// Real `4 x 4` generator of the parallel dynamics restricted to the constraint,
/// in variables `(sigma_e, v_e, sigma_i, v_i)` with `u_parallel = i v`.
pub fn constrained_parallel_generator(r: f64) -> nalgebra::Matrix4<f64> {
    let ir = 1.0 / r;
    nalgebra::Matrix4::new(
        0.0, r, 0.0, 0.0, //
        -r - ir, -1.0, ir, 0.0, //
        0.0, 0.0, 0.0, r, //
        ir, 0.0, -r - ir, -1.0,
    )
}

/// `5 x 5` block of `-A(r e_1)` on `(sigma_e, u_e1, sigma_i, u_i1, E_1)`.
pub fn parallel_block<T: Scalar>(r: T) -> Result<CMatrix<T>, ModelError> {
    let a = symbol_matrix(&[r, T::zero(), T::zero()])?;
    let idx = [SIGMA_E, U_E, SIGMA_I, U_I, FIELD];
    Ok(CMatrix::from_fn(5, |i, j| -a[(idx[i], idx[j])]))
}

/// Eigenvalues of the constrained parallel dynamics (generator of `d/dt`).
pub fn constrained_parallel_eigenvalues(r: f64) -> Vec<Complex<f64>> {
    constrained_parallel_generator(r).complex_eigenvalues().iter().copied().collect()
}

/// Minimum decay rate `-Re lambda` of the linear flow on the constraint subspace at `|xi| = r`:
/// the four parallel eigenvalues left after quotienting the conserved constraint functional,
/// and the transverse velocity rate 1.
pub fn constrained_decay_exponent<T: Scalar>(r: T) -> Result<T, ModelError> {
    let rf = to_f64(r);
    if !(rf > 0.0) || !rf.is_finite() {
        return Err(ModelError::NonPositiveRadius(rf));
    }
    let parallel = constrained_parallel_eigenvalues(rf).iter().map(|l| -l.re).fold(f64::INFINITY, f64::min);
    Ok(lit(parallel.min(1.0)))
}

/// `e^{-A(xi) t} w0`.
pub fn propagate<T: Scalar>(w0: &SpectralVector<T>, t: T) -> Result<SpectralVector<T>, ModelError> {
    let m = propagator(&w0.xi, t)?;
    let v = m.matvec(&w0.w);
    Ok(SpectralVector { xi: w0.xi, w: std::array::from_fn(|i| v[i]) })
}

/// `e^{-A(xi) t}`.
pub fn propagator<T: Scalar>(xi: &[T; 3], t: T) -> Result<CMatrix<T>, ModelError> {
    if t == T::zero() {
        nonzero(xi)?;
        return Ok(CMatrix::identity(STATE_DIM));
    }
    Ok(symbol_matrix(xi)?.scale_real(-t).expm())
}

/// Eigenvalues of `A(xi)` by shifted complex QR.
pub fn symbol_eigenvalues<T: Scalar>(xi: &[T; 3]) -> Result<Vec<Complex<f64>>, ModelError> {
    symbol_matrix(xi)?
        .eigenvalues()
        .ok_or_else(|| ModelError::InvalidGrid("QR eigenvalue iteration did not converge".into()))
}

/// Orthonormal basis (columns) of the constraint subspace at `xi`, as an `11 x 8` matrix.
pub fn constraint_basis(xi: &[f64; 3]) -> Result<nalgebra::DMatrix<Complex<f64>>, ModelError> {
    let r = nonzero(xi)?;
    let n = [xi[0] / r, xi[1] / r, xi[2] / r];
    // two unit vectors orthogonal to n
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = n[0] * helper[0] + n[1] * helper[1] + n[2] * helper[2];
    let mut t1 = [helper[0] - dot * n[0], helper[1] - dot * n[1], helper[2] - dot * n[2]];
    let t1n = norm3(&t1);
    t1.iter_mut().for_each(|x| *x /= t1n);
    let t2 = [n[1] * t1[2] - n[2] * t1[1], n[2] * t1[0] - n[0] * t1[2], n[0] * t1[1] - n[1] * t1[0]];
    let z = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let mut cols: Vec<[Complex<f64>; STATE_DIM]> = Vec::new();
    for (sig, sign) in [(SIGMA_E, 1.0), (SIGMA_I, -1.0)] {
        let mut v = [z; STATE_DIM];
        v[sig] = one;
        for j in 0..3 {
            v[FIELD + j] = Complex::new(0.0, -sign * n[j] / r);
        }
        cols.push(v);
    }
    for vel in [U_E, U_I] {
        for dir in [n, t1, t2] {
            let mut v = [z; STATE_DIM];
            for j in 0..3 {
                v[vel + j] = Complex::new(dir[j], 0.0);
            }
            cols.push(v);
        }
    }
    let raw = nalgebra::DMatrix::from_fn(STATE_DIM, cols.len(), |i, j| cols[j][i]);
    Ok(raw.qr().q())
}

/// Operator 2-norm of `e^{-A(xi) t}` restricted to the constraint subspace.
pub fn constrained_propagator_norm(xi: &[f64; 3], t: f64) -> Result<f64, ModelError> {
    let m = propagator(xi, t)?.to_nalgebra();
    let b = constraint_basis(xi)?;
    let prod = m * b;
    Ok(prod.singular_values().max())
}

/// Dissipation profile `|xi|^2 / (1 + |xi|^2)`.
pub fn dissipation_profile(r: f64) -> f64 {
    r * r / (1.0 + r * r)
}

/// Random frequency with log-uniform magnitude in `[r_lo, r_hi]` and uniform direction.
pub fn random_frequency<R: Rng + ?Sized>(rng: &mut R, r_lo: f64, r_hi: f64) -> [f64; 3] {
    let mag = (rng.gen_range(r_lo.ln()..=r_hi.ln())).exp();
    loop {
        let (a, b) = normal_pair(rng);
        let (c, _) = normal_pair(rng);
        let n = (a * a + b * b + c * c).sqrt();
        if n > 1e-8 {
            return [mag * a / n, mag * b / n, mag * c / n];
        }
    }
}

fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    let (a, b) = normal_pair(rng);
    Complex::new(a, b)
}

/// Random constrained state at a random frequency.
pub fn random_constrained<R: Rng + ?Sized>(rng: &mut R, r_lo: f64, r_hi: f64) -> SpectralVector<f64> {
    let xi = random_frequency(rng, r_lo, r_hi);
    let se = random_complex(rng);
    let si = random_complex(rng);
    let ue = std::array::from_fn(|_| random_complex(rng));
    let ui = std::array::from_fn(|_| random_complex(rng));
    SpectralVector::constrained(xi, se, ue, si, ui).expect("nonzero frequency")
}

/// Random state with an irrotational but otherwise unconstrained field `E || xi`.
pub fn random_irrotational<R: Rng + ?Sized>(rng: &mut R, r_lo: f64, r_hi: f64) -> SpectralVector<f64> {
    let xi = random_frequency(rng, r_lo, r_hi);
    let r = norm3(&xi);
    let mut w: [Complex<f64>; STATE_DIM] = std::array::from_fn(|_| random_complex(rng));
    let amp = random_complex(rng);
    for j in 0..3 {
        w[FIELD + j] = amp * (xi[j] / r);
    }
    SpectralVector::new(xi, w)
}

/// `Re< w, -A w > + |u_e|^2 + |u_i|^2`, relative to `|w|^2`.
pub fn energy_identity_residual<T: Scalar>(w: &SpectralVector<T>) -> Result<T, ModelError> {
    let dw = vector_field(w)?;
    let pairing: T = w.w.iter().zip(&dw).map(|(a, b)| (b * a.conj()).re).sum();
    let damp: T = (0..3).map(|j| w.w[U_E + j].norm_sqr() + w.w[U_I + j].norm_sqr()).sum();
    Ok((pairing + damp).abs() / w.norm_sq().max(T::min_positive_value()))
}
