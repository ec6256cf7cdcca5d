//! Small dense complex matrices with LU solves and the matrix exponential.

use num_complex::Complex;
use std::ops::{Index, IndexMut};

use crate::scalar::{lit, to_f64, Scalar};

type C<T> = Complex<T>;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }
}

fn czero<T: Scalar>() -> C<T> {
    C::new(T::zero(), T::zero())
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![czero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).fold(czero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect() }
    }

    /// `sum_k c_k M_k` for real coefficients.
    fn combination(terms: &[(T, &Self)], n: usize) -> Self {
        let mut out = Self::zeros(n);
        for (c, m) in terms {
            for (d, &a) in out.data.iter_mut().zip(&m.data) {
                *d = *d + a * *c;
            }
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| {
                a[x * n + col].norm().partial_cmp(&a[y * n + col].norm()).unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[piv * n + col].norm() == T::zero() {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                    b.swap(piv * n + j, col * n + j);
                }
            }
            let inv = C::new(T::one(), T::zero()) / a[col * n + col];
            for row in col + 1..n {
                let f = a[row * n + col] * inv;
                if f.re == T::zero() && f.im == T::zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[row * n + j] = a[row * n + j] - f * v;
                }
                for j in 0..n {
                    let v = b[col * n + j];
                    b[row * n + j] = b[row * n + j] - f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = C::new(T::one(), T::zero()) / a[col * n + col];
            for j in 0..n {
                let mut s = b[col * n + j];
                for k in col + 1..n {
                    s = s - a[col * n + k] * b[k * n + j];
                }
                b[col * n + j] = s * inv;
            }
        }
        Some(Self { n, data: b })
    }

    /// Matrix exponential by scaling and squaring with the degree-13 Pade approximant.
    pub fn expm(&self) -> Self {
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA13: f64 = 5.371920351148152;
        let n = self.n;
        let norm = to_f64(self.norm_one());
        let s = if norm > THETA13 { (norm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
        let a = self.scale_real(lit(0.5f64.powi(s)));
        let b = |i: usize| lit::<T>(B[i]);
        let id = Self::identity(n);
        let a2 = a.mul(&a);
        let a4 = a2.mul(&a2);
        let a6 = a4.mul(&a2);
        let inner_u = a6.mul(&Self::combination(&[(b(13), &a6), (b(11), &a4), (b(9), &a2)], n));
        let u = a.mul(&inner_u.add(&Self::combination(
            &[(b(7), &a6), (b(5), &a4), (b(3), &a2), (b(1), &id)],
            n,
        )));
        let inner_v = a6.mul(&Self::combination(&[(b(12), &a6), (b(10), &a4), (b(8), &a2)], n));
        let v = inner_v.add(&Self::combination(&[(b(6), &a6), (b(4), &a4), (b(2), &a2), (b(0), &id)], n));
        let mut r = v.sub(&u).solve(&v.add(&u)).expect("Pade denominator is nonsingular");
        for _ in 0..s {
            r = r.mul(&r);
        }
        r
    }

    /// Eigenvalues by Householder reduction to Hessenberg form and shifted complex QR.
    pub fn eigenvalues(&self) -> Option<Vec<Complex<f64>>> {
        let n = self.n;
        let mut h: Vec<Vec<Complex<f64>>> = (0..n)
            .map(|i| (0..n).map(|j| Complex::new(to_f64(self[(i, j)].re), to_f64(self[(i, j)].im))).collect())
            .collect();
        hessenberg(&mut h);
        let zero = Complex::new(0.0, 0.0);
        let mut out = Vec::with_capacity(n);
        let mut hi = n;
        let mut iter = 0usize;
        while hi > 0 {
            let top = hi - 1;
            let mut l = top;
            while l > 0 {
                let scale = h[l - 1][l - 1].norm() + h[l][l].norm();
                if h[l][l - 1].norm() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                    h[l][l - 1] = zero;
                    break;
                }
                l -= 1;
            }
            if l == top {
                out.push(h[top][top]);
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            if iter > 300 {
                return None;
            }
            let mu = if iter.is_multiple_of(11) {
                h[top][top] + Complex::new(h[top][top - 1].norm() * 0.75, 0.0)
            } else {
                wilkinson(h[top - 1][top - 1], h[top - 1][top], h[top][top - 1], h[top][top])
            };
            for k in l..=top {
                h[k][k] -= mu;
            }
            let mut rots = Vec::with_capacity(top - l);
            for k in l..top {
                let (a, b) = (h[k][k], h[k + 1][k]);
                let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
                let (c, s) = if r == 0.0 { (Complex::new(1.0, 0.0), zero) } else { (a / r, b / r) };
                for j in k..=top {
                    let (x, y) = (h[k][j], h[k + 1][j]);
                    h[k][j] = c.conj() * x + s.conj() * y;
                    h[k + 1][j] = -s * x + c * y;
                }
                rots.push((c, s));
            }
            for (off, (c, s)) in rots.into_iter().enumerate() {
                let k = l + off;
                for i in l..=(k + 1).min(top) {
                    let (x, y) = (h[i][k], h[i][k + 1]);
                    h[i][k] = x * c + y * s;
                    h[i][k + 1] = -x * s.conj() + y * c.conj();
                }
            }
            for k in l..=top {
                h[k][k] += mu;
            }
        }
        Some(out)
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<Complex<f64>> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| {
            let z = self[(i, j)];
            Complex::new(to_f64(z.re), to_f64(z.im))
        })
    }
}

fn hessenberg(h: &mut [Vec<Complex<f64>>]) {
    let n = h.len();
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| h[i][k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[k + 1][k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex::new(1.0, 0.0) };
        let mut v: Vec<Complex<f64>> = (k + 1..n).map(|i| h[i][k]).collect();
        v[0] += phase * norm;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // H <- P H P with P = I - 2 v v^H acting on indices k+1..n
        for j in 0..n {
            let dot: Complex<f64> = v.iter().enumerate().map(|(a, vi)| vi.conj() * h[k + 1 + a][j]).sum();
            for (a, vi) in v.iter().enumerate() {
                h[k + 1 + a][j] -= *vi * dot * 2.0;
            }
        }
        for row in h.iter_mut() {
            let dot: Complex<f64> = v.iter().enumerate().map(|(a, vi)| row[k + 1 + a] * vi).sum();
            for (a, vi) in v.iter().enumerate() {
                row[k + 1 + a] -= dot * vi.conj() * 2.0;
            }
        }
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson(a: Complex<f64>, b: Complex<f64>, c: Complex<f64>, d: Complex<f64>) -> Complex<f64> {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let l1 = d + half + disc;
    let l2 = d + half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}
