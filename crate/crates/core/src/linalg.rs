//! Dense complex matrices, Hermitian eigendecomposition and the
//! quantum-information functionals built on top of them.
//!
//! Matrices are stored row-major in the computational (tensor-product) basis
//! `|0…0⟩, |0…1⟩, …`, qubit 1 being the most significant bit of the index.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Absolute tolerance used by the physicality checks.
pub const PHYSICAL_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; `data.len()` must be a square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = isqrt(data.len()).ok_or(Error::InvalidParameter("entry count is not a square"))?;
        Ok(Self { dim, data })
    }

    /// `|ψ⟩⟨ψ|` for an arbitrary (not necessarily normalized) vector.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |r, c| v[r] * v[c].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self · rhs†` without materializing the adjoint.
    pub fn matmul_adjoint(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        Self::from_fn(n, |r, c| {
            let a = &self.data[r * n..(r + 1) * n];
            let b = &rhs.data[c * n..(c + 1) * n];
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
        })
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self += s · rhs`
    pub fn add_scaled(&mut self, rhs: &Self, s: f64) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim);
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |m_ij − conj(m_ji)|`
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    /// Replaces the matrix by its Hermitian part `(m + m†)/2`.
    pub fn hermitize(&mut self) {
        let n = self.dim;
        for r in 0..n {
            let d = self.data[r * n + r];
            self.data[r * n + r] = C64::new(d.re, 0.0);
            for c in r + 1..n {
                let avg = (self.data[r * n + c] + self.data[c * n + r].conj()) * 0.5;
                self.data[r * n + c] = avg;
                self.data[c * n + r] = avg.conj();
            }
        }
    }

    /// `⟨v|m|v⟩`, real part only (exact for Hermitian `m`).
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        let n = self.dim;
        debug_assert_eq!(v.len(), n);
        let mut acc = ZERO;
        for r in 0..n {
            let row = &self.data[r * n..(r + 1) * n];
            let mv: C64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += v[r].conj() * mv;
        }
        acc.re
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|r| self.data[r * n..(r + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

pub(crate) fn isqrt(n: usize) -> Option<usize> {
    let r = libm::sqrt(n as f64) as usize;
    (r.saturating_sub(1)..=r + 1).find(|x| x * x == n)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    /// `V · diag(f(λ)) · V†`
    pub fn reconstruct(&self, mut f: impl FnMut(f64) -> f64) -> CMatrix {
        let n = self.vectors.dim();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = CMatrix::from_fn(n, |r, c| {
            (0..n).map(|k| v[(r, k)] * v[(c, k)].conj() * fv[k]).sum()
        });
        out.hermitize();
        out
    }
}

/// Cyclic complex Jacobi eigensolver. Only the Hermitian part of `m` is used.
pub fn eigh(m: &CMatrix) -> Eigh {
    let n = m.dim();
    let mut a = m.clone();
    a.hermitize();
    let mut v = CMatrix::identity(n);

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if libm::sqrt(off) <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = libm::copysign(1.0, theta) / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // R = [[c, s], [-s·conj(e), c·conj(e)]] on the (p, q) plane; A ← R†AR.
                let rpp = C64::new(c, 0.0);
                let rpq = C64::new(s, 0.0);
                let rqp = -phase.conj() * s;
                let rqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * rpp + akq * rqp;
                    a[(k, q)] = akp * rpq + akq * rqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = rpp.conj() * apk + rqp.conj() * aqk;
                    a[(q, k)] = rpq.conj() * apk + rqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * rpp + vkq * rqp;
                    v[(k, q)] = vkp * rpq + vkq * rqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Eigh { values, vectors }
}

/// Householder QR. Returns `(Q, R)` with `Q` unitary and `R` upper triangular.
pub fn qr(m: &CMatrix) -> (CMatrix, CMatrix) {
    let n = m.dim();
    let mut r = m.clone();
    let mut q = CMatrix::identity(n);
    let mut v = vec![ZERO; n];
    for k in 0..n.saturating_sub(1) {
        let norm_x = libm::sqrt((k..n).map(|i| r[(i, k)].norm_sqr()).sum());
        if norm_x == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm_x;
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm = libm::sqrt((k..n).map(|i| v[i].norm_sqr()).sum());
        if vnorm == 0.0 {
            continue;
        }
        for vi in &mut v[k..n] {
            *vi /= vnorm;
        }
        // R ← (I − 2vv†) R
        for c in k..n {
            let dot: C64 = (k..n).map(|i| v[i].conj() * r[(i, c)]).sum();
            for i in k..n {
                r[(i, c)] -= v[i] * dot * 2.0;
            }
        }
        // Q ← Q (I − 2vv†)
        for row in 0..n {
            let dot: C64 = (k..n).map(|i| q[(row, i)] * v[i]).sum();
            for i in k..n {
                q[(row, i)] -= dot * v[i].conj() * 2.0;
            }
        }
        for i in k + 1..n {
            r[(i, k)] = ZERO;
        }
    }
    (q, r)
}

/// `|Tr√(√a · b · √a)|²` for two PSD operators of the same dimension.
fn fidelity_raw(a: &CMatrix, b: &CMatrix) -> f64 {
    let sa = eigh(a).reconstruct(|l| libm::sqrt(l.max(0.0)));
    let mut m = sa.matmul(b).matmul(&sa);
    m.hermitize();
    let root_trace: f64 = eigh(&m).values.iter().map(|&l| libm::sqrt(l.max(0.0))).sum();
    (root_trace * root_trace).clamp(0.0, 1.0)
}

/// A validated density matrix: Hermitian, unit trace and positive semidefinite
/// to within [`PHYSICAL_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates `m` against the physicality invariants.
    pub fn new(m: CMatrix) -> Result<Self> {
        validate_physical(&m)?;
        let mut m = m;
        m.hermitize();
        Ok(Self(m))
    }

    /// Wraps a matrix that is physical by construction (convex combinations,
    /// `XX†/Tr`, …). Only the Hermitian part is kept.
    pub fn new_unchecked(mut m: CMatrix) -> Self {
        m.hermitize();
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// Diagonal state; `probs` must be a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(CMatrix::from_diag(probs))
    }

    pub fn pure(psi: &StateVector) -> Self {
        Self::new_unchecked(CMatrix::outer(psi.amplitudes()))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Born probability `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> f64 {
        self.0.quadratic_form(psi.amplitudes())
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

fn validate_physical(m: &CMatrix) -> Result<()> {
    if m.dim() == 0 {
        return Err(Error::Empty("zero-dimensional matrix"));
    }
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let dev = m.hermitian_deviation();
    if dev > PHYSICAL_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let tr = m.trace().re;
    if (tr - 1.0).abs() > PHYSICAL_TOL {
        return Err(Error::BadTrace(tr));
    }
    let min = eigh(m).values[0];
    if min < -PHYSICAL_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(())
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<C64>);

impl StateVector {
    /// Accepts amplitudes whose 2-norm is 1 within `1e-12`.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if amplitudes.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self(amplitudes))
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if amplitudes.is_empty() {
            return Err(Error::Empty("state vector"));
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self(amplitudes))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[index] = ONE;
        Self(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        Self(out)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::pure(self)
    }
}

fn vec_norm(v: &[C64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, found: b });
    }
    Ok(())
}

/// Uhlmann fidelity `|Tr√(√a · b · √a)|²`, in `[0, 1]`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(fidelity_raw(a.matrix(), b.matrix()))
}

/// `Tr ρ²`
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// `½ Σ|λ_i(a − b)|`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a.dim(), b.dim())?;
    let diff = a.matrix().sub(b.matrix());
    Ok(0.5 * eigh(&diff).values.iter().map(|l| l.abs()).sum::<f64>())
}

/// Projects a (nearly) Hermitian matrix onto the density matrices: negative
/// eigenvalues are clamped to zero and the trace renormalized to one.
pub fn psd_project(m: &CMatrix) -> Result<DensityMatrix> {
    if m.dim() == 0 {
        return Err(Error::Empty("zero-dimensional matrix"));
    }
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = m.frobenius_norm().max(1.0);
    let dev = m.hermitian_deviation();
    if dev > 1e-6 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let eig = eigh(m);
    let total: f64 = eig.values.iter().map(|&l| l.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate);
    }
    Ok(DensityMatrix::new_unchecked(eig.reconstruct(|l| l.max(0.0) / total)))
}

/// Hermitian square root of a positive semidefinite matrix (any trace).
pub fn matrix_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let scale = m.frobenius_norm().max(1.0);
    let dev = m.hermitian_deviation();
    if dev > PHYSICAL_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let eig = eigh(m);
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -PHYSICAL_TOL * scale {
        return Err(Error::NotPositive(min));
    }
    Ok(eig.reconstruct(|l| libm::sqrt(l.max(0.0))))
}

/// Arithmetic mean of density matrices. The result is physical by convexity.
pub fn mean_state<'a>(states: impl IntoIterator<Item = &'a DensityMatrix>) -> Result<DensityMatrix> {
    let mut iter = states.into_iter();
    let first = iter.next().ok_or(Error::Empty("no states to average"))?;
    let mut acc = first.matrix().clone();
    let mut n = 1usize;
    for s in iter {
        check_same_dim(acc.dim(), s.dim())?;
        acc.add_scaled(s.matrix(), 1.0);
        n += 1;
    }
    Ok(DensityMatrix::new_unchecked(acc.scale(1.0 / n as f64)))
}
