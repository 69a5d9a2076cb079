//! Random-state ensembles: Ginibre matrices, Haar unitaries and pure states,
//! the Bures ensemble, Dirichlet vectors and the Dirichlet-weighted mixtures
//! (Mai–Alquier and the estimate-biased mixture).
//!
//! Complex standard normals follow the `(a + ib)/√2` convention, so every
//! Ginibre entry has `E|g|² = 1`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{qr, CMatrix, DensityMatrix, StateVector, C64};

/// One complex standard normal `(a + ib)/√2`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `D×D` matrix of i.i.d. complex standard normals, filled row-major.
pub fn sample_ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, |_, _| complex_normal(rng))
}

/// Turns a Ginibre matrix into a Haar unitary: QR, then each column of `Q`
/// multiplied by the phase of the matching diagonal entry of `R`.
pub fn haar_from_ginibre(g: &CMatrix) -> CMatrix {
    let (mut q, r) = qr(g);
    let n = g.dim();
    for c in 0..n {
        let d = r[(c, c)];
        let mag = d.norm();
        if mag == 0.0 {
            continue;
        }
        let phase = d / mag;
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn sample_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    haar_from_ginibre(&sample_ginibre(dim, rng))
}

/// Haar-random pure state: a normalized complex Gaussian vector.
pub fn sample_haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
        if let Ok(s) = StateVector::normalized(v) {
            return s;
        }
    }
}

/// `(1+U) G G† (1+U†) / Tr[…]`.
pub fn bures_from_parts(g: &CMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    if g.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: u.dim(),
        });
    }
    let mut a = u.clone();
    for i in 0..a.dim() {
        a[(i, i)] += C64::new(1.0, 0.0);
    }
    let x = a.matmul(g);
    let m = x.matmul_adjoint(&x);
    let tr = m.trace().re;
    if !(tr > 0.0 && tr.is_finite()) {
        return Err(Error::Degenerate);
    }
    Ok(DensityMatrix::new_unchecked(m.scale(1.0 / tr)))
}

/// Bures-distributed density matrix. `G` is drawn before the Ginibre matrix
/// that produces `U`.
pub fn sample_bures<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    loop {
        let g = sample_ginibre(dim, rng);
        let u = sample_haar_unitary(dim, rng);
        if let Ok(rho) = bures_from_parts(&g, &u) {
            return rho;
        }
    }
}

/// Dirichlet concentration parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidDirichlet("need at least two components"));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidDirichlet("concentrations must be finite and non-negative"));
        }
        if alpha.iter().all(|&a| a == 0.0) {
            return Err(Error::InvalidDirichlet("all concentrations are zero"));
        }
        Ok(Self { alpha })
    }

    pub fn symmetric(k: usize, alpha: f64) -> Result<Self> {
        Self::new(alloc::vec![alpha; k])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Dirichlet with `α = (α_a, α_b, …, α_b)` described by the bias ratio
/// `μ = α_a/α_b` and the total concentration `α₀ = α_a + (K−1)α_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasedDirichletSpec {
    k: usize,
    mu: f64,
    alpha0: f64,
}

impl BiasedDirichletSpec {
    pub fn new(k: usize, mu: f64, alpha0: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("K must be at least 2"));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter("mu must be positive"));
        }
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(Error::InvalidParameter("alpha0 must be positive"));
        }
        Ok(Self { k, mu, alpha0 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// `E(x₁) = μ/(K+μ−1)`
    pub fn mean_first(&self) -> f64 {
        self.mu / (self.k as f64 + self.mu - 1.0)
    }

    /// `var(x₁) = μ(K−1)/((α₀+1)(μ+K−1)²)`
    pub fn var_first(&self) -> f64 {
        let k = self.k as f64;
        let s = self.mu + k - 1.0;
        self.mu * (k - 1.0) / ((self.alpha0 + 1.0) * s * s)
    }
}

/// `α_b = α₀/(μ+K−1)`, `α_a = μ α_b`.
pub fn resolve_biased_alphas(spec: &BiasedDirichletSpec) -> DirichletParams {
    let alpha_b = spec.alpha0 / (spec.mu + spec.k as f64 - 1.0);
    let mut alpha = alloc::vec![alpha_b; spec.k];
    alpha[0] = spec.mu * alpha_b;
    DirichletParams { alpha }
}

/// `ln X` for `X ~ Gamma(shape, 1)`. Shapes below one use
/// `X = Y·U^{1/shape}` with `Y ~ Gamma(shape + 1)`, evaluated in log space so
/// tiny shapes cannot underflow the whole vector.
fn ln_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape == 0.0 {
        return f64::NEG_INFINITY;
    }
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("positive shape");
        return libm::log(g.sample(rng));
    }
    let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape");
    let y: f64 = g.sample(rng);
    let u: f64 = rng.random::<f64>();
    // random() is in [0, 1); 1 − u avoids ln 0
    libm::log(y) + libm::log(1.0 - u) / shape
}

/// Normalizes `exp(ln_y)` onto the simplex.
pub(crate) fn simplex_from_logs(ln_y: &[f64]) -> Vec<f64> {
    let max = ln_y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = ln_y.iter().map(|&t| libm::exp(t - max)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Dirichlet vector by gamma normalization.
pub fn sample_dirichlet<R: Rng + ?Sized>(p: &DirichletParams, rng: &mut R) -> Vec<f64> {
    let ln_y: Vec<f64> = p.alpha.iter().map(|&a| ln_gamma_draw(a, rng)).collect();
    simplex_from_logs(&ln_y)
}

/// `Σ w_i |ψ_i⟩⟨ψ_i|` plus an optional fixed leading component.
pub(crate) fn mixture(dim: usize, lead: Option<(f64, &DensityMatrix)>, terms: &[(f64, &StateVector)]) -> DensityMatrix {
    let mut acc = CMatrix::zeros(dim);
    if let Some((w, rho)) = lead {
        acc.add_scaled(rho.matrix(), w);
    }
    for &(w, psi) in terms {
        let a = psi.amplitudes();
        for r in 0..dim {
            let ar = a[r] * w;
            for c in 0..dim {
                acc[(r, c)] += ar * a[c].conj();
            }
        }
    }
    DensityMatrix::new_unchecked(acc)
}

/// Mai–Alquier state: `Σ x_i |ψ_i⟩⟨ψ_i|` with `x ~ Dir(α, …, α)` and Haar
/// pure `ψ_i`.
pub fn sample_ma<R: Rng + ?Sized>(dim: usize, k: usize, alpha: f64, rng: &mut R) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter("alpha must be positive"));
    }
    if k == 1 {
        return Ok(sample_haar_state(dim, rng).projector());
    }
    let x = sample_dirichlet(&DirichletParams::symmetric(k, alpha)?, rng);
    let states: Vec<StateVector> = (0..k).map(|_| sample_haar_state(dim, rng)).collect();
    let terms: Vec<(f64, &StateVector)> = x.iter().copied().zip(&states).collect();
    Ok(mixture(dim, None, &terms))
}

/// `x₁ ρ_ML + Σ_{i≥2} x_i |ψ_i⟩⟨ψ_i|` with `x ~ Dir(resolve_biased_alphas(spec))`.
pub fn sample_ml_biased<R: Rng + ?Sized>(
    rho_ml: &DensityMatrix,
    spec: &BiasedDirichletSpec,
    rng: &mut R,
) -> DensityMatrix {
    let dim = rho_ml.dim();
    let x = sample_dirichlet(&resolve_biased_alphas(spec), rng);
    let states: Vec<StateVector> = (1..spec.k).map(|_| sample_haar_state(dim, rng)).collect();
    let terms: Vec<(f64, &StateVector)> = x[1..].iter().copied().zip(&states).collect();
    mixture(dim, Some((x[0], rho_ml)), &terms)
}

/// Closed-form mean of the estimate-biased mixture:
/// `(μ ρ_ML + ((K−1)/D) I) / (K+μ−1)`.
pub fn ml_biased_mean(rho_ml: &DensityMatrix, spec: &BiasedDirichletSpec) -> DensityMatrix {
    let dim = rho_ml.dim();
    let k = spec.k as f64;
    let norm = k + spec.mu - 1.0;
    let mut m = rho_ml.matrix().scale(spec.mu / norm);
    m.add_scaled(&CMatrix::identity(dim), (k - 1.0) / (dim as f64 * norm));
    DensityMatrix::new_unchecked(m)
}

/// Mean purity of the symmetric Mai–Alquier ensemble,
/// `(D + α(D+K−1)) / (D(1+αK))`.
pub fn ma_mean_purity(dim: usize, k: usize, alpha: f64) -> f64 {
    let (d, k) = (dim as f64, k as f64);
    (d + alpha * (d + k - 1.0)) / (d * (1.0 + alpha * k))
}
