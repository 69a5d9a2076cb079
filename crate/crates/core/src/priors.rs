//! Priors written as deterministic maps `w ↦ ρ(w)` from a parameter vector
//! whose reference measure is i.i.d. standard normal, which is what the pCN
//! proposal requires.
//!
//! Layouts (all reals; complex entries stored as `(re, im)` pairs, scaled by
//! `1/√2` to give complex standard normals):
//!
//! * Bures: `4D²` values. The first `2D²` fill `G` row-major, the rest fill a
//!   second Ginibre matrix that is turned into the Haar unitary `U`.
//! * Estimate-biased: `K + 2D(K−1)` values. `K` gamma drivers followed by the
//!   `K−1` complex vectors `z₂ … z_K`.
//! * Mai–Alquier: `K + 2DK` values. `K` gamma drivers followed by `K` complex
//!   vectors.
//!
//! A gamma driver `v` becomes `y = G⁻¹_α(Φ(v))`; the normalized `y` is then
//! Dirichlet(α) and each normalized `z` is a Haar pure state.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ensembles::{bures_from_parts, haar_from_ginibre, mixture, resolve_biased_alphas, simplex_from_logs};
use crate::ensembles::{BiasedDirichletSpec, DirichletParams};
use crate::error::{Error, Result};
use crate::linalg::{psd_project, CMatrix, DensityMatrix, StateVector, C64};
use crate::special::ln_gamma_quantile_normal;

/// Point in parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    /// Draw from the reference measure.
    pub fn standard_normal<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| StandardNormal.sample(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PriorKind {
    Bures,
    MlBiased {
        rho_ml: DensityMatrix,
        spec: BiasedDirichletSpec,
        alphas: DirichletParams,
    },
    Ma {
        k: usize,
        alpha: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorModel {
    dim: usize,
    kind: PriorKind,
}

impl PriorModel {
    pub fn bures(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive"));
        }
        Ok(Self {
            dim,
            kind: PriorKind::Bures,
        })
    }

    /// Estimate-biased prior. `rho_ml` is passed through [`psd_project`];
    /// `k` defaults to `D + 1`.
    pub fn ml_biased(rho_ml: &CMatrix, mu: f64, alpha0: f64, k: Option<usize>) -> Result<Self> {
        let rho_ml = psd_project(rho_ml)?;
        let dim = rho_ml.dim();
        let spec = BiasedDirichletSpec::new(k.unwrap_or(dim + 1), mu, alpha0)?;
        Ok(Self {
            dim,
            kind: PriorKind::MlBiased {
                alphas: resolve_biased_alphas(&spec),
                rho_ml,
                spec,
            },
        })
    }

    pub fn ma(dim: usize, k: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive"));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be positive"));
        }
        Ok(Self {
            dim,
            kind: PriorKind::Ma { k, alpha },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PriorKind::Bures => "bures",
            PriorKind::MlBiased { .. } => "ml_biased",
            PriorKind::Ma { .. } => "ma",
        }
    }

    /// Length `N` of the parameter vector.
    pub fn param_count(&self) -> usize {
        let d = self.dim;
        match &self.kind {
            PriorKind::Bures => 4 * d * d,
            PriorKind::MlBiased { spec, .. } => spec.k() + 2 * d * (spec.k() - 1),
            PriorKind::Ma { k, .. } => k + 2 * d * k,
        }
    }

    pub fn sample_reference<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        ParamVector::standard_normal(self.param_count(), rng)
    }

    pub fn map(&self, w: &ParamVector) -> Result<DensityMatrix> {
        match &self.kind {
            PriorKind::Bures => map_bures(w, self.dim),
            PriorKind::MlBiased { .. } => map_ml_biased(w, self),
            PriorKind::Ma { .. } => map_ma(w, self),
        }
    }

    /// Prior mean where it is known in closed form.
    pub fn mean(&self) -> Option<DensityMatrix> {
        match &self.kind {
            PriorKind::Bures | PriorKind::Ma { .. } => Some(DensityMatrix::maximally_mixed(self.dim)),
            PriorKind::MlBiased { rho_ml, spec, .. } => Some(crate::ensembles::ml_biased_mean(rho_ml, spec)),
        }
    }
}

fn check_len(w: &ParamVector, expected: usize) -> Result<()> {
    if w.len() != expected {
        return Err(Error::ParamLength {
            expected,
            found: w.len(),
        });
    }
    Ok(())
}

fn complex_entries(vals: &[f64]) -> impl Iterator<Item = C64> + '_ {
    vals.chunks_exact(2)
        .map(|p| C64::new(p[0] * FRAC_1_SQRT_2, p[1] * FRAC_1_SQRT_2))
}

fn ginibre_from(vals: &[f64], dim: usize) -> CMatrix {
    let g = CMatrix::from_row_major(complex_entries(vals).collect()).expect("2D² reals form a D×D matrix");
    debug_assert_eq!(g.dim(), dim);
    g
}

/// Bures state from `4D²` reals.
pub fn map_bures(w: &ParamVector, dim: usize) -> Result<DensityMatrix> {
    let half = 2 * dim * dim;
    check_len(w, 2 * half)?;
    let g = ginibre_from(&w.0[..half], dim);
    let u = haar_from_ginibre(&ginibre_from(&w.0[half..], dim));
    bures_from_parts(&g, &u)
}

/// Dirichlet weights from normal drivers.
fn dirichlet_from_drivers(alphas: &[f64], drivers: &[f64]) -> Vec<f64> {
    let ln_y: Vec<f64> = alphas
        .iter()
        .zip(drivers)
        .map(|(&a, &v)| ln_gamma_quantile_normal(a, v))
        .collect();
    simplex_from_logs(&ln_y)
}

/// Normalized vector; a zero vector (measure zero) falls back to `|0⟩`.
fn pure_from(vals: &[f64], dim: usize) -> StateVector {
    StateVector::normalized(complex_entries(vals).collect()).unwrap_or_else(|_| StateVector::basis(dim, 0))
}

pub fn map_ml_biased(w: &ParamVector, model: &PriorModel) -> Result<DensityMatrix> {
    let PriorKind::MlBiased { rho_ml, spec, alphas } = &model.kind else {
        return Err(Error::InvalidParameter("model is not an estimate-biased prior"));
    };
    check_len(w, model.param_count())?;
    let (k, dim) = (spec.k(), model.dim);
    let x = dirichlet_from_drivers(alphas.alpha(), &w.0[..k]);
    let states: Vec<StateVector> = w.0[k..].chunks_exact(2 * dim).map(|z| pure_from(z, dim)).collect();
    let terms: Vec<(f64, &StateVector)> = x[1..].iter().copied().zip(&states).collect();
    Ok(mixture(dim, Some((x[0], rho_ml)), &terms))
}

pub fn map_ma(w: &ParamVector, model: &PriorModel) -> Result<DensityMatrix> {
    let PriorKind::Ma { k, alpha } = model.kind else {
        return Err(Error::InvalidParameter("model is not a Mai–Alquier prior"));
    };
    check_len(w, model.param_count())?;
    let dim = model.dim;
    let states: Vec<StateVector> = w.0[k..].chunks_exact(2 * dim).map(|z| pure_from(z, dim)).collect();
    if k == 1 {
        return Ok(states[0].projector());
    }
    let alphas = alloc::vec![alpha; k];
    let x = dirichlet_from_drivers(&alphas, &w.0[..k]);
    let terms: Vec<(f64, &StateVector)> = x.iter().copied().zip(&states).collect();
    Ok(mixture(dim, None, &terms))
}
