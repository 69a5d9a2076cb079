//! Point estimates: the Cholesky τ-vector codec and a linear-inversion
//! baseline estimator.
//!
//! τ layout for a `D×D` lower-triangular `T`: `τ₀ … τ_{D−1}` are the diagonal,
//! followed by `(re, im)` pairs walking the sub-diagonals in order of
//! increasing offset, each from top to bottom. For two qubits:
//!
//! ```text
//! T = | τ0                                  |
//!     | τ4 +iτ5   τ1                        |
//!     | τ10+iτ11  τ6 +iτ7   τ2              |
//!     | τ14+iτ15  τ12+iτ13  τ8 +iτ9   τ3    |
//! ```

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{isqrt, psd_project, CMatrix, DensityMatrix, C64};
use crate::measurement::{qubits_of, Basis, MeasurementDataset};

/// Diagonal shift applied before factorizing rank-deficient states.
pub const CHOLESKY_REGULARIZATION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TauVector(Vec<f64>);

impl TauVector {
    /// Requires `D²` finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if isqrt(values.len()).is_none_or(|d| d == 0) {
            return Err(Error::InvalidParameter("tau length must be a non-zero square"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        isqrt(self.0.len()).expect("validated")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Strictly-lower entries `(row, col)` in τ order; entry `i` uses
/// `τ_{D+2i}` (real) and `τ_{D+2i+1}` (imaginary).
pub fn off_diagonal_order(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
    for offset in 1..dim {
        for row in offset..dim {
            out.push((row, row - offset));
        }
    }
    out
}

/// Lower-triangular factor `T` encoded by `tau`.
pub fn tau_to_cholesky(tau: &TauVector) -> CMatrix {
    let dim = tau.dim();
    let t = &tau.0;
    let mut m = CMatrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(t[i], 0.0);
    }
    for (i, (r, c)) in off_diagonal_order(dim).into_iter().enumerate() {
        m[(r, c)] = C64::new(t[dim + 2 * i], t[dim + 2 * i + 1]);
    }
    m
}

/// `ρ = TT† / Tr(TT†)`.
pub fn tau_to_rho(tau: &TauVector) -> Result<DensityMatrix> {
    let t = tau_to_cholesky(tau);
    let m = t.matmul_adjoint(&t);
    let tr = m.trace().re;
    if !(tr > 0.0) {
        return Err(Error::Degenerate);
    }
    Ok(DensityMatrix::new_unchecked(m.scale(1.0 / tr)))
}

/// Cholesky factor of `ρ + εI` with a non-negative real diagonal.
pub fn rho_to_tau(rho: &DensityMatrix) -> TauVector {
    let dim = rho.dim();
    let mut a = rho.matrix().clone();
    for i in 0..dim {
        a[(i, i)] += C64::new(CHOLESKY_REGULARIZATION, 0.0);
    }
    let mut l = CMatrix::zeros(dim);
    for j in 0..dim {
        let d = a[(j, j)].re - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        let ljj = libm::sqrt(d.max(0.0));
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in j + 1..dim {
            let s: C64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = if ljj > 0.0 { (a[(i, j)] - s) / ljj } else { C64::new(0.0, 0.0) };
        }
    }
    let mut tau = vec![0.0; dim * dim];
    for i in 0..dim {
        tau[i] = l[(i, i)].re;
    }
    for (i, (r, c)) in off_diagonal_order(dim).into_iter().enumerate() {
        tau[dim + 2 * i] = l[(r, c)].re;
        tau[dim + 2 * i + 1] = l[(r, c)].im;
    }
    TauVector(tau)
}

/// Single-qubit Pauli index: 0 = I, 1 = X, 2 = Y, 3 = Z.
fn pauli_entry(p: u8, r: usize, c: usize) -> C64 {
    match (p, r, c) {
        (0, 0, 0) | (0, 1, 1) | (1, 0, 1) | (1, 1, 0) | (3, 0, 0) => C64::new(1.0, 0.0),
        (3, 1, 1) => C64::new(-1.0, 0.0),
        (2, 0, 1) => C64::new(0.0, -1.0),
        (2, 1, 0) => C64::new(0.0, 1.0),
        _ => C64::new(0.0, 0.0),
    }
}

/// Tensor product `P₁ ⊗ … ⊗ P_n`, qubit 1 most significant.
pub fn pauli_string_matrix(paulis: &[u8]) -> CMatrix {
    let n = paulis.len();
    CMatrix::from_fn(1 << n, |r, c| {
        let mut v = C64::new(1.0, 0.0);
        for (q, &p) in paulis.iter().enumerate() {
            let shift = n - 1 - q;
            v *= pauli_entry(p, (r >> shift) & 1, (c >> shift) & 1);
            if v == C64::new(0.0, 0.0) {
                break;
            }
        }
        v
    })
}

fn basis_pauli(b: Basis) -> u8 {
    match b {
        Basis::X => 1,
        Basis::Y => 2,
        Basis::Z => 3,
    }
}

/// Linear inversion followed by [`psd_project`].
///
/// Every Pauli string `P` is estimated from the records whose bases agree
/// with `P` on its support, as the count-weighted mean of the outcome parity
/// on that support. Strings with no compatible records get expectation 0.
/// The estimate is `ρ_lin = (1/D) Σ ⟨P⟩ P`.
pub fn baseline_estimate(data: &MeasurementDataset) -> Result<DensityMatrix> {
    if data.is_empty() {
        return Err(Error::Empty("dataset has no shots"));
    }
    let n = data.qubits();
    let dim = data.dim();
    qubits_of(dim)?;

    // per basis combination: total count and signed counts per outcome pattern
    let mut groups: BTreeMap<Vec<u8>, Vec<(u64, usize)>> = BTreeMap::new();
    for (s, count) in data.aggregated() {
        let bases: Vec<u8> = s.bases().iter().map(|&b| basis_pauli(b)).collect();
        let bits = s.outcomes().iter().fold(0usize, |acc, &o| (acc << 1) | o as usize);
        groups.entry(bases).or_default().push((count, bits));
    }

    let mut rho = CMatrix::zeros(dim);
    let strings = 4usize.pow(n as u32);
    for idx in 0..strings {
        let paulis: Vec<u8> = (0..n).map(|q| ((idx >> (2 * (n - 1 - q))) & 3) as u8).collect();
        let support_mask = paulis
            .iter()
            .fold(0usize, |acc, &p| (acc << 1) | (p != 0) as usize);
        let expectation = if support_mask == 0 {
            1.0
        } else {
            let mut total = 0u64;
            let mut signed = 0i64;
            for (bases, outcomes) in &groups {
                let compatible = paulis.iter().zip(bases).all(|(&p, &b)| p == 0 || p == b);
                if !compatible {
                    continue;
                }
                for &(count, bits) in outcomes {
                    total += count;
                    let parity = (bits & support_mask).count_ones() % 2;
                    signed += if parity == 0 { count as i64 } else { -(count as i64) };
                }
            }
            if total == 0 {
                0.0
            } else {
                signed as f64 / total as f64
            }
        };
        if expectation != 0.0 {
            rho.add_scaled(&pauli_string_matrix(&paulis), expectation / dim as f64);
        }
    }
    psd_project(&rho)
}
