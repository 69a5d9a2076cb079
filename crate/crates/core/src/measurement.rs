//! Pauli projective measurements: settings, simulated datasets, the
//! Born-rule log-likelihood and the fixed-layout frequency tensor.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, DensityMatrix, StateVector, C64};

/// Born probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Single-qubit Pauli basis. The declaration order is the layout order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'X' | 'x' => Ok(Basis::X),
            'Y' | 'y' => Ok(Basis::Y),
            'Z' | 'z' => Ok(Basis::Z),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }

    /// Eigenvector for outcome bit `0` (`+`) or `1` (`−`).
    pub fn eigenstate(self, outcome: u8) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        match self {
            Basis::Z if outcome == 0 => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            Basis::Z => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            Basis::X => [C64::new(s, 0.0), C64::new(sign * s, 0.0)],
            Basis::Y => [C64::new(s, 0.0), C64::new(0.0, sign * s)],
        }
    }
}

/// Per-qubit bases plus the observed outcome bits (`+ ↦ 0`, `− ↦ 1`).
/// Qubit 1 is the first entry and the most significant tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliSetting {
    bases: Vec<Basis>,
    outcomes: Vec<u8>,
}

impl PauliSetting {
    pub fn new(bases: Vec<Basis>, outcomes: Vec<u8>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::Empty("Pauli setting"));
        }
        if bases.len() != outcomes.len() {
            return Err(Error::DimensionMismatch {
                expected: bases.len(),
                found: outcomes.len(),
            });
        }
        if let Some(&bad) = outcomes.iter().find(|&&o| o > 1) {
            return Err(Error::InvalidLabel(char::from(b'0' + bad.min(9))));
        }
        Ok(Self { bases, outcomes })
    }

    /// Parses labels such as `("XZ", "01")`. Outcomes accept `0/1` or `+/-`.
    pub fn parse(bases: &str, outcomes: &str) -> Result<Self> {
        let b = bases.chars().map(Basis::from_char).collect::<Result<Vec<_>>>()?;
        let o = outcomes
            .chars()
            .map(|c| match c {
                '0' | '+' => Ok(0u8),
                '1' | '-' => Ok(1u8),
                other => Err(Error::InvalidLabel(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(b, o)
    }

    pub fn qubits(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn bases_label(&self) -> String {
        self.bases.iter().map(|b| b.as_char()).collect()
    }

    pub fn outcomes_label(&self) -> String {
        self.outcomes.iter().map(|&o| char::from(b'0' + o)).collect()
    }

    /// Tensor product of the single-qubit eigenstates.
    pub fn to_state(&self) -> StateVector {
        let mut amps = vec![C64::new(1.0, 0.0)];
        for (b, &o) in self.bases.iter().zip(&self.outcomes) {
            let e = b.eigenstate(o);
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * e[0]);
                next.push(a * e[1]);
            }
            amps = next;
        }
        StateVector::new(amps).expect("tensor product of unit vectors")
    }

    /// Position of this projector in the flattened frequency-tensor layout:
    /// per qubit `2·basis + outcome`, qubit 1 most significant, base 6.
    pub fn layout_index(&self) -> usize {
        self.bases
            .iter()
            .zip(&self.outcomes)
            .fold(0, |acc, (&b, &o)| acc * 6 + 2 * b as usize + o as usize)
    }

    /// Inverse of [`layout_index`](Self::layout_index).
    pub fn from_layout_index(qubits: usize, mut index: usize) -> Self {
        let mut bases = vec![Basis::X; qubits];
        let mut outcomes = vec![0u8; qubits];
        for q in (0..qubits).rev() {
            let local = index % 6;
            index /= 6;
            bases[q] = Basis::ALL[local / 2];
            outcomes[q] = (local % 2) as u8;
        }
        Self { bases, outcomes }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetMode {
    SingleShot,
    Counted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub setting: PauliSetting,
    pub count: u64,
}

/// Measurement record `𝒟`: single-shot outcomes or aggregated projector counts.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementDataset {
    qubits: usize,
    mode: DatasetMode,
    records: Vec<Record>,
}

impl MeasurementDataset {
    pub fn empty(qubits: usize, mode: DatasetMode) -> Self {
        Self {
            qubits,
            mode,
            records: Vec::new(),
        }
    }

    pub fn single_shot(qubits: usize, settings: Vec<PauliSetting>) -> Result<Self> {
        let records = settings.into_iter().map(|setting| Record { setting, count: 1 }).collect();
        Self::from_records(qubits, DatasetMode::SingleShot, records)
    }

    pub fn counted(qubits: usize, counts: Vec<(PauliSetting, u64)>) -> Result<Self> {
        let records = counts.into_iter().map(|(setting, count)| Record { setting, count }).collect();
        Self::from_records(qubits, DatasetMode::Counted, records)
    }

    pub fn from_records(qubits: usize, mode: DatasetMode, records: Vec<Record>) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::InvalidParameter("qubit count must be positive"));
        }
        for r in &records {
            if r.setting.qubits() != qubits {
                return Err(Error::DimensionMismatch {
                    expected: qubits,
                    found: r.setting.qubits(),
                });
            }
            if mode == DatasetMode::SingleShot && r.count != 1 {
                return Err(Error::InvalidParameter("single-shot records carry no count"));
            }
        }
        Ok(Self { qubits, mode, records })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn mode(&self) -> DatasetMode {
        self.mode
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Total shots `M`.
    pub fn total_shots(&self) -> u64 {
        self.records.iter().map(|r| r.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_shots() == 0
    }

    /// Appends `other`; the result is counted unless both are single-shot.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                found: other.qubits,
            });
        }
        let mode = if self.mode == DatasetMode::SingleShot && other.mode == DatasetMode::SingleShot {
            DatasetMode::SingleShot
        } else {
            DatasetMode::Counted
        };
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Ok(Self {
            qubits: self.qubits,
            mode,
            records,
        })
    }

    /// Merges identical settings into `(setting, count)` pairs, sorted.
    pub fn aggregated(&self) -> Vec<(PauliSetting, u64)> {
        let mut map: BTreeMap<&PauliSetting, u64> = BTreeMap::new();
        for r in &self.records {
            *map.entry(&r.setting).or_default() += r.count;
        }
        map.into_iter().filter(|(_, c)| *c > 0).map(|(s, c)| (s.clone(), c)).collect()
    }
}

pub fn setting_to_state(s: &PauliSetting) -> StateVector {
    s.to_state()
}

pub(crate) fn qubits_of(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotQubits(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Outcome probabilities for every basis combination, indexed
/// `[basis_combo][outcome_bits]` with qubit 1 most significant in both.
fn born_table(rho: &DensityMatrix, qubits: usize) -> Vec<Vec<f64>> {
    let combos = 3usize.pow(qubits as u32);
    let outcomes = 1usize << qubits;
    (0..combos)
        .map(|combo| {
            let bases = combo_bases(qubits, combo);
            (0..outcomes)
                .map(|bits| {
                    let s = PauliSetting {
                        bases: bases.clone(),
                        outcomes: outcome_bits(qubits, bits),
                    };
                    rho.expectation(&s.to_state()).max(0.0)
                })
                .collect()
        })
        .collect()
}

fn combo_bases(qubits: usize, mut combo: usize) -> Vec<Basis> {
    let mut b = vec![Basis::X; qubits];
    for q in (0..qubits).rev() {
        b[q] = Basis::ALL[combo % 3];
        combo /= 3;
    }
    b
}

fn outcome_bits(qubits: usize, bits: usize) -> Vec<u8> {
    (0..qubits).map(|q| ((bits >> (qubits - 1 - q)) & 1) as u8).collect()
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Single-shot dataset: each shot draws a uniformly random basis per qubit
/// and an outcome with Born probability.
pub fn simulate_shots<R: Rng + ?Sized>(rho: &DensityMatrix, n_shots: usize, rng: &mut R) -> Result<MeasurementDataset> {
    let qubits = qubits_of(rho.dim())?;
    let table = born_table(rho, qubits);
    let combos = table.len();
    let mut settings = Vec::with_capacity(n_shots);
    for _ in 0..n_shots {
        let combo = rng.random_range(0..combos);
        let bits = sample_index(&table[combo], rng);
        settings.push(PauliSetting {
            bases: combo_bases(qubits, combo),
            outcomes: outcome_bits(qubits, bits),
        });
    }
    MeasurementDataset::single_shot(qubits, settings)
}

/// The 36 two-qubit projectors in layout order.
pub fn two_qubit_projectors() -> Vec<PauliSetting> {
    (0..36).map(|i| PauliSetting::from_layout_index(2, i)).collect()
}

/// Counted two-qubit dataset over the 36 product eigenstate projectors, each
/// an independent binomial draw out of `shots_per_setting`.
pub fn simulate_counts_36<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    shots_per_setting: u64,
    rng: &mut R,
) -> Result<MeasurementDataset> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let counts = two_qubit_projectors()
        .into_iter()
        .map(|s| {
            let p = rho.expectation(&s.to_state()).clamp(0.0, 1.0);
            let n = Binomial::new(shots_per_setting, p).expect("p in [0, 1]").sample(rng);
            (s, n)
        })
        .collect();
    MeasurementDataset::counted(2, counts)
}

/// `Σ_m n_m log max(⟨ψ_m|ρ|ψ_m⟩, 1e-12)`, evaluated record by record.
pub fn log_likelihood(rho: &DensityMatrix, data: &MeasurementDataset) -> Result<f64> {
    if rho.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: rho.dim(),
        });
    }
    Ok(data
        .records()
        .iter()
        .filter(|r| r.count > 0)
        .map(|r| r.count as f64 * libm::log(rho.expectation(&r.setting.to_state()).max(PROB_FLOOR)))
        .sum())
}

/// The log-likelihood with identical records merged and the projector
/// states precomputed; the form used inside samplers.
#[derive(Clone, Debug)]
pub struct CompiledLikelihood {
    dim: usize,
    terms: Vec<(StateVector, f64)>,
}

impl CompiledLikelihood {
    pub fn new(data: &MeasurementDataset) -> Self {
        let terms = data
            .aggregated()
            .into_iter()
            .map(|(s, c)| (s.to_state(), c as f64))
            .collect();
        Self { dim: data.dim(), terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, rho: &CMatrix) -> f64 {
        debug_assert_eq!(rho.dim(), self.dim);
        self.terms
            .iter()
            .map(|(psi, n)| n * libm::log(rho.quadratic_form(psi.amplitudes()).max(PROB_FLOOR)))
            .sum()
    }
}

/// Observed projector frequencies in the fixed two-dimensional layout.
///
/// The `6ⁿ` projectors are flattened lexicographically (qubit 1 most
/// significant; per qubit `X+, X−, Y+, Y−, Z+, Z−`) and reshaped row-major
/// into `[2, 3]`, `[6, 6]`, `[6, 36]`, `[36, 36]` for one to four qubits and
/// `[6^⌊n/2⌋, 6^⌈n/2⌉]` beyond.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FrequencyTensor {
    pub fn shape_for(qubits: usize) -> (usize, usize) {
        match qubits {
            1 => (2, 3),
            2 => (6, 6),
            3 => (6, 36),
            4 => (36, 36),
            n => (6usize.pow((n / 2) as u32), 6usize.pow(n.div_ceil(2) as u32)),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Row-major entries, i.e. the flattened projector order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Projector counts divided by the total shot count, in the fixed layout.
pub fn build_frequency_tensor(data: &MeasurementDataset) -> FrequencyTensor {
    let (rows, cols) = FrequencyTensor::shape_for(data.qubits());
    let mut freq = vec![0.0; rows * cols];
    let total = data.total_shots();
    if total > 0 {
        for r in data.records() {
            freq[r.setting.layout_index()] += r.count as f64;
        }
        for f in &mut freq {
            *f /= total as f64;
        }
    }
    FrequencyTensor { rows, cols, data: freq }
}
