//! Experiment configuration. The JSON form is the flattened
//! [`ExperimentConfig`]:
//!
//! ```json
//! { "experiment": "fig2", "seed": 7, "workers": 2, "out": "runs/fig2",
//!   "qubits": 1, "trials": 20, "shots": 16000,
//!   "priors": [ { "kind": "bures" },
//!               { "kind": "ml_biased", "mu": 25.0, "alpha0": 11.6 } ],
//!   "chain": { "length": 16384, "beta": 0.1, "burn_in": 0.0 } }
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use qbayes_core::ensembles::{sample_bures, sample_ma, sample_ml_biased, BiasedDirichletSpec};
use qbayes_core::linalg::DensityMatrix;
use qbayes_core::mcmc::{self, Adaptation, ChainConfig};
use qbayes_core::priors::PriorModel;
use qbayes_core::rng::RngSeed;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(flatten)]
    pub experiment: Experiment,
}

fn default_workers() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            seed: 0,
            workers: default_workers(),
            out: default_out(),
            experiment,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        match &self.experiment {
            Experiment::Fig2(c) => c.validate(),
            Experiment::Reconstruct(c) => c.validate(),
            Experiment::PurityPdf(c) => c.validate(),
            Experiment::PriorSample(c) => c.validate(),
            Experiment::Simulate(c) => c.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    Fig2(Fig2Config),
    Reconstruct(ReconstructConfig),
    PurityPdf(PurityPdfConfig),
    PriorSample(PriorSampleConfig),
    Simulate(SimulateConfig),
}

/// Where the point estimate for an estimate-biased prior comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateSource {
    /// Linear inversion of the same data the chain conditions on.
    #[default]
    Baseline,
    /// `rho_ml_{i:05}.json` plus `rho_ml_{i:05}.timing.json` per trial or
    /// dataset index.
    Directory(PathBuf),
    /// One fixed estimate.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Bures,
    MlBiased {
        mu: f64,
        alpha0: f64,
        /// Mixture size; defaults to `D + 1`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        #[serde(default)]
        rho_ml: EstimateSource,
    },
    Ma {
        k: usize,
        alpha: f64,
    },
}

impl PriorSpec {
    pub fn ml_biased(mu: f64, alpha0: f64) -> Self {
        PriorSpec::MlBiased {
            mu,
            alpha0,
            k: None,
            rho_ml: EstimateSource::Baseline,
        }
    }

    pub fn needs_estimate(&self) -> bool {
        matches!(self, PriorSpec::MlBiased { .. })
    }

    pub fn estimate_source(&self) -> Option<&EstimateSource> {
        match self {
            PriorSpec::MlBiased { rho_ml, .. } => Some(rho_ml),
            _ => None,
        }
    }

    /// Column label: `bures`, `ml_biased_mu25_alpha0_11.6`, `ma_k5_alpha0.4`.
    pub fn label(&self) -> String {
        match self {
            PriorSpec::Bures => "bures".into(),
            PriorSpec::MlBiased { mu, alpha0, k, .. } => {
                let k = k.map(|k| format!("_k{k}")).unwrap_or_default();
                format!("ml_biased_mu{mu}_alpha0_{alpha0}{k}")
            }
            PriorSpec::Ma { k, alpha } => format!("ma_k{k}_alpha{alpha}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorSpec::Bures => Ok(()),
            PriorSpec::MlBiased { mu, alpha0, k, .. } => {
                BiasedDirichletSpec::new(k.unwrap_or(2), mu, alpha0)?;
                Ok(())
            }
            PriorSpec::Ma { k, alpha } => {
                if k == 0 || !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Config("ma prior needs k ≥ 1 and alpha > 0".into()));
                }
                Ok(())
            }
        }
    }

    /// pCN parameterization of this prior in dimension `dim`.
    pub fn model(&self, dim: usize, estimate: Option<&DensityMatrix>) -> Result<PriorModel> {
        Ok(match *self {
            PriorSpec::Bures => PriorModel::bures(dim)?,
            PriorSpec::MlBiased { mu, alpha0, k, .. } => {
                let rho = estimate.ok_or_else(|| Error::Config("ml_biased prior requested without an estimate".into()))?;
                PriorModel::ml_biased(rho.matrix(), mu, alpha0, k)?
            }
            PriorSpec::Ma { k, alpha } => PriorModel::ma(dim, k, alpha)?,
        })
    }

    /// One draw from the direct sampler of this prior.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, estimate: Option<&DensityMatrix>, rng: &mut R) -> Result<DensityMatrix> {
        Ok(match *self {
            PriorSpec::Bures => sample_bures(dim, rng),
            PriorSpec::MlBiased { mu, alpha0, k, .. } => {
                let rho = estimate.ok_or_else(|| Error::Config("ml_biased prior requested without an estimate".into()))?;
                let spec = BiasedDirichletSpec::new(k.unwrap_or(dim + 1), mu, alpha0)?;
                sample_ml_biased(rho, &spec, rng)
            }
            PriorSpec::Ma { k, alpha } => sample_ma(dim, k, alpha, rng)?,
        })
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    /// `bures`, `ma:k=5,alpha=0.4` or
    /// `ml_biased:mu=25,alpha0=11.6[,k=5][,file=PATH|dir=PATH]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("prior \"{s}\": {msg}"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut fields = std::collections::BTreeMap::new();
        for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            fields.insert(k.trim(), v.trim());
        }
        let num = |key: &str| -> Result<f64> {
            fields
                .get(key)
                .ok_or_else(|| bad(&format!("missing {key}")))?
                .parse()
                .map_err(|_| bad(&format!("{key} is not a number")))
        };
        let count = |key: &str| -> Result<Option<usize>> {
            fields
                .get(key)
                .map(|v| v.parse().map_err(|_| bad(&format!("{key} is not an integer"))))
                .transpose()
        };
        let allowed: &[&str] = match kind {
            "bures" => &[],
            "ma" => &["k", "alpha"],
            "ml_biased" => &["mu", "alpha0", "k", "file", "dir"],
            _ => return Err(bad("unknown prior kind")),
        };
        if let Some(k) = fields.keys().find(|k| !allowed.contains(k)) {
            return Err(bad(&format!("unexpected key {k}")));
        }
        Ok(match kind {
            "bures" => PriorSpec::Bures,
            "ma" => PriorSpec::Ma {
                k: count("k")?.ok_or_else(|| bad("missing k"))?,
                alpha: num("alpha")?,
            },
            _ => PriorSpec::MlBiased {
                mu: num("mu")?,
                alpha0: num("alpha0")?,
                k: count("k")?,
                rho_ml: match (fields.get("file"), fields.get("dir")) {
                    (None, None) => EstimateSource::Baseline,
                    (Some(f), None) => EstimateSource::File(PathBuf::from(f)),
                    (None, Some(d)) => EstimateSource::Directory(PathBuf::from(d)),
                    (Some(_), Some(_)) => return Err(bad("give file or dir, not both")),
                },
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationSpec {
    Off,
    TargetRate { target: f64, window: usize },
}

impl Default for AdaptationSpec {
    fn default() -> Self {
        AdaptationSpec::TargetRate {
            target: mcmc::DEFAULT_TARGET_ACCEPTANCE,
            window: mcmc::DEFAULT_ADAPT_WINDOW,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainSettings {
    pub length: usize,
    pub beta: f64,
    pub adaptation: AdaptationSpec,
    pub burn_in: f64,
    /// Defaults to the powers of two from `2⁵` up to `length`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            length: 1 << 14,
            beta: mcmc::DEFAULT_BETA,
            adaptation: AdaptationSpec::default(),
            burn_in: 0.0,
            checkpoints: None,
        }
    }
}

impl ChainSettings {
    pub fn with_length(length: usize) -> Self {
        Self {
            length,
            ..Self::default()
        }
    }

    pub fn to_config(&self, seed: RngSeed) -> ChainConfig {
        let mut cfg = ChainConfig::new(self.length, seed);
        cfg.beta = self.beta;
        cfg.burn_in = self.burn_in;
        cfg.adaptation = match self.adaptation {
            AdaptationSpec::Off => Adaptation::Off,
            AdaptationSpec::TargetRate { target, window } => Adaptation::TargetRate { target, window },
        };
        if let Some(cps) = &self.checkpoints {
            cfg.checkpoints = cps.clone();
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.to_config(RngSeed::default()).validate()?;
        Ok(())
    }
}

/// Ground truths and their data for the fidelity-versus-time study.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSource {
    /// Fresh draws from `truth`, simulated with `shots` single shots each.
    #[default]
    Sample,
    /// `rho_{i:05}.json` and `shots_{i:05}.json` as written by `prior-sample`.
    Directory(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Fig2Config {
    pub qubits: usize,
    pub trials: usize,
    pub shots: usize,
    pub truth: PriorSpec,
    pub states: StateSource,
    pub priors: Vec<PriorSpec>,
    pub chain: ChainSettings,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            qubits: 1,
            trials: 20,
            shots: 16_000,
            truth: PriorSpec::Bures,
            states: StateSource::Sample,
            priors: vec![PriorSpec::Bures, PriorSpec::ml_biased(25.0, 11.6)],
            chain: ChainSettings::default(),
        }
    }
}

fn check_qubits(qubits: usize) -> Result<()> {
    if !(1..=6).contains(&qubits) {
        return Err(Error::Config(format!("qubit count {qubits} outside 1..=6")));
    }
    Ok(())
}

fn check_dir(path: &Path) -> Result<()> {
    if !path.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", path.display())));
    }
    Ok(())
}

fn check_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Config(format!("{} does not exist", path.display())));
    }
    Ok(())
}

fn check_priors(priors: &[PriorSpec]) -> Result<()> {
    if priors.is_empty() {
        return Err(Error::Config("at least one prior is required".into()));
    }
    let mut labels: Vec<String> = priors.iter().map(PriorSpec::label).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != priors.len() {
        return Err(Error::Config("prior specifications must be distinct".into()));
    }
    for p in priors {
        p.validate()?;
        match p.estimate_source() {
            Some(EstimateSource::Directory(d)) => check_dir(d)?,
            Some(EstimateSource::File(f)) => check_file(f)?,
            _ => {}
        }
    }
    Ok(())
}

impl Fig2Config {
    pub fn validate(&self) -> Result<()> {
        check_qubits(self.qubits)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        check_priors(&self.priors)?;
        self.truth.validate()?;
        if let StateSource::Directory(d) = &self.states {
            check_dir(d)?;
        } else if let Some(EstimateSource::Baseline | EstimateSource::Directory(_)) = self.truth.estimate_source() {
            return Err(Error::Config("an ml_biased truth ensemble needs a fixed estimate file".into()));
        }
        self.chain.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructConfig {
    pub data: Vec<PathBuf>,
    pub priors: Vec<PriorSpec>,
    pub chain: ChainSettings,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            data: Vec::new(),
            priors: vec![PriorSpec::Bures, PriorSpec::ml_biased(25.0, 11.6)],
            chain: ChainSettings::with_length(1 << 15),
        }
    }
}

impl ReconstructConfig {
    pub fn validate(&self) -> Result<()> {
        if self.data.is_empty() {
            return Err(Error::Config("no datasets given".into()));
        }
        for d in &self.data {
            check_file(d)?;
        }
        check_priors(&self.priors)?;
        self.chain.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PdfSource {
    /// `samples` direct draws from a prior.
    Prior {
        prior: PriorSpec,
        qubits: usize,
        samples: usize,
    },
    /// Every `{prefix}*.json` density matrix in a directory.
    Directory {
        path: PathBuf,
        #[serde(default = "default_prefix")]
        prefix: String,
    },
}

fn default_prefix() -> String {
    "rho_b_".into()
}

impl PdfSource {
    pub fn label(&self) -> String {
        match self {
            PdfSource::Prior { prior, qubits, .. } => format!("{}_q{qubits}", prior.label()),
            PdfSource::Directory { path, .. } => path.display().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PurityPdfConfig {
    pub sources: Vec<PdfSource>,
    pub bins: usize,
}

impl Default for PurityPdfConfig {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            bins: 100,
        }
    }
}

impl PurityPdfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Config("no purity sources given".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        for s in &self.sources {
            match s {
                PdfSource::Prior { prior, qubits, samples } => {
                    check_qubits(*qubits)?;
                    prior.validate()?;
                    if *samples == 0 {
                        return Err(Error::Config("prior sources need at least one sample".into()));
                    }
                    match prior.estimate_source() {
                        Some(EstimateSource::File(f)) => check_file(f)?,
                        Some(_) => return Err(Error::Config("an ml_biased purity source needs an estimate file".into())),
                        None => {}
                    }
                }
                PdfSource::Directory { path, .. } => check_dir(path)?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSampleConfig {
    pub prior: PriorSpec,
    pub qubits: usize,
    pub n: usize,
    /// Single shots simulated per state; 0 skips the shot files.
    pub shots: usize,
}

impl Default for PriorSampleConfig {
    fn default() -> Self {
        Self {
            prior: PriorSpec::Bures,
            qubits: 1,
            n: 100,
            shots: 16_000,
        }
    }
}

impl PriorSampleConfig {
    pub fn validate(&self) -> Result<()> {
        check_qubits(self.qubits)?;
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        self.prior.validate()?;
        match self.prior.estimate_source() {
            Some(EstimateSource::File(f)) => check_file(f),
            Some(_) => Err(Error::Config("sampling an ml_biased prior needs an estimate file".into())),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    /// Ground-truth file; when absent one state is drawn from `truth`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<PathBuf>,
    pub truth: PriorSpec,
    pub qubits: usize,
    /// Single shots with uniformly random bases.
    pub shots: usize,
    /// When set, a counted two-qubit dataset over the 36 product projectors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts_per_setting: Option<u64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            state: None,
            truth: PriorSpec::Bures,
            qubits: 1,
            shots: 16_000,
            counts_per_setting: None,
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.state {
            Some(p) => check_file(p)?,
            None => {
                check_qubits(self.qubits)?;
                self.truth.validate()?;
                if let Some(src) = self.truth.estimate_source() {
                    match src {
                        EstimateSource::File(f) => check_file(f)?,
                        _ => return Err(Error::Config("an ml_biased truth ensemble needs an estimate file".into())),
                    }
                }
            }
        }
        Ok(())
    }
}

/// Loads the fixed estimate named by `source`, if any.
pub(crate) fn fixed_estimate(source: Option<&EstimateSource>) -> Result<Option<DensityMatrix>> {
    match source {
        Some(EstimateSource::File(f)) => crate::io::read_estimate(f).map(Some),
        _ => Ok(None),
    }
}

pub(crate) fn check_estimate_dim(rho: &DensityMatrix, dim: usize, what: &str) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::Config(format!("{what} has dimension {}, expected {dim}", rho.dim())));
    }
    Ok(())
}
