//! Experiment drivers: fidelity versus chain length and wall time, dataset
//! reconstruction with competing priors, purity densities and prior-sample
//! exports.
//!
//! Work fans out over a bounded pool. Every trial draws from its own stream
//! `RngSeed::new(seed, trial << 16 | slot)`, with slot 0 for the ground truth
//! and data and slot `j + 1` for the chain of prior `j`, and results are
//! merged by trial index, so output depends on the seed but not on the worker
//! count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qbayes_core::estimators::{baseline_estimate, rho_to_tau};
use qbayes_core::linalg::{fidelity, purity, DensityMatrix};
use qbayes_core::mcmc::{run_chain, ChainResult};
use qbayes_core::measurement::{simulate_counts_36, simulate_shots, MeasurementDataset};
use qbayes_core::rng::{RngSeed, RngStream};
use qbayes_core::stats;
use rayon::prelude::*;

use crate::config::{
    check_estimate_dim, fixed_estimate, EstimateSource, Fig2Config, PdfSource, PriorSampleConfig, PriorSpec,
    PurityPdfConfig, ReconstructConfig, SimulateConfig, StateSource,
};
use crate::error::{Error, Result};
use crate::io::{self, names, ChainResultFile, TauFile};

/// Worker-pool width and the base seed shared by all drivers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunContext {
    pub seed: u64,
    pub workers: usize,
}

impl RunContext {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self { seed, workers }
    }

    fn stream(&self, trial: usize, slot: usize) -> RngStream {
        RngStream::new(RngSeed::new(self.seed, ((trial as u64) << 16) | slot as u64))
    }

    fn seed_for(&self, trial: usize, slot: usize) -> RngSeed {
        RngSeed::new(self.seed, ((trial as u64) << 16) | slot as u64)
    }

    fn map_indexed<T: Send>(&self, n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::Pool(e.to_string()))?;
        pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

fn dim_of(qubits: usize) -> usize {
    1 << qubits
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub prior: String,
    pub length: usize,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub mean_wall_s: f64,
}

/// One row per (prior, checkpoint).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub const HEADER: &'static str = "prior,length,mean_fidelity,std_fidelity,mean_wall_s";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.prior, r.length, r.mean_fidelity, r.std_fidelity, r.mean_wall_s
            );
        }
        s
    }

    /// Rows without wall times, which are the only non-reproducible column.
    pub fn fidelity_columns(&self) -> Vec<(String, usize, u64, u64)> {
        self.rows
            .iter()
            .map(|r| (r.prior.clone(), r.length, r.mean_fidelity.to_bits(), r.std_fidelity.to_bits()))
            .collect()
    }

    pub fn row(&self, prior: &str, length: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.prior == prior && r.length == length)
    }
}

/// Per-trial fidelities behind a [`ResultTable`].
#[derive(Clone, Debug, PartialEq)]
pub struct PriorTrace {
    pub prior: String,
    pub lengths: Vec<usize>,
    /// `fidelity[trial][checkpoint]`
    pub fidelity: Vec<Vec<f64>>,
    /// `wall_s[trial][checkpoint]`
    pub wall_s: Vec<Vec<f64>>,
}

impl PriorTrace {
    pub fn at(&self, length: usize) -> Option<Vec<f64>> {
        let c = self.lengths.iter().position(|&l| l == length)?;
        Some(self.fidelity.iter().map(|f| f[c]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Report {
    pub table: ResultTable,
    pub priors: Vec<PriorTrace>,
    /// Fidelity of the point estimate to the truth per trial, when one was used.
    pub estimate_fidelity: Option<Vec<f64>>,
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        0.0
    } else {
        stats::std_dev(xs)
    }
}

struct TrialOutcome {
    /// `[prior][checkpoint]`
    fidelity: Vec<Vec<f64>>,
    wall_s: Vec<Vec<f64>>,
    lengths: Vec<Vec<usize>>,
    estimate_fidelity: Option<f64>,
}

/// Point estimate and the time it took.
struct Estimate {
    rho: DensityMatrix,
    seconds: f64,
}

fn obtain_estimate(
    source: &EstimateSource,
    index: usize,
    data: &MeasurementDataset,
    fixed: Option<&DensityMatrix>,
) -> Result<Estimate> {
    let est = match source {
        EstimateSource::Baseline => {
            let t0 = Instant::now();
            let rho = baseline_estimate(data)?;
            Estimate {
                rho,
                seconds: t0.elapsed().as_secs_f64(),
            }
        }
        EstimateSource::Directory(dir) => {
            let (rho, seconds) = io::read_indexed_estimate(dir, index)?;
            Estimate { rho, seconds }
        }
        EstimateSource::File(path) => Estimate {
            rho: fixed.cloned().map_or_else(|| io::read_estimate(path), Ok)?,
            seconds: 0.0,
        },
    };
    check_estimate_dim(&est.rho, data.dim(), "point estimate")?;
    Ok(est)
}

/// Runs one chain, starting the clock `offset_s` seconds in so estimate
/// inference is charged to the prior that uses it.
fn timed_chain(
    spec: &PriorSpec,
    estimate: Option<&Estimate>,
    data: &MeasurementDataset,
    settings: &crate::config::ChainSettings,
    seed: RngSeed,
) -> Result<ChainResult> {
    let offset = estimate.map_or(0.0, |e| e.seconds);
    let t0 = Instant::now();
    let clock = move || offset + t0.elapsed().as_secs_f64();
    let model = spec.model(data.dim(), estimate.map(|e| &e.rho))?;
    Ok(run_chain(&model, data, &settings.to_config(seed), &clock)?)
}

fn fig2_trial(cfg: &Fig2Config, ctx: &RunContext, i: usize, truth_estimate: Option<&DensityMatrix>) -> Result<TrialOutcome> {
    let dim = dim_of(cfg.qubits);
    let (truth, data) = match &cfg.states {
        StateSource::Sample => {
            let mut rng = ctx.stream(i, 0);
            let truth = cfg.truth.sample(dim, truth_estimate, &mut rng)?;
            let data = simulate_shots(&truth, cfg.shots, &mut rng)?;
            (truth, data)
        }
        StateSource::Directory(dir) => {
            let truth = io::read_density_matrix(&dir.join(names::state(i)))?;
            let data = io::read_dataset(&dir.join(names::shots(i)))?;
            check_estimate_dim(&truth, dim, "ground truth")?;
            check_estimate_dim(&truth, data.dim(), "ground truth")?;
            (truth, data)
        }
    };

    let mut estimates: Vec<(&EstimateSource, Estimate)> = Vec::new();
    for spec in &cfg.priors {
        if let Some(src) = spec.estimate_source() {
            if !estimates.iter().any(|(s, _)| *s == src) {
                let fixed = fixed_estimate(Some(src))?;
                estimates.push((src, obtain_estimate(src, i, &data, fixed.as_ref())?));
            }
        }
    }

    let mut out = TrialOutcome {
        fidelity: Vec::new(),
        wall_s: Vec::new(),
        lengths: Vec::new(),
        estimate_fidelity: match estimates.first() {
            Some((_, e)) => Some(fidelity(&e.rho, &truth)?),
            None => None,
        },
    };
    for (j, spec) in cfg.priors.iter().enumerate() {
        let est = spec
            .estimate_source()
            .and_then(|src| estimates.iter().find(|(s, _)| *s == src).map(|(_, e)| e));
        let res = timed_chain(spec, est, &data, &cfg.chain, ctx.seed_for(i, j + 1))?;
        out.fidelity.push(
            res.checkpoints
                .iter()
                .map(|c| fidelity(&c.rho_b, &truth))
                .collect::<Result<_, _>>()?,
        );
        out.wall_s.push(res.checkpoints.iter().map(|c| c.wall_s).collect());
        out.lengths.push(res.checkpoints.iter().map(|c| c.length).collect());
    }
    Ok(out)
}

/// Fidelity of the Bayesian mean to the ground truth at each checkpoint,
/// averaged over trial states, for every configured prior on shared data.
pub fn run_fig2(cfg: &Fig2Config, ctx: &RunContext) -> Result<Fig2Report> {
    cfg.validate()?;
    let truth_estimate = fixed_estimate(cfg.truth.estimate_source())?;
    let trials = ctx.map_indexed(cfg.trials, |i| fig2_trial(cfg, ctx, i, truth_estimate.as_ref()))?;

    let mut table = ResultTable::default();
    let mut priors = Vec::new();
    for (j, spec) in cfg.priors.iter().enumerate() {
        let label = spec.label();
        let lengths = trials[0].lengths[j].clone();
        let trace = PriorTrace {
            prior: label.clone(),
            fidelity: trials.iter().map(|t| t.fidelity[j].clone()).collect(),
            wall_s: trials.iter().map(|t| t.wall_s[j].clone()).collect(),
            lengths,
        };
        for (c, &length) in trace.lengths.iter().enumerate() {
            let f: Vec<f64> = trace.fidelity.iter().map(|t| t[c]).collect();
            let w: Vec<f64> = trace.wall_s.iter().map(|t| t[c]).collect();
            table.rows.push(ResultRow {
                prior: label.clone(),
                length,
                mean_fidelity: stats::mean(&f),
                std_fidelity: sample_std(&f),
                mean_wall_s: stats::mean(&w),
            });
        }
        priors.push(trace);
    }
    let estimate_fidelity = trials.iter().map(|t| t.estimate_fidelity).collect::<Option<Vec<_>>>();
    Ok(Fig2Report {
        table,
        priors,
        estimate_fidelity,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub dataset: PathBuf,
    pub prior: String,
    pub result: ChainResult,
    pub chain_file: PathBuf,
    pub estimate_file: PathBuf,
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned())
}

/// One chain per (dataset, prior). Writes `chain_{stem}_{prior}.json` and
/// `rho_b_{stem}_{prior}.json` under `out`.
pub fn run_reconstruct(cfg: &ReconstructConfig, ctx: &RunContext, out: &Path) -> Result<Vec<Reconstruction>> {
    cfg.validate()?;
    let per_dataset = ctx.map_indexed(cfg.data.len(), |i| {
        let path = &cfg.data[i];
        let data = io::read_dataset(path)?;
        let mut results = Vec::with_capacity(cfg.priors.len());
        for (j, spec) in cfg.priors.iter().enumerate() {
            let est = match spec.estimate_source() {
                Some(src) => {
                    let fixed = fixed_estimate(Some(src))?;
                    Some(obtain_estimate(src, i, &data, fixed.as_ref())?)
                }
                None => None,
            };
            let res = timed_chain(spec, est.as_ref(), &data, &cfg.chain, ctx.seed_for(i, j + 1))?;
            results.push((spec.label(), res));
        }
        Ok((path.clone(), results))
    })?;

    let mut out_rows = Vec::new();
    for (dataset, results) in per_dataset {
        let stem = file_stem(&dataset);
        for (prior, result) in results {
            let chain_file = out.join(format!("chain_{stem}_{prior}.json"));
            let estimate_file = out.join(format!("rho_b_{stem}_{prior}.json"));
            io::write_json(&chain_file, &ChainResultFile::from(&result))?;
            io::write_density_matrix(&estimate_file, result.final_estimate())?;
            out_rows.push(Reconstruction {
                dataset: dataset.clone(),
                prior,
                result,
                chain_file,
                estimate_file,
            });
        }
    }
    Ok(out_rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub source: String,
    pub dim: usize,
    pub samples: usize,
    pub mean_purity: f64,
    /// Bin edges span `[1/D, 1]`.
    pub edges: Vec<f64>,
    /// Probability density per bin; `Σ density · width = 1`.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn from_purities(source: String, dim: usize, purities: &[f64], bins: usize) -> Result<Self> {
        if purities.is_empty() {
            return Err(Error::Config(format!("purity source {source} is empty")));
        }
        let lo = 1.0 / dim as f64;
        let width = (1.0 - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
        let mut counts = vec![0usize; bins];
        for &p in purities {
            let b = ((p - lo) / width).floor();
            let b = if b.is_nan() { 0 } else { (b.max(0.0) as usize).min(bins - 1) };
            counts[b] += 1;
        }
        let n = purities.len() as f64;
        Ok(Self {
            source,
            dim,
            samples: purities.len(),
            mean_purity: stats::mean(purities),
            density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
            edges,
        })
    }

    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PurityTable {
    pub histograms: Vec<Histogram>,
}

impl PurityTable {
    pub const HEADER: &'static str = "source,dim,bin_lo,bin_hi,density";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for h in &self.histograms {
            for (d, e) in h.density.iter().zip(h.edges.windows(2)) {
                let _ = writeln!(s, "{},{},{},{},{}", h.source, h.dim, e[0], e[1], d);
            }
        }
        s
    }
}

fn directory_states(dir: &Path, prefix: &str) -> Result<Vec<DensityMatrix>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with(prefix))
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| io::read_density_matrix(p)).collect()
}

/// Normalized purity histograms over `[1/D, 1]`, one per source.
pub fn run_purity_pdf(cfg: &PurityPdfConfig, ctx: &RunContext) -> Result<PurityTable> {
    cfg.validate()?;
    let mut table = PurityTable::default();
    for (s, source) in cfg.sources.iter().enumerate() {
        let (dim, purities) = match source {
            PdfSource::Prior { prior, qubits, samples } => {
                let dim = dim_of(*qubits);
                let fixed = fixed_estimate(prior.estimate_source())?;
                if let Some(f) = &fixed {
                    check_estimate_dim(f, dim, "point estimate")?;
                }
                let p = ctx.map_indexed(*samples, |i| {
                    let mut rng = ctx.stream(i, s + 1);
                    Ok(purity(&prior.sample(dim, fixed.as_ref(), &mut rng)?))
                })?;
                (dim, p)
            }
            PdfSource::Directory { path, prefix } => {
                let states = directory_states(path, prefix)?;
                let dim = states.first().map_or(0, DensityMatrix::dim);
                if states.iter().any(|r| r.dim() != dim) {
                    return Err(Error::format(path, "states of differing dimension"));
                }
                (dim, states.iter().map(purity).collect())
            }
        };
        if purities.is_empty() {
            return Err(Error::Config(format!("purity source {} is empty", source.label())));
        }
        table
            .histograms
            .push(Histogram::from_purities(source.label(), dim, &purities, cfg.bins)?);
    }
    Ok(table)
}

/// Writes `n` states drawn from the prior as `rho_{i:05}.json`, their τ
/// vectors as `tau_{i:05}.json` and, when `shots > 0`, single-shot datasets as
/// `shots_{i:05}.json`. Returns the number of states written.
pub fn run_prior_sample(cfg: &PriorSampleConfig, ctx: &RunContext, out: &Path) -> Result<usize> {
    cfg.validate()?;
    let dim = dim_of(cfg.qubits);
    let fixed = fixed_estimate(cfg.prior.estimate_source())?;
    if let Some(f) = &fixed {
        check_estimate_dim(f, dim, "point estimate")?;
    }
    let written = ctx.map_indexed(cfg.n, |i| {
        let mut rng = ctx.stream(i, 0);
        let rho = cfg.prior.sample(dim, fixed.as_ref(), &mut rng)?;
        io::write_density_matrix(&out.join(names::state(i)), &rho)?;
        io::write_json(&out.join(names::tau(i)), &TauFile::from(&rho_to_tau(&rho)))?;
        if cfg.shots > 0 {
            let data = simulate_shots(&rho, cfg.shots, &mut rng)?;
            io::write_dataset(&out.join(names::shots(i)), &data)?;
        }
        Ok(())
    })?;
    Ok(written.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub truth: DensityMatrix,
    pub data: MeasurementDataset,
}

/// Simulates one dataset, from a ground-truth file or a fresh draw.
pub fn run_simulate(cfg: &SimulateConfig, ctx: &RunContext) -> Result<Simulation> {
    cfg.validate()?;
    let mut rng = ctx.stream(0, 0);
    let truth = match &cfg.state {
        Some(path) => io::read_density_matrix(path)?,
        None => {
            let fixed = fixed_estimate(cfg.truth.estimate_source())?;
            cfg.truth.sample(dim_of(cfg.qubits), fixed.as_ref(), &mut rng)?
        }
    };
    let data = match cfg.counts_per_setting {
        Some(n) => simulate_counts_36(&truth, n, &mut rng)?,
        None => simulate_shots(&truth, cfg.shots, &mut rng)?,
    };
    Ok(Simulation { truth, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_is_normalized() {
        let p = [0.5, 0.6, 0.75, 0.99, 1.0, 0.5];
        let h = Histogram::from_purities("x".into(), 2, &p, 100).unwrap();
        assert!((h.integral() - 1.0).abs() < 1e-9);
        assert_eq!(h.edges.len(), 101);
        assert!((h.edges[0] - 0.5).abs() < 1e-15 && (h.edges[100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_occupies_one_bin() {
        let h = Histogram::from_purities("x".into(), 4, &[0.4; 50], 100).unwrap();
        assert_eq!(h.density.iter().filter(|&&d| d > 0.0).count(), 1);
        assert!((h.integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_source_is_an_error() {
        assert!(Histogram::from_purities("x".into(), 2, &[], 10).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let t = ResultTable {
            rows: vec![ResultRow {
                prior: "bures".into(),
                length: 32,
                mean_fidelity: 0.5,
                std_fidelity: 0.25,
                mean_wall_s: 0.125,
            }],
        };
        assert_eq!(t.to_csv(), "prior,length,mean_fidelity,std_fidelity,mean_wall_s\nbures,32,0.5,0.25,0.125\n");
    }

    #[test]
    fn streams_are_distinct_per_trial_and_slot() {
        let ctx = RunContext::new(1, 1);
        assert_ne!(ctx.seed_for(0, 1), ctx.seed_for(1, 0));
        assert_ne!(ctx.seed_for(0, 1), ctx.seed_for(0, 2));
    }
}
