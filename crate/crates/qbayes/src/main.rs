use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbayes::config::{
    AdaptationSpec, ChainSettings, Experiment, ExperimentConfig, Fig2Config, PdfSource, PriorSampleConfig, PriorSpec,
    PurityPdfConfig, ReconstructConfig, SimulateConfig, StateSource,
};
use qbayes::harness::{self, RunContext};
use qbayes::{io, Error, Result};
use serde_json::json;

/// Bayesian quantum state estimation experiments.
#[derive(Debug, Parser)]
#[command(name = "qbayes", version)]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON experiment configuration; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export states drawn from a prior with τ-vectors and shot datasets.
    PriorSample(PriorSampleArgs),
    /// Simulate a measurement dataset.
    Simulate(SimulateArgs),
    /// Reconstruct datasets with one chain per prior.
    Reconstruct(ReconstructArgs),
    /// Fidelity versus chain length and wall time over random ground truths.
    Fig2(Fig2Args),
    /// Purity densities of priors or of saved estimates.
    PurityPdf(PurityPdfArgs),
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Retained chain length.
    #[arg(long)]
    length: Option<usize>,
    /// Initial pCN step size.
    #[arg(long)]
    beta: Option<f64>,
    /// Burn-in as a fraction of the chain length.
    #[arg(long)]
    burn_in: Option<f64>,
    /// Disable step-size adaptation during burn-in.
    #[arg(long)]
    no_adapt: bool,
}

impl ChainArgs {
    fn apply(&self, c: &mut ChainSettings) {
        if let Some(l) = self.length {
            c.length = l;
            c.checkpoints = None;
        }
        if let Some(b) = self.beta {
            c.beta = b;
        }
        if let Some(b) = self.burn_in {
            c.burn_in = b;
        }
        if self.no_adapt {
            c.adaptation = AdaptationSpec::Off;
        }
    }
}

#[derive(Debug, Args)]
struct PriorSampleArgs {
    /// `bures`, `ma:k=5,alpha=0.4` or `ml_biased:mu=25,alpha0=11.6,file=PATH`.
    #[arg(long)]
    prior: Option<PriorSpec>,
    #[arg(long)]
    qubits: Option<usize>,
    /// Number of states.
    #[arg(long)]
    n: Option<usize>,
    /// Single shots per state; 0 skips the datasets.
    #[arg(long)]
    shots: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Ground-truth density matrix file.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Ensemble to draw the ground truth from when no file is given.
    #[arg(long)]
    truth: Option<PriorSpec>,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    /// Counted two-qubit data over the 36 product projectors.
    #[arg(long)]
    counts_per_setting: Option<u64>,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// Dataset files.
    #[arg(long = "data", num_args = 1..)]
    data: Vec<PathBuf>,
    /// Prior specification; repeat for several.
    #[arg(long = "prior")]
    priors: Vec<PriorSpec>,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Debug, Args)]
struct Fig2Args {
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    /// Prior specification; repeat for several.
    #[arg(long = "prior")]
    priors: Vec<PriorSpec>,
    /// Use ground truths and datasets exported by `prior-sample`.
    #[arg(long)]
    states: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Debug, Args)]
struct PurityPdfArgs {
    /// Prior to sample; repeat for several.
    #[arg(long = "prior")]
    priors: Vec<PriorSpec>,
    /// Qubits for prior sources.
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    /// Draws per prior source.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Directory of `rho_b_*.json` estimates; repeat for several.
    #[arg(long = "dir")]
    dirs: Vec<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
}

fn kind_name(e: &Experiment) -> &'static str {
    match e {
        Experiment::Fig2(_) => "fig2",
        Experiment::Reconstruct(_) => "reconstruct",
        Experiment::PurityPdf(_) => "purity_pdf",
        Experiment::PriorSample(_) => "prior_sample",
        Experiment::Simulate(_) => "simulate",
    }
}

fn base_config(path: Option<&Path>, default: Experiment) -> Result<ExperimentConfig> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::new(default));
    };
    let cfg: ExperimentConfig = io::read_json(path)?;
    if std::mem::discriminant(&cfg.experiment) != std::mem::discriminant(&default) {
        return Err(Error::Config(format!(
            "{} describes a {} experiment, not {}",
            path.display(),
            kind_name(&cfg.experiment),
            kind_name(&default)
        )));
    }
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn build_config(cli: Cli) -> Result<ExperimentConfig> {
    let default = match &cli.command {
        Command::PriorSample(_) => Experiment::PriorSample(PriorSampleConfig::default()),
        Command::Simulate(_) => Experiment::Simulate(SimulateConfig::default()),
        Command::Reconstruct(_) => Experiment::Reconstruct(ReconstructConfig::default()),
        Command::Fig2(_) => Experiment::Fig2(Fig2Config::default()),
        Command::PurityPdf(_) => Experiment::PurityPdf(PurityPdfConfig::default()),
    };
    let mut cfg = base_config(cli.config.as_deref(), default)?;
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.workers, cli.workers);
    set(&mut cfg.out, cli.out);
    match (cli.command, &mut cfg.experiment) {
        (Command::PriorSample(a), Experiment::PriorSample(c)) => {
            set(&mut c.prior, a.prior);
            set(&mut c.qubits, a.qubits);
            set(&mut c.n, a.n);
            set(&mut c.shots, a.shots);
        }
        (Command::Simulate(a), Experiment::Simulate(c)) => {
            if a.state.is_some() {
                c.state = a.state;
            }
            set(&mut c.truth, a.truth);
            set(&mut c.qubits, a.qubits);
            set(&mut c.shots, a.shots);
            if a.counts_per_setting.is_some() {
                c.counts_per_setting = a.counts_per_setting;
            }
        }
        (Command::Reconstruct(a), Experiment::Reconstruct(c)) => {
            if !a.data.is_empty() {
                c.data = a.data;
            }
            if !a.priors.is_empty() {
                c.priors = a.priors;
            }
            a.chain.apply(&mut c.chain);
        }
        (Command::Fig2(a), Experiment::Fig2(c)) => {
            set(&mut c.qubits, a.qubits);
            set(&mut c.trials, a.trials);
            set(&mut c.shots, a.shots);
            if !a.priors.is_empty() {
                c.priors = a.priors;
            }
            if let Some(d) = a.states {
                c.states = StateSource::Directory(d);
            }
            a.chain.apply(&mut c.chain);
        }
        (Command::PurityPdf(a), Experiment::PurityPdf(c)) => {
            let extra = a
                .priors
                .into_iter()
                .map(|prior| PdfSource::Prior {
                    prior,
                    qubits: a.qubits,
                    samples: a.samples,
                })
                .chain(a.dirs.into_iter().map(|path| PdfSource::Directory {
                    path,
                    prefix: "rho_b_".into(),
                }));
            c.sources.extend(extra);
            set(&mut c.bins, a.bins);
        }
        _ => unreachable!("configuration kind checked against the subcommand"),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cfg: ExperimentConfig) -> Result<serde_json::Value> {
    let ctx = RunContext::new(cfg.seed, cfg.workers);
    let out = cfg.out.as_path();
    Ok(match &cfg.experiment {
        Experiment::Fig2(c) => {
            let report = harness::run_fig2(c, &ctx)?;
            let path = out.join("fig2.csv");
            io::write_text(&path, &report.table.to_csv())?;
            let est = report.estimate_fidelity.as_deref().map(|f| {
                json!({
                    "mean": qbayes_core::stats::mean(f),
                    "std": if f.len() > 1 { qbayes_core::stats::std_dev(f) } else { 0.0 },
                })
            });
            json!({ "table": path, "rows": report.table.rows.len(), "estimate_fidelity": est })
        }
        Experiment::Reconstruct(c) => {
            let results = harness::run_reconstruct(c, &ctx, out)?;
            let files: Vec<_> = results
                .iter()
                .map(|r| {
                    json!({
                        "dataset": r.dataset,
                        "prior": r.prior,
                        "chain": r.chain_file,
                        "rho_b": r.estimate_file,
                        "acceptance": r.result.acceptance_rate,
                    })
                })
                .collect();
            json!({ "reconstructions": files })
        }
        Experiment::PurityPdf(c) => {
            let table = harness::run_purity_pdf(c, &ctx)?;
            let path = out.join("purity_pdf.csv");
            io::write_text(&path, &table.to_csv())?;
            let sources: Vec<_> = table
                .histograms
                .iter()
                .map(|h| json!({ "source": h.source, "samples": h.samples, "mean_purity": h.mean_purity }))
                .collect();
            json!({ "table": path, "sources": sources })
        }
        Experiment::PriorSample(c) => {
            let n = harness::run_prior_sample(c, &ctx, out)?;
            json!({ "states": n, "dir": out })
        }
        Experiment::Simulate(c) => {
            let sim = harness::run_simulate(c, &ctx)?;
            let data_path = out.join("dataset.json");
            let truth_path = out.join("truth.json");
            io::write_dataset(&data_path, &sim.data)?;
            io::write_density_matrix(&truth_path, &sim.truth)?;
            json!({ "dataset": data_path, "truth": truth_path, "shots": sim.data.total_shots() })
        }
    })
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_owned(), 2),
    };
    match build_config(cli).and_then(run) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}
