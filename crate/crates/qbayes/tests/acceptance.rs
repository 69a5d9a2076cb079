//! Acceptance gate. Runs every engine criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.
//!
//! Run with `cargo test -p qbayes --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use qbayes::config::{ChainSettings, Fig2Config, PriorSpec, ReconstructConfig};
use qbayes::harness::{run_fig2, run_reconstruct, Fig2Report, RunContext};
use qbayes::io;
use qbayes_core::ensembles::{
    resolve_biased_alphas, sample_bures, sample_dirichlet, sample_ma, sample_ml_biased, BiasedDirichletSpec,
};
use qbayes_core::linalg::{eigh, fidelity, purity, CMatrix, DensityMatrix, StateVector, C64};
use qbayes_core::mcmc::{pcn_step, run_chain, ChainConfig, NoClock};
use qbayes_core::measurement::{simulate_counts_36, DatasetMode, MeasurementDataset};
use qbayes_core::priors::{ParamVector, PriorModel};
use qbayes_core::rng::{RngSeed, RngStream};
use qbayes_core::stats::{ks_two_sample, mean, std_error, variance};
use rand::RngCore;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(criterion: u64, stream: u64) -> RngStream {
    RngStream::new(RngSeed::new(SEED + criterion, stream))
}

fn fixture_a() -> DensityMatrix {
    let mut m = CMatrix::from_diag(&[0.55, 0.25, 0.15, 0.05]);
    m[(0, 1)] = C64::new(0.12, -0.05);
    m[(1, 0)] = C64::new(0.12, 0.05);
    m[(0, 3)] = C64::new(0.03, 0.02);
    m[(3, 0)] = C64::new(0.03, -0.02);
    m[(1, 2)] = C64::new(-0.04, 0.06);
    m[(2, 1)] = C64::new(-0.04, -0.06);
    DensityMatrix::new(m).expect("fixture A is physical")
}

fn fixture_b() -> DensityMatrix {
    // |ψ⟩ = (|00⟩ + i|01⟩ + |11⟩)/√3 mixed with 10 % white noise
    let s = 1.0 / 3f64.sqrt();
    let psi = StateVector::new(vec![C64::new(s, 0.0), C64::new(0.0, s), C64::new(0.0, 0.0), C64::new(s, 0.0)])
        .expect("unit vector");
    let mut m = DensityMatrix::pure(&psi).matrix().scale(0.9);
    m.add_scaled(&CMatrix::identity(4), 0.025);
    DensityMatrix::new(m).expect("fixture B is physical")
}

fn physicality_violations(m: &CMatrix) -> (f64, f64, f64) {
    let trace = (m.trace() - C64::new(1.0, 0.0)).norm();
    let herm = m.hermitian_deviation();
    let min_eig = eigh(m).values[0];
    (trace, herm, min_eig)
}

fn c1_physicality() -> Outcome {
    let n = 10_000;
    let rho_ml = fixture_a();
    let spec = BiasedDirichletSpec::new(5, 25.0, 11.6).unwrap();
    let mut r = rng(1, 0);
    let families: Vec<(&str, Box<dyn FnMut(&mut RngStream) -> DensityMatrix>)> = vec![
        ("bures D=2", Box::new(|r| sample_bures(2, r))),
        ("bures D=4", Box::new(|r| sample_bures(4, r))),
        ("MA(4,5,0.4)", Box::new(|r| sample_ma(4, 5, 0.4, r).unwrap())),
        ("ML-biased(25,11.6,5)", Box::new(|r| sample_ml_biased(&rho_ml, &spec, r))),
    ];
    let (mut worst_tr, mut worst_h, mut worst_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut failures = Vec::new();
    for (name, mut draw) in families {
        for _ in 0..n {
            let (tr, h, e) = physicality_violations(draw(&mut r).matrix());
            worst_tr = worst_tr.max(tr);
            worst_h = worst_h.max(h);
            worst_eig = worst_eig.min(e);
            if tr > 1e-10 || h > 1e-10 || e < -1e-10 {
                failures.push(name);
                break;
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "4×{n} samples; max |Tr−1| {worst_tr:.1e}, max Hermitian dev {worst_h:.1e}, min eigenvalue {worst_eig:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; failing: {failures:?}") }
        ),
    )
}

fn c2_dirichlet_moments() -> Outcome {
    let (k, mu, alpha0) = (5usize, 25.0, 11.6);
    let spec = BiasedDirichletSpec::new(k, mu, alpha0).unwrap();
    let params = resolve_biased_alphas(&spec);
    let mut r = rng(2, 0);
    let x1: Vec<f64> = (0..100_000).map(|_| sample_dirichlet(&params, &mut r)[0]).collect();
    // generic Dirichlet marginal: a₁/a₀ and a₁(a₀−a₁)/(a₀²(a₀+1)) with a₁ = μa₀/(μ+K−1)
    let a1 = mu * alpha0 / (mu + k as f64 - 1.0);
    let expect_mean = a1 / alpha0;
    let expect_var = a1 * (alpha0 - a1) / (alpha0 * alpha0 * (alpha0 + 1.0));
    let m = mean(&x1);
    let se_m = std_error(&x1);
    let v = variance(&x1);
    let sq: Vec<f64> = x1.iter().map(|x| (x - m).powi(2)).collect();
    let se_v = std_error(&sq);
    let ok_mean = (m - 25.0 / 29.0).abs() <= 3.0 * se_m && (expect_mean - 25.0 / 29.0).abs() < 1e-15;
    let ok_var = (v - expect_var).abs() <= 3.0 * se_v;
    outcome(
        ok_mean && ok_var,
        format!(
            "E(x1) {m:.5} vs {:.5} ({:.1} se); var {v:.3e} vs {expect_var:.3e} ({:.1} se)",
            25.0 / 29.0,
            (m - 25.0 / 29.0).abs() / se_m,
            (v - expect_var).abs() / se_v
        ),
    )
}

fn c3_ma_purity() -> Outcome {
    let mut r = rng(3, 0);
    let p: Vec<f64> = (0..100_000).map(|_| purity(&sample_ma(4, 5, 0.4, &mut r).unwrap())).collect();
    let m = mean(&p);
    outcome((m - 0.600).abs() <= 0.01, format!("mean purity {m:.4} (target 0.600 ± 0.01)"))
}

/// Hilbert–Schmidt purity `Tr(W²)/Tr(W)²` of `W = GG†` with a Box–Muller
/// Ginibre `G`, using nothing from the library but raw random words.
fn hs_oracle_purity(dim: usize, words: &mut impl RngCore) -> f64 {
    let mut uniform = || ((words.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    let mut g = vec![(0.0f64, 0.0f64); dim * dim];
    for z in g.iter_mut() {
        let (u1, u2) = (uniform(), uniform());
        let rad = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        *z = (rad * th.cos(), rad * th.sin());
    }
    let mut tr = 0.0;
    let mut tr_sq = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            // W_ij = Σ_k G_ik conj(G_jk)
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..dim {
                let (a, b) = g[i * dim + k];
                let (c, d) = g[j * dim + k];
                re += a * c + b * d;
                im += b * c - a * d;
            }
            tr_sq += re * re + im * im;
            if i == j {
                tr += re;
            }
        }
    }
    tr_sq / (tr * tr)
}

fn c4_hs_reduction() -> Outcome {
    let n = 20_000;
    let mut r = rng(4, 0);
    let ma: Vec<f64> = (0..n).map(|_| purity(&sample_ma(4, 4, 4.0, &mut r).unwrap())).collect();
    let mut w = rng(4, 1);
    let hs: Vec<f64> = (0..n).map(|_| hs_oracle_purity(4, &mut w)).collect();
    let ks = ks_two_sample(&ma, &hs);
    outcome(
        ks.p_value > 0.01,
        format!(
            "KS D {:.4}, p {:.3} (n = {n} each); mean purity MA {:.4}, HS {:.4}",
            ks.statistic,
            ks.p_value,
            mean(&ma),
            mean(&hs)
        ),
    )
}

fn c5_ml_prior_mean() -> Outcome {
    let n = 100_000;
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    let mut stream = 0;
    for (name, rho_ml) in [("A", fixture_a()), ("B", fixture_b())] {
        for (mu, alpha0) in [(25.0, 11.6), (0.25, 1.7)] {
            let k = 5usize;
            let spec = BiasedDirichletSpec::new(k, mu, alpha0).unwrap();
            let mut r = rng(5, stream);
            stream += 1;
            let mut sum = CMatrix::zeros(4);
            for _ in 0..n {
                sum.add_scaled(sample_ml_biased(&rho_ml, &spec, &mut r).matrix(), 1.0);
            }
            let mc = sum.scale(1.0 / n as f64);
            let d = 4.0;
            let mut expect = rho_ml.matrix().scale(mu);
            expect.add_scaled(&CMatrix::identity(4), (k as f64 - 1.0) / d);
            let expect = expect.scale(1.0 / (k as f64 + mu - 1.0));
            let diff = mc.max_abs_diff(&expect);
            worst = worst.max(diff);
            lines.push(format!("{name}/μ={mu}: {diff:.4}"));
        }
    }
    outcome(worst <= 0.01, format!("max elementwise deviation {worst:.4} [{}]", lines.join(", ")))
}

fn mean_matrix(states: &[DensityMatrix]) -> CMatrix {
    let mut sum = CMatrix::zeros(states[0].dim());
    for s in states {
        sum.add_scaled(s.matrix(), 1.0);
    }
    sum.scale(1.0 / states.len() as f64)
}

fn c6_parameterization() -> Outcome {
    let n = 100_000;
    let rho_ml = fixture_a();
    let spec = BiasedDirichletSpec::new(5, 25.0, 11.6).unwrap();
    let models = [
        ("bures D=4", PriorModel::bures(4).unwrap()),
        ("ML-biased D=4", PriorModel::ml_biased(rho_ml.matrix(), 25.0, 11.6, Some(5)).unwrap()),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, (name, model)) in models.iter().enumerate() {
        let mut rm = rng(6, 2 * i as u64);
        let mapped: Vec<DensityMatrix> = (0..n)
            .map(|_| model.map(&model.sample_reference(&mut rm)).unwrap())
            .collect();
        let mut rd = rng(6, 2 * i as u64 + 1);
        let direct: Vec<DensityMatrix> = (0..n)
            .map(|_| if i == 0 { sample_bures(4, &mut rd) } else { sample_ml_biased(&rho_ml, &spec, &mut rd) })
            .collect();
        let pm: Vec<f64> = mapped.iter().map(purity).collect();
        let pd: Vec<f64> = direct.iter().map(purity).collect();
        let ks = ks_two_sample(&pm, &pd);
        let diff = mean_matrix(&mapped).max_abs_diff(&mean_matrix(&direct));
        let mut ok = ks.p_value > 0.01 && diff <= 0.01;
        let mut note = format!("{name}: purity KS p {:.3}, mean-state diff {diff:.4}", ks.p_value);
        if i == 1 {
            let fm: Vec<f64> = mapped.iter().map(|s| fidelity(s, &rho_ml).unwrap()).collect();
            let fd: Vec<f64> = direct.iter().map(|s| fidelity(s, &rho_ml).unwrap()).collect();
            let ks_f = ks_two_sample(&fm, &fd);
            ok &= ks_f.p_value > 0.01;
            note.push_str(&format!(", fidelity-to-estimate KS p {:.3}", ks_f.p_value));
        }
        pass &= ok;
        notes.push(note);
    }
    outcome(pass, notes.join("; "))
}

fn c7_pcn() -> Outcome {
    let rho_ml = fixture_a();
    let models = [
        ("bures D=2", PriorModel::bures(2).unwrap()),
        ("bures D=4", PriorModel::bures(4).unwrap()),
        ("ML-biased D=4", PriorModel::ml_biased(rho_ml.matrix(), 25.0, 11.6, Some(5)).unwrap()),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (i, (name, model)) in models.iter().enumerate() {
        let qubits = model.dim().trailing_zeros() as usize;
        let data = MeasurementDataset::empty(qubits, DatasetMode::SingleShot);
        let mut cfg = ChainConfig::new(1 << 15, RngSeed::new(SEED + 7, i as u64));
        cfg.burn_in = 0.1;
        let res = run_chain(model, &data, &cfg, &NoClock).unwrap();
        let prior_mean = match model.kind() {
            qbayes_core::priors::PriorKind::Bures => CMatrix::identity(model.dim()).scale(1.0 / model.dim() as f64),
            _ => {
                let mut m = rho_ml.matrix().scale(25.0);
                m.add_scaled(&CMatrix::identity(4), 1.0);
                m.scale(1.0 / 29.0)
            }
        };
        let diff = res.final_estimate().matrix().max_abs_diff(&prior_mean);
        pass &= diff <= 0.02;
        notes.push(format!("{name} M=0 deviation {diff:.4}"));
    }

    // N(0,1) reference × exp(−(w−1)²/2) ⇒ N(1/2, 1/2)
    let loglik = |w: &ParamVector| -0.5 * (w.as_slice()[0] - 1.0).powi(2);
    let mut r = rng(7, 100);
    let mut w = ParamVector::new(vec![0.0]).unwrap();
    let mut ll = loglik(&w);
    let steps = 1 << 17;
    let mut xs = Vec::with_capacity(steps);
    for _ in 0..steps {
        let s = pcn_step(&w, ll, 0.5, loglik, &mut r);
        w = s.w;
        ll = s.loglik;
        xs.push(w.as_slice()[0]);
    }
    let batch: Vec<f64> = xs.chunks_exact(1024).map(mean).collect();
    let sigma = std_error(&batch);
    let m = mean(&xs);
    pass &= (m - 0.5).abs() <= 3.0 * sigma;
    notes.push(format!("conjugate Gaussian mean {m:.4} ± {sigma:.4}"));
    outcome(pass, notes.join("; "))
}

fn fig2_desk(workers: usize) -> Fig2Report {
    let cfg = Fig2Config {
        qubits: 1,
        trials: 20,
        shots: 16_000,
        priors: vec![PriorSpec::Bures, PriorSpec::ml_biased(25.0, 11.6)],
        chain: ChainSettings::with_length(1 << 15),
        ..Fig2Config::default()
    };
    run_fig2(&cfg, &RunContext::new(SEED + 8, workers)).expect("fig2 run")
}

fn c8_concentration(report: &Fig2Report) -> Outcome {
    let row = report.table.row("bures", 1 << 15).expect("checkpoint 2^15");
    outcome(
        row.mean_fidelity >= 0.98,
        format!("Bures prior at 2^15: mean fidelity {:.5} ± {:.5} over 20 states", row.mean_fidelity, row.std_fidelity),
    )
}

fn c9_ordering(report: &Fig2Report) -> Outcome {
    let ml = PriorSpec::ml_biased(25.0, 11.6).label();
    let gap = |len: usize| {
        let b = report.table.row("bures", len).unwrap();
        let m = report.table.row(&ml, len).unwrap();
        let n = report.priors[0].fidelity.len() as f64;
        let pooled = (b.std_fidelity.powi(2) / n + m.std_fidelity.powi(2) / n).sqrt();
        (m.mean_fidelity - b.mean_fidelity, pooled, b.mean_fidelity, m.mean_fidelity)
    };
    let (g6, se6, b6, m6) = gap(1 << 6);
    let (g14, _, b14, m14) = gap(1 << 14);
    let est = report.estimate_fidelity.as_ref().map_or(f64::NAN, |f| mean(f));
    outcome(
        g6 >= se6 && g14.abs() < g6,
        format!(
            "2^6: ML {m6:.4} vs Bures {b6:.4}, gap {g6:.4} = {:.1} pooled se; 2^14: ML {m14:.4} vs Bures {b14:.4}, gap {g14:.5}; estimate fidelity {est:.4}",
            g6 / se6
        ),
    )
}

fn c10_two_qubit() -> Outcome {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let phi = StateVector::new(vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).unwrap().projector();
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("phi_plus.json");
    let data = simulate_counts_36(&phi, 10_000, &mut rng(10, 0)).unwrap();
    io::write_dataset(&data_path, &data).unwrap();
    let cfg = ReconstructConfig {
        data: vec![data_path],
        priors: vec![PriorSpec::Bures, PriorSpec::ml_biased(0.25, 1.7)],
        chain: ChainSettings::with_length(1 << 15),
    };
    let out = run_reconstruct(&cfg, &RunContext::new(SEED + 10, 1), dir.path()).unwrap();
    let f_b = fidelity(out[0].result.final_estimate(), &phi).unwrap();
    let f_m = fidelity(out[1].result.final_estimate(), &phi).unwrap();
    let reloaded = io::read_density_matrix(&out[0].estimate_file).unwrap();
    let f_file = fidelity(&reloaded, &phi).unwrap();
    outcome(
        f_b >= 0.97 && f_m >= f_b - 0.01 && (f_file - f_b).abs() < 1e-9,
        format!("Φ⁺ 36×10^4 counts at 2^15: Bures {f_b:.5}, ML(0.25, 1.7) {f_m:.5}"),
    )
}

fn c11_determinism(first: &Fig2Report) -> Outcome {
    let again = fig2_desk(1);
    let parallel = fig2_desk(2);
    let a = first.table.fidelity_columns();
    let same_serial = a == again.table.fidelity_columns() && first.priors.iter().zip(&again.priors).all(|(x, y)| x.fidelity == y.fidelity);
    let same_parallel = a == parallel.table.fidelity_columns();
    outcome(
        same_serial && same_parallel,
        format!(
            "{} rows; repeat identical: {same_serial}; 2-worker run identical: {same_parallel}",
            a.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Duration, Outcome)> = Vec::new();
    let mut record = |id: u32, name: &'static str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(|| f())).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = t0.elapsed();
        let res = if elapsed > budget {
            outcome(false, format!("{} [over budget {budget:?}]", res.detail))
        } else {
            res
        };
        println!(
            "{} C{id:<2} {name}: {} ({:.1} s)",
            if res.pass { "PASS" } else { "FAIL" },
            res.detail,
            elapsed.as_secs_f64()
        );
        results.push((id, name, elapsed, res));
    };

    let min = |m: u64| Duration::from_secs(60 * m);
    record(1, "physicality fuzz", min(1), &mut c1_physicality);
    record(2, "Dirichlet moments", Duration::from_secs(10), &mut c2_dirichlet_moments);
    record(3, "MA purity", min(1), &mut c3_ma_purity);
    record(4, "HS reduction", min(2), &mut c4_hs_reduction);
    record(5, "ML-prior mean", min(1), &mut c5_ml_prior_mean);
    record(6, "parameterization equivalence", min(3), &mut c6_parameterization);
    record(7, "pCN correctness", min(2), &mut c7_pcn);

    let t0 = Instant::now();
    let report = catch_unwind(|| fig2_desk(1)).ok();
    let fig2_time = t0.elapsed();
    let with_report = |f: fn(&Fig2Report) -> Outcome| {
        let report = report.clone();
        move || match &report {
            Some(r) => f(r),
            None => outcome(false, "fig2 run panicked"),
        }
    };
    // the shared run counts against both budgets
    let mut c8 = with_report(c8_concentration);
    let mut c9 = with_report(c9_ordering);
    record(8, "posterior concentration", min(10).saturating_sub(fig2_time), &mut c8);
    record(9, "prior ordering", min(15).saturating_sub(fig2_time), &mut c9);
    record(10, "two-qubit counted data", min(10), &mut c10_two_qubit);
    let mut c11 = with_report(c11_determinism);
    record(11, "determinism", min(15), &mut c11);

    let failed: Vec<u32> = results.iter().filter(|r| !r.3.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed (shared fig2 run {:.1} s)",
        results.len() - failed.len(),
        results.len(),
        fig2_time.as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
