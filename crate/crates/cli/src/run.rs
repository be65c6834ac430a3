use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use schurtomo::engine::{
    full_learn, learn_balanced, unentangled_baseline, BalancedConfig, CopyBudget, DirectSource, FullConfig,
    MeasurableState,
};
use schurtomo::keyl::{sample_keyl, weak_schur_probs, write_trace_jsonl, KeylConfig, SamplerStats, TraceRecord};
use schurtomo::lab::{
    avg_likelihood_check, keyl_transcript, linearization_chi2, rotation_average_check, skewness_sweep,
    well_balanced_stats, DiagnosticReport, WellBalancedStats,
};
use schurtomo::partition::{sample_sw, sw_pmf, sw_uniform};
use schurtomo::rng::{path_label, substream};
use schurtomo::stats::{chi_square_test, mean_stderr, ChiSquareResult};
use schurtomo::tensor::{
    c, diag, frobenius, gue_star, haar_vector, identity, project_density, sample_hard_instance_capped,
    trace_distance, DensityMatrix, Deviation, PureVector,
};

use crate::config::{Algorithm, Command, ExperimentConfig, StateSpec};
use crate::output::{write_csv_file, write_json_file, Cell, MatrixJson};
use crate::verify::run_verify;
use crate::CliError;

/// Stage ids, the last element of every RNG path.
const STAGE_STATE: u64 = 0;
const STAGE_LEARN: u64 = 1;
const STAGE_SAMPLE: u64 = 2;

/// Documented in the manifest so runs can be reproduced by hand.
pub const SEED_SCHEME: &str =
    "ChaCha8 keyed by the master seed; stream id = SplitMix64 fold of the path [t, n, trial, stage] (stage 0 = state, 1 = learner, 2 = sampler)";

const SW_CHUNK: usize = 10_000;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub jobs: usize,
    pub output: PathBuf,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub message: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    command: &'static str,
    d: usize,
    t: Vec<usize>,
    n: Vec<usize>,
    eps: f64,
    delta: f64,
    seed: u64,
    seed_scheme: &'static str,
    jobs: usize,
    stage_budgets: BTreeMap<String, u64>,
    files: Vec<String>,
    created_unix: u64,
    config: &'a ExperimentConfig,
}

struct Produced {
    message: String,
    files: Vec<PathBuf>,
    budgets: BTreeMap<String, u64>,
}

/// Runs one configured command, writing its artifacts and a manifest into
/// `opts.output`.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&opts.output)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", opts.jobs)))?;
    let produced = pool.install(|| match cfg.command {
        Command::Verify => verify_cmd(cfg, opts),
        Command::SwSample => sw_sample_cmd(cfg, opts),
        Command::KeylSample => keyl_sample_cmd(cfg, opts),
        Command::TomoRun | Command::ScalingSweep => tomo_cmd(cfg, opts),
        Command::Diagnostics => diagnostics_cmd(cfg, opts),
    });
    // Failed checks still leave their artifacts behind; write the manifest either way.
    let (produced, failure) = match produced {
        Ok(p) => (p, None),
        Err((p, e)) => (p, Some(e)),
    };
    let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        schema: cfg.schema,
        command: cfg.command.name(),
        d: cfg.d,
        t: cfg.ts(),
        n: cfg.ns(),
        eps: cfg.eps,
        delta: cfg.delta,
        seed: cfg.seed(),
        seed_scheme: SEED_SCHEME,
        jobs: opts.jobs.max(1),
        stage_budgets: produced.budgets.clone(),
        files: produced
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        created_unix,
        config: cfg,
    };
    let manifest_path = opts.output.join("manifest.json");
    write_json_file(&manifest_path, &manifest)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut files = produced.files;
    files.push(manifest_path);
    Ok(RunSummary {
        message: produced.message,
        files,
    })
}

type CmdResult = Result<Produced, (Produced, CliError)>;

fn plain(files: Vec<PathBuf>, message: String) -> Produced {
    Produced {
        message,
        files,
        budgets: BTreeMap::new(),
    }
}

fn empty_err(e: CliError) -> (Produced, CliError) {
    (plain(Vec::new(), String::new()), e)
}

/// The state for one trial. Hard instances are redrawn per trial.
pub fn make_state(cfg: &ExperimentConfig, t: usize, n: usize, trial: usize) -> Result<DensityMatrix, CliError> {
    let d = cfg.d;
    match &cfg.state {
        StateSpec::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(d)),
        StateSpec::Diagonal { values } => {
            DensityMatrix::from_diagonal(values).map_err(|e| CliError::Config(format!("diagonal state: {e}")))
        }
        StateSpec::HardInstance { sigma, cap } => {
            let mut rng = substream(cfg.seed(), &[t as u64, n as u64, trial as u64, STAGE_STATE]);
            Ok(sample_hard_instance_capped(d, *sigma, *cap, &mut rng)?.state)
        }
        StateSpec::File { path } => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read state file {}: {e}", path.display())))?;
            let m: MatrixJson =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("state file: {e}")))?;
            let m = m.to_matrix()?;
            if m.nrows() != d {
                return Err(CliError::Config(format!("state file has dimension {}, expected {d}", m.nrows())));
            }
            DensityMatrix::new(m).map_err(|e| CliError::Config(format!("state file: {e}")))
        }
    }
}

fn verify_cmd(cfg: &ExperimentConfig, opts: &RunOptions) -> CmdResult {
    let rows = run_verify(cfg.d, cfg.first_t(), cfg.seed()).map_err(empty_err)?;
    let mut table = format!("{:<24} {:<6} detail\n", "check", "status");
    for r in &rows {
        table.push_str(&format!("{:<24} {:<6} {}\n", r.name, if r.pass { "PASS" } else { "FAIL" }, r.detail));
    }
    let csv_path = opts.output.join("verify.csv");
    let json_path = opts.output.join("verify.json");
    let csv_rows: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| vec![r.name.clone().into(), (if r.pass { "pass" } else { "fail" }).into(), r.detail.clone().into()])
        .collect();
    let written = write_csv_file(&csv_path, &["check", "status", "detail"], &csv_rows)
        .and_then(|_| write_json_file(&json_path, &rows));
    let produced = plain(vec![csv_path, json_path], table.trim_end().to_string());
    if let Err(e) = written {
        return Err((produced, e));
    }
    match rows.iter().find(|r| !r.pass) {
        Some(r) => {
            print!("{table}");
            let name = r.name.clone();
            Err((produced, CliError::CheckFailed(name)))
        }
        None => Ok(produced),
    }
}

#[derive(Serialize)]
struct SwResults<'a> {
    config: &'a ExperimentConfig,
    t: usize,
    samples: usize,
    spectrum: Vec<f64>,
    chi_square: ChiSquareResult,
    table: Vec<SwRow>,
}

#[derive(Serialize)]
struct SwRow {
    partition: String,
    count: u64,
    probability: f64,
}

fn sw_sample_cmd(cfg: &ExperimentConfig, opts: &RunOptions) -> CmdResult {
    let inner = || -> Result<Produced, CliError> {
        let t = cfg.first_t();
        let n = cfg.first_n();
        let d = cfg.d;
        let state = make_state(cfg, t, n, 0)?;
        let spectrum = state.spectrum();
        let dist = if matches!(cfg.state, StateSpec::MaximallyMixed) {
            sw_uniform(t, d)?
        } else {
            sw_pmf(t, d, &spectrum)?
        };
        let alpha = dist.spectrum.clone();
        let chunks = n.div_ceil(SW_CHUNK);
        let counts: Vec<Vec<u64>> = (0..chunks)
            .into_par_iter()
            .map(|k| -> Result<Vec<u64>, CliError> {
                let mut rng = substream(cfg.seed(), &[t as u64, n as u64, k as u64, STAGE_SAMPLE]);
                let size = SW_CHUNK.min(n - k * SW_CHUNK);
                let mut local = vec![0u64; dist.table.len()];
                for _ in 0..size {
                    let lam = sample_sw(t, &alpha, &mut rng)?;
                    let idx = dist.table.iter().position(|(p, _)| *p == lam).expect("sampled shape is in the table");
                    local[idx] += 1;
                }
                Ok(local)
            })
            .collect::<Result<_, _>>()?;
        let mut total = vec![0u64; dist.table.len()];
        for local in counts {
            for (a, b) in total.iter_mut().zip(local) {
                *a += b;
            }
        }
        let chi = chi_square_test(&total, &dist.probs())?;
        let rows: Vec<Vec<Cell>> = dist
            .table
            .iter()
            .zip(&total)
            .map(|((lam, p), &k)| vec![lam.dashed().into(), k.into(), (p * n as f64).into(), (*p).into()])
            .collect();
        let csv_path = opts.output.join("sw_samples.csv");
        write_csv_file(&csv_path, &["partition", "count", "expected", "probability"], &rows)?;
        let json_path = opts.output.join("results.json");
        let table = dist
            .table
            .iter()
            .zip(&total)
            .map(|((lam, p), &k)| SwRow {
                partition: lam.dashed(),
                count: k,
                probability: *p,
            })
            .collect();
        write_json_file(
            &json_path,
            &SwResults {
                config: cfg,
                t,
                samples: n,
                spectrum: alpha,
                chi_square: chi,
                table,
            },
        )?;
        Ok(plain(
            vec![csv_path, json_path],
            format!(
                "sw-sample: {n} draws, chi-square {:.3} on {} dof, p = {:.4}",
                chi.statistic, chi.dof, chi.p_value
            ),
        ))
    };
    inner().map_err(empty_err)
}

#[derive(Serialize)]
struct KeylResults<'a> {
    config: &'a ExperimentConfig,
    t: usize,
    outcomes: usize,
    sampler_stats: SamplerStats,
    mean_estimate: MatrixJson,
    lambda_chi_square: ChiSquareResult,
}

fn keyl_sample_cmd(cfg: &ExperimentConfig, opts: &RunOptions) -> CmdResult {
    let inner = || -> Result<Produced, CliError> {
        let t = cfg.first_t();
        let n = cfg.first_n();
        let d = cfg.d;
        let state = make_state(cfg, t, n, 0)?;
        let keyl_cfg = KeylConfig::default();
        let outcomes: Vec<_> = (0..n)
            .into_par_iter()
            .map(|i| {
                let path = [t as u64, n as u64, i as u64, STAGE_SAMPLE];
                let mut rng = substream(cfg.seed(), &path);
                sample_keyl(&state, t, &mut rng, &keyl_cfg).map(|o| (o, path_label(&path)))
            })
            .collect::<Result<_, _>>()?;
        let dist = weak_schur_probs(&state, t)?;
        let mut counts = vec![0u64; dist.table.len()];
        let mut stats = SamplerStats::default();
        let mut mean = schurtomo::tensor::CMatrix::zeros(d, d);
        let mut records = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for (i, (o, label)) in outcomes.iter().enumerate() {
            stats.record(o);
            mean += &o.estimate;
            if let Some(idx) = dist.table.iter().position(|(p, _)| *p == o.lam) {
                counts[idx] += 1;
            }
            let rec = TraceRecord::from_outcome(i as u64, o, label.clone());
            rows.push(vec![
                i.into(),
                o.lam.dashed().into(),
                o.accept_trials.into(),
                serde_json::to_value(rec.sampler_mode)?.as_str().unwrap_or("").to_string().into(),
            ]);
            records.push(rec);
        }
        mean /= c(n as f64);
        let chi = chi_square_test(&counts, &dist.probs())?;
        let csv_path = opts.output.join("keyl_samples.csv");
        write_csv_file(&csv_path, &["batch_index", "lambda", "accept_trials", "sampler_mode"], &rows)?;
        let trace_path = opts.output.join("trace.jsonl");
        write_trace_jsonl(std::io::BufWriter::new(fs::File::create(&trace_path)?), &records)?;
        let json_path = opts.output.join("results.json");
        write_json_file(
            &json_path,
            &KeylResults {
                config: cfg,
                t,
                outcomes: n,
                sampler_stats: stats,
                mean_estimate: MatrixJson::from_matrix(&mean),
                lambda_chi_square: chi,
            },
        )?;
        let budgets = BTreeMap::from([("keyl".to_string(), (n * t) as u64)]);
        Ok(Produced {
            message: format!(
                "keyl-sample: {n} outcomes, {} via fallback chain, λ chi-square p = {:.4}",
                stats.metropolis_outcomes, chi.p_value
            ),
            files: vec![csv_path, trace_path, json_path],
            budgets,
        })
    };
    inner().map_err(empty_err)
}

/// Metrics of one learning trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub algorithm: Algorithm,
    pub t: usize,
    pub n: usize,
    pub trial: usize,
    pub trace_distance: f64,
    pub frobenius: f64,
    /// `‖Ê − (ρ − I/d)‖_F²` for the balanced learner, `‖ρ̂ − ρ‖_F²` otherwise.
    pub sq_error: f64,
    pub copy_budget: CopyBudget,
    pub sampler_stats: SamplerStats,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub t: usize,
    pub n: usize,
    pub trials: usize,
    pub mean_trace_distance: f64,
    pub stderr_trace_distance: f64,
    pub mean_frobenius: f64,
    pub stderr_frobenius: f64,
    pub mean_sq_error: f64,
    pub stderr_sq_error: f64,
    pub mean_copies: f64,
}

#[derive(Serialize)]
struct TomoResults<'a> {
    config: &'a ExperimentConfig,
    trials: &'a [TrialMetrics],
    aggregates: Vec<Aggregate>,
}

/// Per-`(t, n)` mean and standard error, in the order groups first appear.
pub fn aggregate(trials: &[TrialMetrics]) -> Vec<Aggregate> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for m in trials {
        if !keys.contains(&(m.t, m.n)) {
            keys.push((m.t, m.n));
        }
    }
    keys.into_iter()
        .map(|(t, n)| {
            let group: Vec<&TrialMetrics> = trials.iter().filter(|m| m.t == t && m.n == n).collect();
            let col = |f: fn(&TrialMetrics) -> f64| mean_stderr(&group.iter().map(|m| f(m)).collect::<Vec<_>>());
            let (mt, st) = col(|m| m.trace_distance);
            let (mf, sf) = col(|m| m.frobenius);
            let (ms, ss) = col(|m| m.sq_error);
            let (mc, _) = col(|m| m.copy_budget.n_total as f64);
            Aggregate {
                t,
                n,
                trials: group.len(),
                mean_trace_distance: mt,
                stderr_trace_distance: st,
                mean_frobenius: mf,
                stderr_frobenius: sf,
                mean_sq_error: ms,
                stderr_sq_error: ss,
                mean_copies: mc,
            }
        })
        .collect()
}

fn full_config(cfg: &ExperimentConfig, n: usize) -> FullConfig {
    FullConfig {
        n_baseline: Some(n),
        t_limit_slack: cfg.t_limit_slack,
        ..FullConfig::default()
    }
}

pub fn tomo_trial(cfg: &ExperimentConfig, t: usize, n: usize, trial: usize) -> Result<TrialMetrics, CliError> {
    let rho = make_state(cfg, t, n, trial)?;
    let src = DirectSource::new(rho.clone());
    let mut rng = substream(cfg.seed(), &[t as u64, n as u64, trial as u64, STAGE_LEARN]);
    let d = cfg.d;
    let (estimate, sq_error, budget, stats, warning) = match cfg.algorithm {
        Algorithm::Full => {
            let out = full_learn(&src, t, cfg.eps, cfg.delta, &mut rng, &full_config(cfg, n))?;
            let err = frobenius(&(out.state.matrix() - rho.matrix())).powi(2);
            (out.state, err, out.budget, out.sampler_stats, out.warning)
        }
        Algorithm::Balanced => {
            let out = learn_balanced(&src, t, n, &mut rng, &BalancedConfig::default())?;
            let truth = rho.deviation_from_mixed();
            let err = frobenius(&(out.e_hat.matrix() - truth.matrix())).powi(2);
            let state = project_density(&(identity(d) / c(d as f64) + out.e_hat.matrix()), None)?;
            let mut budget = CopyBudget::default();
            budget.add("balanced", src.copies_consumed());
            (state, err, budget, out.sampler_stats, None)
        }
        Algorithm::Baseline => {
            let out = unentangled_baseline(&src, n, &mut rng)?;
            let err = frobenius(&(out.state.matrix() - rho.matrix())).powi(2);
            let mut budget = CopyBudget::default();
            budget.add("baseline", src.copies_consumed());
            (out.state, err, budget, SamplerStats::default(), None)
        }
    };
    Ok(TrialMetrics {
        algorithm: cfg.algorithm,
        t,
        n,
        trial,
        trace_distance: trace_distance(&estimate, &rho),
        frobenius: frobenius(&(estimate.matrix() - rho.matrix())),
        sq_error,
        copy_budget: budget,
        sampler_stats: stats,
        warning,
    })
}

fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Full => "full",
        Algorithm::Balanced => "balanced",
        Algorithm::Baseline => "baseline",
    }
}

fn tomo_cmd(cfg: &ExperimentConfig, opts: &RunOptions) -> CmdResult {
    let inner = || -> Result<Produced, CliError> {
        let grid: Vec<(usize, usize, usize)> = cfg
            .ts()
            .into_iter()
            .flat_map(|t| cfg.ns().into_iter().flat_map(move |n| (0..cfg.trials).map(move |k| (t, n, k))))
            .collect();
        let trials: Vec<TrialMetrics> = grid
            .par_iter()
            .map(|&(t, n, k)| tomo_trial(cfg, t, n, k))
            .collect::<Result<_, _>>()?;
        let rows: Vec<Vec<Cell>> = trials
            .iter()
            .map(|m| {
                vec![
                    algorithm_name(m.algorithm).into(),
                    m.t.into(),
                    m.n.into(),
                    m.trial.into(),
                    m.trace_distance.into(),
                    m.frobenius.into(),
                    m.sq_error.into(),
                    m.copy_budget.n_total.into(),
                    m.sampler_stats.metropolis_outcomes.into(),
                    m.warning.clone().unwrap_or_default().into(),
                ]
            })
            .collect();
        let stem = if cfg.command == Command::ScalingSweep { "sweep" } else { "trials" };
        let csv_path = opts.output.join(format!("{stem}.csv"));
        write_csv_file(
            &csv_path,
            &[
                "algorithm",
                "t",
                "n",
                "trial",
                "trace_distance",
                "frobenius",
                "sq_error",
                "copies",
                "metropolis_outcomes",
                "warning",
            ],
            &rows,
        )?;
        let aggregates = aggregate(&trials);
        let json_path = opts.output.join("results.json");
        write_json_file(
            &json_path,
            &TomoResults {
                config: cfg,
                trials: &trials,
                aggregates: aggregates.clone(),
            },
        )?;
        let mut budgets = BTreeMap::new();
        for m in &trials {
            for (stage, k) in &m.copy_budget.per_stage {
                *budgets.entry(stage.clone()).or_insert(0) += k;
            }
        }
        let mut message = format!("{}: {} trials\n", cfg.command.name(), trials.len());
        for a in &aggregates {
            message.push_str(&format!(
                "t = {:<2} n = {:<8} trace distance {:.4} ± {:.4}  squared error {:.3e} ± {:.1e}\n",
                a.t, a.n, a.mean_trace_distance, a.stderr_trace_distance, a.mean_sq_error, a.stderr_sq_error
            ));
        }
        Ok(Produced {
            message: message.trim_end().to_string(),
            files: vec![csv_path, json_path],
            budgets,
        })
    };
    inner().map_err(empty_err)
}

#[derive(Serialize)]
struct DiagnosticsResults<'a> {
    config: &'a ExperimentConfig,
    reports: &'a [DiagnosticReport],
    well_balanced: WellBalancedStats,
}

fn diagnostics_cmd(cfg: &ExperimentConfig, opts: &RunOptions) -> CmdResult {
    let inner = || -> Result<(Produced, Vec<DiagnosticReport>), CliError> {
        let d = cfg.d;
        let t = cfg.first_t();
        let n = cfg.first_n();
        let seed = cfg.seed();
        let rng_for = |k: u64| substream(seed, &[t as u64, n as u64, k, STAGE_SAMPLE]);
        let mut reports = Vec::new();

        let skew = skewness_sweep(d, t, n, &mut rng_for(0))?;
        let worst = skew
            .iter()
            .max_by(|a, b| a.margin_ratio.total_cmp(&b.margin_ratio))
            .cloned()
            .expect("n ≥ 1 vectors");
        reports.push(DiagnosticReport {
            check_name: format!("skewness_worst_of_{n}"),
            pass: skew.iter().all(|r| r.pass),
            ..worst
        });

        let mut rng = rng_for(1);
        let g = gue_star(d.max(2), &mut rng);
        if d >= 2 && t >= 2 {
            let e = g.scaled(cfg.eps / g.frobenius());
            let dim = d.pow(t as u32);
            let v = PureVector::new(d, t, haar_vector(dim, &mut rng).as_slice().to_vec())?;
            reports.push(rotation_average_check(&e, &v, n, &mut rng)?.report);
        }

        if d >= 2 {
            let dir = g.scaled(1.0 / g.op_norm());
            let rho = DensityMatrix::new(identity(d) / c(d as f64) + dir.matrix() * c(cfg.eps / d as f64))?;
            let chi = linearization_chi2(&rho, t, n, &mut rng_for(2))?;
            reports.push(DiagnosticReport {
                check_name: if chi.precondition_met {
                    "linearization_chi2".into()
                } else {
                    "linearization_chi2_outside_regime".into()
                },
                ..chi.report
            });
        }

        let rho0 = DensityMatrix::maximally_mixed(d);
        let m = n.min(500);
        let transcript = keyl_transcript(&rho0, t, m, "maximally-mixed", &mut rng_for(3), &KeylConfig::default())?;
        let wb = well_balanced_stats(&transcript, &rho0, t)?;
        let expected = sw_uniform(t, d)?.expectation(|l| l.sum_squares() as f64);
        let (mean, se) = mean_stderr(&wb.a_terms);
        let gap = (mean - expected).abs();
        reports.push(DiagnosticReport {
            check_name: "a_stat_per_step".into(),
            lhs: gap,
            rhs_bound: 0.0,
            stderr: se,
            margin_ratio: if se > 0.0 { gap / (5.0 * se) } else { 0.0 },
            pass: gap <= 5.0 * se + 1e-9,
        });
        if d >= 2 {
            let mut entries = vec![0.0; d];
            entries[0] = cfg.eps / d as f64;
            entries[1] = -cfg.eps / d as f64;
            let delta = Deviation::new(diag(&entries))?;
            reports.push(avg_likelihood_check(&transcript, &rho0, &delta, cfg.eps, t, 200, &mut rng_for(4))?);
        }

        let rows: Vec<Vec<Cell>> = reports
            .iter()
            .map(|r| {
                vec![
                    r.check_name.clone().into(),
                    r.lhs.into(),
                    r.rhs_bound.into(),
                    r.stderr.into(),
                    r.margin_ratio.into(),
                    (if r.pass { "pass" } else { "fail" }).into(),
                ]
            })
            .collect();
        let csv_path = opts.output.join("diagnostics.csv");
        write_csv_file(&csv_path, &["check_name", "lhs", "rhs_bound", "stderr", "margin_ratio", "pass"], &rows)?;
        let json_path = opts.output.join("diagnostics.json");
        write_json_file(
            &json_path,
            &DiagnosticsResults {
                config: cfg,
                reports: &reports,
                well_balanced: wb,
            },
        )?;
        let mut message = String::from("diagnostics:\n");
        for r in &reports {
            message.push_str(&format!(
                "{:<34} {} margin {:.3e}\n",
                r.check_name,
                if r.pass { "PASS" } else { "FAIL" },
                r.margin_ratio
            ));
        }
        Ok((plain(vec![csv_path, json_path], message.trim_end().to_string()), reports))
    };
    match inner() {
        Err(e) => Err(empty_err(e)),
        Ok((p, reports)) => match reports.iter().find(|r| !r.pass) {
            Some(r) => {
                let name = r.check_name.clone();
                Err((p, CliError::CheckFailed(name)))
            }
            None => Ok(p),
        },
    }
}
