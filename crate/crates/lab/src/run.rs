//! Executes a validated configuration: independent jobs run on a worker
//! pool, the report is assembled on the calling thread.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use mixlab_core::fim_experiment::fim_spectrum_experiment;
use mixlab_core::fisher::{empirical_fim, spectrum_report};
use mixlab_core::regret::{
    dominance_mass, exact_regret_supervised, exact_regrets, mc_regret, AltLearner, Method, RegretReport, Setting,
    SettingKind,
};
use mixlab_core::sgld::{ensemble_predict, sgld_chain};
use mixlab_core::weight::{default_epsilon_grid, regret_bound, BoundSetting};
use mixlab_core::{Context, Dataset, Error, ModelFamily, PriorSpec};

use crate::config::{
    AltConfig, ConfigError, ExperimentConfig, ExperimentKind, MethodChoice, SettingName,
};
use crate::report::{
    finite, BoundRow, DeepLinearRow, DominanceRow, Failure, NetSpectrumRow, RegretRow, Row, RunReport, SgldRow,
    SpectrumRow, Status, Table, Timings, SCHEMA,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_ACCEPTANCE: u8 = 4;

pub const OUT_ENV: &str = "MIXLAB_OUT";
pub const DEFAULT_OUT: &str = "mixlab-out";

/// `--out`, then the config's `output`, then `$MIXLAB_OUT`, then
/// `./mixlab-out`.
pub fn resolve_output(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Rows of one job plus lines for the CSV tables, keyed by table index.
#[derive(Default)]
struct JobOutput {
    rows: Vec<Row>,
    lines: Vec<(usize, Vec<String>)>,
    /// Failure that still left usable rows (divergence, unbounded bound).
    soft_failure: Option<String>,
}

type Job<'a> = Box<dyn Fn() -> Result<JobOutput, Error> + Send + Sync + 'a>;

fn setting_name(s: SettingKind) -> &'static str {
    match s {
        SettingKind::Online => "online",
        SettingKind::Batch => "batch",
        SettingKind::Supervised => "supervised",
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ExactEnum => "exact-enum",
        Method::ExactSufficientStat => "exact-sufficient-stat",
        Method::MonteCarlo => "monte-carlo",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Runs the experiment and returns the report with its CSV tables.
/// Expects a validated config.
pub fn execute(config: &ExperimentConfig, threads: Option<usize>) -> Result<(RunReport, Vec<Table>), ConfigError> {
    config.validate()?;
    let start = Instant::now();
    let (tables, jobs) = plan(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.or(config.threads).unwrap_or(0))
        .build()
        .map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?;
    let results: Vec<(Result<JobOutput, Error>, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let t = Instant::now();
                let r = job();
                (r, t.elapsed().as_secs_f64())
            })
            .collect()
    });
    let mut tables = tables;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut job_seconds = Vec::new();
    for (i, (r, secs)) in results.into_iter().enumerate() {
        job_seconds.push(secs);
        match r {
            Ok(out) => {
                rows.extend(out.rows);
                for (t, line) in out.lines {
                    tables[t].push(line);
                }
                if let Some(message) = out.soft_failure {
                    failures.push(Failure { job: i, message });
                }
            }
            Err(e) => failures.push(Failure { job: i, message: e.to_string() }),
        }
    }
    let report = RunReport {
        schema: SCHEMA.to_string(),
        config: config.clone(),
        status: if failures.is_empty() { Status::Ok } else { Status::NumericalFailure },
        failures,
        rows,
        timings: Timings { total_seconds: start.elapsed().as_secs_f64(), job_seconds },
    };
    Ok((report, tables))
}

/// Executes and writes `report.json` plus CSV files into the resolved
/// output directory; returns the process exit code. Nothing is written
/// when the config is invalid.
pub fn run(config: &ExperimentConfig, out: Option<&Path>, threads: Option<usize>) -> Result<(u8, PathBuf), ConfigError> {
    let (report, tables) = execute(config, threads)?;
    let dir = resolve_output(out, config);
    crate::report::write_outputs(&dir, &report, &tables)
        .map_err(|source| ConfigError::Io { path: dir.clone(), source })?;
    let code = match report.status {
        Status::Ok => EXIT_OK,
        Status::NumericalFailure => EXIT_NUMERICAL,
    };
    Ok((code, dir))
}

fn plan(config: &ExperimentConfig) -> Result<(Vec<Table>, Vec<Job<'_>>), ConfigError> {
    match config.experiment {
        ExperimentKind::Regret => plan_regret(config),
        ExperimentKind::Bound => plan_bound(config),
        ExperimentKind::Fisher => plan_fisher(config),
        ExperimentKind::Sgld => plan_sgld(config),
        ExperimentKind::Dominance => plan_dominance(config),
        ExperimentKind::DeepLinear => plan_deep_linear(config),
    }
}

fn regret_row(r: &RegretReport, seed: u64) -> (Row, Vec<String>) {
    let row = RegretRow {
        n: r.n,
        setting: r.setting,
        value: finite(r.value),
        method: r.method,
        std_error: r.std_error,
        seed,
    };
    let line = vec![
        r.n.to_string(),
        setting_name(r.setting).into(),
        r.value.to_string(),
        method_name(r.method).into(),
        opt(r.std_error),
        seed.to_string(),
    ];
    (Row::Regret(row), line)
}

fn plan_regret(config: &ExperimentConfig) -> Result<(Vec<Table>, Vec<Job<'_>>), ConfigError> {
    let family = config.family()?;
    let prior = config.prior.build(&family, config.seed)?;
    let theta0 = config.theta0()?;
    let rc = config.regret.clone().unwrap_or_default();
    let supervised = config.supervised.as_ref().map(|s| s.build()).transpose()?;
    let table = Table::new("regret.csv", &["n", "setting", "value_bits", "method", "std_error", "seed"]);
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for &n in &config.n {
        for &s in &rc.settings {
            let seed = config.seed.wrapping_add(jobs.len() as u64);
            let (family, prior, theta0, supervised) = (family.clone(), prior.clone(), theta0.clone(), supervised.clone());
            let (method, n_mc) = (rc.method, rc.n_mc);
            jobs.push(Box::new(move || {
                let setting = match s {
                    SettingName::Online => Setting::Online,
                    SettingName::Batch => Setting::Batch,
                    SettingName::Supervised => Setting::Supervised(supervised.clone()),
                };
                let exact = || -> Result<RegretReport, Error> {
                    match &setting {
                        Setting::Supervised(Some(fin)) => exact_regret_supervised(&family, &theta0, &prior, fin, n),
                        Setting::Supervised(None) => Err(Error::NotAvailable("exact regret without a finite feature alphabet")),
                        Setting::Online | Setting::Batch => {
                            let grid = prior.discretize(&family)?;
                            let e = exact_regrets(&family, &theta0, &grid, n, false)?;
                            let value = if s == SettingName::Online { e.online } else { e.batch };
                            Ok(RegretReport { setting: setting.kind(), value, method: e.method, std_error: None, n, seed: None })
                        }
                    }
                };
                let report = match method {
                    MethodChoice::Exact => exact()?,
                    MethodChoice::MonteCarlo => mc_regret(&family, &theta0, &prior, n, &setting, n_mc, seed)?,
                    MethodChoice::Auto => match exact() {
                        Ok(r) => r,
                        Err(Error::TooLarge(_) | Error::NotAvailable(_)) => {
                            mc_regret(&family, &theta0, &prior, n, &setting, n_mc, seed)?
                        }
                        Err(e) => return Err(e),
                    },
                };
                let (row, line) = regret_row(&report, seed);
                Ok(JobOutput { rows: vec![row], lines: vec![(0, line)], soft_failure: None })
            }));
        }
    }
    Ok((vec![table], jobs))
}

fn plan_bound(config: &ExperimentConfig) -> Result<(Vec<Table>, Vec<Job<'_>>), ConfigError> {
    let family = config.family()?;
    let prior = config.prior.build(&family, config.seed)?;
    let theta0 = config.theta0()?;
    let bc = config.bound.clone().unwrap_or_default();
    let supervised = config.supervised.as_ref().map(|s| s.build()).transpose()?;
    let summary = Table::new("bound.csv", &["n", "setting", "bound_bits", "argmin_epsilon_sq", "exact_regret_bits", "seed"]);
    let curve = Table::new("bound_curve.csv", &["n", "setting", "epsilon_sq", "weight", "weight_lower", "value_bits"]);
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for &n in &config.n {
        for &s in &bc.settings {
            let seed = config.seed.wrapping_add(jobs.len() as u64);
            let (family, prior, theta0, supervised, bc) =
                (family.clone(), prior.clone(), theta0.clone(), supervised.clone(), bc.clone());
            jobs.push(Box::new(move || {
                let setting = match s {
                    SettingName::Online => BoundSetting::Online,
                    SettingName::Batch => BoundSetting::Batch,
                    SettingName::Supervised => BoundSetting::Supervised(supervised.clone().expect("validated")),
                };
                let eps = bc.epsilon_grid.clone().unwrap_or_else(|| default_epsilon_grid(n, bc.epsilon_points));
                let b = regret_bound(&family, &theta0, &prior, n, &setting, &eps, bc.n_mc, seed)?;
                let exact = if bc.with_exact {
                    match &setting {
                        BoundSetting::Supervised(fin) => Some(exact_regret_supervised(&family, &theta0, &prior, fin, n)?.value),
                        _ => {
                            let e = exact_regrets(&family, &theta0, &prior.discretize(&family)?, n, false)?;
                            Some(if s == SettingName::Online { e.online } else { e.batch })
                        }
                    }
                } else {
                    None
                };
                let name = setting_name(b.setting);
                let mut lines = vec![(
                    0,
                    vec![
                        n.to_string(),
                        name.into(),
                        b.bound_bits.to_string(),
                        opt(b.argmin_epsilon_sq),
                        opt(exact),
                        seed.to_string(),
                    ],
                )];
                for r in &b.rows {
                    lines.push((
                        1,
                        vec![
                            n.to_string(),
                            name.into(),
                            r.epsilon_sq.to_string(),
                            r.weight.to_string(),
                            r.weight_lower.to_string(),
                            r.value.to_string(),
                        ],
                    ));
                }
                let row = Row::Bound(BoundRow {
                    n,
                    setting: b.setting,
                    bound_bits: finite(b.bound_bits),
                    argmin_epsilon_sq: b.argmin_epsilon_sq,
                    exact_regret: exact,
                    seed,
                });
                let soft_failure = b
                    .is_unbounded()
                    .then(|| format!("{name} bound at n = {n} is unbounded: every ball weight vanished"));
                Ok(JobOutput { rows: vec![row], lines, soft_failure })
            }));
        }
    }
    Ok((vec![summary, curve], jobs))
}

fn plan_fisher(config: &ExperimentConfig) -> Result<(Vec<Table>, Vec<Job<'_>>), ConfigError> {
    let family = config.family()?;
    let fc = config.fisher.clone().unwrap_or_default();
    let mut jobs: Vec<Job<'_>> = Vec::new();
    if let ModelFamily::SoftmaxNet(net) = &family {
        let table = Table::new("net_spectrum.csv", &["kind", "replicate", "index", "eigenvalue", "seed"]);
        let training = fc.training.build();
        for rep in 0..fc.replicates {
            for &kind in &fc.datasets {
                // one seed per replicate so structured and shuffled data share inputs
                let seed = config.seed.wrapping_add(rep as u64);
                let (net, training) = (net.clone(), training.clone());
                let n_train = fc.n_train;
                jobs.push(Box::new(move || {
                    let r = fim_spectrum_experiment(kind, &net, n_train, seed, &training)?;
                    let kind_name = serde_json::to_value(kind).expect("serializable");
                    let kind_name = kind_name.as_str().unwrap_or_default().to_string();
                    let lines = r
                        .eigenvalues
                        .iter()
                        .enumerate()
                        .map(|(i, l)| (0, vec![kind_name.clone(), rep.to_string(), i.to_string(), l.to_string(), seed.to_string()]))
                        .collect();
                    let row = Row::NetSpectrum(NetSpectrumRow {
                        kind,
                        replicate: rep,
                        dimension: r.dimension,
                        n_train,
                        eigenvalues: r.eigenvalues,
                        tail_mass_ratio: r.tail_mass_ratio,
                        mean_grad_norm: r.mean_grad_norm,
                        final_loss: finite(r.final_loss),
                        steps: r.steps,
                        converged: r.converged,
                        seed,
                    });
                    Ok(JobOutput { rows: vec![row], lines, soft_failure: None })
                }));
            }
        }
        return Ok((vec![table], jobs));
    }
    let theta0 = config.theta0()?;
    let table = Table::new("spectrum.csv", &["n", "index", "eigenvalue", "seed"]);
    let ns = if config.n.is_empty() { vec![1] } else { config.n.clone() };
    let radius = PriorSpec::ball_radius(&family);
    for &n in &ns {
        let (family, theta0) = (family.clone(), theta0.clone());
        // every n scales the same per-sample estimate
        let seed = config.seed;
        let samples = fc.samples;
        let eps = fc.epsilon_sq_nats.unwrap_or(1.0 / n as f64);
        jobs.push(Box::new(move || {
            let fim = empirical_fim(&family, &theta0, samples, seed)?;
            let r = spectrum_report(&fim.scaled(n as f64), n, eps, radius)?;
            let lines = r
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(j, l)| (0, vec![n.to_string(), j.to_string(), l.to_string(), seed.to_string()]))
                .collect();
            let row = Row::Spectrum(SpectrumRow {
                n,
                eigenvalues: r.eigenvalues,
                effective_k: r.effective_k,
                radius,
                epsilon_sq: eps,
                theorem1_bits: r.bound_bits,
                seed,
            });
            Ok(JobOutput { rows: vec![row], lines, soft_failure: None })
        }));
    }
    Ok((vec![table], jobs))
}

fn plan_sgld(config: &ExperimentConfig) -> Result<(Vec<Table>, Vec<Job<'_>>), ConfigError> {
    let family = config.family()?;
    let prior = config.prior.build(&family, config.seed)?;
    let section = config.sgld.clone().unwrap_or_default();
    let data = match &section.data {
        Some(d) => Dataset::Symbols(d.clone()),
        None => family
            .sample(&config.theta0()?, config.n[0], config.seed)
            .map_err(|e| ConfigError::Invalid(format!("sgld data: {e}")))?,
    };
    let d = family.dimension();
    let mut header: Vec<String> = vec!["chain".into(), "sample".into()];
    header.extend((0..d).map(|i| format!("theta_{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let table = Table::new("sgld_trace.csv", &header_refs);
    let sgld = config.sgld_config(&section);
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for chain in 0..section.chains {
        let seed = config.seed.wrapping_add(1 + chain as u64);
        let (family, prior, data, sgld) = (family.clone(), prior.clone(), data.clone(), sgld.clone());
        jobs.push(Box::new(move || {
            let n = data.len();
            let samples = match sgld_chain(&family, &data, &prior, &sgld, seed) {
                Ok(s) => s,
                Err(e @ Error::Diverged { .. }) => {
                    let row = Row::Sgld(SgldRow { chain, n, kept: 0, mean: vec![], std: vec![], tv_to_grid: None, diverged: true, seed });
                    return Ok(JobOutput { rows: vec![row], lines: vec![], soft_failure: Some(e.to_string()) });
                }
                Err(e) => return Err(e),
            };
            let m = samples.thetas.len() as f64;
            let mean: Vec<f64> = (0..d).map(|i| samples.thetas.iter().map(|t| t[i]).sum::<f64>() / m).collect();
            let std: Vec<f64> = (0..d)
                .map(|i| (samples.thetas.iter().map(|t| (t[i] - mean[i]).powi(2)).sum::<f64>() / m).sqrt())
                .collect();
            let tv_to_grid = match &data {
                Dataset::Symbols(xs) => {
                    let ens = ensemble_predict(&samples, &family, Context::Symbols(xs))?;
                    let grid = prior.discretize(&family)?.update(&family, &data)?;
                    ens.total_variation(&grid.predictive(&family, Context::Symbols(xs))?)
                }
                _ => None,
            };
            let lines = samples
                .thetas
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let mut l = vec![chain.to_string(), k.to_string()];
                    l.extend(t.iter().map(|v| v.to_string()));
                    (0, l)
                })
                .collect();
            let row = Row::Sgld(SgldRow { chain, n, kept: samples.thetas.len(), mean, std, tv_to_grid, diverged: false, seed });
            Ok(JobOutput { rows: vec![row], lines, soft_failure: None })
        }));
    }
    Ok((vec![table], jobs))
}

fn plan_dominance(config: &ExperimentConfig) -> Result<(Vec<Table>, Vec<Job<'_>>), ConfigError> {
    let family = config.family()?;
    let prior = config.prior.build(&family, config.seed)?;
    let dc = config.dominance.clone().expect("validated");
    let alt = match &dc.alt {
        AltConfig::Mixture => AltLearner::Mixture,
        AltConfig::ErmPlugIn { floor } => AltLearner::ErmPlugIn { floor: *floor },
        AltConfig::FixedModel { theta } => AltLearner::FixedModel(theta.clone()),
    };
    let table = Table::new("dominance.csv", &["n", "gamma", "mass", "ci_halfwidth", "ceiling", "seed"]);
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for &n in &config.n {
        let seed = config.seed.wrapping_add(jobs.len() as u64);
        let (family, prior, alt, dc) = (family.clone(), prior.clone(), alt.clone(), dc.clone());
        jobs.push(Box::new(move || {
            let reports = dominance_mass(&family, &prior, n, &alt, &dc.gammas, dc.draws, seed)?;
            let mut out = JobOutput::default();
            for r in reports {
                let ceiling = (-r.gamma).exp2();
                out.lines.push((
                    0,
                    vec![
                        n.to_string(),
                        r.gamma.to_string(),
                        r.mass.to_string(),
                        r.ci_halfwidth.to_string(),
                        ceiling.to_string(),
                        seed.to_string(),
                    ],
                ));
                out.rows.push(Row::Dominance(DominanceRow {
                    n,
                    gamma: r.gamma,
                    mass: r.mass,
                    ci_halfwidth: r.ci_halfwidth,
                    ceiling,
                    within_ceiling: r.within_ceiling(),
                    draws: r.draws,
                    seed,
                }));
            }
            Ok(out)
        }));
    }
    Ok((vec![table], jobs))
}

fn plan_deep_linear(config: &ExperimentConfig) -> Result<(Vec<Table>, Vec<Job<'_>>), ConfigError> {
    let dc = config.deep_linear.clone().unwrap_or_default();
    let table = Table::new("deep_linear.csv", &["layers", "replicate", "condition", "seed"]);
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for &l in &dc.layers {
        let seed = config.seed;
        let dc = dc.clone();
        jobs.push(Box::new(move || {
            let rows = mixlab_core::fisher::deep_linear_spectrum(&[l], dc.dim, dc.seeds, seed)?;
            let r = &rows[0];
            let lines = r
                .conditions
                .iter()
                .enumerate()
                .map(|(i, c)| (0, vec![l.to_string(), i.to_string(), c.to_string(), seed.to_string()]))
                .collect();
            let row = Row::DeepLinear(DeepLinearRow {
                layers: r.layers,
                dim: r.dim,
                median_condition: r.median_condition,
                conditions: r.conditions.clone(),
                seed,
            });
            Ok(JobOutput { rows: vec![row], lines, soft_failure: None })
        }));
    }
    Ok((vec![table], jobs))
}
