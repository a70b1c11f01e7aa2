//! Sweep execution, CSV output, and run manifests.
//!
//! Sweep points become tasks dispatched to a rayon pool; each task owns a
//! seed derived from the master seed and its task index, and rows are
//! emitted in declared config order regardless of completion order, so a
//! run is bit-identical for a fixed seed at any worker count.
//!
//! CSV schema: `experiment,d,k,sigma,n,method,r,m,crn,beta,value,stderr`.
//! `value` is Ī_β for ic_vs_beta rows and Î for gc rows (the beta column
//! then holds β*); gibbs_marginals emits one row per component in component
//! order within each sweep block; correlated_elogz stores the inner sample
//! size p in the r column. Floats carry 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;

use gencap_core::correlated::{estimate_elogz_correlated, YhApproximator};
use gencap_core::cost::Covariance;
use gencap_core::gc::{
    assemble_gc, componentwise_gibbs, crn_noise_plan, repetition_information,
    BetaGrid, EstimatorSpec, GcResult, Method,
};
use gencap_core::hypothesis::{unrank_sparse, Hypothesis, HypothesisClass, SparseSpace};
use gencap_core::rng::derive_seed;
use gencap_core::{CostKind, CrnScheme, ModelParams};

use crate::config::{ExperimentConfig, ExperimentKind};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "GENCAP_OUT";

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Paths written by a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub rows: usize,
}

/// One CSV row.
#[derive(Debug, Clone)]
pub struct Row {
    pub experiment: String,
    pub d: u32,
    pub k: Option<u32>,
    pub sigma: f64,
    pub n: u32,
    pub method: &'static str,
    pub r: usize,
    pub m: usize,
    pub crn: &'static str,
    pub beta: f64,
    pub value: f64,
    pub stderr: f64,
}

pub const CSV_HEADER: &str = "experiment,d,k,sigma,n,method,r,m,crn,beta,value,stderr";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Row {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.d,
            self.k.map(|k| k.to_string()).unwrap_or_default(),
            fmt_f64(self.sigma),
            self.n,
            self.method,
            self.r,
            self.m,
            self.crn,
            fmt_f64(self.beta),
            fmt_f64(self.value),
            fmt_f64(self.stderr),
        )
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Exhaustive => "exhaustive",
        Method::Uniform => "uniform",
        Method::Importance => "importance",
    }
}

fn crn_name(c: CrnScheme) -> &'static str {
    match c {
        CrnScheme::Crn1 => "1",
        CrnScheme::Crn2 => "2",
        CrnScheme::Crn3 => "3",
    }
}

/// Deterministic μ⁰ for a sweep point: the first canonical element of the
/// sparse class, or the first ⌈d/2⌉ components for the full space.
pub fn default_mu0(d: u32, k: Option<u32>) -> Result<Hypothesis> {
    match k {
        Some(k) => {
            let space = SparseSpace::new(d, k)?;
            Ok(unrank_sparse(1, &space)?)
        }
        None => Ok(Hypothesis::from_support(d, (0..d.div_ceil(2)).collect())?),
    }
}

fn hypothesis_class(d: u32, k: Option<u32>) -> Result<HypothesisClass> {
    Ok(match k {
        Some(k) => HypothesisClass::Sparse(SparseSpace::new(d, k)?),
        None => HypothesisClass::Full { d },
    })
}

fn model_params(d: u32, k: Option<u32>, sigma: f64, n: u32, rho: f64) -> Result<ModelParams> {
    let mu0 = default_mu0(d, k)?;
    let params = ModelParams::with_n(mu0, sigma, n)?;
    if rho == 0.0 {
        return Ok(params);
    }
    let dim = d as usize;
    let mut matrix = vec![rho; dim * dim];
    for i in 0..dim {
        matrix[i * dim + i] = 1.0;
    }
    Ok(params.with_covariance(Covariance::dense(dim, matrix)?)?)
}

/// `estimate_gc` with repetitions distributed over the current rayon pool;
/// results are reduced in repetition order and match the serial path
/// exactly.
pub fn estimate_gc_parallel(
    params: &ModelParams,
    class: &HypothesisClass,
    grid: &BetaGrid,
    kind: CostKind,
    spec: &EstimatorSpec,
) -> Result<GcResult> {
    spec.validate()?;
    let plan = crn_noise_plan(spec.crn, spec.m, params, spec.master_seed);
    let per_rep: std::result::Result<Vec<Vec<f64>>, _> = (0..spec.m)
        .into_par_iter()
        .map(|rep| repetition_information(params, class, grid, kind, spec, &plan, rep))
        .collect();
    Ok(assemble_gc(grid, &per_rep?)?)
}

struct Sweep {
    d: u32,
    k: Option<u32>,
    sigma: f64,
    cost: CostKind,
    label: String,
}

fn sweeps(config: &ExperimentConfig) -> Vec<Sweep> {
    let ks: Vec<Option<u32>> = if config.k.is_empty() {
        vec![None]
    } else {
        config.k.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    match config.kind {
        ExperimentKind::CostComparison => {
            let l1 = match config.cost {
                CostKind::L1 => CostKind::L1,
                _ => CostKind::L1Squared,
            };
            let l1_label = if l1 == CostKind::L1 { "l1" } else { "l1sq" };
            for &d in &config.d {
                for &k in &ks {
                    for &sigma in &config.sigma {
                        for (cost, tag) in [(CostKind::SquaredL2, "l2"), (l1, l1_label)] {
                            out.push(Sweep {
                                d,
                                k,
                                sigma,
                                cost,
                                label: format!("{}:{tag}", config.kind.name()),
                            });
                        }
                    }
                }
            }
        }
        _ => {
            for &d in &config.d {
                for &k in &ks {
                    for &sigma in &config.sigma {
                        out.push(Sweep {
                            d,
                            k,
                            sigma,
                            cost: config.cost,
                            label: config.kind.name().to_string(),
                        });
                    }
                }
            }
        }
    }
    out
}

fn run_sweep_point(
    config: &ExperimentConfig,
    sweep: &Sweep,
    grid: &BetaGrid,
    task_seed: u64,
) -> Result<Vec<Row>> {
    let base = |beta: f64, value: f64, stderr: f64, method: &'static str, r: usize| Row {
        experiment: sweep.label.clone(),
        d: sweep.d,
        k: sweep.k,
        sigma: sweep.sigma,
        n: config.n,
        method,
        r,
        m: config.m,
        crn: crn_name(config.crn),
        beta,
        value,
        stderr,
    };

    match config.kind {
        ExperimentKind::CorrelatedElogz => {
            let k = sweep.k.ok_or_else(|| anyhow!("correlated_elogz requires k"))?;
            let space = SparseSpace::new(sweep.d, k)?;
            let params = model_params(sweep.d, sweep.k, sweep.sigma, config.n, config.rho)?;
            let approx = if config.yh_exact {
                YhApproximator::Exact
            } else {
                YhApproximator::EtaRepresentative
            };
            let mut rows = Vec::with_capacity(grid.len());
            for (i, &beta) in grid.betas().iter().enumerate() {
                let est = estimate_elogz_correlated(
                    &params,
                    &space,
                    beta,
                    config.m,
                    config.p,
                    &approx,
                    derive_seed(task_seed, i as u64),
                )?;
                let mut row = base(beta, est.mean, est.std_error(), "correlated", config.p);
                row.crn = "-";
                rows.push(row);
            }
            Ok(rows)
        }
        ExperimentKind::GibbsMarginals => {
            let params = model_params(sweep.d, sweep.k, sweep.sigma, config.n, config.rho)?;
            let class = hypothesis_class(sweep.d, sweep.k)?;
            let spec = EstimatorSpec {
                method: Method::Exhaustive,
                r: config.r,
                m: config.m,
                crn: config.crn,
                master_seed: task_seed,
            };
            let gc = estimate_gc_parallel(&params, &class, grid, sweep.cost, &spec)?;
            // marginals at beta*, averaged over the plan's first-of-pair draws
            let plan = crn_noise_plan(config.crn, config.m, &params, task_seed);
            let d = sweep.d as usize;
            let mut mean = vec![0.0f64; d];
            let mut sumsq = vec![0.0f64; d];
            for &(a, _) in &plan.pairs {
                let marg =
                    componentwise_gibbs(gc.beta_star, &plan.draws[a], &class, sweep.cost, &params)?;
                for j in 0..d {
                    mean[j] += marg[j];
                    sumsq[j] += marg[j] * marg[j];
                }
            }
            let m = config.m as f64;
            Ok((0..d)
                .map(|j| {
                    let mu = mean[j] / m;
                    let var = (sumsq[j] / m - mu * mu).max(0.0) * m / (m - 1.0);
                    base(gc.beta_star, mu, (var / m).sqrt(), "exhaustive", config.r)
                })
                .collect())
        }
        ExperimentKind::IcVsBeta => {
            let params = model_params(sweep.d, sweep.k, sweep.sigma, config.n, config.rho)?;
            let class = hypothesis_class(sweep.d, sweep.k)?;
            let spec = EstimatorSpec {
                method: config.method,
                r: config.r,
                m: config.m,
                crn: config.crn,
                master_seed: task_seed,
            };
            let gc = estimate_gc_parallel(&params, &class, grid, sweep.cost, &spec)?;
            let m = config.m as f64;
            Ok(gc
                .betas
                .iter()
                .zip(&gc.per_beta_mean)
                .zip(&gc.per_beta_variance)
                .map(|((&beta, &value), &var)| {
                    base(beta, value, (var / m).sqrt(), method_name(config.method), config.r)
                })
                .collect())
        }
        ExperimentKind::GcVsSigma | ExperimentKind::GcVsD | ExperimentKind::CostComparison => {
            let params = model_params(sweep.d, sweep.k, sweep.sigma, config.n, config.rho)?;
            let class = hypothesis_class(sweep.d, sweep.k)?;
            let spec = EstimatorSpec {
                method: config.method,
                r: config.r,
                m: config.m,
                crn: config.crn,
                master_seed: task_seed,
            };
            let gc = estimate_gc_parallel(&params, &class, grid, sweep.cost, &spec)?;
            let se = gc.std_at_beta_star / (config.m as f64).sqrt();
            Ok(vec![base(
                gc.beta_star,
                gc.gc_estimate,
                se,
                method_name(config.method),
                config.r,
            )])
        }
    }
}

fn config_echo(config: &ExperimentConfig, master_seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment = {}", config.kind.name());
    for &d in &config.d {
        let _ = writeln!(s, "d = {d}");
    }
    for &k in &config.k {
        let _ = writeln!(s, "k = {k}");
    }
    for &sigma in &config.sigma {
        let _ = writeln!(s, "sigma = {sigma}");
    }
    let _ = writeln!(s, "n = {}", config.n);
    let _ = writeln!(s, "method = {}", method_name(config.method));
    let _ = writeln!(s, "r = {}", config.r);
    let _ = writeln!(s, "m = {}", config.m);
    let _ = writeln!(s, "crn = {}", crn_name(config.crn));
    let _ = writeln!(s, "beta_min = {}", config.beta_min);
    let _ = writeln!(s, "beta_max = {}", config.beta_max);
    let _ = writeln!(s, "beta_count = {}", config.beta_count);
    let _ = writeln!(s, "seed = {master_seed}");
    let _ = writeln!(
        s,
        "cost = {}",
        match config.cost {
            CostKind::SquaredL2 => "l2",
            CostKind::L1Squared => "l1sq",
            CostKind::L1 => "l1",
        }
    );
    let _ = writeln!(s, "p = {}", config.p);
    let _ = writeln!(s, "yh = {}", if config.yh_exact { "exact" } else { "eta" });
    let _ = writeln!(s, "rho = {}", config.rho);
    s
}

/// Computes all rows of an experiment, in declared sweep order.
pub fn compute_rows(config: &ExperimentConfig, master_seed: u64) -> Result<(Vec<Row>, Vec<u64>)> {
    let grid = BetaGrid::log_spaced(config.beta_min, config.beta_max, config.beta_count)?;
    let points = sweeps(config);
    let task_seeds: Vec<u64> =
        (0..points.len()).map(|i| derive_seed(master_seed, i as u64)).collect();
    let results: Vec<Result<Vec<Row>>> = points
        .par_iter()
        .zip(&task_seeds)
        .map(|(sweep, &seed)| run_sweep_point(config, sweep, &grid, seed))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok((rows, task_seeds))
}

fn resolve_out_dir(config: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(out) = &opts.out {
        return out.clone();
    }
    if let Ok(out) = std::env::var(OUT_ENV) {
        if !out.is_empty() {
            return PathBuf::from(out);
        }
    }
    config.out.as_ref().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

/// Runs an experiment config end to end: sweeps, CSV, manifest.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    let master_seed = opts.seed.unwrap_or(config.seed);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let (rows, task_seeds) = pool.install(|| compute_rows(config, master_seed))?;

    let out_dir = resolve_out_dir(config, opts);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{}.csv", config.kind.name()));
    let manifest_path = out_dir.join(format!("{}.manifest.txt", config.kind.name()));

    let mut csv = String::with_capacity(rows.len() * 128);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    std::fs::write(&csv_path, &csv)
        .with_context(|| format!("writing {}", csv_path.display()))?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "# run manifest");
    let _ = writeln!(manifest, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "master_seed = {master_seed}");
    let _ = writeln!(manifest, "workers = {}", opts.workers.unwrap_or(0));
    let _ = writeln!(manifest, "rows = {}", rows.len());
    let _ = writeln!(manifest, "wall_time_secs = {:.3}", started.elapsed().as_secs_f64());
    let _ = writeln!(manifest, "\n[config]");
    manifest.push_str(&config_echo(config, master_seed));
    let _ = writeln!(manifest, "\n[task_seeds]");
    for (i, seed) in task_seeds.iter().enumerate() {
        let _ = writeln!(manifest, "task {i} = {seed}");
    }
    std::fs::write(&manifest_path, &manifest)
        .with_context(|| format!("writing {}", manifest_path.display()))?;

    Ok(RunOutput { csv_path, manifest_path, rows: rows.len() })
}

/// True when the error chain bottoms out in a hypothesis-class capacity
/// error (used for the dedicated exit code).
pub fn is_capacity_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<gencap_core::Error>()
            .is_some_and(|c| matches!(c, gencap_core::Error::Capacity { .. }))
    })
}

/// Convenience for tests: run a config from text in a given directory.
pub fn run_config_text(text: &str, out_dir: &Path, opts: &RunOptions) -> Result<RunOutput> {
    let (config, diags) = crate::config::parse_config(text);
    let config = config.ok_or_else(|| {
        anyhow!(diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))
    })?;
    let mut opts = opts.clone();
    opts.out = Some(out_dir.to_path_buf());
    run_experiment(&config, &opts)
}
