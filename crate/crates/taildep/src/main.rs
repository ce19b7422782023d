//! Command-line pipeline: marginal tail estimation, TPDM estimation,
//! completely positive decomposition, failure-region probabilities,
//! simulation, and the synthetic benchmark reproduction.
//!
//! Exit codes: 0 ok, 2 input error, 3 estimation degenerate,
//! 4 decomposition search exhausted.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use taildep::decomp::{
    collect_exact_decompositions, enumerate_all_paths, search_exhaustive, search_simple,
    DecompConfig, DecompositionResult,
};
use taildep::error::Error;
use taildep::io::{
    read_json, read_matrix_csv, read_numeric_csv, write_json, write_matrix_csv, write_sample_csv,
    DecompositionJson, ModelJson, RegionSpec, TpdmEnvelope,
};
use taildep::margins::{
    eyeball_threshold, fit_semiparametric, hill_estimate, pooled_alpha, smoothed_hill,
    standardize_frechet, EyeballConfig, TailIndexEstimate,
};
use taildep::maxlin::MaxLinearModel;
use taildep::numeric::SummaryStats;
use taildep::regions::{
    empirical_failure_probability, failure_probability, nu_region, nu_region_contributions,
};
use taildep::synthetic::reproduce_synthetic;
use taildep::tpdm::{
    default_stability_levels, estimate_mass, estimate_tpdm, mass_stability_table, polar_transform, TailMatrix,
};

#[derive(Parser)]
#[command(name = "taildep", version, about = "Tail dependence matrices, max-linear models and extreme failure probabilities")]
struct Cli {
    /// Worker threads for the parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-column (or pooled) tail-index and GPD tail estimates.
    Margins(MarginsArgs),
    /// Estimate the tail pairwise dependence matrix of a CSV sample.
    Tpdm(TpdmArgs),
    /// Decompose a TPDM into max-linear factors.
    Decompose(DecomposeArgs),
    /// Failure-region probabilities across a set of decompositions.
    Prob(ProbArgs),
    /// Simulate from a max-linear model.
    Simulate(SimulateArgs),
    /// Path census and region-measure spreads for the bundled benchmark
    /// matrices.
    ReproduceSynthetic(ReproduceArgs),
}

#[derive(Args)]
struct MarginsArgs {
    /// Input CSV (header row, one observation per row).
    csv: PathBuf,
    /// Number of upper order statistics; picked by the stability rule on
    /// the Hill path when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Pool all n*d observations into a single estimate.
    #[arg(long)]
    pooled: bool,
    /// Average the Hill path over k..u*k.
    #[arg(long)]
    smoothing: Option<f64>,
    /// Threshold level for the GPD tail fit.
    #[arg(long, default_value_t = 0.95)]
    gpd_level: f64,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TpdmArgs {
    /// Input CSV (header row, one observation per row).
    csv: PathBuf,
    /// Fixed tail index; estimated by the pooled Hill estimator when
    /// omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Order statistics for the pooled estimate (stability rule when
    /// omitted).
    #[arg(long)]
    k: Option<usize>,
    /// Radial threshold quantile level.
    #[arg(long, default_value_t = 0.95)]
    quantile_level: f64,
    /// Standardize margins to unit Fréchet with shape 2 first (the tail
    /// index is then 2 by construction).
    #[arg(long)]
    standardize: bool,
    /// Threshold level of the GPD tails used by --standardize.
    #[arg(long, default_value_t = 0.95)]
    gpd_level: f64,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the d x d matrix as CSV.
    #[arg(long)]
    matrix_csv: Option<PathBuf>,
    /// Also write the benchmark factor (d x n_exc) as CSV.
    #[arg(long)]
    a_tilde_csv: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// TPDM file: JSON envelope or headerless CSV matrix (then --alpha is
    /// required).
    tpdm: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    /// Search strategy.
    #[arg(long, default_value = "pragmatic", value_parser = ["simple", "exhaustive", "pragmatic", "enumerate"])]
    strategy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of exact decompositions to collect.
    #[arg(long, default_value_t = 200)]
    n_decompositions: usize,
    /// Restart budget of the pragmatic search.
    #[arg(long, default_value_t = 20_000)]
    max_restarts: usize,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbArgs {
    /// Decomposition set produced by `decompose`.
    #[arg(long)]
    decompositions: PathBuf,
    /// Region specification JSON {kind, x, v?, groups?}.
    #[arg(long)]
    region: PathBuf,
    /// Benchmark factor CSV (d x n_exc) for the empirical-factor estimate.
    #[arg(long)]
    a_tilde: Option<PathBuf>,
    /// Data CSV for the plain empirical exceedance fraction.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary quantiles as CSV.
    #[arg(long)]
    summary_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model JSON {alpha, A row-major, d, q}.
    #[arg(long)]
    model: PathBuf,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Domain(_) | Error::Argument(_) | Error::Parse(_) | Error::Io(_) => 2,
        Error::Degenerate(_) | Error::Optimizer(_) | Error::Inconsistent(_) => 3,
    }
}

fn emit<T: Serialize>(out: &Option<PathBuf>, value: &T) -> taildep::Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value)
                .map_err(|e| Error::Parse(format!("serialization: {e}")))?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TailIndexJson {
    gamma_hat: f64,
    alpha_hat: Option<f64>,
    k_used: usize,
    k_selected_by_stability_rule: bool,
    stability_fallback: bool,
}

fn tail_index_json(est: &TailIndexEstimate, selected: bool, fallback: bool) -> TailIndexJson {
    TailIndexJson {
        gamma_hat: est.gamma_hat,
        alpha_hat: est.alpha_hat.is_finite().then_some(est.alpha_hat),
        k_used: est.k_used,
        k_selected_by_stability_rule: selected,
        stability_fallback: fallback,
    }
}

/// Hill estimate with k either given or picked by the stability rule on
/// the (possibly smoothed) path.
fn estimate_with_k_selection(
    sample: &[f64],
    k: Option<usize>,
    smoothing: Option<f64>,
) -> taildep::Result<(TailIndexEstimate, bool, bool)> {
    let n = sample.len();
    let hill = |k: usize| match smoothing {
        Some(u) => smoothed_hill(sample, k, u),
        None => hill_estimate(sample, k),
    };
    match k {
        Some(k) => Ok((hill(k)?, false, false)),
        None => {
            let k_max = match smoothing {
                Some(u) => (((n - 1) as f64 / u).floor() as usize).max(2),
                None => n - 1,
            };
            let full = hill(k_max.min(n - 1))?;
            let sel = eyeball_threshold(&full.path, &EyeballConfig::default())?;
            Ok((hill(sel.k_star)?, true, sel.fell_back))
        }
    }
}

#[derive(Serialize)]
struct GpdJson {
    sigma_hat: f64,
    gamma_hat: f64,
    threshold: f64,
    n_exceed: usize,
    log_likelihood: f64,
    degenerate: bool,
    method: taildep::margins::GpdMethod,
}

#[derive(Serialize)]
struct ColumnMarginJson {
    name: String,
    tail_index: TailIndexJson,
    gpd: Option<GpdJson>,
    gpd_error: Option<String>,
}

#[derive(Serialize)]
struct MarginsReport {
    n_rows: usize,
    dropped_rows: usize,
    gpd_level: f64,
    pooled: Option<TailIndexJson>,
    columns: Vec<ColumnMarginJson>,
}

fn cmd_margins(args: &MarginsArgs) -> taildep::Result<()> {
    let csv = read_numeric_csv(&args.csv)?;
    let n = csv.data.nrows();
    let d = csv.data.ncols();

    let pooled = if args.pooled {
        match args.k {
            Some(k) => {
                let est = pooled_alpha(&csv.data, k * d, args.smoothing)?;
                Some(tail_index_json(&est, false, false))
            }
            None => {
                let flat: Vec<f64> = csv.data.iter().copied().collect();
                let (est, selected, fallback) =
                    estimate_with_k_selection(&flat, None, args.smoothing)?;
                Some(tail_index_json(&est, selected, fallback))
            }
        }
    } else {
        None
    };

    let mut columns = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| csv.data[(i, j)]).collect();
        let (est, selected, fallback) = estimate_with_k_selection(&col, args.k, args.smoothing)?;
        let (gpd, gpd_error) = match fit_semiparametric(&col, args.gpd_level, true) {
            Ok(cdf) => {
                let fit = cdf.gpd().expect("gpd requested");
                (
                    Some(GpdJson {
                        sigma_hat: fit.sigma_hat,
                        gamma_hat: fit.gamma_hat,
                        threshold: fit.threshold,
                        n_exceed: fit.n_exceed,
                        log_likelihood: fit.log_likelihood,
                        degenerate: fit.degenerate,
                        method: fit.method,
                    }),
                    None,
                )
            }
            Err(e) => (None, Some(e.to_string())),
        };
        columns.push(ColumnMarginJson {
            name: csv.headers[j].clone(),
            tail_index: tail_index_json(&est, selected, fallback),
            gpd,
            gpd_error,
        });
    }

    emit(
        &args.out,
        &MarginsReport {
            n_rows: n,
            dropped_rows: csv.dropped_rows,
            gpd_level: args.gpd_level,
            pooled,
            columns,
        },
    )
}

#[derive(Serialize)]
struct StabilityRow {
    quantile_level: f64,
    m_hat: f64,
    n_exc: usize,
}

#[derive(Serialize)]
struct TpdmReport {
    #[serde(flatten)]
    envelope: TpdmEnvelope,
    n_rows: usize,
    dropped_rows: usize,
    dropped_zero_rows: usize,
    standardized: bool,
    alpha_source: String,
    symmetry_defect: f64,
    min_eigenvalue: f64,
    psd_warning: bool,
    stability_table: Vec<StabilityRow>,
}

fn cmd_tpdm(args: &TpdmArgs) -> taildep::Result<()> {
    let csv = read_numeric_csv(&args.csv)?;
    let mut data = csv.data;
    let mut standardized = false;

    let (alpha, alpha_source) = if args.standardize {
        let cdfs: taildep::Result<Vec<_>> = (0..data.ncols())
            .map(|j| {
                let col: Vec<f64> = (0..data.nrows()).map(|i| data[(i, j)]).collect();
                fit_semiparametric(&col, args.gpd_level, true)
            })
            .collect();
        let (out, _) = standardize_frechet(&data, &cdfs?)?;
        data = out;
        standardized = true;
        (2.0, "standardized".to_string())
    } else if let Some(a) = args.alpha {
        (a, "fixed".to_string())
    } else {
        let flat: Vec<f64> = data.iter().copied().collect();
        let (est, _, _) = estimate_with_k_selection(&flat, args.k, None)?;
        if !est.alpha_hat.is_finite() {
            return Err(Error::Degenerate("pooled tail index is infinite".into()));
        }
        (est.alpha_hat, "pooled".to_string())
    };

    let polar = polar_transform(&data, alpha)?;
    let mass = estimate_mass(&polar, args.quantile_level)?;
    let est = estimate_tpdm(&polar, &mass)?;
    let stability = mass_stability_table(&polar, &default_stability_levels());

    if let Some(path) = &args.matrix_csv {
        write_matrix_csv(path, est.matrix.sigma())?;
    }
    if let Some(path) = &args.a_tilde_csv {
        let a_tilde = taildep::tpdm::empirical_factor(&polar, &mass)?;
        write_matrix_csv(path, &a_tilde)?;
    }

    emit(
        &args.out,
        &TpdmReport {
            envelope: TpdmEnvelope::new(&est.matrix, &mass),
            n_rows: data.nrows(),
            dropped_rows: csv.dropped_rows,
            dropped_zero_rows: polar.dropped_zero_rows,
            standardized,
            alpha_source,
            symmetry_defect: est.validation.symmetry_defect,
            min_eigenvalue: est.validation.min_eigenvalue,
            psd_warning: est.psd_warning,
            stability_table: stability
                .iter()
                .map(|m| StabilityRow {
                    quantile_level: m.quantile_level,
                    m_hat: m.m_hat,
                    n_exc: m.n_exc,
                })
                .collect(),
        },
    )
}

fn load_tail_matrix(path: &Path, alpha: Option<f64>) -> taildep::Result<TailMatrix> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let env: TpdmEnvelope = read_json(path)?;
        env.tail_matrix()
    } else {
        let sigma = read_matrix_csv(path)?;
        let alpha = alpha.ok_or_else(|| {
            Error::Argument("--alpha is required when the TPDM comes from a CSV matrix".into())
        })?;
        Ok(TailMatrix::new_unchecked(sigma, alpha))
    }
}

#[derive(Serialize)]
struct CensusJson {
    n_paths: usize,
    usable: usize,
    exact: usize,
    within_gap: usize,
    gap_threshold: f64,
    boundary: usize,
}

#[derive(Serialize)]
struct DecomposeReport {
    alpha: f64,
    strategy: String,
    seed: u64,
    n_requested: usize,
    n_exact_found: usize,
    census: Option<CensusJson>,
    /// Best approximate factorization, attached when no exact one was
    /// found within the budget.
    best_approximate: Option<DecompositionJson>,
    results: Vec<DecompositionJson>,
}

fn cmd_decompose(args: &DecomposeArgs) -> taildep::Result<ExitCode> {
    let tail = load_tail_matrix(&args.tpdm, args.alpha)?;
    let config = DecompConfig::default();
    let mut census = None;

    let results: Vec<DecompositionResult> = match args.strategy.as_str() {
        "pragmatic" => collect_exact_decompositions(
            &tail,
            args.n_decompositions,
            args.seed,
            args.max_restarts,
            &config,
        )?,
        "exhaustive" => search_exhaustive(&tail, args.n_decompositions, &config)?,
        "simple" => vec![search_simple(&tail, &config)?],
        "enumerate" => {
            let c = enumerate_all_paths(&tail, 5.0, &config)?;
            census = Some(CensusJson {
                n_paths: c.results.len(),
                usable: c.usable,
                exact: c.exact,
                within_gap: c.within_gap,
                gap_threshold: c.gap_threshold,
                boundary: c.boundary,
            });
            c.results
        }
        other => return Err(Error::Argument(format!("unknown strategy {other}"))),
    };

    let n_exact = results.iter().filter(|r| r.exact).count();
    let search_exhausted = n_exact == 0;
    let best_approximate = if search_exhausted {
        Some(DecompositionJson::new(&search_simple(&tail, &config)?))
    } else {
        None
    };

    let report = DecomposeReport {
        alpha: tail.alpha(),
        strategy: args.strategy.clone(),
        seed: args.seed,
        n_requested: args.n_decompositions,
        n_exact_found: n_exact,
        census,
        best_approximate,
        results: results.iter().map(DecompositionJson::new).collect(),
    };
    emit(&args.out, &report)?;
    if search_exhausted {
        eprintln!("taildep: no exact decomposition found; best approximate attached");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ProbEntry {
    path: Vec<usize>,
    nu: f64,
    probability: f64,
    extreme_warning: bool,
    clamped: bool,
    /// One term per factor column of the recovered model.
    per_column_contributions: Vec<f64>,
}

#[derive(Serialize)]
struct ProbReport {
    region: RegionSpec,
    alpha: f64,
    n_decompositions: usize,
    /// Only decompositions meeting the exactness criterion enter the
    /// summary.
    n_exact_used: usize,
    per_decomposition: Vec<ProbEntry>,
    summary: Option<SummaryStats>,
    a_tilde_probability: Option<f64>,
    empirical_probability: Option<f64>,
}

fn cmd_prob(args: &ProbArgs) -> taildep::Result<ExitCode> {
    let decomps: DecomposeReportInput = read_json(&args.decompositions)?;
    let spec: RegionSpec = read_json(&args.region)?;
    if decomps.results.is_empty() {
        return Err(Error::Argument("decomposition file contains no results".into()));
    }
    let dim = decomps.results[0].d;
    let region = spec.region(dim)?;

    let mut per = Vec::new();
    let mut exact_nus = Vec::new();
    for dj in &decomps.results {
        if !dj.exact {
            continue;
        }
        let r = dj.result()?;
        let model = r.to_model(None)?;
        let p = failure_probability(&model, &region)?;
        let contributions = nu_region_contributions(&model, &region)?;
        exact_nus.push(p.nu);
        per.push(ProbEntry {
            path: dj.path.clone(),
            nu: p.nu,
            probability: p.probability,
            extreme_warning: p.extreme_warning,
            clamped: p.clamped,
            per_column_contributions: contributions,
        });
    }
    if per.is_empty() {
        eprintln!("taildep: no exact decompositions in the input set");
        return Ok(ExitCode::from(4));
    }

    let a_tilde_probability = match &args.a_tilde {
        Some(path) => {
            let a_star = read_matrix_csv(path)?;
            if a_star.nrows() != dim {
                return Err(Error::Argument(format!(
                    "benchmark factor has {} rows, expected {dim}",
                    a_star.nrows()
                )));
            }
            let alpha = decomps.alpha;
            let pruned = taildep::decomp::prune_zero_columns(&a_star, None);
            let coeff = if alpha == 2.0 { pruned.clone() } else { pruned.map(|x| x.powf(2.0 / alpha)) };
            let model = MaxLinearModel::new(coeff, alpha)?;
            Some(nu_region(&model, &region)?.min(1.0))
        }
        None => None,
    };
    let empirical_probability = match &args.data {
        Some(path) => {
            let csv = read_numeric_csv(path)?;
            if csv.data.ncols() != dim {
                return Err(Error::Argument(format!(
                    "data has {} columns, expected {dim}",
                    csv.data.ncols()
                )));
            }
            Some(empirical_failure_probability(&csv.data, &region)?)
        }
        None => None,
    };

    let summary = SummaryStats::from_values(&exact_nus);
    if let Some(path) = &args.summary_csv {
        let mut text = String::from("source,n,min,q1,median,q3,max,mean\n");
        if let Some(s) = &summary {
            text.push_str(&format!(
                "decompositions,{},{},{},{},{},{},{}\n",
                s.n, s.min, s.q1, s.median, s.q3, s.max, s.mean
            ));
        }
        if let Some(p) = a_tilde_probability {
            text.push_str(&format!("a_tilde,1,{p},{p},{p},{p},{p},{p}\n"));
        }
        if let Some(p) = empirical_probability {
            text.push_str(&format!("empirical,1,{p},{p},{p},{p},{p},{p}\n"));
        }
        std::fs::write(path, text)?;
    }

    emit(
        &args.out,
        &ProbReport {
            region: spec,
            alpha: decomps.alpha,
            n_decompositions: decomps.results.len(),
            n_exact_used: per.len(),
            per_decomposition: per,
            summary,
            a_tilde_probability,
            empirical_probability,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

/// The subset of the decompose output that prob needs back.
#[derive(serde::Deserialize)]
struct DecomposeReportInput {
    alpha: f64,
    results: Vec<DecompositionJson>,
}

fn cmd_simulate(args: &SimulateArgs) -> taildep::Result<()> {
    let model: ModelJson = read_json(&args.model)?;
    let model = model.model()?;
    let sample = model.simulate(args.n, args.seed);
    match &args.out {
        Some(path) => write_sample_csv(path, &sample),
        None => {
            let header: Vec<String> = (0..sample.ncols()).map(|j| format!("y{j}")).collect();
            println!("{}", header.join(","));
            for i in 0..sample.nrows() {
                let row: Vec<String> = (0..sample.ncols())
                    .map(|j| format!("{}", sample[(i, j)]))
                    .collect();
                println!("{}", row.join(","));
            }
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> taildep::Result<ExitCode> {
    match &cli.command {
        Command::Margins(args) => cmd_margins(args).map(|()| ExitCode::SUCCESS),
        Command::Tpdm(args) => cmd_tpdm(args).map(|()| ExitCode::SUCCESS),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Prob(args) => cmd_prob(args),
        Command::Simulate(args) => cmd_simulate(args).map(|()| ExitCode::SUCCESS),
        Command::ReproduceSynthetic(args) => {
            let report = reproduce_synthetic(&DecompConfig::default())?;
            emit(&args.out, &report)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("taildep: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("taildep: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
