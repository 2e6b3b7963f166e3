//! Command-line scans and exports: landscape minima, gap curves, and
//! coherence-time spectroscopy, written as CSV plus a JSON run summary.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use bosecrit::bogoliubov::{dirichlet_gap_curve, excitation_energies, periodic_quadratic};
use bosecrit::cnumber::{self, ground_state_scan};
use bosecrit::dynamics::{
    coherence_scan, coherence_trace_at, fit_lambda_scaling, lambda_peak, measure_lambda_critical,
};

/// Output-directory override, taking precedence over config files but not
/// over the `--output` flag.
const OUTPUT_ENV: &str = "BOSECRIT_OUTPUT";

#[derive(Parser)]
#[command(name = "bosecrit", version, about = "Scans and exports for the bosecrit library")]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (flag > BOSECRIT_OUTPUT > config > "out").
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Thread budget for job-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed echoed into outputs; the pipelines are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy-landscape scan: marginal curves, minima, lambda_gs, lambda_lm.
    Landscape(GridArgs),
    /// Quadratic-expansion scan: (lambda, det M, gap) for a model.
    Gap(GapArgs),
    /// Coherence-time spectroscopy: traces, t_coh curves, optional scaling fit.
    Coherence(CoherenceArgs),
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    lambda_steps: Option<usize>,
}

#[derive(Args, Clone)]
struct GapArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Model: dirichlet3 or periodic3.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args, Clone)]
struct CoherenceArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Particle numbers, repeatable.
    #[arg(long = "n", value_delimiter = ',')]
    n: Vec<u32>,
    /// Measure lambda^(N) per N and fit the power law instead of a fixed grid.
    #[arg(long)]
    fit: bool,
}

/// Values shared by every subcommand, resolvable from a TOML file with flag
/// overrides (flags win, then the environment, then the file).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    model: Option<String>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    lambda_steps: Option<usize>,
    n: Option<Vec<u32>>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    fit: Option<bool>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numeric(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

fn config_err(m: impl Into<String>) -> CliError {
    CliError::Config(m.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Numeric(_) => ExitCode::from(3),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| config_err(format!("cannot parse {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    // precedence: flag > environment > config file
    if let Some(o) = std::env::var_os(OUTPUT_ENV) {
        cfg.output = Some(PathBuf::from(o));
    }
    if let Some(o) = &cli.output {
        cfg.output = Some(o.clone());
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }

    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(config_err("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| config_err(format!("thread pool: {e}")))?;
    }

    let out_dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir)
        .map_err(|e| config_err(format!("cannot create {}: {e}", out_dir.display())))?;

    let started = SystemTime::now();
    let clock = Instant::now();
    let mut outputs: Vec<String> = Vec::new();

    let summary_body = match &cli.command {
        Command::Landscape(args) => {
            merge_grid(&mut cfg, args);
            cmd_landscape(&cfg, &out_dir, &mut outputs)?
        }
        Command::Gap(args) => {
            merge_grid(&mut cfg, &args.grid);
            if let Some(m) = &args.model {
                cfg.model = Some(m.clone());
            }
            cmd_gap(&cfg, &out_dir, &mut outputs)?
        }
        Command::Coherence(args) => {
            merge_grid(&mut cfg, &args.grid);
            if !args.n.is_empty() {
                cfg.n = Some(args.n.clone());
            }
            if args.fit {
                cfg.fit = Some(true);
            }
            cmd_coherence(&cfg, &out_dir, &mut outputs)?
        }
    };

    let summary = serde_json::json!({
        "command": match &cli.command {
            Command::Landscape(_) => "landscape",
            Command::Gap(_) => "gap",
            Command::Coherence(_) => "coherence",
        },
        "version": version_string(),
        "config": cfg,
        "started_unix_s": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "wall_seconds": clock.elapsed().as_secs_f64(),
        "outputs": outputs,
        "results": summary_body,
    });
    let pretty = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    write_atomic(&out_dir.join("summary.json"), &pretty)?;
    println!("{pretty}");
    Ok(())
}

fn merge_grid(cfg: &mut RunConfig, args: &GridArgs) {
    if let Some(v) = args.lambda_min {
        cfg.lambda_min = Some(v);
    }
    if let Some(v) = args.lambda_max {
        cfg.lambda_max = Some(v);
    }
    if let Some(v) = args.lambda_steps {
        cfg.lambda_steps = Some(v);
    }
}

fn version_string() -> String {
    format!("bosecrit-{}", env!("CARGO_PKG_VERSION"))
}

fn lambda_grid(cfg: &RunConfig, lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    let lo = cfg.lambda_min.unwrap_or(lo);
    let hi = cfg.lambda_max.unwrap_or(hi);
    let steps = cfg.lambda_steps.unwrap_or(steps);
    if steps == 0 {
        return Err(config_err("lambda_steps must be positive"));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    if !(hi > lo) {
        return Err(config_err(format!("lambda grid not increasing: [{lo}, {hi}]")));
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// 17-significant-digit decimal serialization (round-trip safe for f64).
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)
        .map_err(|e| CliError::Numeric(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Numeric(format!("rename {}: {e}", path.display())))
}

fn write_csv(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = String>,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    write_atomic(path, &text)?;
    outputs.push(path.display().to_string());
    Ok(())
}

fn cmd_landscape(
    cfg: &RunConfig,
    out: &Path,
    outputs: &mut Vec<String>,
) -> Result<serde_json::Value, CliError> {
    let grid = lambda_grid(cfg, 0.5, 5.0, 19)?;
    let results = ground_state_scan(&grid);

    let mut minima_rows = Vec::new();
    let mut marginal_rows = Vec::new();
    for r in &results {
        for m in &r.minima {
            minima_rows.push(format!(
                "{},{},{},{},{},{}",
                num(r.lambda),
                num(m.point.x),
                num(m.point.theta),
                num(m.point.delta2),
                num(m.point.delta3),
                num(m.energy_per_particle)
            ));
        }
        for &(x, e) in &r.marginal_curve {
            marginal_rows.push(format!("{},{},{}", num(r.lambda), num(x), num(e)));
        }
    }
    write_csv(
        &out.join("landscape_minima.csv"),
        "lambda,x,theta,delta2,delta3,energy_per_particle",
        minima_rows,
        outputs,
    )?;
    write_csv(
        &out.join("landscape_marginal.csv"),
        "lambda,x,energy_per_particle",
        marginal_rows,
        outputs,
    )?;

    let lambda_gs = cnumber::find_lambda_gs().map_err(|e| CliError::Numeric(e.to_string()))?;
    let (lambda_lm, point) =
        cnumber::find_lambda_lm_dirichlet().map_err(|e| CliError::Numeric(e.to_string()))?;
    Ok(serde_json::json!({
        "lambda_gs": lambda_gs,
        "lambda_lm": lambda_lm,
        "inflection_point": { "x": point.x, "theta": point.theta },
    }))
}

fn cmd_gap(
    cfg: &RunConfig,
    out: &Path,
    outputs: &mut Vec<String>,
) -> Result<serde_json::Value, CliError> {
    let model = cfg.model.as_deref().unwrap_or("dirichlet3");
    let (rows, grid_len) = match model {
        "dirichlet3" => {
            // the expansion point exists only at and above the fold coupling;
            // grid values within 1e-3 of it snap onto the exact fold, where
            // the branch is sqrt-stiff and a rounded literal would miss it
            let (lambda_lm, _) = cnumber::find_lambda_lm_dirichlet()
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            let mut grid = lambda_grid(cfg, lambda_lm, 3.0, 100)?;
            for v in &mut grid {
                if (*v - lambda_lm).abs() < 1e-3 {
                    *v = lambda_lm;
                }
            }
            let points = dirichlet_gap_curve(&grid);
            let rows: Vec<String> = points
                .iter()
                .map(|p| {
                    format!(
                        "{},{},{},{}",
                        num(p.lambda),
                        p.det_m.map(num).unwrap_or_default(),
                        p.gap.map(num).unwrap_or_default(),
                        p.stable
                    )
                })
                .collect();
            (rows, grid.len())
        }
        "periodic3" => {
            let grid = lambda_grid(cfg, 0.0, 1.0, 101)?;
            let rows: Vec<String> = grid
                .iter()
                .map(|&lambda| {
                    let q = periodic_quadratic(lambda, 3);
                    let det = cnumber::periodic_det_m(lambda);
                    let gap = excitation_energies(&q)
                        .map_err(|e| CliError::Numeric(format!("lambda = {lambda}: {e}")))?
                        .first()
                        .copied()
                        .unwrap_or(f64::NAN);
                    Ok(format!("{},{},{},{}", num(lambda), num(det), num(gap), gap > 1e-8))
                })
                .collect::<Result<_, CliError>>()?;
            (rows, grid.len())
        }
        other => return Err(config_err(format!("unknown gap model: {other}"))),
    };
    write_csv(&out.join("gap.csv"), "lambda,det_m,gap,stable", rows, outputs)?;
    Ok(serde_json::json!({ "model": model, "points": grid_len }))
}

fn cmd_coherence(
    cfg: &RunConfig,
    out: &Path,
    outputs: &mut Vec<String>,
) -> Result<serde_json::Value, CliError> {
    let ns = cfg.n.clone().unwrap_or_else(|| vec![60]);
    if ns.is_empty() {
        return Err(config_err("at least one N is required"));
    }

    if cfg.fit.unwrap_or(false) {
        // measure lambda^(N) per N, then fit the power law
        let mut fit_rows = Vec::new();
        let mut points = Vec::new();
        for &n in &ns {
            let (lam, scan) = measure_lambda_critical(n)
                .map_err(|e| CliError::Numeric(format!("N = {n}: {e}")))?;
            let rows: Vec<String> = scan
                .iter()
                .map(|p| format!("{},{},{}", num(p.lambda), num(p.f_mean), num(p.t_coh)))
                .collect();
            write_csv(
                &out.join(format!("coherence_n{n}.csv")),
                "lambda,f_mean,t_coh",
                rows,
                outputs,
            )?;
            fit_rows.push(format!("{n},{}", num(lam)));
            points.push((n as f64, lam));
        }
        write_csv(&out.join("lambda_vs_n.csv"), "n,lambda", fit_rows, outputs)?;
        let fit = fit_lambda_scaling(&points, None)
            .map_err(|e| CliError::Numeric(format!("scaling fit: {e}")))?;
        return Ok(serde_json::json!({
            "measured": points.iter().map(|&(n, l)| serde_json::json!({"n": n, "lambda": l})).collect::<Vec<_>>(),
            "fit": fit,
        }));
    }

    let grid = lambda_grid(cfg, 1.9, 2.3, 41)?;
    let mut per_n = Vec::new();
    for &n in &ns {
        if grid.len() == 1 {
            // single-point run: emit the full time trace as well
            let lambda = grid[0];
            let (trace, point) = coherence_trace_at(n, lambda)
                .map_err(|e| CliError::Numeric(format!("N = {n}, lambda = {lambda}: {e}")))?;
            let rows = trace
                .times
                .iter()
                .zip(trace.n2_rel.iter())
                .map(|(&t, &v)| format!("{},{}", num(t), num(v)));
            write_csv(
                &out.join(format!("trace_n{n}.csv")),
                "t,n2_rel",
                rows,
                outputs,
            )?;
            per_n.push(serde_json::json!({
                "n": n, "lambda": point.lambda,
                "f_mean": point.f_mean, "t_coh": point.t_coh,
            }));
            continue;
        }
        let scan = coherence_scan(n, &grid)
            .map_err(|e| CliError::Numeric(format!("N = {n}: {e}")))?;
        let rows: Vec<String> = scan
            .iter()
            .map(|p| format!("{},{},{}", num(p.lambda), num(p.f_mean), num(p.t_coh)))
            .collect();
        write_csv(
            &out.join(format!("coherence_n{n}.csv")),
            "lambda,f_mean,t_coh",
            rows,
            outputs,
        )?;
        per_n.push(serde_json::json!({ "n": n, "lambda_peak": lambda_peak(&scan) }));
    }
    Ok(serde_json::json!({ "scans": per_n }))
}
