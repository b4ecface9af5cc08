//! Command-line front end.
//!
//! `jumpstop validate|solve|statics|simulate <config.json> [flags]`.
//!
//! Exit codes: 0 success, 1 usage/parse/structural error, 2 model
//! inadmissible. Every output CSV starts with a `# manifest <hash>` comment
//! line; the hash covers the command, input, resolved model and seed (not
//! the wall clock), so repeated runs produce byte-identical CSVs. A
//! `*_manifest.json` with the same hash plus a timestamp is written next to
//! the outputs. `JUMPSTOP_THREADS` caps simulation parallelism.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::model::{self, ParamDomain};
use crate::montecarlo::{self, SimConfig, TruncationPolicy};
use crate::scalar::c;
use crate::solver::{self, log_spaced};
use crate::statics::{self, ParamId};
use crate::{Error, Model, Result};

#[derive(Parser)]
#[command(
    name = "jumpstop",
    version,
    about = "Optimal investment timing under jump-diffusion demand and cost"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check admissibility and report per-parameter admissible domains
    Validate(ValidateArgs),
    /// Solve the closed form and certify the variational inequalities
    Solve(SolveArgs),
    /// Comparative statics: analytic sensitivities or a parameter sweep
    Statics(StaticsArgs),
    /// Monte Carlo verification: moments, policy value, threshold scan
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Model description (JSON)
    config: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    config: PathBuf,
    /// Rows per output table
    #[arg(long, default_value_t = 200)]
    grid_points: usize,
    /// Output directory for CSV tables and the manifest
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct StaticsArgs {
    config: PathBuf,
    /// Restrict to one parameter (mu_X, sigma_X, lambda_X, m_X, mu_I,
    /// sigma_I, lambda_I, m_I)
    #[arg(long)]
    param: Option<String>,
    /// Sweep the chosen parameter over `lo:hi:steps` and write a CSV
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated threshold multipliers for the optimality scan
    #[arg(long)]
    scan: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Run the CLI against the actual process arguments; returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point over explicit arguments.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    init_thread_pool();

    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Statics(args) => cmd_statics(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Inadmissible(_) => 2,
                _ => 1,
            }
        }
    }
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("JUMPSTOP_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let model: Model = serde_json::from_str(&text)?;
    model.check_structural()?;
    Ok(model)
}

/// Nine significant digits, the precision contract of all numeric output.
fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    input: String,
    model: &'a Model,
    version: &'a str,
    seed: Option<u64>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct StampedManifest<'a> {
    #[serde(flatten)]
    manifest: &'a RunManifest<'a>,
    hash: &'a str,
    unix_timestamp: u64,
}

impl<'a> RunManifest<'a> {
    fn new(command: &'a str, input: &Path, model: &'a Model, seed: Option<u64>) -> Self {
        // record bare file names so the hash (and thus the CSV header line)
        // does not depend on where the run happened
        RunManifest {
            command,
            input: file_name(input),
            model,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            outputs: Vec::new(),
        }
    }

    /// Hash of everything except the wall clock, so reruns agree.
    fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        let digest = Sha256::digest(&bytes);
        format!("{digest:x}")
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let hash = self.hash();
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let stamped = StampedManifest {
            manifest: self,
            hash: &hash,
            unix_timestamp: timestamp,
        };
        let path = dir.join(format!("{}_manifest.json", self.command));
        std::fs::write(&path, serde_json::to_string_pretty(&stamped)? + "\n")?;
        Ok(path)
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// RFC-4180 CSV (CRLF rows) prefixed by the manifest-hash comment line.
fn write_csv(path: &Path, hash: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# manifest {hash}\r\n"));
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for row in rows {
        out.push_str(&row.join(","));
        out.push_str("\r\n");
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn describe_domain(domain: &ParamDomain<f64>) -> String {
    match domain {
        ParamDomain::Unconstrained => "unconstrained".into(),
        ParamDomain::Interval(iv) => format!("({}, {})", iv.lo, iv.hi),
        ParamDomain::Union(ivs) => ivs
            .iter()
            .map(|iv| format!("({}, {})", iv.lo, iv.hi))
            .collect::<Vec<_>>()
            .join(" U "),
        ParamDomain::Empty => "empty".into(),
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let model = load_model(&args.config)?;
    let report = model::validate(&model)?;
    println!("classification: {}", report.classification);
    for v in &report.violations {
        println!("violated {}: {}", v.rule, v.message);
    }
    match model::demand_domain(&model) {
        Ok(bounds) => {
            println!("admissible demand domains (other parameters fixed):");
            println!("  mu_X     {}", describe_domain(&bounds.mu_x));
            println!("  sigma_X  {}", describe_domain(&bounds.sigma_x));
            println!("  lambda_X {}", describe_domain(&bounds.lambda_x));
            println!("  m_X      {}", describe_domain(&bounds.m_x));
        }
        Err(Error::UnsupportedAnalytic(msg)) => {
            println!("demand domain bounds unavailable: {msg}");
        }
        Err(e) => return Err(e),
    }
    Ok(if report.valid { 0 } else { 2 })
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    if args.grid_points == 0 {
        return Err(Error::Structural("--grid-points must be >= 1".into()));
    }
    let model = load_model(&args.config)?;
    let solution = solver::solve(&model)?;

    println!("h             {}", fmt9(solution.h));
    println!("A             {}", fmt9(solution.perpetuity));
    println!("r0            {}", fmt9(solution.r0));
    println!("q*            {}", fmt9(solution.qstar));
    println!("root residual {}", fmt9(solution.root_residual));
    let (value_gap, slope_gap) = solution.smooth_pasting_check();
    println!("value-matching gap {}", fmt9(value_gap));
    println!("smooth-pasting gap {}", fmt9(slope_gap));
    let grid = solution.default_q_grid(1000);
    let (cont, stop) = solution.hjb_residuals(&grid)?;
    println!("min continuation slack (f - l) {}", fmt9(cont));
    println!("min stopping slack             {}", fmt9(stop));

    std::fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new("solve", &args.config, &model, None);
    let value_path = args.out.join("value.csv");
    let boundary_path = args.out.join("boundary.csv");
    manifest.outputs = vec![file_name(&value_path), file_name(&boundary_path)];
    let hash = manifest.hash();

    let qs = solution.default_q_grid(args.grid_points);
    let value_rows: Vec<Vec<String>> = qs
        .iter()
        .map(|&q| {
            let f = solution.value_f(q).expect("grid is positive");
            vec![fmt9(q), fmt9(f), fmt9(solution.payoff_l(q))]
        })
        .collect();
    write_csv(&value_path, &hash, &["q", "f", "l"], &value_rows)?;

    let x0 = model.demand.initial;
    let xs = log_spaced(x0 / 10.0, x0 * 10.0, args.grid_points);
    let boundary_rows: Vec<Vec<String>> = solution
        .boundary_curve(&xs)?
        .into_iter()
        .map(|(x, i)| vec![fmt9(x), fmt9(i)])
        .collect();
    write_csv(&boundary_path, &hash, &["x", "i_boundary"], &boundary_rows)?;

    manifest.write(&args.out)?;
    println!("wrote {} and {}", value_path.display(), boundary_path.display());
    Ok(0)
}

fn parse_sweep_range(raw: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    let bad = || Error::Structural(format!("--sweep expects lo:hi:steps, got '{raw}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: usize = parts[2].parse().map_err(|_| bad())?;
    if steps < 2 || !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Err(bad());
    }
    let step = (hi - lo) / (steps as f64 - 1.0);
    Ok((0..steps).map(|k| lo + step * k as f64).collect())
}

fn parse_param(raw: &str) -> Result<ParamId> {
    ParamId::parse(raw).ok_or_else(|| {
        let names: Vec<&str> = ParamId::ALL.iter().map(|p| p.name()).collect();
        Error::Structural(format!(
            "unknown parameter '{raw}'; valid names: {}",
            names.join(", ")
        ))
    })
}

fn cmd_statics(args: &StaticsArgs) -> Result<i32> {
    let model = load_model(&args.config)?;
    let solution = solver::solve(&model)?;

    if let Some(raw) = &args.sweep {
        let param = match &args.param {
            Some(p) => parse_param(p)?,
            None => return Err(Error::Structural("--sweep requires --param".into())),
        };
        let values = parse_sweep_range(raw)?;
        let rows = statics::sweep(&model, param, &values);

        std::fs::create_dir_all(&args.out)?;
        let mut manifest = RunManifest::new("statics", &args.config, &model, None);
        let path = args.out.join(format!("sweep_{param}.csv"));
        manifest.outputs = vec![file_name(&path)];
        let hash = manifest.hash();
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    fmt9(r.value),
                    fmt9(r.h),
                    r.r0.map(fmt9).unwrap_or_default(),
                    r.qstar.map(fmt9).unwrap_or_default(),
                    r.flag.clone(),
                ]
            })
            .collect();
        write_csv(&path, &hash, &["value", "h", "r0", "qstar", "flag"], &csv_rows)?;
        manifest.write(&args.out)?;
        println!("wrote {}", path.display());
        return Ok(0);
    }

    let params: Vec<ParamId> = match &args.param {
        Some(p) => vec![parse_param(p)?],
        None => ParamId::ALL.to_vec(),
    };
    println!("param      dq*/dy          fd gap        sign class");
    for param in params {
        match statics::dqstar_dy(&model, &solution, param) {
            Ok(rep) => {
                let gap = rep
                    .fd_rel_gap
                    .map(fmt9)
                    .unwrap_or_else(|| "n/a".into());
                let side = if rep.fd_one_sided { " (one-sided)" } else { "" };
                println!(
                    "{:<10} {:>15} {:>13}{side} {}",
                    param.name(),
                    fmt9(rep.derivative),
                    gap,
                    rep.sign_class
                );
            }
            Err(Error::UnsupportedAnalytic(_)) => {
                println!(
                    "{:<10} unsupported-analytic (random jump law; use --sweep)",
                    param.name()
                );
            }
            Err(e) => return Err(e),
        }
    }
    Ok(0)
}

fn parse_multipliers(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::Structural(format!("bad scan multiplier '{s}'")))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Structural(format!(
                    "scan multiplier {v} must be > 0"
                )))
            }
        })
        .collect()
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let model = load_model(&args.config)?;
    let solution = solver::solve(&model)?;

    let mut config = SimConfig::default_for(&model);
    if let Some(p) = args.paths {
        config.paths = p;
    }
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(t) = args.horizon {
        config.horizon = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.truncation = TruncationPolicy::Zero;
    config.check()?;

    std::fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new("simulate", &args.config, &model, Some(config.seed));
    let moments_path = args.out.join("moments.csv");
    let policy_path = args.out.join("policy.csv");
    manifest.outputs = vec![file_name(&moments_path), file_name(&policy_path)];
    let hash = manifest.hash();

    // conditional-moment verification at k in {1, 2, theta}
    let theta = model.market.elasticity;
    let mut ks = vec![1.0, 2.0];
    if (theta - 1.0).abs() > 1e-12 && (theta - 2.0).abs() > 1e-12 {
        ks.push(theta);
    }
    let t_check = 1.0;
    println!("moment check at t = {t_check} ({} draws):", config.paths);
    println!("process  k        empirical       analytic        z");
    let mut moment_rows = Vec::new();
    for (tag, process) in [("demand", &model.demand), ("cost", &model.cost)] {
        for &k in &ks {
            let est = montecarlo::estimate_moment(process, k, t_check, &config)?;
            let analytic = montecarlo::analytic_moment(process, k, t_check);
            let z = est.z_score(analytic);
            println!(
                "{tag:<8} {k:<6} {:>15} {:>15} {:>8.2}",
                fmt9(est.mean),
                fmt9(analytic),
                z
            );
            moment_rows.push(vec![
                tag.to_string(),
                fmt9(k),
                fmt9(est.mean),
                fmt9(est.std_error),
                fmt9(analytic),
                fmt9(z),
            ]);
        }
    }
    write_csv(
        &moments_path,
        &hash,
        &["process", "k", "empirical", "std_error", "analytic", "z"],
        &moment_rows,
    )?;

    // policy value at q* plus the optional threshold scan
    let multipliers = match &args.scan {
        Some(raw) => parse_multipliers(raw)?,
        None => vec![1.0],
    };
    let multipliers = if multipliers.contains(&1.0) {
        multipliers
    } else {
        let mut m = multipliers;
        m.push(1.0);
        m
    };
    let scan = montecarlo::optimality_scan(&model, &solution, &multipliers, &config)?;
    let analytic_v = solution.value_v(model.demand.initial, model.cost.initial)?;
    println!("analytic V(x0, i0) = {}", fmt9(analytic_v));
    println!("threshold        multiplier  mc value        ci95            stopped");
    let mut policy_rows = Vec::new();
    for (k, (threshold, est)) in scan.iter().enumerate() {
        println!(
            "{:>15} {:>10} {:>15} {:>15} {:>8.4}",
            fmt9(*threshold),
            fmt9(multipliers[k]),
            fmt9(est.mean),
            fmt9(est.ci95_half_width),
            est.fraction_stopped
        );
        policy_rows.push(vec![
            fmt9(multipliers[k]),
            fmt9(*threshold),
            fmt9(est.mean),
            fmt9(est.std_error),
            fmt9(est.ci95_half_width),
            fmt9(est.fraction_stopped),
        ]);
    }
    write_csv(
        &policy_path,
        &hash,
        &[
            "multiplier",
            "threshold",
            "mc_value",
            "std_error",
            "ci95_half_width",
            "fraction_stopped",
        ],
        &policy_rows,
    )?;
    manifest.write(&args.out)?;
    println!("wrote {} and {}", moments_path.display(), policy_path.display());

    let at_star = scan
        .iter()
        .zip(&multipliers)
        .find(|(_, &m)| m == 1.0)
        .map(|((_, est), _)| est)
        .expect("multiplier 1 present");
    let rel = (at_star.mean - analytic_v).abs() / analytic_v.abs().max(f64::MIN_POSITIVE);
    println!(
        "policy value vs analytic: gap {} ({}x SE, {:.4}% relative)",
        fmt9(at_star.mean - analytic_v),
        fmt9(at_star.z_score(analytic_v).abs()),
        100.0 * rel
    );
    let _ = c::<f64>(0.0); // keep the scalar helper linked for f32 builds
    Ok(0)
}
