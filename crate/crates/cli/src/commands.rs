use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use fragdeconv_core::bandwidth::{
    crit1_select, crit2_select, oracle_bandwidth, BandwidthFamily, Rule, Selection, SelectionConfig,
};
use fragdeconv_core::bench::{run_campaign, true_g_on, SampleSource};
use fragdeconv_core::config::{parse_config, InitialLaw, RunConfig};
use fragdeconv_core::estimator::{estimate as run_estimate, EstimatorConfig, SizeSample};
use fragdeconv_core::io::{read_csv_text, write_atomic, write_csv, write_csv_f64, Column};
use fragdeconv_core::rng::{derive_seed, seeded};
use fragdeconv_core::simulate::{advance, init_population, InitialSizes, SimConfig};
use fragdeconv_core::stationary::{sample_from_n, solve_stationary, true_spectra, SolverMethod};
use fragdeconv_core::Complex64;

use crate::ConfigArg;

pub fn load_config(arg: &ConfigArg) -> Result<RunConfig> {
    match &arg.config {
        Some(p) => parse_config(p).with_context(|| format!("reading config {}", p.display())),
        None => {
            let c = RunConfig::default();
            c.validate()?;
            Ok(c)
        }
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().map(|p| p.join(name)).unwrap_or_else(|| PathBuf::from(name))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

/// The `x` column of a sample file, or `size` as written by `simulate`.
pub fn read_sample(path: &Path) -> Result<SizeSample> {
    let table = read_csv_text(path)?;
    let col = ["x", "size"]
        .iter()
        .find_map(|name| table.headers.iter().position(|h| h == name))
        .with_context(|| format!("{}: need a column named `x` or `size`", path.display()))?;
    let values = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r[col]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("{}: row {}", path.display(), i + 2))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SizeSample::new(values)?)
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Final time (overrides simulation.t_end).
    #[arg(long)]
    t_end: Option<f64>,
    /// Scaling parameter K (overrides simulation.k).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cell sizes, columns `size[,label]`.
    #[arg(long)]
    out: PathBuf,
    /// Division log, columns `time,mother_size,gamma` (default:
    /// divisions.csv next to --out when divisions are tracked).
    #[arg(long)]
    divisions: Option<PathBuf>,
}

pub fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.config)?;
    if let Some(t) = a.t_end {
        cfg.simulation.t_end = t;
    }
    if let Some(k) = a.k {
        cfg.simulation.k = k;
    }
    cfg.validate()?;
    let s = &cfg.simulation;
    let mut sim = SimConfig::new(cfg.kernel()?, cfg.model.alpha, cfg.model.rate)?.with_tracking(s.track_labels, s.track_divisions);
    sim.max_cells = s.max_cells;
    let mut rng = seeded(a.seed);
    let count = s.initial_cells.unwrap_or(s.k);
    let initial = match s.initial {
        InitialLaw::Ones => vec![1.0; count],
        InitialLaw::Stationary => {
            let d = solve_stationary(&cfg.model()?, &cfg.solver_options())?;
            sample_from_n(&d, count, &mut rng)
        }
    };
    let snap = init_population(s.k, InitialSizes::Explicit(initial), &mut rng)?;
    let snap = advance(&snap, &sim, s.t_end, &mut rng)?;
    match &snap.labels {
        Some(labels) => write_csv(&a.out, &["size", "label"], &[Column::F64(&snap.sizes), Column::Text(labels)])?,
        None => write_csv_f64(&a.out, &["size"], &[&snap.sizes])?,
    }
    if let Some(log) = &snap.divisions {
        let path = a.divisions.clone().unwrap_or_else(|| sibling(&a.out, "divisions.csv"));
        let t: Vec<f64> = log.iter().map(|r| r.time).collect();
        let m: Vec<f64> = log.iter().map(|r| r.mother_size).collect();
        let g: Vec<f64> = log.iter().map(|r| r.gamma).collect();
        write_csv_f64(&path, &["time", "mother_size", "gamma"], &[&t, &m, &g])?;
    }
    println!(
        "t = {}  cells = {}  <Z,1> = {:.6}  <Z,x> = {:.6}",
        snap.time,
        snap.len(),
        snap.measure(|_| 1.0),
        snap.measure(|x| x)
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct StationaryArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Solver path (overrides solver.method).
    #[arg(long, value_parser = ["fixed_point", "time_march"])]
    method: Option<String>,
    /// Density on the x grid, columns `x,N`.
    #[arg(long)]
    out: PathBuf,
    /// True spectra, columns `xi,reM,imM,reD,imD,refrakD,imfrakD`.
    #[arg(long)]
    spectra: Option<PathBuf>,
    /// Also write an i.i.d. sample from N (column `x`).
    #[arg(long)]
    sample_out: Option<PathBuf>,
    /// Sample size for --sample-out (default campaign.n).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn stationary(a: StationaryArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.config)?;
    if let Some(m) = &a.method {
        cfg.solver.method = if m == "time_march" { SolverMethod::TimeMarch } else { SolverMethod::FixedPoint };
    }
    let d = solve_stationary(&cfg.model()?, &cfg.solver_options())?;
    write_csv_f64(&a.out, &["x", "N"], &[&d.xs(), &d.values])?;
    if let Some(path) = &a.spectra {
        let grid = cfg.xi_grid()?;
        let s = true_spectra(&d, &grid);
        let parts = |v: &[Complex64]| -> (Vec<f64>, Vec<f64>) { (v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect()) };
        let (rm, im) = parts(s.m.values());
        let (rd, id) = parts(s.d.values());
        let (rf, imf) = parts(s.frak_d.values());
        write_csv_f64(
            path,
            &["xi", "reM", "imM", "reD", "imD", "refrakD", "imfrakD"],
            &[&grid.nodes(), &rm, &im, &rd, &id, &rf, &imf],
        )?;
    }
    if let Some(path) = &a.sample_out {
        let n = a.n.unwrap_or(cfg.campaign.n);
        let x = sample_from_n(&d, n, &mut seeded(a.seed));
        write_csv_f64(path, &["x"], &[&x])?;
    }
    println!(
        "method = {:?}  iterations = {}  residual = {:.3e}  mass = {:.9}  mean = {:.6} (alpha/R = {:.6})",
        d.method,
        d.iterations,
        d.residual,
        d.mass(),
        d.mean(),
        cfg.model.alpha / cfg.model.rate
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Size sample, one column `x` (or `size`).
    #[arg(long)]
    sample: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    /// Bandwidth (overrides estimation.ell).
    #[arg(long)]
    ell: Option<f64>,
    /// Columns `x,h_hat,h_hat_sym`.
    #[arg(long)]
    out: PathBuf,
    /// Columns `u,g_hat` (default: g_est.csv next to --out).
    #[arg(long)]
    g_out: Option<PathBuf>,
}

pub fn estimate(a: EstimateArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.config)?;
    if let Some(v) = a.alpha {
        cfg.model.alpha = v;
    }
    if let Some(v) = a.rate {
        cfg.model.rate = v;
    }
    if let Some(v) = a.ell {
        cfg.estimation.ell = v;
    }
    cfg.validate()?;
    let sample = read_sample(&a.sample)?;
    let ecfg = EstimatorConfig::new(cfg.model.alpha, cfg.model.rate, cfg.estimation.ell, cfg.xi_grid()?, cfg.grids.u_grid)?;
    let est = run_estimate(&sample, &ecfg, cfg.grids.x_points)?;
    write_csv_f64(&a.out, &["x", "h_hat", "h_hat_sym"], &[&est.x, &est.h, &est.h_sym])?;
    let g_path = a.g_out.clone().unwrap_or_else(|| sibling(&a.out, "g_est.csv"));
    write_csv_f64(&g_path, &["u", "g_hat"], &[&est.u, &est.g])?;
    println!("n = {}  ell = {}  leakage = {:.3e}", sample.len(), est.ell, est.leakage);
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct SelectArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    sample: PathBuf,
    /// crit1, crit2 or oracle (overrides estimation.rule).
    #[arg(long)]
    rule: Option<Rule>,
    /// Number of splits (overrides estimation.v).
    #[arg(long)]
    v: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SelectionFile<'a> {
    n: usize,
    v: usize,
    seed: u64,
    split_seed: Option<u64>,
    family: &'a [f64],
    #[serde(flatten)]
    selection: &'a Selection,
}

pub fn select(a: SelectArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.config)?;
    if let Some(v) = a.v {
        cfg.estimation.v = v;
    }
    if let Some(r) = a.rule {
        cfg.estimation.rule = r;
    }
    cfg.validate()?;
    let sample = read_sample(&a.sample)?;
    if sample.len() % 2 != 0 {
        bail!("[bandwidth] sample size must be even, got {}", sample.len());
    }
    let family: BandwidthFamily = cfg.family()?;
    let sel = SelectionConfig {
        alpha: cfg.model.alpha,
        rate: cfg.model.rate,
        xi: cfg.xi_grid()?,
        u_grid: cfg.grids.u_grid,
    };
    let v = cfg.estimation.v;
    let split_seed = derive_seed(a.seed, 0);
    let (selection, split_seed) = match cfg.estimation.rule {
        Rule::Crit1 => (crit1_select(&sample, &family, v, &sel, &mut seeded(split_seed))?.0, Some(split_seed)),
        Rule::Crit2 => (crit2_select(&sample, &family, v, &sel, &mut seeded(split_seed))?.0, Some(split_seed)),
        Rule::Oracle => {
            let g = true_g_on(&cfg.kernel()?, &cfg.grids.u_grid);
            (oracle_bandwidth(&sample, &family, &g, &sel)?, None)
        }
    };
    write_json(
        &a.out,
        &SelectionFile {
            n: sample.len(),
            v,
            seed: a.seed,
            split_seed,
            family: family.values(),
            selection: &selection,
        },
    )?;
    println!("rule = {}  ell = {}", selection.rule.name(), selection.ell);
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Report mirroring RiskReport.
    #[arg(long)]
    out: PathBuf,
    /// One row per (run, rule).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Overrides campaign.runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Overrides campaign.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides campaign.n.
    #[arg(long)]
    n: Option<usize>,
    /// Overrides estimation.v.
    #[arg(long)]
    v: Option<usize>,
    /// Sample from a simulated population at (simulation.k, simulation.t_end).
    #[arg(long)]
    from_simulation: bool,
    /// Include wall-clock timings in the report (makes it non-reproducible).
    #[arg(long)]
    timings: bool,
}

pub fn bench(a: BenchArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.config)?;
    if let Some(v) = a.runs {
        cfg.campaign.runs = v;
    }
    if let Some(v) = a.seed {
        cfg.campaign.master_seed = v;
    }
    if let Some(v) = a.n {
        cfg.campaign.n = v;
    }
    if let Some(v) = a.v {
        cfg.estimation.v = v;
    }
    if a.from_simulation {
        cfg.campaign.source = SampleSource::Simulation {
            k: cfg.simulation.k,
            t_end: cfg.simulation.t_end,
        };
    }
    cfg.validate()?;
    let mut report = run_campaign(&cfg.campaign()?, None)?;
    if !a.timings {
        report.timings = None;
    }
    write_json(&a.out, &report)?;
    if let Some(p) = &a.csv {
        write_atomic(p, report.runs_csv()?.as_bytes())?;
    }
    println!("{:<8} {:>6} {:>10} {:>10} {:>10}", "rule", "runs", "mean risk", "se", "mean ell");
    for s in &report.summary {
        println!(
            "{:<8} {:>6} {:>10.5} {:>10.5} {:>10.5}",
            s.rule.name(),
            s.completed,
            s.mean_risk,
            s.se_risk,
            s.mean_ell
        );
    }
    if report.partial {
        eprintln!("warning: {} of {} runs failed", report.runs_requested - report.runs_completed, report.runs_requested);
    }
    Ok(ExitCode::SUCCESS)
}
