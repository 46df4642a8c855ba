use std::process::ExitCode;

use anyhow::Result;
use clap::Args;

use fragdeconv_core::bandwidth::{crit1_select, crit2_select, BandwidthFamily, SelectionConfig};
use fragdeconv_core::bench::{run_campaign, weighted_risks, CampaignConfig};
use fragdeconv_core::estimator::{empirical_d_star, empirical_m_star, g_hat_star, BandLimited, EstimatorConfig, SizeSample};
use fragdeconv_core::rng::seeded;
use fragdeconv_core::stationary::{sample_from_n, solve_stationary, true_spectra, SolverMethod, SolverOptions};
use fragdeconv_core::XiGrid;

use crate::commands::load_config;
use crate::ConfigArg;

#[derive(Args)]
pub struct CheckArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Skip the time-marching solve (the slowest check).
    #[arg(long)]
    quick: bool,
}

struct Row {
    name: &'static str,
    pass: bool,
    detail: String,
}

pub fn run(a: CheckArgs) -> Result<ExitCode> {
    let cfg = load_config(&a.config)?;
    let model = cfg.model()?;
    let opts = cfg.solver_options();
    let mut rows = Vec::new();
    let fixed = solve_stationary(&model, &SolverOptions { method: SolverMethod::FixedPoint, ..opts.clone() })?;
    let alpha = cfg.model.alpha;
    let rate = cfg.model.rate;

    let mass = fixed.mass();
    rows.push(Row {
        name: "stationary mass",
        pass: (mass - 1.0).abs() < 1e-6,
        detail: format!("int N = {mass:.9}"),
    });
    rows.push(Row {
        name: "stationary N(0) = 0",
        pass: fixed.values[0] == 0.0,
        detail: format!("N(0) = {:e}", fixed.values[0]),
    });
    let rel = (fixed.mean() - alpha / rate).abs() / (alpha / rate);
    rows.push(Row {
        name: "stationary mean",
        pass: rel < 5e-3,
        detail: format!("int xN = {:.6}, relative gap {rel:.2e}", fixed.mean()),
    });
    if !a.quick {
        let march = solve_stationary(&model, &SolverOptions { method: SolverMethod::TimeMarch, ..opts.clone() })?;
        let l1 = fixed.l1_distance(&march)?;
        rows.push(Row {
            name: "dual solver agreement",
            pass: l1 < 1e-4,
            detail: format!("L1 = {l1:.2e} at J = {}", opts.intervals),
        });
    }

    let kernel = cfg.kernel()?;
    let grid = XiGrid::new(2.0, cfg.grids.xi_step)?;
    let spectra = true_spectra(&fixed, &grid);
    let mut worst: f64 = 0.0;
    for k in -(grid.half_len() as isize)..=grid.half_len() as isize {
        let xi = k as f64 * grid.step();
        let lhs = alpha * spectra.d.at(k) / (2.0 * rate * spectra.m.at(k)) + 1.0;
        worst = worst.max((lhs - kernel.g_star(xi)).norm());
    }
    rows.push(Row {
        name: "spectral identity |xi| <= 2",
        pass: worst < 1e-4,
        detail: format!("sup gap {worst:.2e}"),
    });

    let xi = cfg.xi_grid()?;
    let sample = SizeSample::new(sample_from_n(&fixed, 4000, &mut seeded(11)))?;
    let ecfg = EstimatorConfig::new(alpha, rate, 0.3, xi, cfg.grids.u_grid)?;
    let gs = g_hat_star(&ecfg, &empirical_m_star(&sample, &xi), &empirical_d_star(&sample, &xi), Some(sample.len()))?;
    let bl = BandLimited::from_spectrum(&gs)?;
    let w = weighted_risks(|u| bl.eval(u), &kernel, cfg.grids.u_grid.u_min)?;
    rows.push(Row {
        name: "risk identity in x and u",
        pass: w.identity_gap() < 1e-6,
        detail: format!("gap {:.2e}", w.identity_gap()),
    });
    rows.push(Row {
        name: "symmetrised risk bound",
        pass: w.inequality_holds(),
        detail: format!("{:.3e} <= {:.3e}", w.m_weighted, w.plain_l2 * w.plain_l2),
    });

    let family = BandwidthFamily::standard(cfg.estimation.delta_max)?;
    let sel = SelectionConfig {
        alpha,
        rate,
        xi,
        u_grid: cfg.grids.u_grid,
    };
    let (c1, _) = crit1_select(&sample, &family, 4, &sel, &mut seeded(5))?;
    let (c2, _) = crit2_select(&sample, &family, 4, &sel, &mut seeded(5))?;
    let t2 = c2.table2.as_ref().expect("crit2 table");
    let diag = (0..family.len())
        .map(|i| (t2[i][i] - c1.table[i]).abs() / c1.table[i].abs().max(1.0))
        .fold(0.0, f64::max);
    rows.push(Row {
        name: "crit2 diagonal equals crit1",
        pass: diag < 1e-12,
        detail: format!("max relative gap {diag:.1e}"),
    });

    let camp = CampaignConfig {
        n: 2000,
        runs: 2,
        v: 2,
        master_seed: 3,
        solver: opts.clone(),
        ..CampaignConfig::reference(kernel.clone())
    };
    let mut r1 = run_campaign(&camp, Some(&fixed))?;
    let mut r2 = run_campaign(&camp, Some(&fixed))?;
    r1.timings = None;
    r2.timings = None;
    rows.push(Row {
        name: "campaign determinism",
        pass: r1 == r2 && !r1.partial,
        detail: format!("{} runs", r1.runs_completed),
    });

    let failed = rows.iter().filter(|r| !r.pass).count();
    for r in &rows {
        println!("{:<4}  {:<30}  {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    println!("{} passed, {} failed", rows.len() - failed, failed);
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
