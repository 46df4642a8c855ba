//! Monte Carlo risk campaigns, weighted risks, rate sweeps.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{
    argmin_prefer_larger, risk_table, select_crit1, select_crit2, split_estimates, split_sample, BandwidthFamily,
    HalfEstimate, Rule, SelectionConfig,
};
use crate::error::{Error, Result};
use crate::estimator::{empirical_half, inverse_threshold, truncated_reciprocal, SizeSample, UGrid};
use crate::io::{csv_string, Column};
use crate::kernels::DivisionKernel;
use crate::quadrature::{gauss_legendre, integrate_limited, trapezoid_uniform};
use crate::rng::{derive_seed, seeded, SimRng};
use crate::simulate::{advance, init_population, InitialSizes, SimConfig};
use crate::spectrum::XiGrid;
use crate::stationary::{sample_from_n, solve_stationary, true_spectra, Model, SolverOptions, StationaryDensity};

const MODULE: &str = "bench";

/// Where each run draws its sample from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSource {
    /// i.i.d. draws from the solved stationary density.
    #[default]
    Stationary,
    /// Sizes picked from a simulated population of `k` initial cells
    /// (drawn from `N`) advanced to time `t_end`.
    Simulation { k: usize, t_end: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub kernel: DivisionKernel,
    pub alpha: f64,
    pub rate: f64,
    pub n: usize,
    pub v: usize,
    pub rules: Vec<Rule>,
    pub runs: usize,
    pub master_seed: u64,
    pub delta_max: u32,
    pub xi: XiGrid,
    pub u_grid: UGrid,
    pub solver: SolverOptions,
    pub source: SampleSource,
}

impl CampaignConfig {
    /// The settings of the reference study: `α = 0.7, R = 1, n = 30000,
    /// V = 10`, all three rules.
    pub fn reference(kernel: DivisionKernel) -> Self {
        CampaignConfig {
            kernel,
            alpha: 0.7,
            rate: 1.0,
            n: 30_000,
            v: 10,
            rules: vec![Rule::Crit1, Rule::Crit2, Rule::Oracle],
            runs: 100,
            master_seed: 1,
            delta_max: 50,
            xi: XiGrid::new(50.0, 0.05).expect("static grid"),
            u_grid: UGrid::default(),
            solver: SolverOptions::default(),
            source: SampleSource::Stationary,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid(MODULE, "runs must be at least 1"));
        }
        if self.rules.is_empty() {
            return Err(Error::invalid(MODULE, "no selection rule requested"));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::invalid(MODULE, format!("n must be even and at least 2, got {}", self.n)));
        }
        self.u_grid.validate()
    }

    fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            alpha: self.alpha,
            rate: self.rate,
            xi: self.xi,
            u_grid: self.u_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule: Rule,
    pub ell: f64,
    /// `‖ĝ_ℓ̂ - g‖₂` on the u-grid.
    pub error: f64,
    /// `‖ĝ_ℓ̂ - g‖₂²`, the quantity averaged in the reference table.
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub index: usize,
    pub seed: u64,
    pub results: Vec<RuleResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub rule: Rule,
    pub completed: usize,
    pub mean_error: f64,
    pub mean_ell: f64,
    pub sd_error: f64,
    pub se_error: f64,
    pub mean_risk: f64,
    pub se_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve_seconds: f64,
    pub runs_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub kernel: String,
    pub alpha: f64,
    pub rate: f64,
    pub n: usize,
    pub v: usize,
    pub master_seed: u64,
    pub delta_max: u32,
    pub xi_half_width: f64,
    pub xi_step: f64,
    pub u_grid: UGrid,
    pub source: SampleSource,
    pub runs_requested: usize,
    pub runs_completed: usize,
    pub partial: bool,
    pub runs: Vec<RunResult>,
    pub summary: Vec<RuleSummary>,
    /// Wall-clock; left out unless asked for since it varies between runs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Timings>,
}

impl RiskReport {
    pub fn summary_for(&self, rule: Rule) -> Option<&RuleSummary> {
        self.summary.iter().find(|s| s.rule == rule)
    }

    /// One row per (run, rule).
    pub fn runs_csv(&self) -> Result<String> {
        let mut run = Vec::new();
        let mut seed = Vec::new();
        let mut rule = Vec::new();
        let mut ell = Vec::new();
        let mut err = Vec::new();
        let mut risk = Vec::new();
        let mut status = Vec::new();
        for r in &self.runs {
            if let Some(f) = &r.failure {
                run.push(r.index.to_string());
                seed.push(r.seed.to_string());
                rule.push(String::new());
                ell.push(f64::NAN);
                err.push(f64::NAN);
                risk.push(f64::NAN);
                status.push(format!("failed: {}", f.replace(['\n', ','], " ")));
                continue;
            }
            for x in &r.results {
                run.push(r.index.to_string());
                seed.push(r.seed.to_string());
                rule.push(x.rule.name().to_string());
                ell.push(x.ell);
                err.push(x.error);
                risk.push(x.risk);
                status.push("ok".to_string());
            }
        }
        csv_string(
            &["run", "seed", "rule", "ell", "error", "risk", "status"],
            &[
                Column::Text(&run),
                Column::Text(&seed),
                Column::Text(&rule),
                Column::F64(&ell),
                Column::F64(&err),
                Column::F64(&risk),
                Column::Text(&status),
            ],
        )
    }
}

/// `g` on the nodes of `grid`.
pub fn true_g_on(kernel: &DivisionKernel, grid: &UGrid) -> Vec<f64> {
    grid.nodes().iter().map(|&u| kernel.eval_g(u)).collect()
}

fn draw_sample(cfg: &CampaignConfig, density: &StationaryDensity, rng: &mut SimRng) -> Result<SizeSample> {
    match cfg.source {
        SampleSource::Stationary => SizeSample::new(sample_from_n(density, cfg.n, rng)),
        SampleSource::Simulation { k, t_end } => {
            let sim = SimConfig::new(cfg.kernel.clone(), cfg.alpha, cfg.rate)?;
            let init: Vec<f64> = sample_from_n(density, k, rng);
            let snap = init_population(k, InitialSizes::Explicit(init), rng)?;
            let snap = advance(&snap, &sim, t_end, rng)?;
            snap.sample_sizes(cfg.n, rng)
        }
    }
}

fn run_once(
    cfg: &CampaignConfig,
    density: &StationaryDensity,
    family: &BandwidthFamily,
    cutoffs: &[usize],
    true_g: &[f64],
    seed: u64,
) -> Result<Vec<RuleResult>> {
    let mut rng = seeded(seed);
    let sample = draw_sample(cfg, density, &mut rng)?;
    let sel = cfg.selection();
    let kmax = cutoffs.iter().copied().max().unwrap_or(0);
    let full = empirical_half(sample.log_values(), cfg.xi.step(), kmax);
    let est = HalfEstimate::from_spectra(cfg.alpha, cfg.rate, &full, sample.len());
    let risks = risk_table(&est, cutoffs, &cfg.u_grid, true_g)?;
    let needs_split = cfg.rules.iter().any(|r| *r != Rule::Oracle);
    let splits = if needs_split {
        let plan = split_sample(sample.len(), cfg.v, &mut rng)?;
        Some(split_estimates(&sample, &plan, &sel, kmax, &full)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(cfg.rules.len());
    for &rule in &cfg.rules {
        let index = match rule {
            Rule::Oracle => argmin_prefer_larger(&risks),
            Rule::Crit1 => select_crit1(family, splits.as_ref().expect("split"), cutoffs).index,
            Rule::Crit2 => select_crit2(family, splits.as_ref().expect("split"), cutoffs).index,
        };
        let risk = risks[index];
        if !risk.is_finite() {
            return Err(Error::state(MODULE, format!("non-finite risk for rule {}", rule.name())));
        }
        out.push(RuleResult {
            rule,
            ell: family.values()[index],
            error: risk.sqrt(),
            risk,
        });
    }
    Ok(out)
}

fn summarise(rules: &[Rule], runs: &[RunResult]) -> Vec<RuleSummary> {
    rules
        .iter()
        .map(|&rule| {
            let rows: Vec<&RuleResult> = runs
                .iter()
                .filter(|r| r.failure.is_none())
                .flat_map(|r| r.results.iter().filter(move |x| x.rule == rule))
                .collect();
            let k = rows.len();
            let mean = |f: &dyn Fn(&RuleResult) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / k as f64;
            let mean_error = mean(&|r| r.error);
            let mean_ell = mean(&|r| r.ell);
            let mean_risk = mean(&|r| r.risk);
            let sd = |f: &dyn Fn(&RuleResult) -> f64, m: f64| {
                if k > 1 {
                    (rows.iter().map(|r| (f(r) - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
                } else {
                    0.0
                }
            };
            let sd_error = sd(&|r| r.error, mean_error);
            let sd_risk = sd(&|r| r.risk, mean_risk);
            RuleSummary {
                rule,
                completed: k,
                mean_error,
                mean_ell,
                sd_error,
                se_error: sd_error / (k as f64).sqrt(),
                mean_risk,
                se_risk: sd_risk / (k as f64).sqrt(),
            }
        })
        .collect()
}

/// Runs a campaign. `density` is solved from the config when absent.
/// A failing run is recorded and the campaign continues.
pub fn run_campaign(cfg: &CampaignConfig, density: Option<&StationaryDensity>) -> Result<RiskReport> {
    cfg.validate()?;
    let family = BandwidthFamily::standard(cfg.delta_max)?;
    let cutoffs = family.cutoffs(&cfg.xi)?;
    let t0 = Instant::now();
    let solved;
    let density = match density {
        Some(d) => d,
        None => {
            let model = Model::new(cfg.kernel.clone(), cfg.alpha, cfg.rate)?;
            solved = solve_stationary(&model, &cfg.solver)?;
            &solved
        }
    };
    let solve_seconds = t0.elapsed().as_secs_f64();
    let true_g = true_g_on(&cfg.kernel, &cfg.u_grid);
    let t1 = Instant::now();
    let runs: Vec<RunResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(cfg.master_seed, index as u64);
            match run_once(cfg, density, &family, &cutoffs, &true_g, seed) {
                Ok(results) => RunResult {
                    index,
                    seed,
                    results,
                    failure: None,
                },
                Err(e) => {
                    log::warn!("run {index} failed: {e}");
                    RunResult {
                        index,
                        seed,
                        results: Vec::new(),
                        failure: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let runs_seconds = t1.elapsed().as_secs_f64();
    let completed = runs.iter().filter(|r| r.failure.is_none()).count();
    Ok(RiskReport {
        kernel: cfg.kernel.name().to_string(),
        alpha: cfg.alpha,
        rate: cfg.rate,
        n: cfg.n,
        v: cfg.v,
        master_seed: cfg.master_seed,
        delta_max: cfg.delta_max,
        xi_half_width: cfg.xi.half_width(),
        xi_step: cfg.xi.step(),
        u_grid: cfg.u_grid,
        source: cfg.source,
        runs_requested: cfg.runs,
        runs_completed: completed,
        partial: completed < cfg.runs,
        summary: summarise(&cfg.rules, &runs),
        runs,
        timings: Some(Timings {
            solve_seconds,
            runs_seconds,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedRisks {
    /// `‖ĝ - g‖₂` over `[u_min, 0]`.
    pub plain_l2: f64,
    /// `∫ e^{-u} (ĝ - g)² du` over `[u_min, 0]`.
    pub exp_weighted: f64,
    /// `∫ (ĥ_sym - h)² x(1-x) dx` over `[e^{u_min}, 1 - e^{u_min}]`.
    pub m_weighted: f64,
    /// `∫ (ĥ - h)² x dx` over `[e^{u_min}, 1]`.
    pub x_weighted: f64,
}

impl WeightedRisks {
    pub fn identity_gap(&self) -> f64 {
        (self.x_weighted - self.plain_l2 * self.plain_l2).abs()
    }

    pub fn inequality_holds(&self) -> bool {
        self.m_weighted <= self.plain_l2 * self.plain_l2 * (1.0 + 1e-9) + 1e-12
    }
}

const PANEL: f64 = 0.1;
const PANEL_NODES: usize = 20;

/// Composite Gauss-Legendre over `[a, b]` in panels of width about `PANEL`.
fn composite_gl(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let panels = ((b - a) / PANEL).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    let (nodes, weights) = gauss_legendre(PANEL_NODES, 0.0, w);
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * w;
            nodes.iter().zip(&weights).map(|(x, wt)| wt * f(lo + x)).sum::<f64>()
        })
        .sum()
}

/// Adaptive quadrature in `x` over `[a, b]`, split at geometric panels.
fn geometric_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (lo * 1.25_f64.exp()).min(b);
        total += integrate_limited(&f, lo, hi, 1e-13, 200).value;
        lo = hi;
    }
    total
}

/// The four risks of `ĝ` against the kernel, each by its own quadrature:
/// Gauss-Legendre in `u` for the first two, adaptive Gauss-Kronrod in `x`
/// for the others. `ĥ(x) = ĝ(log x)/x` is evaluated pointwise.
pub fn weighted_risks(ghat: impl Fn(f64) -> f64, kernel: &DivisionKernel, u_min: f64) -> Result<WeightedRisks> {
    if !(u_min < 0.0) || !u_min.is_finite() {
        return Err(Error::GridMismatch {
            module: MODULE,
            message: format!("u_min must be negative and finite, got {u_min}"),
        });
    }
    let du = |u: f64| {
        let d = ghat(u) - kernel.eval_g(u);
        d * d
    };
    let plain = composite_gl(du, u_min, 0.0);
    let exp_weighted = composite_gl(|u| (-u).exp() * du(u), u_min, 0.0);
    let hhat = |x: f64| ghat(x.ln()) / x;
    let eps = u_min.exp();
    let x_weighted = geometric_adaptive(
        |x| {
            let d = hhat(x) - kernel.eval_h(x);
            d * d * x
        },
        eps,
        1.0,
    );
    let m_integrand = |x: f64| {
        let d = 0.5 * (hhat(x) + hhat(1.0 - x)) - kernel.eval_h(x);
        d * d * x * (1.0 - x)
    };
    let m_weighted = geometric_adaptive(&m_integrand, eps, 0.5) + geometric_adaptive(|y| m_integrand(1.0 - y), eps, 0.5);
    Ok(WeightedRisks {
        plain_l2: plain.sqrt(),
        exp_weighted,
        m_weighted,
        x_weighted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    /// Mean oracle risk `‖ĝ_ℓ - g‖²`.
    pub mean_risk: f64,
    pub se_risk: f64,
    pub mean_ell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub kernel: String,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log mean risk` against `log n`.
    pub slope: f64,
    /// 95% percentile bootstrap interval of the slope over runs.
    pub slope_ci: (f64, f64),
    /// Risk of `ĝ ≡ 0`, i.e. `‖g‖²` on the u-grid.
    pub baseline_risk: f64,
    pub strictly_decreasing: bool,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Oracle risk per sample size; each size uses its own seed stream.
pub fn rate_sweep(cfg: &CampaignConfig, density: &StationaryDensity, n_list: &[usize], runs: usize) -> Result<RateSweep> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(MODULE, "n_list must hold at least two strictly increasing sizes"));
    }
    let mut per_n: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_list.len());
    for (j, &n) in n_list.iter().enumerate() {
        let c = CampaignConfig {
            n,
            runs,
            rules: vec![Rule::Oracle],
            master_seed: derive_seed(cfg.master_seed, 1_000_000 + j as u64),
            ..cfg.clone()
        };
        let rep = run_campaign(&c, Some(density))?;
        if rep.partial {
            return Err(Error::state(MODULE, format!("rate sweep at n = {n} lost runs")));
        }
        per_n.push(
            rep.runs
                .iter()
                .map(|r| (r.results[0].risk, r.results[0].ell))
                .collect(),
        );
    }
    let logn: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let rows: Vec<RateRow> = n_list
        .iter()
        .zip(&per_n)
        .map(|(&n, v)| {
            let k = v.len() as f64;
            let mean = v.iter().map(|r| r.0).sum::<f64>() / k;
            let sd = (v.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0)).sqrt();
            RateRow {
                n,
                mean_risk: mean,
                se_risk: sd / k.sqrt(),
                mean_ell: v.iter().map(|r| r.1).sum::<f64>() / k,
            }
        })
        .collect();
    let logr: Vec<f64> = rows.iter().map(|r| r.mean_risk.ln()).collect();
    let slope = ls_slope(&logn, &logr);
    let mut rng = seeded(derive_seed(cfg.master_seed, 2_000_000));
    let mut boot: Vec<f64> = (0..2000)
        .map(|_| {
            let y: Vec<f64> = per_n
                .iter()
                .map(|v| {
                    let m = (0..v.len()).map(|_| v[rng.random_range(0..v.len())].0).sum::<f64>() / v.len() as f64;
                    m.ln()
                })
                .collect();
            ls_slope(&logn, &y)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let q = |p: f64| boot[((boot.len() - 1) as f64 * p).round() as usize];
    let g = true_g_on(&cfg.kernel, &cfg.u_grid);
    let baseline_risk = trapezoid_uniform(&g.iter().map(|v| v * v).collect::<Vec<_>>(), cfg.u_grid.step());
    Ok(RateSweep {
        kernel: cfg.kernel.name().to_string(),
        strictly_decreasing: rows.windows(2).all(|w| w[1].mean_risk < w[0].mean_risk),
        rows,
        slope,
        slope_ci: (q(0.025), q(0.975)),
        baseline_risk,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCell {
    pub xi: f64,
    pub n: usize,
    pub abs_m: f64,
    /// Monte Carlo `E|1_Ω / M̂* - 1 / M*|²`.
    pub mean_sq: f64,
    /// `min(|M*|^{-2}, n^{-1} |M*|^{-4})`.
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationStudy {
    pub cells: Vec<TruncationCell>,
    /// Smallest constant dominating every cell.
    pub constant: f64,
}

/// Error of the truncated reciprocal against the rate
/// `min(|M*|^{-2}, n^{-1}|M*|^{-4})`, with `M*` from the solved density.
pub fn truncation_bound_study(
    density: &StationaryDensity,
    xis: &[f64],
    ns: &[usize],
    reps: usize,
    seed: u64,
) -> Result<TruncationStudy> {
    if reps == 0 {
        return Err(Error::invalid(MODULE, "reps must be at least 1"));
    }
    let step = 0.05;
    let kmax = xis.iter().map(|x| (x / step).round() as usize).max().unwrap_or(0);
    let grid = XiGrid::with_half_len(kmax.max(1), step);
    let spectra = true_spectra(density, &grid);
    let m_at = |xi: f64| spectra.m.at((xi / step).round() as isize);
    let mut cells = Vec::new();
    for (a, &n) in ns.iter().enumerate() {
        let sums: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = seeded(derive_seed(seed, (a * reps + r) as u64));
                let u: Vec<f64> = sample_from_n(density, n, &mut rng).iter().map(|x| x.ln()).collect();
                xis.iter()
                    .map(|&xi| {
                        let mh = u.iter().map(|&v| Complex64::from_polar(1.0, xi * v)).sum::<Complex64>() / n as f64;
                        let delta = truncated_reciprocal(mh, inverse_threshold(n)) - 1.0 / m_at(xi);
                        delta.norm_sqr()
                    })
                    .collect()
            })
            .collect();
        for (b, &xi) in xis.iter().enumerate() {
            let m = m_at(xi).norm();
            let mean_sq = sums.iter().map(|s| s[b]).sum::<f64>() / reps as f64;
            let bound = (m.powi(-2)).min(m.powi(-4) / n as f64);
            cells.push(TruncationCell {
                xi,
                n,
                abs_m: m,
                mean_sq,
                bound,
                ratio: mean_sq / bound,
            });
        }
    }
    let constant = cells.iter().map(|c| c.ratio).fold(0.0, f64::max);
    Ok(TruncationStudy { cells, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{BandLimited, empirical_d_star, empirical_m_star, g_hat_star, EstimatorConfig};
    use crate::spectrum::SpectrumGrid;

    fn density(kernel: DivisionKernel) -> StationaryDensity {
        solve_stationary(&Model::new(kernel, 0.7, 1.0).unwrap(), &SolverOptions::default()).unwrap()
    }

    fn small(kernel: DivisionKernel) -> CampaignConfig {
        CampaignConfig {
            n: 2000,
            runs: 3,
            v: 3,
            ..CampaignConfig::reference(kernel)
        }
    }

    #[test]
    fn campaign_is_deterministic_and_consistent() {
        let d = density(DivisionKernel::beta22());
        let cfg = small(DivisionKernel::beta22());
        let mut a = run_campaign(&cfg, Some(&d)).unwrap();
        let mut b = run_campaign(&cfg, Some(&d)).unwrap();
        a.timings = None;
        b.timings = None;
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 3);
        assert!(!a.partial);
        for s in &a.summary {
            let e: Vec<f64> = a.runs.iter().flat_map(|r| r.results.iter().filter(|x| x.rule == s.rule).map(|x| x.error)).collect();
            let m = e.iter().sum::<f64>() / e.len() as f64;
            assert!((m - s.mean_error).abs() < 1e-12);
        }
        let o = a.summary_for(Rule::Oracle).unwrap().mean_error;
        assert!(o <= a.summary_for(Rule::Crit1).unwrap().mean_error + 1e-15);
        let csv = a.runs_csv().unwrap();
        assert_eq!(csv.lines().count(), 1 + 3 * 3);
    }

    #[test]
    fn failed_runs_are_recorded() {
        let d = density(DivisionKernel::beta22());
        let cfg = CampaignConfig {
            source: SampleSource::Simulation { k: 2, t_end: -1.0 },
            runs: 2,
            ..small(DivisionKernel::beta22())
        };
        let r = run_campaign(&cfg, Some(&d)).unwrap();
        assert_eq!(r.runs.len(), 2);
        assert!(r.partial);
        assert_eq!(r.runs_completed, 0);
        assert!(r.runs.iter().all(|x| x.failure.is_some()));
        assert!(r.runs_csv().unwrap().contains("failed"));
    }

    #[test]
    fn perfect_estimate_has_zero_risks() {
        let k = DivisionKernel::beta22();
        let grid = XiGrid::new(50.0, 0.05).unwrap();
        let s = SpectrumGrid::from_fn(grid, |xi| k.g_star(xi));
        let bl = BandLimited::from_spectrum(&s).unwrap();
        let w = weighted_risks(|u| k.eval_g(u), &k, -12.0).unwrap();
        for r in [w.plain_l2, w.exp_weighted, w.m_weighted, w.x_weighted] {
            assert!(r < 1e-15, "{w:?}");
        }
        // cutting g* at 50 loses (1/π)∫_50^∞ |g*|² of squared norm
        let w = weighted_risks(|u| bl.eval(u), &k, -12.0).unwrap();
        let at = |c: f64| std::f64::consts::FRAC_PI_2 - (c).atan();
        let tail = 36.0 / 5.0 * (0.5 * at(25.0) - at(50.0 / 3.0) / 3.0) / std::f64::consts::PI;
        let whole = composite_gl(|u| (bl.eval(u) - k.eval_g(u)).powi(2), -30.0, 30.0);
        assert!((whole - tail).abs() < 0.01 * tail, "{whole} vs {tail}");
        assert!(w.plain_l2 * w.plain_l2 < whole);
        assert!(w.identity_gap() < 1e-6);
        assert!(w.inequality_holds());
    }

    #[test]
    fn risk_relations_on_an_estimate() {
        let k = DivisionKernel::truncated_normal(0.5, 0.25).unwrap();
        let d = density(k.clone());
        let grid = XiGrid::new(50.0, 0.05).unwrap();
        let sample = SizeSample::new(sample_from_n(&d, 5000, &mut seeded(3))).unwrap();
        let cfg = EstimatorConfig::new(0.7, 1.0, 0.3, grid, UGrid::default()).unwrap();
        let gs = g_hat_star(&cfg, &empirical_m_star(&sample, &grid), &empirical_d_star(&sample, &grid), Some(5000)).unwrap();
        let bl = BandLimited::from_spectrum(&gs).unwrap();
        let w = weighted_risks(|u| bl.eval(u), &k, -12.0).unwrap();
        assert!(w.identity_gap() < 1e-6, "{w:?}");
        assert!(w.inequality_holds(), "{w:?}");
        assert!(w.plain_l2 > 0.0);
    }

    #[test]
    fn truncation_study_shape() {
        let d = density(DivisionKernel::beta22());
        let s = truncation_bound_study(&d, &[1.0, 5.0], &[100, 400], 20, 1).unwrap();
        assert_eq!(s.cells.len(), 4);
        assert!(s.cells.iter().all(|c| c.ratio <= s.constant));
    }

    #[test]
    fn slope_of_a_line() {
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]) + 2.0).abs() < 1e-12);
    }
}
