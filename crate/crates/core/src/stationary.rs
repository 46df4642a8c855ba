//! Stationary size density `N` of the growth-fragmentation equation
//!
//! ```text
//! α N'(x) + 2R N(x) = 2R ∫₀¹ N(x/γ) h(γ) dγ/γ,   N(0) = 0,   ∫N = 1,
//! ```
//!
//! the time-dependent equation `∂t n + α ∂x n + R n = 2R ∫ n(y) h(x/y) dy/y`,
//! the Mellin-type spectra of `N` and sampling from `N`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Open01;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DivisionKernel;
use crate::quadrature::{cumulative_trapezoid_uniform, gauss_legendre, trapezoid_uniform};
use crate::spectrum::{SpectrumGrid, XiGrid};

const MODULE: &str = "stationary";

/// Model constants: growth speed `α`, division rate `R` and kernel `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kernel: DivisionKernel,
    pub alpha: f64,
    pub rate: f64,
}

impl Model {
    pub fn new(kernel: DivisionKernel, alpha: f64, rate: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(MODULE, format!("alpha must be positive, got {alpha}")));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid(MODULE, format!("rate_R must be positive, got {rate}")));
        }
        Ok(Model { kernel, alpha, rate })
    }

    /// Exact stationary mean size `α/R`.
    pub fn mean_size(&self) -> f64 {
        self.alpha / self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    FixedPoint,
    TimeMarch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Right end of the size grid; `None` means `12 α / R`.
    pub x_max: Option<f64>,
    /// Number of grid intervals `J`.
    pub intervals: usize,
    pub gamma_nodes: usize,
    pub method: SolverMethod,
    pub max_iter: usize,
    /// Sup-norm stopping tolerance of the fixed-point sweeps.
    pub fixed_point_tol: f64,
    /// L1 increment per unit time that stops the time march.
    pub march_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            x_max: None,
            intervals: 4096,
            gamma_nodes: 256,
            method: SolverMethod::FixedPoint,
            max_iter: 100_000,
            fixed_point_tol: 1e-9,
            march_tol: 1e-8,
        }
    }
}

/// Uniform grid `x_j = j Δx`, `j = 0..=J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid {
    pub x_max: f64,
    pub intervals: usize,
}

impl XGrid {
    pub fn new(x_max: f64, intervals: usize) -> Result<Self> {
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::invalid(MODULE, format!("x_max must be positive, got {x_max}")));
        }
        if intervals < 8 {
            return Err(Error::invalid(MODULE, format!("need at least 8 grid intervals, got {intervals}")));
        }
        Ok(XGrid { x_max, intervals })
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.intervals as f64
    }

    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.x(j)).collect()
    }
}

/// Discretisation of `F(N)(x_j) = ∫₀¹ N(x_j/γ) h(γ) dγ/γ` on an [`XGrid`]:
/// Gauss–Legendre in `γ` and linear interpolation of `N`. Since
/// `x_j/(γ Δx) = j/γ`, the weights only depend on `J`.
#[derive(Debug, Clone)]
pub struct FragmentationOperator {
    offsets: Vec<usize>,
    index: Vec<u32>,
    weights: Vec<[f64; 2]>,
    /// `F(0+) = h(0) ∫ N(y)/y dy`, as weights on the nodes of `N`.
    row0: Vec<f64>,
}

impl FragmentationOperator {
    pub fn new(kernel: &DivisionKernel, intervals: usize, gamma_nodes: usize) -> Self {
        let (gamma, w) = gauss_legendre(gamma_nodes, 0.0, 1.0);
        let coef: Vec<f64> = gamma
            .iter()
            .zip(&w)
            .map(|(g, wq)| wq * kernel.eval_h(*g) / g)
            .collect();
        let last = intervals as f64;
        let mut offsets = Vec::with_capacity(intervals + 2);
        let mut index = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        offsets.push(0);
        for j in 1..=intervals {
            for (g, c) in gamma.iter().zip(&coef) {
                let s = j as f64 / g;
                if s >= last {
                    continue;
                }
                let i = s.floor();
                let t = s - i;
                index.push(i as u32);
                weights.push([c * (1.0 - t), c * t]);
            }
            offsets.push(index.len());
        }
        let h0 = kernel.eval_h(0.0);
        let mut row0 = vec![0.0; intervals + 1];
        if h0 > 0.0 {
            row0[1] += h0;
            for j in 1..intervals {
                let l = ((j + 1) as f64 / j as f64).ln();
                row0[j] += h0 * ((j + 1) as f64 * l - 1.0);
                row0[j + 1] += h0 * (1.0 - j as f64 * l);
            }
        }
        FragmentationOperator {
            offsets,
            index,
            weights,
            row0,
        }
    }

    pub fn intervals(&self) -> usize {
        self.offsets.len() - 2
    }

    fn row(&self, j: usize, n: &[f64]) -> f64 {
        let (a, b) = (self.offsets[j], self.offsets[j + 1]);
        self.index[a..b]
            .iter()
            .zip(&self.weights[a..b])
            .map(|(&i, w)| w[0] * n[i as usize] + w[1] * n[i as usize + 1])
            .sum()
    }

    pub fn apply(&self, n: &[f64], out: &mut [f64]) {
        assert_eq!(n.len(), self.intervals() + 1);
        assert_eq!(out.len(), n.len());
        out.par_iter_mut()
            .with_min_len(256)
            .enumerate()
            .for_each(|(j, o)| *o = self.row(j, n));
        out[0] = self.row0.iter().zip(n).map(|(w, v)| w * v).sum();
    }
}

/// Grid representation of the stationary density.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDensity {
    pub grid: XGrid,
    pub values: Vec<f64>,
    pub cdf: Vec<f64>,
    pub alpha: f64,
    pub rate: f64,
    pub method: SolverMethod,
    pub iterations: usize,
    pub residual: f64,
}

impl StationaryDensity {
    fn from_values(grid: XGrid, values: Vec<f64>, model: &Model, method: SolverMethod, iterations: usize, residual: f64) -> Self {
        let cdf = cumulative_trapezoid_uniform(&values, grid.dx());
        StationaryDensity {
            grid,
            values,
            cdf,
            alpha: model.alpha,
            rate: model.rate,
            method,
            iterations,
            residual,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        self.grid.xs()
    }

    pub fn mass(&self) -> f64 {
        trapezoid_uniform(&self.values, self.grid.dx())
    }

    pub fn mean(&self) -> f64 {
        let xn: Vec<f64> = self.values.iter().enumerate().map(|(j, v)| self.grid.x(j) * v).collect();
        trapezoid_uniform(&xn, self.grid.dx())
    }

    /// Linear interpolation; zero outside `[0, x_max]`.
    pub fn eval(&self, x: f64) -> f64 {
        crate::quadrature::interp_uniform(&self.values, 0.0, self.grid.dx(), x)
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        if x >= self.grid.x_max {
            return self.cdf[self.cdf.len() - 1];
        }
        crate::quadrature::interp_uniform(&self.cdf, 0.0, self.grid.dx(), x)
    }

    /// `∫|N - other|` on a common grid.
    pub fn l1_distance(&self, other: &StationaryDensity) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                module: MODULE,
                message: "densities live on different x grids".into(),
            });
        }
        Ok(l1_on_grid(&self.values, &other.values, self.grid.dx()))
    }

    /// `∫|N - other|`, with `other` (possibly coarser or finer) interpolated
    /// onto this grid.
    pub fn l1_distance_interp(&self, other: &StationaryDensity) -> f64 {
        let o: Vec<f64> = (0..self.grid.nodes()).map(|j| other.eval(self.grid.x(j))).collect();
        l1_on_grid(&self.values, &o, self.grid.dx())
    }

    /// `∫_{x_1}^{x_max} x^{-ν} N(x) dx` integrated exactly for the
    /// piecewise-linear `N`; the first cell is added when it is integrable.
    pub fn negative_moment(&self, nu: u32) -> f64 {
        let dx = self.grid.dx();
        let n = &self.values;
        let mut total = 0.0;
        for j in 0..self.grid.intervals {
            let (a, b) = (self.grid.x(j), self.grid.x(j + 1));
            let s = (n[j + 1] - n[j]) / dx;
            let c = n[j] - s * a;
            if j == 0 {
                if nu < 2 {
                    total += c * if nu == 0 { b - a } else { 0.0 } + s * power_integral(a, b, 1 - nu as i32);
                }
                continue;
            }
            total += c * power_integral(a, b, -(nu as i32)) + s * power_integral(a, b, 1 - nu as i32);
        }
        total
    }
}

/// `∫_a^b x^p dx` for integer `p`.
fn power_integral(a: f64, b: f64, p: i32) -> f64 {
    if p == -1 {
        (b / a).ln()
    } else {
        let q = p + 1;
        (b.powi(q) - a.powi(q)) / q as f64
    }
}

fn l1_on_grid(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    trapezoid_uniform(&diff, dx)
}

/// Model, grid and discretised fragmentation operator bundled together.
#[derive(Debug, Clone)]
pub struct Solver {
    pub model: Model,
    pub grid: XGrid,
    op: FragmentationOperator,
}

/// Output of [`Solver::evolve`].
#[derive(Debug, Clone)]
pub struct PdeEvolution {
    /// `n(t_end, ·)`, not renormalised.
    pub density: Vec<f64>,
    pub t_end: f64,
    /// Checkpoint times and `∫|e^{-Rt} n(t) - ρN|` (when a reference was given).
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// `∫ n(t, ·)` at the checkpoint times.
    pub masses: Vec<f64>,
}

impl Solver {
    pub fn new(model: Model, opts: &SolverOptions) -> Result<Self> {
        let x_max = opts.x_max.unwrap_or(12.0 * model.alpha / model.rate);
        let grid = XGrid::new(x_max, opts.intervals)?;
        if opts.gamma_nodes < 8 {
            return Err(Error::invalid(MODULE, "need at least 8 Gauss-Legendre nodes in gamma"));
        }
        let op = FragmentationOperator::new(&model.kernel, opts.intervals, opts.gamma_nodes);
        Ok(Solver { model, grid, op })
    }

    /// `x e^{-2Rx/α}` normalised; its mean is already `α/R`.
    pub fn initial_guess(&self) -> Vec<f64> {
        let k = 2.0 * self.model.rate / self.model.alpha;
        let mut v: Vec<f64> = (0..self.grid.nodes())
            .map(|j| {
                let x = self.grid.x(j);
                x * (-k * x).exp()
            })
            .collect();
        normalise(&mut v, self.grid.dx());
        v
    }

    pub fn solve(&self, opts: &SolverOptions) -> Result<StationaryDensity> {
        let sol = match opts.method {
            SolverMethod::FixedPoint => self.fixed_point(opts.max_iter, opts.fixed_point_tol)?,
            SolverMethod::TimeMarch => self.time_march(opts.max_iter, opts.march_tol)?,
        };
        let tail = sol.values[sol.values.len() - 1];
        if tail >= 1e-8 {
            return Err(Error::invalid(
                MODULE,
                format!("N(x_max) = {tail:e} is not negligible; enlarge x_max"),
            ));
        }
        Ok(sol)
    }

    /// Fixed-point sweeps of the variation-of-constants map
    /// `N(x) = (1/α) ∫₀ˣ e^{-2R(x-y)/α} 2R F(N)(y) dy`, integrated cell by
    /// cell with the exponential trapezoid rule and renormalised every sweep.
    pub fn fixed_point(&self, max_iter: usize, tol: f64) -> Result<StationaryDensity> {
        let dx = self.grid.dx();
        let (alpha, r) = (self.model.alpha, self.model.rate);
        let decay = (-2.0 * r / alpha * dx).exp();
        let half = dx / (2.0 * alpha);
        let mut n = self.initial_guess();
        let mut f = vec![0.0; n.len()];
        let mut next = vec![0.0; n.len()];
        let mut residual = f64::INFINITY;
        for it in 1..=max_iter {
            self.op.apply(&n, &mut f);
            next[0] = 0.0;
            for j in 1..n.len() {
                next[j] = decay * next[j - 1] + half * 2.0 * r * (decay * f[j - 1] + f[j]);
            }
            normalise(&mut next, dx);
            residual = n.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            std::mem::swap(&mut n, &mut next);
            if residual < tol {
                log::debug!("fixed point converged in {it} sweeps (residual {residual:e})");
                return Ok(StationaryDensity::from_values(self.grid, n, &self.model, SolverMethod::FixedPoint, it, residual));
            }
        }
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual,
        })
    }

    /// One Heun step along the characteristics of the rescaled density
    /// `m = e^{-Rt} n`, which solves `∂t m + α ∂x m = -2R m + 2R F(m)`.
    /// `cfl = α Δt / Δx`; at 1 the transport is an exact shift.
    fn step(&self, m: &[f64], cfl: f64, out: &mut [f64], scratch: &mut [Vec<f64>; 3]) {
        let dx = self.grid.dx();
        let dt = cfl * dx / self.model.alpha;
        let r2 = 2.0 * self.model.rate;
        let [f, lin, pred] = scratch;
        self.op.apply(m, f);
        for j in 0..m.len() {
            lin[j] = m[j] + dt * r2 * (f[j] - m[j]);
        }
        shift_into(lin, cfl, pred);
        self.op.apply(pred, f);
        let half_step: Vec<f64> = m.iter().zip(lin.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
        shift_into(&half_step, cfl, out);
        for j in 1..m.len() {
            out[j] += 0.5 * dt * r2 * (f[j] - pred[j]);
        }
        out[0] = 0.0;
    }

    /// Time march of the renormalised equation until the L1 increment per
    /// unit time drops below `tol`.
    pub fn time_march(&self, max_iter: usize, tol: f64) -> Result<StationaryDensity> {
        let dx = self.grid.dx();
        let dt = dx / self.model.alpha;
        let mut m = self.initial_guess();
        let mut next = vec![0.0; m.len()];
        let mut scratch = [vec![0.0; m.len()], vec![0.0; m.len()], vec![0.0; m.len()]];
        let mut rate = f64::INFINITY;
        for it in 1..=max_iter {
            self.step(&m, 1.0, &mut next, &mut scratch);
            normalise(&mut next, dx);
            rate = l1_on_grid(&m, &next, dx) / dt;
            std::mem::swap(&mut m, &mut next);
            if rate < tol {
                log::debug!("time march converged in {it} steps (increment {rate:e})");
                return Ok(StationaryDensity::from_values(self.grid, m, &self.model, SolverMethod::TimeMarch, it, rate));
            }
        }
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: rate,
        })
    }

    /// Evolve `n0` to `t_end` with steps of Courant number `cfl ≤ 1`,
    /// recording mass and (with a reference `N` on the same grid) the
    /// relaxation distance every `record_every` time units.
    pub fn evolve(
        &self,
        n0: &[f64],
        t_end: f64,
        cfl: f64,
        reference: Option<&StationaryDensity>,
        record_every: f64,
    ) -> Result<PdeEvolution> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::invalid(MODULE, format!("CFL number must lie in (0, 1], got {cfl}")));
        }
        if n0.len() != self.grid.nodes() {
            return Err(Error::GridMismatch {
                module: MODULE,
                message: format!("initial density has {} values, grid has {}", n0.len(), self.grid.nodes()),
            });
        }
        if n0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(MODULE, "initial density must be finite and nonnegative"));
        }
        if !(t_end >= 0.0) || !(record_every > 0.0) {
            return Err(Error::invalid(MODULE, "t_end must be >= 0 and record_every > 0"));
        }
        if let Some(rf) = reference {
            if rf.grid != self.grid {
                return Err(Error::GridMismatch {
                    module: MODULE,
                    message: "reference density lives on a different grid".into(),
                });
            }
        }
        let dx = self.grid.dx();
        let dt = cfl * dx / self.model.alpha;
        let rho = trapezoid_uniform(n0, dx);
        let r = self.model.rate;
        let mut m = n0.to_vec();
        m[0] = 0.0;
        let mut next = vec![0.0; m.len()];
        let mut scratch = [vec![0.0; m.len()], vec![0.0; m.len()], vec![0.0; m.len()]];
        let mut out = PdeEvolution {
            density: Vec::new(),
            t_end,
            times: Vec::new(),
            distances: Vec::new(),
            masses: Vec::new(),
        };
        let record = |t: f64, m: &[f64], out: &mut PdeEvolution| {
            out.times.push(t);
            out.masses.push(trapezoid_uniform(m, dx) * (r * t).exp());
            if let Some(rf) = reference {
                let target: Vec<f64> = rf.values.iter().map(|v| rho * v).collect();
                out.distances.push(l1_on_grid(m, &target, dx));
            }
        };
        record(0.0, &m, &mut out);
        let mut t = 0.0;
        let mut next_record = record_every;
        while t < t_end {
            let c = if t + dt <= t_end { cfl } else { (t_end - t) / dt * cfl };
            self.step(&m, c, &mut next, &mut scratch);
            std::mem::swap(&mut m, &mut next);
            t = if c == cfl { t + dt } else { t_end };
            if t + 1e-12 >= next_record {
                record(t, &m, &mut out);
                while next_record <= t + 1e-12 {
                    next_record += record_every;
                }
            }
        }
        if out.times.last() != Some(&t) {
            record(t, &m, &mut out);
        }
        let growth = (r * t).exp();
        out.density = m.iter().map(|v| v * growth).collect();
        Ok(out)
    }
}

/// `out_j = (1-c) v_j + c v_{j-1}`, the value at the foot `x_j - c Δx`;
/// nothing enters through `x = 0`.
fn shift_into(v: &[f64], c: f64, out: &mut [f64]) {
    out[0] = (1.0 - c) * v[0];
    for j in 1..v.len() {
        out[j] = (1.0 - c) * v[j] + c * v[j - 1];
    }
}

fn normalise(v: &mut [f64], dx: f64) {
    let mass = trapezoid_uniform(v, dx);
    v.iter_mut().for_each(|x| *x /= mass);
}

pub fn solve_stationary(model: &Model, opts: &SolverOptions) -> Result<StationaryDensity> {
    Solver::new(model.clone(), opts)?.solve(opts)
}

/// Evolve `n0` (values on the grid implied by `opts`) up to `t_end` at
/// Courant number 1.
pub fn evolve_pde(
    model: &Model,
    opts: &SolverOptions,
    n0: &[f64],
    t_end: f64,
    reference: Option<&StationaryDensity>,
) -> Result<PdeEvolution> {
    Solver::new(model.clone(), opts)?.evolve(n0, t_end, 1.0, reference, 0.05)
}

/// `n` i.i.d. sizes by inverting the piecewise-linear interpolant of the CDF.
pub fn sample_from_n<R: Rng + ?Sized>(density: &StationaryDensity, n: usize, rng: &mut R) -> Vec<f64> {
    let total = density.cdf[density.cdf.len() - 1];
    let dx = density.grid.dx();
    (0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            let target = u * total;
            let i = density.cdf.partition_point(|c| *c <= target).clamp(1, density.cdf.len() - 1);
            let (c0, c1) = (density.cdf[i - 1], density.cdf[i]);
            let w = ((target - c0) / (c1 - c0)).clamp(0.0, 1.0);
            let x = density.grid.x(i - 1) + w * dx;
            if x > 0.0 { x } else { f64::MIN_POSITIVE }
        })
        .collect()
}

/// `M*`, `D*` and `𝔇*` of a solved density.
#[derive(Debug, Clone)]
pub struct TrueSpectra {
    pub m: SpectrumGrid,
    pub d: SpectrumGrid,
    pub frak_d: SpectrumGrid,
}

/// Mellin-type transforms of the piecewise-linear interpolant of `N`,
/// integrated exactly:
///
/// ```text
/// M*(ξ) = ∫ N(x) x^{iξ} dx,   𝔇*(ξ) = ∫ N(x) x^{iξ-1} dx,   D* = -iξ 𝔇*.
/// ```
///
/// With slopes `s_j` of `N`, summation by parts gives for `a = 1 + iξ` or
/// `a = iξ`
/// `∫ N x^{a-1} = N_J X^a / a - Σ_j (s_{j-1} - s_j) x_j^{a+1} / (a(a+1))`.
pub fn true_spectra(density: &StationaryDensity, grid: &XiGrid) -> TrueSpectra {
    let dx = density.grid.dx();
    let n = &density.values;
    let jn = density.grid.intervals;
    let slopes: Vec<f64> = n.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
    // d_j for interior nodes, then the right end with coefficient s_{J-1}.
    let mut coef = Vec::with_capacity(jn);
    let mut xs = Vec::with_capacity(jn);
    for j in 1..jn {
        coef.push(slopes[j - 1] - slopes[j]);
        xs.push(density.grid.x(j));
    }
    coef.push(slopes[jn - 1]);
    xs.push(density.grid.x_max);
    let step = grid.step();
    let rot: Vec<Complex64> = xs.iter().map(|x| Complex64::from_polar(1.0, step * x.ln())).collect();
    let mut z: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); xs.len()];
    let x_end = density.grid.x_max;
    let n_end = n[jn];
    let frak_d0: f64 = density.negative_moment(1);

    let m_half_len = grid.half_len();
    let mut m_half = Vec::with_capacity(m_half_len + 1);
    let mut fd_half = Vec::with_capacity(m_half_len + 1);
    for k in 0..=m_half_len {
        if k > 0 && k % 64 == 0 {
            // Re-anchor the phase recurrence to keep rounding drift negligible.
            let xi = k as f64 * step;
            for (zi, x) in z.iter_mut().zip(&xs) {
                *zi = Complex64::from_polar(1.0, xi * x.ln());
            }
        }
        let xi = k as f64 * step;
        let mut s_m = Complex64::new(0.0, 0.0);
        let mut s_d = Complex64::new(0.0, 0.0);
        for ((c, x), zi) in coef.iter().zip(&xs).zip(&z) {
            let t = zi * (c * x);
            s_d += t;
            s_m += t * x;
        }
        let z_end = z[z.len() - 1];
        let a = Complex64::new(1.0, xi);
        let mstar = n_end * x_end * z_end / a - s_m / (a * (a + 1.0));
        m_half.push(mstar);
        if k == 0 {
            fd_half.push(Complex64::new(frak_d0, 0.0));
        } else {
            let a = Complex64::new(0.0, xi);
            fd_half.push(n_end * z_end / a - s_d / (a * (a + 1.0)));
        }
        for (zi, w) in z.iter_mut().zip(&rot) {
            *zi *= w;
        }
    }
    let d_half: Vec<Complex64> = fd_half
        .iter()
        .enumerate()
        .map(|(k, v)| Complex64::new(0.0, -(k as f64) * step) * v)
        .collect();
    TrueSpectra {
        m: SpectrumGrid::from_half(*grid, &m_half),
        d: SpectrumGrid::from_half(*grid, &d_half),
        frak_d: SpectrumGrid::from_half(*grid, &fd_half),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub xi_max: f64,
    pub min_abs_m: f64,
    pub argmin_xi: f64,
    /// Least-squares slope of `log|M*|` against `log ξ` for `ξ ≥ 1`.
    pub decay_exponent: f64,
    /// `(ν, ∫x^{-ν}N, same on the refined grid, relative change)`.
    pub negative_moments: Vec<(u32, f64, Option<f64>, Option<f64>)>,
    pub max_hermitian_asymmetry: f64,
}

/// Diagnostics on the spectra: no real zeros of `M*` on the grid, decay of
/// `|M*|`, and the negative moments `∫x^{-ν}N` (finite ones are stable when
/// `refined`, a solve on a finer x-grid, is supplied).
pub fn spectral_diagnostics(
    density: &StationaryDensity,
    spectra: &TrueSpectra,
    refined: Option<&StationaryDensity>,
) -> SpectralReport {
    let grid = spectra.m.grid();
    let (min_abs_m, argmin_xi) = spectra
        .m
        .half()
        .iter()
        .enumerate()
        .map(|(k, v)| (v.norm(), k as f64 * grid.step()))
        .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
    let pts: Vec<(f64, f64)> = spectra
        .m
        .half()
        .iter()
        .enumerate()
        .map(|(k, v)| (k as f64 * grid.step(), v.norm()))
        .filter(|(xi, v)| *xi >= 1.0 && *v > 0.0)
        .map(|(xi, v)| (xi.ln(), v.ln()))
        .collect();
    let decay_exponent = least_squares_slope(&pts);
    let negative_moments = (1..=4)
        .map(|nu| {
            let a = density.negative_moment(nu);
            let b = refined.map(|r| r.negative_moment(nu));
            let change = b.map(|b| ((b - a) / a).abs());
            (nu, a, b, change)
        })
        .collect();
    let max_hermitian_asymmetry = [&spectra.m, &spectra.d, &spectra.frak_d]
        .iter()
        .map(|s| s.hermitian_asymmetry().0)
        .fold(0.0, f64::max);
    SpectralReport {
        xi_max: grid.half_width(),
        min_abs_m,
        argmin_xi,
        decay_exponent,
        negative_moments,
        max_hermitian_asymmetry,
    }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
