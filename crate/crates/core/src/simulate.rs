//! Exact event-driven simulation of the branching population: every cell
//! grows at speed `α`, divides at rate `R` into `γx` and `(1-γ)x` with
//! `γ ~ h`. The point measure puts mass `1/K` on every living cell.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SizeSample;
use crate::kernels::DivisionKernel;
use crate::rng::{RngCheckpoint, SimRng};

const MODULE: &str = "simulate";

pub const DEFAULT_MAX_CELLS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub alpha: f64,
    pub rate: f64,
    pub kernel: DivisionKernel,
    pub track_labels: bool,
    pub track_divisions: bool,
    pub max_cells: usize,
}

impl SimConfig {
    pub fn new(kernel: DivisionKernel, alpha: f64, rate: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(MODULE, format!("alpha must be positive, got {alpha}")));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid(MODULE, format!("rate_R must be positive, got {rate}")));
        }
        Ok(SimConfig {
            alpha,
            rate,
            kernel,
            track_labels: false,
            track_divisions: false,
            max_cells: DEFAULT_MAX_CELLS,
        })
    }

    pub fn with_tracking(mut self, labels: bool, divisions: bool) -> Self {
        self.track_labels = labels;
        self.track_divisions = divisions;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisionRecord {
    pub time: f64,
    pub mother_size: f64,
    pub gamma: f64,
    /// `(γx, x - γx)`
    pub daughters: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSnapshot {
    pub time: f64,
    pub scaling_k: usize,
    pub sizes: Vec<f64>,
    /// Ulam–Harris labels `"<root>:<0|1>*"`, when tracked.
    pub labels: Option<Vec<String>>,
    pub divisions: Option<Vec<DivisionRecord>>,
    pub seed_state: Option<RngCheckpoint>,
}

/// Initial cell sizes.
pub enum InitialSizes<'a> {
    Explicit(Vec<f64>),
    Sampled {
        count: usize,
        draw: &'a dyn Fn(&mut SimRng) -> f64,
    },
}

pub fn init_population(k: usize, initial: InitialSizes<'_>, rng: &mut SimRng) -> Result<PopulationSnapshot> {
    if k == 0 {
        return Err(Error::invalid(MODULE, "scaling K must be at least 1"));
    }
    let sizes = match initial {
        InitialSizes::Explicit(v) => v,
        InitialSizes::Sampled { count, draw } => (0..count).map(|_| draw(rng)).collect(),
    };
    if sizes.is_empty() {
        return Err(Error::invalid(MODULE, "need at least one initial cell"));
    }
    if let Some(bad) = sizes.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::invalid(MODULE, format!("cell sizes must be positive and finite, got {bad}")));
    }
    Ok(PopulationSnapshot {
        time: 0.0,
        scaling_k: k,
        sizes,
        labels: None,
        divisions: None,
        seed_state: Some(RngCheckpoint::capture(rng)),
    })
}

impl PopulationSnapshot {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// `⟨Z, f⟩ = (1/K) Σ f(x_i)`.
    pub fn measure(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.sizes.iter().map(|&x| f(x)).sum::<f64>() / self.scaling_k as f64
    }

    /// `n` sizes drawn uniformly with replacement.
    pub fn sample_sizes(&self, n: usize, rng: &mut SimRng) -> Result<SizeSample> {
        if n == 0 {
            return Err(Error::invalid(MODULE, "sample size n must be at least 1"));
        }
        if self.sizes.is_empty() {
            return Err(Error::state(MODULE, "cannot sample from an empty population"));
        }
        let m = self.sizes.len();
        SizeSample::new((0..n).map(|_| self.sizes[rng.random_range(0..m)]).collect())
    }

    pub fn division_log(&self) -> Result<&[DivisionRecord]> {
        self.divisions
            .as_deref()
            .ok_or_else(|| Error::state(MODULE, "division tracking was not enabled for this run"))
    }
}

/// Run the population forward to `t_end`.
///
/// Sizes are kept as offsets `v_i = x_i - α (t - t0)` so that growth between
/// events costs nothing.
pub fn advance(
    snapshot: &PopulationSnapshot,
    config: &SimConfig,
    t_end: f64,
    rng: &mut SimRng,
) -> Result<PopulationSnapshot> {
    if !(t_end >= snapshot.time) {
        return Err(Error::invalid(
            MODULE,
            format!("t_end = {t_end} precedes the snapshot time {}", snapshot.time),
        ));
    }
    let t0 = snapshot.time;
    let alpha = config.alpha;
    let mut offsets = snapshot.sizes.clone();
    let mut labels = if config.track_labels {
        Some(match &snapshot.labels {
            Some(l) => l.clone(),
            None => (0..offsets.len()).map(|i| format!("{i}:")).collect(),
        })
    } else {
        None
    };
    let mut log = if config.track_divisions {
        Some(snapshot.divisions.clone().unwrap_or_default())
    } else {
        None
    };
    let mut t = t0;
    if !offsets.is_empty() {
        loop {
            let m = offsets.len();
            let e: f64 = Exp1.sample(rng);
            let tau = e / (config.rate * m as f64);
            if t + tau > t_end {
                break;
            }
            t += tau;
            if m + 1 > config.max_cells {
                return Err(Error::PopulationOverflow {
                    cells: m + 1,
                    cap: config.max_cells,
                });
            }
            let s = t - t0;
            let i = rng.random_range(0..m);
            let gamma = config.kernel.sample_gamma(rng);
            let x = offsets[i] + alpha * s;
            let d0 = gamma * x;
            let d1 = x - d0;
            offsets[i] = d0 - alpha * s;
            offsets.push(d1 - alpha * s);
            if let Some(l) = labels.as_mut() {
                let mother = std::mem::take(&mut l[i]);
                l[i] = format!("{mother}0");
                l.push(format!("{mother}1"));
            }
            if let Some(log) = log.as_mut() {
                log.push(DivisionRecord {
                    time: t,
                    mother_size: x,
                    gamma,
                    daughters: (d0, d1),
                });
            }
        }
    }
    let grow = alpha * (t_end - t0);
    let sizes = offsets.iter().map(|v| v + grow).collect();
    Ok(PopulationSnapshot {
        time: t_end,
        scaling_k: snapshot.scaling_k,
        sizes,
        labels,
        divisions: log,
        seed_state: Some(RngCheckpoint::capture(rng)),
    })
}

/// Probability mass of the normalised sizes in `bins` equal bins on
/// `[0, x_max]`; cells beyond `x_max` fall in the last bin.
pub fn size_histogram(sizes: &[f64], x_max: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let w = x_max / bins as f64;
    for &x in sizes {
        let b = ((x / w) as usize).min(bins - 1);
        h[b] += 1.0;
    }
    let total = sizes.len().max(1) as f64;
    h.iter_mut().for_each(|v| *v /= total);
    h
}
