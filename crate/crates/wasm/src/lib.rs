//! Browser bindings: stationary density, spectra, and a bandwidth slider
//! over one simulated sample.
//!
//! Everything heavy happens once in [`Demo::new`]; the slider only reruns
//! the cheap reconstruction.

use fragdeconv_core::estimator::{
    empirical_half, estimate, inverse_threshold, EstimatorConfig, SizeSample, UGrid,
};
use fragdeconv_core::rng::seeded;
use fragdeconv_core::stationary::{sample_from_n, solve_stationary, true_spectra, Model, SolverOptions, StationaryDensity};
use fragdeconv_core::{DivisionKernel, Error, XiGrid};
use wasm_bindgen::prelude::*;

const XI_STEP: f64 = 0.05;
const XI_HALF_WIDTH: f64 = 50.0;
const X_POINTS: usize = 200;

fn kernel_by_name(name: &str) -> Result<DivisionKernel, Error> {
    match name {
        "beta22" | "h1" => Ok(DivisionKernel::beta22()),
        "truncated_normal" | "h2" => DivisionKernel::truncated_normal(0.5, 0.25),
        other => Err(Error::InvalidParameter {
            module: "wasm",
            message: format!("unknown kernel {other:?}"),
        }),
    }
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    kernel: DivisionKernel,
    alpha: f64,
    rate: f64,
    density: StationaryDensity,
    sample: SizeSample,
}

#[wasm_bindgen]
impl Demo {
    /// Solves for `N`, then draws `n` sizes from it.
    #[wasm_bindgen(constructor)]
    pub fn new(kernel: &str, alpha: f64, rate: f64, n: usize, seed: u64) -> Result<Demo, JsError> {
        Demo::build(kernel, alpha, rate, n, seed).map_err(js)
    }

    pub fn kernel(&self) -> String {
        self.kernel.name().to_string()
    }

    pub fn sample_size(&self) -> usize {
        self.sample.len()
    }

    /// Nodes of the stationary grid.
    pub fn x(&self) -> Vec<f64> {
        self.density.grid.xs()
    }

    pub fn density(&self) -> Vec<f64> {
        self.density.values.clone()
    }

    /// Histogram of the sample as a density on `bins` equal cells of the grid.
    pub fn sample_histogram(&self, bins: usize) -> Vec<f64> {
        let bins = bins.max(1);
        let width = self.density.grid.x_max / bins as f64;
        let mut h = vec![0.0; bins];
        for &x in self.sample.values() {
            let b = ((x / width) as usize).min(bins - 1);
            h[b] += 1.0;
        }
        let scale = 1.0 / (self.sample.len() as f64 * width);
        h.iter().map(|c| c * scale).collect()
    }

    pub fn spectra(&self, half_width: f64) -> Result<Spectra, JsError> {
        self.spectra_impl(half_width).map_err(js)
    }

    pub fn estimate(&self, ell: f64) -> Result<Reconstruction, JsError> {
        self.estimate_impl(ell).map_err(js)
    }
}

impl Demo {
    pub fn build(kernel: &str, alpha: f64, rate: f64, n: usize, seed: u64) -> Result<Demo, Error> {
        let kernel = kernel_by_name(kernel)?;
        let model = Model::new(kernel.clone(), alpha, rate)?;
        let density = solve_stationary(&model, &SolverOptions::default())?;
        let mut rng = seeded(seed);
        let sample = SizeSample::new(sample_from_n(&density, n, &mut rng))?;
        Ok(Demo {
            kernel,
            alpha,
            rate,
            density,
            sample,
        })
    }

    pub fn spectra_impl(&self, half_width: f64) -> Result<Spectra, Error> {
        let grid = XiGrid::new(half_width, XI_STEP)?;
        let truth = true_spectra(&self.density, &grid);
        let half = empirical_half(self.sample.log_values(), XI_STEP, grid.half_len());
        let k = grid.half_len();
        let xi = (0..=k).map(|j| j as f64 * XI_STEP).collect();
        let m_true = (0..=k).map(|j| truth.m.at(j as isize).norm()).collect();
        let m_hat = half.m.iter().map(|z| z.norm()).collect();
        let g_star = (0..=k).map(|j| self.kernel.g_star(j as f64 * XI_STEP).norm()).collect();
        Ok(Spectra {
            xi,
            m_true,
            m_hat,
            g_star,
            threshold: inverse_threshold(self.sample.len()),
        })
    }

    pub fn estimate_impl(&self, ell: f64) -> Result<Reconstruction, Error> {
        let xi = XiGrid::new(XI_HALF_WIDTH, XI_STEP)?;
        let cfg = EstimatorConfig::new(self.alpha, self.rate, ell, xi, UGrid::default())?;
        let e = estimate(&self.sample, &cfg, X_POINTS)?;
        let h_true = e.x.iter().map(|&x| self.kernel.eval_h(x)).collect();
        Ok(Reconstruction {
            x: e.x,
            h: e.h,
            h_sym: e.h_sym,
            h_true,
            leakage: e.leakage,
        })
    }
}

/// Moduli on `0 ≤ ξ ≤ half_width`.
#[wasm_bindgen(getter_with_clone)]
pub struct Spectra {
    pub xi: Vec<f64>,
    pub m_true: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub g_star: Vec<f64>,
    /// Below this `|M̂*|` the reciprocal is cut to zero.
    pub threshold: f64,
}

#[wasm_bindgen(getter_with_clone)]
pub struct Reconstruction {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub h_sym: Vec<f64>,
    pub h_true: Vec<f64>,
    pub leakage: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_kernel_is_rejected() {
        assert!(Demo::build("gamma", 0.7, 1.0, 100, 1).is_err());
    }

    #[test]
    fn histogram_is_a_density() {
        let d = Demo::build("h1", 0.7, 1.0, 2000, 3).unwrap();
        let h = d.sample_histogram(40);
        let width = d.density.grid.x_max / 40.0;
        let mass: f64 = h.iter().sum::<f64>() * width;
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(d.x().len(), d.density().len());
    }

    #[test]
    fn spectra_start_at_one() {
        let d = Demo::build("h2", 0.7, 1.0, 5000, 4).unwrap();
        let s = d.spectra_impl(10.0).unwrap();
        assert_eq!(s.xi.len(), 201);
        assert!((s.m_true[0] - 1.0).abs() < 1e-6);
        assert!((s.m_hat[0] - 1.0).abs() < 1e-12);
        assert!((s.g_star[0] - 1.0).abs() < 1e-9);
        assert!(s.m_true[200] < s.m_true[0]);
    }

    #[test]
    fn slider_reconstruction_tracks_the_kernel() {
        let d = Demo::build("h1", 0.7, 1.0, 30_000, 5).unwrap();
        let r = d.estimate_impl(0.3).unwrap();
        let dx = r.x[1] - r.x[0];
        let err: f64 = r
            .x
            .iter()
            .zip(r.h_sym.iter().zip(&r.h_true))
            .filter(|(x, _)| (0.1..=0.9).contains(*x))
            .map(|(_, (a, b))| (a - b).abs())
            .sum::<f64>()
            * dx;
        assert!(err < 0.25, "interior L1 error {err}");
        assert!(d.estimate_impl(-1.0).is_err());
    }
}
