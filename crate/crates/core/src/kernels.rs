//! Division kernels: symmetric densities `h` on `[0, 1]` giving the fraction
//! of the mother's size inherited by one daughter.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, Open01};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_limited};

const MODULE: &str = "kernels";

/// How a kernel is described in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Beta22,
    TruncatedNormal { mu: f64, sigma: f64 },
    Tabulated { path: String },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Beta22
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedNormal {
    mu: f64,
    sigma: f64,
    /// `Φ((1-μ)/σ) - Φ(-μ/σ)`
    mass: f64,
}

/// Piecewise-linear density, renormalised to unit mass at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    x: Vec<f64>,
    h: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DivisionKernel {
    /// `h(x) = 6 x (1 - x)`.
    Beta22,
    TruncatedNormal(TruncatedNormal),
    Tabulated(Tabulated),
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl DivisionKernel {
    pub fn beta22() -> Self {
        DivisionKernel::Beta22
    }

    /// Normal(μ, σ²) truncated to `[0, 1]`. Only `μ = 1/2` gives a symmetric
    /// kernel, so anything else is rejected.
    pub fn truncated_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(MODULE, format!("sigma must be positive, got {sigma}")));
        }
        if (mu - 0.5).abs() > 1e-12 {
            return Err(Error::invalid(
                MODULE,
                format!("truncated normal must be centred at 0.5 to be symmetric, got mu = {mu}"),
            ));
        }
        let mass = std_normal_cdf((1.0 - mu) / sigma) - std_normal_cdf(-mu / sigma);
        Ok(DivisionKernel::TruncatedNormal(TruncatedNormal { mu, sigma, mass }))
    }

    /// Build a kernel from tabulated `(x, h)` pairs. Values are linearly
    /// interpolated, zero outside the table and renormalised to unit mass.
    pub fn tabulated(x: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if x.len() != h.len() || x.len() < 2 {
            return Err(Error::invalid(MODULE, "tabulated kernel needs at least two (x, h) pairs"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(MODULE, "tabulated x values must be strictly increasing"));
        }
        if x[0] < 0.0 || x[x.len() - 1] > 1.0 {
            return Err(Error::invalid(MODULE, "tabulated x values must lie in [0, 1]"));
        }
        if h.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(MODULE, "tabulated h values must be finite and nonnegative"));
        }
        let mut cdf = vec![0.0; x.len()];
        for i in 1..x.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (x[i] - x[i - 1]) * (h[i] + h[i - 1]);
        }
        let total = cdf[cdf.len() - 1];
        if !(total > 0.0) {
            return Err(Error::invalid(MODULE, "tabulated kernel has zero mass"));
        }
        let h: Vec<f64> = h.iter().map(|v| v / total).collect();
        cdf.iter_mut().for_each(|c| *c /= total);
        let table = Tabulated { x, h, cdf };
        let kernel = DivisionKernel::Tabulated(table);
        let mut worst = 0.0f64;
        if let DivisionKernel::Tabulated(t) = &kernel {
            for &xi in t.x.iter() {
                worst = worst.max((kernel.eval_h(xi) - kernel.eval_h(1.0 - xi)).abs());
            }
        }
        if worst > 1e-10 {
            return Err(Error::invalid(
                MODULE,
                format!("tabulated kernel is not symmetric about 1/2 (max |h(x) - h(1-x)| = {worst:e})"),
            ));
        }
        Ok(kernel)
    }

    /// Read a two-column `x,h` CSV with a header row.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let cols = crate::io::read_csv_columns(path, &["x", "h"])?;
        let mut it = cols.into_iter();
        let x = it.next().unwrap_or_default();
        let h = it.next().unwrap_or_default();
        Self::tabulated(x, h)
    }

    /// Resolve a config spec; tabulated paths are relative to `base_dir`.
    pub fn from_spec(spec: &KernelSpec, base_dir: &Path) -> Result<Self> {
        match spec {
            KernelSpec::Beta22 => Ok(Self::beta22()),
            KernelSpec::TruncatedNormal { mu, sigma } => Self::truncated_normal(*mu, *sigma),
            KernelSpec::Tabulated { path } => Self::from_csv(&base_dir.join(path)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DivisionKernel::Beta22 => "beta22",
            DivisionKernel::TruncatedNormal(_) => "truncated_normal",
            DivisionKernel::Tabulated(_) => "tabulated",
        }
    }

    /// Density `h(x)`; zero outside `[0, 1]`.
    pub fn eval_h(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self {
            DivisionKernel::Beta22 => 6.0 * x * (1.0 - x),
            DivisionKernel::TruncatedNormal(tn) => {
                std_normal_pdf((x - tn.mu) / tn.sigma) / (tn.sigma * tn.mass)
            }
            DivisionKernel::Tabulated(t) => {
                let i = t.x.partition_point(|v| *v <= x);
                if i == 0 {
                    if x == t.x[0] { t.h[0] } else { 0.0 }
                } else if i == t.x.len() {
                    if x == t.x[i - 1] { t.h[i - 1] } else { 0.0 }
                } else {
                    let w = (x - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
                    t.h[i - 1] * (1.0 - w) + t.h[i] * w
                }
            }
        }
    }

    /// Log-scale density `g(u) = e^u h(e^u)`, supported on `u ≤ 0`.
    pub fn eval_g(&self, u: f64) -> f64 {
        if u > 0.0 {
            return 0.0;
        }
        let x = u.exp();
        x * self.eval_h(x)
    }

    /// Cumulative distribution function of `h`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match self {
            DivisionKernel::Beta22 => x * x * (3.0 - 2.0 * x),
            DivisionKernel::TruncatedNormal(tn) => {
                (std_normal_cdf((x - tn.mu) / tn.sigma) - std_normal_cdf(-tn.mu / tn.sigma)) / tn.mass
            }
            DivisionKernel::Tabulated(t) => {
                let i = t.x.partition_point(|v| *v <= x);
                if i == 0 {
                    0.0
                } else if i == t.x.len() {
                    1.0
                } else {
                    let x0 = t.x[i - 1];
                    let h0 = t.h[i - 1];
                    let slope = (t.h[i] - h0) / (t.x[i] - x0);
                    let d = x - x0;
                    t.cdf[i - 1] + h0 * d + 0.5 * slope * d * d
                }
            }
        }
    }

    /// Draw a division fraction γ ~ h, strictly inside `(0, 1)`.
    pub fn sample_gamma<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DivisionKernel::Beta22 => {
                let beta = Beta::new(2.0, 2.0).expect("valid beta parameters");
                loop {
                    let g: f64 = beta.sample(rng);
                    if g > 0.0 && g < 1.0 {
                        return g;
                    }
                }
            }
            DivisionKernel::TruncatedNormal(tn) => {
                let normal = Normal::new(tn.mu, tn.sigma).expect("sigma checked at construction");
                loop {
                    let g: f64 = normal.sample(rng);
                    if g > 0.0 && g < 1.0 {
                        return g;
                    }
                }
            }
            DivisionKernel::Tabulated(t) => loop {
                let u: f64 = Open01.sample(rng);
                let g = t.inverse_cdf(u);
                if g > 0.0 && g < 1.0 {
                    return g;
                }
            },
        }
    }

    /// `∫₀¹ x^k h(x) dx` by adaptive quadrature.
    pub fn moment(&self, k: u32) -> f64 {
        let f = |x: f64| x.powi(k as i32) * self.eval_h(x);
        match self {
            DivisionKernel::Tabulated(t) => {
                // integrate cell by cell so the kinks sit on panel boundaries
                t.x.windows(2)
                    .map(|w| integrate(f, w[0], w[1], 1e-12).value)
                    .sum()
            }
            _ => integrate(f, 0.0, 1.0, 1e-10).value,
        }
    }

    /// `g*(ξ) = ∫ e^{iξu} g(u) du`, by adaptive quadrature in `u`.
    pub fn g_star(&self, xi: f64) -> Complex64 {
        const U_LOW: f64 = -40.0;
        let re = integrate_limited(|u| self.eval_g(u) * (xi * u).cos(), U_LOW, 0.0, 1e-12, 20_000);
        let im = integrate_limited(|u| self.eval_g(u) * (xi * u).sin(), U_LOW, 0.0, 1e-12, 20_000);
        Complex64::new(re.value, im.value)
    }

    /// Which parts of the smoothness/boundary assumption used by the
    /// consistency theory fail for this kernel. Purely informational.
    pub fn assumption_diagnostics(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let eps = 1e-4;
        let h0 = self.eval_h(0.0);
        let d1 = (self.eval_h(2.0 * eps) - self.eval_h(0.0)) / (2.0 * eps);
        let d2 = (self.eval_h(2.0 * eps) - 2.0 * self.eval_h(eps) + h0) / (eps * eps);
        if h0.abs() > 1e-8 {
            notes.push(format!("h(0) = {h0:.4} is nonzero"));
        }
        if d1.abs() > 1e-3 {
            notes.push(format!("h'(0) ≈ {d1:.4} is nonzero"));
        }
        if d2.abs() > 1e-1 {
            notes.push(format!("h''(0) ≈ {d2:.4} is nonzero"));
        }
        if matches!(self, DivisionKernel::Tabulated(_)) {
            notes.push("piecewise-linear kernel is not C^3".to_string());
        }
        notes
    }
}

impl Tabulated {
    fn inverse_cdf(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c < u).clamp(1, self.cdf.len() - 1);
        let x0 = self.x[i - 1];
        let h0 = self.h[i - 1];
        let dx = self.x[i] - x0;
        let slope = (self.h[i] - h0) / dx;
        let target = u - self.cdf[i - 1];
        let d = if slope.abs() < 1e-14 {
            if h0 > 0.0 { target / h0 } else { 0.5 * dx }
        } else {
            // h0 d + slope d²/2 = target, stable root
            let disc = (h0 * h0 + 2.0 * slope * target).max(0.0);
            2.0 * target / (h0 + disc.sqrt())
        };
        x0 + d.clamp(0.0, dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h2() -> DivisionKernel {
        DivisionKernel::truncated_normal(0.5, 0.25).unwrap()
    }

    #[test]
    fn beta22_values() {
        let k = DivisionKernel::beta22();
        assert_eq!(k.eval_h(0.5), 1.5);
        assert_eq!(k.eval_h(0.0), 0.0);
        assert_eq!(k.eval_h(1.0), 0.0);
        assert_eq!(k.eval_h(-0.2), 0.0);
        assert_eq!(k.eval_h(1.3), 0.0);
        assert_eq!(k.eval_g(0.0), 0.0);
        assert!((k.eval_g(0.5f64.ln()) - 0.75).abs() < 1e-15);
        assert!(k.eval_g(-50.0).abs() < 1e-20);
        assert_eq!(k.eval_g(0.3), 0.0);
    }

    #[test]
    fn truncated_normal_peak_matches_histogram() {
        let k = h2();
        // direct formula with the normalising constant from quadrature
        let mass = integrate(
            |x| (-0.5 * ((x - 0.5) / 0.25f64).powi(2)).exp() / (0.25 * (2.0 * std::f64::consts::PI).sqrt()),
            0.0,
            1.0,
            1e-13,
        )
        .value;
        let expected = std_normal_pdf(0.0) / 0.25 / mass;
        assert!((k.eval_h(0.5) - expected).abs() < 1e-9);
        // ~1.6706: histogram of rejection draws agrees
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let width = 0.02;
        let hits = (0..n)
            .filter(|_| (k.sample_gamma(&mut rng) - 0.5).abs() < width / 2.0)
            .count();
        let hist = hits as f64 / n as f64 / width;
        let bin_mean = integrate(|x| k.eval_h(x), 0.49, 0.51, 1e-12).value / width;
        let se = (bin_mean * width * (1.0 - bin_mean * width) / n as f64).sqrt() / width;
        assert!((hist - bin_mean).abs() < 4.0 * se, "hist {hist} vs {bin_mean}");
        assert!((bin_mean - k.eval_h(0.5)).abs() < 2e-3);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DivisionKernel::truncated_normal(0.5, 0.0).is_err());
        assert!(DivisionKernel::truncated_normal(0.5, -1.0).is_err());
        assert!(DivisionKernel::truncated_normal(0.3, 0.25).is_err());
        assert!(DivisionKernel::tabulated(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.5]).is_err());
        assert!(DivisionKernel::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn normalisation_and_moments() {
        for k in [DivisionKernel::beta22(), h2()] {
            assert!((k.moment(0) - 1.0).abs() < 1e-8);
            assert!((k.moment(1) - 0.5).abs() < 1e-8);
        }
        assert!((DivisionKernel::beta22().moment(2) - 0.3).abs() < 1e-10);
    }

    #[test]
    fn beta22_sample_moments() {
        let k = DivisionKernel::beta22();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| k.sample_gamma(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.5).abs() < 3.0 * (var.sqrt() / 1000.0));
        assert!((var - 0.05).abs() < 0.002);
    }

    #[test]
    fn truncated_normal_draws_in_open_unit_interval() {
        let k = DivisionKernel::truncated_normal(0.5, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!((0..100_000).all(|_| {
            let g = k.sample_gamma(&mut rng);
            g > 0.0 && g < 1.0
        }));
    }

    #[test]
    fn samples_match_cdf_in_ks_distance() {
        let table_x: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let table_h: Vec<f64> = table_x.iter().map(|x| (x * (1.0 - x)).sqrt()).collect();
        let tab = DivisionKernel::tabulated(table_x, table_h).unwrap();
        for k in [DivisionKernel::beta22(), h2(), tab] {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let mut xs: Vec<f64> = (0..100_000).map(|_| k.sample_gamma(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let c = k.cdf(*x);
                    (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "{}: ks = {ks}", k.name());
        }
    }

    #[test]
    fn tabulated_kernel_is_renormalised_and_symmetric() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let h: Vec<f64> = x.iter().map(|x| 2.0 * x * (1.0 - x)).collect();
        let k = DivisionKernel::tabulated(x, h).unwrap();
        assert!((k.moment(0) - 1.0).abs() < 1e-10);
        assert!((k.moment(1) - 0.5).abs() < 1e-10);
        assert!((k.cdf(0.5) - 0.5).abs() < 1e-12);
        assert!(!k.assumption_diagnostics().is_empty());
    }

    #[test]
    fn g_star_matches_closed_form_for_beta22() {
        let k = DivisionKernel::beta22();
        for xi in [0.0, 0.7, 3.0, 12.5, 20.0] {
            let i = Complex64::new(0.0, xi);
            let exact = 6.0 / ((2.0 + i) * (3.0 + i));
            assert!((k.g_star(xi) - exact).norm() < 1e-10, "xi = {xi}");
        }
    }

    #[test]
    fn builtins_flag_the_boundary_assumption() {
        assert!(!DivisionKernel::beta22().assumption_diagnostics().is_empty());
        assert!(!h2().assumption_diagnostics().is_empty());
    }

    #[test]
    fn spec_parses_from_toml() {
        #[derive(Deserialize)]
        struct W {
            kernel: KernelSpec,
        }
        let w: W = toml::from_str(r#"kernel = { kind = "truncated_normal", mu = 0.5, sigma = 0.25 }"#).unwrap();
        assert_eq!(w.kernel, KernelSpec::TruncatedNormal { mu: 0.5, sigma: 0.25 });
        let w: W = toml::from_str(r#"kernel = { kind = "beta22" }"#).unwrap();
        assert_eq!(w.kernel, KernelSpec::Beta22);
        let w: W = toml::from_str(r#"kernel = { kind = "tabulated", path = "h.csv" }"#).unwrap();
        assert_eq!(w.kernel, KernelSpec::Tabulated { path: "h.csv".into() });
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kernels_are_symmetric(x in -0.5f64..1.5) {
                for k in [DivisionKernel::beta22(), h2()] {
                    prop_assert!((k.eval_h(x) - k.eval_h(1.0 - x)).abs() <= 1e-10);
                    prop_assert!(k.eval_h(x) >= 0.0);
                }
            }
        }

        #[test]
        fn g_has_unit_mass() {
            for k in [DivisionKernel::beta22(), h2()] {
                let m = integrate(|u| k.eval_g(u), -40.0, 0.0, 1e-12).value;
                assert!((m - 1.0).abs() < 1e-8, "{}", k.name());
            }
        }
    }
}
