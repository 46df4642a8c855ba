//! Estimation of `g` (and `h`) from sizes `X_1..X_n` by spectral division.
//!
//! With `U_j = log X_j`,
//!
//! ```text
//! M̂*(ξ) = (1/n) Σ e^{iξU_j},   𝔇̂*(ξ) = (1/n) Σ e^{(iξ-1)U_j},   D̂* = -iξ 𝔇̂*,
//! ĝ*_ℓ(ξ) = 1{|ξ| ≤ 1/ℓ} (α D̂*(ξ) / (2R M̂*(ξ)) + 1),
//! ```
//!
//! where `1/M̂*` is set to zero wherever `|M̂*| < n^{-1/2}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{SpectrumGrid, XiGrid};

const MODULE: &str = "estimator";

/// Hermitian asymmetry tolerated before inversion.
pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSample {
    values: Vec<f64>,
    log_values: Vec<f64>,
}

impl SizeSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(MODULE, "a sample needs at least one observation"));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(MODULE, format!("sizes must be positive and finite, got {bad}")));
        }
        let log_values = values.iter().map(|v| v.ln()).collect();
        Ok(SizeSample { values, log_values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn subset(&self, idx: &[usize]) -> SizeSample {
        SizeSample {
            values: idx.iter().map(|&i| self.values[i]).collect(),
            log_values: idx.iter().map(|&i| self.log_values[i]).collect(),
        }
    }
}

/// Uniform reconstruction grid in `u = log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UGrid {
    pub u_min: f64,
    pub u_max: f64,
    pub points: usize,
}

impl Default for UGrid {
    fn default() -> Self {
        UGrid {
            u_min: -12.0,
            u_max: 0.0,
            points: 2048,
        }
    }
}

impl UGrid {
    pub fn new(u_min: f64, u_max: f64, points: usize) -> Result<Self> {
        let g = UGrid { u_min, u_max, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_min < self.u_max) || self.points < 2 || !self.u_min.is_finite() || !self.u_max.is_finite() {
            return Err(Error::invalid(
                MODULE,
                format!("u grid needs u_min < u_max and at least 2 points, got {self:?}"),
            ));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.u_max - self.u_min) / (self.points - 1) as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.u_max
        } else {
            self.u_min + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.u(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub alpha: f64,
    pub rate: f64,
    pub ell: f64,
    pub xi: XiGrid,
    pub u_grid: UGrid,
}

impl EstimatorConfig {
    pub fn new(alpha: f64, rate: f64, ell: f64, xi: XiGrid, u_grid: UGrid) -> Result<Self> {
        if !(alpha > 0.0) || !(rate > 0.0) {
            return Err(Error::invalid(MODULE, format!("alpha and rate_R must be positive, got {alpha}, {rate}")));
        }
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::invalid(MODULE, format!("bandwidth must be positive, got {ell}")));
        }
        if 1.0 / ell > xi.half_width() + 1e-9 {
            return Err(Error::invalid(
                MODULE,
                format!("cutoff 1/ell = {} exceeds the xi grid half width {}", 1.0 / ell, xi.half_width()),
            ));
        }
        u_grid.validate()?;
        Ok(EstimatorConfig {
            alpha,
            rate,
            ell,
            xi,
            u_grid,
        })
    }
}

/// `M̂*` and `𝔇̂*` at `ξ = k δξ, k = 0..=kmax`, from log-sizes `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpectra {
    pub step: f64,
    pub m: Vec<Complex64>,
    pub frak_d: Vec<Complex64>,
}

/// Sums of `e^{iξU}` and `e^{(iξ-1)U}` by a phase recurrence over `k`,
/// re-anchored every 64 steps.
pub fn empirical_half(u: &[f64], step: f64, kmax: usize) -> HalfSpectra {
    let n = u.len() as f64;
    let inv_x: Vec<f64> = u.iter().map(|v| (-v).exp()).collect();
    let rot: Vec<Complex64> = u.iter().map(|v| Complex64::from_polar(1.0, step * v)).collect();
    let mut z = vec![Complex64::new(1.0, 0.0); u.len()];
    let mut m = Vec::with_capacity(kmax + 1);
    let mut frak_d = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        if k > 0 && k % 64 == 0 {
            let xi = k as f64 * step;
            for (zi, v) in z.iter_mut().zip(u) {
                *zi = Complex64::from_polar(1.0, xi * v);
            }
        }
        let (mut sm_re, mut sm_im, mut sd_re, mut sd_im) = (0.0, 0.0, 0.0, 0.0);
        for (zi, w) in z.iter().zip(&inv_x) {
            sm_re += zi.re;
            sm_im += zi.im;
            sd_re += zi.re * w;
            sd_im += zi.im * w;
        }
        if k == 0 {
            // exact: the phases are all 1
            sm_im = 0.0;
            sd_im = 0.0;
        }
        m.push(Complex64::new(sm_re / n, sm_im / n));
        frak_d.push(Complex64::new(sd_re / n, sd_im / n));
        for (zi, r) in z.iter_mut().zip(&rot) {
            *zi *= r;
        }
    }
    if let Some(first) = m.first_mut() {
        *first = Complex64::new(1.0, 0.0);
    }
    HalfSpectra { step, m, frak_d }
}

pub fn empirical_m_star(sample: &SizeSample, grid: &XiGrid) -> SpectrumGrid {
    let h = empirical_half(sample.log_values(), grid.step(), grid.half_len());
    SpectrumGrid::from_half(*grid, &h.m)
}

pub fn empirical_frak_d_star(sample: &SizeSample, grid: &XiGrid) -> SpectrumGrid {
    let h = empirical_half(sample.log_values(), grid.step(), grid.half_len());
    SpectrumGrid::from_half(*grid, &h.frak_d)
}

/// `D̂*(ξ) = -iξ 𝔇̂*(ξ)`.
pub fn d_from_frak_d(frak_d: &SpectrumGrid) -> SpectrumGrid {
    let grid = *frak_d.grid();
    let values = frak_d
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| Complex64::new(0.0, -grid.xi(i)) * v)
        .collect();
    SpectrumGrid::new(grid, values).expect("same grid")
}

pub fn empirical_d_star(sample: &SizeSample, grid: &XiGrid) -> SpectrumGrid {
    d_from_frak_d(&empirical_frak_d_star(sample, grid))
}

/// `1/z` if `|z| ≥ threshold`, else 0.
#[inline]
pub fn truncated_reciprocal(z: Complex64, threshold: f64) -> Complex64 {
    if z.norm() >= threshold {
        z.inv()
    } else {
        Complex64::new(0.0, 0.0)
    }
}

pub fn inverse_threshold(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

pub fn truncated_inverse(mhat: &SpectrumGrid, n: usize) -> SpectrumGrid {
    let t = inverse_threshold(n);
    let values = mhat.values().iter().map(|z| truncated_reciprocal(*z, t)).collect();
    SpectrumGrid::new(*mhat.grid(), values).expect("same grid")
}

/// `α D̂*(ξ) T(ξ) / (2R) + 1` on a half grid, `T` the truncated inverse with
/// the given threshold (0 means plain division).
pub fn unsmoothed_half(alpha: f64, rate: f64, h: &HalfSpectra, threshold: f64) -> Vec<Complex64> {
    let c = alpha / (2.0 * rate);
    h.m.iter()
        .zip(&h.frak_d)
        .enumerate()
        .map(|(k, (m, fd))| {
            let d = Complex64::new(0.0, -(k as f64) * h.step) * fd;
            c * d * truncated_reciprocal(*m, threshold) + 1.0
        })
        .collect()
}

/// `ĝ*_ℓ` from `M̂*` and `D̂*`. `n = None` divides without truncation
/// (used with exact spectra).
pub fn g_hat_star(
    cfg: &EstimatorConfig,
    mhat: &SpectrumGrid,
    dhat: &SpectrumGrid,
    n: Option<usize>,
) -> Result<SpectrumGrid> {
    if mhat.grid() != dhat.grid() || *mhat.grid() != cfg.xi {
        return Err(Error::GridMismatch {
            module: MODULE,
            message: "M*, D* and the configured xi grid differ".into(),
        });
    }
    let threshold = n.map_or(0.0, inverse_threshold);
    let c = cfg.alpha / (2.0 * cfg.rate);
    let values = mhat
        .values()
        .iter()
        .zip(dhat.values())
        .map(|(m, d)| c * d * truncated_reciprocal(*m, threshold) + 1.0)
        .collect();
    Ok(SpectrumGrid::new(cfg.xi, values)?.truncated(1.0 / cfg.ell))
}

/// A band-limited function given by its Hermitian spectrum on
/// `ξ = k δξ, k = 0..=K`, evaluated by the trapezoid rule on `[-K δξ, K δξ]`:
/// `f(u) = (1/2π) ∫ f*(ξ) e^{-iuξ} dξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimited {
    pub step: f64,
    pub half: Vec<Complex64>,
}

impl BandLimited {
    pub fn from_spectrum(s: &SpectrumGrid) -> Result<Self> {
        let (asym, xi) = s.hermitian_asymmetry();
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry: asym, xi });
        }
        Ok(BandLimited {
            step: s.grid().step(),
            half: s.half()[..=s.support_index()].to_vec(),
        })
    }

    pub fn eval(&self, u: f64) -> f64 {
        let kmax = self.half.len() - 1;
        if kmax == 0 {
            return 0.0;
        }
        let w = Complex64::from_polar(1.0, -u * self.step);
        let mut z = w;
        let mut acc = 0.5 * self.half[0].re;
        for k in 1..kmax {
            if k % 64 == 0 {
                z = Complex64::from_polar(1.0, -u * self.step * k as f64);
            }
            acc += (self.half[k] * z).re;
            z *= w;
        }
        let zk = Complex64::from_polar(1.0, -u * self.step * kmax as f64);
        acc += 0.5 * (self.half[kmax] * zk).re;
        acc * self.step / PI
    }
}

/// `ĝ_ℓ` on the u-grid. The full (two-sided) trapezoid sum is formed so
/// that its imaginary residue can be checked before it is discarded.
pub fn invert_to_g(ghat_star: &SpectrumGrid, u_grid: &UGrid) -> Result<Vec<f64>> {
    u_grid.validate()?;
    let (asym, xi) = ghat_star.hermitian_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry: asym, xi });
    }
    let grid = ghat_star.grid();
    let k = ghat_star.support_index();
    if k == 0 {
        return Ok(vec![0.0; u_grid.points]);
    }
    let step = grid.step();
    let vals = ghat_star.values();
    let m = grid.half_len();
    let mut out = Vec::with_capacity(u_grid.points);
    for i in 0..u_grid.points {
        let u = u_grid.u(i);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in (m - k)..=(m + k) {
            let w = if j == m - k || j == m + k { 0.5 } else { 1.0 };
            acc += w * vals[j] * Complex64::from_polar(1.0, -u * grid.xi(j));
        }
        acc *= step / (2.0 * PI);
        if acc.im.abs() > HERMITIAN_TOL * acc.re.abs().max(1.0) {
            return Err(Error::NotHermitian {
                asymmetry: acc.im.abs(),
                xi: u,
            });
        }
        out.push(acc.re);
    }
    Ok(out)
}

/// `ĥ(x) = ĝ(log x) / x`, with `ĝ` linearly interpolated on the u-grid.
pub fn h_hat(ghat: &[f64], u_grid: &UGrid, x: &[f64]) -> Result<Vec<f64>> {
    if ghat.len() != u_grid.points {
        return Err(Error::GridMismatch {
            module: MODULE,
            message: format!("{} values for a u grid of {} points", ghat.len(), u_grid.points),
        });
    }
    x.iter()
        .map(|&xv| {
            if !(xv > 0.0 && xv < 1.0) {
                return Err(Error::invalid(MODULE, format!("h_hat is evaluated on (0, 1), got x = {xv}")));
            }
            let u = xv.ln();
            let pos = (u - u_grid.u_min) / u_grid.step();
            let g = if pos < 0.0 || u > u_grid.u_max {
                0.0
            } else {
                let i = (pos.floor() as usize).min(u_grid.points - 1);
                let t = pos - i as f64;
                if i + 1 >= u_grid.points || t <= 0.0 {
                    ghat[i]
                } else {
                    ghat[i] * (1.0 - t) + ghat[i + 1] * t
                }
            };
            Ok(g / xv)
        })
        .collect()
}

/// `½(ĥ(x) + ĥ(1-x))` for values on an x-grid symmetric about 1/2.
pub fn symmetrize(hhat: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if hhat.len() != x.len() {
        return Err(Error::GridMismatch {
            module: MODULE,
            message: "values and x grid differ in length".into(),
        });
    }
    let n = x.len();
    for i in 0..n {
        if (x[i] + x[n - 1 - i] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(MODULE, "x grid is not symmetric about 1/2"));
        }
    }
    Ok((0..n).map(|i| 0.5 * (hhat[i] + hhat[n - 1 - i])).collect())
}

/// Midpoint-type grid of `points` values in `(0, 1)`, symmetric about 1/2.
pub fn symmetric_x_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| (i as f64 + 0.5) / points as f64).collect()
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub ell: f64,
    pub g_star: SpectrumGrid,
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub h_sym: Vec<f64>,
    /// `∫₀^{|u_min|} |ĝ(u)| du`, mass the smoothing puts on positive `u`.
    pub leakage: f64,
}

/// The whole reconstruction at one bandwidth.
pub fn estimate(sample: &SizeSample, cfg: &EstimatorConfig, x_points: usize) -> Result<Estimate> {
    let kmax = cfg.xi.cutoff_index(1.0 / cfg.ell);
    let half = empirical_half(sample.log_values(), cfg.xi.step(), cfg.xi.half_len().min(kmax));
    let mut m = half.m.clone();
    let mut fd = half.frak_d.clone();
    m.resize(cfg.xi.half_len() + 1, Complex64::new(0.0, 0.0));
    fd.resize(cfg.xi.half_len() + 1, Complex64::new(0.0, 0.0));
    let mhat = SpectrumGrid::from_half(cfg.xi, &m);
    let dhat = d_from_frak_d(&SpectrumGrid::from_half(cfg.xi, &fd));
    let g_star = g_hat_star(cfg, &mhat, &dhat, Some(sample.len()))?;
    let g = invert_to_g(&g_star, &cfg.u_grid)?;
    let x = symmetric_x_grid(x_points);
    let h = h_hat(&g, &cfg.u_grid, &x)?;
    let h_sym = symmetrize(&h, &x)?;
    let bl = BandLimited::from_spectrum(&g_star)?;
    let span = -cfg.u_grid.u_min;
    let pts = 2048;
    let du = span / pts as f64;
    let vals: Vec<f64> = (0..=pts).map(|i| bl.eval(i as f64 * du).abs()).collect();
    let leakage = crate::quadrature::trapezoid_uniform(&vals, du);
    Ok(Estimate {
        ell: cfg.ell,
        u: cfg.u_grid.nodes(),
        g_star,
        g,
        x,
        h,
        h_sym,
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DivisionKernel;
    use crate::quadrature::trapezoid_uniform;
    use crate::rng::seeded;
    use crate::stationary::{sample_from_n, solve_stationary, true_spectra, Model, SolverOptions};

    fn grid() -> XiGrid {
        XiGrid::new(50.0, 0.05).unwrap()
    }

    #[test]
    fn sample_rejects_nonpositive() {
        assert!(SizeSample::new(vec![1.0, 0.0]).is_err());
        assert!(SizeSample::new(vec![]).is_err());
        let s = SizeSample::new(vec![2.0, 0.5]).unwrap();
        assert!((s.log_values()[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn trivial_spectra() {
        let s = SizeSample::new(vec![1.0]).unwrap();
        let m = empirical_m_star(&s, &grid());
        assert!(m.values().iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        let d = empirical_d_star(&s, &grid());
        for (i, v) in d.values().iter().enumerate() {
            assert!((v - Complex64::new(0.0, -grid().xi(i))).norm() < 1e-12);
        }
        let s = SizeSample::new(vec![0.3, 1.7, 2.2]).unwrap();
        let m = empirical_m_star(&s, &grid());
        assert_eq!(m.at(0), Complex64::new(1.0, 0.0));
        let fd = empirical_frak_d_star(&s, &grid());
        let mean_inv = (1.0 / 0.3 + 1.0 / 1.7 + 1.0 / 2.2) / 3.0;
        assert!((fd.at(0).re - mean_inv).abs() < 1e-14);
        let d = empirical_d_star(&s, &grid());
        assert_eq!(d.at(0), Complex64::new(0.0, 0.0));
        for k in [-1000isize, -3, 7, 999] {
            let xi = k as f64 * 0.05;
            assert!((d.at(k) - Complex64::new(0.0, -xi) * fd.at(k)).norm() < 1e-12);
        }
        // direct evaluation at one frequency
        let xi = 37.35;
        let direct: Complex64 = s.values().iter().map(|x| Complex64::from_polar(1.0, xi * x.ln())).sum::<Complex64>() / 3.0;
        assert!((m.at(747) - direct).norm() < 1e-12);
    }

    #[test]
    fn truncation_boundary() {
        let g = XiGrid::new(0.1, 0.05).unwrap();
        let n = 400;
        let t = inverse_threshold(n);
        let vals = vec![
            Complex64::new(0.5 * t, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, t),
            Complex64::new(0.6 * t, 0.8 * t),
            Complex64::new(0.2, 0.0),
        ];
        let inv = truncated_inverse(&SpectrumGrid::new(g, vals).unwrap(), n);
        assert_eq!(inv.values()[0], Complex64::new(0.0, 0.0));
        assert_eq!(inv.values()[1], Complex64::new(1.0, 0.0));
        assert!((inv.values()[2] - Complex64::new(0.0, -1.0 / t)).norm() < 1e-9);
        assert!(inv.values()[3].norm() > 0.0);
        assert!((inv.values()[4] - Complex64::new(5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cutoff_and_origin() {
        let s = SizeSample::new(vec![0.4, 0.9, 1.3, 0.8]).unwrap();
        let cfg = EstimatorConfig::new(0.7, 1.0, 0.3, grid(), UGrid::default()).unwrap();
        let g = g_hat_star(&cfg, &empirical_m_star(&s, &grid()), &empirical_d_star(&s, &grid()), Some(4)).unwrap();
        assert_eq!(g.at(0), Complex64::new(1.0, 0.0));
        for (i, v) in g.values().iter().enumerate() {
            if grid().xi(i).abs() > 1.0 / 0.3 {
                assert_eq!(*v, Complex64::new(0.0, 0.0));
            }
        }
        assert!(EstimatorConfig::new(0.7, 1.0, 0.01, grid(), UGrid::default()).is_err());
        assert!(EstimatorConfig::new(0.7, 1.0, 0.0, grid(), UGrid::default()).is_err());
    }

    #[test]
    fn zero_spectrum_inverts_to_zero() {
        let z = SpectrumGrid::from_fn(grid(), |_| Complex64::new(0.0, 0.0)).truncated(3.0);
        let g = invert_to_g(&z, &UGrid::default()).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        let h = h_hat(&g, &UGrid::default(), &[0.1, 0.5]).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let s = SpectrumGrid::from_fn(grid(), |xi| Complex64::new(1.0, if xi > 0.0 { 0.1 } else { 0.0 })).truncated(2.0);
        assert!(matches!(invert_to_g(&s, &UGrid::default()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn inversion_matches_band_limited_eval_and_gaussian() {
        // f*(ξ) = e^{-ξ²/2} is the transform of the standard normal density
        let s = SpectrumGrid::from_fn(grid(), |xi| Complex64::new((-0.5 * xi * xi).exp(), 0.0)).truncated(12.0);
        let ug = UGrid::new(-6.0, 6.0, 121).unwrap();
        let g = invert_to_g(&s, &ug).unwrap();
        let bl = BandLimited::from_spectrum(&s).unwrap();
        for (i, v) in g.iter().enumerate() {
            let u = ug.u(i);
            let exact = (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
            assert!((v - exact).abs() < 1e-10, "{u}: {v} vs {exact}");
            assert!((bl.eval(u) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn h_hat_exact_at_nodes() {
        let ug = UGrid::new(-4.0, 0.0, 5).unwrap();
        let g = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let x = (-2.0f64).exp();
        let h = h_hat(&g, &ug, &[x]).unwrap();
        assert!((h[0] - 0.3 / x).abs() < 1e-12);
        assert!(h_hat(&g, &ug, &[0.0]).is_err());
        assert!(h_hat(&g, &ug, &[1.0]).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let x = symmetric_x_grid(4);
        let sym = symmetrize(&[1.0, 2.0, 2.0, 1.0], &x).unwrap();
        assert_eq!(sym, vec![1.0, 2.0, 2.0, 1.0]);
        let out = symmetrize(&[3.0, 0.0, 0.0, 5.0], &x).unwrap();
        assert_eq!(out, vec![4.0, 0.0, 0.0, 4.0]);
        assert!(symmetrize(&[1.0, 2.0], &[0.1, 0.5]).is_err());
    }

    #[test]
    fn oracle_mode_matches_kernel_transform() {
        let model = Model::new(DivisionKernel::beta22(), 0.7, 1.0).unwrap();
        let n = solve_stationary(&model, &SolverOptions::default()).unwrap();
        let sp = true_spectra(&n, &grid());
        let cfg = EstimatorConfig::new(0.7, 1.0, 0.5, grid(), UGrid::default()).unwrap();
        let gs = g_hat_star(&cfg, &sp.m, &sp.d, None).unwrap();
        for k in -40isize..=40 {
            let want = DivisionKernel::beta22().g_star(k as f64 * 0.05);
            assert!((gs.at(k) - want).norm() < 1e-4, "{k}");
        }
        assert_eq!(gs.at(41), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn inversion_bias_matches_parseval() {
        // g*(ξ) = 6 / ((2+iξ)(3+iξ)) for h = 6x(1-x); the sinc-smoothed g
        // misses exactly (1/2π) ∫_{|ξ|>1/ℓ} |g*|².
        let ell = 0.1;
        let ug = UGrid::new(-40.0, 40.0, 16001).unwrap();
        let gs = SpectrumGrid::from_fn(grid(), |xi| 6.0 / ((Complex64::new(2.0, xi)) * Complex64::new(3.0, xi))).truncated(1.0 / ell);
        let g = invert_to_g(&gs, &ug).unwrap();
        let diff: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, v)| (v - DivisionKernel::beta22().eval_g(ug.u(i))).powi(2))
            .collect();
        let err = trapezoid_uniform(&diff, ug.step()).sqrt();
        let c = 1.0 / ell;
        let tail = 36.0 / 5.0 * (0.5 * (PI / 2.0 - (c / 2.0).atan()) - (PI / 2.0 - (c / 3.0).atan()) / 3.0);
        let bias = (2.0 * tail / (2.0 * PI)).sqrt();
        assert!((err - bias).abs() < 1e-3, "{err} vs {bias}");
    }

    #[test]
    fn oracle_h_hat_improves_as_bandwidth_shrinks() {
        let x: Vec<f64> = (0..=80).map(|i| 0.1 + 0.01 * i as f64).collect();
        let ug = UGrid::new(-12.0, 0.0, 8192).unwrap();
        let errs: Vec<f64> = [1.0, 0.3, 0.1, 0.04]
            .iter()
            .map(|ell| {
                let gs = SpectrumGrid::from_fn(grid(), |xi| DivisionKernel::beta22().g_star(xi)).truncated(1.0 / ell);
                let g = invert_to_g(&gs, &ug).unwrap();
                let h = h_hat(&g, &ug, &x).unwrap();
                h.iter().zip(&x).map(|(v, xv)| (v - DivisionKernel::beta22().eval_h(*xv)).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn empirical_close_to_true() {
        let model = Model::new(DivisionKernel::beta22(), 0.7, 1.0).unwrap();
        let n = solve_stationary(&model, &SolverOptions::default()).unwrap();
        let g = XiGrid::new(20.0, 0.05).unwrap();
        let sp = true_spectra(&n, &g);
        let mut rng = seeded(4);
        let s = SizeSample::new(sample_from_n(&n, 100_000, &mut rng)).unwrap();
        let m = empirical_m_star(&s, &g);
        assert!(m.sup_distance(&sp.m).unwrap() < 0.02);
        // 𝔇̂* has per-frequency standard deviation at most sqrt(E[X^-2]/n);
        // its sup error stays within a few of those, while D̂* = -iξ 𝔇̂*
        // inflates the same noise by |ξ|.
        let s = SizeSample::new(sample_from_n(&n, 30_000, &mut rng)).unwrap();
        let fd = empirical_frak_d_star(&s, &g);
        let sd = (s.values().iter().map(|x| x.powi(-2)).sum::<f64>() / s.len() as f64 / s.len() as f64).sqrt();
        let fd_err = fd.sup_distance(&sp.frak_d).unwrap();
        assert!(fd_err < 5.0 * sd, "{fd_err} vs sd {sd}");
        let d = empirical_d_star(&s, &g);
        let tail_err = |a: &SpectrumGrid, b: &SpectrumGrid| (200..=400).map(|k| (a.at(k) - b.at(k)).norm()).fold(0.0, f64::max);
        assert!(tail_err(&d, &sp.d) > 5.0 * tail_err(&fd, &sp.frak_d));
    }
}
