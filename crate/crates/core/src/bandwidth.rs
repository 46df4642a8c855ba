//! Bandwidth selection over the family `ℓ = 2/Δ, Δ = 1..Δ_max`.
//!
//! Both resampling criteria split the sample into halves `(E, Eᶜ)`, build
//! `ĝ*` on each half and estimate `‖ĝ*_ℓ‖² - 2⟨ĝ*_ℓ, g*⟩` by substituting
//! the validation half for `g*`:
//!
//! ```text
//! Ĵ₁(ℓ)     = (1/V) Σ_j ‖ĝ*_ℓ(E_j)‖² - 2 Re⟨ĝ*_ℓ(E_j), ĝ*_ℓ(E_jᶜ)⟩
//! Ĵ₂(ℓ, ℓ') = (1/V) Σ_j ‖ĝ*_ℓ(E_j)‖² - 2 Re⟨ĝ*_ℓ(E_j), ĝ*_ℓ'(E_jᶜ)⟩
//! ```
//!
//! The sinc kernel only truncates, so all bandwidths share one unsmoothed
//! spectrum per half and the Fourier-domain quadratures reduce to prefix
//! sums over the half grid `ξ ≥ 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{empirical_half, inverse_threshold, unsmoothed_half, HalfSpectra, SizeSample, UGrid};
use crate::quadrature::trapezoid_uniform;
use crate::spectrum::{SpectrumGrid, XiGrid};

const MODULE: &str = "bandwidth";

/// Largest number of splits accepted by [`split_sample`].
pub const MAX_SPLITS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthFamily {
    values: Vec<f64>,
}

impl BandwidthFamily {
    /// `ℓ = 1/(0.5 Δ)` for `Δ = 1..=delta_max`, decreasing.
    pub fn standard(delta_max: u32) -> Result<Self> {
        if delta_max == 0 {
            return Err(Error::invalid(MODULE, "delta_max must be at least 1"));
        }
        Ok(BandwidthFamily {
            values: (1..=delta_max).map(|d| 1.0 / (0.5 * d as f64)).collect(),
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(MODULE, "bandwidth family is empty"));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid(MODULE, "bandwidths must be positive and finite"));
        }
        if values.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid(MODULE, "bandwidth family must be strictly decreasing"));
        }
        Ok(BandwidthFamily { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    /// Half-grid cutoff index `K` of every member (`K δξ ≤ 1/ℓ`).
    pub fn cutoffs(&self, grid: &XiGrid) -> Result<Vec<usize>> {
        if 1.0 / self.min() > grid.half_width() + 1e-9 {
            return Err(Error::invalid(
                MODULE,
                format!(
                    "smallest bandwidth {} needs cutoff {} beyond the xi grid half width {}",
                    self.min(),
                    1.0 / self.min(),
                    grid.half_width()
                ),
            ));
        }
        Ok(self.values.iter().map(|l| grid.cutoff_index(1.0 / l)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n: usize,
    /// Training halves `E_j`, sorted; `E_jᶜ` is the rest.
    pub train: Vec<Vec<usize>>,
}

impl SplitPlan {
    pub fn v(&self) -> usize {
        self.train.len()
    }

    pub fn complement(&self, j: usize) -> Vec<usize> {
        let mut mask = vec![true; self.n];
        for &i in &self.train[j] {
            mask[i] = false;
        }
        (0..self.n).filter(|&i| mask[i]).collect()
    }

    /// The same partitions with the roles of the halves exchanged.
    pub fn swapped(&self) -> SplitPlan {
        SplitPlan {
            n: self.n,
            train: (0..self.v()).map(|j| self.complement(j)).collect(),
        }
    }
}

/// `v` uniformly random half/half partitions of `0..n`.
pub fn split_sample<R: Rng + ?Sized>(n: usize, v: usize, rng: &mut R) -> Result<SplitPlan> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(MODULE, format!("sample size must be even and at least 2, got {n}")));
    }
    if v == 0 || v > MAX_SPLITS {
        return Err(Error::invalid(MODULE, format!("number of splits must lie in 1..={MAX_SPLITS}, got {v}")));
    }
    let mut train: Vec<Vec<usize>> = Vec::with_capacity(v);
    for _ in 0..v {
        let mut tries = 0;
        loop {
            let mut e = sample_indices(rng, n, n / 2).into_vec();
            e.sort_unstable();
            tries += 1;
            if !train.contains(&e) || tries >= 100 {
                train.push(e);
                break;
            }
        }
    }
    Ok(SplitPlan { n, train })
}

pub fn fourier_norm2(a: &SpectrumGrid) -> f64 {
    a.norm2()
}

/// Trapezoid `∫ a conj(b)`; warns when the imaginary part is not negligible.
pub fn fourier_inner(a: &SpectrumGrid, b: &SpectrumGrid) -> Result<Complex64> {
    let ip = a.inner(b)?;
    let scale = (a.norm2() * b.norm2()).sqrt();
    if ip.im.abs() > 1e-6 * scale.max(f64::MIN_POSITIVE) {
        log::warn!("inner product has imaginary part {:e} (norms {:e})", ip.im, scale);
    }
    Ok(ip)
}

/// Model constants and grids shared by the selection rules.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub alpha: f64,
    pub rate: f64,
    pub xi: XiGrid,
    pub u_grid: UGrid,
}

/// `ĝ*` before the sinc cutoff on `ξ = k δξ, k = 0..=kmax`, with prefix
/// sums that give trapezoid quadratures over `[-K δξ, K δξ]` in O(1).
#[derive(Debug, Clone)]
pub struct HalfEstimate {
    pub step: f64,
    pub values: Vec<Complex64>,
    norm_prefix: Vec<f64>,
}

impl HalfEstimate {
    pub fn new(values: Vec<Complex64>, step: f64) -> Self {
        let norm_prefix = prefix(values.iter().map(|v| v.norm_sqr()));
        HalfEstimate {
            step,
            values,
            norm_prefix,
        }
    }

    pub fn from_spectra(alpha: f64, rate: f64, h: &HalfSpectra, n: usize) -> Self {
        Self::new(unsmoothed_half(alpha, rate, h, inverse_threshold(n)), h.step)
    }

    /// `‖ĝ*_ℓ‖²` for cutoff index `k`.
    pub fn norm2(&self, k: usize) -> f64 {
        trapezoid_from_prefix(&self.norm_prefix, k, |i| self.values[i].norm_sqr()) * self.step
    }

    /// The spectrum truncated at `k` on a full symmetric grid.
    pub fn to_spectrum(&self, grid: &XiGrid, k: usize) -> SpectrumGrid {
        let mut half = self.values[..=k.min(self.values.len() - 1)].to_vec();
        half.resize(grid.half_len() + 1, Complex64::new(0.0, 0.0));
        SpectrumGrid::from_half(*grid, &half).truncated(k as f64 * grid.step())
    }
}

fn prefix(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for v in it {
        acc += v;
        out.push(acc);
    }
    out
}

/// `f(0) + 2 Σ_{1..k-1} f(i) + f(k)` from `prefix[i] = Σ_{<i} f`, i.e. the
/// two-sided trapezoid of an even integrand; 0 when `k = 0`.
fn trapezoid_from_prefix(prefix: &[f64], k: usize, f: impl Fn(usize) -> f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let interior = prefix[k] - prefix[1];
    f(0) + 2.0 * interior + f(k)
}

/// `Re⟨a·1_{k}, b·1_{k}⟩` tables for one training/validation pair.
struct PairTable {
    cross_prefix: Vec<f64>,
    cross: Vec<f64>,
}

impl PairTable {
    fn new(a: &HalfEstimate, b: &HalfEstimate) -> Self {
        let cross: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| (x * y.conj()).re).collect();
        PairTable {
            cross_prefix: prefix(cross.iter().copied()),
            cross,
        }
    }

    fn inner(&self, k: usize, step: f64) -> f64 {
        trapezoid_from_prefix(&self.cross_prefix, k, |i| self.cross[i]) * step
    }
}

/// Per-split training and validation estimates.
pub struct SplitEstimates {
    pub train: Vec<HalfEstimate>,
    pub valid: Vec<HalfEstimate>,
}

/// Spectra of every half of `plan`, up to index `kmax`. The validation
/// sums are the full-sample sums minus the training ones.
pub fn split_estimates(
    sample: &SizeSample,
    plan: &SplitPlan,
    cfg: &SelectionConfig,
    kmax: usize,
    full: &HalfSpectra,
) -> Result<SplitEstimates> {
    if plan.n != sample.len() {
        return Err(Error::invalid(
            MODULE,
            format!("split plan is for n = {} but the sample has {}", plan.n, sample.len()),
        ));
    }
    let half_n = sample.len() / 2;
    let pairs: Vec<(HalfEstimate, HalfEstimate)> = plan
        .train
        .par_iter()
        .map(|idx| {
            let u: Vec<f64> = idx.iter().map(|&i| sample.log_values()[i]).collect();
            let tr = empirical_half(&u, cfg.xi.step(), kmax);
            let va = HalfSpectra {
                step: tr.step,
                m: full.m[..=kmax].iter().zip(&tr.m).map(|(f, t)| 2.0 * f - t).collect(),
                frak_d: full.frak_d[..=kmax].iter().zip(&tr.frak_d).map(|(f, t)| 2.0 * f - t).collect(),
            };
            (
                HalfEstimate::from_spectra(cfg.alpha, cfg.rate, &tr, half_n),
                HalfEstimate::from_spectra(cfg.alpha, cfg.rate, &va, half_n),
            )
        })
        .collect();
    let (train, valid) = pairs.into_iter().unzip();
    Ok(SplitEstimates { train, valid })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub rule: Rule,
    pub ell: f64,
    pub index: usize,
    /// `Ĵ₁(ℓ)`, `min_ℓ' Ĵ₂(ℓ, ℓ')`, or the oracle risk, per family member.
    pub table: Vec<f64>,
    /// Full `Ĵ₂(ℓ, ℓ')` table (rows `ℓ`), for Crit2 only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table2: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Crit1,
    Crit2,
    Oracle,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Crit1 => "crit1",
            Rule::Crit2 => "crit2",
            Rule::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crit1" => Ok(Rule::Crit1),
            "crit2" => Ok(Rule::Crit2),
            "oracle" => Ok(Rule::Oracle),
            _ => Err(Error::invalid(MODULE, format!("unknown rule `{s}` (crit1, crit2, oracle)"))),
        }
    }
}

/// First minimiser in family order, i.e. ties go to the larger bandwidth.
pub fn argmin_prefer_larger(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// `Ĵ₁` over the family from precomputed split estimates.
pub fn crit1_table(est: &SplitEstimates, cutoffs: &[usize]) -> Vec<f64> {
    let v = est.train.len() as f64;
    let tables: Vec<PairTable> = est.train.iter().zip(&est.valid).map(|(a, b)| PairTable::new(a, b)).collect();
    cutoffs
        .iter()
        .map(|&k| {
            est.train
                .iter()
                .zip(&tables)
                .map(|(a, t)| a.norm2(k) - 2.0 * t.inner(k, a.step))
                .sum::<f64>()
                / v
        })
        .collect()
}

/// `Ĵ₂(ℓ, ℓ')`; the inner product of two truncations lives on the smaller
/// support.
pub fn crit2_table(est: &SplitEstimates, cutoffs: &[usize]) -> Vec<Vec<f64>> {
    let v = est.train.len() as f64;
    let tables: Vec<PairTable> = est.train.iter().zip(&est.valid).map(|(a, b)| PairTable::new(a, b)).collect();
    cutoffs
        .iter()
        .map(|&k| {
            let norm: f64 = est.train.iter().map(|a| a.norm2(k)).sum::<f64>() / v;
            cutoffs
                .iter()
                .map(|&k2| {
                    let kk = k.min(k2);
                    norm - 2.0 * tables.iter().map(|t| t.inner(kk, est.train[0].step)).sum::<f64>() / v
                })
                .collect()
        })
        .collect()
}

fn kmax_of(cutoffs: &[usize]) -> usize {
    cutoffs.iter().copied().max().unwrap_or(0)
}

fn validate_sample(sample: &SizeSample) -> Result<()> {
    if sample.len() % 2 != 0 {
        return Err(Error::invalid(MODULE, format!("sample size must be even, got {}", sample.len())));
    }
    Ok(())
}

pub fn crit1_select<R: Rng + ?Sized>(
    sample: &SizeSample,
    family: &BandwidthFamily,
    v: usize,
    cfg: &SelectionConfig,
    rng: &mut R,
) -> Result<(Selection, SplitPlan)> {
    validate_sample(sample)?;
    let cutoffs = family.cutoffs(&cfg.xi)?;
    let plan = split_sample(sample.len(), v, rng)?;
    let kmax = kmax_of(&cutoffs);
    let full = empirical_half(sample.log_values(), cfg.xi.step(), kmax);
    let est = split_estimates(sample, &plan, cfg, kmax, &full)?;
    Ok((select_crit1(family, &est, &cutoffs), plan))
}

pub fn crit2_select<R: Rng + ?Sized>(
    sample: &SizeSample,
    family: &BandwidthFamily,
    v: usize,
    cfg: &SelectionConfig,
    rng: &mut R,
) -> Result<(Selection, SplitPlan)> {
    validate_sample(sample)?;
    let cutoffs = family.cutoffs(&cfg.xi)?;
    let plan = split_sample(sample.len(), v, rng)?;
    let kmax = kmax_of(&cutoffs);
    let full = empirical_half(sample.log_values(), cfg.xi.step(), kmax);
    let est = split_estimates(sample, &plan, cfg, kmax, &full)?;
    Ok((select_crit2(family, &est, &cutoffs), plan))
}

pub fn select_crit1(family: &BandwidthFamily, est: &SplitEstimates, cutoffs: &[usize]) -> Selection {
    let table = crit1_table(est, cutoffs);
    let index = argmin_prefer_larger(&table);
    Selection {
        rule: Rule::Crit1,
        ell: family.values()[index],
        index,
        table,
        table2: None,
    }
}

pub fn select_crit2(family: &BandwidthFamily, est: &SplitEstimates, cutoffs: &[usize]) -> Selection {
    let table2 = crit2_table(est, cutoffs);
    let table: Vec<f64> = table2.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let index = argmin_prefer_larger(&table);
    Selection {
        rule: Rule::Crit2,
        ell: family.values()[index],
        index,
        table,
        table2: Some(table2),
    }
}

/// `‖ĝ_ℓ - g‖²` on the u-grid (trapezoid) for every cutoff, from a single
/// unsmoothed estimate: every `ĝ_ℓ(u)` is a partial sum of the same terms.
pub fn risk_table(est: &HalfEstimate, cutoffs: &[usize], u_grid: &UGrid, true_g: &[f64]) -> Result<Vec<f64>> {
    if true_g.len() != u_grid.points {
        return Err(Error::GridMismatch {
            module: MODULE,
            message: format!("true g has {} values, u grid has {} points", true_g.len(), u_grid.points),
        });
    }
    let kmax = kmax_of(cutoffs);
    if kmax >= est.values.len() {
        return Err(Error::invalid(MODULE, "estimate does not reach the largest cutoff"));
    }
    let step = est.step;
    let sq: Vec<Vec<f64>> = (0..u_grid.points)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let u = u_grid.u(i);
            let w = Complex64::from_polar(1.0, -u * step);
            let mut z = Complex64::new(1.0, 0.0);
            let mut terms = Vec::with_capacity(kmax + 1);
            for k in 0..=kmax {
                if k > 0 && k % 64 == 0 {
                    z = Complex64::from_polar(1.0, -u * step * k as f64);
                }
                terms.push((est.values[k] * z).re);
                z *= w;
            }
            let pre = prefix(terms.iter().copied());
            cutoffs
                .iter()
                .map(|&k| {
                    let g = trapezoid_from_prefix(&pre, k, |j| terms[j]) * step / (2.0 * PI);
                    (g - true_g[i]).powi(2)
                })
                .collect()
        })
        .collect();
    let du = u_grid.step();
    Ok((0..cutoffs.len())
        .map(|c| {
            let col: Vec<f64> = sq.iter().map(|row| row[c]).collect();
            trapezoid_uniform(&col, du)
        })
        .collect())
}

/// Family member minimising the u-grid risk against the true `g`.
pub fn oracle_bandwidth(
    sample: &SizeSample,
    family: &BandwidthFamily,
    true_g: &[f64],
    cfg: &SelectionConfig,
) -> Result<Selection> {
    let cutoffs = family.cutoffs(&cfg.xi)?;
    let kmax = kmax_of(&cutoffs);
    let full = empirical_half(sample.log_values(), cfg.xi.step(), kmax);
    let est = HalfEstimate::from_spectra(cfg.alpha, cfg.rate, &full, sample.len());
    let table = risk_table(&est, &cutoffs, &cfg.u_grid, true_g)?;
    let index = argmin_prefer_larger(&table);
    Ok(Selection {
        rule: Rule::Oracle,
        ell: family.values()[index],
        index,
        table,
        table2: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{g_hat_star, invert_to_g, EstimatorConfig};
    use crate::kernels::DivisionKernel;
    use crate::rng::seeded;
    use crate::stationary::{sample_from_n, solve_stationary, Model, SolverOptions};

    fn cfg() -> SelectionConfig {
        SelectionConfig {
            alpha: 0.7,
            rate: 1.0,
            xi: XiGrid::new(50.0, 0.05).unwrap(),
            u_grid: UGrid::default(),
        }
    }

    fn sample(n: usize, seed: u64) -> SizeSample {
        let model = Model::new(DivisionKernel::beta22(), 0.7, 1.0).unwrap();
        let d = solve_stationary(&model, &SolverOptions { intervals: 2048, ..Default::default() }).unwrap();
        SizeSample::new(sample_from_n(&d, n, &mut seeded(seed))).unwrap()
    }

    #[test]
    fn standard_family() {
        let f = BandwidthFamily::standard(50).unwrap();
        assert_eq!(f.len(), 50);
        assert_eq!(f.max(), 2.0);
        assert!((f.min() - 0.04).abs() < 1e-15);
        assert!(f.values().windows(2).all(|w| w[1] < w[0]));
        let c = f.cutoffs(&cfg().xi).unwrap();
        assert_eq!(c[0], 10);
        assert_eq!(c[49], 500);
        assert!(BandwidthFamily::from_values(vec![0.3, 0.5]).is_err());
        assert!(f.cutoffs(&XiGrid::new(20.0, 0.05).unwrap()).is_err());
    }

    #[test]
    fn splits() {
        let mut rng = seeded(1);
        let p = split_sample(4, 1, &mut rng).unwrap();
        assert_eq!(p.train[0].len(), 2);
        let c = p.complement(0);
        let mut all: Vec<usize> = p.train[0].iter().chain(&c).copied().collect();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(split_sample(3, 1, &mut rng).is_err());
        assert!(split_sample(4, 0, &mut rng).is_err());
        assert_eq!(split_sample(100, 5, &mut seeded(9)).unwrap(), split_sample(100, 5, &mut seeded(9)).unwrap());
        let p = split_sample(20, 10, &mut rng).unwrap();
        for j in 0..10 {
            for k in 0..j {
                assert_ne!(p.train[j], p.train[k]);
            }
        }
        assert_eq!(p.swapped().swapped(), p);
    }

    #[test]
    fn prefix_trapezoid_matches_spectrum_grid() {
        let grid = XiGrid::new(5.0, 0.05).unwrap();
        let vals: Vec<Complex64> = (0..=100).map(|k| Complex64::new((k as f64 * 0.1).cos(), if k == 0 { 0.0 } else { (k as f64).sin() })).collect();
        let other: Vec<Complex64> = (0..=100).map(|k| Complex64::new(1.0 / (1.0 + k as f64), if k == 0 { 0.0 } else { 0.3 })).collect();
        let a = HalfEstimate::new(vals, 0.05);
        let b = HalfEstimate::new(other, 0.05);
        let t = PairTable::new(&a, &b);
        for k in [0usize, 1, 7, 60, 100] {
            let sa = a.to_spectrum(&grid, k);
            let sb = b.to_spectrum(&grid, k);
            assert!((a.norm2(k) - fourier_norm2(&sa)).abs() < 1e-12);
            let ip = fourier_inner(&sa, &sb).unwrap();
            assert!(ip.im.abs() < 1e-12);
            assert!((t.inner(k, 0.05) - ip.re).abs() < 1e-12);
        }
    }

    #[test]
    fn single_member_family() {
        let s = sample(200, 3);
        let f = BandwidthFamily::from_values(vec![0.3]).unwrap();
        let (c1, _) = crit1_select(&s, &f, 3, &cfg(), &mut seeded(1)).unwrap();
        let (c2, _) = crit2_select(&s, &f, 3, &cfg(), &mut seeded(1)).unwrap();
        let g: Vec<f64> = cfg().u_grid.nodes().iter().map(|u| DivisionKernel::beta22().eval_g(*u)).collect();
        let o = oracle_bandwidth(&s, &f, &g, &cfg()).unwrap();
        assert_eq!((c1.ell, c2.ell, o.ell), (0.3, 0.3, 0.3));
    }

    #[test]
    fn crit2_diagonal_is_crit1() {
        let s = sample(2000, 4);
        let f = BandwidthFamily::standard(50).unwrap();
        let (c1, _) = crit1_select(&s, &f, 4, &cfg(), &mut seeded(2)).unwrap();
        let (c2, _) = crit2_select(&s, &f, 4, &cfg(), &mut seeded(2)).unwrap();
        let t2 = c2.table2.unwrap();
        for i in 0..f.len() {
            assert!((t2[i][i] - c1.table[i]).abs() <= 1e-12 * c1.table[i].abs().max(1.0));
        }
    }

    #[test]
    fn ties_go_to_larger_bandwidth() {
        assert_eq!(argmin_prefer_larger(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(argmin_prefer_larger(&[1.0, 1.0]), 0);
    }

    #[test]
    fn risk_table_matches_direct_inversion() {
        let s = sample(3000, 5);
        let c = cfg();
        let f = BandwidthFamily::standard(50).unwrap();
        let cutoffs = f.cutoffs(&c.xi).unwrap();
        let full = empirical_half(s.log_values(), c.xi.step(), 500);
        let est = HalfEstimate::from_spectra(0.7, 1.0, &full, s.len());
        let g: Vec<f64> = c.u_grid.nodes().iter().map(|u| DivisionKernel::beta22().eval_g(*u)).collect();
        let risks = risk_table(&est, &cutoffs, &c.u_grid, &g).unwrap();
        for idx in [0usize, 5, 20] {
            let ecfg = EstimatorConfig::new(0.7, 1.0, f.values()[idx], c.xi, c.u_grid).unwrap();
            let mhat = crate::estimator::empirical_m_star(&s, &c.xi);
            let dhat = crate::estimator::empirical_d_star(&s, &c.xi);
            let gs = g_hat_star(&ecfg, &mhat, &dhat, Some(s.len())).unwrap();
            let ghat = invert_to_g(&gs, &c.u_grid).unwrap();
            let sq: Vec<f64> = ghat.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).collect();
            let direct = trapezoid_uniform(&sq, c.u_grid.step());
            assert!((direct - risks[idx]).abs() < 1e-9 * direct.max(1e-6), "{idx}: {direct} vs {}", risks[idx]);
        }
    }

    #[test]
    fn oracle_is_argmin_of_its_table() {
        let s = sample(3000, 6);
        let f = BandwidthFamily::standard(50).unwrap();
        let g: Vec<f64> = cfg().u_grid.nodes().iter().map(|u| DivisionKernel::beta22().eval_g(*u)).collect();
        let o = oracle_bandwidth(&s, &f, &g, &cfg()).unwrap();
        assert!(o.table.iter().all(|r| *r >= o.table[o.index]));
    }

    #[test]
    fn rule_names_round_trip() {
        for r in [Rule::Crit1, Rule::Crit2, Rule::Oracle] {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert!("crit3".parse::<Rule>().is_err());
    }
}
