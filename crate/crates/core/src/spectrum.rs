//! Complex functions sampled on a uniform grid symmetric about `ξ = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `{k δξ : |k| ≤ m}` on `[-Ξ, Ξ]` with `Ξ = m δξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    half_len: usize,
    step: f64,
}

impl XiGrid {
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(half_width >= 0.0) || !half_width.is_finite() {
            return Err(Error::invalid(
                "stationary",
                format!("xi grid needs positive step and half width, got {half_width}, {step}"),
            ));
        }
        let m = (half_width / step).round();
        if (m * step - half_width).abs() > 1e-9 * half_width.max(1.0) {
            return Err(Error::invalid(
                "stationary",
                format!("xi grid half width {half_width} is not a multiple of the step {step}"),
            ));
        }
        Ok(XiGrid {
            half_len: m as usize,
            step,
        })
    }

    pub fn with_half_len(half_len: usize, step: f64) -> Self {
        XiGrid { half_len, step }
    }

    /// Number of nodes with `ξ ≥ 0` beyond zero (the `m` above).
    pub fn half_len(&self) -> usize {
        self.half_len
    }

    pub fn len(&self) -> usize {
        2 * self.half_len + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_width(&self) -> f64 {
        self.half_len as f64 * self.step
    }

    /// `ξ` at full-grid index `i` (0 ↦ `-Ξ`).
    pub fn xi(&self, i: usize) -> f64 {
        (i as f64 - self.half_len as f64) * self.step
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi(i)).collect()
    }

    /// Largest half-grid index `k` with `k δξ ≤ c`.
    pub fn cutoff_index(&self, c: f64) -> usize {
        (((c / self.step) + 1e-9).floor().max(0.0) as usize).min(self.half_len)
    }
}

/// Values of a complex function on an [`XiGrid`]. The function is treated
/// as supported on the closed interval `[-s, s]` (`s = support()`), which
/// sets the trapezoid end weights of the Fourier-domain quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    grid: XiGrid,
    values: Vec<Complex64>,
    support_index: usize,
}

impl SpectrumGrid {
    pub fn new(grid: XiGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                module: "stationary",
                message: format!("{} values for a grid of {} nodes", values.len(), grid.len()),
            });
        }
        Ok(SpectrumGrid {
            grid,
            values,
            support_index: grid.half_len(),
        })
    }

    /// Build from values at `ξ = k δξ, k = 0..=m`, extended by `f(-ξ) = conj f(ξ)`.
    pub fn from_half(grid: XiGrid, half: &[Complex64]) -> Self {
        assert_eq!(half.len(), grid.half_len() + 1);
        let m = grid.half_len();
        let mut values = Vec::with_capacity(grid.len());
        values.extend(half[1..].iter().rev().map(|z| z.conj()));
        values.extend_from_slice(half);
        debug_assert_eq!(values.len(), 2 * m + 1);
        SpectrumGrid {
            grid,
            values,
            support_index: m,
        }
    }

    pub fn from_fn(grid: XiGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.xi(i))).collect();
        SpectrumGrid {
            grid,
            values,
            support_index: grid.half_len(),
        }
    }

    /// Zero the values outside `[-c, c]` and record `c` as the support.
    pub fn truncated(mut self, c: f64) -> Self {
        let k = self.grid.cutoff_index(c);
        let m = self.grid.half_len();
        for (i, v) in self.values.iter_mut().enumerate() {
            if i.abs_diff(m) > k {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self.support_index = k;
        self
    }

    pub fn grid(&self) -> &XiGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Values at `ξ ≥ 0`.
    pub fn half(&self) -> &[Complex64] {
        &self.values[self.grid.half_len()..]
    }

    pub fn support(&self) -> f64 {
        self.support_index as f64 * self.grid.step()
    }

    pub fn support_index(&self) -> usize {
        self.support_index
    }

    /// Value at `ξ = k δξ` for a signed half-grid index.
    pub fn at(&self, k: isize) -> Complex64 {
        self.values[(self.grid.half_len() as isize + k) as usize]
    }

    /// Largest `|f(-ξ) - conj f(ξ)|` and where it occurs.
    pub fn hermitian_asymmetry(&self) -> (f64, f64) {
        let m = self.grid.half_len() as isize;
        (0..=m)
            .map(|k| ((self.at(-k) - self.at(k).conj()).norm(), k as f64 * self.grid.step()))
            .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc })
    }

    fn check_same_grid(&self, other: &SpectrumGrid) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                module: "bandwidth",
                message: format!("{:?} vs {:?}", self.grid, other.grid),
            });
        }
        Ok(())
    }

    /// Trapezoid weight of full-grid index `i` for a support of half-index `k`.
    fn weight(&self, i: usize, k: usize) -> f64 {
        let d = i.abs_diff(self.grid.half_len());
        if d > k {
            0.0
        } else if d == k && k > 0 {
            0.5 * self.grid.step()
        } else {
            self.grid.step()
        }
    }

    /// `∫ |a(ξ)|² dξ` by the trapezoid rule over the support.
    pub fn norm2(&self) -> f64 {
        let k = self.support_index;
        if k == 0 {
            return 0.0;
        }
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.weight(i, k) * v.norm_sqr())
            .sum()
    }

    /// `∫ a(ξ) conj(b(ξ)) dξ` over the common support.
    pub fn inner(&self, other: &SpectrumGrid) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let k = self.support_index.min(other.support_index);
        if k == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| self.weight(i, k) * a * b.conj())
            .sum())
    }

    pub fn sub(&self, other: &SpectrumGrid) -> Result<SpectrumGrid> {
        self.check_same_grid(other)?;
        Ok(SpectrumGrid {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            support_index: self.support_index.max(other.support_index),
        })
    }

    pub fn sup_distance(&self, other: &SpectrumGrid) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric_and_contains_zero() {
        let g = XiGrid::new(50.0, 0.05).unwrap();
        assert_eq!(g.len(), 2001);
        assert_eq!(g.xi(1000), 0.0);
        assert!((g.xi(0) + 50.0).abs() < 1e-12);
        assert!(XiGrid::new(1.0, 0.3).is_err());
        assert!(XiGrid::new(1.0, 0.0).is_err());
        assert_eq!(g.cutoff_index(0.5 * 7.0), 70);
        assert_eq!(g.cutoff_index(2.0 / 0.08), 500);
    }

    #[test]
    fn indicator_has_norm_two() {
        let g = XiGrid::new(1.0, 0.05).unwrap();
        let a = SpectrumGrid::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!((a.norm2() - 2.0).abs() < 1e-12);
        let wide = XiGrid::new(50.0, 0.05).unwrap();
        let b = SpectrumGrid::from_fn(wide, |_| Complex64::new(1.0, 0.0)).truncated(1.0);
        assert!((b.norm2() - 2.0).abs() < 1e-12);
        let ip = b.inner(&b).unwrap();
        assert!(ip.im.abs() < 1e-15 && (ip.re - b.norm2()).abs() < 1e-15);
        assert!(a.inner(&b).is_err());
    }

    #[test]
    fn from_half_is_hermitian() {
        let g = XiGrid::new(2.0, 0.5).unwrap();
        let half: Vec<Complex64> = (0..=4).map(|k| Complex64::new(k as f64, if k == 0 { 0.0 } else { 1.0 })).collect();
        let s = SpectrumGrid::from_half(g, &half);
        assert_eq!(s.hermitian_asymmetry().0, 0.0);
        assert_eq!(s.at(-2), Complex64::new(2.0, -1.0));
        assert_eq!(s.half(), &half[..]);
    }
}
