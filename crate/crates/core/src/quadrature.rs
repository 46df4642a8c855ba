//! Quadrature rules shared by the kernel, solver and risk code.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z_prev = z;
            z = z_prev - p1 / dp;
            if (z - z_prev).abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`
/// to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Integral {
    integrate_limited(f, a, b, tol, 4000)
}

pub fn integrate_limited<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut err = e;
    while err > tol && intervals.len() < max_intervals {
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, v0, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            intervals.push((lo, hi, v0, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        err += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    let value = intervals.iter().map(|i| i.2).sum();
    let error: f64 = intervals.iter().map(|i| i.3).sum();
    Integral {
        value,
        error,
        converged: error <= tol,
    }
}

/// Trapezoid rule on a uniform grid with spacing `dx`.
pub fn trapezoid_uniform(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dx * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Cumulative trapezoid integral, starting at zero.
pub fn cumulative_trapezoid_uniform(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Linear interpolation on a uniform grid starting at `x0` with step `dx`;
/// zero outside the grid.
#[inline]
pub fn interp_uniform(values: &[f64], x0: f64, dx: f64, x: f64) -> f64 {
    let s = (x - x0) / dx;
    if !(s >= 0.0) {
        return 0.0;
    }
    let last = values.len() - 1;
    let i = s.floor() as usize;
    if i >= last {
        return if s <= last as f64 { values[last] } else { 0.0 };
    }
    let t = s - i as f64;
    values[i] * (1.0 - t) + values[i + 1] * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5, 0.0, 2.0);
        // degree 9 is the limit for 5 points
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-10);
        let (x, w) = gauss_legendre(256, 0.0, 1.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(x[0] > 0.0 && x[255] < 1.0);
    }

    #[test]
    fn adaptive_handles_oscillation_and_peaks() {
        let r = integrate(|x: f64| (20.0 * x).cos(), 0.0, 40.0, 1e-11);
        assert!(r.converged);
        assert!((r.value - (800.0f64).sin() / 20.0).abs() < 1e-10);
        let r = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-9);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-8, "{} vs {}", r.value, exact);
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_zero_outside() {
        let v = [0.0, 1.0, 4.0];
        assert_eq!(interp_uniform(&v, 0.0, 0.5, 0.5), 1.0);
        assert_eq!(interp_uniform(&v, 0.0, 0.5, 0.75), 2.5);
        assert_eq!(interp_uniform(&v, 0.0, 0.5, 1.0), 4.0);
        assert_eq!(interp_uniform(&v, 0.0, 0.5, 1.01), 0.0);
        assert_eq!(interp_uniform(&v, 0.0, 0.5, -0.1), 0.0);
    }
}
