//! Float helpers that work without `std`, compensated summation and the small
//! amount of regression the experiments need.

use alloc::vec::Vec;

use crate::Vec2;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

/// Euclidean norm of the first `dim` coordinates. `hypot` keeps axis-aligned
/// vectors exact, which the orientation certificates rely on.
#[inline]
pub fn norm(v: &Vec2, dim: usize) -> f64 {
    if dim == 1 {
        v[0].abs()
    } else {
        libm::hypot(v[0], v[1])
    }
}

#[inline]
pub fn dot(a: &Vec2, b: &Vec2, dim: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..dim {
        s += a[k] * b[k];
    }
    s
}

/// Neumaier's compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    xs.iter().for_each(|&x| acc.add(x));
    acc.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs) / xs.len() as f64
}

/// Unbiased sample variance, two-pass with compensated sums.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add((x - m) * (x - m));
    }
    acc.value() / (n - 1) as f64
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let q = q.clamp(0.0, 1.0);
    let pos = q * (v.len() - 1) as f64;
    let lo = floor(pos) as usize;
    let hi = ceil(pos) as usize;
    let w = pos - lo as f64;
    v[lo] * (1.0 - w) + v[hi] * w
}

/// Upper empirical quantile: the smallest order statistic with at least a
/// fraction `q` of the sample at or below it.
pub fn upper_quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ceil(q.clamp(0.0, 1.0) * v.len() as f64) as usize;
    v[k.clamp(1, v.len()) - 1]
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (NaN with fewer than three points).
    pub slope_se: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = CompensatedSum::new();
    let mut sxy = CompensatedSum::new();
    let mut syy = CompensatedSum::new();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx.add((x - mx) * (x - mx));
        sxy.add((x - mx) * (y - my));
        syy.add((y - my) * (y - my));
    }
    let (sxx, sxy, syy) = (sxx.value(), sxy.value(), syy.value());
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let slope_se = if n > 2 {
        sqrt(ss_res / (n - 2) as f64 / sxx)
    } else {
        f64::NAN
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut xs = alloc::vec![1.0e16];
        xs.extend(core::iter::repeat(1.0).take(1000));
        xs.push(-1.0e16);
        assert_eq!(sum(&xs), 1000.0);
    }

    #[test]
    fn variance_of_constant_is_zero() {
        assert_eq!(variance(&[3.5; 10]), 0.0);
        assert!((variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: alloc::vec::Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 2.0).abs() < 1e-14);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quantiles() {
        let xs = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(upper_quantile(&xs, 1.0), 5.0);
        assert_eq!(upper_quantile(&xs, 0.99), 5.0);
        assert_eq!(upper_quantile(&xs, 0.2), 1.0);
    }
}
