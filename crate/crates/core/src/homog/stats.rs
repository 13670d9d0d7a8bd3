use alloc::vec::Vec;

use super::{UTable, Verdict};
use crate::math::{self, linear_fit, LinearFit};
use crate::{Error, Result};

/// Azuma–Hoeffding bound `2 exp(-M^2 / (2 sum c_m^2))` on `P(|X_n - X_0| >= M)`
/// for a martingale with increments bounded by `c`.
pub fn azuma_bound(c: &[f64], m: f64) -> Result<f64> {
    let mut s = 0.0;
    for (index, &value) in c.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(Error::NegativeIncrement { index, value });
        }
        s += value * value;
    }
    if m == 0.0 {
        return Ok(2.0);
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * math::exp(-m * m / (2.0 * s)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailPoint {
    pub m: f64,
    /// `M sqrt(t)`.
    pub threshold: f64,
    pub hits: usize,
    pub frequency: f64,
    /// At least ten hits, so the frequency is worth fitting.
    pub powered: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConcentrationReport {
    pub t: f64,
    pub samples: usize,
    pub mean: f64,
    /// Sorted by `M`.
    pub tails: Vec<TailPoint>,
    pub monotone: bool,
    /// `ln frequency` against `M^2` over the powered points.
    pub fit: Option<LinearFit>,
    /// Minus the fitted slope.
    pub c_hat: Option<f64>,
    /// Whether `ln frequency` is concave in `M` within binomial error.
    pub concave: bool,
    pub verdict: Verdict,
}

/// Empirical tails `P(|u(t) - U(t)| >= M sqrt t)` over `m_grid`, with the
/// Gaussian-type fit `ln P ~ -c M^2`. Passes when the tails are monotone and
/// the fit has negative slope with `R^2 >= 0.8`.
pub fn check_concentration(table: &UTable, t: f64, m_grid: &[f64]) -> Result<ConcentrationReport> {
    let k = table.index_of(t).ok_or(Error::MissingTimes { m: t, n: 0.0 })?;
    let xs = &table.samples[k];
    let n = xs.len();
    let mean = table.means[k];
    let mut grid: Vec<f64> = m_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let tails: Vec<TailPoint> = grid
        .iter()
        .map(|&m| {
            let threshold = m * math::sqrt(t);
            let hits = xs.iter().filter(|&&x| (x - mean).abs() >= threshold).count();
            TailPoint {
                m,
                threshold,
                hits,
                frequency: hits as f64 / n as f64,
                powered: hits >= 10,
            }
        })
        .collect();
    let monotone = tails.windows(2).all(|w| w[1].frequency <= w[0].frequency);
    let powered: Vec<&TailPoint> = tails.iter().filter(|p| p.powered && p.m > 0.0).collect();
    let m2: Vec<f64> = powered.iter().map(|p| p.m * p.m).collect();
    let lf: Vec<f64> = powered.iter().map(|p| math::ln(p.frequency)).collect();
    let fit = if powered.len() >= 3 { linear_fit(&m2, &lf) } else { None };
    let c_hat = fit.map(|f| -f.slope);

    // Slopes of ln P against M may only decrease, up to two binomial standard errors.
    let se = |p: &TailPoint| math::sqrt((1.0 - p.frequency) / (n as f64 * p.frequency));
    let mut concave = true;
    for w in powered.windows(3) {
        let s1 = (math::ln(w[1].frequency) - math::ln(w[0].frequency)) / (w[1].m - w[0].m);
        let s2 = (math::ln(w[2].frequency) - math::ln(w[1].frequency)) / (w[2].m - w[1].m);
        let h = (w[1].m - w[0].m).min(w[2].m - w[1].m);
        let (a, b, c) = (se(w[0]), se(w[1]), se(w[2]));
        let tol = 2.0 * math::sqrt(a * a + 4.0 * b * b + c * c) / h;
        concave &= s2 <= s1 + tol;
    }

    let spread = table.variances[k];
    let verdict = if spread == 0.0 {
        Verdict::Degenerate
    } else {
        match fit {
            None => Verdict::Inconclusive,
            Some(f) if monotone && f.slope < 0.0 && f.r_squared >= 0.8 => Verdict::Pass,
            Some(_) => Verdict::Fail,
        }
    };
    Ok(ConcentrationReport {
        t,
        samples: n,
        mean,
        tails,
        monotone,
        fit,
        c_hat,
        concave,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpreadPoint {
    pub t: f64,
    pub std: f64,
    /// `std / sqrt(t)`.
    pub scaled: f64,
    /// Standard error of `scaled`, normal approximation.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpreadReport {
    pub points: Vec<SpreadPoint>,
    /// No later value exceeds an earlier one by more than two combined standard errors.
    pub non_increasing: bool,
}

/// Sample standard deviation of `u(t, 0, .) / sqrt(t)` at each of `times`.
pub fn spread_profile(table: &UTable, times: &[f64]) -> Result<SpreadReport> {
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let k = table.index_of(t).ok_or(Error::MissingTimes { m: t, n: 0.0 })?;
        let std = math::sqrt(table.variances[k]);
        let scaled = std / math::sqrt(t);
        let se = if table.m > 1 {
            scaled / math::sqrt(2.0 * (table.m - 1) as f64)
        } else {
            0.0
        };
        points.push(SpreadPoint { t, std, scaled, se });
    }
    let mut non_increasing = true;
    for j in 1..points.len() {
        for i in 0..j {
            let (a, b) = (points[i].se, points[j].se);
            let tol = 2.0 * math::sqrt(a * a + b * b);
            non_increasing &= points[j].scaled <= points[i].scaled + tol;
        }
    }
    Ok(SpreadReport { points, non_increasing })
}

/// One subadditivity defect `D(m, n) = U(m) + U(n) - U(m + n)`, normalized by
/// `(n ln n)^{1/2}` with `n` the larger of the two times.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Defect {
    pub m: f64,
    pub n: f64,
    pub defect: f64,
    pub se: f64,
    pub normalized: f64,
    /// `-D(m, n) / (n ln n)^{1/2}`, the two-sided counterpart.
    pub mirrored: f64,
}

/// Largest normalized defect among pairs sharing the normalizing time `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KPoint {
    pub n: f64,
    pub k: f64,
    pub se: f64,
    pub k_mirrored: f64,
    pub se_mirrored: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubadditivityReport {
    pub defects: Vec<Defect>,
    /// Implied constant: the largest normalized defect, and its standard error.
    pub k_hat: f64,
    pub k_hat_se: f64,
    pub k_hat_mirrored: f64,
    pub k_hat_mirrored_se: f64,
    pub by_n: Vec<KPoint>,
    /// Neither implied constant grows along the schedule beyond two combined
    /// standard errors of the running maximum.
    pub stable: bool,
}

fn normalizer(n: f64) -> f64 {
    math::sqrt(n * math::ln(n))
}

fn grows(points: &[(f64, f64)]) -> bool {
    let mut best: Option<(f64, f64)> = None;
    for &(k, se) in points {
        if let Some((bk, bse)) = best {
            if k > bk + 2.0 * math::sqrt(bse * bse + se * se) {
                return true;
            }
            if k > bk {
                best = Some((k, se));
            }
        } else {
            best = Some((k, se));
        }
    }
    false
}

/// Defects over every pair `m <= n` with `m + n` in the schedule and `n > 1`.
/// The schedule must be closed under doubling up to its last time.
pub fn check_subadditivity(table: &UTable) -> Result<SubadditivityReport> {
    let times = &table.times;
    let t_max = table.t_max();
    for &t in times {
        if 2.0 * t <= t_max * (1.0 + 1e-12) && table.index_of(2.0 * t).is_none() {
            return Err(Error::MissingTimes { m: t, n: t });
        }
    }
    let mut defects = Vec::new();
    for (i, &m) in times.iter().enumerate() {
        for (j, &n) in times.iter().enumerate().skip(i) {
            if n <= 1.0 {
                continue;
            }
            let Some(s) = table.index_of(m + n) else {
                continue;
            };
            let d = table.means[i] + table.means[j] - table.means[s];
            let per: Vec<f64> = (0..table.m)
                .map(|r| table.samples[i][r] + table.samples[j][r] - table.samples[s][r])
                .collect();
            let se = if table.m > 1 {
                math::sqrt(math::variance(&per) / table.m as f64)
            } else {
                0.0
            };
            let z = normalizer(n);
            defects.push(Defect {
                m,
                n,
                defect: d,
                se,
                normalized: d / z,
                mirrored: -d / z,
            });
        }
    }
    if defects.is_empty() {
        return Err(Error::InsufficientSchedule {
            got: times.len(),
            needed: 2,
        });
    }
    let mut by_n: Vec<KPoint> = Vec::new();
    for d in &defects {
        let se = d.se / normalizer(d.n);
        match by_n.iter_mut().find(|p| p.n == d.n) {
            Some(p) => {
                if d.normalized > p.k {
                    p.k = d.normalized;
                    p.se = se;
                }
                if d.mirrored > p.k_mirrored {
                    p.k_mirrored = d.mirrored;
                    p.se_mirrored = se;
                }
            }
            None => by_n.push(KPoint {
                n: d.n,
                k: d.normalized,
                se,
                k_mirrored: d.mirrored,
                se_mirrored: se,
            }),
        }
    }
    by_n.sort_by(|a, b| a.n.total_cmp(&b.n));
    let top = |sel: fn(&KPoint) -> (f64, f64)| {
        by_n.iter()
            .map(sel)
            .fold((f64::NEG_INFINITY, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc })
    };
    let (k_hat, k_hat_se) = top(|p| (p.k, p.se));
    let (k_hat_mirrored, k_hat_mirrored_se) = top(|p| (p.k_mirrored, p.se_mirrored));
    let one: Vec<(f64, f64)> = by_n.iter().map(|p| (p.k, p.se)).collect();
    let two: Vec<(f64, f64)> = by_n.iter().map(|p| (p.k_mirrored, p.se_mirrored)).collect();
    Ok(SubadditivityReport {
        defects,
        k_hat,
        k_hat_se,
        k_hat_mirrored,
        k_hat_mirrored_se,
        by_n,
        stable: !grows(&one) && !grows(&two),
    })
}

/// `sum_{k >= 1} 2^{-k/2} (k + 1)^{1/2}`, the factor turning the defect
/// constant into the rate constant.
pub fn bias_factor() -> f64 {
    let mut s = 0.0;
    for k in 1..400 {
        s += math::exp(-0.5 * k as f64 * core::f64::consts::LN_2) * math::sqrt(k as f64 + 1.0);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateFit {
    /// `ln |a_t / t - Hbar_hat|` against `ln t`.
    pub raw: LinearFit,
    /// The same with the error divided by `(ln t)^{1/2}`.
    pub corrected: LinearFit,
    /// The log-corrected fit explains the data better.
    pub log_corrected: bool,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EffectiveEstimate {
    pub theta: Vec<f64>,
    pub h_hat: f64,
    /// `bias_band + mc_halfwidth`.
    pub ci_halfwidth: f64,
    /// Two standard errors of `U(t_max) / t_max`.
    pub mc_halfwidth: f64,
    /// `A (ln t_max / t_max)^{1/2}`.
    pub bias_band: f64,
    pub k_hat: f64,
    pub a_const: f64,
    pub t_max: f64,
    pub schedule: Vec<f64>,
    /// `-U(t) / t` over the schedule.
    pub sequence: Vec<f64>,
    pub rate_fit: Option<RateFit>,
    pub defects: SubadditivityReport,
}

/// `Hbar_hat = -U(t_max) / t_max` with its band. The defect constant `K` is
/// taken from `k_hat` when given, otherwise fitted as the largest two-sided
/// normalized defect (never below zero).
pub fn extract_effective_h(table: &UTable, k_hat: Option<f64>) -> Result<EffectiveEstimate> {
    if table.times.len() < 3 {
        return Err(Error::InsufficientSchedule {
            got: table.times.len(),
            needed: 3,
        });
    }
    let defects = check_subadditivity(table)?;
    let k = match k_hat {
        Some(k) => {
            if !(k >= 0.0) {
                return Err(Error::param("k_hat", "must be nonnegative"));
            }
            k
        }
        None => defects.k_hat.max(defects.k_hat_mirrored).max(0.0),
    };
    let a_const = k * bias_factor();
    let last = table.times.len() - 1;
    let t_max = table.t_max();
    let h_hat = -table.means[last] / t_max;
    let bias_band = a_const * math::sqrt(math::ln(t_max).max(0.0) / t_max);
    let mc_halfwidth = 2.0 * table.std_err(last) / t_max;
    let sequence: Vec<f64> = table.times.iter().zip(&table.means).map(|(t, u)| -u / t).collect();

    let mut lt = Vec::new();
    let mut le = Vec::new();
    let mut lc = Vec::new();
    for (t, a) in table.times.iter().zip(&sequence).take(last) {
        let err = (a - h_hat).abs();
        if err > 0.0 && *t > 1.0 {
            lt.push(math::ln(*t));
            le.push(math::ln(err));
            lc.push(math::ln(err / math::sqrt(math::ln(*t))));
        }
    }
    let rate_fit = if lt.len() >= 3 {
        match (linear_fit(&lt, &le), linear_fit(&lt, &lc)) {
            (Some(raw), Some(corrected)) => Some(RateFit {
                log_corrected: corrected.r_squared > raw.r_squared,
                raw,
                corrected,
                points: lt.len(),
            }),
            _ => None,
        }
    } else {
        None
    };
    Ok(EffectiveEstimate {
        theta: table.theta.clone(),
        h_hat,
        ci_halfwidth: bias_band + mc_halfwidth,
        mc_halfwidth,
        bias_band,
        k_hat: k,
        a_const,
        t_max,
        schedule: table.times.clone(),
        sequence,
        rate_fit,
        defects,
    })
}
