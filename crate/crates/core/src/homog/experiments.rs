use alloc::vec;
use alloc::vec::Vec;

use super::{Discretization, EffectiveEstimate, Executor, Verdict};
use crate::env::{Bounds, EnvSpec, Environment};
use crate::game::{certify_constants, shift_momentum, GameHamiltonian};
use crate::math::{self, linear_fit, LinearFit};
use crate::pde::{
    cost_region, solve_observed, EffectiveTable, Field, InitialDatum, LaxFriedrichs, Scheme, SolveConfig,
};
use crate::{hash, to_vec2, Error, Result, Vec2};

/// Admissible log-log slope of the median rate error against `eps`.
pub const RATE_BAND: [f64; 2] = [0.35, 0.65];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StripReport {
    /// `sup |u - u_hat|` over the reporting region at the horizon.
    pub observed: f64,
    /// `(hi - lo) / delta * diff_sup`.
    pub bound: f64,
    pub delta: f64,
    /// Probed `sup |l - l_hat|`.
    pub diff_sup: f64,
    /// The same bound with `|shift| Lip(l)` in place of the probed sup.
    pub lipschitz_bound: f64,
    /// Scheme tolerance, `5 dx`.
    pub tolerance: f64,
    pub ok: bool,
}

fn ball_nodes<'a>(f: &'a Field, report: &'a Bounds, radius: Option<f64>) -> impl Iterator<Item = (Vec2, f64)> + 'a {
    let dim = f.dim();
    f.nodes_in(&report.lo, &report.hi)
        .filter(move |(_, _, x, _)| radius.map_or(true, |r| math::norm(x, dim) <= r * (1.0 + 1e-12)))
        .map(|(_, _, x, u)| (x, u))
}

/// Solve once in `env` and once with the cost on `{lo <= <x, e> <= hi}`
/// replaced by the cost read at `x - shift`, where `e` is the certified
/// orientation, and compare with the strip bound. Unit scale only.
pub fn strip_experiment(
    gh: &GameHamiltonian,
    env: &Environment,
    lo: f64,
    hi: f64,
    shift: &[f64],
    theta: &[f64],
    cfg: &SolveConfig,
) -> Result<StripReport> {
    if cfg.eps != 1.0 {
        return Err(Error::param("solver.eps", "the strip experiment runs at unit scale"));
    }
    let shifted = shift_momentum(gh, theta)?;
    let c = certify_constants(&shifted, env.spec(), None)?;
    c.require_oriented()?;
    let dim = gh.dim();
    let e = c.e;

    // The strip must meet the environment box.
    let b = &env.spec().bounds;
    let mut span = [f64::INFINITY, f64::NEG_INFINITY];
    for corner in 0..(1usize << dim) {
        let mut x = [0.0; 2];
        for k in 0..dim {
            x[k] = if corner >> k & 1 == 0 { b.lo[k] } else { b.hi[k] };
        }
        let s = math::dot(&x, &e, dim);
        span = [span[0].min(s), span[1].max(s)];
    }
    if lo < span[0] || hi > span[1] {
        return Err(Error::param("strip", "strip leaves the environment box"));
    }
    let patched = env.replace_on_strip(lo, hi, &e[..dim], shift)?;

    let mut diff_sup: f64 = 0.0;
    let step = cfg.dx.min(env.spec().range / 16.0);
    let mut counts = [1usize; 2];
    for k in 0..dim {
        counts[k] = math::floor((b.hi[k] - b.lo[k]) / step) as usize + 1;
    }
    for j in 0..counts[1] {
        for i in 0..counts[0] {
            let x = [
                b.lo[0] + i as f64 * step,
                if dim > 1 { b.lo[1] + j as f64 * step } else { 0.0 },
            ];
            let s = math::dot(&x, &e, dim);
            if s < lo || s > hi {
                continue;
            }
            for a in 0..gh.num_a() {
                for bb in 0..gh.num_b() {
                    let d = shifted.cost(&x[..dim], a, bb, &patched)? - shifted.cost(&x[..dim], a, bb, env)?;
                    diff_sup = diff_sup.max(d.abs());
                }
            }
        }
    }

    let base = solve_observed(&shifted, env, cfg, |_| Ok(()))?;
    let other = solve_observed(&shifted, &patched, cfg, |_| Ok(()))?;
    let mut observed: f64 = 0.0;
    for ((_, u), (_, v)) in ball_nodes(&base, &cfg.report, None).zip(ball_nodes(&other, &cfg.report, None)) {
        observed = observed.max((u - v).abs());
    }
    let width = (hi - lo) / c.delta;
    let bound = width * diff_sup;
    let tolerance = 5.0 * cfg.dx;
    Ok(StripReport {
        observed,
        bound,
        delta: c.delta,
        diff_sup,
        lipschitz_bound: width * c.lip_l * math::norm(&to_vec2(shift), dim),
        tolerance,
        ok: observed <= bound + tolerance,
    })
}

/// Rate campaign parameters. `disc` is the unit-scale discretization; at
/// scale `eps` the solver runs with `dt eps` and `dx eps`, which keeps the
/// microscopic grid fixed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateSetup {
    pub eps: Vec<f64>,
    pub radius: f64,
    pub horizon: f64,
    pub samples: usize,
    pub base_seed: u64,
    pub disc: Discretization,
    /// Effective Hamiltonian at the campaign's `theta`.
    pub h_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatePoint {
    pub eps: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub max: f64,
    pub median_se: f64,
    /// Test-bank samples above `K (-eps ln eps)^{1/2}`.
    pub exceed: usize,
    /// `5 eps^2` times the sample count.
    pub allowed: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateReport {
    pub points: Vec<RatePoint>,
    /// Calibrated on the first seed bank.
    pub k_hat: f64,
    /// `ln median` against `ln eps`.
    pub slope: Option<LinearFit>,
    pub slope_se: f64,
    pub verdict: Verdict,
    pub calibration_ok: bool,
    pub ok: bool,
}

/// `sup_{[0,T] x B_R} |u^eps_theta + t Hbar|` for one environment, which is
/// the error of the linear-datum solution against `<theta, x> - t Hbar`.
fn rate_error(shifted: &GameHamiltonian, family: &EnvSpec, seed: u64, eps: f64, setup: &RateSetup) -> Result<f64> {
    let dim = shifted.dim();
    let r = vec![setup.radius; dim];
    let nr: Vec<f64> = r.iter().map(|v| -v).collect();
    let cfg = SolveConfig::new(
        setup.disc.scheme,
        setup.disc.dt * eps,
        setup.disc.dx * eps,
        setup.horizon,
        Bounds::new(&nr, &r),
    )
    .with_eps(eps);
    let region = cost_region(shifted, &cfg)?;
    let env = Environment::sample(&family.with_seed(seed).with_bounds(&region.lo, &region.hi))?;
    let mut worst: f64 = 0.0;
    solve_observed(shifted, &env, &cfg, |f| {
        for (_, u) in ball_nodes(f, &cfg.report, Some(setup.radius)) {
            worst = worst.max((u + f.t * setup.h_bar).abs());
        }
        Ok(())
    })?;
    Ok(worst)
}

fn bank_errors<E: Executor + ?Sized>(
    shifted: &GameHamiltonian,
    family: &EnvSpec,
    setup: &RateSetup,
    bank: u64,
    exec: &E,
) -> Result<Vec<Vec<f64>>> {
    let base = hash::derive_seed(setup.base_seed, bank);
    let mut out = Vec::with_capacity(setup.eps.len());
    for &eps in &setup.eps {
        let rows = exec.map(setup.samples, &|i| {
            rate_error(shifted, family, hash::sample_seed(base, i as u64), eps, setup)
        });
        let mut errs = Vec::with_capacity(setup.samples);
        for (i, r) in rows.into_iter().enumerate() {
            errs.push(r.map_err(|e| Error::Sample {
                sample: i,
                reason: alloc::format!("{e}"),
            })?);
        }
        out.push(errs);
    }
    Ok(out)
}

/// Sup-errors of the homogenized linear-datum solution over an `eps` list,
/// the log-log slope of their medians, and a split-sample check of the
/// failure probability: `K` is the largest upper `1 - eps^2` quantile of
/// `err / (-eps ln eps)^{1/2}` on one seed bank, and exceedances are counted
/// on an independent bank.
pub fn rate_experiment<E: Executor + ?Sized>(
    gh: &GameHamiltonian,
    family: &EnvSpec,
    theta: &[f64],
    setup: &RateSetup,
    exec: &E,
) -> Result<RateReport> {
    for &eps in &setup.eps {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::EpsilonOutOfRange { eps });
        }
    }
    if setup.eps.is_empty() || setup.samples == 0 {
        return Err(Error::param("campaign.eps", "need at least one eps and one sample"));
    }
    if !(setup.radius >= 0.0 && setup.horizon > 0.0) {
        return Err(Error::param("campaign.rate", "need radius >= 0 and horizon > 0"));
    }
    certify_constants(gh, family, None)?.require_oriented()?;
    let shifted = shift_momentum(gh, theta)?;
    let scale = |eps: f64| math::sqrt(-eps * math::ln(eps));

    let calib = bank_errors(&shifted, family, setup, 1, exec)?;
    let test = bank_errors(&shifted, family, setup, 2, exec)?;

    let mut k_hat: f64 = 0.0;
    for (errs, &eps) in calib.iter().zip(&setup.eps) {
        let norm: Vec<f64> = errs.iter().map(|e| e / scale(eps)).collect();
        k_hat = k_hat.max(math::upper_quantile(&norm, 1.0 - eps * eps));
    }

    let n = setup.samples as f64;
    let mut points = Vec::with_capacity(setup.eps.len());
    for (errs, &eps) in test.iter().zip(&setup.eps) {
        let exceed = errs.iter().filter(|&&e| e > k_hat * scale(eps)).count();
        let allowed = 5.0 * eps * eps * n;
        points.push(RatePoint {
            eps,
            median: math::quantile(errs, 0.5),
            q10: math::quantile(errs, 0.1),
            q90: math::quantile(errs, 0.9),
            max: errs.iter().cloned().fold(0.0, f64::max),
            // Normal approximation of the median's standard error.
            median_se: 1.2533 * math::sqrt(math::variance(errs) / n),
            exceed,
            allowed,
            ok: exceed as f64 <= allowed,
        });
    }
    let calibration_ok = points.iter().all(|p| p.ok);

    let usable: Vec<&RatePoint> = points.iter().filter(|p| p.median > 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|p| math::ln(p.eps)).collect();
    let ys: Vec<f64> = usable.iter().map(|p| math::ln(p.median)).collect();
    let slope = if usable.len() >= 2 { linear_fit(&xs, &ys) } else { None };
    let slope_se = match slope {
        Some(fit) => {
            // Residual scatter and the propagated median errors, whichever is larger.
            let mx = math::mean(&xs);
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let prop: f64 = usable
                .iter()
                .zip(&xs)
                .map(|(p, x)| {
                    let w = (x - mx) / sxx * p.median_se / p.median;
                    w * w
                })
                .sum();
            let fit_se = if fit.slope_se.is_finite() { fit.slope_se } else { 0.0 };
            fit_se.max(math::sqrt(prop))
        }
        None => f64::NAN,
    };
    let verdict = if !gh.uses_field() {
        Verdict::Degenerate
    } else {
        match slope {
            None => Verdict::Inconclusive,
            Some(fit) => {
                let s = fit.slope;
                let miss = (RATE_BAND[0] - s).max(s - RATE_BAND[1]);
                if miss <= 0.0 {
                    Verdict::Pass
                } else if miss <= 2.0 * slope_se {
                    Verdict::Inconclusive
                } else {
                    Verdict::Fail
                }
            }
        }
    };
    Ok(RateReport {
        points,
        k_hat,
        slope,
        slope_se,
        verdict,
        calibration_ok,
        ok: !verdict.is_failure() && calibration_ok,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PropertiesReport {
    pub points: usize,
    /// Largest `|H(theta)| - beta (1 + |theta|) - ci`.
    pub growth_excess: f64,
    /// Largest `|H(t1) - H(t2)| - beta |t1 - t2| - ci1 - ci2`.
    pub lipschitz_excess: f64,
    pub growth_ok: bool,
    pub lipschitz_ok: bool,
}

/// Growth and Lipschitz bounds of the estimated effective Hamiltonian over a
/// grid of momenta, each widened by the confidence bands.
pub fn effective_h_properties(estimates: &[EffectiveEstimate], beta: f64) -> Result<PropertiesReport> {
    if estimates.len() < 2 {
        return Err(Error::param("campaign.theta", "need at least two momenta"));
    }
    let dim = estimates[0].theta.len();
    if estimates.iter().any(|e| e.theta.len() != dim) {
        return Err(Error::param("campaign.theta", "momenta of mixed dimension"));
    }
    let norm = |v: &[f64]| math::norm(&to_vec2(v), dim);
    let mut growth_excess = f64::NEG_INFINITY;
    for e in estimates {
        growth_excess = growth_excess.max(e.h_hat.abs() - beta * (1.0 + norm(&e.theta)) - e.ci_halfwidth);
    }
    let mut lipschitz_excess = f64::NEG_INFINITY;
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            let d: Vec<f64> = a.theta.iter().zip(&b.theta).map(|(x, y)| x - y).collect();
            let ex = (a.h_hat - b.h_hat).abs() - beta * norm(&d) - a.ci_halfwidth - b.ci_halfwidth;
            lipschitz_excess = lipschitz_excess.max(ex);
        }
    }
    Ok(PropertiesReport {
        points: estimates.len(),
        growth_excess,
        lipschitz_excess,
        growth_ok: growth_excess <= 0.0,
        lipschitz_ok: lipschitz_excess <= 0.0,
    })
}

/// Parameters of the general-datum comparison. `disc` is the unit-scale
/// discretization of the oscillating problem (scaled by `eps` like in the
/// rate campaign); the effective problem is solved by Lax–Friedrichs with
/// `effective_dt` and `effective_dx`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneralDatumSetup {
    pub eps: Vec<f64>,
    pub radius: f64,
    pub horizon: f64,
    pub seed: u64,
    pub disc: Discretization,
    pub effective_dt: f64,
    pub effective_dx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatumPoint {
    pub eps: f64,
    /// `sup |u^eps - u_bar|` over the effective solver's time steps and `B_R`.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneralDatumReport {
    pub points: Vec<DatumPoint>,
    /// Allowed increase between successive distances, `2 effective_dx`.
    pub slack: f64,
    /// Distances never grow along the (decreasing) eps list beyond `slack`.
    pub monotone: bool,
}

/// Distance between the oscillating solution with datum `g` and the solution
/// of `d_t u + Hbar(D u) = 0` with the same datum, `Hbar` interpolated from
/// `table`, for each `eps` in one environment drawn with `setup.seed`.
pub fn general_datum_homogenization(
    gh: &GameHamiltonian,
    family: &EnvSpec,
    table: &EffectiveTable,
    datum: &InitialDatum,
    setup: &GeneralDatumSetup,
) -> Result<GeneralDatumReport> {
    let dim = gh.dim();
    if table.dim != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: table.dim,
        });
    }
    if setup.eps.is_empty() || setup.eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::param("campaign.eps", "need values in (0, 1]"));
    }
    if setup.eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("campaign.eps", "must be decreasing"));
    }
    let r = vec![setup.radius; dim];
    let nr: Vec<f64> = r.iter().map(|v| -v).collect();
    let report = Bounds::new(&nr, &r);

    let bar_cfg = SolveConfig::new(
        Scheme::LaxFriedrichs,
        setup.effective_dt,
        setup.effective_dx,
        setup.horizon,
        report.clone(),
    )
    .with_datum(datum.clone());
    let mut bar = Vec::new();
    let mut lf = LaxFriedrichs::new(table, &bar_cfg)?;
    bar.push(lf.field().clone());
    lf.run(|f| {
        bar.push(f.clone());
        Ok(())
    })?;

    let mut points = Vec::with_capacity(setup.eps.len());
    for &eps in &setup.eps {
        let cfg = SolveConfig::new(
            setup.disc.scheme,
            setup.disc.dt * eps,
            setup.disc.dx * eps,
            setup.horizon,
            report.clone(),
        )
        .with_eps(eps)
        .with_datum(datum.clone());
        let region = cost_region(gh, &cfg)?;
        let env = Environment::sample(&family.with_seed(setup.seed).with_bounds(&region.lo, &region.hi))?;
        let mut distance: f64 = 0.0;
        solve_observed(gh, &env, &cfg, |f| {
            let k = math::round(f.t / setup.effective_dt);
            if (k * setup.effective_dt - f.t).abs() > 1e-9 * f.t.max(1.0) {
                return Ok(());
            }
            let Some(ub) = bar.get(k as usize) else {
                return Ok(());
            };
            for (x, u) in ball_nodes(f, &cfg.report, Some(setup.radius)) {
                distance = distance.max((u - ub.sample(&x[..dim])?).abs());
            }
            Ok(())
        })?;
        points.push(DatumPoint { eps, distance });
    }
    let slack = 2.0 * setup.effective_dx;
    let mut monotone = true;
    for j in 1..points.len() {
        for i in 0..j {
            monotone &= points[j].distance <= points[i].distance + slack;
        }
    }
    Ok(GeneralDatumReport {
        points,
        slack,
        monotone,
    })
}
