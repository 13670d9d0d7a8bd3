use alloc::vec;
use alloc::vec::Vec;

use crate::env::{Bounds, EnvSpec, Environment};
use crate::game::{certify_constants, shift_momentum, GameHamiltonian};
use crate::hash;
use crate::math;
use crate::pde::{cost_region, solve_observed, steps_to, Scheme, SolveConfig};
use crate::{Error, Result};

/// Runs independent jobs `0..n` and returns their results in index order.
pub trait Executor: Sync {
    fn map<T: Send>(&self, n: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Send>(&self, n: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..n).map(job).collect()
    }
}

/// Scheme and unit-scale steps used for every Monte-Carlo solve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Discretization {
    pub scheme: Scheme,
    pub dt: f64,
    pub dx: f64,
}

/// Monte-Carlo samples of `u_theta(t, 0, .)` over a time schedule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UTable {
    pub theta: Vec<f64>,
    pub times: Vec<f64>,
    /// `samples[k][i]` is the value at `times[k]` in environment `i`.
    pub samples: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub m: usize,
    pub base_seed: u64,
}

impl UTable {
    /// Aggregate per-time sample lists; times must be positive and increasing.
    pub fn from_samples(theta: Vec<f64>, times: Vec<f64>, samples: Vec<Vec<f64>>, base_seed: u64) -> Result<Self> {
        if times.is_empty() || samples.len() != times.len() {
            return Err(Error::param("campaign.times", "need one sample list per time"));
        }
        if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("campaign.times", "times must be positive and increasing"));
        }
        let m = samples[0].len();
        if m == 0 || samples.iter().any(|s| s.len() != m) {
            return Err(Error::param(
                "campaign.samples",
                "every time needs the same positive sample count",
            ));
        }
        let means = samples.iter().map(|s| math::mean(s)).collect();
        let variances = samples.iter().map(|s| math::variance(s)).collect();
        Ok(Self {
            theta,
            times,
            samples,
            means,
            variances,
            m,
            base_seed,
        })
    }

    /// A noise-free table holding the given means, e.g. a planted sequence.
    pub fn from_means(theta: Vec<f64>, times: Vec<f64>, means: Vec<f64>) -> Result<Self> {
        let samples = means.iter().map(|&u| vec![u]).collect();
        Self::from_samples(theta, times, samples, 0)
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn mean_at(&self, t: f64) -> Option<f64> {
        self.index_of(t).map(|k| self.means[k])
    }

    /// Standard error of the mean at `times[k]`.
    pub fn std_err(&self, k: usize) -> f64 {
        math::sqrt(self.variances[k] / self.m as f64)
    }
}

/// `u_theta(t, 0, omega)` at each scheduled time for the environment drawn
/// with `seed`. `shifted` already carries the momentum shift.
pub fn sample_u(
    shifted: &GameHamiltonian,
    family: &EnvSpec,
    seed: u64,
    times: &[f64],
    disc: &Discretization,
) -> Result<Vec<f64>> {
    let dim = shifted.dim();
    let origin = vec![0.0; dim];
    let t_max = *times.last().ok_or(Error::InsufficientSchedule { got: 0, needed: 1 })?;
    let cfg = SolveConfig::new(disc.scheme, disc.dt, disc.dx, t_max, Bounds::new(&origin, &origin));
    let wanted: Vec<usize> = times.iter().map(|&t| steps_to(t, disc.dt)).collect::<Result<_>>()?;
    let region = cost_region(shifted, &cfg)?;
    let env = Environment::sample(&family.with_seed(seed).with_bounds(&region.lo, &region.hi))?;
    let mut out = vec![f64::NAN; times.len()];
    solve_observed(shifted, &env, &cfg, |f| {
        let step = math::round(f.t / disc.dt) as usize;
        for (k, &w) in wanted.iter().enumerate() {
            if w == step {
                out[k] = f.sample(&origin)?;
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Tabulate `u_theta(t, 0, .)` over `m` environments, sample `i` drawn with
/// seed `hash(base_seed, i)`. Refuses non-oriented games, and checks every
/// sample against the a-priori growth bound `|u| <= t sup |l_theta|`, which
/// is at most `beta (1 + |theta|) t`.
pub fn estimate_u<E: Executor + ?Sized>(
    gh: &GameHamiltonian,
    family: &EnvSpec,
    theta: &[f64],
    times: &[f64],
    m: usize,
    base_seed: u64,
    disc: &Discretization,
    exec: &E,
) -> Result<UTable> {
    certify_constants(gh, family, None)?.require_oriented()?;
    if m == 0 {
        return Err(Error::param("campaign.samples", "need at least one sample"));
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("campaign.times", "times must be positive and increasing"));
    }
    let shifted = shift_momentum(gh, theta)?;
    let growth = certify_constants(&shifted, family, None)?.l_inf;
    let rows = exec.map(m, &|i| {
        sample_u(&shifted, family, hash::sample_seed(base_seed, i as u64), times, disc)
    });
    let mut samples = vec![Vec::with_capacity(m); times.len()];
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (k, (&t, &u)) in times.iter().zip(&row).enumerate() {
            let bound = growth * t;
            if !(u.abs() <= bound * (1.0 + 1e-12) + 1e-12) {
                return Err(Error::AprioriBound {
                    value: u,
                    bound,
                    t,
                    sample: i,
                });
            }
            samples[k].push(u);
        }
    }
    UTable::from_samples(theta.to_vec(), times.to_vec(), samples, base_seed)
}
