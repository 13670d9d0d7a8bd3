//! Numerical checks of the deterministic PDE facts: Lipschitz bounds,
//! comparison and the scaling relation.

use super::{Field, GameTable, InitialDatum, LaxFriedrichs, Margin, Scheme, SemiLagrangian, SolveConfig};
use crate::env::Environment;
use crate::game::{shift_momentum, GameHamiltonian, HamiltonianConstants};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LipschitzReport {
    /// Largest discrete `|D_x u|` over all snapshots.
    pub max_space_quotient: f64,
    /// `beta T + Lip(g)` at the last snapshot.
    pub space_bound: f64,
    /// Smallest `beta t + Lip(g) + tol - |D_x u(t)|` over snapshots.
    pub space_slack: f64,
    pub max_time_quotient: f64,
    /// `beta (1 + Lip(g))`.
    pub time_bound: f64,
    pub tolerance: f64,
    pub snapshots: usize,
    pub ok: bool,
}

/// Compare the discrete space and time difference quotients of a trajectory
/// with `|D_x u(t)| <= beta t + Lip(g)` and `|d_t u| <= beta (1 + Lip(g))`,
/// allowing `10 dx` on top of each bound.
pub fn check_lipschitz(traj: &[Field], constants: &HamiltonianConstants, lip_g: f64) -> LipschitzReport {
    let beta = constants.beta;
    let dx = traj.first().map(|f| f.grid.dx).unwrap_or(0.0);
    let tol = 10.0 * dx;
    let mut max_space: f64 = 0.0;
    let mut slack = f64::INFINITY;
    for f in traj {
        let q = f.max_space_quotient();
        max_space = max_space.max(q);
        slack = slack.min(beta * f.t + lip_g + tol - q);
    }
    let mut max_time: f64 = 0.0;
    for w in traj.windows(2) {
        let (old, new) = (&w[0], &w[1]);
        let dt = new.t - old.t;
        if dt <= 0.0 {
            continue;
        }
        for (i, j, _, u) in new.active_nodes() {
            max_time = max_time.max((u - old.at(i, j)).abs() / dt);
        }
    }
    let time_bound = beta * (1.0 + lip_g);
    let t_end = traj.last().map(|f| f.t).unwrap_or(0.0);
    LipschitzReport {
        max_space_quotient: max_space,
        space_bound: beta * t_end + lip_g,
        space_slack: slack,
        max_time_quotient: max_time,
        time_bound,
        tolerance: tol,
        snapshots: traj.len(),
        ok: slack >= 0.0 && max_time <= time_bound + tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    /// `max (u0 - v0)` and `min (u0 - v0)`.
    pub initial_max_gap: f64,
    pub initial_min_gap: f64,
    /// Extremes of `u - v` over all later steps.
    pub max_gap: f64,
    pub min_gap: f64,
    /// `max_gap - initial_max_gap`; nonpositive for a monotone scheme.
    pub excess: f64,
    pub tolerance: f64,
    pub steps: usize,
    pub ok: bool,
}

enum Stepper<'a> {
    Sl(SemiLagrangian<'a>),
    Lf(LaxFriedrichs<'a, GameTable<'a>>),
}

impl Stepper<'_> {
    fn field(&self) -> &Field {
        match self {
            Stepper::Sl(s) => s.field(),
            Stepper::Lf(s) => s.field(),
        }
    }

    fn step(&mut self) -> Result<()> {
        match self {
            Stepper::Sl(s) => s.step(),
            Stepper::Lf(s) => s.step(),
        }
    }
}

fn gap_range(u: &Field, v: &Field) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut scale: f64 = 0.0;
    for (i, j, _, a) in u.active_nodes() {
        let b = v.at(i, j);
        lo = lo.min(a - b);
        hi = hi.max(a - b);
        scale = scale.max(a.abs()).max(b.abs());
    }
    (lo, hi, scale)
}

/// Evolve `u0` and `v0` side by side with the configured scheme and check
/// `max (u(t) - v(t)) <= max (u0 - v0)` at every step, up to rounding.
pub fn check_comparison(
    u0: &InitialDatum,
    v0: &InitialDatum,
    gh: &GameHamiltonian,
    env: &Environment,
    cfg: &SolveConfig,
) -> Result<ComparisonReport> {
    let cu = cfg.clone().with_datum(u0.clone());
    let cv = cfg.clone().with_datum(v0.clone());
    let table;
    let (mut su, mut sv) = match cfg.scheme {
        Scheme::SemiLagrangian => (
            Stepper::Sl(SemiLagrangian::new(gh, env, &cu)?),
            Stepper::Sl(SemiLagrangian::new(gh, env, &cv)?),
        ),
        Scheme::LaxFriedrichs => {
            table = GameTable::new(gh, env, cfg)?;
            (
                Stepper::Lf(LaxFriedrichs::new(&table, &cu)?),
                Stepper::Lf(LaxFriedrichs::new(&table, &cv)?),
            )
        }
    };
    let (lo0, hi0, mut scale) = gap_range(su.field(), sv.field());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let steps = cfg.steps()?;
    for _ in 0..steps {
        su.step()?;
        sv.step()?;
        let (l, h, s) = gap_range(su.field(), sv.field());
        lo = lo.min(l);
        hi = hi.max(h);
        scale = scale.max(s);
    }
    if steps == 0 {
        lo = lo0;
        hi = hi0;
    }
    let tol = 64.0 * f64::EPSILON * (1.0 + scale);
    Ok(ComparisonReport {
        initial_max_gap: hi0,
        initial_min_gap: lo0,
        max_gap: hi,
        min_gap: lo,
        excess: hi - hi0,
        tolerance: tol,
        steps,
        ok: hi - hi0 <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingReport {
    pub eps: f64,
    /// `sup |u^eps(T, x) - eps u(T / eps, x / eps)|` over the reporting region.
    pub max_abs_diff: f64,
    pub nodes: usize,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

/// Solve `u^eps_theta` (zero datum, costs `l_theta(x / eps)`) with `cfg` and
/// `u_theta` at unit scale with `unit`, and compare them through
/// `u^eps(t, x) = eps u(t / eps, x / eps)`. The grids must be matched: `unit`
/// is `cfg` with every length and time divided by `eps`, as produced by
/// [`SolveConfig::unit_scale`].
pub fn check_scaling(
    gh: &GameHamiltonian,
    env: &Environment,
    theta: &[f64],
    cfg: &SolveConfig,
    unit: &SolveConfig,
) -> Result<ScalingReport> {
    let eps = cfg.eps;
    if unit.eps != 1.0 {
        return Err(Error::UnmatchedGrids {
            reason: "the reference run must be at unit scale",
        });
    }
    if unit.scheme != cfg.scheme {
        return Err(Error::UnmatchedGrids {
            reason: "both runs must use the same scheme",
        });
    }
    if !close(cfg.dx, eps * unit.dx) || !close(cfg.dt, eps * unit.dt) {
        return Err(Error::UnmatchedGrids {
            reason: "dx and dt must scale by eps",
        });
    }
    if !close(cfg.horizon, eps * unit.horizon) {
        return Err(Error::UnmatchedGrids {
            reason: "the horizon must scale by eps",
        });
    }
    let dim = cfg.dim();
    if unit.dim() != dim
        || (0..dim).any(|k| {
            !close(cfg.report.lo[k], eps * unit.report.lo[k]) || !close(cfg.report.hi[k], eps * unit.report.hi[k])
        })
    {
        return Err(Error::UnmatchedGrids {
            reason: "the reporting boxes must scale by eps",
        });
    }
    let margins = match (cfg.margin, unit.margin) {
        (Margin::Auto, Margin::Auto) => true,
        (Margin::Fixed(m), Margin::Fixed(n)) => close(m, eps * n),
        _ => false,
    };
    if cfg.substeps != unit.substeps || !margins {
        return Err(Error::UnmatchedGrids {
            reason: "margins and substeps must correspond",
        });
    }
    let shifted = shift_momentum(gh, theta)?;
    let a = cfg.clone().with_datum(InitialDatum::Zero);
    let b = unit.clone().with_datum(InitialDatum::Zero);
    let (ue, u1) = match cfg.scheme {
        Scheme::SemiLagrangian => (super::solve_sl(&shifted, env, &a)?, super::solve_sl(&shifted, env, &b)?),
        Scheme::LaxFriedrichs => (super::solve_lf(&shifted, env, &a)?, super::solve_lf(&shifted, env, &b)?),
    };
    let mut max_abs_diff: f64 = 0.0;
    let mut nodes = 0;
    for (_, _, x, u) in ue.nodes_in(&cfg.report.lo, &cfg.report.hi) {
        let y = [x[0] / eps, x[1] / eps];
        let w = u1.sample(&y[..dim])?;
        max_abs_diff = max_abs_diff.max((u - eps * w).abs());
        nodes += 1;
    }
    Ok(ScalingReport {
        eps,
        max_abs_diff,
        nodes,
    })
}
