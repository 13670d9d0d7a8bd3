//! Solvers for the scaled Cauchy problem
//!
//! ```text
//! d_t u + H(x / eps, D_x u) = 0,   u(0, .) = g,
//! ```
//!
//! on shrinking domains. Two independent monotone schemes are provided:
//!
//! * [`solve_sl`], a semi-Lagrangian scheme that is the discrete dynamic
//!   programming principle of the game,
//!
//!   ```text
//!   v^{n+1}(x) = min_b max_a { dt l_theta(x / eps, a, b) + I[v^n](x + dt f(a, b)) },
//!   ```
//!
//!   with multilinear interpolation `I`. The order matters: Player 1 plays a
//!   nonanticipating strategy, so within one step it sees `b` before
//!   choosing `a`, and the outer operation is the minimum over `b`. Together
//!   with the sign convention `H = max_b min_a { -l - <f, p> }` this gives
//!   `d_t u = min_b max_a { l + <f, D u> } = -H`. The running cost over a step
//!   is integrated with the trapezoid rule between `x` and the foot point.
//! * [`solve_lf`], a local Lax–Friedrichs finite-difference scheme with
//!   viscosity `alpha_k = max |f_k|` per axis.
//!
//! Neither scheme evaluates a boundary condition. The grid starts on a box
//! large enough for the reporting region and every step drops exactly the
//! nodes whose stencil would reach outside the current active box.

mod checks;
mod grid;
mod lf;
mod sl;

pub use checks::{check_comparison, check_lipschitz, check_scaling, ComparisonReport, LipschitzReport, ScalingReport};
pub use grid::{Field, Grid};
pub use lf::{EffectiveTable, GameTable, LaxFriedrichs, NodeHamiltonian};
pub use sl::SemiLagrangian;

use alloc::vec::Vec;

use crate::env::{Bounds, Environment};
use crate::game::GameHamiltonian;
use crate::math;
use crate::{to_vec2, Error, Result, Vec2, MAX_DIM};

/// Upper limit for the Lax–Friedrichs CFL number `dt sum_k alpha_k / dx`.
pub const CFL_LIMIT: f64 = 0.9;

/// Fractional foot-point weights below this are snapped to a grid node.
pub(crate) const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Scheme {
    SemiLagrangian,
    LaxFriedrichs,
}

/// Initial datum `g`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum InitialDatum {
    Zero,
    /// `<theta, x>`.
    Linear {
        theta: Vec<f64>,
    },
    /// `min(|x|, cap)`.
    CappedNorm {
        cap: f64,
    },
    /// Multilinear interpolation of node values `values[i + n0 j]` at
    /// `lo + (i, j) dx`, constant beyond the table edges.
    Tabulated {
        lo: Vec<f64>,
        dx: f64,
        n: Vec<usize>,
        values: Vec<f64>,
    },
}

impl InitialDatum {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            InitialDatum::Zero => Ok(()),
            InitialDatum::Linear { theta } => {
                if theta.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: theta.len(),
                    });
                }
                Ok(())
            }
            InitialDatum::CappedNorm { cap } => {
                if !(*cap >= 0.0) {
                    return Err(Error::param("solver.datum.cap", "must be nonnegative"));
                }
                Ok(())
            }
            InitialDatum::Tabulated { lo, dx, n, values } => {
                if lo.len() != dim || n.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        got: lo.len(),
                    });
                }
                if !(*dx > 0.0) || n.iter().any(|&k| k < 2) {
                    return Err(Error::param("solver.datum", "table needs dx > 0 and 2 nodes per axis"));
                }
                if values.len() != n.iter().product::<usize>() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::param("solver.datum.values", "wrong length or non-finite entry"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: &Vec2, dim: usize) -> f64 {
        match self {
            InitialDatum::Zero => 0.0,
            InitialDatum::Linear { theta } => math::dot(&to_vec2(theta), x, dim),
            InitialDatum::CappedNorm { cap } => math::norm(x, dim).min(*cap),
            InitialDatum::Tabulated { lo, dx, n, values } => {
                let mut base = [0usize; MAX_DIM];
                let mut w = [0.0; MAX_DIM];
                for k in 0..dim {
                    let s = ((x[k] - lo[k]) / dx).clamp(0.0, (n[k] - 1) as f64);
                    let i = (math::floor(s) as usize).min(n[k] - 2);
                    base[k] = i;
                    w[k] = s - i as f64;
                }
                if dim == 1 {
                    (1.0 - w[0]) * values[base[0]] + w[0] * values[base[0] + 1]
                } else {
                    let at = |i: usize, j: usize| values[i + n[0] * j];
                    let (i, j) = (base[0], base[1]);
                    (1.0 - w[1]) * ((1.0 - w[0]) * at(i, j) + w[0] * at(i + 1, j))
                        + w[1] * ((1.0 - w[0]) * at(i, j + 1) + w[0] * at(i + 1, j + 1))
                }
            }
        }
    }

    /// Lipschitz constant (Euclidean) of the datum.
    pub fn lipschitz(&self, dim: usize) -> f64 {
        match self {
            InitialDatum::Zero => 0.0,
            InitialDatum::Linear { theta } => math::norm(&to_vec2(theta), dim),
            InitialDatum::CappedNorm { .. } => 1.0,
            InitialDatum::Tabulated { dx, n, values, .. } => {
                let mut q2 = 0.0;
                for k in 0..dim {
                    let stride = if k == 0 { 1 } else { n[0] };
                    let mut q: f64 = 0.0;
                    for idx in 0..values.len() {
                        let i = if k == 0 { idx % n[0] } else { idx / n[0] };
                        if i + 1 < n[k] {
                            q = q.max((values[idx + stride] - values[idx]).abs() / dx);
                        }
                    }
                    q2 += q * q;
                }
                math::sqrt(q2)
            }
        }
    }
}

/// How much room the computational box leaves around the reporting region.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Margin {
    /// Exactly the domain of dependence of the reporting region.
    Auto,
    /// A fixed margin on every side; refused when too small.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SolveConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub dx: f64,
    pub horizon: f64,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub eps: f64,
    #[cfg_attr(feature = "serde", serde(default = "zero_datum"))]
    pub datum: InitialDatum,
    /// Region where the solution is wanted at the final time.
    pub report: Bounds,
    #[cfg_attr(feature = "serde", serde(default = "auto_margin"))]
    pub margin: Margin,
    /// Lax–Friedrichs substeps per time step; `None` picks the fewest that
    /// respect [`CFL_LIMIT`].
    #[cfg_attr(feature = "serde", serde(default))]
    pub substeps: Option<usize>,
    /// Overwrite nodes that leave the active box with NaN, so any read of
    /// them would surface in the reported values.
    #[cfg_attr(feature = "serde", serde(default))]
    pub poison_inactive: bool,
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

#[cfg(feature = "serde")]
fn zero_datum() -> InitialDatum {
    InitialDatum::Zero
}

#[cfg(feature = "serde")]
fn auto_margin() -> Margin {
    Margin::Auto
}

impl SolveConfig {
    /// Semi-Lagrangian defaults: zero datum, unit scale, automatic margin.
    pub fn new(scheme: Scheme, dt: f64, dx: f64, horizon: f64, report: Bounds) -> Self {
        Self {
            scheme,
            dt,
            dx,
            horizon,
            eps: 1.0,
            datum: InitialDatum::Zero,
            report,
            margin: Margin::Auto,
            substeps: None,
            poison_inactive: false,
        }
    }

    pub fn with_datum(mut self, datum: InitialDatum) -> Self {
        self.datum = datum;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn dim(&self) -> usize {
        self.report.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if !(1..=MAX_DIM).contains(&dim) || self.report.hi.len() != dim {
            return Err(Error::param(
                "solver.report",
                "reporting box must have dimension 1 or 2",
            ));
        }
        if self.report.lo.iter().zip(&self.report.hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::param("solver.report", "reporting box is inverted"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("solver.dt", "must be positive"));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::param("solver.dx", "must be positive"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("solver.horizon", "must be nonnegative"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param("solver.eps", "must be positive"));
        }
        if let Margin::Fixed(m) = self.margin {
            if !(m >= 0.0) {
                return Err(Error::param("solver.margin", "must be nonnegative"));
            }
        }
        if self.substeps == Some(0) {
            return Err(Error::param("solver.substeps", "must be at least 1"));
        }
        self.datum.validate(dim)?;
        self.steps().map(|_| ())
    }

    /// Number of time steps; the horizon must be a whole number of them.
    pub fn steps(&self) -> Result<usize> {
        steps_to(self.horizon, self.dt)
    }

    /// The same problem at unit scale: every length and time divided by `eps`.
    /// Under the scaling relation its solution at `(t / eps, x / eps)` times
    /// `eps` is the solution of `self` at `(t, x)`.
    pub fn unit_scale(&self) -> SolveConfig {
        let e = self.eps;
        SolveConfig {
            dt: self.dt / e,
            dx: self.dx / e,
            horizon: self.horizon / e,
            eps: 1.0,
            report: Bounds {
                lo: self.report.lo.iter().map(|v| v / e).collect(),
                hi: self.report.hi.iter().map(|v| v / e).collect(),
            },
            margin: match self.margin {
                Margin::Fixed(m) => Margin::Fixed(m / e),
                Margin::Auto => Margin::Auto,
            },
            ..self.clone()
        }
    }
}

/// `t / dt` as a whole number of steps.
pub fn steps_to(t: f64, dt: f64) -> Result<usize> {
    let s = math::round(t / dt);
    if (s * dt - t).abs() > 1e-9 * t.abs().max(dt) {
        return Err(Error::OffSchedule { t, dt });
    }
    Ok(s as usize)
}

/// Cells dropped per step on the low and high side of each axis.
pub(crate) type Reach = [[usize; 2]; MAX_DIM];

/// Grid covering the report box plus `steps` times `reach`, honouring a fixed margin.
pub(crate) fn build_grid(cfg: &SolveConfig, reach: &Reach, steps: usize) -> Result<Grid> {
    let dim = cfg.dim();
    let mut lo_index = [0i64; MAX_DIM];
    let mut n = [1usize; MAX_DIM];
    for k in 0..dim {
        let rlo = math::floor(cfg.report.lo[k] / cfg.dx + 1e-9) as i64;
        let rhi = math::ceil(cfg.report.hi[k] / cfg.dx - 1e-9) as i64;
        let need_lo = (reach[k][0] * steps) as i64;
        let need_hi = (reach[k][1] * steps) as i64;
        let (pad_lo, pad_hi) = match cfg.margin {
            Margin::Auto => (need_lo, need_hi),
            Margin::Fixed(m) => {
                let cells = math::floor(m / cfg.dx + 1e-9) as i64;
                for (side, need) in [(0, need_lo), (1, need_hi)] {
                    if cells < need {
                        let per_step = reach[k][side].max(1) as i64;
                        return Err(Error::UnderMargined {
                            step: (cells / per_step) as usize + 1,
                            steps,
                            required: need as f64 * cfg.dx,
                            available: m,
                        });
                    }
                }
                (cells, cells)
            }
        };
        lo_index[k] = rlo - pad_lo;
        n[k] = (rhi + pad_hi - lo_index[k] + 1) as usize;
    }
    Ok(Grid {
        dim,
        lo_index,
        dx: cfg.dx,
        n,
    })
}

/// Box of microscopic coordinates `x / eps` at which `solve_*` evaluates the
/// running cost; environments must cover it.
pub fn cost_region(gh: &GameHamiltonian, cfg: &SolveConfig) -> Result<Bounds> {
    cfg.validate()?;
    let grid = match cfg.scheme {
        Scheme::SemiLagrangian => build_grid(cfg, &sl::reach(gh, cfg), cfg.steps()?)?,
        Scheme::LaxFriedrichs => {
            let sub = lf::substeps(cfg, &lf::game_speeds(gh))?;
            build_grid(cfg, &lf::reach(cfg.dim()), cfg.steps()? * sub)?
        }
    };
    let (lo, hi) = grid.extent();
    let f = gh.f_inf() * cfg.dt;
    let dim = cfg.dim();
    Ok(Bounds {
        lo: (0..dim).map(|k| (lo[k] - f) / cfg.eps).collect(),
        hi: (0..dim).map(|k| (hi[k] + f) / cfg.eps).collect(),
    })
}

/// Solve with the semi-Lagrangian scheme and return the field at the horizon.
pub fn solve_sl(gh: &GameHamiltonian, env: &Environment, cfg: &SolveConfig) -> Result<Field> {
    let mut s = SemiLagrangian::new(gh, env, cfg)?;
    s.run(|_| Ok(()))?;
    Ok(s.into_field())
}

/// Solve with the local Lax–Friedrichs scheme and return the field at the horizon.
pub fn solve_lf(gh: &GameHamiltonian, env: &Environment, cfg: &SolveConfig) -> Result<Field> {
    let table = GameTable::new(gh, env, cfg)?;
    let mut s = LaxFriedrichs::new(&table, cfg)?;
    s.run(|_| Ok(()))?;
    Ok(s.into_field())
}

/// Solve with the configured scheme, calling `observe` on the initial field
/// and after every time step.
pub fn solve_observed(
    gh: &GameHamiltonian,
    env: &Environment,
    cfg: &SolveConfig,
    mut observe: impl FnMut(&Field) -> Result<()>,
) -> Result<Field> {
    match cfg.scheme {
        Scheme::SemiLagrangian => {
            let mut s = SemiLagrangian::new(gh, env, cfg)?;
            observe(s.field())?;
            s.run(observe)?;
            Ok(s.into_field())
        }
        Scheme::LaxFriedrichs => {
            let table = GameTable::new(gh, env, cfg)?;
            let mut s = LaxFriedrichs::new(&table, cfg)?;
            observe(s.field())?;
            s.run(observe)?;
            Ok(s.into_field())
        }
    }
}

/// Every snapshot of a solve, initial field included.
pub fn solve_trajectory(gh: &GameHamiltonian, env: &Environment, cfg: &SolveConfig) -> Result<Vec<Field>> {
    let mut out = Vec::new();
    solve_observed(gh, env, cfg, |f| {
        out.push(f.clone());
        Ok(())
    })?;
    Ok(out)
}
