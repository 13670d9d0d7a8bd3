use alloc::vec;
use alloc::vec::Vec;

use super::{build_grid, Field, Grid, Reach, SolveConfig, SNAP};
use crate::env::Environment;
use crate::game::GameHamiltonian;
use crate::math;
use crate::{Error, Result, Vec2, MAX_DIM};

/// Foot point `x + dt f` in grid units: a base offset and per-axis weights of
/// the two bracketing nodes. A zero upper weight means the foot is a node.
#[derive(Debug, Clone, Copy)]
struct Foot {
    base: [isize; MAX_DIM],
    frac: [f64; MAX_DIM],
}

fn foot(f: &Vec2, dt: f64, dx: f64, dim: usize) -> Foot {
    let mut base = [0isize; MAX_DIM];
    let mut frac = [0.0; MAX_DIM];
    for k in 0..dim {
        let s = dt * f[k] / dx;
        let fl = math::floor(s);
        let mut fr = s - fl;
        let mut b = fl as isize;
        if fr < SNAP {
            fr = 0.0;
        } else if fr > 1.0 - SNAP {
            fr = 0.0;
            b += 1;
        }
        base[k] = b;
        frac[k] = fr;
    }
    Foot { base, frac }
}

pub(crate) fn reach(gh: &GameHamiltonian, cfg: &SolveConfig) -> Reach {
    let dim = gh.dim();
    let mut r = [[0usize; 2]; MAX_DIM];
    for f in gh.velocities() {
        let ft = foot(f, cfg.dt, cfg.dx, dim);
        for k in 0..dim {
            let lo = -ft.base[k];
            let hi = ft.base[k] + if ft.frac[k] > 0.0 { 1 } else { 0 };
            r[k][0] = r[k][0].max(lo.max(0) as usize);
            r[k][1] = r[k][1].max(hi.max(0) as usize);
        }
    }
    r
}

/// Semi-Lagrangian time stepper: one step is the discrete dynamic
/// programming principle over the finite action sets.
pub struct SemiLagrangian<'a> {
    gh: &'a GameHamiltonian,
    field: Field,
    next: Vec<f64>,
    feet: Vec<Foot>,
    /// `dt/2 (l(x) + l(x + dt f))` per updated node and action pair.
    costs: Vec<f64>,
    cost_box: [[usize; 2]; MAX_DIM],
    reach: Reach,
    step: usize,
    steps: usize,
    dt: f64,
    poison: bool,
}

impl<'a> SemiLagrangian<'a> {
    pub fn new(gh: &'a GameHamiltonian, env: &Environment, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.dim() != gh.dim() {
            return Err(Error::Dimension {
                expected: gh.dim(),
                got: cfg.dim(),
            });
        }
        if gh.uses_field() {
            gh.check_env(env)?;
        }
        let dim = gh.dim();
        let steps = cfg.steps()?;
        let reach = reach(gh, cfg);
        let grid = build_grid(cfg, &reach, steps)?;
        let values = initial_values(&grid, cfg);
        let full = full_box(&grid);
        let field = Field {
            grid,
            t: 0.0,
            values,
            active: full,
        };
        let feet: Vec<Foot> = (0..gh.num_a())
            .flat_map(|a| (0..gh.num_b()).map(move |b| (a, b)))
            .map(|(a, b)| foot(&gh.velocity(a, b), cfg.dt, cfg.dx, dim))
            .collect();

        // Only nodes updated at least once need costs; their feet stay inside the grid.
        let mut cost_box = full;
        if steps > 0 {
            for k in 0..dim {
                cost_box[k][0] += reach[k][0];
                cost_box[k][1] -= reach[k][1];
            }
        }
        let pairs = gh.num_pairs();
        let nb = gh.num_b();
        let (ci, cj) = (box_len(&cost_box, 0), box_len(&cost_box, 1));
        let mut costs = vec![0.0; if steps > 0 { ci * cj * pairs } else { 0 }];
        if steps > 0 {
            let mut here = vec![0.0; pairs];
            let inv = 1.0 / cfg.eps;
            for jj in 0..cj {
                for ii in 0..ci {
                    let (i, j) = (cost_box[0][0] + ii, cost_box[1][0] + jj);
                    let x = field.grid.node(i, j);
                    gh.costs_at(&scale(&x, inv), env, &mut here)?;
                    let row = (ii + ci * jj) * pairs;
                    for ab in 0..pairs {
                        let (a, b) = (ab / nb, ab % nb);
                        let f = gh.velocity(a, b);
                        let mut y = x;
                        for k in 0..dim {
                            y[k] += cfg.dt * f[k];
                        }
                        let there = gh.cost(&scale(&y, inv)[..dim], a, b, env)?;
                        costs[row + ab] = 0.5 * cfg.dt * (here[ab] + there);
                    }
                }
            }
        }
        let next = field.values.clone();
        Ok(Self {
            gh,
            field,
            next,
            feet,
            costs,
            cost_box,
            reach,
            step: 0,
            steps,
            dt: cfg.dt,
            poison: cfg.poison_inactive,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Mutable access to the current values, e.g. to start from arbitrary data.
    pub fn field_mut(&mut self) -> &mut Field {
        &mut self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn steps_total(&self) -> usize {
        self.steps
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<()> {
        if self.step >= self.steps {
            return Err(Error::param("solver", "horizon already reached"));
        }
        let dim = self.field.dim();
        let mut act = self.field.active;
        for k in 0..dim {
            act[k][0] += self.reach[k][0];
            if act[k][1] < self.reach[k][1] + act[k][0] {
                return Err(Error::UnderMargined {
                    step: self.step + 1,
                    steps: self.steps,
                    required: (self.reach[k][0] + self.reach[k][1]) as f64 * self.steps as f64 * self.field.grid.dx,
                    available: 0.0,
                });
            }
            act[k][1] -= self.reach[k][1];
        }
        let grid = &self.field.grid;
        let v = &self.field.values;
        let nb = self.gh.num_b();
        let na = self.gh.num_a();
        let pairs = na * nb;
        let ci = box_len(&self.cost_box, 0);
        for j in act[1][0]..=act[1][1] {
            for i in act[0][0]..=act[0][1] {
                let row = ((i - self.cost_box[0][0]) + ci * (j - self.cost_box[1][0])) * pairs;
                let mut lo = f64::INFINITY;
                for b in 0..nb {
                    let mut hi = f64::NEG_INFINITY;
                    for a in 0..na {
                        let ab = a * nb + b;
                        let val = self.costs[row + ab] + interp(grid, v, i, j, &self.feet[ab], dim);
                        hi = hi.max(val);
                    }
                    lo = lo.min(hi);
                }
                self.next[grid.index(i, j)] = lo;
            }
        }
        if self.poison {
            poison_outside(&mut self.next, grid, &act);
        }
        core::mem::swap(&mut self.field.values, &mut self.next);
        self.field.active = act;
        self.step += 1;
        self.field.t = self.step as f64 * self.dt;
        Ok(())
    }

    /// Step to the horizon, calling `observe` after every step.
    pub fn run(&mut self, mut observe: impl FnMut(&Field) -> Result<()>) -> Result<()> {
        while self.step < self.steps {
            self.step()?;
            observe(&self.field)?;
        }
        Ok(())
    }
}

#[inline]
fn interp(grid: &Grid, v: &[f64], i: usize, j: usize, ft: &Foot, dim: usize) -> f64 {
    let i0 = (i as isize + ft.base[0]) as usize;
    let w0 = ft.frac[0];
    if dim == 1 {
        let lo = v[i0];
        return if w0 == 0.0 {
            lo
        } else {
            (1.0 - w0) * lo + w0 * v[i0 + 1]
        };
    }
    let j0 = (j as isize + ft.base[1]) as usize;
    let w1 = ft.frac[1];
    let row = |jj: usize| {
        let k = grid.index(i0, jj);
        if w0 == 0.0 {
            v[k]
        } else {
            (1.0 - w0) * v[k] + w0 * v[k + 1]
        }
    };
    if w1 == 0.0 {
        row(j0)
    } else {
        (1.0 - w1) * row(j0) + w1 * row(j0 + 1)
    }
}

fn scale(x: &Vec2, s: f64) -> Vec2 {
    [x[0] * s, x[1] * s]
}

fn box_len(b: &[[usize; 2]; MAX_DIM], k: usize) -> usize {
    b[k][1] + 1 - b[k][0]
}

pub(crate) fn full_box(grid: &Grid) -> [[usize; 2]; MAX_DIM] {
    [[0, grid.n[0] - 1], [0, grid.n[1] - 1]]
}

pub(crate) fn initial_values(grid: &Grid, cfg: &SolveConfig) -> Vec<f64> {
    let mut values = vec![0.0; grid.len()];
    for j in 0..grid.n[1] {
        for i in 0..grid.n[0] {
            values[grid.index(i, j)] = cfg.datum.eval(&grid.node(i, j), grid.dim);
        }
    }
    values
}

pub(crate) fn poison_outside(values: &mut [f64], grid: &Grid, act: &[[usize; 2]; MAX_DIM]) {
    for j in 0..grid.n[1] {
        for i in 0..grid.n[0] {
            if !((act[0][0]..=act[0][1]).contains(&i) && (act[1][0]..=act[1][1]).contains(&j)) {
                values[grid.index(i, j)] = f64::NAN;
            }
        }
    }
}
