use alloc::vec;
use alloc::vec::Vec;

use super::sl::{full_box, initial_values, poison_outside};
use super::{build_grid, Field, Grid, Reach, SolveConfig, CFL_LIMIT};
use crate::env::Environment;
use crate::game::GameHamiltonian;
use crate::math;
use crate::{Error, Result, Vec2, MAX_DIM};

/// A Hamiltonian tabulated on the nodes of a solver grid.
pub trait NodeHamiltonian {
    fn dim(&self) -> usize;

    /// Per-axis bounds on `|dH/dp_k|`, used as the numerical viscosity.
    fn speeds(&self) -> Vec2;

    /// `H` at grid node `node` (linear index) and momentum `p`.
    fn eval(&self, node: usize, p: &Vec2) -> Result<f64>;

    /// The grid `node` refers to, when the Hamiltonian depends on position.
    fn grid(&self) -> Option<&Grid>;
}

pub(crate) fn game_speeds(gh: &GameHamiltonian) -> Vec2 {
    let mut s = [0.0; MAX_DIM];
    for f in gh.velocities() {
        for k in 0..gh.dim() {
            s[k] = f64::max(s[k], f[k].abs());
        }
    }
    s
}

pub(crate) fn reach(dim: usize) -> Reach {
    let mut r = [[0usize; 2]; MAX_DIM];
    for rk in r.iter_mut().take(dim) {
        *rk = [1, 1];
    }
    r
}

pub(crate) fn cfl(cfg: &SolveConfig, speeds: &Vec2, sub: usize) -> f64 {
    cfg.dt / sub as f64 * speeds.iter().sum::<f64>() / cfg.dx
}

/// Substeps per time step: the configured count, or the fewest within the CFL limit.
pub(crate) fn substeps(cfg: &SolveConfig, speeds: &Vec2) -> Result<usize> {
    match cfg.substeps {
        Some(n) => {
            let c = cfl(cfg, speeds, n);
            if c > CFL_LIMIT {
                return Err(Error::Cfl {
                    cfl: c,
                    limit: CFL_LIMIT,
                });
            }
            Ok(n)
        }
        None => {
            let c = cfl(cfg, speeds, 1);
            Ok((math::ceil(c / CFL_LIMIT - 1e-12) as usize).max(1))
        }
    }
}

/// The game Hamiltonian with its running costs `l_theta(x / eps)` tabulated per node.
pub struct GameTable<'a> {
    gh: &'a GameHamiltonian,
    grid: Grid,
    costs: Vec<f64>,
    speeds: Vec2,
}

impl<'a> GameTable<'a> {
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
        let speeds = game_speeds(gh);
        let sub = substeps(cfg, &speeds)?;
        let grid = build_grid(cfg, &reach(gh.dim()), cfg.steps()? * sub)?;
        let pairs = gh.num_pairs();
        let mut costs = vec![0.0; grid.len() * pairs];
        let inv = 1.0 / cfg.eps;
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let x = grid.node(i, j);
                let node = grid.index(i, j);
                gh.costs_at(
                    &[x[0] * inv, x[1] * inv],
                    env,
                    &mut costs[node * pairs..(node + 1) * pairs],
                )?;
            }
        }
        Ok(Self {
            gh,
            grid,
            costs,
            speeds,
        })
    }
}

impl NodeHamiltonian for GameTable<'_> {
    fn dim(&self) -> usize {
        self.gh.dim()
    }

    fn speeds(&self) -> Vec2 {
        self.speeds
    }

    #[inline]
    fn eval(&self, node: usize, p: &Vec2) -> Result<f64> {
        let (na, nb) = (self.gh.num_a(), self.gh.num_b());
        let row = &self.costs[node * na * nb..(node + 1) * na * nb];
        let dim = self.gh.dim();
        let mut best = f64::NEG_INFINITY;
        for b in 0..nb {
            let mut worst = f64::INFINITY;
            for a in 0..na {
                let val = -row[a * nb + b] - math::dot(&self.gh.velocity(a, b), p, dim);
                worst = worst.min(val);
            }
            best = best.max(worst);
        }
        Ok(best)
    }

    fn grid(&self) -> Option<&Grid> {
        Some(&self.grid)
    }
}

/// A position-independent Hamiltonian `H(p)` given on a regular momentum
/// grid and interpolated (multi)linearly. Momenta outside the table are an error.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EffectiveTable {
    pub dim: usize,
    pub lo: Vec2,
    pub step: Vec2,
    pub n: [usize; MAX_DIM],
    /// `values[i + n0 j]` at `lo + (i, j) step`.
    pub values: Vec<f64>,
}

impl EffectiveTable {
    /// One-dimensional table at the equally spaced momenta `lo + i step`.
    pub fn new_1d(lo: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(1, [lo, 0.0], [step, 1.0], [values.len(), 1], values)
    }

    pub fn new(dim: usize, lo: Vec2, step: Vec2, n: [usize; MAX_DIM], values: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::param("effective.dim", "must be 1 or 2"));
        }
        for k in 0..dim {
            if n[k] < 2 || !(step[k] > 0.0) {
                return Err(Error::param(
                    "effective.table",
                    "need 2 points and a positive step per axis",
                ));
            }
        }
        if dim == 1 && n[1] != 1 {
            return Err(Error::param("effective.table", "1-d table has a single row"));
        }
        if values.len() != n[0] * n[1] || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("effective.values", "wrong length or non-finite entry"));
        }
        Ok(Self {
            dim,
            lo,
            step,
            n,
            values,
        })
    }

    pub fn hi(&self) -> Vec2 {
        let mut h = self.lo;
        for k in 0..self.dim {
            h[k] += (self.n[k] - 1) as f64 * self.step[k];
        }
        h
    }

    pub fn value(&self, p: &Vec2) -> Result<f64> {
        let mut base = [0usize; MAX_DIM];
        let mut w = [0.0; MAX_DIM];
        for k in 0..self.dim {
            let s = (p[k] - self.lo[k]) / self.step[k];
            let top = (self.n[k] - 1) as f64;
            if !(s >= -1e-9 && s <= top + 1e-9) {
                return Err(Error::TableExcursion { px: p[0], py: p[1] });
            }
            let s = s.clamp(0.0, top);
            let i = (math::floor(s) as usize).min(self.n[k] - 2);
            base[k] = i;
            w[k] = s - i as f64;
        }
        let at = |i: usize, j: usize| self.values[i + self.n[0] * j];
        if self.dim == 1 {
            Ok((1.0 - w[0]) * at(base[0], 0) + w[0] * at(base[0] + 1, 0))
        } else {
            let (i, j) = (base[0], base[1]);
            Ok((1.0 - w[1]) * ((1.0 - w[0]) * at(i, j) + w[0] * at(i + 1, j))
                + w[1] * ((1.0 - w[0]) * at(i, j + 1) + w[0] * at(i + 1, j + 1)))
        }
    }
}

impl NodeHamiltonian for EffectiveTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn speeds(&self) -> Vec2 {
        let mut s = [0.0; MAX_DIM];
        for k in 0..self.dim {
            let stride = if k == 0 { 1 } else { self.n[0] };
            for idx in 0..self.values.len() {
                let i = if k == 0 { idx % self.n[0] } else { idx / self.n[0] };
                if i + 1 < self.n[k] {
                    s[k] = f64::max(
                        s[k],
                        (self.values[idx + stride] - self.values[idx]).abs() / self.step[k],
                    );
                }
            }
        }
        s
    }

    fn eval(&self, _node: usize, p: &Vec2) -> Result<f64> {
        self.value(p)
    }

    fn grid(&self) -> Option<&Grid> {
        None
    }
}

/// Local Lax–Friedrichs time stepper
///
/// ```text
/// u^{n+1} = u^n - dt [ H(x, (D+ u + D- u) / 2) - sum_k alpha_k (D+_k u - D-_k u) / 2 ],
/// ```
///
/// monotone for `alpha_k >= |dH/dp_k|` and `dt sum_k alpha_k / dx <= 1`.
pub struct LaxFriedrichs<'a, H: NodeHamiltonian + ?Sized> {
    ham: &'a H,
    field: Field,
    next: Vec<f64>,
    speeds: Vec2,
    sub: usize,
    dts: f64,
    step: usize,
    steps: usize,
    dt: f64,
    poison: bool,
}

impl<'a, H: NodeHamiltonian + ?Sized> LaxFriedrichs<'a, H> {
    pub fn new(ham: &'a H, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        let dim = ham.dim();
        if cfg.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: cfg.dim(),
            });
        }
        let speeds = ham.speeds();
        let sub = substeps(cfg, &speeds)?;
        let steps = cfg.steps()?;
        let grid = build_grid(cfg, &reach(dim), steps * sub)?;
        if let Some(g) = ham.grid() {
            if *g != grid {
                return Err(Error::param(
                    "solver",
                    "tabulated Hamiltonian was built for another grid",
                ));
            }
        }
        let values = initial_values(&grid, cfg);
        let active = full_box(&grid);
        let next = values.clone();
        Ok(Self {
            ham,
            field: Field {
                grid,
                t: 0.0,
                values,
                active,
            },
            next,
            speeds,
            sub,
            dts: cfg.dt / sub as f64,
            step: 0,
            steps,
            dt: cfg.dt,
            poison: cfg.poison_inactive,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn field_mut(&mut self) -> &mut Field {
        &mut self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn substeps(&self) -> usize {
        self.sub
    }

    /// CFL number of one substep.
    pub fn cfl(&self) -> f64 {
        self.dts * self.speeds.iter().sum::<f64>() / self.field.grid.dx
    }

    pub fn steps_total(&self) -> usize {
        self.steps
    }

    fn substep(&mut self) -> Result<()> {
        let dim = self.field.dim();
        let mut act = self.field.active;
        for k in 0..dim {
            if act[k][1] < act[k][0] + 2 {
                return Err(Error::UnderMargined {
                    step: self.step + 1,
                    steps: self.steps,
                    required: (self.steps * self.sub) as f64 * self.field.grid.dx,
                    available: 0.0,
                });
            }
            act[k][0] += 1;
            act[k][1] -= 1;
        }
        let grid = &self.field.grid;
        let v = &self.field.values;
        let inv = 1.0 / grid.dx;
        let stride = [1, grid.n[0]];
        for j in act[1][0]..=act[1][1] {
            for i in act[0][0]..=act[0][1] {
                let node = grid.index(i, j);
                let u = v[node];
                let mut p = [0.0; MAX_DIM];
                let mut visc = 0.0;
                for k in 0..dim {
                    let dp = (v[node + stride[k]] - u) * inv;
                    let dm = (u - v[node - stride[k]]) * inv;
                    p[k] = 0.5 * (dp + dm);
                    visc += 0.5 * self.speeds[k] * (dp - dm);
                }
                let h = self.ham.eval(node, &p)?;
                self.next[node] = u - self.dts * (h - visc);
            }
        }
        if self.poison {
            poison_outside(&mut self.next, grid, &act);
        }
        core::mem::swap(&mut self.field.values, &mut self.next);
        self.field.active = act;
        Ok(())
    }

    /// Advance one time step (all of its substeps).
    pub fn step(&mut self) -> Result<()> {
        if self.step >= self.steps {
            return Err(Error::param("solver", "horizon already reached"));
        }
        for _ in 0..self.sub {
            self.substep()?;
        }
        self.step += 1;
        self.field.t = self.step as f64 * self.dt;
        Ok(())
    }

    pub fn run(&mut self, mut observe: impl FnMut(&Field) -> Result<()>) -> Result<()> {
        while self.step < self.steps {
            self.step()?;
            observe(&self.field)?;
        }
        Ok(())
    }
}
