//! Max-min Hamiltonians of two-player zero-sum differential games,
//!
//! ```text
//! H(x, p) = max_{b in B} min_{a in A} { -l(x, a, b) - <f(a, b), p> },
//! ```
//!
//! over finite action sets, together with their structural constants, the
//! momentum shift `l_theta = l + <f, theta>`, and the localization of a
//! generic Lipschitz Hamiltonian into this form on a ball of momenta.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::env::{ChannelLayout, EnvSpec, Environment};
use crate::hash::SplitMix64;
use crate::math::{self, dot, norm};
use crate::{to_vec2, Error, Result, Vec2, MAX_DIM};

/// A Lipschitz Hamiltonian `G(x, p, omega)` that need not have max-min form.
pub trait LipschitzHamiltonian: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &Vec2, p: &Vec2, env: &Environment) -> Result<f64>;

    /// A constant for which `G` satisfies (H1)–(H3) on environments of `family`.
    fn beta(&self, family: &EnvSpec) -> f64;

    /// Lipschitz constant of `G` in `x`.
    fn lip_x(&self, family: &EnvSpec) -> f64;
}

/// Momentum profiles `G0(p)` for separable Hamiltonians `G0(p) + c V(x)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum MomentumProfile {
    /// `c + <q, p>`.
    Affine { constant: f64, slope: Vec2 },
    /// `s |p|`.
    Norm { scale: f64 },
    /// `A cos(w p_k)`.
    Cosine {
        amplitude: f64,
        frequency: f64,
        axis: usize,
    },
    /// `s | |p| - 1 |`, nonconvex.
    DoubleWell { scale: f64 },
}

impl MomentumProfile {
    pub fn eval(&self, p: &Vec2, dim: usize) -> f64 {
        match *self {
            MomentumProfile::Affine { constant, ref slope } => constant + dot(slope, p, dim),
            MomentumProfile::Norm { scale } => scale * norm(p, dim),
            MomentumProfile::Cosine {
                amplitude,
                frequency,
                axis,
            } => amplitude * math::cos(frequency * p[axis]),
            MomentumProfile::DoubleWell { scale } => scale * (norm(p, dim) - 1.0).abs(),
        }
    }

    pub fn lipschitz(&self, dim: usize) -> f64 {
        match *self {
            MomentumProfile::Affine { ref slope, .. } => norm(slope, dim),
            MomentumProfile::Norm { scale } => scale.abs(),
            MomentumProfile::Cosine {
                amplitude, frequency, ..
            } => (amplitude * frequency).abs(),
            MomentumProfile::DoubleWell { scale } => scale.abs(),
        }
    }

    fn sup_at_zero(&self) -> f64 {
        self.eval(&[0.0; MAX_DIM], MAX_DIM).abs()
    }
}

/// `G(x, p, omega) = G0(p) + potential * V(x, omega)` where `V` is channel 0
/// of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableHamiltonian {
    pub dim: usize,
    pub profile: MomentumProfile,
    pub potential: f64,
}

impl LipschitzHamiltonian for SeparableHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vec2, p: &Vec2, env: &Environment) -> Result<f64> {
        let v = if self.potential == 0.0 {
            0.0
        } else {
            self.potential * env.eval_channel(x, 0)?
        };
        Ok(self.profile.eval(p, self.dim) + v)
    }

    fn beta(&self, family: &EnvSpec) -> f64 {
        let sup_v = self.potential.abs() * family.sup_bound();
        (self.profile.sup_at_zero() + sup_v)
            .max(self.profile.lipschitz(self.dim))
            .max(self.lip_x(family))
    }

    fn lip_x(&self, family: &EnvSpec) -> f64 {
        if self.potential == 0.0 {
            0.0
        } else {
            self.potential.abs() * family.lipschitz_bound()
        }
    }
}

/// How the running cost `l(x, a, b)` is produced.
#[derive(Clone)]
pub enum CostModel {
    /// `l = scale[ab] * field(x, channel) + offset[ab]`, where the channel is
    /// the action pair when `per_pair` and the shared channel 0 otherwise.
    Field {
        scale: Vec<f64>,
        offset: Vec<f64>,
        per_pair: bool,
    },
    /// `l = -G(x, b) + beta <a, b>` with action points taken literally.
    Localized {
        g: Arc<dyn LipschitzHamiltonian>,
        beta: f64,
    },
    /// A deterministic closed-form cost that ignores the environment.
    Explicit(ExplicitCost),
}

/// Closed-form running cost `l(x, a, b)` with its certified sup and Lipschitz constant.
#[derive(Clone)]
pub struct ExplicitCost {
    pub name: &'static str,
    pub f: Arc<dyn Fn(&Vec2, usize, usize) -> f64 + Send + Sync>,
    pub sup: f64,
    pub lip: f64,
}

impl ExplicitCost {
    pub fn new(
        name: &'static str,
        sup: f64,
        lip: f64,
        f: impl Fn(&Vec2, usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name,
            f: Arc::new(f),
            sup,
            lip,
        }
    }
}

impl fmt::Debug for ExplicitCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExplicitCost")
            .field("name", &self.name)
            .field("sup", &self.sup)
            .field("lip", &self.lip)
            .finish()
    }
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::Field {
                scale,
                offset,
                per_pair,
            } => f
                .debug_struct("Field")
                .field("scale", scale)
                .field("offset", offset)
                .field("per_pair", per_pair)
                .finish(),
            CostModel::Localized { g, beta } => f.debug_struct("Localized").field("g", g).field("beta", beta).finish(),
            CostModel::Explicit(c) => c.fmt(f),
        }
    }
}

/// Data remembered by [`localize`] so the representation can be audited.
#[derive(Clone, Debug)]
pub struct Localization {
    pub g: Arc<dyn LipschitzHamiltonian>,
    pub v: Vec2,
    /// Row-major `pi[i][j]`: `(pi p)_i = sum_j pi[i][j] p_j`.
    pub pi: [[f64; MAX_DIM]; MAX_DIM],
    pub radius: f64,
    /// Indices of the extreme points of the `A` grid.
    a_hull: Vec<usize>,
    b_points: Vec<Vec2>,
}

/// A Hamiltonian in max-min form over finite action sets.
#[derive(Clone, Debug)]
pub struct GameHamiltonian {
    dim: usize,
    actions_a: Vec<Vec<f64>>,
    actions_b: Vec<Vec<f64>>,
    /// `f(a, b)` at index `a * |B| + b`, or at `a` alone when `per_a`.
    velocity: Vec<Vec2>,
    per_a: bool,
    cost: CostModel,
    theta: Vec2,
    orientation_hint: Option<Vec2>,
    localization: Option<Localization>,
}

impl GameHamiltonian {
    pub fn new(
        dim: usize,
        actions_a: Vec<Vec<f64>>,
        actions_b: Vec<Vec<f64>>,
        velocity: Vec<Vec2>,
        cost: CostModel,
    ) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::param("hamiltonian.dim", "must be 1 or 2"));
        }
        if actions_a.is_empty() || actions_b.is_empty() {
            return Err(Error::param("hamiltonian.actions", "action sets must be nonempty"));
        }
        let pairs = actions_a.len() * actions_b.len();
        let per_a = velocity.len() == actions_a.len() && velocity.len() != pairs;
        if velocity.len() != pairs && !per_a {
            return Err(Error::param(
                "hamiltonian.velocity",
                "need one velocity per action pair or per action of A",
            ));
        }
        if velocity.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(Error::param("hamiltonian.velocity", "velocities must be finite"));
        }
        if dim == 1 && velocity.iter().any(|f| f[1] != 0.0) {
            return Err(Error::param(
                "hamiltonian.velocity",
                "second component must vanish in 1-d",
            ));
        }
        if let CostModel::Field { scale, offset, .. } = &cost {
            if scale.len() != pairs || offset.len() != pairs {
                return Err(Error::param(
                    "hamiltonian.cost",
                    "need one scale and offset per action pair",
                ));
            }
        }
        Ok(Self {
            dim,
            actions_a,
            actions_b,
            velocity,
            per_a,
            cost,
            theta: [0.0; MAX_DIM],
            orientation_hint: None,
            localization: None,
        })
    }

    /// Pure transport `f = velocity`, `l` = the shared field.
    pub fn transport(velocity: &[f64]) -> Result<Self> {
        Self::new(
            velocity.len(),
            vec![vec![0.0]],
            vec![vec![0.0]],
            vec![to_vec2(velocity)],
            CostModel::Field {
                scale: vec![1.0],
                offset: vec![0.0],
                per_pair: false,
            },
        )
    }

    /// Singleton actions with a closed-form cost.
    pub fn explicit_transport(velocity: &[f64], cost: ExplicitCost) -> Result<Self> {
        Self::new(
            velocity.len(),
            vec![vec![0.0]],
            vec![vec![0.0]],
            vec![to_vec2(velocity)],
            CostModel::Explicit(cost),
        )
    }

    /// Singleton actions with a deterministic constant cost `l = c`.
    pub fn constant_cost(velocity: &[f64], c: f64) -> Result<Self> {
        Self::new(
            velocity.len(),
            vec![vec![0.0]],
            vec![vec![0.0]],
            vec![to_vec2(velocity)],
            CostModel::Field {
                scale: vec![0.0],
                offset: vec![c],
                per_pair: false,
            },
        )
    }

    /// Player 1 picks one of two speeds along `direction`, each with its own
    /// cost field shifted by `offsets[a]`; Player 2 is passive.
    pub fn two_speed_control(direction: &[f64], speeds: [f64; 2], offsets: [f64; 2]) -> Result<Self> {
        let e = to_vec2(direction);
        let vel = speeds
            .iter()
            .map(|s| {
                let mut f = [0.0; MAX_DIM];
                for k in 0..direction.len() {
                    f[k] = s * e[k];
                }
                f
            })
            .collect();
        Self::new(
            direction.len(),
            vec![vec![speeds[0]], vec![speeds[1]]],
            vec![vec![0.0]],
            vel,
            CostModel::Field {
                scale: vec![1.0, 1.0],
                offset: offsets.to_vec(),
                per_pair: true,
            },
        )
    }

    /// `A = B = {-1, +1}`, `f(a, b) = drift + a * spread_a + b * spread_b`,
    /// `l(x, a, b) = field_ab(x) + coupling * a * b`.
    pub fn saddle_game(drift: &[f64], spread_a: &[f64], spread_b: &[f64], coupling: f64) -> Result<Self> {
        let dim = drift.len();
        if spread_a.len() != dim || spread_b.len() != dim {
            return Err(Error::param("hamiltonian.spread", "dimension differs from drift"));
        }
        let signs = [-1.0, 1.0];
        let mut vel = Vec::with_capacity(4);
        let mut offset = Vec::with_capacity(4);
        for &a in &signs {
            for &b in &signs {
                let mut f = [0.0; MAX_DIM];
                for k in 0..dim {
                    f[k] = drift[k] + a * spread_a[k] + b * spread_b[k];
                }
                vel.push(f);
                offset.push(coupling * a * b);
            }
        }
        Self::new(
            dim,
            signs.iter().map(|&s| vec![s]).collect(),
            signs.iter().map(|&s| vec![s]).collect(),
            vel,
            CostModel::Field {
                scale: vec![1.0; 4],
                offset,
                per_pair: true,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_a(&self) -> usize {
        self.actions_a.len()
    }

    pub fn num_b(&self) -> usize {
        self.actions_b.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.num_a() * self.num_b()
    }

    pub fn actions_a(&self) -> &[Vec<f64>] {
        &self.actions_a
    }

    pub fn actions_b(&self) -> &[Vec<f64>] {
        &self.actions_b
    }

    /// `f(a, b)`.
    #[inline]
    pub fn velocity(&self, a: usize, b: usize) -> Vec2 {
        if self.per_a {
            self.velocity[a]
        } else {
            self.velocity[a * self.num_b() + b]
        }
    }

    /// The distinct entries of the velocity table.
    pub fn velocities(&self) -> &[Vec2] {
        &self.velocity
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn theta(&self) -> Vec2 {
        self.theta
    }

    pub fn localization(&self) -> Option<&Localization> {
        self.localization.as_ref()
    }

    /// `max |f(a, b)|`.
    pub fn f_inf(&self) -> f64 {
        self.velocity.iter().map(|f| norm(f, self.dim)).fold(0.0, f64::max)
    }

    /// Channel layout the environment family must provide.
    pub fn channel_layout(&self) -> ChannelLayout {
        match &self.cost {
            CostModel::Field { per_pair: true, .. } => ChannelLayout::PerPair {
                a: self.num_a(),
                b: self.num_b(),
            },
            _ => ChannelLayout::Shared,
        }
    }

    /// Whether the cost reads the environment at all.
    pub fn uses_field(&self) -> bool {
        match &self.cost {
            CostModel::Field { scale, .. } => scale.iter().any(|&s| s != 0.0),
            CostModel::Localized { .. } => true,
            CostModel::Explicit(_) => false,
        }
    }

    pub fn check_env(&self, env: &Environment) -> Result<()> {
        if env.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: env.dim(),
            });
        }
        if let ChannelLayout::PerPair { a, b } = self.channel_layout() {
            if env.spec().channels != (ChannelLayout::PerPair { a, b }) {
                return Err(Error::param(
                    "environment.channels",
                    "per-pair cost fields need a matching per-pair channel layout",
                ));
            }
        }
        Ok(())
    }

    /// The momentum-shifted running cost `l_theta(x, a, b) = l(x, a, b) + <f(a, b), theta>`.
    pub fn cost(&self, x: &[f64], a: usize, b: usize, env: &Environment) -> Result<f64> {
        if a >= self.num_a() || b >= self.num_b() {
            return Err(Error::ActionIndex {
                a,
                b,
                na: self.num_a(),
                nb: self.num_b(),
            });
        }
        let x = to_vec2(x);
        let gb = self.g_at(&x, b, env)?;
        self.cost_pair(&x, a, b, gb, env)
    }

    /// Fill `out[a * |B| + b]` with `l_theta(x, a, b)` for every pair.
    pub fn costs_at(&self, x: &Vec2, env: &Environment, out: &mut [f64]) -> Result<()> {
        let nb = self.num_b();
        for b in 0..nb {
            let gb = self.g_at(x, b, env)?;
            for a in 0..self.num_a() {
                out[a * nb + b] = self.cost_pair(x, a, b, gb, env)?;
            }
        }
        Ok(())
    }

    #[inline]
    fn g_at(&self, x: &Vec2, b: usize, env: &Environment) -> Result<f64> {
        match &self.cost {
            CostModel::Localized { g, .. } => g.eval(x, &to_vec2(&self.actions_b[b]), env),
            CostModel::Field { .. } | CostModel::Explicit(_) => Ok(0.0),
        }
    }

    #[inline]
    fn cost_pair(&self, x: &Vec2, a: usize, b: usize, gb: f64, env: &Environment) -> Result<f64> {
        let ab = a * self.num_b() + b;
        let base = match &self.cost {
            CostModel::Field {
                scale,
                offset,
                per_pair,
            } => {
                let s = scale[ab];
                if s == 0.0 {
                    offset[ab]
                } else {
                    let ch = if *per_pair { ab } else { 0 };
                    s * env.eval_channel(x, ch)? + offset[ab]
                }
            }
            CostModel::Localized { beta, .. } => {
                let pa = &self.actions_a[a];
                let pb = &self.actions_b[b];
                -gb + beta * pa.iter().zip(pb).map(|(u, v)| u * v).sum::<f64>()
            }
            CostModel::Explicit(c) => (c.f)(x, a, b),
        };
        Ok(base + dot(&self.velocity(a, b), &self.theta, self.dim))
    }

    /// `H(x, p) = max_b min_a { -l_theta(x, a, b) - <f(a, b), p> }`, exact over the
    /// finite action sets.
    pub fn eval_h(&self, x: &[f64], p: &[f64], env: &Environment) -> Result<f64> {
        if x.len() != self.dim || p.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: if x.len() != self.dim { x.len() } else { p.len() },
            });
        }
        let x = to_vec2(x);
        let p = to_vec2(p);
        let nb = self.num_b();
        if let (Some(loc), CostModel::Localized { beta, .. }) = (&self.localization, &self.cost) {
            return self.eval_localized(loc, *beta, &x, &p, env);
        }
        let mut best = f64::NEG_INFINITY;
        for b in 0..nb {
            let gb = self.g_at(&x, b, env)?;
            let mut worst = f64::INFINITY;
            for a in 0..self.num_a() {
                let val = -self.cost_pair(&x, a, b, gb, env)? - dot(&self.velocity(a, b), &p, self.dim);
                worst = worst.min(val);
            }
            best = best.max(worst);
        }
        Ok(best)
    }

    // The objective `G(x, b) - beta <a, b> - <f(a), theta + p>` is affine in
    // the action point `a`, so its minimum over the grid sits on an extreme point.
    fn eval_localized(&self, loc: &Localization, beta: f64, x: &Vec2, p: &Vec2, env: &Environment) -> Result<f64> {
        let mut tp = [0.0; MAX_DIM];
        for k in 0..self.dim {
            tp[k] = self.theta[k] + p[k];
        }
        let hull: Vec<(Vec2, f64)> = loc
            .a_hull
            .iter()
            .map(|&a| {
                let pa = to_vec2(&self.actions_a[a]);
                (pa, dot(&self.velocity[a], &tp, self.dim))
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        for pb in &loc.b_points {
            let gb = loc.g.eval(x, pb, env)?;
            let mut worst = f64::INFINITY;
            for (pa, c) in &hull {
                worst = worst.min(-beta * dot(pa, pb, self.dim) - c);
            }
            best = best.max(gb + worst);
        }
        Ok(best)
    }
}

/// Structural constants of a game Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HamiltonianConstants {
    pub dim: usize,
    /// (H1)–(H3) constant: `max(l_inf, f_inf, lip_l)`.
    pub beta: f64,
    /// `min_{a,b} <f(a, b), e>`; positive iff the dynamics are oriented along `e`.
    pub delta: f64,
    pub e: Vec2,
    pub f_inf: f64,
    pub lip_l: f64,
    pub l_inf: f64,
}

impl HamiltonianConstants {
    pub fn is_oriented(&self) -> bool {
        self.delta > 0.0
    }

    pub fn require_oriented(&self) -> Result<&Self> {
        if self.is_oriented() {
            Ok(self)
        } else {
            Err(Error::NotOriented { delta: self.delta })
        }
    }
}

fn orientation_margin(velocity: &[Vec2], e: &Vec2, dim: usize) -> f64 {
    velocity.iter().map(|f| dot(f, e, dim)).fold(f64::INFINITY, f64::min)
}

/// Direction maximizing `min_{a,b} <f(a, b), e>`: a coarse angular scan
/// followed by step-halving ascent. Returns the direction and the achieved margin.
pub fn best_orientation(velocity: &[Vec2], dim: usize) -> (Vec2, f64) {
    if dim == 1 {
        let up = orientation_margin(velocity, &[1.0, 0.0], 1);
        let down = orientation_margin(velocity, &[-1.0, 0.0], 1);
        return if up >= down {
            ([1.0, 0.0], up)
        } else {
            ([-1.0, 0.0], down)
        };
    }
    let at = |ang: f64| {
        let e = [math::cos(ang), math::sin(ang)];
        (e, orientation_margin(velocity, &e, 2))
    };
    let scan = 720;
    let step0 = core::f64::consts::TAU / scan as f64;
    let mut best_ang = 0.0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..scan {
        let ang = i as f64 * step0;
        let (_, m) = at(ang);
        if m > best {
            best = m;
            best_ang = ang;
        }
    }
    let mut h = step0;
    while h > 1e-13 {
        let (_, up) = at(best_ang + h);
        let (_, down) = at(best_ang - h);
        if up > best && up >= down {
            best = up;
            best_ang += h;
        } else if down > best {
            best = down;
            best_ang -= h;
        } else {
            h *= 0.5;
        }
    }
    at(best_ang)
}

/// Certify `(beta, delta, e, ||f||, Lip(l), ||l||)` for `gh` over the
/// environment family. `e` defaults to the localization direction when there
/// is one, otherwise to [`best_orientation`]. A nonpositive `delta` is
/// reported, not rejected; see [`HamiltonianConstants::require_oriented`].
pub fn certify_constants(gh: &GameHamiltonian, family: &EnvSpec, e: Option<&[f64]>) -> Result<HamiltonianConstants> {
    let dim = gh.dim;
    let (e, delta) = match e {
        Some(e) => {
            if e.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: e.len(),
                });
            }
            let e = to_vec2(e);
            if (norm(&e, dim) - 1.0).abs() > 1e-12 {
                return Err(Error::param("orientation", "e must be a unit vector"));
            }
            (e, orientation_margin(&gh.velocity, &e, dim))
        }
        None => match gh.orientation_hint {
            Some(e) => (e, orientation_margin(&gh.velocity, &e, dim)),
            None => best_orientation(&gh.velocity, dim),
        },
    };
    let f_inf = gh.f_inf();
    let (l_inf, lip_l) = match &gh.cost {
        CostModel::Field { scale, offset, .. } => {
            let sup = family.sup_bound();
            let lip = family.lipschitz_bound();
            let mut l_inf: f64 = 0.0;
            let mut lip_l: f64 = 0.0;
            for (ab, (&s, &o)) in scale.iter().zip(offset).enumerate() {
                let o = o + dot(&gh.velocity(ab / gh.num_b(), ab % gh.num_b()), &gh.theta, dim);
                l_inf = l_inf.max(o.abs()).max((o + s * sup).abs());
                if s != 0.0 {
                    lip_l = lip_l.max(s.abs() * lip);
                }
            }
            (l_inf, lip_l)
        }
        CostModel::Localized { g, beta } => {
            let ra = gh.actions_a.iter().map(|a| norm(&to_vec2(a), dim)).fold(0.0, f64::max);
            let rb = gh.actions_b.iter().map(|b| norm(&to_vec2(b), dim)).fold(0.0, f64::max);
            let shift = gh
                .velocity
                .iter()
                .map(|f| dot(f, &gh.theta, dim).abs())
                .fold(0.0, f64::max);
            (g.beta(family) * (1.0 + rb) + beta * ra * rb + shift, g.lip_x(family))
        }
        CostModel::Explicit(c) => {
            let shift = gh
                .velocity
                .iter()
                .map(|f| dot(f, &gh.theta, dim).abs())
                .fold(0.0, f64::max);
            (c.sup + shift, c.lip)
        }
    };
    let beta = l_inf.max(f_inf).max(lip_l);
    Ok(HamiltonianConstants {
        dim,
        beta,
        delta,
        e,
        f_inf,
        lip_l,
        l_inf,
    })
}

/// Fold a momentum shift into the cost: `H_shifted(x, p) = H(x, theta + p)`.
pub fn shift_momentum(gh: &GameHamiltonian, theta: &[f64]) -> Result<GameHamiltonian> {
    if theta.len() != gh.dim {
        return Err(Error::Dimension {
            expected: gh.dim,
            got: theta.len(),
        });
    }
    let mut out = gh.clone();
    for k in 0..gh.dim {
        out.theta[k] += theta[k];
    }
    Ok(out)
}

/// Tensor grid with `n` points per axis on `[-radius, radius]^d`; points
/// outside the closed ball are pulled radially onto its boundary so the grid
/// reaches the sphere in every direction.
pub fn ball_grid(dim: usize, radius: f64, n: usize) -> Vec<Vec<f64>> {
    let coord = |i: usize| radius * (-1.0 + 2.0 * i as f64 / (n - 1) as f64);
    let mut pts = Vec::new();
    if dim == 1 {
        for i in 0..n {
            pts.push(vec![coord(i)]);
        }
    } else {
        for j in 0..n {
            for i in 0..n {
                let mut p = [coord(i), coord(j)];
                let r = norm(&p, 2);
                if r > radius {
                    p = [p[0] * radius / r, p[1] * radius / r];
                }
                pts.push(p.to_vec());
            }
        }
    }
    pts
}

/// Indices of the extreme points of a planar point set (monotone chain), or
/// of the two end points on a line.
fn extreme_points(points: &[Vec<f64>], dim: usize) -> Vec<usize> {
    let n = points.len();
    if dim == 1 || n <= 2 {
        let mut lo = 0;
        let mut hi = 0;
        for i in 0..n {
            if points[i][0] < points[lo][0] {
                lo = i;
            }
            if points[i][0] > points[hi][0] {
                hi = i;
            }
        }
        let mut v = vec![lo];
        if hi != lo {
            v.push(hi);
        }
        return v;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        points[i][0]
            .total_cmp(&points[j][0])
            .then(points[i][1].total_cmp(&points[j][1]))
    });
    let cross = |o: usize, a: usize, b: usize| {
        (points[a][0] - points[o][0]) * (points[b][1] - points[o][1])
            - (points[a][1] - points[o][1]) * (points[b][0] - points[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * n);
    for &i in &idx {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    let lower = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

/// Represent `H(x, p) = G(x, pi(p)) + <p, v>` in max-min form on `|p| <= radius`:
/// `A` = grid on the unit ball, `B` = grid on the ball of radius `radius`,
/// `l(x, a, b) = -G(x, b) + beta <a, b>` and `f(a) = pi^T(-beta a) - v`.
/// The dynamics are oriented along `e = -v/|v|` with `delta = |v|`.
pub fn localize(
    g: Arc<dyn LipschitzHamiltonian>,
    beta: f64,
    radius: f64,
    v: &[f64],
    pi: &[[f64; MAX_DIM]; MAX_DIM],
    n_a: usize,
    n_b: usize,
) -> Result<GameHamiltonian> {
    let dim = g.dim();
    if v.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: v.len(),
        });
    }
    if n_a < 2 || n_b < 2 {
        return Err(Error::param("localized.grid", "need at least 2 points per axis"));
    }
    if !(beta > 0.0) || !(radius > 0.0) {
        return Err(Error::param("localized", "beta and radius must be positive"));
    }
    let v = to_vec2(v);
    let vnorm = norm(&v, dim);
    if vnorm == 0.0 {
        return Err(Error::param("localized.v", "v must be nonzero"));
    }
    let mut pi_v = [0.0; MAX_DIM];
    for i in 0..dim {
        for j in 0..dim {
            pi_v[i] += pi[i][j] * v[j];
        }
    }
    let residual = norm(&pi_v, dim);
    if residual > 1e-12 * vnorm {
        return Err(Error::PiKillsV { residual });
    }
    let actions_a = ball_grid(dim, 1.0, n_a);
    let actions_b = ball_grid(dim, radius, n_b);
    let mut velocity = Vec::with_capacity(actions_a.len());
    for a in &actions_a {
        // (pi^T y)_j = sum_i pi[i][j] y_i with y = -beta a
        let mut f = [0.0; MAX_DIM];
        for j in 0..dim {
            for i in 0..dim {
                f[j] += pi[i][j] * (-beta * a[i]);
            }
            f[j] -= v[j];
        }
        velocity.push(f);
    }
    let a_hull = extreme_points(&actions_a, dim);
    let b_points = actions_b.iter().map(|b| to_vec2(b)).collect();
    let mut gh = GameHamiltonian::new(
        dim,
        actions_a,
        actions_b,
        velocity,
        CostModel::Localized { g: g.clone(), beta },
    )?;
    let mut e = [0.0; MAX_DIM];
    for k in 0..dim {
        e[k] = -v[k] / vnorm;
    }
    gh.orientation_hint = Some(e);
    gh.localization = Some(Localization {
        g,
        v,
        pi: *pi,
        radius,
        a_hull,
        b_points,
    });
    Ok(gh)
}

/// Worst discrepancy between a localized game and its target on random probes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalizationReport {
    pub max_error: f64,
    pub probes: usize,
    /// Probes placed exactly on the sphere `|p| = R`.
    pub boundary_probes: usize,
}

/// Sup over random `(x, |p| <= R)` of `|H_gh(x, p) - (G(x, pi p) + <p, v>)|`.
/// Every fourth probe sits on the boundary sphere.
pub fn verify_localization(
    gh: &GameHamiltonian,
    env: &Environment,
    probes: usize,
    seed: u64,
) -> Result<LocalizationReport> {
    let loc = gh
        .localization
        .as_ref()
        .ok_or_else(|| Error::param("verify_localization", "Hamiltonian was not produced by localize"))?;
    if gh.theta.iter().any(|&t| t != 0.0) {
        return Err(Error::param("verify_localization", "expects an unshifted Hamiltonian"));
    }
    let dim = gh.dim;
    let bounds = &env.spec().bounds;
    let mut rng = SplitMix64::new(seed);
    let mut max_error: f64 = 0.0;
    let mut boundary_probes = 0;
    for i in 0..probes {
        let mut x = [0.0; MAX_DIM];
        for k in 0..dim {
            x[k] = rng.uniform(bounds.lo[k], bounds.hi[k]);
        }
        let on_sphere = i % 4 == 0;
        let mut p = [0.0; MAX_DIM];
        if dim == 1 {
            let s = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
            p[0] = s * if on_sphere {
                loc.radius
            } else {
                loc.radius * rng.next_f64()
            };
        } else {
            let ang = rng.uniform(0.0, core::f64::consts::TAU);
            let r = if on_sphere {
                loc.radius
            } else {
                loc.radius * math::sqrt(rng.next_f64())
            };
            p = [r * math::cos(ang), r * math::sin(ang)];
        }
        if on_sphere {
            boundary_probes += 1;
        }
        let mut pp = [0.0; MAX_DIM];
        for r in 0..dim {
            for c in 0..dim {
                pp[r] += loc.pi[r][c] * p[c];
            }
        }
        let target = loc.g.eval(&x, &pp, env)? + dot(&p, &loc.v, dim);
        let got = gh.eval_h(&x[..dim], &p[..dim], env)?;
        max_error = max_error.max((got - target).abs());
    }
    Ok(LocalizationReport {
        max_error,
        probes,
        boundary_probes,
    })
}
