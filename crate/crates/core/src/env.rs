//! Stationary random running costs with a certified finite range of dependence.
//!
//! A field is built from i.i.d. amplitudes `xi_z` attached to the cells `z` of
//! the shifted lattice `o + rho Z^d`, where the offset `o` is uniform in
//! `[0, rho)^d`. With the default [`Kernel::Bump`] the cost is
//!
//! ```text
//! l(x, a, b) = sum_z xi_z(a, b) * phi((x - z) / r),   phi(s) = (1 - |s|^2)^2 on |s| <= 1,
//! ```
//!
//! and because `r <= rho / 2` a probe only ever reads the amplitude of its
//! nearest lattice site. Sets of probes more than `rho` apart therefore read
//! disjoint amplitudes, which is what makes the dependence range auditable.
//! Amplitudes are never stored; they are hashed from `(seed, z, channel)`.

use alloc::vec::Vec;

use crate::hash;
use crate::math;
use crate::{to_vec2, Error, Result, Vec2, MAX_DIM};

/// Lipschitz constant of the bump profile `s -> (1 - s^2)^2`, attained at `s = 1/sqrt 3`.
pub const BUMP_LIPSCHITZ: f64 = 1.539_600_717_839_002; // 8 / (3 sqrt 3)

const OFFSET_TAG: u64 = 0x4F46_4653;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Kernel {
    /// Smooth C^1 bumps of radius `r` centred on the lattice sites.
    Bump,
    /// Piecewise constant on lattice cells; not Lipschitz, but its path
    /// integrals have exactly independent increments.
    Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ChannelLayout {
    /// One field shared by every action pair.
    Shared,
    /// An independent field per action pair `(a, b)`.
    PerPair { a: usize, b: usize },
}

impl ChannelLayout {
    pub fn count(&self) -> usize {
        match *self {
            ChannelLayout::Shared => 1,
            ChannelLayout::PerPair { a, b } => a * b,
        }
    }
}

/// Axis-aligned box in R^d.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        Self {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }
}

/// Parameters of a random environment. The seed selects the realization.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct EnvSpec {
    pub dim: usize,
    /// Dependence range `rho` (lattice spacing).
    pub range: f64,
    /// Bump radius `r`, at most `rho / 2`.
    pub radius: f64,
    /// Amplitude range `[l_lo, l_hi]`, nonnegative.
    pub amplitude: [f64; 2],
    pub channels: ChannelLayout,
    pub bounds: Bounds,
    pub seed: u64,
    pub kernel: Kernel,
}

impl EnvSpec {
    /// A one-dimensional bump field on `bounds`, shared channel.
    pub fn bump_1d(range: f64, radius: f64, amplitude: [f64; 2], lo: f64, hi: f64, seed: u64) -> Self {
        Self {
            dim: 1,
            range,
            radius,
            amplitude,
            channels: ChannelLayout::Shared,
            bounds: Bounds::new(&[lo], &[hi]),
            seed,
            kernel: Kernel::Bump,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::param("environment.dim", "must be 1 or 2"));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::param("environment.range", "dependence range must be positive"));
        }
        if !(self.radius > 0.0) {
            return Err(Error::param("environment.radius", "bump radius must be positive"));
        }
        if self.radius > 0.5 * self.range {
            return Err(Error::param(
                "environment.radius",
                "bump radius above range/2 would break the dependence-range certificate",
            ));
        }
        let [lo, hi] = self.amplitude;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::param("environment.amplitude", "need 0 <= lo <= hi < inf"));
        }
        if self.channels.count() == 0 {
            return Err(Error::param("environment.channels", "at least one channel"));
        }
        if self.bounds.lo.len() != self.dim || self.bounds.hi.len() != self.dim {
            return Err(Error::param("environment.bounds", "box dimension differs from dim"));
        }
        if self.bounds.lo.iter().zip(&self.bounds.hi).any(|(l, h)| !(l < h)) {
            return Err(Error::param("environment.bounds", "box is empty"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_bounds(&self, lo: &[f64], hi: &[f64]) -> Self {
        Self {
            bounds: Bounds::new(lo, hi),
            ..self.clone()
        }
    }

    /// Fixed kernel-overlap count used by the sup certificate: `2^d`.
    pub fn kappa(&self) -> f64 {
        (1usize << self.dim) as f64
    }

    /// Certified `sup |l|`.
    pub fn sup_bound(&self) -> f64 {
        match self.kernel {
            Kernel::Bump => self.kappa() * self.amplitude[1],
            Kernel::Cell => self.amplitude[1],
        }
    }

    /// Certified Lipschitz constant in `x` (infinite for the cell kernel).
    pub fn lipschitz_bound(&self) -> f64 {
        match self.kernel {
            Kernel::Bump => self.kappa() * self.amplitude[1] * BUMP_LIPSCHITZ / self.radius,
            Kernel::Cell => f64::INFINITY,
        }
    }

    /// `E[l(x, a, b)]`, identical for every `x` thanks to the random offset.
    pub fn mean(&self) -> f64 {
        let amp = 0.5 * (self.amplitude[0] + self.amplitude[1]);
        match self.kernel {
            Kernel::Cell => amp,
            Kernel::Bump => {
                let r = self.radius / self.range;
                let mass = if self.dim == 1 {
                    16.0 / 15.0 * r
                } else {
                    core::f64::consts::PI / 3.0 * r * r
                };
                amp * mass
            }
        }
    }
}

/// Identifies one hashed amplitude: a lattice site and a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub site: [i64; MAX_DIM],
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Patch {
    Shift(Vec2),
    Strip {
        lo: f64,
        hi: f64,
        normal: Vec2,
        shift: Vec2,
    },
}

/// One realization `omega` of the random running cost, possibly viewed
/// through translations and strip replacements. Immutable and cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    spec: EnvSpec,
    offset: Vec2,
    lo: Vec2,
    hi: Vec2,
    patches: Vec<Patch>,
}

/// Sample the environment selected by `spec.seed`.
pub fn sample_environment(spec: &EnvSpec) -> Result<Environment> {
    Environment::sample(spec)
}

impl Environment {
    pub fn sample(spec: &EnvSpec) -> Result<Self> {
        spec.validate()?;
        let mut offset = [0.0; MAX_DIM];
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..spec.dim {
            offset[k] = spec.range * hash::unit(hash::keyed(spec.seed, &[OFFSET_TAG, k as u64]));
            lo[k] = spec.bounds.lo[k] - spec.radius;
            hi[k] = spec.bounds.hi[k] + spec.radius;
        }
        Ok(Self {
            spec: spec.clone(),
            offset,
            lo,
            hi,
            patches: Vec::new(),
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn offset(&self) -> Vec2 {
        self.offset
    }

    /// Channel index of the action pair, validated against the layout.
    pub fn channel(&self, a: usize, b: usize) -> Result<usize> {
        match self.spec.channels {
            ChannelLayout::Shared => Ok(0),
            ChannelLayout::PerPair { a: na, b: nb } => {
                if a >= na || b >= nb {
                    Err(Error::ActionIndex { a, b, na, nb })
                } else {
                    Ok(a * nb + b)
                }
            }
        }
    }

    /// `l(x, a, b, omega)`.
    pub fn eval_cost(&self, x: &[f64], a: usize, b: usize) -> Result<f64> {
        self.check_dim(x.len())?;
        let ch = self.channel(a, b)?;
        self.eval_channel(&to_vec2(x), ch)
    }

    /// Evaluate one channel at a point; the allocation-free hot path.
    #[inline]
    pub fn eval_channel(&self, x: &Vec2, channel: usize) -> Result<f64> {
        let y = self.transform(*x);
        self.check_domain(&y)?;
        Ok(self.base_value(&y, channel, &mut |_| {}))
    }

    /// Amplitude keys read by a probe (dependence-range instrumentation).
    pub fn cell_keys(&self, x: &[f64], a: usize, b: usize) -> Result<Vec<CellKey>> {
        self.check_dim(x.len())?;
        let ch = self.channel(a, b)?;
        let y = self.transform(to_vec2(x));
        self.check_domain(&y)?;
        let mut keys = Vec::new();
        self.base_value(&y, ch, &mut |k| keys.push(k));
        Ok(keys)
    }

    /// The translated environment `tau_y omega`: `l(x, view) = l(x + y, self)`.
    pub fn shift_view(&self, y: &[f64]) -> Result<Environment> {
        self.check_dim(y.len())?;
        let mut out = self.clone();
        out.patches.push(Patch::Shift(to_vec2(y)));
        Ok(out)
    }

    /// Replace the cost on the strip `{lo <= <x, e> <= hi}` by the cost read at
    /// `x - shift`; outside the strip the field is unchanged.
    pub fn replace_on_strip(&self, lo: f64, hi: f64, e: &[f64], shift: &[f64]) -> Result<Environment> {
        self.check_dim(e.len())?;
        self.check_dim(shift.len())?;
        if !(lo < hi) {
            return Err(Error::DegenerateStrip { lo, hi });
        }
        let normal = to_vec2(e);
        if (math::norm(&normal, self.dim()) - 1.0).abs() > 1e-12 {
            return Err(Error::param("strip.normal", "must be a unit vector"));
        }
        let mut out = self.clone();
        out.patches.push(Patch::Strip {
            lo,
            hi,
            normal,
            shift: to_vec2(shift),
        });
        Ok(out)
    }

    /// Samples of every channel on a lattice of spacing `step` covering the box.
    pub fn dump(&self, step: f64) -> Result<Vec<(Vec2, usize, usize, f64)>> {
        if !(step > 0.0) {
            return Err(Error::param("dump.step", "must be positive"));
        }
        let d = self.dim();
        let mut counts = [1usize; MAX_DIM];
        for k in 0..d {
            counts[k] = (math::floor((self.spec.bounds.hi[k] - self.spec.bounds.lo[k]) / step) as usize) + 1;
        }
        let (na, nb) = match self.spec.channels {
            ChannelLayout::Shared => (1, 1),
            ChannelLayout::PerPair { a, b } => (a, b),
        };
        let mut rows = Vec::with_capacity(counts[0] * counts[1] * na * nb);
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let mut x = [0.0; MAX_DIM];
                x[0] = self.spec.bounds.lo[0] + i as f64 * step;
                if d == 2 {
                    x[1] = self.spec.bounds.lo[1] + j as f64 * step;
                }
                for a in 0..na {
                    for b in 0..nb {
                        let ch = self.channel(a, b)?;
                        rows.push((x, a, b, self.eval_channel(&x, ch)?));
                    }
                }
            }
        }
        Ok(rows)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            Err(Error::Dimension {
                expected: self.dim(),
                got,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    fn transform(&self, mut x: Vec2) -> Vec2 {
        let d = self.dim();
        for patch in self.patches.iter().rev() {
            match patch {
                Patch::Shift(y) => {
                    for k in 0..d {
                        x[k] += y[k];
                    }
                }
                Patch::Strip { lo, hi, normal, shift } => {
                    let s = math::dot(&x, normal, d);
                    if s >= *lo && s <= *hi {
                        for k in 0..d {
                            x[k] -= shift[k];
                        }
                    }
                }
            }
        }
        x
    }

    #[inline]
    fn check_domain(&self, y: &Vec2) -> Result<()> {
        for k in 0..self.dim() {
            if !(y[k] >= self.lo[k] && y[k] <= self.hi[k]) {
                return Err(Error::OutOfDomain {
                    x: y[0],
                    y: y[1],
                    lo: self.lo,
                    hi: self.hi,
                });
            }
        }
        Ok(())
    }

    #[inline]
    fn amplitude(&self, site: &[i64; MAX_DIM], channel: usize) -> f64 {
        let h = hash::keyed(self.spec.seed, &[site[0] as u64, site[1] as u64, channel as u64]);
        let [lo, hi] = self.spec.amplitude;
        lo + (hi - lo) * hash::unit(h)
    }

    #[inline]
    fn base_value(&self, y: &Vec2, channel: usize, trace: &mut dyn FnMut(CellKey)) -> f64 {
        let d = self.dim();
        let rho = self.spec.range;
        let mut site = [0i64; MAX_DIM];
        match self.spec.kernel {
            Kernel::Cell => {
                for k in 0..d {
                    site[k] = math::floor((y[k] - self.offset[k]) / rho) as i64;
                }
                trace(CellKey { site, channel });
                self.amplitude(&site, channel)
            }
            Kernel::Bump => {
                let mut s2 = 0.0;
                for k in 0..d {
                    let idx = math::round((y[k] - self.offset[k]) / rho);
                    site[k] = idx as i64;
                    let dz = (y[k] - self.offset[k] - idx * rho) / self.spec.radius;
                    s2 += dz * dz;
                }
                if s2 >= 1.0 {
                    return 0.0;
                }
                trace(CellKey { site, channel });
                let w = 1.0 - s2;
                self.amplitude(&site, channel) * w * w
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::SplitMix64;
    use std::collections::BTreeSet;

    fn spec_1d(seed: u64) -> EnvSpec {
        EnvSpec::bump_1d(1.0, 0.5, [0.0, 1.0], -50.0, 50.0, seed)
    }

    fn spec_2d(seed: u64) -> EnvSpec {
        EnvSpec {
            dim: 2,
            range: 1.0,
            radius: 0.4,
            amplitude: [0.2, 1.5],
            channels: ChannelLayout::PerPair { a: 2, b: 3 },
            bounds: Bounds::new(&[-5.0, -5.0], &[5.0, 5.0]),
            seed,
            kernel: Kernel::Bump,
        }
    }

    #[test]
    fn rejects_radius_above_half_range() {
        let mut s = spec_1d(1);
        s.radius = 0.6;
        assert!(matches!(
            Environment::sample(&s),
            Err(Error::InvalidParameter {
                field: "environment.radius",
                ..
            })
        ));
    }

    #[test]
    fn rejects_bad_boxes_and_amplitudes() {
        let mut s = spec_1d(1);
        s.amplitude = [1.0, 0.5];
        assert!(Environment::sample(&s).is_err());
        let mut s = spec_1d(1);
        s.bounds = Bounds::new(&[1.0], &[1.0]);
        assert!(Environment::sample(&s).is_err());
        let mut s = spec_1d(1);
        s.range = -1.0;
        assert!(Environment::sample(&s).is_err());
    }

    #[test]
    fn constant_amplitude_is_scaled_bump_sum() {
        let mut s = spec_1d(9);
        s.amplitude = [0.7, 0.7];
        s.radius = 0.3;
        let env = Environment::sample(&s).unwrap();
        let o = env.offset()[0];
        let mut rng = SplitMix64::new(3);
        for _ in 0..200 {
            let x = rng.uniform(-40.0, 40.0);
            let z = o + math::round((x - o) / 1.0);
            let sr = (x - z) / 0.3;
            let expect = if sr.abs() < 1.0 {
                0.7 * (1.0 - sr * sr) * (1.0 - sr * sr)
            } else {
                0.0
            };
            assert!((env.eval_cost(&[x], 0, 0).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_values() {
        let a = Environment::sample(&spec_2d(11)).unwrap();
        let b = Environment::sample(&spec_2d(11)).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..1000 {
            let x = [rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)];
            let (i, j) = (rng.index(2), rng.index(3));
            assert_eq!(
                a.eval_cost(&x, i, j).unwrap().to_bits(),
                b.eval_cost(&x, i, j).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn values_within_certified_range() {
        for seed in 0..5 {
            let s = spec_2d(seed);
            let env = Environment::sample(&s).unwrap();
            let mut rng = SplitMix64::new(seed);
            for _ in 0..2000 {
                let x = [rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)];
                let v = env.eval_cost(&x, rng.index(2), rng.index(3)).unwrap();
                assert!(v >= 0.0 && v <= s.sup_bound());
            }
        }
    }

    #[test]
    fn lipschitz_probe() {
        for s in [spec_1d(4), spec_2d(4)] {
            let env = Environment::sample(&s).unwrap();
            let lip = s.lipschitz_bound();
            let mut rng = SplitMix64::new(77);
            let d = s.dim;
            for _ in 0..1000 {
                let mut x = [0.0; 2];
                let mut y = [0.0; 2];
                for k in 0..d {
                    x[k] = rng.uniform(-4.0, 4.0);
                    y[k] = x[k] + rng.uniform(-1e-2, 1e-2);
                }
                let (a, b) = if d == 2 { (rng.index(2), rng.index(3)) } else { (0, 0) };
                let lx = env.eval_cost(&x[..d], a, b).unwrap();
                let ly = env.eval_cost(&y[..d], a, b).unwrap();
                let dist = math::norm(&[x[0] - y[0], x[1] - y[1]], d);
                assert!((lx - ly).abs() <= lip * dist + 1e-15);
            }
        }
    }

    #[test]
    fn out_of_box_probe_is_an_error() {
        let s = spec_2d(1);
        let env = Environment::sample(&s).unwrap();
        let r = s.radius;
        assert!(env.eval_cost(&[5.0 + r, 5.0 + r], 0, 0).is_ok());
        assert!(matches!(
            env.eval_cost(&[5.0 + 2.0 * r, 5.0 + 2.0 * r], 0, 0),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(matches!(env.eval_cost(&[0.0], 0, 0), Err(Error::Dimension { .. })));
        assert!(matches!(
            env.eval_cost(&[0.0, 0.0], 2, 0),
            Err(Error::ActionIndex { .. })
        ));
    }

    #[test]
    fn shift_view_identity_and_group_law() {
        let env = Environment::sample(&spec_2d(3)).unwrap();
        let id = env.shift_view(&[0.0, 0.0]).unwrap();
        let composed = env.shift_view(&[0.5, -0.25]).unwrap().shift_view(&[0.75, 1.0]).unwrap();
        let single = env.shift_view(&[1.25, 0.75]).unwrap();
        let mut rng = SplitMix64::new(1);
        for _ in 0..100 {
            let x = [rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)];
            assert_eq!(id.eval_cost(&x, 1, 2).unwrap(), env.eval_cost(&x, 1, 2).unwrap());
            let moved = [x[0] + 1.25, x[1] + 0.75];
            assert_eq!(
                single.eval_cost(&x, 1, 2).unwrap(),
                env.eval_cost(&moved, 1, 2).unwrap()
            );
            assert!((composed.eval_cost(&x, 1, 2).unwrap() - single.eval_cost(&x, 1, 2).unwrap()).abs() < 1e-12);
        }
        assert!(single.eval_cost(&[4.5, 0.0], 0, 0).is_err());
    }

    #[test]
    fn strip_replacement_contract() {
        let env = Environment::sample(&spec_1d(8)).unwrap();
        let same = env.replace_on_strip(-1.0, 2.0, &[1.0], &[0.0]).unwrap();
        let hat = env.replace_on_strip(-1.0, 2.0, &[1.0], &[3.0]).unwrap();
        let mut rng = SplitMix64::new(2);
        for _ in 0..500 {
            let x = rng.uniform(-10.0, 10.0);
            assert_eq!(same.eval_cost(&[x], 0, 0).unwrap(), env.eval_cost(&[x], 0, 0).unwrap());
            let expect = if (-1.0..=2.0).contains(&x) {
                env.eval_cost(&[x - 3.0], 0, 0).unwrap()
            } else {
                env.eval_cost(&[x], 0, 0).unwrap()
            };
            assert_eq!(hat.eval_cost(&[x], 0, 0).unwrap(), expect);
        }
        assert!(matches!(
            env.replace_on_strip(1.0, 1.0, &[1.0], &[0.0]),
            Err(Error::DegenerateStrip { .. })
        ));
    }

    #[test]
    fn strip_difference_bounded_by_lipschitz_times_shift() {
        let s = spec_1d(21);
        let env = Environment::sample(&s).unwrap();
        let hat = env.replace_on_strip(0.0, 3.0, &[1.0], &[0.2]).unwrap();
        for i in 0..=3000 {
            let x = i as f64 * 1e-3;
            let diff = (hat.eval_cost(&[x], 0, 0).unwrap() - env.eval_cost(&[x], 0, 0).unwrap()).abs();
            assert!(diff <= s.lipschitz_bound() * 0.2);
        }
    }

    #[test]
    fn far_apart_probe_sets_use_disjoint_keys() {
        for s in [spec_1d(5), spec_2d(5)] {
            let env = Environment::sample(&s).unwrap();
            let d = s.dim;
            let mut rng = SplitMix64::new(99);
            for _ in 0..200 {
                let mut p = [0.0; 2];
                let mut q = [0.0; 2];
                for k in 0..d {
                    p[k] = rng.uniform(-3.0, 3.0);
                }
                // random direction, distance just above rho
                let dist = s.range * (1.0 + 1e-6 + rng.next_f64());
                if d == 1 {
                    q[0] = p[0] + if rng.next_f64() < 0.5 { dist } else { -dist };
                } else {
                    let ang = rng.uniform(0.0, core::f64::consts::TAU);
                    q[0] = p[0] + dist * math::cos(ang);
                    q[1] = p[1] + dist * math::sin(ang);
                }
                let (a, b) = if d == 2 { (1, 2) } else { (0, 0) };
                let kp: BTreeSet<CellKey> = env.cell_keys(&p[..d], a, b).unwrap().into_iter().collect();
                let kq: BTreeSet<CellKey> = env.cell_keys(&q[..d], a, b).unwrap().into_iter().collect();
                assert!(kp.is_disjoint(&kq));
            }
        }
    }

    #[test]
    fn cell_kernel_is_piecewise_constant() {
        let mut s = spec_1d(2);
        s.kernel = Kernel::Cell;
        let env = Environment::sample(&s).unwrap();
        let o = env.offset()[0];
        let a = env.eval_cost(&[o + 0.1], 0, 0).unwrap();
        let b = env.eval_cost(&[o + 0.9], 0, 0).unwrap();
        assert_eq!(a, b);
        assert!(s.lipschitz_bound().is_infinite());
        assert_eq!(s.mean(), 0.5);
    }

    #[test]
    fn dump_covers_all_channels() {
        let mut s = spec_2d(1);
        s.bounds = Bounds::new(&[0.0, 0.0], &[1.0, 1.0]);
        let env = Environment::sample(&s).unwrap();
        let rows = env.dump(0.5).unwrap();
        assert_eq!(rows.len(), 9 * 6);
    }

    #[test]
    fn covariance_vanishes_beyond_range() {
        // Probes 1.5 apart at fixed positions relative to the lattice read
        // amplitudes of different sites. The offset is shared by the whole
        // field, so it is held fixed here.
        let n = 10_000;
        let mut u = alloc::vec::Vec::with_capacity(n);
        let mut v = alloc::vec::Vec::with_capacity(n);
        for seed in 0..n as u64 {
            let env = Environment::sample(&spec_1d(seed)).unwrap();
            let o = env.offset()[0];
            u.push(env.eval_cost(&[o + 0.2], 0, 0).unwrap());
            v.push(env.eval_cost(&[o + 1.7], 0, 0).unwrap());
        }
        let (mu, mv) = (math::mean(&u), math::mean(&v));
        let prods: alloc::vec::Vec<f64> = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).collect();
        let cov = math::mean(&prods);
        let se = math::sqrt(math::variance(&prods) / n as f64);
        assert!(cov.abs() < 3.0 * se, "cov {cov} se {se}");
    }

    #[test]
    fn shifted_marginal_matches_in_law() {
        // Two-sample Kolmogorov-Smirnov on disjoint seed banks.
        let n = 10_000;
        let mut base = alloc::vec::Vec::with_capacity(n);
        let mut moved = alloc::vec::Vec::with_capacity(n);
        for i in 0..n as u64 {
            let env = Environment::sample(&spec_1d(i)).unwrap();
            base.push(env.eval_cost(&[0.0], 0, 0).unwrap());
            let other = Environment::sample(&spec_1d(i + n as u64)).unwrap();
            moved.push(other.shift_view(&[0.37]).unwrap().eval_cost(&[0.0], 0, 0).unwrap());
        }
        base.sort_by(f64::total_cmp);
        moved.sort_by(f64::total_cmp);
        let (mut i, mut j, mut ks) = (0usize, 0usize, 0.0f64);
        while i < n && j < n {
            let x = base[i].min(moved[j]);
            while i < n && base[i] <= x {
                i += 1;
            }
            while j < n && moved[j] <= x {
                j += 1;
            }
            ks = ks.max((i as f64 - j as f64).abs() / n as f64);
        }
        let critical = 1.628 * math::sqrt(2.0 / n as f64);
        assert!(ks < critical, "KS {ks} >= {critical}");
    }
}
