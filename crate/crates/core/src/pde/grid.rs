use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result, Vec2, MAX_DIM};

/// Uniform grid whose nodes sit at integer multiples of `dx`: node `i` on
/// axis `k` has coordinate `(lo_index[k] + i) dx`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    pub dim: usize,
    pub lo_index: [i64; MAX_DIM],
    pub dx: f64,
    /// Nodes per axis; 1 on unused axes.
    pub n: [usize; MAX_DIM],
}

impl Grid {
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    #[inline]
    pub fn coord(&self, k: usize, i: usize) -> f64 {
        (self.lo_index[k] + i as i64) as f64 * self.dx
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        let mut x = [0.0; MAX_DIM];
        x[0] = self.coord(0, i);
        if self.dim > 1 {
            x[1] = self.coord(1, j);
        }
        x
    }

    /// Lowest and highest node coordinates.
    pub fn extent(&self) -> (Vec2, Vec2) {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..self.dim {
            lo[k] = self.coord(k, 0);
            hi[k] = self.coord(k, self.n[k] - 1);
        }
        (lo, hi)
    }
}

/// A grid function at time `t`, trustworthy on the inclusive index box `active`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Field {
    pub grid: Grid,
    pub t: f64,
    pub values: Vec<f64>,
    /// `[lo, hi]` node indices per axis.
    pub active: [[usize; 2]; MAX_DIM],
}

impl Field {
    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        (self.active[0][0]..=self.active[0][1]).contains(&i) && (self.active[1][0]..=self.active[1][1]).contains(&j)
    }

    /// Number of active nodes.
    pub fn active_len(&self) -> usize {
        (self.active[0][1] + 1 - self.active[0][0]) * (self.active[1][1] + 1 - self.active[1][0])
    }

    /// Coordinates of the active box corners.
    pub fn active_bounds(&self) -> (Vec2, Vec2) {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for k in 0..self.dim() {
            lo[k] = self.grid.coord(k, self.active[k][0]);
            hi[k] = self.grid.coord(k, self.active[k][1]);
        }
        (lo, hi)
    }

    /// Active nodes as `(i, j, x, u)`.
    pub fn active_nodes(&self) -> impl Iterator<Item = (usize, usize, Vec2, f64)> + '_ {
        let [a0, a1] = self.active;
        (a1[0]..=a1[1]).flat_map(move |j| (a0[0]..=a0[1]).map(move |i| (i, j, self.grid.node(i, j), self.at(i, j))))
    }

    /// Active nodes whose coordinates lie in `[lo, hi]` (with a tiny slack).
    pub fn nodes_in<'a>(
        &'a self,
        lo: &'a [f64],
        hi: &'a [f64],
    ) -> impl Iterator<Item = (usize, usize, Vec2, f64)> + 'a {
        let tol = 1e-9 * self.grid.dx;
        self.active_nodes()
            .filter(move |(_, _, x, _)| (0..self.dim()).all(|k| x[k] >= lo[k] - tol && x[k] <= hi[k] + tol))
    }

    /// Multilinear interpolation at `x`, exact at nodes. Fails outside the active box.
    pub fn sample(&self, x: &[f64]) -> Result<f64> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: x.len(),
            });
        }
        let mut base = [0usize; MAX_DIM];
        let mut w = [0.0; MAX_DIM];
        for k in 0..dim {
            let s = x[k] / self.grid.dx - self.grid.lo_index[k] as f64;
            let r = math::round(s);
            let (b, frac) = if (s - r).abs() <= 1e-9 {
                (r, 0.0)
            } else {
                (math::floor(s), s - math::floor(s))
            };
            let lo = self.active[k][0] as f64;
            let hi = self.active[k][1] as f64;
            if b < lo || b > hi || (frac > 0.0 && b + 1.0 > hi) {
                return Err(Error::OutsideActive {
                    x: x[0],
                    y: if dim > 1 { x[1] } else { 0.0 },
                });
            }
            base[k] = b as usize;
            w[k] = frac;
        }
        let mut acc = 0.0;
        for c1 in 0..(if dim > 1 { 2 } else { 1 }) {
            let w1 = if dim > 1 {
                if c1 == 0 {
                    1.0 - w[1]
                } else {
                    w[1]
                }
            } else {
                1.0
            };
            if w1 == 0.0 {
                continue;
            }
            for c0 in 0..2 {
                let w0 = if c0 == 0 { 1.0 - w[0] } else { w[0] };
                if w0 == 0.0 {
                    continue;
                }
                acc += w0 * w1 * self.at(base[0] + c0, base[1] + c1);
            }
        }
        Ok(acc)
    }

    /// Largest axis-aligned difference quotient over active neighbours.
    pub fn max_space_quotient(&self) -> f64 {
        let mut q: f64 = 0.0;
        for (i, j, _, u) in self.active_nodes() {
            if i < self.active[0][1] {
                q = q.max((self.at(i + 1, j) - u).abs());
            }
            if self.dim() > 1 && j < self.active[1][1] {
                q = q.max((self.at(i, j + 1) - u).abs());
            }
        }
        q / self.grid.dx
    }
}
