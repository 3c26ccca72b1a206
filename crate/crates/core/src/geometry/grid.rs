//! Uniform grids on the flat torus and on a Euclidean ball.
//!
//! Real coordinates are ordered `(x_1, y_1, x_2, y_2, ..., x_n, y_n)` with
//! `z_j = x_j + i y_j`, and nodes are stored in row-major lexicographic order
//! of the integer node coordinates (the last axis varies fastest).

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Periodic grid on `C^n / (period Z)^{2n}` with `n = 2m`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusGrid<T> {
    m: usize,
    res: usize,
    period: T,
}

impl<T: Real> TorusGrid<T> {
    pub fn new(m: usize, res: usize, period: T) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidGrid(format!("quaternionic dimension m must be >= 1, got {m}")));
        }
        if res < 4 || res % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "res must be even and >= 4 for symmetric spectral differentiation, got {res}"
            )));
        }
        if !(period > T::zero()) || !period.is_finite() {
            return Err(Error::InvalidGrid("period must be positive and finite".into()));
        }
        let dim = 4 * m;
        if (res as f64).powi(dim as i32) > 1.0e9 {
            return Err(Error::InvalidGrid(format!("res^{dim} nodes is beyond what this tool handles")));
        }
        Ok(Self { m, res, period })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    /// Complex dimension.
    pub fn n(&self) -> usize {
        2 * self.m
    }
    /// Real dimension.
    pub fn dim(&self) -> usize {
        4 * self.m
    }
    pub fn res(&self) -> usize {
        self.res
    }
    pub fn period(&self) -> T {
        self.period
    }
    pub fn spacing(&self) -> T {
        self.period / from_usize(self.res)
    }
    pub fn len(&self) -> usize {
        self.res.pow(self.dim() as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn volume(&self) -> T {
        self.period.powi(self.dim() as i32)
    }
    /// Quadrature weight of one node.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim() as i32)
    }

    /// Integer node coordinates of a flat index.
    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.res;
            idx /= self.res;
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.res + i)
    }

    /// Real coordinates of a node, in `[0, period)`.
    pub fn coords(&self, idx: usize) -> Vec<T> {
        let mut mi = vec![0; self.dim()];
        self.multi_index(idx, &mut mi);
        let h = self.spacing();
        mi.into_iter().map(|i| from_usize::<T>(i) * h).collect()
    }

    /// Flat index of the node at `multi + offset`, wrapping periodically.
    pub fn shifted(&self, multi: &[usize], offset: &[i64]) -> usize {
        let r = self.res as i64;
        multi.iter().zip(offset).fold(0usize, |acc, (&i, &o)| {
            let j = ((i as i64 + o) % r + r) % r;
            acc * self.res + j as usize
        })
    }
}

/// Classification of a ball-grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Strictly inside the open ball; carries an unknown in Dirichlet problems.
    Interior,
    /// Not interior, but an axis neighbour of an interior node.
    Boundary,
    Exterior,
}

/// Uniform grid on the box `center + [-radius, radius]^{2n}` with
/// `radius = half * spacing`, masked to the ball `B(center, radius)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallGrid<T> {
    n: usize,
    center: Vec<T>,
    half: usize,
    spacing: T,
    mask: Vec<NodeKind>,
}

impl<T: Real> BallGrid<T> {
    /// `half` is the number of grid steps per radius, so each axis carries
    /// `2*half + 1` nodes.
    pub fn new(n: usize, center: Vec<T>, half: usize, spacing: T) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidGrid("complex dimension must be >= 1".into()));
        }
        if center.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: center.len() });
        }
        if half < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 steps per radius, got {half}")));
        }
        if !(spacing > T::zero()) {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        let dim = 2 * n;
        let side = 2 * half + 1;
        let len = side.pow(dim as u32);
        let r2 = (half * half) as i64;
        let mut mask = vec![NodeKind::Exterior; len];
        let mut off = vec![0i64; dim];
        for (idx, m) in mask.iter_mut().enumerate() {
            offsets_of(idx, side, half, &mut off);
            if off.iter().map(|o| o * o).sum::<i64>() < r2 {
                *m = NodeKind::Interior;
            }
        }
        let mut stride = vec![1usize; dim];
        for a in (0..dim - 1).rev() {
            stride[a] = stride[a + 1] * side;
        }
        for idx in 0..len {
            if mask[idx] != NodeKind::Interior {
                continue;
            }
            offsets_of(idx, side, half, &mut off);
            for a in 0..dim {
                for s in [-1i64, 1] {
                    let o = off[a] + s;
                    if o.unsigned_abs() as usize > half {
                        continue;
                    }
                    let j = (idx as i64 + s * stride[a] as i64) as usize;
                    if mask[j] == NodeKind::Exterior {
                        mask[j] = NodeKind::Boundary;
                    }
                }
            }
        }
        Ok(Self { n, center, half, spacing, mask })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        2 * self.n
    }
    pub fn center(&self) -> &[T] {
        &self.center
    }
    pub fn half(&self) -> usize {
        self.half
    }
    pub fn side(&self) -> usize {
        2 * self.half + 1
    }
    pub fn spacing(&self) -> T {
        self.spacing
    }
    pub fn radius(&self) -> T {
        from_usize::<T>(self.half) * self.spacing
    }
    pub fn len(&self) -> usize {
        self.mask.len()
    }
    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
    pub fn mask(&self) -> &[NodeKind] {
        &self.mask
    }
    pub fn kind(&self, idx: usize) -> NodeKind {
        self.mask[idx]
    }
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim() as i32)
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, k)| **k == NodeKind::Interior).map(|(i, _)| i)
    }

    /// Integer offsets from the center, each in `[-half, half]`.
    pub fn offsets(&self, idx: usize, out: &mut [i64]) {
        offsets_of(idx, self.side(), self.half, out);
    }

    pub fn index_of_offsets(&self, off: &[i64]) -> Option<usize> {
        let h = self.half as i64;
        let side = self.side();
        let mut acc = 0usize;
        for &o in off {
            if o < -h || o > h {
                return None;
            }
            acc = acc * side + (o + h) as usize;
        }
        Some(acc)
    }

    /// Squared Euclidean distance to the center in grid units.
    pub fn radius2_units(&self, idx: usize) -> i64 {
        let mut off = vec![0i64; self.dim()];
        self.offsets(idx, &mut off);
        off.iter().map(|o| o * o).sum()
    }

    /// `|z - x_0|^2` of a node.
    pub fn dist2(&self, idx: usize) -> T {
        from_usize::<T>(self.radius2_units(idx) as usize) * self.spacing * self.spacing
    }

    pub fn coords(&self, idx: usize) -> Vec<T> {
        let mut off = vec![0i64; self.dim()];
        self.offsets(idx, &mut off);
        off.iter()
            .zip(&self.center)
            .map(|(&o, &c)| c + lit::<T>(o as f64) * self.spacing)
            .collect()
    }
}

fn offsets_of(mut idx: usize, side: usize, half: usize, out: &mut [i64]) {
    for a in (0..out.len()).rev() {
        out[a] = (idx % side) as i64 - half as i64;
        idx /= side;
    }
}

/// Either grid kind; fields carry a shared handle to one of these.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid<T> {
    Torus(TorusGrid<T>),
    Ball(BallGrid<T>),
}

impl<T: Real> Grid<T> {
    pub fn len(&self) -> usize {
        match self {
            Grid::Torus(t) => t.len(),
            Grid::Ball(b) => b.len(),
        }
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Complex dimension.
    pub fn n(&self) -> usize {
        match self {
            Grid::Torus(t) => t.n(),
            Grid::Ball(b) => b.n(),
        }
    }
    pub fn cell_volume(&self) -> T {
        match self {
            Grid::Torus(t) => t.cell_volume(),
            Grid::Ball(b) => b.cell_volume(),
        }
    }
    /// Quadrature weight of a node: uniform on the torus, restricted to
    /// interior nodes on the ball.
    pub fn weight(&self, idx: usize) -> T {
        match self {
            Grid::Torus(t) => t.cell_volume(),
            Grid::Ball(b) => {
                if b.kind(idx) == NodeKind::Interior {
                    b.cell_volume()
                } else {
                    T::zero()
                }
            }
        }
    }
    pub fn coords(&self, idx: usize) -> Vec<T> {
        match self {
            Grid::Torus(t) => t.coords(idx),
            Grid::Ball(b) => b.coords(idx),
        }
    }
    pub fn as_torus(&self) -> Option<&TorusGrid<T>> {
        match self {
            Grid::Torus(t) => Some(t),
            Grid::Ball(_) => None,
        }
    }
    pub fn as_ball(&self) -> Option<&BallGrid<T>> {
        match self {
            Grid::Ball(b) => Some(b),
            Grid::Torus(_) => None,
        }
    }
}
