//! Sampled convex functions on boxes in the negative orthant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for discrete convexity and monotonicity checks.
pub const TOL_CONV: f64 = 1e-9;

/// A uniform axis with `len` nodes from `lo` to `hi` (inclusive).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, len: usize) -> Self {
        assert!(len >= 1 && hi >= lo, "bad axis [{lo}, {hi}] x {len}");
        Axis { lo, hi, len }
    }

    /// Axis `[lo, hi]` with spacing `h`; `h` must divide the length.
    pub fn with_step(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(hi > lo) {
            return Err(Error::InvalidInput(format!("bad axis [{lo}, {hi}] step {h}")));
        }
        let cells = (hi - lo) / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-6 * cells.max(1.0) || rounded < 1.0 {
            return Err(Error::InvalidInput(format!("step {h} does not divide [{lo}, {hi}]")));
        }
        Ok(Axis::new(lo, hi, rounded as usize + 1))
    }

    pub fn step(&self) -> f64 {
        if self.len > 1 {
            (self.hi - self.lo) / (self.len - 1) as f64
        } else {
            0.0
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.len {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.node(i)).collect()
    }
}

/// Row-major box grid; the last axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxGrid {
    pub axes: Vec<Axis>,
}

impl BoxGrid {
    pub fn new(axes: Vec<Axis>) -> Self {
        BoxGrid { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.len).product()
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape())
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.axes[k].len;
            flat /= self.axes[k].len;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.len + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.node(i))
            .collect()
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Convex function sampled on the cube `[-S, 0]^n` with spacing `h`, extended
/// beyond `s_i = -S` with slope `tail_slopes[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRaw", into = "GridRaw")]
pub struct GridConvex {
    n: usize,
    side: f64,
    h: f64,
    values: Vec<f64>,
    tail_slopes: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GridRaw {
    n: usize,
    #[serde(rename = "S")]
    side: f64,
    h: f64,
    values: Vec<f64>,
    tail_slopes: Vec<f64>,
}

impl TryFrom<GridRaw> for GridConvex {
    type Error = Error;

    fn try_from(r: GridRaw) -> Result<Self> {
        GridConvex::new(r.n, r.side, r.h, r.values, r.tail_slopes)
    }
}

impl From<GridConvex> for GridRaw {
    fn from(g: GridConvex) -> Self {
        GridRaw {
            n: g.n,
            side: g.side,
            h: g.h,
            values: g.values,
            tail_slopes: g.tail_slopes,
        }
    }
}

impl GridConvex {
    /// Validated constructor with the default tolerance [`TOL_CONV`].
    pub fn new(n: usize, side: f64, h: f64, values: Vec<f64>, tail_slopes: Vec<f64>) -> Result<Self> {
        let g = Self::unchecked(n, side, h, values, tail_slopes)?;
        g.validate(TOL_CONV)?;
        Ok(g)
    }

    /// Checks shapes only; used for intermediate arrays such as `u + v`.
    pub(crate) fn unchecked(n: usize, side: f64, h: f64, values: Vec<f64>, tail_slopes: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidInput(format!("dimension {n} not in 1..=3")));
        }
        let axis = Axis::with_step(-side, 0.0, h)?;
        let expected = axis.len.pow(n as u32);
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if tail_slopes.len() != n {
            return Err(Error::DimensionMismatch(tail_slopes.len(), n));
        }
        if let Some(&t) = tail_slopes.iter().find(|&&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::NegativeSlope(t));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite grid value".into()));
        }
        Ok(GridConvex {
            n,
            side,
            h,
            values,
            tail_slopes,
        })
    }

    /// Samples `f` at the grid nodes.
    pub fn sample(n: usize, side: f64, h: f64, tail_slopes: Vec<f64>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let axis = Axis::with_step(-side, 0.0, h)?;
        let grid = BoxGrid::new(vec![axis; n]);
        let values = (0..grid.size()).map(|i| f(&grid.point(i))).collect();
        Self::new(n, side, h, values, tail_slopes)
    }

    pub(crate) fn from_box_values(like: &Self, values: Vec<f64>, tail_slopes: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), like.values.len());
        GridConvex {
            values,
            tail_slopes,
            ..like.clone()
        }
    }

    /// Nonpositivity, coordinatewise monotonicity and midpoint convexity along
    /// axis-parallel and diagonal segments.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some(&v) = self.values.iter().find(|&&v| v > tol) {
            return Err(Error::PositivityViolation { value: v });
        }
        let grid = self.grid();
        let strides = grid.strides();
        let len = grid.axes[0].len;
        for flat in 0..grid.size() {
            let idx = grid.multi_index(flat);
            for k in 0..self.n {
                if idx[k] + 1 < len {
                    let next = self.values[flat + strides[k]];
                    if next < self.values[flat] - tol {
                        return Err(Error::NegativeSlope((next - self.values[flat]) / self.h));
                    }
                }
            }
            for dir in stencil(self.n) {
                let fwd = offset(&idx, &dir, 1, len);
                let bwd = offset(&idx, &dir, -1, len);
                if let (Some(f), Some(b)) = (fwd, bwd) {
                    let mid = self.values[flat];
                    let avg = 0.5 * (self.values[grid.flat_index(&f)] + self.values[grid.flat_index(&b)]);
                    if mid > avg + tol {
                        return Err(Error::NonConvexInput {
                            index: flat,
                            previous: avg,
                            value: mid,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_slopes(&self) -> &[f64] {
        &self.tail_slopes
    }

    pub fn axis(&self) -> Axis {
        Axis::with_step(-self.side, 0.0, self.h).expect("validated at construction")
    }

    pub fn grid(&self) -> BoxGrid {
        BoxGrid::new(vec![self.axis(); self.n])
    }

    pub fn is_bounded(&self) -> bool {
        self.tail_slopes.iter().all(|&t| t == 0.0)
    }

    pub fn compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.side != other.side || self.h != other.h {
            return Err(Error::IncompatibleGrids(format!(
                "(n={}, S={}, h={}) vs (n={}, S={}, h={})",
                self.n, self.side, self.h, other.n, other.side, other.h
            )));
        }
        Ok(())
    }

    /// Multilinear interpolation, clamped to `s <= 0` and extended linearly
    /// with the tail slopes below `-S`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.n);
        let axis = self.axis();
        let cells = axis.len - 1;
        let mut tail = 0.0;
        let mut base = Vec::with_capacity(self.n);
        let mut frac = Vec::with_capacity(self.n);
        for (k, &x) in point.iter().enumerate() {
            let mut x = x.min(0.0);
            if x < -self.side {
                tail += self.tail_slopes[k] * (x + self.side);
                x = -self.side;
            }
            let pos = (x + self.side) / self.h;
            let i = (pos.floor() as usize).min(cells.saturating_sub(1));
            base.push(i);
            frac.push((pos - i as f64).clamp(0.0, 1.0));
        }
        let grid = self.grid();
        let mut acc = 0.0;
        for corner in 0..(1usize << self.n) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for k in 0..self.n {
                if corner >> k & 1 == 1 {
                    w *= frac[k];
                    idx[k] = (idx[k] + 1).min(cells);
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[grid.flat_index(&idx)];
            }
        }
        acc + tail
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        let tails = self
            .tail_slopes
            .iter()
            .zip(&other.tail_slopes)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_box_values(self, values, tails))
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0);
        Self::from_box_values(
            self,
            self.values.iter().map(|v| v * c).collect(),
            self.tail_slopes.iter().map(|t| t * c).collect(),
        )
    }

    pub fn affine_combination(u0: &Self, u1: &Self, t: f64) -> Result<Self> {
        u0.scale(1.0 - t).add(&u1.scale(t))
    }

    /// `max{f, c}`; the tails become flat when truncation reaches them.
    pub fn max_const(&self, c: f64) -> Self {
        let values = self.values.iter().map(|v| v.max(c)).collect();
        Self::from_box_values(self, values, vec![0.0; self.n])
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest forward difference quotient along each axis.
    pub fn max_slopes(&self) -> Vec<f64> {
        forward_dq_range(&self.grid(), &self.values)
            .into_iter()
            .map(|(_, hi)| hi)
            .collect()
    }

    /// `sup |f|` over the box.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Nonzero directions in `{-1,0,1}^n`, one per antipodal pair.
pub(crate) fn stencil(n: usize) -> Vec<Vec<i64>> {
    let mut dirs = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut d = vec![0i64; n];
        for item in d.iter_mut() {
            *item = (c % 3) as i64 - 1;
            c /= 3;
        }
        // keep the representative whose first nonzero entry is positive
        if let Some(&first) = d.iter().find(|&&x| x != 0) {
            if first > 0 {
                dirs.push(d);
            }
        }
    }
    dirs
}

fn offset(idx: &[usize], dir: &[i64], sign: i64, len: usize) -> Option<Vec<usize>> {
    idx.iter()
        .zip(dir)
        .map(|(&i, &d)| {
            let j = i as i64 + sign * d;
            (0..len as i64).contains(&j).then_some(j as usize)
        })
        .collect()
}

/// Per-axis `(min, max)` of forward difference quotients of `values`.
pub(crate) fn forward_dq_range(grid: &BoxGrid, values: &[f64]) -> Vec<(f64, f64)> {
    let strides = grid.strides();
    let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); grid.dim()];
    for flat in 0..grid.size() {
        let idx = grid.multi_index(flat);
        for k in 0..grid.dim() {
            if idx[k] + 1 < grid.axes[k].len && values[flat].is_finite() {
                let next = values[flat + strides[k]];
                if next.is_finite() {
                    let q = (next - values[flat]) / grid.axes[k].step();
                    out[k].0 = out[k].0.min(q);
                    out[k].1 = out[k].1.max(q);
                }
            }
        }
    }
    for r in &mut out {
        if r.0 > r.1 {
            *r = (0.0, 0.0);
        }
    }
    out
}

/// A function on the slab `[-S, 0]^n x [0, 1]`; the last grid axis is `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlabFunction {
    pub n: usize,
    pub side: f64,
    pub h: f64,
    pub t_axis: Axis,
    pub grid: BoxGrid,
    pub values: Vec<f64>,
    /// Tail slopes of the spatial slices.
    pub tail_slopes: Vec<f64>,
}

impl SlabFunction {
    pub fn t_steps(&self) -> usize {
        self.t_axis.len
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t_axis.node(k)
    }

    /// Index of the row closest to `t`.
    pub fn row_index(&self, t: f64) -> usize {
        let k = ((t - self.t_axis.lo) / self.t_axis.step()).round();
        (k.max(0.0) as usize).min(self.t_axis.len - 1)
    }

    /// Spatial slice at row `k` as a grid function (not re-validated).
    pub fn slice(&self, k: usize) -> GridConvex {
        let rows = self.t_axis.len;
        let values: Vec<f64> = self.values.iter().skip(k).step_by(rows).copied().collect();
        GridConvex {
            n: self.n,
            side: self.side,
            h: self.h,
            values,
            tail_slopes: self.tail_slopes.clone(),
        }
    }

    /// Largest violation of midpoint convexity along all stencil directions
    /// of the joint `(s, t)` grid.
    pub fn convexity_defect(&self) -> f64 {
        midpoint_convexity_defect(&self.grid, &self.values)
    }
}

pub(crate) fn midpoint_convexity_defect(grid: &BoxGrid, values: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let shape = grid.shape();
    for flat in 0..grid.size() {
        let idx = grid.multi_index(flat);
        for dir in stencil(grid.dim()) {
            let f = offset_shape(&idx, &dir, 1, &shape);
            let b = offset_shape(&idx, &dir, -1, &shape);
            if let (Some(f), Some(b)) = (f, b) {
                let avg = 0.5 * (values[grid.flat_index(&f)] + values[grid.flat_index(&b)]);
                worst = worst.max(values[flat] - avg);
            }
        }
    }
    worst
}

fn offset_shape(idx: &[usize], dir: &[i64], sign: i64, shape: &[usize]) -> Option<Vec<usize>> {
    idx.iter()
        .zip(dir)
        .zip(shape)
        .map(|((&i, &d), &len)| {
            let j = i as i64 + sign * d;
            (0..len as i64).contains(&j).then_some(j as usize)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner(side: f64, h: f64) -> GridConvex {
        GridConvex::sample(2, side, h, vec![0.0, 0.0], |s| s[0].max(s[1]).max(-1.0)).unwrap()
    }

    #[test]
    fn axis_requires_dividing_step() {
        assert_eq!(Axis::with_step(-8.0, 0.0, 0.05).unwrap().len, 161);
        assert!(Axis::with_step(-1.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn eval_interpolates_and_extends() {
        let g = corner(4.0, 0.5);
        assert_eq!(g.eval(&[-0.5, -2.0]), -0.5);
        assert!((g.eval(&[-0.25, -3.0]) + 0.25).abs() < 1e-12);
        assert_eq!(g.eval(&[-10.0, -10.0]), -1.0);
        let lin = GridConvex::sample(1, 2.0, 0.5, vec![1.0], |s| s[0]).unwrap();
        assert_eq!(lin.eval(&[-5.0]), -5.0);
    }

    #[test]
    fn validation_rejects_bad_data() {
        let bad = GridConvex::sample(1, 2.0, 1.0, vec![0.0], |s| -s[0] - 2.0);
        assert!(bad.is_err());
        let concave = GridConvex::new(1, 2.0, 1.0, vec![-2.0, -0.5, 0.0], vec![0.0]);
        assert!(matches!(concave, Err(Error::NonConvexInput { .. })));
        let pos = GridConvex::new(1, 2.0, 1.0, vec![-1.0, 0.0, 0.5], vec![0.0]);
        assert!(matches!(pos, Err(Error::PositivityViolation { .. })));
    }

    #[test]
    fn json_round_trip() {
        let g = corner(2.0, 0.5);
        let js = serde_json::to_string(&g).unwrap();
        assert!(js.contains("\"S\":2.0"));
        let back: GridConvex = serde_json::from_str(&js).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn stencil_sizes() {
        assert_eq!(stencil(1).len(), 1);
        assert_eq!(stencil(2).len(), 4);
        assert_eq!(stencil(3).len(), 13);
    }
}
