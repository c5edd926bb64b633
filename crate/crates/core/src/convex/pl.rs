//! Exact piecewise-linear convex functions on the half line `(-inf, 0]`.
//!
//! A radial (or, more generally, toric in one variable) plurisubharmonic
//! function `u` on the unit disk is encoded by `s -> u(e^s)`, a convex
//! nondecreasing function of the log-modulus `s <= 0`. For piecewise-linear
//! data every pluripotential quantity in one variable is computed exactly:
//! Monge-Ampere masses are slope jumps, geodesics are Legendre
//! interpolations, and envelopes are lower hulls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slopes closer than this (relative) are merged by the derived-function
/// constructors. User input goes through [`PlConvex::new`] which only merges
/// exactly equal slopes.
const MERGE_EPS: f64 = 1e-13;
/// Relative spacing below which two knots count as one.
const KNOT_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlRaw", into = "PlRaw")]
pub struct PlConvex {
    /// Strictly increasing, all `< 0`.
    breakpoints: Vec<f64>,
    /// One slope per interval, strictly increasing, all `>= 0`.
    slopes: Vec<f64>,
    /// Value at `s = 0`.
    anchor: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PlRaw {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    anchor: f64,
}

impl TryFrom<PlRaw> for PlConvex {
    type Error = Error;

    fn try_from(raw: PlRaw) -> Result<Self> {
        PlConvex::new(raw.breakpoints, raw.slopes, raw.anchor)
    }
}

impl From<PlConvex> for PlRaw {
    fn from(f: PlConvex) -> Self {
        PlRaw {
            breakpoints: f.breakpoints,
            slopes: f.slopes,
            anchor: f.anchor,
        }
    }
}

impl PlConvex {
    /// Validates convex nondecreasing data. The anchor may be positive here:
    /// shifted functions such as `u + C` are legitimate intermediates.
    pub fn new(breakpoints: Vec<f64>, slopes: Vec<f64>, anchor: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if !anchor.is_finite() || breakpoints.iter().chain(&slopes).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite value".into()));
        }
        for w in breakpoints.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(format!(
                    "breakpoints not strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&b) = breakpoints.last() {
            if b > 0.0 {
                return Err(Error::InvalidInput(format!("breakpoint {b} > 0")));
            }
        }
        for (i, w) in slopes.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::NonConvexInput {
                    index: i + 1,
                    previous: w[0],
                    value: w[1],
                });
            }
        }
        if slopes[0] < 0.0 {
            return Err(Error::NegativeSlope(slopes[0]));
        }
        let mut f = PlConvex {
            breakpoints,
            slopes,
            anchor,
        };
        f.canonicalize(0.0);
        Ok(f)
    }

    /// Constructor for toric functions: additionally requires values `<= 0`.
    pub fn toric(breakpoints: Vec<f64>, slopes: Vec<f64>, anchor: f64) -> Result<Self> {
        if anchor > 0.0 {
            return Err(Error::PositivityViolation { value: anchor });
        }
        Self::new(breakpoints, slopes, anchor)
    }

    pub fn zero() -> Self {
        Self::affine(0.0, 0.0)
    }

    /// `s -> slope * s + anchor`.
    pub fn affine(slope: f64, anchor: f64) -> Self {
        assert!(slope >= 0.0, "negative slope");
        PlConvex {
            breakpoints: vec![],
            slopes: vec![slope],
            anchor,
        }
    }

    /// Pointwise maximum of the lines `slope * s + intercept` restricted to `s <= 0`.
    pub fn max_of_lines(lines: &[(f64, f64)]) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&(a, _)) = lines.iter().find(|(a, _)| *a < 0.0) {
            return Err(Error::NegativeSlope(a));
        }
        let mut sorted: Vec<(f64, f64)> = lines.to_vec();
        // by slope, ties keep the larger intercept first
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.total_cmp(&x.1)));
        sorted.dedup_by(|later, earlier| later.0 == earlier.0);

        // upper envelope, scanning slopes upward (left to right in s)
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for line in sorted {
            while hull.len() >= 2 {
                let (a1, c1) = hull[hull.len() - 2];
                let (a2, c2) = hull[hull.len() - 1];
                // x12: where line1 meets line2; x13: where line1 meets the new line
                let x12 = (c1 - c2) / (a2 - a1);
                let x13 = (c1 - line.1) / (line.0 - a1);
                if x13 <= x12 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(line);
        }
        // discard lines that only win for s > 0
        let mut breakpoints = Vec::new();
        let mut slopes = vec![hull[0].0];
        let mut anchor_line = hull[0];
        for w in hull.windows(2) {
            let x = (w[0].1 - w[1].1) / (w[1].0 - w[0].0);
            if x >= 0.0 {
                break;
            }
            breakpoints.push(x);
            slopes.push(w[1].0);
            anchor_line = w[1];
        }
        let mut f = PlConvex {
            breakpoints,
            slopes,
            anchor: anchor_line.1,
        };
        f.canonicalize(MERGE_EPS);
        Ok(f)
    }

    /// Builds a function from values at knots (ascending, the last one at `0`)
    /// and the slope left of the first knot. Tolerates rounding-level
    /// non-convexity.
    pub(crate) fn from_knots(knots: &[f64], values: &[f64], left_slope: f64) -> Self {
        debug_assert_eq!(knots.len(), values.len());
        debug_assert!(knots.last().is_some_and(|&k| k == 0.0));
        // knots within rounding of their predecessor would yield noise slopes
        let close = |a: f64, b: f64| b - a <= KNOT_EPS * (1.0 + a.abs().max(b.abs()));
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
        for (&x, &v) in knots.iter().zip(values) {
            match kept.last() {
                Some(&(prev, _)) if close(prev, x) => {
                    if x == 0.0 {
                        kept.pop();
                        kept.push((x, v));
                    }
                }
                _ => kept.push((x, v)),
            }
        }
        let mut breakpoints = Vec::with_capacity(kept.len());
        let mut slopes = vec![left_slope];
        for w in kept.windows(2) {
            breakpoints.push(w[0].0);
            slopes.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        let mut f = PlConvex {
            breakpoints,
            slopes,
            anchor: *values.last().unwrap(),
        };
        f.canonicalize(MERGE_EPS);
        f
    }

    /// Merges consecutive slopes that agree within `eps` (relative) and
    /// clamps rounding-level decreases.
    fn canonicalize(&mut self, eps: f64) {
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut slopes = Vec::with_capacity(self.slopes.len());
        slopes.push(self.slopes[0].max(0.0));
        for (i, &b) in self.breakpoints.iter().enumerate() {
            let next = self.slopes[i + 1];
            let last = *slopes.last().unwrap();
            if next - last <= eps * (1.0 + last.abs().max(next.abs())) {
                continue;
            }
            if b >= 0.0 {
                break;
            }
            bps.push(b);
            slopes.push(next);
        }
        // a breakpoint at 0 carries no interval
        self.breakpoints = bps;
        self.slopes = slopes;
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Asymptotic slope as `s -> -inf`; positive means a logarithmic pole.
    pub fn tail_slope(&self) -> f64 {
        self.slopes[0]
    }

    pub fn right_slope(&self) -> f64 {
        *self.slopes.last().unwrap()
    }

    pub fn is_bounded(&self) -> bool {
        self.tail_slope() == 0.0
    }

    pub fn is_zero_boundary(&self) -> bool {
        self.anchor == 0.0
    }

    /// Values at the breakpoints, left to right.
    pub fn knot_values(&self) -> Vec<f64> {
        let m = self.breakpoints.len();
        let mut vals = vec![0.0; m];
        let mut right_x = 0.0;
        let mut right_v = self.anchor;
        for i in (0..m).rev() {
            let b = self.breakpoints[i];
            right_v -= self.slopes[i + 1] * (right_x - b);
            right_x = b;
            vals[i] = right_v;
        }
        vals
    }

    pub fn eval(&self, s: f64) -> f64 {
        let m = self.breakpoints.len();
        let idx = self.breakpoints.partition_point(|&b| b < s);
        // s lies in interval idx, whose right end is breakpoints[idx] or 0
        let mut right_x = 0.0;
        let mut right_v = self.anchor;
        for i in (idx..m).rev() {
            let b = self.breakpoints[i];
            right_v -= self.slopes[i + 1] * (right_x - b);
            right_x = b;
        }
        right_v + self.slopes[idx] * (s - right_x)
    }

    /// Slope of the piece containing `s` (left derivative at breakpoints).
    pub fn slope_at(&self, s: f64) -> f64 {
        self.slopes[self.breakpoints.partition_point(|&b| b < s)]
    }

    /// `inf f`, which is `-inf` for functions with a pole.
    pub fn infimum(&self) -> f64 {
        if !self.is_bounded() {
            return f64::NEG_INFINITY;
        }
        self.knot_values().first().copied().unwrap_or(self.anchor)
    }

    /// `sup |f|` on `(-inf, 0]`.
    pub fn sup_norm(&self) -> f64 {
        self.infimum().abs().max(self.anchor.abs())
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0, "scaling by a negative factor breaks convexity");
        if c == 0.0 {
            return Self::affine(0.0, 0.0);
        }
        PlConvex {
            breakpoints: self.breakpoints.clone(),
            slopes: self.slopes.iter().map(|a| a * c).collect(),
            anchor: self.anchor * c,
        }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        PlConvex {
            anchor: self.anchor + c,
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let knots = merge_sorted(&self.breakpoints, &other.breakpoints);
        let mut slopes = Vec::with_capacity(knots.len() + 1);
        for x in interval_probes(&knots) {
            slopes.push(self.slope_at(x) + other.slope_at(x));
        }
        let mut f = PlConvex {
            breakpoints: knots,
            slopes,
            anchor: self.anchor + other.anchor,
        };
        f.canonicalize(MERGE_EPS);
        f
    }

    /// `(1 - t) u0 + t u1`.
    pub fn affine_combination(u0: &Self, u1: &Self, t: f64) -> Self {
        u0.scale(1.0 - t).add(&u1.scale(t))
    }

    pub fn max(&self, other: &Self) -> Self {
        let (knots, values) = pointwise_knots(self, other, f64::max);
        let left = self.tail_slope().min(other.tail_slope());
        Self::from_knots(&knots, &values, left)
    }

    /// `max{f, c}` for a constant `c`.
    pub fn max_const(&self, c: f64) -> Self {
        self.max(&Self::affine(0.0, c))
    }

    /// Largest convex nondecreasing minorant of `min{self, other}`.
    pub fn min_envelope(&self, other: &Self) -> Self {
        let (knots, values) = pointwise_knots(self, other, f64::min);
        let left = self.tail_slope().max(other.tail_slope());
        let points: Vec<(f64, f64)> = knots.into_iter().zip(values).collect();
        hull_from_sorted(&points, left)
    }

    /// Sup distance on `(-inf, 0]`; infinite when the tails diverge.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        if self.tail_slope() != other.tail_slope() {
            return f64::INFINITY;
        }
        let mut knots = merge_sorted(&self.breakpoints, &other.breakpoints);
        knots.push(0.0);
        knots
            .iter()
            .map(|&x| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Legendre-Fenchel conjugate `p -> sup_{s <= 0} (p s - f(s))`.
    pub fn conjugate(&self) -> SlopePl {
        SlopePl {
            p_min: self.slopes[0],
            knots: self.slopes[1..].to_vec(),
            slopes: self.breakpoints.clone(),
            tail_value: -self.anchor,
        }
    }
}

/// Largest convex minorant on `(-inf, 0]` with asymptotic slope at least
/// `tail_slope` of the given samples. A constraint `f(0) <= 0` is added when
/// no sample sits at `s = 0`.
pub fn lower_envelope_1d(samples: &[(f64, f64)], tail_slope: f64) -> Result<PlConvex> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if tail_slope < 0.0 || !tail_slope.is_finite() {
        return Err(Error::NegativeSlope(tail_slope));
    }
    let mut pts: Vec<(f64, f64)> = samples.to_vec();
    if let Some(&(x, _)) = pts.iter().find(|(x, y)| *x > 0.0 || !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidInput(format!("sample at s = {x} outside (-inf, 0]")));
    }
    if !pts.iter().any(|&(x, _)| x == 0.0) {
        pts.push((0.0, 0.0));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|later, earlier| later.0 == earlier.0);
    Ok(hull_from_sorted(&pts, tail_slope))
}

/// Lower hull of points sorted by `x` (distinct, last at `x = 0`) together with
/// the ray of slope `left` issuing from each point to the left.
fn hull_from_sorted(points: &[(f64, f64)], left: f64) -> PlConvex {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it is on or above the chord a-p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    // the ray from a later vertex undercuts any leading segment flatter than `left`
    let mut start = 0;
    while start + 1 < hull.len() {
        let (a, b) = (hull[start], hull[start + 1]);
        if (b.1 - a.1) / (b.0 - a.0) <= left {
            start += 1;
        } else {
            break;
        }
    }
    let hull = &hull[start..];
    let knots: Vec<f64> = hull.iter().map(|p| p.0).collect();
    let values: Vec<f64> = hull.iter().map(|p| p.1).collect();
    PlConvex::from_knots(&knots, &values, left)
}

/// Knots (including crossings and the terminal `0`) and `op`-combined values.
fn pointwise_knots(u: &PlConvex, v: &PlConvex, op: fn(f64, f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut base = merge_sorted(&u.breakpoints, &v.breakpoints);
    base.push(0.0);
    let diff = |x: f64| u.eval(x) - v.eval(x);
    let mut knots = Vec::with_capacity(2 * base.len() + 1);

    // crossing in the left tail, where both are affine
    let (su, sv) = (u.tail_slope(), v.tail_slope());
    if su != sv {
        let x = base[0] - diff(base[0]) / (su - sv);
        if x < base[0] {
            knots.push(x);
        }
    }
    knots.push(base[0]);
    for w in base.windows(2) {
        let (d0, d1) = (diff(w[0]), diff(w[1]));
        if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
            let x = w[0] + (w[1] - w[0]) * d0 / (d0 - d1);
            if x > w[0] && x < w[1] {
                knots.push(x);
            }
        }
        knots.push(w[1]);
    }
    let values = knots.iter().map(|&x| op(u.eval(x), v.eval(x))).collect();
    (knots, values)
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Knots of all `fs`, one interior point per gap, the origin and a point on
/// the common left tail: enough to locate extrema of differences.
pub(crate) fn probe_points(fs: &[&PlConvex]) -> Vec<f64> {
    let mut knots: Vec<f64> = Vec::new();
    for f in fs {
        knots = merge_sorted(&knots, &f.breakpoints);
    }
    let mut probes = merge_sorted(&knots, &interval_probes(&knots));
    probes.push(0.0);
    probes.dedup();
    probes
}

/// One interior point per interval of the partition of `(-inf, 0)` by `knots`.
fn interval_probes(knots: &[f64]) -> Vec<f64> {
    let mut probes = Vec::with_capacity(knots.len() + 1);
    match knots.first() {
        Some(&k) => probes.push(k - 1.0),
        None => probes.push(-1.0),
    }
    for w in knots.windows(2) {
        probes.push(0.5 * (w[0] + w[1]));
    }
    if let Some(&k) = knots.last() {
        probes.push(0.5 * k);
    }
    probes
}

/// Convex nonincreasing function on `[p_min, inf)`, the conjugate of a
/// [`PlConvex`]. It is `+inf` for `p < p_min` and constant beyond its last knot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopePl {
    pub p_min: f64,
    /// Strictly increasing, all `> p_min`.
    pub knots: Vec<f64>,
    /// Slope on `[p_min, knots[0]]`, `[knots[0], knots[1]]`, ...; the slope
    /// after the last knot is `0`.
    pub slopes: Vec<f64>,
    /// Value on `[knots.last(), inf)`.
    pub tail_value: f64,
}

impl SlopePl {
    pub fn eval(&self, p: f64) -> f64 {
        if p < self.p_min {
            return f64::INFINITY;
        }
        let m = self.knots.len();
        let idx = self.knots.partition_point(|&k| k < p);
        if idx == m {
            return self.tail_value;
        }
        let mut v = self.tail_value;
        for i in (idx + 1..m).rev() {
            v -= self.slopes[i] * (self.knots[i] - self.knots[i - 1]);
        }
        v + self.slopes[idx] * (p - self.knots[idx])
    }

    fn slope_at(&self, p: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k < p);
        self.slopes.get(idx).copied().unwrap_or(0.0)
    }

    /// `(1 - t) f + t g` on the common effective domain.
    pub fn affine_combination(f: &Self, g: &Self, t: f64) -> Self {
        let p_min = f.p_min.max(g.p_min);
        let mut knots: Vec<f64> = f.knots.iter().chain(&g.knots).copied().filter(|&k| k > p_min).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut probes = Vec::with_capacity(knots.len());
        let mut left = p_min;
        for &k in &knots {
            probes.push(0.5 * (left + k));
            left = k;
        }
        let slopes: Vec<f64> = probes
            .iter()
            .map(|&p| (1.0 - t) * f.slope_at(p) + t * g.slope_at(p))
            .collect();
        SlopePl {
            p_min,
            knots,
            slopes,
            tail_value: (1.0 - t) * f.tail_value + t * g.tail_value,
        }
    }

    /// Inverse transform `s -> sup_{p >= p_min} (p s - f(p))` on `s <= 0`.
    pub fn conjugate(&self) -> PlConvex {
        let mut slopes = Vec::with_capacity(self.knots.len() + 1);
        slopes.push(self.p_min);
        slopes.extend_from_slice(&self.knots);
        let mut f = PlConvex {
            breakpoints: self.slopes.clone(),
            slopes,
            anchor: -self.tail_value,
        };
        // merge pieces whose dual slopes coincide
        let mut bps = Vec::new();
        let mut sl = vec![f.slopes[0]];
        for (i, &b) in f.breakpoints.iter().enumerate() {
            if let Some(&last) = bps.last() {
                if b <= last {
                    *sl.last_mut().unwrap() = f.slopes[i + 1];
                    continue;
                }
            }
            if b >= 0.0 {
                break;
            }
            bps.push(b);
            sl.push(f.slopes[i + 1]);
        }
        f.breakpoints = bps;
        f.slopes = sl;
        f.canonicalize(MERGE_EPS);
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega(c: f64) -> PlConvex {
        PlConvex::max_of_lines(&[(1.0 / c, 0.0), (0.0, -1.0)]).unwrap()
    }

    #[test]
    fn make_pl_examples() {
        let f = PlConvex::toric(vec![-1.0], vec![0.0, 1.0], 0.0).unwrap();
        assert_eq!(f, omega(1.0));
        let z = PlConvex::toric(vec![], vec![0.0], 0.0).unwrap();
        assert_eq!(z, PlConvex::zero());
        assert!(matches!(
            PlConvex::toric(vec![-1.0], vec![1.0, 0.0], 0.0),
            Err(Error::NonConvexInput { .. })
        ));
        assert!(matches!(
            PlConvex::toric(vec![], vec![0.0], 0.5),
            Err(Error::PositivityViolation { .. })
        ));
        assert!(matches!(
            PlConvex::toric(vec![], vec![-1.0], 0.0),
            Err(Error::NegativeSlope(_))
        ));
    }

    #[test]
    fn equal_slopes_are_merged() {
        let f = PlConvex::new(vec![-2.0, -1.0], vec![0.0, 1.0, 1.0], 0.0).unwrap();
        assert_eq!(f.breakpoints(), &[-2.0]);
        assert_eq!(f.slopes(), &[0.0, 1.0]);
    }

    #[test]
    fn eval_examples() {
        let f = omega(1.0);
        assert_eq!(f.eval(-0.5), -0.5);
        assert_eq!(f.eval(-3.0), -1.0);
        assert_eq!(omega(2.0).eval(-1.0), -0.5);
        assert_eq!(f.knot_values(), vec![-1.0]);
        assert_eq!(f.infimum(), -1.0);
        assert_eq!(PlConvex::affine(1.0, 0.0).infimum(), f64::NEG_INFINITY);
    }

    #[test]
    fn max_of_lines_drops_lines_winning_only_for_positive_s() {
        let f = PlConvex::max_of_lines(&[(0.0, -1.0), (1.0, 0.0), (2.0, -0.5)]).unwrap();
        assert_eq!(f, omega(1.0));
    }

    #[test]
    fn conjugate_swaps_breakpoints_and_slopes() {
        let f = omega(1.0);
        let c = f.conjugate();
        assert_eq!(c.p_min, 0.0);
        assert_eq!(c.knots, vec![1.0]);
        assert_eq!(c.slopes, vec![-1.0]);
        assert_eq!(c.eval(0.25), 0.75);
        assert_eq!(c.eval(3.0), 0.0);
        assert_eq!(c.eval(-0.1), f64::INFINITY);
        assert_eq!(c.conjugate(), f);
    }

    #[test]
    fn truncation_and_max() {
        let s = PlConvex::affine(1.0, 0.0);
        assert_eq!(s.max_const(-1.0), omega(1.0));
        assert_eq!(omega(1.0).max_const(-2.0), omega(1.0));
        let half = PlConvex::affine(0.5, 0.0);
        assert_eq!(
            half.max_const(-1.0).max_const(-0.5),
            PlConvex::max_of_lines(&[(0.5, 0.0), (0.0, -0.5)]).unwrap()
        );
    }

    #[test]
    fn min_envelope_examples() {
        let (u0, u1) = (omega(1.0), omega(2.0));
        assert_eq!(u0.min_envelope(&u1), u0);
        assert_eq!(u1.min_envelope(&u1), u1);
        let s = PlConvex::affine(1.0, 0.0);
        let r = PlConvex::zero().min_envelope(&s.add_constant(3.0));
        assert_eq!(r, s);
    }

    #[test]
    fn lower_envelope_of_samples() {
        let f = lower_envelope_1d(&[(0.0, 0.0), (-1.0, -1.0), (-2.0, -1.0), (-5.0, -1.0)], 0.0).unwrap();
        assert_eq!(f, omega(1.0));
        // concave kink min{0, s + 2}
        let g = lower_envelope_1d(&[(-2.0, 0.0), (0.0, 0.0)], 1.0).unwrap();
        assert_eq!(g, PlConvex::affine(1.0, 0.0));
        assert_eq!(lower_envelope_1d(&[], 0.0), Err(Error::EmptyInput));
    }

    #[test]
    fn json_shape() {
        let f = omega(1.0);
        let js = serde_json::to_string(&f).unwrap();
        assert_eq!(js, r#"{"breakpoints":[-1.0],"slopes":[0.0,1.0],"anchor":0.0}"#);
        let back: PlConvex = serde_json::from_str(&js).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<PlConvex>(r#"{"breakpoints":[-1],"slopes":[1,0],"anchor":0}"#).is_err());
    }

    #[test]
    fn max_ignores_rounding_level_crossings() {
        let chord = PlConvex::new(
            vec![-4.7875202578971985, -1.0922484396175443],
            vec![0.0, 0.48172606129443435, 0.6135840788345517],
            0.0,
        )
        .unwrap();
        let ut = PlConvex::new(
            vec![-4.048465894241268, -0.2184496879235088],
            vec![0.0, 0.6021575766180429, 0.6592900877005865],
            0.0,
        )
        .unwrap();
        let m = ut.max(&chord);
        for x in probe_points(&[&ut, &chord]) {
            assert!((m.eval(x) - ut.eval(x).max(chord.eval(x))).abs() < 1e-12);
        }
        assert!(m.sup_distance(&chord) < 1e-12);
    }
}
