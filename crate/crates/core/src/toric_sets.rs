//! Log-convex Reinhardt compacts, their relative extremal functions and
//! capacities, multiplicative combinations and condensers.
//!
//! A compact `K` is described by its log-image, a lower-closed polytope
//! `{s <= 0 : a_k . s <= b_k}` with `a_k >= 0` and `b_k < 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::small_lp::StandardLp;
use crate::convex::{envelope_grid, grid_to_pl, EnvelopeOptions, GridConvex, PlConvex, SlopeRange, ToricFunction};
use crate::error::{Error, Result};
use crate::monge_ampere::{ma_measure_with, MaOptions};

const MEMBER_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CompactRaw", into = "CompactRaw")]
pub struct ToricCompact {
    n: usize,
    constraints: Vec<Constraint>,
}

#[derive(Serialize, Deserialize)]
struct CompactRaw {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<Vec<Constraint>>,
}

impl TryFrom<CompactRaw> for ToricCompact {
    type Error = Error;

    fn try_from(raw: CompactRaw) -> Result<Self> {
        match (raw.threshold, raw.constraints) {
            (Some(c), None) if raw.n == 1 => ToricCompact::threshold(c),
            (None, Some(cs)) => ToricCompact::new(raw.n, cs),
            _ => Err(Error::InvalidInput(
                "expected a threshold (n = 1) or a constraint list".into(),
            )),
        }
    }
}

impl From<ToricCompact> for CompactRaw {
    fn from(k: ToricCompact) -> Self {
        if k.n == 1 {
            CompactRaw {
                n: 1,
                threshold: Some(-k.constraints[0].b),
                constraints: None,
            }
        } else {
            CompactRaw {
                n: k.n,
                threshold: None,
                constraints: Some(k.constraints),
            }
        }
    }
}

impl ToricCompact {
    pub fn new(n: usize, constraints: Vec<Constraint>) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidInput(format!("dimension {n} outside 1..=3")));
        }
        if constraints.is_empty() {
            return Err(Error::EmptyInput);
        }
        for c in &constraints {
            if c.a.len() != n {
                return Err(Error::DimensionMismatch(c.a.len(), n));
            }
            if c.a.iter().any(|v| !v.is_finite() || *v < 0.0) || !c.b.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "normal {:?} must be finite and nonnegative",
                    c.a
                )));
            }
            if c.a.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidInput("zero normal".into()));
            }
            if c.b >= 0.0 {
                return Err(Error::DegenerateSet(format!("offset {} must be negative", c.b)));
            }
        }
        if n == 1 {
            let c = constraints.iter().map(|k| -k.b / k.a[0]).fold(f64::INFINITY, f64::min);
            return ToricCompact::threshold(c);
        }
        Ok(ToricCompact { n, constraints })
    }

    /// `log K = {s <= -c}` in one variable.
    pub fn threshold(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::DegenerateSet(format!("threshold {c} must be positive")));
        }
        Ok(ToricCompact {
            n: 1,
            constraints: vec![Constraint { a: vec![1.0], b: -c }],
        })
    }

    /// `log K = {s <= -m}` componentwise.
    pub fn orthant_box(m: &[f64]) -> Result<Self> {
        let n = m.len();
        let constraints = (0..n)
            .map(|i| {
                let mut a = vec![0.0; n];
                a[i] = 1.0;
                Constraint { a, b: -m[i] }
            })
            .collect();
        ToricCompact::new(n, constraints)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// The 1D threshold `c`, if one-dimensional.
    pub fn threshold_value(&self) -> Option<f64> {
        (self.n == 1).then(|| -self.constraints[0].b)
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        s.iter().all(|&x| x <= MEMBER_TOL)
            && self.constraints.iter().all(|c| {
                let lhs: f64 = c.a.iter().zip(s).map(|(a, x)| a * x).sum();
                lhs <= c.b + MEMBER_TOL * (1.0 + c.b.abs())
            })
    }

    /// `h_K(q) = max_{s in log K} q . s` for `q >= 0`.
    pub fn support(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.n {
            return Err(Error::DimensionMismatch(q.len(), self.n));
        }
        if let Some(c) = self.threshold_value() {
            return Ok(-q[0] * c);
        }
        // y = -s >= 0:  min q.y  s.t.  a_k . y - z_k = -b_k
        let rows = self.constraints.len();
        let mut lp = StandardLp::new(self.constraints.iter().map(|c| -c.b).collect());
        for (j, &qj) in q.iter().enumerate().take(self.n) {
            let col: Vec<f64> = self.constraints.iter().map(|c| c.a[j]).collect();
            lp.add_column(qj, &col);
        }
        for k in 0..rows {
            let mut col = vec![0.0; rows];
            col[k] = -1.0;
            lp.add_column(0.0, &col);
        }
        Ok(-lp.solve()?.value)
    }

    /// Distance `m_i = -max_{log K} s_i` to each face `s_i = 0`.
    pub fn face_distances(&self) -> Result<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let mut e = vec![0.0; self.n];
                e[i] = 1.0;
                self.support(&e).map(|h| -h)
            })
            .collect()
    }

    /// `self ⊂ other`.
    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        for c in &other.constraints {
            if self.support(&c.a)? > c.b + MEMBER_TOL * (1.0 + c.b.abs()) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Grid parameters for sets in dimension two and three.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution {
    pub side: f64,
    pub h: f64,
    pub envelope: EnvelopeOptions,
    pub ma: MaOptions,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            side: 4.0,
            h: 0.05,
            envelope: EnvelopeOptions::default(),
            ma: MaOptions::default(),
        }
    }
}

impl Resolution {
    pub fn new(side: f64, h: f64) -> Self {
        Resolution {
            side,
            h,
            ..Self::default()
        }
    }

    /// Tolerance `5 h M` for grid comparisons of masses of size `M`.
    pub fn mass_tol(&self, n: usize, mass: f64) -> f64 {
        if n == 1 {
            1e-12
        } else {
            5.0 * self.h * mass.max(1.0)
        }
    }
}

/// Relative extremal function `ω_K`: largest toric function `<= 0` with
/// `ω_K <= -1` on `K`.
pub fn extremal_function(k: &ToricCompact, res: &Resolution) -> Result<ToricFunction> {
    if let Some(c) = k.threshold_value() {
        return Ok(PlConvex::max_of_lines(&[(1.0 / c, 0.0), (0.0, -1.0)])?.into());
    }
    let m = k.face_distances()?;
    if m.iter().any(|&d| d <= MEMBER_TOL) {
        return Err(Error::DegenerateSet("log K touches a face s_i = 0".into()));
    }
    let n = k.n();
    let template = GridConvex::sample(n, res.side, res.h, vec![0.0; n], |_| 0.0)?;
    let grid = template.grid();
    if !k.contains(&vec![-res.side; n]) {
        return Err(Error::ResolutionTooCoarse(format!(
            "box [-{}, 0]^{n} misses log K",
            res.side
        )));
    }
    let obstacle: Vec<f64> = (0..grid.size())
        .map(|i| if k.contains(&grid.point(i)) { -1.0 } else { 0.0 })
        .collect();
    // gradients of ω_K satisfy 0 <= p_i <= 1 / m_i
    let ranges = m.iter().map(|&d| SlopeRange::new(0.0, 1.0 / d)).collect();
    Ok(envelope_grid(n, res.side, res.h, obstacle, vec![0.0; n], Some(ranges), &res.envelope)?.into())
}

/// Monge-Ampère capacity: total mass of `(dd^c ω_K)^n`.
pub fn capacity(k: &ToricCompact, res: &Resolution) -> Result<f64> {
    if let Some(c) = k.threshold_value() {
        return Ok(1.0 / c);
    }
    let w = extremal_function(k, res)?;
    Ok(ma_measure_with(&w, &res.ma).total_mass)
}

/// `log K_t = (1 - t) log K_0 + t log K_1`, through support functions on the
/// union of both normal sets (exact when the normal fans agree).
pub fn combine(k0: &ToricCompact, k1: &ToricCompact, t: f64) -> Result<ToricCompact> {
    if k0.n() != k1.n() {
        return Err(Error::DimensionMismatch(k0.n(), k1.n()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    if let (Some(c0), Some(c1)) = (k0.threshold_value(), k1.threshold_value()) {
        return ToricCompact::threshold(c0 + t * (c1 - c0));
    }
    let mut normals: Vec<Vec<f64>> = Vec::new();
    for c in k0.constraints().iter().chain(k1.constraints()) {
        let norm: f64 = c.a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let unit: Vec<f64> = c.a.iter().map(|v| v / norm).collect();
        if !normals
            .iter()
            .any(|u| u.iter().zip(&unit).all(|(x, y)| (x - y).abs() < 1e-12))
        {
            normals.push(unit);
        }
    }
    let constraints = normals
        .into_iter()
        .map(|a| {
            let b = (1.0 - t) * k0.support(&a)? + t * k1.support(&a)?;
            Ok(Constraint { a, b })
        })
        .collect::<Result<Vec<_>>>()?;
    ToricCompact::new(k0.n(), constraints)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmRow {
    pub t: f64,
    pub capacity: f64,
    pub bound: f64,
    /// `bound - capacity`; nonnegative when the inequality holds.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmReport {
    pub cap0: f64,
    pub cap1: f64,
    pub rows: Vec<BmRow>,
    pub tol: f64,
    pub ok: bool,
}

/// `Cap(K_t) <= (1 - t) Cap(K_0) + t Cap(K_1)` at each sample.
pub fn reverse_bm_check(k0: &ToricCompact, k1: &ToricCompact, ts: &[f64], res: &Resolution) -> Result<BmReport> {
    let cap0 = capacity(k0, res)?;
    let cap1 = capacity(k1, res)?;
    let rows = ts
        .par_iter()
        .map(|&t| {
            let cap = capacity(&combine(k0, k1, t)?, res)?;
            let bound = (1.0 - t) * cap0 + t * cap1;
            Ok(BmRow {
                t,
                capacity: cap,
                bound,
                margin: bound - cap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = res.mass_tol(k0.n(), cap0.max(cap1));
    let ok = rows.iter().all(|r| r.margin >= -tol);
    Ok(BmReport {
        cap0,
        cap1,
        rows,
        tol,
        ok,
    })
}

/// Polytope containing `{u <= level}`: exact in 1D, otherwise the smallest
/// polytope with normals in `{0,1,2}^n` containing the sublevel nodes.
pub fn sublevel_set(u: &ToricFunction, level: f64) -> Result<ToricCompact> {
    if !(level < 0.0) {
        return Err(Error::InvalidInput(format!("level {level} must be negative")));
    }
    match u {
        ToricFunction::Pl(f) => sublevel_pl(f, level),
        ToricFunction::Grid(g) if g.n() == 1 => sublevel_pl(&grid_to_pl(g)?, level),
        ToricFunction::Grid(g) => sublevel_grid(g, level),
    }
}

fn sublevel_pl(f: &PlConvex, level: f64) -> Result<ToricCompact> {
    let eps = 1e-12 * (1.0 + level.abs());
    if f.infimum() > level + eps {
        return Err(Error::EmptyLevelSet(level));
    }
    if f.anchor() <= level {
        return Err(Error::DegenerateSet(format!("u <= {level} on the whole half-line")));
    }
    // rightmost crossing: scan the knots from s = 0 leftwards
    let knots: Vec<f64> = f.breakpoints().to_vec();
    let values = f.knot_values();
    let mut right = (0.0, f.anchor());
    for (&b, &v) in knots.iter().zip(&values).rev() {
        if v <= level + eps {
            let s = if v >= level {
                b
            } else {
                b + (level - v) * (right.0 - b) / (right.1 - v)
            };
            return ToricCompact::threshold(-s);
        }
        right = (b, v);
    }
    // the crossing lies on the left tail
    let s = right.0 - (right.1 - level) / f.tail_slope();
    ToricCompact::threshold(-s)
}

fn sublevel_grid(g: &GridConvex, level: f64) -> Result<ToricCompact> {
    let n = g.n();
    let grid = g.grid();
    let nodes: Vec<Vec<f64>> = (0..grid.size())
        .filter(|&i| g.values()[i] <= level + 1e-12)
        .map(|i| grid.point(i))
        .collect();
    if nodes.is_empty() {
        return Err(Error::EmptyLevelSet(level));
    }
    let mut constraints = Vec::new();
    for code in 1..3usize.pow(n as u32) {
        let mut a = vec![0.0; n];
        let mut rem = code;
        for v in a.iter_mut() {
            *v = (rem % 3) as f64;
            rem /= 3;
        }
        let b = nodes
            .iter()
            .map(|s| a.iter().zip(s).map(|(x, y)| x * y).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        if b < -MEMBER_TOL {
            constraints.push(Constraint { a, b });
        }
    }
    if constraints.is_empty() {
        return Err(Error::DegenerateSet(format!("sublevel set {level} reaches s = 0")));
    }
    ToricCompact::new(n, constraints)
}

/// Sup-distance between `u` and the extremal function of `{u <= -1}`.
pub fn extremal_defect(u: &ToricFunction, envelope: &EnvelopeOptions) -> Result<f64> {
    let k = sublevel_set(u, -1.0)?;
    let res = match u {
        ToricFunction::Grid(g) => Resolution {
            side: g.side(),
            h: g.h(),
            envelope: *envelope,
            ma: MaOptions::default(),
        },
        ToricFunction::Pl(_) => Resolution::default(),
    };
    let mut w = extremal_function(&k, &res)?;
    if let (ToricFunction::Grid(g), ToricFunction::Pl(f)) = (u, &w) {
        w = crate::convex::sample_pl(f, g.side(), g.h())?.into();
    }
    u.sup_distance(&w)
}

/// Whether `u` is the relative extremal function of its `-1` sublevel set.
pub fn is_extremal(u: &ToricFunction) -> Result<bool> {
    let tol = match u {
        ToricFunction::Pl(_) => 1e-9,
        ToricFunction::Grid(g) => 5.0 * g.h() * g.max_slopes().into_iter().fold(1.0, f64::max),
    };
    Ok(extremal_defect(u, &EnvelopeOptions::default())? <= tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelCapacityRow {
    pub t: f64,
    pub capacity: f64,
    pub bound: f64,
    pub equality: bool,
    pub is_extremal: bool,
    /// Equality in the capacity bound holds exactly when the slice is extremal.
    pub consistent: bool,
}

/// For slices `u_t` of a geodesic of extremal functions, compares
/// `Cap({u_t <= -1})` with `(1 - t) Cap(K_0) + t Cap(K_1)`.
pub fn sublevel_capacity_check(
    family: &[(f64, ToricFunction)],
    k0: &ToricCompact,
    k1: &ToricCompact,
    res: &Resolution,
) -> Result<Vec<SublevelCapacityRow>> {
    let cap0 = capacity(k0, res)?;
    let cap1 = capacity(k1, res)?;
    let tol = res.mass_tol(k0.n(), cap0.max(cap1));
    family
        .iter()
        .map(|(t, u)| {
            let l = sublevel_set(u, -1.0)?;
            let cap = capacity(&l, res)?;
            let bound = (1.0 - t) * cap0 + t * cap1;
            let equality = (bound - cap).abs() <= tol;
            let is_extremal = is_extremal(u)?;
            Ok(SublevelCapacityRow {
                t: *t,
                capacity: cap,
                bound,
                equality,
                is_extremal,
                consistent: equality == is_extremal,
            })
        })
        .collect()
}

/// Nested compacts `K_1 ⊃ ... ⊃ K_m` with levels `0 > σ_1 > ... > σ_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condenser {
    pub compacts: Vec<ToricCompact>,
    pub levels: Vec<f64>,
}

impl Condenser {
    pub fn new(compacts: Vec<ToricCompact>, levels: Vec<f64>) -> Result<Self> {
        if compacts.is_empty() {
            return Err(Error::EmptyInput);
        }
        if compacts.len() != levels.len() {
            return Err(Error::InconsistentLevels(format!(
                "{} compacts but {} levels",
                compacts.len(),
                levels.len()
            )));
        }
        let mut prev = 0.0;
        for &l in &levels {
            if !(l < prev) {
                return Err(Error::InconsistentLevels(format!(
                    "levels must decrease strictly below 0, got {levels:?}"
                )));
            }
            prev = l;
        }
        for w in compacts.windows(2) {
            if w[0] == w[1] || !w[1].is_subset_of(&w[0])? {
                return Err(Error::InconsistentLevels("compacts must be strictly nested".into()));
            }
        }
        Ok(Condenser { compacts, levels })
    }
}

/// Maximal function taking the value `σ_i` on the plate `K_i`: the affine
/// interpolation between plates in 1D, the obstacle envelope on grids.
pub fn condenser_extremal(c: &Condenser, res: &Resolution) -> Result<ToricFunction> {
    let n = c.compacts[0].n();
    if n == 1 {
        let mut knots = vec![0.0];
        let mut values = vec![0.0];
        for (k, &l) in c.compacts.iter().zip(&c.levels) {
            knots.push(-k.threshold_value().unwrap());
            values.push(l);
        }
        knots.reverse();
        values.reverse();
        let slopes: Vec<f64> = knots
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
            .collect();
        if slopes.windows(2).any(|w| w[1] < w[0] - 1e-12) {
            return Err(Error::InconsistentLevels(format!(
                "plate interpolation is not convex: slopes {slopes:?}"
            )));
        }
        let mut all = vec![0.0];
        all.extend(slopes);
        return Ok(PlConvex::new(knots[..knots.len() - 1].to_vec(), all, 0.0)?.into());
    }
    let template = GridConvex::sample(n, res.side, res.h, vec![0.0; n], |_| 0.0)?;
    let grid = template.grid();
    let obstacle: Vec<f64> = (0..grid.size())
        .map(|i| {
            let p = grid.point(i);
            c.compacts
                .iter()
                .zip(&c.levels)
                .filter(|(k, _)| k.contains(&p))
                .map(|(_, &l)| l)
                .fold(0.0, f64::min)
        })
        .collect();
    let m = c.compacts[0].face_distances()?;
    if m.iter().any(|&d| d <= MEMBER_TOL) {
        return Err(Error::DegenerateSet("outer plate touches a face s_i = 0".into()));
    }
    let depth = -c.levels[c.levels.len() - 1];
    let ranges = m.iter().map(|&d| SlopeRange::new(0.0, depth / d)).collect();
    Ok(envelope_grid(n, res.side, res.h, obstacle, vec![0.0; n], Some(ranges), &res.envelope)?.into())
}
