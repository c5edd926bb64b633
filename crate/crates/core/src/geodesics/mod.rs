//! Geodesics and subgeodesics between toric functions.
//!
//! The geodesic slice at time `t` is the inverse Legendre transform of
//! `(1 - t) u0* + t u1*`; the slab envelope (largest jointly convex function
//! on `[-S, 0]^n x [0, 1]` under the endpoint data) is an independent oracle.

mod singular;

pub use singular::*;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::pl::probe_points;
use crate::convex::{
    conjugate_grid, conjugate_lattice, sample_pl, slab_envelope, EnvelopeOptions, GridConjugate, GridConvex, PlConvex,
    SlopePl, ToricFunction,
};
use crate::error::{Error, Result};
use crate::monge_ampere::energy;

/// Slice at time `t` of the geodesic joining `u0` and `u1`.
pub fn geodesic_legendre(u0: &ToricFunction, u1: &ToricFunction, t: f64) -> Result<ToricFunction> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    match (u0, u1) {
        (ToricFunction::Pl(a), ToricFunction::Pl(b)) => Ok(geodesic_pl(a, b, t).into()),
        (ToricFunction::Grid(a), ToricFunction::Grid(b)) => {
            let (ca, cb) = grid_conjugates(a, b)?;
            Ok(GridConjugate::affine_combination(&ca, &cb, t)?.inverse().into())
        }
        _ => Err(Error::IncompatibleGrids("mixed representations".into())),
    }
}

pub fn geodesic_pl(u0: &PlConvex, u1: &PlConvex, t: f64) -> PlConvex {
    if t == 0.0 {
        return u0.clone();
    }
    if t == 1.0 {
        return u1.clone();
    }
    SlopePl::affine_combination(&u0.conjugate(), &u1.conjugate(), t).conjugate()
}

fn grid_conjugates(a: &GridConvex, b: &GridConvex) -> Result<(GridConjugate, GridConjugate)> {
    a.compatible(b)?;
    let p_max = a
        .max_slopes()
        .into_iter()
        .chain(b.max_slopes())
        .chain(a.tail_slopes().iter().copied())
        .chain(b.tail_slopes().iter().copied())
        .fold(0.0, f64::max);
    let lattice = conjugate_lattice(a, p_max);
    Ok((
        conjugate_grid(a, Some(lattice.clone()))?,
        conjugate_grid(b, Some(lattice))?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Legendre,
    SlabOracle,
    Affine,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyOptions {
    /// Box side and spacing for the slab oracle.
    pub side: f64,
    pub h: f64,
    pub t_steps: usize,
    pub envelope: EnvelopeOptions,
    /// Stopping tolerance of the truncation escalation.
    pub tol: f64,
    /// Truncation depths `2^k` are tried for `k = 0..=max_doublings`.
    pub max_doublings: u32,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions {
            side: 4.0,
            h: 0.02,
            t_steps: 11,
            envelope: EnvelopeOptions::default(),
            tol: 1e-9,
            max_doublings: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceDiagnostics {
    pub t: f64,
    /// `None` when the slice carries pole mass.
    pub energy: Option<f64>,
    /// `inf ((1 - t) u0 + t u1 - u_t)`; nonnegative when the upper bound holds.
    pub sup_bound_margin: f64,
    /// `inf (u_t - max{u0 - M1 t, u1 - M0 (1 - t)})`; `None` for unbounded endpoints.
    pub inf_bound_margin: Option<f64>,
    /// Positive part of the failure of convexity in `t` against the neighbouring rows.
    pub convexity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicFamily {
    pub u0: ToricFunction,
    pub u1: ToricFunction,
    pub t_samples: Vec<f64>,
    pub slices: Vec<ToricFunction>,
    pub method: Method,
    pub diagnostics: Vec<SliceDiagnostics>,
    /// Truncation depth at which the slices stabilized, when escalation ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_depth: Option<f64>,
}

fn check_samples(ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::EmptyInput);
    }
    if ts.iter().any(|t| !(*t > 0.0 && *t < 1.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "t samples must increase strictly inside (0, 1)".into(),
        ));
    }
    Ok(())
}

/// `k / (steps - 1)` for the interior rows of a uniform grid on `[0, 1]`.
pub fn uniform_samples(t_steps: usize) -> Vec<f64> {
    (1..t_steps.saturating_sub(1))
        .map(|k| k as f64 / (t_steps - 1) as f64)
        .collect()
}

pub fn geodesic_family(
    u0: &ToricFunction,
    u1: &ToricFunction,
    ts: &[f64],
    method: Method,
    opts: &FamilyOptions,
) -> Result<GeodesicFamily> {
    check_samples(ts)?;
    if u0.dim() != u1.dim() {
        return Err(Error::DimensionMismatch(u0.dim(), u1.dim()));
    }
    let mut depth = None;
    let slices = match method {
        Method::Legendre => match (u0, u1) {
            (ToricFunction::Pl(a), ToricFunction::Pl(b)) if !(a.is_bounded() && b.is_bounded()) => {
                let (slices, n) = truncated_legendre(a, b, ts, opts)?;
                depth = Some(n);
                slices
            }
            (ToricFunction::Grid(a), ToricFunction::Grid(b)) if !(a.is_bounded() && b.is_bounded()) => {
                let tail = a
                    .tail_slopes()
                    .iter()
                    .chain(b.tail_slopes())
                    .fold(0.0, |x: f64, y| x.max(*y));
                return Err(Error::SingularEndpoint { tail_slope: tail });
            }
            _ => ts
                .par_iter()
                .map(|&t| geodesic_legendre(u0, u1, t))
                .collect::<Result<Vec<_>>>()?,
        },
        Method::SlabOracle => slab_slices(u0, u1, ts, opts)?,
        Method::Affine => ts
            .iter()
            .map(|&t| affine_slice(u0, u1, t))
            .collect::<Result<Vec<_>>>()?,
        Method::Custom => {
            return Err(Error::InvalidInput(
                "custom families are built with GeodesicFamily::from_slices".into(),
            ))
        }
    };
    let mut fam = GeodesicFamily {
        u0: u0.clone(),
        u1: u1.clone(),
        t_samples: ts.to_vec(),
        slices,
        method,
        diagnostics: Vec::new(),
        truncation_depth: depth,
    };
    fam.diagnostics = diagnostics(&fam)?;
    Ok(fam)
}

/// Decreasing limit over truncation depths `N = 2^k` of the geodesics joining
/// `max{u_j, -N}`.
fn truncated_legendre(
    a: &PlConvex,
    b: &PlConvex,
    ts: &[f64],
    opts: &FamilyOptions,
) -> Result<(Vec<ToricFunction>, f64)> {
    let slices_at = |n: f64| -> Vec<PlConvex> {
        let (ta, tb) = (a.max_const(-n), b.max_const(-n));
        ts.iter().map(|&t| geodesic_pl(&ta, &tb, t)).collect()
    };
    let mut prev = slices_at(1.0);
    let mut change = f64::INFINITY;
    for k in 1..=opts.max_doublings {
        let n = 2f64.powi(k as i32);
        let next = slices_at(n);
        change = prev
            .iter()
            .zip(&next)
            .map(|(x, y)| x.sup_distance(y))
            .fold(0.0, f64::max);
        if change < opts.tol {
            return Ok((next.into_iter().map(Into::into).collect(), n));
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        depth: 2f64.powi(opts.max_doublings as i32),
        change,
    })
}

fn slab_slices(u0: &ToricFunction, u1: &ToricFunction, ts: &[f64], opts: &FamilyOptions) -> Result<Vec<ToricFunction>> {
    let (g0, g1) = match (u0, u1) {
        (ToricFunction::Pl(a), ToricFunction::Pl(b)) => {
            (sample_pl(a, opts.side, opts.h)?, sample_pl(b, opts.side, opts.h)?)
        }
        (ToricFunction::Grid(a), ToricFunction::Grid(b)) => (a.clone(), b.clone()),
        _ => return Err(Error::IncompatibleGrids("mixed representations".into())),
    };
    let slab = slab_envelope(&g0, &g1, opts.t_steps, &opts.envelope)?;
    ts.iter()
        .map(|&t| {
            let k = slab.row_index(t);
            if (slab.t(k) - t).abs() > 1e-9 {
                return Err(Error::ResolutionTooCoarse(format!(
                    "t = {t} is not a row of the {}-step slab",
                    opts.t_steps
                )));
            }
            Ok(slab.slice(k).into())
        })
        .collect()
}

fn affine_slice(u0: &ToricFunction, u1: &ToricFunction, t: f64) -> Result<ToricFunction> {
    match (u0, u1) {
        (ToricFunction::Pl(a), ToricFunction::Pl(b)) => Ok(PlConvex::affine_combination(a, b, t).into()),
        (ToricFunction::Grid(a), ToricFunction::Grid(b)) => Ok(GridConvex::affine_combination(a, b, t)?.into()),
        _ => Err(Error::IncompatibleGrids("mixed representations".into())),
    }
}

impl GeodesicFamily {
    /// Wraps externally produced slices, e.g. a candidate subgeodesic.
    pub fn from_slices(u0: ToricFunction, u1: ToricFunction, ts: Vec<f64>, slices: Vec<ToricFunction>) -> Result<Self> {
        check_samples(&ts)?;
        if ts.len() != slices.len() {
            return Err(Error::DimensionMismatch(slices.len(), ts.len()));
        }
        let mut fam = GeodesicFamily {
            u0,
            u1,
            t_samples: ts,
            slices,
            method: Method::Custom,
            diagnostics: Vec::new(),
            truncation_depth: None,
        };
        fam.diagnostics = diagnostics(&fam)?;
        Ok(fam)
    }

    /// Rows `(t, u_t)` including both endpoints.
    pub fn rows(&self) -> Vec<(f64, &ToricFunction)> {
        let mut rows = vec![(0.0, &self.u0)];
        rows.extend(self.t_samples.iter().copied().zip(&self.slices));
        rows.push((1.0, &self.u1));
        rows
    }

    /// Columns `t, energy, sup_bound_margin, inf_bound_margin, convexity_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,energy,sup_bound_margin,inf_bound_margin,convexity_residual\n");
        for d in &self.diagnostics {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(d.t),
                d.energy.map_or("nan".into(), fmt17),
                fmt17(d.sup_bound_margin),
                d.inf_bound_margin.map_or("nan".into(), fmt17),
                fmt17(d.convexity_residual)
            );
        }
        out
    }
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Points at which differences between the given functions attain their extrema.
pub(crate) fn probes(fs: &[&ToricFunction]) -> Vec<Vec<f64>> {
    if let Some(g) = fs.iter().find_map(|f| f.as_grid()) {
        let grid = g.grid();
        return (0..grid.size()).map(|i| grid.point(i)).collect();
    }
    let pls: Vec<&PlConvex> = fs.iter().filter_map(|f| f.as_pl()).collect();
    probe_points(&pls).into_iter().map(|s| vec![s]).collect()
}

/// `inf (f - g)` over the probes, `-inf` if the left tails force divergence.
fn inf_difference(f: &ToricFunction, g: &ToricFunction, pts: &[Vec<f64>]) -> f64 {
    if let (ToricFunction::Pl(a), ToricFunction::Pl(b)) = (f, g) {
        if a.tail_slope() - b.tail_slope() > 1e-15 {
            return f64::NEG_INFINITY;
        }
    }
    pts.iter().map(|p| f.eval(p) - g.eval(p)).fold(f64::INFINITY, f64::min)
}

fn lower_bound(u0: &ToricFunction, u1: &ToricFunction, t: f64) -> Option<ToricFunction> {
    if !(u0.is_bounded() && u1.is_bounded()) {
        return None;
    }
    let (m0, m1) = (u0.sup_norm(), u1.sup_norm());
    match (u0, u1) {
        (ToricFunction::Pl(a), ToricFunction::Pl(b)) => {
            Some(a.add_constant(-m1 * t).max(&b.add_constant(-m0 * (1.0 - t))).into())
        }
        (ToricFunction::Grid(a), ToricFunction::Grid(b)) => {
            let values = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - m1 * t).max(y - m0 * (1.0 - t)))
                .collect();
            Some(GridConvex::from_box_values(a, values, vec![0.0; a.n()]).into())
        }
        _ => None,
    }
}

fn diagnostics(fam: &GeodesicFamily) -> Result<Vec<SliceDiagnostics>> {
    let mut all: Vec<&ToricFunction> = vec![&fam.u0, &fam.u1];
    all.extend(&fam.slices);
    let pts = probes(&all);
    let rows = fam.rows();
    (1..rows.len() - 1)
        .into_par_iter()
        .map(|k| {
            let (t, u) = rows[k];
            let upper = affine_slice(&fam.u0, &fam.u1, t)?;
            let energy = match energy(u) {
                Ok(e) => Some(e),
                Err(Error::InfiniteEnergy { .. }) => None,
                Err(e) => return Err(e),
            };
            let inf_bound_margin = lower_bound(&fam.u0, &fam.u1, t).map(|lo| inf_difference(u, &lo, &pts));
            let (ta, ua) = rows[k - 1];
            let (tc, uc) = rows[k + 1];
            let lambda = (tc - t) / (tc - ta);
            let convexity_residual = pts
                .iter()
                .map(|p| u.eval(p) - (lambda * ua.eval(p) + (1.0 - lambda) * uc.eval(p)))
                .filter(|v| v.is_finite())
                .fold(0.0, f64::max);
            Ok(SliceDiagnostics {
                t,
                energy,
                sup_bound_margin: inf_difference(&upper, u, &pts),
                inf_bound_margin,
                convexity_residual,
            })
        })
        .collect()
}

/// Energies along a family, endpoints included, with shape residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub points: Vec<(f64, f64)>,
    /// `max |E(t) - ((1 - t) E(0) + t E(1))|`.
    pub linearity_residual: f64,
    /// Largest failure of discrete convexity over consecutive triples.
    pub convexity_violation: f64,
    /// Largest failure of discrete concavity over consecutive triples.
    pub concavity_violation: f64,
}

pub fn energy_along(fam: &GeodesicFamily) -> Result<EnergyProfile> {
    let points = fam
        .rows()
        .par_iter()
        .map(|(t, u)| Ok((*t, energy(u)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(energy_profile(points))
}

pub fn energy_profile(points: Vec<(f64, f64)>) -> EnergyProfile {
    let (t0, e0) = points[0];
    let (t1, e1) = points[points.len() - 1];
    let linearity_residual = points
        .iter()
        .map(|&(t, e)| (e - (e0 + (t - t0) / (t1 - t0) * (e1 - e0))).abs())
        .fold(0.0, f64::max);
    let mut convexity_violation: f64 = 0.0;
    let mut concavity_violation: f64 = 0.0;
    for w in points.windows(3) {
        let lambda = (w[2].0 - w[1].0) / (w[2].0 - w[0].0);
        let gap = lambda * w[0].1 + (1.0 - lambda) * w[2].1 - w[1].1;
        convexity_violation = convexity_violation.max(-gap);
        concavity_violation = concavity_violation.max(gap);
    }
    EnergyProfile {
        points,
        linearity_residual,
        convexity_violation,
        concavity_violation,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgeodesicReport {
    /// Largest failure of joint `(s, t)` convexity found by the scan.
    pub convexity_defect: f64,
    /// `max (u_t - (1 - t) u0 - t u1)`.
    pub boundary_excess: f64,
    pub tol: f64,
    pub ok: bool,
}

/// Joint convexity scan over the rows, endpoints included, plus the upper
/// bound by the affine interpolation.
pub fn subgeodesic_report(fam: &GeodesicFamily) -> Result<SubgeodesicReport> {
    let rows = fam.rows();
    let defect = joint_defect(&rows);
    let mut all: Vec<&ToricFunction> = rows.iter().map(|r| r.1).collect();
    all.dedup();
    let pts = probes(&all);
    let mut excess: f64 = 0.0;
    for (t, u) in &rows[1..rows.len() - 1] {
        let upper = affine_slice(&fam.u0, &fam.u1, *t)?;
        excess = excess.max(-inf_difference(&upper, u, &pts));
    }
    let tol = match &fam.u0 {
        ToricFunction::Pl(_) => 1e-9,
        ToricFunction::Grid(g) => g.h() * g.max_slopes().into_iter().fold(1.0, f64::max),
    };
    Ok(SubgeodesicReport {
        convexity_defect: defect,
        boundary_excess: excess,
        tol,
        ok: defect <= tol && excess <= tol,
    })
}

/// Largest failure of joint convexity along lines `s = s_b + m (t - t_b)`
/// through consecutive rows.
pub(crate) fn joint_defect(rows: &[(f64, &ToricFunction)]) -> f64 {
    let mut all: Vec<&ToricFunction> = rows.iter().map(|r| r.1).collect();
    all.dedup();
    let pts = probes(&all);
    let dirs = directions(rows[0].1.dim());
    (1..rows.len() - 1)
        .into_par_iter()
        .map(|k| {
            let (ta, ua) = rows[k - 1];
            let (tb, ub) = rows[k];
            let (tc, uc) = rows[k + 1];
            let lambda = (tc - tb) / (tc - ta);
            let mut worst: f64 = 0.0;
            for p in &pts {
                let vb = ub.eval(p);
                for m in &dirs {
                    let pa: Vec<f64> = p.iter().zip(m).map(|(x, d)| x - d * (tb - ta)).collect();
                    let pc: Vec<f64> = p.iter().zip(m).map(|(x, d)| x + d * (tc - tb)).collect();
                    if pc.iter().chain(&pa).any(|&x| x > 0.0) {
                        continue;
                    }
                    let rhs = lambda * ua.eval(&pa) + (1.0 - lambda) * uc.eval(&pc);
                    if vb.is_finite() && rhs.is_finite() {
                        worst = worst.max(vb - rhs);
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

pub fn is_subgeodesic(fam: &GeodesicFamily) -> bool {
    subgeodesic_report(fam).map(|r| r.ok).unwrap_or(false)
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    let mags = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut dirs = vec![vec![0.0; n]];
    for code in 1..3usize.pow(n as u32) {
        let mut base = vec![0.0; n];
        let mut rem = code;
        for v in base.iter_mut() {
            *v = (rem % 3) as f64 - 1.0;
            rem /= 3;
        }
        for m in mags {
            dirs.push(base.iter().map(|b| b * m).collect());
        }
    }
    dirs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    /// Which endpoint the row approaches.
    pub endpoint: usize,
    pub sup_deviation: f64,
    /// Fraction of the sample box where `|u_t - u_j| > ε`, one per epsilon.
    pub delta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub epsilons: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
    pub bounded: bool,
    /// `max(M0, M1)` for bounded endpoints.
    pub slope_bound: Option<f64>,
    /// Pass flags at `t -> 0` and `t -> 1`.
    pub pass: [bool; 2],
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.pass[0] && self.pass[1]
    }
}

/// Deviation of slices from the endpoints on `[-side, 0]^n`.
pub fn endpoint_convergence(fam: &GeodesicFamily, epsilons: &[f64], side: f64) -> ConvergenceReport {
    let pts: Vec<Vec<f64>> = match &fam.u0 {
        ToricFunction::Grid(_) => probes(&[&fam.u0]),
        ToricFunction::Pl(_) => {
            let count = 2001;
            (0..count)
                .map(|i| vec![-side + side * i as f64 / (count - 1) as f64])
                .collect()
        }
    };
    let bounded = fam.u0.is_bounded() && fam.u1.is_bounded();
    let slope_bound = bounded.then(|| fam.u0.sup_norm().max(fam.u1.sup_norm()));
    let mut rows = Vec::new();
    for (endpoint, target) in [(0usize, &fam.u0), (1, &fam.u1)] {
        let mut ordered: Vec<(f64, &ToricFunction)> = fam.t_samples.iter().copied().zip(&fam.slices).collect();
        // farthest first, so the list runs towards the endpoint
        if endpoint == 0 {
            ordered.reverse();
        }
        for (t, u) in ordered {
            let devs: Vec<f64> = pts.iter().map(|p| (u.eval(p) - target.eval(p)).abs()).collect();
            let sup_deviation = devs.iter().copied().fold(0.0, f64::max);
            let delta = epsilons
                .iter()
                .map(|&e| devs.iter().filter(|&&d| d > e).count() as f64 / devs.len() as f64)
                .collect();
            rows.push(ConvergenceRow {
                t,
                endpoint,
                sup_deviation,
                delta,
            });
        }
    }
    let pass = [0usize, 1].map(|j| {
        let mine: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.endpoint == j).collect();
        match slope_bound {
            Some(m) => mine
                .iter()
                .all(|r| r.sup_deviation <= (m + 1e-9) * (r.t - j as f64).abs() + 1e-9),
            None => (0..epsilons.len()).all(|e| {
                let seq: Vec<f64> = mine.iter().map(|r| r.delta[e]).collect();
                let monotone = seq.windows(2).all(|w| w[1] <= w[0] + 1e-12);
                let last = *seq.last().unwrap_or(&0.0);
                let first = seq.first().copied().unwrap_or(0.0);
                monotone && (last == 0.0 || last <= 0.5 * first)
            }),
        }
    });
    ConvergenceReport {
        epsilons: epsilons.to_vec(),
        rows,
        bounded,
        slope_bound,
        pass,
    }
}

#[cfg(test)]
mod tests;
