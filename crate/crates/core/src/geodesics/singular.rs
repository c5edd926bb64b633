//! Endpoint data outside the finite-energy class: rooftop limits, the
//! `ψ_N` barrier, collapse of the slab envelope onto `P(g_{u0}, g_{u1})`,
//! and subgeodesic rays.

use serde::{Deserialize, Serialize};

use super::{geodesic_pl, joint_defect, FamilyOptions};
use crate::convex::grid::{Axis, BoxGrid};
use crate::convex::{
    rooftop, rooftop_grid, sample_pl, slab_envelope, GridConvex, PlConvex, SlabFunction, ToricFunction,
};
use crate::error::{Error, Result};

fn add_constant(u: &ToricFunction, c: f64) -> ToricFunction {
    match u {
        ToricFunction::Pl(f) => f.add_constant(c).into(),
        ToricFunction::Grid(g) => {
            let values = g.values().iter().map(|v| v + c).collect();
            GridConvex::from_box_values(g, values, g.tail_slopes().to_vec()).into()
        }
    }
}

fn singular(u: &ToricFunction) -> bool {
    u.tail_slopes().iter().any(|&t| t > 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RooftopRow {
    pub c: f64,
    /// `sup |p_C - u0|`.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RooftopReport {
    pub rows: Vec<RooftopRow>,
    /// `p_C` nondecreasing along the schedule.
    pub monotone: bool,
    /// First `C` with `p_C = u0` within tolerance.
    pub stabilized_at: Option<f64>,
    pub pass: bool,
    /// A failed limit with a pole in the data: the expected collapse.
    pub collapse: bool,
    pub limit: ToricFunction,
}

/// `p_C = P(u0, u1 + C)` along an increasing schedule of `C`.
pub fn rooftop_limit(u0: &ToricFunction, u1: &ToricFunction, cs: &[f64]) -> Result<RooftopReport> {
    if cs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if cs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("C schedule must increase".into()));
    }
    let tol = match u0 {
        ToricFunction::Pl(_) => 1e-12,
        ToricFunction::Grid(g) => g.h() * g.max_slopes().into_iter().fold(1.0, f64::max),
    };
    let mut rows = Vec::with_capacity(cs.len());
    let mut monotone = true;
    let mut prev: Option<ToricFunction> = None;
    for &c in cs {
        let p = rooftop(u0, &add_constant(u1, c))?;
        if let Some(q) = &prev {
            let pts = super::probes(&[q, &p]);
            monotone &= pts.iter().all(|x| p.eval(x) >= q.eval(x) - tol);
        }
        rows.push(RooftopRow {
            c,
            distance: p.sup_distance(u0)?,
        });
        prev = Some(p);
    }
    let stabilized_at = rows.iter().find(|r| r.distance <= tol).map(|r| r.c);
    let pass = rows.last().is_some_and(|r| r.distance <= tol);
    Ok(RooftopReport {
        rows,
        monotone,
        stabilized_at,
        pass,
        collapse: !pass && (singular(u0) || singular(u1)),
        limit: prev.expect("nonempty schedule"),
    })
}

fn slab_grid(g: &GridConvex, t_steps: usize) -> (Axis, BoxGrid) {
    let t_axis = Axis::new(0.0, 1.0, t_steps);
    let mut axes = vec![g.axis(); g.n()];
    axes.push(t_axis);
    (t_axis, BoxGrid::new(axes))
}

/// `ψ_N(s, t) = max{g(s), -N t}` on the slab.
pub fn psi_n_family(g: &GridConvex, n: f64, t_steps: usize) -> Result<SlabFunction> {
    if !singular(&g.clone().into()) {
        return Err(Error::InvalidInput(
            "ψ_N needs a pole: some tail slope must be positive".into(),
        ));
    }
    if !(n > 0.0) {
        return Err(Error::InvalidInput(format!("N = {n} must be positive")));
    }
    if t_steps < 2 {
        return Err(Error::ResolutionTooCoarse(format!("{t_steps} t-steps")));
    }
    let (t_axis, grid) = slab_grid(g, t_steps);
    let values = g
        .values()
        .iter()
        .flat_map(|&v| (0..t_steps).map(move |k| v.max(-n * t_axis.node(k))))
        .collect();
    Ok(SlabFunction {
        n: g.n(),
        side: g.side(),
        h: g.h(),
        t_axis,
        grid,
        values,
        tail_slopes: g.tail_slopes().to_vec(),
    })
}

/// Pointwise infimum of `ψ_N` over a schedule of `N`.
pub fn psi_infimum(g: &GridConvex, ns: &[f64], t_steps: usize) -> Result<SlabFunction> {
    let mut it = ns.iter();
    let first = it.next().ok_or(Error::EmptyInput)?;
    let mut acc = psi_n_family(g, *first, t_steps)?;
    for &n in it {
        let next = psi_n_family(g, n, t_steps)?;
        acc.values
            .iter_mut()
            .zip(&next.values)
            .for_each(|(a, b)| *a = a.min(*b));
    }
    Ok(acc)
}

/// The singularity part `g_u = τ . s` of a toric function.
pub fn singular_part(u: &GridConvex) -> GridConvex {
    let grid = u.grid();
    let tails = u.tail_slopes().to_vec();
    let values = (0..grid.size())
        .map(|i| grid.point(i).iter().zip(&tails).map(|(s, t)| s * t).sum())
        .collect();
    GridConvex::from_box_values(u, values, tails)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub tail_slopes: [Vec<f64>; 2],
    /// `max (u_t - P(g_{u0}, g_{u1}))` over interior rows.
    pub rooftop_excess: f64,
    /// `max |u_t - P(g_{u0}, g_{u1})|` over interior rows.
    pub rooftop_deviation: f64,
    /// `max |u_t - u_{t'}|` between interior rows.
    pub t_dependence: f64,
    /// `sup |u_t - u_j|` at the rows next to `t = 0` and `t = 1`.
    pub endpoint_gap: [f64; 2],
    /// Both endpoints coincide with their singularity parts.
    pub self_singular: bool,
    pub tol: f64,
    pub ok: bool,
    /// A pole is present and the envelope detaches from the data at an endpoint.
    pub collapse: bool,
}

/// Compares the slab envelope with the rooftop of the singularity parts.
pub fn singular_collapse_check(u0: &ToricFunction, u1: &ToricFunction, opts: &FamilyOptions) -> Result<CollapseReport> {
    let (g0, g1) = match (u0, u1) {
        (ToricFunction::Pl(a), ToricFunction::Pl(b)) => {
            (sample_pl(a, opts.side, opts.h)?, sample_pl(b, opts.side, opts.h)?)
        }
        (ToricFunction::Grid(a), ToricFunction::Grid(b)) => (a.clone(), b.clone()),
        _ => return Err(Error::IncompatibleGrids("mixed representations".into())),
    };
    let (s0, s1) = (singular_part(&g0), singular_part(&g1));
    let p = rooftop_grid(&s0, &s1, &opts.envelope)?;
    let slab = slab_envelope(&g0, &g1, opts.t_steps, &opts.envelope)?;
    let rows = opts.t_steps;
    let interior: Vec<GridConvex> = (1..rows - 1).map(|k| slab.slice(k)).collect();
    let mid = &interior[interior.len() / 2];
    let mut excess = f64::NEG_INFINITY;
    let mut deviation: f64 = 0.0;
    let mut t_dependence: f64 = 0.0;
    for sl in &interior {
        for ((v, q), m) in sl.values().iter().zip(p.values()).zip(mid.values()) {
            excess = excess.max(v - q);
            deviation = deviation.max((v - q).abs());
            t_dependence = t_dependence.max((v - m).abs());
        }
    }
    let gap = |a: &GridConvex, b: &GridConvex| a.sup_distance(b);
    let endpoint_gap = [gap(&interior[0], &g0), gap(&interior[interior.len() - 1], &g1)];
    let self_singular = g0.sup_distance(&s0) <= 1e-12 && g1.sup_distance(&s1) <= 1e-12;
    let lip = g0.max_slopes().into_iter().chain(g1.max_slopes()).fold(1.0, f64::max);
    let tol = 2.0 * opts.h * lip;
    let ok = excess <= tol && (!self_singular || (deviation <= tol && t_dependence <= tol));
    let has_pole = singular(u0) || singular(u1);
    Ok(CollapseReport {
        tail_slopes: [g0.tail_slopes().to_vec(), g1.tail_slopes().to_vec()],
        rooftop_excess: excess,
        rooftop_deviation: deviation,
        t_dependence,
        endpoint_gap,
        self_singular,
        tol,
        ok,
        collapse: has_pole && endpoint_gap.iter().any(|&g| g > tol),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayReport {
    pub ts: Vec<f64>,
    pub slices: Vec<PlConvex>,
    pub convexity_defect: f64,
    /// `sup |φ_t - (u1 + w1)|` at the largest sampled `t`.
    pub gap_at_zero: f64,
    /// `sup |φ_t - (u0 + w1 + w)|` at the smallest sampled `t`.
    pub gap_at_neg_infinity: f64,
}

/// `φ_t = u_{e^t} + w1 + max{w, t}` for `t < 0`.
pub fn subgeodesic_ray(u0: &PlConvex, u1: &PlConvex, w1: &PlConvex, w: &PlConvex, ts: &[f64]) -> Result<RayReport> {
    if ts.len() < 3 {
        return Err(Error::InvalidInput("need at least three ray samples".into()));
    }
    if ts.iter().any(|t| !(*t < 0.0 && t.is_finite())) || ts.windows(2).any(|x| x[1] <= x[0]) {
        return Err(Error::InvalidInput("ray samples must increase strictly below 0".into()));
    }
    let slices: Vec<PlConvex> = ts
        .iter()
        .map(|&t| geodesic_pl(u0, u1, t.exp()).add(w1).add(&w.max_const(t)))
        .collect();
    let wrapped: Vec<ToricFunction> = slices.iter().cloned().map(Into::into).collect();
    let rows: Vec<(f64, &ToricFunction)> = ts.iter().copied().zip(&wrapped).collect();
    let convexity_defect = joint_defect(&rows);
    let at_zero = u1.add(w1);
    let at_neg_infinity = u0.add(w1).add(w);
    Ok(RayReport {
        ts: ts.to_vec(),
        gap_at_zero: slices[slices.len() - 1].sup_distance(&at_zero),
        gap_at_neg_infinity: slices[0].sup_distance(&at_neg_infinity),
        slices,
        convexity_defect,
    })
}
