//! Self-check suite: twelve numerical criteria covering the worked example,
//! the energy identities, capacities and the singular constructions. Random
//! inputs come from a ChaCha stream derived from the run seed, so a fixed
//! seed reproduces every number.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::pl::probe_points;
use crate::convex::{
    conjugate_grid, rooftop, sample_pl, slab_envelope, EnvelopeOptions, GridConvex, PlConvex, ToricFunction,
};
use crate::error::{Error, Result};
use crate::geodesics::{
    energy_along, energy_profile, geodesic_family, geodesic_pl, psi_infimum, psi_n_family, rooftop_limit,
    singular_collapse_check, FamilyOptions, GeodesicFamily, Method,
};
use crate::monge_ampere::{
    balance_vector, energy, energy_identity_check, ibp_check, mixed_mass, truncate, Normalization,
};
use crate::toric_sets::{capacity, combine, extremal_function, reverse_bm_check, Constraint, Resolution, ToricCompact};

pub const CRITERIA: [&str; 12] = [
    "worked-example geodesic",
    "energy linearity",
    "capacity curve",
    "reverse Brunn-Minkowski",
    "energy identity and symmetry",
    "monotonicity and concavity",
    "geodesic bounds",
    "biconjugation",
    "rooftop limit",
    "psi_N infimum",
    "truncation and mixed masses",
    "normalization cross-check",
];

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Spacing of the slab oracle runs.
    pub slab_h: f64,
    /// Spacing of the `n = 2` grid runs.
    pub grid_h: f64,
    pub side: f64,
    /// `Real` drops the `n!` factor; used to confirm the suite notices.
    pub normalization: Normalization,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 42,
            slab_h: 0.02,
            grid_h: 0.05,
            side: 4.0,
            normalization: Normalization::Complex,
        }
    }
}

impl VerifyOptions {
    fn rng(&self, id: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        rng
    }

    fn resolution(&self) -> Resolution {
        let mut res = Resolution::new(self.side, self.grid_h);
        res.ma.normalization = self.normalization;
        res
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
    pub passed: bool,
}

pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    let ids: Vec<usize> = (1..=CRITERIA.len()).collect();
    run_selected(&ids, opts)
}

/// Runs the listed criteria (1-based ids); unknown ids fail.
pub fn run_selected(ids: &[usize], opts: &VerifyOptions) -> VerifyReport {
    let criteria: Vec<CriterionOutcome> = ids.par_iter().map(|&id| run(id, opts)).collect();
    VerifyReport {
        seed: opts.seed,
        passed: criteria.iter().all(|c| c.pass),
        criteria,
    }
}

/// Runs criterion `id` (1-based).
pub fn run(id: usize, opts: &VerifyOptions) -> CriterionOutcome {
    let start = Instant::now();
    let result = match id {
        1 => worked_example(opts),
        2 => energy_linearity(),
        3 => capacity_curve(),
        4 => reverse_bm(opts),
        5 => identities(opts),
        6 => monotonicity(opts),
        7 => bounds(opts),
        8 => biconjugation(opts),
        9 => rooftop_criterion(opts),
        10 => psi_criterion(opts),
        11 => truncation(),
        12 => normalization(opts),
        _ => Err(Error::InvalidInput(format!("no criterion {id}"))),
    };
    let (pass, detail) = match result {
        Ok(c) => c,
        Err(e) => (false, format!("error: {e}")),
    };
    CriterionOutcome {
        id,
        name: CRITERIA.get(id.wrapping_sub(1)).unwrap_or(&"unknown").to_string(),
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

type Check = Result<(bool, String)>;

/// Bounded toric function with zero boundary value: a max of lines through
/// `(0, 0)` and below, with a horizontal floor.
pub fn random_toric_pl(rng: &mut impl Rng) -> PlConvex {
    let mut lines = vec![(rng.gen_range(0.2..2.0), 0.0), (0.0, -rng.gen_range(0.5..3.0))];
    for _ in 0..rng.gen_range(0..3) {
        lines.push((rng.gen_range(0.05..3.0), -rng.gen_range(0.0..2.0)));
    }
    PlConvex::max_of_lines(&lines).expect("nonnegative slopes")
}

/// `n = 2` polytope inside the orthant: a box `s_i <= -m_i` with up to two
/// extra cuts `a . s <= b`, `a_1 + a_2 = 1`.
pub fn random_polytope(rng: &mut impl Rng) -> ToricCompact {
    let m = [rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5)];
    let mut constraints: Vec<Constraint> = (0..2)
        .map(|i| {
            let mut a = vec![0.0; 2];
            a[i] = 1.0;
            Constraint { a, b: -m[i] }
        })
        .collect();
    for _ in 0..rng.gen_range(0..=2) {
        let a1: f64 = rng.gen_range(0.1..0.9);
        let b = -(a1 * m[0] + (1.0 - a1) * m[1]) - rng.gen_range(0.0..0.5);
        constraints.push(Constraint {
            a: vec![a1, 1.0 - a1],
            b,
        });
    }
    ToricCompact::new(2, constraints).expect("nonempty polytope")
}

fn example() -> (PlConvex, PlConvex) {
    (
        PlConvex::max_of_lines(&[(1.0, 0.0), (0.0, -1.0)]).expect("valid"),
        PlConvex::max_of_lines(&[(0.5, 0.0), (0.0, -1.0)]).expect("valid"),
    )
}

fn interior_ts() -> Vec<f64> {
    (1..10).map(|k| k as f64 / 10.0).collect()
}

fn worked_example(opts: &VerifyOptions) -> Check {
    let (u0, u1) = example();
    let mut exact_err: f64 = 0.0;
    for t in interior_ts() {
        let closed = PlConvex::max_of_lines(&[(1.0, 0.0), (0.5, 0.5 * (t - 1.0)), (0.0, -1.0)])?;
        exact_err = exact_err.max(geodesic_pl(&u0, &u1, t).sup_distance(&closed));
    }
    let fam_opts = FamilyOptions {
        side: opts.side,
        h: opts.slab_h,
        t_steps: 11,
        ..FamilyOptions::default()
    };
    let (a, b): (ToricFunction, ToricFunction) = (u0.clone().into(), u1.clone().into());
    let slab = geodesic_family(&a, &b, &interior_ts(), Method::SlabOracle, &fam_opts)?;
    let mut slab_err: f64 = 0.0;
    for (&t, sl) in slab.t_samples.iter().zip(&slab.slices) {
        let g = sl.as_grid().expect("slab slices are grids");
        for s in g.axis().nodes() {
            slab_err = slab_err.max((g.eval(&[s]) - geodesic_pl(&u0, &u1, t).eval(s)).abs());
        }
    }
    let slab_tol = 2.0 * opts.slab_h;
    Ok((
        exact_err <= 1e-12 && slab_err <= slab_tol,
        format!("closed-form error {exact_err:.3e} (tol 1e-12); slab oracle error {slab_err:.3e} (tol {slab_tol:.3e})"),
    ))
}

fn energy_linearity() -> Check {
    let res = Resolution::default();
    let k0 = ToricCompact::threshold(1.0)?;
    let k1 = ToricCompact::threshold(2.0)?;
    let (cap0, cap1) = (capacity(&k0, &res)?, capacity(&k1, &res)?);
    let w0 = extremal_function(&k0, &res)?;
    let w1 = extremal_function(&k1, &res)?;
    let fam = geodesic_family(&w0, &w1, &interior_ts(), Method::Legendre, &FamilyOptions::default())?;
    let prof = energy_along(&fam)?;
    let mut closed_err: f64 = 0.0;
    let mut law_err: f64 = 0.0;
    for &(t, e) in &prof.points {
        closed_err = closed_err.max((e - (t / 2.0 - 1.0)).abs());
        law_err = law_err.max((e - ((t - 1.0) * cap0 - t * cap1)).abs());
    }
    let caps_ok = (cap0 - 1.0).abs() <= 1e-12 && (cap1 - 0.5).abs() <= 1e-12;
    Ok((
        closed_err <= 1e-12 && law_err <= 1e-12 && caps_ok,
        format!("|E - (t/2 - 1)| <= {closed_err:.3e}; capacity law error {law_err:.3e}; caps ({cap0}, {cap1})"),
    ))
}

fn capacity_curve() -> Check {
    let res = Resolution::default();
    let k0 = ToricCompact::threshold(1.0)?;
    let k1 = ToricCompact::threshold(2.0)?;
    let mut cap_err: f64 = 0.0;
    let mut energy_err: f64 = 0.0;
    for k in 0..=20 {
        let t = k as f64 / 20.0;
        let kt = combine(&k0, &k1, t)?;
        let cap = capacity(&kt, &res)?;
        cap_err = cap_err.max((cap - 1.0 / (1.0 + t)).abs());
        energy_err = energy_err.max((energy(&extremal_function(&kt, &res)?)? + cap).abs());
    }
    Ok((
        cap_err <= 1e-12 && energy_err <= 1e-12,
        format!("|Cap(K_t) - 1/(1+t)| <= {cap_err:.3e}; |E(w_K) + Cap(K)| <= {energy_err:.3e}"),
    ))
}

fn reverse_bm(opts: &VerifyOptions) -> Check {
    let res = opts.resolution();
    let ts: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let example = reverse_bm_check(
        &ToricCompact::threshold(1.0)?,
        &ToricCompact::threshold(2.0)?,
        &ts,
        &res,
    )?;
    let example_margin = example.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let mut rng = opts.rng(4);
    let pairs: Vec<(ToricCompact, ToricCompact)> = (0..50)
        .map(|_| (random_polytope(&mut rng), random_polytope(&mut rng)))
        .collect();
    let reports = pairs
        .par_iter()
        .map(|(a, b)| reverse_bm_check(a, b, &[0.25, 0.5, 0.75], &res))
        .collect::<Result<Vec<_>>>()?;
    let failures = reports.iter().filter(|r| !r.ok).count();
    let worst = reports
        .iter()
        .flat_map(|r| r.rows.iter().map(move |row| row.margin / r.tol))
        .fold(f64::INFINITY, f64::min);
    Ok((
        example_margin >= -1e-12 && failures == 0,
        format!(
            "example min margin {example_margin:.3e} (tol 1e-12); {failures}/50 random pairs below -5h*mass, worst margin/tol {worst:.3}"
        ),
    ))
}

fn identities(opts: &VerifyOptions) -> Check {
    let mut rng = opts.rng(5);
    let mut identity: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for _ in 0..100 {
        let u: ToricFunction = random_toric_pl(&mut rng).into();
        let v: ToricFunction = random_toric_pl(&mut rng).into();
        identity = identity.max(energy_identity_check(&u, &v)?.residual);
        symmetry = symmetry.max(ibp_check(&u, &v, &[])?.residual);
    }
    let (u0, u1) = example();
    let bal = balance_vector(&u0.into(), &u1.into())?;
    let vector_ok = bal.mixed_vector.len() == 2
        && (bal.mixed_vector[0] + 0.5).abs() <= 1e-12
        && (bal.mixed_vector[1] + 1.0).abs() <= 1e-12;
    let balance_ok = vector_ok && (bal.energy + 0.5).abs() <= 1e-12 && !bal.balance_ok;
    Ok((
        identity <= 1e-12 && symmetry <= 1e-12 && balance_ok,
        format!(
            "identity residual {identity:.3e}; symmetry residual {symmetry:.3e}; balance vector {:?}, E(u1) = {}, balanced = {}",
            bal.mixed_vector, bal.energy, bal.balance_ok
        ),
    ))
}

/// `max_i (a_i s + c_i(t))` with `c_i` convex and nonpositive on `[0, 1]`
/// and one line through the origin, so every slice has zero boundary value.
fn random_subgeodesic(rng: &mut impl Rng, ts: &[f64]) -> Result<GeodesicFamily> {
    let k = rng.gen_range(1..=3);
    let coeffs: Vec<(f64, f64, f64, f64)> = (0..=k)
        .map(|i| {
            let a = if i == 0 { 0.0 } else { rng.gen_range(0.05..3.0) };
            (
                a,
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.0..2.0),
            )
        })
        .collect();
    let top = rng.gen_range(0.2..3.0);
    let slice = |t: f64| -> Result<ToricFunction> {
        let mut lines = vec![(top, 0.0)];
        lines.extend(
            coeffs
                .iter()
                .map(|&(a, b0, b1, g)| (a, -(1.0 - t) * b0 - t * b1 + g * (t * t - t))),
        );
        Ok(PlConvex::max_of_lines(&lines)?.into())
    };
    let slices = ts.iter().map(|&t| slice(t)).collect::<Result<Vec<_>>>()?;
    GeodesicFamily::from_slices(slice(0.0)?, slice(1.0)?, ts.to_vec(), slices)
}

fn monotonicity(opts: &VerifyOptions) -> Check {
    let mut rng = opts.rng(6);
    let ts: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    let mut monotone_violation: f64 = 0.0;
    let mut concavity: f64 = 0.0;
    let mut convexity: f64 = 0.0;
    for _ in 0..100 {
        let u = random_toric_pl(&mut rng);
        let v = u.max(&random_toric_pl(&mut rng));
        let (eu, ev) = (energy(&u.clone().into())?, energy(&v.clone().into())?);
        monotone_violation = monotone_violation.max(eu - ev);
        let affine = ts
            .iter()
            .map(|&t| Ok((t, energy(&PlConvex::affine_combination(&u, &v, t).into())?)))
            .collect::<Result<Vec<_>>>()?;
        concavity = concavity.max(energy_profile(affine).concavity_violation);
        let inner = &ts[1..ts.len() - 1];
        let geo = geodesic_family(&u.into(), &v.into(), inner, Method::Legendre, &FamilyOptions::default())?;
        convexity = convexity.max(energy_along(&geo)?.convexity_violation);
        convexity = convexity.max(energy_along(&random_subgeodesic(&mut rng, inner)?)?.convexity_violation);
    }
    Ok((
        monotone_violation <= 1e-12 && concavity <= 1e-10 && convexity <= 1e-10,
        format!(
            "monotonicity violation {monotone_violation:.3e}; affine concavity residual {concavity:.3e}; subgeodesic convexity residual {convexity:.3e} (tol 1e-10)"
        ),
    ))
}

fn bounds(opts: &VerifyOptions) -> Check {
    let mut rng = opts.rng(7);
    let mut pairs = vec![example()];
    pairs.extend((0..100).map(|_| (random_toric_pl(&mut rng), random_toric_pl(&mut rng))));
    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    for (u0, u1) in &pairs {
        let (m0, m1) = (u0.sup_norm(), u1.sup_norm());
        for t in interior_ts() {
            let ut = geodesic_pl(u0, u1, t);
            let chord = PlConvex::affine_combination(u0, u1, t);
            let floor_t = u0.add_constant(-m1 * t).max(&u1.add_constant(-m0 * (1.0 - t)));
            // pointwise at the merged knots: all three are affine in between
            for s in probe_points(&[&ut, &chord, &floor_t]) {
                upper = upper.max(ut.eval(s) - chord.eval(s));
                lower = lower.max(floor_t.eval(s) - ut.eval(s));
            }
        }
    }
    Ok((
        upper <= 1e-12 && lower <= 1e-12,
        format!(
            "{} pairs: max excess over chord {upper:.3e}; max shortfall below lower bound {lower:.3e}",
            pairs.len()
        ),
    ))
}

fn random_grid(rng: &mut impl Rng, n: usize, side: f64, h: f64) -> Result<GridConvex> {
    if n == 1 {
        return sample_pl(&random_toric_pl(rng), side, h);
    }
    let mut planes = vec![(vec![0.0; n], -rng.gen_range(0.5..3.0))];
    for _ in 0..rng.gen_range(1..=4) {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        planes.push((a, -rng.gen_range(0.0..2.0)));
    }
    GridConvex::sample(n, side, h, vec![0.0; n], |s| {
        planes
            .iter()
            .map(|(a, b)| a.iter().zip(s).map(|(x, y)| x * y).sum::<f64>() + b)
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

fn biconjugation(opts: &VerifyOptions) -> Check {
    let mut rng = opts.rng(8);
    let mut pl_err: f64 = 0.0;
    for _ in 0..200 {
        let f = random_toric_pl(&mut rng);
        pl_err = pl_err.max(f.conjugate().conjugate().sup_distance(&f));
    }
    let mut grid_ratio: f64 = 0.0;
    for n in [1, 2] {
        for _ in 0..10 {
            let g = random_grid(&mut rng, n, opts.side, opts.grid_h)?;
            let back = conjugate_grid(&g, None)?.inverse();
            let lip = g.max_slopes().into_iter().fold(0.0, f64::max).max(1e-300);
            grid_ratio = grid_ratio.max(back.sup_distance(&g) / (2.0 * lip * g.h()));
        }
    }
    Ok((
        pl_err <= 1e-12 && grid_ratio <= 1.0,
        format!("PL biconjugate error {pl_err:.3e} (tol 1e-12); grid error / (2 Lip h) <= {grid_ratio:.3}"),
    ))
}

fn rooftop_criterion(opts: &VerifyOptions) -> Check {
    let mut rng = opts.rng(9);
    let mut bounded: f64 = 0.0;
    for _ in 0..50 {
        let u0 = random_toric_pl(&mut rng);
        let u1 = random_toric_pl(&mut rng);
        // u1 + C >= 0 >= u0 once C reaches the depth of u1
        let d = u0.sup_norm().max(u1.sup_norm());
        let rep = rooftop_limit(&u0.into(), &u1.into(), &[d, d + 0.5, 2.0 * d + 1.0])?;
        bounded = bounded.max(rep.rows.iter().map(|r| r.distance).fold(0.0, f64::max));
    }
    let zero: ToricFunction = PlConvex::zero().into();
    let s: ToricFunction = PlConvex::affine(1.0, 0.0).into();
    let cs = [0.0, 1.0, 10.0, 100.0];
    let green = rooftop_limit(&zero, &s, &cs)?;
    let mut green_err: f64 = 0.0;
    for &c in &cs {
        green_err = green_err.max(rooftop(&zero, &PlConvex::affine(1.0, c).into())?.sup_distance(&s)?);
    }
    let fam_opts = FamilyOptions {
        side: opts.side,
        h: opts.slab_h,
        t_steps: 11,
        ..FamilyOptions::default()
    };
    let collapse = singular_collapse_check(&zero, &s, &fam_opts)?;
    let flat_tol = 2.0 * opts.slab_h;
    Ok((
        bounded <= 1e-12 && green_err <= 1e-12 && green.collapse && !green.pass && collapse.t_dependence <= flat_tol,
        format!(
            "bounded pairs sup|p_C - u0| {bounded:.3e}; Green pair |p_C - s| {green_err:.3e}, collapse flagged {}; slab t-dependence {:.3e} (tol {flat_tol:.3e})",
            green.collapse, collapse.t_dependence
        ),
    ))
}

fn psi_criterion(opts: &VerifyOptions) -> Check {
    let mut rng = opts.rng(10);
    let h = opts.grid_h;
    // max{s, -N t} with N = 64 reaches s on [-6.4, 0] for t >= 0.1
    let side = opts.side.min(6.4);
    let g = sample_pl(&PlConvex::affine(1.0, 0.0), side, h)?;
    let ns: Vec<f64> = (0..=6).map(|k| f64::from(1 << k)).collect();
    let t_steps = 11;
    let inf = psi_infimum(&g, &ns, t_steps)?;
    let mut inf_err: f64 = 0.0;
    for k in 1..t_steps {
        inf_err = inf_err.max(inf.slice(k).sup_distance(&g));
    }
    let psis = ns
        .iter()
        .map(|&n| psi_n_family(&g, n, t_steps))
        .collect::<Result<Vec<_>>>()?;
    let grid = &psis[0].grid;
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let zero = sample_pl(&PlConvex::zero(), side, h)?;
    candidates.push(slab_envelope(&zero, &g, t_steps, &EnvelopeOptions::default())?.values);
    for _ in 0..20 {
        // planes a s + b t + c with a >= 1 and c + max(b, 0) <= 0
        let planes: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=4))
            .map(|_| {
                let b = rng.gen_range(-2.0..2.0);
                (rng.gen_range(1.0..3.0), b, -f64::max(b, 0.0) - rng.gen_range(0.0..1.0))
            })
            .collect();
        candidates.push(
            (0..grid.size())
                .map(|i| {
                    let p = grid.point(i);
                    planes
                        .iter()
                        .map(|(a, b, c)| a * p[0] + b * p[1] + c)
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect(),
        );
    }
    let mut excess = f64::NEG_INFINITY;
    for c in &candidates {
        for psi in &psis {
            for (x, y) in c.iter().zip(&psi.values) {
                excess = excess.max(x - y);
            }
        }
    }
    Ok((
        inf_err <= 1e-12 && excess <= 1e-12,
        format!(
            "inf_N psi_N vs s for t >= 0.1: {inf_err:.3e}; max excess of {} admissible slab functions over psi_N {excess:.3e}",
            candidates.len()
        ),
    ))
}

fn truncation() -> Check {
    let u: ToricFunction = PlConvex::max_of_lines(&[(1.0, 0.0), (0.0, -2.0)])?.into();
    let u0 = truncate(&u, 1.0)?;
    let u1 = truncate(&u, 2.0)?;
    let masses = [mixed_mass(&u0, &u1, 0)?, mixed_mass(&u0, &u1, 1)?];
    let mass_err = masses.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    let bal = balance_vector(&u0, &u1)?;
    Ok((
        mass_err <= 1e-12 && !bal.balance_ok,
        format!(
            "mixed masses {masses:?}; balance vector {:?} against E(u1) = {}, balanced = {}",
            bal.mixed_vector, bal.energy, bal.balance_ok
        ),
    ))
}

fn normalization(opts: &VerifyOptions) -> Check {
    let res = opts.resolution();
    let k = ToricCompact::orthant_box(&[1.0, 1.0])?;
    let cap = capacity(&k, &res)?;
    let tol = 5.0 * res.h;
    Ok((
        (cap - 1.0).abs() <= tol,
        format!("bidisk capacity {cap:.6} vs 1 (tol {tol:.3e})"),
    ))
}
