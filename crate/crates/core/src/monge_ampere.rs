//! Monge-Ampère measures, mixed measures and the energy functional
//! `BE(u) = ∫ u (dd^c u)^n` for toric functions.
//!
//! Complex Monge-Ampère mass of a toric `u` is `n!` times the real
//! Monge-Ampère mass of its convex avatar, i.e. `n!` times the volume of the
//! gradient image. In 1D the measure is the list of slope jumps; a positive
//! asymptotic slope `τ` puts the mass `n! ∏ τ_i` at the pole `s = -∞`.

use serde::{Deserialize, Serialize};

use crate::convex::legendre::transform;
use crate::convex::{Axis, BoxGrid, GridConvex, PlConvex, ToricFunction};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

/// Finitely supported measure on the closed box, plus the mass sitting at
/// the pole `s = (-∞, ..., -∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub singular_mass: f64,
    #[serde(rename = "total")]
    pub total_mass: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>, singular_mass: f64) -> Self {
        let total_mass = atoms.iter().map(|a| a.mass).sum::<f64>() + singular_mass;
        AtomicMeasure {
            atoms,
            singular_mass,
            total_mass,
        }
    }

    /// `∫ w dμ`; the pole contributes `singular_mass * inf w`.
    pub fn pair(&self, w: &ToricFunction) -> Result<f64> {
        let mut sum: f64 = self.atoms.iter().map(|a| w.eval(&a.point) * a.mass).sum();
        if self.singular_mass > 0.0 {
            if !w.is_bounded() {
                return Err(Error::InfiniteEnergy {
                    mass: self.singular_mass,
                });
            }
            sum += self.singular_mass * pole_value(w);
        }
        Ok(sum)
    }

    /// Linear combination of measures living on the same support points.
    fn combine(terms: &[(f64, &AtomicMeasure)]) -> AtomicMeasure {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut singular = 0.0;
        for (c, m) in terms {
            singular += c * m.singular_mass;
            for a in &m.atoms {
                match atoms.iter_mut().find(|b| b.point == a.point) {
                    Some(b) => b.mass += c * a.mass,
                    None => atoms.push(Atom {
                        point: a.point.clone(),
                        mass: c * a.mass,
                    }),
                }
            }
        }
        let scale: f64 = terms.iter().map(|(c, m)| c.abs() * m.total_mass).sum();
        atoms.retain(|a| a.mass.abs() > 1e-14 * scale.max(1.0));
        atoms.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap());
        AtomicMeasure::new(atoms, singular)
    }
}

/// Limit of a bounded toric function at the pole.
fn pole_value(w: &ToricFunction) -> f64 {
    match w {
        ToricFunction::Pl(f) => f.infimum(),
        ToricFunction::Grid(g) => g.values()[0],
    }
}

/// Normalization of the measure: complex (`n!` times real) or real.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Complex,
    Real,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MaOptions {
    pub normalization: Normalization,
    /// Cells per axis of the gradient lattice on grids; defaults by dimension.
    pub lattice: Option<usize>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn default_lattice(n: usize) -> usize {
    match n {
        1 => 4096,
        2 => 512,
        _ => 96,
    }
}

pub fn ma_measure(u: &ToricFunction) -> AtomicMeasure {
    ma_measure_with(u, &MaOptions::default())
}

pub fn ma_measure_with(u: &ToricFunction, opts: &MaOptions) -> AtomicMeasure {
    match u {
        ToricFunction::Pl(f) => ma_pl(f),
        ToricFunction::Grid(g) => ma_grid(g, opts),
    }
}

fn ma_pl(f: &PlConvex) -> AtomicMeasure {
    let atoms = f
        .breakpoints()
        .iter()
        .zip(f.slopes().windows(2))
        .map(|(&b, w)| Atom {
            point: vec![b],
            mass: w[1] - w[0],
        })
        .collect();
    AtomicMeasure::new(atoms, f.tail_slope())
}

/// Gradient-image measure: a cell-centered lattice over the slope box
/// `[τ_i, max difference quotient]` is assigned, cell by cell, to the node
/// maximizing `p . s - u(s)`. Cells landing on a face `s_i = 0` belong to
/// the boundary and are dropped.
fn ma_grid(g: &GridConvex, opts: &MaOptions) -> AtomicMeasure {
    let n = g.n();
    let norm = match opts.normalization {
        Normalization::Complex => factorial(n),
        Normalization::Real => 1.0,
    };
    let singular = norm * g.tail_slopes().iter().product::<f64>();
    let grid = g.grid();
    let cells = opts.lattice.unwrap_or_else(|| default_lattice(n));
    let mut axes = Vec::with_capacity(n);
    let mut cell_volume = 1.0;
    for (i, &tau) in g.tail_slopes().iter().enumerate() {
        let hi = g.max_slopes()[i].max(tau);
        if hi - tau <= 1e-15 {
            return AtomicMeasure::new(Vec::new(), singular);
        }
        let dp = (hi - tau) / cells as f64;
        cell_volume *= dp;
        axes.push(Axis::new(tau + 0.5 * dp, hi - 0.5 * dp, cells));
    }
    let lattice = BoxGrid::new(axes);
    let t = transform(&grid, g.values(), &lattice);
    let last = g.axis().len - 1;
    let mut counts = vec![0usize; grid.size()];
    for q in 0..lattice.size() {
        if let Some(node) = t.argmax(q) {
            if grid.multi_index(node).iter().all(|&i| i < last) {
                counts[node] += 1;
            }
        }
    }
    let atoms = counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(node, c)| Atom {
            point: grid.point(node),
            mass: norm * c as f64 * cell_volume,
        })
        .collect();
    AtomicMeasure::new(atoms, singular)
}

/// Mixed measure `dd^c u_1 ∧ ... ∧ dd^c u_n` by polarization of the diagonal
/// operator over nonempty subsets.
pub fn mixed_ma(us: &[&ToricFunction]) -> Result<AtomicMeasure> {
    mixed_ma_with(us, &MaOptions::default())
}

pub fn mixed_ma_with(us: &[&ToricFunction], opts: &MaOptions) -> Result<AtomicMeasure> {
    let Some(first) = us.first() else {
        return Err(Error::EmptyInput);
    };
    let n = first.dim();
    if us.len() != n {
        return Err(Error::DimensionMismatch(us.len(), n));
    }
    for u in us {
        if u.dim() != n {
            return Err(Error::DimensionMismatch(u.dim(), n));
        }
        first.sup_distance(u)?;
    }
    if us.iter().all(|u| *u == *first) {
        return Ok(ma_measure_with(first, opts));
    }
    let mut measures = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<&ToricFunction> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| us[i]).collect();
        let sum = sum_functions(&members)?;
        let sign = if (n - members.len()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        measures.push((sign / factorial(n), ma_measure_with(&sum, opts)));
    }
    let terms: Vec<(f64, &AtomicMeasure)> = measures.iter().map(|(c, m)| (*c, m)).collect();
    Ok(AtomicMeasure::combine(&terms))
}

fn sum_functions(fs: &[&ToricFunction]) -> Result<ToricFunction> {
    let mut acc = fs[0].clone();
    for f in &fs[1..] {
        acc = match (&acc, f) {
            (ToricFunction::Pl(a), ToricFunction::Pl(b)) => a.add(b).into(),
            (ToricFunction::Grid(a), ToricFunction::Grid(b)) => a.add(b)?.into(),
            _ => return Err(Error::IncompatibleGrids("mixed representations".into())),
        };
    }
    Ok(acc)
}

/// `BE(u) = ∫ u (dd^c u)^n`.
pub fn energy(u: &ToricFunction) -> Result<f64> {
    ma_measure(u).pair(u)
}

pub fn energy_with(u: &ToricFunction, opts: &MaOptions) -> Result<f64> {
    ma_measure_with(u, opts).pair(u)
}

/// `∫ u (dd^c u)^k ∧ (dd^c v)^{n-k}`.
pub fn mixed_energy(u: &ToricFunction, v: &ToricFunction, k: usize) -> Result<f64> {
    mixed_ma(&mixed_args(u, v, k)?)?.pair(u)
}

/// Total mass of `(dd^c u)^k ∧ (dd^c v)^{n-k}`.
pub fn mixed_mass(u: &ToricFunction, v: &ToricFunction, k: usize) -> Result<f64> {
    Ok(mixed_ma(&mixed_args(u, v, k)?)?.total_mass)
}

fn mixed_args<'a>(u: &'a ToricFunction, v: &'a ToricFunction, k: usize) -> Result<Vec<&'a ToricFunction>> {
    let n = u.dim();
    if k > n {
        return Err(Error::InvalidInput(format!("k = {k} exceeds dimension {n}")));
    }
    let mut args = vec![u; k];
    args.extend(std::iter::repeat_n(v, n - k));
    Ok(args)
}

/// Both sides of a pairing identity and whether they agree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tol: f64,
    pub ok: bool,
}

impl PairingCheck {
    fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = (lhs - rhs).abs();
        PairingCheck {
            lhs,
            rhs,
            residual,
            tol,
            ok: residual <= tol,
        }
    }
}

/// Default pairing tolerance: `1e-9` for exact 1D data, `10 h M` on grids.
pub fn pairing_tolerance(u: &ToricFunction, mass: f64) -> f64 {
    match u {
        ToricFunction::Pl(_) => 1e-9,
        ToricFunction::Grid(g) => 10.0 * g.h() * mass.max(1.0),
    }
}

/// `∫ u dd^c v ∧ T = ∫ v dd^c u ∧ T` with `T` the mixed measure of `witnesses`.
pub fn ibp_check(u: &ToricFunction, v: &ToricFunction, witnesses: &[&ToricFunction]) -> Result<PairingCheck> {
    let mut with_v = vec![v];
    with_v.extend_from_slice(witnesses);
    let mut with_u = vec![u];
    with_u.extend_from_slice(witnesses);
    let mv = mixed_ma(&with_v)?;
    let mu = mixed_ma(&with_u)?;
    let lhs = mv.pair(u)?;
    let rhs = mu.pair(v)?;
    let tol = pairing_tolerance(u, mu.total_mass.max(mv.total_mass));
    Ok(PairingCheck::new(lhs, rhs, tol))
}

/// `BE(u) - BE(v) = ∫ (u - v) Σ_k (dd^c u)^k ∧ (dd^c v)^{n-k}`.
pub fn energy_identity_check(u: &ToricFunction, v: &ToricFunction) -> Result<PairingCheck> {
    let lhs = energy(u)? - energy(v)?;
    let mut rhs = 0.0;
    let mut mass = 0.0f64;
    for k in 0..=u.dim() {
        let m = mixed_ma(&mixed_args(u, v, k)?)?;
        rhs += m.pair(u)? - m.pair(v)?;
        mass = mass.max(m.total_mass);
    }
    Ok(PairingCheck::new(lhs, rhs, pairing_tolerance(u, mass)))
}

/// Mixed energies `∫ u0 (dd^c u0)^k ∧ (dd^c u1)^{n-k}`, `k = 0..n`, against
/// the target `BE(u1)`. Equality for every `k` forces `u0 = u1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `BE(u1)`.
    pub energy: f64,
    pub mixed_vector: Vec<f64>,
    /// Total masses of the same mixed measures.
    pub mixed_masses: Vec<f64>,
    pub balance_ok: bool,
    pub tol: f64,
}

pub fn balance_vector(u0: &ToricFunction, u1: &ToricFunction) -> Result<EnergyReport> {
    let target = energy(u1)?;
    let mut mixed_vector = Vec::new();
    let mut mixed_masses = Vec::new();
    for k in 0..=u0.dim() {
        let m = mixed_ma(&mixed_args(u0, u1, k)?)?;
        mixed_vector.push(m.pair(u0)?);
        mixed_masses.push(m.total_mass);
    }
    let mass = mixed_masses.iter().fold(0.0f64, |a, b| a.max(*b));
    let tol = pairing_tolerance(u0, mass);
    let balance_ok = mixed_vector.iter().all(|e| (e - target).abs() <= tol);
    Ok(EnergyReport {
        energy: target,
        mixed_vector,
        mixed_masses,
        balance_ok,
        tol,
    })
}

/// `max{u, -α}`.
pub fn truncate(u: &ToricFunction, alpha: f64) -> Result<ToricFunction> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "truncation level {alpha} must be positive"
        )));
    }
    Ok(match u {
        ToricFunction::Pl(f) => f.max_const(-alpha).into(),
        ToricFunction::Grid(g) => g.max_const(-alpha).into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(lines: &[(f64, f64)]) -> ToricFunction {
        PlConvex::max_of_lines(lines).unwrap().into()
    }

    fn u0() -> ToricFunction {
        pl(&[(1.0, 0.0), (0.0, -1.0)])
    }

    fn u1() -> ToricFunction {
        pl(&[(0.5, 0.0), (0.0, -1.0)])
    }

    #[test]
    fn pl_measures() {
        let m = ma_measure(&u0());
        assert_eq!(
            m.atoms,
            vec![Atom {
                point: vec![-1.0],
                mass: 1.0
            }]
        );
        assert_eq!(m.total_mass, 1.0);
        // the geodesic slice at t = 0.4
        let t = 0.4;
        let slice = pl(&[(1.0, 0.0), (0.5, 0.5 * (t - 1.0)), (0.0, -1.0)]);
        let m = ma_measure(&slice);
        assert_eq!(m.atoms.len(), 2);
        assert!((m.atoms[0].point[0] - (-1.0 - t)).abs() < 1e-15 && m.atoms[0].mass == 0.5);
        assert!((m.atoms[1].point[0] - (t - 1.0)).abs() < 1e-15 && m.atoms[1].mass == 0.5);
    }

    #[test]
    fn energies() {
        assert_eq!(energy(&u0()).unwrap(), -1.0);
        assert_eq!(energy(&u1()).unwrap(), -0.5);
        assert_eq!(energy(&PlConvex::zero().into()).unwrap(), 0.0);
        let green: ToricFunction = PlConvex::affine(1.0, 0.0).into();
        assert_eq!(energy(&green), Err(Error::InfiniteEnergy { mass: 1.0 }));
        assert_eq!(mixed_energy(&u0(), &u1(), 0).unwrap(), -0.5);
        assert_eq!(mixed_energy(&u0(), &u1(), 1).unwrap(), -1.0);
        assert!(mixed_energy(&u0(), &u1(), 2).is_err());
    }

    #[test]
    fn pairings() {
        let c = ibp_check(&u0(), &u1(), &[]).unwrap();
        assert!(c.ok && c.lhs == -0.5 && c.rhs == -0.5);
        let c = energy_identity_check(&u0(), &u1()).unwrap();
        assert!(c.ok && c.lhs == -0.5 && c.residual == 0.0);
        // pole mass pairs against the bounded partner's infimum
        let green: ToricFunction = PlConvex::affine(1.0, 0.0).into();
        let c = ibp_check(&u0(), &green, &[]).unwrap();
        assert!(c.ok && c.lhs == -1.0);
    }

    #[test]
    fn balance_examples() {
        let r = balance_vector(&u0(), &u1()).unwrap();
        assert_eq!(r.mixed_vector, vec![-0.5, -1.0]);
        assert_eq!(r.energy, -0.5);
        assert!(!r.balance_ok);
        assert!(balance_vector(&u0(), &u0()).unwrap().balance_ok);
        let u = pl(&[(1.0, 0.0), (0.0, -2.0)]);
        let (a, b) = (truncate(&u, 1.0).unwrap(), truncate(&u, 2.0).unwrap());
        let r = balance_vector(&a, &b).unwrap();
        assert_eq!(r.mixed_masses, vec![1.0, 1.0]);
        assert!(!r.balance_ok);
    }

    #[test]
    fn truncation_examples() {
        let s: ToricFunction = PlConvex::affine(1.0, 0.0).into();
        assert_eq!(truncate(&s, 1.0).unwrap(), u0());
        assert_eq!(truncate(&u0(), 2.0).unwrap(), u0());
        assert_eq!(truncate(&u1(), 0.5).unwrap(), pl(&[(0.5, 0.0), (0.0, -0.5)]));
        assert!(truncate(&u0(), 0.0).is_err());
    }

    #[test]
    fn grid_measures_match_gradient_volumes() {
        let h = 0.05;
        let f: ToricFunction = GridConvex::sample(1, 4.0, h, vec![0.0], |s| s[0].max(-1.0))
            .unwrap()
            .into();
        let m = ma_measure(&f);
        assert!((m.total_mass - 1.0).abs() < 1e-12);
        assert!((energy(&f).unwrap() + 1.0).abs() < 1e-12);
        let g: ToricFunction = GridConvex::sample(2, 2.0, h, vec![0.0, 0.0], |s| s[0].max(s[1]).max(-1.0))
            .unwrap()
            .into();
        let m = ma_measure(&g);
        assert!((m.total_mass - 1.0).abs() < 0.02, "{}", m.total_mass);
        let real = ma_measure_with(
            &g,
            &MaOptions {
                normalization: Normalization::Real,
                lattice: None,
            },
        );
        assert!((real.total_mass - 0.5).abs() < 0.01);
    }

    #[test]
    fn grid_polarization() {
        let h = 0.1;
        let a: ToricFunction = GridConvex::sample(2, 2.0, h, vec![0.0, 0.0], |s| s[0].max(-1.0))
            .unwrap()
            .into();
        let b: ToricFunction = GridConvex::sample(2, 2.0, h, vec![0.0, 0.0], |s| s[1].max(-1.0))
            .unwrap()
            .into();
        let m = mixed_ma(&[&a, &b]).unwrap();
        // dd^c max{s1,-1} ∧ dd^c max{s2,-1} is a unit atom at (-1,-1)
        assert!((m.total_mass - 1.0).abs() < 0.02, "{}", m.total_mass);
        let heavy: f64 = m
            .atoms
            .iter()
            .filter(|x| x.point == vec![-1.0, -1.0])
            .map(|x| x.mass)
            .sum();
        assert!((heavy - 1.0).abs() < 0.02);
        assert_eq!(mixed_ma(&[&a, &a]).unwrap(), ma_measure(&a));
    }
}
