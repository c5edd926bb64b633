//! Convex-analysis substrate: exact 1D piecewise-linear functions, sampled
//! nD functions, envelopes, rooftops and Legendre transforms.
//!
//! A toric plurisubharmonic function `u` on the unit polydisk corresponds to
//! the convex, coordinatewise nondecreasing function `s -> u(e^{s_1}, ..., e^{s_n})`
//! on the negative orthant. Everything downstream works with the latter.

pub mod envelope;
pub mod grid;
pub mod legendre;
pub mod pl;
pub mod small_lp;

use serde::{Deserialize, Serialize};

pub use envelope::{grid_envelope, EnvelopeMethod, EnvelopeOptions, SlopeRange};
pub use grid::{Axis, BoxGrid, GridConvex, SlabFunction};
pub use pl::{lower_envelope_1d, PlConvex, SlopePl};

use crate::error::{Error, Result};

/// Either representation of a toric function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ToricFunction {
    #[serde(rename = "pl1d")]
    Pl(PlConvex),
    #[serde(rename = "grid")]
    Grid(GridConvex),
}

impl From<PlConvex> for ToricFunction {
    fn from(f: PlConvex) -> Self {
        ToricFunction::Pl(f)
    }
}

impl From<GridConvex> for ToricFunction {
    fn from(g: GridConvex) -> Self {
        ToricFunction::Grid(g)
    }
}

impl ToricFunction {
    pub fn dim(&self) -> usize {
        match self {
            ToricFunction::Pl(_) => 1,
            ToricFunction::Grid(g) => g.n(),
        }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        match self {
            ToricFunction::Pl(f) => f.eval(point[0]),
            ToricFunction::Grid(g) => g.eval(point),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ToricFunction::Pl(f) => f.is_bounded(),
            ToricFunction::Grid(g) => g.is_bounded(),
        }
    }

    pub fn tail_slopes(&self) -> Vec<f64> {
        match self {
            ToricFunction::Pl(f) => vec![f.tail_slope()],
            ToricFunction::Grid(g) => g.tail_slopes().to_vec(),
        }
    }

    /// `sup |u|`; over the box for grids.
    pub fn sup_norm(&self) -> f64 {
        match self {
            ToricFunction::Pl(f) => f.sup_norm(),
            ToricFunction::Grid(g) => g.sup_norm(),
        }
    }

    pub fn as_pl(&self) -> Option<&PlConvex> {
        match self {
            ToricFunction::Pl(f) => Some(f),
            ToricFunction::Grid(_) => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridConvex> {
        match self {
            ToricFunction::Grid(g) => Some(g),
            ToricFunction::Pl(_) => None,
        }
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        match (self, other) {
            (ToricFunction::Pl(a), ToricFunction::Pl(b)) => Ok(a.sup_distance(b)),
            (ToricFunction::Grid(a), ToricFunction::Grid(b)) => {
                a.compatible(b)?;
                Ok(a.sup_distance(b))
            }
            _ => Err(Error::IncompatibleGrids("mixed representations".into())),
        }
    }
}

/// Samples a 1D function on `[-S, 0]` with spacing `h`, keeping its tail slope.
pub fn sample_pl(f: &PlConvex, side: f64, h: f64) -> Result<GridConvex> {
    GridConvex::sample(1, side, h, vec![f.tail_slope()], |s| f.eval(s[0]))
}

/// Piecewise-linear interpolation of a 1D grid function.
pub fn grid_to_pl(g: &GridConvex) -> Result<PlConvex> {
    if g.n() != 1 {
        return Err(Error::DimensionMismatch(g.n(), 1));
    }
    let knots = g.axis().nodes();
    Ok(PlConvex::from_knots(&knots, g.values(), g.tail_slopes()[0]))
}

/// Largest convex nondecreasing function on the cube below `obstacle` at the
/// nodes, with asymptotic slopes at least `tail_slopes` beyond `-S`.
pub fn envelope_grid(
    n: usize,
    side: f64,
    h: f64,
    obstacle: Vec<f64>,
    tail_slopes: Vec<f64>,
    ranges: Option<Vec<SlopeRange>>,
    opts: &EnvelopeOptions,
) -> Result<GridConvex> {
    let template = GridConvex::unchecked(n, side, h, vec![0.0; obstacle.len()], tail_slopes.clone())?;
    let grid = template.grid();
    let ranges = match ranges {
        Some(r) => r,
        None => {
            let mins: Vec<Option<f64>> = tail_slopes.iter().map(|&t| Some(t.max(0.0))).collect();
            envelope::default_slope_ranges(&grid, &obstacle, &mins)
        }
    };
    let values = grid_envelope(&grid, &obstacle, &ranges, opts)?;
    Ok(GridConvex::from_box_values(&template, values, tail_slopes))
}

/// `P(u, v)`: largest convex nondecreasing minorant of `min{u, v}`.
pub fn rooftop(u: &ToricFunction, v: &ToricFunction) -> Result<ToricFunction> {
    match (u, v) {
        (ToricFunction::Pl(a), ToricFunction::Pl(b)) => Ok(a.min_envelope(b).into()),
        (ToricFunction::Grid(a), ToricFunction::Grid(b)) => Ok(rooftop_grid(a, b, &EnvelopeOptions::default())?.into()),
        _ => Err(Error::IncompatibleGrids("mixed representations".into())),
    }
}

pub fn rooftop_grid(a: &GridConvex, b: &GridConvex, opts: &EnvelopeOptions) -> Result<GridConvex> {
    a.compatible(b)?;
    let obstacle: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x.min(*y)).collect();
    let tails: Vec<f64> = a
        .tail_slopes()
        .iter()
        .zip(b.tail_slopes())
        .map(|(x, y)| x.max(*y))
        .collect();
    let grid = a.grid();
    let hi_a = grid::forward_dq_range(&grid, a.values());
    let hi_b = grid::forward_dq_range(&grid, b.values());
    let ranges = tails
        .iter()
        .zip(hi_a.iter().zip(&hi_b))
        .map(|(&t, (ra, rb))| SlopeRange::new(t, ra.1.max(rb.1)))
        .collect();
    envelope_grid(a.n(), a.side(), a.h(), obstacle, tails, Some(ranges), opts)
}

/// Discrete conjugate of a grid function on a slope lattice.
#[derive(Clone, Debug)]
pub struct GridConjugate {
    pub lattice: BoxGrid,
    /// `+inf` where some `p_i` is below the tail slope (the supremum diverges).
    pub values: Vec<f64>,
    primal: GridConvex,
}

impl GridConjugate {
    /// Inverse transform back onto the primal grid.
    pub fn inverse(&self) -> GridConvex {
        let grid = self.primal.grid();
        let back = legendre::transform(&self.lattice, &self.values, &grid).values;
        GridConvex::from_box_values(&self.primal, back, self.primal.tail_slopes().to_vec())
    }

    pub fn primal(&self) -> &GridConvex {
        &self.primal
    }

    /// `(1 - t) F0 + t F1` on a shared lattice.
    pub fn affine_combination(a: &Self, b: &Self, t: f64) -> Result<Self> {
        if a.lattice != b.lattice {
            return Err(Error::IncompatibleGrids("different slope lattices".into()));
        }
        a.primal.compatible(&b.primal)?;
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| {
                if x.is_infinite() || y.is_infinite() {
                    f64::INFINITY
                } else {
                    (1.0 - t) * x + t * y
                }
            })
            .collect();
        let tails = a
            .primal
            .tail_slopes()
            .iter()
            .zip(b.primal.tail_slopes())
            .map(|(x, y)| x.max(*y))
            .collect();
        let primal = GridConvex::from_box_values(&a.primal, a.primal.values().to_vec(), tails);
        Ok(GridConjugate {
            lattice: a.lattice.clone(),
            values,
            primal,
        })
    }
}

/// Slope lattice `[0, p_max]^n` fine enough that the biconjugate defect is at
/// most `Lip * h` where `Lip = p_max`.
pub fn conjugate_lattice(f: &GridConvex, p_max: f64) -> BoxGrid {
    let n = f.n();
    let len = if p_max > 0.0 {
        ((n as f64 * f.side() / f.h()).ceil() as usize + 1).min(4096)
    } else {
        1
    };
    BoxGrid::new(vec![Axis::new(0.0, p_max.max(0.0), len); n])
}

/// `p -> sup_{s <= 0} (p . s - f(s))` sampled on `lattice`; pass `None` for
/// the default lattice over `[0, max slope]`.
pub fn conjugate_grid(f: &GridConvex, lattice: Option<BoxGrid>) -> Result<GridConjugate> {
    let lattice = match lattice {
        Some(l) => l,
        None => {
            let p_max = f
                .max_slopes()
                .into_iter()
                .chain(f.tail_slopes().iter().copied())
                .fold(0.0, f64::max);
            conjugate_lattice(f, p_max)
        }
    };
    if lattice.dim() != f.n() {
        return Err(Error::DimensionMismatch(lattice.dim(), f.n()));
    }
    for (ax, &tail) in lattice.axes.iter().zip(f.tail_slopes()) {
        if ax.hi < tail {
            return Err(Error::ResolutionTooCoarse(format!(
                "slope box ends at {} below tail slope {tail}",
                ax.hi
            )));
        }
    }
    let values: Vec<f64> = legendre::transform(&f.grid(), f.values(), &lattice)
        .values
        .into_iter()
        .enumerate()
        .map(|(q, v)| {
            let p = lattice.point(q);
            if p.iter().zip(f.tail_slopes()).any(|(pi, t)| pi < t) {
                f64::INFINITY
            } else {
                v
            }
        })
        .collect();
    Ok(GridConjugate {
        lattice,
        values,
        primal: f.clone(),
    })
}

/// Largest jointly convex function on `[-S, 0]^n x [0, 1]`, nonpositive, with
/// the `t = 0` and `t = 1` rows bounded above by `u0` and `u1`.
pub fn slab_envelope(u0: &GridConvex, u1: &GridConvex, t_steps: usize, opts: &EnvelopeOptions) -> Result<SlabFunction> {
    u0.compatible(u1)?;
    if t_steps < 3 {
        return Err(Error::ResolutionTooCoarse(format!(
            "{t_steps} t-steps; need at least 3"
        )));
    }
    let n = u0.n();
    let t_axis = Axis::new(0.0, 1.0, t_steps);
    let mut axes = vec![u0.axis(); n];
    axes.push(t_axis);
    let grid = BoxGrid::new(axes);
    let rows = t_steps;
    let mut obstacle = vec![0.0; grid.size()];
    for (i, chunk) in obstacle.chunks_mut(rows).enumerate() {
        chunk[0] = u0.values()[i];
        chunk[rows - 1] = u1.values()[i];
    }
    let tails: Vec<f64> = u0
        .tail_slopes()
        .iter()
        .zip(u1.tail_slopes())
        .map(|(a, b)| a.max(*b))
        .collect();
    let dq0 = grid::forward_dq_range(&u0.grid(), u0.values());
    let dq1 = grid::forward_dq_range(&u1.grid(), u1.values());
    let mut ranges: Vec<SlopeRange> = tails
        .iter()
        .zip(dq0.iter().zip(&dq1))
        .map(|(&t, (a, b))| SlopeRange::new(t.max(0.0), a.1.max(b.1)))
        .collect();
    let m = u0.sup_norm() + u1.sup_norm();
    ranges.push(SlopeRange::new(-m, m));
    let values = grid_envelope(&grid, &obstacle, &ranges, opts)?;
    Ok(SlabFunction {
        n,
        side: u0.side(),
        h: u0.h(),
        t_axis,
        grid,
        values,
        tail_slopes: tails,
    })
}

/// [`slab_envelope`] for 1D piecewise-linear endpoints sampled on `[-S, 0]`.
pub fn slab_envelope_pl(
    u0: &PlConvex,
    u1: &PlConvex,
    side: f64,
    h: f64,
    t_steps: usize,
    opts: &EnvelopeOptions,
) -> Result<SlabFunction> {
    slab_envelope(&sample_pl(u0, side, h)?, &sample_pl(u1, side, h)?, t_steps, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega(c: f64) -> PlConvex {
        PlConvex::max_of_lines(&[(1.0 / c, 0.0), (0.0, -1.0)]).unwrap()
    }

    #[test]
    fn toric_function_json() {
        let f: ToricFunction = omega(1.0).into();
        let js = serde_json::to_string(&f).unwrap();
        assert_eq!(
            js,
            r#"{"type":"pl1d","breakpoints":[-1.0],"slopes":[0.0,1.0],"anchor":0.0}"#
        );
        let back: ToricFunction =
            serde_json::from_str(r#"{"type":"pl1d","breakpoints":[-1],"slopes":[0,1],"anchor":0}"#).unwrap();
        assert_eq!(back, f);
        let g: ToricFunction = GridConvex::sample(2, 1.0, 0.5, vec![0.0, 0.0], |s| s[0].max(s[1]).max(-1.0))
            .unwrap()
            .into();
        let js = serde_json::to_string(&g).unwrap();
        assert!(js.starts_with(r#"{"type":"grid","n":2,"S":1.0,"h":0.5"#));
        assert_eq!(serde_json::from_str::<ToricFunction>(&js).unwrap(), g);
    }

    #[test]
    fn rooftop_examples() {
        let (u0, u1): (ToricFunction, ToricFunction) = (omega(1.0).into(), omega(2.0).into());
        assert_eq!(rooftop(&u0, &u1).unwrap(), u0);
        assert_eq!(rooftop(&u1, &u1).unwrap(), u1);
        let s = PlConvex::affine(1.0, 0.0);
        let r = rooftop(&PlConvex::zero().into(), &s.add_constant(3.0).into()).unwrap();
        assert_eq!(r, s.into());
    }

    #[test]
    fn grid_rooftop_matches_pl() {
        let (a, b) = (omega(1.0), PlConvex::max_of_lines(&[(0.5, 0.0), (0.0, -3.0)]).unwrap());
        let exact = a.min_envelope(&b);
        let ga = sample_pl(&a, 8.0, 0.05).unwrap();
        let gb = sample_pl(&b, 8.0, 0.05).unwrap();
        let r = rooftop_grid(&ga, &gb, &EnvelopeOptions::default()).unwrap();
        for (x, v) in ga.axis().nodes().iter().zip(r.values()) {
            assert!((exact.eval(*x) - v).abs() < 0.01, "at {x}: {v} vs {}", exact.eval(*x));
        }
    }

    #[test]
    fn conjugate_grid_requires_tail_coverage() {
        let g = GridConvex::sample(1, 2.0, 0.5, vec![1.0], |s| s[0]).unwrap();
        let lattice = BoxGrid::new(vec![Axis::new(0.0, 0.5, 3)]);
        assert!(matches!(
            conjugate_grid(&g, Some(lattice)),
            Err(Error::ResolutionTooCoarse(_))
        ));
    }

    #[test]
    fn slab_needs_rows() {
        let g = sample_pl(&omega(1.0), 2.0, 0.5).unwrap();
        assert!(matches!(
            slab_envelope(&g, &g, 2, &EnvelopeOptions::default()),
            Err(Error::ResolutionTooCoarse(_))
        ));
    }
}
