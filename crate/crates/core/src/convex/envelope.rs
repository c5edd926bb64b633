//! Largest convex minorants of obstacles sampled on box grids.
//!
//! Two independent evaluations are provided:
//!
//! * [`EnvelopeMethod::Legendre`] takes the discrete biconjugate over a slope
//!   lattice. It is a supremum of affine minorants whose slopes are restricted
//!   to the lattice, so it never exceeds the true envelope and the defect is at
//!   most `sum_i (dp_i / 2) * extent_i`.
//! * [`EnvelopeMethod::Exact`] evaluates the lower facet complex of the lifted
//!   nodes at every node by solving the supporting-hyperplane linear program.
//!
//! Slope bounds per axis encode monotonicity (`lo >= 0` on log-modulus axes)
//! and asymptotic tails beyond the box (`lo >= tail slope`).

use rayon::prelude::*;

use super::grid::{forward_dq_range, Axis, BoxGrid};
use super::legendre::transform;
use super::small_lp::StandardLp;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EnvelopeMethod {
    #[default]
    Legendre,
    Exact,
}

/// Admissible range of the partial derivative along one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeRange {
    pub lo: f64,
    pub hi: f64,
}

impl SlopeRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        SlopeRange { lo, hi: hi.max(lo) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeOptions {
    pub method: EnvelopeMethod,
    /// Target bound on the lattice defect of the Legendre path; `None` means
    /// a tenth of the finest grid step.
    pub target_error: Option<f64>,
    pub max_lattice: usize,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        EnvelopeOptions {
            method: EnvelopeMethod::Legendre,
            target_error: None,
            max_lattice: 2048,
        }
    }
}

impl EnvelopeOptions {
    pub fn exact() -> Self {
        EnvelopeOptions {
            method: EnvelopeMethod::Exact,
            ..Self::default()
        }
    }
}

/// Slope ranges read off the obstacle's difference quotients, with lower
/// bounds raised to `min_slopes` where given.
pub fn default_slope_ranges(grid: &BoxGrid, obstacle: &[f64], min_slopes: &[Option<f64>]) -> Vec<SlopeRange> {
    forward_dq_range(grid, obstacle)
        .into_iter()
        .zip(min_slopes)
        .map(|((lo, hi), m)| match m {
            Some(m) => SlopeRange::new(lo.max(*m), hi),
            None => SlopeRange::new(lo, hi),
        })
        .collect()
}

/// Slope lattice realizing the requested defect bound.
pub fn slope_lattice(grid: &BoxGrid, ranges: &[SlopeRange], target: f64, max_len: usize) -> BoxGrid {
    let d = grid.dim();
    let axes = grid
        .axes
        .iter()
        .zip(ranges)
        .map(|(ax, r)| {
            let width = r.hi - r.lo;
            let extent = ax.hi - ax.lo;
            if width <= 0.0 || extent <= 0.0 {
                return Axis::new(r.lo, r.lo, 1);
            }
            let dp = 2.0 * target / (d as f64 * extent);
            let len = ((width / dp).ceil() as usize + 1).clamp(2, max_len.max(2));
            Axis::new(r.lo, r.hi, len)
        })
        .collect();
    BoxGrid::new(axes)
}

/// Largest convex function on the grid, with derivatives in `ranges`, lying
/// below `obstacle` at every node. `+inf` obstacle entries impose nothing.
pub fn grid_envelope(
    grid: &BoxGrid,
    obstacle: &[f64],
    ranges: &[SlopeRange],
    opts: &EnvelopeOptions,
) -> Result<Vec<f64>> {
    if obstacle.len() != grid.size() {
        return Err(Error::IncompatibleGrids(format!(
            "obstacle has {} entries, grid {}",
            obstacle.len(),
            grid.size()
        )));
    }
    if ranges.len() != grid.dim() {
        return Err(Error::DimensionMismatch(ranges.len(), grid.dim()));
    }
    if !obstacle.iter().any(|v| v.is_finite()) {
        return Err(Error::EmptyInput);
    }
    match opts.method {
        EnvelopeMethod::Legendre => {
            let h_min = grid
                .axes
                .iter()
                .filter(|a| a.len > 1)
                .map(Axis::step)
                .fold(f64::INFINITY, f64::min);
            let target = opts.target_error.unwrap_or(0.1 * h_min);
            let lattice = slope_lattice(grid, ranges, target, opts.max_lattice);
            let dual = transform(grid, obstacle, &lattice);
            let env = transform(&lattice, &dual.values, grid).values;
            Ok(env.into_iter().zip(obstacle).map(|(e, &o)| e.min(o)).collect())
        }
        EnvelopeMethod::Exact => exact_envelope(grid, obstacle, ranges),
    }
}

fn exact_envelope(grid: &BoxGrid, obstacle: &[f64], ranges: &[SlopeRange]) -> Result<Vec<f64>> {
    let d = grid.dim();
    let points: Vec<(Vec<f64>, f64)> = (0..grid.size())
        .filter(|&i| obstacle[i].is_finite())
        .map(|i| (grid.point(i), obstacle[i]))
        .collect();
    (0..grid.size())
        .into_par_iter()
        .map(|node| {
            let x0 = grid.point(node);
            // dual of  max a.x0 + b  s.t.  a.x_j + b <= o_j,  lo <= a <= hi
            let mut rhs = x0.clone();
            rhs.push(1.0);
            let mut lp = StandardLp::new(rhs);
            let mut col = vec![0.0; d + 1];
            for (x, o) in &points {
                col[..d].copy_from_slice(x);
                col[d] = 1.0;
                lp.add_column(*o, &col);
            }
            for (i, r) in ranges.iter().enumerate() {
                col.iter_mut().for_each(|c| *c = 0.0);
                if r.lo.is_finite() {
                    col[i] = -1.0;
                    lp.add_column(-r.lo, &col);
                }
                if r.hi.is_finite() {
                    col[i] = 1.0;
                    lp.add_column(r.hi, &col);
                }
            }
            lp.solve().map(|s| s.value.min(obstacle[node]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slab_grid(h: f64, dt: f64) -> BoxGrid {
        BoxGrid::new(vec![
            Axis::with_step(-3.0, 0.0, h).unwrap(),
            Axis::with_step(0.0, 1.0, dt).unwrap(),
        ])
    }

    #[test]
    fn one_dimensional_methods_agree_with_hull() {
        let grid = BoxGrid::new(vec![Axis::with_step(-4.0, 0.0, 0.25).unwrap()]);
        // min of the two extremal profiles is already convex; a kinked obstacle is not
        let obstacle: Vec<f64> = grid.axes[0]
            .nodes()
            .iter()
            .map(|&s| (s.max(-1.0)).min(0.3 * s.sin() - 0.2).min(0.0))
            .collect();
        let ranges = default_slope_ranges(&grid, &obstacle, &[None]);
        let fast = grid_envelope(&grid, &obstacle, &ranges, &EnvelopeOptions::default()).unwrap();
        let exact = grid_envelope(&grid, &obstacle, &ranges, &EnvelopeOptions::exact()).unwrap();
        let xs = grid.axes[0].nodes();
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(obstacle.iter().copied()).collect();
        for (i, &x) in xs.iter().enumerate() {
            // brute force: min over pairs bracketing x of the chord value
            let mut best = obstacle[i];
            for a in &pts {
                for b in &pts {
                    if a.0 < x && x < b.0 {
                        let l = (b.0 - x) / (b.0 - a.0);
                        best = best.min(l * a.1 + (1.0 - l) * b.1);
                    }
                }
            }
            assert!((exact[i] - best).abs() < 1e-9, "exact {} vs {}", exact[i], best);
            assert!(fast[i] <= best + 1e-12 && fast[i] >= best - 0.1 * 0.25);
        }
    }

    #[test]
    fn slab_methods_agree() {
        let grid = slab_grid(0.25, 0.25);
        let obstacle: Vec<f64> = (0..grid.size())
            .map(|i| {
                let p = grid.point(i);
                if p[1] == 0.0 {
                    p[0].max(-1.0)
                } else if p[1] == 1.0 {
                    (0.5 * p[0]).max(-1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let ranges = [SlopeRange::new(0.0, 1.0), SlopeRange::new(-2.0, 2.0)];
        let fast = grid_envelope(&grid, &obstacle, &ranges, &EnvelopeOptions::default()).unwrap();
        let exact = grid_envelope(&grid, &obstacle, &ranges, &EnvelopeOptions::exact()).unwrap();
        for i in 0..grid.size() {
            let p = grid.point(i);
            let closed = p[0].max(0.5 * (p[0] + p[1] - 1.0)).max(-1.0);
            assert!((exact[i] - closed).abs() < 1e-9, "{p:?}: {} vs {closed}", exact[i]);
            assert!((fast[i] - closed).abs() < 0.025 + 1e-12);
        }
    }

    #[test]
    fn rejects_mismatched_input() {
        let grid = slab_grid(0.5, 0.5);
        let ranges = [SlopeRange::new(0.0, 1.0); 2];
        let err = grid_envelope(&grid, &[0.0; 3], &ranges, &EnvelopeOptions::default());
        assert!(matches!(err, Err(Error::IncompatibleGrids(_))));
        let inf = vec![f64::INFINITY; grid.size()];
        assert_eq!(
            grid_envelope(&grid, &inf, &ranges, &EnvelopeOptions::default()),
            Err(Error::EmptyInput)
        );
    }
}
