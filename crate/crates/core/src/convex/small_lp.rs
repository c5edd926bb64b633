//! Revised simplex for `min c.x  s.t.  A x = b, x >= 0` with few rows and
//! many columns. Used by the exact envelope evaluation and by support
//! function queries, where the row count is at most a handful.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    /// Basic variables `(column, value)`.
    pub basis: Vec<(usize, f64)>,
}

/// Column-major constraint matrix with `rows` rows.
pub struct StandardLp {
    rows: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    b: Vec<f64>,
}

impl StandardLp {
    pub fn new(b: Vec<f64>) -> Self {
        StandardLp {
            rows: b.len(),
            a: Vec::new(),
            c: Vec::new(),
            b,
        }
    }

    pub fn add_column(&mut self, cost: f64, column: &[f64]) -> usize {
        assert_eq!(column.len(), self.rows);
        self.a.extend_from_slice(column);
        self.c.push(cost);
        self.c.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.rows..(j + 1) * self.rows]
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let r = self.rows;
        let m = self.cols();
        // flip rows so that b >= 0, then append artificials
        let sign: Vec<f64> = self.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let b: Vec<f64> = self.b.iter().zip(&sign).map(|(v, s)| v * s).collect();
        let column = |j: usize| -> Vec<f64> {
            if j < m {
                self.col(j).iter().zip(&sign).map(|(v, s)| v * s).collect()
            } else {
                let mut e = vec![0.0; r];
                e[j - m] = 1.0;
                e
            }
        };
        let mut basis: Vec<usize> = (m..m + r).collect();

        let phase1_cost = |j: usize| if j >= m { 1.0 } else { 0.0 };
        let v1 = run(r, m, &b, &column, &phase1_cost, &mut basis, true)?;
        let scale = 1.0 + b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if v1 > 1e-9 * scale {
            return Err(Error::Lp(format!("infeasible (phase one residual {v1})")));
        }
        let phase2_cost = |j: usize| if j >= m { 0.0 } else { self.c[j] };
        let value = run(r, m, &b, &column, &phase2_cost, &mut basis, false)?;
        let bmat = basis_matrix(r, &basis, &column);
        let xb = solve(&bmat, r, &b, false).ok_or_else(|| Error::Lp("singular basis".into()))?;
        Ok(LpSolution {
            value,
            basis: basis.into_iter().zip(xb).filter(|&(j, _)| j < m).collect(),
        })
    }
}

fn basis_matrix(r: usize, basis: &[usize], column: &dyn Fn(usize) -> Vec<f64>) -> Vec<f64> {
    // row-major r x r
    let mut bm = vec![0.0; r * r];
    for (k, &j) in basis.iter().enumerate() {
        for (i, v) in column(j).into_iter().enumerate() {
            bm[i * r + k] = v;
        }
    }
    bm
}

fn run(
    r: usize,
    m: usize,
    b: &[f64],
    column: &dyn Fn(usize) -> Vec<f64>,
    cost: &dyn Fn(usize) -> f64,
    basis: &mut [usize],
    phase_one: bool,
) -> Result<f64> {
    let total = if phase_one { m + r } else { m };
    let max_iter = 50 * (m + r) + 1000;
    for iter in 0..max_iter {
        let bland = iter > 20 * r + 200;
        let bmat = basis_matrix(r, basis, column);
        let xb = solve(&bmat, r, b, false).ok_or_else(|| Error::Lp("singular basis".into()))?;
        let cb: Vec<f64> = basis.iter().map(|&j| cost(j)).collect();
        let y = solve(&bmat, r, &cb, true).ok_or_else(|| Error::Lp("singular basis".into()))?;

        let mut entering = None;
        let mut best = -EPS;
        for j in 0..total {
            if basis.contains(&j) {
                continue;
            }
            let col = column(j);
            let d = cost(j) - y.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>();
            if d < best {
                best = d;
                entering = Some(j);
                if bland {
                    break;
                }
            }
        }
        let Some(e) = entering else {
            return Ok(basis.iter().zip(&xb).map(|(&j, x)| cost(j) * x).sum());
        };
        let w = solve(&bmat, r, &column(e), false).ok_or_else(|| Error::Lp("singular basis".into()))?;
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..r {
            let artificial_stuck = !phase_one && basis[i] >= m && w[i].abs() > EPS;
            let theta = if artificial_stuck {
                0.0
            } else if w[i] > EPS {
                xb[i].max(0.0) / w[i]
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((li, lt)) => theta < lt - 1e-14 || (theta <= lt + 1e-14 && basis[i] < basis[li]),
            };
            if better {
                leave = Some((i, theta));
            }
        }
        let Some((li, _)) = leave else {
            return Err(Error::Lp("unbounded".into()));
        };
        basis[li] = e;
    }
    Err(Error::Lp("iteration limit".into()))
}

/// Solves `B x = v` (or `B^T x = v`) by Gaussian elimination with partial pivoting.
fn solve(bm: &[f64], r: usize, v: &[f64], transpose: bool) -> Option<Vec<f64>> {
    let mut a = vec![0.0; r * (r + 1)];
    for i in 0..r {
        for k in 0..r {
            a[i * (r + 1) + k] = if transpose { bm[k * r + i] } else { bm[i * r + k] };
        }
        a[i * (r + 1) + r] = v[i];
    }
    let w = r + 1;
    for col in 0..r {
        let piv = (col..r).max_by(|&x, &y| a[x * w + col].abs().total_cmp(&a[y * w + col].abs()))?;
        if a[piv * w + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for k in 0..w {
                a.swap(piv * w + k, col * w + k);
            }
        }
        for row in 0..r {
            if row != col {
                let f = a[row * w + col] / a[col * w + col];
                if f != 0.0 {
                    for k in col..w {
                        a[row * w + k] -= f * a[col * w + k];
                    }
                }
            }
        }
    }
    Some((0..r).map(|i| a[i * w + r] / a[i * w + i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_problem() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let mut lp = StandardLp::new(vec![4.0, 6.0]);
        lp.add_column(-1.0, &[1.0, 3.0]);
        lp.add_column(-1.0, &[2.0, 1.0]);
        lp.add_column(0.0, &[1.0, 0.0]);
        lp.add_column(0.0, &[0.0, 1.0]);
        let sol = lp.solve().unwrap();
        assert!((sol.value + 2.8).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = StandardLp::new(vec![-1.0]);
        lp.add_column(1.0, &[1.0]);
        assert!(matches!(lp.solve(), Err(Error::Lp(_))));
    }

    #[test]
    fn convex_combination_form() {
        // min sum l_j o_j with sum l_j x_j = 0.5, sum l_j = 1 over points (0,0),(1,1),(0.5,3)
        let mut lp = StandardLp::new(vec![0.5, 1.0]);
        for (x, o) in [(0.0, 0.0), (1.0, 1.0), (0.5, 3.0)] {
            lp.add_column(o, &[x, 1.0]);
        }
        let sol = lp.solve().unwrap();
        assert!((sol.value - 0.5).abs() < 1e-12);
    }
}
