//! Discrete Legendre-Fenchel transforms on box grids.
//!
//! The one-dimensional transform is the linear-time lower-hull/merge scheme;
//! the multidimensional one factors over coordinates as iterated partial
//! suprema, `f*(p) = sup_{x_0} (p_0 x_0 + sup_{x_1} (p_1 x_1 + ... - f(x)))`.

use super::grid::{strides, BoxGrid};

/// Marks "no finite candidate" in argmax arrays.
pub const NO_ARG: u32 = u32::MAX;

/// `g(p) = max_j (p x_j - f_j)` for ascending `xs` and ascending `ps`.
/// Entries with `f_j = +inf` are ignored; returns `-inf` if none remain.
pub fn llt_1d(xs: &[f64], fs: &[f64], ps: &[f64]) -> (Vec<f64>, Vec<u32>) {
    debug_assert_eq!(xs.len(), fs.len());
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for j in 0..xs.len() {
        if !fs[j].is_finite() {
            continue;
        }
        if let Some(&last) = hull.last() {
            if xs[last] == xs[j] {
                if fs[j] < fs[last] {
                    hull.pop();
                } else {
                    continue;
                }
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (xs[b] - xs[a]) * (fs[j] - fs[a]) - (fs[b] - fs[a]) * (xs[j] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    let mut vals = Vec::with_capacity(ps.len());
    let mut args = Vec::with_capacity(ps.len());
    if hull.is_empty() {
        vals.resize(ps.len(), f64::NEG_INFINITY);
        args.resize(ps.len(), NO_ARG);
        return (vals, args);
    }
    let mut k = 0;
    for &p in ps {
        while k + 1 < hull.len() {
            let (a, b) = (hull[k], hull[k + 1]);
            let edge = (fs[b] - fs[a]) / (xs[b] - xs[a]);
            if edge <= p {
                k += 1;
            } else {
                break;
            }
        }
        let j = hull[k];
        vals.push(p * xs[j] - fs[j]);
        args.push(j as u32);
    }
    (vals, args)
}

/// Brute-force `max_j (p x_j - f_j)`, kept for cross-checks.
pub fn brute_1d(xs: &[f64], fs: &[f64], ps: &[f64]) -> Vec<f64> {
    ps.iter()
        .map(|&p| {
            xs.iter()
                .zip(fs)
                .filter(|(_, f)| f.is_finite())
                .map(|(x, f)| p * x - f)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Result of a separable transform: values on the dual grid and, per stage,
/// the argmax arrays needed to recover the maximizing primal node.
pub struct Transform {
    pub values: Vec<f64>,
    stages: Vec<(Vec<usize>, Vec<u32>)>,
    primal_shape: Vec<usize>,
}

impl Transform {
    /// Primal flat index attaining the supremum at dual flat index `q`.
    pub fn argmax(&self, q: usize) -> Option<usize> {
        let d = self.primal_shape.len();
        let dual_shape = &self.stages[d - 1].0;
        let mut dual_idx = unflatten(q, dual_shape);
        let mut primal_idx = vec![0usize; d];
        for k in (0..d).rev() {
            // stage k array is indexed by (p_0..p_k, x_{k+1}..)
            let (shape, args) = &self.stages[k];
            let mut idx = Vec::with_capacity(d);
            idx.extend_from_slice(&dual_idx[..=k]);
            idx.extend_from_slice(&primal_idx[k + 1..]);
            let a = args[flatten(&idx, shape)];
            if a == NO_ARG {
                return None;
            }
            primal_idx[k] = a as usize;
            dual_idx[k] = 0;
        }
        Some(flatten(&primal_idx, &self.primal_shape))
    }
}

/// `F(p) = max_x (p . x - f(x))` with `x` over `primal` nodes and `p` over
/// `dual` nodes.
pub fn transform(primal: &BoxGrid, f: &[f64], dual: &BoxGrid) -> Transform {
    assert_eq!(primal.dim(), dual.dim());
    assert_eq!(f.len(), primal.size());
    let d = primal.dim();
    let mut shape = primal.shape();
    let primal_shape = shape.clone();
    // G_0 = -f; stage k maximizes p_k x_k + G_k over x_k
    let mut g: Vec<f64> = f.iter().map(|v| -v).collect();
    let mut stages = Vec::with_capacity(d);
    for k in 0..d {
        let xs = primal.axes[k].nodes();
        let ps = dual.axes[k].nodes();
        let mut out_shape = shape.clone();
        out_shape[k] = ps.len();
        let in_strides = strides(&shape);
        let out_strides = strides(&out_shape);
        let out_size: usize = out_shape.iter().product();
        let mut out = vec![f64::NEG_INFINITY; out_size];
        let mut args = vec![NO_ARG; out_size];
        let lines: usize = shape
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &l)| l)
            .product();
        let mut line_f = vec![0.0; xs.len()];
        for line in 0..lines {
            // enumerate the fixed indices of all other axes
            let mut rem = line;
            let mut in_base = 0;
            let mut out_base = 0;
            for ax in (0..d).rev() {
                if ax == k {
                    continue;
                }
                let i = rem % shape[ax];
                rem /= shape[ax];
                in_base += i * in_strides[ax];
                out_base += i * out_strides[ax];
            }
            for (j, lf) in line_f.iter_mut().enumerate() {
                let v = g[in_base + j * in_strides[k]];
                *lf = if v == f64::NEG_INFINITY { f64::INFINITY } else { -v };
            }
            let (vals, arg) = llt_1d(&xs, &line_f, &ps);
            for (m, (v, a)) in vals.into_iter().zip(arg).enumerate() {
                out[out_base + m * out_strides[k]] = v;
                args[out_base + m * out_strides[k]] = a;
            }
        }
        stages.push((out_shape.clone(), args));
        g = out;
        shape = out_shape;
    }
    Transform {
        values: g,
        stages,
        primal_shape,
    }
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

fn flatten(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &l)| acc * l + i)
}

#[cfg(test)]
mod tests {
    use super::super::grid::Axis;
    use super::*;

    #[test]
    fn llt_matches_brute_force() {
        let xs: Vec<f64> = (0..40).map(|i| -4.0 + 0.1 * i as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|x| (x * 1.7).sin() + 0.3 * x * x).collect();
        let ps: Vec<f64> = (0..57).map(|i| -3.0 + 0.11 * i as f64).collect();
        let (fast, args) = llt_1d(&xs, &fs, &ps);
        let slow = brute_1d(&xs, &fs, &ps);
        for i in 0..ps.len() {
            assert!((fast[i] - slow[i]).abs() < 1e-12);
            let j = args[i] as usize;
            assert!((ps[i] * xs[j] - fs[j] - slow[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn llt_skips_infinite_entries() {
        let (v, a) = llt_1d(&[0.0, 1.0], &[f64::INFINITY, 0.0], &[2.0]);
        assert_eq!(v, vec![2.0]);
        assert_eq!(a, vec![1]);
        let (v, a) = llt_1d(&[0.0], &[f64::INFINITY], &[2.0]);
        assert_eq!(v, vec![f64::NEG_INFINITY]);
        assert_eq!(a, vec![NO_ARG]);
    }

    #[test]
    fn separable_matches_brute_force_2d() {
        let primal = BoxGrid::new(vec![Axis::new(-2.0, 0.0, 9), Axis::new(-1.0, 0.0, 6)]);
        let dual = BoxGrid::new(vec![Axis::new(0.0, 2.0, 7), Axis::new(-1.0, 1.0, 5)]);
        let f: Vec<f64> = (0..primal.size())
            .map(|i| {
                let x = primal.point(i);
                (x[0] * x[1]).cos() + x[0].powi(2)
            })
            .collect();
        let t = transform(&primal, &f, &dual);
        for q in 0..dual.size() {
            let p = dual.point(q);
            let (best, _) = (0..primal.size())
                .map(|i| {
                    let x = primal.point(i);
                    (p[0] * x[0] + p[1] * x[1] - f[i], i)
                })
                .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
            assert!((t.values[q] - best).abs() < 1e-12);
            let j = t.argmax(q).unwrap();
            let x = primal.point(j);
            assert!((p[0] * x[0] + p[1] * x[1] - f[j] - best).abs() < 1e-12);
        }
    }
}
