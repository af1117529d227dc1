//! Exact helpers for the low-dimensional polytopes that show up everywhere in
//! this crate: strategy boxes cut by a handful of halfspaces, and convex hulls
//! of a few unit directions.

use nalgebra::{DMatrix, DVector};

/// A closed halfspace `normal · y <= offset`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// Positive part of `normal · y - offset`.
    pub fn violation(&self, y: &[f64]) -> f64 {
        (dot(&self.normal, y) - self.offset).max(0.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Number of `k`-subsets of `n` items, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Largest number of vertex candidates `lp_min` is allowed to enumerate.
pub const VERTEX_BUDGET: u128 = 50_000;

/// Minimizes `c · y` over `{ y : rows }` by enumerating basic solutions.
///
/// The feasible set must be bounded (callers always include box faces). Returns
/// `None` when no vertex is feasible within `tol`, i.e. the set is empty.
pub fn lp_min(c: &[f64], rows: &[Halfspace], tol: f64) -> Option<(f64, Vec<f64>)> {
    let d = c.len();
    if d == 0 {
        return rows.iter().all(|h| h.offset >= -tol).then(|| (0.0, Vec::new()));
    }
    let m = rows.len();
    if m < d {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a = DMatrix::from_fn(d, d, |r, col| rows[idx[r]].normal[col]);
        let b = DVector::from_iterator(d, idx.iter().map(|&i| rows[i].offset));
        if let Some(y) = a.lu().solve(&b) {
            let y: Vec<f64> = y.iter().copied().collect();
            if y.iter().all(|v| v.is_finite()) && rows.iter().all(|h| h.violation(&y) <= tol) {
                let value = dot(c, &y);
                if best.as_ref().map_or(true, |(v, _)| value < *v - 1e-15) {
                    best = Some((value, y));
                }
            }
        }
        // next combination in lexicographic order
        let mut i = d;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - d + i {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Result of a minimum-norm-point computation over `conv(points)`.
#[derive(Debug, Clone)]
pub struct MinNormPoint {
    pub point: Vec<f64>,
    /// Convex weights over the input points.
    pub weights: Vec<f64>,
    pub iterations: usize,
}

impl MinNormPoint {
    pub fn norm(&self) -> f64 {
        norm(&self.point)
    }
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's method).
///
/// Each major step is a Frank-Wolfe linear-minimization step over the vertex
/// set; the minor loop re-optimizes over the affine hull of the active corral,
/// which gives finite termination instead of the zig-zag of plain Gilbert
/// iterations. Stops when the Frank-Wolfe gap drops below `tol`
/// (relative to the squared diameter of the input).
pub fn min_norm_point(points: &[Vec<f64>], tol: f64) -> Option<MinNormPoint> {
    let first = points.first()?;
    let dim = first.len();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1e-300);
    let gap_tol = tol * tol * scale;

    let start = (0..points.len())
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap();
    let mut corral: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();
    let mut iterations = 0;

    let combine = |corral: &[usize], weights: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&i, &w) in corral.iter().zip(weights) {
            for (o, v) in out.iter_mut().zip(&points[i]) {
                *o += w * v;
            }
        }
        out
    };

    for _ in 0..1000 {
        iterations += 1;
        let xx = dot(&x, &x);
        if xx <= 1e-30 * scale {
            break;
        }
        let (j, xj) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, dot(&x, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xj <= gap_tol || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lambda.push(0.0);

        // minor cycle
        loop {
            let Some(mu) = affine_minimizer(points, &corral) else {
                // numerically dependent corral: drop the newest point and stop
                corral.pop();
                lambda.pop();
                break;
            };
            if mu.iter().all(|&m| m > 1e-14) {
                lambda = mu;
                x = combine(&corral, &lambda);
                break;
            }
            let theta = lambda
                .iter()
                .zip(&mu)
                .filter(|(_, &m)| m <= 1e-14)
                .map(|(&l, &m)| if l - m > 0.0 { l / (l - m) } else { 0.0 })
                .fold(1.0, f64::min);
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l += theta * (m - *l);
            }
            let mut k = 0;
            while k < corral.len() {
                if lambda[k] <= 1e-14 {
                    corral.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            x = combine(&corral, &lambda);
            if corral.len() <= 1 {
                break;
            }
        }
    }

    let mut weights = vec![0.0; points.len()];
    for (&i, &w) in corral.iter().zip(&lambda) {
        weights[i] += w;
    }
    Some(MinNormPoint {
        point: x,
        weights,
        iterations,
    })
}

/// Minimizer of `||sum mu_i p_i||` over the affine hull of the corral.
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = dot(&points[corral[a]], &points[corral[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    let mu: Vec<f64> = sol.iter().take(k).copied().collect();
    mu.iter().all(|v| v.is_finite()).then_some(mu)
}
