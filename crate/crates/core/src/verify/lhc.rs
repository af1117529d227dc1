use std::fmt;
use std::sync::Arc;

use super::{Certificate, CertificateKind, Witness};

/// An interval of the real line; ends may be open, closed or infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl SetInterval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    /// `[lo, ∞)`.
    pub fn ray_from(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lo_closed { y >= self.lo } else { y > self.lo };
        let below = if self.hi_closed { y <= self.hi } else { y < self.hi };
        above && below
    }

    /// Euclidean distance from `y`; the same for the interval and its closure.
    pub fn distance(&self, y: f64) -> f64 {
        if self.is_empty() {
            f64::INFINITY
        } else if y < self.lo {
            self.lo - y
        } else if y > self.hi {
            y - self.hi
        } else {
            0.0
        }
    }

    /// A few members of the interval: closed ends, interior points, and
    /// points far along unbounded directions.
    fn representatives(&self) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let w = self.hi - self.lo;
                out.extend([self.lo + 0.25 * w, self.lo + 0.5 * w, self.lo + 0.75 * w]);
            }
            (true, false) => out.extend([self.lo + 0.5, self.lo + 1.0, self.lo + 10.0]),
            (false, true) => out.extend([self.hi - 0.5, self.hi - 1.0, self.hi - 10.0]),
            (false, false) => out.extend([-1.0, 0.0, 1.0]),
        }
        if self.lo_closed && self.lo.is_finite() {
            out.push(self.lo);
        }
        if self.hi_closed && self.hi.is_finite() {
            out.push(self.hi);
        }
        out.retain(|&y| self.contains(y));
        out
    }
}

type SetMap = dyn Fn(&[f64]) -> Vec<SetInterval> + Send + Sync;

/// A set-valued map `x ↦ U(x) ⊂ ℝ`, given as a finite union of intervals.
#[derive(Clone)]
pub struct ParametricSet {
    pub name: String,
    map: Arc<SetMap>,
}

impl fmt::Debug for ParametricSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricSet")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl ParametricSet {
    pub fn new(name: impl Into<String>, map: impl Fn(&[f64]) -> Vec<SetInterval> + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            map: Arc::new(map),
        }
    }

    pub fn at(&self, x: &[f64]) -> Vec<SetInterval> {
        (self.map)(x).into_iter().filter(|i| !i.is_empty()).collect()
    }

    pub fn is_empty_at(&self, x: &[f64]) -> bool {
        self.at(x).is_empty()
    }

    /// `dist(y, U(x))`, infinite when `U(x)` is empty.
    pub fn distance(&self, x: &[f64], y: f64) -> f64 {
        self.at(x).iter().map(|i| i.distance(y)).fold(f64::INFINITY, f64::min)
    }
}

/// Numeric lower-hemicontinuity probe.
///
/// For every base point `x`, representative `y ∈ U(x)` and direction `d`, the
/// sequence `x_k = x + steps[k]·d` must give distances `dist(y, U(x_k))` that
/// never increase by more than `tol` and end at most `tol`. `steps` should
/// shrink towards zero. An empty `U(x_k)` counts as infinitely far. Passing
/// only means no violation was found.
pub fn lhc_probe(
    contour: &ParametricSet,
    base_points: &[Vec<f64>],
    directions: &[Vec<f64>],
    steps: &[f64],
    tol: f64,
) -> Certificate {
    let mut probes = 0usize;
    for x in base_points {
        let ys: Vec<f64> = contour.at(x).iter().flat_map(SetInterval::representatives).collect();
        for &y in &ys {
            for d in directions {
                probes += 1;
                let distances: Vec<f64> = steps
                    .iter()
                    .map(|&s| {
                        let xk: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + s * b).collect();
                        contour.distance(&xk, y)
                    })
                    .collect();
                let monotone = distances.windows(2).all(|w| w[1] <= w[0] + tol || w[0].is_infinite());
                let last = distances.last().copied().unwrap_or(0.0);
                if !monotone || last > tol {
                    let mut point = x.clone();
                    point.push(y);
                    return Certificate::new(
                        CertificateKind::Lhc,
                        false,
                        format!(
                            "{}: y = {y} in U(x) but dist(y, U(x_k)) ends at {last} along direction {d:?}",
                            contour.name
                        ),
                    )
                    .with_witness(Witness {
                        player: None,
                        point,
                        instance: None,
                    });
                }
            }
        }
    }
    Certificate::new(
        CertificateKind::Lhc,
        true,
        format!("{}: no violation in {probes} approach sequences", contour.name),
    )
}
