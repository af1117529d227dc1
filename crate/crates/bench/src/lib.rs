//! Benchmark fixtures shared by the criterion targets.

use ordgame::corpus;
use ordgame::GameSpec;

/// Generator sets for the min-norm-point benchmark: `count` points on the
/// unit circle, evenly spaced and rotated so the hull misses the origin.
pub fn arc_points(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let t = 0.3 + 1.2 * k as f64 / count.max(1) as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

pub fn quadratic(players: usize, dim: usize) -> GameSpec {
    corpus::random_concave_quadratic(3, players, dim).expect("supported shape")
}
