use super::{Certificate, CertificateKind, Witness};
use crate::error::{Error, Result};
use crate::game::{FeasibleRegion, GameSpec, Profile};
use crate::polytope::{self, VERTEX_BUDGET};
use crate::solver;

const SUBGRADIENT_ITERS: usize = 300;

/// `min_{y ∈ region} ⟨c, y⟩` and a minimizer.
///
/// Exact by vertex enumeration whenever the number of candidate vertices is
/// small; otherwise starts from the box corner picked by the sign pattern of
/// `c` and runs projected subgradient descent, keeping the best iterate.
pub fn region_linear_min(region: &FeasibleRegion, c: &[f64]) -> Result<(f64, Vec<f64>)> {
    if region.empty {
        return Err(Error::InfeasibleRegion {
            player: region.player.0,
        });
    }
    let rows = region.rows();
    if polytope::binomial(rows.len(), region.dim()) <= VERTEX_BUDGET {
        return polytope::lp_min(c, &rows, 1e-9).ok_or(Error::InfeasibleRegion {
            player: region.player.0,
        });
    }
    let corner: Vec<f64> = region
        .bounds
        .iter()
        .zip(c)
        .map(|(b, &ci)| if ci > 0.0 { b.lo() } else { b.hi() })
        .collect();
    let mut y = solver::project_feasible(region, &corner)?;
    let mut best = (polytope::dot(c, &y), y.clone());
    let scale = region.bounds.iter().map(|b| b.width()).fold(0.0, f64::max).max(1e-12);
    for k in 1..=SUBGRADIENT_ITERS {
        let eta = scale / (k as f64).sqrt();
        let target: Vec<f64> = y.iter().zip(c).map(|(v, ci)| v - eta * ci).collect();
        y = solver::project_feasible(region, &target)?;
        let value = polytope::dot(c, &y);
        if value < best.0 {
            best = (value, y.clone());
        }
    }
    Ok(best)
}

/// Checks `⟨x̂*, y - x̂⟩ >= -tol` over `K(x̂)` with `x̂*` scaled to unit norm.
///
/// `margin` is the unscaled minimum; the verdict uses the scaled one, so it
/// does not change when `x̂*` is multiplied by a positive number.
pub fn check_svip(game: &GameSpec, x: &Profile, x_star: &[f64], tol: f64) -> Result<Certificate> {
    game.require_feasible(x.flat())?;
    if x_star.len() != game.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: game.total_dim(),
            got: x_star.len(),
            context: "stacked direction".into(),
        });
    }
    let scale = polytope::norm(x_star);
    if scale == 0.0 {
        let mut cert = Certificate::new(CertificateKind::Svip, true, "zero direction: condition holds vacuously");
        cert.margin = Some(0.0);
        return Ok(cert);
    }
    let unit: Vec<f64> = x_star.iter().map(|v| v / scale).collect();
    let mut total = 0.0;
    let mut minimizer = Vec::with_capacity(x_star.len());
    let mut worst: Option<(usize, f64)> = None;
    for p in game.player_ids() {
        let r = game.range(p);
        let region = game.region_at(p, x.flat())?;
        let (value, y) = region_linear_min(&region, &unit[r.clone()])?;
        let part = value - polytope::dot(&unit[r.clone()], &x.flat()[r]);
        total += part;
        minimizer.extend(y);
        if worst.map_or(true, |(_, w)| part < w) {
            worst = Some((p.0, part));
        }
    }
    let passed = total >= -tol;
    let mut cert = Certificate::new(
        CertificateKind::Svip,
        passed,
        format!("normalized margin {total:e}, tolerance {tol:e}"),
    );
    cert.margin = Some(total * scale);
    if !passed {
        cert = cert.with_witness(Witness {
            player: worst.map(|(p, _)| p),
            point: minimizer,
            instance: None,
        });
    }
    Ok(cert)
}
