use rayon::prelude::*;

use super::{Certificate, CertificateKind, Witness};
use crate::error::{Error, Result};
use crate::game::{self, GameSpec, Interval, PlayerId, PreferenceSpec, Profile, FEASIBILITY_TOL};

/// Largest product grid `brute_force_gne` will enumerate.
pub const GRID_BUDGET: u128 = 10_000_000;

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("grid step must be positive, got {h}")))
    }
}

/// Lattice points `lo + i·h` inside the interval.
///
/// The upper end is included only when it lies on the lattice, so the grid
/// for `h` is a subset of the grid for `h / k`.
pub fn grid_axis(iv: Interval, h: f64) -> Vec<f64> {
    let span = iv.width();
    let steps = (span / h + 1e-9).floor() as usize;
    let mut axis: Vec<f64> = (0..=steps).map(|i| iv.lo() + i as f64 * h).collect();
    if let Some(last) = axis.last_mut() {
        if (*last - iv.hi()).abs() <= 1e-9 * h.max(1.0) {
            *last = iv.hi();
        }
    }
    axis
}

fn count_points(game: &GameSpec, player: PlayerId, h: f64) -> u128 {
    game.bounds(player)
        .iter()
        .map(|b| grid_axis(*b, h).len() as u128)
        .fold(1u128, |a, n| a.saturating_mul(n))
}

/// Own-strategy grid of one player, in lexicographic order.
pub fn player_grid(game: &GameSpec, player: PlayerId, h: f64) -> Result<Vec<Vec<f64>>> {
    check_step(h)?;
    let points = count_points(game, player, h);
    if points > GRID_BUDGET {
        return Err(Error::GridBudget {
            points,
            budget: GRID_BUDGET,
        });
    }
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for b in game.bounds(player) {
        let axis = grid_axis(*b, h);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

/// Looks for a feasible grid deviation some player strictly prefers to `x`.
///
/// A pass means no improving deviation exists at resolution `h`; the first
/// hit (players in order, grid points lexicographic) is the witness.
pub fn check_gne_grid(game: &GameSpec, x: &Profile, h: f64) -> Result<Certificate> {
    check_step(h)?;
    game.require_feasible(x.flat())?;
    for p in game.player_ids() {
        let region = game.region_at(p, x.flat())?;
        for y in player_grid(game, p, h)? {
            if region.contains(&y, FEASIBILITY_TOL) && game.prefers(p, &y, x.flat())? {
                return Ok(Certificate::new(
                    CertificateKind::GneGrid,
                    false,
                    format!("player {} has a strictly preferred feasible deviation", p.0),
                )
                .at(h)
                .with_witness(Witness {
                    player: Some(p.0),
                    point: y,
                    instance: None,
                }));
            }
        }
    }
    Ok(Certificate::new(
        CertificateKind::GneGrid,
        true,
        "no strictly preferred feasible deviation on the grid",
    )
    .at(h))
}

/// Mixed-radix decoding of a flat index into per-player grid indices.
fn decode(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for k in (0..radices.len()).rev() {
        digits[k] = index % radices[k];
        index /= radices[k];
    }
    digits
}

fn stack(grids: &[Vec<Vec<f64>>], digits: &[usize]) -> Vec<f64> {
    grids
        .iter()
        .zip(digits)
        .flat_map(|(g, &d)| g[d].iter().copied())
        .collect()
}

/// For one player and one configuration of rival grid indices, which own grid
/// points are feasible and admit no strictly preferred feasible grid deviation.
fn unimproved(game: &GameSpec, p: PlayerId, grids: &[Vec<Vec<f64>>], digits: &mut [usize]) -> Result<Vec<bool>> {
    let own = &grids[p.0];
    digits[p.0] = 0;
    let base = stack(grids, digits);
    let region = game.region_at(p, &base)?;
    let feasible: Vec<bool> = own.iter().map(|y| region.contains(y, FEASIBILITY_TOL)).collect();
    let range = game.range(p);
    let profile_with = |y: &[f64]| {
        let mut z = base.clone();
        z[range.clone()].copy_from_slice(y);
        z
    };
    if let PreferenceSpec::Utility { expr } = game.preference(p) {
        let values = own
            .iter()
            .zip(&feasible)
            .map(|(y, &f)| {
                if f {
                    expr.eval(&profile_with(y)).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let best = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(values
            .iter()
            .map(|v| v.is_some_and(|v| !game::utility_improves(best, v)))
            .collect());
    }
    let mut mask = feasible.clone();
    for (i, y) in own.iter().enumerate() {
        if !mask[i] {
            continue;
        }
        let x = profile_with(y);
        for (z, &fz) in own.iter().zip(&feasible) {
            if fz && game.prefers(p, z, &x)? {
                mask[i] = false;
                break;
            }
        }
    }
    Ok(mask)
}

/// Every grid profile `x̂ ∈ K(x̂)` without a strictly preferred feasible grid
/// deviation, each with its grid certificate, in lexicographic order.
pub fn brute_force_gne(game: &GameSpec, h: f64) -> Result<Vec<(Profile, Certificate)>> {
    check_step(h)?;
    let total = game
        .player_ids()
        .map(|p| count_points(game, p, h))
        .fold(1u128, |a, n| a.saturating_mul(n));
    if total > GRID_BUDGET {
        return Err(Error::GridBudget {
            points: total,
            budget: GRID_BUDGET,
        });
    }
    let grids = game
        .player_ids()
        .map(|p| player_grid(game, p, h))
        .collect::<Result<Vec<_>>>()?;
    let radices: Vec<usize> = grids.iter().map(Vec::len).collect();
    let total = total as usize;

    // masks[p][rival configuration][own index]
    let masks = game
        .player_ids()
        .map(|p| {
            let rival_radices: Vec<usize> = radices
                .iter()
                .enumerate()
                .map(|(q, &r)| if q == p.0 { 1 } else { r })
                .collect();
            let configs: usize = rival_radices.iter().product();
            (0..configs)
                .into_par_iter()
                .map(|c| {
                    let mut digits = decode(c, &rival_radices);
                    unimproved(game, p, &grids, &mut digits)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let rival_index = |digits: &[usize], p: usize| {
        digits
            .iter()
            .enumerate()
            .fold(0, |acc, (q, &d)| if q == p { acc } else { acc * radices[q] + d })
    };
    let mut out = Vec::new();
    for index in 0..total {
        let digits = decode(index, &radices);
        let equilibrium = (0..radices.len()).all(|p| masks[p][rival_index(&digits, p)][digits[p]]);
        if equilibrium {
            let profile = Profile::from_flat(game, &stack(&grids, &digits))?;
            let cert = check_gne_grid(game, &profile, h)?;
            out.push((profile, cert));
        }
    }
    Ok(out)
}
