//! Named example games and seeded instance families.

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::game::{ConstraintMapSpec, ContourRow, GameSpec, Interval, PlayerSpec, PreferenceSpec};
use crate::rng;
use crate::verify::{ParametricSet, SetInterval};

pub const MAX_PLAYERS: usize = 3;
pub const MAX_DIM: usize = 2;

/// Names accepted by [`by_name`].
pub const EXAMPLE_NAMES: [&str; 5] = [
    "trivial-pref",
    "coordinate-pref",
    "lhc-remark",
    "quadratic",
    "arrow-debreu",
];

fn scalar_players(n: usize, bounds: Interval, pref: PreferenceSpec) -> Vec<PlayerSpec> {
    vec![PlayerSpec::new(vec![bounds], pref); n]
}

/// Two scalar players on `[-1, 1]` whose strict preference is empty.
pub fn example_trivial_pref() -> GameSpec {
    GameSpec::new(
        scalar_players(2, Interval(-1.0, 1.0), PreferenceSpec::TrivialZero),
        ConstraintMapSpec::BoxOnly,
    )
}

/// Two scalar players on `[-1, 1]`, each preferring larger own strategies.
pub fn example_coordinate_pref() -> GameSpec {
    GameSpec::new(
        scalar_players(2, Interval(-1.0, 1.0), PreferenceSpec::CoordinateOrder),
        ConstraintMapSpec::BoxOnly,
    )
}

/// Two scalar players whose contour is `[0, ∞)` from a negative strategy and
/// empty otherwise.
pub fn example_threshold_band() -> GameSpec {
    GameSpec::new(
        scalar_players(2, Interval(-1.0, 1.0), PreferenceSpec::ThresholdBand),
        ConstraintMapSpec::BoxOnly,
    )
}

/// The contour map `x ↦ [0, ∞)` for `x < 0`, empty otherwise, and a variant
/// that also keeps `[0, ∞)` at `x = 0`.
#[derive(Debug, Clone)]
pub struct RemarkMaps {
    pub lhc: ParametricSet,
    pub boundary_variant: ParametricSet,
}

pub fn example_lhc_remark() -> RemarkMaps {
    RemarkMaps {
        lhc: ParametricSet::new("U", |x| {
            if x[0] < 0.0 {
                vec![SetInterval::ray_from(0.0)]
            } else {
                Vec::new()
            }
        }),
        boundary_variant: ParametricSet::new("V", |x| {
            if x[0] <= 0.0 {
                vec![SetInterval::ray_from(0.0)]
            } else {
                Vec::new()
            }
        }),
    }
}

/// Probe layout for the maps of [`example_lhc_remark`]: base points on both sides of the jump,
/// approach from both directions with steps `1/k`.
pub fn lhc_remark_probe_plan() -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let bases = vec![vec![-0.5], vec![-0.1], vec![0.0], vec![0.1], vec![0.5]];
    let dirs = vec![vec![1.0], vec![-1.0]];
    let steps = (1..=50).map(|k| 1.0 / k as f64).collect();
    (bases, dirs, steps)
}

fn check_shape(players: usize, dim: usize) -> Result<()> {
    if !(1..=MAX_PLAYERS).contains(&players) || !(1..=MAX_DIM).contains(&dim) {
        return Err(Error::InvalidParameter(format!(
            "instance families support 1..={MAX_PLAYERS} players of dimension 1..={MAX_DIM}, got {players} x {dim}"
        )));
    }
    Ok(())
}

/// `c0 + Σ coeff·x_var`, with 0-based variable indices, as expression text.
fn affine(terms: &[(f64, usize)], constant: f64) -> String {
    let mut s = String::new();
    for &(coef, var) in terms {
        if coef == 0.0 {
            continue;
        }
        let sign = if coef < 0.0 { " - " } else { " + " };
        if s.is_empty() {
            s.push_str(if coef < 0.0 { "-" } else { "" });
        } else {
            s.push_str(sign);
        }
        s.push_str(&format!("{:?}*x{}", coef.abs(), var + 1));
    }
    if constant != 0.0 || s.is_empty() {
        if s.is_empty() {
            s.push_str(&format!("{constant:?}"));
        } else {
            s.push_str(if constant < 0.0 { " - " } else { " + " });
            s.push_str(&format!("{:?}", constant.abs()));
        }
    }
    s
}

fn uniform(rng: &mut rng::Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Whether rival coefficients may have either sign or only nonnegative ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Mixed,
    Complements,
}

/// `θ_ν(x) = -‖x^ν - M_ν x^{-ν} - c_ν‖²` on `[-1, 1]^{n_ν}`, with its data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticGame {
    pub spec: GameSpec,
    /// `m[ν]` is `n_ν × (n - n_ν)`, row-major.
    pub m: Vec<Vec<Vec<f64>>>,
    pub c: Vec<Vec<f64>>,
}

impl QuadraticGame {
    /// Best response `clamp(M_ν x^{-ν} + c_ν)` of every player at `x`.
    pub fn best_response(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        for p in self.spec.player_ids() {
            let r = self.spec.range(p);
            let rivals: Vec<f64> = x
                .iter()
                .enumerate()
                .filter(|(i, _)| !r.contains(i))
                .map(|(_, v)| *v)
                .collect();
            for (row, c) in self.m[p.0].iter().zip(&self.c[p.0]) {
                let t: f64 = row.iter().zip(&rivals).map(|(a, b)| a * b).sum::<f64>() + c;
                out.push(t.clamp(-1.0, 1.0));
            }
        }
        out
    }

    /// The unique equilibrium: fixed point of the best-response map, which is
    /// a contraction because every `M_ν` has norm at most 1/2.
    pub fn equilibrium(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.spec.total_dim()];
        for _ in 0..10_000 {
            let next = self.best_response(&x);
            let moved = crate::polytope::distance(&x, &next);
            x = next;
            if moved < 1e-15 {
                break;
            }
        }
        x
    }
}

/// Offsets `c_ν` are drawn from `[-C_RANGE, C_RANGE]`, wide enough that many
/// equilibria sit on the box boundary.
const C_RANGE: f64 = 1.5;

/// Seeded concave quadratic game. Seed 1 with two scalar players is the
/// reference instance `M = 0.5`, `c = 0`.
pub fn quadratic_game(seed: u64, players: usize, dim: usize, coupling: Coupling) -> Result<QuadraticGame> {
    check_shape(players, dim)?;
    let n = players * dim;
    let rival_dim = n - dim;
    let (m, c): (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) = if seed == 1 && players == 2 && dim == 1 {
        (vec![vec![vec![0.5]]; 2], vec![vec![0.0]; 2])
    } else {
        let tag = match coupling {
            Coupling::Mixed => 0,
            Coupling::Complements => 1,
        };
        let mut rng = rng::seeded(rng::combine(seed, (players * 16 + dim * 4 + tag) as u64));
        (0..players)
            .map(|_| {
                let lo = if coupling == Coupling::Complements { 0.0 } else { -1.0 };
                let mut block: Vec<Vec<f64>> = (0..dim)
                    .map(|_| (0..rival_dim).map(|_| uniform(&mut rng, lo, 1.0)).collect())
                    .collect();
                let frob = block.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                let target = 0.45 * uniform(&mut rng, 0.2, 1.0);
                if frob > 0.0 {
                    block.iter_mut().flatten().for_each(|v| *v *= target / frob);
                }
                let c = (0..dim).map(|_| uniform(&mut rng, -C_RANGE, C_RANGE)).collect();
                (block, c)
            })
            .unzip()
    };
    let mut specs = Vec::with_capacity(players);
    for p in 0..players {
        let own = p * dim..(p + 1) * dim;
        let rival_vars: Vec<usize> = (0..n).filter(|i| !own.contains(i)).collect();
        let squares: Vec<String> = (0..dim)
            .map(|i| {
                let mut terms = vec![(1.0, own.start + i)];
                terms.extend(m[p][i].iter().zip(&rival_vars).map(|(&a, &v)| (-a, v)));
                format!("({})^2", affine(&terms, -c[p][i]))
            })
            .collect();
        let expr = format!("-({})", squares.join(" + "));
        specs.push(PlayerSpec::new(
            vec![Interval(-1.0, 1.0); dim],
            PreferenceSpec::Utility {
                expr: Expr::parse(&expr)?,
            },
        ));
    }
    Ok(QuadraticGame {
        spec: GameSpec::new(specs, ConstraintMapSpec::BoxOnly),
        m,
        c,
    })
}

/// `θ_ν(x) = -‖x^ν - M_ν x^{-ν} - c_ν‖²` with mixed-sign coupling.
pub fn random_concave_quadratic(seed: u64, players: usize, dim: usize) -> Result<GameSpec> {
    Ok(quadratic_game(seed, players, dim, Coupling::Mixed)?.spec)
}

/// Two scalar players with `θ_ν = -(x^ν - t_ν)²`, `t_ν ∈ [0.6, 1]`, sharing
/// the budget `x¹ + x² <= 1` on `[0, 1]²`. Seed 1 has `t = (1, 1)`.
pub fn arrow_debreu_instance(seed: u64) -> GameSpec {
    let targets = if seed == 1 {
        [1.0, 1.0]
    } else {
        let mut rng = rng::seeded(rng::combine(seed, 0xAD));
        [uniform(&mut rng, 0.6, 1.0), uniform(&mut rng, 0.6, 1.0)]
    };
    let players = targets
        .iter()
        .enumerate()
        .map(|(p, &t)| {
            let expr = format!("-({})^2", affine(&[(1.0, p)], -t));
            PlayerSpec::new(
                vec![Interval(0.0, 1.0)],
                PreferenceSpec::Utility {
                    expr: Expr::parse(&expr).expect("generated expression parses"),
                },
            )
        })
        .collect();
    GameSpec::new(
        players,
        ConstraintMapSpec::SharedLinear {
            a: vec![vec![1.0, 1.0]],
            b: vec![1.0],
            nonempty_probed: false,
        },
    )
}

/// Utilities strictly increasing and strictly concave in the own strategy
/// on the box, so every equilibrium sits on the upper boundary of `K_ν`.
///
/// Even seeds: two scalar players on `[0, s]` sharing a budget
/// `x¹ + x² <= s` with `s ∈ {0.5, 1}` (on every decimal grid). Odd seeds: two players in `[0, 1]²`, box only,
/// each own partial derivative at least 0.3 on the box.
pub fn random_monotone_concave(seed: u64) -> GameSpec {
    let mut rng = rng::seeded(rng::combine(seed, 0x3C));
    if seed % 2 == 0 {
        let s = if rng.random_bool(0.5) { 0.5 } else { 1.0 };
        let players = (0..2)
            .map(|p| {
                let other = 1 - p;
                let b = uniform(&mut rng, 0.1, 0.5);
                let e = uniform(&mut rng, -0.2, 0.2);
                let a = 2.0 * b + e.abs() + uniform(&mut rng, 0.2, 0.5);
                let expr = format!(
                    "{a:?}*x{} - {b:?}*x{}^2 + ({e:?})*x{}*x{}",
                    p + 1,
                    p + 1,
                    p + 1,
                    other + 1
                );
                PlayerSpec::new(
                    vec![Interval(0.0, s)],
                    PreferenceSpec::Utility {
                        expr: Expr::parse(&expr).expect("generated expression parses"),
                    },
                )
            })
            .collect();
        GameSpec::new(
            players,
            ConstraintMapSpec::SharedLinear {
                a: vec![vec![1.0, 1.0]],
                b: vec![s],
                nonempty_probed: false,
            },
        )
    } else {
        let players = (0..2)
            .map(|p| {
                let own = [2 * p, 2 * p + 1];
                let rival = [2 * (1 - p), 2 * (1 - p) + 1];
                let terms: Vec<String> = own
                    .iter()
                    .zip(rival)
                    .map(|(&i, j)| {
                        let b = uniform(&mut rng, 0.05, 0.3);
                        let e = uniform(&mut rng, -0.1, 0.1);
                        let a = 2.0 * b + e.abs() + uniform(&mut rng, 0.3, 1.0);
                        format!("{a:?}*x{} - {b:?}*x{}^2 + ({e:?})*x{}*x{}", i + 1, i + 1, i + 1, j + 1)
                    })
                    .collect();
                PlayerSpec::new(
                    vec![Interval(0.0, 1.0); 2],
                    PreferenceSpec::Utility {
                        expr: Expr::parse(&terms.join(" + ")).expect("generated expression parses"),
                    },
                )
            })
            .collect();
        GameSpec::new(players, ConstraintMapSpec::BoxOnly)
    }
}

/// Players with polyhedral cone contours `{ y : a_i(x^{-ν})·(y - x^ν) < 0 }`
/// whose row normals move with the rivals.
pub fn random_halfspace_contour(seed: u64) -> GameSpec {
    let mut rng = rng::seeded(rng::combine(seed, 0x4C));
    let dim = 1 + (seed % 2) as usize;
    let n = 2 * dim;
    let players = (0..2)
        .map(|p| {
            let own: Vec<usize> = (p * dim..(p + 1) * dim).collect();
            let rival: Vec<usize> = (0..n).filter(|i| !own.contains(i)).collect();
            let rows = (0..dim)
                .map(|_| {
                    let base: Vec<f64> = (0..dim).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
                    let tilt: Vec<f64> = (0..dim).map(|_| uniform(&mut rng, -0.3, 0.3)).collect();
                    let r = rival[0];
                    // a_k(x) = base_k + tilt_k·x_r
                    let coeffs: Vec<String> = base.iter().zip(&tilt).map(|(&b, &t)| affine(&[(t, r)], b)).collect();
                    let offset: Vec<String> = coeffs
                        .iter()
                        .zip(&own)
                        .map(|(a, &v)| format!("({a})*x{}", v + 1))
                        .collect();
                    ContourRow {
                        coeffs: coeffs
                            .iter()
                            .map(|s| Expr::parse(s).expect("generated expression parses"))
                            .collect(),
                        offset: Expr::parse(&offset.join(" + ")).expect("generated expression parses"),
                    }
                })
                .collect();
            PlayerSpec::new(
                vec![Interval(-1.0, 1.0); dim],
                PreferenceSpec::HalfspaceContour { rows },
            )
        })
        .collect();
    GameSpec::new(players, ConstraintMapSpec::BoxOnly)
}

/// Instance for the existence suite: complements quadratics with two or
/// three scalar players, shared-budget games, and monotone concave games in
/// turn. All have continuous, compact convex constraint maps and concave
/// utilities.
pub fn existence_instance(seed: u64) -> Result<GameSpec> {
    match seed % 3 {
        0 => Ok(quadratic_game(seed, 2 + (seed / 3 % 2) as usize, 1, Coupling::Complements)?.spec),
        1 => Ok(arrow_debreu_instance(seed)),
        _ => Ok(random_monotone_concave(seed)),
    }
}

/// A named example: either a game or the pair of contour maps.
#[derive(Debug, Clone)]
pub enum Example {
    Game(GameSpec),
    ContourMaps(RemarkMaps),
}

pub fn by_name(name: &str) -> Result<Example> {
    Ok(match name {
        "trivial-pref" => Example::Game(example_trivial_pref()),
        "coordinate-pref" => Example::Game(example_coordinate_pref()),
        "lhc-remark" => Example::ContourMaps(example_lhc_remark()),
        "quadratic" => Example::Game(random_concave_quadratic(1, 2, 1)?),
        "arrow-debreu" => Example::Game(arrow_debreu_instance(1)),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown example {other:?}; expected one of {}",
                EXAMPLE_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{validate_spec, PlayerId, Profile};

    #[test]
    fn affine_text() {
        assert_eq!(affine(&[(1.0, 0), (-0.5, 1)], 0.0), "1.0*x1 - 0.5*x2");
        assert_eq!(affine(&[(-2.0, 2)], 0.25), "-2.0*x3 + 0.25");
        assert_eq!(affine(&[], -1.0), "-1.0");
        assert_eq!(affine(&[(0.0, 0)], 0.0), "0.0");
    }

    #[test]
    fn reference_quadratic() {
        let q = quadratic_game(1, 2, 1, Coupling::Mixed).unwrap();
        let g = &q.spec;
        for (x, expected) in [([0.3, -0.4], -(0.3f64 + 0.2).powi(2)), ([1.0, 1.0], -0.25)] {
            assert!((g.utility(PlayerId(0), &x).unwrap().unwrap() - expected).abs() < 1e-12);
        }
        assert_eq!(q.equilibrium(), vec![0.0, 0.0]);
    }

    #[test]
    fn builders_are_deterministic_and_valid() {
        let mut games = vec![
            example_trivial_pref(),
            example_coordinate_pref(),
            example_threshold_band(),
        ];
        for seed in 0..12 {
            for players in 1..=3 {
                for dim in 1..=2 {
                    games.push(random_concave_quadratic(seed, players, dim).unwrap());
                    assert_eq!(
                        random_concave_quadratic(seed, players, dim).unwrap().to_json(),
                        games.last().unwrap().to_json()
                    );
                }
            }
            games.push(arrow_debreu_instance(seed));
            games.push(random_monotone_concave(seed));
            games.push(random_halfspace_contour(seed));
            games.push(existence_instance(seed).unwrap());
        }
        for g in &games {
            assert!(validate_spec(g).is_empty(), "{:?}\n{}", validate_spec(g), g.to_json());
        }
        assert!(random_concave_quadratic(1, 4, 1).is_err());
        assert!(random_concave_quadratic(1, 2, 3).is_err());
    }

    #[test]
    fn quadratic_equilibrium_is_a_fixed_point() {
        for seed in 2..20 {
            let q = quadratic_game(seed, 3, 2, Coupling::Mixed).unwrap();
            let x = q.equilibrium();
            assert!(crate::polytope::distance(&x, &q.best_response(&x)) < 1e-12);
            for row in q.m.iter().flatten() {
                assert!(row.iter().all(|v| v.abs() <= 0.45));
            }
        }
        let q = quadratic_game(5, 2, 1, Coupling::Complements).unwrap();
        assert!(q.m.iter().flatten().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn arrow_debreu_reference() {
        let g = arrow_debreu_instance(1);
        assert_eq!(g.utility(PlayerId(1), &[0.2, 0.5]).unwrap(), Some(-0.25));
        assert!(!g.is_feasible(&[1.0, 1.0]).unwrap());
        assert!(g.is_feasible(&[0.4, 0.6]).unwrap());
    }

    #[test]
    fn monotone_family_is_increasing() {
        for seed in 0..10 {
            let g = random_monotone_concave(seed);
            let x: Vec<f64> = vec![0.5; g.total_dim()];
            for p in g.player_ids() {
                let base = g.utility(p, &x).unwrap().unwrap();
                for i in g.range(p) {
                    let mut y = x.clone();
                    y[i] += 0.01;
                    assert!(g.utility(p, &y).unwrap().unwrap() > base);
                }
            }
        }
    }

    #[test]
    fn halfspace_contours_touch_the_point() {
        for seed in 0..6 {
            let g = random_halfspace_contour(seed);
            let x = Profile::from_flat(&g, &vec![0.2; g.total_dim()]).unwrap();
            for p in g.player_ids() {
                let rows = g.contour_rows(p, x.flat()).unwrap().unwrap();
                for r in rows {
                    let gap = crate::polytope::dot(&r.normal, x.block(p)) - r.offset;
                    assert!(gap.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn named_examples() {
        for name in EXAMPLE_NAMES {
            assert!(by_name(name).is_ok());
        }
        assert!(by_name("nope").is_err());
        let RemarkMaps { lhc, boundary_variant } = example_lhc_remark();
        assert_eq!(lhc.at(&[-0.5]), vec![SetInterval::ray_from(0.0)]);
        assert!(lhc.at(&[0.5]).is_empty());
        assert!(boundary_variant.at(&[0.0]).len() == 1);
    }
}
