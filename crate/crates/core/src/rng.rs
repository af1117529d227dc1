//! Seed plumbing: every random draw in the crate goes through a ChaCha stream
//! whose seed is derived deterministically from user seeds and, where an
//! operation must be a pure function of a point, from the point's bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn combine(a: u64, b: u64) -> u64 {
    mix(a ^ mix(b))
}

pub fn hash_point(seed: u64, point: &[f64]) -> u64 {
    point.iter().fold(mix(seed), |h, v| combine(h, v.to_bits()))
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Point `index` (>= 1) of the Halton sequence in `(0,1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| radical_inverse(index, PRIMES[d % PRIMES.len()]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 2), vec![0.25, 2.0 / 3.0]);
        assert_eq!(halton(3, 1), vec![0.75]);
    }

    #[test]
    fn halton_is_interior() {
        for i in 1..500 {
            for v in halton(i, 5) {
                assert!(v > 0.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn point_hash_depends_on_bits() {
        assert_ne!(hash_point(1, &[0.0]), hash_point(1, &[-0.0]));
        assert_eq!(hash_point(1, &[0.5, 0.25]), hash_point(1, &[0.5, 0.25]));
        assert_ne!(hash_point(1, &[0.5]), hash_point(2, &[0.5]));
    }
}
