//! Halton points with a seeded Cranley-Patterson rotation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103,
    107, 109, 113, 127, 131,
];

pub const MAX_DIMS: usize = PRIMES.len();

/// Van der Corput radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    x
}

#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    /// `dims`-dimensional sequence; `seed` fixes the rotation.
    pub fn new(dims: usize, seed: u64) -> Result<Self> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::Domain(format!("Halton dimension {dims} not in 1..={MAX_DIMS}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self { shift: (0..dims).map(|_| rng.gen::<f64>()).collect() })
    }

    pub fn dims(&self) -> usize {
        self.shift.len()
    }

    /// Point `i` (0-based; index 0 is skipped internally), in `[0, 1)^dims`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(&s, p)| (radical_inverse(i as u64 + 1, p) + s).fract())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_two() {
        let v: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn seeded_and_uniform() {
        let a = Halton::new(3, 7).unwrap();
        assert_eq!(a.point(10), Halton::new(3, 7).unwrap().point(10));
        assert_ne!(a.point(10), Halton::new(3, 8).unwrap().point(10));
        let mean: f64 = (0..4096).map(|i| a.point(i)[2]).sum::<f64>() / 4096.0;
        assert!((mean - 0.5).abs() < 1e-3);
        assert!(Halton::new(0, 1).is_err());
    }
}
