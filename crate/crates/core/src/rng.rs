//! Counter-style randomness: every rectangle gets its own uniform, computed
//! by hashing its address. Selection is `uniform < p`, so the same seed
//! yields realizations that are nested in `p` and in depth, and generation
//! order never matters.

use crate::grid::RectAddr;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const RECT_DOMAIN: u64 = 0x5851_F42D_4C95_7F2D;
const SEED_DOMAIN: u64 = 0x2545_F491_4F6C_DD1D;

/// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline(always)]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN) ^ word)
}

/// Top 53 bits as a double in `[0, 1)`.
#[inline(always)]
pub fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The uniform attached to one rectangle of one domain copy.
pub fn rect_uniform(seed: u64, addr: RectAddr) -> f64 {
    LevelStream::new(seed, addr.copy, addr.level).uniform(addr.col, addr.row)
}

/// Seed for trial `trial`, domain copy `copy` of a Monte Carlo run.
pub fn derive_seed(master_seed: u64, trial: u64, copy: u32) -> u64 {
    absorb(absorb(mix64(master_seed ^ SEED_DOMAIN), trial), copy as u64)
}

/// Hash state with `(seed, copy, level)` already absorbed, so per-cell work
/// is two mixes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LevelStream(u64);

impl LevelStream {
    #[inline]
    pub(crate) fn new(seed: u64, copy: u32, level: u32) -> Self {
        let h = mix64(seed ^ RECT_DOMAIN);
        LevelStream(absorb(h, ((copy as u64) << 32) | level as u64))
    }

    #[inline(always)]
    pub(crate) fn uniform(&self, col: u64, row: u64) -> f64 {
        to_unit(absorb(absorb(self.0, col), row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pearson statistic over `bins` equal-width bins of `[0, 1)`.
    fn chi_square(values: impl Iterator<Item = f64>, bins: usize) -> (f64, usize) {
        let mut counts = vec![0usize; bins];
        let mut total = 0;
        for v in values {
            assert!((0.0..1.0).contains(&v));
            counts[(v * bins as f64) as usize] += 1;
            total += 1;
        }
        let expected = total as f64 / bins as f64;
        let stat = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        (stat, total)
    }

    #[test]
    fn deterministic() {
        let a = RectAddr::new(3, 5, 17, 1);
        assert_eq!(rect_uniform(42, a), rect_uniform(42, a));
        assert_eq!(derive_seed(9, 3, 1), derive_seed(9, 3, 1));
        assert_ne!(derive_seed(9, 3, 0), derive_seed(9, 3, 1));
    }

    #[test]
    fn neighbouring_seeds_decorrelate() {
        // 10^5 addresses: values under seed and seed+1 essentially never coincide,
        // and their differences (mod 1) are uniform.
        let mut equal = 0;
        let diffs: Vec<f64> = (0..100_000u64)
            .map(|i| {
                let a = RectAddr::new(1 + (i % 7) as u32, i / 7, i % 13, (i % 3) as u32);
                let (u, v) = (rect_uniform(1234, a), rect_uniform(1235, a));
                if u == v {
                    equal += 1;
                }
                (u - v).rem_euclid(1.0)
            })
            .collect();
        assert_eq!(equal, 0);
        // 99 degrees of freedom; the 0.999 quantile is about 148.2.
        let (stat, _) = chi_square(diffs.into_iter(), 100);
        assert!(stat < 148.2, "chi-square {stat}");
    }

    #[test]
    fn deciles_uniform_within_four_sigma() {
        let n = 1_000_000u64;
        let mut counts = [0u64; 10];
        let stream = LevelStream::new(77, 0, 6);
        for i in 0..n {
            let u = stream.uniform(i % 1000, i / 1000);
            counts[(u * 10.0) as usize] += 1;
        }
        let mean = n as f64 / 10.0;
        let sd = (n as f64 * 0.1 * 0.9).sqrt();
        for (d, &c) in counts.iter().enumerate() {
            assert!((c as f64 - mean).abs() < 4.0 * sd, "decile {d}: {c}");
        }
    }

    #[test]
    fn stream_matches_rect_uniform() {
        let s = LevelStream::new(5, 2, 4);
        assert_eq!(
            s.uniform(11, 3),
            rect_uniform(5, RectAddr::new(4, 11, 3, 2))
        );
    }

    #[test]
    fn copies_and_levels_are_independent_streams() {
        let (stat, _) = chi_square(
            (0..50_000u64).map(|i| {
                let a = RectAddr::new(2, i, 0, 0);
                let b = RectAddr::new(2, i, 0, 1);
                (rect_uniform(8, a) - rect_uniform(8, b)).rem_euclid(1.0)
            }),
            50,
        );
        // 49 degrees of freedom; 0.999 quantile about 85.4.
        assert!(stat < 85.4, "chi-square {stat}");
    }
}
