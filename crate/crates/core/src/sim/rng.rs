//! Deterministic 64-bit generator used everywhere randomness is needed.
//!
//! The generator is splitmix64. It is fully specified so that identical seeds
//! reproduce identical runs on any platform:
//!
//! - state transition: `state' = state + 0x9E3779B97F4A7C15  (mod 2^64)`
//! - output: `z = state'`, then
//!   `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
//!   `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`,
//!   `z = z ^ (z >> 31)` (all mod 2^64).
//!
//! Test vectors are frozen in the tests below; they were computed with an
//! independent big-integer implementation of the recurrence above.
//!
//! Not cryptographically secure; never use for secrets.

/// Splitmix64 stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng { state: seed }
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision: `(next >> 11) * 2^-53`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform index in `[0, n)` via the 128-bit multiply-shift reduction
    /// `(next * n) >> 64` (bias is negligible for the small `n` used here).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Bernoulli draw with probability `p`.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen vectors from an independent implementation of the recurrence.
    #[test]
    fn matches_published_stream() {
        let cases: [(u64, [u64; 4]); 4] = [
            (
                0,
                [
                    16294208416658607535,
                    7960286522194355700,
                    487617019471545679,
                    17909611376780542444,
                ],
            ),
            (
                1,
                [
                    10451216379200822465,
                    13757245211066428519,
                    17911839290282890590,
                    8196980753821780235,
                ],
            ),
            (
                42,
                [
                    13679457532755275413,
                    2949826092126892291,
                    5139283748462763858,
                    6349198060258255764,
                ],
            ),
            (
                20260305,
                [
                    11700882744040898637,
                    15865534995283788677,
                    14993821686730631220,
                    3175731678201261235,
                ],
            ),
        ];
        for (seed, expected) in cases {
            let mut rng = SimRng::new(seed);
            for want in expected {
                assert_eq!(rng.next_u64(), want, "seed {seed}");
            }
        }
    }

    #[test]
    fn f64_vectors() {
        let mut rng = SimRng::new(20260305);
        assert_eq!(rng.next_f64(), 0.6343061245543646);
        assert_eq!(rng.next_f64(), 0.860072375476574);
        assert_eq!(rng.next_f64(), 0.812816702330681);
    }

    #[test]
    fn index_vectors() {
        let mut a = SimRng::new(7);
        let mut b = SimRng::new(7);
        let idx3: Vec<usize> = (0..5).map(|_| a.index(3)).collect();
        let idx10: Vec<usize> = (0..5).map(|_| b.index(10)).collect();
        assert_eq!(idx3, vec![1, 0, 2, 1, 1]);
        assert_eq!(idx10, vec![3, 0, 9, 5, 4]);
    }

    #[test]
    fn f64_is_in_unit_interval() {
        let mut rng = SimRng::new(123);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }
}
