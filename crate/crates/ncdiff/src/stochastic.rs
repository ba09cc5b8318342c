//! Reproducible scalar Brownian paths with dyadic bridge refinement and
//! deterministic per-sample seed derivation.
//!
//! All randomness flows from a 64-bit seed through ChaCha8 and the
//! `rand_distr` ziggurat normal sampler; both are fully specified
//! algorithms, so identical seeds give bit-identical paths on every
//! platform and run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equispaced increments of a scalar Wiener process. B(0) = 0 is implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub dt: f64,
    pub increments: Vec<f64>,
    pub seed: u64,
    /// Refinement depth; 0 for a freshly sampled path.
    pub level: u32,
}

impl BrownianPath {
    pub fn horizon(&self) -> f64 {
        self.dt * self.increments.len() as f64
    }

    /// FNV-style checksum over the increment bits; used to assert that
    /// coupled simulations consumed the identical path.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |word: u64| {
            h ^= word;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        mix(self.dt.to_bits());
        for inc in &self.increments {
            mix(inc.to_bits());
        }
        h
    }
}

/// Number of steps for horizon T at step dt; rejects non-integral ratios.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if t_final < 0.0 || dt <= 0.0 {
        return Err(Error::Validation(format!("bad horizon T={t_final}, dt={dt}")));
    }
    let ratio = t_final / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 {
        return Err(Error::NonIntegralSteps { t_final, dt });
    }
    Ok(n as usize)
}

/// Samples a fresh path of N = T/dt increments, each N(0, dt).
pub fn sample_path(t_final: f64, dt: f64, seed: u64) -> Result<BrownianPath> {
    let n = step_count(t_final, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = dt.sqrt();
    let increments = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect();
    Ok(BrownianPath { dt, increments, seed, level: 0 })
}

/// Stream id reserved for bridge-refinement midpoint draws.
const REFINE_STREAM: u64 = 0xB51D;

/// Halves the step by Brownian-bridge midpoint insertion.
///
/// Each coarse increment D splits into (D/2 + xi, D - (D/2 + xi)) with
/// xi ~ N(0, dt/4); the pairwise sums reproduce the parent increments
/// bit-for-bit (a rounding fix-up enforces this exactly).
pub fn refine(path: &BrownianPath) -> BrownianPath {
    let fine_dt = path.dt * 0.5;
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed(path.seed, path.level as u64, REFINE_STREAM));
    let sigma = (path.dt * 0.25).sqrt();
    let mut increments = Vec::with_capacity(path.increments.len() * 2);
    for &coarse in &path.increments {
        let z: f64 = StandardNormal.sample(&mut rng);
        let (left, right) = split_exact(coarse, z * sigma);
        debug_assert_eq!(left + right, coarse);
        increments.push(left);
        increments.push(right);
    }
    BrownianPath { dt: fine_dt, increments, seed: path.seed, level: path.level + 1 }
}

/// Splits `coarse` into a pair whose rounded sum reproduces it exactly,
/// with the left child as close as representable to coarse/2 + xi.
///
/// Exact reconstruction is a hard invariant of the refinement, but it is
/// not always compatible with the ideal midpoint: when |xi| well exceeds
/// |coarse| both children live on a coarser ulp lattice than the parent,
/// and no float pair of that magnitude can sum to it. In that (heavy
/// cancellation) regime xi is halved until a representable pair exists,
/// trading a small amount of conditional variance for exactness.
fn split_exact(coarse: f64, xi: f64) -> (f64, f64) {
    let mut xi = xi;
    for _ in 0..128 {
        let left = coarse * 0.5 + xi;
        let right = coarse - left;
        if left + right == coarse {
            return (left, right);
        }
        // The rounded sum can also miss by a single ulp through
        // round-to-even ties; ulp-nudges of the smaller-magnitude child
        // sweep the sum finely and repair those cases.
        for k in 1..=8 {
            for (dl, dr) in nudge_candidates(left, right, k) {
                if dl + dr == coarse {
                    return (dl, dr);
                }
            }
        }
        xi *= 0.5;
    }
    let left = coarse * 0.5;
    (left, coarse - left)
}

/// Moves `x` by `k` ulps toward +inf or -inf.
fn nudged(x: f64, k: u32, upward: bool) -> f64 {
    let mut y = x;
    for _ in 0..k {
        y = if upward { y.next_up() } else { y.next_down() };
    }
    y
}

/// Candidate (left, right) pairs for the bridge rounding fix-up: the
/// smaller-magnitude child is nudged first because its ulp-steps move the
/// sum in the finest increments.
fn nudge_candidates(left: f64, right: f64, k: u32) -> [(f64, f64); 4] {
    let (small_is_left, s, other) = if left.abs() <= right.abs() {
        (true, left, right)
    } else {
        (false, right, left)
    };
    let pair = |v: f64| if small_is_left { (v, other) } else { (other, v) };
    let anti = |v: f64| if small_is_left { (left, v) } else { (v, right) };
    [
        pair(nudged(s, k, true)),
        pair(nudged(s, k, false)),
        anti(nudged(if small_is_left { right } else { left }, k, true)),
        anti(nudged(if small_is_left { right } else { left }, k, false)),
    ]
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stateless seed derivation: distinct (sample, stream) pairs map to
/// distinct seeds independent of thread scheduling.
pub fn derive_seed(master: u64, sample_index: u64, stream: u64) -> u64 {
    let a = splitmix64(master ^ 0xa076_1d64_78bd_642f);
    let b = splitmix64(sample_index.wrapping_mul(2).wrapping_add(1));
    let c = splitmix64(stream.wrapping_add(0x2545_f491_4f6c_dd1d));
    splitmix64(a ^ b.rotate_left(17) ^ c.rotate_left(39))
}
