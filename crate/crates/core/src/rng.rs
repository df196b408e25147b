//! Seed derivation and reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator keyed
//! by a 64-bit seed and a 64-bit stream id. Child seeds are derived from a
//! master seed and an integer path with the SplitMix64 finalizer, so trial
//! `t` of experiment `e` always sees `derive_seed(master, &[e, t])` no matter
//! which thread runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Vector;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master ^ GOLDEN), |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

/// Stable 64-bit FNV-1a hash, used to turn experiment ids into seed path elements.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_vector<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Uniform point on the unit sphere (a normalized gaussian vector).
pub fn random_unit<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let mut g = gaussian_vector(rng, dim);
        if crate::linalg::normalize_mut(&mut g) {
            return g;
        }
    }
}
