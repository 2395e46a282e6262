#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specialcycles::padic::HermMatrix;
use specialcycles::{ExtMatrix, ExtRingElem, RingParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_elem(params: RingParams, rng: &mut impl Rng) -> ExtRingElem {
    let q = params.modulus();
    ExtRingElem::from_raw(params, rng.gen_range(0..q), rng.gen_range(0..q))
}

pub fn random_unimodular(params: RingParams, n: usize, rng: &mut impl Rng) -> ExtMatrix {
    loop {
        let entries = (0..n * n).map(|_| random_elem(params, rng)).collect();
        let g = ExtMatrix::from_entries(params, n, n, entries).unwrap();
        if g.is_unimodular() {
            return g;
        }
    }
}

/// `ᵗh · diag(p^e) · σ(h)` for a random unimodular `h`.
pub fn random_hermitian(params: RingParams, exps: &[u32], rng: &mut impl Rng) -> HermMatrix {
    let h = random_unimodular(params, exps.len(), rng);
    HermMatrix::diag_powers(params, exps).congruence(&h).unwrap()
}
