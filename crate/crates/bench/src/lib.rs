//! Shared inputs for the benchmarks.

use std::sync::Arc;

use tzconj_core::chain::QuotientChain;
use tzconj_core::sigma::mu_sample;
use tzconj_core::{BlockCode, SigmaDatum, Skeleton, SubshiftHandle};

pub fn pd(depth: u32) -> Skeleton {
    Skeleton::period_doubling(depth).expect("supported depth")
}

pub fn flipped(x: &Skeleton) -> Skeleton {
    BlockCode::flip().image(x).expect("radius 0")
}

pub fn dyadic_chain(levels: u32) -> Arc<QuotientChain> {
    let periods: Vec<u64> = (1..=levels).map(|n| 1u64 << n).collect();
    Arc::new(QuotientChain::cyclic(&periods).expect("dyadic chain"))
}

pub fn sigma_datum(levels: u32, seed: u64) -> SigmaDatum {
    let chain = dyadic_chain(levels);
    mu_sample(&chain, levels as usize, seed).expect("sample")
}

pub fn handle(x: Skeleton) -> SubshiftHandle {
    SubshiftHandle::from_skeleton(x)
}
