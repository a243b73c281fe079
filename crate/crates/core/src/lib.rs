#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.

pub mod assignment;
pub mod bergman;
pub mod curieweiss;
pub mod diagnostics;
pub mod energy;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod polybasis;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod transport;
pub mod tropical;
pub mod weights;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/vandermonde.md")]
    mod vandermonde {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
    #[doc = include_str!("../../../book/src/bergman.md")]
    mod bergman {}
    #[doc = include_str!("../../../book/src/tropical.md")]
    mod tropical {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/curie_weiss.md")]
    mod curie_weiss {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
