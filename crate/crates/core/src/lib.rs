//! Anytime-valid confidence sequences for means of bounded random vectors,
//! built from the wealth of gamblers in multi-horse races.
//!
//! For a candidate mean `m` on the simplex, a gambler facing odds `1/m_j`
//! cannot grow their wealth in expectation when `m` is the true mean, so by
//! Ville's inequality the set `{ m : W_t(m) < 1/δ }` covers the truth at all
//! times simultaneously with probability at least `1 − δ`.
//!
//! * [`wealth`] holds the wealth kernels: the Krichevsky–Trofimov mixture for
//!   categorical data, Cover's universal portfolio for probability-vector
//!   data, and the sampling-without-replacement variants.
//! * [`confset`] turns a kernel into a running-intersection confidence set on
//!   a grid of candidates.
//! * [`baselines`] has coordinatewise aggregations and classical
//!   (non-time-uniform) comparators.
//! * [`wor`] runs census hypotheses for finite populations sampled without
//!   replacement.
//! * [`reduce`] embeds `[0, 1]^{K−1}`-valued observations into the simplex.

pub mod baselines;
pub mod confset;
pub mod error;
pub mod numerics;
pub mod reduce;
pub mod simplex;
pub mod wealth;
pub mod wor;

pub use error::{Error, Result};
pub use numerics::LogValue;
pub use simplex::{CountVector, GridIndex, ProbVector};
pub use wealth::{DirichletPrior, UpState};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/wealth.md")]
    mod wealth {}
    #[doc = include_str!("../../../book/src/confidence-sets.md")]
    mod confidence_sets {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/without-replacement.md")]
    mod without_replacement {}
    #[doc = include_str!("../../../book/src/bounded-vectors.md")]
    mod bounded_vectors {}
    #[doc = include_str!("../../../book/src/simulations.md")]
    mod simulations {}
}
