//! Off-diagonal cosmological metrics generated by anholonomic frame
//! deformations, with numerical certification of the field equations and
//! the f-model reconstruction and stability computations built on them.

// `!(a > b)` rejects NaN on purpose; index loops mirror tensor notation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod afdm;
pub mod cosmodyn;
pub mod fieldkit;
pub mod nageometry;
pub mod reconstruct;
pub mod stability;
