// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod datamodel;
pub mod objective;
pub mod solver;
pub mod synth;
pub mod retrieval;
pub mod association;
pub mod eval;
pub mod baseline;
