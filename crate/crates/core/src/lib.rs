#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compensator;
pub mod error;
pub mod filter;
pub mod harness;
pub mod mixing_law;
pub mod pathgen;
pub mod quadrature;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
pub use mixing_law::{LawSpec, MixingLaw};
