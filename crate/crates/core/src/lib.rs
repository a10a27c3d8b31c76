#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod specfun;
pub mod config;
pub mod potential;
pub mod radial;
pub mod scattering;
pub mod bound;
pub mod levinson;
pub mod cli;
