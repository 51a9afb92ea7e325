#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and verification toolkit for symmetric (n+1)-body solutions in
//! which one body moves on a fixed axis while `n` equal masses form a
//! rotating regular n-gon.

pub mod dynamics;
pub mod error;
pub mod gshape;
pub mod integrate;
pub mod model;
pub mod nbody;
pub mod ode;
pub mod output;
pub mod record;
pub mod search;
pub mod simplex;

pub use error::{Error, Result};
