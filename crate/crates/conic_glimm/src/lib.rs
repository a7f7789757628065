//! Random-choice construction of supersonic potential flow past a curved cone,
//! posed as an inverse problem on the surface pressure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod diagnostics;
pub mod error;
pub mod functional;
pub mod gas;
pub mod io;
pub mod ode;
pub mod polar;
pub mod riemann;
pub mod scheme;
pub mod selfsim;

pub use error::{Error, Result};
pub use gas::{FlowParams, GasState};
