//! Upwind discontinuous Galerkin discretization of the linear
//! advection-reaction equation `u_t + a·∇u + c u = 0` with inflow data, plus
//! pathline tools for residence-time scaling functions.

pub mod basis;
pub mod catalog;
pub mod config;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod field;
pub mod flow;
pub mod mesh;
pub mod metrics;
pub mod operator;
pub mod pathline;
pub mod quadrature;
pub mod time;

pub use error::{Error, Result};
