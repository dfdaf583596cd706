use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by mesh construction, discretization, time stepping and the
/// experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("element {element} has non-positive volume {volume:e} (line {line})")]
    Orientation {
        element: usize,
        volume: f64,
        line: usize,
    },

    #[error("element {element} references vertex {vertex}, mesh has {n_vertices} vertices (line {line})")]
    DanglingIndex {
        element: usize,
        vertex: usize,
        n_vertices: usize,
        line: usize,
    },

    #[error("unsupported spatial dimension {0}")]
    UnsupportedDim(usize),

    #[error("unsupported polynomial degree {0} (supported: 0..=4)")]
    UnsupportedDegree(usize),

    #[error("no quadrature rule of exactness {exactness} in dimension {dim}")]
    QuadratureUnavailable { dim: usize, exactness: usize },

    #[error("fields live on different discrete spaces")]
    MismatchedSpace,

    #[error("element index {index} out of range (n_elements = {n_elements})")]
    ElementOutOfRange { index: usize, n_elements: usize },

    #[error("non-finite coefficients after step at t = {t}, dt = {dt}")]
    Instability { t: f64, dt: f64 },

    #[error("sample time {t} is not after the last recorded time {last}")]
    NonMonotoneTime { t: f64, last: f64 },

    #[error("flow evaluation failed at ({x}, {y}), t = {t}")]
    FlowEvaluation { x: f64, y: f64, t: f64 },

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
