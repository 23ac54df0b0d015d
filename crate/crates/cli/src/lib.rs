//! Driver layer over the solver core: run configuration, orchestration and
//! the on-disk artifact formats (legacy VTK, CSV tables, mesh files). The
//! `porodarcy` binary is a thin argument parser over [`runner`].

pub mod config;
pub mod csvio;
pub mod error;
pub mod meshfile;
pub mod runner;
pub mod vtk;

pub use error::{Error, Result};
