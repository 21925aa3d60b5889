//! Post-processing: ionic concentrations, VTK output, cross-mesh
//! interpolation and the average-error convergence metric.

mod bundle;
mod error_metric;
mod locate;
mod trace_csv;
mod vtk;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use bundle::{concentrations, ConcentrationField, SolutionBundle};
pub use error_metric::average_error;
pub use locate::{interpolate, PointLocator, Sample};
pub use trace_csv::write_trace_csv;
pub use vtk::{parse_vtk, write_vtk, write_vtk_to, VtkData, VTK_UNDEFINED};

#[derive(Debug, Error)]
pub enum PostError {
    #[error("field {name:?} has {len} values, but the mesh has {expected} vertices")]
    FieldLength { name: String, len: usize, expected: usize },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("meshes do not cover the same domain: {0}")]
    DomainMismatch(String),
    #[error("{which} field is not finite at vertex {vertex}")]
    NonFinite { which: &'static str, vertex: usize },
    #[error("VTK line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[cfg(test)]
mod tests;
