//! Error classification for process exit codes.
//!
//! 0: success. 2: parse or validation failure. 3: geometric precondition
//! failure (metric not positive definite, point outside a chart, deformation
//! leaving the positive cone). 4: a verification suite failed.

use std::fmt;

use ricscan_core::catalog::CatalogError;
use ricscan_core::chart::GeomError;
use ricscan_core::deform::DeformError;
use ricscan_core::frame::{FrameDeformError, FrameError};
use ricscan_core::linalg::LinalgError;
use ricscan_core::submersion::VariationError;
use ricscan_core::verify::VerifyError;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input: selectors, expressions, spec files, point sets.
    Parse(String),
    /// Geometric precondition failures.
    Geometry(String),
    /// A verification suite reported failing checks.
    SuiteFailed(String),
    /// I/O trouble reading a metric file or writing output.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Geometry(_) => 3,
            CliError::SuiteFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "error: {m}"),
            CliError::Geometry(m) => write!(f, "geometry error: {m}"),
            CliError::SuiteFailed(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> CliError {
        match e {
            GeomError::NotSpd { .. } | GeomError::OutsideDomain { .. } => {
                CliError::Geometry(e.to_string())
            }
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<DeformError> for CliError {
    fn from(e: DeformError) -> CliError {
        match e {
            DeformError::SpdExit { .. } | DeformError::ConformalFactor { .. } => {
                CliError::Geometry(e.to_string())
            }
            DeformError::Geom(g) => g.into(),
            DeformError::Frame(fr) => fr.into(),
            DeformError::FrameDeform(fd) => fd.into(),
            DeformError::Linalg(l) => l.into(),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<FrameError> for CliError {
    fn from(e: FrameError) -> CliError {
        match e {
            FrameError::GramNotSpd { .. } => CliError::Geometry(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<FrameDeformError> for CliError {
    fn from(e: FrameDeformError) -> CliError {
        match e {
            FrameDeformError::SpdExit { .. } => CliError::Geometry(e.to_string()),
            FrameDeformError::Frame(f) => f.into(),
        }
    }
}

impl From<VariationError> for CliError {
    fn from(e: VariationError) -> CliError {
        CliError::Parse(e.to_string())
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> CliError {
        match e {
            CatalogError::Geom(g) => g.into(),
            CatalogError::Frame(f) => f.into(),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> CliError {
        match e {
            LinalgError::NotSpd { .. } => CliError::Geometry(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> CliError {
        match e {
            VerifyError::UnknownSuite(_) => CliError::Parse(e.to_string()),
            VerifyError::Geom(g) => g.into(),
            VerifyError::Deform(d) => d.into(),
            VerifyError::Catalog(c) => c.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}
