//! Quenched surface pressure of the Edwards-Anderson spin glass.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`]: parallelepiped geometries, torus wrap bonds, cut sets,
//!   k-magnifications and corridor/block partitions;
//! * [`quad`]: Gauss-Hermite and Gauss-Legendre rules used for disorder
//!   and interpolation integrals;
//! * [`disorder`]: coupling realizations (counter-based streams) and the
//!   two disorder-averaging backends (seeded Monte Carlo, tensor-product
//!   Gauss-Hermite quadrature);
//! * [`engine`]: exact per-realization evaluation (full spin enumeration,
//!   1D closed forms, two-replica overlaps);
//! * [`mc`]: Metropolis + parallel-tempering estimation beyond the
//!   enumeration cap;
//! * [`interp`]: interpolation schedules and the t-integrand;
//! * [`surface`]: quenched pressures and surface-pressure assembly under
//!   free, periodic and antiperiodic boundary conditions.
//!
//! The crate is `no_std` (with `alloc`); all IO lives in the companion CLI
//! crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod disorder;
pub mod engine;
pub mod interp;
pub mod lattice;
pub mod mc;
pub mod quad;
pub mod surface;

use alloc::boxed::Box;
use core::fmt;

/// Unified error type for the whole crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A lattice side is below the minimum for the requested geometry.
    SideTooSmall {
        side: usize,
        minimum: usize,
        context: &'static str,
    },
    /// A lattice spec with zero dimensions was supplied.
    EmptyDimension,
    /// An operation that requires a torus got a different geometry kind.
    NotATorus,
    /// An operation that requires a 1D geometry got d > 1.
    NotOneDimensional,
    /// The requested Gauss-Hermite grid exceeds the configured cap.
    GridCapExceeded { required: u128, cap: u128 },
    /// The geometry has more sites than the full-enumeration cap allows.
    EnumerationCapExceeded { sites: usize, cap: usize },
    /// The geometry has more sites than the two-replica enumeration cap allows.
    PairCapExceeded { sites: usize, cap: usize },
    /// A schedule or integrand was requested over an empty designated bond set.
    EmptyDesignatedSet,
    /// A schedule parameter is out of range or inconsistent.
    InvalidSchedule(&'static str),
    /// Monte Carlo parameters violate their invariants.
    InvalidMcParams(&'static str),
    /// A quadrature rule was requested with an invalid order.
    InvalidQuadrature(&'static str),
    /// A coupling assignment does not match the geometry's bond count.
    BondCountMismatch { expected: usize, got: usize },
    /// A spin configuration does not match the geometry's site count.
    SiteCountMismatch { expected: usize, got: usize },
    /// The requested combination of averaging method and engine is not supported.
    Unsupported(&'static str),
    /// A disorder-averaged functional failed at a specific realization.
    FunctionalFailed { index: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SideTooSmall {
                side,
                minimum,
                context,
            } => write!(
                f,
                "side length {side} below minimum {minimum} for {context}"
            ),
            Error::EmptyDimension => write!(f, "lattice spec needs at least one side"),
            Error::NotATorus => write!(f, "operation requires a torus geometry"),
            Error::NotOneDimensional => write!(f, "operation requires a 1D geometry"),
            Error::GridCapExceeded { required, cap } => write!(
                f,
                "Gauss-Hermite grid needs {required} points, above the cap of {cap}"
            ),
            Error::EnumerationCapExceeded { sites, cap } => write!(
                f,
                "{sites} sites exceed the enumeration cap of {cap}; use the mc module"
            ),
            Error::PairCapExceeded { sites, cap } => write!(
                f,
                "{sites} sites exceed the two-replica enumeration cap of {cap}"
            ),
            Error::EmptyDesignatedSet => write!(f, "designated bond set is empty"),
            Error::InvalidSchedule(msg) => write!(f, "invalid schedule: {msg}"),
            Error::InvalidMcParams(msg) => write!(f, "invalid MC parameters: {msg}"),
            Error::InvalidQuadrature(msg) => write!(f, "invalid quadrature request: {msg}"),
            Error::BondCountMismatch { expected, got } => {
                write!(f, "coupling count {got} does not match bond count {expected}")
            }
            Error::SiteCountMismatch { expected, got } => {
                write!(f, "spin configuration length {got} does not match site count {expected}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported combination: {msg}"),
            Error::FunctionalFailed { index, source } => {
                write!(f, "functional failed at realization {index}: {source}")
            }
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::FunctionalFailed { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
