//! Discretized CAR dynamics on the half-line: Fock space over a uniform grid,
//! the flow of shifts, covariant CP measures, perturbed semigroups and the
//! no-event construction for finite-dimensional dissipative generators.

pub mod error;
pub mod fock;
pub mod grid;
pub mod measure;
pub mod no_event;
pub mod operator;
pub mod shift;
pub mod solver;
pub mod superop;

pub use error::{Error, Result};
pub use fock::{FockMap, FockOperator, FockVector};
pub use grid::{Domain, GridFunction, GridSpec};
pub use measure::{CPMeasureBin, TimeBin};
pub use num_complex::Complex64 as C64;
pub use operator::LowRankOperator;
pub use shift::{DifferenceScheme, MonomialObservable, RankOneState, TimeIndex};
pub use superop::{ChoiMatrix, SuperoperatorMatrix};
