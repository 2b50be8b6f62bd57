//! Analysis of planar piecewise linear differential systems with two zones
//! separated by the line `x = 0` and no sliding region.
//!
//! The crate reduces a raw two-zone system to its six Liénard parameters,
//! evaluates the forward/backward Poincaré half-maps through a principal-value
//! integral identity, locates the unique crossing limit cycle when it exists,
//! and classifies its stability together with the monodromic singularities and
//! the behavior at infinity. Every computation can be cross-checked against an
//! independent closed-form flow oracle.

pub mod canonical;
pub mod cycles;
pub mod flow_oracle;
pub mod halfmap;
pub mod quad;
pub mod solve;
pub mod sweep;
pub mod tol;

pub use canonical::{CanonicalParams, RawSystem, SewingStatus, SewingVerdict};
pub use cycles::{
    AnalysisReport, CycleError, CycleInvariants, InfinityClass, LimitCycleReport, OriginClass,
    Stability,
};
pub use flow_oracle::{CrossingDirection, FlowState, SpectrumCase};
pub use halfmap::{HalfMapError, HalfMapEval, HalfMapSpec, Interval, SensitivityParam, Side};
pub use tol::Tolerances;
