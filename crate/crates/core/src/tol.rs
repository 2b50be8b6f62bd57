//! Centralized numerical tolerances.
//!
//! All solvers read their thresholds from a single [`Tolerances`] record so
//! a run can be tightened or loosened coherently (see `Tolerances::scaled`).

use serde::{Deserialize, Serialize};

/// Tolerance record shared by every solver in the crate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative tolerance for the sewing equality `a12_l * b1_r = a12_r * b1_l`.
    pub sewing_eq: f64,
    /// Width factor for bisection brackets: stop at `root_width * (1 + |x|)`.
    pub root_width: f64,
    /// Residual magnitude accepted for the displacement zero: `|delta| < delta_zero * (1 + y0)`.
    pub delta_zero: f64,
    /// Discriminant threshold: `|4D - T^2| < discriminant * max(1, T^2)` routes to
    /// the repeated-root antiderivative.
    pub discriminant: f64,
    /// Spectrum classification threshold: `|D| < spectrum * max(1, T^2)` is treated
    /// as a zero eigenvalue.
    pub spectrum: f64,
    /// Absolute tolerance of the adaptive quadrature.
    pub quad_abs: f64,
    /// Relative tolerance for the algebraic coefficient identities.
    pub identity_rel: f64,
    /// Simple-zero gate: `|F| > simple_zero * (1 + |c0| + |c1| + |c2|)`.
    pub simple_zero: f64,
    /// Agreement required between the half-map pipeline and the flow oracle,
    /// as `oracle_agree * (1 + |y1|)`.
    pub oracle_agree: f64,
    /// Scan cap for unbounded displacement domains.
    pub scan_cap: f64,
    /// Seed points for the displacement zero scan.
    pub scan_seeds: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sewing_eq: 1e-12,
            root_width: 1e-13,
            delta_zero: 1e-11,
            discriminant: 1e-10,
            spectrum: 1e-12,
            quad_abs: 1e-12,
            identity_rel: 1e-12,
            simple_zero: 1e-10,
            oracle_agree: 1e-8,
            scan_cap: 1e6,
            scan_seeds: 512,
        }
    }
}

impl Tolerances {
    /// Rescale the master tolerances by `factor` (1.0 keeps the defaults).
    ///
    /// The structural thresholds (`scan_cap`, `scan_seeds`) are left untouched.
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Self {
            sewing_eq: d.sewing_eq * factor,
            root_width: d.root_width * factor,
            delta_zero: d.delta_zero * factor,
            discriminant: d.discriminant * factor,
            spectrum: d.spectrum * factor,
            quad_abs: d.quad_abs * factor,
            identity_rel: d.identity_rel * factor,
            simple_zero: d.simple_zero * factor,
            oracle_agree: d.oracle_agree * factor,
            ..d
        }
    }
}
