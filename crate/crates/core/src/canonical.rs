//! Sewing validation and reduction to the Liénard canonical parameters.
//!
//! A two-zone system `x' = A_L x + b_L` (for `x1 < 0`) / `A_R x + b_R` (for
//! `x1 > 0`) crosses the switching line transversally everywhere except at
//! most one point exactly when `a12_l * a12_r > 0` and
//! `a12_l * b1_r = a12_r * b1_l`. Under that condition the dynamics are
//! conjugate to a Liénard-form system determined by six numbers: the traces,
//! the determinants, and one inhomogeneous coefficient per zone. Only those
//! six parameters are computed here; the conjugacy itself is never built.

use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The raw two-zone system: zone matrices and offset vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawSystem {
    /// Matrix of the `x1 < 0` zone, row major.
    pub a_l: [[f64; 2]; 2],
    /// Offset of the `x1 < 0` zone.
    pub b_l: [f64; 2],
    /// Matrix of the `x1 > 0` zone, row major.
    pub a_r: [[f64; 2]; 2],
    /// Offset of the `x1 > 0` zone.
    pub b_r: [f64; 2],
}

impl RawSystem {
    pub fn is_finite(&self) -> bool {
        self.a_l
            .iter()
            .chain(self.a_r.iter())
            .flatten()
            .chain(self.b_l.iter())
            .chain(self.b_r.iter())
            .all(|v| v.is_finite())
    }
}

/// The six Liénard parameters: traces, determinants, inhomogeneous terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub t_l: f64,
    pub t_r: f64,
    pub d_l: f64,
    pub d_r: f64,
    pub a_l: f64,
    pub a_r: f64,
}

impl CanonicalParams {
    pub fn new(a_l: f64, a_r: f64, t_l: f64, t_r: f64, d_l: f64, d_r: f64) -> Self {
        Self {
            t_l,
            t_r,
            d_l,
            d_r,
            a_l,
            a_r,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.t_l, self.t_r, self.d_l, self.d_r, self.a_l, self.a_r]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Classification of the switching-line contact structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SewingStatus {
    /// Transversal crossing everywhere except at most one tangency.
    Sewing,
    /// `a12_l * a12_r = 0`: one zone cannot cross the line, so no periodic
    /// orbits exist; such inputs are rejected rather than analyzed.
    NonTransversal,
    /// A sliding (or escaping) segment is present.
    SlidingPresent,
}

/// Verdict of [`check_sewing`], with a human-readable reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SewingVerdict {
    pub status: SewingStatus,
    pub detail: String,
}

impl SewingVerdict {
    pub fn is_sewing(&self) -> bool {
        self.status == SewingStatus::Sewing
    }
}

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error("input is not a sewing system: {0:?} ({1})")]
    NotSewing(SewingStatus, String),
    #[error("non-finite entry in raw system")]
    NonFinite,
}

/// Decide whether the raw system crosses the switching line without sliding.
///
/// The product condition is tested exactly; the offset equality is tested to
/// `tol.sewing_eq` relative to the largest coefficient magnitude, since raw
/// inputs typically come from finite-precision sources.
pub fn check_sewing(raw: &RawSystem, tol: &Tolerances) -> SewingVerdict {
    let a12_l = raw.a_l[0][1];
    let a12_r = raw.a_r[0][1];
    let product = a12_l * a12_r;
    if product == 0.0 {
        return SewingVerdict {
            status: SewingStatus::NonTransversal,
            detail: format!(
                "a12_l * a12_r = 0 (a12_l = {a12_l}, a12_r = {a12_r}); the line cannot be crossed transversally"
            ),
        };
    }
    if product < 0.0 {
        return SewingVerdict {
            status: SewingStatus::SlidingPresent,
            detail: format!("a12_l * a12_r = {product} < 0 creates a sliding segment"),
        };
    }
    let lhs = a12_l * raw.b_r[0];
    let rhs = a12_r * raw.b_l[0];
    let scale = [a12_l, a12_r, raw.b_l[0], raw.b_r[0]]
        .iter()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if (lhs - rhs).abs() <= tol.sewing_eq * scale * scale {
        SewingVerdict {
            status: SewingStatus::Sewing,
            detail: "transversal crossing with a single tangency at most".to_string(),
        }
    } else {
        SewingVerdict {
            status: SewingStatus::SlidingPresent,
            detail: format!(
                "a12_l * b1_r = {lhs} differs from a12_r * b1_l = {rhs}; a sliding segment exists"
            ),
        }
    }
}

/// The Liénard parameters of a raw system, with no sewing gate applied.
pub fn lienard_parameters(raw: &RawSystem) -> CanonicalParams {
    let trace = |m: &[[f64; 2]; 2]| m[0][0] + m[1][1];
    let det = |m: &[[f64; 2]; 2]| m[0][0] * m[1][1] - m[0][1] * m[1][0];
    CanonicalParams {
        t_l: trace(&raw.a_l),
        t_r: trace(&raw.a_r),
        d_l: det(&raw.a_l),
        d_r: det(&raw.a_r),
        a_l: raw.a_l[0][1] * raw.b_l[1] - raw.a_l[1][1] * raw.b_l[0],
        a_r: raw.a_r[0][1] * raw.b_r[1] - raw.a_r[1][1] * raw.b_r[0],
    }
}

/// Reduce a sewing system to its six canonical parameters.
///
/// Rejects non-sewing input with the verdict embedded in the error.
pub fn reduce_to_lienard(
    raw: &RawSystem,
    tol: &Tolerances,
) -> Result<CanonicalParams, CanonicalError> {
    if !raw.is_finite() {
        return Err(CanonicalError::NonFinite);
    }
    let verdict = check_sewing(raw, tol);
    if !verdict.is_sewing() {
        return Err(CanonicalError::NotSewing(verdict.status, verdict.detail));
    }
    Ok(lienard_parameters(raw))
}
