//! Poincaré half-maps through their principal-value integral characterization.
//!
//! For one zone with parameters `(a, T, D)` the half-map sends `y0 >= 0` on
//! the switching line to the unique `y1 <= 0` with
//!
//! ```text
//! PV∫_{y1}^{y0} -y / W(y) dy = q,      W(y) = D y^2 - a T y + a^2,
//! ```
//!
//! where `q` depends on the sign of `a`. The forward map of the left zone and
//! the backward map of the right zone are both instances of this equation:
//! the backward case reduces to the forward one under `(a, T) -> (-a, -T)`,
//! which leaves `W` and the equation untouched. Internally everything is
//! computed in that forward normalization ("effective" parameters below).
//!
//! The integrand has an antiderivative in elementary terms, split by the sign
//! of the discriminant; evaluation is therefore exact up to rounding and the
//! only iteration happens in the outer root solves.

use crate::quad;
use crate::solve::{bisect, newton_polish, Root};
use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Which half-map a spec describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Forward flow of the `x < 0` zone.
    LeftForward,
    /// Backward flow of the `x > 0` zone.
    RightBackward,
}

/// Half-open interval `[lo, hi)`; `hi` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && y < self.hi
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi == f64::INFINITY
    }
}

/// One evaluation of a half-map.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HalfMapEval {
    pub y0: f64,
    pub y1: f64,
    /// Defect of the integral identity at the returned point.
    pub residual: f64,
}

/// Parameter selector for [`HalfMapSpec::sensitivity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityParam {
    /// Derivative with respect to the zone trace.
    WrtT,
    /// Derivative with respect to the zone inhomogeneous term.
    WrtA,
}

#[derive(Debug, Error)]
pub enum HalfMapError {
    #[error("half-map not defined for side {side:?} with a={a}, t={t}, d={d}")]
    NotDefined { side: Side, a: f64, t: f64, d: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

/// A fully resolved half-map: existence has been checked, the constant `q`
/// computed, and the domain/image endpoints solved.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HalfMapSpec {
    pub side: Side,
    /// Zone parameters as given (not the forward normalization).
    pub a: f64,
    pub t: f64,
    pub d: f64,
    /// Right-hand side of the integral identity.
    pub q: f64,
    /// Interval of definition `[lambda, mu)`.
    pub domain: Interval,
    /// Infimum of the image; `-inf` when `W` has no negative root.
    pub image_lo: f64,
    /// Value at the left domain endpoint (`<= 0`).
    pub image_hi: f64,
    tol: Tolerances,
}

/// Existence gate: whether the half-map of `side` is defined for `(a, t, d)`.
pub fn exists(a: f64, t: f64, d: f64, side: Side) -> bool {
    let (a, _t) = effective(a, t, side);
    a > 0.0 || 4.0 * d - t * t > 0.0
}

fn effective(a: f64, t: f64, side: Side) -> (f64, f64) {
    match side {
        Side::LeftForward => (a, t),
        Side::RightBackward => (-a, -t),
    }
}

/// The constant `q` of the integral identity, in forward normalization.
fn q_constant(a_eff: f64, t_eff: f64, d: f64) -> f64 {
    if a_eff > 0.0 {
        0.0
    } else {
        let delta = 4.0 * d - t_eff * t_eff;
        let factor = if a_eff == 0.0 { PI } else { 2.0 * PI };
        factor * t_eff / (d * delta.sqrt())
    }
}

/// Real roots of `W(y) = d y^2 - a t y + a^2`, split into the largest
/// strictly negative and the smallest strictly positive one.
fn w_root_pair(a: f64, t: f64, d: f64) -> (Option<f64>, Option<f64>) {
    let mut roots: Vec<f64> = Vec::with_capacity(2);
    if a == 0.0 {
        // Only the double root at zero, which is neither strictly signed.
    } else if d == 0.0 {
        if t != 0.0 {
            roots.push(a / t);
        }
    } else {
        let b = -a * t;
        let c = a * a;
        let disc = b * b - 4.0 * d * c;
        if disc == 0.0 {
            roots.push(-b / (2.0 * d));
        } else if disc > 0.0 {
            let s = disc.sqrt();
            let qq = -0.5 * (b + b.signum() * s);
            roots.push(qq / d);
            roots.push(c / qq);
        }
    }
    let neg = roots
        .iter()
        .copied()
        .filter(|r| *r < 0.0)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |m| r.max(m))));
    let pos = roots
        .iter()
        .copied()
        .filter(|r| *r > 0.0)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |m| r.min(m))));
    (neg, pos)
}

/// `ln(1+z) - z`, stable for small `z`.
fn ln1p_minus_z(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        z2 * (-0.5 + z * (1.0 / 3.0 + z * (-0.25 + z * 0.2)))
    } else {
        z.ln_1p() - z
    }
}

impl HalfMapSpec {
    /// Resolve the half-map of `side` for zone parameters `(a, t, d)`.
    pub fn build(
        a: f64,
        t: f64,
        d: f64,
        side: Side,
        tol: Tolerances,
    ) -> Result<Self, HalfMapError> {
        if !(a.is_finite() && t.is_finite() && d.is_finite()) {
            return Err(HalfMapError::Precondition("non-finite parameters".into()));
        }
        let (a_eff, t_eff) = effective(a, t, side);
        let delta = 4.0 * d - t * t;
        if !(a_eff > 0.0 || (a_eff <= 0.0 && delta > 0.0)) {
            return Err(HalfMapError::NotDefined { side, a, t, d });
        }
        let q = q_constant(a_eff, t_eff, d);
        let (neg_root, pos_root) = w_root_pair(a, t, d);
        let mu = pos_root.unwrap_or(f64::INFINITY);
        let image_lo = neg_root.unwrap_or(f64::NEG_INFINITY);

        let mut spec = Self {
            side,
            a,
            t,
            d,
            q,
            domain: Interval { lo: 0.0, hi: mu },
            image_lo,
            image_hi: 0.0,
            tol,
        };

        if a_eff < 0.0 && delta > 0.0 && t_eff < 0.0 {
            spec.domain.lo = spec.solve_lambda()?;
        } else if a_eff < 0.0 && delta > 0.0 && t_eff > 0.0 {
            spec.image_hi = spec.solve_image_hi()?;
        }
        Ok(spec)
    }

    /// `W(y) = d y^2 - a t y + a^2` (invariant under the forward normalization).
    pub fn w(&self, y: f64) -> f64 {
        self.d * y * y - self.a * self.t * y + self.a * self.a
    }

    fn a_eff(&self) -> f64 {
        effective(self.a, self.t, self.side).0
    }

    fn t_eff(&self) -> f64 {
        effective(self.a, self.t, self.side).1
    }

    /// Antiderivative of `-y / W(y)` on a component where `W > 0`.
    fn antiderivative(&self, y: f64) -> f64 {
        let (a, t, d) = (self.a, self.t, self.d);
        let at = a * t;
        if d.abs() <= self.tol.spectrum * t.mul_add(t, 1.0).max(1.0) {
            // W is (numerically) linear: a * (a - t y).
            if t * t == 0.0 {
                return -y * y / (2.0 * a * a);
            }
            return ln1p_minus_z(-t * y / a) / (t * t);
        }
        let w = self.w(y);
        let base = -w.ln() / (2.0 * d);
        let delta = 4.0 * d - t * t;
        let u = 2.0 * d * y - at;
        let j = if delta.abs() < self.tol.discriminant * (t * t).max(1.0) {
            -2.0 / u
        } else if delta > 0.0 {
            let s = a.abs() * delta.sqrt();
            2.0 / s * (u / s).atan()
        } else {
            let s = a.abs() * (-delta).sqrt();
            ((u - s) / (u + s)).abs().ln() / s
        };
        base - at / (2.0 * d) * j
    }

    /// `PV∫_{y1}^{y0} -y / W(y) dy`, evaluated in closed form.
    ///
    /// When `a != 0` the integrand is continuous at the origin and the
    /// principal value is an ordinary integral. When `a = 0` the two
    /// logarithmic singularities cancel analytically.
    pub fn pv_integral(&self, y1: f64, y0: f64) -> Result<f64, HalfMapError> {
        if !(y1.is_finite() && y0.is_finite()) {
            return Err(HalfMapError::Domain("non-finite integration bound".into()));
        }
        if y1 == y0 {
            return Ok(0.0);
        }
        if self.a == 0.0 {
            if self.d <= 0.0 {
                return Err(HalfMapError::Domain(
                    "W is non-positive on the integration range".into(),
                ));
            }
            if y1 == 0.0 || y0 == 0.0 {
                return Err(HalfMapError::Domain(
                    "principal value diverges at a zero endpoint when a = 0".into(),
                ));
            }
            return Ok(-(y0.abs().ln() - y1.abs().ln()) / self.d);
        }
        let (lo, hi) = if y1 < y0 { (y1, y0) } else { (y0, y1) };
        if self.w(lo) <= 0.0 || self.w(hi) <= 0.0 {
            return Err(HalfMapError::Domain(
                "W vanishes inside the integration range".into(),
            ));
        }
        if self.d > 0.0 {
            let vertex = self.a * self.t / (2.0 * self.d);
            if lo < vertex && vertex < hi && self.w(vertex) <= 0.0 {
                return Err(HalfMapError::Domain(
                    "W vanishes inside the integration range".into(),
                ));
            }
        }
        Ok(self.antiderivative(y0) - self.antiderivative(y1))
    }

    fn pv_or_inf(&self, y1: f64, y0: f64) -> f64 {
        // Out-of-range probes during bracketing read as +inf, which points the
        // solve back toward the valid side.
        self.pv_integral(y1, y0).unwrap_or(f64::INFINITY)
    }

    /// Left domain endpoint `lambda > 0`: the `y0` with `∫_0^{lambda} -y/W = q`.
    fn solve_lambda(&self) -> Result<f64, HalfMapError> {
        let g = |y0: f64| self.pv_or_inf(0.0, y0) - self.q;
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut expansions = 0;
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 120 {
                return Err(HalfMapError::Convergence(
                    "no sign change while expanding the lambda bracket".into(),
                ));
            }
        }
        let root = bisect(g, lo, hi, self.tol.root_width, 200).ok_or_else(|| {
            HalfMapError::Convergence("lambda bracket lost its sign change".into())
        })?;
        let polished = newton_polish(g, |y0| -y0 / self.w(y0), root, lo, hi, 4);
        Ok(polished.x)
    }

    /// Image right endpoint when it is strictly negative: the `y1` with
    /// `∫_{y1}^0 -y/W = q`.
    fn solve_image_hi(&self) -> Result<f64, HalfMapError> {
        let g = |y1: f64| self.pv_or_inf(y1, 0.0) - self.q;
        let mut hi = 0.0;
        let mut lo = -1.0;
        let mut expansions = 0;
        while g(lo) < 0.0 {
            hi = lo;
            lo *= 2.0;
            expansions += 1;
            if expansions > 120 {
                return Err(HalfMapError::Convergence(
                    "no sign change while expanding the image bracket".into(),
                ));
            }
        }
        let root = bisect(g, lo, hi, self.tol.root_width, 200)
            .ok_or_else(|| HalfMapError::Convergence("image bracket lost its sign change".into()))?;
        let polished = newton_polish(g, |y1| y1 / self.w(y1), root, lo, hi, 4);
        Ok(polished.x)
    }

    /// Evaluate the half-map at `y0`.
    ///
    /// The solution is the unique `y1` in `(image_lo, 0]` where the integral
    /// identity holds; the map `y1 -> PV∫` is strictly monotone there because
    /// its derivative in `y1` equals `y1 / W(y1) < 0`.
    pub fn eval(&self, y0: f64) -> Result<HalfMapEval, HalfMapError> {
        if !y0.is_finite() {
            return Err(HalfMapError::Domain("non-finite y0".into()));
        }
        if !self.domain.contains(y0) {
            return Err(HalfMapError::Domain(format!(
                "y0 = {y0} outside the domain [{}, {})",
                self.domain.lo, self.domain.hi
            )));
        }
        if y0 == self.domain.lo {
            let residual = if self.a == 0.0 || (y0 == 0.0 && self.image_hi == 0.0) {
                0.0
            } else {
                self.pv_or_inf(self.image_hi, y0) - self.q
            };
            return Ok(HalfMapEval {
                y0,
                y1: self.image_hi,
                residual,
            });
        }
        if self.a_eff() == 0.0 {
            // W = d y^2 makes the identity solvable in closed form.
            let delta = 4.0 * self.d - self.t * self.t;
            let y1 = -y0 * (PI * self.t_eff() / delta.sqrt()).exp();
            let residual = self.pv_or_inf(y1, y0) - self.q;
            return Ok(HalfMapEval { y0, y1, residual });
        }

        let h = |y1: f64| self.pv_or_inf(y1, y0) - self.q;
        let hi = 0.0;
        let mut lo;
        if self.image_lo.is_finite() {
            let r = self.image_lo;
            let mut gap = 0.45 * (-r);
            lo = r + gap;
            let mut tries = 0;
            while h(lo) <= 0.0 {
                gap *= 0.1;
                lo = r + gap;
                tries += 1;
                if tries > 280 || lo <= r {
                    return Err(HalfMapError::Convergence(format!(
                        "no bracket above the image endpoint {r} for y0 = {y0}"
                    )));
                }
            }
        } else {
            lo = -(1.0 + 2.0 * y0);
            let mut tries = 0;
            while h(lo) <= 0.0 {
                lo *= 4.0;
                tries += 1;
                if tries > 300 {
                    return Err(HalfMapError::Convergence(format!(
                        "no bracket while expanding toward -inf for y0 = {y0}"
                    )));
                }
            }
        }
        let root = bisect(h, lo, hi, self.tol.root_width, 200).ok_or_else(|| {
            HalfMapError::Convergence(format!("bracket for y0 = {y0} lost its sign change"))
        })?;
        let polished = newton_polish(h, |y1| y1 / self.w(y1), root, lo, hi, 4);
        Ok(HalfMapEval {
            y0,
            y1: polished.x,
            residual: polished.f,
        })
    }

    /// First and second derivatives of the half-map at `(y0, y1 = eval(y0))`.
    pub fn derivatives(&self, y0: f64, y1: f64) -> Result<(f64, f64), HalfMapError> {
        if y1 == 0.0 {
            return Err(HalfMapError::Domain(
                "derivative formulas require y1 < 0".into(),
            ));
        }
        let w0 = self.w(y0);
        let w1 = self.w(y1);
        let d1 = y0 * w1 / (y1 * w0);
        let d2 = -self.a * self.a * (y0 * y0 - y1 * y1) * w1 / (y1.powi(3) * w0 * w0);
        Ok((d1, d2))
    }

    /// Quadratic Taylor coefficient of the map at the origin:
    /// `y(y0) = -y0 + coeff * y0^2 + O(y0^3)`, valid when `y(0) = 0`.
    pub fn taylor_quadratic_coeff(&self) -> Result<f64, HalfMapError> {
        if self.a == 0.0 {
            return Err(HalfMapError::Precondition("requires a != 0".into()));
        }
        if self.domain.lo != 0.0 || self.image_hi != 0.0 {
            return Err(HalfMapError::Precondition(
                "requires 0 in the domain with y(0) = 0".into(),
            ));
        }
        Ok(-2.0 * self.t / (3.0 * self.a))
    }

    /// Slope of the map at infinity when the zone is of focus type.
    ///
    /// For the left-forward map this is `lim y1/y0`; for the right-backward
    /// map it is `lim y0/y1`. Both equal `-exp(pi T / sqrt(4D - T^2))` in the
    /// zone's own parameters.
    pub fn asymptotic_ratio(&self) -> Result<f64, HalfMapError> {
        let delta = 4.0 * self.d - self.t * self.t;
        if delta <= 0.0 {
            return Err(HalfMapError::NotApplicable(
                "asymptotic ratio requires 4D - T^2 > 0".into(),
            ));
        }
        Ok(-(PI * self.t / delta.sqrt()).exp())
    }

    /// Derivative of the half-map value with respect to one zone parameter,
    /// holding `y0` fixed.
    ///
    /// `WrtT` needs the branch where `q` does not depend on the trace
    /// (forward-normalized `a > 0`); `WrtA` needs the focus branch where `q`
    /// does not depend on `a` (forward-normalized `a < 0`, `4D - T^2 > 0`).
    pub fn sensitivity(
        &self,
        y0: f64,
        y1: f64,
        which: SensitivityParam,
    ) -> Result<f64, HalfMapError> {
        match which {
            SensitivityParam::WrtT => {
                if self.a_eff() <= 0.0 {
                    return Err(HalfMapError::Precondition(
                        "trace sensitivity requires the a > 0 branch".into(),
                    ));
                }
                let integral = quad::integrate(
                    &|y: f64| {
                        let r = y / self.w(y);
                        r * r
                    },
                    y1,
                    y0,
                    self.tol.quad_abs,
                );
                Ok(self.a * self.w(y1) / y1 * integral)
            }
            SensitivityParam::WrtA => {
                let delta = 4.0 * self.d - self.t * self.t;
                if self.a_eff() >= 0.0 || delta <= 0.0 {
                    return Err(HalfMapError::Precondition(
                        "offset sensitivity requires the focus branch with a < 0".into(),
                    ));
                }
                let num = (y0 - y1) * (self.t * y0 * y1 - self.a * (y0 + y1));
                Ok(num / (y1 * self.w(y0)))
            }
        }
    }
}
