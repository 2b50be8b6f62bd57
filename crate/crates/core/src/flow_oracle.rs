//! Independent ground truth: closed-form flow of each affine zone, exact
//! first-crossing solves, oracle half-maps, and full-turn cycle verification.
//!
//! A zone with parameters `(a, t, d)` evolves as `x' = t x - y`,
//! `y' = d x - a`. The solution is written in closed form per spectrum case
//! (trigonometric, split exponentials, polynomial-times-exponential, and the
//! zero-eigenvalue drift). Crossing times of `x = 0` are bracketed
//! case-analytically — one marched rotation period for complex spectra,
//! monotone tails split at the single stationary time for real spectra — and
//! then bisected. Everything here is deliberately independent of the
//! half-map integral characterization so that disagreement indicts the
//! pipeline, not the oracle.

use crate::canonical::CanonicalParams;
use crate::solve::bisect;
use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// A point of the flow, with accumulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl FlowState {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }
}

/// Spectrum of the zone matrix `[[t, -1], [d, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectrumCase {
    /// `t^2 - 4d < 0`: rotation at angular rate `omega`.
    ComplexPair { half_trace: f64, omega: f64 },
    /// `t^2 - 4d > 0`: split exponentials `mu1 > mu2`.
    RealDistinct { mu1: f64, mu2: f64 },
    /// Discriminant below threshold: defective double eigenvalue.
    RealRepeated { mu: f64 },
    /// `|d|` below threshold: one eigenvalue is (numerically) zero.
    SingularZeroEigen { trace: f64 },
}

/// Which half-map flight to solve for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingDirection {
    /// Forward flow of the left zone (`x < 0` excursion, `tau > 0`).
    ForwardFromLeft,
    /// Backward flow of the right zone (`x > 0` excursion, `tau < 0`).
    BackwardFromRight,
}

/// Zone label used when sampling the sewn trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Zone {
    L,
    R,
}

/// One row of a sampled trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub side: Zone,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("the orbit through y0 = {0} does not close into a full turn")]
    NotClosed(f64),
    #[error("trajectory sampling needs at least two output points")]
    TooFewPoints,
}

/// Classify the zone spectrum with the thresholds of `tol`.
pub fn classify_spectrum(t: f64, d: f64, tol: &Tolerances) -> SpectrumCase {
    let scale = (t * t).max(1.0);
    if d.abs() <= tol.spectrum * scale {
        return SpectrumCase::SingularZeroEigen { trace: t };
    }
    let disc = t * t - 4.0 * d;
    if disc.abs() <= tol.spectrum * scale {
        SpectrumCase::RealRepeated { mu: 0.5 * t }
    } else if disc < 0.0 {
        SpectrumCase::ComplexPair {
            half_trace: 0.5 * t,
            omega: 0.5 * (-disc).sqrt(),
        }
    } else {
        let w = 0.5 * disc.sqrt();
        SpectrumCase::RealDistinct {
            mu1: 0.5 * t + w,
            mu2: 0.5 * t - w,
        }
    }
}

/// `(e^z - 1) / z`, stable near zero.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-300 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z) / z^2`, stable near zero.
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Exact flow of one zone over `dt` (any sign).
pub fn flow(a: f64, t: f64, d: f64, state: FlowState, dt: f64, tol: &Tolerances) -> FlowState {
    let f = Flight::new(a, t, d, state, tol);
    FlowState {
        x: f.x_at(dt),
        y: f.y_at(dt),
        t: state.t + dt,
    }
}

/// Closed-form solution of one zone from a fixed initial state.
///
/// Precomputes the spectral decomposition once so that crossing solvers can
/// evaluate `x(tau)` (plain or exponentially rescaled) cheaply.
struct Flight {
    a: f64,
    case: SpectrumCase,
    x0: f64,
    y0: f64,
    // Affine fixed point (nonsingular cases).
    ex: f64,
    ey: f64,
    // Initial offset from the fixed point and its image under N = M - (t/2) I.
    w1: f64,
    w2: f64,
    nw1: f64,
    nw2: f64,
}

impl Flight {
    fn new(a: f64, t: f64, d: f64, state: FlowState, tol: &Tolerances) -> Self {
        let case = classify_spectrum(t, d, tol);
        let (ex, ey) = if matches!(case, SpectrumCase::SingularZeroEigen { .. }) {
            (0.0, 0.0)
        } else {
            (a / d, t * a / d)
        };
        let (w1, w2) = (state.x - ex, state.y - ey);
        let h = 0.5 * t;
        Self {
            a,
            case,
            x0: state.x,
            y0: state.y,
            ex,
            ey,
            w1,
            w2,
            nw1: h * w1 - w2,
            nw2: d * w1 - h * w2,
        }
    }

    /// Exponent factored out by `x_scaled_at`; zero when no rescaling is needed.
    fn scale_exponent(&self) -> f64 {
        match self.case {
            SpectrumCase::ComplexPair { half_trace, .. } => half_trace.max(0.0),
            SpectrumCase::RealDistinct { mu1, .. } => mu1.max(0.0),
            SpectrumCase::RealRepeated { mu } => mu.max(0.0),
            SpectrumCase::SingularZeroEigen { trace } => trace.max(0.0),
        }
    }

    fn x_at(&self, tau: f64) -> f64 {
        match self.case {
            SpectrumCase::ComplexPair { half_trace, omega } => {
                let (c, s) = ((omega * tau).cos(), (omega * tau).sin() / omega);
                self.ex + (half_trace * tau).exp() * (c * self.w1 + s * self.nw1)
            }
            SpectrumCase::RealDistinct { mu1, mu2 } => {
                let w = 0.5 * (mu1 - mu2);
                let up = 0.5 * (self.w1 + self.nw1 / w);
                let um = 0.5 * (self.w1 - self.nw1 / w);
                self.ex + (mu1 * tau).exp() * up + (mu2 * tau).exp() * um
            }
            SpectrumCase::RealRepeated { mu } => {
                self.ex + (mu * tau).exp() * (self.w1 + tau * self.nw1)
            }
            SpectrumCase::SingularZeroEigen { trace } => {
                let z = trace * tau;
                self.x0 * z.exp() - self.y0 * tau * phi1(z) + self.a * tau * tau * phi2(z)
            }
        }
    }

    fn y_at(&self, tau: f64) -> f64 {
        match self.case {
            SpectrumCase::ComplexPair { half_trace, omega } => {
                let (c, s) = ((omega * tau).cos(), (omega * tau).sin() / omega);
                self.ey + (half_trace * tau).exp() * (c * self.w2 + s * self.nw2)
            }
            SpectrumCase::RealDistinct { mu1, mu2 } => {
                let w = 0.5 * (mu1 - mu2);
                let up = 0.5 * (self.w2 + self.nw2 / w);
                let um = 0.5 * (self.w2 - self.nw2 / w);
                self.ey + (mu1 * tau).exp() * up + (mu2 * tau).exp() * um
            }
            SpectrumCase::RealRepeated { mu } => {
                self.ey + (mu * tau).exp() * (self.w2 + tau * self.nw2)
            }
            SpectrumCase::SingularZeroEigen { .. } => self.y0 - self.a * tau,
        }
    }

    /// `x(tau) * exp(-m tau)` with `m = scale_exponent()`: same zeros as `x`,
    /// but bounded for large `tau` so sign probes never overflow.
    fn x_scaled_at(&self, tau: f64) -> f64 {
        let m = self.scale_exponent();
        if m == 0.0 || tau <= 0.0 {
            return self.x_at(tau);
        }
        match self.case {
            SpectrumCase::ComplexPair { omega, .. } => {
                let (c, s) = ((omega * tau).cos(), (omega * tau).sin() / omega);
                self.ex * (-m * tau).exp() + c * self.w1 + s * self.nw1
            }
            SpectrumCase::RealDistinct { mu1, mu2 } => {
                let w = 0.5 * (mu1 - mu2);
                let up = 0.5 * (self.w1 + self.nw1 / w);
                let um = 0.5 * (self.w1 - self.nw1 / w);
                self.ex * (-m * tau).exp() + ((mu1 - m) * tau).exp() * up
                    + ((mu2 - m) * tau).exp() * um
            }
            SpectrumCase::RealRepeated { mu } => {
                self.ex * (-m * tau).exp() + ((mu - m) * tau).exp() * (self.w1 + tau * self.nw1)
            }
            SpectrumCase::SingularZeroEigen { trace } => {
                let z = trace * tau;
                let e = (-z).exp();
                // psi1 = phi1(z) e^-z, psi2 = phi2(z) e^-z, both bounded for z > 0.
                let psi1 = (1.0 - e) / z;
                let psi2 = (1.0 - e * (1.0 + z)) / (z * z);
                self.x0 * 1.0 - self.y0 * tau * psi1 + self.a * tau * tau * psi2
            }
        }
    }

    /// The unique positive stationary time of `x`, when it exists (real
    /// spectra only; `x'` is an exponential polynomial with at most one
    /// positive zero).
    fn positive_stationary(&self) -> Option<f64> {
        match self.case {
            SpectrumCase::ComplexPair { .. } => None,
            SpectrumCase::RealDistinct { mu1, mu2 } => {
                let w = 0.5 * (mu1 - mu2);
                let big = mu1 * 0.5 * (self.w1 + self.nw1 / w);
                let small = mu2 * 0.5 * (self.w1 - self.nw1 / w);
                if big == 0.0 {
                    return None;
                }
                let ratio = -small / big;
                if ratio <= 0.0 {
                    return None;
                }
                let sigma = ratio.ln() / (mu1 - mu2);
                (sigma > 0.0).then_some(sigma)
            }
            SpectrumCase::RealRepeated { mu } => {
                let lin = self.nw1 * mu;
                if lin == 0.0 {
                    return None;
                }
                let sigma = -(self.nw1 + self.w1 * mu) / lin;
                (sigma > 0.0).then_some(sigma)
            }
            SpectrumCase::SingularZeroEigen { trace } => {
                let c = trace * self.x0 - self.y0;
                if self.a == 0.0 {
                    return None;
                }
                if trace == 0.0 {
                    let sigma = -c / self.a;
                    return (sigma > 0.0).then_some(sigma);
                }
                let arg = trace * c / self.a;
                if arg <= -1.0 {
                    return None;
                }
                let sigma = -arg.ln_1p() / trace;
                (sigma > 0.0).then_some(sigma)
            }
        }
    }
}

/// First `tau in (0, horizon]` with `x(tau) = 0` and `x` of `excursion_sign`
/// just after the start. Returns the crossing time and the state there.
fn first_zero_of_x(flight: &Flight, horizon: f64, tol: &Tolerances) -> Option<(f64, f64)> {
    let tau = match flight.case {
        SpectrumCase::ComplexPair { .. } => first_zero_complex(flight, horizon, tol)?,
        _ => first_zero_real(flight, horizon, tol)?,
    };
    Some((tau, flight.y_at(tau)))
}

fn refine_zero(flight: &Flight, lo: f64, hi: f64, tol: &Tolerances) -> f64 {
    let root = bisect(
        |tau| flight.x_scaled_at(tau),
        lo,
        hi,
        1e-2 * tol.root_width,
        300,
    )
    .map(|r| r.x)
    .unwrap_or(0.5 * (lo + hi));
    // One secant step on the scaled values sharpens the last digits.
    let h = 1e-7 * (1.0 + root.abs());
    let (f0, f1) = (
        flight.x_scaled_at(root - h),
        flight.x_scaled_at(root + h),
    );
    let slope = (f1 - f0) / (2.0 * h);
    let fmid = flight.x_scaled_at(root);
    if slope != 0.0 && slope.is_finite() {
        let cand = root - fmid / slope;
        if cand > lo && cand < hi && flight.x_scaled_at(cand).abs() <= fmid.abs() {
            return cand;
        }
    }
    root
}

fn first_zero_complex(flight: &Flight, horizon: f64, tol: &Tolerances) -> Option<f64> {
    let SpectrumCase::ComplexPair { half_trace, omega } = flight.case else {
        unreachable!()
    };
    let period = 2.0 * PI / omega;
    let amp0 = (flight.w1 * flight.w1 + (flight.nw1 / omega) * (flight.nw1 / omega)).sqrt();
    let step = period / 256.0;

    // Find a probe strictly inside the excursion. From a line start the
    // orbit may graze (x'' taking it straight back), in which case there is
    // no excursion at all and no crossing.
    let mut probe = step.min(horizon);
    let mut shrink = 0;
    while flight.x_scaled_at(probe) >= 0.0 {
        probe *= 0.25;
        shrink += 1;
        if shrink > 200 {
            return None;
        }
    }

    let mut prev = probe;
    let mut x_prev = flight.x_scaled_at(prev);
    let mut delta_prev = 0.0f64;
    loop {
        let next = (prev + step).min(horizon);
        let x_next = flight.x_scaled_at(next);
        if x_next >= 0.0 {
            return Some(refine_zero(flight, prev, next, tol));
        }
        // A local maximum between samples can hide a double crossing. The
        // bracket floor is the first verified in-excursion probe, never the
        // (grazing) start itself.
        let delta = x_next - x_prev;
        if delta_prev > 0.0 && delta < 0.0 {
            let (lo, hi) = ((prev - step).max(probe), next);
            let (tau_max, x_max) = golden_max(|tau| flight.x_scaled_at(tau), lo, hi);
            if x_max >= 0.0 {
                return Some(refine_zero(flight, lo, tau_max, tol));
            }
        }
        // Once the rotation amplitude falls below the offset, x keeps the
        // sign of the fixed point forever.
        if half_trace < 0.0 && flight.ex != 0.0 {
            let amp = (half_trace * next).exp() * amp0;
            if amp < flight.ex.abs() {
                return None;
            }
        }
        if next >= horizon {
            return None;
        }
        prev = next;
        x_prev = x_next;
        delta_prev = delta;
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

fn first_zero_real(flight: &Flight, horizon: f64, tol: &Tolerances) -> Option<f64> {
    let sigma = flight.positive_stationary();
    let start_on_line = flight.x0 == 0.0;

    if start_on_line {
        // x enters the excursion and is monotone until sigma; a return can
        // only happen on the monotone tail past sigma.
        let sigma = sigma?;
        if sigma > horizon {
            return None;
        }
        let x_sigma = flight.x_scaled_at(sigma);
        if x_sigma == 0.0 {
            return Some(sigma);
        }
        if x_sigma > 0.0 {
            // Rounding put the turning point past zero; the crossing is just
            // before it.
            let mut lo = sigma * 0.5;
            let mut tries = 0;
            while flight.x_scaled_at(lo) >= 0.0 {
                lo *= 0.5;
                tries += 1;
                if tries > 200 {
                    return None;
                }
            }
            return Some(refine_zero(flight, lo, sigma, tol));
        }
        return expand_past(flight, sigma, horizon, tol);
    }

    // Interior start: x is monotone on (0, sigma] and [sigma, inf).
    let x_start = flight.x_at(0.0);
    if let Some(sigma) = sigma.filter(|s| *s < horizon) {
        let x_sigma = flight.x_scaled_at(sigma);
        if x_start.signum() != x_sigma.signum() && x_sigma != 0.0 {
            return Some(refine_zero(flight, 0.0, sigma, tol));
        }
        if x_sigma == 0.0 {
            return Some(sigma);
        }
        return expand_past(flight, sigma, horizon, tol);
    }
    // Fully monotone up to the horizon.
    let x_hi = flight.x_scaled_at(horizon);
    if x_start.signum() != x_hi.signum() {
        return Some(refine_zero(flight, 0.0, horizon, tol));
    }
    None
}

/// Walk the monotone tail beyond `from` until the sign of `x` flips, then
/// bisect. `None` past the horizon.
fn expand_past(flight: &Flight, from: f64, horizon: f64, tol: &Tolerances) -> Option<f64> {
    let x_from = flight.x_scaled_at(from);
    let target = -x_from.signum();
    let mut lo = from;
    let mut step = 0.05 * (1.0 + from);
    loop {
        let hi = (lo + step).min(horizon);
        let x_hi = flight.x_scaled_at(hi);
        if x_hi == 0.0 {
            return Some(hi);
        }
        if x_hi.signum() == target {
            return Some(refine_zero(flight, lo, hi, tol));
        }
        if hi >= horizon {
            return None;
        }
        lo = hi;
        step *= 2.0;
    }
}

/// Cap on crossing-time searches for non-rotating spectra; flights longer
/// than this are reported as non-returning.
const TIME_CAP: f64 = 1e6;

/// Canonical crossing problem: forward flow of `(a, t, d)` from `(0, y0)`,
/// excursion in `x < 0`, first return to the line.
fn crossing_from_line(a: f64, t: f64, d: f64, y0: f64, tol: &Tolerances) -> Option<(f64, f64)> {
    if !(y0 >= 0.0) {
        return None;
    }
    let flight = Flight::new(a, t, d, FlowState::new(0.0, y0, 0.0), tol);
    let horizon = match flight.case {
        // From a line start the first rotation period decides: if x stays
        // negative through one full turn it contracts into the fixed point
        // and never returns.
        SpectrumCase::ComplexPair { omega, .. } => 2.0 * PI / omega * (1.0 + 1e-9),
        _ => TIME_CAP,
    };
    first_zero_of_x(&flight, horizon, tol)
}

/// Smallest-magnitude crossing time of the requested half-map flight, signed
/// like the flow direction (`> 0` forward-left, `< 0` backward-right).
pub fn first_crossing_time(
    a: f64,
    t: f64,
    d: f64,
    y0: f64,
    direction: CrossingDirection,
    tol: &Tolerances,
) -> Option<f64> {
    match direction {
        CrossingDirection::ForwardFromLeft => crossing_from_line(a, t, d, y0, tol).map(|c| c.0),
        CrossingDirection::BackwardFromRight => {
            // Backward-right is forward-left of the time-and-x reflected zone.
            crossing_from_line(-a, -t, d, y0, tol).map(|c| -c.0)
        }
    }
}

/// The half-map value taken from the flow: `y` at the first crossing.
pub fn oracle_half_map(
    a: f64,
    t: f64,
    d: f64,
    y0: f64,
    direction: CrossingDirection,
    tol: &Tolerances,
) -> Option<f64> {
    match direction {
        CrossingDirection::ForwardFromLeft => crossing_from_line(a, t, d, y0, tol).map(|c| c.1),
        CrossingDirection::BackwardFromRight => {
            crossing_from_line(-a, -t, d, y0, tol).map(|c| c.1)
        }
    }
}

/// Full-turn return map of the sewn system: left flight from `(0, y0)`, then
/// the right zone forward until the line is hit again.
pub fn return_map(params: &CanonicalParams, y0: f64, tol: &Tolerances) -> Option<f64> {
    let (_, y1) = crossing_from_line(params.a_l, params.t_l, params.d_l, y0, tol)?;
    // Forward flow in x > 0 from (0, y1) is the reflected canonical problem.
    let (_, w) = crossing_from_line(-params.a_r, params.t_r, params.d_r, -y1, tol)?;
    Some(-w)
}

/// Close one full turn from `(0, y0_star)` and report `(residual, period)`.
pub fn verify_cycle(
    params: &CanonicalParams,
    y0_star: f64,
    tol: &Tolerances,
) -> Result<(f64, f64), OracleError> {
    let (tau_l, y1) = crossing_from_line(params.a_l, params.t_l, params.d_l, y0_star, tol)
        .ok_or(OracleError::NotClosed(y0_star))?;
    let (tau_r, w) = crossing_from_line(-params.a_r, params.t_r, params.d_r, -y1, tol)
        .ok_or(OracleError::NotClosed(y0_star))?;
    Ok(((-w - y0_star).abs(), tau_l + tau_r))
}

fn active_zone(params: &CanonicalParams, x: f64, y: f64) -> Zone {
    if x < 0.0 {
        Zone::L
    } else if x > 0.0 {
        Zone::R
    } else if y > 0.0 {
        Zone::L
    } else if y < 0.0 {
        Zone::R
    } else if params.a_l < 0.0 {
        Zone::L
    } else {
        Zone::R
    }
}

/// Piecewise-exact trajectory of the sewn system, sampled at `n` uniform
/// output times over `t_span` (which may be negative for backward flow).
pub fn sample_trajectory(
    params: &CanonicalParams,
    start: FlowState,
    t_span: f64,
    n: usize,
    tol: &Tolerances,
) -> Result<Vec<TrajectorySample>, OracleError> {
    if n < 2 {
        return Err(OracleError::TooFewPoints);
    }
    if t_span < 0.0 {
        // Time reversal maps the sewn system onto another sewn system under
        // (t, x) -> (-t, -x); run it forward and reflect the samples back.
        let reversed = CanonicalParams {
            t_l: -params.t_r,
            t_r: -params.t_l,
            d_l: params.d_r,
            d_r: params.d_l,
            a_l: -params.a_r,
            a_r: -params.a_l,
        };
        let mirrored = FlowState::new(-start.x, start.y, start.t);
        let samples = sample_trajectory(&reversed, mirrored, -t_span, n, tol)?;
        return Ok(samples
            .into_iter()
            .map(|s| TrajectorySample {
                t: 2.0 * start.t - s.t,
                x: -s.x,
                y: s.y,
                side: match s.side {
                    Zone::L => Zone::R,
                    Zone::R => Zone::L,
                },
            })
            .collect());
    }

    let dt_out = t_span / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let mut state = start;
    let mut emitted = 0usize;
    while emitted < n {
        let zone = active_zone(params, state.x, state.y);
        let (a, t, d) = match zone {
            Zone::L => (params.a_l, params.t_l, params.d_l),
            Zone::R => (params.a_r, params.t_r, params.d_r),
        };
        // The right zone reflected through (x, y) -> (-x, -y) is a canonical
        // left flight with the offset negated.
        let (flight, sign) = match zone {
            Zone::L => (
                Flight::new(a, t, d, FlowState::new(state.x, state.y, 0.0), tol),
                1.0,
            ),
            Zone::R => (
                Flight::new(-a, t, d, FlowState::new(-state.x, -state.y, 0.0), tol),
                -1.0,
            ),
        };
        let remaining = start.t + t_span - state.t;
        let switch = if remaining > 0.0 {
            first_zero_of_x(&flight, remaining, tol)
        } else {
            None
        };
        let segment_end = switch.map_or(remaining, |(tau, _)| tau);
        while emitted < n {
            let t_k = start.t + emitted as f64 * dt_out;
            let local = t_k - state.t;
            if local > segment_end && switch.is_some() {
                break;
            }
            out.push(TrajectorySample {
                t: t_k,
                x: sign * flight.x_at(local),
                y: sign * flight.y_at(local),
                side: zone,
            });
            emitted += 1;
        }
        match switch {
            Some((tau, y_cross)) if emitted < n => {
                state = FlowState::new(0.0, sign * y_cross, state.t + tau);
            }
            _ => {
                // No further switching: the remaining samples came from this
                // zone's closed form above.
                if emitted >= n {
                    break;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn harmonic_half_turn() {
        let s = flow(0.0, 0.0, 1.0, FlowState::new(0.0, 1.0, 0.0), PI, &tol());
        assert!(s.x.abs() < 1e-12);
        assert!((s.y + 1.0).abs() < 1e-12);
        assert_eq!(s.t, PI);
    }

    #[test]
    fn zero_dt_is_identity() {
        let st = FlowState::new(-0.3, 0.7, 1.5);
        let s = flow(0.4, -0.2, 0.9, st, 0.0, &tol());
        assert_eq!((s.x, s.y, s.t), (st.x, st.y, st.t));
    }

    #[test]
    fn center_crossing_is_symmetric() {
        // (a, t, d) = (-1/2, 0, 1): circles around (-1/2, 0).
        for &y0 in &[0.5, 1.0, 2.0] {
            let y1 = oracle_half_map(-0.5, 0.0, 1.0, y0, CrossingDirection::ForwardFromLeft, &tol())
                .unwrap();
            assert!((y1 + y0).abs() < 1e-10, "y0={y0} gave y1={y1}");
        }
    }

    #[test]
    fn harmonic_crossing_time_is_pi() {
        let tau =
            first_crossing_time(0.0, 0.0, 1.0, 1.0, CrossingDirection::ForwardFromLeft, &tol())
                .unwrap();
        assert!((tau - PI).abs() < 1e-10);
    }

    #[test]
    fn real_focus_flight_exceeds_half_period() {
        let tau =
            first_crossing_time(-0.5, -0.1, 1.0, 1.0, CrossingDirection::ForwardFromLeft, &tol())
                .unwrap();
        assert!(tau > PI);
        assert!(tau.is_finite());
    }

    #[test]
    fn saddle_beyond_invariant_line_never_returns() {
        // Domain endpoint of the real-saddle fixture.
        let mu = 0.6 * (5f64.sqrt() - 1.0);
        let past =
            first_crossing_time(1.2, 1.0, -1.0, mu + 0.01, CrossingDirection::ForwardFromLeft, &tol());
        assert!(past.is_none());
        let inside =
            first_crossing_time(1.2, 1.0, -1.0, 0.9 * mu, CrossingDirection::ForwardFromLeft, &tol());
        assert!(inside.is_some());
    }

    #[test]
    fn backward_direction_reports_negative_time() {
        let tau =
            first_crossing_time(-0.5, 0.0, 1.0, 1.0, CrossingDirection::BackwardFromRight, &tol())
                .unwrap();
        assert!(tau < 0.0);
    }

    #[test]
    fn grazing_start_returns_none() {
        assert!(
            first_crossing_time(0.0, 0.3, 1.0, 0.0, CrossingDirection::ForwardFromLeft, &tol())
                .is_none()
        );
        assert!(
            first_crossing_time(1.0, 0.3, 1.0, 0.0, CrossingDirection::ForwardFromLeft, &tol())
                .is_none()
        );
    }

    #[test]
    fn tangency_with_real_excursion_returns() {
        // a < 0 with a rotating spectrum: the orbit leaves the origin
        // tangentially, loops, and comes back.
        let got = oracle_half_map(-0.5, 0.2, 1.0, 0.0, CrossingDirection::ForwardFromLeft, &tol());
        assert!(got.is_some());
        assert!(got.unwrap() < 0.0);
    }

    #[test]
    fn crossing_residual_and_interior_sign() {
        let (a, t, d, y0) = (-0.5, -0.1, 1.0, 1.3);
        let tau =
            first_crossing_time(a, t, d, y0, CrossingDirection::ForwardFromLeft, &tol()).unwrap();
        let s = flow(a, t, d, FlowState::new(0.0, y0, 0.0), tau, &tol());
        assert!(s.x.abs() < 1e-12, "crossing residual {}", s.x);
        for k in 1..=5 {
            let probe = flow(
                a,
                t,
                d,
                FlowState::new(0.0, y0, 0.0),
                tau * k as f64 / 6.0,
                &tol(),
            );
            assert!(probe.x < 0.0, "interior probe {k} has x = {}", probe.x);
        }
    }

    #[test]
    fn group_property() {
        let st = FlowState::new(-0.4, 0.9, 0.0);
        for &(a, t, d) in &[(0.5, 0.3, 1.2), (-0.7, -1.1, -0.4), (0.2, 2.0, 1.0)] {
            let one = flow(a, t, d, flow(a, t, d, st, 0.7, &tol()), 1.1, &tol());
            let two = flow(a, t, d, st, 1.8, &tol());
            assert!((one.x - two.x).abs() < 1e-10);
            assert!((one.y - two.y).abs() < 1e-10);
        }
    }

    /// Fixed-step RK4, used only to cross-check the closed forms.
    fn rk4(a: f64, t: f64, d: f64, s: FlowState, dt: f64, steps: usize) -> (f64, f64) {
        let f = |x: f64, y: f64| (t * x - y, d * x - a);
        let h = dt / steps as f64;
        let (mut x, mut y) = (s.x, s.y);
        for _ in 0..steps {
            let (k1x, k1y) = f(x, y);
            let (k2x, k2y) = f(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
            let (k3x, k3y) = f(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
            let (k4x, k4y) = f(x + h * k3x, y + h * k3y);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        }
        (x, y)
    }

    #[test]
    fn closed_form_matches_rk4() {
        let cases = [
            (0.5, 0.3, 1.2, 2.0),
            (-0.7, -1.1, -0.4, 1.5),
            (0.2, 0.0, 1.0, 3.0),
            (1.0, 0.8, 0.0, 2.5),      // zero eigenvalue
            (0.9, 0.0, 0.0, 2.0),      // double zero
            (0.3, 2.0, 1.0, 1.0),      // repeated
            (0.3, 2.0, 1.0 + 1e-14, 1.0),
            (-0.2, 1.3, 5e-13, 4.0),   // near-singular routes to the drift form
        ];
        let st = FlowState::new(-0.6, 0.8, 0.0);
        for &(a, t, d, dt) in &cases {
            let exact = flow(a, t, d, st, dt, &tol());
            let (x, y) = rk4(a, t, d, st, dt, 40_000);
            assert!(
                (exact.x - x).abs() < 1e-9 && (exact.y - y).abs() < 1e-9,
                "case (a={a}, t={t}, d={d}): exact ({}, {}) vs rk4 ({x}, {y})",
                exact.x,
                exact.y
            );
        }
    }

    #[test]
    fn trajectory_span_zero_repeats_point() {
        let p = CanonicalParams::new(1.0, -1.0, 1.0, -0.5, 4.0, 0.5);
        let start = FlowState::new(0.0, 1.0, 0.0);
        let rows = sample_trajectory(&p, start, 0.0, 4, &tol()).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!((r.x, r.y, r.t), (0.0, 1.0, 0.0));
        }
    }

    #[test]
    fn trajectory_switches_zones() {
        let p = CanonicalParams::new(1.0, -1.0, 1.0, -0.5, 4.0, 0.5);
        let rows = sample_trajectory(&p, FlowState::new(0.0, 1.0, 0.0), 3.0, 400, &tol()).unwrap();
        assert_eq!(rows.len(), 400);
        assert!(rows.iter().any(|r| r.side == Zone::L));
        assert!(rows.iter().any(|r| r.side == Zone::R));
        // Zone labels match the sign of x.
        for r in &rows {
            if r.x < -1e-12 {
                assert_eq!(r.side, Zone::L);
            }
            if r.x > 1e-12 {
                assert_eq!(r.side, Zone::R);
            }
        }
    }

    #[test]
    fn backward_trajectory_times_decrease() {
        let p = CanonicalParams::new(1.0, -1.0, 1.0, -0.5, 4.0, 0.5);
        let rows = sample_trajectory(&p, FlowState::new(0.0, 1.0, 0.0), -2.0, 50, &tol()).unwrap();
        assert_eq!(rows.len(), 50);
        assert!(rows.windows(2).all(|w| w[1].t < w[0].t));
        // Reversing a backward sample forward again must land near the start.
        let last = rows.last().unwrap();
        let fwd = sample_trajectory(
            &p,
            FlowState::new(last.x, last.y, last.t),
            2.0,
            50,
            &tol(),
        )
        .unwrap();
        let end = fwd.last().unwrap();
        assert!((end.x - 0.0).abs() < 1e-7 && (end.y - 1.0).abs() < 1e-7);
    }

    #[test]
    fn spectrum_classification_thresholds() {
        let t = tol();
        assert!(matches!(
            classify_spectrum(1.0, 1e-14, &t),
            SpectrumCase::SingularZeroEigen { .. }
        ));
        assert!(matches!(
            classify_spectrum(2.0, 1.0 + 1e-14, &t),
            SpectrumCase::RealRepeated { .. }
        ));
        assert!(matches!(
            classify_spectrum(0.0, 1.0, &t),
            SpectrumCase::ComplexPair { .. }
        ));
        assert!(matches!(
            classify_spectrum(3.0, 1.0, &t),
            SpectrumCase::RealDistinct { .. }
        ));
    }
}
