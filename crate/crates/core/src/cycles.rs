//! Displacement function, limit cycle search, and stability classification.
//!
//! The displacement `delta(y0) = y_R(y0) - y_L(y0)` is defined on the
//! intersection of the two half-map domains; its simple zeros are crossing
//! limit cycles. At most one exists, it is hyperbolic, and its stability is
//! the sign of `xi = a_R T_L - a_L T_R`: attracting for `xi < 0`. The scan
//! here locates the zero, cross-checks the derivative sign against the
//! quadratic form `F(y0, y1) = c0 + c1 y0 y1 + c2 (y0 + y1)`, and verifies
//! the closed turn against the flow oracle.

use crate::canonical::{CanonicalParams, SewingVerdict};
use crate::flow_oracle;
use crate::halfmap::{HalfMapError, HalfMapSpec, Interval, Side};
use crate::solve::bisect;
use crate::tol::Tolerances;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The classification coefficients of a parameter set, with the geometry of
/// the hyperbola `F = 0` when it is non-degenerate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CycleInvariants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub xi: f64,
    pub c_inf: f64,
    /// Center of the hyperbola `F = 0` (when `c1 != 0`).
    pub gamma_center: Option<(f64, f64)>,
    /// Common asymptote coordinate `-c2 / c1`.
    pub gamma_asymptote: Option<f64>,
    /// Intersection of the hyperbola with the fourth-quadrant bisector.
    pub gamma_bisector_point: Option<f64>,
}

/// Stability of the unique limit cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Repelling,
}

/// A located limit cycle together with its oracle verification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LimitCycleReport {
    pub y0_star: f64,
    pub y1_star: f64,
    pub delta_prime: f64,
    pub stability: Stability,
    /// Flow time of one full turn.
    pub period: f64,
    /// Mismatch of the oracle's full-turn return at `y0_star`.
    pub oracle_residual: f64,
}

/// Monodromy and stability of the origin tangency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginClass {
    NotMonodromic,
    MonodromicAttracting,
    MonodromicRepelling,
    MonodromicUndetermined,
}

/// Monodromy and stability of infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfinityClass {
    NotMonodromic,
    Attracting,
    Repelling,
    Undetermined,
}

#[derive(Debug, Error)]
pub enum CycleError {
    #[error("two simple zeros of the displacement function survived refinement at y0 = {0} and {1}; this indicates a numerical failure")]
    UniquenessViolation(f64, f64),
    #[error("displacement zero at y0 = {0} is numerically degenerate (|F| below the simple-zero gate)")]
    Indeterminate(f64),
    #[error("xi = 0 at a displacement sign change near y0 = {0}; no stability verdict is possible")]
    XiZeroAtCycle(f64),
    #[error("derivative sign at the cycle disagrees with sign(xi)")]
    StabilityMismatch,
    #[error(transparent)]
    HalfMap(#[from] HalfMapError),
    #[error("oracle: {0}")]
    Oracle(#[from] flow_oracle::OracleError),
}

/// Classification coefficients and hyperbola geometry for `params`.
pub fn invariants(params: &CanonicalParams) -> CycleInvariants {
    let CanonicalParams {
        t_l,
        t_r,
        d_l,
        d_r,
        a_l,
        a_r,
    } = *params;
    let xi = a_r * t_l - a_l * t_r;
    let c0 = a_r * a_l * xi;
    let c1 = a_r * t_r * d_l - a_l * t_l * d_r;
    let c2 = a_l * a_l * d_r - a_r * a_r * d_l;
    let c_inf = t_l * (t_l * t_l * d_r - t_r * t_r * d_l);
    let gamma_center = (c1 != 0.0).then(|| (-c2 / c1, -c2 / c1));
    let gamma_asymptote = (c1 != 0.0).then(|| -c2 / c1);
    let gamma_bisector_point = (c1 != 0.0 && c0 * c1 >= 0.0).then(|| (c0 / c1).sqrt());
    CycleInvariants {
        c0,
        c1,
        c2,
        xi,
        c_inf,
        gamma_center,
        gamma_asymptote,
        gamma_bisector_point,
    }
}

/// Residuals of the two coefficient identities, normalized by term size.
///
/// Both vanish identically: `c0 D + c2 a T + c1 a^2 = 0` per zone, and
/// `a_L a_R T_L^2 c1 + a_L^2 a_R c_inf = T_L T_R D_L c0`.
pub fn identity_residuals(params: &CanonicalParams) -> (f64, f64, f64) {
    let inv = invariants(params);
    let p = params;
    let rel = |lhs: f64, scale: f64| lhs.abs() / scale.max(1.0);
    let left = inv.c0 * p.d_l + inv.c2 * p.a_l * p.t_l + inv.c1 * p.a_l * p.a_l;
    let left_scale = (inv.c0 * p.d_l).abs().max((inv.c2 * p.a_l * p.t_l).abs());
    let right = inv.c0 * p.d_r + inv.c2 * p.a_r * p.t_r + inv.c1 * p.a_r * p.a_r;
    let right_scale = (inv.c0 * p.d_r).abs().max((inv.c2 * p.a_r * p.t_r).abs());
    let lhs = p.a_l * p.a_r * p.t_l * p.t_l * inv.c1 + p.a_l * p.a_l * p.a_r * inv.c_inf;
    let rhs = p.t_l * p.t_r * p.d_l * inv.c0;
    let cross_scale = (p.a_l * p.a_r * p.t_l * p.t_l * inv.c1).abs().max(rhs.abs());
    (
        rel(left, left_scale),
        rel(right, right_scale),
        rel(lhs - rhs, cross_scale),
    )
}

/// `F(y0, y1) = c0 + c1 y0 y1 + c2 (y0 + y1)`; sign of the displacement
/// derivative at a zero.
pub fn f_form(inv: &CycleInvariants, y0: f64, y1: f64) -> f64 {
    inv.c0 + inv.c1 * y0 * y1 + inv.c2 * (y0 + y1)
}

/// Sign of `delta'` at a displacement zero `(y0, y1)`.
pub fn delta_prime_sign(params: &CanonicalParams, y0: f64, y1: f64) -> f64 {
    let f = f_form(&invariants(params), y0, y1);
    if f == 0.0 {
        0.0
    } else {
        f.signum()
    }
}

/// Sign of `delta''` at a doubly-degenerate zero, with the cross-check that
/// the two equivalent sign expressions agree.
pub fn delta_second_sign(
    params: &CanonicalParams,
    y0: f64,
    y1: f64,
    tol: &Tolerances,
) -> Result<f64, CycleError> {
    let inv = invariants(params);
    let lhs = params.t_l * (inv.c2 * y0 + inv.c0);
    let rhs = -params.t_r * (inv.c2 * y1 + inv.c0);
    let gate = tol.identity_rel
        * (params.t_l.abs() + params.t_r.abs())
        * (inv.c0.abs() + inv.c2.abs() * y0.abs().max(y1.abs())).max(1.0);
    let sign_of = |v: f64| if v.abs() <= gate { 0.0 } else { v.signum() };
    let (sl, sr) = (sign_of(lhs), sign_of(rhs));
    if sl != 0.0 && sr != 0.0 && sl != sr {
        return Err(CycleError::StabilityMismatch);
    }
    Ok(sl)
}

/// Necessary conditions for a limit cycle: nonzero offsets, opposite traces,
/// and independent `W` polynomials.
pub fn necessary_conditions(params: &CanonicalParams) -> (bool, bool, bool) {
    let inv = invariants(params);
    (
        params.a_l * params.a_l + params.a_r * params.a_r != 0.0,
        params.t_l * params.t_r < 0.0,
        inv.c0 * inv.c0 + (inv.c1 * inv.c2) * (inv.c1 * inv.c2) != 0.0,
    )
}

fn half_rotation_left(params: &CanonicalParams) -> bool {
    params.a_l > 0.0
        || (params.a_l == 0.0 && 4.0 * params.d_l - params.t_l * params.t_l > 0.0)
}

fn half_rotation_right(params: &CanonicalParams) -> bool {
    params.a_r < 0.0
        || (params.a_r == 0.0 && 4.0 * params.d_r - params.t_r * params.t_r > 0.0)
}

/// Monodromy and stability of the origin tangency.
pub fn classify_origin(params: &CanonicalParams) -> OriginClass {
    if !(half_rotation_left(params) && half_rotation_right(params)) {
        return OriginClass::NotMonodromic;
    }
    if params.a_l > 0.0 && params.a_r < 0.0 {
        let xi = invariants(params).xi;
        if xi > 0.0 {
            return OriginClass::MonodromicAttracting;
        }
        if xi < 0.0 {
            return OriginClass::MonodromicRepelling;
        }
    }
    OriginClass::MonodromicUndetermined
}

/// Monodromy and stability of infinity, by the sign of
/// `mu = T_L / sqrt(4D_L - T_L^2) + T_R / sqrt(4D_R - T_R^2)`.
pub fn classify_infinity(params: &CanonicalParams) -> InfinityClass {
    let dl = 4.0 * params.d_l - params.t_l * params.t_l;
    let dr = 4.0 * params.d_r - params.t_r * params.t_r;
    if !(dl > 0.0 && dr > 0.0) {
        return InfinityClass::NotMonodromic;
    }
    let mu = params.t_l / dl.sqrt() + params.t_r / dr.sqrt();
    if params.t_l * params.t_r < 0.0 && params.t_l != 0.0 && params.t_r != 0.0 {
        let c_inf = invariants(params).c_inf;
        debug_assert_eq!(
            mu.signum(),
            c_inf.signum(),
            "sign(mu) must match sign(c_inf) for opposite traces"
        );
    }
    if mu > 0.0 {
        InfinityClass::Attracting
    } else if mu < 0.0 {
        InfinityClass::Repelling
    } else {
        InfinityClass::Undetermined
    }
}

/// Census of monodromic singularities: the origin tangency plus the real
/// focus/center equilibria of each zone.
fn monodromic_singularity_count(params: &CanonicalParams) -> usize {
    let mut count = 0;
    if half_rotation_left(params) && half_rotation_right(params) {
        count += 1;
    }
    // Left equilibrium x = a_L / D_L is real when it sits in x < 0.
    if params.d_l != 0.0
        && params.a_l / params.d_l < 0.0
        && 4.0 * params.d_l - params.t_l * params.t_l > 0.0
    {
        count += 1;
    }
    if params.d_r != 0.0
        && params.a_r / params.d_r > 0.0
        && 4.0 * params.d_r - params.t_r * params.t_r > 0.0
    {
        count += 1;
    }
    count
}

/// Sufficient condition for a limit cycle: a unique monodromic singularity,
/// monodromic infinity, opposite traces, `c0 != 0`, and `xi * c_inf > 0`.
pub fn existence_sufficient(params: &CanonicalParams) -> bool {
    let inv = invariants(params);
    let dl = 4.0 * params.d_l - params.t_l * params.t_l;
    let dr = 4.0 * params.d_r - params.t_r * params.t_r;
    params.t_l * params.t_r < 0.0
        && inv.c0 != 0.0
        && dl > 0.0
        && dr > 0.0
        && crate::halfmap::exists(params.a_l, params.t_l, params.d_l, Side::LeftForward)
        && crate::halfmap::exists(params.a_r, params.t_r, params.d_r, Side::RightBackward)
        && monodromic_singularity_count(params) == 1
        && inv.xi * inv.c_inf > 0.0
}

/// Both half-map specs, or `None` for whichever side is undefined.
pub fn build_specs(
    params: &CanonicalParams,
    tol: &Tolerances,
) -> (
    Result<HalfMapSpec, HalfMapError>,
    Result<HalfMapSpec, HalfMapError>,
) {
    (
        HalfMapSpec::build(params.a_l, params.t_l, params.d_l, Side::LeftForward, *tol),
        HalfMapSpec::build(params.a_r, params.t_r, params.d_r, Side::RightBackward, *tol),
    )
}

/// `delta(y0) = y_R(y0) - y_L(y0)`.
pub fn displacement(
    left: &HalfMapSpec,
    right: &HalfMapSpec,
    y0: f64,
) -> Result<f64, HalfMapError> {
    Ok(right.eval(y0)?.y1 - left.eval(y0)?.y1)
}

/// Scan grid over `[lo, hi)`: geometric refinement toward both endpoints with
/// a uniform fill between, deterministic for a fixed seed count.
fn scan_grid(lo: f64, hi: f64, include_lo: bool, seeds: usize) -> Vec<f64> {
    let span = hi - lo;
    let mut grid = Vec::with_capacity(seeds + 2);
    if include_lo {
        grid.push(lo);
    }
    let n_geo = seeds / 3;
    // Geometric approach from the left endpoint.
    let s0 = 1e-9 * span.min(1.0).max(span * 1e-12);
    let ratio = (span / (2.0 * s0)).powf(1.0 / n_geo as f64);
    let mut s = s0;
    for _ in 0..n_geo {
        grid.push(lo + s);
        s *= ratio;
    }
    // Mirrored geometric approach to the right endpoint.
    let mut s = s0;
    for _ in 0..n_geo {
        grid.push(hi - s);
        s *= ratio;
    }
    // Uniform fill.
    let n_mid = seeds - 2 * n_geo;
    for k in 1..=n_mid {
        grid.push(lo + span * k as f64 / (n_mid + 1) as f64);
    }
    grid.retain(|y| *y >= lo && *y < hi);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    grid
}

/// Intersection of the two half-map domains.
pub fn common_interval(left: &HalfMapSpec, right: &HalfMapSpec) -> Option<Interval> {
    let lo = left.domain.lo.max(right.domain.lo);
    let hi = left.domain.hi.min(right.domain.hi);
    (lo < hi).then_some(Interval { lo, hi })
}

/// Outcome of the displacement scan.
pub enum CycleSearch {
    None,
    /// `delta` vanished (numerically) at every scanned point: a continuum of
    /// periodic orbits, not an isolated cycle.
    NonIsolated,
    Found(LimitCycleReport),
}

/// Locate and classify the unique limit cycle, if any.
pub fn find_limit_cycle(
    params: &CanonicalParams,
    tol: &Tolerances,
) -> Result<Option<LimitCycleReport>, CycleError> {
    match search_limit_cycle(params, tol)? {
        CycleSearch::Found(report) => Ok(Some(report)),
        _ => Ok(None),
    }
}

/// The full scan, distinguishing "no zero" from "identically zero".
pub fn search_limit_cycle(
    params: &CanonicalParams,
    tol: &Tolerances,
) -> Result<CycleSearch, CycleError> {
    // Opposite traces are necessary for an isolated cycle.
    if params.t_l * params.t_r >= 0.0 && params.t_l + params.t_r != 0.0 {
        return Ok(CycleSearch::None);
    }
    if params.t_l == 0.0 && params.t_r == 0.0 {
        // Both graphs sit on the bisector: either no common interval or a
        // continuum of periodic orbits.
        let (left, right) = build_specs(params, tol);
        let (Ok(left), Ok(right)) = (left, right) else {
            return Ok(CycleSearch::None);
        };
        return Ok(if common_interval(&left, &right).is_some() {
            CycleSearch::NonIsolated
        } else {
            CycleSearch::None
        });
    }
    let (left, right) = build_specs(params, tol);
    let (Ok(left), Ok(right)) = (left, right) else {
        return Ok(CycleSearch::None);
    };
    let Some(common) = common_interval(&left, &right) else {
        return Ok(CycleSearch::None);
    };

    let hi = if common.is_unbounded() {
        tol.scan_cap
    } else {
        common.lo + (common.hi - common.lo) * (1.0 - 1e-9)
    };
    // An orbit through the origin tangency is not a crossing cycle, so the
    // endpoint y0 = 0 never carries a genuine zero; include the left endpoint
    // only when it is strictly positive.
    let include_lo = common.lo > 0.0;
    let grid = scan_grid(common.lo, hi, include_lo, tol.scan_seeds);
    if grid.len() < 2 {
        return Ok(CycleSearch::None);
    }

    let delta_at = |y0: f64| -> Result<f64, CycleError> {
        Ok(right.eval(y0)?.y1 - left.eval(y0)?.y1)
    };
    let mut values = Vec::with_capacity(grid.len());
    for &y0 in &grid {
        values.push(delta_at(y0)?);
    }

    // Refine around interior minima of |delta| that do not already bracket a
    // sign change: a near-tangent pair of zeros would hide there.
    let mut points: Vec<(f64, f64)> = grid.into_iter().zip(values).collect();
    let mut extra: Vec<(f64, f64)> = Vec::new();
    let mut minima: Vec<usize> = (1..points.len() - 1)
        .filter(|&i| {
            points[i].1.abs() <= points[i - 1].1.abs() && points[i].1.abs() <= points[i + 1].1.abs()
        })
        .collect();
    minima.sort_by(|&i, &j| points[i].1.abs().partial_cmp(&points[j].1.abs()).unwrap());
    for &i in minima.iter().take(8) {
        let (lo_y, hi_y) = (points[i - 1].0, points[i + 1].0);
        for k in 1..16 {
            let y = lo_y + (hi_y - lo_y) * k as f64 / 16.0;
            extra.push((y, delta_at(y)?));
        }
    }
    points.extend(extra);
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    points.dedup_by(|a, b| a.0 == b.0);

    let scale = points
        .iter()
        .map(|(y, d)| d.abs() / (1.0 + y))
        .fold(0.0f64, f64::max);
    if scale <= tol.delta_zero {
        return Ok(CycleSearch::NonIsolated);
    }

    // Bisect every bracketed sign change.
    let mut zeros: Vec<f64> = Vec::new();
    for w in points.windows(2) {
        let ((y_a, d_a), (y_b, d_b)) = (w[0], w[1]);
        if d_a == 0.0 {
            zeros.push(y_a);
            continue;
        }
        if d_a.signum() * d_b.signum() < 0.0 {
            let root = bisect(
                |y| match delta_at(y) {
                    Ok(v) => v,
                    Err(_) => f64::NAN,
                },
                y_a,
                y_b,
                tol.root_width,
                200,
            )
            .ok_or(CycleError::UniquenessViolation(y_a, y_b))?;
            if root.f.is_nan() {
                return Err(CycleError::HalfMap(HalfMapError::Convergence(
                    "displacement evaluation failed during bisection".into(),
                )));
            }
            zeros.push(root.x);
        }
    }
    zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zeros.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));
    if zeros.is_empty() {
        return Ok(CycleSearch::None);
    }

    let inv = invariants(params);
    // Which zeros are simple per the F gate.
    let f_gate = tol.simple_zero * (1.0 + inv.c0.abs() + inv.c1.abs() + inv.c2.abs());
    let mut simple: Vec<(f64, f64, f64)> = Vec::new();
    for &y0 in &zeros {
        let y1 = 0.5 * (left.eval(y0)?.y1 + right.eval(y0)?.y1);
        let f = f_form(&inv, y0, y1);
        if f.abs() > f_gate {
            simple.push((y0, y1, f));
        } else {
            return Err(CycleError::Indeterminate(y0));
        }
    }
    if simple.len() >= 2 {
        return Err(CycleError::UniquenessViolation(simple[0].0, simple[1].0));
    }
    let (y0_star, y1_star, f_star) = simple[0];

    if inv.xi == 0.0 {
        return Err(CycleError::XiZeroAtCycle(y0_star));
    }
    let stability = if inv.xi < 0.0 {
        Stability::Attracting
    } else {
        Stability::Repelling
    };
    // Cross-check: sign(delta') = sign(F) = sign(xi) at the cycle.
    if f_star.signum() != inv.xi.signum() {
        return Err(CycleError::StabilityMismatch);
    }
    let (d1_l, _) = left.derivatives(y0_star, left.eval(y0_star)?.y1)?;
    let (d1_r, _) = right.derivatives(y0_star, right.eval(y0_star)?.y1)?;
    let delta_prime = d1_r - d1_l;
    if delta_prime.signum() != inv.xi.signum() {
        return Err(CycleError::StabilityMismatch);
    }

    let (oracle_residual, period) = flow_oracle::verify_cycle(params, y0_star, tol)?;
    Ok(CycleSearch::Found(LimitCycleReport {
        y0_star,
        y1_star,
        delta_prime,
        stability,
        period,
        oracle_residual,
    }))
}

/// Existence/domain summary of one half-map for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideReport {
    pub exists: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl SideReport {
    fn from_spec(spec: &Result<HalfMapSpec, HalfMapError>) -> Self {
        match spec {
            Ok(s) => SideReport {
                exists: true,
                q: Some(s.q),
                domain: Some(s.domain),
                image_lo: Some(s.image_lo),
                image_hi: Some(s.image_hi),
                reason: None,
            },
            Err(e) => SideReport {
                exists: false,
                q: None,
                domain: None,
                image_lo: None,
                image_hi: None,
                reason: Some(e.to_string()),
            },
        }
    }
}

/// The complete analysis of one parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sewing: SewingVerdict,
    pub params: CanonicalParams,
    pub half_map_left: SideReport,
    pub half_map_right: SideReport,
    pub invariants: CycleInvariants,
    /// `(a_L^2 + a_R^2 != 0, T_L T_R < 0, c0^2 + (c1 c2)^2 != 0)`.
    pub necessary_ok: (bool, bool, bool),
    pub sufficient_ok: bool,
    pub origin_class: OriginClass,
    pub infinity_class: InfinityClass,
    /// True when the displacement vanished identically on the scan.
    pub continuum_detected: bool,
    pub cycle: Option<LimitCycleReport>,
}

/// Run the full pipeline on canonical parameters.
pub fn analyze(
    params: &CanonicalParams,
    sewing: SewingVerdict,
    tol: &Tolerances,
) -> Result<AnalysisReport, CycleError> {
    let (left, right) = build_specs(params, tol);
    let search = search_limit_cycle(params, tol)?;
    let (continuum, cycle) = match search {
        CycleSearch::Found(r) => (false, Some(r)),
        CycleSearch::NonIsolated => (true, None),
        CycleSearch::None => (false, None),
    };
    Ok(AnalysisReport {
        sewing,
        params: *params,
        half_map_left: SideReport::from_spec(&left),
        half_map_right: SideReport::from_spec(&right),
        invariants: invariants(params),
        necessary_ok: necessary_conditions(params),
        sufficient_ok: existence_sufficient(params),
        origin_class: classify_origin(params),
        infinity_class: classify_infinity(params),
        continuum_detected: continuum,
        cycle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{SewingStatus, SewingVerdict};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Attracting-cycle fixture: opposite traces, both zones focus-type, the
    /// origin is the unique monodromic singularity, xi = -1/2, c_inf = -1/2.
    fn worked() -> CanonicalParams {
        CanonicalParams::new(1.0, -1.0, 1.0, -0.5, 4.0, 0.5)
    }

    #[test]
    fn invariant_fixture_values() {
        let inv = invariants(&CanonicalParams::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0));
        assert_eq!(inv.c0, 4.0);
        assert_eq!(inv.c1, 22.0);
        assert_eq!(inv.c2, -14.0);
        assert_eq!(inv.xi, 2.0);
        assert_eq!(inv.c_inf, -78.0);
        let res = identity_residuals(&CanonicalParams::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0));
        assert_eq!(res, (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_offsets_zero_coefficients() {
        let inv = invariants(&CanonicalParams::new(0.0, 0.0, 1.0, -2.0, 3.0, 4.0));
        assert_eq!((inv.c0, inv.c2), (0.0, 0.0));
        assert_eq!(inv.xi, 0.0);
    }

    #[test]
    fn xi_vanishes_on_matched_ratio() {
        // a_R T_L = a_L T_R with (a_L, a_R, T_L, T_R) = (-7/10, 1, 2/10, -2/7).
        let inv = invariants(&CanonicalParams::new(-0.7, 1.0, 0.2, -2.0 / 7.0, 1.0, -1.0));
        assert!(inv.xi.abs() < 1e-16);
    }

    #[test]
    fn f_form_determinant_identity() {
        // F equals minus the determinant of [[1, -(y0+y1), y0 y1], rows of W coefficients].
        let p = CanonicalParams::new(0.7, -1.3, 0.9, -0.4, 2.0, 1.5);
        let inv = invariants(&p);
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        for &(y0, y1) in &[(0.5, -0.3), (2.0, -1.7), (0.1, -4.0)] {
            let m = [
                [1.0, -(y0 + y1), y0 * y1],
                [p.d_l, -p.a_l * p.t_l, p.a_l * p.a_l],
                [p.d_r, -p.a_r * p.t_r, p.a_r * p.a_r],
            ];
            let f = f_form(&inv, y0, y1);
            assert!((f + det3(m)).abs() < 1e-12 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn displacement_vanishes_at_origin_for_split_offsets() {
        let (left, right) = build_specs(&worked(), &tol());
        let d = displacement(&left.unwrap(), &right.unwrap(), 0.0).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn displacement_quadratic_growth_near_origin() {
        // delta ~ (2 xi / (3 a_L a_R)) y0^2 = (1/3) y0^2 for the fixture.
        let (left, right) = build_specs(&worked(), &tol());
        let (left, right) = (left.unwrap(), right.unwrap());
        let v = |h: f64| displacement(&left, &right, h).unwrap() / (h * h);
        let (v1, v2) = (v(1e-3), v(5e-4));
        let extrapolated = 2.0 * v2 - v1;
        assert!(
            (extrapolated - 1.0 / 3.0).abs() < 1e-4,
            "leading coefficient {extrapolated}"
        );
    }

    #[test]
    fn bisector_continuum_is_not_a_cycle() {
        let p = CanonicalParams::new(-0.5, 0.5, 0.0, 0.0, 1.0, 1.0);
        match search_limit_cycle(&p, &tol()).unwrap() {
            CycleSearch::NonIsolated => {}
            _ => panic!("expected a continuum"),
        }
        assert!(find_limit_cycle(&p, &tol()).unwrap().is_none());
    }

    #[test]
    fn worked_cycle_found_attracting() {
        let report = find_limit_cycle(&worked(), &tol()).unwrap().unwrap();
        assert_eq!(report.stability, Stability::Attracting);
        assert!(report.y0_star > 0.0);
        assert!(report.y1_star < 0.0);
        assert!(report.delta_prime < 0.0);
        assert!(report.oracle_residual <= 1e-8);
        assert!(report.period > 0.0);
    }

    #[test]
    fn same_sign_traces_have_no_cycle() {
        let p = CanonicalParams::new(1.0, -1.0, 1.0, 0.5, 4.0, 0.5);
        assert!(find_limit_cycle(&p, &tol()).unwrap().is_none());
    }

    #[test]
    fn undefined_half_map_means_no_cycle() {
        // Virtual-saddle right zone: the backward map does not exist.
        let p = CanonicalParams::new(-0.7, 1.0, 0.2, -2.0 / 7.0, 1.0, -1.0);
        assert!(find_limit_cycle(&p, &tol()).unwrap().is_none());
    }

    #[test]
    fn necessary_condition_fixtures() {
        assert_eq!(
            necessary_conditions(&CanonicalParams::new(0.0, 0.0, 1.0, -1.0, 1.0, 1.0)).0,
            false
        );
        assert_eq!(
            necessary_conditions(&CanonicalParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)).1,
            false
        );
        assert_eq!(necessary_conditions(&worked()), (true, true, true));
    }

    #[test]
    fn origin_classification() {
        assert_eq!(classify_origin(&worked()), OriginClass::MonodromicRepelling);
        // Gate fails: a_L < 0 with a non-rotating left zone.
        let p = CanonicalParams::new(-1.0, -1.0, 3.0, -0.5, 1.0, 0.5);
        assert_eq!(classify_origin(&p), OriginClass::NotMonodromic);
        // xi = 0 gives no verdict.
        let p = CanonicalParams::new(1.0, -1.0, 0.5, 0.5, 4.0, 4.0);
        assert_eq!(classify_origin(&p), OriginClass::MonodromicUndetermined);
    }

    #[test]
    fn infinity_classification() {
        // Equal zones: attracting iff the common trace is positive.
        let p = CanonicalParams::new(0.3, 0.3, 0.8, 0.8, 1.0, 1.0);
        assert_eq!(classify_infinity(&p), InfinityClass::Attracting);
        assert_eq!(classify_infinity(&worked()), InfinityClass::Repelling);
        let p = CanonicalParams::new(1.0, -1.0, 1.0, -0.5, 4.0, -1.0);
        assert_eq!(classify_infinity(&p), InfinityClass::NotMonodromic);
    }

    #[test]
    fn sufficiency_census() {
        assert!(existence_sufficient(&worked()));
        // Same-sign traces fail.
        let p = CanonicalParams::new(1.0, -1.0, 1.0, 0.5, 4.0, 0.5);
        assert!(!existence_sufficient(&p));
        // xi = 0 fails.
        let p = CanonicalParams::new(1.0, 1.0, 1.0, 1.0, 4.0, 4.0);
        assert!(!existence_sufficient(&p));
    }

    #[test]
    fn near_origin_displacement_sign_is_minus_xi() {
        // Under the unique-monodromic-singularity hypotheses the displacement
        // leaves the left endpoint with the sign of -xi.
        let p = worked();
        let inv = invariants(&p);
        let (left, right) = build_specs(&p, &tol());
        let (left, right) = (left.unwrap(), right.unwrap());
        let d = displacement(&left, &right, 1e-3).unwrap();
        assert_eq!(d.signum(), -inv.xi.signum());
    }

    #[test]
    fn near_infinity_displacement_sign_is_c_inf() {
        let p = worked();
        let inv = invariants(&p);
        let (left, right) = build_specs(&p, &tol());
        let (left, right) = (left.unwrap(), right.unwrap());
        let d = displacement(&left, &right, 1e6).unwrap();
        assert_eq!(d.signum(), inv.c_inf.signum());
    }

    #[test]
    fn analysis_report_coherence() {
        let report = analyze(
            &worked(),
            SewingVerdict {
                status: SewingStatus::Sewing,
                detail: "canonical input".into(),
            },
            &tol(),
        )
        .unwrap();
        assert!(report.cycle.is_some());
        let n = report.necessary_ok;
        assert!(n.0 && n.1 && n.2);
        assert!(report.sufficient_ok);
        assert!(report.half_map_left.exists && report.half_map_right.exists);
        assert!((report.invariants.xi + 0.5).abs() < 1e-15);
    }

    #[test]
    fn second_derivative_sign_fixtures() {
        // c2 = 0, c0 > 0: the sign is sign(T_L).
        let p = CanonicalParams::new(1.0, -1.0, 1.0, -0.5, 1.0, 1.0);
        let inv = invariants(&p);
        assert_eq!(inv.c2, 0.0);
        assert!(inv.c0 > 0.0);
        let s = delta_second_sign(&p, 0.5, -0.5, &tol()).unwrap();
        assert_eq!(s, 1.0);
        // c2 y0 + c0 = 0 gives zero.
        let p2 = CanonicalParams::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        let inv2 = invariants(&p2);
        let y0 = -inv2.c0 / inv2.c2;
        let s = delta_second_sign(&p2, y0, y0 - 1.0, &tol()).unwrap();
        assert_eq!(s, 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            #[test]
            fn identities_hold_on_random_parameters(
                a_l in -3.0f64..3.0, a_r in -3.0f64..3.0,
                t_l in -2.0f64..2.0, t_r in -2.0f64..2.0,
                d_l in -3.0f64..3.0, d_r in -3.0f64..3.0,
            ) {
                let p = CanonicalParams::new(a_l, a_r, t_l, t_r, d_l, d_r);
                let (r_l, r_r, r_x) = identity_residuals(&p);
                prop_assert!(r_l <= 1e-12 && r_r <= 1e-12 && r_x <= 1e-12,
                    "residuals {r_l} {r_r} {r_x}");
            }

            #[test]
            fn mu_sign_matches_c_inf_for_opposite_traces(
                t_l in 0.05f64..1.2, t_r in -1.2f64..-0.05,
                d_l in 0.5f64..3.0, d_r in 0.5f64..3.0,
                a_l in -1.5f64..1.5, a_r in -1.5f64..1.5,
            ) {
                let p = CanonicalParams::new(a_l, a_r, t_l, t_r, d_l, d_r);
                prop_assume!(4.0 * d_l - t_l * t_l > 0.0 && 4.0 * d_r - t_r * t_r > 0.0);
                let mu = t_l / (4.0 * d_l - t_l * t_l).sqrt() + t_r / (4.0 * d_r - t_r * t_r).sqrt();
                let inv = invariants(&p);
                if mu != 0.0 && inv.c_inf != 0.0 {
                    prop_assert_eq!(mu.signum(), inv.c_inf.signum());
                }
            }
        }
    }
}
