//! Bracketed scalar root finding: bisection with an optional Newton polish.

/// Outcome of a bracketed solve.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub f: f64,
}

/// Bisect `f` on `[lo, hi]`, which must bracket a sign change.
///
/// Stops when the bracket width falls below `width_tol * (1 + |mid|)` or after
/// `max_iter` halvings. Returns `None` if the endpoints do not bracket.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    width_tol: f64,
    max_iter: usize,
) -> Option<Root> {
    let mut flo = f(lo);
    if flo == 0.0 {
        return Some(Root { x: lo, f: 0.0 });
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Some(Root { x: hi, f: 0.0 });
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return Some(Root { x: mid, f: 0.0 });
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if hi - lo <= width_tol * (1.0 + mid.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    Some(Root { x, f: f(x) })
}

/// Refine a bracketed root with a few Newton steps, falling back to the
/// bisection iterate whenever a step leaves `[lo, hi]`.
pub fn newton_polish<F, G>(mut f: F, mut df: G, root: Root, lo: f64, hi: f64, steps: usize) -> Root
where
    F: FnMut(f64) -> f64,
    G: FnMut(f64) -> f64,
{
    let mut x = root.x;
    let mut fx = root.f;
    for _ in 0..steps {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = fx / d;
        let next = x - step;
        if !(lo..=hi).contains(&next) || !next.is_finite() {
            break;
        }
        let fnext = f(next);
        if fnext.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fnext;
        if fx == 0.0 {
            break;
        }
    }
    Root { x, f: fx }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_non_bracket() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn polish_reaches_machine_precision() {
        let r = bisect(|x| x.cos() - x, 0.0, 1.0, 1e-6, 60).unwrap();
        let p = newton_polish(|x| x.cos() - x, |x| -x.sin() - 1.0, r, 0.0, 1.0, 4);
        assert!(p.f.abs() < 1e-15);
    }
}
