//! One-dimensional search helpers.

/// Inverse golden ratio, `(√5 − 1) / 2`.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimum of a quasiconvex `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `x_tol` or after `max_evals`
/// evaluations. Returns `(x_min, f_min)`.
pub fn golden_section_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    x_tol: f64,
    max_evals: usize,
) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;

    while evals < max_evals && (b - a) > x_tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }

    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection for a sign change of a decreasing `f` on `[lo, hi]` with
/// `f(lo) > 0 ≥ f(hi)`. Returns the final bracket, or the first error `f`
/// reports.
pub fn bisect_decreasing<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
) -> Result<(f64, f64), E> {
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Whether a sampled sequence is consistent with a quasiconvex function:
/// nonincreasing, then nondecreasing. `rel_tol` absorbs rounding noise.
pub fn is_quasiconvex(values: &[f64], rel_tol: f64) -> bool {
    let mut rising = false;
    for w in values.windows(2) {
        let slack = rel_tol * w[0].abs().max(w[1].abs());
        if w[1] > w[0] + slack {
            rising = true;
        } else if rising && w[1] < w[0] - slack {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section_minimize(|x| (x - 1.3).powi(2) + 2.0, -4.0, 9.0, 1e-12, 500);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_handles_minimum_at_edge() {
        let (x, _) = golden_section_minimize(|x| x, 2.0, 5.0, 1e-10, 500);
        assert!((x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bisection_brackets_root() {
        let (lo, hi) = bisect_decreasing(|x| Ok::<_, ()>(2.0 - x * x), 0.0, 3.0, 1e-10).unwrap();
        assert!(hi - lo <= 1e-10);
        assert!(lo <= 2f64.sqrt() && 2f64.sqrt() <= hi);
    }

    #[test]
    fn bisection_propagates_errors() {
        let out = bisect_decreasing(|x| if x < 1.0 { Ok(1.0) } else { Err(x) }, 0.0, 4.0, 1e-6);
        assert_eq!(out, Err(2.0));
    }

    #[test]
    fn quasiconvexity_detection() {
        assert!(is_quasiconvex(&[5.0, 3.0, 3.0, 4.0, 9.0], 0.0));
        assert!(is_quasiconvex(&[1.0, 2.0, 3.0], 0.0));
        assert!(!is_quasiconvex(&[1.0, 2.0, 1.5], 0.0));
        assert!(is_quasiconvex(&[1.0, 2.0, 2.0 - 1e-15], 1e-12));
    }
}
