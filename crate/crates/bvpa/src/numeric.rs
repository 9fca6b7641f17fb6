//! Small numeric utilities shared across the crate: adaptive quadrature,
//! order-statistic quantiles, and the canonical float-to-text form used in
//! all file output.

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// An interval is accepted when the two-panel refinement changes the
/// estimate by at most `15 * tol` (the usual Richardson criterion), and the
/// 1/15 correction is folded into the returned value. `max_depth` caps the
/// bisection depth so integrands with integrable kinks cannot recurse
/// without bound; 50-60 is ample for the smooth tails handled here.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson_panel(fa, fm, fb, a, b);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

fn simpson_panel(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_panel(fa, flm, fm, a, m);
    let right = simpson_panel(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Linear-interpolation quantile of already sorted values (the common
/// "type 7" definition): with `m` points the level-`p` quantile sits at rank
/// `h = (m - 1) * p` and interpolates between the surrounding order
/// statistics.
///
/// # Panics
/// Panics if `sorted` is empty or `p` is outside `[0, 1]`.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&p), "quantile level must lie in [0, 1]");
    let m = sorted.len();
    let h = (m - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < m {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[m - 1]
    }
}

/// Canonical float rendering for file output: scientific notation with 17
/// significant digits, enough to round-trip any `f64` exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_a_cubic_exactly() {
        // Simpson's rule is exact on cubics, so no refinement is needed.
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let got = adaptive_simpson(&f, 0.0, 2.0, 1e-12, 10);
        assert!((got - 2.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn simpson_handles_a_sharp_exponential() {
        let f = |x: f64| (-x).exp();
        let got = adaptive_simpson(&f, 0.0, 30.0, 1e-12, 60);
        let want = 1.0 - (-30.0f64).exp();
        assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
    }

    #[test]
    fn quantile_matches_hand_interpolation() {
        let v = [1.0, 2.0, 4.0, 8.0];
        // h = 3 * 0.5 = 1.5 -> halfway between the 2nd and 3rd order stats.
        assert_eq!(quantile_type7(&v, 0.5), 3.0);
        assert_eq!(quantile_type7(&v, 0.0), 1.0);
        assert_eq!(quantile_type7(&v, 1.0), 8.0);
        // Two points: the 2.5% quantile interpolates 2.5% of the way up.
        let two = [10.0, 20.0];
        assert!((quantile_type7(&two, 0.025) - 10.25).abs() < 1e-12);
        assert!((quantile_type7(&two, 0.975) - 19.75).abs() < 1e-12);
    }

    #[test]
    fn fmt_float_round_trips() {
        for &x in &[0.0, 1.0, -3.5, 0.1, 1.0 / 3.0, 2.5594e6, f64::MIN_POSITIVE] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s} did not round-trip");
        }
    }
}
