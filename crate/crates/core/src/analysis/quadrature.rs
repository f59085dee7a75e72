//! Simpson quadrature, composite and adaptive.

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn composite_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 2 && panels % 2 == 0, "Simpson needs an even panel count");
    let h = (b - a) / panels as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..panels {
        let v = f(a + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

/// Composite Simpson plus an error estimate |S(n) − S(n/2)|.
///
/// The plain difference is used rather than the /15 Richardson factor: that
/// factor assumes h⁴ convergence, which integrands with endpoint log
/// singularities do not have.
pub fn simpson_with_error(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> (f64, f64) {
    assert!(panels >= 4 && panels % 4 == 0, "need a panel count divisible by 4");
    let fine = composite_simpson(&f, a, b, panels);
    let coarse = composite_simpson(&f, a, b, panels / 2);
    (fine, (fine - coarse).abs())
}

/// Adaptive Simpson with local tolerance splitting. Returns the value and the
/// accumulated error estimate.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> (f64, f64) {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return (left + right + delta / 15.0, delta.abs() / 15.0);
    }
    let (lv, le) = recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1);
    let (rv, re) = recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
    (lv + rv, le + re)
}
