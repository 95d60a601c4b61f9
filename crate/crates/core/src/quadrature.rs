//! Adaptive Simpson quadrature with Richardson correction.

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Intervals are halved until the two-panel Simpson estimate agrees with the
/// one-panel estimate to `15 * tol`; the accepted value carries the
/// Richardson term `(S2 - S1) / 15`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, fa, m, fm, b, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    // Below this the comparison is pure rounding noise.
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if diff.abs() <= 15.0 * tol.max(floor) || depth >= MAX_DEPTH || lm == a || rm == b {
        return left + right + diff / 15.0;
    }
    let half = 0.5 * tol;
    recurse(f, a, fa, lm, flm, m, fm, left, half, depth + 1)
        + recurse(f, m, fm, rm, frm, b, fb, right, half, depth + 1)
}

/// Composite Simpson rule with `panels` (rounded up to even) equal panels.
pub fn composite_simpson<F>(f: F, a: f64, b: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let n = panels.max(2) + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-12);
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
        let w = composite_simpson(|x| x * x, -1.0, 2.0, 10);
        assert!((w - 3.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_flat_integrand() {
        // Flat to all orders at 0.
        let f = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
        let adaptive = adaptive_simpson(f, 0.0, 1.0, 1e-13);
        let reference = composite_simpson(f, 0.0, 1.0, 200_000);
        assert!((adaptive - reference).abs() < 1e-12);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-10), 0.0);
        let v = adaptive_simpson(|x| x, 1.0, 0.0, 1e-12);
        assert!((v + 0.5).abs() < 1e-14);
    }
}
