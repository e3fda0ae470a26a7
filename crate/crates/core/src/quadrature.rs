//! Adaptive Simpson quadrature, used as the numerical cross-check of the
//! closed-form energy integrals.

const MAX_DEPTH: u32 = 50;

/// `∫_a^b f` to absolute tolerance `abs_tol` (Richardson-corrected adaptive Simpson).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&f, a, b, fa, fm, fb, whole, abs_tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_logs() {
        let q = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((q - 4.0).abs() < 1e-12);
        let q = adaptive_simpson(|x| 1.0 / x, 1.0, 10.0, 1e-11);
        assert!((q - libm::log(10.0)).abs() < 1e-10);
        assert_eq!(adaptive_simpson(|x| x, 3.0, 3.0, 1e-9), 0.0);
    }
}
