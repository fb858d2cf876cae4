//! Bracketed scalar root refinement.

/// Outcome of [`refine_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// `|f(x)|` at the returned point.
    pub residual: f64,
    pub evaluations: usize,
    /// Whether `|f| ≤ tol` was reached (as opposed to a collapsed bracket).
    pub converged: bool,
}

/// Illinois-modified regula falsi on a sign-changing bracket, falling back to
/// bisection whenever the bracket fails to halve in two steps.
///
/// `f` may fail; the error is passed through. `fa` and `fb` are the known
/// values at the ends and must have opposite signs (or one may be zero).
pub fn refine_root<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Root, E> {
    debug_assert!(fa * fb <= 0.0, "bracket without sign change");
    let mut evaluations = 0;
    let best = |a: f64, fa: f64, b: f64, fb: f64| if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    if fa.abs() <= tol || fb.abs() <= tol {
        let (x, fx) = best(a, fa, b, fb);
        return Ok(Root { x, residual: fx.abs(), evaluations, converged: true });
    }
    // Which end was retained on the previous step: -1 for a, +1 for b.
    let mut side = 0i8;
    let mut width = (b - a).abs();
    let mut width_two_ago = f64::INFINITY;
    for _ in 0..max_iter {
        let bisect = (b - a).abs() > 0.5 * width_two_ago;
        let x = if bisect {
            0.5 * (a + b)
        } else {
            let x = (a * fb - b * fa) / (fb - fa);
            if x.is_finite() && x > a.min(b) && x < a.max(b) {
                x
            } else {
                0.5 * (a + b)
            }
        };
        let fx = f(x)?;
        evaluations += 1;
        if fx.abs() <= tol {
            return Ok(Root { x, residual: fx.abs(), evaluations, converged: true });
        }
        width_two_ago = width;
        width = (b - a).abs();
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        let scale = a.abs().max(b.abs()).max(1.0);
        if (b - a).abs() <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    // Values at the ends may have been scaled by the Illinois rule; report
    // the midpoint and let the caller re-evaluate if it needs the residual.
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    evaluations += 1;
    Ok(Root {
        x,
        residual: fx.abs(),
        evaluations,
        converged: fx.abs() <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(v: f64) -> Result<f64, Infallible> {
        Ok(v)
    }

    #[test]
    fn linear_crossing() {
        // E_A = θ − 1, E_B = 0.
        let r = refine_root(|t| ok(t - 1.0), 0.0, 3.0, -1.0, 2.0, 1e-10, 100).unwrap();
        assert!((r.x - 1.0).abs() <= 1e-10);
        assert!(r.converged);
    }

    #[test]
    fn nonlinear_roots() {
        let r = refine_root(|x| ok(x.cos() - x), 0.0, 1.0, 1.0, 1.0f64.cos() - 1.0, 1e-14, 100).unwrap();
        assert!((r.x - 0.739_085_133_215_160_6).abs() < 1e-13);
        // A badly scaled function where plain regula falsi stalls.
        let f = |x: f64| x.powi(9) - 1e-9;
        let r = refine_root(|x| ok(f(x)), 0.0, 2.0, f(0.0), f(2.0), 1e-16, 200).unwrap();
        assert!((r.x - 0.1).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Root, &str> = refine_root(|_| Err("boom"), 0.0, 1.0, -1.0, 1.0, 1e-10, 10);
        assert_eq!(r.unwrap_err(), "boom");
    }
}
