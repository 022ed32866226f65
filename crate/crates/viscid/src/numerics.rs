//! Small numerical kernels: an adaptive embedded Runge-Kutta integrator for
//! scalar ODEs and adaptive Simpson quadrature. Used for characteristic
//! tracing and along-characteristic quadratures.

use crate::error::{Result, ViscidError};

/// Integrates `dx/dt = f(t, x)` from `(t0, x0)` to `t1` with the Cash-Karp
/// embedded 4(5) pair and absolute error control `tol` per unit time.
pub fn integrate_ode<F>(f: F, t0: f64, x0: f64, t1: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if t0 == t1 {
        return Ok(x0);
    }
    let span = t1 - t0;
    let dir = span.signum();
    let mut t = t0;
    let mut x = x0;
    let mut h = span / 16.0;
    let h_min = span.abs() * 1e-14;
    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > 2_000_000 {
            return Err(ViscidError::NonConvergence(
                "adaptive ODE integrator exceeded step budget".into(),
            ));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k1 = f(t, x);
        let k2 = f(t + 0.2 * h, x + h * 0.2 * k1);
        let k3 = f(t + 0.3 * h, x + h * (0.075 * k1 + 0.225 * k2));
        let k4 = f(t + 0.6 * h, x + h * (0.3 * k1 - 0.9 * k2 + 1.2 * k3));
        let k5 = f(
            t + h,
            x + h * (-11.0 / 54.0 * k1 + 2.5 * k2 - 70.0 / 27.0 * k3 + 35.0 / 27.0 * k4),
        );
        let k6 = f(
            t + 0.875 * h,
            x + h
                * (1631.0 / 55296.0 * k1
                    + 175.0 / 512.0 * k2
                    + 575.0 / 13824.0 * k3
                    + 44275.0 / 110592.0 * k4
                    + 253.0 / 4096.0 * k5),
        );
        let x5 = x
            + h * (37.0 / 378.0 * k1
                + 250.0 / 621.0 * k3
                + 125.0 / 594.0 * k4
                + 512.0 / 1771.0 * k6);
        let x4 = x
            + h * (2825.0 / 27648.0 * k1
                + 18575.0 / 48384.0 * k3
                + 13525.0 / 55296.0 * k4
                + 277.0 / 14336.0 * k5
                + 0.25 * k6);
        let err = (x5 - x4).abs();
        let scale = tol * (h.abs() / span.abs()).max(1e-16);
        if err <= scale || h.abs() <= h_min {
            t += h;
            x = x5;
            if err > 0.0 {
                h *= 0.9 * (scale / err).powf(0.2).clamp(0.2, 5.0);
            } else {
                h *= 5.0;
            }
        } else {
            h *= 0.9 * (scale / err).powf(0.25).max(0.1);
        }
        if h.abs() < h_min {
            h = h_min * dir;
        }
    }
    Ok(x)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate_quad<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 {
            return Err(ViscidError::NonConvergence(
                "adaptive quadrature exceeded recursion depth".into(),
            ));
        }
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)?
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)?)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    recurse(&f, a, fa, b, fb, whole, m, fm, tol, 48)
}
