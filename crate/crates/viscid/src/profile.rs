//! The self-similar inverse-cubic preshock and its companion quantities.
//!
//! The shocking component of the inviscid solution is modeled by the
//! inverse cubic `u` defined implicitly by `x = a|t| u + b u^3`, together
//! with the gradient scale `m = a du/dx`, the anisotropic cubic distance
//! `d = m^{-1/2}`, and the Euclidean spacetime distance `e`.

use crate::error::{Result, ViscidError};

/// Coefficients of the inverse-cubic preshock plus the shocking diffusion
/// constant. Requires `a*b > 0` so the cubic has a unique real root for
/// `t <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicParams {
    pub a: f64,
    pub b: f64,
    pub b_diff: f64,
}

impl CubicParams {
    pub fn new(a: f64, b: f64, b_diff: f64) -> Result<Self> {
        if a == 0.0 || b == 0.0 || a * b <= 0.0 {
            return Err(ViscidError::Domain(format!(
                "cubic coefficients must be nonzero with a*b > 0, got a = {a}, b = {b}"
            )));
        }
        if b_diff <= 0.0 {
            return Err(ViscidError::Domain(format!(
                "shocking diffusion constant must be positive, got {b_diff}"
            )));
        }
        Ok(Self { a, b, b_diff })
    }

    /// Standard normalization `a = b = -1`, `b_diff = 1`, under which the
    /// shocking equation is the usual viscous Burgers equation.
    pub fn standard() -> Self {
        Self { a: -1.0, b: -1.0, b_diff: 1.0 }
    }
}

impl Default for CubicParams {
    fn default() -> Self {
        Self::standard()
    }
}

/// A point of spacetime with `t <= 0`; the preshock sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: f64,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }

    pub fn is_origin(&self) -> bool {
        self.t == 0.0 && self.x == 0.0
    }
}

/// Values of the profile and its companions at one point.
///
/// At the origin `m` is reported as `f64::INFINITY` and `d = 0`; consumers
/// must use `d.max(cutoff)` forms there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEval {
    pub u: f64,
    pub m: f64,
    pub d: f64,
    pub e: f64,
}

/// Relative residual tolerance of the cubic root.
pub const ROOT_TOL: f64 = 1e-13;

fn check_time(p: SpacetimePoint) -> Result<()> {
    if p.t > 0.0 {
        return Err(ViscidError::Domain(format!(
            "profile evaluations require t <= 0, got t = {}",
            p.t
        )));
    }
    Ok(())
}

/// Solves `x = a|t| u + b u^3` for the unique real root `u`.
///
/// A Cardano evaluation seeds a bracketed Newton iteration; the plain
/// closed form loses digits near the cusp `t = 0`.
pub fn cubic_root(p: SpacetimePoint, c: CubicParams) -> Result<f64> {
    check_time(p)?;
    if p.x == 0.0 {
        return Ok(0.0);
    }
    let ta = p.t.abs();
    // Depressed form u^3 + pc*u + q = 0 with pc >= 0 (one real root).
    let pc = c.a * ta / c.b;
    let q = -p.x / c.b;
    let disc = 0.25 * q * q + pc * pc * pc / 27.0;
    let sq = disc.sqrt();
    // Avoid cancellation: take the cube root with the large magnitude and
    // recover the partner from the product identity r1*r2 = -pc/3.
    let w = 0.5 * q.abs() + sq;
    let r = -q.signum() * w.cbrt();
    let mut u = if r == 0.0 { 0.0 } else { r - pc / (3.0 * r) };

    // Safeguarded Newton: |u| <= (|x|/|b|)^{1/3} since |x| >= |b||u|^3.
    let bound = (p.x.abs() / c.b.abs()).cbrt() * (1.0 + 1e-12) + 1e-300;
    let (mut lo, mut hi) = (-bound, bound);
    let f = |u: f64| c.a * ta * u + c.b * u * u * u - p.x;
    let fp = |u: f64| c.a * ta + 3.0 * c.b * u * u;
    if !u.is_finite() || u < lo || u > hi {
        u = 0.0;
    }
    let tol = ROOT_TOL * p.x.abs().max(1.0);
    let mut converged = false;
    for _ in 0..200 {
        let fu = f(u);
        if fu.abs() <= tol {
            converged = true;
            break;
        }
        // Shrink the bracket: f is monotone with the sign of a.
        if fu * c.a.signum() > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let du = fu / fp(u);
        let next = u - du;
        u = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * bound {
            converged = true;
            break;
        }
    }
    if !converged && f(u).abs() > tol {
        return Err(ViscidError::NonConvergence(format!(
            "cubic root at (t, x) = ({}, {}) with residual {}",
            p.t,
            p.x,
            f(u).abs()
        )));
    }
    Ok(u)
}

/// Evaluates `u`, `m`, `d`, and `e` at one point.
pub fn profile_eval(p: SpacetimePoint, c: CubicParams) -> Result<ProfileEval> {
    let u = cubic_root(p, c)?;
    let e = p.t.hypot(p.x);
    let denom = p.t.abs() + 3.0 * (c.b / c.a) * u * u;
    if denom == 0.0 {
        // Origin degeneracy: infinite gradient, zero cubic distance.
        return Ok(ProfileEval { u, m: f64::INFINITY, d: 0.0, e });
    }
    Ok(ProfileEval { u, m: 1.0 / denom, d: denom.sqrt(), e })
}

/// Closed-form gradient `(du/dx, du/dt) = (m/a, u m)`.
pub fn profile_gradient(p: SpacetimePoint, c: CubicParams) -> Result<(f64, f64)> {
    if p.is_origin() {
        return Err(ViscidError::SingularPoint);
    }
    let ev = profile_eval(p, c)?;
    Ok((ev.m / c.a, ev.u * ev.m))
}

/// Closed-form second space derivative `d^2 u / dx^2 = -6 b u m^3 / a^3`.
pub fn profile_uxx(p: SpacetimePoint, c: CubicParams) -> Result<f64> {
    if p.is_origin() {
        return Err(ViscidError::SingularPoint);
    }
    let ev = profile_eval(p, c)?;
    Ok(-6.0 * c.b / (c.a * c.a * c.a) * ev.u * ev.m * ev.m * ev.m)
}

/// Maximum relative defect of `f(lambda^2 t, lambda^3 x) = lambda^r f(t, x)`
/// over the sample points.
pub fn homogeneity_defect<F>(r: f64, lambda: f64, points: &[SpacetimePoint], f: F) -> Result<f64>
where
    F: Fn(SpacetimePoint) -> Result<f64>,
{
    if lambda <= 0.0 {
        return Err(ViscidError::Domain(format!(
            "homogeneity scaling factor must be positive, got {lambda}"
        )));
    }
    let mut worst: f64 = 0.0;
    for &p in points {
        check_time(p)?;
        let scaled = SpacetimePoint::new(lambda * lambda * p.t, lambda.powi(3) * p.x);
        let lhs = f(scaled)?;
        let rhs = lambda.powf(r) * f(p)?;
        let defect = (lhs - rhs).abs() / rhs.abs().max(1.0);
        worst = worst.max(defect);
    }
    Ok(worst)
}
