//! Exact and semi-analytic inviscid objects: the inviscid solution, the
//! eikonal function, the first outer corrector, and the zeroth-column grid
//! term, for the built-in systems with self-similar shocking data.

use crate::error::{Result, ViscidError};
use crate::model::SystemSpec;
use crate::numerics::integrate_ode;
use crate::parabolic::Grid1D;
use crate::profile::{cubic_root, profile_eval, CubicParams, SpacetimePoint};

/// Smooth nonshocking data profile prescribed at `t0` (two-component
/// system only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonshockData {
    Zero,
    Sin { amplitude: f64, wavenumber: f64, phase: f64 },
    Gaussian { amplitude: f64, center: f64, width: f64 },
}

impl NonshockData {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            NonshockData::Zero => 0.0,
            NonshockData::Sin { amplitude, wavenumber, phase } => {
                amplitude * (wavenumber * x + phase).sin()
            }
            NonshockData::Gaussian { amplitude, center, width } => {
                amplitude * (-0.5 * ((x - center) / width).powi(2)).exp()
            }
        }
    }
}

/// The inviscid solution on `[t0, 0]` with self-similar shocking data.
///
/// The shocking component equals the inverse cubic exactly for all times;
/// the nonshocking component (if any) is the `t0`-profile transported at
/// speed -1.
#[derive(Debug, Clone)]
pub struct InviscidSolution {
    pub system: SystemSpec,
    pub t0: f64,
    pub nonshock_data: NonshockData,
}

impl InviscidSolution {
    pub fn new(system: SystemSpec, t0: f64, nonshock_data: NonshockData) -> Result<Self> {
        if t0 >= 0.0 {
            return Err(ViscidError::Domain(format!(
                "inviscid window requires t0 < 0, got {t0}"
            )));
        }
        Ok(Self { system, t0, nonshock_data })
    }

    fn check_window(&self, t: f64) -> Result<()> {
        if t < self.t0 - 1e-12 || t > 0.0 {
            return Err(ViscidError::Domain(format!(
                "time {t} outside the inviscid window [{}, 0]",
                self.t0
            )));
        }
        Ok(())
    }

    /// Exact evaluation at one spacetime point (no grid error).
    pub fn eval(&self, p: SpacetimePoint) -> Result<Vec<f64>> {
        self.check_window(p.t)?;
        let mut psi = vec![0.0; self.system.n_components];
        psi[0] = cubic_root(p, self.system.cubic)?;
        if self.system.n_components == 2 {
            psi[1] = self.nonshock_data.eval(p.x + (p.t - self.t0));
        }
        Ok(psi)
    }

    /// Shocking characteristic speed lambda_(1)(psi^(0)) at one point.
    pub fn shocking_speed(&self, t: f64, x: f64) -> Result<f64> {
        cubic_root(SpacetimePoint::new(t, x), self.system.cubic)
    }

    /// Finite-difference residual of the inviscid system
    /// `d_t psi + A(psi) d_x psi` with centered 2-point stencils of step `h`.
    pub fn fd_residual(&self, p: SpacetimePoint, h: f64) -> Result<Vec<f64>> {
        if p.t + h > 0.0 {
            return Err(ViscidError::Domain(
                "residual stencil crosses t = 0".into(),
            ));
        }
        let n = self.system.n_components;
        let psi = self.eval(p)?;
        let tp = self.eval(SpacetimePoint::new(p.t + h, p.x))?;
        let tm = self.eval(SpacetimePoint::new(p.t - h, p.x))?;
        let xp = self.eval(SpacetimePoint::new(p.t, p.x + h))?;
        let xm = self.eval(SpacetimePoint::new(p.t, p.x - h))?;
        let mut a = vec![0.0; n * n];
        self.system.jacobian(&psi, &mut a);
        let mut res = vec![0.0; n];
        for i in 0..n {
            let dt = (tp[i] - tm[i]) / (2.0 * h);
            let mut adv = 0.0;
            for j in 0..n {
                adv += a[i * n + j] * (xp[j] - xm[j]) / (2.0 * h);
            }
            res[i] = dt + adv;
        }
        Ok(res)
    }
}

/// The eikonal function tabulated on a grid at a sequence of times.
#[derive(Debug, Clone)]
pub struct EikonalField {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub t0: f64,
    /// `values[k][i]` is u at `(times[k], x_i)`.
    pub values: Vec<Vec<f64>>,
}

/// Traces the shocking characteristic through `(t, x)` backward to `t0`
/// and returns the eikonal value `u = x_foot` (the constant `c` is zero
/// for the symmetric self-similar data).
pub fn eikonal_point(sol: &InviscidSolution, t: f64, x: f64) -> Result<f64> {
    sol.check_window(t)?;
    let cubic = sol.system.cubic;
    let speed = |s: f64, y: f64| {
        cubic_root(SpacetimePoint::new(s.min(0.0), y), cubic).unwrap_or(f64::NAN)
    };
    let foot = integrate_ode(speed, t, x, sol.t0, 1e-11)?;
    if !foot.is_finite() {
        return Err(ViscidError::NonConvergence(
            "characteristic tracer produced a non-finite foot point".into(),
        ));
    }
    Ok(foot)
}

/// Tabulates the eikonal function by backward characteristic tracing.
pub fn eikonal_compute(sol: &InviscidSolution, grid: &Grid1D, times: &[f64]) -> Result<EikonalField> {
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let mut row = Vec::with_capacity(grid.n_cells);
        for i in 0..grid.n_cells {
            row.push(eikonal_point(sol, t, grid.cell_center(i))?);
        }
        values.push(row);
    }
    Ok(EikonalField { grid: grid.clone(), times: times.to_vec(), t0: sol.t0, values })
}

/// First outer corrector psi^(1) for the scalar Burgers model, in closed
/// form: the transport equation `d_t p + d_x(u p) = b_diff d2u/dx2` with
/// zero data at `t0` integrates along characteristics to
/// `p = -6 b_diff (b/a^3) u m (m - m0)`.
pub fn outer_corrector_psi1(sol: &InviscidSolution, p: SpacetimePoint) -> Result<f64> {
    if sol.system.n_components != 1 {
        return Err(ViscidError::Unsupported(
            "psi^(1) is implemented for the scalar Burgers system only".into(),
        ));
    }
    sol.check_window(p.t)?;
    if p.is_origin() {
        return Err(ViscidError::SingularPoint);
    }
    let c = sol.system.cubic;
    let ev = profile_eval(p, c)?;
    let m0 = 1.0 / (sol.t0.abs() + 3.0 * (c.b / c.a) * ev.u * ev.u);
    Ok(-6.0 * c.b_diff * c.b / (c.a * c.a * c.a) * ev.u * ev.m * (ev.m - m0))
}

/// Zeroth-column grid term sigma_{1,0}: the same transport equation as
/// psi^(1) but with zero data at past infinity, whose solution is the
/// (-3)-homogeneous polynomial `-6 b_diff (b/a^3) u m^2`.
pub fn grid_sigma10(p: SpacetimePoint, c: CubicParams) -> Result<f64> {
    if p.is_origin() {
        return Err(ViscidError::SingularPoint);
    }
    let ev = profile_eval(p, c)?;
    Ok(-6.0 * c.b_diff * c.b / (c.a * c.a * c.a) * ev.u * ev.m * ev.m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_quad;
    use crate::profile::homogeneity_defect;

    fn burgers_sol() -> InviscidSolution {
        InviscidSolution::new(SystemSpec::burgers(), -1.0, NonshockData::Zero).unwrap()
    }

    fn pt(t: f64, x: f64) -> SpacetimePoint {
        SpacetimePoint::new(t, x)
    }

    #[test]
    fn inviscid_matches_cubic_root() {
        let sol = burgers_sol();
        let v = sol.eval(pt(-1.0, 0.7)).unwrap();
        assert_eq!(v[0], cubic_root(pt(-1.0, 0.7), sol.system.cubic).unwrap());
        let v = sol.eval(pt(-0.5, -1.5)).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-13);
        assert!(sol.eval(pt(-2.0, 0.0)).is_err(), "out-of-window time");
        assert!(sol.eval(pt(0.5, 0.0)).is_err());
    }

    #[test]
    fn inviscid_transport_component() {
        let sol = InviscidSolution::new(
            SystemSpec::burgers_transport(1.0),
            -1.0,
            NonshockData::Sin { amplitude: 1.0, wavenumber: 1.0, phase: 0.0 },
        )
        .unwrap();
        let v = sol.eval(pt(-0.25, 0.4)).unwrap();
        assert!((v[1] - (0.4f64 + 0.75).sin()).abs() < 1e-15);
        let v = sol.eval(pt(-1.0, 0.4)).unwrap();
        assert!((v[1] - 0.4f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn inviscid_pde_residual_small_away_from_preshock() {
        let sol = burgers_sol();
        let h = 1e-5;
        let mut checked = 0;
        for i in 0..10 {
            for j in 0..10 {
                let t = -0.95 + 0.09 * i as f64;
                let x = -0.95 + 0.21 * j as f64;
                let d = profile_eval(pt(t, x), sol.system.cubic).unwrap().d;
                if d < 0.2 {
                    continue;
                }
                let r = sol.fd_residual(pt(t, x), h).unwrap();
                assert!(r[0].abs() <= 1e-4, "residual {} at ({t},{x}), d = {d}", r[0]);
                checked += 1;
            }
        }
        assert!(checked >= 60);
    }

    #[test]
    fn eikonal_initial_condition_and_symmetry() {
        let sol = burgers_sol();
        for &x in &[-1.0, -0.3, 0.0, 0.8] {
            let u = eikonal_point(&sol, -1.0, x).unwrap();
            assert!((u - x).abs() < 1e-10, "u(t0, {x}) = {u}");
        }
        for &t in &[-0.8, -0.3, -0.05] {
            let u = eikonal_point(&sol, t, 0.0).unwrap();
            assert!(u.abs() < 1e-10, "u({t}, 0) = {u}");
        }
    }

    #[test]
    fn eikonal_matches_straight_characteristic_oracle() {
        // Burgers characteristics are straight lines carrying constant u,
        // so the foot is x - (t - t0) * cubic(t, x) exactly.
        let sol = burgers_sol();
        for &(t, x) in &[(-0.5, 0.4), (-0.2, -0.9), (-0.9, 1.0), (-0.05, 0.02)] {
            let traced = eikonal_point(&sol, t, x).unwrap();
            let exact = x - (t - sol.t0) * cubic_root(pt(t, x), sol.system.cubic).unwrap();
            assert!((traced - exact).abs() < 1e-8, "({t},{x}): {traced} vs {exact}");
        }
    }

    #[test]
    fn eikonal_constant_along_characteristic() {
        let sol = burgers_sol();
        let (t, x) = (-0.3, 0.5);
        let u = eikonal_point(&sol, t, x).unwrap();
        // Follow the characteristic forward a bit and re-evaluate.
        let speed = cubic_root(pt(t, x), sol.system.cubic).unwrap();
        let t2 = -0.15;
        let x2 = x + (t2 - t) * speed;
        let u2 = eikonal_point(&sol, t2, x2).unwrap();
        assert!((u - u2).abs() < 1e-8, "{u} vs {u2}");
    }

    #[test]
    fn eikonal_distance_ratio_bounded() {
        // Lemma check: (|t| + u^2) / d^2 in [1/4, 4] on [-1,-1e-3] x [-1,1].
        let sol = burgers_sol();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..=12 {
            for j in 0..=16 {
                let t = -1.0 + (1.0 - 1e-3) * i as f64 / 12.0;
                let x = -1.0 + 2.0 * j as f64 / 16.0;
                let u = eikonal_point(&sol, t, x).unwrap();
                let d2 = profile_eval(pt(t, x), sol.system.cubic).unwrap().d.powi(2);
                let ratio = (t.abs() + u * u) / d2;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        assert!(lo >= 0.25 && hi <= 4.0, "ratio range [{lo}, {hi}]");
    }

    #[test]
    fn psi1_trivial_values() {
        let sol = burgers_sol();
        assert_eq!(outer_corrector_psi1(&sol, pt(-0.4, 0.0)).unwrap(), 0.0);
        let v = outer_corrector_psi1(&sol, pt(-1.0, 0.6)).unwrap();
        assert!(v.abs() < 1e-13, "zero data at t0, got {v}");
        let v = outer_corrector_psi1(&sol, pt(-0.5, -1.5)).unwrap();
        assert!((v + 0.0612244897959).abs() < 1e-10, "psi1 = {v}");
        assert!(outer_corrector_psi1(&sol, pt(0.0, 0.0)).is_err());
    }

    #[test]
    fn psi1_matches_ode_oracle_along_characteristic() {
        // Independent route: integrate dp/ds = m(s) p - 6 u m(s)^3 from t0
        // with p(t0) = 0 and m(s) = 1/(|s| + 3u^2), u frozen on the
        // characteristic.
        let sol = burgers_sol();
        for &(t, x) in &[(-0.5, -1.5), (-0.25, 0.8), (-0.8, 0.3)] {
            let u = cubic_root(pt(t, x), sol.system.cubic).unwrap();
            let m = |s: f64| 1.0 / (s.abs() + 3.0 * u * u);
            let rhs = |s: f64, p: f64| m(s) * p - 6.0 * u * m(s).powi(3);
            let oracle = integrate_ode(rhs, sol.t0, 0.0, t, 1e-12).unwrap();
            let closed = outer_corrector_psi1(&sol, pt(t, x)).unwrap();
            assert!((closed - oracle).abs() < 1e-9, "({t},{x}): {closed} vs {oracle}");
        }
    }

    #[test]
    fn sigma10_values_and_quadrature_oracle() {
        let c = CubicParams::standard();
        assert_eq!(grid_sigma10(pt(-0.4, 0.0), c).unwrap(), 0.0);
        let v = grid_sigma10(pt(-0.5, -1.5), c).unwrap();
        assert!((v + 6.0 / 12.25).abs() < 1e-12, "sigma10 = {v}");
        assert!(grid_sigma10(pt(0.0, 0.0), c).is_err());

        // Quadrature from deep past: sigma/m = int_{-inf}^t -6 u m(s)^2 ds,
        // with the analytic tail int_{-inf}^{s0} m^2 ds = m(s0).
        let (t, x) = (-0.5, -1.5);
        let u = cubic_root(pt(t, x), c).unwrap();
        let m = |s: f64| 1.0 / (s.abs() + 3.0 * u * u);
        let s0 = -1.0e3;
        let integral = integrate_quad(|s| -6.0 * u * m(s) * m(s), s0, t, 1e-12).unwrap();
        let oracle = m(t) * (integral - 6.0 * u * m(s0));
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn sigma10_satisfies_pde_by_finite_differences() {
        // d_t s + d_x(u s) - d2u/dx2 = 0 with the standard constants.
        let c = CubicParams::standard();
        let h = 1e-5;
        for &(t, x) in &[(-0.5, -1.5), (-0.7, 0.4), (-0.3, 0.9), (-1.2, -0.6)] {
            let f = |t: f64, x: f64| {
                let u = cubic_root(pt(t, x), c).unwrap();
                u * grid_sigma10(pt(t, x), c).unwrap()
            };
            let dt = (grid_sigma10(pt(t + h, x), c).unwrap()
                - grid_sigma10(pt(t - h, x), c).unwrap())
                / (2.0 * h);
            let dflux = (f(t, x + h) - f(t, x - h)) / (2.0 * h);
            let uxx = crate::profile::profile_uxx(pt(t, x), c).unwrap();
            let res = dt + dflux - uxx;
            assert!(res.abs() <= 1e-4, "sigma10 residual {res} at ({t},{x})");
        }
    }

    #[test]
    fn sigma10_homogeneity() {
        let c = CubicParams::standard();
        let pts: Vec<_> = [(-1.0, 0.3), (-0.5, -0.8), (-0.2, 0.05)]
            .iter()
            .map(|&(t, x)| pt(t, x))
            .collect();
        let defect =
            homogeneity_defect(-3.0, 2.0, &pts, |p| grid_sigma10(p, c)).unwrap();
        assert!(defect <= 1e-10, "sigma10 homogeneity defect {defect}");
    }

    #[test]
    fn psi1_approaches_sigma10_toward_preshock() {
        // |psi1 - sigma10| / |sigma10| = m0/m shrinks like |t| along the
        // centerline; evaluate just off x = 0 to stay off the zero set.
        let sol = burgers_sol();
        let c = sol.system.cubic;
        let x = 1e-6;
        let mut prev = f64::INFINITY;
        let mut first = 0.0;
        let mut last = 0.0;
        for (i, &t) in [-0.5, -0.1, -0.02, -0.005].iter().enumerate() {
            let p1 = outer_corrector_psi1(&sol, pt(t, x)).unwrap();
            let s10 = grid_sigma10(pt(t, x), c).unwrap();
            let ratio = (p1 - s10).abs() / s10.abs();
            assert!(ratio < prev, "ratio must decrease toward t = 0, got {ratio} >= {prev}");
            prev = ratio;
            if i == 0 {
                first = ratio;
            }
            last = ratio;
        }
        assert!(first / last >= 3.0, "overall drop {first}/{last}");
    }
}
