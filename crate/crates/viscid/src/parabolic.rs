//! Direct finite-difference solution of the viscous system on a uniform
//! grid, plus blow-up coordinates and the inner viscous-Burgers profile.
//!
//! The scheme is SSP-RK2 in time with centered conservative fluxes for
//! diffused components, a third-order upwind-biased flux for undiffused
//! components, and diffusion in conservation form. Boundaries are exact
//! Dirichlet, filled from a caller-supplied provider at each stage time.

use crate::error::{Result, ViscidError};
use crate::model::{SystemKind, SystemSpec};
use crate::profile::{cubic_root, CubicParams, SpacetimePoint};

/// Uniform cell-centered grid: `x_i = x_min + (i + 1/2) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub dx: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, dx: f64, n_cells: usize) -> Result<Self> {
        if !(dx > 0.0) || n_cells < 4 {
            return Err(ViscidError::InvalidConfig(format!(
                "grid requires dx > 0 and n_cells >= 4, got dx = {dx}, n_cells = {n_cells}"
            )));
        }
        Ok(Self { x_min, dx, n_cells })
    }

    /// Symmetric grid covering `[-half_width, half_width]` with `n_cells` cells.
    pub fn symmetric(half_width: f64, n_cells: usize) -> Result<Self> {
        Self::new(-half_width, 2.0 * half_width / n_cells as f64, n_cells)
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.n_cells as f64 * self.dx
    }
}

/// Configuration of one viscous run.
#[derive(Debug, Clone)]
pub struct ViscousRunConfig {
    pub system: SystemSpec,
    pub nu: f64,
    pub t0: f64,
    pub t_end: f64,
    pub grid: Grid1D,
    pub cfl_adv: f64,
    pub cfl_diff: f64,
    pub store_times: Vec<f64>,
    /// Enforce `dx <= 0.1 nu` (needed when the error of an undiffused
    /// component is measured, so numerical diffusion stays below 0.1 nu).
    pub strict_undiffused_resolution: bool,
    /// Test hook: drop the advective flux entirely (pure diffusion).
    pub disable_advection: bool,
}

impl ViscousRunConfig {
    pub fn new(system: SystemSpec, nu: f64, t0: f64, t_end: f64, grid: Grid1D) -> Self {
        Self {
            system,
            nu,
            t0,
            t_end,
            grid,
            cfl_adv: 0.4,
            cfl_diff: 0.4,
            store_times: Vec::new(),
            strict_undiffused_resolution: false,
            disable_advection: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(ViscidError::InvalidConfig(format!(
                "viscosity must be positive, got {}; the inviscid ground truth \
                 comes from the hyperbolic module",
                self.nu
            )));
        }
        if !(self.t0 < self.t_end && self.t_end <= 0.0) {
            return Err(ViscidError::InvalidConfig(format!(
                "time window requires t0 < t_end <= 0, got [{}, {}]",
                self.t0, self.t_end
            )));
        }
        let dx_cap = 0.25 * self.nu.powf(0.75);
        if self.grid.dx > dx_cap * (1.0 + 1e-12) {
            return Err(ViscidError::InvalidConfig(format!(
                "dx = {} does not resolve the diffusive layer: need dx <= 0.25 nu^(3/4) = {dx_cap}",
                self.grid.dx
            )));
        }
        if self.strict_undiffused_resolution && self.grid.dx > 0.1 * self.nu * (1.0 + 1e-12) {
            return Err(ViscidError::InvalidConfig(format!(
                "dx = {} too coarse for undiffused-component error measurement: need dx <= 0.1 nu = {}",
                self.grid.dx,
                0.1 * self.nu
            )));
        }
        for cfl in [self.cfl_adv, self.cfl_diff] {
            if !(cfl > 0.0 && cfl <= 1.0) {
                return Err(ViscidError::InvalidConfig(format!(
                    "CFL numbers must lie in (0, 1], got {cfl}"
                )));
            }
        }
        for &t in &self.store_times {
            if t < self.t0 - 1e-12 || t > self.t_end + 1e-12 {
                return Err(ViscidError::InvalidConfig(format!(
                    "store time {t} outside [{}, {}]",
                    self.t0, self.t_end
                )));
            }
        }
        Ok(())
    }
}

/// Mass bookkeeping for the conservation audit: the discrete integral of
/// each component changes only by the accumulated boundary fluxes.
#[derive(Debug, Clone)]
pub struct ConservationLedger {
    pub initial_mass: Vec<f64>,
    pub final_mass: Vec<f64>,
    /// Time-integrated net boundary inflow per component.
    pub boundary_flux: Vec<f64>,
}

impl ConservationLedger {
    /// Relative closure defect of the mass budget.
    pub fn closure_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.initial_mass.len() {
            let lhs = self.final_mass[c] - self.initial_mass[c];
            let defect = (lhs - self.boundary_flux[c]).abs()
                / self.initial_mass[c].abs().max(self.boundary_flux[c].abs()).max(1.0);
            worst = worst.max(defect);
        }
        worst
    }
}

/// Solution snapshots on a uniform grid at a sequence of times.
#[derive(Debug, Clone)]
pub struct FieldSlab {
    pub grid: Grid1D,
    pub n_components: usize,
    /// Actual snapshot times (snapped to completed steps).
    pub times: Vec<f64>,
    pub requested_times: Vec<f64>,
    /// Per time, component-major: `data[k][c * n_cells + i]`.
    pub data: Vec<Vec<f64>>,
    pub ledger: ConservationLedger,
    /// Largest time step taken (bounds the snapping offset).
    pub max_step: f64,
}

impl FieldSlab {
    pub fn value(&self, time_idx: usize, component: usize, cell: usize) -> f64 {
        self.data[time_idx][component * self.grid.n_cells + cell]
    }

    pub fn component(&self, time_idx: usize, component: usize) -> &[f64] {
        let n = self.grid.n_cells;
        &self.data[time_idx][component * n..(component + 1) * n]
    }

    /// Linear interpolation in x at a stored time.
    pub fn interp_x(&self, time_idx: usize, component: usize, x: f64) -> Result<f64> {
        let g = &self.grid;
        let first = g.cell_center(0);
        let last = g.cell_center(g.n_cells - 1);
        if x < first - 1e-12 || x > last + 1e-12 {
            return Err(ViscidError::Coverage(format!(
                "x = {x} outside the stored grid [{first}, {last}]"
            )));
        }
        let s = ((x - first) / g.dx).clamp(0.0, (g.n_cells - 1) as f64);
        let i = (s.floor() as usize).min(g.n_cells - 2);
        let w = s - i as f64;
        let row = self.component(time_idx, component);
        Ok((1.0 - w) * row[i] + w * row[i + 1])
    }

    /// Index of the stored time nearest `t`, if within `tol`.
    pub fn time_index_near(&self, t: f64, tol: f64) -> Option<usize> {
        let mut best = None;
        let mut best_gap = f64::INFINITY;
        for (k, &tk) in self.times.iter().enumerate() {
            let gap = (tk - t).abs();
            if gap < best_gap {
                best_gap = gap;
                best = Some(k);
            }
        }
        best.filter(|_| best_gap <= tol)
    }
}

struct Scheme<'a> {
    system: &'a SystemSpec,
    n: usize,
    ncomp: usize,
    dx: f64,
    nu: f64,
    disable_advection: bool,
    diffused: Vec<bool>,
    frozen_speed: Vec<f64>,
    /// Diffusion matrix at the origin; both built-ins have constant B, so
    /// this equals B everywhere.
    bmat: Vec<f64>,
}

impl<'a> Scheme<'a> {
    fn new(system: &'a SystemSpec, grid: &Grid1D, nu: f64, disable_advection: bool) -> Self {
        let ncomp = system.n_components;
        let diffused = (0..ncomp).map(|c| system.is_diffused(c)).collect();
        let frozen_speed = (0..ncomp).map(|c| system.frozen_speed(c)).collect();
        let mut bmat = vec![0.0; ncomp * ncomp];
        system.diffusion(&vec![0.0; ncomp], &mut bmat);
        Self {
            system,
            n: grid.n_cells,
            ncomp,
            dx: grid.dx,
            nu,
            disable_advection,
            diffused,
            frozen_speed,
            bmat,
        }
    }

    /// Cell fluxes f(psi) over the ghosted state.
    fn cell_fluxes(&self, state: &[Vec<f64>], out: &mut [Vec<f64>]) {
        match self.system.kind {
            SystemKind::Burgers => {
                for (o, v) in out[0].iter_mut().zip(&state[0]) {
                    *o = 0.5 * v * v;
                }
            }
            SystemKind::BurgersTransport { .. } => {
                for (o, v) in out[0].iter_mut().zip(&state[0]) {
                    *o = 0.5 * v * v;
                }
                for (o, w) in out[1].iter_mut().zip(&state[1]) {
                    *o = -w;
                }
            }
        }
    }

    /// Semi-discrete right-hand side over interior cells. `state` carries
    /// two ghost cells per side (already filled). Returns the net boundary
    /// inflow rate per component for the conservation ledger.
    fn rhs(
        &self,
        state: &[Vec<f64>],
        flux_scratch: &mut [Vec<f64>],
        out: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let n = self.n;
        let dx = self.dx;
        let inv_dx = 1.0 / dx;
        if !self.disable_advection {
            self.cell_fluxes(state, flux_scratch);
        }
        let mut boundary_rate = vec![0.0; self.ncomp];
        for c in 0..self.ncomp {
            let s = &state[c];
            let f = &flux_scratch[c];
            let o = &mut out[c];
            // Advective face fluxes: face j sits between ghosted indices
            // j+1 and j+2 for j = 0..=n.
            let mut face_prev = 0.0;
            for j in 0..=n {
                let l = j + 1;
                let adv = if self.disable_advection {
                    0.0
                } else if self.diffused[c] {
                    0.5 * (f[l] + f[l + 1])
                } else {
                    // Third-order upwind-biased interpolation for the
                    // frozen-speed transport of undiffused components.
                    let speed = self.frozen_speed[c];
                    let w_face = if speed >= 0.0 {
                        (-s[l - 1] + 5.0 * s[l] + 2.0 * s[l + 1]) / 6.0
                    } else {
                        (2.0 * s[l] + 5.0 * s[l + 1] - s[l + 2]) / 6.0
                    };
                    speed * w_face
                };
                // Diffusive face flux: sum_k B[c][k] (psi_k' at the face).
                let mut diff = 0.0;
                for k in 0..self.ncomp {
                    let b = self.bmat[c * self.ncomp + k];
                    if b != 0.0 {
                        diff += b * (state[k][l + 1] - state[k][l]) * inv_dx;
                    }
                }
                let total = adv - self.nu * diff;
                if j == 0 {
                    boundary_rate[c] += total;
                } else {
                    o[j - 1] = (face_prev - total) * inv_dx;
                }
                if j == n {
                    boundary_rate[c] -= total;
                }
                face_prev = total;
            }
        }
        boundary_rate
    }

    fn max_wave_speed(&self, state: &[Vec<f64>]) -> f64 {
        match self.system.kind {
            SystemKind::Burgers => state[0].iter().fold(0.0f64, |m, v| m.max(v.abs())),
            SystemKind::BurgersTransport { .. } => {
                state[0].iter().fold(1.0f64, |m, v| m.max(v.abs()))
            }
        }
    }
}

fn check_finite(state: &[Vec<f64>], t: f64) -> Result<()> {
    for (c, comp) in state.iter().enumerate() {
        if comp.iter().any(|v| !v.is_finite()) {
            return Err(ViscidError::Unstable(format!(
                "non-finite value in component {c} at t = {t}"
            )));
        }
    }
    Ok(())
}

/// Advances the viscous system from `t0` to `t_end` with SSP-RK2.
///
/// `init` supplies the state at a cell center at `t0`; `boundary` supplies
/// exact Dirichlet ghost values at `(t, x)` for each stage time. Returns
/// snapshots at the requested times, snapped to the nearest completed step
/// (the final step is clipped to land exactly on `t_end`).
pub fn run_viscous(
    cfg: &ViscousRunConfig,
    init: &dyn Fn(f64) -> Vec<f64>,
    boundary: &dyn Fn(f64, f64) -> Vec<f64>,
) -> Result<FieldSlab> {
    cfg.validate()?;
    let n = cfg.grid.n_cells;
    let ncomp = cfg.system.n_components;
    let scheme = Scheme::new(&cfg.system, &cfg.grid, cfg.nu, cfg.disable_advection);

    // State with two ghost cells per side; interior occupies 2..n+2.
    let mut state: Vec<Vec<f64>> = vec![vec![0.0; n + 4]; ncomp];
    for i in 0..n {
        let v = init(cfg.grid.cell_center(i));
        assert_eq!(v.len(), ncomp, "initial data dimension");
        for c in 0..ncomp {
            state[c][i + 2] = v[c];
        }
    }
    check_finite(&state, cfg.t0)?;

    let ghost_x: Vec<f64> = vec![
        cfg.grid.x_min - 1.5 * cfg.grid.dx,
        cfg.grid.x_min - 0.5 * cfg.grid.dx,
        cfg.grid.x_max() + 0.5 * cfg.grid.dx,
        cfg.grid.x_max() + 1.5 * cfg.grid.dx,
    ];
    let fill_ghosts = |state: &mut [Vec<f64>], t: f64| {
        for (slot, &gx) in [0usize, 1, n + 2, n + 3].iter().zip(&ghost_x) {
            let v = boundary(t, gx);
            for c in 0..ncomp {
                state[c][*slot] = v[c];
            }
        }
    };

    let dx = cfg.grid.dx;
    let diff_limit = cfg.cfl_diff * dx * dx / (2.0 * cfg.nu * cfg.system.max_diffusion());
    let mass = |state: &[Vec<f64>]| -> Vec<f64> {
        (0..ncomp).map(|c| state[c][2..n + 2].iter().sum::<f64>() * dx).collect()
    };

    let mut store = cfg.store_times.clone();
    store.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let time_eps = 1e-12 * cfg.t0.abs().max(1.0);

    let mut slab = FieldSlab {
        grid: cfg.grid.clone(),
        n_components: ncomp,
        times: Vec::new(),
        requested_times: store.clone(),
        data: Vec::new(),
        ledger: ConservationLedger {
            initial_mass: mass(&state),
            final_mass: Vec::new(),
            boundary_flux: vec![0.0; ncomp],
        },
        max_step: 0.0,
    };
    let snapshot = |slab: &mut FieldSlab, state: &[Vec<f64>], t: f64| {
        let mut row = vec![0.0; ncomp * n];
        for c in 0..ncomp {
            row[c * n..(c + 1) * n].copy_from_slice(&state[c][2..n + 2]);
        }
        slab.times.push(t);
        slab.data.push(row);
    };

    let mut k = 0usize;
    while k < store.len() && store[k] <= cfg.t0 + time_eps {
        snapshot(&mut slab, &state, cfg.t0);
        k += 1;
    }

    let mut t = cfg.t0;
    let mut stage = vec![vec![0.0; n + 4]; ncomp];
    let mut l0 = vec![vec![0.0; n]; ncomp];
    let mut l1 = vec![vec![0.0; n]; ncomp];
    let mut flux_scratch = vec![vec![0.0; n + 4]; ncomp];
    let mut steps = 0usize;

    while t < cfg.t_end - time_eps {
        steps += 1;
        if steps > 50_000_000 {
            return Err(ViscidError::Unstable("step budget exceeded".into()));
        }
        fill_ghosts(&mut state, t);
        let lambda = if cfg.disable_advection { 0.0 } else { scheme.max_wave_speed(&state) };
        let mut dt = if lambda > 0.0 {
            (cfg.cfl_adv * dx / lambda).min(diff_limit)
        } else {
            diff_limit
        };
        // Clip onto t_end (also when the remaining gap is below the loop
        // tolerance, so the final time is exact).
        if t + dt >= cfg.t_end - time_eps {
            dt = cfg.t_end - t;
        }
        let t_next = t + dt;

        // Snapshots snapped to the nearest completed step.
        let mut after = 0usize;
        while k < store.len() && store[k] <= t_next + time_eps {
            if store[k] - t <= t_next - store[k] {
                snapshot(&mut slab, &state, t);
            } else {
                after += 1;
            }
            k += 1;
        }

        // Stage 1.
        let rate0 = scheme.rhs(&state, &mut flux_scratch, &mut l0);
        for c in 0..ncomp {
            for i in 0..n {
                stage[c][i + 2] = state[c][i + 2] + dt * l0[c][i];
            }
        }
        fill_ghosts(&mut stage, t_next);
        // Stage 2 (Heun average).
        let rate1 = scheme.rhs(&stage, &mut flux_scratch, &mut l1);
        for c in 0..ncomp {
            for i in 0..n {
                state[c][i + 2] += 0.5 * dt * (l0[c][i] + l1[c][i]);
            }
            slab.ledger.boundary_flux[c] += 0.5 * dt * (rate0[c] + rate1[c]);
        }
        t = t_next;
        slab.max_step = slab.max_step.max(dt);

        if steps % 256 == 0 {
            check_finite(&state, t)?;
        }
        for _ in 0..after {
            snapshot(&mut slab, &state, t);
        }
    }
    while k < store.len() {
        snapshot(&mut slab, &state, t);
        k += 1;
    }
    check_finite(&state, t)?;
    slab.ledger.final_mass = mass(&state);
    Ok(slab)
}

/// Convenience wrapper: initial and boundary data from the inviscid
/// solution (same data for every viscosity).
pub fn run_viscous_from_inviscid(
    cfg: &ViscousRunConfig,
    sol: &crate::hyperbolic::InviscidSolution,
) -> Result<FieldSlab> {
    if sol.system != cfg.system || sol.t0 != cfg.t0 {
        return Err(ViscidError::InvalidConfig(
            "inviscid data must use the same system and t0 as the viscous run".into(),
        ));
    }
    let init = |x: f64| sol.eval(SpacetimePoint::new(cfg.t0, x)).expect("initial data");
    let boundary = |t: f64, x: f64| {
        sol.eval(SpacetimePoint::new(t.min(0.0), x)).expect("boundary data")
    };
    run_viscous(cfg, &init, &boundary)
}

/// Blow-up coordinates `(T, X, Psi) = (nu^{-1/2} t, nu^{-3/4} x, nu^{-1/4} psi)`.
pub fn blowup(t: f64, x: f64, psi: &[f64], nu: f64) -> Result<(f64, f64, Vec<f64>)> {
    if !(nu > 0.0) {
        return Err(ViscidError::Domain(format!("blow-up requires nu > 0, got {nu}")));
    }
    let s = nu.powf(-0.25);
    Ok((
        t * nu.powf(-0.5),
        x * nu.powf(-0.75),
        psi.iter().map(|v| v * s).collect(),
    ))
}

/// Exact inverse of [`blowup`].
pub fn blowdown(t_inner: f64, x_inner: f64, psi_inner: &[f64], nu: f64) -> Result<(f64, f64, Vec<f64>)> {
    if !(nu > 0.0) {
        return Err(ViscidError::Domain(format!("blow-down requires nu > 0, got {nu}")));
    }
    let s = nu.powf(0.25);
    Ok((
        t_inner * nu.powf(0.5),
        x_inner * nu.powf(0.75),
        psi_inner.iter().map(|v| v * s).collect(),
    ))
}

/// The inner viscous-Burgers profile, stored on an inner-coordinate box.
#[derive(Debug, Clone)]
pub struct InnerProfile {
    pub slab: FieldSlab,
    pub cubic: CubicParams,
}

impl InnerProfile {
    /// Tolerance for matching a requested inner time to a stored one.
    pub fn time_tolerance(&self) -> f64 {
        2.0 * self.slab.max_step + 1e-12
    }

    /// Value of U at an inner point, by stored-time lookup and linear
    /// interpolation in X.
    pub fn eval(&self, t_inner: f64, x_inner: f64) -> Result<f64> {
        self.eval_with_tolerance(t_inner, x_inner, self.time_tolerance())
    }

    /// Like `eval`, but with a caller-supplied time-matching tolerance:
    /// callers comparing against another run must widen the window by that
    /// run's own snapshot snapping error.
    pub fn eval_with_tolerance(&self, t_inner: f64, x_inner: f64, tol: f64) -> Result<f64> {
        let k = self
            .slab
            .time_index_near(t_inner, tol)
            .ok_or_else(|| {
                ViscidError::Coverage(format!(
                    "inner time {t_inner} not among the stored profile times"
                ))
            })?;
        self.slab.interp_x(k, 0, x_inner)
    }
}

/// Solves the inner viscous-Burgers problem on `[t_min, 0] x [-x_box, x_box]`
/// with cubic-profile initial and Dirichlet data, storing the requested
/// inner times. The box must be large enough that the far-field truncation
/// error (which decays like the cube of the cubic distance) is negligible.
#[allow(non_snake_case)]
pub fn inner_profile_U(
    t_min: f64,
    x_box: f64,
    grid: &Grid1D,
    store_times: &[f64],
    c: CubicParams,
) -> Result<InnerProfile> {
    if t_min > -4.0 {
        return Err(ViscidError::InvalidConfig(format!(
            "inner profile requires T_min <= -4, got {t_min}"
        )));
    }
    if x_box < 4.0 {
        return Err(ViscidError::InvalidConfig(format!(
            "inner profile requires X_box >= 4, got {x_box}"
        )));
    }
    if (grid.x_min + x_box).abs() > 1e-9 || (grid.x_max() - x_box).abs() > 1e-9 {
        return Err(ViscidError::InvalidConfig(
            "inner grid must span exactly [-X_box, X_box]".into(),
        ));
    }
    if c != CubicParams::standard() {
        return Err(ViscidError::Unsupported(
            "inner profile is implemented for the standard normalization a = b = -1, b_diff = 1"
                .into(),
        ));
    }
    let t_end = store_times.iter().cloned().fold(f64::NEG_INFINITY, f64::max).min(0.0);
    let mut cfg = ViscousRunConfig::new(SystemSpec::burgers(), 1.0, t_min, t_end, grid.clone());
    cfg.store_times = store_times.to_vec();
    let init = |x: f64| vec![cubic_root(SpacetimePoint::new(t_min, x), c).expect("inner data")];
    let boundary = |t: f64, x: f64| {
        vec![cubic_root(SpacetimePoint::new(t.min(0.0), x), c).expect("inner boundary")]
    };
    let slab = run_viscous(&cfg, &init, &boundary)?;
    Ok(InnerProfile { slab, cubic: c })
}

/// Deviation between the inner-coordinate grid term obtained by scaling
/// the outer-coordinate one and its direct inner evaluation. Pure algebra:
/// the contract is agreement to 1e-10. Supported for (k, l) = (0,0), (1,0).
pub fn grid_scaling_check(
    k: u32,
    l: u32,
    nu: f64,
    points: &[(f64, f64)],
    c: CubicParams,
) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(ViscidError::Domain(format!("nu must be positive, got {nu}")));
    }
    let eval = |t: f64, x: f64| -> Result<f64> {
        let p = SpacetimePoint::new(t, x);
        match (k, l) {
            (0, 0) => cubic_root(p, c),
            (1, 0) => crate::hyperbolic::grid_sigma10(p, c),
            _ => Err(ViscidError::Unsupported(format!(
                "grid term ({k}, {l}) not realized; only (0,0) and (1,0) exist here"
            ))),
        }
    };
    let scale = nu.powf(k as f64 - (l as f64 + 1.0) / 4.0);
    let mut worst = 0.0f64;
    for &(t_inner, x_inner) in points {
        let scaled = scale * eval(nu.sqrt() * t_inner, nu.powf(0.75) * x_inner)?;
        let direct = eval(t_inner, x_inner)?;
        worst = worst.max((scaled - direct).abs());
    }
    Ok(worst)
}
