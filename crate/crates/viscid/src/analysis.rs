//! Measurement tools: log-log rate fits, sup-norm comparisons against
//! analytic references, Hölder seminorm estimation on grids, and the
//! inner-coordinate comparison against the universal profile.

use crate::error::{Result, ViscidError};
use crate::parabolic::{FieldSlab, InnerProfile};

/// Result of an ordinary least-squares fit of `ln y` against `ln x`.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `y ~ C x^slope` by OLS in log-log coordinates. Requires at least
/// three distinct abscissae and strictly positive data.
pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(ViscidError::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ViscidError::Domain(format!(
            "rate fit needs at least 3 distinct abscissae, got {}",
            distinct.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(ViscidError::Domain(
            "rate fit requires strictly positive, finite data".into(),
        ));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit { slope, intercept, r_squared })
}

/// Sup-norm deviation between a stored snapshot and an analytic reference
/// evaluated at cell centers, optionally restricted by a spatial filter.
pub fn sup_diff(
    slab: &FieldSlab,
    time_idx: usize,
    component: usize,
    reference: &dyn Fn(f64) -> Result<f64>,
    filter: Option<&dyn Fn(f64) -> bool>,
) -> Result<f64> {
    let mut sup = 0.0f64;
    let mut hit = false;
    for i in 0..slab.grid.n_cells {
        let x = slab.grid.cell_center(i);
        if let Some(f) = filter {
            if !f(x) {
                continue;
            }
        }
        hit = true;
        sup = sup.max((slab.value(time_idx, component, i) - reference(x)?).abs());
    }
    if !hit {
        return Err(ViscidError::Coverage(
            "sup_diff filter excluded every grid point".into(),
        ));
    }
    Ok(sup)
}

/// A Hölder seminorm estimate and the separation at which it was attained.
#[derive(Debug, Clone, Copy)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub seminorm: f64,
    pub argmax_separation: f64,
}

/// Estimates the Hölder-alpha seminorm of grid data by scanning pairs at
/// dyadic separations `dx, 2 dx, 4 dx, ...` anchored at every grid point
/// (an `O(n log n)` lower-bound estimator that is sharp for cusp-type
/// extremizers). `window` caps the separation considered.
pub fn holder_seminorm(
    values: &[f64],
    dx: f64,
    alpha: f64,
    window: Option<f64>,
) -> Result<HolderEstimate> {
    if values.len() < 2 || !(dx > 0.0) {
        return Err(ViscidError::Domain(
            "Hölder estimate needs at least two samples and dx > 0".into(),
        ));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ViscidError::Domain(format!(
            "Hölder exponent must lie in (0, 1], got {alpha}"
        )));
    }
    let n = values.len();
    let cap = window.unwrap_or(f64::INFINITY);
    if cap < dx {
        return Err(ViscidError::Domain(format!(
            "separation window {cap} is below the grid spacing {dx}"
        )));
    }
    let mut best = 0.0f64;
    let mut best_sep = dx;
    let mut stride = 1usize;
    while stride < n {
        let sep = stride as f64 * dx;
        if sep > cap {
            break;
        }
        let scale = sep.powf(-alpha);
        for i in 0..n - stride {
            let q = (values[i + stride] - values[i]).abs() * scale;
            if q > best {
                best = q;
                best_sep = sep;
            }
        }
        stride *= 2;
    }
    Ok(HolderEstimate { alpha, seminorm: best, argmax_separation: best_sep })
}

/// Sup deviation between the blown-up viscous field and the universal
/// inner profile at one inner time.
#[derive(Debug, Clone, Copy)]
pub struct UniversalPoint {
    pub t_inner: f64,
    pub sup: f64,
}

/// Compares the shocking component of a viscous run against the inner
/// profile over an inner-coordinate box: for each stored time with
/// `T = nu^{-1/2} t` inside `t_range`, takes the sup over `x_range`
/// (inner units, sampled at `n_samples` points) of
/// `|nu^{-1/4} psi(t, x) - U(T, X)|`. Points are returned ordered by
/// increasing inner time.
pub fn universal_compare(
    slab: &FieldSlab,
    inner: &InnerProfile,
    nu: f64,
    t_range: (f64, f64),
    x_range: (f64, f64),
    n_samples: usize,
) -> Result<Vec<UniversalPoint>> {
    if !(nu > 0.0) {
        return Err(ViscidError::Domain(format!("nu must be positive, got {nu}")));
    }
    if n_samples < 2 || !(t_range.0 < t_range.1) || !(x_range.0 < x_range.1) {
        return Err(ViscidError::Domain(
            "universal comparison needs a nonempty box and at least 2 samples".into(),
        ));
    }
    // The viscous run snaps its snapshots onto whole steps, so a stored
    // outer time can miss the requested inner time by up to one outer step
    // (one inner step of size max_step / sqrt(nu)); widen the lookup window
    // accordingly.
    let tol = inner.time_tolerance() + 2.0 * slab.max_step / nu.sqrt();
    let mut out = Vec::new();
    for (k, &t) in slab.times.iter().enumerate() {
        let t_in = t / nu.sqrt();
        if t_in < t_range.0 - 1e-12 || t_in > t_range.1 + 1e-12 {
            continue;
        }
        let mut sup = 0.0f64;
        for j in 0..n_samples {
            let x_in =
                x_range.0 + (x_range.1 - x_range.0) * j as f64 / (n_samples - 1) as f64;
            let x = nu.powf(0.75) * x_in;
            let psi = slab.interp_x(k, 0, x)?;
            let u = inner.eval_with_tolerance(t_in, x_in, tol)?;
            sup = sup.max((psi / nu.powf(0.25) - u).abs());
        }
        out.push(UniversalPoint { t_inner: t_in, sup });
    }
    if out.is_empty() {
        return Err(ViscidError::Coverage(
            "no stored times fall inside the requested inner window".into(),
        ));
    }
    out.sort_by(|a, b| a.t_inner.partial_cmp(&b.t_inner).unwrap());
    Ok(out)
}
