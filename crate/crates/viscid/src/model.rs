//! Built-in 1D conservation-law systems in the frozen basis: flux, Jacobian,
//! and diffusion matrix, with component-role metadata. Component 0 is the
//! shocking component; the rest form the nonshocking block.

use crate::error::{Result, ViscidError};
use crate::profile::CubicParams;

/// Which built-in system a `SystemSpec` evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemKind {
    /// Scalar viscous Burgers: f = psi^2/2, B = 1.
    Burgers,
    /// Burgers coupled one-way into a transport equation through the
    /// off-diagonal diffusion entry `b_cross`:
    /// `dv/dt + v dv/dx = nu d2v/dx2`, `dw/dt - dw/dx = nu b_cross d2v/dx2`.
    BurgersTransport { b_cross: f64 },
}

/// A registered conservation-law model.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub label: String,
    pub n_components: usize,
    /// max_I |lambda_(I)(0)|, i.e. the constant S minus 1.
    pub wave_speed_bound: f64,
    pub cubic: CubicParams,
}

impl SystemSpec {
    pub fn burgers() -> Self {
        Self {
            kind: SystemKind::Burgers,
            label: "burgers".into(),
            n_components: 1,
            wave_speed_bound: 0.0,
            cubic: CubicParams::standard(),
        }
    }

    pub fn burgers_transport(b_cross: f64) -> Self {
        Self {
            kind: SystemKind::BurgersTransport { b_cross },
            label: "burgers-transport".into(),
            n_components: 2,
            wave_speed_bound: 1.0,
            cubic: CubicParams::standard(),
        }
    }

    /// Resolves the config label used by the CLI.
    pub fn from_label(label: &str, b_cross: f64) -> Result<Self> {
        match label {
            "burgers" => Ok(Self::burgers()),
            "burgers-transport" => Ok(Self::burgers_transport(b_cross)),
            other => Err(ViscidError::InvalidConfig(format!(
                "unknown system label `{other}` (expected `burgers` or `burgers-transport`)"
            ))),
        }
    }

    fn check_dim(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.n_components {
            return Err(ViscidError::DimensionMismatch {
                expected: self.n_components,
                got: psi.len(),
            });
        }
        Ok(())
    }

    /// Flux f(psi).
    pub fn flux(&self, psi: &[f64], out: &mut [f64]) {
        match self.kind {
            SystemKind::Burgers => out[0] = 0.5 * psi[0] * psi[0],
            SystemKind::BurgersTransport { .. } => {
                out[0] = 0.5 * psi[0] * psi[0];
                out[1] = -psi[1];
            }
        }
    }

    /// Jacobian A(psi) = Df(psi), row-major.
    pub fn jacobian(&self, psi: &[f64], out: &mut [f64]) {
        match self.kind {
            SystemKind::Burgers => out[0] = psi[0],
            SystemKind::BurgersTransport { .. } => {
                out.copy_from_slice(&[psi[0], 0.0, 0.0, -1.0]);
            }
        }
    }

    /// Diffusion matrix B(psi), row-major. Constant for both built-ins.
    pub fn diffusion(&self, _psi: &[f64], out: &mut [f64]) {
        match self.kind {
            SystemKind::Burgers => out[0] = 1.0,
            SystemKind::BurgersTransport { b_cross } => {
                out.copy_from_slice(&[1.0, 0.0, b_cross, 0.0]);
            }
        }
    }

    /// Flux, Jacobian, and diffusion evaluated at one state.
    pub fn eval(&self, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.check_dim(psi)?;
        let n = self.n_components;
        let mut f = vec![0.0; n];
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n * n];
        self.flux(psi, &mut f);
        self.jacobian(psi, &mut a);
        self.diffusion(psi, &mut b);
        Ok((f, a, b))
    }

    /// Largest characteristic speed at one state. Both built-ins have
    /// (lower-)triangular Jacobians, so the diagonal carries the spectrum.
    pub fn max_wave_speed(&self, psi: &[f64]) -> f64 {
        match self.kind {
            SystemKind::Burgers => psi[0].abs(),
            SystemKind::BurgersTransport { .. } => psi[0].abs().max(1.0),
        }
    }

    /// Largest diffusion scale entering the parabolic CFL restriction.
    pub fn max_diffusion(&self) -> f64 {
        match self.kind {
            SystemKind::Burgers => 1.0,
            SystemKind::BurgersTransport { b_cross } => b_cross.abs().max(1.0),
        }
    }

    /// Whether a component carries its own diffusion (B_jj(0) > 0). The
    /// advective flux of diffused components is discretized with centered
    /// differences; undiffused components use an upwind-biased flux.
    pub fn is_diffused(&self, component: usize) -> bool {
        let n = self.n_components;
        let mut b = vec![0.0; n * n];
        self.diffusion(&vec![0.0; n], &mut b);
        b[component * n + component] > 0.0
    }

    /// Frozen advection speed A_jj(0) of an undiffused component.
    pub fn frozen_speed(&self, component: usize) -> f64 {
        let n = self.n_components;
        let mut a = vec![0.0; n * n];
        self.jacobian(&vec![0.0; n], &mut a);
        a[component * n + component]
    }
}
