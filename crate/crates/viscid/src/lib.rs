//! Numerical laboratory for weakly viscous shock formation in 1D
//! conservation laws: the inviscid self-similar profile and its companions,
//! built-in model systems, inviscid corrector fields, a viscous
//! finite-difference solver with blow-up coordinates, matched
//! inner/outer approximations, and measurement tools (rate fits, Hölder
//! seminorms, sup-norm comparisons).

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod hyperbolic;
pub mod model;
pub mod numerics;
pub mod parabolic;
pub mod profile;

pub use error::{Result, ViscidError};
pub use hyperbolic::{EikonalField, InviscidSolution, NonshockData};
pub use model::{SystemKind, SystemSpec};
pub use parabolic::{FieldSlab, Grid1D, InnerProfile, ViscousRunConfig};
pub use profile::{CubicParams, ProfileEval, SpacetimePoint};
