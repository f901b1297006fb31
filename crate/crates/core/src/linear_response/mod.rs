//! Linearised response of the perturbation `Z = X - Y` and of its
//! correlation `V` around a homogeneous equilibrium `Y`.
//!
//! `L₁`, `L₂`, `Q₁`, `Q₂` produce random fields and are stored per
//! equilibrium mode. `L₃`, `L₄`, `Q₃`, `Q₄` produce correlation kernels;
//! `L₃ + L₄` is a Fourier multiplier in `x`, so it is handled one spatial
//! frequency `ζ` at a time. Time integrals use the trapezoidal rule on the
//! uniform grid `t_n = n·dt`.

mod block;
mod duhamel;
mod fixed_point;
mod galilei;
mod trajectory;

pub use block::{BlockNorm, NeumannSolution, OperatorNorm, ResponseBlock, ResponseKind};
pub use duhamel::{DuhamelPath, ResponseModel};
pub use fixed_point::{fixed_point_residual, FixedPointResidual, QuadraticTerm};
pub use galilei::{linear_group, GalileiPropagator};
pub use trajectory::{ModeTrajectory, VTrajectory};
