use serde::{Deserialize, Serialize};

use super::{DuhamelPath, ModeTrajectory, ResponseKind, ResponseModel, VTrajectory};
use crate::dynamics::{correlation_kernel, CorrelationKernel, FieldState};
use crate::equilibrium::{equilibrium_correlation, DispersionRelation, InteractionPotential, MomentumDistribution};
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

/// Which quadratic term to evaluate.
#[derive(Clone, Debug)]
pub enum QuadraticTerm<T: Real> {
    /// `Q₁`, `Q₂`: fields per equilibrium mode.
    Field(ModeTrajectory<T>),
    /// `Q₃`, `Q₄`: correlation kernels.
    Kernel(VTrajectory<T>),
}

/// Defects of both halves of the fixed-point system on a stored run, in
/// `sup_t L²_ω L²_x` for `Z` and `sup_{t,y} L²_x` for `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResidual {
    pub steps: usize,
    pub dt: f64,
    /// `Z - S(t)Z₀ - L₁ - L₂ - Q₁ - Q₂`.
    pub defect_z: f64,
    /// `V - (free term) - L₃ - L₄ - Q₃ - Q₄ - E[Z̄Z]`.
    pub defect_v: f64,
    /// Size of `Q₁ + Q₂`.
    pub quadratic_z: f64,
    /// Size of `Q₃ + Q₄ + E[Z̄Z]`.
    pub quadratic_v: f64,
    pub perturbation: f64,
    pub kernel: f64,
}

impl FixedPointResidual {
    pub fn total(&self) -> f64 {
        self.defect_z + self.defect_v
    }

    pub fn quadratic(&self) -> f64 {
        self.quadratic_z + self.quadratic_v
    }
}

impl<T: Real> ResponseModel<T> {
    /// `Q_k(Z, V)` for `k ∈ {1, 2, 3, 4}`.
    pub fn apply_q(&self, k: usize, z: &ModeTrajectory<T>, v: &VTrajectory<T>) -> Result<QuadraticTerm<T>> {
        match k {
            1 => Ok(QuadraticTerm::Field(self.apply_q1(z, v)?)),
            2 => Ok(QuadraticTerm::Field(self.apply_q2(z, v)?)),
            3 => Ok(QuadraticTerm::Kernel(
                self.pair_correlation(&self.apply_q1(z, v)?, v.separations())?,
            )),
            4 => Ok(QuadraticTerm::Kernel(
                self.pair_correlation(&self.apply_q2(z, v)?, v.separations())?,
            )),
            _ => Err(Error::Domain(format!("quadratic term Q{k} does not exist"))),
        }
    }
}

/// Evaluates both sides of the fixed-point system on checkpoints stored at
/// every sample time `t_n = n·dt` of an orbital run started from `Y + Z₀`.
pub fn fixed_point_residual<T: Real>(
    w: &InteractionPotential<T>,
    g: &MomentumDistribution<T>,
    theta: &DispersionRelation<T>,
    states: &[FieldState<T>],
) -> Result<FixedPointResidual> {
    if states.len() < 2 {
        return Err(Error::IncompleteInput(
            "fixed-point residual needs at least two checkpoints".into(),
        ));
    }
    let model = ResponseModel::new(w, g, theta)?;
    let z = ModeTrajectory::perturbations(states, theta)?;
    if z.modes() != model.modes() {
        return Err(Error::IncompleteInput(
            "checkpoints do not carry the equilibrium modes of g".into(),
        ));
    }
    let separations = model.required_separations();
    let reference = equilibrium_correlation(g);
    let kernels = states
        .iter()
        .map(|s| correlation_kernel(s, &reference, &separations))
        .collect::<Result<Vec<CorrelationKernel<T>>>>()?;
    let v = VTrajectory::from_kernels(&kernels)?;

    let free = model.free_evolution(&z)?;
    let l1 = model.apply_l1(&v, DuhamelPath::Direct)?;
    let l2 = model.apply_l2(&v, DuhamelPath::Direct)?;
    let mut q12 = model.apply_q1(&z, &v)?;
    q12.axpy(T::one(), &model.apply_q2(&z, &v)?)?;

    let mut rz = z.clone();
    for part in [&free, &l1, &l2, &q12] {
        rz.axpy(-T::one(), part)?;
    }

    let mut q_v = model.pair_correlation(&q12, &separations)?;
    q_v.axpy(T::one(), &z.self_correlation(&separations))?;
    let mut rv = v.clone();
    rv.axpy(-T::one(), &model.pair_correlation(&free, &separations)?)?;
    rv.axpy(-T::one(), &model.apply_response(&v, ResponseKind::Sum)?)?;
    rv.axpy(-T::one(), &q_v)?;

    Ok(FixedPointResidual {
        steps: v.steps(),
        dt: to_f64(v.dt()),
        defect_z: to_f64(rz.sup_norm()),
        defect_v: to_f64(rv.sup_norm()),
        quadratic_z: to_f64(q12.sup_norm()),
        quadratic_v: to_f64(q_v.sup_norm()),
        perturbation: to_f64(z.sup_norm()),
        kernel: to_f64(v.sup_norm()),
    })
}
