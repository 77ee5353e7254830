use nalgebra::{DMatrix, DVector};

use super::{symmetric_part, MetricVariant};
use crate::eom::{assemble, check_condition, DissipativeDynamics};
use crate::error::{Error, Result};
use crate::rigid_body::RobotModel;
use crate::transmission::FlowAssignment;
use crate::wedge::FlowDirection;

/// Which inertia the Backward tensor is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackwardGitReading {
    /// `H` assembled with `1/eta_b` on every coupling.
    #[default]
    BackwardEfficiencies,
    /// `H` assembled with unit efficiencies; Backward equals Conventional.
    Lossless,
}

impl BackwardGitReading {
    pub fn as_str(self) -> &'static str {
        match self {
            BackwardGitReading::BackwardEfficiencies => "backward-efficiencies",
            BackwardGitReading::Lossless => "lossless",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InertiaTensorResult {
    pub tensor: DMatrix<f64>,
    pub variant: MetricVariant,
    /// `(T + T') / 2`, for quadratic forms and ellipses.
    pub symmetric_part: DMatrix<f64>,
    /// Set for the Backward variant only.
    pub reading: Option<BackwardGitReading>,
}

impl InertiaTensorResult {
    /// `n' T n` using the symmetric part.
    pub fn along(&self, n: &DVector<f64>) -> f64 {
        n.dot(&(&self.symmetric_part * n))
    }
}

/// Generalized inertia tensor at the contact point.
///
/// The Forward variant needs a fixed base; apply
/// [`RobotModel::with_fixed_base`] first for floating models.
pub fn git(
    model: &RobotModel,
    q: &DVector<f64>,
    variant: MetricVariant,
    reading: BackwardGitReading,
) -> Result<InertiaTensorResult> {
    let j = model.contact_jacobian(q)?;
    git_for_jacobian(model, q, variant, reading, &j)
}

/// Same as [`git`] for an arbitrary task Jacobian with `b+m` columns.
pub fn git_for_jacobian(
    model: &RobotModel,
    q: &DVector<f64>,
    variant: MetricVariant,
    reading: BackwardGitReading,
    j: &DMatrix<f64>,
) -> Result<InertiaTensorResult> {
    if j.ncols() != model.dof() {
        return Err(Error::DimensionMismatch(format!(
            "task Jacobian has {} columns, model has {} DoF",
            j.ncols(),
            model.dof()
        )));
    }
    let m = model.joint_count();
    let qd = DVector::zeros(model.dof());
    let flow = match (variant, reading) {
        (MetricVariant::Conventional, _)
        | (MetricVariant::Backward, BackwardGitReading::Lossless) => {
            FlowAssignment::conservative(m)
        }
        (MetricVariant::Forward, _) => {
            if model.base_dof() != 0 {
                return Err(Error::Precondition(
                    "Forward-GIT requires a fixed base (b = 0)".into(),
                ));
            }
            FlowAssignment::uniform(&model.transmissions, FlowDirection::Fwd)
        }
        (MetricVariant::Backward, BackwardGitReading::BackwardEfficiencies) => {
            FlowAssignment::uniform(&model.transmissions, FlowDirection::Bwd)
        }
    };
    let dd = assemble(model, q, &qd, &flow)?;
    let right = match variant {
        MetricVariant::Forward => dd.actuation_sandwich()? * j.transpose(),
        _ => j.transpose(),
    };
    let tensor = invert_mobility(&dd, j, &right)?;
    Ok(InertiaTensorResult {
        symmetric_part: symmetric_part(&tensor),
        tensor,
        variant,
        reading: (variant == MetricVariant::Backward).then_some(reading),
    })
}

/// `(J H^-1 right)^-1`.
fn invert_mobility(
    dd: &DissipativeDynamics,
    j: &DMatrix<f64>,
    right: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let mobility = j * dd.solve_inertia(right)?;
    check_condition(&mobility, "task-space mobility")?;
    mobility
        .try_inverse()
        .ok_or_else(|| Error::SingularPose("task-space mobility is singular".into()))
}
