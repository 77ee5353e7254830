use nalgebra::{DMatrix, DVector};

use crate::eom::{assemble, check_condition};
use crate::error::{Error, Result};
use crate::rigid_body::RobotModel;
use crate::transmission::FlowAssignment;
use crate::wedge::FlowDirection;

#[derive(Debug, Clone, PartialEq)]
pub struct ImfResult {
    /// In `[0, 1]`; zero when the limb moves with the base as one body.
    pub value: f64,
    pub direction: DVector<f64>,
}

/// Directional impact mitigation factor with backward efficiencies.
///
/// `1 - n' L_free n / n' L_locked n`, where `L_free` is the contact inertia
/// of the floating system and `L_locked` the same with the joints locked, so
/// that only the base coordinates move.
pub fn imf(model: &RobotModel, q: &DVector<f64>, direction: &DVector<f64>) -> Result<ImfResult> {
    let flow = FlowAssignment::uniform(&model.transmissions, FlowDirection::Bwd);
    imf_with(model, q, direction, &flow)
}

pub fn imf_with(
    model: &RobotModel,
    q: &DVector<f64>,
    direction: &DVector<f64>,
    flow: &FlowAssignment,
) -> Result<ImfResult> {
    let b = model.base_dof();
    if b == 0 {
        return Err(Error::Precondition(
            "impact mitigation needs a floating base".into(),
        ));
    }
    if direction.len() != 2 {
        return Err(Error::DimensionMismatch("IMF direction must be planar".into()));
    }
    let norm = direction.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidParameter("IMF direction must be non-zero".into()));
    }
    let n = direction / norm;
    let j = model.contact_jacobian(q)?;
    let dd = assemble(model, q, &DVector::zeros(model.dof()), flow)?;

    let free = inverse(&(&j * dd.solve_inertia(&j.transpose())?), "floating contact mobility")?;
    let h_bb = dd.inertia.view((0, 0), (b, b)).into_owned();
    let j_b = j.columns(0, b).into_owned();
    check_condition(&h_bb, "base inertia")?;
    let h_bb_inv = inverse(&h_bb, "base inertia")?;
    let locked = inverse(&(&j_b * h_bb_inv * j_b.transpose()), "locked contact mobility")?;

    let along_free = n.dot(&(&free * &n));
    let along_locked = n.dot(&(&locked * &n));
    if !(along_locked > 0.0) {
        return Err(Error::Numeric("locked contact inertia is not positive".into()));
    }
    let value = (1.0 - along_free / along_locked).clamp(0.0, 1.0);
    Ok(ImfResult {
        value,
        direction: n,
    })
}

fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    check_condition(m, what)?;
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularPose(format!("{what} is singular")))
}
