//! Efficiency-augmented equation of motion.
//!
//! Projecting the redundant dynamics with `K' E_s` instead of `K'` removes
//! the meshing forces `r = A' lambda + tau_d` (their efficiency-weighted
//! virtual work vanishes, `K' E_s r = 0`) and leaves
//!
//! ```text
//! K' E_s H_s K qdd + K' E_s c_s = J' f_ext + [0; B_m E_m] tau_phi
//! ```
//!
//! where the efficiencies in `E_s` and `E_m` depend on the direction of
//! energy flow through each coupling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rigid_body::{RobotModel, SystemState};
use crate::transmission::{
    constraint_matrices, efficiency_matrices, ConstraintMatrices, FlowAssignment, TransmissionSet,
    MAX_CONDITION,
};
use crate::wedge::FlowDirection;

/// Rotor power below which a coupling's direction is taken from the analysis mode (W).
pub const DEFAULT_POWER_THRESHOLD: f64 = 1e-9;

/// Reduced dissipative dynamics at one state, for one flow assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipativeDynamics {
    /// `H = K' E_s H_s K`. Not symmetric in general.
    pub inertia: DMatrix<f64>,
    /// `K' E_s c_s`.
    pub bias: DVector<f64>,
    /// `[0; B_m E_m]`, `(b+m) x m`.
    pub actuation: DMatrix<f64>,
    pub flow: FlowAssignment,
    pub base_dof: usize,
    pub constraints: ConstraintMatrices,
    pub e_s: DMatrix<f64>,
    pub e_m: DMatrix<f64>,
}

impl DissipativeDynamics {
    pub fn dof(&self) -> usize {
        self.inertia.nrows()
    }

    pub fn joint_count(&self) -> usize {
        self.flow.len()
    }

    /// `B_m E_m B_m^-1`, the efficiency sandwich of the forward tensor.
    pub fn actuation_sandwich(&self) -> Result<DMatrix<f64>> {
        let b_inv = self
            .constraints
            .b_m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularTopology("B_m is not invertible".into()))?;
        Ok(&self.constraints.b_m * &self.e_m * b_inv)
    }

    /// Redundant accelerations `sdd = K qdd`.
    pub fn lift(&self, qdd: &DVector<f64>) -> DVector<f64> {
        &self.constraints.k * qdd
    }

    pub(crate) fn solve_inertia(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_condition(&self.inertia, "efficiency-augmented inertia")?;
        self.inertia
            .clone()
            .lu()
            .solve(rhs)
            .ok_or_else(|| Error::SingularPose("inertia matrix is singular".into()))
    }
}

pub(crate) fn check_condition(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let sv = m.singular_values();
    let (max, min) = (sv.max(), sv.min());
    if !(min > 0.0) || max / min > MAX_CONDITION {
        return Err(Error::SingularPose(format!(
            "{what} is singular (condition {:e})",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    Ok(())
}

/// Power-sign rule: coupling `i` is forward when the rotor torque does
/// positive work (`tau_phi_i phid_i > eps_P`), backward when it absorbs
/// power, and takes `mode` in between.
pub fn resolve_flow_direction(
    model: &RobotModel,
    state: &SystemState,
    tau_phi: &DVector<f64>,
    mode: FlowDirection,
) -> Result<FlowAssignment> {
    resolve_flow_direction_with(model, state, tau_phi, mode, DEFAULT_POWER_THRESHOLD)
}

pub fn resolve_flow_direction_with(
    model: &RobotModel,
    state: &SystemState,
    tau_phi: &DVector<f64>,
    mode: FlowDirection,
    threshold: f64,
) -> Result<FlowAssignment> {
    let m = model.joint_count();
    if tau_phi.len() != m || state.phid.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "expected {m} rotor torques and rates"
        )));
    }
    let dirs = (0..m)
        .map(|i| {
            let p = tau_phi[i] * state.phid[i];
            if p > threshold {
                FlowDirection::Fwd
            } else if p < -threshold {
                FlowDirection::Bwd
            } else {
                mode
            }
        })
        .collect();
    FlowAssignment::new(&model.transmissions, dirs)
}

/// Chooses the flow assignment whose own reduced dynamics reproduce it: a
/// coupling is forward when the meshing force on its rotor opposes the rotor
/// motion. Couplings with resting rotors take `mode`.
///
/// Unlike [`resolve_flow_direction`] this also classifies rotors that spin
/// with zero commanded torque.
pub fn resolve_flow_consistent(
    model: &RobotModel,
    state: &SystemState,
    tau_phi: &DVector<f64>,
    f_ext: &DVector<f64>,
    mode: FlowDirection,
) -> Result<FlowAssignment> {
    let m = model.joint_count();
    let b = model.base_dof();
    let moving: Vec<usize> = (0..m).filter(|&i| state.phid[i] != 0.0).collect();
    let j = model.contact_jacobian(&state.q)?;
    let dr_inv = model
        .transmissions
        .motor_to_joint()
        .try_inverse()
        .ok_or_else(|| Error::SingularTopology("D R is not invertible".into()))?;

    for mask in 0..(1usize << moving.len()) {
        let mut dirs = vec![mode; m];
        for (bit, &i) in moving.iter().enumerate() {
            dirs[i] = if mask >> bit & 1 == 0 {
                FlowDirection::Fwd
            } else {
                FlowDirection::Bwd
            };
        }
        let flow = FlowAssignment::new(&model.transmissions, dirs.clone())?;
        let dd = assemble(model, &state.q, &state.qd, &flow)?;
        let qdd = forward_dynamics(&dd, tau_phi, f_ext, &j)?;
        let phidd = &dr_inv * qdd.rows(b, m);
        let consistent = moving.iter().all(|&i| {
            let r = model.rotor_inertias[i] * phidd[i] - tau_phi[i];
            let p = r * state.phid[i];
            match dirs[i] {
                FlowDirection::Fwd => p <= 0.0,
                FlowDirection::Bwd => p >= 0.0,
            }
        });
        if consistent {
            return Ok(flow);
        }
    }
    Ok(FlowAssignment::uniform(&model.transmissions, mode))
}

/// Assembles the reduced dynamics of `model` at `(q, qd)`.
pub fn assemble(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    flow: &FlowAssignment,
) -> Result<DissipativeDynamics> {
    let h_s = model.mass_matrix_redundant(q)?;
    let c_s = model.bias_forces_redundant(q, qd)?;
    assemble_redundant(&h_s, &c_s, &model.transmissions, model.base_dof(), flow)
}

/// Assembly from an arbitrary redundant inertia `H_s` and bias `c_s` over
/// `(q_b, q_m, phi_m)`.
pub fn assemble_redundant(
    h_s: &DMatrix<f64>,
    c_s: &DVector<f64>,
    t: &TransmissionSet,
    base_dof: usize,
    flow: &FlowAssignment,
) -> Result<DissipativeDynamics> {
    let m = t.joint_count();
    let ns = base_dof + 2 * m;
    if h_s.nrows() != ns || h_s.ncols() != ns || c_s.len() != ns {
        return Err(Error::DimensionMismatch(format!(
            "redundant inertia must be {ns}x{ns} with a bias of length {ns}"
        )));
    }
    if flow.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "flow assignment covers {} couplings, expected {m}",
            flow.len()
        )));
    }
    let cm = constraint_matrices(base_dof, t)?;
    let (e_s, e_m) = efficiency_matrices(flow, base_dof);
    let projector = cm.k.transpose() * &e_s;
    let inertia = &projector * h_s * &cm.k;
    let bias = &projector * c_s;
    let mut actuation = DMatrix::zeros(base_dof + m, m);
    actuation
        .view_mut((base_dof, 0), (m, m))
        .copy_from(&(&cm.b_m * &e_m));
    Ok(DissipativeDynamics {
        inertia,
        bias,
        actuation,
        flow: flow.clone(),
        base_dof,
        constraints: cm,
        e_s,
        e_m,
    })
}

/// `qdd = H^-1 (J' f_ext + [0; B_m E_m] tau_phi - c)`.
pub fn forward_dynamics(
    dd: &DissipativeDynamics,
    tau_phi: &DVector<f64>,
    f_ext: &DVector<f64>,
    j: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let n = dd.dof();
    if tau_phi.len() != dd.joint_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} rotor torques for {} rotors",
            tau_phi.len(),
            dd.joint_count()
        )));
    }
    if j.ncols() != n || j.nrows() != f_ext.len() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian is {}x{}, external force has {} entries, system has {n} DoF",
            j.nrows(),
            j.ncols(),
            f_ext.len()
        )));
    }
    let rhs = j.transpose() * f_ext + &dd.actuation * tau_phi - &dd.bias;
    let sol = dd.solve_inertia(&DMatrix::from_column_slice(n, 1, rhs.as_slice()))?;
    Ok(sol.column(0).into_owned())
}

/// Meshing forces of the redundant system, `r = H_s sdd + c_s - tau_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshingForce {
    pub r: DVector<f64>,
}

impl MeshingForce {
    /// `max |r - (A' lambda + tau_d)|`, for checking against known multipliers.
    /// `tau_d` holds one dissipative torque per rotor.
    pub fn decomposition_residual(
        &self,
        a: &DMatrix<f64>,
        lambda: &DVector<f64>,
        tau_d: &DVector<f64>,
    ) -> f64 {
        let mut expected = a.transpose() * lambda;
        let m = tau_d.len();
        let ns = expected.len();
        let mut rows = expected.rows_mut(ns - m, m);
        rows += tau_d;
        (&self.r - expected).amax()
    }
}

pub fn meshing_forces(
    model: &RobotModel,
    state: &SystemState,
    sdd: &DVector<f64>,
    tau_s: &DVector<f64>,
) -> Result<MeshingForce> {
    let ns = model.redundant_dof();
    if sdd.len() != ns || tau_s.len() != ns {
        return Err(Error::DimensionMismatch(format!(
            "redundant accelerations and forces need {ns} entries"
        )));
    }
    let h_s = model.mass_matrix_redundant(&state.q)?;
    let c_s = model.bias_forces_redundant(&state.q, &state.qd)?;
    Ok(MeshingForce {
        r: h_s * sdd + c_s - tau_s,
    })
}

/// `delta Z = K' E_s r`; zero on dynamically consistent states.
pub fn efficiency_null_residual(
    k: &DMatrix<f64>,
    e_s: &DMatrix<f64>,
    r: &DVector<f64>,
) -> Result<DVector<f64>> {
    if k.nrows() != e_s.nrows() || e_s.ncols() != r.len() || !e_s.is_square() {
        return Err(Error::DimensionMismatch(
            "K, E_s and r do not share the redundant dimension".into(),
        ));
    }
    Ok(k.transpose() * e_s * r)
}

/// Rotor torques that render the task-space force `f_task`:
/// `tau_phi = B_m^-1 J' f_task`. Only defined for fixed-base systems.
pub fn virtual_task_force_torques(
    dd: &DissipativeDynamics,
    j: &DMatrix<f64>,
    f_task: &DVector<f64>,
) -> Result<DVector<f64>> {
    if dd.base_dof != 0 {
        return Err(Error::Precondition(
            "virtual task-space forces require a fixed base (b = 0)".into(),
        ));
    }
    if j.ncols() != dd.joint_count() || j.nrows() != f_task.len() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian is {}x{}, task force has {} entries",
            j.nrows(),
            j.ncols(),
            f_task.len()
        )));
    }
    let b_inv = dd
        .constraints
        .b_m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularTopology("B_m is not invertible".into()))?;
    Ok(b_inv * j.transpose() * f_task)
}
