//! Brute-force simulation of the redundant system `s = (q_b, q_m, phi_m)`.
//!
//! Every step solves the constrained equations
//!
//! ```text
//! H_s sdd + c_s - A' lambda = tau_s + tau_d
//!                     A sdd = 0
//! ```
//!
//! for accelerations and multipliers together. Transmission friction acts on
//! the rotor coordinates and opposes rotor sliding:
//! `tau_d_i = -k_i |rho_i| tanh(phid_i / eps)` where `rho = -(D R)' lambda` is
//! the constraint force reaching rotor `i`. The gain depends on which side of
//! the coupling delivers power, `k = 1/eta_f - 1` when the rotor drives and
//! `k = 1 - eta_b` when it is backdriven, so that a sliding coupling passes
//! exactly `eta_f` (resp. `eta_b`) of its input power. The direction itself is
//! found by enumerating sign hypotheses for `rho` and keeping the consistent one.
//!
//! The integrator is classical RK4 with a fixed step. Linear constraints are
//! preserved by the scheme, and input work and dissipated energy are carried
//! with the same quadrature so the power balance can be audited per step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rigid_body::{concat, RobotModel, SystemState};
use crate::transmission::{constraint_matrices, ConstraintMatrices};
use crate::wedge::FlowDirection;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub dt: f64,
    pub steps: usize,
    /// Rotor-rate scale `eps` of the friction regularization (rad/s).
    pub friction_width: f64,
    /// Keep every `record_every`-th sample (the last step is always kept).
    pub record_every: usize,
    /// Largest tolerated `|q_m - D R phi|` before the run is rejected.
    pub max_constraint_residual: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            dt: 1e-4,
            steps: 1000,
            friction_width: 1e-5,
            record_every: 1,
            max_constraint_residual: 1e-8,
        }
    }
}

/// Power flowing through one coupling. `rotor_side` is the power delivered
/// to the rotor by the meshing force; `link_side` the power delivered to the
/// joint side by the reaction of the conservative constraint force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPower {
    pub rotor_side: f64,
    pub link_side: f64,
}

impl CouplingPower {
    /// Output over input power, or `None` when the coupling carries no power.
    pub fn efficiency(&self) -> Option<f64> {
        if self.rotor_side < 0.0 && self.link_side > 0.0 {
            Some(self.link_side / -self.rotor_side)
        } else if self.link_side < 0.0 && self.rotor_side > 0.0 {
            Some(self.rotor_side / -self.link_side)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedundantEvaluation {
    pub sdd: DVector<f64>,
    pub lambda: DVector<f64>,
    /// Dissipative torque on each rotor.
    pub tau_d: DVector<f64>,
    /// `None` for couplings whose rotor is exactly at rest.
    pub flows: Vec<Option<FlowDirection>>,
    /// `r = H_s sdd + c_s - tau_s`.
    pub meshing: DVector<f64>,
    /// Generalized applied forces `tau_s = (J' f_ext, tau_phi)`.
    pub tau_s: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub t: f64,
    pub state: SystemState,
    pub eval: RedundantEvaluation,
    pub coupling_power: Vec<CouplingPower>,
    /// Kinetic plus potential energy.
    pub energy: f64,
    /// Cumulative dissipated energy.
    pub dissipated: f64,
    /// Cumulative work of rotor torques and external forces.
    pub work: f64,
    /// Power-balance residual `|dE - dW + dD|` of the step that ended at this
    /// sample, relative to the energy moved in that step.
    pub power_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<OracleSample>,
}

struct Context<'a> {
    model: &'a RobotModel,
    cm: ConstraintMatrices,
    dr_t: DMatrix<f64>,
    width: f64,
}

impl<'a> Context<'a> {
    fn new(model: &'a RobotModel, width: f64) -> Result<Self> {
        let cm = constraint_matrices(model.base_dof(), &model.transmissions)?;
        Ok(Context {
            model,
            cm,
            dr_t: model.transmissions.motor_to_joint().transpose(),
            width,
        })
    }

    fn evaluate(
        &self,
        state: &SystemState,
        tau_phi: &DVector<f64>,
        f_ext: &DVector<f64>,
    ) -> Result<RedundantEvaluation> {
        let model = self.model;
        let n = model.dof();
        let m = model.joint_count();
        let ns = n + m;
        let t = &model.transmissions;

        let h_s = model.mass_matrix_redundant(&state.q)?;
        let c_s = model.bias_forces_redundant(&state.q, &state.qd)?;
        let j = model.contact_jacobian(&state.q)?;
        let tau_s = concat(&(j.transpose() * f_ext), tau_phi);

        let slide: Vec<f64> = state.phid.iter().map(|w| (w / self.width).tanh()).collect();
        let active: Vec<usize> = (0..m).filter(|&i| slide[i] != 0.0).collect();

        let mut rhs = DVector::zeros(ns + m);
        rhs.rows_mut(0, ns).copy_from(&(&tau_s - &c_s));

        let mut best: Option<(f64, RedundantEvaluation)> = None;
        for mask in 0..(1usize << active.len()) {
            let mut gamma = DVector::zeros(m);
            let mut flows = vec![None; m];
            let mut signs = vec![0.0; m];
            for (bit, &i) in active.iter().enumerate() {
                let sign = if mask >> bit & 1 == 0 { 1.0 } else { -1.0 };
                let dir = if sign * state.phid[i] < 0.0 {
                    FlowDirection::Fwd
                } else {
                    FlowDirection::Bwd
                };
                let gain = match dir {
                    FlowDirection::Fwd => 1.0 / t.forward()[i] - 1.0,
                    FlowDirection::Bwd => 1.0 - t.backward()[i],
                };
                gamma[i] = -gain * sign * slide[i];
                flows[i] = Some(dir);
                signs[i] = sign;
            }

            // tau_d = diag(gamma) rho = -diag(gamma) (D R)' lambda
            let mut kkt = DMatrix::zeros(ns + m, ns + m);
            kkt.view_mut((0, 0), (ns, ns)).copy_from(&h_s);
            let mut coupling = -self.cm.a.transpose();
            let friction = -DMatrix::from_diagonal(&gamma) * &self.dr_t;
            {
                let mut rows = coupling.view_mut((n, 0), (m, m));
                rows -= &friction;
            }
            kkt.view_mut((0, ns), (ns, m)).copy_from(&coupling);
            kkt.view_mut((ns, 0), (m, ns)).copy_from(&self.cm.a);

            let sol = kkt
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numeric("singular constrained dynamics system".into()))?;
            if sol.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("non-finite constrained dynamics solution".into()));
            }
            let sdd = sol.rows(0, ns).into_owned();
            let lambda = sol.rows(ns, m).into_owned();
            let rho = -&self.dr_t * &lambda;
            let tau_d = gamma.component_mul(&rho);

            let scale = rho.amax().max(1e-300);
            let violation: f64 = active
                .iter()
                .map(|&i| (-signs[i] * rho[i]).max(0.0))
                .sum::<f64>()
                / scale;

            let meshing = &h_s * &sdd + &c_s - &tau_s;
            let eval = RedundantEvaluation {
                sdd,
                lambda,
                tau_d,
                flows,
                meshing,
                tau_s: tau_s.clone(),
            };
            if violation <= 1e-12 {
                return Ok(eval);
            }
            if best.as_ref().map_or(true, |(v, _)| violation < *v) {
                best = Some((violation, eval));
            }
        }
        best.map(|(_, e)| e)
            .ok_or_else(|| Error::Numeric("no flow hypothesis evaluated".into()))
    }

    fn energy(&self, state: &SystemState) -> Result<f64> {
        let h_s = self.model.mass_matrix_redundant(&state.q)?;
        let sd = state.velocities();
        Ok(0.5 * sd.dot(&(&h_s * &sd)) + self.model.potential_energy(&state.q)?)
    }
}

/// Accelerations, multipliers and friction of the redundant system at one state.
pub fn evaluate_redundant(
    model: &RobotModel,
    state: &SystemState,
    tau_phi: &DVector<f64>,
    f_ext: &DVector<f64>,
    friction_width: f64,
) -> Result<RedundantEvaluation> {
    check_inputs(model, tau_phi, f_ext)?;
    Context::new(model, friction_width)?.evaluate(state, tau_phi, f_ext)
}

fn check_inputs(model: &RobotModel, tau_phi: &DVector<f64>, f_ext: &DVector<f64>) -> Result<()> {
    if tau_phi.len() != model.joint_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} rotor torques for {} rotors",
            tau_phi.len(),
            model.joint_count()
        )));
    }
    if f_ext.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "external force must be planar (2 entries), got {}",
            f_ext.len()
        )));
    }
    Ok(())
}

fn coupling_power(model: &RobotModel, state: &SystemState, eval: &RedundantEvaluation, dr_t: &DMatrix<f64>) -> Vec<CouplingPower> {
    let n = model.dof();
    let rho = -dr_t * &eval.lambda;
    (0..model.joint_count())
        .map(|i| CouplingPower {
            rotor_side: eval.meshing[n + i] * state.phid[i],
            link_side: -rho[i] * state.phid[i],
        })
        .collect()
}

/// Runs the redundant-coordinate simulation from `initial`.
///
/// `tau_phi(t)` gives rotor torques (`m` entries) and `f_ext(t)` the planar
/// force applied at the contact point.
pub fn simulate_redundant_system<T, F>(
    model: &RobotModel,
    initial: &SystemState,
    tau_phi: T,
    f_ext: F,
    cfg: &OracleConfig,
) -> Result<Trajectory>
where
    T: Fn(f64) -> DVector<f64>,
    F: Fn(f64) -> DVector<f64>,
{
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {}", cfg.dt)));
    }
    if !(cfg.friction_width > 0.0) {
        return Err(Error::InvalidParameter("friction width must be positive".into()));
    }
    if initial.constraint_residual(model) > cfg.max_constraint_residual {
        return Err(Error::InvalidParameter(
            "initial state violates q_m = D R phi".into(),
        ));
    }
    let ctx = Context::new(model, cfg.friction_width)?;
    let dt = cfg.dt;
    let every = cfg.record_every.max(1);

    // derivative of (s, sd) plus input and dissipated power
    let deriv = |t: f64, s: &DVector<f64>, sd: &DVector<f64>| -> Result<(DVector<f64>, f64, f64, RedundantEvaluation)> {
        let state = SystemState::from_redundant(model, s, sd);
        let (tau, f) = (tau_phi(t), f_ext(t));
        check_inputs(model, &tau, &f)?;
        let eval = ctx.evaluate(&state, &tau, &f)?;
        let p_in = eval.tau_s.dot(sd);
        let p_diss = -eval.tau_d.dot(&state.phid);
        Ok((eval.sdd.clone(), p_in, p_diss, eval))
    };

    let mut s = initial.positions();
    let mut sd = initial.velocities();
    let mut work = 0.0;
    let mut dissipated = 0.0;
    let mut energy = ctx.energy(initial)?;
    let mut residual = 0.0;
    let mut samples = Vec::with_capacity(cfg.steps / every + 2);

    for k in 0..=cfg.steps {
        let t = k as f64 * dt;
        let (a1, p1, d1, eval) = deriv(t, &s, &sd)?;
        if k % every == 0 || k == cfg.steps {
            let state = SystemState::from_redundant(model, &s, &sd);
            samples.push(OracleSample {
                t,
                coupling_power: coupling_power(model, &state, &eval, &ctx.dr_t),
                state,
                eval,
                energy,
                dissipated,
                work,
                power_residual: residual,
            });
        }
        if k == cfg.steps {
            break;
        }
        // energy the coordinates exchange during the step, the residual's scale
        let start = SystemState::from_redundant(model, &s, &sd);
        let inertial = model.mass_matrix_redundant(&start.q)? * &a1;
        let exchanged = dt * sd.iter().zip(inertial.iter()).map(|(v, f)| (v * f).abs()).sum::<f64>();

        let h2 = 0.5 * dt;
        let s2 = &s + &sd * h2;
        let v2 = &sd + &a1 * h2;
        let (a2, p2, d2, _) = deriv(t + h2, &s2, &v2)?;
        let s3 = &s + &v2 * h2;
        let v3 = &sd + &a2 * h2;
        let (a3, p3, d3, _) = deriv(t + h2, &s3, &v3)?;
        let s4 = &s + &v3 * dt;
        let v4 = &sd + &a3 * dt;
        let (a4, p4, d4, _) = deriv(t + dt, &s4, &v4)?;

        let w6 = dt / 6.0;
        s += (&sd + &v2 * 2.0 + &v3 * 2.0 + &v4) * w6;
        sd += (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * w6;
        let dw = (p1 + 2.0 * p2 + 2.0 * p3 + p4) * w6;
        let dd = (d1 + 2.0 * d2 + 2.0 * d3 + d4) * w6;
        work += dw;
        dissipated += dd;

        let state = SystemState::from_redundant(model, &s, &sd);
        let drift = state.constraint_residual(model);
        if !(drift <= cfg.max_constraint_residual) {
            return Err(Error::Numeric(format!(
                "constraint residual {drift:e} exceeds {:e} at t = {}; reduce the step size",
                cfg.max_constraint_residual,
                t + dt
            )));
        }
        let new_energy = ctx.energy(&state)?;
        let de = new_energy - energy;
        let scale = (dw.abs() + dd.abs() + de.abs() + exchanged).max(f64::MIN_POSITIVE);
        residual = (de - dw + dd).abs() / scale;
        energy = new_energy;
    }
    Ok(Trajectory { samples })
}
