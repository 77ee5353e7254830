//! Planar rigid-body model: an optional 3-DoF floating base carrying a serial
//! chain of revolute links, each driven by a geared rotor.
//!
//! Link `i` has absolute angle `theta_i = theta_base + q_1 + ... + q_i`, measured
//! counter-clockwise from `+x` in the sagittal `x-z` plane. The first joint sits
//! at the base center of mass; the contact point is the tip of the last link.
//! Gravity acts along `-z`.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{Error, Result};
use crate::transmission::TransmissionSet;

pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarBody {
    pub mass: f64,
    /// Distance from the proximal joint to the center of mass along the link.
    pub com_offset: f64,
    /// Rotational inertia about the center of mass.
    pub inertia_com: f64,
    pub length: f64,
}

impl PlanarBody {
    pub fn new(mass: f64, length: f64, com_offset: f64, inertia_com: f64) -> Result<Self> {
        let b = PlanarBody {
            mass,
            com_offset,
            inertia_com,
            length,
        };
        b.validate()?;
        Ok(b)
    }

    /// Uniform rod: center of mass at the midpoint, `I = m L^2 / 12`.
    pub fn uniform_rod(mass: f64, length: f64) -> Result<Self> {
        Self::new(mass, length, 0.5 * length, mass * length * length / 12.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mass, self.com_offset, self.inertia_com, self.length]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("link parameters must be finite".into()));
        }
        if self.mass < 0.0 || self.inertia_com < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "link mass and inertia must be non-negative (mass {}, inertia {})",
                self.mass, self.inertia_com
            )));
        }
        if self.length < 0.0 || self.com_offset < 0.0 || self.com_offset > self.length {
            return Err(Error::InvalidParameter(format!(
                "center of mass offset {} must lie within the link length {}",
                self.com_offset, self.length
            )));
        }
        Ok(())
    }
}

/// Floating torso. Its center of mass coincides with the first joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatingBase {
    pub mass: f64,
    /// Edge length of the square torso (informational; the inertia is stored separately).
    pub side: f64,
    pub inertia: f64,
}

impl FloatingBase {
    /// Uniform planar square: `I = m s^2 / 6`.
    pub fn uniform_square(mass: f64, side: f64) -> Result<Self> {
        let b = FloatingBase {
            mass,
            side,
            inertia: mass * side * side / 6.0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "floating base mass must be positive, got {}",
                self.mass
            )));
        }
        if !(self.inertia >= 0.0 && self.inertia.is_finite() && self.side >= 0.0) {
            return Err(Error::InvalidParameter("invalid floating base geometry".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    /// `None` for a base welded to the world (`b = 0`), otherwise planar `x, z, pitch` (`b = 3`).
    pub base: Option<FloatingBase>,
    pub links: Vec<PlanarBody>,
    pub rotor_inertias: Vec<f64>,
    pub transmissions: TransmissionSet,
    /// Magnitude of gravity along `-z` (m/s^2).
    pub gravity: f64,
    /// Nominal configuration `(q_b, q_m)`.
    pub pose: DVector<f64>,
    /// Symmetric rotor torque bounds `|tau_phi_i| <= limit_i` (N m).
    pub torque_limits: Vec<f64>,
}

/// Linear and angular velocity Jacobians of one body's center of mass.
#[derive(Debug, Clone)]
pub struct BodyJacobian {
    pub mass: f64,
    pub inertia: f64,
    pub linear: DMatrix<f64>,
    pub angular: DVector<f64>,
    /// Center-of-mass acceleration at zero generalized acceleration.
    pub bias_acceleration: Vector2<f64>,
    pub com: Vector2<f64>,
}

fn dir(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

fn perp(theta: f64) -> Vector2<f64> {
    Vector2::new(-theta.sin(), theta.cos())
}

impl RobotModel {
    pub fn new(
        base: Option<FloatingBase>,
        links: Vec<PlanarBody>,
        rotor_inertias: Vec<f64>,
        transmissions: TransmissionSet,
    ) -> Result<Self> {
        let b = if base.is_some() { 3 } else { 0 };
        let m = links.len();
        let model = RobotModel {
            base,
            links,
            rotor_inertias,
            transmissions,
            gravity: DEFAULT_GRAVITY,
            pose: DVector::zeros(b + m),
            torque_limits: vec![0.0; m],
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.links.len();
        if m == 0 {
            return Err(Error::Semantic("a model needs at least one link".into()));
        }
        if self.rotor_inertias.len() != m {
            return Err(Error::Semantic(format!(
                "{m} links but {} rotors",
                self.rotor_inertias.len()
            )));
        }
        if self.transmissions.joint_count() != m {
            return Err(Error::Semantic(format!(
                "{m} links but {} transmissions",
                self.transmissions.joint_count()
            )));
        }
        if self.torque_limits.len() != m {
            return Err(Error::Semantic(format!(
                "{m} links but {} torque limits",
                self.torque_limits.len()
            )));
        }
        if self.pose.len() != self.dof() {
            return Err(Error::Semantic(format!(
                "pose has {} entries, expected {}",
                self.pose.len(),
                self.dof()
            )));
        }
        for l in &self.links {
            l.validate()?;
        }
        if let Some(base) = &self.base {
            base.validate()?;
        }
        if self.rotor_inertias.iter().any(|&i| !(i >= 0.0 && i.is_finite())) {
            return Err(Error::InvalidParameter("rotor inertias must be non-negative".into()));
        }
        if self.torque_limits.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("torque limits must be non-negative".into()));
        }
        if !self.gravity.is_finite() || self.pose.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("gravity and pose must be finite".into()));
        }
        Ok(())
    }

    pub fn base_dof(&self) -> usize {
        if self.base.is_some() {
            3
        } else {
            0
        }
    }

    pub fn joint_count(&self) -> usize {
        self.links.len()
    }

    /// `b + m`.
    pub fn dof(&self) -> usize {
        self.base_dof() + self.joint_count()
    }

    /// `b + 2m`.
    pub fn redundant_dof(&self) -> usize {
        self.base_dof() + 2 * self.joint_count()
    }

    /// Same chain with the base welded to the world at its current pose.
    pub fn with_fixed_base(&self) -> RobotModel {
        let b = self.base_dof();
        let m = self.joint_count();
        RobotModel {
            base: None,
            pose: self.pose.rows(b, m).into_owned(),
            ..self.clone()
        }
    }

    pub fn with_transmissions(&self, transmissions: TransmissionSet) -> Result<RobotModel> {
        let model = RobotModel {
            transmissions,
            ..self.clone()
        };
        model.validate()?;
        Ok(model)
    }

    fn check_q(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch(format!(
                "configuration has {} entries, expected {}",
                q.len(),
                self.dof()
            )));
        }
        Ok(())
    }

    /// Base origin, base pitch and absolute link angles.
    fn frame(&self, q: &DVector<f64>) -> (Vector2<f64>, f64, Vec<f64>) {
        let b = self.base_dof();
        let (origin, pitch) = if b == 3 {
            (Vector2::new(q[0], q[1]), q[2])
        } else {
            (Vector2::zeros(), 0.0)
        };
        let mut acc = pitch;
        let angles = (0..self.joint_count())
            .map(|i| {
                acc += q[b + i];
                acc
            })
            .collect();
        (origin, pitch, angles)
    }

    /// Position of a point at distance `d` along link `i`, its Jacobian and its
    /// velocity-product acceleration.
    fn point_on_link(
        &self,
        q: &DVector<f64>,
        qd: Option<&DVector<f64>>,
        link: usize,
        d: f64,
    ) -> (Vector2<f64>, DMatrix<f64>, Vector2<f64>) {
        let b = self.base_dof();
        let n = self.dof();
        let (origin, _, angles) = self.frame(q);

        // absolute angular rates
        let rates: Vec<f64> = match qd {
            Some(qd) => {
                let mut acc = if b == 3 { qd[2] } else { 0.0 };
                (0..self.joint_count())
                    .map(|i| {
                        acc += qd[b + i];
                        acc
                    })
                    .collect()
            }
            None => vec![0.0; self.joint_count()],
        };

        // segment k contributes arm_k * e(theta_k), arm = L_k for k < link, d for k = link
        let arm = |k: usize| if k < link { self.links[k].length } else { d };

        let mut p = origin;
        let mut bias = Vector2::zeros();
        for k in 0..=link {
            p += arm(k) * dir(angles[k]);
            bias -= arm(k) * rates[k] * rates[k] * dir(angles[k]);
        }

        let mut jac = DMatrix::zeros(2, n);
        // d p / d theta_k-prefix: joint j moves every segment k >= j
        let mut tail = Vector2::zeros();
        for j in (0..=link).rev() {
            tail += arm(j) * perp(angles[j]);
            jac[(0, b + j)] = tail.x;
            jac[(1, b + j)] = tail.y;
        }
        if b == 3 {
            jac[(0, 0)] = 1.0;
            jac[(1, 1)] = 1.0;
            jac[(0, 2)] = tail.x;
            jac[(1, 2)] = tail.y;
        }
        (p, jac, bias)
    }

    /// Per-body center-of-mass Jacobians, base first (when floating).
    pub fn body_jacobians(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<Vec<BodyJacobian>> {
        self.check_q(q)?;
        self.check_q(qd)?;
        let b = self.base_dof();
        let n = self.dof();
        let mut out = Vec::with_capacity(self.joint_count() + 1);
        if let Some(base) = &self.base {
            let mut linear = DMatrix::zeros(2, n);
            linear[(0, 0)] = 1.0;
            linear[(1, 1)] = 1.0;
            let mut angular = DVector::zeros(n);
            angular[2] = 1.0;
            out.push(BodyJacobian {
                mass: base.mass,
                inertia: base.inertia,
                linear,
                angular,
                bias_acceleration: Vector2::zeros(),
                com: Vector2::new(q[0], q[1]),
            });
        }
        for (i, link) in self.links.iter().enumerate() {
            let (com, linear, bias) = self.point_on_link(q, Some(qd), i, link.com_offset);
            let mut angular = DVector::zeros(n);
            if b == 3 {
                angular[2] = 1.0;
            }
            for j in 0..=i {
                angular[b + j] = 1.0;
            }
            out.push(BodyJacobian {
                mass: link.mass,
                inertia: link.inertia_com,
                linear,
                angular,
                bias_acceleration: bias,
                com,
            });
        }
        Ok(out)
    }

    /// Conventional `(b+m) x (b+m)` mass matrix of base and links (rotors excluded).
    pub fn mass_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dof();
        let bodies = self.body_jacobians(q, &DVector::zeros(n))?;
        let mut h = DMatrix::zeros(n, n);
        for body in &bodies {
            h += body.mass * body.linear.transpose() * &body.linear;
            h += body.inertia * &body.angular * body.angular.transpose();
        }
        Ok(h)
    }

    /// `H_s` over `s = (q_b, q_m, phi_m)`: the body mass matrix with the rotor
    /// inertias appended on the diagonal.
    pub fn mass_matrix_redundant(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dof();
        let m = self.joint_count();
        let mut h_s = DMatrix::zeros(n + m, n + m);
        h_s.view_mut((0, 0), (n, n)).copy_from(&self.mass_matrix(q)?);
        for (i, &ir) in self.rotor_inertias.iter().enumerate() {
            h_s[(n + i, n + i)] = ir;
        }
        Ok(h_s)
    }

    /// Coriolis, centrifugal and gravity forces over `(q_b, q_m)`.
    pub fn bias_forces(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dof();
        let bodies = self.body_jacobians(q, qd)?;
        let mut c = DVector::zeros(n);
        let g = Vector2::new(0.0, self.gravity);
        for body in &bodies {
            let a = body.bias_acceleration + g;
            c += body.mass * body.linear.transpose() * a;
        }
        Ok(c)
    }

    /// Velocity-product forces only (gravity excluded).
    pub fn coriolis_forces(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
        let bodies = self.body_jacobians(q, qd)?;
        let mut c = DVector::zeros(self.dof());
        for body in &bodies {
            c += body.mass * body.linear.transpose() * body.bias_acceleration;
        }
        Ok(c)
    }

    /// `c_s = (c, 0)`: rotors carry no gravity and no velocity-product terms.
    pub fn bias_forces_redundant(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
        let c = self.bias_forces(q, qd)?;
        let mut c_s = DVector::zeros(self.redundant_dof());
        c_s.rows_mut(0, self.dof()).copy_from(&c);
        Ok(c_s)
    }

    /// Tip position of the last link.
    pub fn contact_point(&self, q: &DVector<f64>) -> Result<Vector2<f64>> {
        self.check_q(q)?;
        let last = self.joint_count() - 1;
        Ok(self.point_on_link(q, None, last, self.links[last].length).0)
    }

    /// `2 x (b+m)` Jacobian of the contact point.
    pub fn contact_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_q(q)?;
        let last = self.joint_count() - 1;
        Ok(self.point_on_link(q, None, last, self.links[last].length).1)
    }

    /// Joint columns of the contact Jacobian (`2 x m`).
    pub fn limb_jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let j = self.contact_jacobian(q)?;
        Ok(j.columns(self.base_dof(), self.joint_count()).into_owned())
    }

    /// Ratio of smallest to largest singular value of the limb Jacobian; zero
    /// at a kinematic singularity.
    pub fn limb_manipulability(&self, q: &DVector<f64>) -> Result<f64> {
        let sv = self.limb_jacobian(q)?.singular_values();
        let max = sv.max();
        Ok(if max > 0.0 { sv.min() / max } else { 0.0 })
    }

    pub fn is_singular(&self, q: &DVector<f64>) -> Result<bool> {
        Ok(self.limb_manipulability(q)? < 1e-9)
    }

    pub fn potential_energy(&self, q: &DVector<f64>) -> Result<f64> {
        let bodies = self.body_jacobians(q, &DVector::zeros(self.dof()))?;
        Ok(bodies.iter().map(|b| b.mass * self.gravity * b.com.y).sum())
    }

    /// Kinetic energy summed body by body, rotors included. Independent of
    /// the assembled mass matrix.
    pub fn kinetic_energy(&self, state: &SystemState) -> Result<f64> {
        let bodies = self.body_jacobians(&state.q, &state.qd)?;
        let mut t = 0.0;
        for body in &bodies {
            let v = &body.linear * &state.qd;
            let w = body.angular.dot(&state.qd);
            t += 0.5 * body.mass * v.norm_squared() + 0.5 * body.inertia * w * w;
        }
        for (i, &ir) in self.rotor_inertias.iter().enumerate() {
            t += 0.5 * ir * state.phid[i] * state.phid[i];
        }
        Ok(t)
    }
}

/// Redundant state `s = (q_b, q_m, phi_m)` with velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub phi: DVector<f64>,
    pub phid: DVector<f64>,
}

impl SystemState {
    /// Rotor angles and rates follow from `q_m = D R phi`.
    pub fn from_joints(model: &RobotModel, q: DVector<f64>, qd: DVector<f64>) -> Result<Self> {
        model.check_q(&q)?;
        model.check_q(&qd)?;
        let b = model.base_dof();
        let m = model.joint_count();
        let dr = model.transmissions.motor_to_joint();
        let inv = dr
            .try_inverse()
            .ok_or_else(|| Error::SingularTopology("D R is not invertible".into()))?;
        let phi = &inv * q.rows(b, m);
        let phid = &inv * qd.rows(b, m);
        Ok(SystemState { q, qd, phi, phid })
    }

    pub fn at_rest(model: &RobotModel, q: DVector<f64>) -> Result<Self> {
        let n = model.dof();
        Self::from_joints(model, q, DVector::zeros(n))
    }

    pub fn from_redundant(model: &RobotModel, s: &DVector<f64>, sd: &DVector<f64>) -> Self {
        let n = model.dof();
        let m = model.joint_count();
        SystemState {
            q: s.rows(0, n).into_owned(),
            qd: sd.rows(0, n).into_owned(),
            phi: s.rows(n, m).into_owned(),
            phid: sd.rows(n, m).into_owned(),
        }
    }

    pub fn positions(&self) -> DVector<f64> {
        concat(&self.q, &self.phi)
    }

    pub fn velocities(&self) -> DVector<f64> {
        concat(&self.qd, &self.phid)
    }

    /// `max |q_m - D R phi|`.
    pub fn constraint_residual(&self, model: &RobotModel) -> f64 {
        let b = model.base_dof();
        let m = model.joint_count();
        let r = self.q.rows(b, m) - model.transmissions.motor_to_joint() * &self.phi;
        r.amax()
    }
}

pub(crate) fn concat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use std::f64::consts::FRAC_PI_3;

    fn one_link(mass: f64, length: f64, rotor: f64) -> RobotModel {
        let link = PlanarBody::new(mass, length, length, 0.0).unwrap();
        let t = TransmissionSet::serial(vec![1.0], vec![1.0], vec![1.0]).unwrap();
        RobotModel::new(None, vec![link], vec![rotor], t).unwrap()
    }

    pub(crate) fn leg(floating: bool) -> RobotModel {
        let rod = PlanarBody::uniform_rod(2.0, 0.4).unwrap();
        let t = TransmissionSet::serial(vec![20.0; 2], vec![1.0; 2], vec![1.0; 2]).unwrap();
        let base = floating.then(|| FloatingBase::uniform_square(15.0, 0.5).unwrap());
        RobotModel::new(base, vec![rod, rod], vec![rod.inertia_com / 400.0; 2], t).unwrap()
    }

    fn leg_pose(model: &RobotModel) -> DVector<f64> {
        let mut q = DVector::zeros(model.dof());
        let b = model.base_dof();
        q[b] = FRAC_PI_3;
        q[b + 1] = FRAC_PI_3;
        if b == 3 {
            q[0] = 0.1;
            q[1] = 0.8;
            q[2] = -0.3;
        }
        q
    }

    #[test]
    fn single_link_point_mass() {
        let model = one_link(3.0, 0.5, 0.01);
        let h_s = model.mass_matrix_redundant(&dvector![0.7]).unwrap();
        assert_relative_eq!(h_s[(0, 0)], 3.0 * 0.25, epsilon = 1e-15);
        assert_relative_eq!(h_s[(1, 1)], 0.01, epsilon = 1e-15);
        assert_eq!(h_s[(0, 1)], 0.0);
    }

    #[test]
    fn mass_matrix_symmetric_positive_definite() {
        for floating in [false, true] {
            let model = leg(floating);
            let h_s = model.mass_matrix_redundant(&leg_pose(&model)).unwrap();
            assert!((&h_s - h_s.transpose()).amax() <= 1e-12);
            let eig = h_s.symmetric_eigenvalues();
            assert!(eig.min() > 0.0);
        }
    }

    #[test]
    fn kinetic_energy_matches_mass_matrix() {
        let model = leg(true);
        let q = leg_pose(&model);
        let qd = dvector![0.3, -1.2, 0.7, 2.0, -1.5];
        let state = SystemState::from_joints(&model, q.clone(), qd).unwrap();
        let h_s = model.mass_matrix_redundant(&q).unwrap();
        let sd = state.velocities();
        let from_matrix = 0.5 * sd.dot(&(&h_s * &sd));
        assert_relative_eq!(from_matrix, model.kinetic_energy(&state).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn gravity_matches_potential_gradient() {
        let model = leg(true);
        let q = leg_pose(&model);
        let c = model.bias_forces(&q, &DVector::zeros(model.dof())).unwrap();
        let h = 1e-6;
        for i in 0..model.dof() {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            let grad = (model.potential_energy(&qp).unwrap() - model.potential_energy(&qm).unwrap()) / (2.0 * h);
            assert!(
                (grad - c[i]).abs() <= 1e-6 * grad.abs().max(1.0),
                "coordinate {i}: fd {grad} vs {}",
                c[i]
            );
        }
    }

    #[test]
    fn zero_velocity_zero_gravity_bias_vanishes() {
        let mut model = leg(true);
        model.gravity = 0.0;
        let c_s = model
            .bias_forces_redundant(&leg_pose(&model), &DVector::zeros(5))
            .unwrap();
        assert_eq!(c_s.amax(), 0.0);
        assert_eq!(c_s.len(), 7);
    }

    #[test]
    fn coriolis_power_equals_half_mass_matrix_rate() {
        // qd' C qd = 1/2 qd' Hdot qd (Hdot - 2C is skew)
        let model = leg(true);
        let q = leg_pose(&model);
        let qd = dvector![0.4, 0.2, -0.9, 1.7, -2.3];
        let c = model.coriolis_forces(&q, &qd).unwrap();
        let h = 1e-6;
        let hp = model.mass_matrix(&(&q + &qd * h)).unwrap();
        let hm = model.mass_matrix(&(&q - &qd * h)).unwrap();
        let hdot = (hp - hm) / (2.0 * h);
        let lhs = qd.dot(&c);
        let rhs = 0.5 * qd.dot(&(&hdot * &qd));
        assert!((lhs - rhs).abs() <= 1e-7 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn single_link_contact_jacobian() {
        let model = one_link(1.0, 0.7, 0.0);
        let j = model.contact_jacobian(&dvector![0.0]).unwrap();
        assert!((j[(0, 0)]).abs() < 1e-15);
        assert_relative_eq!(j[(1, 0)], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn contact_jacobian_matches_finite_differences() {
        for floating in [false, true] {
            let model = leg(floating);
            let q = leg_pose(&model);
            let j = model.contact_jacobian(&q).unwrap();
            let h = 1e-6;
            for i in 0..model.dof() {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[i] += h;
                qm[i] -= h;
                let col = (model.contact_point(&qp).unwrap() - model.contact_point(&qm).unwrap()) / (2.0 * h);
                assert!((col.x - j[(0, i)]).abs() < 1e-7);
                assert!((col.y - j[(1, i)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn extended_leg_is_singular() {
        let model = leg(false);
        assert!(model.is_singular(&dvector![0.4, 0.0]).unwrap());
        assert!(!model.is_singular(&dvector![FRAC_PI_3, FRAC_PI_3]).unwrap());
    }

    #[test]
    fn rotor_state_follows_constraint() {
        let model = leg(true);
        let s = SystemState::from_joints(&model, leg_pose(&model), DVector::from_element(5, 0.1)).unwrap();
        assert!(s.constraint_residual(&model) < 1e-12);
        assert_relative_eq!(s.phid[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(PlanarBody::new(1.0, 0.3, 0.5, 0.0).is_err());
        assert!(PlanarBody::new(-1.0, 0.3, 0.1, 0.0).is_err());
        let t = TransmissionSet::serial(vec![1.0], vec![1.0], vec![1.0]).unwrap();
        let rod = PlanarBody::uniform_rod(1.0, 1.0).unwrap();
        assert!(RobotModel::new(None, vec![rod, rod], vec![0.0, 0.0], t.clone()).is_err());
        assert!(RobotModel::new(None, vec![rod], vec![0.0, 0.0], t.clone()).is_err());
        assert!(RobotModel::new(None, vec![rod], vec![-1.0], t).is_err());
    }
}
