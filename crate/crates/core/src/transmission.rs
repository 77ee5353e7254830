//! Speed reductions, actuation topologies and the constraint machinery that
//! couples rotor angles to joint angles.
//!
//! Rotor angles `phi` map to motor (post-gearbox) angles `psi = R phi` with
//! `R = diag(1/N_i)`, and motor angles map to joint angles `q = D psi`. The
//! redundant coordinates of a robot with `b` base DoF and `m` geared joints are
//! `s = (q_b, q_m, phi_m)`, constrained by `q_m = D R phi_m`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::wedge::FlowDirection;

/// Largest accepted condition number of `D R`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSet {
    ratios: Vec<f64>,
    forward: Vec<f64>,
    backward: Vec<f64>,
    topology: DMatrix<f64>,
}

impl TransmissionSet {
    pub fn new(
        ratios: Vec<f64>,
        forward: Vec<f64>,
        backward: Vec<f64>,
        topology: DMatrix<f64>,
    ) -> Result<Self> {
        let m = ratios.len();
        if m == 0 {
            return Err(Error::InvalidParameter("at least one transmission is required".into()));
        }
        if forward.len() != m || backward.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{m} gear ratios but {} forward and {} backward efficiencies",
                forward.len(),
                backward.len()
            )));
        }
        if topology.nrows() != m || topology.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "topology must be {m}x{m}, got {}x{}",
                topology.nrows(),
                topology.ncols()
            )));
        }
        for (i, &n) in ratios.iter().enumerate() {
            if !(n >= 1.0 && n.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gear ratio {i} must be >= 1, got {n}"
                )));
            }
        }
        for (i, (&f, &b)) in forward.iter().zip(&backward).enumerate() {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "forward efficiency {i} must lie in (0, 1], got {f}"
                )));
            }
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "backward efficiency {i} must lie in (0, 1], got {b}"
                )));
            }
        }
        if topology.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("topology has non-finite entries".into()));
        }
        let t = TransmissionSet {
            ratios,
            forward,
            backward,
            topology,
        };
        check_conditioning(&t.motor_to_joint())?;
        Ok(t)
    }

    /// Motors mounted directly on the joints (`D = I`).
    pub fn serial(ratios: Vec<f64>, forward: Vec<f64>, backward: Vec<f64>) -> Result<Self> {
        let m = ratios.len();
        Self::new(ratios, forward, backward, DMatrix::identity(m, m))
    }

    /// Same ratios and topology with every efficiency set to one.
    pub fn lossless(&self) -> Self {
        let m = self.joint_count();
        TransmissionSet {
            forward: vec![1.0; m],
            backward: vec![1.0; m],
            ..self.clone()
        }
    }

    /// Same ratios and topology with new efficiencies.
    pub fn with_efficiencies(&self, forward: Vec<f64>, backward: Vec<f64>) -> Result<Self> {
        Self::new(self.ratios.clone(), forward, backward, self.topology.clone())
    }

    pub fn joint_count(&self) -> usize {
        self.ratios.len()
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn forward(&self) -> &[f64] {
        &self.forward
    }

    pub fn backward(&self) -> &[f64] {
        &self.backward
    }

    pub fn topology(&self) -> &DMatrix<f64> {
        &self.topology
    }

    /// `R = diag(1/N_i)`.
    pub fn reduction(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.ratios.len(),
            self.ratios.iter().map(|n| 1.0 / n),
        ))
    }

    /// `D R`: rotor displacement to joint displacement.
    pub fn motor_to_joint(&self) -> DMatrix<f64> {
        &self.topology * self.reduction()
    }

    /// `B_m = (D R)^-T`, rotor torque to generalized joint force.
    pub fn distribution(&self) -> Result<DMatrix<f64>> {
        let dr = self.motor_to_joint();
        let inv = invert_checked(&dr)?;
        Ok(inv.transpose())
    }

    pub fn is_lossless(&self) -> bool {
        self.forward.iter().chain(&self.backward).all(|&e| e == 1.0)
    }
}

fn check_conditioning(m: &DMatrix<f64>) -> Result<()> {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > 0.0) || max / min > MAX_CONDITION {
        return Err(Error::SingularTopology(format!(
            "D R has condition number {:e}",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    Ok(())
}

fn invert_checked(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_conditioning(m)?;
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularTopology("D R is not invertible".into()))
}

/// Per-coupling flow directions and the efficiencies they select.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    directions: Vec<FlowDirection>,
    effective: Vec<f64>,
}

impl FlowAssignment {
    /// Entry `i` is `eta_f_i` for forward couplings and `1/eta_b_i` for backward ones.
    pub fn new(t: &TransmissionSet, directions: Vec<FlowDirection>) -> Result<Self> {
        if directions.len() != t.joint_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} flow directions for {} couplings",
                directions.len(),
                t.joint_count()
            )));
        }
        let effective = directions
            .iter()
            .enumerate()
            .map(|(i, d)| match d {
                FlowDirection::Fwd => t.forward[i],
                FlowDirection::Bwd => 1.0 / t.backward[i],
            })
            .collect();
        Ok(FlowAssignment {
            directions,
            effective,
        })
    }

    /// Whole-system forward or backward driving.
    pub fn uniform(t: &TransmissionSet, dir: FlowDirection) -> Self {
        Self::new(t, vec![dir; t.joint_count()]).expect("length matches by construction")
    }

    /// Unit efficiencies on every coupling: the conventional, lossless dynamics.
    /// Directions are reported as forward.
    pub fn conservative(m: usize) -> Self {
        FlowAssignment {
            directions: vec![FlowDirection::Fwd; m],
            effective: vec![1.0; m],
        }
    }

    pub fn directions(&self) -> &[FlowDirection] {
        &self.directions
    }

    pub fn effective(&self) -> &[f64] {
        &self.effective
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrices {
    /// `A = [0 | I | -D R]`, `m x (b + 2m)`.
    pub a: DMatrix<f64>,
    /// Null-space basis with `ds = K dq`, `(b + 2m) x (b + m)`.
    pub k: DMatrix<f64>,
    /// `B_m = (D R)^-T`.
    pub b_m: DMatrix<f64>,
}

pub fn constraint_matrices(base_dof: usize, t: &TransmissionSet) -> Result<ConstraintMatrices> {
    let m = t.joint_count();
    let b = base_dof;
    let dr = t.motor_to_joint();
    let dr_inv = invert_checked(&dr)?;

    let mut a = DMatrix::zeros(m, b + 2 * m);
    a.view_mut((0, b), (m, m)).fill_with_identity();
    a.view_mut((0, b + m), (m, m)).copy_from(&(-&dr));

    let mut k = DMatrix::zeros(b + 2 * m, b + m);
    k.view_mut((0, 0), (b + m, b + m)).fill_with_identity();
    k.view_mut((b + m, b), (m, m)).copy_from(&dr_inv);

    Ok(ConstraintMatrices {
        a,
        k,
        b_m: dr_inv.transpose(),
    })
}

/// `(E_s, E_m)`: `E_s = diag(1, ..., 1, eta_1, ..., eta_m)` of size `b + 2m` and
/// `E_m = diag(eta_1, ..., eta_m)`, with `eta_i` the effective efficiencies of `flow`.
pub fn efficiency_matrices(flow: &FlowAssignment, base_dof: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = flow.len();
    let mut diag = vec![1.0; base_dof + m];
    diag.extend_from_slice(flow.effective());
    let e_s = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let e_m = DMatrix::from_diagonal(&DVector::from_column_slice(flow.effective()));
    (e_s, e_m)
}

/// Backward efficiency as a function of forward efficiency.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EfficiencyMap {
    /// `eta_b = max(0, 2 - 1/eta_f)`. An approximation: zero at `eta_f = 0.5`,
    /// one at `eta_f = 1`.
    #[default]
    Reciprocal,
    /// Linear interpolation over `(eta_f, eta_b)` pairs sorted by `eta_f`.
    Table(Vec<(f64, f64)>),
}

impl EfficiencyMap {
    pub fn table(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "an efficiency table needs at least two points".into(),
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate eta_f {} in efficiency table",
                    w[0].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidParameter(
                    "efficiency table must be non-decreasing in eta_b".into(),
                ));
            }
        }
        if points
            .iter()
            .any(|&(f, b)| !(f > 0.0 && f <= 1.0) || !(0.0..=1.0).contains(&b))
        {
            return Err(Error::InvalidParameter(
                "efficiency table entries must lie in (0, 1] x [0, 1]".into(),
            ));
        }
        Ok(EfficiencyMap::Table(points))
    }

    pub fn is_approximate(&self) -> bool {
        matches!(self, EfficiencyMap::Reciprocal)
    }
}

pub fn backward_from_forward(eta_f: f64, map: &EfficiencyMap) -> Result<f64> {
    if !(eta_f > 0.0 && eta_f <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "forward efficiency must lie in (0, 1], got {eta_f}"
        )));
    }
    match map {
        EfficiencyMap::Reciprocal => Ok((2.0 - 1.0 / eta_f).max(0.0)),
        EfficiencyMap::Table(points) => {
            let (first, last) = (points[0], points[points.len() - 1]);
            if eta_f < first.0 || eta_f > last.0 {
                return Err(Error::InvalidParameter(format!(
                    "eta_f = {eta_f} outside tabulated range [{}, {}]",
                    first.0, last.0
                )));
            }
            let i = points.partition_point(|p| p.0 < eta_f);
            if i == 0 {
                return Ok(first.1);
            }
            let (lo, hi) = (points[i - 1], points[i]);
            let w = (eta_f - lo.0) / (hi.0 - lo.0);
            Ok(lo.1 + w * (hi.1 - lo.1))
        }
    }
}

/// The chain `dphi -R-> dpsi -D-> dq -J-> dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateChain {
    pub reduction: DMatrix<f64>,
    pub topology: DMatrix<f64>,
    pub task: DMatrix<f64>,
    /// `J D R`.
    pub composed: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDisplacements {
    pub motor: DVector<f64>,
    pub joint: DVector<f64>,
    pub task: DVector<f64>,
}

impl CoordinateChain {
    pub fn apply(&self, rotor: &DVector<f64>) -> Result<ChainDisplacements> {
        if rotor.len() != self.reduction.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "rotor displacement has {} entries, expected {}",
                rotor.len(),
                self.reduction.ncols()
            )));
        }
        let motor = &self.reduction * rotor;
        let joint = &self.topology * &motor;
        let task = &self.task * &joint;
        Ok(ChainDisplacements { motor, joint, task })
    }
}

/// `task` is the Jacobian over the joint coordinates (`n x m`).
pub fn coordinate_chain(t: &TransmissionSet, task: &DMatrix<f64>) -> Result<CoordinateChain> {
    let m = t.joint_count();
    if task.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "task Jacobian has {} columns, expected {m}",
            task.ncols()
        )));
    }
    let reduction = t.reduction();
    let composed = task * t.topology() * &reduction;
    Ok(CoordinateChain {
        reduction,
        topology: t.topology().clone(),
        task: task.clone(),
        composed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    fn parallelogram(n1: f64, n2: f64) -> TransmissionSet {
        TransmissionSet::new(
            vec![n1, n2],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            dmatrix![1.0, 0.0; -1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn serial_identity_constraints() {
        let t = TransmissionSet::serial(vec![1.0, 1.0], vec![1.0; 2], vec![1.0; 2]).unwrap();
        let c = constraint_matrices(0, &t).unwrap();
        assert_eq!(c.a, dmatrix![1.0, 0.0, -1.0, 0.0; 0.0, 1.0, 0.0, -1.0]);
        assert_eq!(c.b_m, DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn parallelogram_distribution() {
        let c = constraint_matrices(0, &parallelogram(20.0, 20.0)).unwrap();
        let expected = dmatrix![20.0, 20.0; 0.0, 20.0];
        assert!((c.b_m - expected).amax() < 1e-12);
    }

    #[test]
    fn parallelogram_null_space_with_base() {
        let c = constraint_matrices(3, &parallelogram(7.0, 33.0)).unwrap();
        assert!((&c.a * &c.k).amax() < 1e-12);
        assert_eq!(c.k.clone().rank(1e-10), 5);
    }

    #[test]
    fn singular_topology_rejected() {
        let err = TransmissionSet::new(
            vec![2.0, 2.0],
            vec![1.0; 2],
            vec![1.0; 2],
            dmatrix![1.0, 1.0; 1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularTopology(_)));
        let near = TransmissionSet::new(
            vec![1.0, 1.0],
            vec![1.0; 2],
            vec![1.0; 2],
            dmatrix![1.0, 1.0; 1.0, 1.0 + 1e-14],
        );
        assert!(matches!(near, Err(Error::SingularTopology(_))));
    }

    #[test]
    fn invalid_efficiencies_rejected() {
        assert!(TransmissionSet::serial(vec![0.5], vec![1.0], vec![1.0]).is_err());
        assert!(TransmissionSet::serial(vec![2.0], vec![0.0], vec![1.0]).is_err());
        assert!(TransmissionSet::serial(vec![2.0], vec![0.9], vec![0.0]).is_err());
        assert!(TransmissionSet::serial(vec![2.0], vec![0.9], vec![1.1]).is_err());
    }

    #[test]
    fn efficiency_matrix_examples() {
        let t = TransmissionSet::serial(vec![20.0; 2], vec![1.0; 2], vec![1.0; 2]).unwrap();
        let (e_s, _) = efficiency_matrices(&FlowAssignment::uniform(&t, FlowDirection::Bwd), 3);
        assert_eq!(e_s, DMatrix::identity(7, 7));

        let t = TransmissionSet::serial(vec![20.0; 2], vec![0.8, 0.7], vec![0.75, 0.6]).unwrap();
        let (e_s, e_m) = efficiency_matrices(&FlowAssignment::uniform(&t, FlowDirection::Fwd), 3);
        let diag: Vec<f64> = e_s.diagonal().iter().copied().collect();
        assert_eq!(diag, vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.8, 0.7]);
        assert_eq!(e_m, dmatrix![0.8, 0.0; 0.0, 0.7]);

        let t = TransmissionSet::serial(vec![5.0], vec![0.9], vec![0.75]).unwrap();
        let (_, e_m) = efficiency_matrices(&FlowAssignment::uniform(&t, FlowDirection::Bwd), 0);
        assert_relative_eq!(e_m[(0, 0)], 4.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn mixed_flow_assignment() {
        let t = TransmissionSet::serial(vec![20.0; 2], vec![0.8, 0.7], vec![0.75, 0.5]).unwrap();
        let f = FlowAssignment::new(&t, vec![FlowDirection::Fwd, FlowDirection::Bwd]).unwrap();
        assert_eq!(f.effective(), &[0.8, 2.0]);
        assert!(FlowAssignment::new(&t, vec![FlowDirection::Fwd]).is_err());
    }

    #[test]
    fn default_map_examples() {
        let map = EfficiencyMap::default();
        assert_eq!(backward_from_forward(1.0, &map).unwrap(), 1.0);
        assert_relative_eq!(backward_from_forward(0.8, &map).unwrap(), 0.75, epsilon = 1e-15);
        assert_eq!(backward_from_forward(0.5, &map).unwrap(), 0.0);
        assert_eq!(backward_from_forward(0.3, &map).unwrap(), 0.0);
        assert!(backward_from_forward(0.0, &map).is_err());
        assert!(backward_from_forward(1.2, &map).is_err());
    }

    #[test]
    fn tabulated_map_interpolates() {
        let map = EfficiencyMap::table(vec![(1.0, 1.0), (0.499, 0.0), (0.8, 0.7)]).unwrap();
        assert_relative_eq!(backward_from_forward(0.9, &map).unwrap(), 0.85, epsilon = 1e-12);
        assert_eq!(backward_from_forward(0.499, &map).unwrap(), 0.0);
        assert_eq!(backward_from_forward(1.0, &map).unwrap(), 1.0);
        assert!(backward_from_forward(0.4, &map).is_err());
        assert!(EfficiencyMap::table(vec![(0.6, 0.5), (0.9, 0.2)]).is_err());
    }

    #[test]
    fn coordinate_chain_examples() {
        let t = TransmissionSet::serial(vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]).unwrap();
        let chain = coordinate_chain(&t, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(chain.composed, DMatrix::identity(2, 2));

        let chain = coordinate_chain(&parallelogram(20.0, 20.0), &DMatrix::identity(2, 2)).unwrap();
        let d = chain.apply(&DVector::from_vec(vec![20.0, 0.0])).unwrap();
        assert!((d.joint - DVector::from_vec(vec![1.0, -1.0])).amax() < 1e-15);

        let t = TransmissionSet::serial(vec![20.0; 2], vec![1.0; 2], vec![1.0; 2]).unwrap();
        let chain = coordinate_chain(&t, &DMatrix::identity(2, 2)).unwrap();
        let d = chain.apply(&DVector::from_vec(vec![20.0, 20.0])).unwrap();
        assert!((d.joint - DVector::from_vec(vec![1.0, 1.0])).amax() < 1e-15);
        assert!(chain.apply(&DVector::zeros(3)).is_err());
        assert!(coordinate_chain(&t, &DMatrix::identity(2, 3)).is_err());
    }

    fn random_set() -> impl Strategy<Value = TransmissionSet> {
        (1usize..=6)
            .prop_flat_map(|m| {
                (
                    proptest::collection::vec(1.0f64..100.0, m),
                    proptest::collection::vec(-1.0f64..1.0, m * m),
                )
            })
            .prop_filter_map("well conditioned", |(ratios, entries)| {
                let m = ratios.len();
                // diagonal shift keeps most draws invertible
                let d = DMatrix::from_row_slice(m, m, &entries) + DMatrix::identity(m, m) * 1.5;
                TransmissionSet::new(ratios, vec![1.0; m], vec![1.0; m], d).ok()
            })
    }

    proptest! {
        #[test]
        fn null_space_annihilates_constraint(t in random_set(), b in prop_oneof![Just(0usize), Just(3usize)]) {
            let c = constraint_matrices(b, &t).unwrap();
            let m = t.joint_count();
            prop_assert!((&c.a * &c.k).amax() <= 1e-12 * (1.0 + c.k.amax()));
            prop_assert_eq!(c.k.clone().rank(1e-12), b + m);
            let check = c.b_m.transpose() * t.motor_to_joint();
            prop_assert!((check - DMatrix::identity(m, m)).amax() <= 1e-10);
        }

        #[test]
        fn default_map_is_monotone(a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
            let map = EfficiencyMap::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(backward_from_forward(lo, &map).unwrap() <= backward_from_forward(hi, &map).unwrap());
        }
    }
}
