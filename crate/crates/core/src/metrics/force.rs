use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use super::MetricVariant;
use crate::eom::check_condition;
use crate::error::{Error, Result};
use crate::rigid_body::RobotModel;
use crate::transmission::{constraint_matrices, efficiency_matrices, FlowAssignment};
use crate::wedge::FlowDirection;

/// Per-rotor torque box `lower_i <= tau_phi_i <= upper_i` (N m).
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TorqueBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch("torque bound vectors differ in length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidParameter("torque bounds need finite lower <= upper".into()));
        }
        Ok(TorqueBounds { lower, upper })
    }

    pub fn symmetric(limits: &[f64]) -> Result<Self> {
        TorqueBounds::new(limits.iter().map(|l| -l).collect(), limits.to_vec())
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    fn corners(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        let m = self.len();
        (0..1usize << m).map(move |mask| {
            DVector::from_fn(m, |i, _| {
                if mask >> i & 1 == 0 {
                    self.lower[i]
                } else {
                    self.upper[i]
                }
            })
        })
    }
}

/// Convex set of task-space forces given as vertices. In two dimensions the
/// vertices are the counter-clockwise hull; in one dimension they are the
/// interval end points.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcePolytope {
    pub vertices: Vec<DVector<f64>>,
    pub variant: MetricVariant,
    pub dim: usize,
}

impl ForcePolytope {
    fn from_points(points: Vec<DVector<f64>>, dim: usize, variant: MetricVariant) -> Self {
        let vertices = match dim {
            1 => {
                let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                if lo == hi {
                    vec![DVector::from_element(1, lo)]
                } else {
                    vec![DVector::from_element(1, lo), DVector::from_element(1, hi)]
                }
            }
            2 => hull_2d(points),
            _ => {
                let mut out: Vec<DVector<f64>> = Vec::new();
                for p in points {
                    if !out.iter().any(|v| (v - &p).amax() <= 1e-12) {
                        out.push(p);
                    }
                }
                out
            }
        };
        ForcePolytope {
            vertices,
            variant,
            dim,
        }
    }

    /// `max n' f` over the polytope.
    pub fn support(&self, n: &DVector<f64>) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot(n))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership with tolerance `tol` (N). Only one- and two-dimensional sets.
    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> Result<bool> {
        match self.dim {
            1 => {
                let n = DVector::from_element(1, 1.0);
                let hi = self.support(&n);
                let lo = -self.support(&-n);
                Ok(p[0] >= lo - tol && p[0] <= hi + tol)
            }
            2 => {
                let k = self.vertices.len();
                if k < 3 {
                    return Ok(segment_distance(&self.vertices, p) <= tol);
                }
                Ok((0..k).all(|i| {
                    let a = &self.vertices[i];
                    let b = &self.vertices[(i + 1) % k];
                    let e = b - a;
                    let len = e.norm();
                    let cross = e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0]);
                    cross >= -tol * len
                }))
            }
            d => Err(Error::Precondition(format!(
                "containment is implemented for 1-D and 2-D sets, not {d}-D"
            ))),
        }
    }

    /// Whether every vertex of `other` lies in `self`.
    pub fn contains_polytope(&self, other: &ForcePolytope, tol: f64) -> Result<bool> {
        for v in &other.vertices {
            if !self.contains(v, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Area of a 2-D polytope, length of a 1-D one.
    pub fn measure(&self) -> Result<f64> {
        match self.dim {
            1 => Ok(self.vertices.last().unwrap()[0] - self.vertices[0][0]),
            2 => {
                let k = self.vertices.len();
                let twice: f64 = (0..k)
                    .map(|i| {
                        let a = &self.vertices[i];
                        let b = &self.vertices[(i + 1) % k];
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum();
                Ok(0.5 * twice.abs())
            }
            d => Err(Error::Precondition(format!("no measure for {d}-D sets"))),
        }
    }
}

fn segment_distance(vs: &[DVector<f64>], p: &DVector<f64>) -> f64 {
    match vs {
        [a] => (p - a).norm(),
        [a, b] => {
            let e = b - a;
            let t = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
            (p - (a + e * t)).norm()
        }
        _ => f64::INFINITY,
    }
}

/// Andrew's monotone chain, counter-clockwise, collinear points dropped.
fn hull_2d(mut pts: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (&*a - &*b).amax() <= 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    let eps = 1e-12 * scale * scale;
    let cross = |o: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<DVector<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<DVector<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// `B_m E_m` for the variant's efficiencies.
fn actuation(model: &RobotModel, variant: MetricVariant) -> Result<DMatrix<f64>> {
    let t = &model.transmissions;
    let flow = match variant {
        MetricVariant::Conventional => FlowAssignment::conservative(t.joint_count()),
        MetricVariant::Forward => FlowAssignment::uniform(t, FlowDirection::Fwd),
        MetricVariant::Backward => FlowAssignment::uniform(t, FlowDirection::Bwd),
    };
    let cm = constraint_matrices(0, t)?;
    let (_, e_m) = efficiency_matrices(&flow, 0);
    Ok(cm.b_m * e_m)
}

fn check_bounds(model: &RobotModel, bounds: &TorqueBounds) -> Result<()> {
    if bounds.len() != model.joint_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} torque bounds for {} rotors",
            bounds.len(),
            model.joint_count()
        )));
    }
    Ok(())
}

/// Closed-form capability `J_m^-T B_m E_m box(tau_phi)` at the contact point.
/// Needs a square, invertible limb Jacobian.
pub fn force_capability(
    model: &RobotModel,
    q: &DVector<f64>,
    bounds: &TorqueBounds,
    variant: MetricVariant,
) -> Result<ForcePolytope> {
    let jm = model.limb_jacobian(q)?;
    zonotope(model, &jm, bounds, variant)
}

pub(crate) fn zonotope(
    model: &RobotModel,
    jm: &DMatrix<f64>,
    bounds: &TorqueBounds,
    variant: MetricVariant,
) -> Result<ForcePolytope> {
    check_bounds(model, bounds)?;
    if !jm.is_square() || jm.ncols() != model.joint_count() {
        return Err(Error::SingularPose(format!(
            "closed-form force capability needs a square limb Jacobian, got {}x{}",
            jm.nrows(),
            jm.ncols()
        )));
    }
    check_condition(jm, "limb Jacobian")?;
    let jm_inv_t = jm
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::SingularPose("limb Jacobian is singular".into()))?;
    let map = jm_inv_t * actuation(model, variant)?;
    let points = bounds.corners().map(|tau| &map * tau).collect();
    Ok(ForcePolytope::from_points(points, jm.nrows(), variant))
}

/// Largest `n' f` subject to `J_m' f = B_m E_m tau`, `tau` in the box.
/// Returns the maximizer, or `None` with an infinite value when unbounded.
pub fn support_lp(
    jm: &DMatrix<f64>,
    actuation: &DMatrix<f64>,
    bounds: &TorqueBounds,
    n: &DVector<f64>,
) -> Result<(f64, Option<DVector<f64>>)> {
    let (dim, m) = jm.shape();
    if n.len() != dim || actuation.shape() != (m, m) || bounds.len() != m {
        return Err(Error::DimensionMismatch(
            "direction, Jacobian, actuation map and bounds disagree".into(),
        ));
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    // free variables as differences of non-negative parts
    let f: Vec<_> = (0..dim)
        .map(|k| (lp.add_var(n[k], (0.0, f64::INFINITY)), lp.add_var(-n[k], (0.0, f64::INFINITY))))
        .collect();
    let tau: Vec<_> = (0..m)
        .map(|i| lp.add_var(0.0, (bounds.lower[i], bounds.upper[i])))
        .collect();
    for i in 0..m {
        let mut row: Vec<_> = (0..dim)
            .flat_map(|k| [(f[k].0, jm[(k, i)]), (f[k].1, -jm[(k, i)])])
            .collect();
        row.extend((0..m).map(|j| (tau[j], -actuation[(i, j)])));
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
    }
    match lp.solve() {
        Ok(sol) => {
            let arg = DVector::from_fn(dim, |k, _| sol[f[k].0] - sol[f[k].1]);
            Ok((sol.objective(), Some(arg)))
        }
        Err(minilp::Error::Unbounded) => Ok((f64::INFINITY, None)),
        Err(minilp::Error::Infeasible) => Err(Error::Numeric(
            "force capability program is infeasible".into(),
        )),
    }
}

/// Capability polytope from `directions` support points found by linear
/// programming. Works for non-square limb Jacobians as long as the set is
/// bounded.
pub fn force_capability_lp(
    model: &RobotModel,
    q: &DVector<f64>,
    bounds: &TorqueBounds,
    variant: MetricVariant,
    directions: usize,
) -> Result<ForcePolytope> {
    check_bounds(model, bounds)?;
    let jm = model.limb_jacobian(q)?;
    let act = actuation(model, variant)?;
    let dim = jm.nrows();
    if dim != 2 {
        return Err(Error::Precondition("sampled LP capability is planar only".into()));
    }
    let count = directions.max(3);
    let mut points = Vec::with_capacity(count);
    for k in 0..count {
        let a = std::f64::consts::TAU * k as f64 / count as f64;
        let n = DVector::from_vec(vec![a.cos(), a.sin()]);
        match support_lp(&jm, &act, bounds, &n)? {
            (_, Some(f)) => points.push(f),
            (_, None) => {
                return Err(Error::SingularPose(
                    "force capability is unbounded at this pose".into(),
                ))
            }
        }
    }
    Ok(ForcePolytope::from_points(points, dim, variant))
}

/// Closed form when possible; otherwise the LP route with `lp_directions`
/// samples, if given.
pub fn force_capability_with(
    model: &RobotModel,
    q: &DVector<f64>,
    bounds: &TorqueBounds,
    variant: MetricVariant,
    lp_directions: Option<usize>,
) -> Result<ForcePolytope> {
    match (force_capability(model, q, bounds, variant), lp_directions) {
        (Ok(p), _) => Ok(p),
        (Err(Error::SingularPose(_)), Some(k)) => force_capability_lp(model, q, bounds, variant, k),
        (Err(e), _) => Err(e),
    }
}
