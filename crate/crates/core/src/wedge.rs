//! One-degree-of-freedom wedge-block model of a geared transmission.
//!
//! A block of mass `M` sits on a wedge of mass `m` with incline `alpha`. The
//! block coordinate `x` and wedge coordinate `u` are tied by `x = u cos(alpha)`,
//! so `1/cos(alpha)` plays the role of a gear ratio `N >= 1`. Sliding friction
//! between the two makes the reduced dynamics depend on which side delivers
//! power: pushing the wedge drives the block forward ([`FlowDirection::Fwd`]),
//! pushing the block backdrives the wedge ([`FlowDirection::Bwd`]).
//!
//! Sign convention: `f_x` acts along `+x` on the block, `f_u` pushes the wedge
//! toward `-u`. With this convention a positive `f_u` moves the block in `-x`,
//! which is how the reduced equations below are written.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Direction of energy flow through a transmission coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowDirection {
    /// Rotor (or wedge) drives the output.
    Fwd,
    /// The output backdrives the rotor (or wedge).
    Bwd,
}

impl FlowDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowDirection::Fwd => "fwd",
            FlowDirection::Bwd => "bwd",
        }
    }
}

impl std::str::FromStr for FlowDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fwd" | "forward" => Ok(FlowDirection::Fwd),
            "bwd" | "backward" => Ok(FlowDirection::Bwd),
            other => Err(Error::InvalidParameter(format!(
                "unknown flow direction `{other}` (expected fwd or bwd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeParams {
    /// Block mass `M` (kg).
    pub block_mass: f64,
    /// Wedge mass `m` (kg).
    pub wedge_mass: f64,
    /// Incline `alpha` (rad), in `[0, pi/2)`.
    pub incline: f64,
    /// Coulomb friction coefficient `mu`.
    pub friction: f64,
}

impl WedgeParams {
    pub fn new(block_mass: f64, wedge_mass: f64, incline: f64, friction: f64) -> Result<Self> {
        if !(block_mass > 0.0 && block_mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "block mass must be positive, got {block_mass}"
            )));
        }
        if !(wedge_mass > 0.0 && wedge_mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wedge mass must be positive, got {wedge_mass}"
            )));
        }
        if !(0.0..FRAC_PI_2).contains(&incline) {
            return Err(Error::InvalidParameter(format!(
                "incline must lie in [0, pi/2), got {incline}"
            )));
        }
        if !(friction >= 0.0 && friction.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "friction coefficient must be non-negative, got {friction}"
            )));
        }
        Ok(WedgeParams {
            block_mass,
            wedge_mass,
            incline,
            friction,
        })
    }

    /// Mechanical advantage `1/cos(alpha)`, the gear-ratio analogue.
    pub fn gear_ratio(&self) -> f64 {
        1.0 / self.incline.cos()
    }

    fn mu_tan(&self) -> f64 {
        self.friction * self.incline.tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeEfficiencies {
    /// `1 - mu tan(alpha)`; may be non-positive, see [`is_forward_locked`](Self::is_forward_locked).
    pub forward: f64,
    /// `1 / (1 + mu tan(alpha))`.
    pub backward: f64,
}

impl WedgeEfficiencies {
    /// Pushing the wedge can no longer move the block.
    pub fn is_forward_locked(&self) -> bool {
        self.forward <= 0.0
    }

    /// Efficiency that enters the reduced dynamics for `dir`: `eta_f` forward,
    /// `1/eta_b` backward.
    pub fn effective(&self, dir: FlowDirection) -> f64 {
        match dir {
            FlowDirection::Fwd => self.forward,
            FlowDirection::Bwd => 1.0 / self.backward,
        }
    }
}

pub fn efficiencies(p: &WedgeParams) -> WedgeEfficiencies {
    let k = p.mu_tan();
    WedgeEfficiencies {
        forward: 1.0 - k,
        backward: 1.0 / (1.0 + k),
    }
}

/// Block acceleration of the reduced 1-DoF model for the given flow direction.
///
/// `(M + eta m / cos^2 alpha) xdd = f_x - eta f_u / cos(alpha)` with
/// `eta = eta_f` forward and `eta = 1/eta_b` backward.
pub fn reduced_acceleration(p: &WedgeParams, dir: FlowDirection, f_x: f64, f_u: f64) -> f64 {
    let eta = efficiencies(p).effective(dir);
    let cos = p.incline.cos();
    let f_u_hat = f_u / cos;
    (f_x - eta * f_u_hat) / (p.block_mass + eta * p.wedge_mass / (cos * cos))
}

/// Coefficient `c` of the mechanical impedance `X(s) = c s`.
///
/// Forward: `M/eta_f + m/cos^2 alpha` (input `f_u/cos alpha`, output `xd`).
/// Backward: `M + m/(eta_b cos^2 alpha)` (input `f_x`).
pub fn impedance_coefficient(p: &WedgeParams, dir: FlowDirection) -> Result<f64> {
    let eff = efficiencies(p);
    let cos2 = p.incline.cos().powi(2);
    match dir {
        FlowDirection::Fwd => {
            if eff.is_forward_locked() {
                return Err(Error::ForwardLocked { eta_f: eff.forward });
            }
            Ok(p.block_mass / eff.forward + p.wedge_mass / cos2)
        }
        FlowDirection::Bwd => Ok(p.block_mass + p.wedge_mass / (eff.backward * cos2)),
    }
}

/// Positions and velocities of the redundant wedge-block coordinates `s = (x, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WedgeState {
    pub x: f64,
    pub u: f64,
    pub xd: f64,
    pub ud: f64,
}

impl WedgeState {
    /// State at `x = u cos(alpha)` moving with block velocity `xd`.
    pub fn consistent(p: &WedgeParams, x: f64, xd: f64) -> Self {
        let sec = p.gear_ratio();
        WedgeState {
            x,
            u: x * sec,
            xd,
            ud: xd * sec,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeSimConfig {
    pub dt: f64,
    pub steps: usize,
    /// Velocity scale `eps` of the `tanh(ud/eps)` friction regularization (m/s).
    pub friction_width: f64,
    pub initial: WedgeState,
}

impl Default for WedgeSimConfig {
    fn default() -> Self {
        WedgeSimConfig {
            dt: 1e-4,
            steps: 10_000,
            friction_width: 1e-5,
            initial: WedgeState::default(),
        }
    }
}

/// One recorded step of the redundant simulation. Accelerations, multiplier
/// and friction are those evaluated at the recorded state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeSample {
    pub t: f64,
    pub state: WedgeState,
    pub xdd: f64,
    pub udd: f64,
    /// Normal-force multiplier `lambda`.
    pub lambda: f64,
    /// Dissipative force on the wedge coordinate.
    pub friction: f64,
    /// Resolved flow direction; `None` while the wedge is exactly at rest.
    pub direction: Option<FlowDirection>,
    /// Meshing force `r = H_s sdd - f`.
    pub meshing: [f64; 2],
}

struct WedgeEval {
    xdd: f64,
    udd: f64,
    lambda: f64,
    friction: f64,
    direction: Option<FlowDirection>,
}

/// Friction gain applied to `|lambda|` so the sliding contact reproduces the
/// efficiency of `dir`. Forward: `cos(a)(1/eta_f - 1)`; backward: `cos(a)(1 - eta_b)`.
fn friction_gain(p: &WedgeParams, eff: &WedgeEfficiencies, dir: FlowDirection) -> f64 {
    let cos = p.incline.cos();
    match dir {
        FlowDirection::Fwd => cos * (1.0 / eff.forward - 1.0),
        FlowDirection::Bwd => cos * (1.0 - eff.backward),
    }
}

fn evaluate(
    p: &WedgeParams,
    eff: &WedgeEfficiencies,
    s: &WedgeState,
    f_x: f64,
    f_u: f64,
    width: f64,
) -> Result<WedgeEval> {
    let cos = p.incline.cos();
    let (big_m, small_m) = (p.block_mass, p.wedge_mass);
    let slide = (s.ud / width).tanh();

    // Friction on the wedge is f_d = -k |lambda| tanh(ud/eps); with sign(lambda)
    // fixed by hypothesis it is linear in lambda: f_d = c lambda.
    let solve = |c: f64| -> Result<(f64, f64, f64)> {
        // M xdd = f_x - lambda, m udd = -f_u + (cos + c) lambda, xdd = cos udd
        let denom = small_m + (cos + c) * big_m * cos;
        if denom.abs() < 1e-300 || !denom.is_finite() {
            return Err(Error::Numeric("singular wedge constraint solve".into()));
        }
        let udd = (-f_u + (cos + c) * f_x) / denom;
        let xdd = cos * udd;
        let lambda = f_x - big_m * xdd;
        Ok((xdd, udd, lambda))
    };

    if slide == 0.0 {
        let (xdd, udd, lambda) = solve(0.0)?;
        return Ok(WedgeEval {
            xdd,
            udd,
            lambda,
            friction: 0.0,
            direction: None,
        });
    }

    let mut best: Option<(f64, WedgeEval)> = None;
    for sign in [1.0, -1.0] {
        // the wedge delivers power when lambda and ud have opposite signs
        let dir = if sign * s.ud < 0.0 {
            FlowDirection::Fwd
        } else {
            FlowDirection::Bwd
        };
        if dir == FlowDirection::Fwd && eff.is_forward_locked() {
            continue;
        }
        let c = -friction_gain(p, eff, dir) * sign * slide;
        let (xdd, udd, lambda) = solve(c)?;
        let violation = (-sign * lambda).max(0.0);
        let eval = WedgeEval {
            xdd,
            udd,
            lambda,
            friction: c * lambda,
            direction: Some(dir),
        };
        if violation == 0.0 {
            return Ok(eval);
        }
        if best.as_ref().map_or(true, |(v, _)| violation < *v) {
            best = Some((violation, eval));
        }
    }
    match best {
        Some((_, eval)) => Ok(eval),
        None => Err(Error::ForwardLocked { eta_f: eff.forward }),
    }
}

/// Integrates the redundant two-coordinate wedge-block system with an explicit
/// normal-force multiplier, resolving the friction direction every step.
///
/// Semi-implicit Euler with a fixed step. The returned trajectory has
/// `steps + 1` samples, the first one at `t = 0`.
pub fn simulate_redundant<Fx, Fu>(
    p: &WedgeParams,
    f_x: Fx,
    f_u: Fu,
    cfg: &WedgeSimConfig,
) -> Result<Vec<WedgeSample>>
where
    Fx: Fn(f64) -> f64,
    Fu: Fn(f64) -> f64,
{
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {}", cfg.dt)));
    }
    if !(cfg.friction_width > 0.0) {
        return Err(Error::InvalidParameter("friction width must be positive".into()));
    }
    let cos = p.incline.cos();
    let eff = efficiencies(p);
    let mut s = cfg.initial;
    if (s.x - s.u * cos).abs() > 1e-9 || (s.xd - s.ud * cos).abs() > 1e-9 {
        return Err(Error::InvalidParameter(
            "initial state violates x = u cos(alpha)".into(),
        ));
    }

    let mut out = Vec::with_capacity(cfg.steps + 1);
    for k in 0..=cfg.steps {
        let t = k as f64 * cfg.dt;
        let (fx, fu) = (f_x(t), f_u(t));
        let e = evaluate(p, &eff, &s, fx, fu, cfg.friction_width)?;
        out.push(WedgeSample {
            t,
            state: s,
            xdd: e.xdd,
            udd: e.udd,
            lambda: e.lambda,
            friction: e.friction,
            direction: e.direction,
            meshing: [p.block_mass * e.xdd - fx, p.wedge_mass * e.udd + fu],
        });
        if k == cfg.steps {
            break;
        }
        s.xd += e.xdd * cfg.dt;
        s.ud += e.udd * cfg.dt;
        s.x += s.xd * cfg.dt;
        s.u += s.ud * cfg.dt;
        if (s.x - s.u * cos).abs() > 1e-9 {
            return Err(Error::Numeric(format!(
                "constraint drift {:e} at t = {t}",
                (s.x - s.u * cos).abs()
            )));
        }
    }
    Ok(out)
}

/// `r_x dx + eta r_u du` per unit `dx`, with `eta` chosen by the sample's flow
/// direction. Zero on every dynamically consistent sliding state.
pub fn efficiency_null(p: &WedgeParams, sample: &WedgeSample) -> Option<f64> {
    let dir = sample.direction?;
    let eta = efficiencies(p).effective(dir);
    let [r_x, r_u] = sample.meshing;
    Some(r_x + eta * r_u * p.gear_ratio())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn unit(mu: f64) -> WedgeParams {
        WedgeParams::new(1.0, 1.0, FRAC_PI_4, mu).unwrap()
    }

    #[test]
    fn efficiency_examples() {
        let e = efficiencies(&unit(0.0));
        assert_eq!((e.forward, e.backward), (1.0, 1.0));
        let e = efficiencies(&unit(0.2));
        assert_relative_eq!(e.forward, 0.8, epsilon = 1e-12);
        assert_relative_eq!(e.backward, 1.0 / 1.2, epsilon = 1e-12);
        let e = efficiencies(&unit(0.5));
        assert_relative_eq!(e.forward, 0.5, epsilon = 1e-12);
        assert_relative_eq!(e.backward, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_vertical_incline() {
        assert!(WedgeParams::new(1.0, 1.0, FRAC_PI_2, 0.1).is_err());
        assert!(WedgeParams::new(1.0, 0.0, 0.3, 0.1).is_err());
        assert!(WedgeParams::new(1.0, 1.0, 0.3, -0.1).is_err());
    }

    #[test]
    fn forward_lock_is_flagged_not_rejected() {
        let p = WedgeParams::new(1.0, 1.0, 80f64.to_radians(), 0.5).unwrap();
        let e = efficiencies(&p);
        assert!(e.is_forward_locked());
        assert!(matches!(
            impedance_coefficient(&p, FlowDirection::Fwd),
            Err(Error::ForwardLocked { .. })
        ));
        assert!(impedance_coefficient(&p, FlowDirection::Bwd).is_ok());
    }

    #[test]
    fn reduced_acceleration_examples() {
        assert_relative_eq!(
            reduced_acceleration(&unit(0.0), FlowDirection::Fwd, 1.0, 0.0),
            1.0 / 3.0,
            epsilon = 1e-12
        );
        // -0.8 sqrt(2) / 2.6
        assert_relative_eq!(
            reduced_acceleration(&unit(0.2), FlowDirection::Fwd, 0.0, 1.0),
            -0.8 * 2f64.sqrt() / 2.6,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            reduced_acceleration(&unit(0.2), FlowDirection::Bwd, 1.0, 0.0),
            1.0 / 3.4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn impedance_examples() {
        for dir in [FlowDirection::Fwd, FlowDirection::Bwd] {
            assert_relative_eq!(impedance_coefficient(&unit(0.0), dir).unwrap(), 3.0, epsilon = 1e-12);
        }
        assert_relative_eq!(
            impedance_coefficient(&unit(0.2), FlowDirection::Fwd).unwrap(),
            3.25,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            impedance_coefficient(&unit(0.2), FlowDirection::Bwd).unwrap(),
            3.4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn frictionless_constant_push() {
        let p = unit(0.0);
        let cfg = WedgeSimConfig::default();
        let traj = simulate_redundant(&p, |_| 1.0, |_| 0.0, &cfg).unwrap();
        let last = traj.last().unwrap();
        assert_relative_eq!(last.t, 1.0, epsilon = 1e-12);
        assert!((last.state.xd - last.t / 3.0).abs() < 1e-6);
        for s in &traj {
            assert!((s.state.x - s.state.u * p.incline.cos()).abs() <= 1e-9);
        }
    }

    fn mean_acceleration(traj: &[WedgeSample]) -> f64 {
        let (a, b) = (traj.first().unwrap(), traj.last().unwrap());
        (b.state.xd - a.state.xd) / (b.t - a.t)
    }

    #[test]
    fn oracle_matches_reduced_forward() {
        let p = unit(0.2);
        let cfg = WedgeSimConfig {
            initial: WedgeState::consistent(&p, 0.0, -0.01),
            ..Default::default()
        };
        let traj = simulate_redundant(&p, |_| 0.0, |_| 1.0, &cfg).unwrap();
        assert!(traj.iter().all(|s| s.direction == Some(FlowDirection::Fwd)));
        let expect = reduced_acceleration(&p, FlowDirection::Fwd, 0.0, 1.0);
        assert_relative_eq!(mean_acceleration(&traj), expect, max_relative = 1e-4);
    }

    #[test]
    fn oracle_matches_reduced_backward() {
        let p = unit(0.2);
        let cfg = WedgeSimConfig {
            initial: WedgeState::consistent(&p, 0.0, 0.01),
            ..Default::default()
        };
        let traj = simulate_redundant(&p, |_| 1.0, |_| 0.0, &cfg).unwrap();
        assert!(traj.iter().all(|s| s.direction == Some(FlowDirection::Bwd)));
        let expect = reduced_acceleration(&p, FlowDirection::Bwd, 1.0, 0.0);
        assert_relative_eq!(mean_acceleration(&traj), expect, max_relative = 1e-4);
    }

    #[test]
    fn starting_from_rest_resolves_direction() {
        let p = unit(0.3);
        let cfg = WedgeSimConfig {
            steps: 2000,
            ..Default::default()
        };
        let traj = simulate_redundant(&p, |_| 0.0, |_| 2.0, &cfg).unwrap();
        assert_eq!(traj[0].direction, None);
        assert_eq!(traj.last().unwrap().direction, Some(FlowDirection::Fwd));
        let late = &traj[1000..];
        let expect = reduced_acceleration(&p, FlowDirection::Fwd, 0.0, 2.0);
        assert_relative_eq!(mean_acceleration(late), expect, max_relative = 1e-4);
    }

    #[test]
    fn efficiency_null_holds_while_sliding() {
        let p = unit(0.35);
        let cfg = WedgeSimConfig {
            steps: 500,
            initial: WedgeState::consistent(&p, 0.0, 0.05),
            ..Default::default()
        };
        let traj = simulate_redundant(&p, |t| 1.0 + t, |_| 0.2, &cfg).unwrap();
        for s in &traj {
            assert!(efficiency_null(&p, s).unwrap().abs() <= 1e-8);
        }
    }

    #[test]
    fn invalid_step_rejected() {
        let cfg = WedgeSimConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(simulate_redundant(&unit(0.1), |_| 0.0, |_| 0.0, &cfg).is_err());
    }
}
