use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;

use super::force::{force_capability, TorqueBounds};
use super::imf::imf;
use super::MetricVariant;
use crate::error::{Error, Result};
use crate::rigid_body::RobotModel;
use crate::transmission::{backward_from_forward, EfficiencyMap};

/// Forward-efficiency grid `lo:hi:step`, walked from `hi` down to `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl EtaGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_f grid must satisfy 0 < lo <= hi <= 1, got {lo}:{hi}"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter("eta_f step must be positive".into()));
        }
        Ok(EtaGrid { lo, hi, step })
    }

    /// Descending values, snapped to 12 decimals so that `1:0.5:0.01`-style
    /// grids hit their end points.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| ((self.hi - k as f64 * self.step) * 1e12).round() / 1e12)
            .filter(|&v| v >= self.lo - 1e-12)
            .collect()
    }
}

impl FromStr for EtaGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(Error::InvalidParameter(format!(
                "expected lo:hi:step, got `{s}`"
            )));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("`{t}` is not a number")))
        };
        EtaGrid::new(num(lo)?, num(hi)?, num(step)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eta_f: f64,
    pub eta_b: f64,
    /// Forward capability along the sweep direction over the conventional one.
    pub fc_fwd_norm: f64,
    /// Infinite once the backward efficiency reaches zero.
    pub fc_bwd_norm: f64,
    /// NaN for fixed-base models; zero at lock.
    pub imf: f64,
}

impl SweepRow {
    pub fn is_locked(&self) -> bool {
        self.eta_b <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Whether `eta_b` came from the built-in approximate map.
    pub approximate_map: bool,
}

/// Applies the same forward efficiency to every coupling, derives `eta_b`
/// from `map` and evaluates capability ratios and IMF along `direction`.
///
/// Torque bounds come from the model; an all-zero set is replaced by a unit
/// box since only ratios are reported.
pub fn efficiency_sweep(
    model: &RobotModel,
    q: &DVector<f64>,
    grid: &[f64],
    direction: &DVector<f64>,
    map: &EfficiencyMap,
) -> Result<SweepTable> {
    if direction.len() != 2 || !(direction.norm() > 0.0) {
        return Err(Error::InvalidParameter("sweep direction must be a non-zero planar vector".into()));
    }
    for w in grid.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidParameter(format!("duplicate eta_f {} in grid", w[0])));
        }
        if (w[1] - w[0]).signum() != (grid[1] - grid[0]).signum() {
            return Err(Error::InvalidParameter("eta_f grid must be monotone".into()));
        }
    }
    let n = direction / direction.norm();
    let m = model.joint_count();
    let bounds = if model.torque_limits.iter().any(|&t| t > 0.0) {
        TorqueBounds::symmetric(&model.torque_limits)?
    } else {
        TorqueBounds::symmetric(&vec![1.0; m])?
    };
    let conv = force_capability(model, q, &bounds, MetricVariant::Conventional)?.support(&n);
    if !(conv > 0.0) {
        return Err(Error::SingularPose(
            "conventional force capability vanishes along the sweep direction".into(),
        ));
    }

    let rows = grid
        .par_iter()
        .map(|&eta_f| -> Result<SweepRow> {
            let eta_b = backward_from_forward(eta_f, map)?;
            let locked = eta_b <= 0.0;
            let t = model.transmissions.with_efficiencies(
                vec![eta_f; m],
                vec![if locked { 1.0 } else { eta_b }; m],
            )?;
            let row_model = model.with_transmissions(t)?;
            let fwd = force_capability(&row_model, q, &bounds, MetricVariant::Forward)?.support(&n);
            let (fc_bwd_norm, imf_value) = if locked {
                (f64::INFINITY, 0.0)
            } else {
                let bwd = force_capability(&row_model, q, &bounds, MetricVariant::Backward)?
                    .support(&n);
                let imf_value = if model.base_dof() > 0 {
                    imf(&row_model, q, &n)?.value
                } else {
                    f64::NAN
                };
                (bwd / conv, imf_value)
            };
            Ok(SweepRow {
                eta_f,
                eta_b,
                fc_fwd_norm: fwd / conv,
                fc_bwd_norm,
                imf: imf_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        rows,
        approximate_map: map.is_approximate(),
    })
}
