//! Design metrics built on the dissipative dynamics: generalized inertia
//! tensors, asymmetric force capability and the impact mitigation factor.

mod force;
mod git;
mod imf;
mod sweep;

pub use force::{
    force_capability, force_capability_lp, force_capability_with, support_lp, ForcePolytope,
    TorqueBounds,
};
pub use git::{git, git_for_jacobian, BackwardGitReading, InertiaTensorResult};
pub use imf::{imf, imf_with, ImfResult};
pub use sweep::{efficiency_sweep, EtaGrid, SweepRow, SweepTable};

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricVariant {
    Conventional,
    Forward,
    Backward,
}

impl MetricVariant {
    pub const ALL: [MetricVariant; 3] = [
        MetricVariant::Conventional,
        MetricVariant::Forward,
        MetricVariant::Backward,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricVariant::Conventional => "conventional",
            MetricVariant::Forward => "forward",
            MetricVariant::Backward => "backward",
        }
    }
}

impl fmt::Display for MetricVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "conventional" | "conv" => Ok(MetricVariant::Conventional),
            "forward" | "fwd" => Ok(MetricVariant::Forward),
            "backward" | "bwd" => Ok(MetricVariant::Backward),
            other => Err(Error::InvalidParameter(format!("unknown metric variant `{other}`"))),
        }
    }
}

pub(crate) fn symmetric_part(m: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
