//! Rigid-body dynamics of planar geared robots with direction-dependent
//! transmission efficiencies.
//!
//! Modules, bottom up:
//!
//! - [`wedge`]: the one-DoF wedge block, in closed form and simulated.
//! - [`transmission`]: reductions, actuation topologies, constraint and
//!   efficiency matrices.
//! - [`rigid_body`]: planar floating-base models, mass matrices and Jacobians.
//! - [`oracle`]: constrained simulation of the full rotor-and-link system.
//! - [`eom`]: the efficiency-augmented equation of motion.
//! - [`metrics`]: inertia tensors, force capability, impact mitigation.
//! - [`io`]: model files, CSV/SVG output, the built-in leg case study.
//! - [`cli`]: the `ddyn` command line.
//!
//! ```
//! use dissipative_dynamics::metrics::{git, BackwardGitReading, MetricVariant};
//!
//! let leg = dissipative_dynamics::io::builtin_case_study().with_fixed_base();
//! let conv = git(&leg, &leg.pose, MetricVariant::Conventional, BackwardGitReading::default())?;
//! let bwd = git(&leg, &leg.pose, MetricVariant::Backward, BackwardGitReading::default())?;
//! assert!(bwd.tensor[(1, 1)] > conv.tensor[(1, 1)]);
//! # Ok::<(), dissipative_dynamics::Error>(())
//! ```

pub mod cli;
pub mod eom;
pub mod error;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod rigid_body;
pub mod transmission;
pub mod wedge;

pub use eom::{assemble, forward_dynamics, DissipativeDynamics};
pub use error::{Error, Result};
pub use rigid_body::{FloatingBase, PlanarBody, RobotModel, SystemState};
pub use transmission::{FlowAssignment, TransmissionSet};
pub use wedge::FlowDirection;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/wedge.md")]
    mod wedge {}
    #[doc = include_str!("../../../book/src/transmissions.md")]
    mod transmissions {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/case-study.md")]
    mod case_study {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
