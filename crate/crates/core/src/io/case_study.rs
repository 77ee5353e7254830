//! The 2-DoF leg on a floating torso.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use super::csv::{fc_csv, git_csv, sweep_csv};
use super::model_file::parse_model;
use super::svg::{fc_svg, git_svg, sweep_svg};
use crate::error::Result;
use crate::metrics::{
    efficiency_sweep, force_capability, git, BackwardGitReading, EtaGrid, ForcePolytope,
    InertiaTensorResult, MetricVariant, SweepTable, TorqueBounds,
};
use crate::rigid_body::RobotModel;
use crate::transmission::EfficiencyMap;

/// Thigh and shin are 2 kg, 0.4 m uniform rods on a 15 kg, 0.5 m square
/// torso. Each rotor reflects, through its 20:1 reduction, the COM inertia of
/// the link it drives. Motors deliver 20 N m at the joint.
pub const CASE_STUDY_DOCUMENT: &str = "\
# 2-DoF leg
[base]
dof = 3
mass = 15
side = 0.5
inertia = 0.625

[link]   # thigh
mass = 2
length = 0.4
com = 0.2
inertia = 0.02666666666666667

[link]   # shin
mass = 2
length = 0.4
com = 0.2
inertia = 0.02666666666666667

[rotor]
inertia = 6.666666666666667e-5
output_tau_max = 20

[rotor]
inertia = 6.666666666666667e-5
output_tau_max = 20

[reduction]
N = 20, 20

[topology]
D =
    1, 0
    0, 1

[efficiency]
eta_f = 0.8, 0.7

[pose]
q = 0, 0, 0, pi/3, pi/3

[gravity]
g = 9.81
";

pub fn builtin_case_study() -> RobotModel {
    parse_model(CASE_STUDY_DOCUMENT).expect("built-in case study parses")
}

/// Sweep grid `1.00 -> 0.50` in steps of 0.01.
pub fn case_study_grid() -> EtaGrid {
    EtaGrid::new(0.5, 1.0, 0.01).expect("valid grid")
}

/// Everything the `case-study` subcommand computes.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub git: Vec<InertiaTensorResult>,
    pub fc: Vec<ForcePolytope>,
    pub sweep: SweepTable,
}

impl CaseStudy {
    pub fn compute() -> Result<Self> {
        let model = builtin_case_study();
        let fixed = model.with_fixed_base();
        let git = MetricVariant::ALL
            .iter()
            .map(|&v| git(&fixed, &fixed.pose, v, BackwardGitReading::default()))
            .collect::<Result<Vec<_>>>()?;
        let bounds = TorqueBounds::symmetric(&model.torque_limits)?;
        let fc = MetricVariant::ALL
            .iter()
            .map(|&v| force_capability(&model, &model.pose, &bounds, v))
            .collect::<Result<Vec<_>>>()?;
        let sweep = efficiency_sweep(
            &model,
            &model.pose,
            &case_study_grid().values(),
            &DVector::from_vec(vec![0.0, 1.0]),
            &EfficiencyMap::default(),
        )?;
        Ok(CaseStudy { git, fc, sweep })
    }

    /// `(file name, contents)` pairs, CSV first.
    pub fn files(&self, svg: bool) -> Result<Vec<(&'static str, String)>> {
        let mut out = vec![
            ("git.csv", git_csv(&self.git)?),
            ("fc.csv", fc_csv(&self.fc)?),
            ("sweep.csv", sweep_csv(&self.sweep)?),
        ];
        if svg {
            out.push(("git.svg", git_svg(&self.git)));
            out.push(("fc.svg", fc_svg(&self.fc)));
            out.push(("sweep.svg", sweep_svg(&self.sweep)));
        }
        Ok(out)
    }
}

/// Computes the case study and writes its files into `out_dir`, creating it
/// if needed. Returns the written paths.
pub fn run_case_study(out_dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    let study = CaseStudy::compute()?;
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, body) in study.files(svg)? {
        let path = out_dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_3;

    #[test]
    fn parameters() {
        let m = builtin_case_study();
        let base = m.base.unwrap();
        assert_eq!((base.mass, base.side), (15.0, 0.5));
        assert_relative_eq!(base.inertia, 15.0 * 0.25 / 6.0, epsilon = 1e-15);
        for l in &m.links {
            assert_eq!((l.mass, l.length, l.com_offset), (2.0, 0.4, 0.2));
            assert_relative_eq!(l.inertia_com, 2.0 * 0.16 / 12.0, epsilon = 1e-15);
        }
        for &r in &m.rotor_inertias {
            assert_relative_eq!(r * 400.0, 2.0 * 0.16 / 12.0, epsilon = 1e-15);
        }
        assert_eq!(m.transmissions.ratios(), &[20.0, 20.0]);
        assert_eq!(m.transmissions.forward(), &[0.8, 0.7]);
        assert_relative_eq!(m.transmissions.backward()[0], 0.75, epsilon = 1e-15);
        assert_relative_eq!(m.transmissions.backward()[1], 2.0 - 1.0 / 0.7, epsilon = 1e-15);
        assert_eq!(m.torque_limits, vec![1.0, 1.0]);
        assert_eq!(m.pose[3], FRAC_PI_3);
        assert_eq!(m.pose[4], FRAC_PI_3);
    }

    #[test]
    fn grid_has_51_rows() {
        let v = case_study_grid().values();
        assert_eq!(v.len(), 51);
        assert_eq!((v[0], v[50]), (1.0, 0.5));
    }
}
