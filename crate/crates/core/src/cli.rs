//! The `ddyn` command line. Results go to standard output, diagnostics to
//! standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::io::csv::{fc_csv, format_sig9, git_csv, sweep_csv, Series};
use crate::io::{parse_document, parse_vector, run_case_study, ModelDocument};
use crate::metrics::{
    efficiency_sweep, force_capability, git, imf, BackwardGitReading, EtaGrid, MetricVariant,
    TorqueBounds,
};
use crate::oracle::{simulate_redundant_system, OracleConfig};
use crate::rigid_body::SystemState;
use crate::wedge::{efficiencies, impedance_coefficient, FlowDirection, WedgeParams};

#[derive(Debug, Parser)]
#[command(name = "ddyn", version, about = "Dissipative rigid-body dynamics and actuator design metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Fwd,
    Bwd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Git,
    Fc,
    Imf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Reading {
    BackwardEfficiencies,
    Lossless,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Axis {
    X,
    Z,
}

impl Axis {
    fn vector(self) -> DVector<f64> {
        match self {
            Axis::X => DVector::from_vec(vec![1.0, 0.0]),
            Axis::Z => DVector::from_vec(vec![0.0, 1.0]),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Efficiencies and impedance of the wedge-block model.
    Wedge {
        #[arg(long)]
        mu: f64,
        /// Incline angle in degrees.
        #[arg(long = "alpha-deg")]
        alpha_deg: f64,
        #[arg(long = "block-mass", default_value_t = 1.0)]
        block_mass: f64,
        #[arg(long = "wedge-mass", default_value_t = 1.0)]
        wedge_mass: f64,
    },
    /// Inertia tensors, force capability and IMF at one pose.
    Analyze {
        model: PathBuf,
        /// Generalized coordinates `q_b, q_m`; defaults to the model pose.
        #[arg(long, allow_hyphen_values = true)]
        pose: Option<String>,
        /// Report only the conventional and the given variant.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "git,fc,imf")]
        metrics: Vec<Metric>,
        /// IMF direction.
        #[arg(long, value_enum, default_value = "z")]
        direction: Axis,
        #[arg(long = "backward-reading", value_enum, default_value = "backward-efficiencies")]
        backward_reading: Reading,
    },
    /// Capability ratios and IMF over a forward-efficiency grid.
    Sweep {
        model: PathBuf,
        /// `lo:hi:step`, walked from `hi` down to `lo`.
        #[arg(long = "eta-f", default_value = "0.5:1:0.01")]
        eta_f: String,
        #[arg(long, value_enum, default_value = "z")]
        direction: Axis,
    },
    /// Reproduce the 2-DoF leg study.
    CaseStudy {
        #[arg(long = "out-dir", default_value = "out")]
        out_dir: PathBuf,
        /// Also write SVG plots.
        #[arg(long)]
        svg: bool,
    },
    /// Redundant-coordinate simulation from rest at the model pose.
    Simulate {
        model: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// CSV of `t, tau_1..tau_m` rotor torques, held between rows.
        #[arg(long)]
        tau: Option<PathBuf>,
        /// CSV of `t, f_x, f_z` contact forces, held between rows.
        #[arg(long)]
        fext: Option<PathBuf>,
        #[arg(long = "record-every", default_value_t = 1)]
        record_every: usize,
        #[arg(long = "friction-width", default_value_t = 1e-5)]
        friction_width: f64,
    },
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load(path: &PathBuf) -> Result<ModelDocument> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| match e {
        Error::Syntax { line, message } => Error::Syntax {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Wedge {
            mu,
            alpha_deg,
            block_mass,
            wedge_mass,
        } => {
            let p = WedgeParams::new(block_mass, wedge_mass, alpha_deg.to_radians(), mu)?;
            let e = efficiencies(&p);
            let mut text = format!(
                "eta_f = {}\neta_b = {}\nforward_locked = {}\ngear_ratio = {}\n",
                format_sig9(e.forward),
                format_sig9(e.backward),
                e.is_forward_locked(),
                format_sig9(p.gear_ratio())
            );
            for dir in [FlowDirection::Fwd, FlowDirection::Bwd] {
                let c = match impedance_coefficient(&p, dir) {
                    Ok(c) => format_sig9(c),
                    Err(Error::ForwardLocked { .. }) => "locked".to_string(),
                    Err(e) => return Err(e),
                };
                text += &format!("impedance_{} = {c}\n", dir.as_str());
            }
            emit(out, &text)
        }
        Command::Analyze {
            model,
            pose,
            mode,
            metrics,
            direction,
            backward_reading,
        } => {
            let doc = load(&model)?;
            let mut model = doc.model;
            if let Some(p) = pose {
                let q = parse_vector(&p)?;
                if q.len() != model.dof() {
                    return Err(Error::InvalidParameter(format!(
                        "--pose has {} entries, model has {} DoF",
                        q.len(),
                        model.dof()
                    )));
                }
                model.pose = DVector::from_vec(q);
            }
            let variants: Vec<MetricVariant> = match mode {
                None => MetricVariant::ALL.to_vec(),
                Some(Mode::Fwd) => vec![MetricVariant::Conventional, MetricVariant::Forward],
                Some(Mode::Bwd) => vec![MetricVariant::Conventional, MetricVariant::Backward],
            };
            let reading = match backward_reading {
                Reading::BackwardEfficiencies => BackwardGitReading::BackwardEfficiencies,
                Reading::Lossless => BackwardGitReading::Lossless,
            };
            let mut blocks = Vec::new();
            if metrics.contains(&Metric::Git) {
                let fixed = model.with_fixed_base();
                if model.base_dof() > 0 {
                    let _ = writeln!(err, "note: inertia tensors use the base-fixed chain");
                }
                if variants.contains(&MetricVariant::Backward) {
                    let _ = writeln!(err, "note: Backward-GIT reading: {}", reading.as_str());
                }
                let rows = variants
                    .iter()
                    .map(|&v| git(&fixed, &fixed.pose, v, reading))
                    .collect::<Result<Vec<_>>>()?;
                blocks.push(git_csv(&rows)?);
            }
            if metrics.contains(&Metric::Fc) {
                if model.torque_limits.iter().all(|&t| t == 0.0) {
                    let _ = writeln!(err, "note: no torque limits in the model; using a unit box");
                }
                let limits: Vec<f64> = if model.torque_limits.iter().any(|&t| t > 0.0) {
                    model.torque_limits.clone()
                } else {
                    vec![1.0; model.joint_count()]
                };
                let bounds = TorqueBounds::symmetric(&limits)?;
                let polys = variants
                    .iter()
                    .map(|&v| force_capability(&model, &model.pose, &bounds, v))
                    .collect::<Result<Vec<_>>>()?;
                blocks.push(fc_csv(&polys)?);
            }
            if metrics.contains(&Metric::Imf) {
                if model.base_dof() == 0 {
                    let _ = writeln!(err, "note: IMF skipped, the model has a fixed base");
                } else {
                    let r = imf(&model, &model.pose, &direction.vector())?;
                    blocks.push(format!(
                        "imf,nx,nz\n{},{},{}\n",
                        format_sig9(r.value),
                        format_sig9(r.direction[0]),
                        format_sig9(r.direction[1])
                    ));
                }
            }
            emit(out, &blocks.join("\n"))
        }
        Command::Sweep {
            model,
            eta_f,
            direction,
        } => {
            let doc = load(&model)?;
            let grid: EtaGrid = eta_f.parse()?;
            if doc.map.is_approximate() {
                let _ = writeln!(err, "note: eta_b from the approximate map max(0, 2 - 1/eta_f)");
            }
            let table = efficiency_sweep(
                &doc.model,
                &doc.model.pose,
                &grid.values(),
                &direction.vector(),
                &doc.map,
            )?;
            emit(out, &sweep_csv(&table)?)
        }
        Command::CaseStudy { out_dir, svg } => {
            let written = run_case_study(&out_dir, svg)?;
            for p in written {
                let _ = writeln!(err, "wrote {}", p.display());
            }
            Ok(())
        }
        Command::Simulate {
            model,
            dt,
            steps,
            tau,
            fext,
            record_every,
            friction_width,
        } => {
            let doc = load(&model)?;
            let model = doc.model;
            let m = model.joint_count();
            let read = |p: &Option<PathBuf>, width: usize| -> Result<Series> {
                match p {
                    None => Ok(Series::constant(DVector::zeros(width))),
                    Some(p) => {
                        let text = fs::read_to_string(p)
                            .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                        Series::parse(&text, width)
                    }
                }
            };
            let tau = read(&tau, m)?;
            let fext = read(&fext, 2)?;
            if record_every == 0 {
                return Err(Error::InvalidParameter("--record-every must be positive".into()));
            }
            let cfg = OracleConfig {
                dt,
                steps,
                friction_width,
                record_every,
                ..OracleConfig::default()
            };
            let initial = SystemState::at_rest(&model, model.pose.clone())?;
            let traj = simulate_redundant_system(&model, &initial, |t| tau.at(t), |t| fext.at(t), &cfg)?;
            let n = model.dof();
            let mut header = vec!["t".to_string()];
            header.extend((1..=n).map(|i| format!("q{i}")));
            header.extend((1..=n).map(|i| format!("qd{i}")));
            header.extend(["energy", "work", "dissipated"].map(String::from));
            let mut text = header.join(",") + "\n";
            for s in &traj.samples {
                let mut row = vec![format_sig9(s.t)];
                row.extend(s.state.q.iter().map(|&v| format_sig9(v)));
                row.extend(s.state.qd.iter().map(|&v| format_sig9(v)));
                row.extend([s.energy, s.work, s.dissipated].map(format_sig9));
                text += &(row.join(",") + "\n");
            }
            emit(out, &text)
        }
    }
}
