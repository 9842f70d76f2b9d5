use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ode;

use super::{extend, ChristoffelPairing, CostSpec, Mode, SystemSpec, Trajectory};

/// Open-loop control signal.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSignal {
    Constant(DVector<f64>),
    /// Piecewise-linear through the samples, held constant outside them.
    Samples {
        times: Vec<f64>,
        values: Vec<DVector<f64>>,
    },
}

impl ControlSignal {
    pub fn dim(&self) -> usize {
        match self {
            ControlSignal::Constant(u) => u.len(),
            ControlSignal::Samples { values, .. } => values.first().map_or(0, |v| v.len()),
        }
    }

    pub fn at(&self, t: f64) -> DVector<f64> {
        match self {
            ControlSignal::Constant(u) => u.clone(),
            ControlSignal::Samples { times, values } => {
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= *times.last().unwrap() {
                    return values.last().unwrap().clone();
                }
                let k = ode::locate(times, t);
                ode::lerp(times[k], times[k + 1], &values[k], &values[k + 1], t)
            }
        }
    }

    /// Reads a CSV with a `t` column followed by one column per control
    /// component.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.first().map(String::as_str) != Some("t") || header.len() < 2 {
            return Err(Error::InvalidTrajectory(
                "control file needs a `t` column followed by control columns".into(),
            ));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let nums = rec
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    v.parse::<f64>().map_err(|_| {
                        Error::InvalidTrajectory(format!(
                            "row {}, column `{}`: `{v}` is not a number",
                            row + 1,
                            header[c]
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            times.push(nums[0]);
            values.push(DVector::from_column_slice(&nums[1..]));
        }
        let signal = ControlSignal::Samples { times, values };
        signal.check()?;
        Ok(signal)
    }

    fn check(&self) -> Result<()> {
        if let ControlSignal::Samples { times, values } = self {
            ode::check_grid(times)?;
            if values.len() != times.len() {
                return Err(Error::InvalidTrajectory(
                    "control samples and times differ in length".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Initial data and grid for [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub mode: Mode,
    pub x0: Vec<f64>,
    /// Initial velocity, mechanical mode only; must lie in `D`.
    pub v0: Option<Vec<f64>>,
    pub t0: f64,
    pub tf: f64,
    pub step: f64,
    pub pairing: ChristoffelPairing,
}

/// Tolerance on the `D⊥` component of an initial mechanical velocity.
pub const INITIAL_VELOCITY_TOL: f64 = 1e-6;

/// RK4 simulation of the extended system from zero cost. Returns an
/// extended trajectory sampled every `step` (the last step is shortened to
/// land on `tf`).
pub fn simulate(
    system: &SystemSpec,
    cost: &CostSpec,
    setup: &SimulationSetup,
    controls: &ControlSignal,
) -> Result<Trajectory> {
    let n = system.n();
    controls.check()?;
    if controls.dim() != system.m() {
        return Err(Error::DimensionMismatch {
            what: "controls",
            expected: system.m(),
            got: controls.dim(),
        });
    }
    if setup.x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: n,
            got: setup.x0.len(),
        });
    }
    if !(setup.step > 0.0 && setup.step.is_finite()) || !(setup.tf > setup.t0) {
        return Err(Error::DegenerateGrid(format!(
            "need step > 0 and tf > t0 (step {}, t0 {}, tf {})",
            setup.step, setup.t0, setup.tf
        )));
    }
    let steps = ((setup.tf - setup.t0) / setup.step - 1e-9).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..steps)
        .map(|k| setup.t0 + k as f64 * setup.step)
        .collect();
    times.push(setup.tf);

    let model = extend(system, cost, setup.mode, setup.pairing);
    let mut z0 = DVector::zeros(model.state_dim());
    z0.rows_mut(1, n).copy_from_slice(&setup.x0);
    if setup.mode == Mode::Mechanical {
        let v0 = setup.v0.as_deref().unwrap_or(&[]);
        if v0.len() != n {
            return Err(Error::DimensionMismatch {
                what: "initial velocity",
                expected: n,
                got: v0.len(),
            });
        }
        let off = system.distribution_residual(&setup.x0, v0)?;
        if off > INITIAL_VELOCITY_TOL {
            return Err(Error::InvalidTrajectory(format!(
                "initial velocity leaves the distribution by {off:e}"
            )));
        }
        z0.rows_mut(n + 2, n).copy_from_slice(v0);
    }
    let path = ode::rk4_on_grid(|t, z| model.field(t, z, &controls.at(t)), &times, z0)?;
    let us: Vec<_> = times.iter().map(|t| controls.at(*t)).collect();
    let states = path.iter().map(|z| z.rows(1, n).into_owned()).collect();
    let mut out = match setup.mode {
        Mode::Kinematic => Trajectory::kinematic(times, states, us)?,
        Mode::Mechanical => {
            let vel = path.iter().map(|z| z.rows(n + 2, n).into_owned()).collect();
            let mut t = Trajectory::mechanical(times, states, vel, us)?;
            t.cost_velocity = Some(path.iter().map(|z| z[n + 1]).collect());
            t
        }
    };
    out.cost_position = Some(path.iter().map(|z| z[0]).collect());
    Ok(out)
}
