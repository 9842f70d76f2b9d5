use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg;
use crate::ode;

use super::{spray_term, ChristoffelPairing, SystemSpec, Trajectory, TrajectoryKind};

/// Frame Gram matrices with a larger condition number are rejected.
pub const MAX_FRAME_CONDITION: f64 = 1e8;

/// Converted trajectory with the per-node equation residual.
#[derive(Debug, Clone)]
pub struct ControlConversion {
    pub trajectory: Trajectory,
    pub residuals: Vec<f64>,
}

impl ControlConversion {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// Mechanical controls reproducing a kinematic trajectory.
///
/// Velocities are `v = Σ wˢ Y_s`; accelerations come from finite differences
/// of `v` on the grid. `u` is the g-projection onto `D` of
/// `γ̈ + Γ(v, v) - F`, and the residual at each node is
/// `|γ̈ - v̇(x, v, u, λ)|` with `λ` from the multiplier solve.
pub fn kin_to_mech_controls(
    system: &SystemSpec,
    traj: &Trajectory,
    pairing: ChristoffelPairing,
) -> Result<ControlConversion> {
    if traj.kind != TrajectoryKind::Kinematic {
        return Err(Error::InvalidTrajectory(
            "expected a kinematic trajectory".into(),
        ));
    }
    traj.check()?;
    let velocities = traj
        .states
        .iter()
        .zip(&traj.controls)
        .map(|(x, w)| system.kinematic_rhs(x.as_slice(), w.as_slice()))
        .collect::<Result<Vec<_>>>()?;
    let accel = ode::finite_difference(&traj.times, &velocities);
    let mut controls = Vec::with_capacity(traj.len());
    let mut residuals = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let x = traj.states[k].as_slice();
        let v = velocities[k].as_slice();
        let gamma = system.connection().gamma(x)?;
        let target =
            &accel[k] + DVector::from_vec(spray_term(&gamma, v, pairing)) - system.force_at(x)?;
        let y = system.frame_at(x)?;
        let g = system.metric().eval(x)?;
        let gram = y.transpose() * &g * &y;
        let condition = linalg::spd_condition(&gram);
        if condition > MAX_FRAME_CONDITION {
            return Err(Error::IllConditionedFrame {
                time: traj.times[k],
                condition,
            });
        }
        let u = gram
            .cholesky()
            .map(|c| c.solve(&(y.transpose() * &g * target)))
            .ok_or_else(|| Error::RankDeficientFrame { point: x.to_vec() })?;
        let lambda = system.solve_multipliers_with(x, v, u.as_slice(), pairing)?;
        let (_, vdot) =
            system.mechanical_rhs_with(x, v, u.as_slice(), lambda.as_slice(), pairing)?;
        residuals.push((&accel[k] - vdot).norm());
        controls.push(u);
    }
    let mut out = Trajectory::mechanical(
        traj.times.clone(),
        traj.states.clone(),
        velocities,
        controls,
    )?;
    out.cost_position = traj.cost_position.clone();
    Ok(ControlConversion {
        trajectory: out,
        residuals,
    })
}

/// Kinematic controls of a mechanical trajectory: frame coordinates of `v`.
/// The residual is `|v - Σ wˢ Y_s|`.
pub fn mech_to_kin_controls(system: &SystemSpec, traj: &Trajectory) -> Result<ControlConversion> {
    let Some(vel) = &traj.velocities else {
        return Err(Error::InvalidTrajectory(
            "expected a mechanical trajectory".into(),
        ));
    };
    traj.check()?;
    let mut controls = Vec::with_capacity(traj.len());
    let mut residuals = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let (w, res, condition) =
            system.frame_coordinates(traj.states[k].as_slice(), vel[k].as_slice())?;
        if condition > MAX_FRAME_CONDITION {
            return Err(Error::IllConditionedFrame {
                time: traj.times[k],
                condition,
            });
        }
        controls.push(w);
        residuals.push(res);
    }
    let mut out = Trajectory::kinematic(traj.times.clone(), traj.states.clone(), controls)?;
    out.cost_position = traj.cost_position.clone();
    Ok(ControlConversion {
        trajectory: out,
        residuals,
    })
}
