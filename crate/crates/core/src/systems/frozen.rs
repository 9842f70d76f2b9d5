use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ode;

use super::{ExtendedDynamics, Trajectory, TrajectoryKind};

/// A trajectory held fixed for linearization: extended states at the
/// original nodes with their model derivatives, interpolated by cubic
/// Hermite splines; controls interpolated linearly.
#[derive(Debug, Clone)]
pub struct FrozenTrajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    rates: Vec<DVector<f64>>,
    controls: Vec<DVector<f64>>,
    grid: Vec<f64>,
    node_index: Vec<usize>,
}

impl FrozenTrajectory {
    /// Freezes `traj` under `model`, with an integration grid refined to at
    /// least `min_nodes` nodes.
    pub fn new(model: &dyn ExtendedDynamics, traj: &Trajectory, min_nodes: usize) -> Result<Self> {
        traj.check()?;
        let n = model.system().n();
        if traj.state_dim() != n {
            return Err(Error::DimensionMismatch {
                what: "trajectory states",
                expected: n,
                got: traj.state_dim(),
            });
        }
        if traj.control_dim() != model.control_dim() {
            return Err(Error::DimensionMismatch {
                what: "trajectory controls",
                expected: model.control_dim(),
                got: traj.control_dim(),
            });
        }
        let states = (0..traj.len())
            .map(|k| model.pack(traj, k))
            .collect::<Result<Vec<_>>>()?;
        let rates = states
            .iter()
            .zip(&traj.times)
            .zip(&traj.controls)
            .map(|((z, t), u)| model.field(*t, z, u))
            .collect::<Result<Vec<_>>>()?;
        let (grid, node_index) = ode::refine(&traj.times, min_nodes);
        Ok(FrozenTrajectory {
            times: traj.times.clone(),
            states,
            rates,
            controls: traj.controls.clone(),
            grid,
            node_index,
        })
    }

    /// Original grid.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Refined integration grid.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Index in the refined grid of each original node.
    pub fn node_index(&self) -> &[usize] {
        &self.node_index
    }

    pub fn node_state(&self, k: usize) -> &DVector<f64> {
        &self.states[k]
    }

    pub fn node_rate(&self, k: usize) -> &DVector<f64> {
        &self.rates[k]
    }

    pub fn node_control(&self, k: usize) -> &DVector<f64> {
        &self.controls[k]
    }

    /// Extended state at `t` by Hermite interpolation.
    pub fn state(&self, t: f64) -> DVector<f64> {
        let k = ode::locate(&self.times, t);
        ode::hermite(
            self.times[k],
            self.times[k + 1],
            &self.states[k],
            &self.states[k + 1],
            &self.rates[k],
            &self.rates[k + 1],
            t,
        )
    }

    /// Control at `t` by linear interpolation.
    pub fn control(&self, t: f64) -> DVector<f64> {
        let k = ode::locate(&self.times, t);
        ode::lerp(
            self.times[k],
            self.times[k + 1],
            &self.controls[k],
            &self.controls[k + 1],
            t,
        )
    }

    /// Hermite–Simpson defect: the largest `|z_{k+1} - z_k - h/6 (f_k + 4 f_m
    /// + f_{k+1})| / h` over intervals, with the time where it occurs.
    pub fn dynamics_defect(&self, model: &dyn ExtendedDynamics) -> Result<(f64, f64)> {
        self.defect_on(model, None)
    }

    /// As [`Self::dynamics_defect`], ignoring the listed state components.
    pub fn defect_on(
        &self,
        model: &dyn ExtendedDynamics,
        skip: Option<&[usize]>,
    ) -> Result<(f64, f64)> {
        let mut worst = (0.0f64, self.times[0]);
        for k in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[k], self.times[k + 1]);
            let h = t1 - t0;
            let tm = 0.5 * (t0 + t1);
            let fm = model.field(tm, &self.state(tm), &self.control(tm))?;
            let mut d = &self.states[k + 1]
                - &self.states[k]
                - (&self.rates[k] + fm * 4.0 + &self.rates[k + 1]) * (h / 6.0);
            for &i in skip.unwrap_or(&[]) {
                d[i] = 0.0;
            }
            let r = d.amax() / h;
            if r > worst.0 {
                worst = (r, t0);
            }
        }
        Ok(worst)
    }
}

/// Fills the cost coordinates of `traj` by integrating the cost rows of
/// `model` from zero along the frozen trajectory.
pub fn extend_trajectory(
    model: &dyn ExtendedDynamics,
    traj: &Trajectory,
    min_nodes: usize,
) -> Result<Trajectory> {
    let frozen = FrozenTrajectory::new(model, traj, min_nodes)?;
    let slots = model.cost_slots();
    let grid = frozen.grid().to_vec();
    let path = ode::rk4_on_grid(
        |t, y: &DVector<f64>| {
            let mut z = frozen.state(t);
            for (j, &s) in slots.iter().enumerate() {
                z[s] = y[j];
            }
            let f = model.field(t, &z, &frozen.control(t))?;
            Ok(DVector::from_iterator(
                slots.len(),
                slots.iter().map(|&s| f[s]),
            ))
        },
        &grid,
        DVector::zeros(slots.len()),
    )?;
    let at_nodes = |j: usize| {
        frozen
            .node_index()
            .iter()
            .map(|&i| path[i][j])
            .collect::<Vec<_>>()
    };
    let mut out = traj.clone();
    out.cost_position = Some(at_nodes(0));
    if traj.kind == TrajectoryKind::Mechanical {
        out.cost_velocity = Some(at_nodes(1));
    }
    Ok(out)
}
