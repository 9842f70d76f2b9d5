use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::Result;
use crate::systems::{ExtendedDynamics, FrozenTrajectory, Trajectory};

/// Minimum number of nodes of the internal integration grid.
pub const MIN_INTEGRATION_NODES: usize = 1000;

/// Direction of integration from the start node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Linearization of an extended system along a frozen trajectory.
///
/// Holds, on the refined grid and at interval midpoints, the generator of
/// the augmented momentum equation
///
/// ```text
/// d/dt [λ; κ] = [-Aᵀ 0; bᵀ 0] [λ; κ],   A = ∂f/∂z,  b = ∂f/∂t,
/// ```
///
/// where `κ` accumulates `∫ ∂H/∂t`, and the state Jacobians `A` for the
/// tangent (variational) flow.
pub struct Linearization {
    frozen: FrozenTrajectory,
    dim: usize,
    jac_nodes: Vec<DMatrix<f64>>,
    jac_mid: Vec<DMatrix<f64>>,
    dt_nodes: Vec<DVector<f64>>,
    dt_mid: Vec<DVector<f64>>,
}

impl Linearization {
    pub fn new(model: &dyn ExtendedDynamics, traj: &Trajectory) -> Result<Self> {
        Self::with_min_nodes(model, traj, MIN_INTEGRATION_NODES)
    }

    pub fn with_min_nodes(
        model: &dyn ExtendedDynamics,
        traj: &Trajectory,
        min_nodes: usize,
    ) -> Result<Self> {
        let frozen = FrozenTrajectory::new(model, traj, min_nodes)?;
        let grid = frozen.grid().to_vec();
        let eval = |t: f64| -> Result<(DMatrix<f64>, DVector<f64>)> {
            let z = frozen.state(t);
            let u = frozen.control(t);
            Ok((
                model.state_jacobian(t, &z, &u)?,
                model.time_partial(t, &z, &u)?,
            ))
        };
        let nodes = grid
            .par_iter()
            .map(|t| eval(*t))
            .collect::<Result<Vec<_>>>()?;
        let mids = grid
            .par_windows(2)
            .map(|w| eval(0.5 * (w[0] + w[1])))
            .collect::<Result<Vec<_>>>()?;
        let (jac_nodes, dt_nodes) = nodes.into_iter().unzip();
        let (jac_mid, dt_mid) = mids.into_iter().unzip();
        Ok(Linearization {
            dim: model.state_dim(),
            frozen,
            jac_nodes,
            jac_mid,
            dt_nodes,
            dt_mid,
        })
    }

    pub fn frozen(&self) -> &FrozenTrajectory {
        &self.frozen
    }

    /// Extended state dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Refined grid.
    pub fn grid(&self) -> &[f64] {
        self.frozen.grid()
    }

    /// Index in the refined grid of each original node.
    pub fn node_index(&self) -> &[usize] {
        self.frozen.node_index()
    }

    /// `∂f/∂z` at refined node `i`.
    pub fn jacobian(&self, i: usize) -> &DMatrix<f64> {
        &self.jac_nodes[i]
    }

    fn generator(jac: &DMatrix<f64>, dt: &DVector<f64>) -> DMatrix<f64> {
        let d = jac.nrows();
        let mut g = DMatrix::zeros(d + 1, d + 1);
        g.view_mut((0, 0), (d, d)).copy_from(&(-jac.transpose()));
        g.view_mut((d, 0), (1, d)).copy_from(&dt.transpose());
        g
    }

    /// RK4 for `Ẏ = G(t) Y` between refined nodes `i` and `i ± 1`.
    fn step(
        g0: &DMatrix<f64>,
        gm: &DMatrix<f64>,
        g1: &DMatrix<f64>,
        y: &DMatrix<f64>,
        h: f64,
    ) -> DMatrix<f64> {
        let k1 = g0 * y;
        let k2 = gm * (y + &k1 * (0.5 * h));
        let k3 = gm * (y + &k2 * (0.5 * h));
        let k4 = g1 * (y + &k3 * h);
        y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    /// Propagates columns `[λ; κ]` of the augmented momentum equation from
    /// refined node `start`; returns the value at every refined node
    /// (entries before `start` for backward, after for forward).
    fn propagate_augmented(
        &self,
        init: DMatrix<f64>,
        start: usize,
        direction: Direction,
    ) -> Vec<Option<DMatrix<f64>>> {
        let grid = self.grid();
        let mut out: Vec<Option<DMatrix<f64>>> = vec![None; grid.len()];
        let gen = |i: usize| Self::generator(&self.jac_nodes[i], &self.dt_nodes[i]);
        let gen_mid = |i: usize| Self::generator(&self.jac_mid[i], &self.dt_mid[i]);
        let mut y = init;
        out[start] = Some(y.clone());
        match direction {
            Direction::Forward => {
                for i in start..grid.len() - 1 {
                    y = Self::step(&gen(i), &gen_mid(i), &gen(i + 1), &y, grid[i + 1] - grid[i]);
                    out[i + 1] = Some(y.clone());
                }
            }
            Direction::Backward => {
                for i in (1..=start).rev() {
                    y = Self::step(
                        &gen(i),
                        &gen_mid(i - 1),
                        &gen(i - 1),
                        &y,
                        grid[i - 1] - grid[i],
                    );
                    out[i - 1] = Some(y.clone());
                }
            }
        }
        out
    }

    /// Both directions from `start`, filling every refined node.
    fn propagate_both(&self, init: DMatrix<f64>, start: usize) -> Vec<DMatrix<f64>> {
        let fwd = self.propagate_augmented(init.clone(), start, Direction::Forward);
        let bwd = self.propagate_augmented(init, start, Direction::Backward);
        fwd.into_iter()
            .zip(bwd)
            .map(|(f, b)| f.or(b).expect("every node reached"))
            .collect()
    }

    /// Momentum path through `λ(t_start) = λ1` on the refined grid, where
    /// `start` is a refined-grid index. The second component of each entry
    /// is `κ(t) = ∫_{t_start}^t ∂H/∂t ds`.
    pub fn momentum_from(&self, lambda1: &DVector<f64>, start: usize) -> Vec<(DVector<f64>, f64)> {
        let d = self.dim;
        let mut init = DMatrix::zeros(d + 1, 1);
        init.view_mut((0, 0), (d, 1)).copy_from(lambda1);
        self.propagate_both(init, start)
            .into_iter()
            .map(|y| (y.view((0, 0), (d, 1)).column(0).into_owned(), y[(d, 0)]))
            .collect()
    }

    /// One-directional integration from refined node `start`.
    pub fn integrate_adjoint(
        &self,
        lambda1: &DVector<f64>,
        start: usize,
        direction: Direction,
    ) -> Vec<Option<DVector<f64>>> {
        let d = self.dim;
        let mut init = DMatrix::zeros(d + 1, 1);
        init.view_mut((0, 0), (d, 1)).copy_from(lambda1);
        self.propagate_augmented(init, start, direction)
            .into_iter()
            .map(|y| y.map(|y| y.view((0, 0), (d, 1)).column(0).into_owned()))
            .collect()
    }

    /// Fundamental matrices `Φ(t)` with `λ(t) = Φ(t) λ(t₀)`, and the rows
    /// `K(t)` with `∫_{t₀}^t ∂H/∂t ds = K(t) λ(t₀)`, on the refined grid.
    pub fn transition(&self) -> Transition {
        let d = self.dim;
        let mut init = DMatrix::zeros(d + 1, d);
        init.view_mut((0, 0), (d, d)).fill_with_identity();
        let all = self.propagate_augmented(init, 0, Direction::Forward);
        let mut phi = Vec::with_capacity(all.len());
        let mut k = Vec::with_capacity(all.len());
        for y in all.into_iter().map(|y| y.expect("forward pass fills all")) {
            phi.push(y.view((0, 0), (d, d)).into_owned());
            k.push(y.row(d).transpose());
        }
        Transition { phi, k }
    }

    /// Variational flow `δż = A δz` from `δz(t₀)` on the refined grid.
    pub fn tangent_flow(&self, dz0: &DVector<f64>) -> Vec<DVector<f64>> {
        let grid = self.grid();
        let mut out = Vec::with_capacity(grid.len());
        let mut y = DMatrix::from_column_slice(dz0.len(), 1, dz0.as_slice());
        out.push(dz0.clone());
        for i in 0..grid.len() - 1 {
            y = Self::step(
                &self.jac_nodes[i],
                &self.jac_mid[i],
                &self.jac_nodes[i + 1],
                &y,
                grid[i + 1] - grid[i],
            );
            out.push(y.column(0).into_owned());
        }
        out
    }
}

/// Adjoint fundamental matrix on the refined grid.
#[derive(Debug, Clone)]
pub struct Transition {
    pub phi: Vec<DMatrix<f64>>,
    /// `K(t)` as column vectors.
    pub k: Vec<DVector<f64>>,
}
