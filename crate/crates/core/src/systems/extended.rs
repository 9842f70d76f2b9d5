use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;

use super::{spray_term, ChristoffelPairing, CostSpec, SystemSpec, Trajectory, TrajectoryKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Kinematic,
    Mechanical,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Kinematic => "kinematic",
            Mode::Mechanical => "mechanical",
        })
    }
}

/// Dynamics on the extended state `z` with cost coordinates prepended.
///
/// Kinematic: `z = (x⁰, x)`. Mechanical: `z = (x⁰, x, v⁰, v)`.
pub trait ExtendedDynamics: Sync {
    fn mode(&self) -> Mode;
    fn system(&self) -> &SystemSpec;
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize {
        self.system().m()
    }
    /// `ż = f(t, z, u)`.
    fn field(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;
    /// `∂f/∂z`. Constraint multipliers are held fixed.
    fn state_jacobian(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// `∂f/∂u`.
    fn control_jacobian(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>>;
    /// `∂f/∂t`.
    fn time_partial(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>>;
    /// Cost-decrease directions that a covector must pair nonnegatively with.
    fn decrease_directions(&self) -> Vec<DVector<f64>>;
    /// Extended state at grid node `k`; cost coordinates read as zero when
    /// the trajectory is not extended.
    fn pack(&self, traj: &Trajectory, k: usize) -> Result<DVector<f64>>;
    /// Names of the covector components, e.g. `a0, a1, …`.
    fn covector_names(&self) -> Vec<String>;
    /// Indices of the cost coordinates in `z`.
    fn cost_slots(&self) -> Vec<usize>;
}

/// Kinematic system extended by `ẋ⁰ = G(t, x)`.
#[derive(Debug, Clone)]
pub struct KinematicExtended<'a> {
    system: &'a SystemSpec,
    g: Expr,
    dg_dx: Vec<Expr>,
    dg_dt: Expr,
}

impl<'a> KinematicExtended<'a> {
    pub fn new(system: &'a SystemSpec, cost: &CostSpec) -> Self {
        let g = cost.kinematic().clone();
        let dg_dx = (0..system.n()).map(|i| g.derivative(i)).collect();
        let dg_dt = g.derivative(system.time_slot());
        KinematicExtended {
            system,
            g,
            dg_dx,
            dg_dt,
        }
    }

    fn split<'z>(&self, t: f64, z: &'z DVector<f64>) -> Result<(&'z [f64], Vec<f64>)> {
        let n = self.system.n();
        if z.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                what: "extended kinematic state",
                expected: n + 1,
                got: z.len(),
            });
        }
        let x = &z.as_slice()[1..];
        let mut tx = x.to_vec();
        tx.push(t);
        Ok((x, tx))
    }

    /// `G(t, x)`.
    pub fn cost_rate(&self, t: f64, x: &[f64]) -> Result<f64> {
        let mut p = x.to_vec();
        p.push(t);
        Ok(self.g.eval(&p)?)
    }
}

impl ExtendedDynamics for KinematicExtended<'_> {
    fn mode(&self) -> Mode {
        Mode::Kinematic
    }

    fn system(&self) -> &SystemSpec {
        self.system
    }

    fn state_dim(&self) -> usize {
        self.system.n() + 1
    }

    fn field(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let (x, tx) = self.split(t, z)?;
        let xd = self.system.kinematic_rhs(x, u.as_slice())?;
        let mut out = DVector::zeros(self.state_dim());
        out[0] = self.g.eval(&tx)?;
        out.rows_mut(1, xd.len()).copy_from(&xd);
        Ok(out)
    }

    fn state_jacobian(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (x, tx) = self.split(t, z)?;
        let n = self.system.n();
        let mut a = DMatrix::zeros(n + 1, n + 1);
        for (i, d) in self.dg_dx.iter().enumerate() {
            a[(0, 1 + i)] = d.eval(&tx)?;
        }
        for (s, jac) in self.system.frame_jacobians(x)?.iter().enumerate() {
            let mut block = a.view_mut((1, 1), (n, n));
            block += jac * u[s];
        }
        Ok(a)
    }

    fn control_jacobian(
        &self,
        t: f64,
        z: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Result<DMatrix<f64>> {
        let (x, _) = self.split(t, z)?;
        let n = self.system.n();
        let mut b = DMatrix::zeros(n + 1, self.system.m());
        b.view_mut((1, 0), (n, self.system.m()))
            .copy_from(&self.system.frame_at(x)?);
        Ok(b)
    }

    fn time_partial(&self, t: f64, z: &DVector<f64>, _u: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, tx) = self.split(t, z)?;
        let mut out = DVector::zeros(self.state_dim());
        out[0] = self.dg_dt.eval(&tx)?;
        Ok(out)
    }

    fn decrease_directions(&self) -> Vec<DVector<f64>> {
        let mut d = DVector::zeros(self.state_dim());
        d[0] = -1.0;
        vec![d]
    }

    fn pack(&self, traj: &Trajectory, k: usize) -> Result<DVector<f64>> {
        if traj.kind != TrajectoryKind::Kinematic {
            return Err(Error::InvalidTrajectory(
                "kinematic dynamics need a kinematic trajectory".into(),
            ));
        }
        let x = &traj.states[k];
        let mut z = DVector::zeros(x.len() + 1);
        z[0] = traj.cost_position.as_ref().map_or(0.0, |c| c[k]);
        z.rows_mut(1, x.len()).copy_from(x);
        Ok(z)
    }

    fn covector_names(&self) -> Vec<String> {
        (0..=self.system.n()).map(|i| format!("a{i}")).collect()
    }

    fn cost_slots(&self) -> Vec<usize> {
        vec![0]
    }
}

/// Mechanical system extended by `ẋ⁰ = v⁰`, `v̇⁰ = F(t, x, v)`.
#[derive(Debug, Clone)]
pub struct MechanicalExtended<'a> {
    system: &'a SystemSpec,
    pairing: ChristoffelPairing,
    f: Expr,
    df_dx: Vec<Expr>,
    df_dv: Vec<Expr>,
    df_dt: Expr,
}

struct MechPoint<'z> {
    x: &'z [f64],
    v0: f64,
    v: &'z [f64],
    // [x…, t, v…]
    txv: Vec<f64>,
}

impl<'a> MechanicalExtended<'a> {
    pub fn new(system: &'a SystemSpec, cost: &CostSpec, pairing: ChristoffelPairing) -> Self {
        let f = cost.mechanical().clone();
        let n = system.n();
        let df_dx = (0..n).map(|i| f.derivative(i)).collect();
        let df_dv = (0..n)
            .map(|i| f.derivative(system.velocity_slot(i)))
            .collect();
        let df_dt = f.derivative(system.time_slot());
        MechanicalExtended {
            system,
            pairing,
            f,
            df_dx,
            df_dv,
            df_dt,
        }
    }

    pub fn pairing(&self) -> ChristoffelPairing {
        self.pairing
    }

    fn split<'z>(&self, t: f64, z: &'z DVector<f64>) -> Result<MechPoint<'z>> {
        let n = self.system.n();
        if z.len() != 2 * n + 2 {
            return Err(Error::DimensionMismatch {
                what: "extended mechanical state",
                expected: 2 * n + 2,
                got: z.len(),
            });
        }
        let s = z.as_slice();
        let x = &s[1..=n];
        let v = &s[n + 2..];
        let mut txv = x.to_vec();
        txv.push(t);
        txv.extend_from_slice(v);
        Ok(MechPoint {
            x,
            v0: s[n + 1],
            v,
            txv,
        })
    }

    /// Index of `v⁰` in the extended state.
    pub fn v0_index(&self) -> usize {
        self.system.n() + 1
    }

    /// `F(t, x, v)`.
    pub fn cost_rate(&self, t: f64, x: &[f64], v: &[f64]) -> Result<f64> {
        let mut p = x.to_vec();
        p.push(t);
        p.extend_from_slice(v);
        Ok(self.f.eval(&p)?)
    }
}

impl ExtendedDynamics for MechanicalExtended<'_> {
    fn mode(&self) -> Mode {
        Mode::Mechanical
    }

    fn system(&self) -> &SystemSpec {
        self.system
    }

    fn state_dim(&self) -> usize {
        2 * self.system.n() + 2
    }

    fn field(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.split(t, z)?;
        let n = self.system.n();
        let lambda = self
            .system
            .solve_multipliers_with(p.x, p.v, u.as_slice(), self.pairing)?;
        let (xd, vd) = self.system.mechanical_rhs_with(
            p.x,
            p.v,
            u.as_slice(),
            lambda.as_slice(),
            self.pairing,
        )?;
        let mut out = DVector::zeros(2 * n + 2);
        out[0] = p.v0;
        out.rows_mut(1, n).copy_from(&xd);
        out[n + 1] = self.f.eval(&p.txv)?;
        out.rows_mut(n + 2, n).copy_from(&vd);
        Ok(out)
    }

    fn state_jacobian(&self, t: f64, z: &DVector<f64>, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let p = self.split(t, z)?;
        let n = self.system.n();
        let (xi, v0i, vi) = (1, n + 1, n + 2);
        let mut a = DMatrix::zeros(2 * n + 2, 2 * n + 2);
        a[(0, v0i)] = 1.0;
        for i in 0..n {
            a[(xi + i, vi + i)] = 1.0;
            a[(v0i, xi + i)] = self.df_dx[i].eval(&p.txv)?;
            a[(v0i, vi + i)] = self.df_dv[i].eval(&p.txv)?;
        }
        let (gamma, dgamma) = self.system.connection().gamma_with_derivatives(p.x)?;
        let dforce = self.system.force_jacobian(p.x)?;
        let dframes = self.system.frame_jacobians(p.x)?;
        for i in 0..n {
            let dspray = spray_term(&dgamma[i], p.v, self.pairing);
            for k in 0..n {
                let mut d = -dspray[k] + dforce[(k, i)];
                for (s, jac) in dframes.iter().enumerate() {
                    d += u[s] * jac[(k, i)];
                }
                a[(vi + k, xi + i)] = d;
                let dv = match self.pairing {
                    ChristoffelPairing::Full => (0..n)
                        .map(|b| (gamma.get(k, i, b) + gamma.get(k, b, i)) * p.v[b])
                        .sum::<f64>(),
                    ChristoffelPairing::PaperLiteral => 2.0 * gamma.get(k, i, i) * p.v[i],
                };
                a[(vi + k, vi + i)] = -dv;
            }
        }
        Ok(a)
    }

    fn control_jacobian(
        &self,
        t: f64,
        z: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Result<DMatrix<f64>> {
        let p = self.split(t, z)?;
        let n = self.system.n();
        let m = self.system.m();
        let mut b = DMatrix::zeros(2 * n + 2, m);
        b.view_mut((n + 2, 0), (n, m))
            .copy_from(&self.system.frame_at(p.x)?);
        Ok(b)
    }

    fn time_partial(&self, t: f64, z: &DVector<f64>, _u: &DVector<f64>) -> Result<DVector<f64>> {
        let p = self.split(t, z)?;
        let mut out = DVector::zeros(self.state_dim());
        out[self.v0_index()] = self.df_dt.eval(&p.txv)?;
        Ok(out)
    }

    fn decrease_directions(&self) -> Vec<DVector<f64>> {
        let mut d1 = DVector::zeros(self.state_dim());
        d1[self.v0_index()] = -1.0;
        let mut d2 = d1.clone();
        d2[0] = -1.0;
        vec![d1, d2]
    }

    fn pack(&self, traj: &Trajectory, k: usize) -> Result<DVector<f64>> {
        let Some(vel) = traj.velocity(k) else {
            return Err(Error::InvalidTrajectory(
                "mechanical dynamics need a mechanical trajectory".into(),
            ));
        };
        let n = self.system.n();
        let mut z = DVector::zeros(2 * n + 2);
        z[0] = traj.cost_position.as_ref().map_or(0.0, |c| c[k]);
        z.rows_mut(1, n).copy_from(&traj.states[k]);
        z[n + 1] = traj.cost_velocity.as_ref().map_or(0.0, |c| c[k]);
        z.rows_mut(n + 2, n).copy_from(vel);
        Ok(z)
    }

    fn covector_names(&self) -> Vec<String> {
        let n = self.system.n();
        (0..=n)
            .map(|i| format!("p{i}"))
            .chain((0..=n).map(|i| format!("q{i}")))
            .collect()
    }

    fn cost_slots(&self) -> Vec<usize> {
        vec![0, self.v0_index()]
    }
}

/// Extended dynamics of the given mode, as a boxed trait object.
pub fn extend<'a>(
    system: &'a SystemSpec,
    cost: &CostSpec,
    mode: Mode,
    pairing: ChristoffelPairing,
) -> Box<dyn ExtendedDynamics + 'a> {
    match mode {
        Mode::Kinematic => Box::new(KinematicExtended::new(system, cost)),
        Mode::Mechanical => Box::new(MechanicalExtended::new(system, cost, pairing)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::section5_system;
    use crate::geometry::SourceKind;
    use crate::systems::test_systems::plane_with_e1;

    fn fd_jacobian(
        dyn_: &dyn ExtendedDynamics,
        t: f64,
        z: &DVector<f64>,
        u: &DVector<f64>,
    ) -> DMatrix<f64> {
        let d = z.len();
        let h = 1e-6;
        let mut out = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let col = (dyn_.field(t, &zp, u).unwrap() - dyn_.field(t, &zm, u).unwrap()) / (2.0 * h);
            out.set_column(j, &col);
        }
        out
    }

    #[test]
    fn kinematic_jacobian_matches_finite_differences() {
        let sys = section5_system(SourceKind::Table);
        let cost = CostSpec::expression(
            crate::expr::parse("x*y + t*z^2", &sys.cost_symbols()).unwrap(),
            &sys,
        )
        .unwrap();
        let k = KinematicExtended::new(&sys, &cost);
        let z = DVector::from_vec(vec![0.0, 0.2, -0.3, 0.4]);
        let u = DVector::from_vec(vec![0.7, -1.1]);
        let a = k.state_jacobian(0.3, &z, &u).unwrap();
        assert!((a - fd_jacobian(&k, 0.3, &z, &u)).amax() < 1e-8);
    }

    #[test]
    fn mechanical_jacobian_matches_fd_without_constraint_force() {
        // On the plane with D = span{e1} the multiplier only cancels the
        // constant force, so the frozen-multiplier Jacobian is exact.
        let sys = plane_with_e1();
        let cost = CostSpec::time_optimal();
        let m = MechanicalExtended::new(&sys, &cost, ChristoffelPairing::Full);
        let z = DVector::from_vec(vec![0.0, 0.1, 0.2, 0.5, 1.0, 0.0]);
        let u = DVector::from_vec(vec![0.3]);
        let a = m.state_jacobian(0.0, &z, &u).unwrap();
        assert!((a - fd_jacobian(&m, 0.0, &z, &u)).amax() < 1e-8);
    }

    #[test]
    fn mechanical_jacobian_velocity_block_section5() {
        // Only the unconstrained part: compare against FD of the free field.
        for pairing in [ChristoffelPairing::Full, ChristoffelPairing::PaperLiteral] {
            let sys = section5_system(SourceKind::LeviCivita);
            let cost = CostSpec::time_optimal();
            let m = MechanicalExtended::new(&sys, &cost, pairing);
            let x = [0.2, 0.1, -0.1];
            let v = [0.3, 0.7, -0.4];
            let u = [0.5, -0.2];
            let mut z = vec![0.0];
            z.extend_from_slice(&x);
            z.push(0.0);
            z.extend_from_slice(&v);
            let z = DVector::from_vec(z);
            let a = m
                .state_jacobian(0.0, &z, &DVector::from_column_slice(&u))
                .unwrap();
            let free = |x: &[f64], v: &[f64]| {
                sys.mechanical_rhs_with(x, v, &u, &[0.0], pairing)
                    .unwrap()
                    .1
            };
            let h = 1e-6;
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let dx = (free(&xp, &v) - free(&xm, &v)) / (2.0 * h);
                let mut vp = v;
                let mut vm = v;
                vp[i] += h;
                vm[i] -= h;
                let dv = (free(&x, &vp) - free(&x, &vm)) / (2.0 * h);
                for k in 0..3 {
                    assert!((a[(5 + k, 1 + i)] - dx[k]).abs() < 1e-7, "{pairing:?} dx");
                    assert!((a[(5 + k, 5 + i)] - dv[k]).abs() < 1e-7, "{pairing:?} dv");
                }
            }
        }
    }

    #[test]
    fn decrease_directions() {
        let sys = plane_with_e1();
        let cost = CostSpec::time_optimal();
        let k = KinematicExtended::new(&sys, &cost);
        assert_eq!(k.decrease_directions()[0].as_slice(), &[-1.0, 0.0, 0.0]);
        let m = MechanicalExtended::new(&sys, &cost, ChristoffelPairing::Full);
        let d = m.decrease_directions();
        assert_eq!(d[0].as_slice(), &[0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(d[1].as_slice(), &[-1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
    }
}
