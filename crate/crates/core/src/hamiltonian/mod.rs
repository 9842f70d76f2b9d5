//! Pontryagin Hamiltonians of the extended systems, momentum equations along
//! frozen trajectories, elementary perturbation vectors and separating
//! conditions.

mod adjoint;
mod covector;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ode;
use crate::systems::{ExtendedDynamics, KinematicExtended, MechanicalExtended, Mode, Trajectory};

pub use adjoint::{Direction, Linearization, Transition, MIN_INTEGRATION_NODES};
pub use covector::CovectorPath;

/// Default slack of the separating inequalities.
pub const SEPARATING_TOL: f64 = 1e-9;

/// `H = ⟨λ, f(t, z, u)⟩` for any extended model.
pub fn hamiltonian(
    model: &dyn ExtendedDynamics,
    t: f64,
    lambda: &DVector<f64>,
    z: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64> {
    if lambda.len() != model.state_dim() {
        return Err(Error::DimensionMismatch {
            what: "covector",
            expected: model.state_dim(),
            got: lambda.len(),
        });
    }
    Ok(lambda.dot(&model.field(t, z, u)?))
}

/// `H_k = a₀ G + Σ aᵢ Σ_s wˢ Y_sⁱ` at `z = (x⁰, x)`.
pub fn hk_eval(
    model: &KinematicExtended<'_>,
    t: f64,
    a: &DVector<f64>,
    z: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    hamiltonian(model, t, a, z, w)
}

/// `H_m = p₀v⁰ + q₀F + pᵢvⁱ + qₖ v̇ᵏ` at `z = (x⁰, x, v⁰, v)`, with the
/// multiplier force folded into `v̇`.
pub fn hm_eval(
    model: &MechanicalExtended<'_>,
    t: f64,
    lambda: &DVector<f64>,
    z: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64> {
    hamiltonian(model, t, lambda, z, u)
}

/// Difference of the extended field at a comparison control and at the
/// reference control, at a trajectory node.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationVector {
    pub t: f64,
    pub vector: DVector<f64>,
    pub comparison: DVector<f64>,
}

/// Elementary perturbation vector at grid node `k` of `traj`.
pub fn perturbation_vector(
    model: &dyn ExtendedDynamics,
    traj: &Trajectory,
    k: usize,
    comparison: &DVector<f64>,
) -> Result<PerturbationVector> {
    if comparison.len() != model.control_dim() {
        return Err(Error::DimensionMismatch {
            what: "comparison control",
            expected: model.control_dim(),
            got: comparison.len(),
        });
    }
    let t = traj.times[k];
    let z = model.pack(traj, k)?;
    let vector = model.field(t, &z, comparison)? - model.field(t, &z, &traj.controls[k])?;
    Ok(PerturbationVector {
        t,
        vector,
        comparison: comparison.clone(),
    })
}

/// Outcome of [`separating_check`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SeparatingCheck {
    /// `⟨λ, v̂⟩` for every perturbation.
    pub pairings: Vec<f64>,
    /// `⟨λ, d⟩` for every decrease direction.
    pub decrease_pairings: Vec<f64>,
    /// `q₀ ≤ tol` (mechanical only; true for kinematic).
    pub q0_ok: bool,
    /// False when the covector is zero; such covectors never pass.
    pub nontrivial: bool,
    pub verdict: bool,
}

impl SeparatingCheck {
    pub fn worst_pairing(&self) -> f64 {
        self.pairings
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Separating conditions: every `⟨λ, v̂⟩ ≤ tol`, every decrease pairing
/// `≥ -tol` and, in mechanical mode, `q₀ ≤ tol`.
pub fn separating_check(
    model: &dyn ExtendedDynamics,
    lambda: &DVector<f64>,
    perturbations: &[PerturbationVector],
    tol: f64,
) -> SeparatingCheck {
    let pairings: Vec<f64> = perturbations
        .iter()
        .map(|p| lambda.dot(&p.vector))
        .collect();
    let decrease_pairings: Vec<f64> = model
        .decrease_directions()
        .iter()
        .map(|d| lambda.dot(d))
        .collect();
    let q0_ok = match model.mode() {
        Mode::Kinematic => true,
        Mode::Mechanical => lambda[model.system().n() + 1] <= tol,
    };
    let nontrivial = lambda.amax() > 0.0;
    let verdict = nontrivial
        && q0_ok
        && pairings.iter().all(|p| *p <= tol)
        && decrease_pairings.iter().all(|p| *p >= -tol);
    SeparatingCheck {
        pairings,
        decrease_pairings,
        q0_ok,
        nontrivial,
        verdict,
    }
}

/// Joint RK4 integration of `ż = f(t, z, u)`, `λ̇ = -(∂f/∂z)ᵀλ` with a
/// constant control; returns `(z, λ)` at each of the `steps + 1` nodes.
pub fn integrate_joint(
    model: &dyn ExtendedDynamics,
    z0: &DVector<f64>,
    lambda0: &DVector<f64>,
    u: &DVector<f64>,
    t0: f64,
    tf: f64,
    steps: usize,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    let d = model.state_dim();
    let grid: Vec<f64> = (0..=steps)
        .map(|i| t0 + (tf - t0) * i as f64 / steps as f64)
        .collect();
    let mut y0 = DVector::zeros(2 * d);
    y0.rows_mut(0, d).copy_from(z0);
    y0.rows_mut(d, d).copy_from(lambda0);
    let path = ode::rk4_on_grid(
        |t, y: &DVector<f64>| {
            let z = y.rows(0, d).into_owned();
            let l = y.rows(d, d).into_owned();
            let mut out = DVector::zeros(2 * d);
            out.rows_mut(0, d).copy_from(&model.field(t, &z, u)?);
            out.rows_mut(d, d)
                .copy_from(&(-model.state_jacobian(t, &z, u)?.transpose() * l));
            Ok(out)
        },
        &grid,
        y0,
    )?;
    Ok(path
        .into_iter()
        .map(|y| (y.rows(0, d).into_owned(), y.rows(d, d).into_owned()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        reference_kinematic, reference_mechanical, section5_system, MechanicalReading,
    };
    use crate::geometry::SourceKind;
    use crate::systems::{ChristoffelPairing, CostSpec};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn hk_examples() {
        let sys = section5_system(SourceKind::Table);
        let cost = CostSpec::time_optimal();
        let k = KinematicExtended::new(&sys, &cost);
        let z = v(&[0.3, 0.0, 0.3, 0.0]);
        for w in [v(&[0.0, 1.0]), v(&[2.5, -0.4])] {
            assert_eq!(
                hk_eval(&k, 0.3, &v(&[0.0, 0.0, 0.0, 4.0]), &z, &w).unwrap(),
                0.0
            );
            assert_eq!(
                hk_eval(&k, 0.3, &v(&[-1.0, 0.0, 0.0, 4.0]), &z, &w).unwrap(),
                -1.0
            );
            assert_eq!(hk_eval(&k, 0.3, &DVector::zeros(4), &z, &w).unwrap(), 0.0);
        }
    }

    #[test]
    fn hm_examples_along_lifted_reference() {
        for pairing in [ChristoffelPairing::Full, ChristoffelPairing::PaperLiteral] {
            let sys = section5_system(SourceKind::Table);
            let cost = CostSpec::time_optimal();
            let m = MechanicalExtended::new(&sys, &cost, pairing);
            let traj = reference_mechanical(MechanicalReading::CONSISTENT);
            let (p3, a) = (0.8, -0.3);
            for k in [0, 37, 100] {
                let t = traj.times[k];
                let z = m.pack(&traj, k).unwrap();
                let u = &traj.controls[k];
                let abn = v(&[0.0, 0.0, 0.0, p3, 0.0, 0.0, 0.0, -p3 * t + a]);
                assert!(hm_eval(&m, t, &abn, &z, u).unwrap().abs() < 1e-15);
                let l2 = v(&[0.0, 0.0, 0.0, p3, -1.0, 0.0, 0.0, -p3 * t + a]);
                assert!((hm_eval(&m, t, &l2, &z, u).unwrap() + 1.0).abs() < 1e-15);
                assert_eq!(hm_eval(&m, t, &DVector::zeros(8), &z, u).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn perturbation_examples() {
        let sys = section5_system(SourceKind::Table);
        let cost = CostSpec::time_optimal();
        let k = KinematicExtended::new(&sys, &cost);
        let traj = reference_kinematic();
        let p = perturbation_vector(&k, &traj, 40, &v(&[0.3, 1.7])).unwrap();
        assert!((p.vector - v(&[0.0, 0.3, 0.7, 0.0])).amax() < 1e-15);
        let p = perturbation_vector(&k, &traj, 40, &traj.controls[40]).unwrap();
        assert_eq!(p.vector.amax(), 0.0);

        let m = MechanicalExtended::new(&sys, &cost, ChristoffelPairing::Full);
        let traj = reference_mechanical(MechanicalReading::CONSISTENT);
        let p = perturbation_vector(&m, &traj, 40, &v(&[0.3, 1.7])).unwrap();
        let want = v(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.3 - 1.0, 1.7, 0.0]);
        assert!((p.vector - want).amax() < 1e-14);
    }

    #[test]
    fn separating_examples() {
        let sys = section5_system(SourceKind::Table);
        let cost = CostSpec::time_optimal();
        let k = KinematicExtended::new(&sys, &cost);
        let traj = reference_kinematic();
        let perts: Vec<_> = (0..20)
            .map(|i| {
                let c = v(&[(i as f64) - 10.0, 0.5 * i as f64]);
                perturbation_vector(&k, &traj, 5 * i, &c).unwrap()
            })
            .collect();
        let check = separating_check(&k, &v(&[0.0, 0.0, 0.0, 1.0]), &perts, SEPARATING_TOL);
        assert!(check.verdict);
        assert!(check.pairings.iter().all(|p| *p == 0.0));
        let zero = separating_check(&k, &DVector::zeros(4), &perts, SEPARATING_TOL);
        assert!(!zero.verdict && !zero.nontrivial);

        let m = MechanicalExtended::new(&sys, &cost, ChristoffelPairing::Full);
        let traj = reference_mechanical(MechanicalReading::CONSISTENT);
        let perts: Vec<_> = (0..20)
            .map(|i| perturbation_vector(&m, &traj, 5 * i, &v(&[i as f64, -(i as f64)])).unwrap())
            .collect();
        let t = traj.times[50];
        let check = separating_check(
            &m,
            &v(&[0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -2.0 * t + 1.0]),
            &perts,
            SEPARATING_TOL,
        );
        assert!(check.verdict);
        let positive_q0 = separating_check(
            &m,
            &v(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
            &perts,
            SEPARATING_TOL,
        );
        assert!(!positive_q0.q0_ok && !positive_q0.verdict);
    }
}
