use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hamiltonian::CovectorPath;
use crate::ode;
use crate::systems::Mode;

/// Covector on the tangent bundle: base point, velocity and the momenta
/// `p` (dual to positions) and `q` (dual to velocities).
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalCovector {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub p: DVector<f64>,
    pub q: DVector<f64>,
}

/// Covector on the base: point and momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicCovector {
    pub x: DVector<f64>,
    pub a: DVector<f64>,
}

impl MechanicalCovector {
    /// Splits an extended state `(x⁰, x, v⁰, v)` and covector
    /// `(p₀, p, q₀, q)`; the cost coordinate stays in front of each block.
    pub fn from_extended(z: &DVector<f64>, lambda: &DVector<f64>) -> Self {
        let half = z.len() / 2;
        MechanicalCovector {
            x: z.rows(0, half).into_owned(),
            v: z.rows(half, half).into_owned(),
            p: lambda.rows(0, half).into_owned(),
            q: lambda.rows(half, half).into_owned(),
        }
    }

    /// `(p, q)` as one vector.
    pub fn momenta(&self) -> DVector<f64> {
        let k = self.p.len();
        let mut out = DVector::zeros(2 * k);
        out.rows_mut(0, k).copy_from(&self.p);
        out.rows_mut(k, k).copy_from(&self.q);
        out
    }
}

/// `(x, v, p, q) ↦ (x, q)`.
pub fn tulczyjew_down(cov: &MechanicalCovector) -> KinematicCovector {
    KinematicCovector {
        x: cov.x.clone(),
        a: cov.q.clone(),
    }
}

/// `(x(t), q(t)) ↦ (x, ẋ, q̇, q)` with time derivatives by three-point
/// finite differences on `times`.
pub fn tulczyjew_up(times: &[f64], path: &[KinematicCovector]) -> Result<Vec<MechanicalCovector>> {
    if times.len() < 3 || path.len() != times.len() {
        return Err(Error::GridTooCoarse {
            nodes: times.len().min(path.len()),
        });
    }
    ode::check_grid(times)?;
    let xs: Vec<DVector<f64>> = path.iter().map(|c| c.x.clone()).collect();
    let qs: Vec<DVector<f64>> = path.iter().map(|c| c.a.clone()).collect();
    let xdot = ode::finite_difference(times, &xs);
    let qdot = ode::finite_difference(times, &qs);
    Ok(path
        .iter()
        .zip(xdot)
        .zip(qdot)
        .map(|((c, v), p)| MechanicalCovector {
            x: c.x.clone(),
            v,
            p,
            q: c.a.clone(),
        })
        .collect())
}

/// Velocity momenta of a mechanical covector path, as a kinematic path.
pub(crate) fn down_path(path: &CovectorPath) -> CovectorPath {
    let half = path.covectors.first().map_or(0, |c| c.len() / 2);
    CovectorPath {
        mode: Mode::Kinematic,
        times: path.times.clone(),
        covectors: path
            .covectors
            .iter()
            .map(|c| c.rows(half, half).into_owned())
            .collect(),
    }
}
