use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::CovectorPath;
use crate::systems::Mode;

use super::classify::Context;
use super::tulczyjew::down_path;
use super::{ClassificationProblem, TimeMode};

/// Comparison controls sampled at `t₁` before a transfer is accepted.
pub const TRANSFER_COMPARISONS: usize = 64;

/// Largest admissible change of `a₀` along the transferred path.
pub const A0_DRIFT_TOL: f64 = 1e-10;

/// Outcome of moving a mechanical certificate to the kinematic system.
#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub t1: f64,
    /// `q̂(t₁)`, the kinematic initial condition.
    pub initial_covector: Vec<f64>,
    pub comparisons: usize,
    /// Largest `⟨q̂(t₁), v̂_k⟩` over the comparison controls.
    pub worst_pairing: f64,
    /// Largest `|⟨q̂(t₁), v̂_k⟩|`.
    pub max_abs_pairing: f64,
    pub stationarity_max: f64,
    /// Largest violation of the Hamiltonian condition of the time mode.
    pub hamiltonian_residual: f64,
    pub nontriviality_min_norm: f64,
    pub a0_drift: f64,
    /// Smallest decrease-direction pairing at the sample times.
    pub decrease_min: f64,
    /// Largest perturbation pairing at the sample times.
    pub perturbation_max: f64,
    /// `a₀ = 0` along the transferred path.
    pub abnormal: bool,
    /// Every kinematic condition holds.
    pub passed: bool,
    /// Transferred path on the kinematic grid.
    #[serde(skip)]
    pub path: CovectorPath,
}

fn node_at(times: &[f64], t1: f64) -> Option<usize> {
    let tol = 1e-9 * t1.abs().max(1.0);
    times.iter().position(|t| (t - t1).abs() <= tol)
}

/// Transfers a mechanical certificate at `t₁` to the kinematic problem.
///
/// The velocity momenta `q̂(t₁)` must pair nonpositively with every sampled
/// kinematic perturbation at `t₁`; the path through `q̂(t₁)` is then checked
/// against the kinematic conditions.
pub fn transfer_momenta(
    kinematic: &ClassificationProblem<'_>,
    mech_certificate: &CovectorPath,
    t1: f64,
) -> Result<TransferReport> {
    if kinematic.mode != Mode::Kinematic {
        return Err(Error::InvalidTrajectory(
            "transfer needs a kinematic problem".into(),
        ));
    }
    if mech_certificate.mode != Mode::Mechanical {
        return Err(Error::InvalidTrajectory(
            "transfer needs a mechanical certificate".into(),
        ));
    }
    let n = kinematic.system.n();
    if mech_certificate.state_dim() != n {
        return Err(Error::DimensionMismatch {
            what: "mechanical certificate",
            expected: n,
            got: mech_certificate.state_dim(),
        });
    }
    let cert_node = node_at(&mech_certificate.times, t1).ok_or_else(|| {
        Error::InvalidTrajectory(format!("t1={t1} is not a node of the certificate grid"))
    })?;
    let kin_node = node_at(&kinematic.trajectory.times, t1).ok_or_else(|| {
        Error::InvalidTrajectory(format!("t1={t1} is not a node of the kinematic grid"))
    })?;
    let settings = &kinematic.settings;
    let tol = &settings.tolerances;
    let q_hat = down_path(mech_certificate).covectors[cert_node].clone();

    let ctx = Context::new(kinematic)?;
    let model = ctx.model.as_ref();
    let traj = &kinematic.trajectory;
    let z1 = model.pack(traj, kin_node)?;
    let w1 = &traj.controls[kin_node];
    let f1 = model.field(t1, &z1, w1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut worst_pairing = f64::NEG_INFINITY;
    let mut max_abs_pairing = 0.0f64;
    for _ in 0..TRANSFER_COMPARISONS {
        let comparison = w1.map(|c| c + rng.gen_range(-1.0..=1.0));
        let pairing = q_hat.dot(&(model.field(t1, &z1, &comparison)? - &f1));
        worst_pairing = worst_pairing.max(pairing);
        max_abs_pairing = max_abs_pairing.max(pairing.abs());
    }
    if worst_pairing > tol.sign_slack {
        return Err(Error::TransferRejected { t1, worst_pairing });
    }

    let start = ctx.lin.node_index()[kin_node];
    let path = ctx.lin.momentum_from(&q_hat, start);
    let last = path.len() - 1;
    let mut stationarity_max = 0.0f64;
    let mut hamiltonian_residual = 0.0f64;
    let mut decrease_min = f64::INFINITY;
    let mut perturbation_max = f64::NEG_INFINITY;
    let directions = model.decrease_directions();
    let first = &ctx.samples[0];
    let conserved = |i: usize, field: &DVector<f64>| path[i].0.dot(field) - path[i].1;
    let reference = match settings.time_mode {
        TimeMode::Free => -path[last].1,
        TimeMode::Fixed => conserved(first.index, &first.field),
    };
    for s in &ctx.samples {
        let l = &path[s.index].0;
        stationarity_max = stationarity_max.max((&s.stationarity * l).amax());
        hamiltonian_residual =
            hamiltonian_residual.max((conserved(s.index, &s.field) - reference).abs());
        for d in &directions {
            decrease_min = decrease_min.min(l.dot(d));
        }
        for p in &s.perturbations {
            perturbation_max = perturbation_max.max(l.dot(p));
        }
    }
    let nontriviality_min_norm = path
        .iter()
        .map(|(l, _)| l.norm())
        .fold(f64::INFINITY, f64::min);
    let a0 = q_hat[0];
    let a0_drift = path
        .iter()
        .map(|(l, _)| (l[0] - a0).abs())
        .fold(0.0, f64::max);
    let scale = q_hat.norm().max(1.0);
    let abnormal = a0.abs() <= tol.sign_slack && a0_drift <= A0_DRIFT_TOL;
    let passed = stationarity_max <= tol.feasibility * scale
        && hamiltonian_residual <= tol.feasibility * scale
        && nontriviality_min_norm >= tol.nontriviality
        && a0_drift <= A0_DRIFT_TOL
        && decrease_min >= -tol.sign_slack
        && perturbation_max <= tol.sign_slack;
    let kin_path = CovectorPath {
        mode: Mode::Kinematic,
        times: traj.times.clone(),
        covectors: ctx
            .lin
            .node_index()
            .iter()
            .map(|&i| path[i].0.clone())
            .collect(),
    };
    Ok(TransferReport {
        t1,
        initial_covector: q_hat.iter().cloned().collect(),
        comparisons: TRANSFER_COMPARISONS,
        worst_pairing,
        max_abs_pairing,
        stationarity_max,
        hamiltonian_residual,
        nontriviality_min_norm,
        a0_drift,
        decrease_min,
        perturbation_max,
        abnormal,
        passed,
        path: kin_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{reference_kinematic, section5_system};
    use crate::geometry::SourceKind;
    use crate::pmp::Settings;
    use crate::systems::CostSpec;

    fn certificate(times: &[f64], p3: f64, a: f64, q1: f64) -> CovectorPath {
        CovectorPath {
            mode: Mode::Mechanical,
            times: times.to_vec(),
            covectors: times
                .iter()
                .map(|t| DVector::from_vec(vec![0.0, 0.0, 0.0, p3, 0.0, q1, 0.0, -p3 * t + a]))
                .collect(),
        }
    }

    fn settings() -> Settings {
        Settings {
            min_nodes: 200,
            ..Settings::default()
        }
    }

    #[test]
    fn abnormal_family_transfers_to_abnormal_covector() {
        let sys = section5_system(SourceKind::Table);
        let cost = CostSpec::time_optimal();
        let kin =
            ClassificationProblem::new(&sys, &cost, reference_kinematic(), settings()).unwrap();
        let times = kin.trajectory.times.clone();
        for (p3, a, t1) in [(0.6, 0.8, 0.3), (0.0, 1.0, 0.0), (-1.0, 0.2, 1.0)] {
            let r = transfer_momenta(&kin, &certificate(&times, p3, a, 0.0), t1).unwrap();
            assert!(r.passed && r.abnormal, "{r:?}");
            assert!(r.max_abs_pairing <= 1e-12);
            let want = -p3 * t1 + a;
            for c in &r.path.covectors {
                assert!((c - DVector::from_vec(vec![0.0, 0.0, 0.0, want])).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn positive_pairing_is_rejected() {
        let sys = section5_system(SourceKind::Table);
        let cost = CostSpec::time_optimal();
        let kin =
            ClassificationProblem::new(&sys, &cost, reference_kinematic(), settings()).unwrap();
        let cert = certificate(&kin.trajectory.times.clone(), 0.0, 0.0, 1.0);
        match transfer_momenta(&kin, &cert, 0.5) {
            Err(Error::TransferRejected { t1, worst_pairing }) => {
                assert_eq!(t1, 0.5);
                assert!(worst_pairing > 0.0);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn t1_off_grid_is_an_input_error() {
        let sys = section5_system(SourceKind::Table);
        let cost = CostSpec::time_optimal();
        let kin =
            ClassificationProblem::new(&sys, &cost, reference_kinematic(), settings()).unwrap();
        let cert = certificate(&kin.trajectory.times.clone(), 0.0, 1.0, 0.0);
        assert!(matches!(
            transfer_momenta(&kin, &cert, 0.123),
            Err(Error::InvalidTrajectory(_))
        ));
    }
}
