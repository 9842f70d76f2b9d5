//! Classification of a fixed trajectory as a normal, abnormal or strictly
//! abnormal extremal.
//!
//! Along a frozen trajectory every condition used here is linear in the
//! initial covector `c = λ(t₀)`, since `λ(t) = Φ(t) c` with `Φ` the adjoint
//! fundamental matrix. Each normalization case becomes a linear system:
//! homogeneous (abnormal, solved by a null space) or affine (normal, solved
//! by prioritized least squares), followed by sign checks on the resulting
//! covector path.

mod classify;
mod transfer;
mod tulczyjew;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{CovectorPath, MIN_INTEGRATION_NODES};
use crate::systems::{
    extend, extend_trajectory, ChristoffelPairing, CostSpec, Mode, SystemSpec, Trajectory,
    TrajectoryKind,
};

pub use classify::{
    build_constraint_system, classify, stationarity_rows, CaseKind, ConstraintSystem,
};
pub use transfer::{transfer_momenta, TransferReport};
pub use tulczyjew::{tulczyjew_down, tulczyjew_up, KinematicCovector, MechanicalCovector};

/// Numerical thresholds. Defaults are the documented ones; all can be
/// overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Singular values `σ ≤ rank_cut · σ_max` count as zero.
    pub rank_cut: f64,
    /// Largest relative residual of a feasible normal case.
    pub feasibility: f64,
    /// Slack on sign conditions (`q₀ ≤ slack`, decrease pairings `≥ -slack`).
    pub sign_slack: f64,
    /// Smallest admissible covector norm along the grid.
    pub nontriviality: f64,
    /// Largest admissible Hermite–Simpson defect of the input trajectory.
    pub dynamics: f64,
    /// Largest admissible `D⊥` component of mechanical velocities.
    pub distribution: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_cut: 1e-8,
            feasibility: 1e-6,
            sign_slack: 1e-9,
            nontriviality: 1e-8,
            dynamics: 1e-6,
            distribution: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeMode {
    /// `H ≡ 0`.
    Free,
    /// `H` constant.
    Fixed,
}

impl std::fmt::Display for TimeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TimeMode::Free => "free",
            TimeMode::Fixed => "fixed",
        })
    }
}

/// Smallest admissible number of constraint sample times.
pub const MIN_SAMPLE_TIMES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub tolerances: Tolerances,
    pub time_mode: TimeMode,
    /// Number of constraint sample times, evenly spaced over the grid.
    pub sample_count: usize,
    pub pairing: ChristoffelPairing,
    /// Also try the mechanical case `p₀ = 1`.
    pub allow_case4: bool,
    /// Try the normal cases at all; when false the verdict is `abnormal`
    /// or `none`.
    pub check_normal: bool,
    /// Reject trajectories that violate their own equations.
    pub check_dynamics: bool,
    /// Minimum nodes of the internal integration grid.
    pub min_nodes: usize,
    /// Comparison controls per sample time for the separating pairings.
    pub perturbations_per_sample: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tolerances: Tolerances::default(),
            time_mode: TimeMode::Free,
            sample_count: 21,
            pairing: ChristoffelPairing::Full,
            allow_case4: false,
            check_normal: true,
            check_dynamics: true,
            min_nodes: MIN_INTEGRATION_NODES,
            perturbations_per_sample: 4,
            seed: 0x5eed,
        }
    }
}

/// A trajectory to classify, with its system, cost and settings.
#[derive(Debug, Clone)]
pub struct ClassificationProblem<'a> {
    pub system: &'a SystemSpec,
    pub cost: &'a CostSpec,
    /// Extended trajectory (cost coordinates filled in on construction when
    /// missing).
    pub trajectory: Trajectory,
    pub mode: Mode,
    pub settings: Settings,
}

impl<'a> ClassificationProblem<'a> {
    pub fn new(
        system: &'a SystemSpec,
        cost: &'a CostSpec,
        trajectory: Trajectory,
        settings: Settings,
    ) -> Result<Self> {
        if settings.sample_count < MIN_SAMPLE_TIMES {
            return Err(Error::InvalidSpec(format!(
                "sample count {} below the minimum {MIN_SAMPLE_TIMES}",
                settings.sample_count
            )));
        }
        let mode = match trajectory.kind {
            TrajectoryKind::Kinematic => Mode::Kinematic,
            TrajectoryKind::Mechanical => Mode::Mechanical,
        };
        let trajectory = if trajectory.is_extended() {
            trajectory
        } else {
            let model = extend(system, cost, mode, settings.pairing);
            extend_trajectory(model.as_ref(), &trajectory, settings.min_nodes)?
        };
        Ok(ClassificationProblem {
            system,
            cost,
            trajectory,
            mode,
            settings,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Normal,
    Abnormal,
    Both,
    StrictlyAbnormal,
    None,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Normal => "normal",
            Verdict::Abnormal => "abnormal",
            Verdict::Both => "both",
            Verdict::StrictlyAbnormal => "strictly-abnormal",
            Verdict::None => "none",
        })
    }
}

/// What settled a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Feasible,
    /// Linear constraints have no (nontrivial) solution.
    Residual,
    /// Linear constraints are met but a sign condition fails.
    Inequality,
    /// Only the zero covector solves the constraints.
    Nontriviality,
    /// Case not tried by the settings.
    Excluded,
}

/// Per-case outcome.
#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub name: String,
    /// Fixed covector components, e.g. `{"p0": -1}`.
    pub normalization: Vec<(String, f64)>,
    pub feasible: bool,
    pub decided_by: Decision,
    /// Max normalized-row residual over `max(1, |c|)`.
    pub residual: f64,
    /// Null-space dimension of the homogeneous system (abnormal), or of
    /// the hard and soft constraint rows (normal).
    pub nullspace_dim: usize,
    pub singular_values: Vec<f64>,
    pub condition: f64,
    pub certificate_csv_ref: Option<String>,
    pub inequalities_ok: bool,
    /// Largest `q₀` along the grid (mechanical only).
    pub q0_max: Option<f64>,
    /// Smallest decrease-direction pairing at sample times.
    pub decrease_min: f64,
    /// Largest `⟨λ, v̂⟩` over sampled perturbations.
    pub perturbation_max: f64,
    /// Raw Hamiltonian at the sample times along the certificate.
    pub h_values: Vec<f64>,
    /// Largest stationarity row value along the certificate.
    pub stationarity_max: f64,
    pub initial_covector: Option<Vec<f64>>,
    /// Null-space basis (abnormal case), one vector per row.
    pub basis: Vec<Vec<f64>>,
    #[serde(skip)]
    pub certificate: Option<CovectorPath>,
}

/// Serialized settings block.
#[derive(Debug, Clone, Serialize)]
pub struct ReportSettings {
    pub tolerances: Tolerances,
    pub sample_times: Vec<f64>,
    pub christoffel_source: String,
    pub time_mode: TimeMode,
    pub pairing: ChristoffelPairing,
    pub allow_case4: bool,
    pub check_dynamics: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub mode: Mode,
    pub cases: Vec<CaseReport>,
    /// Smallest covector norm along the abnormal certificate (zero when
    /// there is none).
    pub nontriviality_min_norm: f64,
    /// Hermite–Simpson defect of the trajectory under its dynamics.
    pub dynamics_residual: f64,
    /// Largest `D⊥` velocity component (mechanical only).
    pub distribution_residual: Option<f64>,
    /// True when a normal case failed only through a sign condition.
    pub inequality_decided: bool,
    pub settings: ReportSettings,
}

impl ClassificationReport {
    pub fn case(&self, name: &str) -> Option<&CaseReport> {
        self.cases.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
