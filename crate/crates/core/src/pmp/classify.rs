use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{CovectorPath, Linearization, Transition};
use crate::linalg;
use crate::systems::{extend, ExtendedDynamics, FrozenTrajectory, Mode};

use super::{
    CaseReport, ClassificationProblem, ClassificationReport, Decision, ReportSettings, TimeMode,
    Verdict,
};

/// Normalization case of the initial covector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseKind {
    /// `a₀ = 0` (kinematic) or `p₀ = q₀ = 0` (mechanical).
    Abnormal,
    /// Kinematic `a₀ = -1`.
    Normal,
    /// Mechanical `p₀ = 0`, `q₀ = -1`.
    Case2,
    /// Mechanical `p₀ = -1`, so `q₀(t) = q₀(t₀) + (t - t₀)`.
    Case3,
    /// Mechanical `p₀ = 1`.
    Case4,
}

impl CaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::Abnormal => "abnormal",
            CaseKind::Normal => "normal",
            CaseKind::Case2 => "case-2",
            CaseKind::Case3 => "case-3",
            CaseKind::Case4 => "case-4",
        }
    }

    /// Cases tried for a mode, in report order.
    pub fn for_mode(mode: Mode) -> Vec<CaseKind> {
        match mode {
            Mode::Kinematic => vec![CaseKind::Abnormal, CaseKind::Normal],
            Mode::Mechanical => vec![
                CaseKind::Abnormal,
                CaseKind::Case2,
                CaseKind::Case3,
                CaseKind::Case4,
            ],
        }
    }

    pub fn is_abnormal(&self) -> bool {
        *self == CaseKind::Abnormal
    }

    /// Fixed components `(index, name, value)` of the initial covector.
    fn normalization(&self, mode: Mode, n: usize) -> Vec<(usize, &'static str, f64)> {
        let q0 = n + 1;
        match (mode, self) {
            (Mode::Kinematic, CaseKind::Abnormal) => vec![(0, "a0", 0.0)],
            (Mode::Kinematic, _) => vec![(0, "a0", -1.0)],
            (Mode::Mechanical, CaseKind::Abnormal) => vec![(0, "p0", 0.0), (q0, "q0", 0.0)],
            (Mode::Mechanical, CaseKind::Case2) => vec![(0, "p0", 0.0), (q0, "q0", -1.0)],
            (Mode::Mechanical, CaseKind::Case3) | (Mode::Mechanical, CaseKind::Normal) => {
                vec![(0, "p0", -1.0)]
            }
            (Mode::Mechanical, CaseKind::Case4) => vec![(0, "p0", 1.0)],
        }
    }

    /// Preferred `q₀(t₀)` when the constraints leave it free: the value
    /// that keeps `q₀ ≤ -1` over the whole interval.
    fn preferred_q0(&self, duration: f64) -> Option<f64> {
        match self {
            CaseKind::Case3 => Some(-1.0 - duration),
            CaseKind::Case4 => Some(-1.0),
            _ => None,
        }
    }
}

/// Linear constraints on the initial covector `c` for one case.
///
/// `hard` holds normalization and stationarity rows, `soft` the Hamiltonian
/// rows, `preference` an optional tie-break. Every row has unit norm.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub case: CaseKind,
    pub hard: DMatrix<f64>,
    pub hard_rhs: DVector<f64>,
    pub soft: DMatrix<f64>,
    pub soft_rhs: DVector<f64>,
    pub preference: Option<(DMatrix<f64>, DVector<f64>)>,
    /// Singular values of `[hard; soft]`, descending.
    pub singular_values: Vec<f64>,
    /// Null-space dimension of `[hard; soft]`.
    pub nullspace_dim: usize,
    /// `σ_max / σ_min` over the retained singular values.
    pub condition: f64,
}

impl ConstraintSystem {
    /// `[hard; soft]` and its right-hand side.
    pub fn stacked(&self) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.hard.ncols();
        let (h, s) = (self.hard.nrows(), self.soft.nrows());
        let mut m = DMatrix::zeros(h + s, d);
        m.view_mut((0, 0), (h, d)).copy_from(&self.hard);
        m.view_mut((h, 0), (s, d)).copy_from(&self.soft);
        let mut b = DVector::zeros(h + s);
        b.rows_mut(0, h).copy_from(&self.hard_rhs);
        b.rows_mut(h, s).copy_from(&self.soft_rhs);
        (m, b)
    }
}

/// `∂H/∂u = (∂f/∂u)ᵀ λ` as rows acting on `λ(t)`.
fn stationarity_at(
    model: &dyn ExtendedDynamics,
    t: f64,
    z: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    Ok(model.control_jacobian(t, z, u)?.transpose())
}

/// Stationarity rows at time `t` acting on the covector `λ(t)`: one row per
/// input, the control coefficient of the Hamiltonian.
pub fn stationarity_rows(problem: &ClassificationProblem<'_>, t: f64) -> Result<DMatrix<f64>> {
    let model = extend(
        problem.system,
        problem.cost,
        problem.mode,
        problem.settings.pairing,
    );
    let frozen = FrozenTrajectory::new(
        model.as_ref(),
        &problem.trajectory,
        problem.trajectory.len(),
    )?;
    stationarity_at(model.as_ref(), t, &frozen.state(t), &frozen.control(t))
}

pub(super) struct Sample {
    /// Index in the refined grid.
    pub index: usize,
    pub t: f64,
    pub field: DVector<f64>,
    pub stationarity: DMatrix<f64>,
    pub perturbations: Vec<DVector<f64>>,
}

/// Problem data shared by all cases.
pub(super) struct Context<'p> {
    pub problem: &'p ClassificationProblem<'p>,
    pub model: Box<dyn ExtendedDynamics + 'p>,
    pub lin: Linearization,
    pub transition: Transition,
    pub samples: Vec<Sample>,
}

/// Evenly spaced indices into a grid of `len` nodes.
fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    let count = count.min(len);
    let mut out: Vec<usize> = (0..count)
        .map(|j| ((j as f64) * (len - 1) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

impl<'p> Context<'p> {
    pub(super) fn new(problem: &'p ClassificationProblem<'p>) -> Result<Self> {
        let settings = &problem.settings;
        let model = extend(problem.system, problem.cost, problem.mode, settings.pairing);
        let lin =
            Linearization::with_min_nodes(model.as_ref(), &problem.trajectory, settings.min_nodes)?;
        let transition = lin.transition();
        if transition
            .phi
            .iter()
            .any(|p| p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::DegenerateGrid(
                "adjoint transition is not finite".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        let mut samples = Vec::new();
        for index in sample_indices(lin.grid().len(), settings.sample_count) {
            let t = lin.grid()[index];
            let z = lin.frozen().state(t);
            let u = lin.frozen().control(t);
            let field = model.field(t, &z, &u)?;
            let stationarity = stationarity_at(model.as_ref(), t, &z, &u)?;
            let mut perturbations = Vec::with_capacity(settings.perturbations_per_sample);
            for _ in 0..settings.perturbations_per_sample {
                let comparison = u.map(|c| c + rng.gen_range(-1.0..=1.0));
                perturbations.push(model.field(t, &z, &comparison)? - &field);
            }
            samples.push(Sample {
                index,
                t,
                field,
                stationarity,
                perturbations,
            });
        }
        Ok(Context {
            problem,
            model,
            lin,
            transition,
            samples,
        })
    }

    fn dim(&self) -> usize {
        self.lin.dim()
    }

    fn n(&self) -> usize {
        self.problem.system.n()
    }

    /// Hamiltonian rows in `c`: `H(t_k) = 0` after transporting to `t_f`
    /// (free time), or `H(t_k) - ∫∂H/∂t = H(t₀)` (fixed time).
    fn hamiltonian_rows(&self) -> Vec<DVector<f64>> {
        let phi = &self.transition.phi;
        let k = &self.transition.k;
        let last = k.len() - 1;
        let value = |s: &Sample| phi[s.index].transpose() * &s.field;
        match self.problem.settings.time_mode {
            TimeMode::Free => self
                .samples
                .iter()
                .map(|s| value(s) + (&k[last] - &k[s.index]))
                .collect(),
            TimeMode::Fixed => {
                let first = value(&self.samples[0]) - &k[self.samples[0].index];
                self.samples[1..]
                    .iter()
                    .map(|s| value(s) - &k[s.index] - &first)
                    .collect()
            }
        }
    }

    fn assemble(&self, case: CaseKind) -> ConstraintSystem {
        let d = self.dim();
        let tol = self.problem.settings.tolerances.rank_cut;
        let mut hard_rows: Vec<(DVector<f64>, f64)> = Vec::new();
        for (idx, _, value) in case.normalization(self.problem.mode, self.n()) {
            let mut e = DVector::zeros(d);
            e[idx] = 1.0;
            hard_rows.push((e, value));
        }
        for s in &self.samples {
            let rows = &s.stationarity * &self.transition.phi[s.index];
            for r in 0..rows.nrows() {
                hard_rows.push((rows.row(r).transpose(), 0.0));
            }
        }
        let soft_rows: Vec<(DVector<f64>, f64)> = self
            .hamiltonian_rows()
            .into_iter()
            .map(|r| (r, 0.0))
            .collect();
        let build = |rows: &[(DVector<f64>, f64)]| {
            let mut m = DMatrix::zeros(rows.len(), d);
            let mut b = DVector::zeros(rows.len());
            for (i, (r, v)) in rows.iter().enumerate() {
                m.set_row(i, &r.transpose());
                b[i] = *v;
            }
            linalg::normalize_rows(&mut m, &mut b);
            (m, b)
        };
        let (hard, hard_rhs) = build(&hard_rows);
        let (soft, soft_rhs) = build(&soft_rows);
        let duration = self.problem.trajectory.tf() - self.problem.trajectory.t0();
        let preference = case.preferred_q0(duration).map(|q| {
            let mut e = DVector::zeros(d);
            e[self.n() + 1] = 1.0;
            build(&[(e, q)])
        });
        let mut sys = ConstraintSystem {
            case,
            hard,
            hard_rhs,
            soft,
            soft_rhs,
            preference,
            singular_values: Vec::new(),
            nullspace_dim: 0,
            condition: 1.0,
        };
        let (m, _) = sys.stacked();
        let ns = linalg::null_space(&m, tol);
        sys.condition = if ns.rank == 0 {
            1.0
        } else {
            ns.singular_values[0] / ns.singular_values[ns.rank - 1]
        };
        sys.nullspace_dim = ns.dim();
        sys.singular_values = ns.singular_values;
        sys
    }

    /// Sign checks and diagnostics of the covector path from `c`.
    fn evaluate(&self, case: CaseKind, c: &DVector<f64>, residual: f64) -> CaseReport {
        let tol = &self.problem.settings.tolerances;
        let path: Vec<DVector<f64>> = self.transition.phi.iter().map(|p| p * c).collect();
        let min_norm = path.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
        let q0_max = match self.problem.mode {
            Mode::Kinematic => None,
            Mode::Mechanical => Some(
                path.iter()
                    .map(|l| l[self.n() + 1])
                    .fold(f64::NEG_INFINITY, f64::max),
            ),
        };
        let directions = self.model.decrease_directions();
        let mut decrease_min = f64::INFINITY;
        let mut perturbation_max = f64::NEG_INFINITY;
        let mut stationarity_max = 0.0f64;
        let mut h_values = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let l = &path[s.index];
            for d in &directions {
                decrease_min = decrease_min.min(l.dot(d));
            }
            for p in &s.perturbations {
                perturbation_max = perturbation_max.max(l.dot(p));
            }
            stationarity_max = stationarity_max.max((&s.stationarity * l).amax());
            h_values.push(l.dot(&s.field));
        }
        let nontrivial = min_norm >= tol.nontriviality;
        let inequalities_ok =
            q0_max.is_none_or(|q| q <= tol.sign_slack) && decrease_min >= -tol.sign_slack;
        let linear_ok = residual <= tol.feasibility;
        let decided_by = if !linear_ok {
            Decision::Residual
        } else if !nontrivial {
            Decision::Nontriviality
        } else if !inequalities_ok {
            Decision::Inequality
        } else {
            Decision::Feasible
        };
        let nodes = self.lin.node_index();
        let certificate = CovectorPath {
            mode: self.problem.mode,
            times: self.problem.trajectory.times.clone(),
            covectors: nodes.iter().map(|&i| path[i].clone()).collect(),
        };
        CaseReport {
            name: case.name().to_string(),
            normalization: case
                .normalization(self.problem.mode, self.n())
                .into_iter()
                .map(|(_, name, v)| (name.to_string(), v))
                .collect(),
            feasible: decided_by == Decision::Feasible,
            decided_by,
            residual,
            nullspace_dim: 0,
            singular_values: Vec::new(),
            condition: 1.0,
            certificate_csv_ref: Some(format!("{}-{}.csv", self.problem.mode, case.name())),
            inequalities_ok,
            q0_max,
            decrease_min,
            perturbation_max,
            h_values,
            stationarity_max,
            initial_covector: Some(c.iter().cloned().collect()),
            basis: Vec::new(),
            certificate: Some(certificate),
        }
    }

    fn excluded(&self, case: CaseKind) -> CaseReport {
        CaseReport {
            name: case.name().to_string(),
            normalization: case
                .normalization(self.problem.mode, self.n())
                .into_iter()
                .map(|(_, name, v)| (name.to_string(), v))
                .collect(),
            feasible: false,
            decided_by: Decision::Excluded,
            residual: f64::NAN,
            nullspace_dim: 0,
            singular_values: Vec::new(),
            condition: 1.0,
            certificate_csv_ref: None,
            inequalities_ok: false,
            q0_max: None,
            decrease_min: f64::NAN,
            perturbation_max: f64::NAN,
            h_values: Vec::new(),
            stationarity_max: f64::NAN,
            initial_covector: None,
            basis: Vec::new(),
            certificate: None,
        }
    }

    fn solve(&self, case: CaseKind) -> CaseReport {
        let settings = &self.problem.settings;
        let excluded = match case {
            CaseKind::Abnormal => false,
            CaseKind::Case4 => !settings.check_normal || !settings.allow_case4,
            _ => !settings.check_normal,
        };
        if excluded {
            return self.excluded(case);
        }
        let sys = self.assemble(case);
        let tol = settings.tolerances.rank_cut;
        let mut report = if case.is_abnormal() {
            let (m, _) = sys.stacked();
            let ns = linalg::null_space(&m, tol);
            let basis: Vec<DVector<f64>> = ns.basis.column_iter().map(|c| c.into_owned()).collect();
            match basis.first() {
                Some(c) => {
                    let residual = (&m * c).amax() / c.norm().max(1.0);
                    let mut r = self.evaluate(case, c, residual);
                    r.basis = basis.iter().map(|b| b.iter().cloned().collect()).collect();
                    r
                }
                None => {
                    let mut r = self.evaluate(case, &DVector::zeros(self.dim()), 0.0);
                    r.feasible = false;
                    r.decided_by = Decision::Nontriviality;
                    r.certificate = None;
                    r.certificate_csv_ref = None;
                    r.initial_covector = None;
                    r
                }
            }
        } else {
            let mut tiers = vec![
                (sys.hard.clone(), sys.hard_rhs.clone()),
                (sys.soft.clone(), sys.soft_rhs.clone()),
            ];
            if let Some(p) = &sys.preference {
                tiers.push(p.clone());
            }
            let (c, residuals) = linalg::tiered_lstsq(&tiers, self.dim(), tol);
            let worst = residuals[..2].iter().map(|r| r.amax()).fold(0.0, f64::max);
            self.evaluate(case, &c, worst / c.norm().max(1.0))
        };
        report.nullspace_dim = sys.nullspace_dim;
        report.singular_values = sys.singular_values;
        report.condition = sys.condition;
        report
    }
}

/// Constraint system of one case (builds the linearization from scratch).
pub fn build_constraint_system(
    problem: &ClassificationProblem<'_>,
    case: CaseKind,
) -> Result<ConstraintSystem> {
    let ctx = Context::new(problem)?;
    Ok(ctx.assemble(case))
}

/// Largest `D⊥` velocity component over the nodes, with its time.
fn distribution_check(problem: &ClassificationProblem<'_>) -> Result<Option<(f64, f64)>> {
    if problem.mode != Mode::Mechanical {
        return Ok(None);
    }
    let traj = &problem.trajectory;
    let mut worst = (0.0f64, traj.t0());
    for k in 0..traj.len() {
        let v = traj.velocity(k).expect("mechanical trajectory");
        let r = problem
            .system
            .distribution_residual(traj.states[k].as_slice(), v.as_slice())?;
        if r > worst.0 {
            worst = (r, traj.times[k]);
        }
    }
    Ok(Some(worst))
}

/// Runs every case and combines them into a verdict.
pub fn classify(problem: &ClassificationProblem<'_>) -> Result<ClassificationReport> {
    let settings = &problem.settings;
    let ctx = Context::new(problem)?;
    let (dynamics_residual, dyn_time) = ctx.lin.frozen().dynamics_defect(ctx.model.as_ref())?;
    let distribution = distribution_check(problem)?;
    if settings.check_dynamics {
        if dynamics_residual > settings.tolerances.dynamics {
            return Err(Error::DynamicsMismatch {
                residual: dynamics_residual,
                time: dyn_time,
            });
        }
        if let Some((r, t)) = distribution {
            if r > settings.tolerances.distribution {
                return Err(Error::DynamicsMismatch {
                    residual: r,
                    time: t,
                });
            }
        }
    }
    let cases: Vec<CaseReport> = CaseKind::for_mode(problem.mode)
        .par_iter()
        .map(|case| ctx.solve(*case))
        .collect();
    let abnormal = &cases[0];
    let abnormal_ok = abnormal.feasible;
    let normal_ok = cases[1..].iter().any(|c| c.feasible);
    let verdict = match (abnormal_ok, normal_ok, settings.check_normal) {
        (true, _, false) => Verdict::Abnormal,
        (false, _, false) => Verdict::None,
        (true, false, true) => Verdict::StrictlyAbnormal,
        (true, true, true) => Verdict::Both,
        (false, true, true) => Verdict::Normal,
        (false, false, true) => Verdict::None,
    };
    let nontriviality_min_norm = abnormal.certificate.as_ref().map_or(0.0, |_| {
        let c = DVector::from_vec(
            abnormal
                .initial_covector
                .clone()
                .expect("certificate has a covector"),
        );
        ctx.transition
            .phi
            .iter()
            .map(|p| (p * &c).norm())
            .fold(f64::INFINITY, f64::min)
    });
    let inequality_decided = cases[1..]
        .iter()
        .any(|c| c.decided_by == Decision::Inequality);
    Ok(ClassificationReport {
        verdict,
        mode: problem.mode,
        nontriviality_min_norm,
        dynamics_residual,
        distribution_residual: distribution.map(|d| d.0),
        inequality_decided,
        settings: ReportSettings {
            tolerances: settings.tolerances,
            sample_times: ctx.samples.iter().map(|s| s.t).collect(),
            christoffel_source: problem.system.source_kind().to_string(),
            time_mode: settings.time_mode,
            pairing: settings.pairing,
            allow_case4: settings.allow_case4,
            check_dynamics: settings.check_dynamics,
        },
        cases,
    })
}
