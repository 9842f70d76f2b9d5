//! Kinematic, mechanical and extended dynamics of a fully actuated
//! nonholonomic system, plus control conversion between the two descriptions.

mod convert;
mod cost;
mod extended;
mod frozen;
mod simulate;
mod trajectory;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbols};
use crate::geometry::{
    self, Christoffel, ChristoffelSource, Connection, Frame, FrameRole, MetricField, SourceKind,
};
use crate::linalg;

pub use convert::MAX_FRAME_CONDITION;
pub use convert::{kin_to_mech_controls, mech_to_kin_controls, ControlConversion};
pub use cost::{lift_cost, CostKind, CostSpec};
pub use extended::{extend, ExtendedDynamics, KinematicExtended, MechanicalExtended, Mode};
pub use frozen::{extend_trajectory, FrozenTrajectory};
pub use simulate::INITIAL_VELOCITY_TOL;
pub use simulate::{simulate, ControlSignal, SimulationSetup};
pub use trajectory::{format_float, Trajectory, TrajectoryKind};

/// Which Christoffel terms enter the mechanical velocity equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChristoffelPairing {
    /// All `Γ^k_ij v^i v^j` terms.
    #[default]
    Full,
    /// Only the squared-velocity terms `Γ^k_ii (v^i)^2`, matching the
    /// printed equations of the worked ℝ³ example.
    PaperLiteral,
}

/// `Γ^k_ij v^i v^j` (or its diagonal part) for each `k`.
pub fn spray_term(gamma: &Christoffel, v: &[f64], pairing: ChristoffelPairing) -> Vec<f64> {
    match pairing {
        ChristoffelPairing::Full => gamma.contract(v, v),
        ChristoffelPairing::PaperLiteral => {
            let n = gamma.dim();
            (0..n)
                .map(|k| (0..n).map(|i| gamma.get(k, i, i) * v[i] * v[i]).sum())
                .collect()
        }
    }
}

/// Everything needed to build a [`SystemSpec`].
#[derive(Debug, Clone)]
pub struct SystemParts {
    pub name: String,
    pub coords: Vec<String>,
    pub inputs: Vec<Vec<Expr>>,
    pub metric: Vec<Vec<Expr>>,
    pub force: Option<Vec<Expr>>,
    pub christoffel: ChristoffelSource,
    pub working_box: Vec<(f64, f64)>,
}

/// A nonholonomic mechanical control system in one global chart on ℝⁿ.
///
/// The symbol table is laid out as `[coords…, t, v_coords…]`: geometric
/// fields only use the coordinate prefix, kinematic costs may also use `t`,
/// and lifted mechanical costs use the whole table.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    name: String,
    symbols: Symbols,
    inputs: Frame,
    metric: MetricField,
    force: Vec<Expr>,
    source: ChristoffelSource,
    connection: Connection,
    working_box: Vec<(f64, f64)>,
    // input_jac[s][j][i] = ∂_i Y_s^j
    input_jac: Vec<Vec<Vec<Expr>>>,
    // force_jac[k][i] = ∂_i F^k
    force_jac: Vec<Vec<Expr>>,
}

/// Prefix used for velocity symbols in lifted costs.
pub const VELOCITY_PREFIX: &str = "v_";

impl SystemSpec {
    pub fn new(parts: SystemParts) -> Result<Self> {
        let n = parts.coords.len();
        if n == 0 {
            return Err(Error::InvalidSpec("no coordinates declared".into()));
        }
        for (i, c) in parts.coords.iter().enumerate() {
            if c == "t" || c.starts_with(VELOCITY_PREFIX) {
                return Err(Error::InvalidSpec(format!(
                    "coordinate name `{c}` is reserved (`t` and `{VELOCITY_PREFIX}*`)"
                )));
            }
            if parts.coords[..i].contains(c) {
                return Err(Error::InvalidSpec(format!("duplicate coordinate `{c}`")));
            }
        }
        let symbols = Symbols::new(
            parts
                .coords
                .iter()
                .cloned()
                .chain(std::iter::once("t".to_string()))
                .chain(parts.coords.iter().map(|c| format!("{VELOCITY_PREFIX}{c}"))),
        );
        let inputs = Frame::new(parts.inputs, FrameRole::Input)?;
        if inputs.dim() != n {
            return Err(Error::DimensionMismatch {
                what: "input frame components",
                expected: n,
                got: inputs.dim(),
            });
        }
        if inputs.len() > n {
            return Err(Error::InvalidSpec(format!(
                "{} inputs exceed state dimension {n}",
                inputs.len()
            )));
        }
        let metric = MetricField::new(parts.metric)?;
        if metric.dim() != n {
            return Err(Error::DimensionMismatch {
                what: "metric rows",
                expected: n,
                got: metric.dim(),
            });
        }
        let force = parts.force.unwrap_or_else(|| vec![Expr::zero(); n]);
        if force.len() != n {
            return Err(Error::DimensionMismatch {
                what: "force components",
                expected: n,
                got: force.len(),
            });
        }
        let exprs = (0..inputs.len())
            .flat_map(|s| inputs.field(s).iter())
            .chain(
                (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| metric.entry(i, j)),
            )
            .chain(force.iter());
        for e in exprs {
            if e.arity() > n {
                return Err(Error::InvalidSpec(
                    "frames, metric and force may only depend on the coordinates".into(),
                ));
            }
        }
        if parts.working_box.len() != n {
            return Err(Error::DimensionMismatch {
                what: "working box intervals",
                expected: n,
                got: parts.working_box.len(),
            });
        }
        if parts.working_box.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::InvalidSpec(
                "working box interval with lo > hi".into(),
            ));
        }
        let connection = Connection::new(&parts.christoffel, &metric)?;
        let input_jac = (0..inputs.len())
            .map(|s| {
                inputs
                    .field(s)
                    .iter()
                    .map(|e| (0..n).map(|i| e.derivative(i)).collect())
                    .collect()
            })
            .collect();
        let force_jac = force
            .iter()
            .map(|e| (0..n).map(|i| e.derivative(i)).collect())
            .collect();
        Ok(SystemSpec {
            name: parts.name,
            symbols,
            inputs,
            metric,
            force,
            source: parts.christoffel,
            connection,
            working_box: parts.working_box,
            input_jac,
            force_jac,
        })
    }

    /// The same system with another Christoffel source.
    pub fn with_source(&self, source: ChristoffelSource) -> Result<SystemSpec> {
        let connection = Connection::new(&source, &self.metric)?;
        Ok(SystemSpec {
            source,
            connection,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.metric.dim()
    }

    /// Control dimension.
    pub fn m(&self) -> usize {
        self.inputs.len()
    }

    /// Full symbol table `[coords…, t, v_coords…]`.
    pub fn symbols(&self) -> &Symbols {
        &self.symbols
    }

    pub fn coord_symbols(&self) -> Symbols {
        self.symbols.prefix(self.n())
    }

    /// Symbols allowed in kinematic costs: coordinates and `t`.
    pub fn cost_symbols(&self) -> Symbols {
        self.symbols.prefix(self.n() + 1)
    }

    pub fn time_slot(&self) -> usize {
        self.n()
    }

    pub fn velocity_slot(&self, i: usize) -> usize {
        self.n() + 1 + i
    }

    pub fn inputs(&self) -> &Frame {
        &self.inputs
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn force(&self) -> &[Expr] {
        &self.force
    }

    pub fn christoffel_source(&self) -> &ChristoffelSource {
        &self.source
    }

    pub fn source_kind(&self) -> SourceKind {
        self.source.kind()
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    pub fn working_box(&self) -> &[(f64, f64)] {
        &self.working_box
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "state",
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_controls(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.m() {
            return Err(Error::DimensionMismatch {
                what: "controls",
                expected: self.m(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `Σ_s w^s Y_s(x)`.
    pub fn kinematic_rhs(&self, x: &[f64], w: &[f64]) -> Result<DVector<f64>> {
        self.check_point(x)?;
        self.check_controls(w)?;
        Ok(self.inputs.at(x)? * DVector::from_column_slice(w))
    }

    /// `n × m` input frame matrix at `x`.
    pub fn frame_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.inputs.at(x)
    }

    /// g-orthonormal basis of `D⊥` at `x`.
    pub fn complement_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        geometry::complement_frame(&self.inputs, &self.metric, x)
    }

    pub fn force_at(&self, x: &[f64]) -> Result<DVector<f64>> {
        geometry::eval_all(&self.force, x)
    }

    /// `∂_i Y_s^j` at `x`, one `n × n` matrix (rows `j`, columns `i`) per input.
    pub fn frame_jacobians(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.n();
        self.input_jac
            .iter()
            .map(|rows| {
                let mut m = DMatrix::zeros(n, n);
                for (j, row) in rows.iter().enumerate() {
                    for (i, e) in row.iter().enumerate() {
                        m[(j, i)] = e.eval(x)?;
                    }
                }
                Ok(m)
            })
            .collect()
    }

    /// `∂_i F^k` at `x`.
    pub fn force_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (k, row) in self.force_jac.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                m[(k, i)] = e.eval(x)?;
            }
        }
        Ok(m)
    }

    /// Frame coordinates of `v` by a Gram solve: returns `(w, residual,
    /// condition)` where `residual = |v - Σ w^s Y_s|` and `condition` is the
    /// condition number of the frame Gram matrix `Yᵀ g Y`.
    pub fn frame_coordinates(&self, x: &[f64], v: &[f64]) -> Result<(DVector<f64>, f64, f64)> {
        self.check_point(x)?;
        self.check_point(v)?;
        let y = self.frame_at(x)?;
        let g = self.metric.eval(x)?;
        let gram = y.transpose() * &g * &y;
        let condition = linalg::spd_condition(&gram);
        let v = DVector::from_column_slice(v);
        let rhs = y.transpose() * &g * &v;
        let w = gram
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::RankDeficientFrame { point: x.to_vec() })?;
        let residual = (&v - &y * &w).norm();
        Ok((w, residual, condition))
    }

    /// g-length of the `D⊥` component of `v`; zero iff `v ∈ D`.
    pub fn distribution_residual(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let z = self.complement_at(x)?;
        let g = self.metric.eval(x)?;
        let coeffs = z.transpose() * g * DVector::from_column_slice(v);
        Ok(coeffs.norm())
    }

    /// Unconstrained acceleration `-Γ(v,v) + F + Σ u^s Y_s`.
    fn free_acceleration(
        &self,
        x: &[f64],
        v: &[f64],
        u: &[f64],
        pairing: ChristoffelPairing,
    ) -> Result<DVector<f64>> {
        let gamma = self.connection.gamma(x)?;
        let spray = DVector::from_vec(spray_term(&gamma, v, pairing));
        Ok(-spray + self.force_at(x)? + self.frame_at(x)? * DVector::from_column_slice(u))
    }

    /// Velocity equation `v̇ = -Γ(v,v) + F + Σ λ^r Z_r + Σ u^s Y_s`; returns
    /// `(ẋ, v̇)` with `ẋ = v`.
    pub fn mechanical_rhs(
        &self,
        x: &[f64],
        v: &[f64],
        u: &[f64],
        multipliers: &[f64],
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.mechanical_rhs_with(x, v, u, multipliers, ChristoffelPairing::Full)
    }

    pub fn mechanical_rhs_with(
        &self,
        x: &[f64],
        v: &[f64],
        u: &[f64],
        multipliers: &[f64],
        pairing: ChristoffelPairing,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_point(x)?;
        self.check_point(v)?;
        self.check_controls(u)?;
        let z = self.complement_at(x)?;
        if multipliers.len() != z.ncols() {
            return Err(Error::DimensionMismatch {
                what: "multipliers",
                expected: z.ncols(),
                got: multipliers.len(),
            });
        }
        let accel = self.free_acceleration(x, v, u, pairing)?
            + &z * DVector::from_column_slice(multipliers);
        Ok((DVector::from_column_slice(v), accel))
    }

    /// Multipliers `λ` keeping `v` in `D`.
    ///
    /// Writing `v = Σ w^s Y_s`, the constraint is preserved iff
    /// `v̇ - Σ w^s (∂_v Y_s)` has no `D⊥` component, which gives the Gram
    /// system `Σ_r' g(Z_r, Z_r') λ^r' = g(Z_r, Σ w^s ∂_v Y_s - a)` with `a` the
    /// unconstrained acceleration.
    pub fn solve_multipliers(&self, x: &[f64], v: &[f64], u: &[f64]) -> Result<DVector<f64>> {
        self.solve_multipliers_with(x, v, u, ChristoffelPairing::Full)
    }

    pub fn solve_multipliers_with(
        &self,
        x: &[f64],
        v: &[f64],
        u: &[f64],
        pairing: ChristoffelPairing,
    ) -> Result<DVector<f64>> {
        self.check_point(x)?;
        self.check_point(v)?;
        self.check_controls(u)?;
        let z = self.complement_at(x)?;
        if z.ncols() == 0 {
            return Ok(DVector::zeros(0));
        }
        let g = self.metric.eval(x)?;
        let (w, _, _) = self.frame_coordinates(x, v)?;
        let vv = DVector::from_column_slice(v);
        let mut frame_drift = DVector::zeros(self.n());
        for (s, jac) in self.frame_jacobians(x)?.iter().enumerate() {
            frame_drift += jac * &vv * w[s];
        }
        let accel = self.free_acceleration(x, v, u, pairing)?;
        let gram = z.transpose() * &g * &z;
        let rhs = z.transpose() * &g * (frame_drift - accel);
        gram.cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::SingularGram { point: x.to_vec() })
    }

    /// Constraint force `Σ λ^r Z_r` with `λ` from [`Self::solve_multipliers_with`].
    pub fn constraint_force(
        &self,
        x: &[f64],
        v: &[f64],
        u: &[f64],
        pairing: ChristoffelPairing,
    ) -> Result<DVector<f64>> {
        let lambda = self.solve_multipliers_with(x, v, u, pairing)?;
        if lambda.is_empty() {
            return Ok(DVector::zeros(self.n()));
        }
        Ok(self.complement_at(x)? * lambda)
    }

    /// Deterministic sample of points in the working box: the corners, the
    /// center and a low-discrepancy interior set.
    pub fn box_samples(&self, count: usize) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut out = Vec::new();
        let center: Vec<f64> = self
            .working_box
            .iter()
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        out.push(center);
        if n <= 6 {
            for mask in 0..(1usize << n) {
                out.push(
                    self.working_box
                        .iter()
                        .enumerate()
                        .map(|(i, (a, b))| if mask >> i & 1 == 1 { *b } else { *a })
                        .collect(),
                );
            }
        }
        // Halton sequence with the first n primes as bases.
        const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        for k in 1..=count as u64 {
            out.push(
                self.working_box
                    .iter()
                    .enumerate()
                    .map(|(i, (a, b))| {
                        let base = PRIMES[i % PRIMES.len()];
                        let (mut f, mut r, mut idx) = (1.0, 0.0, k);
                        while idx > 0 {
                            f /= base as f64;
                            r += f * (idx % base) as f64;
                            idx /= base;
                        }
                        a + (b - a) * r
                    })
                    .collect(),
            );
        }
        out
    }

    /// Re-checks the system invariants on box samples: symmetric positive
    /// definite metric and an input frame of full rank `m`.
    pub fn validate(&self, samples: usize) -> Result<Validation> {
        let points = self.box_samples(samples);
        for x in &points {
            self.metric.at(x)?;
            if self.inputs.rank_at(x)? != self.m() {
                return Err(Error::RankDeficientFrame { point: x.clone() });
            }
        }
        let orthonormality =
            geometry::orthonormality_residual(&self.inputs, &self.metric, &points)?;
        Ok(Validation {
            points: points.len(),
            orthonormality_residual: orthonormality,
        })
    }
}

/// Outcome of [`SystemSpec::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub points: usize,
    /// Informational: zero iff the input frame is g-orthonormal on the samples.
    pub orthonormality_residual: f64,
}

#[cfg(test)]
pub(crate) mod test_systems {
    use super::*;
    use crate::expr::parse;

    pub fn plane_with_e1() -> SystemSpec {
        let s = Symbols::new(["x1", "x2"]);
        let p = |t: &str| parse(t, &s).unwrap();
        SystemSpec::new(SystemParts {
            name: "plane".into(),
            coords: vec!["x1".into(), "x2".into()],
            inputs: vec![vec![p("1"), p("0")]],
            metric: vec![vec![p("1"), p("0")], vec![p("0"), p("1")]],
            force: Some(vec![p("0"), p("1")]),
            christoffel: ChristoffelSource::LeviCivita,
            working_box: vec![(-1.0, 1.0), (-1.0, 1.0)],
        })
        .unwrap()
    }

    pub fn flat(n: usize) -> SystemSpec {
        let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let eye = |i: usize, j: usize| if i == j { Expr::one() } else { Expr::zero() };
        SystemSpec::new(SystemParts {
            name: "flat".into(),
            coords,
            inputs: (0..n)
                .map(|s| (0..n).map(|j| eye(s, j)).collect())
                .collect(),
            metric: (0..n)
                .map(|i| (0..n).map(|j| eye(i, j)).collect())
                .collect(),
            force: None,
            christoffel: ChristoffelSource::LeviCivita,
            working_box: vec![(-1.0, 1.0); n],
        })
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_systems::*;
    use super::*;
    use crate::fixtures::section5_system;
    use crate::ode;

    #[test]
    fn kinematic_rhs_examples() {
        let sys = section5_system(SourceKind::Table);
        assert_eq!(
            sys.kinematic_rhs(&[0.0, 0.0, 0.0], &[0.0, 1.0])
                .unwrap()
                .as_slice(),
            &[0.0, 1.0, 0.0]
        );
        assert_eq!(
            sys.kinematic_rhs(&[0.5, 0.0, 0.0], &[0.0, 1.0])
                .unwrap()
                .as_slice(),
            &[0.0, 0.5, 0.25]
        );
        assert_eq!(
            sys.kinematic_rhs(&[0.3, 0.2, 0.1], &[0.0, 0.0])
                .unwrap()
                .as_slice(),
            &[0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn mechanical_rhs_examples() {
        let flat = flat(3);
        let (xd, vd) = flat
            .mechanical_rhs(&[0.1, 0.2, 0.3], &[1.0, -2.0, 0.5], &[0.0, 0.0, 0.0], &[])
            .unwrap();
        assert_eq!(xd.as_slice(), &[1.0, -2.0, 0.5]);
        assert_eq!(vd.amax(), 0.0);

        let table = section5_system(SourceKind::Table);
        let (_, vd) = table
            .mechanical_rhs(&[0.0; 3], &[0.0, 1.0, 0.0], &[1.0, 0.0], &[0.0])
            .unwrap();
        assert_eq!(vd.as_slice(), &[0.0, 0.0, 0.0]);

        let lc = section5_system(SourceKind::LeviCivita);
        let (_, vd) = lc
            .mechanical_rhs(&[0.0; 3], &[0.0, 1.0, 0.0], &[1.0, 0.0], &[0.0])
            .unwrap();
        assert!((vd - DVector::from_vec(vec![2.0, 0.0, 0.0])).amax() < 1e-14);
    }

    #[test]
    fn multiplier_examples() {
        let flat = flat(2);
        let l = flat
            .solve_multipliers(&[0.3, 0.1], &[1.0, 2.0], &[0.5, 0.5])
            .unwrap();
        assert_eq!(l.len(), 0);

        let table = section5_system(SourceKind::Table);
        let l = table
            .solve_multipliers(&[0.0; 3], &[0.0, 1.0, 0.0], &[1.0, 0.0])
            .unwrap();
        assert_eq!(l.len(), 1);
        assert!(l[0].abs() < 1e-15);

        let plane = plane_with_e1();
        let l = plane
            .solve_multipliers(&[0.0, 0.0], &[1.0, 0.0], &[0.0])
            .unwrap();
        assert!((l[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_coordinates_examples() {
        let sys = section5_system(SourceKind::Table);
        let (w, res, _) = sys
            .frame_coordinates(&[0.5, 0.0, 0.0], &[0.0, 0.5, 0.25])
            .unwrap();
        assert!((w - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-14);
        assert!(res < 1e-14);
        let (w, _, _) = sys.frame_coordinates(&[0.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(w.amax(), 0.0);
    }

    #[test]
    fn constrained_flow_stays_in_distribution() {
        for kind in [SourceKind::Table, SourceKind::LeviCivita] {
            let sys = section5_system(kind);
            let u = [0.4, -0.7];
            let x0 = [0.1, 0.0, -0.05];
            let v0 = sys.kinematic_rhs(&x0, &[0.8, 0.6]).unwrap();
            let mut y = DVector::from_iterator(6, x0.iter().copied().chain(v0.iter().copied()));
            let h = 1e-3;
            let mut f = |_t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
                let (x, v) = (&y.as_slice()[..3], &y.as_slice()[3..]);
                let lam = sys.solve_multipliers(x, v, &u)?;
                let (xd, vd) = sys.mechanical_rhs(x, v, &u, lam.as_slice())?;
                Ok(DVector::from_iterator(
                    6,
                    xd.iter().chain(vd.iter()).copied(),
                ))
            };
            let mut worst: f64 = 0.0;
            for k in 0..1000 {
                y = ode::rk4_step(&mut f, k as f64 * h, &y, h).unwrap();
                let x = &y.as_slice()[..3];
                let v = &y.as_slice()[3..];
                let z = sys.complement_at(x).unwrap();
                let g = sys.metric().eval(x).unwrap();
                let drift = (z.transpose() * g * DVector::from_column_slice(v)).amax();
                worst = worst.max(drift);
            }
            assert!(worst < 1e-5, "{kind}: drift {worst}");
        }
    }

    #[test]
    fn reserved_coordinate_names_rejected() {
        let mut parts = SystemParts {
            name: "bad".into(),
            coords: vec!["t".into()],
            inputs: vec![vec![Expr::one()]],
            metric: vec![vec![Expr::one()]],
            force: None,
            christoffel: ChristoffelSource::LeviCivita,
            working_box: vec![(0.0, 1.0)],
        };
        assert!(SystemSpec::new(parts.clone()).is_err());
        parts.coords = vec!["v_x".into()];
        assert!(SystemSpec::new(parts.clone()).is_err());
        parts.coords = vec!["x".into()];
        assert!(SystemSpec::new(parts).is_ok());
    }

    #[test]
    fn validation_on_section5_box() {
        let sys = section5_system(SourceKind::Table);
        let v = sys.validate(20).unwrap();
        assert!(v.orthonormality_residual < 1e-12);
    }
}
