//! The ℝ³ strict-abnormal example: system, reference curves and an
//! end-to-end reproduction routine.
//!
//! System: coordinates `(x, y, z)`, distribution spanned by `X = ∂x` and
//! `Y = (1-x)∂y + x²∂z`, metric `dx² + ψ(x)(dy² + dz²)` with
//! `ψ = ((1-x)² + x⁴)⁻¹`, no external force, time-optimal cost. The
//! reference curve is `γ(t) = (0, t, 0)` on `[0, 1]` with `w = (0, 1)`.

mod reproduce;

pub use reproduce::{
    reproduce_section5, CheckItem, SecondaryReport, Section5Report, CERTIFICATE_TRANSFER_TIMES,
    MEMBER_TRANSFER_TIMES,
};

use nalgebra::DVector;

use crate::error::Result;
use crate::geometry::{ChristoffelSource, SourceKind};
use crate::specfile::{load_spec_str, LoadedSpec};
use crate::systems::{SystemSpec, Trajectory};

/// Shipped spec file.
pub const SECTION5_JSON: &str = include_str!("../../../fixtures/section5.json");
/// Extended kinematic reference, 101 nodes.
pub const SECTION5_KINEMATIC_CSV: &str = include_str!("../../../fixtures/section5_kinematic.csv");
/// Extended mechanical reference (`v⁰ = t`, `u = (1, 0)`), 101 nodes.
pub const SECTION5_MECHANICAL_CSV: &str = include_str!("../../../fixtures/section5_mechanical.csv");

/// Number of grid nodes of the reference curves.
pub const REFERENCE_NODES: usize = 101;

/// How the mechanical reference is read.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MechanicalReading {
    /// `v⁰ ≡ 1`, `x⁰ = t` instead of integrating `v̇⁰ = 1` from zero.
    pub paper_tuple: bool,
    /// Second control component.
    pub u2: f64,
}

impl MechanicalReading {
    /// `v⁰ = t`, `x⁰ = t²/2`, `u = (1, 0)`: the reading that satisfies the
    /// dynamics.
    pub const CONSISTENT: MechanicalReading = MechanicalReading {
        paper_tuple: false,
        u2: 0.0,
    };
    /// The tuple and controls as printed: `v⁰ ≡ 1`, `u = (1, 1)`.
    pub const PRINTED: MechanicalReading = MechanicalReading {
        paper_tuple: true,
        u2: 1.0,
    };
}

/// Spec, system and reference curves for one Christoffel source.
#[derive(Debug, Clone)]
pub struct Section5Fixture {
    pub spec: LoadedSpec,
    pub source: SourceKind,
    pub kinematic: Trajectory,
    pub mechanical: Trajectory,
}

impl Section5Fixture {
    pub fn system(&self) -> &SystemSpec {
        &self.spec.system
    }
}

/// Loads the shipped spec with the given Christoffel source.
pub fn build_section5(source: SourceKind) -> Result<Section5Fixture> {
    let spec = load_spec_str(SECTION5_JSON)?;
    let spec = match source {
        SourceKind::Table => spec,
        SourceKind::LeviCivita => spec.with_source(ChristoffelSource::LeviCivita)?,
    };
    Ok(Section5Fixture {
        spec,
        source,
        kinematic: reference_kinematic(),
        mechanical: reference_mechanical(MechanicalReading::CONSISTENT),
    })
}

/// The example system; panics only if the embedded spec is broken.
pub fn section5_system(source: SourceKind) -> SystemSpec {
    build_section5(source)
        .expect("embedded spec loads")
        .spec
        .system
}

fn reference_times() -> Vec<f64> {
    (0..REFERENCE_NODES)
        .map(|i| i as f64 / (REFERENCE_NODES - 1) as f64)
        .collect()
}

/// `γ(t) = (0, t, 0)`, `w = (0, 1)`, `x⁰ = t`.
pub fn reference_kinematic() -> Trajectory {
    let times = reference_times();
    let states = times
        .iter()
        .map(|t| DVector::from_vec(vec![0.0, *t, 0.0]))
        .collect();
    let controls = times
        .iter()
        .map(|_| DVector::from_vec(vec![0.0, 1.0]))
        .collect();
    let mut t = Trajectory::kinematic(times.clone(), states, controls).expect("valid reference");
    t.cost_position = Some(times);
    t
}

/// Lift of the reference: `v = (0, 1, 0)`, `u = (1, u2)`, cost coordinates
/// per `reading`.
pub fn reference_mechanical(reading: MechanicalReading) -> Trajectory {
    let times = reference_times();
    let states = times
        .iter()
        .map(|t| DVector::from_vec(vec![0.0, *t, 0.0]))
        .collect();
    let velocities = times
        .iter()
        .map(|_| DVector::from_vec(vec![0.0, 1.0, 0.0]))
        .collect();
    let controls = times
        .iter()
        .map(|_| DVector::from_vec(vec![1.0, reading.u2]))
        .collect();
    let mut t = Trajectory::mechanical(times.clone(), states, velocities, controls)
        .expect("valid reference");
    if reading.paper_tuple {
        t.cost_position = Some(times.clone());
        t.cost_velocity = Some(vec![1.0; times.len()]);
    } else {
        t.cost_position = Some(times.iter().map(|t| 0.5 * t * t).collect());
        t.cost_velocity = Some(times);
    }
    t
}
