//! Acceptance run: one line per criterion, nonzero exit if any is red.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nhoc_core::fixtures::{reproduce_section5, section5_system, Section5Report};
use nhoc_core::hamiltonian::{integrate_joint, Linearization};
use nhoc_core::pmp::{
    classify, ClassificationProblem, ClassificationReport, Settings, TimeMode, Verdict,
};
use nhoc_core::systems::{
    extend, kin_to_mech_controls, mech_to_kin_controls, simulate, ControlSignal, ExtendedDynamics,
    MechanicalExtended, SimulationSetup,
};
use nhoc_core::{
    load_spec_str, parse, ChristoffelPairing, CostSpec, LoadedSpec, Mode, SourceKind, Symbols,
    Trajectory,
};

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: String) -> Line {
    Line { id, pass, detail }
}

fn item_pass(report: &Section5Report, names: &[&str]) -> (bool, String) {
    let mut pass = true;
    let mut notes = Vec::new();
    for name in names {
        match report.item(name) {
            Some(i) => {
                pass &= i.pass;
                notes.push(format!("{name}: {}", i.observed));
            }
            None => {
                pass = false;
                notes.push(format!("{name}: missing"));
            }
        }
    }
    (pass, notes.join("; "))
}

fn spec(json: &str) -> LoadedSpec {
    load_spec_str(json).expect("valid acceptance spec")
}

fn constant(values: &[f64]) -> ControlSignal {
    ControlSignal::Constant(DVector::from_column_slice(values))
}

fn criterion_1() -> Line {
    let sys = section5_system(SourceKind::Table);
    let mut err = 0.0f64;
    for x in [0.0f64, 0.5] {
        let psi = 1.0 / ((1.0 - x).powi(2) + x.powi(4));
        let c = 1.0 - x - 2.0 * x.powi(3);
        let g = sys.connection().gamma(&[x, 0.0, 0.0]).unwrap();
        err = err
            .max((g.get(0, 1, 1) - c * psi * psi).abs())
            .max((g.get(1, 0, 1) - c * psi).abs())
            .max((g.get(2, 0, 2) - c * psi).abs());
    }
    let lc = section5_system(SourceKind::LeviCivita);
    let mut compat = 0.0f64;
    for x in [0.0, 0.25, 0.5] {
        compat = compat.max(
            lc.connection()
                .compatibility_residual(&[x, 0.3, -0.2])
                .unwrap(),
        );
    }
    let table_g = sys.connection().gamma(&[0.0; 3]).unwrap().get(0, 1, 1);
    let lc_g = lc.connection().gamma(&[0.0; 3]).unwrap().get(0, 1, 1);
    let reported = table_g.signum() != lc_g.signum();
    line(
        "1 christoffel table",
        err <= 1e-12 && compat < 1e-8 && reported,
        format!(
            "table max error {err:.3e}; levi-civita compatibility {compat:.3e}; Γ¹₂₂(0) table {table_g} vs levi-civita {lc_g}"
        ),
    )
}

fn criterion_2(report: &Section5Report) -> Line {
    let (pass, detail) = item_pass(
        report,
        &[
            "kinematic-verdict",
            "kinematic-abnormal-certificate",
            "kinematic-normal-h",
        ],
    );
    line("2 kinematic classification", pass, detail)
}

fn criterion_3(report: &Section5Report) -> Line {
    let (pass, detail) = item_pass(
        report,
        &[
            "mechanical-verdict",
            "mechanical-abnormal-family",
            "mechanical-case2-h",
            "mechanical-case3-sign",
        ],
    );
    line("3 mechanical classification", pass, detail)
}

fn criterion_4(report: &Section5Report) -> Line {
    let (pass, detail) = item_pass(
        report,
        &[
            "conversion-u1",
            "conversion-u2",
            "mechanical-verdict-robust",
        ],
    );
    line("4 control conversion", pass, detail)
}

fn criterion_5(report: &Section5Report) -> Line {
    let (pass, detail) = item_pass(report, &["tulczyjew-down", "tulczyjew-up"]);
    line("5 tulczyjew relation", pass, detail)
}

fn criterion_6(report: &Section5Report) -> Line {
    let names: Vec<&str> = report
        .items
        .iter()
        .filter(|i| i.name.starts_with("transfer-"))
        .map(|i| i.name.as_str())
        .collect();
    let (mut pass, detail) = item_pass(report, &names);
    let max_pairing = report
        .transfers
        .iter()
        .map(|t| t.max_abs_pairing)
        .fold(0.0, f64::max);
    pass &= !report.transfers.is_empty()
        && max_pairing <= 1e-9
        && report.transfers.iter().all(|t| t.passed && t.abnormal);
    line(
        "6 momentum transfer",
        pass,
        format!(
            "{} transfers, max |pairing| {max_pairing:.3e}; {detail}",
            report.transfers.len()
        ),
    )
}

/// Curved metric with `D = TM`, so no constraint multipliers enter the
/// dynamics and `H` is an exact invariant of the joint flow.
const CURVED_FULL: &str = r#"{
  "n": 2, "coords": ["x", "y"],
  "metric": [["1", "0"], ["0", "1 + x^2"]],
  "inputs": [["1", "0"], ["0", "1"]],
  "christoffel": "levi-civita",
  "box": [[-5, 5], [-5, 5]]
}"#;

fn curved_setup(tf: f64) -> SimulationSetup {
    SimulationSetup {
        mode: Mode::Mechanical,
        x0: vec![0.3, -0.2],
        v0: Some(vec![0.8, 0.6]),
        t0: 0.0,
        tf,
        step: 0.01,
        pairing: ChristoffelPairing::Full,
    }
}

const CURVED_U: [f64; 2] = [0.4, -0.3];
const CURVED_L0: [f64; 6] = [-1.0, 0.3, -0.2, 0.5, 0.1, 0.4];

/// `H` drift of joint RK4 over `[0, 2]` in `steps` steps.
fn h_drift(model: &MechanicalExtended<'_>, z0: &DVector<f64>, steps: usize) -> f64 {
    let u = DVector::from_column_slice(&CURVED_U);
    let l0 = DVector::from_column_slice(&CURVED_L0);
    let path = integrate_joint(model, z0, &l0, &u, 0.0, 2.0, steps).unwrap();
    let h = |(z, l): &(DVector<f64>, DVector<f64>)| l.dot(&model.field(0.0, z, &u).unwrap());
    let h0 = h(&path[0]);
    path.iter().map(|p| (h(p) - h0).abs()).fold(0.0, f64::max)
}

fn rk4_order() -> (f64, f64) {
    let loaded = spec(CURVED_FULL);
    let model = MechanicalExtended::new(&loaded.system, &loaded.cost, ChristoffelPairing::Full);
    let traj = simulate(
        &loaded.system,
        &loaded.cost,
        &curved_setup(0.01),
        &constant(&CURVED_U),
    )
    .unwrap();
    let z0 = model.pack(&traj, 0).unwrap();
    let coarse = h_drift(&model, &z0, 32);
    let fine = h_drift(&model, &z0, 64);
    ((coarse / fine).log2(), fine)
}

fn adjoint_pairing() -> f64 {
    let loaded = spec(CURVED_FULL);
    let traj = simulate(
        &loaded.system,
        &loaded.cost,
        &curved_setup(1.0),
        &constant(&CURVED_U),
    )
    .unwrap();
    let model = extend(
        &loaded.system,
        &loaded.cost,
        Mode::Mechanical,
        ChristoffelPairing::Full,
    );
    let lin = Linearization::new(model.as_ref(), &traj).unwrap();
    let dz0 = DVector::from_vec(vec![0.0, 0.2, -0.1, 0.3, 0.1, 0.2]);
    let l0 = DVector::from_column_slice(&CURVED_L0);
    let dz = lin.tangent_flow(&dz0);
    let lambda = lin.momentum_from(&l0, 0);
    let p0 = l0.dot(&dz0);
    dz.iter()
        .zip(&lambda)
        .map(|(d, (l, _))| (l.dot(d) - p0).abs())
        .fold(0.0, f64::max)
}

const FLAT_COST: &str = r#"{
  "n": 2, "coords": ["x", "y"],
  "metric": [["1", "0"], ["0", "1"]],
  "inputs": [["1", "0"], ["0", "1"]],
  "christoffel": "levi-civita",
  "box": [[-5, 5], [-5, 5]],
  "cost": {"kind": "expr", "G": "x^2*y + t*x - y^3/3"}
}"#;

fn integral_identity() -> f64 {
    let loaded = spec(FLAT_COST);
    let g = loaded.cost.kinematic();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x0 = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let v0 = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let u = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let setup = SimulationSetup {
            mode: Mode::Mechanical,
            x0: x0.clone(),
            v0: Some(v0),
            t0: 0.0,
            tf: 1.0,
            step: 0.01,
            pairing: ChristoffelPairing::Full,
        };
        let traj = simulate(&loaded.system, &loaded.cost, &setup, &constant(&u)).unwrap();
        let last = traj.len() - 1;
        let xf = &traj.states[last];
        let delta = g.eval(&[xf[0], xf[1], 1.0]).unwrap() - g.eval(&[x0[0], x0[1], 0.0]).unwrap();
        let integral = traj.cost_velocity.as_ref().unwrap()[last];
        worst = worst.max((integral - delta).abs());
    }
    worst
}

fn conversion_round_trip() -> f64 {
    let sys = section5_system(SourceKind::Table);
    let cost = CostSpec::time_optimal();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let w = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let setup = SimulationSetup {
            mode: Mode::Kinematic,
            x0: vec![
                rng.gen_range(-0.1..0.1),
                rng.gen_range(0.0..0.5),
                rng.gen_range(-0.1..0.1),
            ],
            v0: None,
            t0: 0.0,
            tf: 1.0,
            step: 0.01,
            pairing: ChristoffelPairing::Full,
        };
        let kin = simulate(&sys, &cost, &setup, &constant(&w)).unwrap();
        let mech = kin_to_mech_controls(&sys, &kin, ChristoffelPairing::Full)
            .unwrap()
            .trajectory;
        let back = mech_to_kin_controls(&sys, &mech).unwrap().trajectory;
        for (a, b) in kin.controls.iter().zip(&back.controls) {
            worst = worst.max((a - b).amax());
        }
    }
    worst
}

fn derivative_check() -> f64 {
    let symbols = Symbols::new(["x", "y", "t"]);
    let texts = [
        "x^3*y - 2*x/(1 + y^2)",
        "((1-x)^2 + x^4)^(-2)*(1 - x - 2*x^3)",
        "t*x*y - y^5 + 3",
    ];
    let point = [0.3, -0.7, 0.4];
    let h = 1e-5;
    let mut worst = 0.0f64;
    for text in texts {
        let e = parse(text, &symbols).unwrap();
        for slot in 0..3 {
            let exact = e.derivative(slot).eval(&point).unwrap();
            let (mut up, mut down) = (point, point);
            up[slot] += h;
            down[slot] -= h;
            let fd = (e.eval(&up).unwrap() - e.eval(&down).unwrap()) / (2.0 * h);
            worst = worst.max((exact - fd).abs() / exact.abs().max(1.0));
        }
    }
    worst
}

fn criterion_7() -> Line {
    let (order, fine) = rk4_order();
    let pairing = adjoint_pairing();
    let ftc = integral_identity();
    let round = conversion_round_trip();
    let diff = derivative_check();
    line(
        "7 property suites",
        order >= 3.5 && pairing <= 1e-6 && ftc <= 1e-6 && round <= 1e-6 && diff <= 1e-6,
        format!(
            "rk4 H order {order:.2} (drift {fine:.1e}); adjoint pairing {pairing:.1e}; integral identity {ftc:.1e}; \
             conversion round trip {round:.1e}; derivative vs fd {diff:.1e}"
        ),
    )
}

/// Line `x(t) = t` of the single field `∂/∂x` on the flat line.
fn flat_line(cost: &str, time_mode: TimeMode) -> ClassificationReport {
    let json = format!(
        r#"{{"n": 1, "coords": ["x"], "metric": [["1"]], "inputs": [["1"]],
            "christoffel": "levi-civita", "box": [[-1, 2]], "cost": {cost}}}"#
    );
    let loaded = spec(&json);
    let setup = SimulationSetup {
        mode: Mode::Kinematic,
        x0: vec![0.0],
        v0: None,
        t0: 0.0,
        tf: 1.0,
        step: 0.01,
        pairing: ChristoffelPairing::Full,
    };
    let traj: Trajectory =
        simulate(&loaded.system, &loaded.cost, &setup, &constant(&[1.0])).unwrap();
    let settings = Settings {
        time_mode,
        ..Settings::default()
    };
    let problem = ClassificationProblem::new(&loaded.system, &loaded.cost, traj, settings).unwrap();
    classify(&problem).unwrap()
}

fn case_summary(r: &ClassificationReport) -> String {
    r.cases
        .iter()
        .map(|c| format!("{} {:?}", c.name, c.decided_by))
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_8() -> Line {
    let r = flat_line(r#"{"kind": "expr", "G": "x"}"#, TimeMode::Free);
    line(
        "8 negative control (G = x)",
        r.verdict == Verdict::Normal,
        format!("verdict {}; {}", r.verdict, case_summary(&r)),
    )
}

fn criterion_8_time_optimal() -> Line {
    let r = flat_line(r#"{"kind": "time"}"#, TimeMode::Fixed);
    line(
        "8b negative control (time-optimal, fixed time)",
        r.verdict == Verdict::Normal,
        format!("verdict {}; {}", r.verdict, case_summary(&r)),
    )
}

fn main() {
    let report = reproduce_section5();
    let lines = [
        criterion_1(),
        criterion_2(&report),
        criterion_3(&report),
        criterion_4(&report),
        criterion_5(&report),
        criterion_6(&report),
        criterion_7(),
        criterion_8(),
        criterion_8_time_optimal(),
    ];
    let mut failed = 0;
    for l in &lines {
        println!(
            "{} criterion {}: {}",
            if l.pass { "PASS" } else { "FAIL" },
            l.id,
            l.detail
        );
        failed += usize::from(!l.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        lines.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
