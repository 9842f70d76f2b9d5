use nhoc_core::{parse, Symbols};
use proptest::prelude::*;

fn symbols() -> Symbols {
    Symbols::new(["x", "y", "z", "t"])
}

/// Rational expressions over `x, y, z, t` in source form. Denominators are
/// kept positive so random points are never poles.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["x", "y", "z", "t"]).prop_map(String::from),
        (-50i32..50).prop_map(|k| format!("{}", f64::from(k) / 10.0)),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(1 + ({b})^2)")),
            (inner.clone(), 0i32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            (inner.clone(), 1i32..3).prop_map(|(a, k)| format!("(1 + ({a})^2)^(-{k})")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0f64..1.0)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn print_then_parse_evaluates_identically(text in expr_text(), points in prop::collection::vec(point(), 100)) {
        let s = symbols();
        let e = parse(&text, &s).unwrap();
        let printed = e.to_string();
        let back = parse(&printed, &s).unwrap();
        for p in &points {
            let (a, b) = (e.eval(p).unwrap(), back.eval(p).unwrap());
            prop_assert!(close(a, b, 1e-12), "{text} -> {printed}: {a} vs {b}");
        }
    }

    #[test]
    fn evaluation_is_bitwise_repeatable(text in expr_text(), p in point()) {
        let e = parse(&text, &symbols()).unwrap();
        prop_assert_eq!(e.eval(&p).unwrap().to_bits(), e.eval(&p).unwrap().to_bits());
    }

    #[test]
    fn derivative_matches_central_difference(text in expr_text(), p in prop::array::uniform4(-0.8f64..0.8)) {
        let e = parse(&text, &symbols()).unwrap();
        let h = 1e-5;
        for slot in 0..4 {
            let exact = e.derivative(slot).eval(&p).unwrap();
            let (mut up, mut down) = (p, p);
            up[slot] += h;
            down[slot] -= h;
            let fd = (e.eval(&up).unwrap() - e.eval(&down).unwrap()) / (2.0 * h);
            // Central differences lose accuracy on steep random trees; the
            // fixture formulas are held to 1e-6 below.
            prop_assert!(close(exact, fd, 1e-4), "{text} d/{slot}: {exact} vs {fd}");
        }
    }
}

/// Every formula of the section5 fixture with its definitions expanded.
const FIXTURE_FORMULAS: &[&str] = &[
    "((1-x)^2+x^4)^(-1)",
    "1-x-2*x^3",
    "1-x",
    "x^2",
    "(1-x-2*x^3)*((1-x)^2+x^4)^(-1)^2",
    "(1-x-2*x^3)*((1-x)^2+x^4)^(-1)",
    "-(1-x-2*x^3)*((1-x)^2+x^4)^(-1)",
];

#[test]
fn fixture_derivatives_match_central_difference() {
    let s = symbols();
    let xs: Vec<f64> = (0..50).map(|i| -0.5 + i as f64 / 49.0).collect();
    let h = 1e-6;
    for text in FIXTURE_FORMULAS {
        let e = parse(text, &s).unwrap();
        let d = e.derivative(0);
        for &x in &xs {
            let p = [x, 0.3, -0.2, 0.0];
            let exact = d.eval(&p).unwrap();
            let fd = (e.eval(&[x + h, 0.3, -0.2, 0.0]).unwrap()
                - e.eval(&[x - h, 0.3, -0.2, 0.0]).unwrap())
                / (2.0 * h);
            assert!(close(exact, fd, 1e-6), "{text} at {x}: {exact} vs {fd}");
        }
    }
}

#[test]
fn psi_derivative_closed_form() {
    let s = symbols();
    let psi = parse("((1-x)^2+x^4)^(-1)", &s).unwrap();
    let d = psi.derivative(0);
    for x in [-0.5, 0.0, 0.5] {
        let p = [x, 0.0, 0.0, 0.0];
        let psi_v = psi.eval(&p).unwrap();
        let want = (2.0 * (1.0 - x) - 4.0 * x * x * x) * psi_v * psi_v;
        assert!((d.eval(&p).unwrap() - want).abs() < 1e-12);
    }
    assert_eq!(psi.derivative(1).eval(&[0.3, 0.0, 0.0, 0.0]).unwrap(), 0.0);
}
