use super::Expr;

impl Expr {
    /// Exact symbolic partial derivative with respect to the variable in `slot`.
    pub fn derivative(&self, slot: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var { slot: s, .. } => {
                if *s == slot {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::neg(a.derivative(slot)),
            Expr::Add(a, b) => Expr::add(a.derivative(slot), b.derivative(slot)),
            Expr::Sub(a, b) => Expr::sub(a.derivative(slot), b.derivative(slot)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(slot), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative(slot)),
            ),
            Expr::Div(a, b) => {
                let da = a.derivative(slot);
                let db = b.derivative(slot);
                if db.is_zero() {
                    return Expr::div(da, (**b).clone());
                }
                // (a'b - ab') / b^2
                Expr::div(
                    Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                    Expr::powi((**b).clone(), 2),
                )
            }
            Expr::Pow(a, k) => {
                let da = a.derivative(slot);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(
                    Expr::mul(Expr::Const(*k as f64), Expr::powi((**a).clone(), k - 1)),
                    da,
                )
            }
        }
    }

    /// Derivative with respect to a named symbol; zero when the name does not
    /// occur in the expression.
    pub fn derivative_by_name(&self, name: &str) -> Expr {
        let mut slot = None;
        self.collect_vars(&mut |s, n| {
            if n == name {
                slot = Some(s);
            }
        });
        match slot {
            Some(s) => self.derivative(s),
            None => Expr::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Symbols};

    fn central_difference(e: &crate::expr::Expr, at: &[f64], slot: usize) -> f64 {
        let h = 1e-5;
        let mut hi = at.to_vec();
        let mut lo = at.to_vec();
        hi[slot] += h;
        lo[slot] -= h;
        (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h)
    }

    #[test]
    fn square() {
        let s = Symbols::new(["x"]);
        let d = parse("x^2", &s).unwrap().derivative(0);
        for x in [-2.0, 0.0, 0.5, 3.0] {
            assert_eq!(d.eval(&[x]).unwrap(), 2.0 * x);
        }
    }

    #[test]
    fn psi_matches_closed_form_and_finite_difference() {
        let s = Symbols::new(["x", "y"]);
        let psi = parse("((1-x)^2+x^4)^(-1)", &s).unwrap();
        let dpsi = psi.derivative(0);
        for x in [-0.5, 0.0, 0.5] {
            let p = psi.eval(&[x, 0.0]).unwrap();
            let closed = (2.0 * (1.0 - x) - 4.0 * x * x * x) * p * p;
            let fd = central_difference(&psi, &[x, 0.0], 0);
            let exact = dpsi.eval(&[x, 0.0]).unwrap();
            assert!((exact - closed).abs() <= 1e-12 * closed.abs().max(1.0));
            assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1e-12));
        }
        assert!(psi.derivative(1).is_zero());
        assert!(psi.derivative_by_name("y").is_zero());
    }

    #[test]
    fn quotient_and_product() {
        let s = Symbols::new(["x", "y"]);
        let e = parse("x*y/(1+x^2)", &s).unwrap();
        let dx = e.derivative(0);
        let dy = e.derivative(1);
        let (x, y): (f64, f64) = (0.7, -1.3);
        let want_dx = y * (1.0 - x * x) / (1.0 + x * x).powi(2);
        let want_dy = x / (1.0 + x * x);
        assert!((dx.eval(&[x, y]).unwrap() - want_dx).abs() < 1e-14);
        assert!((dy.eval(&[x, y]).unwrap() - want_dy).abs() < 1e-14);
    }
}
