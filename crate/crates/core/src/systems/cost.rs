use crate::error::{Error, Result};
use crate::expr::Expr;

use super::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    Time,
    Expression,
}

/// Running cost of the kinematic problem, `G(t, x)`, and its lift to the
/// mechanical problem, `F(t, x, v)`.
#[derive(Debug, Clone)]
pub struct CostSpec {
    kind: CostKind,
    kinematic: Expr,
    mechanical: Expr,
}

impl CostSpec {
    /// `G ≡ 1`, `F ≡ 1`.
    pub fn time_optimal() -> Self {
        CostSpec {
            kind: CostKind::Time,
            kinematic: Expr::one(),
            mechanical: Expr::one(),
        }
    }

    /// `G` over the symbols `[coords…, t]` of `system`.
    pub fn expression(g: Expr, system: &SystemSpec) -> Result<Self> {
        if g.arity() > system.n() + 1 {
            return Err(Error::InvalidSpec(
                "cost G may only depend on the coordinates and t".into(),
            ));
        }
        let mechanical = lift_cost(&g, system);
        Ok(CostSpec {
            kind: CostKind::Expression,
            kinematic: g,
            mechanical,
        })
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    /// `G(t, x)` over `[coords…, t]`.
    pub fn kinematic(&self) -> &Expr {
        &self.kinematic
    }

    /// `F(t, x, v)` over `[coords…, t, v_coords…]`.
    pub fn mechanical(&self) -> &Expr {
        &self.mechanical
    }
}

/// Total time derivative `∂G/∂t + Σ vⁱ ∂G/∂xⁱ`, with the velocity symbols
/// taken from the system's table.
pub fn lift_cost(g: &Expr, system: &SystemSpec) -> Expr {
    let n = system.n();
    let symbols = system.symbols();
    let mut out = g.derivative(system.time_slot());
    for i in 0..n {
        let v = Expr::var(symbols, system.velocity_slot(i));
        out = Expr::add(out, Expr::mul(v, g.derivative(i)));
    }
    out
}
