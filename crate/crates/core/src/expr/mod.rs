//! Rational expressions over a declared, ordered symbol table.
//!
//! Every field of a system spec (metric entries, input frames, forces,
//! Christoffel tables, costs) is an [`Expr`]. Variables are resolved to slots
//! at parse time, so evaluation takes a plain slice of values aligned with the
//! [`Symbols`] the expression was parsed against. Symbol tables only ever grow
//! by appending, which keeps slots stable when, e.g., velocity symbols are
//! added to lift a cost function.

mod diff;
mod parse;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use parse::{parse, parse_with_defs, Defs};

/// Errors raised while evaluating an expression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("no value supplied for symbol `{0}`")]
    MissingSymbol(String),
}

/// Errors raised while parsing an expression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: expected {}", expected.join(" or "))]
    SyntaxError {
        position: usize,
        expected: Vec<String>,
    },
    #[error("unknown symbol `{name}` at position {position}")]
    UnknownSymbol { name: String, position: usize },
    #[error("empty {0}")]
    Empty(&'static str),
}

/// Ordered set of symbol names. The index of a name is its evaluation slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Symbols {
    names: Vec<Arc<str>>,
}

impl Symbols {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Symbols {
            names: names.into_iter().map(|s| Arc::from(s.as_ref())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| &**n == name)
    }

    pub fn name(&self, slot: usize) -> &str {
        &self.names[slot]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|n| &**n)
    }

    /// The first `len` symbols. Expressions parsed against a prefix evaluate
    /// unchanged against the full table.
    pub fn prefix(&self, len: usize) -> Symbols {
        Symbols {
            names: self.names[..len].to_vec(),
        }
    }

    /// A copy with `extra` appended; existing slots are preserved.
    pub fn extended<I, S>(&self, extra: I) -> Symbols
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut names = self.names.clone();
        names.extend(extra.into_iter().map(|s| Arc::from(s.as_ref())));
        Symbols { names }
    }
}

/// Expression tree. Exponents are integers (possibly negative).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var { slot: usize, name: Arc<str> },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn var(symbols: &Symbols, slot: usize) -> Expr {
        Expr::Var {
            slot,
            name: symbols.names[slot].clone(),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Evaluates with `values[slot]` bound to each variable.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var { slot, name } => values
                .get(*slot)
                .copied()
                .ok_or_else(|| EvalError::MissingSymbol(name.to_string())),
            Expr::Neg(a) => Ok(-a.eval(values)?),
            Expr::Add(a, b) => Ok(a.eval(values)? + b.eval(values)?),
            Expr::Sub(a, b) => Ok(a.eval(values)? - b.eval(values)?),
            Expr::Mul(a, b) => Ok(a.eval(values)? * b.eval(values)?),
            Expr::Div(a, b) => {
                let num = a.eval(values)?;
                let den = b.eval(values)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero(self.to_string()));
                }
                Ok(num / den)
            }
            Expr::Pow(a, k) => {
                let base = a.eval(values)?;
                if *k < 0 && base == 0.0 {
                    return Err(EvalError::DivisionByZero(self.to_string()));
                }
                Ok(base.powi(*k))
            }
        }
    }

    /// Evaluates against a name-keyed assignment.
    pub fn eval_map(&self, assign: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let mut values = vec![0.0; self.arity()];
        let mut missing = None;
        self.collect_vars(&mut |slot, name| match assign.get(name) {
            Some(v) => values[slot] = *v,
            None => {
                missing.get_or_insert_with(|| name.to_string());
            }
        });
        match missing {
            Some(name) => Err(EvalError::MissingSymbol(name)),
            None => self.eval(&values),
        }
    }

    /// Largest slot referenced plus one (0 for constant expressions).
    pub fn arity(&self) -> usize {
        let mut n = 0;
        self.collect_vars(&mut |slot, _| n = n.max(slot + 1));
        n
    }

    pub fn depends_on(&self, slot: usize) -> bool {
        let mut found = false;
        self.collect_vars(&mut |s, _| found |= s == slot);
        found
    }

    fn collect_vars(&self, f: &mut impl FnMut(usize, &str)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var { slot, name } => f(*slot, name),
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_vars(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(f);
                b.collect_vars(f);
            }
        }
    }

    // Constructors that fold trivial identities. Used by differentiation so
    // derivative trees stay small; the parser never folds.

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(0.0), _) => Expr::neg(b),
            (_, Some(0.0)) => a,
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            (Some(-1.0), _) => Expr::neg(b),
            (_, Some(-1.0)) => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn powi(a: Expr, k: i32) -> Expr {
        match (k, a.as_const()) {
            (0, _) => Expr::one(),
            (1, _) => a,
            (_, Some(c)) if k > 0 || c != 0.0 => Expr::Const(c.powi(k)),
            _ => Expr::Pow(Box::new(a), k),
        }
    }

    /// Fully parenthesized rendering that re-parses to the same tree shape.
    pub fn print(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{:?})", -c)
            }
            Expr::Const(c) => write!(f, "{:?}", c),
            Expr::Var { name, .. } => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, k) if *k < 0 => write!(f, "({a}^({k}))"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
        }
    }
}
