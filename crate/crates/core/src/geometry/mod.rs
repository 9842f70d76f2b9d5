//! Riemannian metric, affine connection and frames in a single global chart.
//!
//! All expressions here are functions of the coordinates only; they are
//! evaluated by passing the coordinate vector directly as the slot values.

mod connection;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg;

pub use connection::{
    christoffel, Christoffel, ChristoffelSource, ChristoffelTable, Connection, SourceKind,
};

/// Tolerance on `|g_ij - g_ji|` at evaluated points.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn eval_all(exprs: &[Expr], x: &[f64]) -> Result<DVector<f64>> {
    exprs
        .iter()
        .map(|e| e.eval(x))
        .collect::<Result<Vec<_>, _>>()
        .map(DVector::from_vec)
        .map_err(Error::from)
}

/// Metric tensor `g_ij` as expressions over the coordinates.
#[derive(Debug, Clone)]
pub struct MetricField {
    entries: Vec<Vec<Expr>>,
}

impl MetricField {
    pub fn new(entries: Vec<Vec<Expr>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpec(
                "metric must be a nonempty square matrix".into(),
            ));
        }
        Ok(MetricField { entries })
    }

    pub fn euclidean(n: usize) -> Self {
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Expr::one() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        MetricField { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    /// Evaluated metric without definiteness checks.
    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = self.entries[i][j].eval(x)?;
            }
        }
        Ok(g)
    }

    /// Evaluated metric, checked symmetric and positive definite (leading
    /// principal minors).
    pub fn at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.eval(x)?;
        let deviation = (&g - g.transpose()).amax();
        if deviation > SYMMETRY_TOL {
            return Err(Error::AsymmetricMetric {
                point: x.to_vec(),
                deviation,
            });
        }
        if linalg::leading_minors(&g).iter().any(|m| *m <= 0.0) {
            return Err(Error::NotPositiveDefinite { point: x.to_vec() });
        }
        Ok(g)
    }

    /// Inner product `g(a, b)` at `x`.
    pub fn inner(&self, x: &[f64], a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        Ok(a.dot(&(self.eval(x)? * b)))
    }
}

/// What a frame is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRole {
    /// The input vector fields spanning the distribution.
    Input,
    /// Generators of the g-orthogonal complement.
    Complement,
}

/// A list of vector fields, each an `n`-array of expressions.
#[derive(Debug, Clone)]
pub struct Frame {
    fields: Vec<Vec<Expr>>,
    role: FrameRole,
}

impl Frame {
    pub fn new(fields: Vec<Vec<Expr>>, role: FrameRole) -> Result<Self> {
        let Some(n) = fields.first().map(Vec::len) else {
            return Err(Error::InvalidSpec("frame has no vector fields".into()));
        };
        if n == 0 || fields.iter().any(|f| f.len() != n) {
            return Err(Error::InvalidSpec(
                "every frame field needs one component per coordinate".into(),
            ));
        }
        Ok(Frame { fields, role })
    }

    pub fn role(&self) -> FrameRole {
        self.role
    }

    /// Number of vector fields.
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.fields[0].len()
    }

    pub fn field(&self, s: usize) -> &[Expr] {
        &self.fields[s]
    }

    /// Scales every field by `c`.
    pub fn scaled(&self, c: f64) -> Frame {
        let fields = self
            .fields
            .iter()
            .map(|f| {
                f.iter()
                    .map(|e| Expr::mul(Expr::constant(c), e.clone()))
                    .collect()
            })
            .collect();
        Frame {
            fields,
            role: self.role,
        }
    }

    /// `n × m` matrix whose columns are the fields at `x`.
    pub fn at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.dim(), self.len());
        for (s, f) in self.fields.iter().enumerate() {
            out.set_column(s, &eval_all(f, x)?);
        }
        Ok(out)
    }

    /// Numerical rank at `x` (relative cut 1e-10).
    pub fn rank_at(&self, x: &[f64]) -> Result<usize> {
        let y = self.at(x)?;
        Ok(linalg::null_space(&y.transpose(), 1e-10).rank)
    }
}

/// `max |g(X_a, X_b) - δ_ab|` over the sample points.
pub fn orthonormality_residual(
    frame: &Frame,
    metric: &MetricField,
    points: &[Vec<f64>],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in points {
        let y = frame.at(x)?;
        let gram = y.transpose() * metric.eval(x)? * &y;
        let dev = gram - DMatrix::identity(frame.len(), frame.len());
        worst = worst.max(dev.amax());
    }
    Ok(worst)
}

/// Basis of the g-orthogonal complement of `span(frame)` at `x`: g-orthonormal,
/// each vector with its first nonzero component positive. Empty (n × 0) when
/// the frame has full rank n.
pub fn complement_frame(frame: &Frame, metric: &MetricField, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = frame.dim();
    let m = frame.len();
    let g = metric.eval(x)?;
    let y = frame.at(x)?;
    let constraint = y.transpose() * &g; // m × n, rows are g(Y_s, ·)
    let ns = linalg::null_space(&constraint, 1e-10);
    if ns.rank < m {
        return Err(Error::RankDeficientFrame { point: x.to_vec() });
    }
    let mut out = DMatrix::zeros(n, ns.dim());
    for j in 0..ns.dim() {
        let mut v = ns.basis.column(j).into_owned();
        for k in 0..j {
            let prev = out.column(k).into_owned();
            let c = prev.dot(&(&g * &v));
            v -= prev * c;
        }
        let len = v.dot(&(&g * &v)).sqrt();
        if !(len > 0.0) {
            return Err(Error::RankDeficientFrame { point: x.to_vec() });
        }
        v /= len;
        let scale = v.amax();
        if let Some(first) = v.iter().find(|c| c.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        out.set_column(j, &v);
    }
    Ok(out)
}
