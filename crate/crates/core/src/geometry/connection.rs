use nalgebra::DMatrix;

use super::MetricField;
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Christoffel symbols `Γ^k_ij` at a point, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^k_ij` with zero-based indices.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.data[(k * self.n + i) * self.n + j] = value;
    }

    /// Quadratic form `Γ^k_ij a^i b^j` for every `k`.
    pub fn contract(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += self.get(k, i, j) * a[i] * b[j];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sparse table of `Γ^k_ij` expressions; unlisted entries are zero. No
/// symmetry in the lower indices is assumed.
#[derive(Debug, Clone, Default)]
pub struct ChristoffelTable {
    entries: Vec<((usize, usize, usize), Expr)>,
}

impl ChristoffelTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `Γ^k_ij` (zero-based), replacing an existing entry.
    pub fn insert(&mut self, k: usize, i: usize, j: usize, e: Expr) {
        match self.entries.iter_mut().find(|(idx, _)| *idx == (k, i, j)) {
            Some(slot) => slot.1 = e,
            None => self.entries.push(((k, i, j), e)),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize, usize), &Expr)> {
        self.entries.iter().map(|(idx, e)| (*idx, e))
    }
}

/// Where the Christoffel symbols come from.
#[derive(Debug, Clone)]
pub enum ChristoffelSource {
    /// Derived from the metric.
    LeviCivita,
    /// Given explicitly.
    Table(ChristoffelTable),
}

/// Label for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    LeviCivita,
    Table,
}

impl ChristoffelSource {
    pub fn kind(&self) -> SourceKind {
        match self {
            ChristoffelSource::LeviCivita => SourceKind::LeviCivita,
            ChristoffelSource::Table(_) => SourceKind::Table,
        }
    }
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceKind::LeviCivita => "levi-civita",
            SourceKind::Table => "table",
        })
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    LeviCivita {
        // dg[l][i][j] = ∂_l g_ij
        dg: Vec<Vec<Vec<Expr>>>,
        // d2g[m][l][i][j] = ∂_m ∂_l g_ij
        d2g: Vec<Vec<Vec<Vec<Expr>>>>,
    },
    Table {
        entries: Vec<((usize, usize, usize), Expr)>,
        // derivative of each entry along every coordinate
        derivs: Vec<Vec<Expr>>,
    },
}

/// Affine connection with exact symbolic first derivatives, ready for
/// repeated evaluation.
#[derive(Debug, Clone)]
pub struct Connection {
    n: usize,
    metric: MetricField,
    compiled: Compiled,
    kind: SourceKind,
}

impl Connection {
    pub fn new(source: &ChristoffelSource, metric: &MetricField) -> Result<Self> {
        let n = metric.dim();
        let compiled = match source {
            ChristoffelSource::LeviCivita => {
                let dg: Vec<Vec<Vec<Expr>>> = (0..n)
                    .map(|l| {
                        (0..n)
                            .map(|i| (0..n).map(|j| metric.entry(i, j).derivative(l)).collect())
                            .collect()
                    })
                    .collect();
                let d2g = (0..n)
                    .map(|m| {
                        dg.iter()
                            .map(|dl| {
                                dl.iter()
                                    .map(|row| row.iter().map(|e| e.derivative(m)).collect())
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                Compiled::LeviCivita { dg, d2g }
            }
            ChristoffelSource::Table(table) => {
                for ((k, i, j), _) in table.entries() {
                    if k >= n || i >= n || j >= n {
                        return Err(Error::InvalidSpec(format!(
                            "Christoffel index ({},{},{}) out of range for n={n}",
                            k + 1,
                            i + 1,
                            j + 1
                        )));
                    }
                }
                let entries: Vec<_> = table.entries().map(|(idx, e)| (idx, e.clone())).collect();
                let derivs = entries
                    .iter()
                    .map(|(_, e)| (0..n).map(|l| e.derivative(l)).collect())
                    .collect();
                Compiled::Table { entries, derivs }
            }
        };
        Ok(Connection {
            n,
            metric: metric.clone(),
            compiled,
            kind: source.kind(),
        })
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn inverse_metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric.eval(x)?;
        g.try_inverse()
            .filter(|inv| inv.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularMetric { point: x.to_vec() })
    }

    fn eval_dg(dg: &[Vec<Vec<Expr>>], x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = dg.len();
        dg.iter()
            .map(|dl| {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = dl[i][j].eval(x)?;
                    }
                }
                Ok(m)
            })
            .collect()
    }

    /// `Γ^k_ij` at `x`.
    pub fn gamma(&self, x: &[f64]) -> Result<Christoffel> {
        let n = self.n;
        let mut out = Christoffel::zeros(n);
        match &self.compiled {
            Compiled::LeviCivita { dg, .. } => {
                let ginv = self.inverse_metric(x)?;
                let d = Self::eval_dg(dg, x)?;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let mut acc = 0.0;
                            for l in 0..n {
                                let s = d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)];
                                acc += ginv[(k, l)] * s;
                            }
                            out.set(k, i, j, 0.5 * acc);
                        }
                    }
                }
            }
            Compiled::Table { entries, .. } => {
                for ((k, i, j), e) in entries {
                    out.set(*k, *i, *j, e.eval(x)?);
                }
            }
        }
        Ok(out)
    }

    /// `Γ` and its coordinate derivatives: element `m` of the returned vector
    /// holds `∂_m Γ^k_ij`.
    pub fn gamma_with_derivatives(&self, x: &[f64]) -> Result<(Christoffel, Vec<Christoffel>)> {
        let n = self.n;
        let gamma = self.gamma(x)?;
        let mut derivs = vec![Christoffel::zeros(n); n];
        match &self.compiled {
            Compiled::LeviCivita { dg, d2g } => {
                let ginv = self.inverse_metric(x)?;
                let d = Self::eval_dg(dg, x)?;
                for (m, dm) in derivs.iter_mut().enumerate() {
                    let dd = Self::eval_dg(&d2g[m], x)?;
                    let dginv = -(&ginv * &d[m] * &ginv);
                    for k in 0..n {
                        for i in 0..n {
                            for j in 0..n {
                                let mut acc = 0.0;
                                for l in 0..n {
                                    let s = d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)];
                                    let ds = dd[i][(j, l)] + dd[j][(i, l)] - dd[l][(i, j)];
                                    acc += dginv[(k, l)] * s + ginv[(k, l)] * ds;
                                }
                                dm.set(k, i, j, 0.5 * acc);
                            }
                        }
                    }
                }
            }
            Compiled::Table {
                entries,
                derivs: de,
            } => {
                for (((k, i, j), _), row) in entries.iter().zip(de) {
                    for (m, dm) in derivs.iter_mut().enumerate() {
                        dm.set(*k, *i, *j, row[m].eval(x)?);
                    }
                }
            }
        }
        Ok((gamma, derivs))
    }

    /// Metric derivatives `∂_l g_ij` at `x` (used for compatibility checks).
    pub fn metric_derivatives(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.n;
        (0..n)
            .map(|l| {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = self.metric.entry(i, j).derivative(l).eval(x)?;
                    }
                }
                Ok(m)
            })
            .collect()
    }

    /// `max |∂_k g_ij - Γˡ_ki g_lj - Γˡ_kj g_il|` at `x`; zero for a
    /// metric-compatible connection.
    pub fn compatibility_residual(&self, x: &[f64]) -> Result<f64> {
        let n = self.n;
        let g = self.metric.eval(x)?;
        let dg = self.metric_derivatives(x)?;
        let gamma = self.gamma(x)?;
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = dg[k][(i, j)];
                    for l in 0..n {
                        r -= gamma.get(l, k, i) * g[(l, j)] + gamma.get(l, k, j) * g[(i, l)];
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// One-shot evaluation of the Christoffel symbols.
pub fn christoffel(
    source: &ChristoffelSource,
    metric: &MetricField,
    x: &[f64],
) -> Result<Christoffel> {
    Connection::new(source, metric)?.gamma(x)
}
