//! Dense linear-algebra helpers on top of nalgebra: rank-revealing null
//! spaces, minimum-norm least squares and prioritized least squares.

use nalgebra::{DMatrix, DVector, SVD};

/// Orthonormal basis of the numerical null space of a matrix.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Columns span the null space (`cols × dim`).
    pub basis: DMatrix<f64>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

struct Decomposition {
    // rows of v_t paired with singular values, descending by value
    sigma: Vec<f64>,
    v_rows: Vec<DVector<f64>>,
    u_cols: Vec<DVector<f64>>,
}

fn decompose(m: &DMatrix<f64>) -> Decomposition {
    let (rows, cols) = m.shape();
    // Pad wide matrices so V is square and spans the full domain.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Decomposition {
        sigma: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v_rows: order.iter().map(|&i| v_t.row(i).transpose()).collect(),
        u_cols: order
            .iter()
            .map(|&i| u.column(i).rows(0, rows).into_owned())
            .collect(),
    }
}

/// Flips `v` so its largest-magnitude component is positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    if let Some((idx, _)) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    {
        if v[idx] < 0.0 {
            v.neg_mut();
        }
    }
}

/// Null space with rank cut `σ ≤ rel_tol · σ_max`. A zero matrix has a full
/// null space.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> NullSpace {
    null_space_below(m, |sigma_max| rel_tol * sigma_max)
}

fn null_space_below(m: &DMatrix<f64>, cut: impl Fn(f64) -> f64) -> NullSpace {
    let cols = m.ncols();
    if m.nrows() == 0 || m.iter().all(|v| *v == 0.0) {
        return NullSpace {
            basis: DMatrix::identity(cols, cols),
            singular_values: vec![0.0; cols],
            rank: 0,
        };
    }
    let dec = decompose(m);
    let cut = cut(dec.sigma[0]);
    let rank = dec.sigma.iter().filter(|s| **s > cut).count();
    let mut basis = DMatrix::zeros(cols, cols - rank);
    for (j, row) in dec.v_rows.iter().skip(rank).enumerate() {
        let mut v = row.clone();
        canonical_sign(&mut v);
        basis.set_column(j, &v);
    }
    NullSpace {
        basis,
        singular_values: dec.sigma,
        rank,
    }
}

/// Minimum-norm least-squares solution of `m x ≈ b` via the pseudo-inverse,
/// truncating singular values below `rel_tol · σ_max`.
pub fn lstsq(m: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    lstsq_below(m, b, |sigma_max| rel_tol * sigma_max)
}

fn lstsq_below(m: &DMatrix<f64>, b: &DVector<f64>, cut: impl Fn(f64) -> f64) -> DVector<f64> {
    let cols = m.ncols();
    let mut x = DVector::zeros(cols);
    if m.nrows() == 0 || m.iter().all(|v| *v == 0.0) {
        return x;
    }
    let dec = decompose(m);
    let cut = cut(dec.sigma[0]);
    for ((s, v), u) in dec.sigma.iter().zip(&dec.v_rows).zip(&dec.u_cols) {
        if *s > cut {
            x += v * (u.dot(b) / s);
        }
    }
    x
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    decompose(m).sigma[0]
}

/// Scales each row of `[m | b]` so the row of `m` has unit norm. Rows of `m`
/// that vanish are kept unscaled.
pub fn normalize_rows(m: &mut DMatrix<f64>, b: &mut DVector<f64>) {
    for i in 0..m.nrows() {
        let norm = m.row(i).norm();
        if norm > 0.0 {
            m.row_mut(i).scale_mut(1.0 / norm);
            b[i] /= norm;
        }
    }
}

/// Prioritized least squares: each tier is solved as well as possible
/// without disturbing the optimum of the tiers before it. Returns the
/// solution and the residual vector of every tier.
///
/// The rank cut of a tier is relative to the tier before projection, so a
/// tier that the earlier ones already determine contributes nothing rather
/// than amplified round-off.
pub fn tiered_lstsq(
    tiers: &[(DMatrix<f64>, DVector<f64>)],
    dim: usize,
    rel_tol: f64,
) -> (DVector<f64>, Vec<DVector<f64>>) {
    let mut x = DVector::zeros(dim);
    let mut free = DMatrix::<f64>::identity(dim, dim);
    for (m, b) in tiers {
        if free.ncols() == 0 || m.nrows() == 0 {
            continue;
        }
        let cut = rel_tol * spectral_norm(m);
        let projected = m * &free;
        let rhs = b - m * &x;
        let z = lstsq_below(&projected, &rhs, |_| cut);
        x += &free * z;
        let ns = null_space_below(&projected, |_| cut);
        free = &free * ns.basis;
    }
    let residuals = tiers.iter().map(|(m, b)| m * &x - b).collect();
    (x, residuals)
}

/// Condition number of a symmetric positive semidefinite matrix.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Leading principal minors, smallest first.
pub fn leading_minors(m: &DMatrix<f64>) -> Vec<f64> {
    (1..=m.nrows())
        .map(|k| m.view((0, 0), (k, k)).into_owned().determinant())
        .collect()
}
