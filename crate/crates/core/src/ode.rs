//! Fixed-step integration and interpolation on time grids.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// One classical Runge–Kutta step of `ẏ = f(t, y)`. A negative `h` steps
/// backwards.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &(y + &k1 * (0.5 * h)))?;
    let k3 = f(t + 0.5 * h, &(y + &k2 * (0.5 * h)))?;
    let k4 = f(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrates over consecutive grid times and returns the solution at every
/// grid point (the first entry is `y0`).
pub fn rk4_on_grid<F>(mut f: F, grid: &[f64], y0: DVector<f64>) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0);
    for w in grid.windows(2) {
        let next = rk4_step(&mut f, w[0], out.last().unwrap(), w[1] - w[0])?;
        out.push(next);
    }
    Ok(out)
}

/// Checks that a grid is finite, has at least two nodes and is strictly
/// increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::DegenerateGrid(format!(
            "{} node(s), need at least 2",
            grid.len()
        )));
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[0].is_finite() && w[1].is_finite()) || w[1] <= w[0] {
            return Err(Error::DegenerateGrid(format!(
                "times not strictly increasing at index {}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Index `k` of the interval `[grid[k], grid[k+1]]` containing `t`, clamped to
/// the grid.
pub fn locate(grid: &[f64], t: f64) -> usize {
    let last = grid.len() - 2;
    match grid.binary_search_by(|g| g.total_cmp(&t)) {
        Ok(i) => i.min(last),
        Err(0) => 0,
        Err(i) => (i - 1).min(last),
    }
}

/// Cubic Hermite interpolation between `(y0, d0)` at `t0` and `(y1, d1)` at
/// `t1`.
pub fn hermite(
    t0: f64,
    t1: f64,
    y0: &DVector<f64>,
    y1: &DVector<f64>,
    d0: &DVector<f64>,
    d1: &DVector<f64>,
    t: f64,
) -> DVector<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    y0 * h00 + d0 * (h10 * h) + y1 * h01 + d1 * (h11 * h)
}

/// Linear interpolation between grid samples.
pub fn lerp(t0: f64, t1: f64, y0: &DVector<f64>, y1: &DVector<f64>, t: f64) -> DVector<f64> {
    let s = (t - t0) / (t1 - t0);
    y0 * (1.0 - s) + y1 * s
}

/// Subdivides every interval of `grid` uniformly so the result has at least
/// `min_nodes` nodes. Returns the refined grid and, for each original node,
/// its index in the refined grid.
pub fn refine(grid: &[f64], min_nodes: usize) -> (Vec<f64>, Vec<usize>) {
    let intervals = grid.len() - 1;
    let per = ((min_nodes.saturating_sub(1)) as f64 / intervals as f64)
        .ceil()
        .max(1.0) as usize;
    let mut refined = Vec::with_capacity(intervals * per + 1);
    let mut index = Vec::with_capacity(grid.len());
    for w in grid.windows(2) {
        index.push(refined.len());
        for j in 0..per {
            refined.push(w[0] + (w[1] - w[0]) * (j as f64) / (per as f64));
        }
    }
    index.push(refined.len());
    refined.push(*grid.last().unwrap());
    (refined, index)
}

/// Derivative of sampled data by finite differences: second-order centered
/// differences inside, second-order one-sided at the ends (first order when
/// only two nodes exist). Works on non-uniform grids.
pub fn finite_difference(grid: &[f64], values: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let n = grid.len();
    let mut out = Vec::with_capacity(n);
    if n == 2 {
        let d = (&values[1] - &values[0]) / (grid[1] - grid[0]);
        return vec![d.clone(), d];
    }
    // Three-point Lagrange derivative at `at` using nodes i, i+1, i+2.
    let three_point = |i: usize, at: f64| {
        let (t0, t1, t2) = (grid[i], grid[i + 1], grid[i + 2]);
        let l0 = (2.0 * at - t1 - t2) / ((t0 - t1) * (t0 - t2));
        let l1 = (2.0 * at - t0 - t2) / ((t1 - t0) * (t1 - t2));
        let l2 = (2.0 * at - t0 - t1) / ((t2 - t0) * (t2 - t1));
        &values[i] * l0 + &values[i + 1] * l1 + &values[i + 2] * l2
    };
    out.push(three_point(0, grid[0]));
    for k in 1..n - 1 {
        out.push(three_point(k - 1, grid[k]));
    }
    out.push(three_point(n - 3, grid[n - 1]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exponential() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let sol = rk4_on_grid(|_t, y| Ok(y.clone()), &grid, DVector::from_vec(vec![1.0])).unwrap();
        assert!((sol[100][0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn refine_keeps_original_nodes() {
        let (r, idx) = refine(&[0.0, 0.5, 1.0], 1000);
        assert!(r.len() >= 1000);
        assert_eq!(r[idx[1]], 0.5);
        assert_eq!(*r.last().unwrap(), 1.0);
        assert_eq!(idx[2], r.len() - 1);
    }

    #[test]
    fn finite_difference_exact_on_quadratics() {
        let grid = vec![0.0, 0.1, 0.35, 0.6, 1.0];
        let vals: Vec<_> = grid
            .iter()
            .map(|t| DVector::from_vec(vec![t * t - 2.0 * t]))
            .collect();
        for (t, d) in grid.iter().zip(finite_difference(&grid, &vals)) {
            assert!((d[0] - (2.0 * t - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_clamps() {
        let g = [0.0, 1.0, 2.0];
        assert_eq!(locate(&g, -1.0), 0);
        assert_eq!(locate(&g, 1.0), 1);
        assert_eq!(locate(&g, 1.5), 1);
        assert_eq!(locate(&g, 2.0), 1);
        assert_eq!(locate(&g, 9.0), 1);
    }

    #[test]
    fn bad_grids() {
        assert!(check_grid(&[0.0]).is_err());
        assert!(check_grid(&[0.0, 0.0]).is_err());
        assert!(check_grid(&[0.0, f64::NAN]).is_err());
        assert!(check_grid(&[0.0, 1.0]).is_ok());
    }
}
