//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Flips column signs so the entry of largest magnitude in each column of
/// `basis` is positive. Ties go to the lowest row index. The same flips are
/// applied to the matching columns of every matrix in `companions`.
pub fn fix_column_signs(basis: &mut DMatrix<f64>, companions: &mut [&mut DMatrix<f64>]) {
    for c in 0..basis.ncols() {
        let mut best = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        for (r, v) in basis.column(c).iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = r;
            }
        }
        if basis.nrows() > 0 && basis[(best, c)] < 0.0 {
            basis.column_mut(c).neg_mut();
            for m in companions.iter_mut() {
                m.column_mut(c).neg_mut();
            }
        }
    }
}

/// Vertically stacks equally wide blocks.
pub fn vstack(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let ncols = blocks.first().map_or(0, |b| b.ncols());
    if blocks.iter().any(|b| b.ncols() != ncols) {
        return Err(Error::DimensionMismatch(
            "blocks to stack have different widths".into(),
        ));
    }
    let nrows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut offset = 0;
    for b in blocks {
        out.rows_mut(offset, b.nrows()).copy_from(b);
        offset += b.nrows();
    }
    Ok(out)
}

/// Largest singular value, through the eigenvalues of the smaller Gram matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let top = gram
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    top.max(0.0).sqrt()
}

/// Maximum Euclidean row norm.
pub fn two_to_infinity_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.norm())
        .fold(0.0f64, f64::max)
}

/// Singular values of a dense matrix in descending order. Computed on the
/// tall orientation, where nalgebra's bidiagonalization is reliable.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    let tall = if m.nrows() < m.ncols() { m.transpose() } else { m.clone() };
    let mut s: Vec<f64> = tall.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Count of singular values with `sigma / sigma_1 > rel_tol`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values_desc(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v / top > rel_tol).count(),
        _ => 0,
    }
}

/// Least-squares solution of `a * x = b` through the SVD of `a`. Fails when
/// `a` does not have full column rank.
pub fn least_squares(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "least squares with {} and {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let rank = numerical_rank(a, 1e-12 * (a.nrows().max(a.ncols()) as f64));
    if rank < a.ncols() {
        return Err(Error::RankDeficient(format!(
            "design matrix has rank {rank} < {}",
            a.ncols()
        )));
    }
    let svd = a.clone().svd(true, true);
    svd.solve(b, 0.0)
        .map_err(|e| Error::Singular(e.to_string()))
}

/// Ratio of largest to smallest singular value.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values_desc(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Sample mean (as a row vector stored in a `DVector`) and MLE covariance.
pub fn mean_and_covariance(points: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = points.nrows() as f64;
    let mean = points.row_mean().transpose();
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / m;
    (mean, cov)
}
