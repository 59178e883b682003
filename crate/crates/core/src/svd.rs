//! Truncated singular value decomposition.
//!
//! Small problems go through a dense SVD. Larger ones use an augmented,
//! implicitly restarted Lanczos bidiagonalization with full
//! reorthogonalization, which only touches the matrix through products with
//! it and its transpose.
//!
//! Output sign convention: in every column of `U` the entry of largest
//! magnitude is positive (lowest row index on ties), with the matching
//! column of `V` flipped alongside.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::fix_column_signs;
use crate::sparse::LinearOperator;

/// Problems whose smaller dimension is below this use the dense path under
/// [`SvdMethod::Auto`]. The dense SVD is cubic and unblocked, so it loses to
/// Lanczos well before the matrix stops fitting in memory.
pub const DENSE_CUTOFF: usize = 500;

/// Largest accepted `max_i ||A v_i - sigma_i u_i||` on the dense path, relative to `sigma_1`.
const DENSE_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdMethod {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdOptions {
    /// Convergence target: every Ritz residual below `tol * sigma_1`.
    pub tol: f64,
    pub method: SvdMethod,
    /// Restart budget; defaults to `10 * d`.
    pub max_restarts: Option<usize>,
    /// Lanczos basis size; defaults to `max(2d, d + 24)` capped by the matrix size.
    pub basis_size: Option<usize>,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            method: SvdMethod::Auto,
            max_restarts: None,
            basis_size: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `rows x d`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// `cols x d`, orthonormal columns.
    pub v: DMatrix<f64>,
    /// Lanczos restarts used (0 on the dense path).
    pub restarts: usize,
}

/// The `d` leading singular triplets of `op`.
pub fn truncated_svd<M: LinearOperator + ?Sized>(
    op: &M,
    d: usize,
    options: &SvdOptions,
) -> Result<TruncatedSvd> {
    let (m, n) = (op.nrows(), op.ncols());
    if d == 0 || d > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "rank {d} must lie in 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    let use_dense = match options.method {
        SvdMethod::Dense => true,
        SvdMethod::Lanczos => false,
        SvdMethod::Auto => m.min(n) < DENSE_CUTOFF,
    };
    let mut out = if use_dense {
        match dense_truncated(&op.to_dense(), d) {
            Some(svd) => svd,
            None => {
                log::warn!("dense SVD of a {m}x{n} matrix failed its residual check; using Lanczos");
                let strict = SvdOptions {
                    tol: options.tol.min(1e-12),
                    ..options.clone()
                };
                lanczos_oriented(op, d, &strict)?
            }
        }
    } else {
        lanczos_oriented(op, d, options)?
    };
    let TruncatedSvd { u, v, .. } = &mut out;
    fix_column_signs(u, &mut [v]);
    Ok(out)
}

fn lanczos_oriented<M: LinearOperator + ?Sized>(op: &M, d: usize, options: &SvdOptions) -> Result<TruncatedSvd> {
    if op.nrows() < op.ncols() {
        // Bidiagonalize the tall orientation so an exhausted basis is exact.
        let t = lanczos(&Transposed(op), d, options)?;
        Ok(TruncatedSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
            restarts: t.restarts,
        })
    } else {
        lanczos(op, d, options)
    }
}

struct Transposed<'a, M: ?Sized>(&'a M);

impl<M: LinearOperator + ?Sized> LinearOperator for Transposed<'_, M> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_transpose(x, y)
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.0.to_dense().transpose()
    }
}

/// Full dense SVD, truncated. The decomposition runs on the tall orientation
/// and is checked against `A v = sigma u`: nalgebra's bidiagonalization of
/// wide rank-deficient matrices can return wrong triplets. `None` on failure.
fn dense_truncated(a: &DMatrix<f64>, d: usize) -> Option<TruncatedSvd> {
    if a.nrows() < a.ncols() {
        let t = dense_truncated(&a.transpose(), d)?;
        return Some(TruncatedSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
            restarts: 0,
        });
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let order = &order[..d];
    let out = TruncatedSvd {
        u: DMatrix::from_fn(u.nrows(), d, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: DMatrix::from_fn(vt.ncols(), d, |r, c| vt[(order[c], r)]),
        restarts: 0,
    };
    let scale = out.singular_values[0].max(f64::MIN_POSITIVE);
    let residual = (a * &out.v - &out.u * DMatrix::from_diagonal(&DVector::from_column_slice(&out.singular_values)))
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    (residual <= DENSE_RESIDUAL * scale).then_some(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram-Schmidt against the first `count` columns of `basis`.
fn orthogonalize(vec: &mut [f64], basis: &DMatrix<f64>, count: usize) {
    for _ in 0..2 {
        for c in 0..count {
            let col = basis.column(c);
            let proj = dot(vec, col.as_slice());
            for (x, b) in vec.iter_mut().zip(col.iter()) {
                *x -= proj * b;
            }
        }
    }
}

/// Fills `vec` with a random direction orthogonal to the first `count` columns of `basis`.
fn random_orthogonal(vec: &mut [f64], basis: &DMatrix<f64>, count: usize, rng: &mut ChaCha20Rng) {
    loop {
        for x in vec.iter_mut() {
            *x = rng.random::<f64>() - 0.5;
        }
        orthogonalize(vec, basis, count);
        let nrm = norm(vec);
        if nrm > 1e-8 {
            vec.iter_mut().for_each(|x| *x /= nrm);
            return;
        }
    }
}

fn lanczos<M: LinearOperator + ?Sized>(
    op: &M,
    d: usize,
    options: &SvdOptions,
) -> Result<TruncatedSvd> {
    let (m, n) = (op.nrows(), op.ncols());
    let min_dim = m.min(n);
    let work = options
        .basis_size
        .unwrap_or((2 * d).max(d + 24))
        .clamp(d + 1, min_dim.max(d + 1))
        .min(min_dim);
    let max_restarts = options.max_restarts.unwrap_or(10 * d).max(1);
    // Restarts keep the wanted triplets plus a buffer of nearby ones.
    let keep = ((d + work) / 2).max(d).min(work.saturating_sub(1));

    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_1a2c);
    let mut vbasis = DMatrix::<f64>::zeros(n, work);
    let mut ubasis = DMatrix::<f64>::zeros(m, work);
    let mut bmat = DMatrix::<f64>::zeros(work, work);

    let mut start = vec![0.0; n];
    random_orthogonal(&mut start, &vbasis, 0, &mut rng);
    vbasis.column_mut(0).copy_from_slice(&start);

    let mut kept = 0usize;
    let mut residual_vec = vec![0.0; n];
    let mut wcol = vec![0.0; m];
    let mut last_residual = f64::INFINITY;

    for restart in 0..=max_restarts {
        // Extend the bidiagonalization from column `kept` up to `work`.
        for j in kept..work {
            op.apply(vbasis.column(j).as_slice(), &mut wcol);
            orthogonalize(&mut wcol, &ubasis, j);
            let alpha = norm(&wcol);
            if alpha > f64::EPSILON * 1e2 * (1.0 + bmat[(0, 0)].abs()) {
                wcol.iter_mut().for_each(|x| *x /= alpha);
                bmat[(j, j)] = alpha;
            } else {
                random_orthogonal(&mut wcol, &ubasis, j, &mut rng);
                bmat[(j, j)] = 0.0;
            }
            ubasis.column_mut(j).copy_from_slice(&wcol);

            op.apply_transpose(&wcol, &mut residual_vec);
            orthogonalize(&mut residual_vec, &vbasis, j + 1);
            let beta = norm(&residual_vec);
            if j + 1 < work {
                let mut next = residual_vec.clone();
                if beta > f64::EPSILON * 1e2 * (1.0 + bmat[(0, 0)].abs()) {
                    next.iter_mut().for_each(|x| *x /= beta);
                    bmat[(j, j + 1)] = beta;
                } else {
                    random_orthogonal(&mut next, &vbasis, j + 1, &mut rng);
                    bmat[(j, j + 1)] = 0.0;
                }
                vbasis.column_mut(j + 1).copy_from_slice(&next);
            }
        }
        let beta_final = norm(&residual_vec);

        let svd = bmat.clone().svd(true, true);
        let bu = svd.u.expect("requested U");
        let bvt = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..work).collect();
        order.sort_by(|&i, &j| {
            svd.singular_values[j]
                .partial_cmp(&svd.singular_values[i])
                .unwrap()
                .then(i.cmp(&j))
        });
        let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let scale = sigma[0].max(f64::MIN_POSITIVE);
        let residuals: Vec<f64> = order
            .iter()
            .map(|&i| (beta_final * bu[(work - 1, i)]).abs())
            .collect();
        last_residual = residuals[..d].iter().cloned().fold(0.0, f64::max);
        let exhausted = work == min_dim;

        if last_residual <= options.tol * scale || exhausted {
            let bu_sel = DMatrix::from_fn(work, d, |r, c| bu[(r, order[c])]);
            let bv_sel = DMatrix::from_fn(work, d, |r, c| bvt[(order[c], r)]);
            return Ok(TruncatedSvd {
                u: &ubasis * bu_sel,
                singular_values: sigma[..d].to_vec(),
                v: &vbasis * bv_sel,
                restarts: restart,
            });
        }
        if restart == max_restarts {
            break;
        }

        // Thick restart: rotate onto the leading Ritz vectors and append the residual direction.
        let bu_keep = DMatrix::from_fn(work, keep, |r, c| bu[(r, order[c])]);
        let bv_keep = DMatrix::from_fn(work, keep, |r, c| bvt[(order[c], r)]);
        let new_u = &ubasis * bu_keep;
        let new_v = &vbasis * bv_keep;
        ubasis.fill(0.0);
        vbasis.fill(0.0);
        ubasis.columns_mut(0, keep).copy_from(&new_u);
        vbasis.columns_mut(0, keep).copy_from(&new_v);
        bmat.fill(0.0);
        for c in 0..keep {
            bmat[(c, c)] = sigma[c];
            bmat[(c, keep)] = beta_final * bu[(work - 1, order[c])];
        }
        let mut next = residual_vec.clone();
        orthogonalize(&mut next, &vbasis, keep);
        let nrm = norm(&next);
        if nrm > f64::EPSILON * 1e2 * scale {
            next.iter_mut().for_each(|x| *x /= nrm);
        } else {
            random_orthogonal(&mut next, &vbasis, keep, &mut rng);
            for c in 0..keep {
                bmat[(c, keep)] = 0.0;
            }
        }
        vbasis.column_mut(keep).copy_from_slice(&next);
        kept = keep;
        // Column `keep` of U is recomputed from scratch on the next sweep; its
        // projection onto the kept U columns equals the couplings stored in B.
    }
    Err(Error::Convergence {
        restarts: max_restarts,
        residual: last_residual,
    })
}

/// Residual `max_i ||M v_i - sigma_i u_i||` of a decomposition, for diagnostics and tests.
pub fn residual_norm<M: LinearOperator + ?Sized>(op: &M, svd: &TruncatedSvd) -> f64 {
    let mut y = vec![0.0; op.nrows()];
    (0..svd.singular_values.len())
        .map(|c| {
            op.apply(svd.v.column(c).as_slice(), &mut y);
            let target: DVector<f64> = svd.u.column(c) * svd.singular_values[c];
            y.iter()
                .zip(target.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}
