//! Small sparse/dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// `y = A x`.
pub fn spmv(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.ncols(), x.len());
    debug_assert_eq!(a.nrows(), y.len());
    let (offsets, cols, vals) = a.csr_data();
    for (row, out) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for idx in offsets[row]..offsets[row + 1] {
            acc += vals[idx] * x[cols[idx]];
        }
        *out = acc;
    }
}

/// `y += alpha * A x`.
pub fn spmv_add(a: &CsrMatrix<f64>, alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.ncols(), x.len());
    debug_assert_eq!(a.nrows(), y.len());
    let (offsets, cols, vals) = a.csr_data();
    for (row, out) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for idx in offsets[row]..offsets[row + 1] {
            acc += vals[idx] * x[cols[idx]];
        }
        *out += alpha * acc;
    }
}

pub fn diagonal_csr(diag: &[f64]) -> CsrMatrix<f64> {
    let n = diag.len();
    let mut coo = CooMatrix::new(n, n);
    for (k, &d) in diag.iter().enumerate() {
        coo.push(k, k, d);
    }
    CsrMatrix::from(&coo)
}

pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        out[(i, j)] += *v;
    }
    out
}

/// Scales row `k` of `a` by `d[k]`, i.e. returns `diag(d) * a`.
pub fn scale_rows(a: &CsrMatrix<f64>, d: &[f64]) -> CsrMatrix<f64> {
    let mut out = a.clone();
    let (offsets, _, vals) = out.csr_data_mut();
    let offsets = offsets.to_vec();
    for row in 0..d.len() {
        for v in &mut vals[offsets[row]..offsets[row + 1]] {
            *v *= d[row];
        }
    }
    out
}

/// `A * B` with `A` sparse and `B` dense.
pub fn sparse_times_dense(a: &CsrMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for c in 0..b.ncols() {
        let src = b.column(c);
        let mut dst = out.column_mut(c);
        spmv(a, src.as_slice(), dst.as_mut_slice());
    }
    out
}

/// Largest absolute entry of `A - B` (same shape required).
pub fn max_abs_diff(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>) -> f64 {
    let d = to_dense(a) - to_dense(b);
    d.amax()
}

/// Thin SVD with singular values sorted descending and the trailing ones
/// below `rel_cutoff * sigma_max` dropped. Returns `(U, sigma, V)` with
/// `A ~ U diag(sigma) V^T`.
pub fn truncated_svd(
    a: &DMatrix<f64>,
    rel_cutoff: f64,
) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::DegenerateBasis("empty snapshot matrix".into()));
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in SVD input".into()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));
    let smax = sv[order[0]];
    if smax <= 0.0 {
        return Err(Error::DegenerateBasis("all-zero snapshot matrix".into()));
    }
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| sv[i] >= rel_cutoff * smax)
        .collect();
    let r = keep.len();
    let mut uu = DMatrix::zeros(a.nrows(), r);
    let mut vv = DMatrix::zeros(a.ncols(), r);
    let mut ss = DVector::zeros(r);
    for (c, &i) in keep.iter().enumerate() {
        uu.set_column(c, &u.column(i));
        vv.set_column(c, &vt.row(i).transpose());
        ss[c] = sv[i];
    }
    Ok((uu, ss, vv))
}

/// Moore-Penrose pseudo-inverse through the SVD, discarding singular values
/// below `rel_cutoff * sigma_max`. Also returns the retained rank.
pub fn pseudo_inverse(a: &DMatrix<f64>, rel_cutoff: f64) -> Result<(DMatrix<f64>, usize)> {
    let (u, s, v) = truncated_svd(a, rel_cutoff)?;
    let mut vs = v;
    for (c, sigma) in s.iter().enumerate() {
        vs.column_mut(c).scale_mut(1.0 / sigma);
    }
    Ok((&vs * u.transpose(), s.len()))
}

/// Stopping rule for the preconditioned conjugate gradient solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Residual tolerance relative to the right-hand side norm.
    pub rel_tol: f64,
    /// Iteration cap as a multiple of the system size.
    pub max_iter_factor: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter_factor: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG for SPD `a`; `x` holds the initial guess on entry.
pub fn pcg(
    a: &CsrMatrix<f64>,
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    opts: CgOptions,
) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    spmv(a, x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = opts.max_iter_factor.max(1) * n.max(1);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > opts.rel_tol {
        if it == max_iter || !res.is_finite() {
            return Err(Error::Solver {
                iterations: it,
                residual: res,
            });
        }
        spmv(a, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    Ok(CgOutcome {
        iterations: it,
        residual: res,
    })
}

/// Reciprocal of the diagonal of `a` (zero diagonal entries map to 1).
pub fn inverse_diagonal(a: &CsrMatrix<f64>) -> Vec<f64> {
    let mut d = vec![1.0; a.nrows()];
    for (i, j, v) in a.triplet_iter() {
        if i == j && *v != 0.0 {
            d[i] = 1.0 / v;
        }
    }
    d
}
