//! Dense symmetric positive-definite inverse via blocked Cholesky.
//!
//! The trailing updates are expressed as matrix products so that the heavy
//! lifting goes through ndarray's packed GEMM kernels.

use ndarray::{linalg::general_mat_mul, s, Array2, ArrayViewMut2};

use crate::{Error, Result};

const BLOCK: usize = 64;

/// Unblocked lower Cholesky of a small square block, in place.
fn cholesky_unblocked(mut a: ArrayViewMut2<'_, f64>, offset: usize) -> Result<()> {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[[j, j]];
        for p in 0..j {
            d -= a[[j, p]] * a[[j, p]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite (pivot {} = {d})",
                offset + j
            )));
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in (j + 1)..n {
            let mut v = a[[i, j]];
            for p in 0..j {
                v -= a[[i, p]] * a[[j, p]];
            }
            a[[i, j]] = v / d;
        }
        for p in (j + 1)..n {
            a[[j, p]] = 0.0;
        }
    }
    Ok(())
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`. Only the lower triangle of `a`
/// is read.
pub(crate) fn cholesky(mut a: Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut k = 0;
    while k < n {
        let kb = BLOCK.min(n - k);
        let end = k + kb;
        cholesky_unblocked(a.slice_mut(s![k..end, k..end]), k)?;
        if end < n {
            // A21 <- A21 L11^{-T}, row by row forward substitution
            let l11 = a.slice(s![k..end, k..end]).to_owned();
            {
                let mut a21 = a.slice_mut(s![end.., k..end]);
                for mut row in a21.rows_mut() {
                    for j in 0..kb {
                        let mut v = row[j];
                        for p in 0..j {
                            v -= row[p] * l11[[j, p]];
                        }
                        row[j] = v / l11[[j, j]];
                    }
                }
            }
            // A22 <- A22 - A21 A21ᵀ
            let a21 = a.slice(s![end.., k..end]).to_owned();
            general_mat_mul(-1.0, &a21, &a21.t(), 1.0, &mut a.slice_mut(s![end.., end..]));
        }
        k = end;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[[i, j]] = 0.0;
        }
    }
    Ok(a)
}

/// Inverse of a lower-triangular matrix, block row by block row.
pub(crate) fn invert_lower(l: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    let mut k = 0;
    while k < n {
        let kb = BLOCK.min(n - k);
        let end = k + kb;
        // rhs = I_block - L[k..end, 0..k] * inv[0..k, 0..end]
        let mut rhs = Array2::<f64>::zeros((kb, end));
        for d in 0..kb {
            rhs[[d, k + d]] = 1.0;
        }
        if k > 0 {
            general_mat_mul(
                -1.0,
                &l.slice(s![k..end, 0..k]),
                &inv.slice(s![0..k, 0..end]),
                1.0,
                &mut rhs,
            );
        }
        // forward-substitute with the diagonal block
        for r in 0..kb {
            for p in 0..r {
                let f = l[[k + r, k + p]];
                if f != 0.0 {
                    let (head, mut tail) = rhs.view_mut().split_at(ndarray::Axis(0), r);
                    tail.row_mut(0).scaled_add(-f, &head.row(p));
                }
            }
            let d = l[[k + r, k + r]];
            rhs.row_mut(r).mapv_inplace(|v| v / d);
        }
        inv.slice_mut(s![k..end, 0..end]).assign(&rhs);
        k = end;
    }
    inv
}

/// Inverse of a symmetric positive-definite matrix.
pub(crate) fn spd_inverse(a: Array2<f64>) -> Result<Array2<f64>> {
    let l = cholesky(a)?;
    let linv = invert_lower(&l);
    // A^{-1} = L^{-T} L^{-1}
    let mut out = linv.t().dot(&linv);
    let n = out.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[[i, j]] + out[[j, i]]);
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    Ok(out)
}
