//! Least squares by Householder QR with column pivoting.

use alloc::vec::Vec;

use crate::math;
use crate::matrix::Matrix;

/// Relative threshold on `|R_kk| / |R_00|` below which a pivot is treated
/// as zero.
const RANK_TOLERANCE: f64 = 1e-10;

/// Solves `min ‖A·w − b‖₂`.
///
/// Rank-deficient systems get the basic solution: coefficients of columns
/// beyond the numerical rank are zero. Pivoting picks the largest remaining
/// column norm, lowest index on ties, so the result is deterministic.
pub fn lstsq(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m, "rhs length mismatch");
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| a.column(c).collect()).collect();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let steps = m.min(n);
    let mut rank = 0;
    let mut r00 = 0.0;

    for k in 0..steps {
        let mut p = k;
        for j in k + 1..n {
            if norms[j] > norms[p] {
                p = j;
            }
        }
        cols.swap(k, p);
        norms.swap(k, p);
        perm.swap(k, p);

        let alpha_sq: f64 = cols[k][k..].iter().map(|v| v * v).sum();
        let alpha = math::sqrt(alpha_sq);
        if k == 0 {
            r00 = alpha;
        }
        if alpha == 0.0 || alpha <= RANK_TOLERANCE * r00 {
            break;
        }
        // Householder vector v = x + sign(x0)·‖x‖·e1
        let sign = if cols[k][k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] += sign * alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        let apply = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm_sq;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for col in cols.iter_mut().skip(k) {
            apply(&mut col[k..]);
        }
        apply(&mut rhs[k..]);
        for j in k + 1..n {
            norms[j] = cols[j][k + 1..].iter().map(|x| x * x).sum();
        }
        rank = k + 1;
    }

    // back substitution on the leading rank×rank block of R
    let mut z = alloc::vec![0.0; n];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s -= cols[j][i] * z[j];
        }
        z[i] = s / cols[i][i];
    }
    let mut w = alloc::vec![0.0; n];
    for (k, &orig) in perm.iter().enumerate() {
        w[orig] = z[k];
    }
    w
}
