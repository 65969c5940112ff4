//! Householder tridiagonalization followed by implicit-shift QL.

use super::EigenError;

/// Reduces a dense symmetric matrix (row-major, both triangles stored) to
/// tridiagonal form, returning `(diagonal, off_diagonal)`.
pub fn tridiagonalize(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        // column k below the diagonal, read from row k (symmetry)
        let x = &a[k * n + k + 1..k * n + n];
        let scale: f64 = x.iter().map(|v| v.abs()).sum();
        if scale == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let mut sigma = 0.0;
        for (vi, &xi) in v[..m].iter_mut().zip(x) {
            *vi = xi / scale;
            sigma += *vi * *vi;
        }
        let alpha = -sigma.sqrt().copysign(v[0]);
        let h = sigma - v[0] * alpha;
        v[0] -= alpha;
        off[k] = alpha * scale;
        if h == 0.0 {
            continue;
        }
        let tau = 1.0 / h;
        // p = tau * A22 v
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = tau * row.iter().zip(&v[..m]).map(|(r, vj)| r * vj).sum::<f64>();
        }
        let kappa = 0.5 * tau * p[..m].iter().zip(&v[..m]).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..m {
            p[i] -= kappa * v[i];
        }
        // A22 -= v p^t + p v^t
        for i in 0..m {
            let (vi, pi) = (v[i], p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for ((r, &vj), &pj) in row.iter_mut().zip(&v[..m]).zip(&p[..m]) {
                *r -= vi * pj + pi * vj;
            }
        }
    }
    if n >= 2 {
        off[n - 2] = a[(n - 2) * n + n - 1];
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    (diag, off)
}

/// Eigenvalues of the symmetric tridiagonal matrix with the given diagonal
/// and off-diagonal, by implicit QL with Wilkinson shifts. Unsorted.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, EigenError> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let budget = 30 * n.max(1);
    let mut sweeps = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > budget {
                return Err(EigenError::NoConvergence { sweeps: budget });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}
