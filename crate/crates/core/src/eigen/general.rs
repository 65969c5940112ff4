//! Eigenvalues of a general real matrix: balancing, Householder reduction to
//! upper Hessenberg form, then Francis double-shift QR.
//!
//! Internally a 1-based `(n+1) x (n+1)` work array is used so the index
//! arithmetic follows the classical EISPACK layout.

use num_complex::Complex64;

use super::EigenError;

struct Work {
    n: usize,
    stride: usize,
    a: Vec<f64>,
}

impl Work {
    fn new(src: &[f64], n: usize) -> Self {
        let stride = n + 1;
        let mut a = vec![0.0; stride * stride];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * stride + j + 1] = src[i * n + j];
            }
        }
        Work { n, stride, a }
    }

    #[inline(always)]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stride + j]
    }

    #[inline(always)]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.stride + j]
    }
}

const RADIX: f64 = 2.0;

/// Diagonal similarity by powers of two so that row and column norms match.
fn balance(w: &mut Work) {
    let n = w.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += w.at(j, i).abs();
                    r += w.at(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        *w.at_mut(i, j) *= g;
                    }
                    for j in 1..=n {
                        *w.at_mut(j, i) *= f;
                    }
                }
            }
        }
    }
}

/// Orthogonal reduction to upper Hessenberg form.
fn hessenberg(w: &mut Work) {
    let n = w.n;
    let mut v = vec![0.0; n + 1];
    let mut acc = vec![0.0; n + 1];
    for k in 1..n.saturating_sub(1) {
        let tail: f64 = (k + 2..=n).map(|i| w.at(i, k).abs()).sum();
        if tail == 0.0 {
            continue;
        }
        let scale: f64 = tail + w.at(k + 1, k).abs();
        let mut sigma = 0.0;
        for i in k + 1..=n {
            v[i] = w.at(i, k) / scale;
            sigma += v[i] * v[i];
        }
        let alpha = -sigma.sqrt().copysign(v[k + 1]);
        let h = sigma - v[k + 1] * alpha;
        v[k + 1] -= alpha;
        // left: rows k+1..n, columns k..n
        for j in k..=n {
            acc[j] = 0.0;
        }
        for i in k + 1..=n {
            let vi = v[i];
            let row = &w.a[i * w.stride..(i + 1) * w.stride];
            for j in k..=n {
                acc[j] += vi * row[j];
            }
        }
        for i in k + 1..=n {
            let f = v[i] / h;
            let stride = w.stride;
            let row = &mut w.a[i * stride..(i + 1) * stride];
            for j in k..=n {
                row[j] -= f * acc[j];
            }
        }
        // right: rows 1..n, columns k+1..n
        for i in 1..=n {
            let stride = w.stride;
            let row = &mut w.a[i * stride..(i + 1) * stride];
            let dot: f64 = (k + 1..=n).map(|j| row[j] * v[j]).sum::<f64>() / h;
            for j in k + 1..=n {
                row[j] -= dot * v[j];
            }
        }
        *w.at_mut(k + 1, k) = alpha * scale;
        for i in k + 2..=n {
            *w.at_mut(i, k) = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. `budget` bounds
/// the total number of QR sweeps.
fn hqr(w: &mut Work, budget: usize) -> Result<Vec<Complex64>, EigenError> {
    let n = w.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += w.at(i, j).abs();
        }
    }
    let mut sweeps = 0usize;
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z);
    let mut ww;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = w.at(l - 1, l - 1).abs() + w.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if w.at(l, l - 1).abs() <= f64::EPSILON * s {
                    *w.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = w.at(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            y = w.at(nn - 1, nn - 1);
            ww = w.at(nn, nn - 1) * w.at(nn - 1, nn);
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + ww;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - ww / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            sweeps += 1;
            if sweeps > budget {
                return Err(EigenError::NoConvergence { sweeps: budget });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    *w.at_mut(i, i) -= x;
                }
                let s = w.at(nn, nn - 1).abs() + w.at(nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                ww = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            loop {
                z = w.at(m, m);
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - ww) / w.at(m + 1, m) + w.at(m, m + 1);
                q = w.at(m + 1, m + 1) - z - r - s0;
                r = w.at(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = w.at(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (w.at(m - 1, m - 1).abs() + z.abs() + w.at(m + 1, m + 1).abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                *w.at_mut(i, i - 2) = 0.0;
                if i != m + 2 {
                    *w.at_mut(i, i - 3) = 0.0;
                }
            }
            let mut k = m;
            while k + 1 <= nn {
                if k != m {
                    p = w.at(k, k - 1);
                    q = w.at(k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = w.at(k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            *w.at_mut(k, k - 1) = -w.at(k, k - 1);
                        }
                    } else {
                        *w.at_mut(k, k - 1) = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = w.at(k, j) + q * w.at(k + 1, j);
                        if k != nn - 1 {
                            p += r * w.at(k + 2, j);
                            *w.at_mut(k + 2, j) -= p * z;
                        }
                        *w.at_mut(k + 1, j) -= p * y;
                        *w.at_mut(k, j) -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        p = x * w.at(i, k) + y * w.at(i, k + 1);
                        if k != nn - 1 {
                            p += z * w.at(i, k + 2);
                            *w.at_mut(i, k + 2) -= p * r;
                        }
                        *w.at_mut(i, k + 1) -= p * q;
                        *w.at_mut(i, k) -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// All eigenvalues of the `n x n` row-major matrix `a`, unordered, with
/// conjugate pairs adjacent.
pub fn eigenvalues(a: &[f64], n: usize) -> Result<Vec<Complex64>, EigenError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = Work::new(a, n);
    balance(&mut w);
    hessenberg(&mut w);
    hqr(&mut w, 30 * n)
}

/// Same as [`eigenvalues`] but skips the Hessenberg reduction; `a` must
/// already be upper Hessenberg (tridiagonal input qualifies).
pub fn hessenberg_eigenvalues(a: &[f64], n: usize) -> Result<Vec<Complex64>, EigenError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut w = Work::new(a, n);
    balance(&mut w);
    hqr(&mut w, 30 * n)
}
