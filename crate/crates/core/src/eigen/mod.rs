//! Eigenvalue solvers and the spectra they produce.

pub mod general;
pub mod symmetric;

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::matrices::{symmetrize_check, Draws, MatrixFamily, RealMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("QR iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Imaginary parts at or below this multiple of the Frobenius norm are set
/// to zero.
pub const SNAP_TOL: f64 = 1e-10;
/// Eigenvalues with `|Im| <= REAL_TOL * ||M||` count as real.
pub const REAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub family: Option<MatrixFamily>,
    pub values: Vec<Complex64>,
    /// Frobenius norm of the source matrix.
    pub norm: f64,
}

impl Spectrum {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn with_family(mut self, family: MatrixFamily) -> Self {
        self.family = Some(family);
        self
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Eigenvalues with `|Im| <= REAL_TOL * norm`, as reals.
    pub fn classified_real(&self) -> Vec<f64> {
        let tol = REAL_TOL * self.norm;
        self.values
            .iter()
            .filter(|v| v.im.abs() <= tol)
            .map(|v| v.re)
            .collect()
    }

    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// Sum of eigenvalues equals `trace` to relative `tol` (scaled by the norm).
    pub fn trace_matches(&self, trace: f64, tol: f64) -> bool {
        let s = self.sum();
        let scale = self.norm.max(trace.abs()).max(f64::MIN_POSITIVE);
        (s.re - trace).abs() <= tol * scale && s.im.abs() <= tol * scale
    }

    /// Every non-real value has a partner equal to its conjugate.
    pub fn conjugate_paired(&self, tol: f64) -> bool {
        let scale = self.norm.max(f64::MIN_POSITIVE);
        self.values.iter().all(|v| {
            v.im == 0.0
                || self
                    .values
                    .iter()
                    .any(|w| (w - v.conj()).norm() <= tol * scale)
        })
    }

    fn sort_ascending(&mut self) {
        self.values
            .sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    }
}

fn snap(values: &mut [Complex64], norm: f64) {
    let tol = SNAP_TOL * norm;
    for v in values.iter_mut() {
        if v.im.abs() <= tol {
            v.im = 0.0;
        }
    }
}

fn real_spectrum(mut values: Vec<f64>, norm: f64) -> Spectrum {
    values.sort_by(f64::total_cmp);
    Spectrum {
        family: None,
        values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        norm,
    }
}

/// Real spectrum of an exactly symmetric matrix, sorted ascending.
pub fn eig_symmetric(m: &RealMatrix) -> Result<Spectrum, EigenError> {
    if !m.is_finite() {
        return Err(EigenError::NonFinite);
    }
    if !symmetrize_check(m) {
        return Err(EigenError::NotSymmetric);
    }
    let n = m.order();
    let (d, e) = symmetric::tridiagonalize(m.as_slice(), n);
    let values = symmetric::tridiagonal_eigenvalues(&d, &e)?;
    Ok(real_spectrum(values, m.frobenius_norm()))
}

/// Symmetric tridiagonal fast path: no dense matrix is formed.
pub fn eig_sym_tridiagonal(diag: &[f64], off: &[f64]) -> Result<Spectrum, EigenError> {
    let norm = (diag.iter().map(|v| v * v).sum::<f64>()
        + 2.0 * off.iter().map(|v| v * v).sum::<f64>())
    .sqrt();
    let values = symmetric::tridiagonal_eigenvalues(diag, off)?;
    Ok(real_spectrum(values, norm))
}

/// Spectrum of a general real matrix, order unspecified.
pub fn eig_general(m: &RealMatrix) -> Result<Spectrum, EigenError> {
    if !m.is_finite() {
        return Err(EigenError::NonFinite);
    }
    let norm = m.frobenius_norm();
    let mut values = general::eigenvalues(m.as_slice(), m.order())?;
    snap(&mut values, norm);
    Ok(Spectrum {
        family: None,
        values,
        norm,
    })
}

/// Eigenvalues of the circulant whose first row is `x`, via the DFT:
/// `lambda_m = sum_k x_k w^{mk}`, `w = e^{2 pi i / n}`, m = 0..n-1.
pub fn circulant_eigs_dft(x: &[f64]) -> Spectrum {
    let n = x.len();
    let norm = (n as f64).sqrt() * x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut values = circulant_dft(x);
    snap(&mut values, norm);
    Spectrum {
        family: Some(MatrixFamily::C),
        values,
        norm,
    }
}

fn circulant_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // inverse transform carries the e^{+2 pi i mk/n} kernel
    let fft: Arc<dyn rustfft::Fft<f64>> = FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut buf);
    // lambda_0 and (for even n) lambda_{n/2} are exactly real
    buf[0].im = 0.0;
    if n % 2 == 0 {
        buf[n / 2].im = 0.0;
    }
    buf
}

/// Closed-form eigenvalues of the two 2x2 families, ascending.
pub fn eig_2x2(family: MatrixFamily, a: f64, b: f64, c: f64) -> Spectrum {
    let (lo, hi, m) = match family {
        MatrixFamily::R2 => {
            let r = b.hypot(c);
            (a - r, a + r, RealMatrix::from_rows(&[vec![a + b, c], vec![c, a - b]]))
        }
        _ => {
            let r = (a - c).hypot(2.0 * b);
            (
                0.5 * (a + c - r),
                0.5 * (a + c + r),
                RealMatrix::from_rows(&[vec![a, b], vec![b, c]]),
            )
        }
    };
    Spectrum {
        family: Some(family),
        values: vec![Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)],
        norm: m.frobenius_norm(),
    }
}

/// How a replica's spectrum is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Form the dense matrix and use the symmetric or general solver.
    Dense,
    /// Use the family's structure where one is known: DFT for circulants,
    /// their symmetric reversal and C C^t, banded QL for symmetric
    /// tridiagonals and T'.
    #[default]
    Structured,
}

impl SolverPath {
    pub fn token(self) -> &'static str {
        match self {
            SolverPath::Dense => "dense",
            SolverPath::Structured => "structured",
        }
    }
}

impl std::str::FromStr for SolverPath {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dense" => Ok(SolverPath::Dense),
            "structured" => Ok(SolverPath::Structured),
            other => Err(format!("unknown solver path `{other}`")),
        }
    }
}

/// Spectrum of one replica, sorted by real part then imaginary part.
pub fn spectrum_of(draws: &Draws, path: SolverPath) -> Result<Spectrum, EigenError> {
    use MatrixFamily::*;
    let n = draws.n;
    let mut spec = match (path, draws.family) {
        (SolverPath::Structured, C) => circulant_eigs_dft(&draws.elements),
        (SolverPath::Structured, D) => {
            // C C^t shares the Fourier eigenvectors: eigenvalues |lambda_m|^2
            let values: Vec<f64> = circulant_dft(&draws.elements)
                .iter()
                .map(|v| v.norm_sqr())
                .collect();
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            real_spectrum(values, norm)
        }
        (SolverPath::Structured, Csym) => {
            // x_{(i+j) mod n} is the reversal of a circulant: the two real
            // Fourier modes keep their sign, every other pair m, n-m
            // becomes +-|lambda_m|
            let lam = circulant_dft(&draws.elements);
            let mut values = Vec::with_capacity(n);
            values.push(lam[0].re);
            if n % 2 == 0 {
                values.push(lam[n / 2].re);
            }
            for l in &lam[1..n.div_ceil(2)] {
                values.push(l.norm());
                values.push(-l.norm());
            }
            let norm = (n as f64).sqrt() * draws.elements.iter().map(|v| v * v).sum::<f64>().sqrt();
            real_spectrum(values, norm)
        }
        (SolverPath::Structured, Tsym) => {
            let (d, off, _) = draws.tridiagonal_parts();
            eig_sym_tridiagonal(d, off)?
        }
        (SolverPath::Structured, Tprime) => {
            // diagonal similarity to the symmetric tridiagonal with
            // off-diagonal sqrt(y_k z_k)
            let (d, up, lo) = draws.tridiagonal_parts();
            let off: Vec<f64> = up.iter().zip(lo).map(|(y, z)| (y * z).sqrt()).collect();
            let mut s = eig_sym_tridiagonal(d, &off)?;
            s.norm = (d.iter().map(|v| v * v).sum::<f64>()
                + up.iter().chain(lo).map(|v| v * v).sum::<f64>())
            .sqrt();
            s
        }
        (SolverPath::Structured, T) => {
            let m = draws.to_matrix();
            let norm = m.frobenius_norm();
            let mut values = general::hessenberg_eigenvalues(m.as_slice(), n)?;
            snap(&mut values, norm);
            Spectrum {
                family: None,
                values,
                norm,
            }
        }
        (_, f) => {
            let m = draws.to_matrix();
            if f.is_symmetric() {
                eig_symmetric(&m)?
            } else {
                eig_general(&m)?
            }
        }
    };
    spec.sort_ascending();
    spec.family = Some(draws.family);
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::{build, circulant, draw, EnsembleSpec};
    use crate::sampler::{PdfFamily, PdfSpec};
    use std::f64::consts::PI;

    fn sorted_re(s: &Spectrum) -> Vec<f64> {
        let mut v = s.real_values();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Direct O(n^2) DFT, independent of the FFT path.
    fn dft_oracle(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|m| {
                x.iter()
                    .enumerate()
                    .map(|(k, &xk)| {
                        let ang = 2.0 * PI * ((m * k) % n) as f64 / n as f64;
                        Complex64::new(xk * ang.cos(), xk * ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    /// Greedy matching distance between two multisets of complex numbers.
    fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst = 0.0f64;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn diagonal_and_parity() {
        let s = eig_symmetric(&RealMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.real_values(), vec![1.0, 2.0, 3.0]);
        let p = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let s = eig_symmetric(&p).unwrap();
        assert!((s.values[0].re + 1.0).abs() < 1e-15 && (s.values[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_cyclic_three_by_three() {
        let m = Draws {
            family: MatrixFamily::Csym,
            n: 3,
            elements: vec![1.0, 2.0, 3.0],
        }
        .to_matrix();
        let s = eig_symmetric(&m).unwrap();
        let r3 = 3f64.sqrt();
        let want = [-r3, r3, 6.0];
        for (g, w) in s.real_values().iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn rejects_non_symmetric() {
        let m = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert_eq!(eig_symmetric(&m), Err(EigenError::NotSymmetric));
    }

    #[test]
    fn circulant_three_by_three_general_solver() {
        let m = circulant(&[1.0, 2.0, 3.0]);
        let s = eig_general(&m).unwrap();
        let want = dft_oracle(&[1.0, 2.0, 3.0]);
        assert!((want[0].re - 6.0).abs() < 1e-12);
        let pair = Complex64::new(-1.5, 0.75f64.sqrt());
        assert!(want.iter().any(|w| (w - pair).norm() < 1e-12));
        assert!(want.iter().any(|w| (w - pair.conj()).norm() < 1e-12));
        assert!(multiset_distance(&s.values, &want) < 1e-12);
        assert!(s.conjugate_paired(1e-8));
    }

    #[test]
    fn identity_general() {
        let s = eig_general(&RealMatrix::identity(5)).unwrap();
        assert!(s.values.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn circulant_four_by_four_real_pair() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let s = eig_general(&circulant(&x)).unwrap();
        let real: Vec<f64> = s.classified_real();
        assert_eq!(real.len(), 2);
        // sum and alternating sum
        let alt: f64 = x.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -v }).sum();
        assert!(real.iter().any(|v| (v - 10.0).abs() < 1e-12));
        assert!(real.iter().any(|v| (v - alt).abs() < 1e-12));
    }

    #[test]
    fn dft_path_matches_direct_oracle() {
        let d = circulant_eigs_dft(&[1.0, 2.0, 3.0]);
        assert!(multiset_distance(&d.values, &dft_oracle(&[1.0, 2.0, 3.0])) < 1e-12);
        let c = circulant_eigs_dft(&[2.0; 6]);
        let mut v: Vec<f64> = c.values.iter().map(|v| v.norm()).collect();
        v.sort_by(f64::total_cmp);
        assert!((v[5] - 12.0).abs() < 1e-12 && v[..5].iter().all(|x| *x < 1e-12));
        let id = circulant_eigs_dft(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(id.values.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn two_by_two_closed_forms() {
        let s = eig_2x2(MatrixFamily::R1, 0.7, 0.0, 0.7);
        assert_eq!(s.values[0], s.values[1]);
        let s = eig_2x2(MatrixFamily::R2, 0.0, 3.0, 4.0);
        assert_eq!(s.real_values(), vec![-5.0, 5.0]);
        let s = eig_2x2(MatrixFamily::R1, 1.0, 1.0, -1.0);
        let r2 = 2f64.sqrt();
        assert!((s.values[0].re + r2).abs() < 1e-15 && (s.values[1].re - r2).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_agrees_with_dense_solver() {
        for (a, b, c) in [(0.3, -1.2, 2.0), (1.0, 0.5, 1.0), (-2.0, 0.1, 0.3)] {
            for fam in [MatrixFamily::R1, MatrixFamily::R2] {
                let closed = eig_2x2(fam, a, b, c);
                let dense = eig_symmetric(
                    &Draws {
                        family: fam,
                        n: 2,
                        elements: vec![a, b, c],
                    }
                    .to_matrix(),
                )
                .unwrap();
                for (x, y) in closed.values.iter().zip(&dense.values) {
                    assert!((x - y).norm() < 1e-13);
                }
            }
        }
    }

    fn gaussian(family: MatrixFamily, n: usize, count: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            family,
            n,
            count,
            pdf: PdfSpec::new(PdfFamily::Gaussian),
            seed,
        }
    }

    #[test]
    fn residuals_are_small() {
        // inverse iteration-free check: det(M - lambda I) sign changes are
        // awkward, so test |M v - lambda v| with v from a shifted solve
        let spec = gaussian(MatrixFamily::Rsym, 12, 5, 1);
        for i in 0..5 {
            let m = build(&spec, i).unwrap();
            let s = eig_symmetric(&m).unwrap();
            for lam in s.real_values() {
                let v = null_vector(&m, lam);
                let mv = m.mul_vec(&v);
                let res: f64 = mv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - lam * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-10 * m.frobenius_norm(), "residual {res}");
            }
        }
    }

    /// A few steps of inverse iteration with Gaussian elimination.
    fn null_vector(m: &RealMatrix, lam: f64) -> Vec<f64> {
        let n = m.order();
        let shift = lam + 1e-10 * m.frobenius_norm();
        let mut v = vec![1.0; n];
        for _ in 0..3 {
            let mut a: Vec<Vec<f64>> = m.rows();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] -= shift;
            }
            let mut b = v.clone();
            for col in 0..n {
                let piv = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
                a.swap(col, piv);
                b.swap(col, piv);
                for r in col + 1..n {
                    let f = a[r][col] / a[col][col];
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
            for r in (0..n).rev() {
                let s: f64 = (r + 1..n).map(|c| a[r][c] * b[c]).sum();
                b[r] = (b[r] - s) / a[r][r];
            }
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = b.iter().map(|x| x / nb).collect();
        }
        v
    }

    #[test]
    fn general_agrees_with_symmetric() {
        let spec = gaussian(MatrixFamily::RsymDirect, 8, 50, 2024);
        for i in 0..50 {
            let m = build(&spec, i).unwrap();
            let a = sorted_re(&eig_symmetric(&m).unwrap());
            let g = eig_general(&m).unwrap();
            assert!(g.is_real());
            let b = sorted_re(&g);
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-8 * m.frobenius_norm(), "replica {i}: {err}");
        }
    }

    #[test]
    fn general_matches_dft_on_circulants() {
        for &n in &[3usize, 4, 8, 64] {
            let spec = gaussian(MatrixFamily::C, n, 4, n as u64);
            for i in 0..4 {
                let d = draw(&spec, i).unwrap();
                let m = d.to_matrix();
                let g = eig_general(&m).unwrap();
                let o = circulant_eigs_dft(&d.elements);
                let err = multiset_distance(&g.values, &o.values);
                assert!(err <= 1e-8 * m.frobenius_norm(), "n={n}: {err}");
                assert_eq!(g.classified_real().len(), if n % 2 == 0 { 2 } else { 1 });
            }
        }
    }

    #[test]
    fn trace_identity_across_families() {
        for f in MatrixFamily::ALL {
            let n = if matches!(f, MatrixFamily::R1 | MatrixFamily::R2) { 2 } else { 10 };
            let spec = gaussian(f, n, 3, 5);
            for i in 0..3 {
                let d = draw(&spec, i).unwrap();
                let m = d.to_matrix();
                for path in [SolverPath::Dense, SolverPath::Structured] {
                    let s = spectrum_of(&d, path).unwrap();
                    assert_eq!(s.order(), n);
                    assert!(s.trace_matches(m.trace(), 1e-8), "{f} {path:?}");
                    assert!(s.conjugate_paired(1e-8), "{f} {path:?}");
                }
            }
        }
    }

    #[test]
    fn structured_and_dense_paths_agree() {
        let families = [MatrixFamily::C, MatrixFamily::Csym, MatrixFamily::D, MatrixFamily::Tsym, MatrixFamily::Tprime, MatrixFamily::T];
        for (f, n) in families.into_iter().flat_map(|f| [(f, 16), (f, 15)]) {
            let spec = gaussian(f, n, 3, 77);
            for i in 0..3 {
                let d = draw(&spec, i).unwrap();
                let a = spectrum_of(&d, SolverPath::Dense).unwrap();
                let b = spectrum_of(&d, SolverPath::Structured).unwrap();
                let err = multiset_distance(&a.values, &b.values);
                assert!(err <= 1e-8 * a.norm, "{f} n={n}: {err}");
            }
        }
    }

    #[test]
    fn tridiagonal_families_have_real_spectra() {
        for f in [MatrixFamily::Tsym, MatrixFamily::Tprime] {
            let spec = gaussian(f, 20, 100, 8);
            for i in 0..100 {
                let m = build(&spec, i).unwrap();
                let s = eig_general(&m).unwrap();
                let worst = s.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
                assert!(worst <= 1e-8 * s.norm, "{f} replica {i}: {worst}");
            }
        }
    }

    #[test]
    fn gram_families_are_positive_semidefinite() {
        for f in [MatrixFamily::Q, MatrixFamily::D, MatrixFamily::S] {
            let spec = gaussian(f, 15, 5, 3);
            for i in 0..5 {
                let m = build(&spec, i).unwrap();
                let s = eig_symmetric(&m).unwrap();
                assert!(s.values[0].re >= -1e-9 * s.norm, "{f}");
            }
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        // a huge budget is never hit on benign input; a zero budget must fail
        let m = circulant(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let mut w = m.as_slice().to_vec();
        w[1] += 0.5;
        assert!(general::eigenvalues(&w, 5).is_ok());
        let err = symmetric::tridiagonal_eigenvalues(&[1.0, 2.0, 3.0], &[1.0, 1.0]);
        assert!(err.is_ok());
    }
}
