//! Matrix families built from iid element draws.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{seed_stream, RandomStream};
use crate::sampler::{make_pdf, Pdf, PdfError, PdfSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("unknown matrix family `{0}`")]
    UnknownFamily(String),
    #[error("family {family} requires order {required}, got {got}")]
    OrderMismatch {
        family: MatrixFamily,
        required: usize,
        got: usize,
    },
    #[error("matrix order must be at least 1")]
    EmptyOrder,
    #[error("replica count must be at least 1")]
    NoReplicas,
    #[error("replica index {index} out of range for {count} replicas")]
    IndexOutOfRange { index: usize, count: usize },
    #[error(transparent)]
    Pdf(#[from] PdfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixFamily {
    /// Full real matrix with n^2 iid entries.
    R,
    /// R + R^t.
    Rsym,
    /// Symmetric matrix with n(n+1)/2 iid entries.
    RsymDirect,
    /// [[a, b], [b, c]]
    R1,
    /// [[a + b, c], [c, a - b]]
    R2,
    /// Circulant: every row is the previous one shifted right by one.
    C,
    /// Symmetric cyclic: every row is the previous one shifted left by one.
    Csym,
    /// Tridiagonal with 3n-2 iid entries.
    T,
    /// Symmetric tridiagonal with 2n-1 iid entries.
    Tsym,
    /// Tridiagonal with every off-diagonal product positive.
    Tprime,
    /// Symmetric Toeplitz, entry (i, j) = x_{|i-j|}.
    Toeplitz,
    /// R R^t.
    Q,
    /// C C^t.
    D,
    /// T T^t.
    S,
}

impl MatrixFamily {
    pub const ALL: [MatrixFamily; 14] = [
        MatrixFamily::R,
        MatrixFamily::Rsym,
        MatrixFamily::RsymDirect,
        MatrixFamily::R1,
        MatrixFamily::R2,
        MatrixFamily::C,
        MatrixFamily::Csym,
        MatrixFamily::T,
        MatrixFamily::Tsym,
        MatrixFamily::Tprime,
        MatrixFamily::Toeplitz,
        MatrixFamily::Q,
        MatrixFamily::D,
        MatrixFamily::S,
    ];

    pub fn token(self) -> &'static str {
        match self {
            MatrixFamily::R => "r",
            MatrixFamily::Rsym => "rsym",
            MatrixFamily::RsymDirect => "rsym_direct",
            MatrixFamily::R1 => "r1",
            MatrixFamily::R2 => "r2",
            MatrixFamily::C => "c",
            MatrixFamily::Csym => "csym",
            MatrixFamily::T => "t",
            MatrixFamily::Tsym => "tsym",
            MatrixFamily::Tprime => "tprime",
            MatrixFamily::Toeplitz => "toeplitz",
            MatrixFamily::Q => "q",
            MatrixFamily::D => "d",
            MatrixFamily::S => "s",
        }
    }

    /// Whether every instance is exactly symmetric.
    pub fn is_symmetric(self) -> bool {
        use MatrixFamily::*;
        matches!(self, Rsym | RsymDirect | R1 | R2 | Csym | Tsym | Toeplitz | Q | D | S)
    }

    /// Whether the spectrum is real for every instance.
    pub fn has_real_spectrum(self) -> bool {
        self.is_symmetric() || self == MatrixFamily::Tprime
    }

    /// Number of iid draws consumed per replica.
    pub fn draw_count(self, n: usize) -> usize {
        use MatrixFamily::*;
        match self {
            R | Rsym | Q => n * n,
            RsymDirect => n * (n + 1) / 2,
            R1 | R2 => 3,
            C | Csym | Toeplitz | D => n,
            T | Tprime | S => 3 * n - 2,
            Tsym => 2 * n - 1,
        }
    }
}

impl fmt::Display for MatrixFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for MatrixFamily {
    type Err = MatrixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        MatrixFamily::ALL
            .iter()
            .copied()
            .find(|f| f.token() == lower)
            .ok_or_else(|| MatrixError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: MatrixFamily,
    pub n: usize,
    /// Replica count.
    #[serde(rename = "replicas")]
    pub count: usize,
    pub pdf: PdfSpec,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<Pdf, MatrixError> {
        if self.n == 0 {
            return Err(MatrixError::EmptyOrder);
        }
        if self.count == 0 {
            return Err(MatrixError::NoReplicas);
        }
        if matches!(self.family, MatrixFamily::R1 | MatrixFamily::R2) && self.n != 2 {
            return Err(MatrixError::OrderMismatch {
                family: self.family,
                required: 2,
                got: self.n,
            });
        }
        Ok(make_pdf(self.pdf)?)
    }
}

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(n: usize) -> Self {
        RealMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RealMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = RealMatrix::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Panics if the row lengths differ from the row count.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        RealMatrix { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> RealMatrix {
        let n = self.n;
        let mut t = RealMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    /// `self * self^t`, symmetric by construction.
    pub fn gram(&self) -> RealMatrix {
        let n = self.n;
        let mut g = RealMatrix::zeros(n);
        for i in 0..n {
            let ri = self.row(i);
            for j in 0..=i {
                let rj = self.row(j);
                let v: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                g.data[i * n + j] = v;
                g.data[j * n + i] = v;
            }
        }
        g
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// The iid draws behind one replica, kept so structured solvers can work
/// from the generating elements instead of the dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub family: MatrixFamily,
    pub n: usize,
    pub elements: Vec<f64>,
}

impl Draws {
    /// Splits tridiagonal draws into (diagonal, upper, lower).
    pub fn tridiagonal_parts(&self) -> (&[f64], &[f64], &[f64]) {
        let n = self.n;
        match self.family {
            MatrixFamily::T | MatrixFamily::Tprime | MatrixFamily::S => {
                let (x, rest) = self.elements.split_at(n);
                let (y, z) = rest.split_at(n - 1);
                (x, y, z)
            }
            MatrixFamily::Tsym => {
                let (x, y) = self.elements.split_at(n);
                (x, y, y)
            }
            other => panic!("family {other} is not tridiagonal"),
        }
    }

    pub fn to_matrix(&self) -> RealMatrix {
        use MatrixFamily::*;
        let n = self.n;
        let x = &self.elements;
        match self.family {
            R => RealMatrix {
                n,
                data: x.clone(),
            },
            Rsym => {
                let r = RealMatrix {
                    n,
                    data: x.clone(),
                };
                let mut m = RealMatrix::zeros(n);
                for i in 0..n {
                    for j in 0..=i {
                        let v = r[(i, j)] + r[(j, i)];
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                }
                m
            }
            RsymDirect => {
                let mut m = RealMatrix::zeros(n);
                let mut k = 0;
                for i in 0..n {
                    for j in i..n {
                        m[(i, j)] = x[k];
                        m[(j, i)] = x[k];
                        k += 1;
                    }
                }
                m
            }
            R1 => RealMatrix::from_rows(&[vec![x[0], x[1]], vec![x[1], x[2]]]),
            R2 => RealMatrix::from_rows(&[vec![x[0] + x[1], x[2]], vec![x[2], x[0] - x[1]]]),
            C => circulant(x),
            Csym => {
                let mut m = RealMatrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = x[(i + j) % n];
                    }
                }
                m
            }
            Toeplitz => {
                let mut m = RealMatrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = x[i.abs_diff(j)];
                    }
                }
                m
            }
            T | Tsym | Tprime => {
                let (d, up, lo) = self.tridiagonal_parts();
                tridiagonal(d, up, lo)
            }
            Q => RealMatrix {
                n,
                data: x.clone(),
            }
            .gram(),
            D => circulant(x).gram(),
            S => {
                let (d, up, lo) = self.tridiagonal_parts();
                tridiagonal(d, up, lo).gram()
            }
        }
    }
}

/// Row i holds `x` cyclically shifted right by i places.
pub fn circulant(x: &[f64]) -> RealMatrix {
    let n = x.len();
    let mut m = RealMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = x[(j + n - i) % n];
        }
    }
    m
}

fn tridiagonal(d: &[f64], up: &[f64], lo: &[f64]) -> RealMatrix {
    let n = d.len();
    let mut m = RealMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = d[i];
        if i + 1 < n {
            m[(i, i + 1)] = up[i];
            m[(i + 1, i)] = lo[i];
        }
    }
    m
}

/// Draws the elements of replica `index` from its own substream.
pub fn draw(spec: &EnsembleSpec, index: usize) -> Result<Draws, MatrixError> {
    let pdf = spec.validate()?;
    if index >= spec.count {
        return Err(MatrixError::IndexOutOfRange {
            index,
            count: spec.count,
        });
    }
    let mut rng = seed_stream(spec.seed, index as u64);
    Ok(draw_with(spec.family, spec.n, &pdf, &mut rng))
}

pub fn draw_with(family: MatrixFamily, n: usize, pdf: &Pdf, rng: &mut RandomStream) -> Draws {
    let count = family.draw_count(n);
    let mut elements: Vec<f64> = (0..count).map(|_| pdf.sample(rng)).collect();
    if family == MatrixFamily::Tprime {
        // z_k takes the sign of y_k; a zero y_k is redrawn
        let (_, rest) = elements.split_at_mut(n);
        let (y, z) = rest.split_at_mut(n - 1);
        for (yk, zk) in y.iter_mut().zip(z.iter_mut()) {
            while *yk == 0.0 {
                *yk = pdf.sample(rng);
            }
            while *zk == 0.0 {
                *zk = pdf.sample(rng);
            }
            *zk = zk.abs().copysign(*yk);
        }
    }
    Draws {
        family,
        n,
        elements,
    }
}

pub fn build(spec: &EnsembleSpec, index: usize) -> Result<RealMatrix, MatrixError> {
    Ok(draw(spec, index)?.to_matrix())
}

/// Exact (bitwise) symmetry.
pub fn symmetrize_check(m: &RealMatrix) -> bool {
    let n = m.order();
    (0..n).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

/// Checks `eta C eta^{-1} = C^t` with `eta` the permutation reversing the
/// cyclic order (`eta_{ij} = 1` iff `i + j = 0 mod n`, zero-based).
pub fn pseudo_symmetry_check(c: &RealMatrix) -> bool {
    let n = c.order();
    let perm = |i: usize| (n - i) % n;
    (0..n).all(|i| (0..n).all(|j| c[(perm(i), perm(j))] == c[(j, i)]))
}

/// True iff the matrix is tridiagonal and every off-diagonal pair has a
/// strictly positive product.
pub fn tprime_reality_precheck(t: &RealMatrix) -> bool {
    let n = t.order();
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && t[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    (0..n.saturating_sub(1)).all(|k| t[(k, k + 1)] * t[(k + 1, k)] > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::PdfFamily;

    fn spec(family: MatrixFamily, n: usize) -> EnsembleSpec {
        EnsembleSpec {
            family,
            n,
            count: 10,
            pdf: PdfSpec::new(PdfFamily::Gaussian),
            seed: 99,
        }
    }

    fn draws(family: MatrixFamily, x: &[f64]) -> Draws {
        Draws {
            family,
            n: x.len(),
            elements: x.to_vec(),
        }
    }

    #[test]
    fn circulant_layout() {
        let m = draws(MatrixFamily::C, &[1.0, 2.0, 3.0]).to_matrix();
        assert_eq!(
            m.rows(),
            vec![
                vec![1.0, 2.0, 3.0],
                vec![3.0, 1.0, 2.0],
                vec![2.0, 3.0, 1.0]
            ]
        );
    }

    #[test]
    fn symmetric_cyclic_layout() {
        let m = draws(MatrixFamily::Csym, &[1.0, 2.0, 3.0]).to_matrix();
        assert_eq!(
            m.rows(),
            vec![
                vec![1.0, 2.0, 3.0],
                vec![2.0, 3.0, 1.0],
                vec![3.0, 1.0, 2.0]
            ]
        );
    }

    #[test]
    fn order_one_circulant() {
        let m = draws(MatrixFamily::C, &[4.5]).to_matrix();
        assert_eq!(m.rows(), vec![vec![4.5]]);
    }

    #[test]
    fn draw_counts() {
        assert_eq!(MatrixFamily::R.draw_count(5), 25);
        assert_eq!(MatrixFamily::RsymDirect.draw_count(5), 15);
        assert_eq!(MatrixFamily::C.draw_count(5), 5);
        assert_eq!(MatrixFamily::Toeplitz.draw_count(5), 5);
        assert_eq!(MatrixFamily::T.draw_count(5), 13);
        assert_eq!(MatrixFamily::Tprime.draw_count(5), 13);
        assert_eq!(MatrixFamily::Tsym.draw_count(5), 9);
        for f in MatrixFamily::ALL {
            let n = if matches!(f, MatrixFamily::R1 | MatrixFamily::R2) { 2 } else { 6 };
            assert_eq!(draw(&spec(f, n), 0).unwrap().elements.len(), f.draw_count(n));
        }
    }

    #[test]
    fn two_by_two_requires_order_two() {
        let err = build(&spec(MatrixFamily::R1, 3), 0).unwrap_err();
        assert!(matches!(err, MatrixError::OrderMismatch { required: 2, got: 3, .. }));
        assert!(build(&spec(MatrixFamily::R2, 2), 0).is_ok());
    }

    #[test]
    fn index_out_of_range() {
        assert!(matches!(
            build(&spec(MatrixFamily::R, 3), 10),
            Err(MatrixError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn r2_layout() {
        let m = draws(MatrixFamily::R2, &[1.0, 2.0, 3.0]);
        let m = Draws { n: 2, ..m }.to_matrix();
        assert_eq!(m.rows(), vec![vec![3.0, 3.0], vec![3.0, -1.0]]);
    }

    #[test]
    fn symmetry_of_built_families() {
        for f in MatrixFamily::ALL {
            let n = if matches!(f, MatrixFamily::R1 | MatrixFamily::R2) { 2 } else { 7 };
            let m = build(&spec(f, n), 3).unwrap();
            assert_eq!(symmetrize_check(&m), f.is_symmetric(), "family {f}");
        }
    }

    #[test]
    fn tprime_breaks_symmetry_but_passes_precheck() {
        for i in 0..10 {
            let m = build(&spec(MatrixFamily::Tprime, 8), i).unwrap();
            assert!(!symmetrize_check(&m));
            assert!(tprime_reality_precheck(&m));
        }
    }

    #[test]
    fn tsym_with_zero_coupling_fails_precheck() {
        let mut d = draw(&spec(MatrixFamily::Tsym, 5), 0).unwrap();
        d.elements[6] = 0.0;
        assert!(!tprime_reality_precheck(&d.to_matrix()));
    }

    #[test]
    fn generic_t_usually_fails_precheck() {
        let n = 8;
        let trials = 400;
        let passes = (0..trials)
            .filter(|&i| {
                let s = EnsembleSpec {
                    count: trials,
                    ..spec(MatrixFamily::T, n)
                };
                tprime_reality_precheck(&build(&s, i).unwrap())
            })
            .count();
        // expected pass rate 2^{-(n-1)} = 1/128
        assert!(passes <= 12, "{passes} of {trials}");
    }

    #[test]
    fn pseudo_symmetry_of_circulants() {
        let m = draws(MatrixFamily::C, &[1.0, 2.0, 3.0]).to_matrix();
        assert!(pseudo_symmetry_check(&m));
        let m2 = draws(MatrixFamily::C, &[1.5, -0.5]).to_matrix();
        assert!(pseudo_symmetry_check(&m2));
        for i in 0..5 {
            assert!(pseudo_symmetry_check(&build(&spec(MatrixFamily::C, 9), i).unwrap()));
        }
        assert!(!pseudo_symmetry_check(&build(&spec(MatrixFamily::R, 4), 0).unwrap()));
    }

    #[test]
    fn rebuild_is_bitwise_identical() {
        for f in MatrixFamily::ALL {
            let n = if matches!(f, MatrixFamily::R1 | MatrixFamily::R2) { 2 } else { 6 };
            let a = build(&spec(f, n), 4).unwrap();
            let b = build(&spec(f, n), 4).unwrap();
            assert_eq!(a.as_slice(), b.as_slice());
        }
    }

    #[test]
    fn cyclic_index_law_and_toeplitz_law() {
        let n = 9;
        let c = build(&spec(MatrixFamily::C, n), 1).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(c[(i, j)], c[((i + 1) % n, (j + 1) % n)]);
            }
        }
        let t = build(&spec(MatrixFamily::Toeplitz, n), 1).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(t[(i, j)], t[(0, i.abs_diff(j))]);
            }
        }
    }

    #[test]
    fn family_tokens() {
        for f in MatrixFamily::ALL {
            assert_eq!(f.token().parse::<MatrixFamily>().unwrap(), f);
        }
        assert!("x".parse::<MatrixFamily>().is_err());
    }
}
