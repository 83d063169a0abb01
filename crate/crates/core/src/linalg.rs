//! Dense complex linear algebra at arbitrary precision.
//!
//! The matrices in this crate are small (tens of rows) but severely
//! ill-conditioned, so everything is plain row-major storage over `rug`
//! numbers: Hermitian Cholesky, triangular solves, inverse, and a Jacobi
//! eigenvalue routine for Hermitian matrices.

use std::ops::{Index, IndexMut};

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::mp;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    prec: u32,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        CMatrix {
            rows,
            cols,
            prec,
            data: vec![mp::czero(prec); rows * cols],
        }
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        let mut m = Self::zeros(n, n, prec);
        for i in 0..n {
            m[(i, i)] = mp::cone(prec);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, prec: u32, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, prec, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn conj_transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, self.prec, |i, j| self[(j, i)].clone().conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, self.prec, |i, j| self[(j, i)].clone())
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, self.prec, |i, j| self[(i, j)].clone().conj())
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let prec = self.prec.max(other.prec);
        let mut out = CMatrix::zeros(self.rows, other.cols, prec);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if mp::is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let t = Complex::with_val(prec, a * &other[(k, j)]);
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex]) -> Vec<Complex> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = mp::czero(self.prec);
                for (a, x) in self.row(i).iter().zip(v) {
                    acc += Complex::with_val(self.prec, a * x);
                }
                acc
            })
            .collect()
    }

    /// Principal-or-general submatrix selecting the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), self.prec, |i, j| self[(rows[i], cols[j])].clone())
    }

    pub fn max_abs(&self) -> Float {
        let mut m = mp::float(self.prec, 0.0);
        for z in &self.data {
            let a = mp::abs(z);
            if a > m {
                m = a;
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> Float {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = mp::float(self.prec, 0.0);
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = mp::abs(&Complex::with_val(self.prec, a - b));
            if d > m {
                m = d;
            }
        }
        m
    }

    /// `max |M - M^H|`.
    pub fn hermitian_defect(&self) -> Float {
        self.max_abs_diff(&self.conj_transpose())
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> Float {
        let mut best = mp::float(self.prec, 0.0);
        for j in 0..self.cols {
            let mut s = mp::float(self.prec, 0.0);
            for i in 0..self.rows {
                s += mp::abs(&self[(i, j)]);
            }
            if s > best {
                best = s;
            }
        }
        best
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex;

    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

/// `A = L L^H` with `L` lower triangular and a real positive diagonal.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        assert!(a.is_square(), "cholesky needs a square matrix");
        let n = a.rows();
        let prec = a.prec();
        let mut l = CMatrix::zeros(n, n, prec);
        for j in 0..n {
            let mut d = a[(j, j)].real().clone();
            for k in 0..j {
                d -= Float::with_val(prec, l[(j, k)].norm_ref());
            }
            if d <= 0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: mp::fmt(&d, 20),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = mp::from_real(&djj);
            for i in j + 1..n {
                let mut s = a[(i, j)].clone();
                for k in 0..j {
                    let t = Complex::with_val(prec, &l[(i, k)] * &mp::conj(&l[(j, k)]));
                    s -= t;
                }
                l[(i, j)] = s / &djj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &CMatrix {
        &self.l
    }

    /// Squared diagonal of `L`: the successive Schur-complement pivots.
    pub fn pivots(&self) -> Vec<Float> {
        (0..self.dim())
            .map(|i| Float::with_val(self.l.prec(), self.l[(i, i)].real().square_ref()))
            .collect()
    }

    pub fn det(&self) -> Float {
        let mut d = mp::float(self.l.prec(), 1.0);
        for p in self.pivots() {
            d *= p;
        }
        d
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let prec = self.l.prec();
        let l = &self.l;
        let mut y: Vec<Complex> = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = Complex::with_val(prec, &b[i]);
            for (k, yk) in y.iter().enumerate() {
                s -= Complex::with_val(prec, &l[(i, k)] * yk);
            }
            s /= l[(i, i)].real();
            y.push(s);
        }
        let mut x = vec![mp::czero(prec); n];
        for i in (0..n).rev() {
            let mut s = y[i].clone();
            for k in i + 1..n {
                s -= Complex::with_val(prec, &mp::conj(&l[(k, i)]) * &x[k]);
            }
            s /= l[(i, i)].real();
            x[i] = s;
        }
        x
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.dim();
        let prec = self.l.prec();
        let mut inv = CMatrix::zeros(n, n, prec);
        for j in 0..n {
            let mut e = vec![mp::czero(prec); n];
            e[j] = mp::cone(prec);
            let col = self.solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        // the exact inverse is Hermitian; remove the rounding asymmetry
        for i in 0..n {
            let re = inv[(i, i)].real().clone();
            inv[(i, i)] = mp::from_real(&re);
            for j in i + 1..n {
                let avg = Complex::with_val(prec, &inv[(i, j)] + &mp::conj(&inv[(j, i)])) / 2u32;
                inv[(j, i)] = avg.clone().conj();
                inv[(i, j)] = avg;
            }
        }
        inv
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// Uses the real symmetric embedding `[[Re A, -Im A], [Im A, Re A]]`, whose
/// spectrum is that of `A` with every eigenvalue doubled, and cyclic Jacobi
/// rotations on it.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<Float> {
    assert!(a.is_square());
    let n = a.rows();
    let prec = a.prec();
    let m = 2 * n;
    let mut s: Vec<Vec<Float>> = vec![vec![mp::float(prec, 0.0); m]; m];
    for i in 0..n {
        for j in 0..n {
            let z = &a[(i, j)];
            s[i][j] = z.real().clone();
            s[i + n][j + n] = z.real().clone();
            s[i][j + n] = Float::with_val(prec, -z.imag());
            s[i + n][j] = z.imag().clone();
        }
    }
    // symmetrize away rounding noise in the input
    for i in 0..m {
        for j in i + 1..m {
            let avg = Float::with_val(prec, &s[i][j] + &s[j][i]) / 2u32;
            s[i][j] = avg.clone();
            s[j][i] = avg;
        }
    }
    let mut frob = mp::float(prec, 0.0);
    for row in &s {
        for x in row {
            frob += Float::with_val(prec, x.square_ref());
        }
    }
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32)));
    let threshold = Float::with_val(prec, &frob * eps.clone().square());

    for _sweep in 0..100 {
        let mut off = mp::float(prec, 0.0);
        for p in 0..m {
            for q in p + 1..m {
                off += Float::with_val(prec, s[p][q].square_ref());
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if s[p][q].is_zero() {
                    continue;
                }
                let apq = s[p][q].clone();
                let theta = Float::with_val(prec, &s[q][q] - &s[p][p]) / (Float::with_val(prec, &apq * 2u32));
                let root = (Float::with_val(prec, theta.square_ref()) + 1u32).sqrt();
                let mut t = (Float::with_val(prec, theta.abs_ref()) + &root).recip();
                if theta.is_sign_negative() {
                    t = -t;
                }
                let c = (Float::with_val(prec, t.square_ref()) + 1u32).sqrt().recip();
                let sn = Float::with_val(prec, &t * &c);
                let tapq = Float::with_val(prec, &t * &apq);
                s[p][p] -= &tapq;
                s[q][q] += &tapq;
                s[p][q] = mp::float(prec, 0.0);
                s[q][p] = mp::float(prec, 0.0);
                for r in 0..m {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = s[r][p].clone();
                    let arq = s[r][q].clone();
                    let new_rp = Float::with_val(prec, &c * &arp) - Float::with_val(prec, &sn * &arq);
                    let new_rq = Float::with_val(prec, &sn * &arp) + Float::with_val(prec, &c * &arq);
                    s[r][p] = new_rp.clone();
                    s[p][r] = new_rp;
                    s[r][q] = new_rq.clone();
                    s[q][r] = new_rq;
                }
            }
        }
    }
    let mut diag: Vec<Float> = (0..m).map(|i| s[i][i].clone()).collect();
    diag.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    diag.into_iter().step_by(2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn c(re: f64, im: f64) -> Complex {
        mp::complex(P, re, im)
    }

    fn hermitian_2x2() -> CMatrix {
        // [[4, 1+i], [1-i, 3]]: eigenvalues (7 ± sqrt(9))/2 = 2, 5
        let mut m = CMatrix::zeros(2, 2, P);
        m[(0, 0)] = c(4.0, 0.0);
        m[(0, 1)] = c(1.0, 1.0);
        m[(1, 0)] = c(1.0, -1.0);
        m[(1, 1)] = c(3.0, 0.0);
        m
    }

    #[test]
    fn cholesky_solves_and_inverts() {
        let a = hermitian_2x2();
        let ch = Cholesky::factor(&a).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 2.0)];
        let x = ch.solve(&b);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!(mp::abs(&Complex::with_val(P, u - v)) < mp::pow10(P, -70));
        }
        let inv = ch.inverse();
        let id = a.mul(&inv);
        assert!(id.max_abs_diff(&CMatrix::identity(2, P)) < mp::pow10(P, -70));
        // det = 12 - |1+i|^2 = 10
        let det = ch.det();
        assert!(Float::with_val(P, &det - 10u32).abs() < mp::pow10(P, -70));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = hermitian_2x2();
        a[(1, 1)] = c(0.1, 0.0);
        assert!(matches!(Cholesky::factor(&a), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
    }

    #[test]
    fn jacobi_eigenvalues_of_hermitian() {
        let ev = hermitian_eigenvalues(&hermitian_2x2());
        assert_eq!(ev.len(), 2);
        assert!(Float::with_val(P, &ev[0] - 2u32).abs() < mp::pow10(P, -60));
        assert!(Float::with_val(P, &ev[1] - 5u32).abs() < mp::pow10(P, -60));
    }

    #[test]
    fn jacobi_on_diagonal_matrix() {
        let mut m = CMatrix::zeros(3, 3, P);
        m[(0, 0)] = c(3.0, 0.0);
        m[(1, 1)] = c(-1.0, 0.0);
        m[(2, 2)] = c(0.5, 0.0);
        let ev = hermitian_eigenvalues(&m);
        let expect = [-1.0, 0.5, 3.0];
        for (e, x) in ev.iter().zip(expect) {
            assert_eq!(e.to_f64(), x);
        }
    }
}
