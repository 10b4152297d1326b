//! Small dense linear algebra for the closed-loop construction.
//!
//! Everything here works on matrices of at most a few dozen entries, so the
//! algorithms are the textbook ones: Routh arrays, Gaussian elimination with
//! partial pivoting, cyclic Jacobi and Taylor scaling-and-squaring.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("linear system is singular or too ill-conditioned (condition estimate {0:e})")]
    Singular(f64),
    #[error("{0} polynomial is not Hurwitz")]
    NotHurwitz(&'static str),
    #[error("Jacobi iteration did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(LinalgError::Dimension(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Matrix::from_row_major(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, k: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * k).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scale(-1.0))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Matrix {
        self.add(&self.transpose()).scale(0.5)
    }

    /// Quadratic form `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        v.iter().zip(self.mul_vec(v)).map(|(a, b)| a * b).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Routh–Hurwitz test for `c[0] sⁿ + c[1] sⁿ⁻¹ + … + c[n]`.
///
/// Returns true iff every root lies in the open left half-plane. A zero
/// pivot in the first column is reported as not Hurwitz.
pub fn routh_hurwitz(coeffs: &[f64]) -> bool {
    if coeffs.len() < 2 || coeffs.iter().any(|c| !c.is_finite()) || coeffs[0] <= 0.0 {
        return false;
    }
    let degree = coeffs.len() - 1;
    let width = degree / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|k| coeffs.get(2 * k).copied().unwrap_or(0.0)).collect();
    let mut cur: Vec<f64> = (0..width).map(|k| coeffs.get(2 * k + 1).copied().unwrap_or(0.0)).collect();
    for _ in 0..degree {
        let pivot = cur[0];
        if pivot <= 0.0 {
            return false;
        }
        let next: Vec<f64> = (0..width)
            .map(|k| {
                let a = prev.get(k + 1).copied().unwrap_or(0.0);
                let b = cur.get(k + 1).copied().unwrap_or(0.0);
                (pivot * a - prev[0] * b) / pivot
            })
            .collect();
        prev = cur;
        cur = next;
    }
    true
}

/// Coefficients of the observer polynomial `h₁(s) = sⁿ + a₁sⁿ⁻¹ + … + aₙ`
/// and the controller polynomial `h₂(s) = sⁿ + bₙsⁿ⁻¹ + … + b₁`.
///
/// Note the reversed indexing of `b`: `b[0]` is the constant term of `h₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct HurwitzCoeffs {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl HurwitzCoeffs {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(LinalgError::Dimension(format!(
                "observer and controller coefficients must have equal nonzero length (got {} and {})",
                a.len(),
                b.len()
            )));
        }
        let coeffs = HurwitzCoeffs { a, b };
        if !routh_hurwitz(&coeffs.observer_polynomial()) {
            return Err(LinalgError::NotHurwitz("observer (h1)"));
        }
        if !routh_hurwitz(&coeffs.controller_polynomial()) {
            return Err(LinalgError::NotHurwitz("controller (h2)"));
        }
        Ok(coeffs)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn max_b(&self) -> f64 {
        self.b.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `[1, a₁, …, aₙ]`, highest power first.
    pub fn observer_polynomial(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.a.iter().copied()).collect()
    }

    /// `[1, bₙ, …, b₁]`, highest power first.
    pub fn controller_polynomial(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.b.iter().rev().copied()).collect()
    }
}

/// The matrices `B = Δ − ρbᵀ`, `A = Δ − aρ̄ᵀ` and the block matrix
/// `Ξ = [B, aρ̄ᵀ; 0, A]` of the scaled closed loop.
#[derive(Debug, Clone)]
pub struct ClosedLoopMatrices {
    pub b_mat: Matrix,
    pub a_mat: Matrix,
    pub xi: Matrix,
}

pub fn build_closed_loop_matrices(coeffs: &HurwitzCoeffs) -> Result<ClosedLoopMatrices> {
    // HurwitzCoeffs can only be built from Hurwitz pairs, but re-check so the
    // error names the polynomial even if the invariant is ever loosened.
    if !routh_hurwitz(&coeffs.observer_polynomial()) {
        return Err(LinalgError::NotHurwitz("observer (h1)"));
    }
    if !routh_hurwitz(&coeffs.controller_polynomial()) {
        return Err(LinalgError::NotHurwitz("controller (h2)"));
    }
    let n = coeffs.n();
    let mut shift = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        shift[(i, i + 1)] = 1.0;
    }
    let mut b_mat = shift.clone();
    let mut a_mat = shift;
    for j in 0..n {
        b_mat[(n - 1, j)] -= coeffs.b[j];
        a_mat[(j, 0)] -= coeffs.a[j];
    }
    let mut xi = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            xi[(i, j)] = b_mat[(i, j)];
            xi[(n + i, n + j)] = a_mat[(i, j)];
        }
        xi[(i, n)] = coeffs.a[i];
    }
    Ok(ClosedLoopMatrices { b_mat, a_mat, xi })
}

/// Which Lyapunov equation a certificate solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovForm {
    /// `ΞᵀP + PΞ = −I`, the form that certifies `V = ξᵀPξ` along `ξ̇ = Ξξ`.
    Standard,
    /// `ΞP + PΞᵀ = −I`.
    Transposed,
}

#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub p: Matrix,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Max-abs entry of the equation residual.
    pub residual_norm: f64,
    pub form: LyapunovForm,
}

/// Solves `ΞᵀP + PΞ = −I` for symmetric positive-definite `P`.
pub fn solve_lyapunov(xi: &Matrix) -> Result<LyapunovCertificate> {
    solve_lyapunov_form(xi, LyapunovForm::Standard)
}

/// Solves `ΞP + PΞᵀ = −I`.
pub fn solve_lyapunov_transposed(xi: &Matrix) -> Result<LyapunovCertificate> {
    solve_lyapunov_form(xi, LyapunovForm::Transposed)
}

pub fn solve_lyapunov_form(xi: &Matrix, form: LyapunovForm) -> Result<LyapunovCertificate> {
    if !xi.is_square() {
        return Err(LinalgError::Dimension("Lyapunov equation needs a square matrix".into()));
    }
    // Both forms reduce to MᵀP + PM = −I with M = Ξ or Ξᵀ.
    let m = match form {
        LyapunovForm::Standard => xi.clone(),
        LyapunovForm::Transposed => xi.transpose(),
    };
    let n = m.rows();
    let size = n * n;
    // Row (i, j) of the vectorized system:
    //   Σ_k M[k,i] P[k,j] + Σ_k P[i,k] M[k,j] = −δᵢⱼ
    let mut system = Matrix::zeros(size, size);
    let mut rhs = vec![0.0; size];
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                system[(row, k * n + j)] += m[(k, i)];
                system[(row, i * n + k)] += m[(k, j)];
            }
            if i == j {
                rhs[row] = -1.0;
            }
        }
    }
    let solution = solve_linear(&system, &rhs)?;
    let p = Matrix::from_row_major(n, n, solution)?.symmetrized();
    let residual = m.transpose().mul(&p).add(&(&p * &m)).add(&Matrix::identity(n));
    let (lambda_min, lambda_max) = sym_eig_extremes(&p)?;
    if lambda_min <= 0.0 {
        return Err(LinalgError::Singular(f64::INFINITY));
    }
    Ok(LyapunovCertificate { p, lambda_min, lambda_max, residual_norm: residual.max_abs(), form })
}

/// Solves `Ax = b` by Gaussian elimination with partial pivoting.
///
/// Fails when the pivot ratio exceeds 1e12.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(LinalgError::Dimension("solve_linear needs square A and matching b".into()));
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, lu[(r, col)].abs()))
            .fold((col, -1.0), |best, cand| if cand.1 > best.1 { cand } else { best });
        if pivot_abs == 0.0 {
            return Err(LinalgError::Singular(f64::INFINITY));
        }
        max_pivot = max_pivot.max(pivot_abs);
        min_pivot = min_pivot.min(pivot_abs);
        if pivot_row != col {
            for j in 0..n {
                lu.data.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let pivot = lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                lu[(r, j)] -= factor * lu[(col, j)];
            }
            x[r] -= factor * x[col];
        }
    }
    let cond = max_pivot / min_pivot;
    if cond > 1e12 {
        return Err(LinalgError::Singular(cond));
    }
    for col in (0..n).rev() {
        let tail: f64 = (col + 1..n).map(|j| lu[(col, j)] * x[j]).sum();
        x[col] = (x[col] - tail) / lu[(col, col)];
    }
    Ok(x)
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi.
pub fn sym_eig(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(LinalgError::Dimension("eigenvalues need a square matrix".into()));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let asym = m.asymmetry();
    if asym > 1e-12 * m.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    while off(&a) >= 1e-12 * scale {
        sweeps += 1;
        if sweeps > 100 {
            return Err(LinalgError::NoConvergence);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

pub fn sym_eig_extremes(m: &Matrix) -> Result<(f64, f64)> {
    let eig = sym_eig(m)?;
    match (eig.first(), eig.last()) {
        (Some(lo), Some(hi)) => Ok((*lo, *hi)),
        _ => Err(LinalgError::Dimension("empty matrix".into())),
    }
}

/// `e^{Mt}` by scaling and squaring with a truncated Taylor series.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(LinalgError::Dimension("expm needs a square matrix".into()));
    }
    let n = m.rows();
    let scaled = m.scale(t);
    let norm = scaled.norm_inf();
    if !norm.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut squarings = 0u32;
    let mut reduced = norm;
    while reduced > 0.5 {
        reduced *= 0.5;
        squarings += 1;
    }
    let x = scaled.scale(0.5f64.powi(squarings as i32));
    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=30 {
        term = (&term * &x).scale(1.0 / k as f64);
        result = result.add(&term);
        if term.max_abs() <= 1e-17 * result.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}
