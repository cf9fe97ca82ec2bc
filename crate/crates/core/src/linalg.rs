//! Dense linear algebra helpers on top of `faer`.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn frobenius(m: MatRef<'_, Complex64>) -> f64 {
    m.norm_l2()
}

/// `‖a - b‖_F / max(‖a‖_F, ‖b‖_F)`, zero when both vanish.
pub fn relative_difference(a: &CMat, b: &CMat) -> f64 {
    let scale = frobenius(a.as_ref()).max(frobenius(b.as_ref()));
    if scale == 0.0 {
        return 0.0;
    }
    frobenius((a - b).as_ref()) / scale
}

/// `‖M - M*‖_F`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let adj = m.adjoint().to_owned();
    frobenius((m - &adj).as_ref())
}

pub fn is_real(m: &CMat) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

pub fn real_part(m: &CMat) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub fn to_complex(m: &Mat<f64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

pub fn scaled(m: &CMat, c: Complex64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Zeroes every row and column whose mask entry is false.
pub fn compress(m: &CMat, keep: &[bool]) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| if keep[i] && keep[j] { m[(i, j)] } else { ZERO })
}

/// Eigenpairs of a self-adjoint matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    /// `V f(Λ) V*`.
    pub fn apply_function(&self, f: impl Fn(f64) -> Complex64) -> CMat {
        let n = self.values.len();
        let fv: Vec<Complex64> = self.values.iter().map(|&l| f(l)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * fv[j]);
        &scaled * self.vectors.adjoint()
    }
}

/// Real symmetric eigenpairs.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn symmetric_eigen(m: &Mat<f64>) -> Result<SymmetricEigen> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let n = m.nrows();
    let values = (0..n).map(|i| evd.S()[i]).collect();
    Ok(SymmetricEigen { values, vectors: evd.U().to_owned() })
}

/// Uses the real solver when the matrix has no imaginary part.
pub fn hermitian_eigen(m: &CMat) -> Result<HermitianEigen> {
    if is_real(m) {
        let e = symmetric_eigen(&real_part(m))?;
        return Ok(HermitianEigen { values: e.values, vectors: to_complex(&e.vectors) });
    }
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let n = m.nrows();
    let values = (0..n).map(|i| evd.S()[i].re).collect();
    Ok(HermitianEigen { values, vectors: evd.U().to_owned() })
}

pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    if is_real(m) {
        return real_symmetric_eigenvalues(&real_part(m));
    }
    let v = m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))?;
    Ok(v)
}

pub fn real_symmetric_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Linalg(format!("{e:?}")))
}

pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    m.singular_values().map_err(|e| Error::Linalg(format!("{e:?}")))
}

pub fn real_singular_values(m: &Mat<f64>) -> Result<Vec<f64>> {
    m.singular_values().map_err(|e| Error::Linalg(format!("{e:?}")))
}

pub fn spectral_norm(m: &CMat) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Solves `m x = rhs` by partial-pivot LU.
pub fn solve(m: &CMat, rhs: &CMat) -> CMat {
    m.partial_piv_lu().solve(rhs)
}

pub fn inverse(m: &CMat) -> CMat {
    m.partial_piv_lu().inverse()
}

pub fn matvec(m: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; m.nrows()];
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == ZERO {
            continue;
        }
        let col = m.col(j);
        for (o, a) in out.iter_mut().zip(col.iter()) {
            *o += a * vj;
        }
    }
    out
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

const LANCZOS_MAX_STEPS: usize = 120;
const LANCZOS_TOL: f64 = 1e-14;

/// Largest eigenvalue of a Hermitian positive semidefinite operator given by
/// its action, via Lanczos with full reorthogonalization.
pub fn top_eigenvalue_psd(dim: usize, apply: impl Fn(&[Complex64]) -> Vec<Complex64>) -> Result<f64> {
    if dim == 0 {
        return Ok(0.0);
    }
    let steps = LANCZOS_MAX_STEPS.min(dim);
    let mut q: Vec<Complex64> =
        (0..dim).map(|i| Complex64::new(1.0 + 0.5 * (1.7 * i as f64 + 0.3).sin(), 0.25 * (0.9 * i as f64).cos())).collect();
    let nq = vec_norm(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut last = f64::NAN;
    let mut settled = 0;
    for k in 0..steps {
        let mut w = apply(&q);
        let a = dot(&q, &w).re;
        basis.push(q.clone());
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bnorm = vec_norm(&w);
        let top = top_of_tridiagonal(&alpha, &beta)?;
        if (top - last).abs() <= LANCZOS_TOL * top.abs() {
            settled += 1;
            if settled >= 2 {
                return Ok(top);
            }
        } else {
            settled = 0;
        }
        last = top;
        if bnorm <= 1e-13 * top.abs().max(f64::MIN_POSITIVE) || k + 1 == steps {
            return Ok(top);
        }
        beta.push(bnorm);
        q = w.into_iter().map(|x| x / bnorm).collect();
    }
    Ok(last)
}

fn top_of_tridiagonal(alpha: &[f64], beta: &[f64]) -> Result<f64> {
    let k = alpha.len();
    let t = Mat::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let ev = real_symmetric_eigenvalues(&t)?;
    Ok(*ev.last().unwrap())
}

/// Least-squares line `y ≈ slope·x + intercept` with coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LineFit { slope, intercept, r_squared })
}
