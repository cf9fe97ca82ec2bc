//! Concrete operators on a grid: shifts, differences, `Q_j`, `H₀`, potentials,
//! the conjugate operator `A`, weights, and numeric commutators.
//!
//! Axes are 0-based here (`axis = j - 1`). Shift convention:
//! `(T_j u)(x) = u(x + βe_j)`, i.e. index `i` pulls from `i + m`.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{apply_multiplier, symbol_from_fn, Field, GridSpec};
use crate::linalg::{self, CMat, HermitianEigen, I, ONE, ZERO};

/// Largest matrix dimension materialized densely by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Imaginary part tolerated in a potential before it is rejected.
pub const POTENTIAL_IMAG_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpFlags {
    pub self_adjoint: bool,
    pub fourier_diagonal: bool,
    pub real_coefficients: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    #[serde(rename = "pos")]
    Position,
    #[serde(rename = "conj")]
    Conjugate,
}

impl WeightKind {
    pub fn tag(self) -> &'static str {
        match self {
            WeightKind::Position => "pos",
            WeightKind::Conjugate => "conj",
        }
    }
}

#[derive(Debug)]
enum Repr {
    Identity,
    Diagonal(Vec<Complex64>),
    Multiplier(Vec<Complex64>),
    Shift { axis: usize, steps: isize },
    Dense(CMat),
    /// `Σ c · F₁F₂…F_k`, leftmost factor first.
    Combination(Vec<(Complex64, Vec<OperatorHandle>)>),
}

/// An immutable linear operator on fields of one grid.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    grid: GridSpec,
    repr: Arc<Repr>,
    symbol: Option<Arc<Vec<Complex64>>>,
    flags: OpFlags,
    label: String,
}

impl OperatorHandle {
    fn new(grid: &GridSpec, repr: Repr, symbol: Option<Vec<Complex64>>, flags: OpFlags, label: impl Into<String>) -> Self {
        Self { grid: *grid, repr: Arc::new(repr), symbol: symbol.map(Arc::new), flags, label: label.into() }
    }

    pub fn identity(grid: &GridSpec) -> Self {
        let flags = OpFlags { self_adjoint: true, fourier_diagonal: true, real_coefficients: true };
        Self::new(grid, Repr::Identity, Some(vec![ONE; grid.len()]), flags, "I")
    }

    /// Multiplication by a sampled function.
    pub fn diagonal(field: &Field, label: impl Into<String>) -> Self {
        let real = field.max_abs_imag() == 0.0;
        let flags = OpFlags { self_adjoint: real, fourier_diagonal: false, real_coefficients: real };
        Self::new(field.grid(), Repr::Diagonal(field.values().to_vec()), None, flags, label)
    }

    /// Fourier multiplier with the given symbol (FFT order).
    pub fn multiplier(grid: &GridSpec, symbol: Vec<Complex64>, label: impl Into<String>) -> Self {
        let real_symbol = symbol.iter().all(|s| s.im == 0.0);
        let even = (0..grid.len()).all(|i| symbol[i] == symbol[negated_index(grid, i)]);
        let flags = OpFlags { self_adjoint: real_symbol, fourier_diagonal: true, real_coefficients: real_symbol && even };
        Self::new(grid, Repr::Multiplier(symbol.clone()), Some(symbol), flags, label)
    }

    pub fn from_dense(grid: &GridSpec, m: CMat, flags: OpFlags, label: impl Into<String>) -> Result<Self> {
        if m.nrows() != grid.len() || m.ncols() != grid.len() {
            return Err(Error::DimensionMismatch);
        }
        Ok(Self::new(grid, Repr::Dense(m), None, OpFlags { fourier_diagonal: false, ..flags }, label))
    }

    /// `Σ c_t · (product of factors_t)`; all factors must share one grid.
    pub fn combination(terms: Vec<(Complex64, Vec<OperatorHandle>)>, flags: OpFlags, label: impl Into<String>) -> Result<Self> {
        let grid = terms
            .iter()
            .flat_map(|(_, f)| f.iter())
            .map(|f| f.grid)
            .next()
            .ok_or_else(|| Error::Algebra("empty operator combination".into()))?;
        if terms.iter().flat_map(|(_, f)| f.iter()).any(|f| f.grid != grid) {
            return Err(Error::DimensionMismatch);
        }
        // Products of Fourier-diagonal factors stay Fourier-diagonal.
        let symbol = if terms.iter().all(|(_, f)| f.iter().all(|o| o.symbol.is_some())) {
            let mut s = vec![ZERO; grid.len()];
            for (c, factors) in &terms {
                for (i, si) in s.iter_mut().enumerate() {
                    *si += factors.iter().fold(*c, |acc, f| acc * f.symbol.as_ref().unwrap()[i]);
                }
            }
            Some(s)
        } else {
            None
        };
        let flags = OpFlags { fourier_diagonal: symbol.is_some(), ..flags };
        Ok(Self::new(&grid, Repr::Combination(terms), symbol, flags, label))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn flags(&self) -> OpFlags {
        self.flags
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The Fourier symbol, present when the operator is Fourier-diagonal.
    pub fn symbol(&self) -> Option<&[Complex64]> {
        self.symbol.as_deref().map(|v| v.as_slice())
    }

    /// Diagonal entries when the operator is a multiplication.
    pub fn diagonal_values(&self) -> Option<&[Complex64]> {
        match &*self.repr {
            Repr::Diagonal(v) => Some(v),
            _ => None,
        }
    }

    pub fn dense_ref(&self) -> Option<&CMat> {
        match &*self.repr {
            Repr::Dense(m) => Some(m),
            _ => None,
        }
    }

    pub fn apply(&self, u: &Field) -> Field {
        match &*self.repr {
            Repr::Identity => u.clone(),
            Repr::Diagonal(d) => {
                let mut out = u.clone();
                out.values_mut().iter_mut().zip(d).for_each(|(v, s)| *v *= s);
                out
            }
            Repr::Multiplier(s) => apply_multiplier(s, u),
            Repr::Shift { axis, steps } => u.shifted(*axis, *steps),
            Repr::Dense(m) => {
                let values = linalg::matvec(m, u.values());
                Field::from_values(&self.grid, values).expect("dense operator matches its grid")
            }
            Repr::Combination(terms) => {
                let mut acc = Field::zeros(&self.grid);
                for (c, factors) in terms {
                    let v = factors.iter().rev().fold(u.clone(), |v, f| f.apply(&v));
                    acc = acc.zip_with(&v, |a, b| a + c * b);
                }
                acc
            }
        }
    }

    /// `self · m` for a matrix with `grid.len()` rows.
    pub fn apply_to_matrix(&self, m: &CMat) -> CMat {
        let g = &self.grid;
        match &*self.repr {
            Repr::Identity => m.clone(),
            Repr::Diagonal(d) => Mat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)]),
            Repr::Shift { axis, steps } => {
                Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(g.offset(i, *axis, *steps), j)])
            }
            Repr::Dense(a) => a * m,
            Repr::Multiplier(_) => {
                let mut out = Mat::zeros(m.nrows(), m.ncols());
                for j in 0..m.ncols() {
                    let col: Vec<Complex64> = m.col(j).iter().copied().collect();
                    let v = self.apply(&Field::from_values(g, col).expect("column length"));
                    for (i, x) in v.values().iter().enumerate() {
                        out[(i, j)] = *x;
                    }
                }
                out
            }
            Repr::Combination(terms) => {
                let mut acc: CMat = Mat::zeros(m.nrows(), m.ncols());
                for (c, factors) in terms {
                    let v = factors.iter().rev().fold(m.clone(), |v, f| f.apply_to_matrix(&v));
                    acc += linalg::scaled(&v, *c);
                }
                acc
            }
        }
    }

    pub fn to_dense(&self) -> Result<CMat> {
        self.to_dense_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_with_cap(&self, cap: usize) -> Result<CMat> {
        let rows = self.grid.len();
        if rows > cap {
            return Err(Error::TooLargeForDense { rows, cap });
        }
        if let Repr::Dense(m) = &*self.repr {
            return Ok(m.clone());
        }
        Ok(self.apply_to_matrix(&Mat::identity(rows, rows)))
    }

    /// Copy backed by its dense matrix, computed once.
    pub fn materialized(&self, cap: usize) -> Result<Self> {
        if matches!(&*self.repr, Repr::Dense(_)) {
            return Ok(self.clone());
        }
        let m = self.to_dense_with_cap(cap)?;
        Ok(Self { repr: Arc::new(Repr::Dense(m)), ..self.clone() })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let real = self.flags.real_coefficients && c.im == 0.0;
        let sa = self.flags.self_adjoint && c.im == 0.0;
        let flags = OpFlags { self_adjoint: sa, fourier_diagonal: false, real_coefficients: real };
        Self::combination(vec![(c, vec![self.clone()])], flags, format!("({c})·{}", self.label)).expect("non-empty")
    }
}

fn negated_index(grid: &GridSpec, flat: usize) -> usize {
    let n = grid.n();
    (0..grid.dim()).fold(0, |acc, axis| {
        let i = grid.axis_index(flat, axis);
        acc * n + (n - i) % n
    })
}

fn check_axis(grid: &GridSpec, axis: usize) {
    assert!(axis < grid.dim(), "axis {axis} out of range for d = {}", grid.dim());
}

/// `T_j^β` (`Sign::Plus`) or its adjoint `T_j^{β*}` (`Sign::Minus`).
pub fn shift_op(grid: &GridSpec, axis: usize, sign: Sign) -> OperatorHandle {
    check_axis(grid, axis);
    let beta = grid.beta();
    let s = sign.as_f64();
    let symbol: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::from_polar(1.0, s * beta * grid.xi(i)[axis])).collect();
    let steps = s as isize * grid.steps() as isize;
    let flags = OpFlags { self_adjoint: false, fourier_diagonal: true, real_coefficients: true };
    let label = match sign {
        Sign::Plus => format!("T{}", axis + 1),
        Sign::Minus => format!("T{}adj", axis + 1),
    };
    OperatorHandle::new(grid, Repr::Shift { axis, steps }, Some(symbol), flags, label)
}

/// `Δ_j^β = (T_j^β - 1)/β`.
pub fn difference_op(grid: &GridSpec, axis: usize) -> OperatorHandle {
    let inv = Complex64::new(1.0 / grid.beta(), 0.0);
    let flags = OpFlags { self_adjoint: false, fourier_diagonal: true, real_coefficients: true };
    OperatorHandle::combination(
        vec![(inv, vec![shift_op(grid, axis, Sign::Plus)]), (-inv, vec![OperatorHandle::identity(grid)])],
        flags,
        format!("D{}", axis + 1),
    )
    .expect("non-empty")
}

/// `Q_j = (T_j^β - T_j^{β*})/(2iβ)`, symbol `sin(βξ_j)/β`.
pub fn q_op(grid: &GridSpec, axis: usize) -> OperatorHandle {
    let c = Complex64::new(0.0, -0.5 / grid.beta());
    let flags = OpFlags { self_adjoint: true, fourier_diagonal: true, real_coefficients: false };
    OperatorHandle::combination(
        vec![(c, vec![shift_op(grid, axis, Sign::Plus)]), (-c, vec![shift_op(grid, axis, Sign::Minus)])],
        flags,
        format!("Q{}", axis + 1),
    )
    .expect("non-empty")
}

/// `H₀ = -½Δ` as the multiplier `|ξ|²/2`.
pub fn h0_op(grid: &GridSpec) -> OperatorHandle {
    let symbol = symbol_from_fn(grid, |xi| 0.5 * xi.iter().map(|x| x * x).sum::<f64>());
    OperatorHandle::multiplier(grid, symbol, "H0")
}

/// Multiplication by the sawtooth coordinate `x_j`.
pub fn coordinate_op(grid: &GridSpec, axis: usize) -> OperatorHandle {
    check_axis(grid, axis);
    OperatorHandle::diagonal(&Field::coordinate(grid, axis), format!("x{}", axis + 1))
}

/// `A = ½ Σ_j (Q_j x_j + x_j Q_j)`.
pub fn a_op(grid: &GridSpec) -> OperatorHandle {
    let half = Complex64::new(0.5, 0.0);
    let mut terms = Vec::new();
    for axis in 0..grid.dim() {
        let (q, x) = (q_op(grid, axis), coordinate_op(grid, axis));
        terms.push((half, vec![q.clone(), x.clone()]));
        terms.push((half, vec![x, q]));
    }
    let flags = OpFlags { self_adjoint: true, fourier_diagonal: false, real_coefficients: false };
    OperatorHandle::combination(terms, flags, "A").expect("d >= 1")
}

/// `A = (1/2iβ) Σ (x_j T_j - x_j T_j*) + (1/4i) Σ (T_j + T_j*)`.
///
/// Equals [`a_op`] wherever `T_j x_j T_j* = x_j + β`, i.e. away from the
/// wrap-around layer of the sawtooth coordinate.
pub fn a_op_decomposed(grid: &GridSpec) -> OperatorHandle {
    let c1 = Complex64::new(0.0, -0.5 / grid.beta());
    let c2 = Complex64::new(0.0, -0.25);
    let mut terms = Vec::new();
    for axis in 0..grid.dim() {
        let x = coordinate_op(grid, axis);
        let (t, ts) = (shift_op(grid, axis, Sign::Plus), shift_op(grid, axis, Sign::Minus));
        terms.push((c1, vec![x.clone(), t.clone()]));
        terms.push((-c1, vec![x, ts.clone()]));
        terms.push((c2, vec![t]));
        terms.push((c2, vec![ts]));
    }
    let flags = OpFlags { self_adjoint: false, fourier_diagonal: false, real_coefficients: false };
    OperatorHandle::combination(terms, flags, "A(decomposed)").expect("d >= 1")
}

/// Multiplication by a real potential.
pub fn potential_op(v: &Field) -> Result<OperatorHandle> {
    let imag = v.max_abs_imag();
    if imag > POTENTIAL_IMAG_TOL {
        return Err(Error::ComplexPotential(imag));
    }
    let real = v.map(|z| Complex64::new(z.re, 0.0));
    Ok(OperatorHandle::diagonal(&real, "V"))
}

/// `H = H₀ + V`.
pub fn hamiltonian(grid: &GridSpec, v: &Field) -> Result<OperatorHandle> {
    if v.grid() != grid {
        return Err(Error::DimensionMismatch);
    }
    let vop = potential_op(v)?;
    let flags = OpFlags { self_adjoint: true, fourier_diagonal: false, real_coefficients: true };
    OperatorHandle::combination(vec![(ONE, vec![h0_op(grid)]), (ONE, vec![vop])], flags, "H")
}

/// `AB - BA` as a dense operator.
pub fn commutator(a: &OperatorHandle, b: &OperatorHandle) -> Result<OperatorHandle> {
    commutator_with_cap(a, b, DEFAULT_DENSE_CAP)
}

pub fn commutator_with_cap(a: &OperatorHandle, b: &OperatorHandle, cap: usize) -> Result<OperatorHandle> {
    if a.grid != b.grid {
        return Err(Error::DimensionMismatch);
    }
    let da = a.to_dense_with_cap(cap)?;
    let db = b.to_dense_with_cap(cap)?;
    let m = a.apply_to_matrix(&db) - b.apply_to_matrix(&da);
    let flags = OpFlags {
        self_adjoint: false,
        fourier_diagonal: false,
        real_coefficients: a.flags.real_coefficients && b.flags.real_coefficients,
    };
    OperatorHandle::from_dense(&a.grid, m, flags, format!("[{},{}]", a.label, b.label))
}

/// Analytic multiplier of `[H₀, iA]`: `Σ_j sin(βξ_j) ξ_j / β`.
pub fn free_commutator_op(grid: &GridSpec) -> OperatorHandle {
    let beta = grid.beta();
    let symbol = symbol_from_fn(grid, |xi| crate::mourre::commutator_symbol(xi, beta));
    OperatorHandle::multiplier(grid, symbol, "[H0,iA]")
}

/// Analytic multiplier of `[[H₀, iA], iA]`.
pub fn free_double_commutator_op(grid: &GridSpec) -> OperatorHandle {
    let beta = grid.beta();
    let symbol = symbol_from_fn(grid, |xi| crate::mourre::double_commutator_symbol(xi, beta));
    OperatorHandle::multiplier(grid, symbol, "[[H0,iA],iA]")
}

/// Eigendecomposition of the conjugate operator, shared by weights and the unitary group.
#[derive(Clone, Debug)]
pub struct ConjugateSpectrum {
    grid: GridSpec,
    eigen: HermitianEigen,
}

impl ConjugateSpectrum {
    pub fn new(a: &OperatorHandle, cap: usize) -> Result<Self> {
        let m = a.to_dense_with_cap(cap)?;
        Ok(Self { grid: a.grid, eigen: linalg::hermitian_eigen(&m)? })
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// `⟨A⟩^{-γ} = (1 + A²)^{-γ/2}`.
    pub fn weight(&self, gamma: f64) -> CMat {
        self.eigen.apply_function(|a| Complex64::new((1.0 + a * a).powf(-0.5 * gamma), 0.0))
    }

    /// `e^{itA}`.
    pub fn group(&self, t: f64) -> CMat {
        self.eigen.apply_function(|a| Complex64::from_polar(1.0, t * a))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

/// `⟨x⟩^{-γ}` (diagonal) or `⟨A⟩^{-γ}` (functional calculus on `A`).
pub fn weight_op(grid: &GridSpec, kind: WeightKind, gamma: f64) -> Result<OperatorHandle> {
    weight_op_with_cap(grid, kind, gamma, DEFAULT_DENSE_CAP)
}

pub fn weight_op_with_cap(grid: &GridSpec, kind: WeightKind, gamma: f64, cap: usize) -> Result<OperatorHandle> {
    if gamma < 0.0 {
        return Err(Error::InvalidGrid(format!("weight exponent {gamma} must be >= 0")));
    }
    match kind {
        WeightKind::Position => {
            let w = Field::from_real_fn(grid, |x| (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(-0.5 * gamma));
            Ok(OperatorHandle::diagonal(&w, format!("<x>^-{gamma}")))
        }
        WeightKind::Conjugate => {
            let spec = ConjugateSpectrum::new(&a_op(grid), cap)?;
            let flags = OpFlags { self_adjoint: true, fourier_diagonal: false, real_coefficients: false };
            OperatorHandle::from_dense(grid, spec.weight(gamma), flags, format!("<A>^-{gamma}"))
        }
    }
}

/// `e^{itA}` as a dense unitary.
pub fn matrix_exponential_group(a: &OperatorHandle, t: f64) -> Result<OperatorHandle> {
    let spec = ConjugateSpectrum::new(a, DEFAULT_DENSE_CAP)?;
    let flags = OpFlags { self_adjoint: false, fourier_diagonal: false, real_coefficients: false };
    OperatorHandle::from_dense(a.grid(), spec.group(t), flags, format!("exp({t}i{})", a.label))
}

/// `i` as a complex constant; `[H, iA] = i[H, A]`.
pub fn times_i(m: &CMat) -> CMat {
    linalg::scaled(m, I)
}

/// Relative Frobenius difference of two matrices restricted to interior rows and columns.
pub fn interior_relative_difference(grid: &GridSpec, a: &CMat, b: &CMat) -> f64 {
    let mask = grid.interior_mask();
    linalg::relative_difference(&linalg::compress(a, &mask), &linalg::compress(b, &mask))
}

/// Upper bound `d·π²/(2h²)` of the `H₀` spectrum.
pub fn h0_spectral_bound(grid: &GridSpec) -> f64 {
    grid.dim() as f64 * PI * PI / (2.0 * grid.spacing().powi(2))
}
