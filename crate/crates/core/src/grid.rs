//! Periodic box discretization of ℝ^d.
//!
//! The box is `[-L, L)^d` with `n` points per axis. The shift length β is an
//! exact multiple `m` of the spacing, so a translation by β along an axis is a
//! cyclic index permutation by `m`. Frequencies are `ξ_k = πk/L` for
//! `k ∈ [-n/2, n/2)`, stored in FFT order (non-negative `k` first).

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Relative slack accepted when checking that β/h is an integer.
const COMMENSURATE_TOL: f64 = 1e-10;

/// Margin (in units of β) between the interior region and the box edge.
pub const INTERIOR_MARGIN_STEPS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    n: usize,
    beta: f64,
    spacing: f64,
    steps: usize,
}

/// Validates and builds a grid. See [`GridSpec::new`].
pub fn make_grid(d: usize, half_width: f64, n: usize, beta: f64) -> Result<GridSpec> {
    GridSpec::new(d, half_width, n, beta)
}

impl GridSpec {
    pub fn new(d: usize, half_width: f64, n: usize, beta: f64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dimension {d} outside 1..={MAX_DIM}")));
        }
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} must be positive and even")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width L = {half_width} must be positive")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidGrid(format!("beta = {beta} must be positive")));
        }
        let spacing = 2.0 * half_width / n as f64;
        let ratio = beta / spacing;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > COMMENSURATE_TOL * ratio {
            return Err(Error::NonCommensurate { beta, spacing, ratio });
        }
        let steps = steps as usize;
        if steps < 4 || n < 4 * steps {
            return Err(Error::TooCoarse { steps, n });
        }
        Ok(Self { dim: d, half_width, n, beta, spacing, steps })
    }

    /// Same spacing and β on a box of a different half-width.
    pub fn with_half_width(&self, half_width: f64) -> Result<Self> {
        let n = (2.0 * half_width / self.spacing).round() as usize;
        Self::new(self.dim, half_width, n, self.beta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of grid steps in one shift by β.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stride of `axis` in the row-major layout (axis 0 is slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.n
    }

    /// Sawtooth coordinate on `[-L, L-h]`.
    pub fn coordinate(&self, index: usize) -> f64 {
        -self.half_width + index as f64 * self.spacing
    }

    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        for (axis, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.coordinate(self.axis_index(flat, axis));
        }
        x
    }

    /// Signed frequency integer of an FFT-ordered index.
    pub fn wavenumber(&self, index: usize) -> i64 {
        let half = self.n / 2;
        if index < half {
            index as i64
        } else {
            index as i64 - self.n as i64
        }
    }

    /// `ξ = πk/L` for an FFT-ordered index.
    pub fn frequency(&self, index: usize) -> f64 {
        PI * self.wavenumber(index) as f64 / self.half_width
    }

    /// Frequency vector of a flat index of a transformed field.
    pub fn xi(&self, flat: usize) -> [f64; MAX_DIM] {
        let mut xi = [0.0; MAX_DIM];
        for (axis, v) in xi.iter_mut().enumerate().take(self.dim) {
            *v = self.frequency(self.axis_index(flat, axis));
        }
        xi
    }

    /// Frequency spacing `π/L`.
    pub fn frequency_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Nyquist frequency `π/h`.
    pub fn max_frequency(&self) -> f64 {
        PI / self.spacing
    }

    /// Upper end of the window `(0, ½(π/β)²)`.
    pub fn window_top(&self) -> f64 {
        0.5 * (PI / self.beta).powi(2)
    }

    /// Half-width of the interior region, `L - 4β`.
    pub fn interior_radius(&self) -> f64 {
        self.half_width - INTERIOR_MARGIN_STEPS * self.beta
    }

    pub fn is_interior(&self, flat: usize) -> bool {
        let r = self.interior_radius();
        self.point(flat)[..self.dim].iter().all(|x| x.abs() <= r + 1e-12 * self.half_width)
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_interior(i)).collect()
    }

    /// Flat index of the point reached from `flat` by `delta` steps along `axis`, wrapped.
    pub fn offset(&self, flat: usize, axis: usize, delta: isize) -> usize {
        let stride = self.stride(axis);
        let i = self.axis_index(flat, axis) as isize;
        let n = self.n as isize;
        let j = (i + delta).rem_euclid(n) as usize;
        flat - (i as usize) * stride + j * stride
    }
}

/// Sorted per-axis frequency list `{πk/L : k = -n/2, …, n/2 - 1}`.
pub fn frequencies(grid: &GridSpec) -> Vec<f64> {
    let half = (grid.n / 2) as i64;
    (-half..half).map(|k| PI * k as f64 / grid.half_width).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Position,
    Frequency,
}

/// Complex samples on a grid, row-major over axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    domain: Domain,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: *grid, domain: Domain::Position, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: &GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldSize { expected: grid.len(), found: values.len() });
        }
        Ok(Self { grid: *grid, domain: Domain::Position, values })
    }

    pub fn from_real(grid: &GridSpec, values: &[f64]) -> Result<Self> {
        Self::from_values(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.dim])).collect();
        Self { grid: *grid, domain: Domain::Position, values }
    }

    pub fn from_real_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Sampled plane wave `e^{iξ·x}` at FFT frequency indices `k`.
    pub fn plane_wave(grid: &GridSpec, k: &[usize]) -> Self {
        let xi: Vec<f64> = k.iter().map(|&i| grid.frequency(i)).collect();
        Self::from_fn(grid, |x| {
            let phase: f64 = x.iter().zip(&xi).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, phase)
        })
    }

    /// The coordinate function `x_axis` (sawtooth branch).
    pub fn coordinate(grid: &GridSpec, axis: usize) -> Self {
        Self::from_real_fn(grid, |x| x[axis])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn cell_weight(&self) -> f64 {
        let w = match self.domain {
            Domain::Position => self.grid.spacing,
            Domain::Frequency => self.grid.frequency_spacing(),
        };
        w.powi(self.grid.dim as i32)
    }

    /// Discrete L² norm with the cell volume weight.
    pub fn norm(&self) -> f64 {
        (self.cell_weight() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Weighted inner product, antilinear in `self`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        s * self.cell_weight()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, domain: self.domain, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, domain: self.domain, values }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Field) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `out[i] = self[i + steps·e_axis]`, cyclically. `steps = m` is the β-shift `T`.
    pub fn shifted(&self, axis: usize, steps: isize) -> Self {
        let g = &self.grid;
        let values = (0..g.len()).map(|i| self.values[g.offset(i, axis, steps)]).collect();
        Self { grid: self.grid, domain: self.domain, values }
    }

    /// Forward difference `(f(x+βe_axis) - f(x))/β`.
    pub fn difference(&self, axis: usize) -> Self {
        let inv = 1.0 / self.grid.beta;
        self.shifted(axis, self.grid.steps as isize).zip_with(self, |a, b| (a - b) * inv)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

fn fft_axes(values: &mut [Complex64], grid: &GridSpec, forward: bool) {
    let n = grid.n;
    let (fwd, inv) = plans(n);
    let plan = if forward { fwd } else { inv };
    let weight = if forward { grid.spacing } else { grid.frequency_spacing() } / (2.0 * PI).sqrt();
    // (-1)^k carries the e^{±iLξ} phase of a box starting at -L.
    let phase: Vec<f64> = (0..n).map(|k| if grid.wavenumber(k) % 2 == 0 { weight } else { -weight }).collect();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    let total = grid.len();
    for axis in 0..grid.dim {
        let stride = grid.stride(axis);
        for start in 0..total {
            if grid.axis_index(start, axis) != 0 {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = values[start + k * stride];
            }
            if !forward {
                for (slot, p) in line.iter_mut().zip(&phase) {
                    *slot *= p;
                }
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            if forward {
                for (slot, p) in line.iter_mut().zip(&phase) {
                    *slot *= p;
                }
            }
            for (k, v) in line.iter().enumerate() {
                values[start + k * stride] = *v;
            }
        }
    }
}

/// Unitary transform `φ̂(ξ) = (2π)^{-d/2} Σ h^d e^{-ix·ξ} φ(x)`; output in FFT order.
pub fn transform(field: &Field) -> Field {
    let mut values = field.values.clone();
    fft_axes(&mut values, &field.grid, true);
    Field { grid: field.grid, domain: Domain::Frequency, values }
}

/// Inverse of [`transform`].
pub fn inverse_transform(field_hat: &Field) -> Field {
    let mut values = field_hat.values.clone();
    fft_axes(&mut values, &field_hat.grid, false);
    Field { grid: field_hat.grid, domain: Domain::Position, values }
}

/// Applies the Fourier multiplier `symbol` (FFT order, one value per frequency point).
pub fn apply_multiplier(symbol: &[Complex64], field: &Field) -> Field {
    let mut hat = transform(field);
    for (v, s) in hat.values.iter_mut().zip(symbol) {
        *v *= s;
    }
    inverse_transform(&hat)
}

/// Samples `f(ξ)` at every frequency point, FFT order.
pub fn symbol_from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Vec<Complex64> {
    (0..grid.len()).map(|i| Complex64::new(f(&grid.xi(i)[..grid.dim]), 0.0)).collect()
}
