//! Commutator symbols, the free Mourre constant, the smooth energy cutoff and
//! projected positive-commutator estimates for `H = H₀ + V`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::linalg::{self, I};
use crate::operators::{a_op, free_commutator_op, h0_op, DEFAULT_DENSE_CAP};

/// `Σ_j sin(βξ_j) ξ_j / β`.
pub fn commutator_symbol(xi: &[f64], beta: f64) -> f64 {
    xi.iter().map(|&x| (beta * x).sin() * x).sum::<f64>() / beta
}

/// `β⁻² Σ_j sin(βξ_j) (β cos(βξ_j) ξ_j + sin(βξ_j))`.
pub fn double_commutator_symbol(xi: &[f64], beta: f64) -> f64 {
    xi.iter()
        .map(|&x| {
            let (s, c) = (beta * x).sin_cos();
            s * (beta * c * x + s)
        })
        .sum::<f64>()
        / (beta * beta)
}

/// Upper end of the window `I = (0, ½(π/β)²)`.
pub fn window_top(beta: f64) -> f64 {
    0.5 * (PI / beta).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub beta: f64,
}

impl EnergyWindow {
    /// Requires `η ≤ a < b ≤ ½(π/β − η)²`, which keeps `[a, b]` inside `I`.
    pub fn new(a: f64, b: f64, eta: f64, beta: f64) -> Result<Self> {
        let top = window_top(beta);
        let outside = Error::WindowOutsideI { a, b, eta, top };
        let finite = [a, b, eta, beta].iter().all(|v| v.is_finite());
        if !finite || beta <= 0.0 || eta <= 0.0 || a <= 0.0 || a >= b {
            return Err(outside);
        }
        if a < eta || PI / beta - eta <= 0.0 || b > 0.5 * (PI / beta - eta).powi(2) {
            return Err(outside);
        }
        Ok(Self { a, b, eta, beta })
    }

    pub fn contains(&self, e: f64) -> bool {
        let tol = 1e-9 * (self.b - self.a);
        e >= self.a - tol && e <= self.b + tol
    }
}

const DIRECTIONS: usize = 10_000;
const RADII: usize = 1_000;

/// Unit directions used to sample the shell; always contains the coordinate axes.
fn directions(d: usize) -> Vec<[f64; 3]> {
    match d {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..DIRECTIONS)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / DIRECTIONS as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect(),
        _ => {
            // Fibonacci sphere plus the six axis directions
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut dirs: Vec<[f64; 3]> = (0..DIRECTIONS)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / DIRECTIONS as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    [r * t.cos(), r * t.sin(), z]
                })
                .collect();
            for axis in 0..3 {
                for s in [1.0, -1.0] {
                    let mut v = [0.0; 3];
                    v[axis] = s;
                    dirs.push(v);
                }
            }
            dirs
        }
    }
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimum of `commutator_symbol` over the shell `√(2a) ≤ |ξ| ≤ √(2b)` in `ℝ^d`.
pub fn shell_minimum(d: usize, a: f64, b: f64, beta: f64) -> f64 {
    let (r0, r1) = ((2.0 * a).sqrt(), (2.0 * b).sqrt());
    let radius = |k: usize| r0 + (r1 - r0) * k as f64 / (RADII - 1) as f64;
    let dirs = directions(d);
    let eval = |dir: &[f64; 3], r: f64| {
        let xi = [dir[0] * r, dir[1] * r, dir[2] * r];
        commutator_symbol(&xi[..d], beta)
    };
    let (best_dir, best_k, best) = dirs
        .par_iter()
        .enumerate()
        .map(|(i, dir)| {
            (0..RADII).fold((i, 0, f64::INFINITY), |acc, k| {
                let v = eval(dir, radius(k));
                if v < acc.2 {
                    (i, k, v)
                } else {
                    acc
                }
            })
        })
        .reduce(|| (0, 0, f64::INFINITY), |x, y| if y.2 < x.2 || (y.2 == x.2 && y.0 < x.0) { y } else { x });
    // refine along the radius around the best sample
    let step = (r1 - r0) / (RADII - 1) as f64;
    let lo = (radius(best_k) - step).max(r0);
    let hi = (radius(best_k) + step).min(r1);
    let (_, refined) = golden_section_min(|r| eval(&dirs[best_dir], r), lo, hi);
    best.min(refined)
}

/// Free Mourre constant `δ` of the window.
pub fn delta_free(window: &EnergyWindow, d: usize) -> Result<f64> {
    let w = EnergyWindow::new(window.a, window.b, window.eta, window.beta)?;
    Ok(shell_minimum(d, w.a, w.b, w.beta))
}

fn mollifier(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step from 0 at `t ≤ 0` to 1 at `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    let (p, q) = (mollifier(t), mollifier(1.0 - t));
    if p + q == 0.0 {
        0.0
    } else {
        p / (p + q)
    }
}

/// `C^∞` bump: 0 outside `(lo_zero, hi_zero)`, 1 on `[lo_one, hi_one]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub lo_zero: f64,
    pub lo_one: f64,
    pub hi_one: f64,
    pub hi_zero: f64,
}

impl Cutoff {
    /// Plateau `[η, ½(π/β − η)²]`, support `[η/2, ½(π/β − η/2)²]`.
    pub fn for_window(window: &EnergyWindow) -> Self {
        let (eta, k) = (window.eta, PI / window.beta);
        Self { lo_zero: eta / 2.0, lo_one: eta, hi_one: 0.5 * (k - eta).powi(2), hi_zero: 0.5 * (k - eta / 2.0).powi(2) }
    }

    /// Plateau `[a, b]` with ramps of width `η/2` on each side.
    pub fn around(window: &EnergyWindow) -> Self {
        let ramp = window.eta / 2.0;
        Self { lo_zero: window.a - ramp, lo_one: window.a, hi_one: window.b, hi_zero: window.b + ramp }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.lo_zero || t >= self.hi_zero {
            0.0
        } else if t < self.lo_one {
            smooth_step((t - self.lo_zero) / (self.lo_one - self.lo_zero))
        } else if t <= self.hi_one {
            1.0
        } else {
            smooth_step((self.hi_zero - t) / (self.hi_zero - self.hi_one))
        }
    }
}

pub fn cutoff_f(window: &EnergyWindow) -> Cutoff {
    Cutoff::for_window(window)
}

/// Minimum number of grid frequencies required inside the window shell.
pub const MIN_SHELL_FREQUENCIES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeMourreCheck {
    /// `δ` of the window `[a, b]`.
    pub delta: f64,
    /// `δ` of the cutoff support `[a − η/2, b + η/2]`, used in the pointwise check.
    pub delta_support: f64,
    /// `min_ξ f(|ξ|²/2)² (symbol(ξ) − δ_support)` over all grid frequencies.
    pub margin: f64,
    pub shell_frequencies: usize,
}

/// Pointwise check of `f(H₀)[H₀,iA]f(H₀) ≥ δ f(H₀)²` on every grid frequency.
///
/// `f` is the bump with plateau `[a, b]` and ramps of width `η/2`; since `f(H₀)`
/// and the symbol are both Fourier-diagonal the check is exact.
pub fn free_mourre_check(grid: &GridSpec, window: &EnergyWindow) -> Result<FreeMourreCheck> {
    let w = EnergyWindow::new(window.a, window.b, window.eta, window.beta)?;
    if (w.beta - grid.beta()).abs() > 1e-12 * w.beta {
        return Err(Error::DimensionMismatch);
    }
    let d = grid.dim();
    let delta = shell_minimum(d, w.a, w.b, w.beta);
    let f = Cutoff::around(&w);
    let delta_support = shell_minimum(d, f.lo_zero.max(f64::MIN_POSITIVE), f.hi_zero, w.beta);
    if delta_support <= 0.0 {
        return Err(Error::WindowOutsideI { a: w.a, b: w.b, eta: w.eta, top: window_top(w.beta) });
    }
    let (margin, count) = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let xi = grid.xi(i);
            let e = 0.5 * xi[..d].iter().map(|x| x * x).sum::<f64>();
            let fv = f.eval(e);
            let m = fv * fv * (commutator_symbol(&xi[..d], w.beta) - delta_support);
            (m, usize::from(w.contains(e)))
        })
        .reduce(|| (f64::INFINITY, 0), |x, y| (x.0.min(y.0), x.1 + y.1));
    if count < MIN_SHELL_FREQUENCIES {
        return Err(Error::ResolutionTooCoarse { found: count, needed: MIN_SHELL_FREQUENCIES });
    }
    Ok(FreeMourreCheck { delta, delta_support, margin, shell_frequencies: count })
}

/// Which operator is compressed to the spectral subspace of the window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutatorRoute {
    /// Analytic `[H₀,iA]` multiplier plus the numeric `[V,iA]`.
    #[default]
    SymbolPlusPotential,
    /// The numeric `[H,iA]` of the grid matrices.
    ///
    /// On a finite grid every eigenvector `ψ` of `H` has `⟨ψ,[H,iA]ψ⟩ = 0`, so the
    /// compressed matrix is traceless and always has negative eigenvalues.
    Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Eigenvalues of `H` inside `[a, b]`.
    pub energies: Vec<f64>,
    /// Sorted spectrum of the compressed commutator.
    pub spectrum: Vec<f64>,
}

impl Projection {
    pub fn count_below(&self, c: f64) -> usize {
        self.spectrum.iter().filter(|&&mu| mu < c).count()
    }
}

/// Real matrix of `iA` (the conjugate operator is purely imaginary on the grid).
pub fn i_a_real(grid: &GridSpec, cap: usize) -> Result<Mat<f64>> {
    let a = a_op(grid).to_dense_with_cap(cap)?;
    Ok(Mat::from_fn(a.nrows(), a.ncols(), |i, j| (I * a[(i, j)]).re))
}

/// Dense real `H₀ + V`.
pub fn hamiltonian_real(grid: &GridSpec, v: &Field, cap: usize) -> Result<Mat<f64>> {
    if v.grid() != grid {
        return Err(Error::DimensionMismatch);
    }
    let imag = v.max_abs_imag();
    if imag > crate::operators::POTENTIAL_IMAG_TOL {
        return Err(Error::ComplexPotential(imag));
    }
    let h0 = h0_op(grid).to_dense_with_cap(cap)?;
    let vals = v.real_parts();
    Ok(Mat::from_fn(h0.nrows(), h0.ncols(), |i, j| h0[(i, j)].re + if i == j { vals[i] } else { 0.0 }))
}

/// `[V, iA]` entrywise: `(v_a − v_b)(iA)_ab`.
pub fn potential_commutator(v: &[f64], ia: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(ia.nrows(), ia.ncols(), |i, j| (v[i] - v[j]) * ia[(i, j)])
}

/// Compresses the chosen commutator to the spectral subspace of `H` for `[a, b]`.
pub fn project_commutator(
    grid: &GridSpec,
    v: &Field,
    window: &EnergyWindow,
    route: CommutatorRoute,
    cap: usize,
) -> Result<Projection> {
    let h = hamiltonian_real(grid, v, cap)?;
    let eig = linalg::symmetric_eigen(&h)?;
    let cols: Vec<usize> = (0..eig.values.len()).filter(|&i| window.contains(eig.values[i])).collect();
    if cols.is_empty() {
        return Err(Error::EmptyWindow { a: window.a, b: window.b });
    }
    let u = Mat::from_fn(h.nrows(), cols.len(), |i, k| eig.vectors[(i, cols[k])]);
    let ia = i_a_real(grid, cap)?;
    let k = match route {
        CommutatorRoute::SymbolPlusPotential => {
            let s = free_commutator_op(grid).to_dense_with_cap(cap)?;
            let s = linalg::real_part(&s);
            s + potential_commutator(&v.real_parts(), &ia)
        }
        CommutatorRoute::Matrix => &h * &ia - &ia * &h,
    };
    let c = u.transpose() * &k * &u;
    let sym = Mat::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let spectrum = linalg::real_symmetric_eigenvalues(&sym)?;
    Ok(Projection { energies: cols.iter().map(|&i| eig.values[i]).collect(), spectrum })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub k: usize,
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MourreReport {
    pub window: WindowRecord,
    pub delta_free: f64,
    pub c: f64,
    pub k: usize,
    pub spectrum: Vec<f64>,
    pub l_scan: Vec<ScanRow>,
    pub route: CommutatorRoute,
    pub energies: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MourreOptions {
    pub c_fraction: f64,
    pub route: CommutatorRoute,
    pub dense_cap: usize,
    /// Volume factors for the `L`-scan (`L · factor` at fixed spacing).
    pub scan_factors: &'static [usize],
}

impl Default for MourreOptions {
    fn default() -> Self {
        Self { c_fraction: 0.5, route: CommutatorRoute::default(), dense_cap: DEFAULT_DENSE_CAP, scan_factors: &[1, 2, 4] }
    }
}

/// Projected Mourre estimate for `H₀ + V` with `V` rebuilt on each grid by `potential`.
///
/// The scan keeps the spacing fixed and multiplies `L` by each factor; `k` is
/// the number of compressed-commutator eigenvalues below `c = c_fraction · δ`.
pub fn projected_mourre(
    grid: &GridSpec,
    potential: impl Fn(&GridSpec) -> Result<Field> + Sync,
    window: &EnergyWindow,
    options: &MourreOptions,
) -> Result<MourreReport> {
    let delta = delta_free(window, grid.dim())?;
    let c = options.c_fraction * delta;
    let grids: Vec<GridSpec> = options
        .scan_factors
        .iter()
        .map(|&f| grid.with_half_width(grid.half_width() * f as f64))
        .collect::<Result<_>>()?;
    let projections: Vec<Result<Projection>> = grids
        .par_iter()
        .map(|g| project_commutator(g, &potential(g)?, window, options.route, options.dense_cap))
        .collect();
    let base = project_commutator(grid, &potential(grid)?, window, options.route, options.dense_cap)?;
    let mut l_scan = Vec::with_capacity(grids.len());
    for (g, p) in grids.iter().zip(projections) {
        l_scan.push(ScanRow { half_width: g.half_width(), k: p?.count_below(c), c });
    }
    l_scan.sort_by(|x, y| x.half_width.total_cmp(&y.half_width));
    Ok(MourreReport {
        window: WindowRecord { a: window.a, b: window.b, eta: window.eta, beta: window.beta },
        delta_free: delta,
        c,
        k: base.count_below(c),
        spectrum: base.spectrum,
        l_scan,
        route: options.route,
        energies: base.energies,
    })
}

/// `⟨u, M u⟩ / ‖u‖²` for a dense complex matrix.
pub fn rayleigh_quotient(m: &linalg::CMat, u: &Field) -> f64 {
    let mu = linalg::matvec(m, u.values());
    let num: Complex64 = u.values().iter().zip(&mu).map(|(a, b)| a.conj() * b).sum();
    num.re / u.values().iter().map(|a| a.norm_sqr()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn symbol_examples() {
        assert!((commutator_symbol(&[PI / 2.0], 1.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(commutator_symbol(&[0.0], 1.0), 0.0);
        assert!(commutator_symbol(&[PI], 1.0).abs() < 1e-15);
        assert_eq!(double_commutator_symbol(&[0.0], 1.0), 0.0);
        assert!((double_commutator_symbol(&[PI / 2.0], 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_validation() {
        assert!(EnergyWindow::new(1.0, 2.0, 0.01, 1.0).is_ok());
        assert!(matches!(EnergyWindow::new(1.0, window_top(1.0), 0.01, 1.0), Err(Error::WindowOutsideI { .. })));
        assert!(EnergyWindow::new(2.0, 1.0, 0.01, 1.0).is_err());
        assert!(EnergyWindow::new(0.005, 1.0, 0.01, 1.0).is_err());
    }

    #[test]
    fn delta_free_one_dimension() {
        let w = EnergyWindow::new(1.0, 2.0, 0.01, 1.0).unwrap();
        let oracle = 2f64.sqrt() * 2f64.sqrt().sin();
        assert!((delta_free(&w, 1).unwrap() - oracle).abs() < 1e-9);
        assert!((delta_free(&w, 1).unwrap() - 1.3970).abs() < 1e-3);
    }

    #[test]
    fn delta_free_shrinks_as_window_grows() {
        let mut last = f64::INFINITY;
        for b in [1.5, 2.0, 3.0, 4.0, 4.8] {
            let w = EnergyWindow::new(1.0, b, 0.01, 1.0).unwrap();
            let d = delta_free(&w, 2).unwrap();
            assert!(d <= last + 1e-15);
            last = d;
        }
        let near_top = EnergyWindow::new(1.0, 0.5 * (PI - 0.001).powi(2), 0.001, 1.0).unwrap();
        assert!(delta_free(&near_top, 1).unwrap() < 0.01);
    }

    #[test]
    fn cutoff_shape() {
        let w = EnergyWindow::new(1.0, 2.0, 0.1, 1.0).unwrap();
        let f = cutoff_f(&w);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(f.hi_one), 1.0);
        assert_eq!(f.eval(f.hi_zero + 1e-9), 0.0);
        let ramp: Vec<f64> = (0..=100).map(|k| f.eval(0.05 + 0.05 * k as f64 / 100.0)).collect();
        assert!(ramp.windows(2).all(|p| p[1] >= p[0]));
        let down: Vec<f64> = (0..=100).map(|k| f.eval(f.hi_one + (f.hi_zero - f.hi_one) * k as f64 / 100.0)).collect();
        assert!(down.windows(2).all(|p| p[1] <= p[0]));
        assert!(ramp.iter().chain(&down).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn free_check_examples() {
        let g = make_grid(1, 16.0, 512, 1.0).unwrap();
        let w = EnergyWindow::new(1.0, 2.0, 0.01, 1.0).unwrap();
        let r = free_mourre_check(&g, &w).unwrap();
        assert!(r.margin >= -1e-12);
        assert!((r.delta_support - r.delta).abs() <= 0.01 * r.delta);
    }

    #[test]
    fn free_check_rejects_coarse_resolution() {
        let g = make_grid(1, 2.0, 64, 0.5).unwrap();
        let w = EnergyWindow::new(1.0, 1.1, 0.01, 0.5).unwrap();
        assert!(matches!(free_mourre_check(&g, &w), Err(Error::ResolutionTooCoarse { .. })));
    }

    #[test]
    fn free_projection_is_symbol() {
        let g = make_grid(1, 8.0, 64, 1.0).unwrap();
        let w = EnergyWindow::new(1.0, 2.0, 0.01, 1.0).unwrap();
        let p = project_commutator(&g, &Field::zeros(&g), &w, CommutatorRoute::SymbolPlusPotential, DEFAULT_DENSE_CAP)
            .unwrap();
        let mut expect: Vec<f64> = (0..g.len())
            .filter(|&i| w.contains(0.5 * g.frequency(i).powi(2)))
            .map(|i| commutator_symbol(&[g.frequency(i)], 1.0))
            .collect();
        expect.sort_by(f64::total_cmp);
        assert_eq!(p.spectrum.len(), expect.len());
        for (x, y) in p.spectrum.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-10);
        }
        let delta = delta_free(&w, 1).unwrap();
        assert_eq!(p.count_below(delta), 0);
    }

    #[test]
    fn empty_window() {
        let g = make_grid(1, 2.0, 32, 0.5).unwrap();
        let w = EnergyWindow::new(1.0, 1.01, 0.01, 0.5).unwrap();
        assert!(matches!(
            project_commutator(&g, &Field::zeros(&g), &w, CommutatorRoute::SymbolPlusPotential, DEFAULT_DENSE_CAP),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn matrix_route_is_traceless() {
        let g = make_grid(1, 8.0, 64, 1.0).unwrap();
        let w = EnergyWindow::new(1.0, 2.0, 0.01, 1.0).unwrap();
        let v = Field::from_real_fn(&g, |x| 0.3 * (-x[0] * x[0]).exp());
        let p = project_commutator(&g, &v, &w, CommutatorRoute::Matrix, DEFAULT_DENSE_CAP).unwrap();
        let trace: f64 = p.spectrum.iter().sum();
        let scale: f64 = p.spectrum.iter().map(|x| x.abs()).sum();
        assert!(trace.abs() <= 1e-9 * scale.max(1.0));
    }
}
