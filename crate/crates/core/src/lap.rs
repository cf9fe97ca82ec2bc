//! Resolvent probes: shifted solves, weighted resolvent norms, ε-sweeps,
//! Hölder scans and finite-difference regularity of `e^{itA}(H−z)^{-1}e^{-itA}`.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::linalg::{self, fit_line, CMat, SymmetricEigen, I, ONE};
use crate::mourre::{hamiltonian_real, i_a_real};
use crate::operators::WeightKind;

/// Real `z` closer than this to the grid spectrum is rejected.
pub const SINGULAR_DISTANCE: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const SATURATION_CHANGE: f64 = 0.05;
pub const DIVERGENCE_SLOPE: f64 = -0.5;
pub const DIVERGENCE_R2: f64 = 0.98;
pub const FLOOR_FACTOR: f64 = 3.0;
pub const LOCALIZATION_THRESHOLD: f64 = 0.05;

/// `H = H₀ + V` as a dense real matrix together with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct SpectralResolvent {
    grid: GridSpec,
    h: Mat<f64>,
    eig: SymmetricEigen,
}

impl SpectralResolvent {
    pub fn new(grid: &GridSpec, v: &Field, cap: usize) -> Result<Self> {
        let h = hamiltonian_real(grid, v, cap)?;
        let eig = linalg::symmetric_eigen(&h)?;
        Ok(Self { grid: *grid, h, eig })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn hamiltonian(&self) -> &Mat<f64> {
        &self.h
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn eigenvectors(&self) -> &Mat<f64> {
        &self.eig.vectors
    }

    /// Distance from `z` to the grid spectrum.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.eig.values.iter().map(|&e| (Complex64::new(e, 0.0) - z).norm()).fold(f64::INFINITY, f64::min)
    }

    fn check_z(&self, z: Complex64) -> Result<()> {
        let dist = self.distance(z);
        if z.im == 0.0 && dist <= SINGULAR_DISTANCE {
            return Err(Error::NearSpectrumSingular { re: z.re, im: z.im, dist });
        }
        Ok(())
    }

    fn shifted(&self, z: Complex64) -> CMat {
        Mat::from_fn(self.h.nrows(), self.h.ncols(), |i, j| {
            let v = Complex64::new(self.h[(i, j)], 0.0);
            if i == j {
                v - z
            } else {
                v
            }
        })
    }

    /// Solves `(H − z)u = rhs` by LU factorization and checks the residual.
    pub fn apply(&self, z: Complex64, rhs: &Field) -> Result<Field> {
        if rhs.grid() != &self.grid {
            return Err(Error::DimensionMismatch);
        }
        self.check_z(z)?;
        let m = self.shifted(z);
        let b = Mat::from_fn(self.grid.len(), 1, |i, _| rhs.values()[i]);
        let u = linalg::solve(&m, &b);
        let r = &m * &u - &b;
        let (rn, bn) = (linalg::frobenius(r.as_ref()), linalg::frobenius(b.as_ref()));
        if rn > RESIDUAL_TOL * bn.max(f64::MIN_POSITIVE) {
            return Err(Error::Linalg(format!("resolvent residual {rn:e} exceeds {RESIDUAL_TOL:e}·‖rhs‖")));
        }
        Field::from_values(&self.grid, (0..self.grid.len()).map(|i| u[(i, 0)]).collect())
    }

    /// `(H − z)^{-1}` from the eigendecomposition.
    pub fn matrix(&self, z: Complex64) -> Result<CMat> {
        self.check_z(z)?;
        let n = self.grid.len();
        let u = &self.eig.vectors;
        let d: Vec<Complex64> = self.eig.values.iter().map(|&e| ONE / (Complex64::new(e, 0.0) - z)).collect();
        let scaled = Mat::from_fn(n, n, |i, k| d[k] * u[(i, k)]);
        Ok(scaled * linalg::to_complex(&u.transpose().to_owned()))
    }

    /// `3 ×` the mean spacing of the nine eigenvalues nearest `λ`.
    pub fn eps_floor(&self, lambda: f64) -> f64 {
        let mut near: Vec<f64> = self.eig.values.clone();
        near.sort_by(|a, b| (a - lambda).abs().total_cmp(&(b - lambda).abs()));
        near.truncate(9);
        let (lo, hi) = near.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
        FLOOR_FACTOR * (hi - lo) / (near.len().max(2) - 1) as f64
    }

    /// Real symmetric weight matrix `⟨x⟩^{-γ}` or `⟨A⟩^{-γ}`.
    pub fn weight_matrix(&self, kind: WeightKind, gamma: f64, cap: usize) -> Result<Mat<f64>> {
        if gamma < 0.0 {
            return Err(Error::Sweep(format!("weight exponent {gamma} must be >= 0")));
        }
        let g = &self.grid;
        match kind {
            WeightKind::Position => {
                let w: Vec<f64> = (0..g.len())
                    .map(|i| (1.0 + g.point(i)[..g.dim()].iter().map(|v| v * v).sum::<f64>()).powf(-0.5 * gamma))
                    .collect();
                Ok(Mat::from_fn(g.len(), g.len(), |i, j| if i == j { w[i] } else { 0.0 }))
            }
            WeightKind::Conjugate => {
                // iA = R is real antisymmetric, so A² = −R² and ⟨A⟩² = 1 − R² is real
                let r = i_a_real(g, cap)?;
                let one_plus_a2 = Mat::<f64>::identity(g.len(), g.len()) - &r * &r;
                let sym = Mat::from_fn(g.len(), g.len(), |i, j| 0.5 * (one_plus_a2[(i, j)] + one_plus_a2[(j, i)]));
                let e = linalg::symmetric_eigen(&sym)?;
                let f: Vec<f64> = e.values.iter().map(|&x| x.max(1.0).powf(-0.5 * gamma)).collect();
                let scaled = Mat::from_fn(g.len(), g.len(), |i, k| e.vectors[(i, k)] * f[k]);
                Ok(&scaled * e.vectors.transpose())
            }
        }
    }

    pub fn weighted(&self, kind: WeightKind, gamma: f64, cap: usize) -> Result<WeightedResolvent> {
        let w = self.weight_matrix(kind, gamma, cap)?;
        let b = &w * &self.eig.vectors;
        let gram = b.transpose() * &b;
        Ok(WeightedResolvent { energies: self.eig.values.clone(), b, gram, kind, gamma, floor_source: self.clone_floor() })
    }

    fn clone_floor(&self) -> Vec<f64> {
        self.eig.values.clone()
    }
}

/// `W(H − z)^{-1}W = B D(z) Bᵀ` with `B = WU` and `D` the diagonal of `1/(E_k − z)`.
#[derive(Clone, Debug)]
pub struct WeightedResolvent {
    energies: Vec<f64>,
    b: Mat<f64>,
    gram: Mat<f64>,
    kind: WeightKind,
    gamma: f64,
    floor_source: Vec<f64>,
}

fn real_times(m: &Mat<f64>, v: &[Complex64]) -> Vec<Complex64> {
    let x = Mat::from_fn(v.len(), 2, |i, c| if c == 0 { v[i].re } else { v[i].im });
    let y = m * &x;
    (0..m.nrows()).map(|i| Complex64::new(y[(i, 0)], y[(i, 1)])).collect()
}

impl WeightedResolvent {
    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Operator norm of `W(H − λ − iε)^{-1}W`, by Lanczos on `M*M`.
    pub fn norm(&self, lambda: f64, eps: f64) -> Result<f64> {
        let z = Complex64::new(lambda, eps);
        let dist = self.energies.iter().map(|&e| (Complex64::new(e, 0.0) - z).norm()).fold(f64::INFINITY, f64::min);
        if eps == 0.0 && dist <= SINGULAR_DISTANCE {
            return Err(Error::NearSpectrumSingular { re: lambda, im: eps, dist });
        }
        let d: Vec<Complex64> = self.energies.iter().map(|&e| ONE / (Complex64::new(e, 0.0) - z)).collect();
        let bt = self.b.transpose().to_owned();
        // M*M = B D̄ G D Bᵀ
        let top = linalg::top_eigenvalue_psd(self.energies.len(), |x| {
            let mut y = real_times(&bt, x);
            y.iter_mut().zip(&d).for_each(|(a, s)| *a *= s);
            let mut y = real_times(&self.gram, &y);
            y.iter_mut().zip(&d).for_each(|(a, s)| *a *= s.conj());
            real_times(&self.b, &y)
        })?;
        Ok(top.max(0.0).sqrt())
    }

    pub fn eps_floor(&self, lambda: f64) -> f64 {
        let mut near = self.floor_source.clone();
        near.sort_by(|a, b| (a - lambda).abs().total_cmp(&(b - lambda).abs()));
        near.truncate(9);
        let (lo, hi) = near.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
        FLOOR_FACTOR * (hi - lo) / (near.len().max(2) - 1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Saturating,
    Diverging { slope: f64 },
    Inconclusive,
}

impl Classification {
    pub fn tag(&self) -> String {
        match self {
            Classification::Saturating => "saturating".into(),
            Classification::Diverging { slope } => format!("diverging({slope:.4})"),
            Classification::Inconclusive => "inconclusive".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LapCurve {
    pub lambda: f64,
    pub gamma: f64,
    pub weight: WeightKind,
    /// `(ε, norm)` by decreasing `ε`.
    pub rows: Vec<(f64, f64)>,
    pub classification: Classification,
    pub saturation_value: Option<f64>,
    pub eps_floor: f64,
    /// Relative change over the last decade of `ε`.
    pub last_decade_change: f64,
    /// Log-log slope and R² over all rows.
    pub slope: f64,
    pub r_squared: f64,
}

/// `n` geometric steps from `hi` down to `lo`.
pub fn geometric_eps(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    let r = (lo / hi).powf(1.0 / (n - 1) as f64);
    (0..n).map(|k| if k + 1 == n { lo } else { hi * r.powi(k as i32) }).collect()
}

fn check_geometric(eps: &[f64]) -> Result<()> {
    if eps.len() < 4 {
        return Err(Error::Sweep(format!("need at least 4 ε values, got {}", eps.len())));
    }
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Sweep("ε values must be positive".into()));
    }
    let ratios: Vec<f64> = eps.windows(2).map(|p| p[1] / p[0]).collect();
    if ratios.iter().any(|r| (r - ratios[0]).abs() > 1e-6 * ratios[0]) {
        return Err(Error::Sweep("ε list must be geometric".into()));
    }
    Ok(())
}

/// Classifies `ε ↦ norm` rows (sorted by decreasing `ε`).
pub fn classify(rows: &[(f64, f64)]) -> (Classification, f64, f64, f64) {
    let last = rows.last().expect("non-empty");
    // the row closest to ten times the smallest ε
    let decade = rows
        .iter()
        .min_by(|a, b| (a.0 / last.0).log10().sub_one_abs().total_cmp(&(b.0 / last.0).log10().sub_one_abs()))
        .expect("non-empty");
    let change = (last.1 - decade.1).abs() / last.1;
    let xs: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let fit = fit_line(&xs, &ys).unwrap_or(linalg::LineFit { slope: 0.0, intercept: 0.0, r_squared: 0.0 });
    let class = if change < SATURATION_CHANGE {
        Classification::Saturating
    } else if fit.slope <= DIVERGENCE_SLOPE && fit.r_squared >= DIVERGENCE_R2 {
        Classification::Diverging { slope: fit.slope }
    } else {
        Classification::Inconclusive
    };
    (class, change, fit.slope, fit.r_squared)
}

trait SubOneAbs {
    fn sub_one_abs(self) -> f64;
}

impl SubOneAbs for f64 {
    fn sub_one_abs(self) -> f64 {
        (self - 1.0).abs()
    }
}

/// Sweeps `ε` at fixed `λ`. With `enforce_floor`, every `ε` must be at least the
/// level-spacing floor near `λ`.
pub fn eps_sweep(wr: &WeightedResolvent, lambda: f64, eps_list: &[f64], enforce_floor: bool) -> Result<LapCurve> {
    let mut eps = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    check_geometric(&eps)?;
    if wr.gamma <= 0.5 {
        eprintln!("warning: weight exponent {} <= 1/2", wr.gamma);
    }
    let floor = wr.eps_floor(lambda);
    if enforce_floor && eps.last().is_some_and(|&e| e < floor) {
        return Err(Error::Sweep(format!("smallest ε {:e} is below the level-spacing floor {floor:e}", eps.last().unwrap())));
    }
    let norms: Vec<f64> = eps.par_iter().map(|&e| wr.norm(lambda, e)).collect::<Result<_>>()?;
    let rows: Vec<(f64, f64)> = eps.into_iter().zip(norms).collect();
    let (classification, change, slope, r2) = classify(&rows);
    let saturation_value = matches!(classification, Classification::Saturating).then(|| rows.last().unwrap().1);
    Ok(LapCurve {
        lambda,
        gamma: wr.gamma,
        weight: wr.kind,
        rows,
        classification,
        saturation_value,
        eps_floor: floor,
        last_decade_change: change,
        slope,
        r_squared: r2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderPair {
    pub lambda0: f64,
    pub lambda1: f64,
    pub ratio: f64,
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub theta: f64,
    pub eps: f64,
    pub max_ratio: f64,
    pub pairs: Vec<HolderPair>,
}

/// `max |F(λ) − F(λ')| / |λ − λ'|^θ` over adjacent grid points, with
/// `F(λ) = ‖W(H − λ − iε)^{-1}W‖`; pairs bracketing an entry of `avoid` are excluded.
pub fn holder_scan(wr: &WeightedResolvent, lambdas: &[f64], eps: f64, theta: f64, avoid: &[f64]) -> Result<HolderReport> {
    if lambdas.len() < 2 {
        return Err(Error::Sweep("Hölder scan needs at least two energies".into()));
    }
    let f: Vec<f64> = lambdas.par_iter().map(|&l| wr.norm(l, eps)).collect::<Result<_>>()?;
    let pairs: Vec<HolderPair> = lambdas
        .windows(2)
        .zip(f.windows(2))
        .map(|(l, v)| {
            let (lo, hi) = (l[0].min(l[1]), l[0].max(l[1]));
            let excluded = avoid.iter().any(|&e| e >= lo && e <= hi);
            HolderPair { lambda0: l[0], lambda1: l[1], ratio: (v[1] - v[0]).abs() / (hi - lo).powf(theta), excluded }
        })
        .collect();
    let max_ratio = pairs.iter().filter(|p| !p.excluded).map(|p| p.ratio).fold(0.0, f64::max);
    Ok(HolderReport { theta, eps, max_ratio, pairs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C2Report {
    /// `‖(R(t) − R(−t))/2t − i[A,R]‖_F` per `t`.
    pub first_errors: Vec<(f64, f64)>,
    /// Error ratio between consecutive `t` values (≈ 4 when halving `t`).
    pub richardson_ratios: Vec<f64>,
    /// `‖i[A,R] − R[H,iA]R‖_F / ‖i[A,R]‖_F`.
    pub identity_residual: f64,
    /// `‖(R(t) − 2R(0) + R(−t))/t²‖_F` per `t`.
    pub second_norms: Vec<(f64, f64)>,
    /// `(max − min)/max` of the second-difference norms.
    pub second_variation: f64,
}

/// Finite-difference regularity of `R(t) = e^{itA}(H − z)^{-1}e^{-itA}` at `t = 0`.
pub fn c2_regularity_check(grid: &GridSpec, v: &Field, z: Complex64, first_ts: &[f64], second_ts: &[f64], cap: usize) -> Result<C2Report> {
    if z.im == 0.0 {
        return Err(Error::Sweep("the regularity probe needs Im z != 0".into()));
    }
    let res = SpectralResolvent::new(grid, v, cap)?;
    let r0 = res.matrix(z)?;
    let ia = linalg::to_complex(&i_a_real(grid, cap)?);
    // e^{itA} = e^{t·iA}; iA is real antisymmetric, so use the eigenpairs of the Hermitian A = −i·iA
    let a = linalg::scaled(&ia, -I);
    let eig = linalg::hermitian_eigen(&a)?;
    let conj = |t: f64| -> CMat {
        let u = eig.apply_function(|x| Complex64::from_polar(1.0, t * x));
        let ui = eig.apply_function(|x| Complex64::from_polar(1.0, -t * x));
        &u * &r0 * &ui
    };
    // i[A,R] = [iA, R]
    let derivative = &ia * &r0 - &r0 * &ia;
    let h = linalg::to_complex(res.hamiltonian());
    let comm = &h * &ia - &ia * &h;
    let via_identity = &r0 * &comm * &r0;
    let identity_residual = linalg::relative_difference(&derivative, &via_identity);
    let first_errors: Vec<(f64, f64)> = first_ts
        .iter()
        .map(|&t| {
            let d = linalg::scaled(&(conj(t) - conj(-t)), Complex64::new(0.5 / t, 0.0));
            (t, linalg::frobenius((d - &derivative).as_ref()))
        })
        .collect();
    let richardson_ratios = first_errors.windows(2).map(|p| p[0].1 / p[1].1).collect();
    let second_norms: Vec<(f64, f64)> = second_ts
        .iter()
        .map(|&t| {
            let d = conj(t) - linalg::scaled(&r0, Complex64::new(2.0, 0.0)) + conj(-t);
            (t, linalg::frobenius(d.as_ref()) / (t * t))
        })
        .collect();
    let (lo, hi) = second_norms.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &(_, n)| (l.min(n), h.max(n)));
    Ok(C2Report { first_errors, richardson_ratios, identity_residual, second_norms, second_variation: (hi - lo) / hi })
}

/// Localization measures of one eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub energy: f64,
    /// `(Σ|u|²)² / (N Σ|u|⁴)`: 1 for a flat state, about `1/N` for a single site.
    pub participation: f64,
    /// `⟨u, |x|² u⟩ / ⟨u, u⟩`.
    pub x2: f64,
    pub localized: bool,
}

/// Eigenvalues in `[lo, hi]` with localization measures.
pub fn spectrum_summary(res: &SpectralResolvent, lo: f64, hi: f64) -> Vec<StateSummary> {
    let g = res.grid();
    let n = g.len();
    let r2: Vec<f64> = (0..n).map(|i| g.point(i)[..g.dim()].iter().map(|v| v * v).sum()).collect();
    res.eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= lo && e <= hi)
        .map(|(k, &e)| {
            let u: Vec<f64> = (0..n).map(|i| res.eigenvectors()[(i, k)]).collect();
            let s2: f64 = u.iter().map(|x| x * x).sum();
            let s4: f64 = u.iter().map(|x| x.powi(4)).sum();
            let participation = s2 * s2 / (n as f64 * s4);
            let x2 = u.iter().zip(&r2).map(|(x, r)| x * x * r).sum::<f64>() / s2;
            StateSummary { energy: e, participation, x2, localized: participation < LOCALIZATION_THRESHOLD }
        })
        .collect()
}

pub const CSV_HEADER: &str = "lambda,eps,gamma,weight,norm,classification";

pub fn write_lap_csv(w: &mut impl Write, curves: &[LapCurve]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for c in curves {
        let tag = c.classification.tag();
        for (eps, norm) in &c.rows {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{},{:.16e},{}", c.lambda, eps, c.gamma, c.weight.tag(), norm, tag)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::operators::DEFAULT_DENSE_CAP;

    fn free(l: f64, n: usize, beta: f64) -> SpectralResolvent {
        let g = make_grid(1, l, n, beta).unwrap();
        SpectralResolvent::new(&g, &Field::zeros(&g), DEFAULT_DENSE_CAP).unwrap()
    }

    #[test]
    fn free_resolvent_on_plane_wave() {
        let r = free(4.0, 64, 1.0);
        let g = *r.grid();
        let k = 3;
        let u = Field::plane_wave(&g, &[k]);
        let z = Complex64::new(0.7, 0.2);
        let e = 0.5 * g.frequency(k).powi(2);
        let out = r.apply(z, &u).unwrap();
        let expect = u.scale(ONE / (Complex64::new(e, 0.0) - z));
        assert!(out.sub(&expect).norm() < 1e-10 * expect.norm());
    }

    #[test]
    fn real_z_on_spectrum_is_rejected() {
        let r = free(4.0, 64, 1.0);
        let e = r.eigenvalues()[3];
        let u = Field::plane_wave(r.grid(), &[1]);
        assert!(matches!(r.apply(Complex64::new(e, 0.0), &u), Err(Error::NearSpectrumSingular { .. })));
    }

    #[test]
    fn resolvent_norm_bounded_by_inverse_eps() {
        let r = free(4.0, 64, 1.0);
        let wr = r.weighted(WeightKind::Position, 0.0, DEFAULT_DENSE_CAP).unwrap();
        for eps in [1.0, 0.1, 0.01] {
            let n = wr.norm(1.0, eps).unwrap();
            assert!(n * eps <= 1.0 + 1e-10);
            let dist = r.distance(Complex64::new(1.0, eps));
            assert!((n - 1.0 / dist).abs() < 1e-9 * n);
            assert!((wr.norm(1.0, -eps).unwrap() - n).abs() < 1e-10 * n);
        }
    }

    #[test]
    fn free_green_function() {
        // −½u'' − zu = δ has kernel (i/k) e^{ik|x−y|} with k = √(2z), Im k > 0
        let r = free(24.0, 192, 1.0);
        let g = *r.grid();
        let z = Complex64::new(1.0, 2.0);
        let k = (2.0 * z).sqrt();
        assert!(g.half_width() >= 8.0 * std::f64::consts::PI / k.im);
        let m = r.matrix(z).unwrap();
        let j0 = g.n() / 2;
        let h = g.spacing();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        // the band limit |ξ| ≤ π/h clips the cusp at x = y by about 2h/π², so stay a unit away
        for i in (0..g.len()).filter(|&i| g.is_interior(i)) {
            let dx = (g.point(i)[0] - g.point(j0)[0]).abs();
            if dx < 1.0 {
                continue;
            }
            let exact = I / k * (I * k * dx).exp();
            worst = worst.max((m[(i, j0)] / h - exact).norm());
            scale = scale.max(exact.norm());
        }
        assert!(worst <= 0.02 * scale, "{worst} vs {scale}");
    }

    #[test]
    fn weighted_norm_decreases_with_gamma() {
        let r = free(4.0, 64, 1.0);
        let mut last = f64::INFINITY;
        for gamma in [0.0, 0.5, 1.0, 2.0] {
            let n = r.weighted(WeightKind::Position, gamma, DEFAULT_DENSE_CAP).unwrap().norm(1.0, 0.05).unwrap();
            assert!(n <= last * (1.0 + 1e-10));
            last = n;
        }
        let mut last = f64::INFINITY;
        for gamma in [0.0, 1.0, 2.0] {
            let n = r.weighted(WeightKind::Conjugate, gamma, DEFAULT_DENSE_CAP).unwrap().norm(1.0, 0.05).unwrap();
            assert!(n <= last * (1.0 + 1e-10));
            last = n;
        }
    }

    #[test]
    fn lanczos_matches_dense_svd() {
        let r = free(4.0, 64, 1.0);
        let wr = r.weighted(WeightKind::Position, 1.0, DEFAULT_DENSE_CAP).unwrap();
        let w = r.weight_matrix(WeightKind::Position, 1.0, DEFAULT_DENSE_CAP).unwrap();
        let z = Complex64::new(1.3, 0.02);
        let wc = linalg::to_complex(&w);
        let m = &wc * r.matrix(z).unwrap() * &wc;
        let dense = linalg::spectral_norm(&m).unwrap();
        assert!((wr.norm(z.re, z.im).unwrap() - dense).abs() < 1e-9 * dense);
    }

    #[test]
    fn outside_spectrum_saturates() {
        let r = free(4.0, 64, 1.0);
        let wr = r.weighted(WeightKind::Position, 1.0, DEFAULT_DENSE_CAP).unwrap();
        let c = eps_sweep(&wr, -1.0, &geometric_eps(1e-1, 1e-4, 7), false).unwrap();
        assert_eq!(c.classification, Classification::Saturating);
        let dist = r.distance(Complex64::new(-1.0, 0.0));
        assert!(c.saturation_value.unwrap() <= 1.0 / dist + 1e-12);
    }

    #[test]
    fn sweep_validation() {
        let r = free(4.0, 64, 1.0);
        let wr = r.weighted(WeightKind::Position, 1.0, DEFAULT_DENSE_CAP).unwrap();
        assert!(eps_sweep(&wr, 1.0, &[0.1, 0.01, 0.001], false).is_err());
        assert!(eps_sweep(&wr, 1.0, &[0.1, 0.05, 0.01, 0.001], false).is_err());
        let tiny = geometric_eps(1e-6, 1e-9, 4);
        assert!(matches!(eps_sweep(&wr, 1.0, &tiny, true), Err(Error::Sweep(_))));
    }

    #[test]
    fn classification_rules() {
        let flat: Vec<(f64, f64)> = geometric_eps(1e-1, 1e-4, 7).into_iter().map(|e| (e, 2.0 + e)).collect();
        assert_eq!(classify(&flat).0, Classification::Saturating);
        let pole: Vec<(f64, f64)> = geometric_eps(1e-1, 1e-4, 7).into_iter().map(|e| (e, 1.0 / e)).collect();
        match classify(&pole).0 {
            Classification::Diverging { slope } => assert!((slope + 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let slow: Vec<(f64, f64)> = geometric_eps(1e-1, 1e-4, 7).into_iter().map(|e| (e, e.powf(-0.2))).collect();
        assert_eq!(classify(&slow).0, Classification::Inconclusive);
    }

    #[test]
    fn holder_examples() {
        let r = free(4.0, 64, 1.0);
        let wr = r.weighted(WeightKind::Position, 0.0, DEFAULT_DENSE_CAP).unwrap();
        // far below the spectrum the weighted norm is 1/dist, smooth in λ
        let lambdas: Vec<f64> = (0..5).map(|k| -3.0 + 0.1 * k as f64).collect();
        let rep = holder_scan(&wr, &lambdas, 1e-3, 0.5, &[]).unwrap();
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        let flagged = holder_scan(&wr, &lambdas, 1e-3, 0.5, &[-2.85]).unwrap();
        assert!(flagged.pairs[1].excluded && !flagged.pairs[0].excluded);
    }

    #[test]
    fn csv_format() {
        let curve = LapCurve {
            lambda: 1.0,
            gamma: 1.0,
            weight: WeightKind::Conjugate,
            rows: vec![(0.1, 2.0)],
            classification: Classification::Inconclusive,
            saturation_value: None,
            eps_floor: 0.01,
            last_decade_change: 0.2,
            slope: -0.1,
            r_squared: 0.9,
        };
        let mut buf = Vec::new();
        write_lap_csv(&mut buf, &[curve]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "1.0000000000000000e0,1.0000000000000001e-1,1.0000000000000000e0,conj,2.0000000000000000e0,inconclusive"
        );
    }
}
