//! Test potentials and numerical proxies for the relative compactness and
//! boundedness hypotheses on `V`, `x_jΔ_jV` and `x_jx_kΔ_jΔ_kV`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, MAX_DIM};
use crate::io::read_field_binary;
use crate::linalg::{self, fit_line};
use crate::operators::DEFAULT_DENSE_CAP;

pub const DEFAULT_SEED: u64 = 42;
const RANDOM_TERMS: usize = 5;

/// One term `c·cos(2π k·x/β) + s·sin(2π k·x/β)` of a β-periodic profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// `a₁⟨x⟩^{-2-s} + a₂⟨x⟩^{-s}·∂₁e^{-|x|²/2} + a₃⟨x⟩^{-s}(1 + e^{-|x|²})/2`.
    Example4 { s: f64, a1: f64, a2: f64, a3: f64 },
    /// `amplitude·⟨x⟩^{-γ}W(x)` with `W` β-periodic; `γ = 0` gives `W` alone.
    /// Without explicit terms `W` is a random 5-term series with unit sup-norm.
    Example5 {
        gamma: f64,
        amplitude: f64,
        #[serde(default)]
        terms: Option<Vec<FourierTerm>>,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    /// `depth` on the cube `|x_j| ≤ width/2`.
    Well { depth: f64, width: f64 },
    /// Samples from a binary field container.
    Custom { path: PathBuf },
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn japanese(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Random `W` terms for dimension `d`, normalized to unit sup-norm over the cell.
pub fn random_terms(d: usize, beta: f64, seed: u64) -> Vec<FourierTerm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::with_capacity(RANDOM_TERMS);
    for t in 0..RANDOM_TERMS {
        // low harmonics only, so W stays resolved on grids with m >= 8
        let k: Vec<i32> = if d == 1 {
            vec![t as i32 % 2 + 1]
        } else {
            loop {
                let k: Vec<i32> = (0..d).map(|_| rng.random_range(-1..=1)).collect();
                if k.iter().any(|&c| c != 0) {
                    break k;
                }
            }
        };
        terms.push(FourierTerm { k, cos: rng.random_range(-1.0..1.0), sin: rng.random_range(-1.0..1.0) });
    }
    let sup = cell_sup(&terms, d, beta);
    if sup > 0.0 {
        for t in &mut terms {
            t.cos /= sup;
            t.sin /= sup;
        }
    }
    terms
}

fn eval_terms(terms: &[FourierTerm], x: &[f64], beta: f64) -> f64 {
    terms
        .iter()
        .map(|t| {
            let phase = 2.0 * PI * t.k.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum::<f64>() / beta;
            t.cos * phase.cos() + t.sin * phase.sin()
        })
        .sum()
}

fn cell_sup(terms: &[FourierTerm], d: usize, beta: f64) -> f64 {
    let per_axis: usize = match d {
        1 => 4096,
        2 => 256,
        _ => 48,
    };
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|flat| {
            let mut x = [0.0; MAX_DIM];
            let mut rest = flat;
            for v in x.iter_mut().take(d) {
                *v = beta * (rest % per_axis) as f64 / per_axis as f64;
                rest /= per_axis;
            }
            eval_terms(terms, &x[..d], beta).abs()
        })
        .fold(0.0, f64::max)
}

impl PotentialSpec {
    pub fn example5(gamma: f64, amplitude: f64) -> Self {
        PotentialSpec::Example5 { gamma, amplitude, terms: None, seed: DEFAULT_SEED }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Potential(m));
        match self {
            PotentialSpec::Example4 { s, .. } if !(*s > 0.0) => bad(format!("decay parameter s = {s} must be > 0")),
            PotentialSpec::Example5 { gamma, .. } if !(*gamma >= 0.0) => bad(format!("decay exponent {gamma} must be >= 0")),
            PotentialSpec::Well { depth, width } if !(*depth < 0.0 && *width > 0.0) => {
                bad(format!("well needs depth < 0 and width > 0 (got {depth}, {width})"))
            }
            _ => Ok(()),
        }
    }

    /// The periodic profile `W` used by an `Example5` spec on this grid.
    pub fn profile_terms(&self, grid: &GridSpec) -> Option<Vec<FourierTerm>> {
        match self {
            PotentialSpec::Example5 { terms: Some(t), .. } => Some(t.clone()),
            PotentialSpec::Example5 { terms: None, seed, .. } => Some(random_terms(grid.dim(), grid.beta(), *seed)),
            _ => None,
        }
    }
}

/// Samples of `W` that repeat exactly from one β-cell to the next.
fn periodic_samples(grid: &GridSpec, terms: &[FourierTerm]) -> Result<Vec<f64>> {
    let (n, m) = (grid.n(), grid.steps());
    if n % m != 0 {
        return Err(Error::Potential(format!(
            "a β-periodic profile needs the box length 2L = {} to be a multiple of β = {}",
            2.0 * grid.half_width(),
            grid.beta()
        )));
    }
    for t in terms {
        if t.k.len() != grid.dim() {
            return Err(Error::Potential(format!("wave vector {:?} does not match d = {}", t.k, grid.dim())));
        }
    }
    let h = grid.spacing();
    let origin = (-grid.half_width()).rem_euclid(grid.beta());
    let cell_len = m.pow(grid.dim() as u32);
    // one cell of values, indexed by the per-axis residues mod m
    let cell: Vec<f64> = (0..cell_len)
        .map(|c| {
            let mut x = [0.0; MAX_DIM];
            let mut rest = c;
            for axis in (0..grid.dim()).rev() {
                x[axis] = origin + (rest % m) as f64 * h;
                rest /= m;
            }
            eval_terms(terms, &x[..grid.dim()], grid.beta())
        })
        .collect();
    Ok((0..grid.len())
        .map(|i| {
            let c = (0..grid.dim()).fold(0, |acc, axis| acc * m + grid.axis_index(i, axis) % m);
            cell[c]
        })
        .collect())
}

pub fn build_potential(spec: &PotentialSpec, grid: &GridSpec) -> Result<Field> {
    spec.validate()?;
    match spec {
        PotentialSpec::Zero => Ok(Field::zeros(grid)),
        PotentialSpec::Example4 { s, a1, a2, a3 } => Ok(Field::from_real_fn(grid, |x| {
            let w = japanese(x);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let v1 = a1 * w.powf(-2.0 - s);
            let v2 = a2 * w.powf(-s) * (-x[0] * (-r2 / 2.0).exp());
            let v3 = a3 * w.powf(-s) * 0.5 * (1.0 + (-r2).exp());
            v1 + v2 + v3
        })),
        PotentialSpec::Example5 { gamma, amplitude, .. } => {
            let terms = spec.profile_terms(grid).expect("example 5 has a profile");
            let w = periodic_samples(grid, &terms)?;
            let values: Vec<f64> =
                (0..grid.len()).map(|i| amplitude * japanese(&grid.point(i)[..grid.dim()]).powf(-gamma) * w[i]).collect();
            Field::from_real(grid, &values)
        }
        PotentialSpec::Well { depth, width } => Ok(Field::from_real_fn(grid, |x| {
            if x.iter().all(|v| v.abs() <= width / 2.0) {
                *depth
            } else {
                0.0
            }
        })),
        PotentialSpec::Custom { path } => {
            let field = read_field_binary(&mut BufReader::new(File::open(path)?))?;
            if field.grid() != grid {
                return Err(Error::Potential(format!("{} was sampled on a different grid", path.display())));
            }
            let imag = field.max_abs_imag();
            if imag > crate::operators::POTENTIAL_IMAG_TOL {
                return Err(Error::ComplexPotential(imag));
            }
            Ok(field.map(|z| z.re.into()))
        }
    }
}

/// Warnings when a potential is not small outside the interior region.
pub fn boundary_warnings(spec: &PotentialSpec, v: &Field) -> Vec<String> {
    let g = v.grid();
    let mut out = Vec::new();
    if let PotentialSpec::Well { width, .. } = spec {
        if width / 2.0 > g.interior_radius() {
            out.push(format!("well half-width {} exceeds the interior radius {}", width / 2.0, g.interior_radius()));
        }
    }
    let sup = v.sup_norm();
    let outside = (0..g.len()).filter(|&i| !g.is_interior(i)).map(|i| v.values()[i].norm()).fold(0.0, f64::max);
    if sup > 0.0 && outside > 1e-3 * sup {
        out.push(format!(
            "potential reaches {:.3e} ({:.1}% of its sup) outside |x_j| <= {}",
            outside,
            100.0 * outside / sup,
            g.interior_radius()
        ));
    }
    out
}

/// `x_jΔ_jV` for each axis and `x_jx_kΔ_jΔ_kV` for `j ≤ k`.
#[derive(Clone, Debug)]
pub struct DifferenceFields {
    pub first: Vec<(usize, Field)>,
    pub second: Vec<((usize, usize), Field)>,
}

pub fn difference_fields(v: &Field) -> DifferenceFields {
    let g = v.grid();
    let coord: Vec<Field> = (0..g.dim()).map(|j| Field::coordinate(g, j)).collect();
    let first = (0..g.dim()).map(|j| (j, coord[j].mul(&v.difference(j)))).collect();
    let mut second = Vec::new();
    for j in 0..g.dim() {
        for k in j..g.dim() {
            let f = coord[j].mul(&coord[k]).mul(&v.difference(k).difference(j));
            second.push(((j, k), f));
        }
    }
    DifferenceFields { first, second }
}

/// Decay exponent `p` of `sup_{shell} |M| ≈ C⟨r⟩^{-p}` over β-wide radial shells
/// of the interior with `r ≥ 2β`, with the fit's R².
pub fn decay_fit(m: &Field) -> Option<(f64, f64)> {
    let g = m.grid();
    let beta = g.beta();
    let shells = (g.interior_radius() * (g.dim() as f64).sqrt() / beta).ceil() as usize + 1;
    let mut sup = vec![0.0f64; shells];
    let mut seen = vec![false; shells];
    for i in (0..g.len()).filter(|&i| g.is_interior(i)) {
        let p = g.point(i);
        let r = p[..g.dim()].iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = (r / beta) as usize;
        if s < shells {
            sup[s] = sup[s].max(m.values()[i].norm());
            seen[s] = true;
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for s in 2..shells {
        // only shells entirely inside the interior cube
        let outer = (s + 1) as f64 * beta;
        if seen[s] && sup[s] > 0.0 && outer <= g.interior_radius() {
            let r = (s as f64 + 0.5) * beta;
            xs.push((1.0 + r * r).sqrt().ln());
            ys.push(sup[s].ln());
        }
    }
    let fit = fit_line(&xs, &ys)?;
    Some((-fit.slope, fit.r_squared))
}

/// Singular values of `M(H₀+1)^{-1}`, descending.
pub fn relative_singular_values(m: &Field, cap: usize) -> Result<Vec<f64>> {
    let g = m.grid();
    let resolvent = crate::operators::OperatorHandle::multiplier(
        g,
        crate::grid::symbol_from_fn(g, |xi| 1.0 / (1.0 + 0.5 * xi.iter().map(|v| v * v).sum::<f64>())),
        "(H0+1)^-1",
    )
    .to_dense_with_cap(cap)?;
    let vals = m.real_parts();
    let prod = Mat::from_fn(g.len(), g.len(), |i, j| vals[i] * resolvent[(i, j)].re);
    let mut sv = linalg::real_singular_values(&prod)?;
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub const DEFAULT_SV_COUNT: usize = 32;
pub const COMPACT_SLOPE: f64 = -0.2;
pub const COMPACT_R2: f64 = 0.9;
pub const MIN_DECAY: f64 = 1e-6;
pub const BOUNDED_TOLERANCE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionRow {
    pub quantity: String,
    pub sup_norm: f64,
    pub decay_exponent: Option<f64>,
    pub decay_r_squared: Option<f64>,
    /// `σ_max(M(H₀+1)^{-1})` on the grid and on the grid with `L` doubled.
    pub relative_bound: f64,
    pub relative_bound_doubled: f64,
    /// Power-law fit `σ_k ≈ C k^{slope}` of the leading singular values.
    pub sv_slope: Option<f64>,
    pub sv_r_squared: Option<f64>,
    pub compact_proxy: bool,
    pub bounded_proxy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub proxy_note: String,
    pub singular_values_fitted: usize,
    pub rows: Vec<AssumptionRow>,
}

impl AssumptionReport {
    pub fn row(&self, quantity: &str) -> Option<&AssumptionRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }
}

fn labelled_fields(v: &Field) -> Vec<(String, Field)> {
    let diffs = difference_fields(v);
    let mut out = vec![("V".to_string(), v.clone())];
    for (j, f) in diffs.first {
        out.push((format!("x{0}*D{0}(V)", j + 1), f));
    }
    for ((j, k), f) in diffs.second {
        out.push((format!("x{}*x{}*D{}(D{}(V))", j + 1, k + 1, j + 1, k + 1), f));
    }
    out
}

fn power_law(sv: &[f64], count: usize) -> Option<(f64, f64)> {
    let lead: Vec<f64> = sv.iter().take(count).copied().collect();
    if lead.len() < 3 || lead.iter().any(|&s| s <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = (1..=lead.len()).map(|k| (k as f64).ln()).collect();
    let ys: Vec<f64> = lead.iter().map(|s| s.ln()).collect();
    fit_line(&xs, &ys).map(|f| (f.slope, f.r_squared))
}

/// Proxy report for the hypotheses on `V` (labelled as proxies: compactness
/// cannot be certified on a finite grid).
pub fn assumption_report(spec: &PotentialSpec, grid: &GridSpec, cap: usize) -> Result<AssumptionReport> {
    let doubled = grid.with_half_width(2.0 * grid.half_width())?;
    let here = labelled_fields(&build_potential(spec, grid)?);
    let there = labelled_fields(&build_potential(spec, &doubled)?);
    let rows = here
        .par_iter()
        .zip(there.par_iter())
        .map(|((label, m), (_, m2))| {
            let sup = m.sup_norm();
            if sup == 0.0 {
                return Ok(AssumptionRow {
                    quantity: label.clone(),
                    sup_norm: 0.0,
                    decay_exponent: None,
                    decay_r_squared: None,
                    relative_bound: 0.0,
                    relative_bound_doubled: m2.sup_norm(),
                    sv_slope: None,
                    sv_r_squared: None,
                    compact_proxy: m2.sup_norm() == 0.0,
                    bounded_proxy: m2.sup_norm() == 0.0,
                });
            }
            let sv = relative_singular_values(m, cap)?;
            let sv2 = relative_singular_values(m2, cap)?;
            let decay = decay_fit(m);
            let law = power_law(&sv, DEFAULT_SV_COUNT);
            let (top, top2) = (sv[0], sv2[0]);
            let compact = decay.is_some_and(|(p, _)| p > MIN_DECAY)
                && law.is_some_and(|(slope, r2)| slope < COMPACT_SLOPE && r2 >= COMPACT_R2);
            let bounded = top.is_finite() && (top2 - top).abs() <= BOUNDED_TOLERANCE * top;
            Ok(AssumptionRow {
                quantity: label.clone(),
                sup_norm: sup,
                decay_exponent: decay.map(|d| d.0),
                decay_r_squared: decay.map(|d| d.1),
                relative_bound: top,
                relative_bound_doubled: top2,
                sv_slope: law.map(|l| l.0),
                sv_r_squared: law.map(|l| l.1),
                compact_proxy: compact,
                bounded_proxy: bounded,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AssumptionReport {
        proxy_note: "numerical proxies: singular-value decay of M(H0+1)^-1 and stability under L -> 2L".into(),
        singular_values_fitted: DEFAULT_SV_COUNT,
        rows,
    })
}

pub fn assumption_report_default(spec: &PotentialSpec, grid: &GridSpec) -> Result<AssumptionReport> {
    assumption_report(spec, grid, DEFAULT_DENSE_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn g1() -> GridSpec {
        make_grid(1, 8.0, 128, 1.0).unwrap()
    }

    #[test]
    fn example5_cosine_at_origin() {
        let g = g1();
        let spec = PotentialSpec::Example5 {
            gamma: 1.0,
            amplitude: 1.0,
            terms: Some(vec![FourierTerm { k: vec![1], cos: 1.0, sin: 0.0 }]),
            seed: 42,
        };
        let v = build_potential(&spec, &g).unwrap();
        let zero = g.n() / 2;
        assert!((v.values()[zero].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn example5_profile_is_exactly_periodic() {
        let g = g1();
        let spec = PotentialSpec::example5(2.0, 0.5);
        let v = build_potential(&spec, &g).unwrap();
        let w: Vec<f64> = (0..g.len()).map(|i| v.values()[i].re / (0.5 * japanese(&g.point(i)[..1]).powf(-2.0))).collect();
        let raw = periodic_samples(&g, &spec.profile_terms(&g).unwrap()).unwrap();
        for i in 0..g.len() {
            assert_eq!(raw[i].to_bits(), raw[g.offset(i, 0, g.steps() as isize)].to_bits());
            assert!((w[i] - raw[i]).abs() < 1e-12);
        }
        let sup = raw.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(sup <= 1.0 + 1e-9 && sup > 0.7, "{sup}");
    }

    #[test]
    fn example5_needs_aligned_cells() {
        let g = make_grid(1, 4.25, 136, 1.0).unwrap();
        assert!(matches!(build_potential(&PotentialSpec::example5(1.0, 1.0), &g), Err(Error::Potential(_))));
    }

    #[test]
    fn well_samples_indicator() {
        let g = g1();
        let v = build_potential(&PotentialSpec::Well { depth: -1.0, width: 1.0 }, &g).unwrap();
        for i in 0..g.len() {
            let x = g.point(i)[0];
            let expect = if x.abs() <= 0.5 { -1.0 } else { 0.0 };
            assert_eq!(v.values()[i].re, expect);
        }
        assert!(boundary_warnings(&PotentialSpec::Well { depth: -1.0, width: 1.0 }, &v).is_empty());
        let wide = PotentialSpec::Well { depth: -1.0, width: 15.0 };
        assert!(!boundary_warnings(&wide, &build_potential(&wide, &g).unwrap()).is_empty());
    }

    #[test]
    fn difference_fields_examples() {
        let g = g1();
        let c = difference_fields(&Field::from_real_fn(&g, |_| 2.5));
        assert!(c.first.iter().all(|(_, f)| f.sup_norm() == 0.0));
        assert!(c.second.iter().all(|(_, f)| f.sup_norm() == 0.0));
        let lin = difference_fields(&Field::coordinate(&g, 0));
        for i in (0..g.len()).filter(|&i| g.is_interior(i)) {
            let x = g.point(i)[0];
            assert!((lin.first[0].1.values()[i].re - x).abs() < 1e-12);
            assert!(lin.second[0].1.values()[i].norm() < 1e-12);
        }
    }

    #[test]
    fn zero_potential_report() {
        let g = make_grid(1, 4.0, 32, 1.0).unwrap();
        let r = assumption_report_default(&PotentialSpec::Zero, &g).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.sup_norm == 0.0 && row.compact_proxy && row.bounded_proxy));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = PotentialSpec::Example4 { s: 0.5, a1: 1.0, a2: -0.5, a3: 0.25 };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<PotentialSpec>(&text).unwrap(), spec);
        let parsed: PotentialSpec = serde_json::from_str(r#"{"kind":"example5","gamma":1,"amplitude":0.5}"#).unwrap();
        assert_eq!(parsed, PotentialSpec::example5(1.0, 0.5));
    }
}
