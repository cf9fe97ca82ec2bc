//! Symbolic algebra of multiplication operators and lattice shifts.
//!
//! Expressions are parsed from text, normalized to `Σ c · M(f) · T^w` with all
//! multiplications to the left of the shifts, compared structurally, and
//! evaluated as dense matrices for numeric cross-checks.

mod eval;
mod expr;
mod normal;
mod parser;
mod scalar;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use eval::{compose, numeric_eval, Bindings};
pub use expr::{CoeffExpr, OpExpr, MAX_AXES};
pub use normal::{equal, normalize, Factor, Monomial, NormalForm, Poly, ShiftWord};
pub use parser::parse;
pub use scalar::{Gauss, Scalar};

use crate::error::{Error, Result};
use crate::grid::{make_grid, Field, GridSpec};
use crate::linalg::{self, CMat};

/// Relative Frobenius tolerance of the numeric cross-check.
pub const CROSS_CHECK_TOL: f64 = 1e-10;

/// A claimed operator identity `lhs = rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Identity {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
}

impl Identity {
    pub fn new(name: &str, lhs: &str, rhs: &str) -> Self {
        Self { name: name.into(), lhs: lhs.into(), rhs: rhs.into() }
    }

    pub fn sides(&self) -> Result<(OpExpr, OpExpr)> {
        Ok((parse(&self.lhs)?, parse(&self.rhs)?))
    }

    pub fn holds(&self) -> Result<bool> {
        let (l, r) = self.sides()?;
        equal(&l, &r)
    }
}

/// A named group of identities that pass or fail together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorpusEntry {
    pub name: String,
    pub cases: Vec<Identity>,
}

fn entry(name: &str, cases: &[(&str, &str)]) -> CorpusEntry {
    let cases = cases
        .iter()
        .enumerate()
        .map(|(k, (l, r))| {
            let n = if cases.len() == 1 { name.to_string() } else { format!("{name}#{}", k + 1) };
            Identity::new(&n, l, r)
        })
        .collect();
    CorpusEntry { name: name.into(), cases }
}

/// The commutator identities behind the Mourre estimate for `A`.
pub fn golden_corpus() -> Vec<CorpusEntry> {
    vec![
        entry(
            "conjugate-operator-expansion",
            &[(
                "(1/2)*(Q1*x1 + x1*Q1)",
                "(1/(2*i*beta))*(x1*T1 - x1*T1adj) + (1/(4*i))*(T1 + T1adj)",
            )],
        ),
        entry("shift-potential", &[("[T1, V]", "beta*D1(V)*T1")]),
        entry("weighted-shift-potential", &[("[x1*T1, V]", "beta*x1*D1(V)*T1")]),
        entry(
            "weighted-adjoint-shift-potential",
            &[("[x1*T1adj, V]", "-beta*T1adj*(x1*D1(V)) - beta^2*T1adj*D1(V)")],
        ),
        entry(
            "double-commutator",
            &[
                ("[[V, x1*T1], x2*T2]", "beta^2*x1*x2*D1(D2(V))*T1*T2"),
                (
                    "[[V, x1*T1], x1*T1]",
                    "beta^2*x1*x1*D1(D1(V))*T1*T1 + beta^2*T1*(x1*D1(V))*T1 \
                     - beta^3*T1*D1(V)*T1 - beta^2*x1*D1(V)*T1*T1",
                ),
            ],
        ),
    ]
}

/// Variants with the coefficients and signs exactly as often written by hand;
/// each one is false and must be rejected.
pub fn negative_controls() -> Vec<CorpusEntry> {
    vec![
        entry(
            "expansion-with-quarter-coefficient",
            &[(
                "(1/2)*(Q1*x1 + x1*Q1)",
                "(1/(4*i*beta))*(x1*T1 - x1*T1adj) + (1/(4*i))*(T1 + T1adj)",
            )],
        ),
        entry(
            "adjoint-shift-with-plus-signs",
            &[("[x1*T1adj, V]", "beta*T1adj*(x1*D1(V)) + beta*T1adj*D1(V)")],
        ),
        entry(
            "double-commutator-single-beta",
            &[(
                "[[V, x1*T1], x1*T1]",
                "beta^2*x1*x1*D1(D1(V))*T1*T1 + beta*T1*(x1*D1(V))*T1 \
                 - beta*T1*D1(V)*T1 - beta*x1*D1(V)*T1*T1",
            )],
        ),
        entry("shift-potential-wrong-sign", &[("[T1, V]", "-beta*D1(V)*T1")]),
    ]
}

/// Matrix comparison of one identity on a grid, restricted to points at least
/// `(depth + 1)β` from the periodic seam along each axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub symbolic: bool,
    /// `numeric_eval(normalize(side))` against the composed operator matrices.
    pub engine_lhs: f64,
    pub engine_rhs: f64,
    /// Composed `lhs` against composed `rhs`.
    pub sides: f64,
    pub kept_points: usize,
}

impl CrossCheck {
    /// The normal forms reproduce the operator matrices.
    pub fn engine_agrees(&self) -> bool {
        self.engine_lhs <= CROSS_CHECK_TOL && self.engine_rhs <= CROSS_CHECK_TOL
    }

    pub fn passes(&self) -> bool {
        self.symbolic && self.engine_agrees() && self.sides <= CROSS_CHECK_TOL
    }
}

/// Default grid for numeric checks of identities reaching up to axis `d`.
/// `β = 1/2` so that different powers of `β` stay distinguishable.
pub fn check_grid(d: usize) -> Result<GridSpec> {
    match d {
        1 => make_grid(1, 8.0, 128, 0.5),
        2 => make_grid(2, 2.0, 32, 0.5),
        _ => Err(Error::Algebra(format!("numeric checks support d <= 2, identity needs d = {d}"))),
    }
}

/// Independent uniform `[-1, 1]` samples for every function name.
pub fn random_bindings(grid: &GridSpec, names: &[String], seed: u64) -> Bindings {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    names
        .iter()
        .map(|n| {
            let values: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            (n.clone(), Field::from_real(grid, &values).expect("sized to the grid"))
        })
        .collect()
}

fn seam_mask(grid: &GridSpec, depth: [usize; MAX_AXES]) -> Vec<bool> {
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            (0..grid.dim()).all(|j| x[j].abs() <= grid.half_width() - (depth[j] + 1) as f64 * grid.beta())
        })
        .collect()
}

pub fn cross_check(id: &Identity, grid: &GridSpec, bindings: &Bindings) -> Result<CrossCheck> {
    let (l, r) = id.sides()?;
    let (dl, dr) = (l.shift_depth(), r.shift_depth());
    let depth = std::array::from_fn(|k| dl[k].max(dr[k]));
    let keep = seam_mask(grid, depth);
    let kept_points = keep.iter().filter(|&&k| k).count();
    if kept_points == 0 {
        return Err(Error::Algebra(format!("grid too small to check `{}` away from the seam", id.name)));
    }
    let cut = |m: CMat| linalg::compress(&m, &keep);
    let (cl, cr) = (cut(compose(&l, grid, bindings)?), cut(compose(&r, grid, bindings)?));
    let (nl, nr) = (normalize(&l)?, normalize(&r)?);
    let el = linalg::relative_difference(&cut(numeric_eval(&nl, grid, bindings)?), &cl);
    let er = linalg::relative_difference(&cut(numeric_eval(&nr, grid, bindings)?), &cr);
    Ok(CrossCheck {
        name: id.name.clone(),
        symbolic: nl == nr,
        engine_lhs: el,
        engine_rhs: er,
        sides: linalg::relative_difference(&cl, &cr),
        kept_points,
    })
}

/// Cross-check on the default grid with random bindings.
pub fn cross_check_default(id: &Identity, seed: u64) -> Result<CrossCheck> {
    let (l, r) = id.sides()?;
    let d = l.max_axis().max(r.max_axis()).map_or(1, |a| a + 1);
    let grid = check_grid(d)?;
    let mut names = l.functions();
    names.extend(r.functions());
    names.sort();
    names.dedup();
    cross_check(id, &grid, &random_bindings(&grid, &names, seed))
}

/// Reads a corpus from text: one `name: lhs = rhs` per line; `#` starts a
/// comment. Lines sharing a name form one entry.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>> {
    let mut out: Vec<CorpusEntry> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Syntax { pos: 0, msg: format!("corpus line {}: {msg}", lineno + 1) };
        let (name, body) = line.split_once(':').ok_or_else(|| bad("expected `name: lhs = rhs`"))?;
        let (lhs, rhs) = body.split_once('=').ok_or_else(|| bad("expected `lhs = rhs`"))?;
        let name = name.trim();
        let id = Identity::new(name, lhs.trim(), rhs.trim());
        match out.iter_mut().find(|e| e.name == name) {
            Some(e) => {
                let k = e.cases.len() + 1;
                e.cases.push(Identity { name: format!("{name}#{k}"), ..id });
            }
            None => out.push(CorpusEntry { name: name.into(), cases: vec![id] }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_identities_hold() {
        for e in golden_corpus() {
            for c in &e.cases {
                assert!(c.holds().unwrap(), "{} failed: {}", c.name, normalize(&OpExpr::sub(c.sides().unwrap().0, c.sides().unwrap().1)).unwrap());
            }
        }
    }

    #[test]
    fn negative_controls_fail() {
        for e in negative_controls() {
            for c in &e.cases {
                assert!(!c.holds().unwrap(), "{} unexpectedly holds", c.name);
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let nf = normalize(&parse("[T1, V]").unwrap()).unwrap();
        assert_eq!(nf.to_string(), "beta*D1(V)*T1");
        let nf = normalize(&parse("[x1*T1, V]").unwrap()).unwrap();
        assert_eq!(nf.to_string(), "beta*x1*D1(V)*T1");
        let nf = normalize(&parse("[x1*T1adj, V]").unwrap()).unwrap();
        assert_eq!(nf.to_string(), "-beta*x1*S1adj(D1(V))*T1adj");
        assert!(equal(&parse("T1*T1adj").unwrap(), &parse("1").unwrap()).unwrap());
        assert!(normalize(&parse("[V, W]").unwrap()).unwrap().is_zero());
    }

    #[test]
    fn differences_and_shifts_of_coefficients() {
        assert!(equal(&parse("D1(x1)").unwrap(), &parse("1").unwrap()).unwrap());
        assert!(equal(&parse("D1(D1(x1))").unwrap(), &parse("0").unwrap()).unwrap());
        assert!(equal(&parse("S1(V)").unwrap(), &parse("V + beta*D1(V)").unwrap()).unwrap());
        assert!(equal(&parse("S1adj(x1)").unwrap(), &parse("x1 - beta").unwrap()).unwrap());
        assert!(equal(&parse("S1(S1adj(V))").unwrap(), &parse("V").unwrap()).unwrap());
        assert!(equal(&parse("S1adj(S1(V))").unwrap(), &parse("V").unwrap()).unwrap());
        assert!(equal(&parse("T1adj*V*T1 - V").unwrap(), &parse("-beta*S1adj(D1(V))").unwrap()).unwrap());
        assert!(equal(&parse("D1*V").unwrap(), &parse("D1(V)*T1 + V*D1").unwrap()).unwrap());
        assert!(equal(&parse("D1(V*W)").unwrap(), &parse("D1(V)*W + S1(V)*D1(W)").unwrap()).unwrap());
    }

    #[test]
    fn printed_normal_forms_reparse() {
        for e in golden_corpus().iter().chain(&negative_controls()) {
            for c in &e.cases {
                for side in [&c.lhs, &c.rhs] {
                    let nf = normalize(&parse(side).unwrap()).unwrap();
                    let again = normalize(&parse(&nf.to_string()).unwrap()).unwrap();
                    assert_eq!(again, nf, "{side}");
                }
            }
        }
    }

    #[test]
    fn numeric_cross_check_separates_true_and_false() {
        for e in golden_corpus() {
            for c in &e.cases {
                let r = cross_check_default(c, 7).unwrap();
                assert!(r.passes(), "{r:?}");
            }
        }
        for e in negative_controls() {
            for c in &e.cases {
                let r = cross_check_default(c, 7).unwrap();
                assert!(r.engine_agrees() && !r.symbolic && r.sides > 1e-3, "{r:?}");
            }
        }
    }

    #[test]
    fn corpus_text_format() {
        let text = "# comment\nshift: [T1, V] = beta*D1(V)*T1\nshift: [T1adj, V] = -beta*S1adj(D1(V))*T1adj\nbad: T1 = T1adj\n";
        let corpus = parse_corpus(text).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus[0].cases.len(), 2);
        assert!(corpus[0].cases.iter().all(|c| c.holds().unwrap()));
        assert!(!corpus[1].cases[0].holds().unwrap());
        assert!(parse_corpus("no separator here").is_err());
    }
}
