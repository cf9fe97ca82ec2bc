//! Normal forms `Σ scalar · M(monomial) · ShiftWord`.
//!
//! Coefficients are polynomials in coordinates and atoms `S*^b Δ^α f` (back
//! shifts `b`, differences `α`, per axis). Forward shifts of coefficients are
//! expanded with `T = 1 + βΔ` and `T x_j = x_j + β`. Backward shifts of `f` have
//! no finite Δ-expansion, so atoms stay back-shifted; within one coefficient
//! every atom of a function is lifted to the largest back shift present, via
//! `S*^{b'} g = (1 + βΔ)^{b-b'} S*^b g`, which makes the form unique.

use std::collections::BTreeMap;
use std::fmt;

use super::expr::{CoeffExpr, OpExpr, MAX_AXES};
use super::scalar::{Gauss, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Coord(usize),
    Fun { name: String, back: [u32; MAX_AXES], diffs: [u32; MAX_AXES] },
}

impl Factor {
    fn fun(name: &str) -> Self {
        Factor::Fun { name: name.to_string(), back: [0; MAX_AXES], diffs: [0; MAX_AXES] }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Coord(j) => write!(f, "x{}", j + 1),
            Factor::Fun { name, back, diffs } => {
                let mut inner = name.clone();
                for (axis, &k) in diffs.iter().enumerate().rev() {
                    for _ in 0..k {
                        inner = format!("D{}({inner})", axis + 1);
                    }
                }
                for (axis, &k) in back.iter().enumerate().rev() {
                    for _ in 0..k {
                        inner = format!("S{}adj({inner})", axis + 1);
                    }
                }
                write!(f, "{inner}")
            }
        }
    }
}

/// Sorted product of factors; empty means the constant 1.
pub type Monomial = Vec<Factor>;

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut m: Monomial = a.iter().chain(b).cloned().collect();
    m.sort();
    m
}

/// Polynomial in coefficient factors with scalar coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scalar(s: Scalar) -> Self {
        Self::term(Vec::new(), s)
    }

    pub fn term(m: Monomial, s: Scalar) -> Self {
        let mut p = Self::zero();
        p.add_term(m, s);
        p
    }

    fn factor(f: Factor) -> Self {
        Self::term(vec![f], Scalar::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    fn add_term(&mut self, m: Monomial, s: Scalar) {
        if s.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_default();
        *e = &*e + &s;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, s) in &o.terms {
            out.add_term(m.clone(), s.clone());
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(mono_mul(m1, m2), c1 * c2);
            }
        }
        out
    }

    /// Applies a multiplicative map factor by factor.
    fn map_factors(&self, f: impl Fn(&Factor) -> Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::scalar(c.clone());
            for factor in m {
                acc = acc.mul(&f(factor));
            }
            out = out.add(&acc);
        }
        out
    }

    /// `c(x) ↦ c(x + β e_j)`.
    pub fn shift_forward(&self, axis: usize) -> Poly {
        self.map_factors(|f| match f {
            Factor::Coord(k) if *k == axis => {
                Poly::factor(f.clone()).add(&Poly::scalar(Scalar::beta_power(1)))
            }
            Factor::Coord(_) => Poly::factor(f.clone()),
            Factor::Fun { name, back, diffs } if back[axis] > 0 => {
                let mut back = *back;
                back[axis] -= 1;
                Poly::factor(Factor::Fun { name: name.clone(), back, diffs: *diffs })
            }
            Factor::Fun { name, back, diffs } => {
                let mut d = *diffs;
                d[axis] += 1;
                let delta = Poly::term(vec![Factor::Fun { name: name.clone(), back: *back, diffs: d }], Scalar::beta_power(1));
                Poly::factor(f.clone()).add(&delta)
            }
        })
    }

    /// `c(x) ↦ c(x − β e_j)`.
    pub fn shift_backward(&self, axis: usize) -> Poly {
        self.map_factors(|f| match f {
            Factor::Coord(k) if *k == axis => {
                Poly::factor(f.clone()).add(&Poly::scalar(-Scalar::beta_power(1)))
            }
            Factor::Coord(_) => Poly::factor(f.clone()),
            Factor::Fun { name, back, diffs } => {
                let mut back = *back;
                back[axis] += 1;
                Poly::factor(Factor::Fun { name: name.clone(), back, diffs: *diffs })
            }
        })
    }

    /// `Δ_j c = (T_j c − c)/β`, computed by the Leibniz rule
    /// `Δ(fg) = (Δf) g + (T f)(Δg)` so no division is needed.
    pub fn difference(&self, axis: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            // Δ(f₁⋯f_n) = Σ_k (T f₁⋯T f_{k−1}) (Δf_k) (f_{k+1}⋯f_n)
            for k in 0..m.len() {
                let mut acc = Poly::scalar(c.clone());
                for (idx, factor) in m.iter().enumerate() {
                    let p = Poly::factor(factor.clone());
                    let piece = match idx.cmp(&k) {
                        std::cmp::Ordering::Less => p.shift_forward(axis),
                        std::cmp::Ordering::Equal => factor_difference(factor, axis),
                        std::cmp::Ordering::Greater => p,
                    };
                    acc = acc.mul(&piece);
                }
                out = out.add(&acc);
            }
        }
        out
    }

    /// Lifts every function atom to the largest back shift of its name and axis.
    pub fn canonical(&self) -> Poly {
        let mut top: BTreeMap<&str, [u32; MAX_AXES]> = BTreeMap::new();
        for m in self.terms.keys() {
            for f in m {
                if let Factor::Fun { name, back, .. } = f {
                    let e = top.entry(name.as_str()).or_insert([0; MAX_AXES]);
                    for a in 0..MAX_AXES {
                        e[a] = e[a].max(back[a]);
                    }
                }
            }
        }
        if top.values().all(|b| b.iter().all(|&x| x == 0)) {
            return self.clone();
        }
        self.map_factors(|f| match f {
            Factor::Fun { name, back, diffs } => {
                let target = top[name.as_str()];
                let mut p = Poly::factor(Factor::Fun { name: name.clone(), back: target, diffs: *diffs });
                // S*^{b'} g = (1 + βΔ)^{b−b'} S*^b g, expanded atom by atom
                for a in 0..MAX_AXES {
                    for _ in back[a]..target[a] {
                        let delta = p.map_factors(|g| factor_difference(g, a));
                        p = p.add(&delta.scale(&Scalar::beta_power(1)));
                    }
                }
                p
            }
            other => Poly::factor(other.clone()),
        })
    }
}

fn factor_difference(f: &Factor, axis: usize) -> Poly {
    match f {
        Factor::Coord(k) if *k == axis => Poly::scalar(Scalar::one()),
        Factor::Coord(_) => Poly::zero(),
        Factor::Fun { name, back, diffs } => {
            let mut d = *diffs;
            d[axis] += 1;
            Poly::factor(Factor::Fun { name: name.clone(), back: *back, diffs: d })
        }
    }
}

/// Per-axis exponents of `T_j` (negative for `T_j*`).
pub type ShiftWord = [i32; MAX_AXES];

/// `Σ scalar · M(monomial) · word`, keyed by `(word, monomial)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormalForm {
    terms: BTreeMap<(ShiftWord, Monomial), Scalar>,
}

impl NormalForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ShiftWord, &Monomial, &Scalar)> {
        self.terms.iter().map(|((w, m), s)| (w, m, s))
    }

    fn from_poly(p: Poly, word: ShiftWord) -> Self {
        let mut out = Self::zero();
        for (m, s) in p.terms {
            out.add_term(word, m, s);
        }
        out
    }

    fn shift(axis: usize, power: i32) -> Self {
        let mut w = [0; MAX_AXES];
        w[axis] = power;
        Self::from_poly(Poly::scalar(Scalar::one()), w)
    }

    fn scalar(s: Scalar) -> Self {
        Self::from_poly(Poly::scalar(s), [0; MAX_AXES])
    }

    fn add_term(&mut self, w: ShiftWord, m: Monomial, s: Scalar) {
        if s.is_zero() {
            return;
        }
        let key = (w, m);
        let e = self.terms.entry(key.clone()).or_default();
        *e = &*e + &s;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, o: &NormalForm) -> NormalForm {
        let mut out = self.clone();
        for ((w, m), s) in &o.terms {
            out.add_term(*w, m.clone(), s.clone());
        }
        out
    }

    pub fn neg(&self) -> NormalForm {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, s: &Scalar) -> NormalForm {
        let mut out = Self::zero();
        for ((w, m), c) in &self.terms {
            out.add_term(*w, m.clone(), c * s);
        }
        out
    }

    /// Groups terms by shift word.
    fn by_word(&self) -> BTreeMap<ShiftWord, Poly> {
        let mut out: BTreeMap<ShiftWord, Poly> = BTreeMap::new();
        for ((w, m), s) in &self.terms {
            out.entry(*w).or_default().add_term(m.clone(), s.clone());
        }
        out
    }

    /// `(M(a) W)(M(b) U) = M(a · W b) W U`.
    pub fn mul(&self, o: &NormalForm) -> NormalForm {
        let mut out = Self::zero();
        let right = o.by_word();
        for (w1, p1) in self.by_word() {
            for (w2, p2) in &right {
                let mut moved = p2.clone();
                for (axis, &e) in w1.iter().enumerate() {
                    for _ in 0..e.max(0) {
                        moved = moved.shift_forward(axis);
                    }
                    for _ in 0..(-e).max(0) {
                        moved = moved.shift_backward(axis);
                    }
                }
                let mut w = [0; MAX_AXES];
                for a in 0..MAX_AXES {
                    w[a] = w1[a] + w2[a];
                }
                out = out.add(&Self::from_poly(p1.mul(&moved), w));
            }
        }
        out
    }

    fn canonical(&self) -> NormalForm {
        let mut out = Self::zero();
        for (w, p) in self.by_word() {
            out = out.add(&Self::from_poly(p.canonical(), w));
        }
        out
    }

    /// The coefficient polynomial when the form has only the empty word.
    fn as_coefficient(&self) -> Option<Poly> {
        let words = self.by_word();
        match words.len() {
            0 => Some(Poly::zero()),
            1 => words.get(&[0; MAX_AXES]).cloned(),
            _ => None,
        }
    }

    /// The scalar when the form is a plain number.
    pub fn as_scalar(&self) -> Option<Scalar> {
        let p = self.as_coefficient()?;
        match p.terms.len() {
            0 => Some(Scalar::zero()),
            1 => p.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }
}

fn fmt_word(w: &ShiftWord) -> Vec<String> {
    let mut out = Vec::new();
    for (axis, &e) in w.iter().enumerate() {
        let sym = if e > 0 { format!("T{}", axis + 1) } else { format!("T{}adj", axis + 1) };
        for _ in 0..e.unsigned_abs() {
            out.push(sym.clone());
        }
    }
    out
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, ((w, m), s)) in self.terms.iter().enumerate() {
            let (negative, mag) = s.sign_split();
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() {
                parts.push(mag.to_string());
            }
            parts.extend(m.iter().map(|x| x.to_string()));
            parts.extend(fmt_word(w));
            if parts.is_empty() {
                parts.push("1".into());
            }
            let body = parts.join("*");
            match (idx, negative) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

fn normalize_raw(e: &OpExpr) -> Result<NormalForm> {
    Ok(match e {
        OpExpr::Scalar(s) => NormalForm::scalar(s.clone()),
        OpExpr::Mult(c) => NormalForm::from_poly(coefficient(c)?, [0; MAX_AXES]),
        OpExpr::ShiftOp { axis, adjoint } => NormalForm::shift(*axis, if *adjoint { -1 } else { 1 }),
        OpExpr::DiffOp(j) => {
            let inv_beta = Scalar::beta_power(-1);
            NormalForm::shift(*j, 1).add(&NormalForm::scalar(Scalar::int(-1))).scale(&inv_beta)
        }
        OpExpr::QOp(j) => {
            // 1/(2iβ) = −i/(2β)
            let c = Scalar::monomial(Gauss::new(0.into(), num_rational::Rational64::new(-1, 2)), -1);
            NormalForm::shift(*j, 1).add(&NormalForm::shift(*j, -1).neg()).scale(&c)
        }
        OpExpr::Add(a, b) => normalize_raw(a)?.add(&normalize_raw(b)?),
        OpExpr::Sub(a, b) => normalize_raw(a)?.add(&normalize_raw(b)?.neg()),
        OpExpr::Neg(a) => normalize_raw(a)?.neg(),
        OpExpr::Mul(a, b) => normalize_raw(a)?.mul(&normalize_raw(b)?),
        OpExpr::Div(a, b) => {
            let s = normalize_raw(b)?
                .as_scalar()
                .and_then(|s| s.inverse())
                .ok_or_else(|| Error::Algebra(format!("cannot divide by {b}")))?;
            normalize_raw(a)?.scale(&s)
        }
        OpExpr::Commutator(a, b) => {
            let (x, y) = (normalize_raw(a)?, normalize_raw(b)?);
            x.mul(&y).add(&y.mul(&x).neg())
        }
    })
}

fn coefficient(c: &CoeffExpr) -> Result<Poly> {
    let arg_poly = |e: &OpExpr| {
        normalize_raw(e)?.as_coefficient().ok_or_else(|| Error::Algebra(format!("{e} is not a multiplication operator")))
    };
    Ok(match c {
        CoeffExpr::Coord(j) => Poly::factor(Factor::Coord(*j)),
        CoeffExpr::Fun(name) => Poly::factor(Factor::fun(name)),
        CoeffExpr::Diff(j, e) => arg_poly(e)?.difference(*j),
        CoeffExpr::Shift { axis, adjoint: false, arg } => arg_poly(arg)?.shift_forward(*axis),
        CoeffExpr::Shift { axis, adjoint: true, arg } => arg_poly(arg)?.shift_backward(*axis),
    })
}

/// Canonical normal form of an expression.
pub fn normalize(e: &OpExpr) -> Result<NormalForm> {
    Ok(normalize_raw(e)?.canonical())
}

/// True when both sides have the same canonical normal form.
pub fn equal(a: &OpExpr, b: &OpExpr) -> Result<bool> {
    let diff = OpExpr::sub(a.clone(), b.clone());
    Ok(normalize(&diff)?.is_zero())
}
