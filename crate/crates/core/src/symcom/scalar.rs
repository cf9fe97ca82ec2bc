//! Exact scalars: Laurent polynomials in `β` with Gaussian-rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

/// `re + i·im` with rational parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gauss {
    pub re: Rational64,
    pub im: Rational64,
}

impl Gauss {
    pub fn new(re: Rational64, im: Rational64) -> Self {
        Self { re, im }
    }

    pub fn int(n: i64) -> Self {
        Self::new(Rational64::from_integer(n), Rational64::zero())
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Self::new(Rational64::new(p, q), Rational64::zero())
    }

    pub fn i() -> Self {
        Self::new(Rational64::zero(), Rational64::one())
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.re * self.re + self.im * self.im;
        if n.is_zero() {
            return None;
        }
        Some(Self::new(self.re / n, -self.im / n))
    }

    pub fn to_complex(&self) -> Complex64 {
        let f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
        Complex64::new(f(self.re), f(self.im))
    }

    /// True when the printed form needs a leading minus (real part negative,
    /// or purely imaginary with negative imaginary part).
    fn is_negative(&self) -> bool {
        if self.re.is_zero() {
            self.im.is_negative()
        } else {
            self.re.is_negative()
        }
    }
}

impl Add for Gauss {
    type Output = Gauss;
    fn add(self, o: Gauss) -> Gauss {
        Gauss::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Gauss {
    type Output = Gauss;
    fn sub(self, o: Gauss) -> Gauss {
        Gauss::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Gauss {
    type Output = Gauss;
    fn mul(self, o: Gauss) -> Gauss {
        Gauss::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}

impl Neg for Gauss {
    type Output = Gauss;
    fn neg(self) -> Gauss {
        Gauss::new(-self.re, -self.im)
    }
}

fn fmt_rational(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Gauss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(self.re)),
            (true, false) if self.im.is_one() => write!(f, "i"),
            (true, false) if (-self.im).is_one() => write!(f, "-i"),
            (true, false) => write!(f, "{}*i", fmt_rational(self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                let im = self.im.abs();
                if im.is_one() {
                    write!(f, "({} {} i)", fmt_rational(self.re), sign)
                } else {
                    write!(f, "({} {} {}*i)", fmt_rational(self.re), sign, fmt_rational(im))
                }
            }
        }
    }
}

/// `Σ_k c_k β^k` with nonzero `c_k`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar {
    terms: BTreeMap<i32, Gauss>,
}

impl Scalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Gauss::one())
    }

    pub fn constant(c: Gauss) -> Self {
        Self::monomial(c, 0)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Gauss::int(n))
    }

    pub fn i() -> Self {
        Self::constant(Gauss::i())
    }

    /// `c β^k`.
    pub fn monomial(c: Gauss, k: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(k, c);
        }
        Self { terms }
    }

    pub fn beta_power(k: i32) -> Self {
        Self::monomial(Gauss::one(), k)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Gauss)> + '_ {
        self.terms.iter().map(|(k, c)| (*k, *c))
    }

    /// Inverse of a single-term scalar.
    pub fn inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, c) = self.terms().next()?;
        Some(Self::monomial(c.inverse()?, -k))
    }

    pub fn eval(&self, beta: f64) -> Complex64 {
        self.terms().map(|(k, c)| c.to_complex() * beta.powi(k)).sum()
    }

    fn is_negative_leading(&self) -> bool {
        self.terms.len() == 1 && self.terms.values().next().is_some_and(|c| c.is_negative())
    }

    /// Splits off a sign so that `sign · magnitude = self` and the magnitude
    /// prints without a leading minus.
    pub fn sign_split(&self) -> (bool, Scalar) {
        if self.is_negative_leading() {
            (true, -self.clone())
        } else {
            (false, self.clone())
        }
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        let mut terms = self.terms.clone();
        for (k, c) in &o.terms {
            let e = terms.entry(*k).or_insert_with(Gauss::zero);
            *e = *e + *c;
            if e.is_zero() {
                terms.remove(k);
            }
        }
        Scalar { terms }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        let mut out = Scalar::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                out = &out + &Scalar::monomial(*c1 * *c2, k1 + k2);
            }
        }
        out
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect() }
    }
}

fn fmt_beta(k: i32) -> String {
    match k {
        1 => "beta".to_string(),
        k if k < 0 => format!("beta^({k})"),
        k => format!("beta^{k}"),
    }
}

fn fmt_term(k: i32, c: Gauss) -> String {
    match (k, c == Gauss::one()) {
        (0, _) => c.to_string(),
        (_, true) => fmt_beta(k),
        _ => format!("{}*{}", c, fmt_beta(k)),
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.terms.len() {
            0 => write!(f, "0"),
            1 => {
                let (k, c) = self.terms().next().unwrap();
                write!(f, "{}", fmt_term(k, c))
            }
            _ => {
                write!(f, "(")?;
                for (idx, (k, c)) in self.terms().enumerate() {
                    if idx > 0 {
                        if c.is_negative() {
                            write!(f, " - {}", fmt_term(k, -c))?;
                        } else {
                            write!(f, " + {}", fmt_term(k, c))?;
                        }
                    } else {
                        write!(f, "{}", fmt_term(k, c))?;
                    }
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let half_over_i = Scalar::constant(Gauss::ratio(1, 2)) * Scalar::i().inverse().as_ref().unwrap();
        assert_eq!(half_over_i, Scalar::constant(Gauss::new(Rational64::zero(), Rational64::new(-1, 2))));
        let b = Scalar::beta_power(1);
        let s = &b + &Scalar::int(-1);
        let sq = &s * &s;
        assert_eq!(sq.eval(2.0), Complex64::new(1.0, 0.0));
        assert!((&s + &(-s.clone())).is_zero());
        assert!(s.inverse().is_none());
    }

    #[test]
    fn display() {
        assert_eq!(Scalar::constant(Gauss::ratio(-3, 4)).to_string(), "-3/4");
        assert_eq!(Scalar::monomial(Gauss::ratio(1, 2), 2).to_string(), "1/2*beta^2");
        assert_eq!(Scalar::monomial(Gauss::i(), -1).to_string(), "i*beta^(-1)");
        let s = &Scalar::int(1) + &Scalar::monomial(Gauss::int(-2), 1);
        assert_eq!(s.to_string(), "(1 - 2*beta)");
    }

    impl Mul<&Scalar> for Scalar {
        type Output = Scalar;
        fn mul(self, o: &Scalar) -> Scalar {
            &self * o
        }
    }
}
