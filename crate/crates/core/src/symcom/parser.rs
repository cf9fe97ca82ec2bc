//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! primary := number | symbol | symbol '(' expr ')' | '(' expr ')' | '[' expr ',' expr ']'
//! ```
//!
//! Symbols: `T1`, `T1adj`, `x1`, `D1` (operator) or `D1(f)` (coefficient),
//! `S1(f)`, `S1adj(f)`, `Q1`, `beta`, `i`; any other identifier names a
//! function. Numbers are decimal rationals, optionally suffixed with `i`.
//! Sub-expressions made only of scalars are folded while parsing.

use num_rational::Rational64;
use num_traits::Zero;

use super::expr::{CoeffExpr, OpExpr, MAX_AXES};
use super::scalar::{Gauss, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Gauss),
    Ident(String),
    Sym(char),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(t) = lx.next()? {
            out.push(t);
        }
        Ok(out)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += self.peek().unwrap().len_utf8();
        }
        let start = self.pos;
        let Some(c) = self.peek() else { return Ok(None) };
        if c.is_ascii_digit() {
            return self.number(start).map(Some);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = self.src[start..].find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(self.src.len() - start);
            self.pos += len;
            return Ok(Some((start, Tok::Ident(self.src[start..self.pos].to_string()))));
        }
        if "+-*/^()[],".contains(c) {
            self.pos += 1;
            return Ok(Some((start, Tok::Sym(c))));
        }
        Err(Error::Syntax { pos: start, msg: format!("unexpected character `{c}`") })
    }

    fn number(&mut self, start: usize) -> Result<(usize, Tok)> {
        let digits = |s: &str| s.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(s.len());
        let int_len = digits(&self.src[start..]);
        self.pos += int_len;
        let mut text = self.src[start..self.pos].to_string();
        let mut scale = 0u32;
        if self.peek() == Some('.') {
            self.pos += 1;
            let frac_len = digits(&self.src[self.pos..]);
            text.push_str(&self.src[self.pos..self.pos + frac_len]);
            self.pos += frac_len;
            scale = frac_len as u32;
        }
        let overflow = || Error::Syntax { pos: start, msg: "number too large".into() };
        let numer: i64 = text.parse().map_err(|_| overflow())?;
        let denom = 10i64.checked_pow(scale).ok_or_else(overflow)?;
        let value = Rational64::new(numer, denom);
        let rest = &self.src[self.pos..];
        let imaginary = rest.starts_with('i') && !rest[1..].starts_with(|ch: char| ch.is_ascii_alphanumeric() || ch == '_');
        if imaginary {
            self.pos += 1;
            return Ok((start, Tok::Num(Gauss::new(Rational64::zero(), value))));
        }
        Ok((start, Tok::Num(Gauss::new(value, Rational64::zero()))))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { pos, msg: msg.into() }
}

fn fold(a: OpExpr, b: OpExpr, op: char) -> std::result::Result<OpExpr, String> {
    if let (OpExpr::Scalar(x), OpExpr::Scalar(y)) = (&a, &b) {
        let v = match op {
            '+' => x + y,
            '-' => x + &(-y.clone()),
            '*' => x * y,
            '/' => x * &y.inverse().ok_or("division by a scalar with several terms or zero")?,
            _ => unreachable!(),
        };
        return Ok(OpExpr::Scalar(v));
    }
    Ok(match op {
        '+' => OpExpr::Add(Box::new(a), Box::new(b)),
        '-' => OpExpr::Sub(Box::new(a), Box::new(b)),
        '*' => OpExpr::Mul(Box::new(a), Box::new(b)),
        '/' => match &b {
            OpExpr::Scalar(s) if s.inverse().is_some() => OpExpr::Div(Box::new(a), Box::new(b)),
            OpExpr::Scalar(_) => return Err("division by a scalar with several terms or zero".into()),
            _ => return Err("division is only defined by scalars".into()),
        },
        _ => unreachable!(),
    })
}

/// Splits `T12adj` style symbols into (letter, axis digits, suffix).
fn split_symbol(name: &str) -> Option<(char, &str, &str)> {
    let mut chars = name.chars();
    let head = chars.next()?;
    if !"TxDQS".contains(head) {
        return None;
    }
    let rest = &name[1..];
    let n = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
    if n == 0 {
        return None;
    }
    Some((head, &rest[..n], &rest[n..]))
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<OpExpr> {
        let mut acc = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Sym(c @ ('+' | '-'))) => *c,
                _ => return Ok(acc),
            };
            let pos = self.pos();
            self.at += 1;
            let rhs = self.term()?;
            acc = fold(acc, rhs, op).map_err(|m| syntax(pos, m))?;
        }
    }

    fn term(&mut self) -> Result<OpExpr> {
        let mut acc = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Sym(c @ ('*' | '/'))) => *c,
                _ => return Ok(acc),
            };
            let pos = self.pos();
            self.at += 1;
            let rhs = self.unary()?;
            acc = fold(acc, rhs, op).map_err(|m| syntax(pos, m))?;
        }
    }

    fn unary(&mut self) -> Result<OpExpr> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                OpExpr::Scalar(s) => OpExpr::Scalar(-s),
                e => OpExpr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = self.eat('(');
        let neg = self.eat('-');
        let pos = self.pos();
        let k = match self.peek() {
            Some(Tok::Num(g)) if g.im.is_zero() && g.re.is_integer() => *g.re.numer(),
            _ => return Err(syntax(pos, "expected an integer exponent")),
        };
        self.at += 1;
        if paren {
            self.expect(')')?;
        }
        let k = i32::try_from(k).map_err(|_| syntax(pos, "exponent too large"))?;
        Ok(if neg { -k } else { k })
    }

    fn power(&mut self) -> Result<OpExpr> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let k = self.exponent()?;
        match base {
            OpExpr::Scalar(s) => {
                let unit = if k < 0 { s.inverse().ok_or_else(|| syntax(pos, "cannot invert this scalar"))? } else { s };
                let mut acc = Scalar::one();
                for _ in 0..k.unsigned_abs() {
                    acc = &acc * &unit;
                }
                Ok(OpExpr::Scalar(acc))
            }
            e if k >= 1 => {
                let mut acc = e.clone();
                for _ in 1..k {
                    acc = OpExpr::mul(acc, e.clone());
                }
                Ok(acc)
            }
            _ => Err(syntax(pos, "operators only take positive integer powers")),
        }
    }

    fn primary(&mut self) -> Result<OpExpr> {
        let pos = self.pos();
        let tok = self.peek().cloned().ok_or_else(|| syntax(pos, "unexpected end of input"))?;
        self.at += 1;
        match tok {
            Tok::Num(g) => Ok(OpExpr::Scalar(Scalar::constant(g))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Sym('[') => {
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(']')?;
                Ok(OpExpr::commutator(a, b))
            }
            Tok::Sym(c) => Err(syntax(pos, format!("unexpected `{c}`"))),
            Tok::Ident(name) => self.symbol(pos, &name),
        }
    }

    fn argument(&mut self) -> Result<OpExpr> {
        self.expect('(')?;
        let pos = self.pos();
        let e = self.expr()?;
        self.expect(')')?;
        if !e.is_shift_free() {
            return Err(syntax(pos, "argument must be a multiplication operator"));
        }
        Ok(e)
    }

    fn symbol(&mut self, pos: usize, name: &str) -> Result<OpExpr> {
        match name {
            "beta" => return Ok(OpExpr::Scalar(Scalar::beta_power(1))),
            "i" => return Ok(OpExpr::Scalar(Scalar::i())),
            _ => {}
        }
        let Some((head, digits, suffix)) = split_symbol(name) else {
            return Ok(OpExpr::fun(name));
        };
        let axis: usize = digits.parse().map_err(|_| Error::UnknownSymbol(name.into()))?;
        if axis == 0 || axis > MAX_AXES {
            return Err(Error::UnknownSymbol(name.into()));
        }
        let axis = axis - 1;
        let called = self.peek() == Some(&Tok::Sym('('));
        match (head, suffix, called) {
            ('T', "", _) => Ok(OpExpr::shift(axis, false)),
            ('T', "adj", _) => Ok(OpExpr::shift(axis, true)),
            ('x', "", _) => Ok(OpExpr::coord(axis)),
            ('Q', "", _) => Ok(OpExpr::QOp(axis)),
            ('D', "", false) => Ok(OpExpr::DiffOp(axis)),
            ('D', "", true) => Ok(OpExpr::Mult(CoeffExpr::Diff(axis, Box::new(self.argument()?)))),
            ('S', "" | "adj", true) => {
                let arg = Box::new(self.argument()?);
                Ok(OpExpr::Mult(CoeffExpr::Shift { axis, adjoint: suffix == "adj", arg }))
            }
            ('S', "" | "adj", false) => Err(syntax(pos, format!("`{name}` needs an argument"))),
            _ => Err(Error::UnknownSymbol(name.into())),
        }
    }
}

pub fn parse(text: &str) -> Result<OpExpr> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, at: 0, end: text.len() };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_of_shift_and_potential() {
        let e = parse("[T1, V]").unwrap();
        assert_eq!(e, OpExpr::commutator(OpExpr::shift(0, false), OpExpr::fun("V")));
    }

    #[test]
    fn coordinate_times_shift() {
        assert_eq!(parse("x1*T1").unwrap(), OpExpr::mul(OpExpr::coord(0), OpExpr::shift(0, false)));
    }

    #[test]
    fn complex_rationals_fold() {
        let e = parse("(1/(2i)) * (T1 - T1adj)").unwrap();
        let half_over_i = Scalar::constant(Gauss::new(Rational64::zero(), Rational64::new(-1, 2)));
        let diff = OpExpr::sub(OpExpr::shift(0, false), OpExpr::shift(0, true));
        assert_eq!(e, OpExpr::mul(OpExpr::Scalar(half_over_i), diff));
        assert_eq!(parse("beta^(-2) * 4").unwrap(), OpExpr::Scalar(Scalar::monomial(Gauss::int(4), -2)));
        assert_eq!(parse("0.25").unwrap(), OpExpr::Scalar(Scalar::constant(Gauss::ratio(1, 4))));
    }

    #[test]
    fn coefficient_functions() {
        let e = parse("D1(x1*V)").unwrap();
        let inner = OpExpr::mul(OpExpr::coord(0), OpExpr::fun("V"));
        assert_eq!(e, OpExpr::Mult(CoeffExpr::Diff(0, Box::new(inner))));
        assert_eq!(parse("D2").unwrap(), OpExpr::DiffOp(1));
        assert!(matches!(parse("D1(T1)"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("T1 + * V") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("[T1, V"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("T7"), Err(Error::UnknownSymbol(_))));
        assert!(matches!(parse("x1adj"), Err(Error::UnknownSymbol(_))));
        assert!(matches!(parse("V / x1"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("T1 $"), Err(Error::Syntax { pos: 3, .. })));
    }

    #[test]
    fn printer_round_trip() {
        for text in [
            "[T1, V]",
            "x1*T1adj - 3/4*beta^2*D1(S1adj(x1*V))*T1",
            "(1/(2*i*beta))*(x1*T1 - x1*T1adj) + (1/(4*i))*(T1 + T1adj)",
            "-[[V, x1*T1], x2*T2] / (2*beta)",
            "(1 - 2*beta + i)*Q1*D1*W",
            "T1^3 - beta^(-1)",
        ] {
            let e = parse(text).unwrap();
            assert_eq!(parse(&e.to_text()).unwrap(), e, "{text} -> {}", e.to_text());
        }
    }
}
