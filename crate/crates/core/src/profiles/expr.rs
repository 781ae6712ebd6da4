//! Closed-form profile expressions in the single variable `x`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := unary ("^" factor)?
//! unary  := "-" unary | atom
//! atom   := number | "x" | "pi" | func "(" expr ")" | "(" expr ")"
//! func   := cos | sin | exp | abs
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and associates to
//! the right; the accepted language is exactly the one above.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    /// Byte offset into the source.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("zero raised to a negative power at x = {x}")]
    ZeroToNegativePower { x: f64 },
    #[error("non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Cos,
    Sin,
    Exp,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "cos" => Some(Func::Cos),
            "sin" => Some(Func::Sin),
            "exp" => Some(Func::Exp),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }

    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Func::Cos => v.cos(),
            Func::Sin => v.sin(),
            Func::Exp => v.exp(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Number(f64),
    X,
    Pi,
    Neg(Box<Expression>),
    Call(Func, Box<Expression>),
    Binary(BinOp, Box<Expression>, Box<Expression>),
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let mut p = Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        if p.pos == p.bytes.len() {
            return Err(p.error("empty expression"));
        }
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error(format!("unexpected '{}'", p.peek_char())));
        }
        Ok(e)
    }

    pub fn eval<T: Scalar>(&self, x: T) -> Result<T, EvalError> {
        let v = self.eval_raw(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { x: x.as_f64() })
        }
    }

    fn eval_raw<T: Scalar>(&self, x: T) -> Result<T, EvalError> {
        Ok(match self {
            Expression::Number(v) => T::lit(*v),
            Expression::X => x,
            Expression::Pi => T::PI(),
            Expression::Neg(e) => -e.eval_raw(x)?,
            Expression::Call(f, e) => f.apply(e.eval_raw(x)?),
            Expression::Binary(op, l, r) => {
                let a = l.eval_raw(x)?;
                let b = r.eval_raw(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == T::zero() {
                            return Err(EvalError::DivisionByZero { x: x.as_f64() });
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == T::zero() && b < T::zero() {
                            return Err(EvalError::ZeroToNegativePower { x: x.as_f64() });
                        }
                        // Integer exponents keep negative bases meaningful.
                        if b == b.round() && b.abs() <= T::lit(64.0) {
                            a.powi(b.to_i32().unwrap_or(0))
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
        })
    }

    /// True if the expression does not reference `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expression::Number(_) | Expression::Pi => true,
            Expression::X => false,
            Expression::Neg(e) | Expression::Call(_, e) => e.is_constant(),
            Expression::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }
}

/// Canonical printing: binary operations are parenthesised, so the output
/// re-parses to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Number(v) => write!(f, "{v:?}"),
            Expression::X => f.write_str("x"),
            Expression::Pi => f.write_str("pi"),
            Expression::Neg(e) => write!(f, "(-({e}))"),
            Expression::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expression::Binary(op, l, r) => write!(f, "({l}{}{r})", op.symbol()),
        }
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or('\0')
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // Minus is peeled off before the power so that `-a^b` is `-(a^b)`.
    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.eat(b'-') {
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expression::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                match name {
                    "x" => Ok(Expression::X),
                    "pi" => Ok(Expression::Pi),
                    _ => {
                        let Some(func) = Func::from_name(name) else {
                            return Err(ParseError {
                                position: start,
                                message: format!("unknown identifier '{name}'"),
                            });
                        };
                        if !self.eat(b'(') {
                            return Err(self.error(format!("expected '(' after '{name}'")));
                        }
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(Expression::Call(func, Box::new(arg)))
                    }
                }
            }
            Some(_) => Err(self.error(format!("unexpected '{}'", self.peek_char()))),
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        let b = self.bytes;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < b.len() && b[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < b.len() && b[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.error("malformed number"));
        }
        if p < b.len() && (b[p] == b'e' || b[p] == b'E') {
            let mut q = p + 1;
            if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) == 0 {
                return Err(ParseError {
                    position: p,
                    message: "malformed exponent".into(),
                });
            }
            p = q;
        }
        self.pos = p;
        self.src[start..p]
            .parse::<f64>()
            .map(Expression::Number)
            .map_err(|e| ParseError {
                position: start,
                message: e.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(src: &str, x: f64) -> f64 {
        Expression::parse(src).unwrap().eval(x).unwrap()
    }

    #[test]
    fn evaluates_example_profiles() {
        assert_eq!(at("2+cos(pi*x)", 0.0), 3.0);
        assert_eq!(at("2+3*4", 0.0), 14.0);
        let k2 = "10*exp(-12.5*pi^2*(x-2)^2) - exp(-50*pi^2*(x-2)^2) + 1";
        assert_eq!(at(k2, 2.0), 10.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("-2^2", 0.0), -4.0);
        assert_eq!(at("2^3^2", 0.0), 512.0);
        assert_eq!(at("2^-1", 0.0), 0.5);
        assert_eq!(at("8-3-2", 0.0), 3.0);
        assert_eq!(at("8/4/2", 0.0), 1.0);
        assert_eq!(at("(x-1)^2", -1.0), 4.0);
        assert_eq!(at("--3", 0.0), 3.0);
        assert_eq!(at("1.5e1 + .5 + 2E-1", 0.0), 15.7);
        assert_eq!(at("abs(sin(-pi/2))", 0.0), 1.0);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = Expression::parse("2 + * 3").unwrap_err();
        assert_eq!(e.position, 4);
        let e = Expression::parse("cos(x").unwrap_err();
        assert!(e.message.contains("')'"), "{e}");
        let e = Expression::parse("1 2").unwrap_err();
        assert_eq!(e.position, 2);
        assert!(Expression::parse("").is_err());
        assert!(Expression::parse("   ").is_err());
        assert!(Expression::parse("1e").is_err());
    }

    #[test]
    fn unknown_identifier() {
        let e = Expression::parse("2*y").unwrap_err();
        assert_eq!(e.position, 2);
        assert!(e.message.contains("unknown identifier 'y'"));
        assert!(Expression::parse("tan(x)").is_err());
    }

    #[test]
    fn evaluation_errors() {
        let e = Expression::parse("1/(x-1)").unwrap();
        assert_eq!(e.eval(1.0), Err(EvalError::DivisionByZero { x: 1.0 }));
        let e = Expression::parse("x^-1").unwrap();
        assert_eq!(e.eval(0.0), Err(EvalError::ZeroToNegativePower { x: 0.0 }));
        let e = Expression::parse("exp(1000*x)").unwrap();
        assert_eq!(e.eval(1.0), Err(EvalError::NonFinite { x: 1.0 }));
    }

    #[test]
    fn single_precision_evaluation() {
        let e = Expression::parse("2+cos(pi*x)").unwrap();
        assert!((e.eval(1.0f32).unwrap() - 1.0).abs() < 1e-6);
    }

    fn arb_expr() -> impl Strategy<Value = Expression> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expression::Number),
            Just(Expression::X),
            Just(Expression::Pi),
        ];
        leaf.prop_recursive(5, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expression::Neg(Box::new(e))),
                (
                    prop_oneof![Just(Func::Cos), Just(Func::Sin), Just(Func::Exp), Just(Func::Abs)],
                    inner.clone()
                )
                    .prop_map(|(f, e)| Expression::Call(f, Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(op, l, r)| Expression::Binary(op, Box::new(l), Box::new(r))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = Expression::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
