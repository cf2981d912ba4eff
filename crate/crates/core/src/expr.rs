//! Arithmetic expressions in one variable `x`.
//!
//! Grammar (lowest precedence first):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Erf,
    Abs,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Erf,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Erf => "erf",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Erf => libm::erf(v),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Pi,
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval(x),
            Expr::Call(f, e) => f.apply(e.eval(x)),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(x), r.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Parses `src` into an expression tree.
pub fn parse(src: &str) -> Result<Expr> {
    let mut p = Parser {
        src,
        tokens: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some((Tok::RParen, off)) => Err(Error::Parse {
            offset: off,
            message: "unbalanced parenthesis: unexpected ')'".into(),
        }),
        Some((t, off)) => Err(Error::Parse {
            offset: off,
            message: format!("unexpected {}", t.describe()),
        }),
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(c) => format!("operator '{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v = text.parse::<f64>().map_err(|_| Error::Parse {
                    offset: start,
                    message: format!("malformed number '{text}'"),
                })?;
                out.push((Tok::Num(v), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Parse {
                    offset: i,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(Tok, usize)> {
        self.tokens.get(self.pos).cloned()
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn end_offset(&self) -> usize {
        self.src.len()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some((Tok::Op(c @ ('+' | '-')), _)) = self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some((Tok::Op(c @ ('*' | '/')), _)) = self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some((Tok::Op('-'), _)) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some((Tok::Op('^'), _)) = self.peek() {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some((tok, off)) = self.bump() else {
            return Err(Error::Parse {
                offset: self.end_offset(),
                message: "unexpected end of input".into(),
            });
        };
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.close(off)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "pi" => Ok(Expr::Pi),
                _ => {
                    let f = Func::from_name(&name).ok_or_else(|| Error::Parse {
                        offset: off,
                        message: format!("unknown function or variable '{name}'"),
                    })?;
                    match self.bump() {
                        Some((Tok::LParen, open)) => {
                            let arg = self.expr()?;
                            self.close(open)?;
                            Ok(Expr::Call(f, Box::new(arg)))
                        }
                        _ => Err(Error::Parse {
                            offset: off + name.len(),
                            message: format!("expected '(' after {name}"),
                        }),
                    }
                }
            },
            other => Err(Error::Parse {
                offset: off,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn close(&mut self, open: usize) -> Result<()> {
        match self.bump() {
            Some((Tok::RParen, _)) => Ok(()),
            Some((t, off)) => Err(Error::Parse {
                offset: off,
                message: format!("expected ')' to match '(' at byte {open}, found {}", t.describe()),
            }),
            None => Err(Error::Parse {
                offset: self.end_offset(),
                message: format!("unbalanced parenthesis: '(' at byte {open} is never closed"),
            }),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var => write!(f, "x"),
            Expr::Pi => write!(f, "pi"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                write_child(f, e, e.precedence() < 3)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    write_child(f, l, l.precedence() <= p)?;
                    write!(f, "^")?;
                    write_child(f, r, r.precedence() < 3)
                } else {
                    write_child(f, l, l.precedence() < p)?;
                    write!(f, "{}", op.symbol())?;
                    write_child(f, r, r.precedence() <= p)
                }
            }
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64) -> f64 {
        parse(s).unwrap().eval(x)
    }

    #[test]
    fn examples() {
        let v = ev("x*(1-x)*exp(-x)/((0.5)^2+(x-0.5)^2)", 0.5);
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(ev("3.5", 7.0), 3.5);
        assert_eq!(ev("tanh(x)", 0.0), 0.0);
        let s1 = 1f64.sinh();
        assert!((ev("x/(1+x^6*sinh(x)^2)", 1.0) - 1.0 / (1.0 + s1 * s1)).abs() < 1e-15);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4", 0.0), 14.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("8/4/2", 0.0), 1.0);
        assert_eq!(ev("1-2-3", 0.0), -4.0);
        assert_eq!(ev("1.5e2+x", 1.0), 151.0);
    }

    #[test]
    fn errors() {
        match parse("2+*3") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        match parse("sin(x") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("unbalanced")),
            other => panic!("{other:?}"),
        }
        match parse("x)") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 1);
                assert!(message.contains("unbalanced"));
            }
            other => panic!("{other:?}"),
        }
        match parse("foo(x)") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("unknown"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("").is_err());
        assert!(parse("2 $ 3").is_err());
    }

    #[test]
    fn nan_is_a_value() {
        assert!(ev("log(x)", -1.0).is_nan());
        assert!(ev("sqrt(x)", -1.0).is_nan());
    }

    #[test]
    fn printing() {
        for s in ["x*(1-x)", "2^3^2", "(2^3)^2", "-x^2", "(-x)^2"] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{s}");
        }
        assert_eq!(parse("1-(2-3)").unwrap().to_string(), "1.0-(2.0-3.0)");
        assert_eq!(parse("(1-2)-3").unwrap().to_string(), "1.0-2.0-3.0");
    }
}
