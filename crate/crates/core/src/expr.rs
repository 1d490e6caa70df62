//! Scalar expressions over coordinates and named parameters.
//!
//! The grammar is ordinary infix: `+ - * / ^` (also `**`), unary minus,
//! parentheses, numeric literals and the functions `sin cos exp log sqrt`.
//! Identifiers are either coordinates (as named by the caller) or parameters,
//! which are substituted at parse time. `pi` is predefined.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::jets::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values an expression can be evaluated on.
pub trait Num: Clone {
    fn constant_like(&self, v: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn powi(&self, n: i32) -> Result<Self>;
    fn powf(&self, p: f64) -> Result<Self>;
    fn call(&self, f: Func) -> Result<Self>;
}

impl Num for f64 {
    fn constant_like(&self, v: f64) -> f64 {
        v
    }
    fn add(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn neg(&self) -> f64 {
        -self
    }
    fn div(&self, o: &f64) -> Result<f64> {
        if *o == 0.0 {
            return Err(Error::Singular("division by zero".into()));
        }
        Ok(self / o)
    }
    fn powi(&self, n: i32) -> Result<f64> {
        if n < 0 && *self == 0.0 {
            return Err(Error::Singular("negative power of zero".into()));
        }
        let mut acc = 1.0;
        for _ in 0..n.unsigned_abs() {
            acc *= self;
        }
        Ok(if n < 0 { 1.0 / acc } else { acc })
    }
    fn powf(&self, p: f64) -> Result<f64> {
        if *self < 0.0 || (*self == 0.0 && p < 0.0) {
            return Err(Error::Singular(format!("power {} of {}", p, self)));
        }
        Ok(libm::pow(*self, p))
    }
    fn call(&self, f: Func) -> Result<f64> {
        Ok(match f {
            Func::Sin => libm::sin(*self),
            Func::Cos => libm::cos(*self),
            Func::Exp => libm::exp(*self),
            Func::Log => {
                if !(*self > 0.0) {
                    return Err(Error::Singular(format!("logarithm of {}", self)));
                }
                libm::log(*self)
            }
            Func::Sqrt => {
                if *self < 0.0 {
                    return Err(Error::Singular(format!("square root of {}", self)));
                }
                libm::sqrt(*self)
            }
        })
    }
}

impl Num for Jet {
    fn constant_like(&self, v: f64) -> Jet {
        self.konst(v)
    }
    fn add(&self, o: &Jet) -> Jet {
        self + o
    }
    fn sub(&self, o: &Jet) -> Jet {
        self - o
    }
    fn mul(&self, o: &Jet) -> Jet {
        Jet::mul(self, o)
    }
    fn neg(&self) -> Jet {
        -self
    }
    fn div(&self, o: &Jet) -> Result<Jet> {
        Jet::div(self, o)
    }
    fn powi(&self, n: i32) -> Result<Jet> {
        Jet::powi(self, n)
    }
    fn powf(&self, p: f64) -> Result<Jet> {
        Jet::powf(self, p)
    }
    fn call(&self, f: Func) -> Result<Jet> {
        match f {
            Func::Sin => Ok(self.sin()),
            Func::Cos => Ok(self.cos()),
            Func::Exp => Ok(self.exp()),
            Func::Log => self.ln(),
            Func::Sqrt => self.sqrt(),
        }
    }
}

impl Expr {
    pub fn konst(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn is_const(&self) -> bool {
        self.max_var().is_none()
    }

    /// Largest coordinate index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, None) => x,
                    (None, y) => y,
                }
            }
        }
    }

    pub fn eval<T: Num>(&self, vars: &[T]) -> Result<T> {
        let like = &vars[0];
        let wrap = |e: Error, node: &Expr| match e {
            Error::Singular(msg) => Error::Domain { expr: node.to_string(), msg },
            other => other,
        };
        Ok(match self {
            Expr::Const(v) => like.constant_like(*v),
            Expr::Var(i) => vars
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("coordinate index {} out of range", i + 1)))?,
            Expr::Neg(a) => a.eval(vars)?.neg(),
            Expr::Add(a, b) => a.eval(vars)?.add(&b.eval(vars)?),
            Expr::Sub(a, b) => a.eval(vars)?.sub(&b.eval(vars)?),
            Expr::Mul(a, b) => a.eval(vars)?.mul(&b.eval(vars)?),
            Expr::Div(a, b) => a.eval(vars)?.div(&b.eval(vars)?).map_err(|e| wrap(e, self))?,
            Expr::Pow(a, b) => {
                let base = a.eval(vars)?;
                let folded;
                let b = if b.is_const() && !matches!(**b, Expr::Const(_)) {
                    folded = Expr::Const(b.eval(&[0.0])?);
                    &folded
                } else {
                    &**b
                };
                match *b {
                    Expr::Const(p) if p == libm::round(p) && p.abs() < 64.0 => {
                        base.powi(p as i32).map_err(|e| wrap(e, self))?
                    }
                    Expr::Const(p) => base.powf(p).map_err(|e| wrap(e, self))?,
                    _ => {
                        // a^b = exp(b log a)
                        let l = base.call(Func::Log).map_err(|e| wrap(e, self))?;
                        b.eval(vars)?.mul(&l).call(Func::Exp)?
                    }
                }
            }
            Expr::Call(f, a) => a.eval(vars)?.call(*f).map_err(|e| wrap(e, self))?,
        })
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<f64> {
        if x.is_empty() {
            return self.eval(&[0.0]);
        }
        self.eval(x)
    }

    /// Taylor jet of order `order` at the point `x`.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        self.eval(&Jet::variables(order, x))
    }

    /// Substitute expressions for the coordinates.
    pub fn subst(&self, vals: &[Expr]) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(*v),
            Expr::Var(i) => vals[*i].clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.subst(vals))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.subst(vals)), Box::new(b.subst(vals))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.subst(vals)), Box::new(b.subst(vals))),
            Expr::Mul(a, b) => Expr::Mul(Box::new(a.subst(vals)), Box::new(b.subst(vals))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.subst(vals)), Box::new(b.subst(vals))),
            Expr::Pow(a, b) => Expr::Pow(Box::new(a.subst(vals)), Box::new(b.subst(vals))),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.subst(vals))),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn parse(src: &str, vars: &[&str], params: &[(&str, f64)]) -> Result<Expr> {
        let mut p = Parser { toks: lex(src)?, pos: 0, vars, params, len: src.chars().count() };
        let e = p.expr()?;
        if let Some(t) = p.toks.get(p.pos) {
            return Err(Error::Parse { pos: t.pos, msg: format!("unexpected {}", t.tok) });
        }
        Ok(e)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $v:ident) => {
        impl core::ops::$tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr {
                Expr::$v(Box::new(self), Box::new(o))
            }
        }
    };
}
binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Const(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if prec(e) < min {
                write!(f, "({})", e)
            } else {
                write!(f, "{}", e)
            }
        };
        match self {
            Expr::Const(v) => write!(f, "{}", v),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => {
                f.write_str("-")?;
                sub(f, a, 4)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                sub(f, a, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                sub(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                sub(f, a, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                sub(f, b, 3)
            }
            Expr::Pow(a, b) => {
                sub(f, a, 5)?;
                f.write_str("^")?;
                sub(f, b, 4)
            }
            Expr::Call(g, a) => write!(f, "{}({})", g.name(), a),
        }
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

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {}", v),
            Tok::Ident(s) => write!(f, "identifier `{}`", s),
            Tok::Op(c) => write!(f, "`{}`", c),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
        }
    }
}

struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::Parse { pos: start, msg: format!("malformed number `{}`", s) })?;
            out.push(Token { tok: Tok::Num(v), pos: start });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), pos: start });
            continue;
        }
        let tok = match c {
            '+' | '-' | '/' | '^' => Tok::Op(c),
            '*' if chars.get(i + 1) == Some(&'*') => {
                i += 1;
                Tok::Op('^')
            }
            '*' => Tok::Op('*'),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => return Err(Error::Parse { pos: start, msg: format!("unexpected character `{}`", c) }),
        };
        i += 1;
        out.push(Token { tok, pos: start });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
    params: &'a [(&'a str, f64)],
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.pos)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        let found = match self.toks.get(self.pos) {
            Some(t) => format!("{}, found {}", msg, t.tok),
            None => format!("{}, found end of input", msg),
        };
        Err(Error::Parse { pos: self.here(), msg: found })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' { lhs + rhs } else { lhs - rhs };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' { lhs * rhs } else { lhs / rhs };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let at = self.here();
                self.pos += 1;
                if let Some(f) = Func::from_name(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return self.err(&format!("expected `(` after `{}`", name));
                    }
                    self.pos += 1;
                    let a = self.expr()?;
                    if self.peek() != Some(&Tok::RParen) {
                        return self.err("expected `)`");
                    }
                    self.pos += 1;
                    return Ok(Expr::call(f, a));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if let Some((_, v)) = self.params.iter().find(|(p, _)| *p == name) {
                    return Ok(Expr::Const(*v));
                }
                if name == "pi" {
                    return Ok(Expr::Const(core::f64::consts::PI));
                }
                Err(Error::Parse { pos: at, msg: format!("unknown identifier `{}`", name) })
            }
            _ => self.err("expected a number, identifier or `(`"),
        }
    }
}

/// Names `x1 .. xn` used for coordinates throughout.
pub const COORDS: [&str; 5] = ["x1", "x2", "x3", "x4", "x5"];

pub fn coords(n: usize) -> &'static [&'static str] {
    &COORDS[..n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s, coords(3), &[("a", 2.0)]).unwrap()
    }

    #[test]
    fn precedence() {
        assert_eq!(p("1 + 2*3^2").eval_f64(&[0.0]).unwrap(), 19.0);
        assert_eq!(p("-x1^2").eval_f64(&[3.0]).unwrap(), -9.0);
        assert_eq!(p("2^3^2").eval_f64(&[0.0]).unwrap(), 512.0);
        assert_eq!(p("a*x2").eval_f64(&[0.0, 4.0]).unwrap(), 8.0);
        assert_eq!(p("x1**2").eval_f64(&[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn error_positions() {
        match Expr::parse("1 + * 2", coords(1), &[]) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{:?}", other),
        }
        match Expr::parse("sin(x1", coords(1), &[]) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{:?}", other),
        }
        match Expr::parse("x1 + zz", coords(1), &[]) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn domain_error_names_subexpression() {
        let e = p("1 + log(x1 - 1)");
        match e.eval_f64(&[0.5]) {
            Err(Error::Domain { expr, .. }) => assert_eq!(expr, "log(x1 - 1)"),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["x1 - (x2 - x3)", "-(x1 + 1)^2", "x1/(x2*x3)", "sqrt(1 + 2*x1)^-1"] {
            let e = p(s);
            let again = p(&e.to_string());
            let x = [0.3, 0.7, 1.1];
            assert!((e.eval_f64(&x).unwrap() - again.eval_f64(&x).unwrap()).abs() < 1e-14);
        }
    }
}
