//! Closed-form expressions over space coordinates and jet entries.
//!
//! Grammar (usual precedence, `^` right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names: `x`, `y`, `z` or `x1`, `x2`, `x3` for coordinates; `u` for the
//! function value; `xi_<p>` for jet entries, where `<p>` is the derivative
//! order in one dimension (`xi_2`) or one digit per axis otherwise
//! (`xi_10`, `xi_011`); `xi_0` is the value in any dimension. Constants `pi`
//! and `e`. Functions: sin cos tan asin acos atan sinh cosh tanh exp ln log
//! sqrt abs.

use thiserror::Error;

use crate::pde::MultiIndexSet;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {msg}")]
pub struct ExprError {
    pub column: usize,
    pub msg: String,
}

fn err<T>(column: usize, msg: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError { column, msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "asin" => Func::Asin,
            "acos" => Func::Acos,
            "atan" => Func::Atan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Asin => v.asin(),
            Func::Acos => v.acos(),
            Func::Atan => v.atan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(usize),
    Jet(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parse against a coordinate dimension and (optionally) a jet layout.
    /// Without a layout any jet symbol is an error.
    pub fn parse(src: &str, dims: usize, jets: Option<&MultiIndexSet>) -> Result<Self, ExprError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0, dims, jets };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return err(p.pos + 1, format!("unexpected {:?}", p.src[p.pos] as char));
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64], jet: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Coord(k) => x[*k],
            Expr::Jet(i) => jet[*i],
            Expr::Neg(a) => -a.eval(x, jet),
            Expr::Add(a, b) => a.eval(x, jet) + b.eval(x, jet),
            Expr::Sub(a, b) => a.eval(x, jet) - b.eval(x, jet),
            Expr::Mul(a, b) => a.eval(x, jet) * b.eval(x, jet),
            Expr::Div(a, b) => a.eval(x, jet) / b.eval(x, jet),
            Expr::Pow(a, b) => pow(a.eval(x, jet), b.eval(x, jet)),
            Expr::Call(f, a) => f.apply(a.eval(x, jet)),
        }
    }

    /// Whether the expression references any jet entry.
    pub fn uses_jet(&self) -> bool {
        match self {
            Expr::Jet(_) => true,
            Expr::Num(_) | Expr::Coord(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_jet(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => a.uses_jet() || b.uses_jet(),
        }
    }
}

// Integer exponents go through powi so odd powers of negative bases work.
fn pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dims: usize,
    jets: Option<&'a MultiIndexSet>,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == b'*' { Expr::Mul(lhs.into(), rhs.into()) } else { Expr::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(self.unary()?.into()));
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        match self.peek() {
            None => err(self.pos + 1, "unexpected end of expression"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return err(self.pos + 1, "expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let begin = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[begin..self.pos]).expect("ascii");
                if let Some(f) = Func::from_name(name) {
                    if self.peek() != Some(b'(') {
                        return err(self.pos + 1, format!("function {name} needs '('"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(b')') {
                        return err(self.pos + 1, "expected ')'");
                    }
                    self.pos += 1;
                    return Ok(Expr::Call(f, arg.into()));
                }
                self.symbol(name, begin + 1)
            }
            Some(c) => {
                let _ = start;
                err(self.pos + 1, format!("unexpected {:?}", c as char))
            }
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let begin = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < s.len() && (s[look] == b'+' || s[look] == b'-') {
                look += 1;
            }
            if look < s.len() && s[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&s[begin..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => err(begin + 1, format!("bad number {text:?}")),
        }
    }

    fn symbol(&self, name: &str, column: usize) -> Result<Expr, ExprError> {
        let coord = |k: usize| -> Result<Expr, ExprError> {
            if k < self.dims {
                Ok(Expr::Coord(k))
            } else {
                err(column, format!("coordinate {name} does not exist in dimension {}", self.dims))
            }
        };
        match name {
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            "x" | "x1" => return coord(0),
            "y" | "x2" => return coord(1),
            "z" | "x3" => return coord(2),
            _ => {}
        }
        let jet_index = |p: Vec<u32>| -> Result<Expr, ExprError> {
            let Some(jets) = self.jets else {
                return err(column, format!("jet symbol {name} is not allowed here"));
            };
            match jets.position(&p) {
                Some(i) => Ok(Expr::Jet(i)),
                None => err(column, format!("{name} is outside the derivative order {}", jets.order())),
            }
        };
        if name == "u" {
            return jet_index(vec![0; self.dims]);
        }
        if let Some(digits) = name.strip_prefix("xi_") {
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return err(column, format!("malformed jet symbol {name}"));
            }
            if digits.bytes().all(|b| b == b'0') && digits.len() <= self.dims.max(1) {
                return jet_index(vec![0; self.dims]);
            }
            if self.dims == 1 {
                let k: u32 = digits.parse().map_err(|_| ExprError { column, msg: format!("malformed jet symbol {name}") })?;
                return jet_index(vec![k]);
            }
            if digits.len() != self.dims {
                return err(column, format!("jet symbol {name} needs one digit per axis ({} axes)", self.dims));
            }
            return jet_index(digits.bytes().map(|b| (b - b'0') as u32).collect());
        }
        err(column, format!("unknown symbol {name:?}"))
    }
}
