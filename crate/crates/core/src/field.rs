//! Scalar fields as expression trees over chart coordinates.
//!
//! A [`ScalarField`] is built from constants, coordinates, sums, products and
//! the univariate jet primitives, and evaluates either to a plain real or to an
//! order-3 [`Jet`] at a point. The harness parses user expressions into the
//! same tree, so nothing outside this closed grammar is ever evaluated.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, Univariate};

#[derive(Debug, Clone)]
enum Expr {
    Const(f64),
    Coord(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Prim(Univariate, Arc<Expr>),
}

/// Immutable, deterministic scalar field on a chart domain.
#[derive(Debug, Clone)]
pub struct ScalarField {
    expr: Arc<Expr>,
}

impl ScalarField {
    pub fn constant(c: f64) -> ScalarField {
        ScalarField {
            expr: Arc::new(Expr::Const(c)),
        }
    }

    pub fn zero() -> ScalarField {
        ScalarField::constant(0.0)
    }

    pub fn coord(i: usize) -> ScalarField {
        ScalarField {
            expr: Arc::new(Expr::Coord(i)),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            expr: Arc::new(Expr::Add(self.expr.clone(), other.expr.clone())),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            expr: Arc::new(Expr::Sub(self.expr.clone(), other.expr.clone())),
        }
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            expr: Arc::new(Expr::Mul(self.expr.clone(), other.expr.clone())),
        }
    }

    pub fn neg(&self) -> ScalarField {
        ScalarField {
            expr: Arc::new(Expr::Neg(self.expr.clone())),
        }
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        ScalarField::constant(c).mul(self)
    }

    pub fn apply(&self, prim: Univariate) -> ScalarField {
        ScalarField {
            expr: Arc::new(Expr::Prim(prim, self.expr.clone())),
        }
    }

    pub fn sin(&self) -> ScalarField {
        self.apply(Univariate::Sin)
    }

    pub fn cos(&self) -> ScalarField {
        self.apply(Univariate::Cos)
    }

    pub fn exp(&self) -> ScalarField {
        self.apply(Univariate::Exp)
    }

    pub fn powf(&self, alpha: f64) -> ScalarField {
        self.apply(Univariate::Pow(alpha))
    }

    /// Plain real evaluation at a point.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        eval_real(&self.expr, x)
    }

    /// Order-3 jet evaluation at a point in `dim` variables.
    pub fn eval_jet(&self, x: &[f64], dim: usize) -> Result<Jet> {
        debug_assert!(x.len() >= dim);
        eval_jet(&self.expr, x, dim)
    }

    /// Parse an expression over the fixed grammar.
    ///
    /// Coordinates: `x` (axis 0) and `y` (axis 1), with the chart aliases
    /// `r`/`theta` for axis 0 and `phi` for axis 1. Operators `+ - * / ^`
    /// (constant exponent), functions `sin cos exp log pow(base, exponent)`,
    /// and the constant `pi`.
    pub fn parse(src: &str, dim: usize) -> Result<ScalarField> {
        let mut parser = Parser {
            src: src.as_bytes(),
            pos: 0,
            dim,
        };
        let expr = parser.expression()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input at byte {} of {src:?}",
                parser.pos
            )));
        }
        Ok(ScalarField {
            expr: Arc::new(expr),
        })
    }
}

fn eval_real(expr: &Expr, x: &[f64]) -> Result<f64> {
    Ok(match expr {
        Expr::Const(c) => *c,
        Expr::Coord(i) => {
            if *i >= x.len() {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {i} out of range for point of dim {}",
                    x.len()
                )));
            }
            x[*i]
        }
        Expr::Add(a, b) => eval_real(a, x)? + eval_real(b, x)?,
        Expr::Sub(a, b) => eval_real(a, x)? - eval_real(b, x)?,
        Expr::Mul(a, b) => eval_real(a, x)? * eval_real(b, x)?,
        Expr::Div(a, b) => {
            let d = eval_real(b, x)?;
            if d == 0.0 {
                return Err(Error::Domain("division by zero".into()));
            }
            eval_real(a, x)? / d
        }
        Expr::Neg(a) => -eval_real(a, x)?,
        Expr::Prim(prim, a) => {
            let v = eval_real(a, x)?;
            match prim {
                Univariate::Exp => v.exp(),
                Univariate::Sin => v.sin(),
                Univariate::Cos => v.cos(),
                Univariate::Log => {
                    if v <= 0.0 {
                        return Err(Error::Domain(format!("log of nonpositive value {v}")));
                    }
                    v.ln()
                }
                Univariate::Pow(alpha) => {
                    if v <= 0.0 {
                        // Integer exponents extend continuously to v <= 0.
                        if alpha.fract() == 0.0 && (v != 0.0 || *alpha >= 0.0) {
                            v.powi(*alpha as i32)
                        } else {
                            return Err(Error::Domain(format!(
                                "pow of nonpositive base {v} with exponent {alpha}"
                            )));
                        }
                    } else {
                        v.powf(*alpha)
                    }
                }
            }
        }
    })
}

fn eval_jet(expr: &Expr, x: &[f64], dim: usize) -> Result<Jet> {
    Ok(match expr {
        Expr::Const(c) => Jet::constant(*c, dim),
        Expr::Coord(i) => Jet::seed(x[*i], *i, dim)?,
        Expr::Add(a, b) => &eval_jet(a, x, dim)? + &eval_jet(b, x, dim)?,
        Expr::Sub(a, b) => &eval_jet(a, x, dim)? - &eval_jet(b, x, dim)?,
        Expr::Mul(a, b) => eval_jet(a, x, dim)?.try_mul(&eval_jet(b, x, dim)?)?,
        Expr::Div(a, b) => eval_jet(a, x, dim)?.try_mul(&eval_jet(b, x, dim)?.recip()?)?,
        Expr::Neg(a) => -&eval_jet(a, x, dim)?,
        Expr::Prim(prim, a) => {
            let inner = eval_jet(a, x, dim)?;
            match prim {
                Univariate::Pow(alpha) if inner.value() <= 0.0 && alpha.fract() == 0.0 => {
                    // Small-integer powers stay polynomial for any base sign.
                    integer_power(&inner, *alpha)?
                }
                _ => Jet::chain(*prim, &inner)?,
            }
        }
    })
}

fn integer_power(jet: &Jet, alpha: f64) -> Result<Jet> {
    let n = alpha as i64;
    if n < 0 {
        return jet.recip()?.try_mul(&integer_power(jet, -alpha)?);
    }
    let mut out = Jet::constant(1.0, jet.dim());
    for _ in 0..n {
        out = out.try_mul(jet)?;
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected '{}' at byte {}",
                c as char, self.pos
            )))
        }
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::Add(Arc::new(lhs), Arc::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Sub(Arc::new(lhs), Arc::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Expr::Mul(Arc::new(lhs), Arc::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Expr::Div(Arc::new(lhs), Arc::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.eat(b'^') {
            let exponent = self.constant_exponent()?;
            return Ok(Expr::Prim(Univariate::Pow(exponent), Arc::new(base)));
        }
        Ok(base)
    }

    fn constant_exponent(&mut self) -> Result<f64> {
        let neg = self.eat(b'-');
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        let literal = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = literal
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent {literal:?}")))?;
        Ok(if neg { -value } else { value })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Arc::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            other => Err(Error::Parse(format!(
                "unexpected input {:?} at byte {}",
                other.map(|c| c as char),
                self.pos
            ))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || matches!(*c, b'.' | b'e' | b'E'))
        {
            self.pos += 1;
            // allow a sign directly after an exponent marker
            if matches!(self.src.get(self.pos.wrapping_sub(1)), Some(b'e' | b'E'))
                && matches!(self.src.get(self.pos), Some(b'+' | b'-'))
            {
                self.pos += 1;
            }
        }
        let literal = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = literal
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {literal:?}")))?;
        Ok(Expr::Const(value))
    }

    fn identifier(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "x" | "r" | "theta" => self.coord_expr(0),
            "y" | "phi" => self.coord_expr(1),
            "z" => self.coord_expr(2),
            "sin" | "cos" | "exp" | "log" => {
                self.expect(b'(')?;
                let arg = self.expression()?;
                self.expect(b')')?;
                let prim = match name {
                    "sin" => Univariate::Sin,
                    "cos" => Univariate::Cos,
                    "exp" => Univariate::Exp,
                    _ => Univariate::Log,
                };
                Ok(Expr::Prim(prim, Arc::new(arg)))
            }
            "pow" => {
                self.expect(b'(')?;
                let base = self.expression()?;
                self.expect(b',')?;
                let exponent = self.constant_exponent()?;
                self.expect(b')')?;
                Ok(Expr::Prim(Univariate::Pow(exponent), Arc::new(base)))
            }
            other => Err(Error::Parse(format!("unknown identifier {other:?}"))),
        }
    }

    fn coord_expr(&self, axis: usize) -> Result<Expr> {
        if axis >= self.dim {
            return Err(Error::Parse(format!(
                "coordinate axis {axis} not available in dimension {}",
                self.dim
            )));
        }
        Ok(Expr::Coord(axis))
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(&self.expr, fm)
    }
}

fn fmt_expr(expr: &Expr, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
    match expr {
        Expr::Const(c) => write!(fm, "{c}"),
        Expr::Coord(0) => write!(fm, "x"),
        Expr::Coord(1) => write!(fm, "y"),
        Expr::Coord(_) => write!(fm, "z"),
        Expr::Add(a, b) => {
            write!(fm, "(")?;
            fmt_expr(a, fm)?;
            write!(fm, " + ")?;
            fmt_expr(b, fm)?;
            write!(fm, ")")
        }
        Expr::Sub(a, b) => {
            write!(fm, "(")?;
            fmt_expr(a, fm)?;
            write!(fm, " - ")?;
            fmt_expr(b, fm)?;
            write!(fm, ")")
        }
        Expr::Mul(a, b) => {
            write!(fm, "(")?;
            fmt_expr(a, fm)?;
            write!(fm, "*")?;
            fmt_expr(b, fm)?;
            write!(fm, ")")
        }
        Expr::Div(a, b) => {
            write!(fm, "(")?;
            fmt_expr(a, fm)?;
            write!(fm, "/")?;
            fmt_expr(b, fm)?;
            write!(fm, ")")
        }
        Expr::Neg(a) => {
            write!(fm, "-")?;
            fmt_expr(a, fm)
        }
        Expr::Prim(prim, a) => {
            let name = match prim {
                Univariate::Exp => "exp",
                Univariate::Sin => "sin",
                Univariate::Cos => "cos",
                Univariate::Log => "log",
                Univariate::Pow(alpha) => {
                    write!(fm, "pow(")?;
                    fmt_expr(a, fm)?;
                    return write!(fm, ", {alpha})");
                }
            };
            write!(fm, "{name}(")?;
            fmt_expr(a, fm)?;
            write!(fm, ")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parse_and_eval() {
        let f = ScalarField::parse("sin(x) + 2*cos(y)", 2).unwrap();
        let v = f.eval(&[0.3, 1.1]).unwrap();
        assert_relative_eq!(v, 0.3f64.sin() + 2.0 * 1.1f64.cos(), epsilon = 1e-15);
    }

    #[test]
    fn parse_power_and_division() {
        let f = ScalarField::parse("x^2/2", 1).unwrap();
        assert_relative_eq!(f.eval(&[3.0]).unwrap(), 4.5, epsilon = 1e-15);
        let g = ScalarField::parse("pow(x, 3) - 0.5*x", 1).unwrap();
        assert_relative_eq!(g.eval(&[-2.0]).unwrap(), -7.0, epsilon = 1e-15);
    }

    #[test]
    fn jet_order0_matches_real_eval() {
        let f = ScalarField::parse("exp(0.3*x)*sin(y) + x*y - 1.5", 2).unwrap();
        for &pt in &[[0.2, 0.7], [-1.0, 2.0], [3.0, -0.4]] {
            let jet = f.eval_jet(&pt, 2).unwrap();
            let real = f.eval(&pt).unwrap();
            assert_relative_eq!(jet.value(), real, max_relative = 1e-14);
        }
    }

    #[test]
    fn jet_derivatives_of_product() {
        // d/dx [x^2 sin(y)] = 2x sin(y); d2/dxdy = 2x cos(y).
        let f = ScalarField::parse("x^2*sin(y)", 2).unwrap();
        let j = f.eval_jet(&[1.5, 0.8], 2).unwrap();
        assert_relative_eq!(
            j.derivative([1, 0, 0]),
            3.0 * 0.8f64.sin(),
            epsilon = 1e-13
        );
        assert_relative_eq!(
            j.derivative([1, 1, 0]),
            3.0 * 0.8f64.cos(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn reject_unknown_identifier() {
        assert!(ScalarField::parse("foo(x)", 1).is_err());
        assert!(ScalarField::parse("x + ", 1).is_err());
        assert!(ScalarField::parse("y", 1).is_err());
    }
}
