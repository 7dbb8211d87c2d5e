//! Propensity expression trees.
//!
//! An [`Expr`] is a finite tree over constants, parameter references,
//! species references and the arithmetic nodes needed by biochemical rate
//! laws. Trees are parsed from a small infix language, printed back to it
//! losslessly, evaluated in any [`Scalar`], and differentiated
//! symbolically with respect to a parameter or a species.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' (int | unary))?
//! primary := number | name | '[' any-name ']' | ('ln' | 'exp') '(' expr ')' | '(' expr ')'
//! ```
//!
//! A bare integer exponent (`x^2`, `x^-1`) becomes [`Expr::PowI`]; any other
//! exponent (`x^n`, `x^(2)`, `x^2.5`) becomes the real power [`Expr::Pow`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Expression node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Param(usize),
    Species(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power.
    PowI(Box<Expr>, i32),
    /// Real power with an expression exponent.
    Pow(Box<Expr>, Box<Expr>),
    Ln(Box<Expr>),
    Exp(Box<Expr>),
    /// `c_param * prod_i x_i^m_i`, the law of mass action.
    MassAction { param: usize, reactants: Vec<(usize, u32)> },
}

/// Differentiation variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Param(usize),
    Species(usize),
}

/// Numerical fault raised during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalFault {
    DivisionByZero,
    NonFinite,
}

/// Name tables used to resolve and print identifiers.
#[derive(Debug, Clone, Copy)]
pub struct Names<'a> {
    pub params: &'a [String],
    pub species: &'a [String],
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(v) if *v == 1.0)
}

// Folding constructors used by the differentiator.
fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::Add(bx(a), bx(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        neg(b)
    } else {
        Expr::Sub(bx(a), bx(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Const(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::Mul(bx(a), bx(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::Const(0.0)
    } else if is_one(&b) {
        a
    } else {
        Expr::Div(bx(a), bx(b))
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(v) => Expr::Const(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(bx(other)),
    }
}

fn powi(a: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::Const(1.0),
        1 => a,
        _ => Expr::PowI(bx(a), n),
    }
}

impl Expr {
    /// Mass-action rate for the given parameter and reactant multiplicities.
    pub fn mass_action(param: usize, reactants: &[(usize, u32)]) -> Self {
        let mut reactants: Vec<(usize, u32)> =
            reactants.iter().copied().filter(|&(_, m)| m > 0).collect();
        reactants.sort_unstable();
        Expr::MassAction { param, reactants }
    }

    /// Rewrite [`Expr::MassAction`] nodes as explicit products.
    pub fn expand(&self) -> Expr {
        match self {
            Expr::MassAction { param, reactants } => {
                let mut acc = Expr::Param(*param);
                for &(i, m) in reactants {
                    acc = Expr::Mul(bx(acc), bx(powi(Expr::Species(i), m as i32)));
                }
                acc
            }
            other => other.map_children(|c| c.expand()),
        }
    }

    fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Species(_) | Expr::MassAction { .. } => {
                self.clone()
            }
            Expr::Neg(a) => Expr::Neg(bx(f(a))),
            Expr::Add(a, b) => Expr::Add(bx(f(a)), bx(f(b))),
            Expr::Sub(a, b) => Expr::Sub(bx(f(a)), bx(f(b))),
            Expr::Mul(a, b) => Expr::Mul(bx(f(a)), bx(f(b))),
            Expr::Div(a, b) => Expr::Div(bx(f(a)), bx(f(b))),
            Expr::PowI(a, n) => Expr::PowI(bx(f(a)), *n),
            Expr::Pow(a, b) => Expr::Pow(bx(f(a)), bx(f(b))),
            Expr::Ln(a) => Expr::Ln(bx(f(a))),
            Expr::Exp(a) => Expr::Exp(bx(f(a))),
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Param(_) | Expr::Species(_) | Expr::MassAction { .. } => {}
            Expr::Neg(a) | Expr::PowI(a, _) | Expr::Ln(a) | Expr::Exp(a) => a.visit(f),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Parameter indices referenced anywhere in the tree.
    pub fn param_refs(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Param(k) => {
                out.insert(*k);
            }
            Expr::MassAction { param, .. } => {
                out.insert(*param);
            }
            _ => {}
        });
        out
    }

    /// Species indices referenced anywhere in the tree.
    pub fn species_refs(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Species(i) => {
                out.insert(*i);
            }
            Expr::MassAction { reactants, .. } => out.extend(reactants.iter().map(|r| r.0)),
            _ => {}
        });
        out
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match var {
            Var::Param(k) => self.param_refs().contains(&k),
            Var::Species(i) => self.species_refs().contains(&i),
        }
    }

    /// Evaluate at state `x` and parameters `c`.
    pub fn eval<T: Scalar>(&self, x: &[T], c: &[T]) -> Result<T, EvalFault> {
        let v = match self {
            Expr::Const(v) => T::lit(*v),
            Expr::Param(k) => c[*k],
            Expr::Species(i) => x[*i],
            Expr::Neg(a) => -a.eval(x, c)?,
            Expr::Add(a, b) => a.eval(x, c)? + b.eval(x, c)?,
            Expr::Sub(a, b) => a.eval(x, c)? - b.eval(x, c)?,
            Expr::Mul(a, b) => a.eval(x, c)? * b.eval(x, c)?,
            Expr::Div(a, b) => {
                let num = a.eval(x, c)?;
                let den = b.eval(x, c)?;
                if den == T::zero() {
                    return Err(EvalFault::DivisionByZero);
                }
                num / den
            }
            Expr::PowI(a, n) => {
                let base = a.eval(x, c)?;
                if *n < 0 && base == T::zero() {
                    return Err(EvalFault::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Pow(a, b) => {
                let base = a.eval(x, c)?;
                let exp = b.eval(x, c)?;
                if base == T::zero() && exp < T::zero() {
                    return Err(EvalFault::DivisionByZero);
                }
                base.powf(exp)
            }
            Expr::Ln(a) => a.eval(x, c)?.ln(),
            Expr::Exp(a) => a.eval(x, c)?.exp(),
            Expr::MassAction { param, reactants } => {
                let mut acc = c[*param];
                for &(i, m) in reactants {
                    acc = acc * x[i].powi(m as i32);
                }
                acc
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalFault::NonFinite)
        }
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn derivative(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Param(k) => Expr::Const(if var == Var::Param(*k) { 1.0 } else { 0.0 }),
            Expr::Species(i) => Expr::Const(if var == Var::Species(*i) { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                if is_zero(&db) {
                    div(da, (**b).clone())
                } else {
                    div(
                        sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                        powi((**b).clone(), 2),
                    )
                }
            }
            Expr::PowI(a, n) => mul(
                mul(Expr::Const(*n as f64), powi((**a).clone(), n - 1)),
                a.derivative(var),
            ),
            Expr::Pow(a, b) => {
                let da = a.derivative(var);
                if !b.depends_on(var) {
                    let lowered = Expr::Pow(a.clone(), bx(sub((**b).clone(), Expr::Const(1.0))));
                    mul(mul((**b).clone(), lowered), da)
                } else {
                    let db = b.derivative(var);
                    let inner = add(
                        mul(db, Expr::Ln(a.clone())),
                        mul((**b).clone(), div(da, (**a).clone())),
                    );
                    mul(self.clone(), inner)
                }
            }
            Expr::Ln(a) => div(a.derivative(var), (**a).clone()),
            Expr::Exp(a) => mul(self.clone(), a.derivative(var)),
            Expr::MassAction { .. } => {
                if self.depends_on(var) {
                    self.expand().derivative(var)
                } else {
                    Expr::Const(0.0)
                }
            }
        }
    }

    /// Replace every parameter and species leaf.
    ///
    /// Mass-action nodes survive when their parameter maps to a parameter
    /// and every reactant maps to a species; otherwise they are expanded
    /// first.
    pub fn substitute(
        &self,
        param: &dyn Fn(usize) -> Expr,
        species: &dyn Fn(usize) -> Expr,
    ) -> Expr {
        match self {
            Expr::Param(k) => param(*k),
            Expr::Species(i) => species(*i),
            Expr::MassAction { param: k, reactants } => {
                let mapped_param = param(*k);
                let mapped: Option<Vec<(usize, u32)>> = reactants
                    .iter()
                    .map(|&(i, m)| match species(i) {
                        Expr::Species(j) => Some((j, m)),
                        _ => None,
                    })
                    .collect();
                match (mapped_param, mapped) {
                    (Expr::Param(k2), Some(r)) => Expr::mass_action(k2, &r),
                    _ => self.expand().substitute(param, species),
                }
            }
            other => other.map_children(|c| c.substitute(param, species)),
        }
    }

    /// Print in the infix language, resolving indices through `names`.
    pub fn to_infix(&self, names: Names<'_>) -> String {
        let mut out = String::new();
        self.write_infix(&mut out, names);
        out
    }

    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) | Expr::MassAction { .. } => 2,
            Expr::Neg(_) => 3,
            Expr::Const(v) if v.is_sign_negative() => 3,
            Expr::PowI(..) | Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_child(&self, out: &mut String, names: Names<'_>, paren: bool) {
        if paren {
            out.push('(');
            self.write_infix(out, names);
            out.push(')');
        } else {
            self.write_infix(out, names);
        }
    }

    fn write_infix(&self, out: &mut String, names: Names<'_>) {
        let binary = |out: &mut String, a: &Expr, op: &str, b: &Expr, lvl: u8| {
            a.write_child(out, names, a.level() < lvl);
            out.push_str(op);
            b.write_child(out, names, b.level() <= lvl);
        };
        match self {
            Expr::Const(v) => {
                let _ = write!(out, "{v}");
            }
            Expr::Param(k) => write_name(out, &names.params[*k]),
            Expr::Species(i) => write_name(out, &names.species[*i]),
            Expr::Neg(a) => {
                out.push('-');
                a.write_child(out, names, a.level() <= 3);
            }
            Expr::Add(a, b) => binary(out, a, " + ", b, 1),
            Expr::Sub(a, b) => binary(out, a, " - ", b, 1),
            Expr::Mul(a, b) => binary(out, a, " * ", b, 2),
            Expr::Div(a, b) => binary(out, a, " / ", b, 2),
            Expr::PowI(a, n) => {
                a.write_child(out, names, a.level() <= 4);
                let _ = write!(out, "^{n}");
            }
            Expr::Pow(a, b) => {
                a.write_child(out, names, a.level() <= 4);
                out.push_str("^(");
                b.write_infix(out, names);
                out.push(')');
            }
            Expr::Ln(a) => {
                out.push_str("ln(");
                a.write_infix(out, names);
                out.push(')');
            }
            Expr::Exp(a) => {
                out.push_str("exp(");
                a.write_infix(out, names);
                out.push(')');
            }
            Expr::MassAction { .. } => self.expand().write_infix(out, names),
        }
    }

    /// Parse an infix expression, resolving names against parameters first
    /// and species second. A name present in both tables is rejected.
    pub fn parse(text: &str, names: Names<'_>) -> Result<Expr> {
        let mut p = Parser { src: text.as_bytes(), pos: 0, names };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }
}

fn is_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name != "ln"
        && name != "exp"
}

fn write_name(out: &mut String, name: &str) {
    if is_ident(name) {
        out.push_str(name);
    } else {
        out.push('[');
        out.push_str(name);
        out.push(']');
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: Names<'a>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::Add(bx(acc), bx(self.term()?));
            } else if self.eat(b'-') {
                acc = Expr::Sub(bx(acc), bx(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = Expr::Mul(bx(acc), bx(self.unary()?));
            } else if self.eat(b'/') {
                acc = Expr::Div(bx(acc), bx(self.unary()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(match self.unary()? {
                Expr::Const(v) => Expr::Const(-v),
                other => Expr::Neg(bx(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        if let Some(n) = self.try_int_exponent() {
            return Ok(Expr::PowI(bx(base), n));
        }
        Ok(Expr::Pow(bx(base), bx(self.unary()?)))
    }

    /// A bare integer literal (optionally signed) not followed by `.`, `e`
    /// or further digits.
    fn try_int_exponent(&mut self) -> Option<i32> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        if self.src.get(end) == Some(&b'-') {
            end += 1;
        }
        let digits_start = end;
        while end < self.src.len() && self.src[end].is_ascii_digit() {
            end += 1;
        }
        if end == digits_start {
            return None;
        }
        if matches!(self.src.get(end), Some(b'.' | b'e' | b'E')) {
            return None;
        }
        let text = std::str::from_utf8(&self.src[start..end]).ok()?;
        let n = text.parse::<i32>().ok()?;
        self.pos = end;
        Some(n)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(b'[') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos] != b']' {
                    self.pos += 1;
                }
                if self.pos == self.src.len() {
                    return Err(self.err("unterminated '['"));
                }
                let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                self.pos += 1;
                self.resolve(&name)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                let is_call = self.peek() == Some(b'(');
                match (name, is_call) {
                    ("ln", true) | ("exp", true) => {
                        let func = name.to_string();
                        self.pos += 1;
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.err("expected ')'"));
                        }
                        Ok(if func == "ln" { Expr::Ln(bx(arg)) } else { Expr::Exp(bx(arg)) })
                    }
                    _ => {
                        let name = name.to_string();
                        self.resolve(&name)
                    }
                }
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let mut end = start;
        while end < s.len() && (s[end].is_ascii_digit() || s[end] == b'.') {
            end += 1;
        }
        if end < s.len() && (s[end] == b'e' || s[end] == b'E') {
            let mut e = end + 1;
            if e < s.len() && (s[e] == b'+' || s[e] == b'-') {
                e += 1;
            }
            if e < s.len() && s[e].is_ascii_digit() {
                while e < s.len() && s[e].is_ascii_digit() {
                    e += 1;
                }
                end = e;
            }
        }
        let text = std::str::from_utf8(&s[start..end]).unwrap_or_default();
        let v: f64 = text.parse().map_err(|_| self.err("malformed number"))?;
        self.pos = end;
        Ok(Expr::Const(v))
    }

    fn resolve(&self, name: &str) -> Result<Expr> {
        let p = self.names.params.iter().position(|n| n == name);
        let s = self.names.species.iter().position(|n| n == name);
        match (p, s) {
            (Some(_), Some(_)) => Err(Error::Schema(format!(
                "name \"{name}\" is both a parameter and a species"
            ))),
            (Some(k), None) => Ok(Expr::Param(k)),
            (None, Some(i)) => Ok(Expr::Species(i)),
            (None, None) => Err(Error::UnknownParameter(name.to_string())),
        }
    }
}
