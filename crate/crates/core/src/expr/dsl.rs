//! Line-oriented problem text format.
//!
//! ```text
//! # comment
//! var x in [-1, 1]
//! var y in [0, inf]
//! term x^2 + sin(x * y)
//! offset 0.5
//! ```
//!
//! `^` takes an integer exponent and binds tighter than unary minus. A minus
//! directly in front of a number literal (not followed by `^`) reads as a
//! negative constant. The printer parenthesizes every binary operation so
//! that printing and re-parsing reproduces the same tree.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::expr::function::{ObjectiveFunction, Term, Variable};
use crate::expr::node::{BinaryOp, ExprNode, UnaryOp};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

struct Lexer {
    line: usize,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(line: usize, src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
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
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| syntax(line, col, format!("bad number `{text}`")))?;
            out.push((Tok::Num(v), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()[],".contains(c) {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return Err(syntax(line, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

impl Lexer {
    fn new(line: usize, src: &str) -> Result<Self> {
        Ok(Lexer {
            line,
            toks: tokenize(line, src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|&(_, c)| c)
            .unwrap_or_else(|| self.toks.last().map_or(1, |&(_, c)| c + 1))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        syntax(self.line, self.column(), message)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected `{c}`"))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// Decimal literal or `inf`, optionally signed.
    fn bound(&mut self) -> Result<f64> {
        let sign = match self.peek() {
            Some(Tok::Sym('-')) => {
                self.pos += 1;
                -1.0
            }
            Some(Tok::Sym('+')) => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        match self.next() {
            Some(Tok::Num(v)) => Ok(sign * v),
            Some(Tok::Ident(s)) if s == "inf" => Ok(sign * f64::INFINITY),
            _ => {
                self.pos -= 1;
                Err(self.err("expected a number or `inf`"))
            }
        }
    }
}

struct ExprParser<'l, 'v> {
    lx: &'l mut Lexer,
    names: &'v HashMap<String, usize>,
}

impl<'l, 'v> ExprParser<'l, 'v> {
    fn expr<T: Scalar>(&mut self) -> Result<ExprNode<T>> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.lx.peek() {
                Some(Tok::Sym('+')) => BinaryOp::Add,
                Some(Tok::Sym('-')) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.lx.pos += 1;
            let rhs = self.product()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn product<T: Scalar>(&mut self) -> Result<ExprNode<T>> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.lx.peek() {
                Some(Tok::Sym('*')) => BinaryOp::Mul,
                Some(Tok::Sym('/')) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.lx.pos += 1;
            let rhs = self.unary()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn unary<T: Scalar>(&mut self) -> Result<ExprNode<T>> {
        if let Some(Tok::Sym('-')) = self.lx.peek() {
            if let Some(Tok::Num(v)) = self.lx.peek_at(1) {
                if self.lx.peek_at(2) != Some(&Tok::Sym('^')) {
                    let v = *v;
                    self.lx.pos += 2;
                    return Ok(ExprNode::Const(T::of(-v)));
                }
            }
            self.lx.pos += 1;
            let inner = self.unary()?;
            return Ok(ExprNode::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power<T: Scalar>(&mut self) -> Result<ExprNode<T>> {
        let base = self.primary()?;
        if let Some(Tok::Sym('^')) = self.lx.peek() {
            self.lx.pos += 1;
            let n = self.exponent()?;
            return Ok(ExprNode::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = matches!(self.lx.peek(), Some(Tok::Sym('(')));
        if paren {
            self.lx.pos += 1;
        }
        let neg = matches!(self.lx.peek(), Some(Tok::Sym('-')));
        if neg {
            self.lx.pos += 1;
        }
        let n = match self.lx.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => *v as i32,
            _ => return Err(self.lx.err("exponent must be an integer literal")),
        };
        self.lx.pos += 1;
        if paren {
            self.lx.expect_sym(')')?;
        }
        Ok(if neg { -n } else { n })
    }

    fn primary<T: Scalar>(&mut self) -> Result<ExprNode<T>> {
        let col = self.lx.column();
        match self.lx.next() {
            Some(Tok::Num(v)) => Ok(ExprNode::Const(T::of(v))),
            Some(Tok::Sym('(')) => {
                let e = self.expr()?;
                self.lx.expect_sym(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let func = match name.as_str() {
                    "sin" => Some(UnaryOp::Sin),
                    "cos" => Some(UnaryOp::Cos),
                    "exp" => Some(UnaryOp::Exp),
                    "log" => Some(UnaryOp::Log),
                    "sqrt" => Some(UnaryOp::Sqrt),
                    _ => None,
                };
                if let Some(op) = func {
                    if let Some(Tok::Sym('(')) = self.lx.peek() {
                        self.lx.pos += 1;
                        let e = self.expr()?;
                        self.lx.expect_sym(')')?;
                        return Ok(ExprNode::Unary(op, Box::new(e)));
                    }
                }
                if name == "inf" {
                    return Ok(ExprNode::Const(T::infinity()));
                }
                match self.names.get(&name) {
                    Some(&i) => Ok(ExprNode::Var(i)),
                    None => Err(Error::UndeclaredVariable {
                        name,
                        line: self.lx.line,
                    }),
                }
            }
            Some(Tok::Sym(c)) => Err(syntax(self.lx.line, col, format!("unexpected `{c}`"))),
            None => Err(syntax(self.lx.line, col, "unexpected end of line")),
        }
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(
        name,
        "sin" | "cos" | "exp" | "log" | "sqrt" | "inf" | "var" | "term" | "in" | "offset"
    )
}

/// Parses problem text into an objective function.
pub fn parse_problem<T: Scalar>(text: &str) -> Result<ObjectiveFunction<T>> {
    let mut variables: Vec<Variable<T>> = Vec::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut exprs: Vec<ExprNode<T>> = Vec::new();
    let mut offset = T::zero();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut lx = Lexer::new(line, raw)?;
        let keyword = match lx.next() {
            None => continue,
            Some(Tok::Ident(s)) => s,
            Some(_) => {
                lx.pos -= 1;
                return Err(lx.err("expected `var`, `term` or `offset`"));
            }
        };
        match keyword.as_str() {
            "var" => {
                let name = match lx.next() {
                    Some(Tok::Ident(s)) if !is_reserved(&s) => s,
                    _ => {
                        lx.pos -= 1;
                        return Err(lx.err("expected a variable name"));
                    }
                };
                match lx.next() {
                    Some(Tok::Ident(s)) if s == "in" => {}
                    _ => {
                        lx.pos -= 1;
                        return Err(lx.err("expected `in`"));
                    }
                }
                lx.expect_sym('[')?;
                let lo = lx.bound()?;
                lx.expect_sym(',')?;
                let hi = lx.bound()?;
                lx.expect_sym(']')?;
                if !lx.at_end() {
                    return Err(lx.err("trailing input"));
                }
                if names.contains_key(&name) {
                    return Err(Error::DuplicateVariable(name));
                }
                let index = variables.len();
                variables.push(Variable::new(index, name.clone(), T::of(lo), T::of(hi))?);
                names.insert(name, index);
            }
            "term" => {
                if lx.at_end() {
                    return Err(lx.err("empty term"));
                }
                let e = ExprParser {
                    lx: &mut lx,
                    names: &names,
                }
                .expr()?;
                if !lx.at_end() {
                    return Err(lx.err("trailing input"));
                }
                exprs.push(e);
            }
            "offset" => {
                offset += T::of(lx.bound()?);
                if !lx.at_end() {
                    return Err(lx.err("trailing input"));
                }
            }
            _ => {
                lx.pos -= 1;
                return Err(lx.err(format!("unknown directive `{keyword}`")));
            }
        }
    }
    let f = ObjectiveFunction::new(variables, exprs)?;
    if offset.is_zero() {
        Ok(f)
    } else {
        let universe = f.universe();
        ObjectiveFunction::from_parts(f.variables().to_vec(), f.terms().to_vec(), offset, universe)
    }
}

fn write_number<T: Scalar>(out: &mut String, v: T) {
    if v.is_infinite() {
        out.push_str(if v > T::zero() { "inf" } else { "-inf" });
        return;
    }
    let a = v.abs();
    if a != T::zero() && (a < T::of(1e-4) || a >= T::of(1e15)) {
        let _ = write!(out, "{v:e}");
    } else {
        let _ = write!(out, "{v}");
    }
}

fn write_expr<T: Scalar>(out: &mut String, e: &ExprNode<T>, names: &dyn Fn(usize) -> String) {
    match e {
        ExprNode::Const(c) => write_number(out, *c),
        ExprNode::Var(i) => out.push_str(&names(*i)),
        ExprNode::Unary(UnaryOp::Neg, a) => {
            out.push_str("-(");
            write_expr(out, a, names);
            out.push(')');
        }
        ExprNode::Unary(op, a) => {
            out.push_str(op.name());
            out.push('(');
            write_expr(out, a, names);
            out.push(')');
        }
        ExprNode::Binary(op, a, b) => {
            out.push('(');
            write_expr(out, a, names);
            out.push(' ');
            out.push(op.symbol());
            out.push(' ');
            write_expr(out, b, names);
            out.push(')');
        }
        ExprNode::Pow(a, n) => {
            out.push('(');
            write_expr(out, a, names);
            let _ = write!(out, ")^{n}");
        }
    }
}

/// Renders a single expression using the function's variable names.
pub fn expr_to_string<T: Scalar>(f: &ObjectiveFunction<T>, e: &ExprNode<T>) -> String {
    let mut s = String::new();
    let names = |i: usize| f.variable(i).map(|v| v.name.clone()).unwrap_or_else(|| format!("x{i}"));
    write_expr(&mut s, e, &names);
    s
}

/// Renders the function in the problem text format.
pub fn to_dsl<T: Scalar>(f: &ObjectiveFunction<T>) -> String {
    let mut out = String::new();
    for v in f.variables() {
        let _ = write!(out, "var {} in [", v.name);
        write_number(&mut out, v.domain.lo());
        out.push_str(", ");
        write_number(&mut out, v.domain.hi());
        out.push_str("]\n");
    }
    for t in f.terms() {
        out.push_str("term ");
        out.push_str(&expr_to_string(f, t.expr()));
        out.push('\n');
    }
    if !f.offset().is_zero() {
        out.push_str("offset ");
        write_number(&mut out, f.offset());
        out.push('\n');
    }
    out
}

impl<T: Scalar> Term<T> {
    /// Structural equality of the underlying expressions.
    pub fn same_expr(&self, other: &Self) -> bool {
        self.expr() == other.expr()
    }
}
