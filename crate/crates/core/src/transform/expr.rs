//! Row-wise arithmetic: field references, numeric literals, `+ - * /`, unary
//! minus and parentheses. Nulls propagate; division by zero yields null.

use std::fmt;

use super::lexer::{lex, Cursor, Tok};
use super::predicate::field_ref;
use super::TransformError;
use crate::frame::{Column, DType, DataFrame};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Field(String),
    Neg(Box<Expr>),
    Bin(Box<Expr>, char, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "({v})"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Field(name) => f.write_str(&field_ref(name)),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(a, op, b) => write!(f, "({a} {op} {b})"),
        }
    }
}

fn parse_err(pos: usize, message: String) -> TransformError {
    TransformError::ExprParse { pos, message }
}

pub fn parse_expr(src: &str) -> Result<Expr, TransformError> {
    let lexed = lex(src, parse_err)?;
    let mut c = Cursor::new(&lexed, parse_err);
    let e = sum(&mut c)?;
    c.finish()?;
    Ok(e)
}

fn sum(c: &mut Cursor) -> Result<Expr, TransformError> {
    let mut left = product(c)?;
    loop {
        let op = match c.peek() {
            Some(Tok::Op("+")) => '+',
            Some(Tok::Op("-")) => '-',
            _ => return Ok(left),
        };
        c.next();
        left = Expr::Bin(Box::new(left), op, Box::new(product(c)?));
    }
}

fn product(c: &mut Cursor) -> Result<Expr, TransformError> {
    let mut left = unary(c)?;
    loop {
        let op = match c.peek() {
            Some(Tok::Op("*")) => '*',
            Some(Tok::Op("/")) => '/',
            _ => return Ok(left),
        };
        c.next();
        left = Expr::Bin(Box::new(left), op, Box::new(unary(c)?));
    }
}

fn unary(c: &mut Cursor) -> Result<Expr, TransformError> {
    if c.eat(&Tok::Op("-")) {
        return Ok(Expr::Neg(Box::new(unary(c)?)));
    }
    match c.next() {
        Some(Tok::Num(v)) => Ok(Expr::Num(*v)),
        Some(Tok::Field(name)) => Ok(Expr::Field(name.clone())),
        Some(Tok::Op("(")) => {
            let e = sum(c)?;
            c.expect(&Tok::Op(")"), "`)`")?;
            Ok(e)
        }
        _ => Err(c.error("expected a number, field or `(`".into())),
    }
}

impl Expr {
    pub fn fields(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Field(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(e) => e.collect(out),
            Expr::Bin(a, _, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn evaluate(&self, frame: &DataFrame) -> Result<Vec<Option<f64>>, TransformError> {
        let n = frame.row_count();
        Ok(match self {
            Expr::Num(v) => vec![Some(*v); n],
            Expr::Field(name) => {
                let col = frame
                    .column(name)
                    .ok_or_else(|| TransformError::UnknownColumn(name.clone()))?;
                if col.dtype() == DType::Categorical {
                    return Err(TransformError::TypeMismatch {
                        field: name.clone(),
                        message: "arithmetic on a categorical field".into(),
                    });
                }
                (0..n).map(|i| col.f64_at(i)).collect()
            }
            Expr::Neg(e) => e.evaluate(frame)?.into_iter().map(|v| v.map(|x| -x)).collect(),
            Expr::Bin(a, op, b) => {
                let (x, y) = (a.evaluate(frame)?, b.evaluate(frame)?);
                x.into_iter()
                    .zip(y)
                    .map(|(p, q)| {
                        let (p, q) = (p?, q?);
                        let r = match op {
                            '+' => p + q,
                            '-' => p - q,
                            '*' => p * q,
                            _ if q == 0.0 => return None,
                            _ => p / q,
                        };
                        r.is_finite().then_some(r)
                    })
                    .collect()
            }
        })
    }

    pub fn evaluate_column(&self, frame: &DataFrame, name: &str) -> Result<Column, TransformError> {
        Ok(Column::from_f64_options(name, &self.evaluate(frame)?))
    }
}
