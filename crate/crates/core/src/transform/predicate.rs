//! Row filters: `field op literal`, `field in [..]`, `field not in [..]`,
//! combined with `and`/`or` (and binding tighter) and parentheses.

use std::fmt;

use super::lexer::{lex, Cursor, Tok};
use super::TransformError;
use crate::frame::{Column, ColumnData, DataFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn test(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Num(f64),
    Str(String),
    Null,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Num(v) => write!(f, "{v}"),
            Literal::Str(s) => write!(f, "{}", quote(s)),
            Literal::Null => f.write_str("null"),
        }
    }
}

/// Renders a string as a double-quoted predicate literal.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Renders a field reference, backtick-quoting names that are not bare identifiers.
pub fn field_ref(name: &str) -> String {
    let bare = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_' || c == '$')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$'))
        && !matches!(name, "and" | "or" | "not" | "in" | "true" | "false" | "null");
    if bare {
        name.to_string()
    } else {
        format!("`{name}`")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Const(bool),
    Cmp { field: String, op: CmpOp, value: Literal },
    In { field: String, values: Vec<Literal>, negated: bool },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Const(b) => write!(f, "{b}"),
            Predicate::Cmp { field, op, value } => write!(f, "{} {} {value}", field_ref(field), op.symbol()),
            Predicate::In { field, values, negated } => {
                let items: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                let not = if *negated { "not " } else { "" };
                write!(f, "{} {not}in [{}]", field_ref(field), items.join(", "))
            }
            Predicate::And(a, b) => write!(f, "({a} and {b})"),
            Predicate::Or(a, b) => write!(f, "({a} or {b})"),
        }
    }
}

fn parse_err(pos: usize, message: String) -> TransformError {
    TransformError::PredicateParse { pos, message }
}

pub fn parse_predicate(src: &str) -> Result<Predicate, TransformError> {
    let lexed = lex(src, parse_err)?;
    let mut c = Cursor::new(&lexed, parse_err);
    let p = or(&mut c)?;
    c.finish()?;
    Ok(p)
}

fn or(c: &mut Cursor) -> Result<Predicate, TransformError> {
    let mut left = and(c)?;
    while c.eat(&Tok::Or) {
        left = Predicate::Or(Box::new(left), Box::new(and(c)?));
    }
    Ok(left)
}

fn and(c: &mut Cursor) -> Result<Predicate, TransformError> {
    let mut left = atom(c)?;
    while c.eat(&Tok::And) {
        left = Predicate::And(Box::new(left), Box::new(atom(c)?));
    }
    Ok(left)
}

fn atom(c: &mut Cursor) -> Result<Predicate, TransformError> {
    match c.next() {
        Some(Tok::Op("(")) => {
            let p = or(c)?;
            c.expect(&Tok::Op(")"), "`)`")?;
            Ok(p)
        }
        Some(Tok::True) => Ok(Predicate::Const(true)),
        Some(Tok::False) => Ok(Predicate::Const(false)),
        Some(Tok::Field(name)) => {
            let field = name.clone();
            let negated = c.eat(&Tok::Not);
            if c.eat(&Tok::In) {
                c.expect(&Tok::Op("["), "`[`")?;
                let mut values = Vec::new();
                if !c.eat(&Tok::Op("]")) {
                    loop {
                        values.push(literal(c)?);
                        if c.eat(&Tok::Op("]")) {
                            break;
                        }
                        c.expect(&Tok::Op(","), "`,` or `]`")?;
                    }
                }
                return Ok(Predicate::In { field, values, negated });
            }
            if negated {
                return Err(c.error("expected `in` after `not`".into()));
            }
            let op = match c.next() {
                Some(Tok::Op("==")) => CmpOp::Eq,
                Some(Tok::Op("!=")) => CmpOp::Ne,
                Some(Tok::Op("<")) => CmpOp::Lt,
                Some(Tok::Op("<=")) => CmpOp::Le,
                Some(Tok::Op(">")) => CmpOp::Gt,
                Some(Tok::Op(">=")) => CmpOp::Ge,
                _ => return Err(c.error("expected a comparison operator".into())),
            };
            Ok(Predicate::Cmp {
                field,
                op,
                value: literal(c)?,
            })
        }
        _ => Err(c.error("expected a field, `(`, `true` or `false`".into())),
    }
}

fn literal(c: &mut Cursor) -> Result<Literal, TransformError> {
    let negative = c.eat(&Tok::Op("-"));
    let lit = match c.next() {
        Some(Tok::Num(v)) => Literal::Num(if negative { -v } else { *v }),
        Some(Tok::Str(s)) if !negative => Literal::Str(s.clone()),
        Some(Tok::True) if !negative => Literal::Num(1.0),
        Some(Tok::False) if !negative => Literal::Num(0.0),
        Some(Tok::Null) if !negative => Literal::Null,
        _ => return Err(c.error("expected a literal".into())),
    };
    Ok(lit)
}

impl Predicate {
    pub fn fields(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields(&self, out: &mut Vec<String>) {
        match self {
            Predicate::Const(_) => {}
            Predicate::Cmp { field, .. } | Predicate::In { field, .. } => {
                if !out.contains(field) {
                    out.push(field.clone());
                }
            }
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.collect_fields(out);
                b.collect_fields(out);
            }
        }
    }

    /// One flag per row.
    pub fn evaluate(&self, frame: &DataFrame) -> Result<Vec<bool>, TransformError> {
        let n = frame.row_count();
        match self {
            Predicate::Const(b) => Ok(vec![*b; n]),
            Predicate::Cmp { field, op, value } => {
                let col = column(frame, field)?;
                compare(col, *op, value)
            }
            Predicate::In { field, values, negated } => {
                let col = column(frame, field)?;
                let mut hit = vec![false; n];
                for v in values {
                    for (h, m) in hit.iter_mut().zip(compare(col, CmpOp::Eq, v)?) {
                        *h |= m;
                    }
                }
                if *negated {
                    for (i, h) in hit.iter_mut().enumerate() {
                        *h = !*h && col.is_valid(i);
                    }
                }
                Ok(hit)
            }
            Predicate::And(a, b) => {
                let (x, y) = (a.evaluate(frame)?, b.evaluate(frame)?);
                Ok(x.iter().zip(y).map(|(p, q)| *p && q).collect())
            }
            Predicate::Or(a, b) => {
                let (x, y) = (a.evaluate(frame)?, b.evaluate(frame)?);
                Ok(x.iter().zip(y).map(|(p, q)| *p || q).collect())
            }
        }
    }
}

fn column<'a>(frame: &'a DataFrame, name: &str) -> Result<&'a Column, TransformError> {
    frame
        .column(name)
        .map(|c| c.as_ref())
        .ok_or_else(|| TransformError::UnknownColumn(name.to_string()))
}

/// Nulls never satisfy a comparison except `== null`.
fn compare(col: &Column, op: CmpOp, value: &Literal) -> Result<Vec<bool>, TransformError> {
    let n = col.len();
    let mismatch = |what: &str| TransformError::TypeMismatch {
        field: col.name().to_string(),
        message: what.to_string(),
    };
    match value {
        Literal::Null => match op {
            CmpOp::Eq => Ok((0..n).map(|i| !col.is_valid(i)).collect()),
            CmpOp::Ne => Ok((0..n).map(|i| col.is_valid(i)).collect()),
            _ => Err(mismatch("only == and != apply to null")),
        },
        Literal::Num(v) => match col.data() {
            ColumnData::Int64(data) if v.fract() == 0.0 && v.abs() < 9.0e15 => {
                let lit = *v as i64;
                Ok((0..n).map(|i| col.is_valid(i) && op.test(data[i].cmp(&lit))).collect())
            }
            ColumnData::Int64(_) | ColumnData::Float64(_) => Ok((0..n)
                .map(|i| col.f64_at(i).is_some_and(|x| x.partial_cmp(v).is_some_and(|o| op.test(o))))
                .collect()),
            ColumnData::Categorical { .. } => Err(mismatch("categorical field compared with a number")),
        },
        Literal::Str(s) => match col.data() {
            ColumnData::Categorical { codes, dictionary } => {
                if !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    return Err(mismatch(&format!("`{}` is not defined on categorical fields", op.symbol())));
                }
                let target = dictionary.iter().position(|d| d == s);
                Ok((0..n)
                    .map(|i| {
                        col.is_valid(i) && {
                            let eq = Some(codes[i] as usize) == target;
                            if op == CmpOp::Eq {
                                eq
                            } else {
                                !eq
                            }
                        }
                    })
                    .collect())
            }
            _ => Err(mismatch("numeric field compared with a string")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> DataFrame {
        DataFrame::new(vec![
            Column::int64("ChangePoints", vec![0, 1, 0, 1]),
            Column::categorical("Country", &[Some("US"), Some("Italy"), Some("China"), None]),
            Column::from_f64_options("v", &[Some(1.5), None, Some(-2.0), Some(4.0)]),
        ])
        .unwrap()
    }

    fn rows(src: &str) -> Vec<usize> {
        let mask = parse_predicate(src).unwrap().evaluate(&frame()).unwrap();
        mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect()
    }

    #[test]
    fn comparisons() {
        assert_eq!(rows("ChangePoints == 1"), vec![1, 3]);
        assert_eq!(rows("v >= -2"), vec![0, 2, 3]);
        assert_eq!(rows("v != 1.5"), vec![2, 3]);
        assert_eq!(rows("v == null"), vec![1]);
        assert_eq!(rows("true"), vec![0, 1, 2, 3]);
    }

    #[test]
    fn membership_and_logic() {
        assert_eq!(rows(r#"Country in ["US", "Italy", "Spain"]"#), vec![0, 1]);
        assert_eq!(rows(r#"Country not in ["US"]"#), vec![1, 2]);
        assert_eq!(rows("ChangePoints == 0 and (v < 0 or v > 1)"), vec![0, 2]);
        assert_eq!(rows("`ChangePoints` == 1 or Country == 'China'"), vec![1, 2, 3]);
    }

    #[test]
    fn type_and_parse_errors() {
        let f = frame();
        let err = parse_predicate("Country < \"US\"").unwrap().evaluate(&f).unwrap_err();
        assert!(matches!(err, TransformError::TypeMismatch { .. }));
        let err = parse_predicate("v == 'x'").unwrap().evaluate(&f).unwrap_err();
        assert!(matches!(err, TransformError::TypeMismatch { .. }));
        assert!(matches!(parse_predicate("v =="), Err(TransformError::PredicateParse { pos: 4, .. })));
        assert!(matches!(parse_predicate("(v == 1"), Err(TransformError::PredicateParse { .. })));
        assert!(matches!(
            parse_predicate("q == 1").unwrap().evaluate(&f),
            Err(TransformError::UnknownColumn(_))
        ));
    }

    #[test]
    fn display_reparses() {
        for src in ["a == 1 and (b in [\"x\", 2] or `c d` != null)", "x not in []", "false"] {
            let p = parse_predicate(src).unwrap();
            assert_eq!(parse_predicate(&p.to_string()).unwrap(), p);
        }
    }
}
