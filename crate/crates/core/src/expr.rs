//! Parser and evaluator for user-typed transforms h*(s).
//!
//! Grammar (precedence low to high, `^` right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 's' | func '(' expr ')' | '(' expr ')' | ('+' | '-') base
//! ```
//!
//! Exponents must be constant (free of `s`). There is no imaginary literal:
//! the transform of a real function is conjugate-symmetric, and restricting
//! the language keeps every expression that way (up to branch cuts).

use std::fmt;

use num_complex::Complex64;

use crate::framework::TransformQuery;
use crate::special::{cexp, e1, erfc, erfcx};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sqrt,
    Sin,
    Cos,
    Log,
    Erfc,
    Erfcx,
    E1,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Exp,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Log,
        Func::Erfc,
        Func::Erfcx,
        Func::E1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Log => "log",
            Func::Erfc => "erfc",
            Func::Erfcx => "erfcx",
            Func::E1 => "e1",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
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
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Number(f64),
    Var,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// AST node. Equality ignores spans, so a re-parsed pretty print compares
/// equal to the original tree.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Number(a), NodeKind::Number(b)) => a.to_bits() == b.to_bits(),
            (NodeKind::Var, NodeKind::Var) => true,
            (NodeKind::Neg(a), NodeKind::Neg(b)) => a == b,
            (NodeKind::Binary(o1, l1, r1), NodeKind::Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            (NodeKind::Call(f1, a1), NodeKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Node {
    pub fn new(kind: NodeKind) -> Node {
        Node {
            kind,
            span: Span { start: 0, end: 0 },
        }
    }

    pub fn depends_on_s(&self) -> bool {
        match &self.kind {
            NodeKind::Number(_) => false,
            NodeKind::Var => true,
            NodeKind::Neg(a) | NodeKind::Call(_, a) => a.depends_on_s(),
            NodeKind::Binary(_, l, r) => l.depends_on_s() || r.depends_on_s(),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Number(v) => write!(f, "{v:?}"),
            NodeKind::Var => f.write_str("s"),
            NodeKind::Neg(a) => write!(f, "-{a}"),
            NodeKind::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            NodeKind::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprError {
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    UnknownFunction {
        name: String,
        span: Span,
    },
    UnknownIdentifier {
        name: String,
        span: Span,
    },
    Arity {
        name: &'static str,
        found: usize,
        span: Span,
    },
    NonConstantExponent {
        span: Span,
    },
    NumberOutOfRange {
        span: Span,
    },
    /// Evaluation failed inside the sub-expression `text`.
    Domain {
        message: String,
        span: Span,
        text: String,
    },
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::Syntax {
                offset,
                expected,
                found,
            } => write!(f, "syntax error at offset {offset}: expected {}, found {found}", expected.join(" or ")),
            ExprError::UnknownFunction { name, span } => write!(
                f,
                "unknown function `{name}` at offset {} (known: {})",
                span.start,
                Func::ALL.iter().map(|f| f.name()).collect::<Vec<_>>().join(", ")
            ),
            ExprError::UnknownIdentifier { name, span } => {
                write!(f, "unknown identifier `{name}` at offset {} (the only variable is `s`)", span.start)
            }
            ExprError::Arity { name, found, span } => {
                write!(f, "`{name}` takes 1 argument, got {found} at offset {}", span.start)
            }
            ExprError::NonConstantExponent { span } => {
                write!(f, "exponent at offset {} depends on s; only constant exponents are allowed", span.start)
            }
            ExprError::NumberOutOfRange { span } => write!(f, "number at offset {} is out of range", span.start),
            ExprError::Domain { message, span, text } => {
                write!(f, "{message} in `{text}` (offset {}..{})", span.start, span.end)
            }
        }
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const EXPECT_OPERAND: [&str; 6] = ["number", "'s'", "function name", "'('", "'+'", "'-'"];

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            i += 1;
            out.push((tok, Span { start, end: i }));
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
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
            let span = Span { start, end: i };
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                expected: vec!["number"],
                found: format!("`{text}`"),
            })?;
            if !v.is_finite() {
                return Err(ExprError::NumberOutOfRange { span });
            }
            out.push((Tok::Number(v), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), Span { start, end: i }));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ExprError::Syntax {
            offset: start,
            expected: EXPECT_OPERAND.to_vec(),
            found: format!("character {ch:?}"),
        });
    }
    out.push((
        Tok::End,
        Span {
            start: src.len(),
            end: src.len(),
        },
    ));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ExprError {
        ExprError::Syntax {
            offset: self.span().start,
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.term()?;
            left = binary(op, left, right);
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.factor()?;
            left = binary(op, left, right);
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.factor()?;
        if exponent.depends_on_s() {
            return Err(ExprError::NonConstantExponent { span: exponent.span });
        }
        Ok(binary(BinOp::Pow, base, exponent))
    }

    fn base(&mut self) -> Result<Node, ExprError> {
        let (tok, span) = (self.peek().clone(), self.span());
        match tok {
            Tok::Number(v) => {
                self.bump();
                Ok(Node {
                    kind: NodeKind::Number(v),
                    span,
                })
            }
            Tok::Minus => {
                self.bump();
                let inner = self.base()?;
                let span = Span {
                    start: span.start,
                    end: inner.span.end,
                };
                Ok(Node {
                    kind: NodeKind::Neg(Box::new(inner)),
                    span,
                })
            }
            Tok::Plus => {
                self.bump();
                let mut inner = self.base()?;
                inner.span.start = span.start;
                Ok(inner)
            }
            Tok::LParen => {
                self.bump();
                let mut inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["'+'", "'-'", "'*'", "'/'", "'^'", "')'"]));
                }
                let close = self.bump().1;
                inner.span = Span {
                    start: span.start,
                    end: close.end,
                };
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "s" {
                    return Ok(Node {
                        kind: NodeKind::Var,
                        span,
                    });
                }
                if *self.peek() != Tok::LParen {
                    return Err(ExprError::UnknownIdentifier { name, span });
                }
                let func = Func::from_name(&name).ok_or(ExprError::UnknownFunction {
                    name: name.clone(),
                    span,
                })?;
                self.bump();
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["'+'", "'-'", "'*'", "'/'", "'^'", "','", "')'"]));
                }
                let close = self.bump().1;
                let span = Span {
                    start: span.start,
                    end: close.end,
                };
                if args.len() != 1 {
                    return Err(ExprError::Arity {
                        name: func.name(),
                        found: args.len(),
                        span,
                    });
                }
                Ok(Node {
                    kind: NodeKind::Call(func, Box::new(args.pop().expect("one argument"))),
                    span,
                })
            }
            _ => Err(self.error(&EXPECT_OPERAND)),
        }
    }
}

fn binary(op: BinOp, l: Node, r: Node) -> Node {
    let span = Span {
        start: l.span.start,
        end: r.span.end,
    };
    Node {
        kind: NodeKind::Binary(op, Box::new(l), Box::new(r)),
        span,
    }
}

/// A parsed transform together with its source text.
#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    root: Node,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression, ExprError> {
        let mut p = Parser {
            toks: lex(source)?,
            pos: 0,
        };
        let root = p.expr()?;
        if *p.peek() != Tok::End {
            return Err(p.error(&["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"]));
        }
        Ok(Expression {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Fully parenthesised form that parses back to the same tree.
    pub fn pretty(&self) -> String {
        self.root.to_string()
    }

    pub fn evaluate(&self, s: Complex64) -> Result<Complex64, ExprError> {
        self.eval_node(&self.root, s)
    }

    /// Wraps the expression as a transform; evaluation errors become NaN,
    /// which the inversion reports as a non-finite transform value.
    pub fn into_query(self, abscissa: f64, bounded: bool) -> TransformQuery {
        TransformQuery::new(move |s| self.evaluate(s).unwrap_or(Complex64::new(f64::NAN, f64::NAN)), abscissa)
            .bounded(bounded)
    }

    fn domain(&self, node: &Node, message: &str) -> ExprError {
        let text = self
            .source
            .get(node.span.start..node.span.end)
            .map(str::to_string)
            .unwrap_or_else(|| node.to_string());
        ExprError::Domain {
            message: message.to_string(),
            span: node.span,
            text,
        }
    }

    fn eval_node(&self, node: &Node, s: Complex64) -> Result<Complex64, ExprError> {
        Ok(match &node.kind {
            NodeKind::Number(v) => Complex64::new(*v, 0.0),
            NodeKind::Var => s,
            NodeKind::Neg(a) => -self.eval_node(a, s)?,
            NodeKind::Binary(op, l, r) => {
                let a = self.eval_node(l, s)?;
                let b = self.eval_node(r, s)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.norm() < 1e-300 {
                            return Err(self.domain(node, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => self.power(node, a, b)?,
                }
            }
            NodeKind::Call(func, a) => {
                let z = self.eval_node(a, s)?;
                let zero = z.re == 0.0 && z.im == 0.0;
                match func {
                    Func::Exp => cexp(z),
                    Func::Sqrt => z.sqrt(),
                    Func::Sin => z.sin(),
                    Func::Cos => z.cos(),
                    Func::Log if zero => return Err(self.domain(node, "logarithm of zero")),
                    Func::Log => z.ln(),
                    Func::Erfc => erfc(z),
                    Func::Erfcx => erfcx(z),
                    Func::E1 if zero => return Err(self.domain(node, "E1 at zero")),
                    Func::E1 => e1(z),
                }
            }
        })
    }

    fn power(&self, node: &Node, base: Complex64, exponent: Complex64) -> Result<Complex64, ExprError> {
        let zero = base.re == 0.0 && base.im == 0.0;
        if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= 1024.0 {
            let n = exponent.re as i32;
            if zero && n < 0 {
                return Err(self.domain(node, "zero raised to a negative power"));
            }
            return Ok(base.powi(n));
        }
        if zero {
            if exponent.re > 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            return Err(self.domain(node, "zero raised to a non-positive power"));
        }
        Ok(base.powc(exponent))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expression::parse("1 + 2 * 3 ^ 2 ^ 0.5 - 4 / 2").unwrap();
        let expect = 1.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) - 2.0;
        assert!((e.evaluate(c(0.0, 0.0)).unwrap().re - expect).abs() < 1e-14);
        assert_eq!(e.pretty(), "((1.0 + (2.0 * (3.0 ^ (2.0 ^ 0.5)))) - (4.0 / 2.0))");
    }

    #[test]
    fn unary_minus_binds_to_the_base() {
        // base := '-' base, so -s^2 is (-s)^2.
        let e = Expression::parse("-s^2").unwrap();
        assert_eq!(e.evaluate(c(3.0, 0.0)).unwrap(), c(9.0, 0.0));
    }

    #[test]
    fn incomplete_input_reports_position_and_expectations() {
        let err = Expression::parse("1/(1+").unwrap_err();
        match err {
            ExprError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 5);
                assert!(expected.contains(&"'('") && expected.contains(&"number"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_for_names_arity_and_exponents() {
        assert!(matches!(Expression::parse("foo(s)"), Err(ExprError::UnknownFunction { .. })));
        assert!(matches!(Expression::parse("i*s"), Err(ExprError::UnknownIdentifier { .. })));
        assert!(matches!(Expression::parse("exp(s, 2)"), Err(ExprError::Arity { found: 2, .. })));
        assert!(matches!(Expression::parse("2^s"), Err(ExprError::NonConstantExponent { .. })));
        assert!(matches!(Expression::parse("1e999"), Err(ExprError::NumberOutOfRange { .. })));
    }

    #[test]
    fn domain_errors_carry_the_sub_expression() {
        let e = Expression::parse("1 + 1/(s - 2)").unwrap();
        match e.evaluate(c(2.0, 0.0)).unwrap_err() {
            ExprError::Domain { text, span, .. } => {
                assert_eq!(text, "1/(s - 2)");
                assert_eq!(span, Span { start: 4, end: 13 });
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
