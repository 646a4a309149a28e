//! Scalar expression DSL over the coordinates (x1, x2, t, y3, z, zeta).
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr     = term , { ( "+" | "-" ) , term } ;
//! term     = unary , { ( "*" | "/" ) , unary } ;
//! unary    = ( "-" | "+" ) , unary | power ;
//! power    = primary , [ "^" , exponent ] ;
//! exponent = ( "-" | "+" ) , exponent | power ;      (* must be constant *)
//! primary  = number | ident | ident , "(" , expr , ")" | "(" , expr , ")" ;
//! number   = digits , [ "." , digits ] , [ ( "e" | "E" ) , [ "+" | "-" ] , digits ]
//!          | "." , digits , [ exponent part ] ;
//! ident    = letter , { letter | digit | "_" } ;
//! ```
//!
//! Functions: exp, ln, sin, cos, sqrt, abs. Constants: `pi`. Precedence is
//! `^` (right associative) over unary minus over `*` `/` over `+` `-`, so
//! `-x^2` is `-(x^2)`.
//!
//! `z` and `zeta` are aliases of the time slot of the jet point; `y3` is the
//! Killing coordinate and may appear only in scalar evaluation.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X1,
    X2,
    T,
    Y3,
    Z,
    Zeta,
}

impl Var {
    pub const ALL: [Var; 6] = [Var::X1, Var::X2, Var::T, Var::Y3, Var::Z, Var::Zeta];

    pub fn name(self) -> &'static str {
        match self {
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::T => "t",
            Var::Y3 => "y3",
            Var::Z => "z",
            Var::Zeta => "zeta",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Jet slot of the variable; y3 has none.
    pub fn jet_slot(self) -> Option<usize> {
        match self {
            Var::X1 => Some(0),
            Var::X2 => Some(1),
            Var::T | Var::Z | Var::Zeta => Some(2),
            Var::Y3 => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    fn from_function(s: &str) -> Option<UnaryOp> {
        Some(match s {
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Arc<Expr>),
    /// For `Pow` the right operand is always a `Const`.
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable `{name}` at byte {offset} is not allowed here")]
    DisallowedVariable { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::DisallowedVariable { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("domain violation in `{node}`: {reason}")]
    Domain { node: String, reason: String },
    #[error("variable y3 has no jet slot (metrics are Killing in y3)")]
    KillingVariable,
    #[error("variable `{0}` has no value at this point")]
    Unbound(String),
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Number(f64),
    Ident(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
}

/// Tokenizer shared by the expression parser and the scenario reader.
/// `#` starts a comment that runs to the end of the input.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'#' => break,
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            b'[' => Some(TokenKind::LBracket),
            b']' => Some(TokenKind::RBracket),
            b',' => Some(TokenKind::Comma),
            b'=' => Some(TokenKind::Equals),
            _ => None,
        };
        if let Some(kind) = single {
            out.push(Token { kind, offset: start });
            i += 1;
            continue;
        }
        if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' {
                i += 1;
            }
            if i == bytes.len() {
                return Err(ParseError::Syntax { offset: start, message: "unterminated string".into() });
            }
            out.push(Token { kind: TokenKind::Str(text[start + 1..i].to_string()), offset: start });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let lexeme = &text[start..i];
            let value: f64 = lexeme
                .parse()
                .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{lexeme}`") })?;
            out.push(Token { kind: TokenKind::Number(value), offset: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                i += 1;
            }
            out.push(Token { kind: TokenKind::Ident(text[start..i].to_string()), offset: start });
            continue;
        }
        let ch = text[start..].chars().next().unwrap();
        return Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{ch}`") });
    }
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
    allowed: &'a [Var],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(TokenKind::Minus) => {
                self.pos += 1;
                let inner = self.unary()?;
                Ok(Expr::Unary(UnaryOp::Neg, Arc::new(inner)))
            }
            Some(TokenKind::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() != Some(&TokenKind::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.offset();
        let exponent = self.exponent()?;
        if exponent.has_variables() {
            return Err(ParseError::Syntax { offset: at, message: "exponent must be a constant".into() });
        }
        let value = exponent
            .eval(&|_| None)
            .map_err(|e| ParseError::Syntax { offset: at, message: format!("exponent does not evaluate: {e}") })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax { offset: at, message: "exponent is not finite".into() });
        }
        Ok(Expr::Binary(BinaryOp::Pow, Arc::new(base), Arc::new(Expr::Const(value))))
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(TokenKind::Minus) => {
                self.pos += 1;
                let inner = self.exponent()?;
                Ok(Expr::Unary(UnaryOp::Neg, Arc::new(inner)))
            }
            Some(TokenKind::Plus) => {
                self.pos += 1;
                self.exponent()
            }
            _ => self.power(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(TokenKind::Number(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(TokenKind::Ident(name)) => {
                self.pos += 1;
                if let Some(op) = UnaryOp::from_function(&name) {
                    if self.peek() != Some(&TokenKind::LParen) {
                        return self.syntax(format!("expected `(` after `{name}`"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Unary(op, Arc::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                match Var::from_name(&name) {
                    Some(v) if self.allowed.contains(&v) => Ok(Expr::Var(v)),
                    Some(_) => Err(ParseError::DisallowedVariable { offset, name }),
                    None => Err(ParseError::UnknownIdentifier { offset, name }),
                }
            }
            Some(other) => self.syntax(format!("unexpected token {other:?}")),
            None => self.syntax("unexpected end of input"),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(&TokenKind::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.syntax("expected `)`")
        }
    }
}

/// Parse `text` allowing only the listed variables.
pub fn parse_expression(text: &str, allowed: &[Var]) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let tokens = tokenize(text)?;
    parse_tokens(&tokens, text.len(), allowed)
}

/// Parse an already tokenized expression; `end` is the byte offset reported
/// for errors at end of input.
pub fn parse_tokens(tokens: &[Token], end: usize, allowed: &[Var]) -> Result<Expr, ParseError> {
    let mut p = Parser { tokens, pos: 0, end, allowed };
    let e = p.expr()?;
    if p.pos != tokens.len() {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

// ---------------------------------------------------------------- printing

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

// ---------------------------------------------------------------- evaluation

/// Point at which an expression is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
    pub t: f64,
    pub y3: f64,
}

impl Point {
    pub fn new(x1: f64, x2: f64, t: f64) -> Self {
        Point { x1, x2, t, y3: 0.0 }
    }

    pub fn lookup(&self, v: Var) -> f64 {
        match v {
            Var::X1 => self.x1,
            Var::X2 => self.x2,
            Var::T | Var::Z | Var::Zeta => self.t,
            Var::Y3 => self.y3,
        }
    }
}

fn domain(node: &Expr, reason: impl Into<String>) -> EvalError {
    EvalError::Domain { node: node.to_string(), reason: reason.into() }
}

fn integer_exponent(p: f64) -> Option<i32> {
    (p.fract() == 0.0 && p.abs() <= 64.0).then_some(p as i32)
}

impl Expr {
    pub fn has_variables(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Unary(_, a) => a.has_variables(),
            Expr::Binary(_, a, b) => a.has_variables() || b.has_variables(),
        }
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Scalar evaluation with a variable lookup.
    pub fn eval(&self, lookup: &dyn Fn(Var) -> Option<f64>) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Var(v) => lookup(*v).ok_or_else(|| EvalError::Unbound(v.name().into()))?,
            Expr::Unary(op, a) => {
                let x = a.eval(lookup)?;
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Ln => {
                        if x <= 0.0 {
                            return Err(domain(self, format!("ln of non-positive value {x}")));
                        }
                        x.ln()
                    }
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Sqrt => {
                        if x < 0.0 {
                            return Err(domain(self, format!("sqrt of negative value {x}")));
                        }
                        x.sqrt()
                    }
                    UnaryOp::Abs => x.abs(),
                }
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(lookup)?;
                let y = b.eval(lookup)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        x / y
                    }
                    BinaryOp::Pow => match integer_exponent(y) {
                        Some(n) => {
                            if x == 0.0 && n < 0 {
                                return Err(domain(self, "zero raised to a negative power"));
                            }
                            x.powi(n)
                        }
                        None => {
                            if x < 0.0 || (x == 0.0 && y < 0.0) {
                                return Err(domain(self, format!("non-integer power of {x}")));
                            }
                            x.powf(y)
                        }
                    },
                }
            }
        })
    }

    pub fn eval_at(&self, p: Point) -> Result<f64, EvalError> {
        self.eval(&|v| Some(p.lookup(v)))
    }

    /// Forward-mode jet evaluation at (x1, x2, t).
    pub fn jet(&self, p: [f64; 3], order: usize) -> Result<Jet, EvalError> {
        Ok(match self {
            Expr::Const(v) => Jet::constant(*v, order),
            Expr::Var(v) => {
                let slot = v.jet_slot().ok_or(EvalError::KillingVariable)?;
                Jet::variable(slot, p[slot], order)
            }
            Expr::Unary(op, a) => {
                let x = a.jet(p, order)?;
                let x0 = x.value();
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Ln => {
                        if x0 <= 0.0 {
                            return Err(domain(self, format!("ln of non-positive value {x0}")));
                        }
                        x.ln()
                    }
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Sqrt => {
                        if x0 < 0.0 || (x0 == 0.0 && order > 0) {
                            return Err(domain(self, format!("sqrt of value {x0}")));
                        }
                        x.sqrt()
                    }
                    UnaryOp::Abs => x.abs(),
                }
            }
            Expr::Binary(op, a, b) => {
                let x = a.jet(p, order)?;
                match op {
                    BinaryOp::Pow => {
                        let e = match b.as_ref() {
                            Expr::Const(e) => *e,
                            _ => unreachable!("pow exponent is always a constant node"),
                        };
                        let x0 = x.value();
                        match integer_exponent(e) {
                            Some(n) => {
                                if x0 == 0.0 && n < 0 {
                                    return Err(domain(self, "zero raised to a negative power"));
                                }
                                x.powi(n)
                            }
                            None => {
                                if x0 < 0.0 || (x0 == 0.0 && (e < 0.0 || order > 0)) {
                                    return Err(domain(self, format!("non-integer power of {x0}")));
                                }
                                x.powf(e)
                            }
                        }
                    }
                    _ => {
                        let y = b.jet(p, order)?;
                        match op {
                            BinaryOp::Add => x + y,
                            BinaryOp::Sub => x - y,
                            BinaryOp::Mul => x * y,
                            BinaryOp::Div => {
                                if y.value() == 0.0 {
                                    return Err(domain(self, "division by zero"));
                                }
                                x / y
                            }
                            BinaryOp::Pow => unreachable!(),
                        }
                    }
                }
            }
        })
    }
}

/// Public jet evaluator: orders 0..=3, every multi-index up to `order` filled.
pub fn evaluate_jet(e: &Expr, point: [f64; 3], order: usize) -> Result<Jet, EvalError> {
    assert!(order <= 3, "evaluate_jet supports orders 0..=3");
    e.jet(point, order)
}
