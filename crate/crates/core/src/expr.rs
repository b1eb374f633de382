//! Scalar expressions in the variables `s`, `t` and `x`.
//!
//! Kernels, weights and forcing terms are supplied as text such as
//! `"0.5 + 0.2*sin(t)"` or `"exp(-(t-s))"`. This module parses them with a
//! small Pratt parser, evaluates them in double precision with explicit domain
//! errors, and differentiates them symbolically.
//!
//! Precedence, from loosest to tightest: `+ -`, `* /`, unary `-`, `^`.
//! Binary operators are left-associative except `^`, which is
//! right-associative. There is no implicit multiplication.

use std::fmt;

use thiserror::Error;

/// Byte range of a node in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    S,
    T,
    X,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::S => "s",
            Var::T => "t",
            Var::X => "x",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
}

impl UnaryOp {
    fn function(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// An immutable expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    node: Node,
    span: Span,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable `{0}` is not bound")]
    Unbound(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
}

impl ExprError {
    /// Byte offset into the source text, for parse errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => {
                Some(*offset)
            }
            _ => None,
        }
    }
}

/// Values for the free variables of an expression.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub x: Option<f64>,
}

impl Bindings {
    pub fn t(t: f64) -> Self {
        Bindings {
            t: Some(t),
            ..Default::default()
        }
    }

    pub fn st(s: f64, t: f64) -> Self {
        Bindings {
            s: Some(s),
            t: Some(t),
            x: None,
        }
    }

    pub fn xt(x: f64, t: f64) -> Self {
        Bindings {
            s: None,
            t: Some(t),
            x: Some(x),
        }
    }

    pub fn x(x: f64) -> Self {
        Bindings {
            x: Some(x),
            ..Default::default()
        }
    }

    fn get(&self, var: Var) -> Result<f64, ExprError> {
        let v = match var {
            Var::S => self.s,
            Var::T => self.t,
            Var::X => self.x,
        };
        v.ok_or(ExprError::Unbound(var.name()))
    }
}

/// Parses `text` into an expression tree.
pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    Expr::parse(text)
}

/// Evaluates `ast` with the given variable bindings.
pub fn eval_expr(ast: &Expr, bindings: &Bindings) -> Result<f64, ExprError> {
    ast.eval(bindings)
}

/// Symbolic derivative of `ast` with respect to `var`.
pub fn diff_expr(ast: &Expr, var: Var) -> Expr {
    ast.diff(var)
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        if text.trim().is_empty() {
            return Err(ExprError::Empty);
        }
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr(0)?;
        let tok = parser.peek();
        if tok.kind != TokKind::End {
            return Err(ExprError::Syntax {
                offset: tok.span.start,
                expected: "operator or end of input",
                found: tok.kind.describe(),
            });
        }
        Ok(expr)
    }

    pub fn constant(value: f64) -> Self {
        Expr {
            node: Node::Const(value),
            span: Span::default(),
        }
    }

    pub fn var(var: Var) -> Self {
        Expr {
            node: Node::Var(var),
            span: Span::default(),
        }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.node {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match &self.node {
            Node::Const(_) => false,
            Node::Var(v) => *v == var,
            Node::Unary(_, a) => a.depends_on(var),
            Node::Binary(_, a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Variables that occur in the tree, in `s, t, x` order.
    pub fn variables(&self) -> Vec<Var> {
        [Var::S, Var::T, Var::X]
            .into_iter()
            .filter(|v| self.depends_on(*v))
            .collect()
    }

    pub fn eval(&self, env: &Bindings) -> Result<f64, ExprError> {
        let value = match &self.node {
            Node::Const(c) => *c,
            Node::Var(v) => env.get(*v)?,
            Node::Unary(op, a) => {
                let a = a.eval(env)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Ln => {
                        if a <= 0.0 {
                            return Err(ExprError::Domain(format!("ln of nonpositive value {a}")));
                        }
                        a.ln()
                    }
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Sqrt => {
                        if a < 0.0 {
                            return Err(ExprError::Domain(format!("sqrt of negative value {a}")));
                        }
                        a.sqrt()
                    }
                }
            }
            Node::Binary(op, a, b) => {
                let a = a.eval(env)?;
                let b = b.eval(env)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::Domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinaryOp::Pow => pow(a, b)?,
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(ExprError::Domain(format!("non-finite result in `{self}`")))
        }
    }

    pub fn diff(&self, var: Var) -> Expr {
        let span = self.span;
        let d = match &self.node {
            Node::Const(_) => Expr::constant(0.0),
            Node::Var(v) => Expr::constant(if *v == var { 1.0 } else { 0.0 }),
            Node::Unary(op, a) => {
                let da = a.diff(var);
                let a = (**a).clone();
                match op {
                    UnaryOp::Neg => neg(da),
                    UnaryOp::Exp => mul(unary(UnaryOp::Exp, a), da),
                    UnaryOp::Ln => div(da, a),
                    UnaryOp::Sin => mul(unary(UnaryOp::Cos, a), da),
                    UnaryOp::Cos => neg(mul(unary(UnaryOp::Sin, a), da)),
                    UnaryOp::Sqrt => div(da, mul(Expr::constant(2.0), unary(UnaryOp::Sqrt, a))),
                }
            }
            Node::Binary(op, a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinaryOp::Add => add(a.diff(var), b.diff(var)),
                    BinaryOp::Sub => sub(a.diff(var), b.diff(var)),
                    BinaryOp::Mul => add(mul(a.diff(var), b.clone()), mul(a, b.diff(var))),
                    BinaryOp::Div => div(
                        sub(mul(a.diff(var), b.clone()), mul(a, b.diff(var))),
                        pow_expr(b, Expr::constant(2.0)),
                    ),
                    BinaryOp::Pow => {
                        if !b.depends_on(var) {
                            // d(a^c) = c a^(c-1) a'
                            let da = a.diff(var);
                            let reduced = sub(b.clone(), Expr::constant(1.0));
                            mul(mul(b, pow_expr(a, reduced)), da)
                        } else if !a.depends_on(var) {
                            let db = b.diff(var);
                            mul(mul(pow_expr(a.clone(), b), unary(UnaryOp::Ln, a)), db)
                        } else {
                            let (da, db) = (a.diff(var), b.diff(var));
                            let inner = add(
                                mul(db, unary(UnaryOp::Ln, a.clone())),
                                div(mul(b.clone(), da), a.clone()),
                            );
                            mul(pow_expr(a, b), inner)
                        }
                    }
                }
            }
        };
        d.with_span(span)
    }

    fn with_span(mut self, span: Span) -> Self {
        self.span = span;
        self
    }
}

fn pow(a: f64, b: f64) -> Result<f64, ExprError> {
    if a == 0.0 {
        return if b > 0.0 {
            Ok(0.0)
        } else if b == 0.0 {
            Ok(1.0)
        } else {
            Err(ExprError::Domain(format!("0 raised to negative power {b}")))
        };
    }
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        return Ok(a.powi(b as i32));
    }
    if a < 0.0 {
        return Err(ExprError::Domain(format!(
            "negative base {a} with non-integer exponent {b}"
        )));
    }
    Ok(a.powf(b))
}

// Builders with light constant folding. They keep derivatives small and stop
// terms such as `0 * ln(t)` from raising domain errors at t = 0.

fn unary(op: UnaryOp, a: Expr) -> Expr {
    if let Some(c) = a.as_constant() {
        let folded = Expr {
            node: Node::Unary(op, Box::new(Expr::constant(c))),
            span: Span::default(),
        }
        .eval(&Bindings::default());
        if let Ok(v) = folded {
            return Expr::constant(v);
        }
    }
    Expr {
        node: Node::Unary(op, Box::new(a)),
        span: Span::default(),
    }
}

fn neg(a: Expr) -> Expr {
    match a.node {
        Node::Const(c) => Expr::constant(-c),
        Node::Unary(UnaryOp::Neg, inner) => *inner,
        _ => unary(UnaryOp::Neg, a),
    }
}

fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    Expr {
        node: Node::Binary(op, Box::new(a), Box::new(b)),
        span: Span::default(),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Expr::constant(x + y),
        (Some(x), None) if x == 0.0 => b,
        (None, Some(y)) if y == 0.0 => a,
        _ => binary(BinaryOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Expr::constant(x - y),
        (Some(x), None) if x == 0.0 => neg(b),
        (None, Some(y)) if y == 0.0 => a,
        _ => binary(BinaryOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Expr::constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::constant(0.0),
        (Some(x), None) if x == 1.0 => b,
        (None, Some(y)) if y == 1.0 => a,
        _ => binary(BinaryOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
        (Some(x), _) if x == 0.0 => Expr::constant(0.0),
        (None, Some(y)) if y == 1.0 => a,
        _ => binary(BinaryOp::Div, a, b),
    }
}

fn pow_expr(a: Expr, b: Expr) -> Expr {
    match b.as_constant() {
        Some(y) if y == 0.0 => Expr::constant(1.0),
        Some(y) if y == 1.0 => a,
        _ => binary(BinaryOp::Pow, a, b),
    }
}

/// Fully parenthesised form; parsing it back yields an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Plus => "`+`".into(),
            TokKind::Minus => "`-`".into(),
            TokKind::Star => "`*`".into(),
            TokKind::Slash => "`/`".into(),
            TokKind::Caret => "`^`".into(),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
            TokKind::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    span: Span,
}

fn lex(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            b'+' => TokKind::Plus,
            b'-' => TokKind::Minus,
            b'*' => TokKind::Star,
            b'/' => TokKind::Slash,
            b'^' => TokKind::Caret,
            b'(' => TokKind::LParen,
            b')' => TokKind::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent part, only when followed by digits.
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
                let value = lexeme.parse::<f64>().map_err(|_| ExprError::Syntax {
                    offset: start,
                    expected: "a number",
                    found: format!("`{lexeme}`"),
                })?;
                tokens.push(Token {
                    kind: TokKind::Num(value),
                    span: Span { start, end: i },
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokKind::Ident(text[start..i].to_string()),
                    span: Span { start, end: i },
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    expected: "a number, identifier, operator or parenthesis",
                    found: format!("`{ch}`"),
                });
            }
        };
        i += 1;
        tokens.push(Token {
            kind,
            span: Span { start, end: i },
        });
    }
    tokens.push(Token {
        kind: TokKind::End,
        span: Span {
            start: text.len(),
            end: text.len(),
        },
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

// Binding powers.
const BP_ADD: (u8, u8) = (1, 2);
const BP_MUL: (u8, u8) = (3, 4);
const BP_NEG: u8 = 5;
const BP_POW: (u8, u8) = (8, 7);

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokKind::End {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: TokKind, expected: &'static str) -> Result<Token, ExprError> {
        let tok = self.next();
        if tok.kind == kind {
            Ok(tok)
        } else {
            Err(ExprError::Syntax {
                offset: tok.span.start,
                expected,
                found: tok.kind.describe(),
            })
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let (op, (lbp, rbp)) = match self.peek().kind {
                TokKind::Plus => (BinaryOp::Add, BP_ADD),
                TokKind::Minus => (BinaryOp::Sub, BP_ADD),
                TokKind::Star => (BinaryOp::Mul, BP_MUL),
                TokKind::Slash => (BinaryOp::Div, BP_MUL),
                TokKind::Caret => (BinaryOp::Pow, BP_POW),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr(rbp)?;
            let span = Span {
                start: lhs.span.start,
                end: rhs.span.end,
            };
            lhs = binary(op, lhs, rhs).with_span(span);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let tok = self.next();
        let start = tok.span.start;
        match tok.kind {
            TokKind::Num(v) => Ok(Expr::constant(v).with_span(tok.span)),
            TokKind::Minus => {
                let operand = self.expr(BP_NEG)?;
                let span = Span {
                    start,
                    end: operand.span.end,
                };
                Ok(Expr {
                    node: Node::Unary(UnaryOp::Neg, Box::new(operand)),
                    span,
                })
            }
            TokKind::LParen => {
                let inner = self.expr(0)?;
                let close = self.expect(TokKind::RParen, "`)`")?;
                Ok(inner.with_span(Span {
                    start,
                    end: close.span.end,
                }))
            }
            TokKind::Ident(name) => match name.as_str() {
                "s" => Ok(Expr::var(Var::S).with_span(tok.span)),
                "t" => Ok(Expr::var(Var::T).with_span(tok.span)),
                "x" => Ok(Expr::var(Var::X).with_span(tok.span)),
                "pi" => Ok(Expr::constant(std::f64::consts::PI).with_span(tok.span)),
                _ => {
                    let Some(op) = UnaryOp::function(&name) else {
                        return Err(ExprError::UnknownIdentifier {
                            name,
                            offset: start,
                        });
                    };
                    self.expect(TokKind::LParen, "`(` after function name")?;
                    let arg = self.expr(0)?;
                    let close = self.expect(TokKind::RParen, "`)`")?;
                    Ok(Expr {
                        node: Node::Unary(op, Box::new(arg)),
                        span: Span {
                            start,
                            end: close.span.end,
                        },
                    })
                }
            },
            other => Err(ExprError::Syntax {
                offset: start,
                expected: "a number, variable, function or `(`",
                found: other.describe(),
            }),
        }
    }
}
