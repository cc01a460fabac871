//! Arithmetic expression parsing and evaluation for user-defined maps.
//!
//! Grammar:
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := ('-')? atom
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Derivatives come from forward-mode dual numbers carrying d/dx and
//! d/dy simultaneously.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Unary(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Value with first derivatives with respect to x and y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Dual2 {
    pub fn constant(v: f64) -> Self {
        Dual2 { v, dx: 0.0, dy: 0.0 }
    }

    pub fn var_x(v: f64) -> Self {
        Dual2 { v, dx: 1.0, dy: 0.0 }
    }

    pub fn var_y(v: f64) -> Self {
        Dual2 { v, dx: 0.0, dy: 1.0 }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        Dual2 { v, dx: dv * self.dx, dy: dv * self.dy }
    }
}

impl Expr {
    pub fn eval(&self, x: f64, y: f64, params: &BTreeMap<String, f64>) -> Result<f64> {
        Ok(self.eval_dual(x, y, params)?.v)
    }

    pub fn eval_dual(&self, x: f64, y: f64, params: &BTreeMap<String, f64>) -> Result<Dual2> {
        match self {
            Expr::Num(v) => Ok(Dual2::constant(*v)),
            Expr::Var(Var::X) => Ok(Dual2::var_x(x)),
            Expr::Var(Var::Y) => Ok(Dual2::var_y(y)),
            Expr::Param(name) => params
                .get(name)
                .map(|v| Dual2::constant(*v))
                .ok_or_else(|| Error::UnknownIdentifier(name.clone())),
            Expr::Unary(f, arg) => {
                let a = arg.eval_dual(x, y, params)?;
                match f {
                    UnaryFn::Sin => Ok(a.chain(a.v.sin(), a.v.cos())),
                    UnaryFn::Cos => Ok(a.chain(a.v.cos(), -a.v.sin())),
                    UnaryFn::Exp => {
                        let e = a.v.exp();
                        Ok(a.chain(e, e))
                    }
                    UnaryFn::Sqrt => {
                        if a.v < 0.0 {
                            return Err(Error::EvalDomain(format!("sqrt of negative {}", a.v)));
                        }
                        let s = a.v.sqrt();
                        if s == 0.0 && (a.dx != 0.0 || a.dy != 0.0) {
                            return Err(Error::EvalDomain("sqrt derivative at zero".into()));
                        }
                        let d = if s == 0.0 { 0.0 } else { 0.5 / s };
                        Ok(a.chain(s, d))
                    }
                    UnaryFn::Neg => Ok(Dual2 { v: -a.v, dx: -a.dx, dy: -a.dy }),
                }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval_dual(x, y, params)?;
                match op {
                    BinOp::Add => {
                        let b = rhs.eval_dual(x, y, params)?;
                        Ok(Dual2 { v: a.v + b.v, dx: a.dx + b.dx, dy: a.dy + b.dy })
                    }
                    BinOp::Sub => {
                        let b = rhs.eval_dual(x, y, params)?;
                        Ok(Dual2 { v: a.v - b.v, dx: a.dx - b.dx, dy: a.dy - b.dy })
                    }
                    BinOp::Mul => {
                        let b = rhs.eval_dual(x, y, params)?;
                        Ok(Dual2 {
                            v: a.v * b.v,
                            dx: a.dx * b.v + a.v * b.dx,
                            dy: a.dy * b.v + a.v * b.dy,
                        })
                    }
                    BinOp::Div => {
                        let b = rhs.eval_dual(x, y, params)?;
                        if b.v == 0.0 {
                            return Err(Error::EvalDomain("division by zero".into()));
                        }
                        let v = a.v / b.v;
                        Ok(Dual2 {
                            v,
                            dx: (a.dx - v * b.dx) / b.v,
                            dy: (a.dy - v * b.dy) / b.v,
                        })
                    }
                    BinOp::Pow => pow_dual(a, rhs, x, y, params),
                }
            }
        }
    }

    /// Canonical textual form; parsing it back yields a structurally
    /// identical tree.
    pub fn print(&self) -> String {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    // keep negatives reparseable as unary minus over a number
                    format!("(0 - {})", fmt_num(-v))
                } else {
                    fmt_num(*v)
                }
            }
            Expr::Var(Var::X) => "x".into(),
            Expr::Var(Var::Y) => "y".into(),
            Expr::Param(name) => name.clone(),
            Expr::Unary(UnaryFn::Neg, a) => format!("-({})", a.print()),
            Expr::Unary(f, a) => {
                let name = match f {
                    UnaryFn::Sin => "sin",
                    UnaryFn::Cos => "cos",
                    UnaryFn::Exp => "exp",
                    UnaryFn::Sqrt => "sqrt",
                    UnaryFn::Neg => unreachable!(),
                };
                format!("{name}({})", a.print())
            }
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                format!("({} {sym} {})", a.print(), b.print())
            }
        }
    }
}

fn fmt_num(v: f64) -> String {
    // shortest representation that round-trips through f64
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E', 'i', 'N']) {
        s
    } else {
        s
    }
}

fn pow_dual(
    base: Dual2,
    exp_expr: &Expr,
    x: f64,
    y: f64,
    params: &BTreeMap<String, f64>,
) -> Result<Dual2> {
    // constant integer exponent works for any base; otherwise the base
    // must be positive (real power via exp/ln)
    let e = exp_expr.eval_dual(x, y, params)?;
    let is_const_int = e.dx == 0.0 && e.dy == 0.0 && e.v.fract() == 0.0 && e.v.abs() < 1e9;
    if is_const_int {
        let k = e.v as i32;
        if base.v == 0.0 && k <= 0 {
            return Err(Error::EvalDomain(format!("0^{k}")));
        }
        let v = base.v.powi(k);
        let dv = if k == 0 { 0.0 } else { f64::from(k) * base.v.powi(k - 1) };
        return Ok(base.chain(v, dv));
    }
    if base.v <= 0.0 {
        return Err(Error::EvalDomain(format!(
            "{}^{} needs a positive base or constant integer exponent",
            base.v, e.v
        )));
    }
    let ln_b = base.v.ln();
    let v = (e.v * ln_b).exp();
    Ok(Dual2 {
        v,
        dx: v * (e.dx * ln_b + e.v * base.dx / base.v),
        dy: v * (e.dy * ln_b + e.v * base.dy / base.v),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
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

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(v) => format!("number {v}"),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Caret => "`^`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn next_token(&mut self) -> Result<(usize, Token)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((start, Token::End));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                {
                    end += 1;
                }
                // exponent suffix
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut e = end + 1;
                    if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                        e += 1;
                    }
                    if e < self.src.len() && self.src[e].is_ascii_digit() {
                        while e < self.src.len() && self.src[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                    offset: start,
                    expected: "a number".into(),
                    found: format!("`{text}`"),
                })?;
                self.pos = end;
                return Ok((start, Token::Num(value)));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                return Ok((start, Token::Ident(text)));
            }
            other => {
                return Err(Error::Syntax {
                    offset: start,
                    expected: "a token".into(),
                    found: format!("byte `{}`", other as char),
                })
            }
        };
        self.pos += 1;
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: (usize, Token),
    params: &'a [&'a str],
}

const FUNCTIONS: &[(&str, UnaryFn)] = &[
    ("sin", UnaryFn::Sin),
    ("cos", UnaryFn::Cos),
    ("exp", UnaryFn::Exp),
    ("sqrt", UnaryFn::Sqrt),
    ("neg", UnaryFn::Neg),
];

impl<'a> Parser<'a> {
    fn new(src: &'a str, params: &'a [&'a str]) -> Result<Self> {
        let mut lexer = Lexer::new(src);
        let lookahead = lexer.next_token()?;
        Ok(Parser { lexer, lookahead, params })
    }

    fn advance(&mut self) -> Result<(usize, Token)> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.lookahead, next))
    }

    fn expect(&mut self, tok: Token, expected: &str) -> Result<()> {
        if self.lookahead.1 == tok {
            self.advance()?;
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.lookahead.0,
                expected: expected.into(),
                found: self.lookahead.1.describe(),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.lookahead.1 {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.lookahead.1 {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => break,
            };
            self.advance()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.lookahead.1 == Token::Caret {
            self.advance()?;
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.lookahead.1 == Token::Minus {
            self.advance()?;
            let inner = self.atom()?;
            return Ok(Expr::Unary(UnaryFn::Neg, Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let (offset, tok) = self.advance()?;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if self.lookahead.1 == Token::LParen {
                    let f = FUNCTIONS
                        .iter()
                        .find(|(n, _)| *n == name)
                        .map(|(_, f)| *f)
                        .ok_or(Error::UnknownFunction(name))?;
                    self.advance()?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "`)`")?;
                    Ok(Expr::Unary(f, Box::new(arg)))
                } else if name == "x" {
                    Ok(Expr::Var(Var::X))
                } else if name == "y" {
                    Ok(Expr::Var(Var::Y))
                } else if self.params.contains(&name.as_str()) {
                    Ok(Expr::Param(name))
                } else {
                    Err(Error::UnknownIdentifier(name))
                }
            }
            other => Err(Error::Syntax {
                offset,
                expected: "a number, identifier, function call or `(`".into(),
                found: other.describe(),
            }),
        }
    }
}

/// Parses `source` against the expression grammar. `params` lists the
/// identifiers allowed besides `x` and `y`.
pub fn parse_expression(source: &str, params: &[&str]) -> Result<Expr> {
    let mut parser = Parser::new(source, params)?;
    let expr = parser.expr()?;
    if parser.lookahead.1 != Token::End {
        return Err(Error::Syntax {
            offset: parser.lookahead.0,
            expected: "end of input".into(),
            found: parser.lookahead.1.describe(),
        });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Expr {
        parse_expression(src, &["a", "b"]).unwrap()
    }

    #[test]
    fn identity_case() {
        assert_eq!(p("x"), Expr::Var(Var::X));
    }

    #[test]
    fn grammar_reading() {
        // left-associated sum chain with a power on the last term
        let e = p("y + a - x^2");
        let expected = Expr::Binary(
            BinOp::Sub,
            Box::new(Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Var(Var::Y)),
                Box::new(Expr::Param("a".into())),
            )),
            Box::new(Expr::Binary(
                BinOp::Pow,
                Box::new(Expr::Var(Var::X)),
                Box::new(Expr::Num(2.0)),
            )),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn sin_at_zero() {
        let e = p("sin(x*y)/2");
        let v = e.eval(0.0, 1.0, &BTreeMap::new()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn dual_derivatives_match_symbolic() {
        // d/dx [x^2 * y + sin(x)] = 2xy + cos(x), d/dy = x^2
        let e = p("x^2 * y + sin(x)");
        let d = e.eval_dual(0.7, -1.3, &BTreeMap::new()).unwrap();
        assert!((d.v - (0.49 * -1.3 + 0.7f64.sin())).abs() < 1e-15);
        assert!((d.dx - (2.0 * 0.7 * -1.3 + 0.7f64.cos())).abs() < 1e-15);
        assert!((d.dy - 0.49).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        match parse_expression("x + (y", &[]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(parse_expression("foo(x)", &[]), Err(Error::UnknownFunction(_))));
        assert!(matches!(parse_expression("x + q", &[]), Err(Error::UnknownIdentifier(_))));
    }

    #[test]
    fn pow_domain_rules() {
        let e = p("x^a");
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), 0.5);
        assert!(e.eval(-1.0, 0.0, &params).is_err());
        assert!((e.eval(4.0, 0.0, &params).unwrap() - 2.0).abs() < 1e-15);
        // integer exponent allows negative bases
        assert_eq!(p("x^3").eval(-2.0, 0.0, &BTreeMap::new()).unwrap(), -8.0);
        assert!(p("x^-1").eval(0.0, 0.0, &BTreeMap::new()).is_err());
    }

    #[test]
    fn print_reparse_is_structural_identity() {
        for src in ["x", "y + a - x^2", "sin(x*y)/2", "-(x) * (y + 1)", "x^2^3", "2e-3 * x"] {
            let e = p(src);
            let printed = e.print();
            assert_eq!(p(&printed), e, "round-trip failed for {src} -> {printed}");
        }
    }
}
