//! Plain-text expression grammar.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/")? unary)*        juxtaposition multiplies
//! unary  := ("-" | "+") unary | power
//! power  := atom ("^" ["-"] integer)?
//! atom   := integer | name "'"* | "sqrt(" expr ")" | "(" expr ")"
//! ```
//!
//! Names resolve against a [`Scope`]: state variables, `t`, parameters, function
//! symbols (primes give derivative orders, `q''''`), and declared radicals. `sqrt(e)`
//! is accepted only when `e` is the square of a declared radical or a declared alias.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use super::poly::Poly;
use super::rational::Expr;
use super::symbol::{AlgSymbol, Symbol};
use super::ExprError;

/// Symbol table used to resolve names while parsing.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    vars: Vec<String>,
    params: BTreeSet<String>,
    funcs: BTreeSet<String>,
    algs: Vec<AlgSymbol>,
    aliases: Vec<(Expr, Expr)>,
}

impl Scope {
    pub fn new() -> Scope {
        Scope::default()
    }

    pub fn with_vars(mut self, vars: &[&str]) -> Scope {
        for v in vars {
            self.add_var(v);
        }
        self
    }

    pub fn with_params(mut self, ps: &[&str]) -> Scope {
        for p in ps {
            self.params.insert(p.to_string());
        }
        self
    }

    pub fn with_funcs(mut self, fs: &[&str]) -> Scope {
        for f in fs {
            self.funcs.insert(f.to_string());
        }
        self
    }

    pub fn add_var(&mut self, v: &str) {
        if !self.vars.iter().any(|x| x == v) {
            self.vars.push(v.to_string());
        }
    }

    pub fn add_param(&mut self, p: &str) {
        self.params.insert(p.to_string());
    }

    pub fn add_func(&mut self, f: &str) {
        self.funcs.insert(f.to_string());
    }

    /// Declares a radical `name` with `name^2 = square` (square given in the grammar).
    pub fn add_alg(&mut self, name: &str, square: &str) -> Result<AlgSymbol, ExprError> {
        let sq = parse(square, self)?;
        if !sq.is_polynomial() || sq.denom().constant_value() != Some(BigInt::from(1)) {
            return Err(ExprError::Parse {
                pos: 0,
                msg: format!("square of {name} must be an integer polynomial"),
            });
        }
        let a = AlgSymbol::new(name, sq.numer().clone())?;
        self.algs.push(a.clone());
        Ok(a)
    }

    /// Declares `sqrt(arg)` to mean `value`.
    pub fn add_alias(&mut self, arg: &str, value: &str) -> Result<(), ExprError> {
        let a = parse(arg, self)?;
        let v = parse(value, self)?;
        self.aliases.push((a, v));
        Ok(())
    }

    pub fn aliases(&self) -> &[(Expr, Expr)] {
        &self.aliases
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn params(&self) -> impl Iterator<Item = &String> {
        self.params.iter()
    }

    pub fn funcs(&self) -> impl Iterator<Item = &String> {
        self.funcs.iter()
    }

    pub fn algs(&self) -> &[AlgSymbol] {
        &self.algs
    }

    pub fn alg(&self, name: &str) -> Option<&AlgSymbol> {
        self.algs.iter().find(|a| a.name() == name)
    }

    pub fn is_declared(&self, s: &Symbol) -> bool {
        match s {
            Symbol::Var(n) => self.vars.iter().any(|v| **v == **n),
            Symbol::Param(n) => self.params.contains(&**n),
            Symbol::Func(n, _) => self.funcs.contains(&**n),
            Symbol::Time => true,
            Symbol::Alg(a) => self.alg(a.name()).is_some(),
        }
    }

    fn resolve(&self, name: &str, primes: u8, pos: usize) -> Result<Expr, ExprError> {
        if primes > 0 {
            if self.funcs.contains(name) {
                return Ok(Expr::func(name, primes));
            }
            return Err(ExprError::UndeclaredSymbol(format!(
                "{name}{}",
                "'".repeat(primes as usize)
            )));
        }
        if self.vars.iter().any(|v| v == name) {
            return Ok(Expr::var(name));
        }
        if name == "t" {
            return Ok(Expr::time());
        }
        if self.params.contains(name) {
            return Ok(Expr::param(name));
        }
        if self.funcs.contains(name) {
            return Ok(Expr::func(name, 0));
        }
        if let Some(a) = self.alg(name) {
            return Ok(Expr::alg(a));
        }
        let _ = pos;
        Err(ExprError::UndeclaredSymbol(name.to_string()))
    }

    fn resolve_sqrt(&self, arg: &Expr) -> Result<Expr, ExprError> {
        for (a, v) in &self.aliases {
            if a == arg {
                return Ok(v.clone());
            }
        }
        for a in &self.algs {
            if Expr::from_poly(a.square().clone()) == *arg {
                return Ok(Expr::alg(a));
            }
        }
        Err(ExprError::UndeclaredSymbol(format!("sqrt({arg})")))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String, u8),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|x| x.1).collect();
            out.push((Tok::Int(s.parse().expect("digits")), pos));
            i = j;
        } else if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|x| x.1).collect();
            let mut primes = 0u8;
            while j < chars.len() && chars[j].1 == '\'' {
                primes += 1;
                j += 1;
            }
            out.push((Tok::Name(s, primes), pos));
            i = j;
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), pos));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, pos));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, pos));
            i += 1;
        } else {
            return Err(ExprError::Parse {
                pos,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    scope: &'a Scope,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.1).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: &str) -> Result<T, ExprError> {
        Err(ExprError::Parse {
            pos: self.pos(),
            msg: msg.to_string(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if c != '+' && c != '-' {
                break;
            }
            self.at += 1;
            let rhs = self.term()?;
            acc = if c == '+' {
                acc.add(&rhs)
            } else {
                acc.sub(&rhs)
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.at += 1;
                    let rhs = self.unary()?;
                    acc = acc.mul(&rhs);
                }
                Some(Tok::Op('/')) => {
                    self.at += 1;
                    let pos = self.pos();
                    let rhs = self.unary()?;
                    acc = acc.div(&rhs).map_err(|_| ExprError::Parse {
                        pos,
                        msg: "division by zero".into(),
                    })?;
                }
                Some(Tok::Int(_)) | Some(Tok::Name(..)) | Some(Tok::LParen) => {
                    let rhs = self.power()?;
                    acc = acc.mul(&rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.at += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::Op('+')) => {
                self.at += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.at += 1;
            let neg = if let Some(Tok::Op('-')) = self.peek() {
                self.at += 1;
                true
            } else {
                false
            };
            let pos = self.pos();
            let e = match self.peek() {
                Some(Tok::Int(n)) => {
                    let n: i64 = i64::try_from(n.clone()).map_err(|_| ExprError::Parse {
                        pos,
                        msg: "exponent too large".into(),
                    })?;
                    self.at += 1;
                    n
                }
                _ => return self.err("expected integer exponent"),
            };
            let e = if neg { -e } else { e };
            return base.pow(e).map_err(|_| ExprError::Parse {
                pos,
                msg: "negative power of zero".into(),
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.at += 1;
                Ok(Expr::from_poly(Poly::constant(n)))
            }
            Some(Tok::Name(name, primes)) => {
                self.at += 1;
                if name == "sqrt" && primes == 0 && self.peek() == Some(&Tok::LParen) {
                    self.at += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(&Tok::RParen) {
                        return self.err("expected ')'");
                    }
                    self.at += 1;
                    return self.scope.resolve_sqrt(&arg);
                }
                self.scope.resolve(&name, primes, pos)
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.at += 1;
                Ok(e)
            }
            Some(Tok::RParen) => self.err("unexpected ')'"),
            Some(Tok::Op(c)) => self.err(&format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses an expression in the given scope.
pub fn parse(src: &str, scope: &Scope) -> Result<Expr, ExprError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        scope,
        end: src.len(),
    };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parses a symbol reference such as `q''` or `x`.
pub fn parse_symbol(src: &str, scope: &Scope) -> Result<Symbol, ExprError> {
    let e = parse(src, scope)?;
    let syms = e.symbols();
    if syms.len() == 1 && e == Expr::symbol(syms.iter().next().unwrap().clone()) {
        return Ok(syms.into_iter().next().unwrap());
    }
    Err(ExprError::Parse {
        pos: 0,
        msg: format!("'{src}' is not a single symbol"),
    })
}
