//! Hand-written lexer and recursive-descent parser.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use thiserror::Error;

use super::ast::*;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unsupported feature: {feature}")]
    Unsupported { line: usize, col: usize, feature: String },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 22] = [
    "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "=", "+", "-", "*", "(", ")", "{", "}",
    ";", ",", "/", "%", ".",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (sl, sc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && (chars[i] == '.' || chars[i] == 'e' || chars[i] == 'E') {
                return Err(ParseError::Unsupported {
                    line: sl,
                    col: sc,
                    feature: "floating-point literal".into(),
                });
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Int(s.parse().unwrap()), line: sl, col: sc });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), line: sl, col: sc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: sl, col: sc });
            }
            None => {
                return Err(ParseError::Syntax {
                    line: sl,
                    col: sc,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 8] = ["fun", "int", "while", "if", "else", "skip", "true", "false"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(n) => format!("'{n}'"),
            Tok::Sym(s) => format!("'{s}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let (line, col) = self.here();
        if let Tok::Sym(s @ ("/" | "%")) = self.peek() {
            return Err(ParseError::Unsupported { line, col, feature: format!("operator '{s}'") });
        }
        Err(ParseError::Syntax {
            line,
            col,
            msg: format!("expected {expected}, found {}", Self::describe(self.peek())),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&format!("'{s}'"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(&format!("'{k}'"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.error("identifier"),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        if !self.is_kw("fun") {
            // bare body: declarations and statements of an implicit `main()`
            let decls = self.decls()?;
            let body = self.stmts()?;
            if *self.peek() != Tok::Eof {
                return self.error("statement");
            }
            return Ok(Program { name: "main".into(), params: Vec::new(), decls, body });
        }
        self.expect_kw("fun")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            params.push(self.ident()?);
            while self.eat_sym(",") {
                params.push(self.ident()?);
            }
        }
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let decls = self.decls()?;
        let body = self.stmts()?;
        self.expect_sym("}")?;
        if *self.peek() != Tok::Eof {
            return self.error("end of input");
        }
        Ok(Program { name, params, decls, body })
    }

    fn decls(&mut self) -> PResult<Vec<Decl>> {
        let mut decls = Vec::new();
        while self.is_kw("int") {
            self.pos += 1;
            let name = self.ident()?;
            self.expect_sym("=")?;
            let init = if self.eat_sym("*") { Init::Nondet } else { Init::Expr(self.expr()?) };
            self.expect_sym(";")?;
            decls.push(Decl { name, init });
        }
        Ok(decls)
    }

    fn stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while !self.is_sym("}") && *self.peek() != Tok::Eof {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_sym("{")?;
        let b = self.stmts()?;
        self.expect_sym("}")?;
        Ok(b)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.is_kw("while") {
            self.pos += 1;
            self.expect_sym("(")?;
            let c = self.cond()?;
            self.expect_sym(")")?;
            return Ok(Stmt::While(c, self.block()?));
        }
        if self.is_kw("if") {
            self.pos += 1;
            self.expect_sym("(")?;
            let c = self.cond()?;
            self.expect_sym(")")?;
            let t = self.block()?;
            let e = if self.is_kw("else") {
                self.pos += 1;
                Some(self.block()?)
            } else {
                None
            };
            return Ok(Stmt::If(c, t, e));
        }
        if self.is_kw("skip") {
            self.pos += 1;
            self.expect_sym(";")?;
            return Ok(Stmt::Skip);
        }
        if self.is_kw("int") {
            let (line, col) = self.here();
            return Err(ParseError::Syntax {
                line,
                col,
                msg: "declarations must precede statements".into(),
            });
        }
        let v = self.ident()?;
        self.expect_sym("=")?;
        if self.eat_sym("*") {
            self.expect_sym(";")?;
            return Ok(Stmt::Havoc(v));
        }
        let e = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::Assign(v, e))
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut c = self.cond_and()?;
        while self.eat_sym("||") {
            c = Cond::Or(Box::new(c), Box::new(self.cond_and()?));
        }
        Ok(c)
    }

    fn cond_and(&mut self) -> PResult<Cond> {
        let mut c = self.cond_unary()?;
        while self.eat_sym("&&") {
            c = Cond::And(Box::new(c), Box::new(self.cond_unary()?));
        }
        Ok(c)
    }

    fn cond_unary(&mut self) -> PResult<Cond> {
        if self.eat_sym("!") {
            return Ok(Cond::Not(Box::new(self.cond_unary()?)));
        }
        if self.is_kw("true") {
            self.pos += 1;
            return Ok(Cond::True);
        }
        if self.is_kw("false") {
            self.pos += 1;
            return Ok(Cond::False);
        }
        if self.is_sym("(") {
            // either a parenthesized condition or a comparison starting with '('
            let save = self.pos;
            match self.comparison() {
                Ok(c) => return Ok(c),
                Err(e1) => {
                    let far = self.pos;
                    self.pos = save + 1;
                    match self.cond().and_then(|c| self.expect_sym(")").map(|_| c)) {
                        Ok(c) => return Ok(c),
                        Err(e2) => {
                            return Err(if far > self.pos { e1 } else { e2 });
                        }
                    }
                }
            }
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Cond> {
        let a = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("==") => RelOp::Eq,
            Tok::Sym("!=") => RelOp::Ne,
            Tok::Sym("<") => RelOp::Lt,
            Tok::Sym("<=") => RelOp::Le,
            Tok::Sym(">") => RelOp::Gt,
            Tok::Sym(">=") => RelOp::Ge,
            _ => return self.error("comparison operator"),
        };
        self.pos += 1;
        let b = self.expr()?;
        Ok(Cond::Cmp(a, op, b))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat_sym("+") {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat_sym("-") {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat_sym("*") {
                e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.is_sym("/") || self.is_sym("%") {
                return self.error("operator");
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                if matches!(self.peek_at(1), Tok::Sym("(")) {
                    let (line, col) = self.here();
                    return Err(ParseError::Unsupported {
                        line,
                        col,
                        feature: format!("function call '{s}'"),
                    });
                }
                self.pos += 1;
                Ok(Expr::Var(s))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.error("expression"),
        }
    }
}

/// Parses and checks a program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let prog = p.program()?;
    check(&prog)?;
    Ok(prog)
}

fn check(p: &Program) -> Result<(), ParseError> {
    let sem = |msg: String| ParseError::Semantic { line: 0, col: 0, msg };
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for v in &p.params {
        if !seen.insert(v.clone()) {
            return Err(sem(format!("variable '{v}' declared twice")));
        }
    }
    for d in &p.decls {
        if let Init::Expr(e) = &d.init {
            check_expr(e, &seen).map_err(&sem)?;
        }
        if !seen.insert(d.name.clone()) {
            return Err(sem(format!("variable '{}' declared twice", d.name)));
        }
    }
    check_stmts(&p.body, &seen).map_err(sem)
}

fn check_expr(e: &Expr, scope: &BTreeSet<String>) -> Result<(), String> {
    match e {
        Expr::Int(_) => Ok(()),
        Expr::Var(v) if scope.contains(v) => Ok(()),
        Expr::Var(v) => Err(format!("undeclared variable '{v}'")),
        Expr::Neg(a) => check_expr(a, scope),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            check_expr(a, scope)?;
            check_expr(b, scope)
        }
    }
}

fn check_cond(c: &Cond, scope: &BTreeSet<String>) -> Result<(), String> {
    match c {
        Cond::True | Cond::False => Ok(()),
        Cond::Cmp(a, _, b) => {
            check_expr(a, scope)?;
            check_expr(b, scope)
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            check_cond(a, scope)?;
            check_cond(b, scope)
        }
        Cond::Not(a) => check_cond(a, scope),
    }
}

fn check_stmts(ss: &[Stmt], scope: &BTreeSet<String>) -> Result<(), String> {
    for s in ss {
        match s {
            Stmt::Assign(v, e) => {
                if !scope.contains(v) {
                    return Err(format!("undeclared variable '{v}'"));
                }
                check_expr(e, scope)?;
            }
            Stmt::Havoc(v) => {
                if !scope.contains(v) {
                    return Err(format!("undeclared variable '{v}'"));
                }
            }
            Stmt::While(c, b) => {
                check_cond(c, scope)?;
                check_stmts(b, scope)?;
            }
            Stmt::If(c, t, e) => {
                check_cond(c, scope)?;
                check_stmts(t, scope)?;
                if let Some(e) = e {
                    check_stmts(e, scope)?;
                }
            }
            Stmt::Skip => {}
        }
    }
    Ok(())
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Unsupported { line, col, .. }
            | ParseError::Semantic { line, col, .. } => (*line, *col),
        }
    }
}

