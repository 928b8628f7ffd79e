//! Parser for the guarded-command modeling language.
//!
//! A model file declares rational constants, optionally a fault alphabet,
//! integer variables with ranges, and guarded commands:
//!
//! ```text
//! const p = 1/10;
//! faults: fault;            // implementation models only
//! var x: [0..3] init 0;
//! [step] (x<3) -> p: (x'=x+1) + (1-p): true;
//! ```
//!
//! Parsing expands the commands over all reachable valuations into a
//! [`Pts`]. Branch probabilities must sum to exactly 1 per command (one
//! branch may omit its probability, meaning "the rest"), updates must stay
//! within the declared ranges, and every reachable state must have at
//! least one enabled command.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Zero};

use crate::error::ModelError;
use crate::model::{Dist, Prob, Pts, StateId, Transition, VarDecl};
use crate::rational::Rational;

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    // punctuation and operators
    LBracket,
    RBracket,
    LParen,
    RParen,
    Prime,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Plus,
    Minus,
    Star,
    Slash,
    Question,
    Colon,
    Semi,
    Comma,
    DotDot,
    Arrow,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ModelError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! push {
        ($tok:expr, $len:expr) => {{
            toks.push(Spanned { tok: $tok, line, col });
            col += $len;
        }};
    }

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '/' => {
                // may be a comment, a rational slash handled by the parser,
                // or part of nothing else
                let start_col = col;
                chars.next();
                if chars.peek() == Some(&'/') {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        chars.next();
                    }
                } else {
                    toks.push(Spanned { tok: Tok::Slash, line, col: start_col });
                    col += 1;
                }
            }
            '-' => {
                chars.next();
                if chars.peek() == Some(&'>') {
                    chars.next();
                    push!(Tok::Arrow, 2);
                } else {
                    push!(Tok::Minus, 1);
                }
            }
            '.' => {
                chars.next();
                if chars.peek() == Some(&'.') {
                    chars.next();
                    push!(Tok::DotDot, 2);
                } else {
                    return Err(ModelError::Syntax {
                        line,
                        col,
                        msg: "unexpected `.`".to_string(),
                    });
                }
            }
            '!' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    push!(Tok::Neq, 2);
                } else {
                    return Err(ModelError::Syntax {
                        line,
                        col,
                        msg: "expected `!=`".to_string(),
                    });
                }
            }
            '<' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    push!(Tok::Le, 2);
                } else {
                    push!(Tok::Lt, 1);
                }
            }
            '>' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    push!(Tok::Ge, 2);
                } else {
                    push!(Tok::Gt, 1);
                }
            }
            '[' => {
                chars.next();
                push!(Tok::LBracket, 1);
            }
            ']' => {
                chars.next();
                push!(Tok::RBracket, 1);
            }
            '(' => {
                chars.next();
                push!(Tok::LParen, 1);
            }
            ')' => {
                chars.next();
                push!(Tok::RParen, 1);
            }
            '\'' => {
                chars.next();
                push!(Tok::Prime, 1);
            }
            '=' => {
                chars.next();
                push!(Tok::Eq, 1);
            }
            '&' => {
                chars.next();
                push!(Tok::Amp, 1);
            }
            '|' => {
                chars.next();
                push!(Tok::Pipe, 1);
            }
            '+' => {
                chars.next();
                push!(Tok::Plus, 1);
            }
            '*' => {
                chars.next();
                push!(Tok::Star, 1);
            }
            '?' => {
                chars.next();
                push!(Tok::Question, 1);
            }
            ':' => {
                chars.next();
                push!(Tok::Colon, 1);
            }
            ';' => {
                chars.next();
                push!(Tok::Semi, 1);
            }
            ',' => {
                chars.next();
                push!(Tok::Comma, 1);
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let n: i64 = s.parse().map_err(|_| ModelError::Syntax {
                    line,
                    col,
                    msg: format!("integer literal `{s}` out of range"),
                })?;
                let len = s.len();
                push!(Tok::Int(n), len);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let len = s.len();
                push!(Tok::Ident(s), len);
            }
            other => {
                return Err(ModelError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{other}`"),
                });
            }
        }
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Expression AST

#[derive(Debug, Clone, PartialEq, Eq)]
enum Expr {
    Int(i64),
    Var(usize),
    True,
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
}

#[derive(Debug, Clone, Copy)]
enum Value {
    Int(i64),
    Bool(bool),
}

impl Expr {
    fn type_of(&self, line: usize) -> Result<Ty, ModelError> {
        match self {
            Expr::Int(_) | Expr::Var(_) => Ok(Ty::Int),
            Expr::True => Ok(Ty::Bool),
            Expr::Binary(op, a, b) => {
                let ta = a.type_of(line)?;
                let tb = b.type_of(line)?;
                let (want, give) = match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul => (Ty::Int, Ty::Int),
                    BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        (Ty::Int, Ty::Bool)
                    }
                    BinOp::And | BinOp::Or => (Ty::Bool, Ty::Bool),
                };
                if ta != want || tb != want {
                    return Err(ModelError::TypeError {
                        line,
                        msg: format!("operands of {op:?} must both be {want:?}"),
                    });
                }
                Ok(give)
            }
            Expr::Ternary(c, a, b) => {
                if c.type_of(line)? != Ty::Bool {
                    return Err(ModelError::TypeError {
                        line,
                        msg: "ternary condition must be boolean".to_string(),
                    });
                }
                if a.type_of(line)? != Ty::Int || b.type_of(line)? != Ty::Int {
                    return Err(ModelError::TypeError {
                        line,
                        msg: "ternary arms must be integers".to_string(),
                    });
                }
                Ok(Ty::Int)
            }
        }
    }

    fn eval(&self, state: &[i64]) -> Value {
        match self {
            Expr::Int(n) => Value::Int(*n),
            Expr::Var(i) => Value::Int(state[*i]),
            Expr::True => Value::Bool(true),
            Expr::Binary(op, a, b) => {
                let a = a.eval(state);
                let b = b.eval(state);
                match (op, a, b) {
                    (BinOp::Add, Value::Int(x), Value::Int(y)) => Value::Int(x + y),
                    (BinOp::Sub, Value::Int(x), Value::Int(y)) => Value::Int(x - y),
                    (BinOp::Mul, Value::Int(x), Value::Int(y)) => Value::Int(x * y),
                    (BinOp::Eq, Value::Int(x), Value::Int(y)) => Value::Bool(x == y),
                    (BinOp::Neq, Value::Int(x), Value::Int(y)) => Value::Bool(x != y),
                    (BinOp::Lt, Value::Int(x), Value::Int(y)) => Value::Bool(x < y),
                    (BinOp::Le, Value::Int(x), Value::Int(y)) => Value::Bool(x <= y),
                    (BinOp::Gt, Value::Int(x), Value::Int(y)) => Value::Bool(x > y),
                    (BinOp::Ge, Value::Int(x), Value::Int(y)) => Value::Bool(x >= y),
                    (BinOp::And, Value::Bool(x), Value::Bool(y)) => Value::Bool(x && y),
                    (BinOp::Or, Value::Bool(x), Value::Bool(y)) => Value::Bool(x || y),
                    _ => unreachable!("type-checked"),
                }
            }
            Expr::Ternary(c, a, b) => match c.eval(state) {
                Value::Bool(true) => a.eval(state),
                Value::Bool(false) => b.eval(state),
                _ => unreachable!("type-checked"),
            },
        }
    }

    fn eval_bool(&self, state: &[i64]) -> bool {
        match self.eval(state) {
            Value::Bool(b) => b,
            Value::Int(_) => unreachable!("type-checked"),
        }
    }

    fn eval_int(&self, state: &[i64]) -> i64 {
        match self.eval(state) {
            Value::Int(n) => n,
            Value::Bool(_) => unreachable!("type-checked"),
        }
    }
}

// ---------------------------------------------------------------------------
// Command AST

#[derive(Debug, Clone)]
struct Branch {
    prob: Option<Rational>,
    assigns: Vec<(usize, Expr)>,
    line: usize,
}

#[derive(Debug, Clone)]
struct Command {
    label: String,
    guard: Expr,
    branches: Vec<Branch>,
    line: usize,
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    consts: BTreeMap<String, Rational>,
    vars: Vec<VarDecl>,
    var_index: BTreeMap<String, usize>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn line(&self) -> usize {
        self.here().0
    }

    fn err(&self, msg: impl Into<String>) -> ModelError {
        let (line, col) = self.here();
        ModelError::Syntax { line, col, msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ModelError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ModelError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn int(&mut self, what: &str) -> Result<i64, ModelError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    // -- probability expressions ------------------------------------------

    /// RATIONAL | const IDENT | parenthesized, combined with + and -.
    fn probexpr(&mut self) -> Result<Rational, ModelError> {
        let mut acc = self.probexpr_primary()?;
        loop {
            if self.eat(Tok::Plus) {
                acc += self.probexpr_primary()?;
            } else if self.eat(Tok::Minus) {
                acc -= self.probexpr_primary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn probexpr_primary(&mut self) -> Result<Rational, ModelError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                if self.eat(Tok::Slash) {
                    let d = self.int("denominator")?;
                    if d == 0 {
                        return Err(self.err("zero denominator"));
                    }
                    Ok(crate::rational::rat(n, d))
                } else {
                    Ok(crate::rational::rat_int(n))
                }
            }
            Some(Tok::Ident(name)) => {
                let line = self.line();
                self.pos += 1;
                self.consts
                    .get(&name)
                    .cloned()
                    .ok_or(ModelError::UnknownIdent { name, line })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let r = self.probexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(r)
            }
            _ => Err(self.err("expected probability expression")),
        }
    }

    // -- general expressions ----------------------------------------------
    //
    // Precedence, loosest first: ?: , |, &, comparison, + -, *.

    fn expr(&mut self) -> Result<Expr, ModelError> {
        let cond = self.expr_or()?;
        if self.eat(Tok::Question) {
            let then = self.expr()?;
            self.expect(Tok::Colon, "`:`")?;
            let els = self.expr()?;
            Ok(Expr::Ternary(Box::new(cond), Box::new(then), Box::new(els)))
        } else {
            Ok(cond)
        }
    }

    fn expr_or(&mut self) -> Result<Expr, ModelError> {
        let mut acc = self.expr_and()?;
        while self.eat(Tok::Pipe) {
            let rhs = self.expr_and()?;
            acc = Expr::Binary(BinOp::Or, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn expr_and(&mut self) -> Result<Expr, ModelError> {
        let mut acc = self.expr_cmp()?;
        while self.eat(Tok::Amp) {
            let rhs = self.expr_cmp()?;
            acc = Expr::Binary(BinOp::And, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn expr_cmp(&mut self) -> Result<Expr, ModelError> {
        let lhs = self.expr_sum()?;
        let op = match self.peek() {
            Some(Tok::Eq) => BinOp::Eq,
            Some(Tok::Neq) => BinOp::Neq,
            Some(Tok::Lt) => BinOp::Lt,
            Some(Tok::Le) => BinOp::Le,
            Some(Tok::Gt) => BinOp::Gt,
            Some(Tok::Ge) => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.expr_sum()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn expr_sum(&mut self) -> Result<Expr, ModelError> {
        let mut acc = self.expr_term()?;
        loop {
            if self.eat(Tok::Plus) {
                let rhs = self.expr_term()?;
                acc = Expr::Binary(BinOp::Add, Box::new(acc), Box::new(rhs));
            } else if self.eat(Tok::Minus) {
                let rhs = self.expr_term()?;
                acc = Expr::Binary(BinOp::Sub, Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn expr_term(&mut self) -> Result<Expr, ModelError> {
        let mut acc = self.expr_atom()?;
        while self.eat(Tok::Star) {
            let rhs = self.expr_atom()?;
            acc = Expr::Binary(BinOp::Mul, Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn expr_atom(&mut self) -> Result<Expr, ModelError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Int(n))
            }
            Some(Tok::Ident(name)) => {
                let line = self.line();
                self.pos += 1;
                if name == "true" {
                    return Ok(Expr::True);
                }
                match self.var_index.get(&name) {
                    Some(&i) => Ok(Expr::Var(i)),
                    None => Err(ModelError::UnknownIdent { name, line }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(self.err("expected expression")),
        }
    }

    // -- declarations and commands ----------------------------------------

    fn parse_file(&mut self) -> Result<(BTreeSet<String>, Vec<Command>), ModelError> {
        // const declarations
        while self.peek() == Some(&Tok::Ident("const".to_string())) {
            self.pos += 1;
            let line = self.line();
            let name = self.ident("constant name")?;
            if self.consts.contains_key(&name) {
                return Err(ModelError::DuplicateDecl { name, line });
            }
            self.expect(Tok::Eq, "`=`")?;
            let value = self.probexpr()?;
            self.expect(Tok::Semi, "`;`")?;
            self.consts.insert(name, value);
        }

        // optional fault alphabet
        let mut faults = BTreeSet::new();
        if self.peek() == Some(&Tok::Ident("faults".to_string())) {
            self.pos += 1;
            self.expect(Tok::Colon, "`:`")?;
            loop {
                faults.insert(self.ident("fault label")?);
                if !self.eat(Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Semi, "`;`")?;
        }

        // variable declarations
        while self.peek() == Some(&Tok::Ident("var".to_string())) {
            self.pos += 1;
            let line = self.line();
            let name = self.ident("variable name")?;
            if self.var_index.contains_key(&name) || self.consts.contains_key(&name) {
                return Err(ModelError::DuplicateDecl { name, line });
            }
            self.expect(Tok::Colon, "`:`")?;
            self.expect(Tok::LBracket, "`[`")?;
            let lo = self.int("lower bound")?;
            self.expect(Tok::DotDot, "`..`")?;
            let hi = self.int("upper bound")?;
            self.expect(Tok::RBracket, "`]`")?;
            if hi < lo {
                return Err(self.err(format!("empty range [{lo}..{hi}]")));
            }
            let init_kw = self.ident("`init`")?;
            if init_kw != "init" {
                return Err(self.err("expected `init`"));
            }
            let init = self.int("initial value")?;
            self.expect(Tok::Semi, "`;`")?;
            if init < lo || init > hi {
                return Err(ModelError::InitOutOfRange { var: name, value: init, lo, hi });
            }
            self.var_index.insert(name.clone(), self.vars.len());
            self.vars.push(VarDecl { name, lo, hi, init });
        }
        if self.vars.is_empty() {
            return Err(self.err("expected at least one `var` declaration"));
        }

        // commands
        let mut commands = Vec::new();
        while self.peek().is_some() {
            commands.push(self.command()?);
        }
        if commands.is_empty() {
            return Err(self.err("expected at least one command"));
        }
        Ok((faults, commands))
    }

    fn command(&mut self) -> Result<Command, ModelError> {
        let line = self.line();
        self.expect(Tok::LBracket, "`[`")?;
        let label = self.ident("action label")?;
        self.expect(Tok::RBracket, "`]`")?;
        let guard = self.expr()?;
        if guard.type_of(line)? != Ty::Bool {
            return Err(ModelError::TypeError { line, msg: "guard must be boolean".to_string() });
        }
        self.expect(Tok::Arrow, "`->`")?;
        let mut branches = vec![self.branch()?];
        while self.eat(Tok::Plus) {
            branches.push(self.branch()?);
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(Command { label, guard, branches, line })
    }

    fn branch(&mut self) -> Result<Branch, ModelError> {
        let line = self.line();
        // Attempt `probexpr :`; on failure rewind and treat the branch as
        // having an implicit probability.
        let save = self.pos;
        let prob = match self.probexpr() {
            Ok(p) if self.eat(Tok::Colon) => Some(p),
            _ => {
                self.pos = save;
                None
            }
        };
        let assigns = self.update()?;
        Ok(Branch { prob, assigns, line })
    }

    fn update(&mut self) -> Result<Vec<(usize, Expr)>, ModelError> {
        if self.peek() == Some(&Tok::Ident("true".to_string())) {
            self.pos += 1;
            return Ok(Vec::new());
        }
        let mut assigns = vec![self.assign()?];
        while self.eat(Tok::Amp) {
            assigns.push(self.assign()?);
        }
        Ok(assigns)
    }

    fn assign(&mut self) -> Result<(usize, Expr), ModelError> {
        let line = self.line();
        self.expect(Tok::LParen, "`(`")?;
        let name = self.ident("variable name")?;
        let var = *self
            .var_index
            .get(&name)
            .ok_or(ModelError::UnknownIdent { name, line })?;
        self.expect(Tok::Prime, "`'`")?;
        self.expect(Tok::Eq, "`=`")?;
        let e = self.expr()?;
        if e.type_of(line)? != Ty::Int {
            return Err(ModelError::TypeError {
                line,
                msg: "assigned expression must be an integer".to_string(),
            });
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok((var, e))
    }
}

// ---------------------------------------------------------------------------
// Expansion

/// Parses a model file and expands it into the PTS over its reachable
/// valuations.
pub fn parse_model(text: &str) -> Result<Pts, ModelError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        consts: BTreeMap::new(),
        vars: Vec::new(),
        var_index: BTreeMap::new(),
    };
    let (faults, commands) = p.parse_file()?;
    let vars = p.vars;

    // Branch probabilities are state independent; resolve the implicit one
    // and validate each command once.
    let mut resolved: Vec<(Command, Vec<Rational>)> = Vec::new();
    for cmd in commands {
        let given: Rational = cmd
            .branches
            .iter()
            .filter_map(|b| b.prob.clone())
            .sum();
        let omitted = cmd.branches.iter().filter(|b| b.prob.is_none()).count();
        if omitted > 1 {
            return Err(ModelError::Syntax {
                line: cmd.line,
                col: 1,
                msg: "at most one branch may omit its probability".to_string(),
            });
        }
        let mut probs = Vec::new();
        for b in &cmd.branches {
            let p = match &b.prob {
                Some(p) => p.clone(),
                None => Rational::one() - given.clone(),
            };
            if p < Rational::zero() || p > Rational::one() {
                return Err(ModelError::BranchRange {
                    label: cmd.label.clone(),
                    line: b.line,
                    value: crate::rational::rat_to_string(&p),
                });
            }
            probs.push(p);
        }
        let total: Rational = probs.iter().cloned().sum();
        if !total.is_one() {
            return Err(ModelError::BranchSum {
                label: cmd.label.clone(),
                line: cmd.line,
                sum: crate::rational::rat_to_string(&total),
            });
        }
        resolved.push((cmd, probs));
    }

    // Breadth-first expansion from the initial valuation.
    let initial = StateId(vars.iter().map(|v| v.init).collect());
    let mut transitions: BTreeMap<StateId, Vec<Transition>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    transitions.insert(initial.clone(), Vec::new());
    queue.push_back(initial.clone());

    while let Some(state) = queue.pop_front() {
        let mut outgoing: Vec<Transition> = Vec::new();
        for (cmd, probs) in &resolved {
            if !cmd.guard.eval_bool(&state.0) {
                continue;
            }
            // Merge branches with equal target valuations.
            let mut weights: BTreeMap<StateId, Rational> = BTreeMap::new();
            for (branch, p) in cmd.branches.iter().zip(probs) {
                if p.is_zero() {
                    continue;
                }
                let mut next = state.0.clone();
                for (var, e) in &branch.assigns {
                    let value = e.eval_int(&state.0);
                    let decl = &vars[*var];
                    if value < decl.lo || value > decl.hi {
                        return Err(ModelError::OutOfRange {
                            var: decl.name.clone(),
                            value,
                            lo: decl.lo,
                            hi: decl.hi,
                        });
                    }
                    next[*var] = value;
                }
                *weights.entry(StateId(next)).or_insert_with(Rational::zero) += p.clone();
            }
            let weights: BTreeMap<StateId, Prob> = weights
                .into_iter()
                .map(|(s, p)| (s, Prob::new(p).expect("branch probabilities lie in [0,1]")))
                .collect();
            let dist = Dist::new(weights).expect("branch probabilities sum to 1");
            for succ in dist.support() {
                if !transitions.contains_key(succ) {
                    transitions.insert(succ.clone(), Vec::new());
                    queue.push_back(succ.clone());
                }
            }
            let t = Transition { label: cmd.label.clone(), target: dist };
            if !outgoing.contains(&t) {
                outgoing.push(t);
            }
        }
        if outgoing.is_empty() {
            return Err(ModelError::Deadlock { state: state.to_string() });
        }
        outgoing.sort();
        transitions.insert(state, outgoing);
    }

    let mut actions: BTreeSet<String> =
        transitions.values().flatten().map(|t| t.label.clone()).collect();
    actions.extend(faults.iter().cloned());
    Pts::from_parts(vars, actions, faults, transitions, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reachable_states;
    use crate::rational::rat;

    fn memcell_nominal() -> Pts {
        parse_model(include_str!("../../../models/memcell_nominal.pts")).unwrap()
    }

    fn memcell_faulty() -> Pts {
        parse_model(include_str!("../../../models/memcell_faulty.pts")).unwrap()
    }

    fn memcell_faulty_limited() -> Pts {
        parse_model(include_str!("../../../models/memcell_faulty_limited.pts")).unwrap()
    }

    #[test]
    fn nominal_memcell_structure() {
        let pts = memcell_nominal();
        assert_eq!(pts.state_count(), 4);
        let actions: Vec<&str> = pts.actions().iter().map(|s| s.as_str()).collect();
        assert_eq!(actions, ["r0", "r1", "rfsh", "tick", "w0", "w1"]);
        assert!(pts.faults().is_empty());

        // One time step from the initial state: refresh mode with
        // probability p, otherwise unchanged.
        let init = pts.initial().clone();
        assert_eq!(init, StateId(vec![0, 0]));
        let tick: Vec<_> = pts.outgoing_labelled(&init, "tick").collect();
        assert_eq!(tick.len(), 1);
        let d = &tick[0].target;
        assert_eq!(d.get(&StateId(vec![0, 1])).unwrap().ratio(), &rat(1, 10));
        assert_eq!(d.get(&StateId(vec![0, 0])).unwrap().ratio(), &rat(9, 10));
        assert_eq!(d.support_size(), 2);
    }

    #[test]
    fn nominal_reachable_states() {
        let pts = memcell_nominal();
        let reach = reachable_states(&pts);
        let expected: std::collections::BTreeSet<StateId> =
            [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
                .into_iter()
                .map(StateId)
                .collect();
        assert_eq!(reach, expected);
    }

    #[test]
    fn faulty_memcell_tick_distribution() {
        let pts = memcell_faulty_limited();
        let init = pts.initial().clone();
        assert_eq!(init, StateId(vec![0, 0, 0]));
        let tick: Vec<_> = pts.outgoing_labelled(&init, "tick").collect();
        assert_eq!(tick.len(), 1);
        let d = &tick[0].target;
        assert_eq!(d.get(&StateId(vec![0, 2, 0])).unwrap().ratio(), &rat(1, 10));
        assert_eq!(d.get(&StateId(vec![0, 1, 0])).unwrap().ratio(), &rat(1, 20));
        assert_eq!(d.get(&StateId(vec![0, 0, 0])).unwrap().ratio(), &rat(17, 20));
    }

    #[test]
    fn faulty_unlimited_reaches_all_valuations() {
        let pts = memcell_faulty();
        // All (v, s) combinations are reachable once faults are unlimited.
        assert_eq!(pts.state_count(), 12);
        assert_eq!(
            pts.faults().iter().collect::<Vec<_>>(),
            vec![&"fault".to_string()]
        );
    }

    #[test]
    fn equal_fault_updates_are_merged() {
        // Both fault commands at v=0 produce the same successor, so the
        // faulty model has a single fault transition there.
        let pts = memcell_faulty();
        let s = StateId(vec![0, 1]); // v=0, s=1
        let faults: Vec<_> = pts.outgoing_labelled(&s, "fault").collect();
        assert_eq!(faults.len(), 1);
        assert!(faults[0].target.is_dirac());
        assert_eq!(faults[0].target.get(&StateId(vec![1, 0])).unwrap().ratio(), &rat(1, 1));
    }

    #[test]
    fn single_state_self_loop() {
        let pts = parse_model("var x: [0..0] init 0;\n[a] true -> (x'=x);\n").unwrap();
        assert_eq!(pts.state_count(), 1);
        let t = pts.outgoing(pts.initial());
        assert_eq!(t.len(), 1);
        assert!(t[0].target.is_dirac());
    }

    #[test]
    fn branches_with_equal_targets_merge() {
        let pts = parse_model(
            "var x: [0..1] init 0;\n[a] true -> 1/2: (x'=1) + 1/2: (x'=2-1);\n[b] (x=1) -> (x'=1);\n",
        )
        .unwrap();
        let t = &pts.outgoing(pts.initial())[0];
        assert!(t.target.is_dirac());
    }

    #[test]
    fn branch_sum_must_be_one() {
        let err = parse_model("var x: [0..1] init 0;\n[a] true -> 1/2: (x'=1);\n").unwrap_err();
        assert!(matches!(err, ModelError::BranchSum { .. }), "{err:?}");
    }

    #[test]
    fn update_out_of_range_is_reported() {
        let err = parse_model("var x: [0..1] init 0;\n[a] true -> (x'=x+5);\n").unwrap_err();
        assert!(matches!(err, ModelError::OutOfRange { .. }), "{err:?}");
    }

    #[test]
    fn deadlock_is_reported() {
        let err =
            parse_model("var x: [0..1] init 0;\n[a] (x=0) -> (x'=1);\n").unwrap_err();
        assert!(matches!(err, ModelError::Deadlock { .. }), "{err:?}");
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_model("var x: [0..1] init 0;\n[a] true -> x'=1;\n").unwrap_err();
        match err {
            ModelError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn negative_branch_probability_is_rejected() {
        let err = parse_model(
            "const p = 3/2;\nvar x: [0..1] init 0;\n[a] true -> p: (x'=1) + (1-p): (x'=0);\n",
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::BranchRange { .. }), "{err:?}");
    }

    #[test]
    fn canonical_round_trip() {
        for pts in [memcell_nominal(), memcell_faulty(), memcell_faulty_limited()] {
            let text = pts.to_canonical_text();
            let again = parse_model(&text).unwrap();
            assert_eq!(pts, again);
        }
    }

    #[test]
    fn branch_probabilities_sum_exactly_to_one() {
        for pts in [memcell_nominal(), memcell_faulty(), memcell_faulty_limited()] {
            for s in reachable_states(&pts) {
                for t in pts.outgoing(&s) {
                    let sum: Rational =
                        t.target.iter().map(|(_, p)| p.ratio().clone()).sum();
                    assert!(sum.is_one());
                }
            }
        }
    }

    #[test]
    fn reachability_is_closed_and_total() {
        for pts in [memcell_nominal(), memcell_faulty(), memcell_faulty_limited()] {
            let reach = reachable_states(&pts);
            for s in &reach {
                assert!(!pts.outgoing(s).is_empty());
                for t in pts.outgoing(s) {
                    for succ in t.target.support() {
                        assert!(reach.contains(succ));
                    }
                }
            }
        }
    }
}
