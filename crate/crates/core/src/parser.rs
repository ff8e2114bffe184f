//! Text format and pretty-printer.
//!
//! ```text
//! %calculus ma
//! open n1 | n1[n3[]] | n1[in n2.in n3.ok] | n2[open n1]
//! ```
//!
//! Prefixes bind tighter than `+`, which binds tighter than `|`; a restriction
//! `(nu n)` and a definition body `def D in P` extend as far right as possible.

use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{assign_labels, Branch, Calculus, Cap, Guard, Name, Pattern, Proc, Rule, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    /// Well-formed text that the declared calculus does not admit.
    Constraint,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

/// A term file: `%calculus <id>` header plus body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub calculus: Calculus,
    pub body: String,
}

impl SourceFile {
    pub fn parse(text: &str) -> Result<SourceFile, ParseError> {
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| ParseError { line: i + 1, col: 1, kind: ParseErrorKind::Syntax, message };
            let rest =
                trimmed.strip_prefix("%calculus").ok_or_else(|| err("expected `%calculus <id>` header".into()))?;
            let id = rest.trim();
            let calculus = Calculus::from_id(id).ok_or_else(|| err(format!("unknown calculus `{id}`")))?;
            // keep line numbers of the body aligned with the file
            let body: String =
                text.lines().enumerate().map(|(j, l)| if j <= i { "" } else { l }).collect::<Vec<_>>().join("\n");
            return Ok(SourceFile { calculus, body });
        }
        Err(ParseError {
            line: 1,
            col: 1,
            kind: ParseErrorKind::Syntax,
            message: "missing `%calculus <id>` header".into(),
        })
    }

    pub fn term(&self) -> Result<Term, ParseError> {
        parse(&self.body, self.calculus)
    }
}

/// Parses a term file (header plus body).
pub fn parse_file(text: &str) -> Result<Term, ParseError> {
    SourceFile::parse(text)?.term()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(Name),
    Zero,
    Ok,
    Nu,
    Tau,
    Def,
    And,
    Cap(Cap),
    Bar,
    Fire, // |>
    Plus,
    Dot,
    Bang,
    Query,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Lt,
    Gt,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(n) => write!(f, "name `{n}`"),
            Tok::Zero => f.write_str("`0`"),
            Tok::Ok => f.write_str("`ok`"),
            Tok::Nu => f.write_str("`nu`"),
            Tok::Tau => f.write_str("`tau`"),
            Tok::Def => f.write_str("`def`"),
            Tok::And => f.write_str("`and`"),
            Tok::Cap(c) => write!(f, "`{}`", c.keyword()),
            Tok::Bar => f.write_str("`|`"),
            Tok::Fire => f.write_str("`|>`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Query => f.write_str("`?`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut lx = Lexer { chars: src.char_indices().peekable(), src, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        let (tok, line, col) = lx.next_tok()?;
        let eof = tok == Tok::Eof;
        out.push((tok, line, col));
        if eof {
            return Ok(out);
        }
    }
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn err(&self, line: usize, col: usize, message: String) -> ParseError {
        ParseError { line, col, kind: ParseErrorKind::Syntax, message }
    }

    fn ident(&mut self) -> String {
        let start = self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len());
        let mut end = start;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                end += c.len_utf8();
                self.bump();
            } else {
                break;
            }
        }
        self.src[start..end].to_string()
    }

    fn next_tok(&mut self) -> Result<(Tok, usize, usize), ParseError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else { return Ok((Tok::Eof, line, col)) };
        let simple = match c {
            '|' => {
                self.bump();
                if self.peek() == Some('>') {
                    self.bump();
                    return Ok((Tok::Fire, line, col));
                }
                return Ok((Tok::Bar, line, col));
            }
            '+' => Some(Tok::Plus),
            '.' => Some(Tok::Dot),
            '!' => Some(Tok::Bang),
            '?' => Some(Tok::Query),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            _ => None,
        };
        if let Some(t) = simple {
            self.bump();
            return Ok((t, line, col));
        }
        if c.is_ascii_digit() {
            let word = self.ident();
            if word == "0" {
                return Ok((Tok::Zero, line, col));
            }
            return Err(self.err(line, col, format!("unexpected number `{word}`")));
        }
        if !(c.is_ascii_alphabetic() || c == '_') {
            return Err(self.err(line, col, format!("unexpected character `{c}`")));
        }
        let mut word = self.ident();
        if word == "co" && self.peek() == Some('-') {
            self.bump();
            word = format!("co-{}", self.ident());
        }
        let tok = match word.as_str() {
            "ok" => Tok::Ok,
            "nu" => Tok::Nu,
            "tau" => Tok::Tau,
            "def" => Tok::Def,
            "and" => Tok::And,
            "in" => Tok::Cap(Cap::In),
            "out" => Tok::Cap(Cap::Out),
            "open" => Tok::Cap(Cap::Open),
            "co-in" => Tok::Cap(Cap::CoIn),
            "co-out" => Tok::Cap(Cap::CoOut),
            "co-open" => Tok::Cap(Cap::CoOpen),
            w if w.starts_with("co-") => return Err(self.err(line, col, format!("unknown co-capability `{w}`"))),
            _ => {
                let mut fresh = 0;
                if self.peek() == Some('\'') {
                    self.bump();
                    let digits = self.ident();
                    fresh = digits
                        .parse::<u32>()
                        .ok()
                        .filter(|&f| f > 0)
                        .ok_or_else(|| self.err(line, col, format!("bad freshness suffix on `{word}`")))?;
                }
                Tok::Ident(Name::with_fresh(&word, fresh))
            }
        };
        Ok((tok, line, col))
    }
}

/// Parses a term body (no header) under the given calculus and labels it.
pub fn parse(text: &str, calculus: Calculus) -> Result<Term, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, calculus };
    let proc = p.par()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected());
    }
    Ok(assign_labels(&Term::new(calculus, proc)))
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    calculus: Calculus,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, pos: usize, kind: ParseErrorKind, message: String) -> ParseError {
        let (_, line, col) = self.toks[pos.min(self.toks.len() - 1)];
        ParseError { line, col, kind, message }
    }

    fn unexpected(&self) -> ParseError {
        self.error_at(self.pos, ParseErrorKind::Syntax, format!("unexpected {}", self.peek()))
    }

    fn constraint(&self, pos: usize, message: String) -> ParseError {
        self.error_at(pos, ParseErrorKind::Constraint, message)
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            Err(self.error_at(self.pos, ParseErrorKind::Syntax, format!("expected {t}, found {}", self.peek())))
        }
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        match self.next() {
            Tok::Ident(n) => Ok(n),
            _ => {
                self.pos -= 1;
                Err(self.error_at(self.pos, ParseErrorKind::Syntax, format!("expected a name, found {}", self.peek())))
            }
        }
    }

    fn opt_name(&mut self) -> Result<Option<Name>, ParseError> {
        if let Tok::Ident(_) = self.peek() {
            Ok(Some(self.name()?))
        } else {
            Ok(None)
        }
    }

    fn par(&mut self) -> Result<Proc, ParseError> {
        let mut items = vec![self.choice()?];
        while *self.peek() == Tok::Bar {
            self.next();
            items.push(self.choice()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Proc::Par(items) })
    }

    fn choice(&mut self) -> Result<Proc, ParseError> {
        let start = self.pos;
        let first = self.unary()?;
        if *self.peek() != Tok::Plus {
            return Ok(first);
        }
        match self.calculus {
            Calculus::PiMix | Calculus::PiSep => {}
            Calculus::PiAsyn => return Err(self.constraint(self.pos, "sums are not admitted in pi-asyn".into())),
            _ => return Err(self.unexpected()),
        }
        let mut branches = self.sum_branches(first, start)?;
        while *self.peek() == Tok::Plus {
            self.next();
            let at = self.pos;
            let next = self.unary()?;
            branches.extend(self.sum_branches(next, at)?);
        }
        if self.calculus == Calculus::PiSep {
            let has_in = branches.iter().any(|b| matches!(b.guard, Guard::In { .. }));
            let has_out = branches.iter().any(|b| matches!(b.guard, Guard::Out { .. }));
            if has_in && has_out {
                return Err(self.constraint(start, "mixed sum (inputs and outputs) in pi-sep".into()));
            }
        }
        Ok(Proc::sum(branches))
    }

    fn sum_branches(&self, p: Proc, at: usize) -> Result<Vec<Branch>, ParseError> {
        match p {
            Proc::Sum { branches, .. } => Ok(branches),
            _ => Err(self.constraint(at, "sum operands must be guarded".into())),
        }
    }

    fn unary(&mut self) -> Result<Proc, ParseError> {
        let at = self.pos;
        match self.next() {
            Tok::Zero => Ok(Proc::Nil),
            Tok::Ok => Ok(Proc::Success),
            Tok::LParen => {
                if *self.peek() == Tok::Nu {
                    if self.calculus == Calculus::Join {
                        return Err(self.constraint(at, "restriction is not admitted in join".into()));
                    }
                    self.next();
                    let n = self.name()?;
                    self.expect(Tok::RParen)?;
                    let body = self.par()?;
                    Ok(Proc::res(n, body))
                } else {
                    let inner = self.par()?;
                    self.expect(Tok::RParen)?;
                    Ok(inner)
                }
            }
            Tok::Bang => {
                if self.calculus == Calculus::Join {
                    return Err(self.constraint(at, "replication is not admitted in join".into()));
                }
                Ok(Proc::rep(self.unary()?))
            }
            Tok::Def if self.calculus == Calculus::Join => self.definition(),
            Tok::Cap(cap) if self.calculus.is_ambient() => {
                if cap.is_co() && self.calculus != Calculus::Sa {
                    return Err(self.constraint(at, format!("`{}` requires sa", cap.keyword())));
                }
                let target = self.name()?;
                let cont = self.continuation()?;
                Ok(Proc::act(cap, target, cont))
            }
            Tok::Tau if self.calculus.is_pi() => {
                let cont = self.continuation()?;
                Ok(Proc::prefix(Guard::Tau, cont))
            }
            Tok::Ident(n) => match self.calculus {
                Calculus::Ma | Calculus::Sa => {
                    self.expect(Tok::LBrack)?;
                    let body = if *self.peek() == Tok::RBrack { Proc::Nil } else { self.par()? };
                    self.expect(Tok::RBrack)?;
                    Ok(Proc::amb(n, body))
                }
                Calculus::Join => {
                    self.expect(Tok::Lt)?;
                    let arg = self.opt_name()?;
                    self.expect(Tok::Gt)?;
                    Ok(Proc::msg(n, arg))
                }
                _ => self.pi_prefix(n),
            },
            _ => {
                self.pos = at;
                Err(self.unexpected())
            }
        }
    }

    fn continuation(&mut self) -> Result<Proc, ParseError> {
        if *self.peek() == Tok::Dot {
            self.next();
            self.unary()
        } else {
            Ok(Proc::Nil)
        }
    }

    fn pi_prefix(&mut self, chan: Name) -> Result<Proc, ParseError> {
        match self.next() {
            Tok::Bang => {
                self.expect(Tok::Lt)?;
                let obj = self.opt_name()?;
                self.expect(Tok::Gt)?;
                let dot = self.pos;
                let cont = self.continuation()?;
                if self.calculus == Calculus::PiAsyn && self.toks[dot].0 == Tok::Dot {
                    return Err(self.constraint(dot, "outputs in pi-asyn have no continuation".into()));
                }
                Ok(Proc::prefix(Guard::Out { chan, obj }, cont))
            }
            Tok::Query => {
                self.expect(Tok::LParen)?;
                let var = self.opt_name()?;
                self.expect(Tok::RParen)?;
                let cont = self.continuation()?;
                Ok(Proc::prefix(Guard::In { chan, var }, cont))
            }
            _ => {
                self.pos -= 1;
                Err(self.error_at(
                    self.pos,
                    ParseErrorKind::Syntax,
                    format!("expected `!` or `?`, found {}", self.peek()),
                ))
            }
        }
    }

    fn definition(&mut self) -> Result<Proc, ParseError> {
        let mut rules = vec![self.rule()?];
        while *self.peek() == Tok::And {
            self.next();
            rules.push(self.rule()?);
        }
        self.expect(Tok::Cap(Cap::In))?;
        let body = self.par()?;
        Ok(Proc::def(rules, body))
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let start = self.pos;
        let mut patterns = Vec::new();
        loop {
            let chan = self.name()?;
            self.expect(Tok::Lt)?;
            let var = self.opt_name()?;
            self.expect(Tok::Gt)?;
            patterns.push(Pattern { chan, var });
            if *self.peek() == Tok::Bar {
                self.next();
            } else {
                break;
            }
        }
        self.expect(Tok::Fire)?;
        let chans: BTreeSet<&Name> = patterns.iter().map(|p| &p.chan).collect();
        if chans.len() != patterns.len() {
            return Err(self.constraint(start, "join pattern defines a channel twice".into()));
        }
        let vars: Vec<&Name> = patterns.iter().filter_map(|p| p.var.as_ref()).collect();
        let distinct: BTreeSet<&Name> = vars.iter().copied().collect();
        if distinct.len() != vars.len() {
            return Err(self.constraint(start, "join pattern receives the same variable twice".into()));
        }
        let body = self.par()?;
        Ok(Rule { patterns, body })
    }
}

// ---------------------------------------------------------------------------
// printing

/// Renders a term in the text format (without header); `parse` reads it back
/// to an alpha-equivalent term.
pub fn render(t: &Term) -> String {
    render_proc(&t.proc)
}

pub fn render_proc(p: &Proc) -> String {
    let mut s = String::new();
    write_proc(&mut s, p, Level::Par);
    s
}

/// Renders with the `%calculus` header, ready to be written to a file.
pub fn render_file(t: &Term) -> String {
    format!("%calculus {}\n{}\n", t.calculus, render(t))
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    /// anything, including trailing restrictions and definitions
    Par,
    /// an operand of `|`
    Choice,
    /// an operand of a prefix, `!` or `+`
    Unary,
}

fn write_proc(s: &mut String, p: &Proc, level: Level) {
    let needs_parens = match p {
        Proc::Par(_) | Proc::Res(..) | Proc::Def { .. } => level != Level::Par,
        Proc::Sum { branches, .. } => branches.len() > 1 && level == Level::Unary,
        _ => false,
    };
    if needs_parens {
        s.push('(');
        write_proc(s, p, Level::Par);
        s.push(')');
        return;
    }
    match p {
        Proc::Nil => s.push('0'),
        Proc::Success => s.push_str("ok"),
        Proc::Par(ps) => {
            for (i, q) in ps.iter().enumerate() {
                if i > 0 {
                    s.push_str(" | ");
                }
                write_proc(s, q, Level::Choice);
            }
        }
        Proc::Res(n, body) => {
            s.push_str(&format!("(nu {n})"));
            match **body {
                Proc::Res(..) => write_proc(s, body, Level::Par),
                Proc::Par(_) => {
                    s.push('(');
                    write_proc(s, body, Level::Par);
                    s.push(')');
                }
                _ => {
                    s.push(' ');
                    write_proc(s, body, Level::Par);
                }
            }
        }
        Proc::Rep { body, .. } => {
            s.push('!');
            write_proc(s, body, Level::Unary);
        }
        Proc::Amb { name, body, .. } => {
            s.push_str(&format!("{name}["));
            if !body.is_nil() {
                write_proc(s, body, Level::Par);
            }
            s.push(']');
        }
        Proc::Act { cap, target, cont, .. } => {
            s.push_str(&format!("{} {target}", cap.keyword()));
            write_cont(s, cont);
        }
        Proc::Sum { branches, .. } => {
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    s.push_str(" + ");
                }
                match &b.guard {
                    Guard::Out { chan, obj } => {
                        s.push_str(&format!("{chan}!<{}>", opt(obj)));
                    }
                    Guard::In { chan, var } => {
                        s.push_str(&format!("{chan}?({})", opt(var)));
                    }
                    Guard::Tau => s.push_str("tau"),
                }
                write_cont(s, &b.cont);
            }
        }
        Proc::Msg { chan, arg, .. } => s.push_str(&format!("{chan}<{}>", opt(arg))),
        Proc::Def { rules, body, .. } => {
            s.push_str("def ");
            for (i, r) in rules.iter().enumerate() {
                if i > 0 {
                    s.push_str(" and ");
                }
                for (j, pat) in r.patterns.iter().enumerate() {
                    if j > 0 {
                        s.push_str(" | ");
                    }
                    s.push_str(&format!("{}<{}>", pat.chan, opt(&pat.var)));
                }
                s.push_str(" |> ");
                if matches!(r.body, Proc::Def { .. }) {
                    s.push('(');
                    write_proc(s, &r.body, Level::Par);
                    s.push(')');
                } else {
                    write_proc(s, &r.body, Level::Par);
                }
            }
            s.push_str(" in ");
            write_proc(s, body, Level::Par);
        }
    }
}

fn write_cont(s: &mut String, cont: &Proc) {
    if !cont.is_nil() {
        s.push('.');
        write_proc(s, cont, Level::Unary);
    }
}

fn opt(n: &Option<Name>) -> String {
    n.as_ref().map(|n| n.to_string()).unwrap_or_default()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}
