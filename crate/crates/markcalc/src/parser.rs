//! Concrete syntax: parsing and printing for both calculi.
//!
//! Grammar, loosest binding first: choice `+`, parallel `||{..}`, the
//! postfix operators `/{..}` and `[..]`, then the prefix operators
//! (`<a,rate>.`, `a.`, `(rate).`, `rec X.`), which bind tightest. `+` and
//! `||` associate to the left. Action names start with a lowercase letter,
//! process variables with an uppercase one, and `#` starts a line comment.
//!
//! Printing emits a canonical form with the fewest parentheses that
//! re-parses to the same tree.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{pow::Pow, One};
use thiserror::Error;

use crate::rate::Rate;
use crate::terms::{
    is_valid_variable, ActionName, Calculus, ItTerm, OtTerm, Relabeling, TermPath, VisName,
};

/// Byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    fn merge(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// Spans of every node of a parsed term, mirroring the tree shape; child
/// order matches [`TermPath`] indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTree {
    pub span: SourceSpan,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    fn leaf(span: SourceSpan) -> Self {
        SpanTree {
            span,
            children: Vec::new(),
        }
    }

    pub fn lookup(&self, path: &TermPath) -> Option<&SpanTree> {
        let mut node = self;
        for &i in path {
            node = node.children.get(i)?;
        }
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Variable(String),
    Number(String),
    Nil,
    Rec,
    Tau,
    LAngle,
    RAngle,
    Comma,
    Dot,
    Plus,
    ParOp,
    Slash,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(s) => format!("name `{s}`"),
            Tok::Variable(s) => format!("variable `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Nil => "`nil`".into(),
            Tok::Rec => "`rec`".into(),
            Tok::Tau => "`tau`".into(),
            Tok::LAngle => "`<`".into(),
            Tok::RAngle => "`>`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Plus => "`+`".into(),
            Tok::ParOp => "`||`".into(),
            Tok::Slash => "`/`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut lexer = Lexer {
        src: src.as_bytes(),
        pos: 0,
    };
    let mut out = Vec::new();
    loop {
        let (tok, span) = lexer.next_token()?;
        let done = tok == Tok::Eof;
        out.push((tok, span));
        if done {
            return Ok(out);
        }
    }
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, SourceSpan), ParseError> {
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos] == b'#' {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        let span = |end: usize| SourceSpan { start, end };
        if self.pos >= self.src.len() {
            return Ok((Tok::Eof, span(start)));
        }
        let c = self.src[self.pos];
        let single = |lx: &mut Self, tok: Tok| {
            lx.pos += 1;
            Ok((tok, span(lx.pos)))
        };
        match c {
            b'<' => single(self, Tok::LAngle),
            b'>' => single(self, Tok::RAngle),
            b',' => single(self, Tok::Comma),
            b'.' => single(self, Tok::Dot),
            b'+' => single(self, Tok::Plus),
            b'/' => single(self, Tok::Slash),
            b'{' => single(self, Tok::LBrace),
            b'}' => single(self, Tok::RBrace),
            b'[' => single(self, Tok::LBrack),
            b']' => single(self, Tok::RBrack),
            b'(' => single(self, Tok::LParen),
            b')' => single(self, Tok::RParen),
            b'|' => {
                if self.src.get(self.pos + 1) == Some(&b'|') {
                    self.pos += 2;
                    Ok((Tok::ParOp, span(self.pos)))
                } else {
                    Err(ParseError {
                        span: span(self.pos + 1),
                        message: "stray `|`".into(),
                        expected: vec!["`||`".into()],
                    })
                }
            }
            b'-' => {
                if self.src.get(self.pos + 1) == Some(&b'>') {
                    self.pos += 2;
                    Ok((Tok::Arrow, span(self.pos)))
                } else {
                    Err(ParseError {
                        span: span(self.pos + 1),
                        message: "stray `-`".into(),
                        expected: vec!["`->`".into()],
                    })
                }
            }
            b'0'..=b'9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                // A dot joins the number only when a digit follows, so
                // `1.nil` still lexes as `1` `.` `nil`.
                if self.pos + 1 < self.src.len()
                    && self.src[self.pos] == b'.'
                    && self.src[self.pos + 1].is_ascii_digit()
                {
                    self.pos += 1;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Ok((Tok::Number(text.to_string()), span(self.pos)))
            }
            c if c.is_ascii_alphabetic() => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let tok = match text {
                    "nil" => Tok::Nil,
                    "rec" => Tok::Rec,
                    "tau" => Tok::Tau,
                    _ if text.as_bytes()[0].is_ascii_uppercase() => {
                        Tok::Variable(text.to_string())
                    }
                    _ => Tok::Name(text.to_string()),
                };
                Ok((tok, span(self.pos)))
            }
            other => Err(ParseError {
                span: span(self.pos + 1),
                message: format!("unexpected character `{}`", other as char),
                expected: Vec::new(),
            }),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

type Parsed<T> = Result<(T, SpanTree), ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn peek_span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let out = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        out
    }

    fn unexpected<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.peek_span(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<SourceSpan, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.unexpected(&[expected])
        }
    }

    fn visibility_error<T>(&self, span: SourceSpan) -> Result<T, ParseError> {
        Err(ParseError {
            span,
            message: "`tau` is not a visible name here (action visibility would be violated)"
                .into(),
            expected: vec!["visible name".into()],
        })
    }

    fn visible_name(&mut self) -> Result<(VisName, SourceSpan), ParseError> {
        match self.peek().clone() {
            Tok::Name(s) => {
                let span = self.bump().1;
                let name = VisName::new(&s).map_err(|e| ParseError {
                    span,
                    message: e.to_string(),
                    expected: vec!["visible name".into()],
                })?;
                Ok((name, span))
            }
            Tok::Tau => {
                let span = self.peek_span();
                self.visibility_error(span)
            }
            _ => self.unexpected(&["visible name"]),
        }
    }

    fn action_name(&mut self) -> Result<(ActionName, SourceSpan), ParseError> {
        match self.peek() {
            Tok::Tau => {
                let span = self.bump().1;
                Ok((ActionName::Tau, span))
            }
            Tok::Name(_) => {
                let (v, span) = self.visible_name()?;
                Ok((ActionName::Visible(v), span))
            }
            _ => self.unexpected(&["action name", "`tau`"]),
        }
    }

    /// `{}` or `{a,b,...}` of visible names.
    fn name_set(&mut self) -> Result<(BTreeSet<VisName>, SourceSpan), ParseError> {
        let open = self.expect(Tok::LBrace, "`{`")?;
        let mut set = BTreeSet::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let (name, _) = self.visible_name()?;
                set.insert(name);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let close = self.expect(Tok::RBrace, "`}`")?;
        Ok((set, open.merge(close)))
    }

    /// `[]` or `[a->b,...]`; sources must be distinct visible names.
    fn relabeling(&mut self) -> Result<(Relabeling, SourceSpan), ParseError> {
        let open = self.expect(Tok::LBrack, "`[`")?;
        let mut pairs: Vec<(VisName, VisName)> = Vec::new();
        if *self.peek() != Tok::RBrack {
            loop {
                let (from, from_span) = self.visible_name()?;
                self.expect(Tok::Arrow, "`->`")?;
                let (to, _) = self.visible_name()?;
                if pairs.iter().any(|(f, _)| *f == from) {
                    return Err(ParseError {
                        span: from_span,
                        message: format!("duplicate relabeling source `{from}`"),
                        expected: Vec::new(),
                    });
                }
                pairs.push((from, to));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let close = self.expect(Tok::RBrack, "`]`")?;
        Ok((Relabeling::from_pairs(pairs), open.merge(close)))
    }

    /// A rate literal: a decimal like `1.5` (kept exact as 3/2) or a
    /// fraction of two integers. Must be strictly positive.
    fn rate(&mut self) -> Result<(Rate, SourceSpan), ParseError> {
        let (num_text, start_span) = match self.peek().clone() {
            Tok::Number(s) => {
                let span = self.bump().1;
                (s, span)
            }
            _ => return self.unexpected(&["rate literal"]),
        };
        let (numer, mut denom) = match num_text.split_once('.') {
            None => (num_text.parse::<BigInt>().unwrap(), BigInt::one()),
            Some((int, frac)) => {
                let digits = format!("{int}{frac}");
                let den = BigInt::from(10u32).pow(frac.len());
                (digits.parse::<BigInt>().unwrap(), den)
            }
        };
        let mut full_span = start_span;
        // Fractions take integer parts only; a decimal numerator ends the
        // literal and any following `/` belongs to the enclosing context.
        if !num_text.contains('.') && *self.peek() == Tok::Slash {
            self.bump();
            match self.peek().clone() {
                Tok::Number(s) if !s.contains('.') => {
                    let span = self.bump().1;
                    full_span = full_span.merge(span);
                    denom = s.parse::<BigInt>().unwrap();
                }
                _ => return self.unexpected(&["integer denominator"]),
            }
        }
        if denom == BigInt::from(0u32) {
            return Err(ParseError {
                span: full_span,
                message: "rate denominator must be nonzero".into(),
                expected: Vec::new(),
            });
        }
        let rate = Rate::from_big(numer, denom).map_err(|e| ParseError {
            span: full_span,
            message: e.to_string(),
            expected: Vec::new(),
        })?;
        if !rate.is_positive() {
            return Err(ParseError {
                span: full_span,
                message: "rate must be positive".into(),
                expected: Vec::new(),
            });
        }
        Ok((rate, full_span))
    }

    // Integrated-time grammar.

    fn it_choice(&mut self) -> Parsed<ItTerm> {
        let (mut term, mut tree) = self.it_par()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let (rhs, rhs_tree) = self.it_par()?;
            let span = tree.span.merge(rhs_tree.span);
            term = ItTerm::choice(term, rhs);
            tree = SpanTree {
                span,
                children: vec![tree, rhs_tree],
            };
        }
        Ok((term, tree))
    }

    fn it_par(&mut self) -> Parsed<ItTerm> {
        let (mut term, mut tree) = self.it_postfix()?;
        while *self.peek() == Tok::ParOp {
            self.bump();
            let (sync, _) = self.name_set()?;
            let (rhs, rhs_tree) = self.it_postfix()?;
            let span = tree.span.merge(rhs_tree.span);
            term = ItTerm::par(term, rhs, sync);
            tree = SpanTree {
                span,
                children: vec![tree, rhs_tree],
            };
        }
        Ok((term, tree))
    }

    fn it_postfix(&mut self) -> Parsed<ItTerm> {
        let (mut term, mut tree) = self.it_prefix()?;
        loop {
            match self.peek() {
                Tok::Slash => {
                    self.bump();
                    let (set, set_span) = self.name_set()?;
                    let span = tree.span.merge(set_span);
                    term = ItTerm::hide(term, set);
                    tree = SpanTree {
                        span,
                        children: vec![tree],
                    };
                }
                Tok::LBrack => {
                    let (phi, phi_span) = self.relabeling()?;
                    let span = tree.span.merge(phi_span);
                    term = ItTerm::relab(term, phi);
                    tree = SpanTree {
                        span,
                        children: vec![tree],
                    };
                }
                _ => return Ok((term, tree)),
            }
        }
    }

    fn it_prefix(&mut self) -> Parsed<ItTerm> {
        match self.peek() {
            Tok::LAngle => {
                let open = self.bump().1;
                let (name, _) = self.action_name()?;
                self.expect(Tok::Comma, "`,`")?;
                let (rate, _) = self.rate()?;
                self.expect(Tok::RAngle, "`>`")?;
                self.expect(Tok::Dot, "`.`")?;
                let (body, body_tree) = self.it_prefix()?;
                let span = open.merge(body_tree.span);
                Ok((
                    ItTerm::prefix(name, rate, body),
                    SpanTree {
                        span,
                        children: vec![body_tree],
                    },
                ))
            }
            Tok::Rec => {
                let open = self.bump().1;
                let var = self.variable()?;
                self.expect(Tok::Dot, "`.`")?;
                let (body, body_tree) = self.it_prefix()?;
                let span = open.merge(body_tree.span);
                Ok((
                    ItTerm::rec(&var, body),
                    SpanTree {
                        span,
                        children: vec![body_tree],
                    },
                ))
            }
            _ => self.it_atom(),
        }
    }

    fn it_atom(&mut self) -> Parsed<ItTerm> {
        match self.peek().clone() {
            Tok::Nil => {
                let span = self.bump().1;
                Ok((ItTerm::Nil, SpanTree::leaf(span)))
            }
            Tok::Variable(x) => {
                let span = self.bump().1;
                Ok((ItTerm::Var(x), SpanTree::leaf(span)))
            }
            Tok::LParen => {
                let open = self.bump().1;
                let (term, mut tree) = self.it_choice()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                tree.span = open.merge(close);
                Ok((term, tree))
            }
            _ => self.unexpected(&["`nil`", "`<`", "`rec`", "variable", "`(`"]),
        }
    }

    // Orthogonal-time grammar.

    fn variable(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Variable(x) => {
                let span = self.bump().1;
                if !is_valid_variable(&x) {
                    return Err(ParseError {
                        span,
                        message: format!("`{x}` is not a valid process variable"),
                        expected: vec!["variable".into()],
                    });
                }
                Ok(x)
            }
            _ => self.unexpected(&["variable"]),
        }
    }

    fn ot_choice(&mut self) -> Parsed<OtTerm> {
        let (mut term, mut tree) = self.ot_par()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let (rhs, rhs_tree) = self.ot_par()?;
            let span = tree.span.merge(rhs_tree.span);
            term = OtTerm::choice(term, rhs);
            tree = SpanTree {
                span,
                children: vec![tree, rhs_tree],
            };
        }
        Ok((term, tree))
    }

    fn ot_par(&mut self) -> Parsed<OtTerm> {
        let (mut term, mut tree) = self.ot_postfix()?;
        while *self.peek() == Tok::ParOp {
            self.bump();
            let (sync, _) = self.name_set()?;
            let (rhs, rhs_tree) = self.ot_postfix()?;
            let span = tree.span.merge(rhs_tree.span);
            term = OtTerm::par(term, rhs, sync);
            tree = SpanTree {
                span,
                children: vec![tree, rhs_tree],
            };
        }
        Ok((term, tree))
    }

    fn ot_postfix(&mut self) -> Parsed<OtTerm> {
        let (mut term, mut tree) = self.ot_prefix()?;
        loop {
            match self.peek() {
                Tok::Slash => {
                    self.bump();
                    let (set, set_span) = self.name_set()?;
                    let span = tree.span.merge(set_span);
                    term = OtTerm::hide(term, set);
                    tree = SpanTree {
                        span,
                        children: vec![tree],
                    };
                }
                Tok::LBrack => {
                    let (phi, phi_span) = self.relabeling()?;
                    let span = tree.span.merge(phi_span);
                    term = OtTerm::relab(term, phi);
                    tree = SpanTree {
                        span,
                        children: vec![tree],
                    };
                }
                _ => return Ok((term, tree)),
            }
        }
    }

    fn ot_prefix(&mut self) -> Parsed<OtTerm> {
        match self.peek().clone() {
            Tok::Name(_) | Tok::Tau => {
                let (name, name_span) = self.action_name()?;
                self.expect(Tok::Dot, "`.`")?;
                let (body, body_tree) = self.ot_prefix()?;
                let span = name_span.merge(body_tree.span);
                Ok((
                    OtTerm::act(name, body),
                    SpanTree {
                        span,
                        children: vec![body_tree],
                    },
                ))
            }
            // `(` followed by a number is a time prefix, not grouping:
            // process terms never start with a digit.
            Tok::LParen if matches!(self.peek_at(1), Tok::Number(_)) => {
                let open = self.bump().1;
                let (rate, _) = self.rate()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Dot, "`.`")?;
                let (body, body_tree) = self.ot_prefix()?;
                let span = open.merge(body_tree.span);
                Ok((
                    OtTerm::delay(rate, body),
                    SpanTree {
                        span,
                        children: vec![body_tree],
                    },
                ))
            }
            Tok::Rec => {
                let open = self.bump().1;
                let var = self.variable()?;
                self.expect(Tok::Dot, "`.`")?;
                let (body, body_tree) = self.ot_prefix()?;
                let span = open.merge(body_tree.span);
                Ok((
                    OtTerm::rec(&var, body),
                    SpanTree {
                        span,
                        children: vec![body_tree],
                    },
                ))
            }
            _ => self.ot_atom(),
        }
    }

    fn ot_atom(&mut self) -> Parsed<OtTerm> {
        match self.peek().clone() {
            Tok::Nil => {
                let span = self.bump().1;
                Ok((OtTerm::Nil, SpanTree::leaf(span)))
            }
            Tok::Variable(x) => {
                let span = self.bump().1;
                Ok((OtTerm::Var(x), SpanTree::leaf(span)))
            }
            Tok::LParen => {
                let open = self.bump().1;
                let (term, mut tree) = self.ot_choice()?;
                let close = self.expect(Tok::RParen, "`)`")?;
                tree.span = open.merge(close);
                Ok((term, tree))
            }
            _ => self.unexpected(&["`nil`", "action name", "`(`", "`rec`", "variable"]),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected(&["end of input"])
        }
    }
}

fn parser_for(text: &str) -> Result<Parser, ParseError> {
    Ok(Parser {
        toks: lex(text)?,
        pos: 0,
    })
}

pub fn parse_it(text: &str) -> Result<ItTerm, ParseError> {
    parse_it_spanned(text).map(|(t, _)| t)
}

pub fn parse_it_spanned(text: &str) -> Result<(ItTerm, SpanTree), ParseError> {
    let mut p = parser_for(text)?;
    let out = p.it_choice()?;
    p.finish()?;
    Ok(out)
}

pub fn parse_ot(text: &str) -> Result<OtTerm, ParseError> {
    parse_ot_spanned(text).map(|(t, _)| t)
}

pub fn parse_ot_spanned(text: &str) -> Result<(OtTerm, SpanTree), ParseError> {
    let mut p = parser_for(text)?;
    let out = p.ot_choice()?;
    p.finish()?;
    Ok(out)
}

// Printing. Binding levels, loosest to tightest; a child below its
// position's minimum level gets parenthesized.
const LVL_CHOICE: u8 = 0;
const LVL_PAR: u8 = 1;
const LVL_POSTFIX: u8 = 2;
const LVL_PREFIX: u8 = 3;
const LVL_ATOM: u8 = 4;

fn set_text(set: &BTreeSet<VisName>) -> String {
    let names: Vec<&str> = set.iter().map(|n| n.as_str()).collect();
    format!("{{{}}}", names.join(","))
}

fn relab_text(phi: &Relabeling) -> String {
    let pairs: Vec<String> = phi.pairs().map(|(f, t)| format!("{f}->{t}")).collect();
    format!("[{}]", pairs.join(","))
}

fn it_level(t: &ItTerm) -> u8 {
    match t {
        ItTerm::Nil | ItTerm::Var(_) => LVL_ATOM,
        ItTerm::Prefix(..) | ItTerm::Rec(..) => LVL_PREFIX,
        ItTerm::Hide(..) | ItTerm::Relab(..) => LVL_POSTFIX,
        ItTerm::Par(..) => LVL_PAR,
        ItTerm::Choice(..) => LVL_CHOICE,
    }
}

fn ot_level(t: &OtTerm) -> u8 {
    match t {
        OtTerm::Nil | OtTerm::Var(_) => LVL_ATOM,
        OtTerm::ActPrefix(..) | OtTerm::TimePrefix(..) | OtTerm::Rec(..) => LVL_PREFIX,
        OtTerm::Hide(..) | OtTerm::Relab(..) => LVL_POSTFIX,
        OtTerm::Par(..) => LVL_PAR,
        OtTerm::Choice(..) => LVL_CHOICE,
    }
}

fn print_it_at(t: &ItTerm, min: u8, out: &mut String) {
    if it_level(t) < min {
        out.push('(');
        print_it_at(t, LVL_CHOICE, out);
        out.push(')');
        return;
    }
    match t {
        ItTerm::Nil => out.push_str("nil"),
        ItTerm::Var(x) => out.push_str(x),
        ItTerm::Prefix(a, rate, p) => {
            out.push('<');
            out.push_str(&a.to_string());
            out.push(',');
            out.push_str(&rate.to_string());
            out.push_str(">.");
            print_it_at(p, LVL_PREFIX, out);
        }
        ItTerm::Rec(x, p) => {
            out.push_str("rec ");
            out.push_str(x);
            out.push('.');
            print_it_at(p, LVL_PREFIX, out);
        }
        ItTerm::Hide(p, set) => {
            print_it_at(p, LVL_POSTFIX, out);
            out.push('/');
            out.push_str(&set_text(set));
        }
        ItTerm::Relab(p, phi) => {
            print_it_at(p, LVL_POSTFIX, out);
            out.push_str(&relab_text(phi));
        }
        ItTerm::Par(l, r, sync) => {
            print_it_at(l, LVL_PAR, out);
            out.push_str(" ||");
            out.push_str(&set_text(sync));
            out.push(' ');
            print_it_at(r, LVL_POSTFIX, out);
        }
        ItTerm::Choice(l, r) => {
            print_it_at(l, LVL_CHOICE, out);
            out.push_str(" + ");
            print_it_at(r, LVL_PAR, out);
        }
    }
}

fn print_ot_at(t: &OtTerm, min: u8, out: &mut String) {
    if ot_level(t) < min {
        out.push('(');
        print_ot_at(t, LVL_CHOICE, out);
        out.push(')');
        return;
    }
    match t {
        OtTerm::Nil => out.push_str("nil"),
        OtTerm::Var(x) => out.push_str(x),
        OtTerm::ActPrefix(a, p) => {
            out.push_str(&a.to_string());
            out.push('.');
            print_ot_at(p, LVL_PREFIX, out);
        }
        OtTerm::TimePrefix(rate, p) => {
            out.push('(');
            out.push_str(&rate.to_string());
            out.push_str(").");
            print_ot_at(p, LVL_PREFIX, out);
        }
        OtTerm::Rec(x, p) => {
            out.push_str("rec ");
            out.push_str(x);
            out.push('.');
            print_ot_at(p, LVL_PREFIX, out);
        }
        OtTerm::Hide(p, set) => {
            print_ot_at(p, LVL_POSTFIX, out);
            out.push('/');
            out.push_str(&set_text(set));
        }
        OtTerm::Relab(p, phi) => {
            print_ot_at(p, LVL_POSTFIX, out);
            out.push_str(&relab_text(phi));
        }
        OtTerm::Par(l, r, sync) => {
            print_ot_at(l, LVL_PAR, out);
            out.push_str(" ||");
            out.push_str(&set_text(sync));
            out.push(' ');
            print_ot_at(r, LVL_POSTFIX, out);
        }
        OtTerm::Choice(l, r) => {
            print_ot_at(l, LVL_CHOICE, out);
            out.push_str(" + ");
            print_ot_at(r, LVL_PAR, out);
        }
    }
}

/// Canonical text: `parse_it(print_it(t))` returns `t` unchanged.
pub fn print_it(t: &ItTerm) -> String {
    let mut out = String::new();
    print_it_at(t, LVL_CHOICE, &mut out);
    out
}

pub fn print_ot(t: &OtTerm) -> String {
    let mut out = String::new();
    print_ot_at(t, LVL_CHOICE, &mut out);
    out
}

impl fmt::Display for ItTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_it(self))
    }
}

impl fmt::Display for OtTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_ot(self))
    }
}

/// Uniform parse/print access used by the transition-system exporters.
pub trait TermSyntax: Sized + Clone + Ord + std::hash::Hash + fmt::Debug {
    const CALCULUS: Calculus;
    fn print_term(&self) -> String;
    fn parse_term(text: &str) -> Result<Self, ParseError>;
}

impl TermSyntax for ItTerm {
    const CALCULUS: Calculus = Calculus::It;
    fn print_term(&self) -> String {
        print_it(self)
    }
    fn parse_term(text: &str) -> Result<Self, ParseError> {
        parse_it(text)
    }
}

impl TermSyntax for OtTerm {
    const CALCULUS: Calculus = Calculus::Ot;
    fn print_term(&self) -> String {
        print_ot(self)
    }
    fn parse_term(text: &str) -> Result<Self, ParseError> {
        parse_ot(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::ActionName;

    fn vis(s: &str) -> ActionName {
        ActionName::visible(s).unwrap()
    }

    #[test]
    fn parses_decimal_rates_exactly() {
        let t = parse_it("<a,1.5>.nil + <b,2>.nil").unwrap();
        let expected = ItTerm::choice(
            ItTerm::prefix(vis("a"), Rate::new(3, 2).unwrap(), ItTerm::Nil),
            ItTerm::prefix(vis("b"), Rate::from_integer(2), ItTerm::Nil),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn parses_interleaving_choice_term() {
        // <a,l>.<b,m>.nil + <b,m>.<a,l>.nil with l=1, m=2
        let t = parse_it("<a,1>.<b,2>.nil + <b,2>.<a,1>.nil").unwrap();
        let expected = ItTerm::choice(
            ItTerm::prefix(
                vis("a"),
                Rate::from_integer(1),
                ItTerm::prefix(vis("b"), Rate::from_integer(2), ItTerm::Nil),
            ),
            ItTerm::prefix(
                vis("b"),
                Rate::from_integer(2),
                ItTerm::prefix(vis("a"), Rate::from_integer(1), ItTerm::Nil),
            ),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn tau_in_name_set_is_rejected() {
        let err = parse_it("nil / {tau}").unwrap_err();
        assert!(err.message.contains("visible"), "{}", err.message);
        let err = parse_it("nil[a->tau]").unwrap_err();
        assert!(err.message.contains("visible"), "{}", err.message);
    }

    #[test]
    fn parses_time_prefix() {
        let t = parse_ot("(1).a.nil").unwrap();
        let expected = OtTerm::delay(
            Rate::from_integer(1),
            OtTerm::act(vis("a"), OtTerm::Nil),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn parses_delay_interleaving_choice_term() {
        // (l).a.(m).b.nil + (m).b.(l).a.nil with l=1, m=2
        let t = parse_ot("(1).a.(2).b.nil + (2).b.(1).a.nil").unwrap();
        let expected = OtTerm::choice(
            OtTerm::delay(
                Rate::from_integer(1),
                OtTerm::act(
                    vis("a"),
                    OtTerm::delay(Rate::from_integer(2), OtTerm::act(vis("b"), OtTerm::Nil)),
                ),
            ),
            OtTerm::delay(
                Rate::from_integer(2),
                OtTerm::act(
                    vis("b"),
                    OtTerm::delay(Rate::from_integer(1), OtTerm::act(vis("a"), OtTerm::Nil)),
                ),
            ),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn zero_rate_is_rejected() {
        let err = parse_ot("(0).a.nil").unwrap_err();
        assert!(err.message.contains("positive"));
        let err = parse_it("<a,0>.nil").unwrap_err();
        assert!(err.message.contains("positive"));
        let err = parse_it("<a,0.0>.nil").unwrap_err();
        assert!(err.message.contains("positive"));
    }

    #[test]
    fn print_basics() {
        assert_eq!(print_it(&ItTerm::Nil), "nil");
        let t = ItTerm::prefix(ActionName::Tau, Rate::from_integer(1), ItTerm::Nil);
        assert_eq!(print_it(&t), "<tau,1>.nil");
    }

    #[test]
    fn precedence_prefix_tighter_than_postfix() {
        // `/` applies to the whole prefixed term.
        let t = parse_it("<a,1>.nil/{a}").unwrap();
        assert!(matches!(t, ItTerm::Hide(..)));
        // Parentheses push the hiding under the prefix.
        let u = parse_it("<a,1>.(nil/{a})").unwrap();
        assert!(matches!(u, ItTerm::Prefix(..)));
        assert_eq!(parse_it(&print_it(&t)).unwrap(), t);
        assert_eq!(parse_it(&print_it(&u)).unwrap(), u);
    }

    #[test]
    fn operators_associate_left() {
        let t = parse_it("nil + nil + nil").unwrap();
        assert_eq!(t, parse_it("(nil + nil) + nil").unwrap());
        let t = parse_it("nil ||{} nil ||{} nil").unwrap();
        assert_eq!(t, parse_it("(nil ||{} nil) ||{} nil").unwrap());
        // `+` binds looser than `||`.
        let t = parse_it("nil + nil ||{} nil").unwrap();
        assert_eq!(
            t,
            ItTerm::choice(
                ItTerm::Nil,
                ItTerm::par(ItTerm::Nil, ItTerm::Nil, BTreeSet::new())
            )
        );
    }

    #[test]
    fn rec_body_binds_like_a_prefix() {
        // rec X.<a,1>.X + nil is a choice whose left arm is the recursion.
        let t = parse_it("rec X.<a,1>.X + nil").unwrap();
        assert!(matches!(t, ItTerm::Choice(..)));
        let u = parse_it("rec X.(<a,1>.X + nil)").unwrap();
        assert!(matches!(u, ItTerm::Rec(..)));
        assert_eq!(parse_it(&print_it(&u)).unwrap(), u);
    }

    #[test]
    fn comments_and_whitespace_are_skipped() {
        let t = parse_it("# heading\n  <a,1># trailing\n  .nil\n").unwrap();
        assert_eq!(print_it(&t), "<a,1>.nil");
    }

    #[test]
    fn errors_carry_spans_inside_input() {
        let src = "<a,1>.nil + ";
        let err = parse_it(src).unwrap_err();
        assert!(err.span.start <= src.len() && err.span.end <= src.len());
        assert!(!err.expected.is_empty());
    }

    #[test]
    fn span_tree_locates_subterms() {
        let src = "<a,1>.nil ||{} <b,2>.nil";
        let (t, spans) = parse_it_spanned(src).unwrap();
        assert!(matches!(t, ItTerm::Par(..)));
        let right = spans.lookup(&vec![1]).unwrap();
        assert_eq!(&src[right.span.start..right.span.end], "<b,2>.nil");
    }

    #[test]
    fn fraction_rates_round_trip() {
        let t = parse_ot("(1/2).tau.nil").unwrap();
        assert_eq!(print_ot(&t), "(1/2).tau.nil");
        assert_eq!(parse_ot(&print_ot(&t)).unwrap(), t);
    }

    #[test]
    fn mp_image_shape_round_trips() {
        let src = "(1).rec Z.(tau.Z + a.nil)";
        let t = parse_ot(src).unwrap();
        assert_eq!(print_ot(&t), src);
    }
}
