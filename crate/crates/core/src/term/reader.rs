//! Text to term reader: a small tokenizer plus an operator-precedence
//! parser over a fixed operator table.

use std::collections::HashMap;

use thiserror::Error;

use super::{atoms, Sym, Term, Var, MAX_ARITY};

/// Nesting bound for parenthesised, list and argument structure.
const MAX_NESTING: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at character {offset}: {reason}")]
pub struct SyntaxError {
    /// 1-based character offset into the input.
    pub offset: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum OpType {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
}

pub(crate) fn infix_op(name: &str) -> Option<(u32, OpType)> {
    use OpType::*;
    Some(match name {
        ":-" => (1200, Xfx),
        ";" => (1100, Xfy),
        "," => (1000, Xfy),
        "=" | "\\=" | "==" | "\\==" | "<" | ">" | "=<" | ">=" | "=:=" | "=\\=" | "is" => (700, Xfx),
        "+" | "-" => (500, Yfx),
        "*" | "/" | "//" | "mod" => (400, Yfx),
        "**" => (200, Xfx),
        ":" => (200, Xfy),
        _ => return None,
    })
}

pub(crate) fn prefix_op(name: &str) -> Option<(u32, OpType)> {
    use OpType::*;
    Some(match name {
        ":-" => (1200, Fx),
        "table" => (1150, Fx),
        "\\+" => (900, Fy),
        "-" => (200, Fy),
        _ => return None,
    })
}

pub(crate) fn is_symbol_char(c: char) -> bool {
    matches!(
        c,
        '+' | '-' | '*' | '/' | '\\' | '^' | '<' | '>' | '=' | '~' | ':' | '.' | '?' | '@' | '#' | '&' | '$'
    )
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    /// Unquoted atom; may be an operator.
    Name(String),
    /// Quoted atom or double-quoted text; never an operator.
    Quoted(String),
    Var(String),
    Int(String),
    Float(String),
    /// `(` directly after a name, opening an argument list.
    OpenCall,
    Open,
    Close,
    OpenList,
    CloseList,
    OpenCurly,
    CloseCurly,
    Comma,
    Bar,
    End,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    /// 0-based char index.
    start: usize,
    layout_before: bool,
}

struct Lexer<'a> {
    chars: &'a [char],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, at: usize, reason: impl Into<String>) -> SyntaxError {
        SyntaxError {
            offset: at + 1,
            reason: reason.into(),
        }
    }

    fn peek_char(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    /// Skips whitespace and comments; reports whether anything was skipped.
    fn skip_layout(&mut self) -> Result<bool, SyntaxError> {
        let start = self.pos;
        loop {
            match self.peek_char(0) {
                Some(c) if c.is_whitespace() => self.pos += 1,
                Some('%') => {
                    while let Some(c) = self.peek_char(0) {
                        if c == '\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                Some('/') if self.peek_char(1) == Some('*') => {
                    let open = self.pos;
                    self.pos += 2;
                    loop {
                        match self.peek_char(0) {
                            None => return Err(self.err(open, "unterminated block comment")),
                            Some('*') if self.peek_char(1) == Some('/') => {
                                self.pos += 2;
                                break;
                            }
                            Some(_) => self.pos += 1,
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(self.pos > start)
    }

    fn next(&mut self, prev_was_name: bool) -> Result<Token, SyntaxError> {
        let layout_before = self.skip_layout()?;
        let start = self.pos;
        let Some(c) = self.peek_char(0) else {
            return Ok(Token {
                tok: Tok::Eof,
                start,
                layout_before,
            });
        };
        let tok = match c {
            '(' => {
                self.pos += 1;
                if prev_was_name && !layout_before {
                    Tok::OpenCall
                } else {
                    Tok::Open
                }
            }
            ')' => {
                self.pos += 1;
                Tok::Close
            }
            '[' => {
                self.pos += 1;
                Tok::OpenList
            }
            ']' => {
                self.pos += 1;
                Tok::CloseList
            }
            '{' => {
                self.pos += 1;
                Tok::OpenCurly
            }
            '}' => {
                self.pos += 1;
                Tok::CloseCurly
            }
            ',' => {
                self.pos += 1;
                Tok::Comma
            }
            '|' => {
                self.pos += 1;
                Tok::Bar
            }
            '!' | ';' => {
                self.pos += 1;
                Tok::Name(c.to_string())
            }
            '\'' => Tok::Quoted(self.quoted('\'')?),
            '"' => Tok::Quoted(self.quoted('"')?),
            c if c.is_ascii_digit() => self.number()?,
            c if c == '_' || c.is_uppercase() => Tok::Var(self.word()),
            c if c.is_alphabetic() => Tok::Name(self.word()),
            '.' if self.peek_char(1).map_or(true, |n| n.is_whitespace() || n == '%') => {
                self.pos += 1;
                Tok::End
            }
            c if is_symbol_char(c) => {
                let mut s = String::new();
                while let Some(c) = self.peek_char(0) {
                    if !is_symbol_char(c) {
                        break;
                    }
                    s.push(c);
                    self.pos += 1;
                }
                Tok::Name(s)
            }
            other => return Err(self.err(start, format!("unexpected character {other:?}"))),
        };
        Ok(Token {
            tok,
            start,
            layout_before,
        })
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek_char(0) {
            if c.is_alphanumeric() || c == '_' {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }

    fn digits(&mut self, s: &mut String) -> usize {
        let mut n = 0;
        while let Some(c) = self.peek_char(0) {
            if c.is_ascii_digit() {
                s.push(c);
                self.pos += 1;
                n += 1;
            } else {
                break;
            }
        }
        n
    }

    fn number(&mut self) -> Result<Tok, SyntaxError> {
        let mut s = String::new();
        self.digits(&mut s);
        let mut is_float = false;
        if self.peek_char(0) == Some('.') && self.peek_char(1).is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            s.push('.');
            self.pos += 1;
            self.digits(&mut s);
        }
        if matches!(self.peek_char(0), Some('e' | 'E')) {
            let save = self.pos;
            let mut exp = String::from("e");
            self.pos += 1;
            if let Some(sign @ ('+' | '-')) = self.peek_char(0) {
                exp.push(sign);
                self.pos += 1;
            }
            if self.digits(&mut exp) > 0 {
                is_float = true;
                s.push_str(&exp);
            } else {
                self.pos = save;
            }
        }
        if is_float {
            let rest: String = self.chars[self.pos..].iter().take(3).collect();
            if rest == "Inf" || rest == "NaN" {
                self.pos += 3;
                s.push_str(&rest);
            }
            Ok(Tok::Float(s))
        } else {
            Ok(Tok::Int(s))
        }
    }

    fn quoted(&mut self, q: char) -> Result<String, SyntaxError> {
        let open = self.pos;
        self.pos += 1;
        let mut s = String::new();
        loop {
            let Some(c) = self.peek_char(0) else {
                return Err(self.err(open, "unterminated quoted atom"));
            };
            self.pos += 1;
            if c == q {
                if self.peek_char(0) == Some(q) {
                    s.push(q);
                    self.pos += 1;
                    continue;
                }
                return Ok(s);
            }
            if c == '\\' {
                let esc_at = self.pos - 1;
                let Some(e) = self.peek_char(0) else {
                    return Err(self.err(open, "unterminated quoted atom"));
                };
                self.pos += 1;
                match e {
                    'n' => s.push('\n'),
                    't' => s.push('\t'),
                    '\\' => s.push('\\'),
                    '\'' => s.push('\''),
                    '"' => s.push('"'),
                    other => return Err(self.err(esc_at, format!("unsupported escape \\{other}"))),
                }
                continue;
            }
            s.push(c);
        }
    }
}

fn float_value(text: &str, negative: bool) -> Option<f64> {
    let v = if let Some(stripped) = text.strip_suffix("Inf") {
        stripped.parse::<f64>().ok()?;
        f64::INFINITY
    } else if let Some(stripped) = text.strip_suffix("NaN") {
        stripped.parse::<f64>().ok()?;
        f64::NAN
    } else {
        text.parse::<f64>().ok()?
    };
    Some(if negative { -v } else { v })
}

fn int_value(text: &str, negative: bool) -> Option<i64> {
    let wide: i128 = text.parse().ok()?;
    let v = if negative { -wide } else { wide };
    i64::try_from(v).ok()
}

/// A parsed term together with its named variables in order of appearance.
#[derive(Debug, Clone)]
pub struct ParsedTerm {
    pub term: Term,
    pub var_names: Vec<(String, Var)>,
    /// Number of distinct variables, including anonymous ones.
    pub var_count: u32,
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Token,
    prev_tok_name: bool,
    vars: HashMap<String, Var>,
    var_names: Vec<(String, Var)>,
    next_var: u32,
    nesting: usize,
}

impl<'a> Parser<'a> {
    fn new(chars: &'a [char]) -> Result<Parser<'a>, SyntaxError> {
        let mut lexer = Lexer { chars, pos: 0 };
        let tok = lexer.next(false)?;
        let prev_tok_name = matches!(tok.tok, Tok::Name(_) | Tok::Quoted(_));
        Ok(Parser {
            lexer,
            tok,
            prev_tok_name,
            vars: HashMap::new(),
            var_names: Vec::new(),
            next_var: 0,
            nesting: 0,
        })
    }

    fn reset_vars(&mut self) {
        self.vars.clear();
        self.var_names.clear();
        self.next_var = 0;
    }

    fn advance(&mut self) -> Result<Token, SyntaxError> {
        let next = self.lexer.next(self.prev_tok_name)?;
        self.prev_tok_name = matches!(next.tok, Tok::Name(_) | Tok::Quoted(_) | Tok::CloseList);
        Ok(std::mem::replace(&mut self.tok, next))
    }

    fn err_here(&self, reason: impl Into<String>) -> SyntaxError {
        SyntaxError {
            offset: self.tok.start + 1,
            reason: reason.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.tok.tok == want {
            self.advance()?;
            Ok(())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    fn var(&mut self, name: String) -> Term {
        if name == "_" {
            let v = Var::new(self.next_var);
            self.next_var += 1;
            return Term::Var(v);
        }
        if let Some(v) = self.vars.get(&name) {
            return Term::Var(*v);
        }
        let v = Var::named(self.next_var, Sym::intern(&name));
        self.next_var += 1;
        self.vars.insert(name.clone(), v);
        self.var_names.push((name, v));
        Term::Var(v)
    }

    /// Whether the current token can begin an operand.
    fn starts_term(&self) -> bool {
        match &self.tok.tok {
            Tok::Name(n) => !(infix_op(n).is_some() && prefix_op(n).is_none()),
            Tok::Quoted(_)
            | Tok::Var(_)
            | Tok::Int(_)
            | Tok::Float(_)
            | Tok::Open
            | Tok::OpenCall
            | Tok::OpenList
            | Tok::OpenCurly => true,
            _ => false,
        }
    }

    fn parse(&mut self, max_prec: u32) -> Result<Term, SyntaxError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(self.err_here("term nesting too deep"));
        }
        let result = self.parse_inner(max_prec);
        self.nesting -= 1;
        result
    }

    fn parse_inner(&mut self, max_prec: u32) -> Result<Term, SyntaxError> {
        let (mut left, mut left_prec) = self.primary(max_prec)?;
        loop {
            let op = match &self.tok.tok {
                Tok::Name(n) => infix_op(n).map(|o| (n.clone(), o)),
                Tok::Comma => Some((",".to_string(), infix_op(",").unwrap())),
                _ => None,
            };
            let Some((name, (p, ty))) = op else { break };
            if p > max_prec {
                break;
            }
            let (lmax, rmax) = match ty {
                OpType::Xfx => (p - 1, p - 1),
                OpType::Xfy => (p - 1, p),
                OpType::Yfx => (p, p - 1),
                _ => unreachable!(),
            };
            if left_prec > lmax {
                break;
            }
            self.advance()?;
            let right = self.parse(rmax)?;
            left = Term::compound(Sym::intern(&name), vec![left, right]);
            left_prec = p;
        }
        Ok(left)
    }

    fn args(&mut self) -> Result<Vec<Term>, SyntaxError> {
        let mut args = vec![self.parse(999)?];
        while self.tok.tok == Tok::Comma {
            self.advance()?;
            args.push(self.parse(999)?);
            if args.len() > MAX_ARITY {
                return Err(self.err_here("arity exceeds 65535"));
            }
        }
        self.expect(Tok::Close, "')' closing argument list")?;
        Ok(args)
    }

    fn primary(&mut self, max_prec: u32) -> Result<(Term, u32), SyntaxError> {
        let token = self.advance()?;
        let at = token.start;
        let err = |reason: &str| SyntaxError {
            offset: at + 1,
            reason: reason.to_string(),
        };
        match token.tok {
            Tok::Int(text) => {
                let v = int_value(&text, false).ok_or_else(|| err("integer overflow"))?;
                Ok((Term::Int(v), 0))
            }
            Tok::Float(text) => {
                let v = float_value(&text, false).ok_or_else(|| err("malformed float"))?;
                Ok((Term::Float(v), 0))
            }
            Tok::Var(name) => Ok((self.var(name), 0)),
            Tok::Quoted(name) => {
                if self.tok.tok == Tok::OpenCall {
                    self.advance()?;
                    let args = self.args()?;
                    return Ok((Term::compound(Sym::intern(&name), args), 0));
                }
                Ok((Term::Atom(Sym::intern(&name)), 0))
            }
            Tok::Name(name) => {
                if self.tok.tok == Tok::OpenCall {
                    self.advance()?;
                    let args = self.args()?;
                    return Ok((Term::compound(Sym::intern(&name), args), 0));
                }
                if name == "-" && !self.tok.layout_before {
                    match &self.tok.tok {
                        Tok::Int(text) => {
                            let v = int_value(text, true).ok_or_else(|| self.err_here("integer overflow"))?;
                            self.advance()?;
                            return Ok((Term::Int(v), 0));
                        }
                        Tok::Float(text) => {
                            let v = float_value(text, true).ok_or_else(|| self.err_here("malformed float"))?;
                            self.advance()?;
                            return Ok((Term::Float(v), 0));
                        }
                        _ => {}
                    }
                }
                if let Some((p, ty)) = prefix_op(&name) {
                    if self.starts_term() {
                        if p > max_prec {
                            return Err(err("operator priority clash"));
                        }
                        let arg_max = if ty == OpType::Fy { p } else { p - 1 };
                        let arg = self.parse(arg_max)?;
                        return Ok((Term::compound(Sym::intern(&name), vec![arg]), p));
                    }
                }
                Ok((Term::Atom(Sym::intern(&name)), 0))
            }
            Tok::Open | Tok::OpenCall => {
                let t = self.parse(1200)?;
                self.expect(Tok::Close, "')'")?;
                Ok((t, 0))
            }
            Tok::OpenList => {
                if self.tok.tok == Tok::CloseList {
                    self.advance()?;
                    if self.tok.tok == Tok::OpenCall {
                        self.advance()?;
                        let args = self.args()?;
                        return Ok((Term::compound(atoms::nil(), args), 0));
                    }
                    return Ok((Term::nil(), 0));
                }
                let mut items = vec![self.parse(999)?];
                while self.tok.tok == Tok::Comma {
                    self.advance()?;
                    items.push(self.parse(999)?);
                }
                let tail = if self.tok.tok == Tok::Bar {
                    self.advance()?;
                    self.parse(999)?
                } else {
                    Term::nil()
                };
                self.expect(Tok::CloseList, "']' closing list")?;
                Ok((Term::list_with_tail(items, tail), 0))
            }
            Tok::OpenCurly => Err(err("curly-bracket terms are not supported")),
            Tok::Eof => Err(err("unexpected end of input")),
            Tok::End => Err(err("unexpected end of clause")),
            _ => Err(err("unexpected token")),
        }
    }

    fn finish_term(&mut self, term: Term) -> ParsedTerm {
        ParsedTerm {
            term,
            var_names: std::mem::take(&mut self.var_names),
            var_count: self.next_var,
        }
    }
}

/// Reads one term. A single terminating `.` is permitted; any other
/// trailing input is an error.
pub fn parse_term(input: &str) -> Result<Term, SyntaxError> {
    parse_term_with_vars(input).map(|p| p.term)
}

pub fn parse_term_with_vars(input: &str) -> Result<ParsedTerm, SyntaxError> {
    let chars: Vec<char> = input.chars().collect();
    let mut p = Parser::new(&chars)?;
    let term = p.parse(1200)?;
    if p.tok.tok == Tok::End {
        p.advance()?;
    }
    if p.tok.tok != Tok::Eof {
        return Err(p.err_here("unexpected trailing input"));
    }
    Ok(p.finish_term(term))
}

/// Reads a sequence of `.`-terminated clauses. On failure returns the
/// 0-based index of the offending clause with the error.
pub fn read_clauses(input: &str) -> Result<Vec<ParsedTerm>, (usize, SyntaxError)> {
    let chars: Vec<char> = input.chars().collect();
    let mut p = Parser::new(&chars).map_err(|e| (0, e))?;
    let mut out = Vec::new();
    while p.tok.tok != Tok::Eof {
        let index = out.len();
        p.reset_vars();
        let term = p.parse(1200).map_err(|e| (index, e))?;
        if p.tok.tok != Tok::End {
            return Err((index, p.err_here("expected '.' ending the clause")));
        }
        p.advance().map_err(|e| (index, e))?;
        out.push(p.finish_term(term));
    }
    Ok(out)
}
