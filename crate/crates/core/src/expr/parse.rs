//! Textual form of programs.
//!
//! ```text
//! node    := COEFF "*" OP "(" ARG ")" "^" EXP
//! program := node ("+" node)*
//! ARG     := "{" operand ("," operand)* "}" | "Π[" node ("," node)* "]" | program
//! ```
//!
//! Serialization always emits the full node form with nodes in canonical
//! order. The parser also accepts infix sugar such as `x^3 + x^2 + x`,
//! `2*sin(x)*cos(y) - 1` or `sqrt(x1)`; `x`, `y`, `z` name `x1`, `x2`, `x3`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{Arg, ExponentRange, Node, Op, OperandSet, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_program(self, f)
    }
}

fn write_program(p: &Program, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (i, n) in p.nodes().iter().enumerate() {
        if i > 0 {
            f.write_str(" + ")?;
        }
        write_node(n, f)?;
    }
    Ok(())
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{}*{}(", n.coeff, n.op)?;
    match &n.arg {
        Arg::Operands(o) => write_operands(o, f)?,
        Arg::Program(p) if n.op == Op::Prod => {
            f.write_str("Π[")?;
            for (i, c) in p.nodes().iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_node(c, f)?;
            }
            f.write_str("]")?;
        }
        Arg::Program(p) => write_program(p, f)?,
    }
    write!(f, ")^{}", n.exponent)
}

fn write_operands(o: &OperandSet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str("{")?;
    let mut first = true;
    for v in o.vars() {
        if !first {
            f.write_str(", ")?;
        }
        first = false;
        write!(f, "x{}", v + 1)?;
    }
    for c in o.consts() {
        if !first {
            f.write_str(", ")?;
        }
        first = false;
        write!(f, "{c}")?;
    }
    f.write_str("}")
}

impl FromStr for Program {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Program::parse(s)
    }
}

impl Program {
    /// Parses without an exponent bound.
    pub fn parse(text: &str) -> Result<Program, ParseError> {
        Program::parse_in(text, ExponentRange::unbounded())
    }

    /// Parses, rejecting any exponent outside `range`.
    pub fn parse_in(text: &str, range: ExponentRange) -> Result<Program, ParseError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0, range, end: text.len() };
        let nodes = parser.program()?;
        if let Some((tok, at)) = parser.tokens.get(parser.pos) {
            return Err(ParseError { offset: *at, message: format!("unexpected {tok}") });
        }
        Ok(Program::from_nodes(nodes))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    ProdOpen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
            Tok::ProdOpen => f.write_str("'Π['"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v = lit
                .parse::<f64>()
                .map_err(|_| ParseError { offset: start, message: format!("malformed number '{lit}'") })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            match word {
                "NaN" => out.push((Tok::Num(f64::NAN), start)),
                "inf" => out.push((Tok::Num(f64::INFINITY), start)),
                _ => out.push((Tok::Ident(word.to_string()), start)),
            }
        } else if text[i..].starts_with('Π') {
            let start = i;
            i += 'Π'.len_utf8();
            if bytes.get(i) != Some(&b'[') {
                return Err(ParseError { offset: start, message: "expected '[' after 'Π'".into() });
            }
            i += 1;
            out.push((Tok::ProdOpen, start));
        } else if b"+-*/^(){}[],".contains(&c) {
            out.push((Tok::Sym(c as char), i));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ParseError { offset: i, message: format!("unexpected character '{ch}'") });
        }
    }
    Ok(out)
}

fn variable_index(name: &str) -> Option<u32> {
    match name {
        "x" => Some(0),
        "y" => Some(1),
        "z" => Some(2),
        _ => {
            let digits = name.strip_prefix('x')?;
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let i: u32 = digits.parse().ok()?;
            i.checked_sub(1)
        }
    }
}

enum Factor {
    Num(f64),
    Atom(Node),
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    range: ExponentRange,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), message: message.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(t) => self.error(format!("expected '{c}', found {t}")),
                None => self.error(format!("expected '{c}', found end of input")),
            }
        }
    }

    fn program(&mut self) -> Result<Vec<Node>, ParseError> {
        let mut nodes = Vec::new();
        let mut sign = if self.eat('-') {
            -1.0
        } else {
            self.eat('+');
            1.0
        };
        loop {
            nodes.push(self.term(sign)?);
            if self.eat('+') {
                sign = if self.eat('-') { -1.0 } else { 1.0 };
            } else if self.eat('-') {
                sign = -1.0;
            } else {
                break;
            }
        }
        Ok(nodes)
    }

    fn term(&mut self, sign: f64) -> Result<Node, ParseError> {
        let mut coeff = sign;
        let mut atoms: Vec<Node> = Vec::new();
        let mut divide = false;
        loop {
            let at = self.offset();
            match self.factor()? {
                Factor::Num(v) if divide => coeff /= v,
                Factor::Num(v) => coeff *= v,
                Factor::Atom(mut n) => {
                    if divide {
                        n.coeff = 1.0 / n.coeff;
                        n.exponent = self
                            .range
                            .check(-(n.exponent as i64))
                            .map_err(|e| ParseError { offset: at, message: e.to_string() })?;
                    }
                    atoms.push(n);
                }
            }
            if self.eat('*') {
                divide = false;
            } else if self.eat('/') {
                divide = true;
            } else {
                break;
            }
        }
        Ok(match atoms.len() {
            0 => Node::constant(coeff),
            1 => {
                let mut n = atoms.pop().expect("one atom");
                n.coeff *= coeff;
                n
            }
            _ => Node::new(coeff, Op::Prod, Arg::Program(Program::from_nodes(atoms)), 1),
        })
    }

    fn factor(&mut self) -> Result<Factor, ParseError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.offset();
        let negative = self.eat('-');
        let magnitude = match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() < 1e9 => *v as i64,
            _ => return self.error("exponent must be an integer"),
        };
        self.pos += 1;
        let exponent = if negative { -magnitude } else { magnitude };
        let exponent = self.range.check(exponent).map_err(|e| ParseError { offset: at, message: e.to_string() })?;
        Ok(match base {
            Factor::Num(v) => Factor::Num(v.powi(exponent)),
            Factor::Atom(mut n) => {
                n.exponent = exponent;
                Factor::Atom(n)
            }
        })
    }

    fn primary(&mut self) -> Result<Factor, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.error("unexpected end of input");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Factor::Num(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let mut nodes = self.program()?;
                self.expect(')')?;
                let atom = if nodes.len() == 1 && self.peek() != Some(&Tok::Sym('^')) {
                    nodes.pop().expect("one node")
                } else {
                    Node::new(1.0, Op::Sum, Arg::Program(Program::from_nodes(nodes)), 1)
                };
                Ok(Factor::Atom(atom))
            }
            Tok::Ident(name) => {
                if let Some(op) = Op::from_name(&name) {
                    self.pos += 1;
                    return self.call(op);
                }
                if let Some(index) = variable_index(&name) {
                    self.pos += 1;
                    return Ok(Factor::Atom(Node::monomial(1.0, index, 1)));
                }
                self.error(format!("unknown identifier '{name}'"))
            }
            other => self.error(format!("unexpected {other}")),
        }
    }

    fn call(&mut self, op: Op) -> Result<Factor, ParseError> {
        self.expect('(')?;
        let arg = match self.peek() {
            Some(Tok::Sym('{')) => {
                self.pos += 1;
                let o = self.operand_list('}')?;
                Arg::Operands(o)
            }
            Some(Tok::ProdOpen) => {
                self.pos += 1;
                let mut nodes = Vec::new();
                loop {
                    let mut group = self.program()?;
                    nodes.push(if group.len() == 1 {
                        group.pop().expect("one node")
                    } else {
                        Node::new(1.0, Op::Sum, Arg::Program(Program::from_nodes(group)), 1)
                    });
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect(']')?;
                Arg::Program(Program::from_nodes(nodes))
            }
            _ if self.bare_operands_ahead() => self.operand_list(')').map(Arg::Operands).inspect(|_| {
                // operand_list consumed the closing ')'; step back so the
                // shared expect below sees it
                self.pos -= 1;
            })?,
            _ => Arg::Program(Program::from_nodes(self.program()?)),
        };
        self.expect(')')?;
        Ok(Factor::Atom(Node::new(1.0, op, arg, 1)))
    }

    /// True when the tokens up to the matching ')' are only variables and
    /// numbers joined by '+', e.g. `sin(x + 1)`.
    fn bare_operands_ahead(&self) -> bool {
        let mut i = self.pos;
        let mut expect_operand = true;
        while let Some((tok, _)) = self.tokens.get(i) {
            match tok {
                Tok::Sym(')') => return !expect_operand,
                Tok::Sym('+') if !expect_operand => expect_operand = true,
                Tok::Sym('-') if !expect_operand => {
                    if !matches!(self.tokens.get(i + 1), Some((Tok::Num(_), _))) {
                        return false;
                    }
                    expect_operand = true;
                }
                Tok::Sym('-') if expect_operand && i == self.pos => {
                    if !matches!(self.tokens.get(i + 1), Some((Tok::Num(_), _))) {
                        return false;
                    }
                }
                Tok::Num(_) if expect_operand => expect_operand = false,
                Tok::Ident(name) if expect_operand && variable_index(name).is_some() => expect_operand = false,
                _ => return false,
            }
            i += 1;
        }
        false
    }

    /// Members separated by ',' (set literal) or '+' (sugar), up to `close`.
    fn operand_list(&mut self, close: char) -> Result<OperandSet, ParseError> {
        let mut o = OperandSet::default();
        loop {
            let negative = if self.eat('-') {
                true
            } else {
                self.eat('+');
                false
            };
            match self.peek().cloned() {
                Some(Tok::Num(v)) => {
                    self.pos += 1;
                    o.insert_const(if negative { -v } else { v });
                }
                Some(Tok::Ident(name)) if !negative => match variable_index(&name) {
                    Some(i) => {
                        self.pos += 1;
                        o.insert_var(i);
                    }
                    None => return self.error(format!("unknown operand '{name}'")),
                },
                _ => return self.error("expected a variable or a number"),
            }
            if self.eat(',') || self.eat('+') {
                continue;
            }
            if self.peek() == Some(&Tok::Sym('-')) {
                continue;
            }
            break;
        }
        self.expect(close)?;
        if o.is_empty() {
            return self.error("empty operand set");
        }
        Ok(o)
    }
}
