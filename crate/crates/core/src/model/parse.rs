//! Text format for Hamiltonian specifications.
//!
//! ```text
//! # comments run to end of line
//! local_dim = 2
//! range = 2
//! translation_invariant = true
//!
//! term zz {
//!   span = 2
//!   re = [[1, 0, 0, 0], [0, -1, 0, 0], [0, 0, -1, 0], [0, 0, 0, 1]]
//!   im = [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
//! }
//! ```
//!
//! `im` defaults to zero; non-translation-invariant terms carry `at = <site>`.
//! The full grammar ships in `docs/hamiltonian.schema`.

use faer::prelude::*;
use faer::c64;

use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::model::spec::{HamiltonianSpec, Term};

const MAX_TOKENS: usize = 1 << 20;
const MAX_MATRIX_DIM: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Bool(bool),
    Eq,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1 }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() {
            match self.src[self.pos] {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b'#' => {
                    while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let line = self.line;
        let c = self.src[self.pos];
        let tok = match c {
            b'=' => {
                self.pos += 1;
                Tok::Eq
            }
            b'{' => {
                self.pos += 1;
                Tok::LBrace
            }
            b'}' => {
                self.pos += 1;
                Tok::RBrace
            }
            b'[' => {
                self.pos += 1;
                Tok::LBracket
            }
            b']' => {
                self.pos += 1;
                Tok::RBracket
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'+' | b'-' | b'.' | b'0'..=b'9' => {
                let start = self.pos;
                self.pos += 1;
                while self.pos < self.src.len()
                    && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'e' | b'E' | b'+' | b'-')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos])
                    .map_err(|_| self.error("invalid utf-8 in number"))?;
                let v: f64 =
                    text.parse().map_err(|_| self.error(format!("bad number '{text}'")))?;
                if !v.is_finite() {
                    return Err(self.error(format!("non-finite number '{text}'")));
                }
                Tok::Number(v)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                match word.as_str() {
                    "true" => Tok::Bool(true),
                    "false" => Tok::Bool(false),
                    _ => Tok::Ident(word),
                }
            }
            other => return Err(self.error(format!("unexpected byte 0x{other:02x}"))),
        };
        Ok(Some((tok, line)))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|(_, l)| *l)
            .unwrap_or(0)
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line(), msg: msg.into() }
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self
            .toks
            .get(self.pos)
            .map(|(t, _)| t.clone())
            .ok_or_else(|| self.error("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let got = self.next()?;
        if got == want {
            Ok(())
        } else {
            Err(self.error(format!("expected {want:?}, found {got:?}")))
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.next()? {
            Tok::Number(v) => Ok(v),
            other => Err(self.error(format!("expected number, found {other:?}"))),
        }
    }

    /// `[[a, b, ...], [c, d, ...], ...]`
    fn matrix(&mut self) -> Result<Vec<Vec<f64>>> {
        self.expect(Tok::LBracket)?;
        let mut rows = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::RBracket) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::LBracket) => {
                    self.pos += 1;
                    let mut row = Vec::new();
                    loop {
                        match self.peek() {
                            Some(Tok::RBracket) => {
                                self.pos += 1;
                                break;
                            }
                            Some(Tok::Comma) => {
                                self.pos += 1;
                            }
                            _ => row.push(self.number()?),
                        }
                        if rows.len() * row.len() > MAX_MATRIX_DIM * MAX_MATRIX_DIM {
                            return Err(self.error("matrix literal too large"));
                        }
                    }
                    rows.push(row);
                }
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                other => return Err(self.error(format!("expected matrix row, found {other:?}"))),
            }
            if rows.len() > MAX_MATRIX_DIM {
                return Err(self.error("matrix literal too large"));
            }
        }
        Ok(rows)
    }
}

#[derive(Default)]
struct RawTerm {
    label: String,
    span: Option<usize>,
    at: Option<usize>,
    re: Option<Vec<Vec<f64>>>,
    im: Option<Vec<Vec<f64>>>,
    line: usize,
}

/// Parses a `.ham` document into a validated [`HamiltonianSpec`].
pub fn parse_ham(src: &str) -> Result<HamiltonianSpec> {
    let mut lexer = Lexer::new(src);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
        if toks.len() > MAX_TOKENS {
            return Err(Error::Parse { line: lexer.line, msg: "input too large".into() });
        }
    }
    let mut p = Parser { toks, pos: 0 };

    let mut local_dim: Option<usize> = None;
    let mut range: Option<usize> = None;
    let mut ti: bool = true;
    let mut raw_terms: Vec<RawTerm> = Vec::new();

    while let Some(tok) = p.peek() {
        match tok.clone() {
            Tok::Ident(key) if key == "term" => {
                p.pos += 1;
                let label = match p.next()? {
                    Tok::Ident(name) => name,
                    other => return Err(p.error(format!("expected term name, found {other:?}"))),
                };
                let mut raw = RawTerm { label, line: p.line(), ..Default::default() };
                p.expect(Tok::LBrace)?;
                loop {
                    match p.next()? {
                        Tok::RBrace => break,
                        Tok::Ident(field) => {
                            p.expect(Tok::Eq)?;
                            match field.as_str() {
                                "span" => raw.span = Some(usize_field(&mut p)?),
                                "at" => raw.at = Some(usize_field(&mut p)?),
                                "re" => raw.re = Some(p.matrix()?),
                                "im" => raw.im = Some(p.matrix()?),
                                other => {
                                    return Err(p.error(format!("unknown term field '{other}'")))
                                }
                            }
                        }
                        other => {
                            return Err(p.error(format!("expected term field, found {other:?}")))
                        }
                    }
                }
                raw_terms.push(raw);
            }
            Tok::Ident(key) => {
                p.pos += 1;
                p.expect(Tok::Eq)?;
                match key.as_str() {
                    "local_dim" => local_dim = Some(usize_field(&mut p)?),
                    "range" => range = Some(usize_field(&mut p)?),
                    "translation_invariant" => {
                        ti = match p.next()? {
                            Tok::Bool(b) => b,
                            other => {
                                return Err(p.error(format!("expected bool, found {other:?}")))
                            }
                        }
                    }
                    other => return Err(p.error(format!("unknown key '{other}'"))),
                }
            }
            other => return Err(p.error(format!("expected key or term, found {other:?}"))),
        }
    }

    let local_dim = local_dim.ok_or_else(|| p.error("missing local_dim"))?;
    let range = range.ok_or_else(|| p.error("missing range"))?;
    if !(2..=16).contains(&local_dim) {
        return Err(Error::Parse { line: 0, msg: format!("local_dim {local_dim} out of range") });
    }

    let mut terms = Vec::new();
    for raw in raw_terms {
        let perr = |msg: String| Error::Parse { line: raw.line, msg };
        let span = raw.span.ok_or_else(|| perr(format!("term '{}' missing span", raw.label)))?;
        let dim = local_dim
            .checked_pow(span.min(64) as u32)
            .filter(|&d| d <= MAX_MATRIX_DIM)
            .ok_or_else(|| perr(format!("term '{}' span {span} too large", raw.label)))?;
        let re = raw.re.ok_or_else(|| perr(format!("term '{}' missing re", raw.label)))?;
        let im = raw.im.unwrap_or_else(|| vec![vec![0.0; dim]; dim]);
        for (name, m) in [("re", &re), ("im", &im)] {
            if m.len() != dim || m.iter().any(|row| row.len() != dim) {
                return Err(perr(format!(
                    "term '{}' field {name} is not a {dim}x{dim} matrix",
                    raw.label
                )));
            }
        }
        let matrix = Op::new(Mat::from_fn(dim, dim, |i, j| c64::new(re[i][j], im[i][j])));
        terms.push(Term { label: raw.label, span, matrix, at: raw.at });
    }

    HamiltonianSpec::new(local_dim, range, ti, terms)
}

fn usize_field(p: &mut Parser) -> Result<usize> {
    let v = p.number()?;
    if v < 0.0 || v.fract() != 0.0 || v > 1e9 {
        return Err(p.error(format!("expected small non-negative integer, found {v}")));
    }
    Ok(v as usize)
}

/// Writes a spec back out in the `.ham` format; floats keep 17 significant
/// digits so the round trip is exact.
pub fn serialize_ham(spec: &HamiltonianSpec) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "local_dim = {}", spec.local_dim);
    let _ = writeln!(out, "range = {}", spec.range);
    let _ = writeln!(out, "translation_invariant = {}", spec.translation_invariant);
    for t in &spec.terms {
        let _ = writeln!(out);
        let _ = writeln!(out, "term {} {{", t.label);
        let _ = writeln!(out, "  span = {}", t.span);
        if let Some(at) = t.at {
            let _ = writeln!(out, "  at = {at}");
        }
        let d = t.matrix.dim();
        for (field, pick) in [("re", 0), ("im", 1)] {
            let all_zero = (0..d).all(|i| {
                (0..d).all(|j| {
                    let z = t.matrix.at(i, j);
                    (if pick == 0 { z.re } else { z.im }) == 0.0
                })
            });
            if field == "im" && all_zero {
                continue;
            }
            let _ = write!(out, "  {field} = [");
            for i in 0..d {
                let _ = write!(out, "[");
                for j in 0..d {
                    let z = t.matrix.at(i, j);
                    let v = if pick == 0 { z.re } else { z.im };
                    let _ = write!(out, "{v:.17e}");
                    if j + 1 < d {
                        let _ = write!(out, ", ");
                    }
                }
                let _ = write!(out, "]");
                if i + 1 < d {
                    let _ = write!(out, ", ");
                }
            }
            let _ = writeln!(out, "]");
        }
        let _ = writeln!(out, "}}");
    }
    out
}
