//! Plain-text equation language.
//!
//! ```text
//! moment t = gamma(1)
//! moment x = gamma(1)
//! init 0 = geom
//! rhs = 0
//! Dt u - Dx^2 u - 2 * u * Dx u = 0
//! ```
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! doc      := header* equation
//! header   := "moment" ident "=" "gamma" "(" rational ")"
//!           | "init" int "=" ( "geom" | "em" | poly )
//!           | "rhs" "=" ( "0" | "gevrey" "(" rational "," rational "," rational ")" )
//! equation := dterm { ("+" | "-") pterm } "=" ( "0" | "f" )
//! dterm    := "Dt" ["^" int] "u"
//! pterm    := { monomial "*" } factor { "*" (factor | monomial) }
//! factor   := dop* "u" ["^" int]
//! dop      := "Dt" ["^" int] | "Dx" [axis] ["^" int]
//! monomial := rational | "t" ["^" int]
//! ```
//!
//! Precedence is unary derivative ops, then `^`, then `*`, then `+`/`-`.
//! Signs follow the moved-to-the-right-hand-side convention: a pterm
//! subtracted on the left contributes with coefficient +1 to the sum of
//! terms, an added one with -1. `t` powers fold into the term's `v`;
//! rational literals fold into the coefficient. Duplicate factors like
//! `u * u` merge into powers. `Dx` without an axis number and the variable
//! `x` refer to axis 1 and are only allowed when no higher axis appears.
//! The number of axes is the highest axis mentioned anywhere (default 1);
//! undeclared moment sequences default to `gamma(1)`.
//!
//! Errors carry `line:column` of the offending token; semantic errors
//! (factor `Dt` power at or above kappa, missing or out-of-range initial
//! data, unknown coefficient names, conflicting `rhs` declarations) do too.

use std::collections::BTreeMap;

use rug::Rational;
use thiserror::Error;

use crate::equation::{
    CoeffSpec, EquationSpec, InitialData, Inhomogeneity, RatPoly, Term, TermFactor,
};
use crate::moments::MomentSequence;
use crate::series::MultiIndex;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("{line}:{col}: {message}")]
    Parse { line: u32, col: u32, message: String },
    #[error("equation not representable in the text format: {reason}")]
    Unrepresentable { reason: String },
}

fn perr(line: u32, col: u32, message: impl Into<String>) -> DslError {
    DslError::Parse { line, col, message: message.into() }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokKind {
    Ident(String),
    /// Digit run, possibly with a decimal point.
    Num(String),
    Plus,
    Minus,
    Star,
    Caret,
    Eq,
    LParen,
    RParen,
    Comma,
    Slash,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Tok {
    kind: TokKind,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Tok>, DslError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().expect("peeked");
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            advance(&mut chars);
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while chars.peek().is_some_and(|&c| c.is_ascii_alphanumeric() || c == '_') {
                s.push(advance(&mut chars));
            }
            out.push(Tok { kind: TokKind::Ident(s), line: tline, col: tcol });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            let mut seen_dot = false;
            while chars.peek().is_some_and(|&c| {
                c.is_ascii_digit() || (c == '.' && !seen_dot)
            }) {
                let c = advance(&mut chars);
                seen_dot |= c == '.';
                s.push(c);
            }
            out.push(Tok { kind: TokKind::Num(s), line: tline, col: tcol });
            continue;
        }
        let kind = match c {
            '+' => TokKind::Plus,
            '-' => TokKind::Minus,
            '*' => TokKind::Star,
            '^' => TokKind::Caret,
            '=' => TokKind::Eq,
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            ',' => TokKind::Comma,
            '/' => TokKind::Slash,
            other => return Err(perr(tline, tcol, format!("unexpected character {other:?}"))),
        };
        advance(&mut chars);
        out.push(Tok { kind, line: tline, col: tcol });
    }
    out.push(Tok { kind: TokKind::Eof, line, col });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    /// Highest axis index mentioned so far.
    max_axis: u32,
    /// Spans of bare `Dx`/`x` uses, checked once N is known.
    bare_axis_spans: Vec<(u32, u32)>,
}

/// Parsed initial-datum expression before assembly.
enum InitExpr {
    Geom,
    Em,
    Poly(BTreeMap<Vec<(u32, u32)>, Rational>), // monomial (axis, power) list -> coeff
}

impl Parser {
    fn cur(&self) -> &Tok {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> DslError {
        perr(self.cur().line, self.cur().col, message)
    }

    fn expect(&mut self, kind: TokKind, what: &str) -> Result<Tok, DslError> {
        if self.cur().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match &self.cur().kind {
            TokKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<Tok, DslError> {
        if self.peek_ident() == Some(name) {
            Ok(self.bump())
        } else {
            Err(self.err_here(format!("expected {name:?}")))
        }
    }

    fn parse_uint(&mut self, what: &str) -> Result<(u32, Tok), DslError> {
        match self.cur().kind.clone() {
            TokKind::Num(s) if !s.contains('.') => {
                let tok = self.bump();
                let n: u32 = s
                    .parse()
                    .map_err(|_| perr(tok.line, tok.col, format!("{what} out of range")))?;
                Ok((n, tok))
            }
            _ => Err(self.err_here(format!("expected {what} (a nonnegative integer)"))),
        }
    }

    /// rational := ["-"] num ["/" num]; num may be decimal.
    fn parse_rational(&mut self) -> Result<Rational, DslError> {
        let mut neg = false;
        if self.cur().kind == TokKind::Minus {
            self.bump();
            neg = true;
        }
        let first = match self.cur().kind.clone() {
            TokKind::Num(s) => {
                self.bump();
                s
            }
            _ => return Err(self.err_here("expected a number")),
        };
        let mut text = first;
        if self.cur().kind == TokKind::Slash {
            self.bump();
            match self.cur().kind.clone() {
                TokKind::Num(s) if !s.contains('.') => {
                    self.bump();
                    text = format!("{text}/{s}");
                }
                _ => return Err(self.err_here("expected a denominator")),
            }
        }
        let r = crate::scalar::parse_rational(&text)
            .ok_or_else(|| self.err_here(format!("cannot parse {text:?} as a rational")))?;
        Ok(if neg { -r } else { r })
    }

    /// Axis encoded in an identifier: "x"/"Dx" bare (axis 1, recorded for
    /// the N > 1 check) or with a trailing number ("x2", "Dx3").
    fn axis_of(&mut self, name: &str, stem: &str, tok: &Tok) -> Result<u32, DslError> {
        let suffix = &name[stem.len()..];
        if suffix.is_empty() {
            self.bare_axis_spans.push((tok.line, tok.col));
            self.max_axis = self.max_axis.max(1);
            return Ok(1);
        }
        let axis: u32 = suffix
            .parse()
            .map_err(|_| perr(tok.line, tok.col, format!("bad axis suffix in {name:?}")))?;
        if axis == 0 {
            return Err(perr(tok.line, tok.col, "axis numbering starts at 1"));
        }
        self.max_axis = self.max_axis.max(axis);
        Ok(axis)
    }

    /// factor := dop* "u" ["^" int]. Returns (i, per-axis q map, r).
    fn parse_factor(&mut self, kappa: u32) -> Result<(u32, BTreeMap<u32, u32>, u32), DslError> {
        let mut i = 0u32;
        let mut q: BTreeMap<u32, u32> = BTreeMap::new();
        loop {
            match self.peek_ident() {
                Some("u") => {
                    self.bump();
                    let mut r = 1u32;
                    if self.cur().kind == TokKind::Caret {
                        self.bump();
                        let (n, tok) = self.parse_uint("power")?;
                        if n == 0 {
                            return Err(perr(tok.line, tok.col, "power must be >= 1"));
                        }
                        r = n;
                    }
                    return Ok((i, q, r));
                }
                Some("Dt") => {
                    let tok = self.bump();
                    let mut p = 1u32;
                    if self.cur().kind == TokKind::Caret {
                        self.bump();
                        let (n, _) = self.parse_uint("derivative order")?;
                        p = n;
                    }
                    i += p;
                    if i >= kappa {
                        return Err(perr(
                            tok.line,
                            tok.col,
                            format!("t-derivative order {i} inside a term must be below kappa = {kappa}"),
                        ));
                    }
                }
                Some(name) if name.starts_with("Dx") => {
                    let name = name.to_string();
                    let tok = self.bump();
                    let axis = self.axis_of(&name, "Dx", &tok)?;
                    let mut p = 1u32;
                    if self.cur().kind == TokKind::Caret {
                        self.bump();
                        let (n, _) = self.parse_uint("derivative order")?;
                        p = n;
                    }
                    *q.entry(axis).or_insert(0) += p;
                }
                _ => return Err(self.err_here("expected a derivative op or \"u\"")),
            }
        }
    }

    /// pterm: '*'-separated rational literals, t-powers, and factors.
    fn parse_pterm(&mut self, kappa: u32) -> Result<PTerm, DslError> {
        let mut coeff = Rational::from(1);
        let mut v = 0u32;
        let mut factors: Vec<(u32, BTreeMap<u32, u32>, u32)> = Vec::new();
        loop {
            match &self.cur().kind {
                TokKind::Num(_) => {
                    coeff *= self.parse_rational()?;
                }
                TokKind::Ident(name) => match name.as_str() {
                    "t" => {
                        self.bump();
                        if self.cur().kind == TokKind::Caret {
                            self.bump();
                            let (n, _) = self.parse_uint("t power")?;
                            v += n;
                        } else {
                            v += 1;
                        }
                    }
                    "u" | "Dt" => factors.push(self.parse_factor(kappa)?),
                    s if s.starts_with("Dx") => factors.push(self.parse_factor(kappa)?),
                    other => {
                        return Err(self.err_here(format!(
                            "unknown coefficient name {other:?}; only rational literals and t powers are supported"
                        )))
                    }
                },
                _ => return Err(self.err_here("expected a factor or coefficient")),
            }
            if self.cur().kind == TokKind::Star {
                self.bump();
            } else {
                break;
            }
        }
        Ok(PTerm { coeff, v, factors })
    }

    /// poly := ["+"|"-"] polyterm { ("+"|"-") polyterm }
    fn parse_poly(&mut self) -> Result<BTreeMap<Vec<(u32, u32)>, Rational>, DslError> {
        let mut out: BTreeMap<Vec<(u32, u32)>, Rational> = BTreeMap::new();
        let mut sign = Rational::from(1);
        if self.cur().kind == TokKind::Minus {
            self.bump();
            sign = -sign;
        } else if self.cur().kind == TokKind::Plus {
            self.bump();
        }
        loop {
            let (monomial, coeff) = self.parse_polyterm()?;
            let entry = out.entry(monomial).or_insert_with(Rational::new);
            *entry += sign.clone() * coeff;
            match self.cur().kind {
                TokKind::Plus => {
                    self.bump();
                    sign = Rational::from(1);
                }
                TokKind::Minus => {
                    self.bump();
                    sign = Rational::from(-1);
                }
                _ => break,
            }
        }
        Ok(out)
    }

    /// polyterm := rational ["*" monom] | monom; monom := xvar ["^" int] {"*" xvar ["^" int]}
    fn parse_polyterm(&mut self) -> Result<(Vec<(u32, u32)>, Rational), DslError> {
        let mut coeff = Rational::from(1);
        let mut powers: BTreeMap<u32, u32> = BTreeMap::new();
        let mut saw_anything = false;
        loop {
            match &self.cur().kind {
                TokKind::Num(_) => {
                    coeff *= self.parse_rational()?;
                    saw_anything = true;
                }
                TokKind::Ident(name) if name.starts_with('x') => {
                    let name = name.clone();
                    let tok = self.bump();
                    let axis = self.axis_of(&name, "x", &tok)?;
                    let mut p = 1u32;
                    if self.cur().kind == TokKind::Caret {
                        self.bump();
                        let (n, _) = self.parse_uint("power")?;
                        p = n;
                    }
                    *powers.entry(axis).or_insert(0) += p;
                    saw_anything = true;
                }
                _ => {
                    if saw_anything {
                        return Err(self.err_here("expected a number or x variable"));
                    } else {
                        return Err(self.err_here("expected a polynomial term"));
                    }
                }
            }
            if self.cur().kind == TokKind::Star {
                self.bump();
            } else {
                break;
            }
        }
        Ok((powers.into_iter().filter(|(_, p)| *p > 0).collect(), coeff))
    }
}

struct PTerm {
    coeff: Rational,
    v: u32,
    factors: Vec<(u32, BTreeMap<u32, u32>, u32)>,
}

/// Parse an equation document.
pub fn parse(text: &str) -> Result<EquationSpec, DslError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, max_axis: 0, bare_axis_spans: Vec::new() };

    // Headers.
    let mut moment_decls: BTreeMap<String, (Rational, Tok)> = BTreeMap::new();
    let mut init_decls: BTreeMap<u32, InitExpr> = BTreeMap::new();
    let mut rhs_decl: Option<(Inhomogeneity, Tok)> = None;
    loop {
        match p.peek_ident() {
            Some("moment") => {
                p.bump();
                let name_tok = p.bump();
                let name = match &name_tok.kind {
                    TokKind::Ident(s) if s == "t" || s.starts_with('x') => s.clone(),
                    _ => {
                        return Err(perr(
                            name_tok.line,
                            name_tok.col,
                            "expected \"t\" or an x variable after \"moment\"",
                        ))
                    }
                };
                if name.starts_with('x') {
                    // Validate/record the axis so N accounts for it.
                    let name_c = name.clone();
                    p.axis_of(&name_c, "x", &name_tok)?;
                }
                p.expect(TokKind::Eq, "\"=\"")?;
                p.expect_ident("gamma")?;
                p.expect(TokKind::LParen, "\"(\"")?;
                let s_tok = p.cur().clone();
                let s = p.parse_rational()?;
                if s <= 0 {
                    return Err(perr(s_tok.line, s_tok.col, "moment order must be positive"));
                }
                p.expect(TokKind::RParen, "\")\"")?;
                if moment_decls.insert(name.clone(), (s, name_tok.clone())).is_some() {
                    return Err(perr(
                        name_tok.line,
                        name_tok.col,
                        format!("duplicate moment declaration for {name:?}"),
                    ));
                }
            }
            Some("init") => {
                p.bump();
                let (j, j_tok) = p.parse_uint("initial index")?;
                p.expect(TokKind::Eq, "\"=\"")?;
                let expr = match p.peek_ident() {
                    Some("geom") => {
                        p.bump();
                        InitExpr::Geom
                    }
                    Some("em") => {
                        p.bump();
                        InitExpr::Em
                    }
                    _ => InitExpr::Poly(p.parse_poly()?),
                };
                if init_decls.insert(j, expr).is_some() {
                    return Err(perr(j_tok.line, j_tok.col, format!("duplicate init {j}")));
                }
            }
            Some("rhs") => {
                let rhs_tok = p.bump();
                p.expect(TokKind::Eq, "\"=\"")?;
                let decl = match &p.cur().kind {
                    TokKind::Num(s) if s == "0" => {
                        p.bump();
                        Inhomogeneity::Zero
                    }
                    TokKind::Ident(s) if s == "gevrey" => {
                        p.bump();
                        p.expect(TokKind::LParen, "\"(\"")?;
                        let sigma = p.parse_rational()?;
                        p.expect(TokKind::Comma, "\",\"")?;
                        let c = p.parse_rational()?;
                        p.expect(TokKind::Comma, "\",\"")?;
                        let k = p.parse_rational()?;
                        p.expect(TokKind::RParen, "\")\"")?;
                        Inhomogeneity::Gevrey { sigma, c, k }
                    }
                    _ => return Err(p.err_here("expected \"0\" or \"gevrey(sigma, C, K)\"")),
                };
                if rhs_decl.is_some() {
                    return Err(perr(rhs_tok.line, rhs_tok.col, "duplicate rhs declaration"));
                }
                rhs_decl = Some((decl, rhs_tok));
            }
            _ => break,
        }
    }

    // Equation: dterm { +- pterm } = rhs.
    let dt_tok = p.expect_ident("Dt")?;
    let mut kappa = 1u32;
    if p.cur().kind == TokKind::Caret {
        p.bump();
        let (n, n_tok) = p.parse_uint("derivative order")?;
        if n == 0 {
            return Err(perr(n_tok.line, n_tok.col, "Dt power must be >= 1"));
        }
        kappa = n;
    }
    p.expect_ident("u")?;

    let mut pterms: Vec<(Rational, PTerm)> = Vec::new();
    loop {
        let sign = match p.cur().kind {
            // Subtracted on the left = positive coefficient in the sum of terms.
            TokKind::Minus => Rational::from(1),
            TokKind::Plus => Rational::from(-1),
            TokKind::Eq => break,
            _ => return Err(p.err_here("expected \"+\", \"-\", or \"=\"")),
        };
        p.bump();
        let pt = p.parse_pterm(kappa)?;
        pterms.push((sign, pt));
    }
    p.expect(TokKind::Eq, "\"=\"")?;
    let inhomogeneity = match &p.cur().kind {
        TokKind::Num(s) if s == "0" => {
            let tok = p.bump();
            if let Some((decl, _)) = &rhs_decl {
                if *decl != Inhomogeneity::Zero {
                    return Err(perr(
                        tok.line,
                        tok.col,
                        "equation says \"= 0\" but a nonzero rhs was declared; write \"= f\"",
                    ));
                }
            }
            Inhomogeneity::Zero
        }
        TokKind::Ident(s) if s == "f" => {
            let tok = p.bump();
            match rhs_decl.take() {
                Some((decl, _)) => decl,
                None => {
                    return Err(perr(
                        tok.line,
                        tok.col,
                        "equation says \"= f\" but no rhs was declared",
                    ))
                }
            }
        }
        _ => return Err(p.err_here("expected \"0\" or \"f\"")),
    };
    if p.cur().kind != TokKind::Eof {
        return Err(p.err_here("unexpected trailing input"));
    }

    // Assembly: number of axes.
    let dim = p.max_axis.max(1) as usize;
    if dim > 1 {
        if let Some(&(line, col)) = p.bare_axis_spans.first() {
            return Err(perr(
                line,
                col,
                format!("bare \"Dx\"/\"x\" is ambiguous with {dim} axes; use an axis number"),
            ));
        }
    }

    // Moment sequences: declared or gamma(1).
    let mut moments = Vec::with_capacity(dim + 1);
    let mut lookup = |names: &[String]| -> Option<(Rational, Tok)> {
        for n in names {
            if let Some(v) = moment_decls.remove(n) {
                return Some(v);
            }
        }
        None
    };
    let t_order = lookup(&["t".into()]).map(|(s, _)| s).unwrap_or_else(|| Rational::from(1));
    moments.push(Arc::new(MomentSequence::gamma(t_order).expect("positive order")));
    for axis in 1..=dim as u32 {
        let mut names = vec![format!("x{axis}")];
        if axis == 1 {
            names.push("x".into());
        }
        let s = lookup(&names).map(|(s, _)| s).unwrap_or_else(|| Rational::from(1));
        moments.push(Arc::new(MomentSequence::gamma(s).expect("positive order")));
    }
    if let Some((name, (_, tok))) = moment_decls.into_iter().next() {
        return Err(perr(
            tok.line,
            tok.col,
            format!("moment declaration for {name:?} does not match any axis in use"),
        ));
    }

    // Terms with canonical factor order; duplicate (i, q) factors merge.
    let mut terms = Vec::with_capacity(pterms.len());
    for (sign, pt) in pterms {
        let mut factor_map: BTreeMap<(u32, Vec<u32>), u32> = BTreeMap::new();
        for (i, qmap, r) in pt.factors {
            let mut q = vec![0u32; dim];
            for (axis, pow) in qmap {
                q[(axis - 1) as usize] = pow;
            }
            *factor_map.entry((i, q)).or_insert(0) += r;
        }
        let factors = factor_map
            .into_iter()
            .map(|((i, q), r)| TermFactor { i, q: MultiIndex::from_slice(&q), r })
            .collect();
        terms.push(Term { v: pt.v, coeff: CoeffSpec::Const(sign * pt.coeff), factors });
    }

    // Initial data for 0..kappa; reject stray indices.
    if let Some((&j, _)) = init_decls.iter().find(|(&j, _)| j >= kappa) {
        return Err(perr(
            dt_tok.line,
            dt_tok.col,
            format!("init {j} is out of range: indices must be below kappa = {kappa}"),
        ));
    }
    let mut initial = Vec::with_capacity(kappa as usize);
    for j in 0..kappa {
        match init_decls.remove(&j) {
            Some(InitExpr::Geom) => initial.push(InitialData::Geom),
            Some(InitExpr::Em) => initial.push(InitialData::Em { a: None }),
            Some(InitExpr::Poly(monomials)) => {
                let mut poly = RatPoly::new();
                for (powers, coeff) in monomials {
                    let mut idx = vec![0u32; dim];
                    for (axis, pow) in powers {
                        idx[(axis - 1) as usize] = pow;
                    }
                    let prev = poly
                        .iter()
                        .find(|(i, _)| i.as_slice() == idx.as_slice())
                        .map(|(_, c)| c.clone())
                        .unwrap_or_default();
                    poly.insert(MultiIndex::from_slice(&idx), prev + coeff);
                }
                initial.push(InitialData::Poly(poly));
            }
            None => {
                return Err(perr(
                    dt_tok.line,
                    dt_tok.col,
                    format!("missing initial data: add \"init {j} = ...\""),
                ))
            }
        }
    }

    Ok(EquationSpec { dim, kappa, moments, terms, inhomogeneity, initial })
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

fn axis_name(prefix: &str, axis: usize, dim: usize) -> String {
    if dim == 1 {
        prefix.to_string()
    } else {
        format!("{prefix}{}", axis + 1)
    }
}

fn print_poly(poly: &RatPoly, dim: usize) -> Result<String, DslError> {
    if poly.is_zero() {
        return Ok("0".to_string());
    }
    let mut out = String::new();
    for (n, (idx, coeff)) in poly.iter().enumerate() {
        let neg = *coeff < 0;
        let mag = Rational::from(coeff.abs_ref());
        if n == 0 {
            if neg {
                out.push_str("- ");
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut parts: Vec<String> = Vec::new();
        if mag != 1 || idx.total() == 0 {
            parts.push(mag.to_string());
        }
        for axis in 0..dim {
            let p = idx.get(axis);
            if p == 0 {
                continue;
            }
            let name = axis_name("x", axis, dim);
            parts.push(if p == 1 { name } else { format!("{name}^{p}") });
        }
        out.push_str(&parts.join("*"));
    }
    Ok(out)
}

/// Render a spec in canonical text form. Errors when the spec uses
/// features the text format cannot express (ratio moment tables,
/// t-polynomial coefficients, polynomial inhomogeneities, explicit
/// extremal rates).
pub fn print(spec: &EquationSpec) -> Result<String, DslError> {
    let mut out = String::new();
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain((0..spec.dim).map(|d| axis_name("x", d, spec.dim)))
        .collect();
    for (m, name) in spec.moments.iter().zip(&names) {
        if m.kind_name() != "gamma" {
            return Err(DslError::Unrepresentable {
                reason: format!("moment sequence for {name} is a ratio table"),
            });
        }
        out.push_str(&format!("moment {name} = gamma({})\n", m.order()));
    }
    for (j, init) in spec.initial.iter().enumerate() {
        let rhs = match init {
            InitialData::Geom => "geom".to_string(),
            InitialData::Em { a: None } => "em".to_string(),
            InitialData::Em { a: Some(_) } => {
                return Err(DslError::Unrepresentable {
                    reason: "extremal datum with explicit rates".to_string(),
                })
            }
            InitialData::Poly(p) => print_poly(p, spec.dim)?,
        };
        out.push_str(&format!("init {j} = {rhs}\n"));
    }
    match &spec.inhomogeneity {
        Inhomogeneity::Zero => {}
        Inhomogeneity::Gevrey { sigma, c, k } => {
            out.push_str(&format!("rhs = gevrey({sigma}, {c}, {k})\n"));
        }
        Inhomogeneity::Poly(_) => {
            return Err(DslError::Unrepresentable {
                reason: "polynomial inhomogeneity".to_string(),
            })
        }
    }

    if spec.kappa == 1 {
        out.push_str("Dt u");
    } else {
        out.push_str(&format!("Dt^{} u", spec.kappa));
    }
    for term in &spec.terms {
        let c = match &term.coeff {
            CoeffSpec::Const(c) => c.clone(),
            CoeffSpec::Poly(_) => {
                return Err(DslError::Unrepresentable {
                    reason: "t-polynomial coefficient".to_string(),
                })
            }
        };
        if c == 0 {
            continue;
        }
        // Positive coefficient in the sum of terms prints as subtraction.
        out.push_str(if c > 0 { " - " } else { " + " });
        let mut parts: Vec<String> = Vec::new();
        let mag = Rational::from(c.abs_ref());
        if mag != 1 {
            parts.push(mag.to_string());
        }
        if term.v > 0 {
            parts.push(format!("t^{}", term.v));
        }
        for f in &term.factors {
            let mut fs = String::new();
            if f.i > 0 {
                fs.push_str(&if f.i == 1 { "Dt ".to_string() } else { format!("Dt^{} ", f.i) });
            }
            for axis in 0..spec.dim {
                let p = f.q.get(axis);
                if p == 0 {
                    continue;
                }
                let name = axis_name("Dx", axis, spec.dim);
                fs.push_str(&if p == 1 { format!("{name} ") } else { format!("{name}^{p} ") });
            }
            fs.push('u');
            if f.r > 1 {
                fs.push_str(&format!("^{}", f.r));
            }
            parts.push(fs);
        }
        if parts.is_empty() {
            parts.push("1".to_string());
        }
        out.push_str(&parts.join(" * "));
    }
    out.push_str(" = ");
    out.push_str(if spec.inhomogeneity == Inhomogeneity::Zero { "0" } else { "f" });
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon;

    pub(crate) const BURGERS: &str = "\
moment t = gamma(1)
moment x = gamma(1)
init 0 = geom
Dt u - Dx^2 u - 2 * u * Dx u = 0
";

    #[test]
    fn parse_burgers() {
        let spec = parse(BURGERS).unwrap();
        assert_eq!(spec.dim, 1);
        assert_eq!(spec.kappa, 1);
        assert_eq!(spec.terms.len(), 2);
        // Laplacian with coefficient +1.
        assert_eq!(spec.terms[0].coeff, CoeffSpec::Const(Rational::from(1)));
        assert_eq!(spec.terms[0].factors.len(), 1);
        assert_eq!(spec.terms[0].factors[0].q, MultiIndex::from_slice(&[2]));
        // Transport term 2 u d_x u, canonical factor order (0,[0]) then (0,[1]).
        assert_eq!(spec.terms[1].coeff, CoeffSpec::Const(Rational::from(2)));
        assert_eq!(spec.terms[1].factors.len(), 2);
        assert_eq!(spec.terms[1].factors[0].q, MultiIndex::from_slice(&[0]));
        assert_eq!(spec.terms[1].factors[1].q, MultiIndex::from_slice(&[1]));
        assert_eq!(spec.initial, vec![InitialData::Geom]);
        assert_eq!(spec.inhomogeneity, Inhomogeneity::Zero);
    }

    #[test]
    fn plus_sign_gives_negative_coefficient() {
        // KdV: + Dx^3 u on the left means -1 * d_x^3 u in the sum of terms.
        let spec = parse("init 0 = geom\nDt u + Dx^3 u - 6 * u * Dx u = 0\n").unwrap();
        assert_eq!(spec.terms[0].coeff, CoeffSpec::Const(Rational::from(-1)));
        assert_eq!(spec.terms[1].coeff, CoeffSpec::Const(Rational::from(6)));
    }

    #[test]
    fn u_squared_merges_into_power() {
        let a = parse("init 0 = geom\nDt u - u * u = 0\n").unwrap();
        let b = parse("init 0 = geom\nDt u - u^2 = 0\n").unwrap();
        assert_eq!(a.terms, b.terms);
        assert_eq!(a.terms[0].factors, vec![TermFactor { i: 0, q: MultiIndex::from_slice(&[0]), r: 2 }]);
    }

    #[test]
    fn multi_axis_factor() {
        let spec = parse("init 0 = geom\nDt u - Dx1 Dx2 u = 0\n").unwrap();
        assert_eq!(spec.dim, 2);
        assert_eq!(spec.terms[0].factors[0].q, MultiIndex::from_slice(&[1, 1]));
        assert_eq!(spec.moments.len(), 3);
    }

    #[test]
    fn kappa_two_with_dt_factor() {
        let spec = parse("init 0 = geom\ninit 1 = 0\nDt^2 u - Dt u * Dx u = 0\n").unwrap();
        assert_eq!(spec.kappa, 2);
        // Canonical factor order sorts on (i, q): Dx u before Dt u.
        assert_eq!(spec.terms[0].factors[0].q, MultiIndex::from_slice(&[1]));
        assert_eq!(spec.terms[0].factors[1].i, 1);
        assert!(matches!(&spec.initial[1], InitialData::Poly(p) if p.is_zero()));
    }

    #[test]
    fn dt_power_at_kappa_is_rejected_with_span() {
        let err = parse("init 0 = geom\nDt u - Dt u * Dx u = 0\n").unwrap_err();
        match err {
            DslError::Parse { line, col, message } => {
                assert_eq!(line, 2);
                assert_eq!(col, 8);
                assert!(message.contains("below kappa"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_init_is_rejected() {
        let err = parse("Dt u - Dx^2 u = 0\n").unwrap_err();
        assert!(matches!(err, DslError::Parse { message, .. } if message.contains("init 0")));
    }

    #[test]
    fn named_coefficient_is_rejected() {
        let err = parse("init 0 = geom\nDt u - alpha * Dx u = 0\n").unwrap_err();
        match err {
            DslError::Parse { line, col, message } => {
                assert_eq!((line, col), (2, 8));
                assert!(message.contains("alpha"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bare_dx_in_two_axis_doc_is_rejected() {
        let err = parse("init 0 = geom\nDt u - Dx u - Dx2^2 u = 0\n").unwrap_err();
        assert!(matches!(err, DslError::Parse { message, .. } if message.contains("ambiguous")));
    }

    #[test]
    fn t_powers_fold_into_v() {
        let spec = parse("moment x = gamma(2)\ninit 0 = geom\nDt u - t^1 * Dx^2 u = 0\n").unwrap();
        assert_eq!(spec.terms[0].v, 1);
        let p = polygon::build(&spec).unwrap();
        assert_eq!(p.sigma_c, Rational::from((3, 2)));
    }

    #[test]
    fn rhs_gevrey_header() {
        let spec = parse(
            "init 0 = geom\nrhs = gevrey(1, 2, 1/2)\nDt u - Dx^2 u = f\n",
        )
        .unwrap();
        assert_eq!(
            spec.inhomogeneity,
            Inhomogeneity::Gevrey {
                sigma: Rational::from(1),
                c: Rational::from(2),
                k: Rational::from((1, 2)),
            }
        );
    }

    #[test]
    fn rhs_mismatch_is_rejected() {
        let err = parse("init 0 = geom\nrhs = gevrey(1, 1, 1)\nDt u - Dx u = 0\n").unwrap_err();
        assert!(matches!(err, DslError::Parse { message, .. } if message.contains("= f")));
        let err2 = parse("init 0 = geom\nDt u - Dx u = f\n").unwrap_err();
        assert!(matches!(err2, DslError::Parse { message, .. } if message.contains("no rhs")));
    }

    #[test]
    fn init_poly_parses() {
        let spec = parse("init 0 = 1 + 2*x^2 - x\nDt u - Dx^2 u = 0\n").unwrap();
        match &spec.initial[0] {
            InitialData::Poly(p) => {
                let get = |k: u32| {
                    p.iter()
                        .find(|(i, _)| i.get(0) == k)
                        .map(|(_, c)| c.clone())
                        .unwrap_or_default()
                };
                assert_eq!(get(0), Rational::from(1));
                assert_eq!(get(1), Rational::from(-1));
                assert_eq!(get(2), Rational::from(2));
            }
            other => panic!("expected poly, got {other:?}"),
        }
    }

    #[test]
    fn print_then_parse_round_trips() {
        for text in [
            BURGERS,
            "init 0 = geom\nDt u + Dx^3 u - 6 * u * Dx u = 0\n",
            "moment x = gamma(2)\ninit 0 = geom\nDt u - t^1 * Dx^2 u = 0\n",
            "init 0 = geom\ninit 1 = geom\nDt^2 u - Dx^4 u - Dx^2 u - u * Dx^2 u - Dx u^2 = 0\n",
            "init 0 = em\nrhs = gevrey(2, 1, 1/3)\nDt u - Dx^2 u = f\n",
            "init 0 = 1 - 1/2*x + 2*x^3\nDt u - Dx^2 u = 0\n",
        ] {
            let spec = parse(text).unwrap();
            let printed = print(&spec).unwrap();
            let reparsed = parse(&printed).unwrap();
            assert_eq!(spec, reparsed, "round trip failed for:\n{text}\nprinted:\n{printed}");
        }
    }

    #[test]
    fn print_canonical_burgers() {
        let spec = parse(BURGERS).unwrap();
        let printed = print(&spec).unwrap();
        assert_eq!(
            printed,
            "moment t = gamma(1)\nmoment x = gamma(1)\ninit 0 = geom\nDt u - Dx^2 u - 2 * u * Dx u = 0\n"
        );
    }

    #[test]
    fn unknown_character_reports_position() {
        let err = parse("init 0 = geom\nDt u - Dx^2 u = 0 ;\n").unwrap_err();
        assert!(matches!(err, DslError::Parse { line: 2, col: 19, .. }));
    }

    #[test]
    fn unrepresentable_ratio_moment() {
        let mut spec = parse(BURGERS).unwrap();
        spec.moments[1] = Arc::new(
            MomentSequence::ratio_table(Rational::from(1), vec![Rational::from(1)]).unwrap(),
        );
        assert!(matches!(print(&spec), Err(DslError::Unrepresentable { .. })));
    }
}
