//! `.crn` text format.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! @species E S ES P          # optional; fixes species order
//! @volume 10                 # optional
//! @theta S mm(3, 1)          # linear | mm(v, k) | minn(n) | table(v1, v2, ...)
//! @kinetics ratio-form       # optional family override
//! E + S <-> ES ; 1, 2
//! ES -> E + P ; 0.5
//! 0 -> S ; 1/3
//! ```
//!
//! `<->` expands into a forward and a backward reaction with the two rate
//! constants in that order. The full grammar lives in `docs/grammar.ebnf`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::kinetics::{Kinetics, KineticsDecl, KineticsError, KineticsRegistry, Theta};
use crate::network::{build_network, valid_species_name, Network, NetworkError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("missing rate constant")]
    MissingRateConstant,
    #[error("rate constant must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("{0}")]
    Network(#[from] NetworkError),
    #[error("{0}")]
    Kinetics(#[from] KineticsError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

/// A parsed `.crn` file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDocument {
    pub network: Network,
    /// One κ̂_k per directed reaction.
    pub rate_constants: Vec<f64>,
    pub kinetics: KineticsDecl,
    pub volume: Option<f64>,
}

impl NetworkDocument {
    /// Stochastic rate constants: the declared constants scaled by the
    /// volume when one is set.
    pub fn stochastic_rates(&self, volume: Option<f64>) -> Vec<f64> {
        match volume.or(self.volume) {
            Some(v) => crate::kinetics::scale_rate_constants(&self.rate_constants, &self.network, v),
            None => self.rate_constants.clone(),
        }
    }

    pub fn kinetics(&self, registry: &KineticsRegistry, volume: Option<f64>) -> Result<Kinetics, KineticsError> {
        let law = registry.build(&self.network, &self.kinetics)?;
        Kinetics::new(&self.network, self.stochastic_rates(volume), law)
    }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn err<T>(&self, kind: ParseErrorKind) -> PResult<T> {
        Err(self.error_at(self.pos, kind))
    }

    fn error_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column: pos + 1,
            kind,
        }
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> PResult<T> {
        self.err(ParseErrorKind::Syntax(msg.into()))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.pos + n <= self.chars.len() && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.syntax(format!("expected `{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return self.syntax("expected a name"),
        }
        while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_') {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    /// Lowercase word with hyphens, for family names.
    fn word(&mut self) -> PResult<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '-') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.syntax("expected a name");
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn integer(&mut self) -> PResult<i64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.syntax("expected an integer");
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<i64>()
            .map_err(|_| self.error_at(start, ParseErrorKind::Syntax(format!("integer `{text}` out of range"))))
    }

    fn float(&mut self) -> PResult<f64> {
        self.skip_ws();
        let start = self.pos;
        let c = &self.chars;
        let mut p = self.pos;
        if p < c.len() && (c[p] == '+' || c[p] == '-') {
            p += 1;
        }
        let digits_start = p;
        while p < c.len() && c[p].is_ascii_digit() {
            p += 1;
        }
        if p < c.len() && c[p] == '.' {
            p += 1;
            while p < c.len() && c[p].is_ascii_digit() {
                p += 1;
            }
        }
        if p == digits_start || (p == digits_start + 1 && c[digits_start] == '.') {
            return self.syntax("expected a number");
        }
        if p < c.len() && (c[p] == 'e' || c[p] == 'E') {
            let mut q = p + 1;
            if q < c.len() && (c[q] == '+' || c[q] == '-') {
                q += 1;
            }
            if q < c.len() && c[q].is_ascii_digit() {
                while q < c.len() && c[q].is_ascii_digit() {
                    q += 1;
                }
                p = q;
            }
        }
        let text: String = c[start..p].iter().collect();
        self.pos = p;
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error_at(start, ParseErrorKind::Syntax(format!("bad number `{text}`")))),
        }
    }

    /// `number` or `number / number`.
    fn rate(&mut self) -> PResult<f64> {
        self.skip_ws();
        let start = self.pos;
        if self.at_end() || self.peek() == Some(',') {
            return self.err(ParseErrorKind::MissingRateConstant);
        }
        let mut v = self.float()?;
        if self.eat("/") {
            let d = self.float()?;
            if d == 0.0 {
                return Err(self.error_at(start, ParseErrorKind::Syntax("division by zero".into())));
            }
            v /= d;
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(self.error_at(start, ParseErrorKind::NonPositiveRate(v)));
        }
        Ok(v)
    }
}

#[derive(Debug)]
struct RawReaction {
    source: Vec<(i64, String, usize)>,
    product: Vec<(i64, String, usize)>,
    line: usize,
}

fn parse_complex(cur: &mut Cursor) -> PResult<Vec<(i64, String, usize)>> {
    let mut terms = Vec::new();
    loop {
        cur.skip_ws();
        let start = cur.pos;
        let mult = match cur.peek() {
            Some(c) if c.is_ascii_digit() => Some(cur.integer()?),
            _ => None,
        };
        match cur.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                let name = cur.ident()?;
                let n = mult.unwrap_or(1);
                if n == 0 {
                    return Err(cur.error_at(start, ParseErrorKind::Syntax("zero multiplier".into())));
                }
                terms.push((n, name, start));
            }
            _ if mult == Some(0) && terms.is_empty() => {
                // the empty complex
                if cur.peek() == Some('+') {
                    return cur.syntax("`0` cannot be combined with other terms");
                }
                return Ok(terms);
            }
            _ => return cur.syntax("expected a species term or `0`"),
        }
        if !cur.eat("+") {
            return Ok(terms);
        }
    }
}

fn parse_theta(cur: &mut Cursor) -> PResult<Theta> {
    let name = cur.ident()?;
    let theta = match name.as_str() {
        "linear" => Theta::Linear,
        "mm" => {
            cur.expect("(")?;
            let v = cur.float()?;
            cur.expect(",")?;
            let k = cur.float()?;
            cur.expect(")")?;
            Theta::MichaelisMenten { v, k }
        }
        "minn" => {
            cur.expect("(")?;
            let n = cur.integer()?;
            cur.expect(")")?;
            let n = u32::try_from(n).map_err(|_| cur.error_at(cur.pos, ParseErrorKind::Syntax("server count out of range".into())))?;
            Theta::MinServers { n }
        }
        "table" => {
            cur.expect("(")?;
            let mut values = vec![cur.float()?];
            while cur.eat(",") {
                values.push(cur.float()?);
            }
            cur.expect(")")?;
            Theta::Tabulated { values }
        }
        other => return cur.syntax(format!("unknown theta function `{other}`")),
    };
    let pos = cur.pos;
    theta
        .validate()
        .map_err(|e| cur.error_at(pos, ParseErrorKind::Kinetics(e)))?;
    Ok(theta)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub fn parse(text: &str) -> Result<NetworkDocument, ParseError> {
    parse_with(text, &KineticsRegistry::default())
}

/// Parses against a given kinetics registry (family names are checked).
pub fn parse_with(text: &str, registry: &KineticsRegistry) -> Result<NetworkDocument, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut declared: Option<Vec<String>> = None;
    let mut volume = None;
    let mut family: Option<String> = None;
    let mut thetas: Vec<(String, Theta, usize, usize)> = Vec::new();
    let mut raw: Vec<RawReaction> = Vec::new();
    let mut rates: Vec<f64> = Vec::new();

    for (i, line) in text.split('\n').enumerate() {
        let lineno = i + 1;
        let body = strip_comment(line.strip_suffix('\r').unwrap_or(line));
        let mut cur = Cursor::new(body, lineno);
        if cur.at_end() {
            continue;
        }
        if cur.eat("@") {
            let directive = cur.ident()?;
            match directive.as_str() {
                "species" => {
                    if declared.is_some() {
                        return cur.syntax("duplicate @species directive");
                    }
                    let mut names: Vec<String> = Vec::new();
                    while !cur.at_end() {
                        let pos = cur.pos;
                        let name = cur.ident()?;
                        if names.contains(&name) {
                            return Err(cur.error_at(pos, NetworkError::DuplicateSpeciesName(name).into()));
                        }
                        names.push(name);
                    }
                    if !raw.is_empty() {
                        return cur.syntax("@species must precede all reactions");
                    }
                    declared = Some(names);
                }
                "volume" => {
                    let pos = cur.pos;
                    let v = cur.float()?;
                    if v <= 0.0 {
                        return Err(cur.error_at(pos, ParseErrorKind::Syntax("volume must be positive".into())));
                    }
                    volume = Some(v);
                }
                "theta" => {
                    cur.skip_ws();
                    let pos = cur.pos;
                    let name = cur.ident()?;
                    let theta = parse_theta(&mut cur)?;
                    if thetas.iter().any(|(n, ..)| *n == name) {
                        return Err(cur.error_at(pos, ParseErrorKind::Syntax(format!("duplicate @theta for `{name}`"))));
                    }
                    thetas.push((name, theta, lineno, pos + 1));
                }
                "kinetics" => {
                    let pos = cur.pos;
                    let name = cur.word()?;
                    if !registry.contains(&name) {
                        return Err(cur.error_at(pos, KineticsError::UnknownFamily(name).into()));
                    }
                    family = Some(name);
                }
                other => return cur.syntax(format!("unknown directive `@{other}`")),
            }
            if !cur.at_end() {
                return cur.syntax("unexpected trailing input");
            }
            continue;
        }

        let source = parse_complex(&mut cur)?;
        let reversible = if cur.eat("<->") {
            true
        } else if cur.eat("->") {
            false
        } else {
            return cur.syntax("expected `->` or `<->`");
        };
        let product = parse_complex(&mut cur)?;
        if !cur.eat(";") {
            return cur.err(ParseErrorKind::MissingRateConstant);
        }
        let fwd = cur.rate()?;
        let bwd = if reversible {
            if !cur.eat(",") {
                return cur.err(ParseErrorKind::MissingRateConstant);
            }
            Some(cur.rate()?)
        } else {
            None
        };
        if !cur.at_end() {
            return cur.syntax("unexpected trailing input");
        }
        if let Some(b) = bwd {
            raw.push(RawReaction {
                source: source.clone(),
                product: product.clone(),
                line: lineno,
            });
            rates.push(fwd);
            raw.push(RawReaction {
                source: product,
                product: source,
                line: lineno,
            });
            rates.push(b);
        } else {
            raw.push(RawReaction {
                source,
                product,
                line: lineno,
            });
            rates.push(fwd);
        }
    }

    // Species order: declaration, else first appearance.
    let names: Vec<String> = match &declared {
        Some(d) => d.clone(),
        None => {
            let mut names: Vec<String> = Vec::new();
            for r in &raw {
                for (_, n, _) in r.source.iter().chain(&r.product) {
                    if !names.contains(n) {
                        names.push(n.clone());
                    }
                }
            }
            names
        }
    };
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let m = names.len();

    let mut vectors = Vec::with_capacity(raw.len());
    for r in &raw {
        let to_vec = |terms: &[(i64, String, usize)]| -> PResult<Vec<i64>> {
            let mut v = vec![0i64; m];
            for (n, name, col) in terms {
                let &i = index.get(name.as_str()).ok_or(ParseError {
                    line: r.line,
                    column: col + 1,
                    kind: ParseErrorKind::UnknownSpecies(name.clone()),
                })?;
                v[i] = v[i].checked_add(*n).ok_or(ParseError {
                    line: r.line,
                    column: col + 1,
                    kind: ParseErrorKind::Syntax("coefficient overflow".into()),
                })?;
            }
            Ok(v)
        };
        vectors.push((to_vec(&r.source)?, to_vec(&r.product)?));
    }

    let network = build_network(&names, &vectors).map_err(|e| {
        let line = match &e {
            NetworkError::SelfLoopReaction { reaction }
            | NetworkError::DuplicateReaction { reaction, .. }
            | NetworkError::CoefficientOutOfRange { reaction, .. }
            | NetworkError::DimensionMismatch { reaction, .. } => raw[*reaction].line,
            _ => 1,
        };
        ParseError {
            line,
            column: 1,
            kind: e.into(),
        }
    })?;

    let mut decl = KineticsDecl {
        family,
        thetas: vec![None; m],
    };
    for (name, theta, line, column) in thetas {
        let i = *index.get(name.as_str()).ok_or(ParseError {
            line,
            column,
            kind: ParseErrorKind::UnknownSpecies(name.clone()),
        })?;
        decl.thetas[i] = Some(theta);
    }
    if !decl.has_thetas() {
        decl.thetas.clear();
    }
    registry.build(&network, &decl).map_err(|e| ParseError {
        line: 1,
        column: 1,
        kind: e.into(),
    })?;

    Ok(NetworkDocument {
        network,
        rate_constants: rates,
        kinetics: decl,
        volume,
    })
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_theta(t: &Theta) -> String {
    match t {
        Theta::Linear => "linear".into(),
        Theta::MichaelisMenten { v, k } => format!("mm({}, {})", fmt_num(*v), fmt_num(*k)),
        Theta::MinServers { n } => format!("minn({n})"),
        Theta::Tabulated { values } => {
            let vs: Vec<String> = values.iter().map(|v| fmt_num(*v)).collect();
            format!("table({})", vs.join(", "))
        }
    }
}

/// Canonical text form: `@species` first, then directives, then one directed
/// reaction per line.
pub fn serialize(doc: &NetworkDocument) -> String {
    let net = &doc.network;
    let mut out = String::new();
    let names: Vec<&str> = net.species().iter().map(|s| s.name.as_str()).collect();
    let _ = writeln!(out, "@species {}", names.join(" "));
    if let Some(v) = doc.volume {
        let _ = writeln!(out, "@volume {}", fmt_num(v));
    }
    if let Some(f) = &doc.kinetics.family {
        let _ = writeln!(out, "@kinetics {f}");
    }
    for (i, t) in doc.kinetics.thetas.iter().enumerate() {
        if let Some(t) = t {
            let _ = writeln!(out, "@theta {} {}", names[i], fmt_theta(t));
        }
    }
    for (k, r) in net.reactions().iter().enumerate() {
        let _ = writeln!(
            out,
            "{} -> {} ; {}",
            net.format_complex(r.source),
            net.format_complex(r.product),
            fmt_num(doc.rate_constants[k])
        );
    }
    out
}

impl fmt::Display for NetworkDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

/// Checks a name against the species-name pattern.
pub fn is_valid_species_name(name: &str) -> bool {
    valid_species_name(name)
}
