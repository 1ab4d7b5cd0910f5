//! Model-formula grammar and its translation to a [`ModelSpec`].
//!
//! Grammar: `response '~' term ('+' term)*` where a term is identifiers
//! joined by `:`, a product `A*B` expands to `A + B + A:B`, a bare `1` is
//! the (always implicit) intercept, a bare covariate contributes the
//! intercept tuple of its own part, and `x:A` adds factor A's tuple to
//! covariate x's part. A term may name at most one covariate.

use std::collections::BTreeSet;

use crate::design::{CovariatePart, EffectTuple, ModelSpec};
use crate::error::{Error, Result};

/// What a dataset column is used as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Factor,
    Covariate,
    Response,
}

/// Name and role of one dataset column, with declared factor levels when
/// the caller wants cells for levels that may not occur in the data.
#[derive(Debug, Clone)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub levels: Option<Vec<String>>,
}

impl ColumnSchema {
    pub fn factor(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Factor,
            levels: None,
        }
    }

    pub fn covariate(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Covariate,
            levels: None,
        }
    }

    pub fn response(name: impl Into<String>) -> Self {
        ColumnSchema {
            name: name.into(),
            kind: ColumnKind::Response,
            levels: None,
        }
    }
}

/// One resolved model term: an optional covariate plus a set of factors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Term {
    pub covariate: Option<String>,
    pub factors: BTreeSet<String>,
}

/// A parsed, schema-resolved model formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub response: String,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    One,
    Tilde,
    Plus,
    Colon,
    Star,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '~' => {
                out.push((Token::Tilde, i));
                i += 1;
            }
            '+' => {
                out.push((Token::Plus, i));
                i += 1;
            }
            ':' => {
                out.push((Token::Colon, i));
                i += 1;
            }
            '*' => {
                out.push((Token::Star, i));
                i += 1;
            }
            '1' => {
                out.push((Token::One, i));
                i += 1;
            }
            _ if c.is_ascii_alphabetic() || c == '_' || c == '.' => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Token::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::parse(i, format!("unexpected character '{c}'")));
            }
        }
    }
    Ok(out)
}

/// A `:`-joined chain of identifiers, before schema resolution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct RawChain {
    idents: Vec<(String, usize)>,
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<(Token, usize)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_ident(&mut self) -> Result<(String, usize)> {
        match self.bump() {
            Some((Token::Ident(name), off)) => Ok((name, off)),
            Some((tok, off)) => Err(Error::parse(
                off,
                format!("expected identifier, found {}", describe(&tok)),
            )),
            None => Err(Error::parse(self.len, "expected identifier at end of input")),
        }
    }

    /// chain := '1' | ident (':' ident)*
    fn chain(&mut self) -> Result<Option<RawChain>> {
        if let Some(Token::One) = self.peek() {
            self.bump();
            return Ok(None); // explicit intercept
        }
        let first = self.expect_ident()?;
        let mut idents = vec![first];
        while let Some(Token::Colon) = self.peek() {
            self.bump();
            idents.push(self.expect_ident()?);
        }
        Ok(Some(RawChain { idents }))
    }

    /// product := chain ('*' chain)*, expanded by the crossing rule
    /// a*b = a + b + a:b applied left to right.
    fn product(&mut self) -> Result<Vec<Option<RawChain>>> {
        let mut expanded: Vec<Option<RawChain>> = vec![self.chain()?];
        while let Some(Token::Star) = self.peek() {
            self.bump();
            let rhs = self.chain()?;
            let mut next = expanded.clone();
            next.push(rhs.clone());
            for lhs in &expanded {
                next.push(cross(lhs, &rhs));
            }
            expanded = next;
        }
        Ok(expanded)
    }
}

fn describe(tok: &Token) -> String {
    match tok {
        Token::Ident(s) => format!("identifier {s}"),
        Token::One => "'1'".into(),
        Token::Tilde => "'~'".into(),
        Token::Plus => "'+'".into(),
        Token::Colon => "':'".into(),
        Token::Star => "'*'".into(),
    }
}

fn cross(a: &Option<RawChain>, b: &Option<RawChain>) -> Option<RawChain> {
    match (a, b) {
        (None, other) | (other, None) => other.clone(),
        (Some(a), Some(b)) => {
            let mut idents = a.idents.clone();
            idents.extend(b.idents.iter().cloned());
            Some(RawChain { idents })
        }
    }
}

/// A formula split into response and raw chains, before the schema is
/// known. The CSV loader uses this to learn which columns the model needs.
#[derive(Debug, Clone)]
pub struct RawFormula {
    pub response: String,
    response_offset: usize,
    chains: Vec<Option<RawChain>>,
}

impl RawFormula {
    /// Every identifier mentioned on the right-hand side, in first-mention
    /// order.
    pub fn rhs_idents(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for chain in self.chains.iter().flatten() {
            for (name, _) in &chain.idents {
                if seen.insert(name.clone()) {
                    out.push(name.clone());
                }
            }
        }
        out
    }
}

pub fn parse_raw(text: &str) -> Result<RawFormula> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        len: text.len(),
    };
    let (response, response_offset) = p.expect_ident()?;
    match p.bump() {
        Some((Token::Tilde, _)) => {}
        Some((tok, off)) => {
            return Err(Error::parse(
                off,
                format!("expected '~', found {}", describe(&tok)),
            ))
        }
        None => return Err(Error::parse(text.len(), "expected '~' after response")),
    }
    if p.peek().is_none() {
        return Err(Error::parse(text.len(), "empty term list"));
    }
    let mut chains = Vec::new();
    loop {
        chains.extend(p.product()?);
        match p.bump() {
            None => break,
            Some((Token::Plus, off)) => {
                if p.peek().is_none() {
                    return Err(Error::parse(off, "dangling '+' at end of formula"));
                }
            }
            Some((tok, off)) => {
                return Err(Error::parse(
                    off,
                    format!("expected '+', found {}", describe(&tok)),
                ))
            }
        }
    }
    Ok(RawFormula {
        response,
        response_offset,
        chains,
    })
}

/// Parse `text` against a column schema, producing deduplicated terms.
pub fn parse_formula(text: &str, schema: &[ColumnSchema]) -> Result<Formula> {
    let raw = parse_raw(text)?;
    resolve(&raw, schema)
}

fn resolve(raw: &RawFormula, schema: &[ColumnSchema]) -> Result<Formula> {
    let kind_of = |name: &str| -> Option<ColumnKind> {
        schema.iter().find(|c| c.name == name).map(|c| c.kind)
    };
    match kind_of(&raw.response) {
        Some(ColumnKind::Response) | Some(ColumnKind::Covariate) => {}
        Some(ColumnKind::Factor) => {
            return Err(Error::parse(
                raw.response_offset,
                format!("response {} is declared as a factor", raw.response),
            ))
        }
        None => {
            return Err(Error::parse(
                raw.response_offset,
                format!("unknown response column {}", raw.response),
            ))
        }
    }

    let mut terms: Vec<Term> = Vec::new();
    for chain in raw.chains.iter().flatten() {
        let mut covariate: Option<String> = None;
        let mut factors = BTreeSet::new();
        for (name, off) in &chain.idents {
            if *name == raw.response {
                return Err(Error::parse(
                    *off,
                    format!("response {name} cannot appear among the terms"),
                ));
            }
            match kind_of(name) {
                Some(ColumnKind::Factor) => {
                    factors.insert(name.clone());
                }
                Some(ColumnKind::Covariate) => {
                    if let Some(prev) = &covariate {
                        return Err(Error::parse(
                            *off,
                            format!("term has two covariates: {prev} and {name}"),
                        ));
                    }
                    covariate = Some(name.clone());
                }
                Some(ColumnKind::Response) => {
                    return Err(Error::parse(*off, format!("column {name} is the response")))
                }
                None => return Err(Error::parse(*off, format!("unknown identifier {name}"))),
            }
        }
        let term = Term { covariate, factors };
        if !terms.contains(&term) {
            terms.push(term);
        }
    }
    Ok(Formula {
        response: raw.response.clone(),
        terms,
    })
}

impl Formula {
    /// Translate to a [`ModelSpec`] given the factor order that fixes bit
    /// positions. Part 0 always contains the intercept tuple; covariate
    /// parts appear in order of first mention.
    pub fn to_model_spec(&self, factor_order: &[String]) -> Result<ModelSpec> {
        let f = factor_order.len();
        if f == 0 {
            return Err(Error::input("the model must reference at least one factor"));
        }
        let tuple_of = |factors: &BTreeSet<String>| -> Result<EffectTuple> {
            let mut bits = vec![false; f];
            for name in factors {
                let k = factor_order
                    .iter()
                    .position(|x| x == name)
                    .ok_or_else(|| Error::input(format!("factor {name} missing from order")))?;
                bits[k] = true;
            }
            Ok(EffectTuple::new(bits))
        };

        let mut part0: Vec<EffectTuple> = vec![EffectTuple::intercept(f)];
        let mut cov_names: Vec<String> = Vec::new();
        let mut cov_effects: Vec<Vec<EffectTuple>> = Vec::new();
        for term in &self.terms {
            let tuple = tuple_of(&term.factors)?;
            match &term.covariate {
                None => {
                    if !part0.contains(&tuple) {
                        part0.push(tuple);
                    }
                }
                Some(name) => {
                    let idx = match cov_names.iter().position(|x| x == name) {
                        Some(i) => i,
                        None => {
                            cov_names.push(name.clone());
                            cov_effects.push(Vec::new());
                            cov_names.len() - 1
                        }
                    };
                    if !cov_effects[idx].contains(&tuple) {
                        cov_effects[idx].push(tuple);
                    }
                }
            }
        }

        let mut parts = vec![CovariatePart::new(None, part0)?];
        for (name, effects) in cov_names.into_iter().zip(cov_effects) {
            parts.push(CovariatePart::new(Some(name), effects)?);
        }
        ModelSpec::new(f, parts)
    }

    /// Canonical rendering: part-0 factor terms in canonical tuple order,
    /// then covariate terms part by part. Parsing the result reproduces
    /// the same model.
    pub fn canonical(&self, factor_order: &[String]) -> String {
        let key = |factors: &BTreeSet<String>| -> Vec<usize> {
            let mut ix: Vec<usize> = factors
                .iter()
                .filter_map(|f| factor_order.iter().position(|x| x == f))
                .collect();
            ix.sort_unstable();
            ix
        };
        let render_factors = |factors: &BTreeSet<String>| -> String {
            let mut named: Vec<(usize, &str)> = factors
                .iter()
                .map(|f| {
                    (
                        factor_order
                            .iter()
                            .position(|x| x == f)
                            .unwrap_or(usize::MAX),
                        f.as_str(),
                    )
                })
                .collect();
            named.sort_unstable();
            named.iter().map(|(_, n)| *n).collect::<Vec<_>>().join(":")
        };

        let mut part0: Vec<&Term> = self
            .terms
            .iter()
            .filter(|t| t.covariate.is_none() && !t.factors.is_empty())
            .collect();
        part0.sort_by_key(|t| (t.factors.len(), key(&t.factors)));
        let mut rendered: Vec<String> = part0
            .iter()
            .map(|t| render_factors(&t.factors))
            .collect();

        let mut cov_seen: Vec<&str> = Vec::new();
        for term in &self.terms {
            if let Some(name) = &term.covariate {
                if !cov_seen.contains(&name.as_str()) {
                    cov_seen.push(name);
                }
            }
        }
        for cov in cov_seen {
            let mut cov_terms: Vec<&Term> = self
                .terms
                .iter()
                .filter(|t| t.covariate.as_deref() == Some(cov))
                .collect();
            cov_terms.sort_by_key(|t| (t.factors.len(), key(&t.factors)));
            for term in cov_terms {
                if term.factors.is_empty() {
                    rendered.push(cov.to_string());
                } else {
                    rendered.push(format!("{cov}:{}", render_factors(&term.factors)));
                }
            }
        }

        if rendered.is_empty() {
            format!("{} ~ 1", self.response)
        } else {
            format!("{} ~ {}", self.response, rendered.join(" + "))
        }
    }
}
