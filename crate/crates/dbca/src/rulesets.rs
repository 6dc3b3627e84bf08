//! Rule set definitions and their text format.
//!
//! A rule set bundles four kinds of rules:
//!
//! * **grammar** rules — unification grammar productions with feature lists,
//!   an optional head marker `[var]`, and a logical form per category;
//! * **inference** rules — logical-form rewrites, optionally guarded by
//!   knowledge preconditions;
//! * **knowledge** — ground facts the preconditions are solved against;
//! * **resolution** rules — term rewrites that turn a logical form into
//!   output tokens.
//!
//! The text format mirrors the notation the rules are usually written in:
//! `⊓` for conjunction, `∃R.C` for existential restrictions, `→` between
//! rule sides, quoted terminals, `$x`/`_x` variables, and parenthesized
//! feature lists (with `|` disjunction and `-attr:` negation).
//!
//! ```text
//! ruleset: scan
//! version: 1
//! kind: scan
//! start: C
//! resolve: act
//!
//! [grammar] S=V_TWICE
//! S/∃RolePair(Times, Two)._x → V/_x 'twice'
//!
//! [resolution] ACT_TWICE
//! act(∃RolePair(Times, Two).$X) → act($X) act($X)
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::example::ExampleKind;
use crate::gramgen::features::{FSpec, FeatureList};
use crate::gramgen::logic::Lf;

/// A grammar production `CAT(F0)[H]/L0 → R1(F1)/L1 ...`.
#[derive(Clone, PartialEq, Debug)]
pub struct GrammarRule {
    pub name: String,
    pub lhs_cat: String,
    pub lhs_features: FeatureList,
    /// Logical-form variable (from the right-hand side) marking the head
    /// child whose features the left-hand side inherits.
    pub head: Option<String>,
    pub lhs_lf: Lf,
    pub rhs: Vec<RhsTerm>,
}

/// One right-hand-side element of a grammar production.
#[derive(Clone, PartialEq, Debug)]
pub enum RhsTerm {
    Terminal(String),
    NonTerminal {
        cat: String,
        features: FeatureList,
        lf_var: Option<String>,
    },
}

/// An inference rewrite `K1, ..., Kn: L0 → L1`.
#[derive(Clone, PartialEq, Debug)]
pub struct InferenceRule {
    pub name: String,
    pub preconditions: Vec<Lf>,
    pub lhs: Lf,
    pub rhs: Lf,
}

/// A resolution rewrite `K1, ..., Kn: f(args) → t1 t2 ...`.
#[derive(Clone, PartialEq, Debug)]
pub struct ResolutionRule {
    pub name: String,
    /// Function name of the left-hand-side call.
    pub head: String,
    pub preconditions: Vec<Lf>,
    pub lhs: Lf,
    pub rhs: Vec<Lf>,
}

/// A complete rule set.
#[derive(Clone, PartialEq, Debug)]
pub struct RuleSet {
    pub name: String,
    pub version: u32,
    pub kind: ExampleKind,
    /// Start category for derivations.
    pub start: String,
    /// Resolution function applied to the final logical form.
    pub resolve_fn: String,
    pub grammar: Vec<GrammarRule>,
    pub inference: Vec<InferenceRule>,
    /// Ground facts, named by their printed form.
    pub knowledge: Vec<(String, Lf)>,
    pub resolution: Vec<ResolutionRule>,
}

impl RuleSet {
    /// Parse the text format.
    pub fn parse(text: &str) -> Result<RuleSet> {
        Parser::new(text).parse_ruleset()
    }

    /// Render back to the text format; `parse` of the result reproduces the
    /// rule set.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kind = match self.kind {
            ExampleKind::Scan => "scan",
            ExampleKind::Cfq => "cfq",
        };
        let _ = writeln!(out, "ruleset: {}", self.name);
        let _ = writeln!(out, "version: {}", self.version);
        let _ = writeln!(out, "kind: {kind}");
        let _ = writeln!(out, "start: {}", self.start);
        let _ = writeln!(out, "resolve: {}", self.resolve_fn);
        for r in &self.grammar {
            let _ = writeln!(out, "\n[grammar] {}", r.name);
            let _ = writeln!(out, "{}", print_grammar_rule(r));
        }
        for r in &self.inference {
            let _ = writeln!(out, "\n[inference] {}", r.name);
            let mut line = String::new();
            if !r.preconditions.is_empty() {
                line.push_str(&join_terms(&r.preconditions, ", "));
                line.push_str(": ");
            }
            let _ = write!(line, "{} → {}", r.lhs, r.rhs);
            let _ = writeln!(out, "{line}");
        }
        for (_, fact) in &self.knowledge {
            let _ = writeln!(out, "\n[knowledge]\n→ {fact}");
        }
        for r in &self.resolution {
            let _ = writeln!(out, "\n[resolution] {}", r.name);
            let mut line = String::new();
            if !r.preconditions.is_empty() {
                line.push_str(&join_terms(&r.preconditions, ", "));
                line.push_str(": ");
            }
            let _ = write!(line, "{} → {}", r.lhs, join_terms(&r.rhs, " "));
            let _ = writeln!(out, "{line}");
        }
        out
    }

    /// Structural checks: defined start category and resolve function,
    /// unique rule names, and no undefined right-hand-side categories.
    pub fn validate(&self) -> Result<()> {
        if self.grammar.is_empty() {
            return Err(Error::Config("ruleset has no grammar rules".into()));
        }
        let cats: BTreeSet<&str> = self.grammar.iter().map(|r| r.lhs_cat.as_str()).collect();
        if !cats.contains(self.start.as_str()) {
            return Err(Error::Config(format!(
                "start category {} has no grammar rules",
                self.start
            )));
        }
        if !self
            .resolution
            .iter()
            .any(|r| r.head == self.resolve_fn)
        {
            return Err(Error::Config(format!(
                "resolve function {} has no resolution rules",
                self.resolve_fn
            )));
        }
        let mut names: BTreeSet<&str> = BTreeSet::new();
        for name in self
            .grammar
            .iter()
            .map(|r| r.name.as_str())
            .chain(self.inference.iter().map(|r| r.name.as_str()))
            .chain(self.resolution.iter().map(|r| r.name.as_str()))
        {
            if !names.insert(name) {
                return Err(Error::Config(format!("duplicate rule name {name}")));
            }
        }
        for rule in &self.grammar {
            for term in &rule.rhs {
                if let RhsTerm::NonTerminal { cat, .. } = term {
                    if !cats.contains(cat.as_str()) {
                        return Err(Error::Config(format!(
                            "rule {} references undefined category {cat}",
                            rule.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn join_terms(terms: &[Lf], sep: &str) -> String {
    terms
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

fn print_features(f: &FeatureList) -> String {
    let mut parts = Vec::new();
    for (attr, spec) in &f.0 {
        match spec {
            FSpec::OneOf(vals) => {
                parts.push(format!("{attr}:{}", vals.iter().cloned().collect::<Vec<_>>().join("|")))
            }
            FSpec::NoneOf(vals) => parts.push(format!(
                "-{attr}:{}",
                vals.iter().cloned().collect::<Vec<_>>().join("|")
            )),
            FSpec::Var(v) => parts.push(format!("{attr}:{v}")),
        }
    }
    format!("({})", parts.join(", "))
}

fn print_grammar_rule(r: &GrammarRule) -> String {
    let mut out = r.lhs_cat.clone();
    if !r.lhs_features.is_empty() {
        out.push_str(&print_features(&r.lhs_features));
    }
    if let Some(h) = &r.head {
        let _ = write!(out, "[{h}]");
    }
    let _ = write!(out, "/{}", r.lhs_lf);
    out.push_str(" →");
    for term in &r.rhs {
        out.push(' ');
        match term {
            RhsTerm::Terminal(t) => {
                let _ = write!(out, "'{t}'");
            }
            RhsTerm::NonTerminal { cat, features, lf_var } => {
                out.push_str(cat);
                if !features.is_empty() {
                    out.push_str(&print_features(features));
                }
                if let Some(v) = lf_var {
                    let _ = write!(out, "/{v}");
                }
            }
        }
    }
    out
}

/// Built-in SCAN rule set (commands over walk/look/run/jump/turn).
pub fn builtin_scan() -> RuleSet {
    RuleSet::parse(include_str!("../rulesets/scan.ruleset"))
        .expect("embedded scan ruleset parses")
}

/// Built-in miniature question-to-SPARQL rule set.
pub fn builtin_mini_cfq() -> RuleSet {
    RuleSet::parse(include_str!("../rulesets/mini_cfq.ruleset"))
        .expect("embedded mini_cfq ruleset parses")
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Var(String),
    Quoted(String),
    Arrow,
    Meet,
    Exists,
    Top,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Pipe,
    Slash,
    Minus,
    Dot,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let col_of = |byte: usize| text[..byte].chars().count() + 1;
    while i < chars.len() {
        let (byte, c) = chars[i];
        let col = col_of(byte);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, col });
        match c {
            c if c.is_whitespace() => {
                i += 1;
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        Some(&(_, '\'')) => {
                            i += 1;
                            break;
                        }
                        Some(&(_, ch)) => {
                            s.push(ch);
                            i += 1;
                        }
                        None => {
                            return Err(Error::Parse {
                                line,
                                col,
                                msg: "unterminated string literal".into(),
                            })
                        }
                    }
                }
                push(&mut out, Tok::Quoted(s));
            }
            '$' | '_' => {
                let mut s = String::from(c);
                i += 1;
                while let Some(&(_, ch)) = chars.get(i) {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        s.push(ch);
                        i += 1;
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Var(s));
            }
            c if c.is_ascii_alphanumeric() => {
                let mut s = String::new();
                while let Some(&(_, ch)) = chars.get(i) {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        s.push(ch);
                        i += 1;
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Ident(s));
            }
            '→' => {
                push(&mut out, Tok::Arrow);
                i += 1;
            }
            '⊓' => {
                push(&mut out, Tok::Meet);
                i += 1;
            }
            '∃' => {
                push(&mut out, Tok::Exists);
                i += 1;
            }
            '⊤' => {
                push(&mut out, Tok::Top);
                i += 1;
            }
            '(' => {
                push(&mut out, Tok::LParen);
                i += 1;
            }
            ')' => {
                push(&mut out, Tok::RParen);
                i += 1;
            }
            '[' => {
                push(&mut out, Tok::LBracket);
                i += 1;
            }
            ']' => {
                push(&mut out, Tok::RBracket);
                i += 1;
            }
            ',' => {
                push(&mut out, Tok::Comma);
                i += 1;
            }
            ':' => {
                push(&mut out, Tok::Colon);
                i += 1;
            }
            '|' => {
                push(&mut out, Tok::Pipe);
                i += 1;
            }
            '/' => {
                push(&mut out, Tok::Slash);
                i += 1;
            }
            '-' => {
                push(&mut out, Tok::Minus);
                i += 1;
            }
            '.' => {
                push(&mut out, Tok::Dot);
                i += 1;
            }
            other => {
                return Err(Error::Parse {
                    line,
                    col,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

/// Token-stream cursor for one rule body.
struct Cursor {
    toks: Vec<Token>,
    i: usize,
    line: usize,
}

impl Cursor {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<()> {
        if self.eat(want) {
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn err(&self, msg: String) -> Error {
        let (line, col) = self
            .toks
            .get(self.i.min(self.toks.len().saturating_sub(1)))
            .map(|t| (t.line, t.col))
            .unwrap_or((self.line, 1));
        Error::Parse { line, col, msg }
    }

    /// True when a `:` appears at paren depth 0 before the arrow —
    /// indicating a precondition list.
    fn has_preconditions(&self) -> bool {
        let mut depth = 0i32;
        for t in &self.toks[self.i..] {
            match t.tok {
                Tok::LParen => depth += 1,
                Tok::RParen => depth -= 1,
                Tok::Colon if depth == 0 => return true,
                Tok::Arrow if depth == 0 => return false,
                _ => {}
            }
        }
        false
    }
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        Parser { lines, pos: 0 }
    }

    fn parse_ruleset(&mut self) -> Result<RuleSet> {
        let mut headers: HashMap<String, String> = HashMap::new();
        while let Some(&(line, text)) = self.lines.get(self.pos) {
            let t = text.trim();
            if t.starts_with('[') {
                break;
            }
            let (key, value) = t.split_once(':').ok_or(Error::Parse {
                line,
                col: 1,
                msg: "expected `key: value` header".into(),
            })?;
            headers.insert(key.trim().to_string(), value.trim().to_string());
            self.pos += 1;
        }
        let get = |k: &str| -> Result<String> {
            headers
                .get(k)
                .cloned()
                .ok_or_else(|| Error::Config(format!("missing ruleset header `{k}:`")))
        };
        let kind = match get("kind")?.as_str() {
            "scan" => ExampleKind::Scan,
            "cfq" => ExampleKind::Cfq,
            other => return Err(Error::Config(format!("unknown ruleset kind {other}"))),
        };
        let version: u32 = get("version")?
            .parse()
            .map_err(|_| Error::Config("version must be an integer".into()))?;
        let mut ruleset = RuleSet {
            name: get("ruleset")?,
            version,
            kind,
            start: get("start")?,
            resolve_fn: get("resolve")?,
            grammar: Vec::new(),
            inference: Vec::new(),
            knowledge: Vec::new(),
            resolution: Vec::new(),
        };
        while let Some(&(line, text)) = self.lines.get(self.pos) {
            let t = text.trim();
            let (tag, name) = t
                .strip_prefix('[')
                .and_then(|rest| rest.split_once(']'))
                .ok_or(Error::Parse {
                    line,
                    col: 1,
                    msg: "expected `[grammar|inference|knowledge|resolution] NAME`".into(),
                })?;
            let name = name.trim().to_string();
            self.pos += 1;
            let mut cursor = self.body_cursor(line)?;
            match tag {
                "grammar" => ruleset.grammar.push(parse_grammar_rule(name, &mut cursor)?),
                "inference" => ruleset
                    .inference
                    .push(parse_inference_rule(name, &mut cursor)?),
                "knowledge" => {
                    cursor.expect(&Tok::Arrow, "`→` before knowledge fact")?;
                    let fact = parse_conj(&mut cursor)?.normalize();
                    expect_end(&cursor)?;
                    ruleset.knowledge.push((fact.to_string(), fact));
                }
                "resolution" => ruleset
                    .resolution
                    .push(parse_resolution_rule(name, &mut cursor)?),
                other => {
                    return Err(Error::Parse {
                        line,
                        col: 1,
                        msg: format!("unknown block tag [{other}]"),
                    })
                }
            }
        }
        ruleset.validate()?;
        Ok(ruleset)
    }

    /// Collect body lines (until the next `[` block or EOF) into one token
    /// stream, so long rules may wrap.
    fn body_cursor(&mut self, header_line: usize) -> Result<Cursor> {
        let mut toks = Vec::new();
        let mut saw_any = false;
        while let Some(&(line, text)) = self.lines.get(self.pos) {
            if text.trim().starts_with('[') {
                break;
            }
            toks.extend(tokenize(text, line)?);
            saw_any = true;
            self.pos += 1;
        }
        if !saw_any {
            return Err(Error::Parse {
                line: header_line,
                col: 1,
                msg: "rule block has no body".into(),
            });
        }
        Ok(Cursor { toks, i: 0, line: header_line })
    }
}

fn expect_end(cursor: &Cursor) -> Result<()> {
    if cursor.i == cursor.toks.len() {
        Ok(())
    } else {
        Err(cursor.err("unexpected trailing tokens".into()))
    }
}

fn parse_grammar_rule(name: String, c: &mut Cursor) -> Result<GrammarRule> {
    let lhs_cat = match c.next() {
        Some(Token { tok: Tok::Ident(s), .. }) => s,
        _ => return Err(c.err("expected left-hand-side category".into())),
    };
    let lhs_features = if c.peek() == Some(&Tok::LParen) {
        parse_features(c)?
    } else {
        FeatureList::new()
    };
    let head = if c.eat(&Tok::LBracket) {
        let v = match c.next() {
            Some(Token { tok: Tok::Var(v), .. }) => v,
            _ => return Err(c.err("expected head variable".into())),
        };
        c.expect(&Tok::RBracket, "`]` after head variable")?;
        Some(v)
    } else {
        None
    };
    c.expect(&Tok::Slash, "`/` before logical form")?;
    let lhs_lf = parse_conj(c)?.normalize();
    c.expect(&Tok::Arrow, "`→` between rule sides")?;
    let mut rhs = Vec::new();
    while let Some(tok) = c.peek() {
        match tok.clone() {
            Tok::Quoted(s) => {
                c.next();
                rhs.push(RhsTerm::Terminal(s));
            }
            Tok::Ident(cat) => {
                c.next();
                let features = if c.peek() == Some(&Tok::LParen) {
                    parse_features(c)?
                } else {
                    FeatureList::new()
                };
                let lf_var = if c.eat(&Tok::Slash) {
                    match c.next() {
                        Some(Token { tok: Tok::Var(v), .. }) => Some(v),
                        _ => return Err(c.err("expected logical-form variable".into())),
                    }
                } else {
                    None
                };
                rhs.push(RhsTerm::NonTerminal { cat, features, lf_var });
            }
            _ => return Err(c.err("expected terminal or category".into())),
        }
    }
    if rhs.is_empty() {
        return Err(c.err("grammar rule has empty right-hand side".into()));
    }
    Ok(GrammarRule { name, lhs_cat, lhs_features, head, lhs_lf, rhs })
}

fn parse_inference_rule(name: String, c: &mut Cursor) -> Result<InferenceRule> {
    let preconditions = parse_preconditions(c)?;
    let lhs = parse_conj(c)?.normalize();
    c.expect(&Tok::Arrow, "`→` between rule sides")?;
    let rhs = parse_conj(c)?.normalize();
    expect_end(c)?;
    Ok(InferenceRule { name, preconditions, lhs, rhs })
}

fn parse_resolution_rule(name: String, c: &mut Cursor) -> Result<ResolutionRule> {
    let preconditions = parse_preconditions(c)?;
    let lhs = parse_unary(c)?.normalize();
    let head = match &lhs {
        Lf::Call(f, _) => f.clone(),
        _ => return Err(c.err("resolution left-hand side must be a call".into())),
    };
    c.expect(&Tok::Arrow, "`→` between rule sides")?;
    let mut rhs = Vec::new();
    while c.peek().is_some() {
        rhs.push(parse_unary(c)?.normalize());
    }
    if rhs.is_empty() {
        return Err(c.err("resolution rule has empty right-hand side".into()));
    }
    Ok(ResolutionRule { name, head, preconditions, lhs, rhs })
}

fn parse_preconditions(c: &mut Cursor) -> Result<Vec<Lf>> {
    if !c.has_preconditions() {
        return Ok(Vec::new());
    }
    let mut pres = Vec::new();
    loop {
        pres.push(parse_unary(c)?.normalize());
        if c.eat(&Tok::Comma) {
            continue;
        }
        c.expect(&Tok::Colon, "`:` after preconditions")?;
        break;
    }
    Ok(pres)
}

fn parse_features(c: &mut Cursor) -> Result<FeatureList> {
    c.expect(&Tok::LParen, "`(`")?;
    let mut features = FeatureList::new();
    if c.eat(&Tok::RParen) {
        return Ok(features);
    }
    loop {
        let negated = c.eat(&Tok::Minus);
        let attr = match c.next() {
            Some(Token { tok: Tok::Ident(s), .. }) => s,
            _ => return Err(c.err("expected attribute name".into())),
        };
        c.expect(&Tok::Colon, "`:` after attribute")?;
        let spec = parse_feature_value(c, negated)?;
        features.insert(attr, spec);
        if c.eat(&Tok::Comma) {
            continue;
        }
        c.expect(&Tok::RParen, "`)` after feature list")?;
        break;
    }
    Ok(features)
}

fn parse_feature_value(c: &mut Cursor, negated: bool) -> Result<FSpec> {
    let mut values = Vec::new();
    loop {
        match c.next() {
            Some(Token { tok: Tok::Ident(s), .. }) => values.push(s),
            // `$`-prefixed tokens are feature variables; other `_`-prefixed
            // tokens (notably the `_none_` marker) are ordinary values.
            Some(Token { tok: Tok::Var(v), .. }) if v.starts_with('$') => {
                if negated || !values.is_empty() || c.peek() == Some(&Tok::Pipe) {
                    return Err(c.err("variable cannot appear in a value disjunction".into()));
                }
                return Ok(FSpec::Var(v));
            }
            Some(Token { tok: Tok::Var(v), .. }) => values.push(v),
            _ => return Err(c.err("expected feature value".into())),
        }
        if !c.eat(&Tok::Pipe) {
            break;
        }
    }
    Ok(if negated {
        FSpec::none_of(values)
    } else {
        FSpec::one_of(values)
    })
}

fn parse_conj(c: &mut Cursor) -> Result<Lf> {
    let mut parts = vec![parse_unary(c)?];
    while c.eat(&Tok::Meet) {
        parts.push(parse_unary(c)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Lf::Conj(parts)
    })
}

fn parse_unary(c: &mut Cursor) -> Result<Lf> {
    if c.eat(&Tok::Exists) {
        let role = parse_atom(c)?;
        c.expect(&Tok::Dot, "`.` after role")?;
        let restriction = parse_unary(c)?;
        return Ok(Lf::Exists(Box::new(role), Box::new(restriction)));
    }
    parse_atom(c)
}

fn parse_atom(c: &mut Cursor) -> Result<Lf> {
    match c.next() {
        Some(Token { tok: Tok::Top, .. }) => Ok(Lf::Top),
        Some(Token { tok: Tok::Quoted(s), .. }) => Ok(Lf::Str(s)),
        Some(Token { tok: Tok::Var(v), .. }) => Ok(Lf::Var(v)),
        Some(Token { tok: Tok::LParen, .. }) => {
            let inner = parse_conj(c)?;
            c.expect(&Tok::RParen, "`)`")?;
            Ok(inner)
        }
        Some(Token { tok: Tok::Ident(name), .. }) => {
            if c.peek() != Some(&Tok::LParen) {
                return Ok(Lf::Concept(name));
            }
            c.next();
            let mut args = Vec::new();
            if !c.eat(&Tok::RParen) {
                loop {
                    args.push(parse_conj(c)?);
                    if c.eat(&Tok::Comma) {
                        continue;
                    }
                    c.expect(&Tok::RParen, "`)` after arguments")?;
                    break;
                }
            }
            build_applied(name, args, c)
        }
        _ => Err(c.err("expected term".into())),
    }
}

fn build_applied(name: String, mut args: Vec<Lf>, c: &Cursor) -> Result<Lf> {
    let arity = |want: usize, args: &[Lf]| -> Result<()> {
        if args.len() == want {
            Ok(())
        } else {
            Err(c.err(format!("{name} expects {want} arguments, got {}", args.len())))
        }
    };
    Ok(match name.as_str() {
        "RolePair" => {
            arity(2, &args)?;
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            Lf::RolePair(Box::new(a), Box::new(b))
        }
        "And" => {
            arity(2, &args)?;
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            Lf::And(Box::new(a), Box::new(b))
        }
        "PredicateWithBoundRolePairs" => {
            arity(2, &args)?;
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            Lf::PredicateWithBoundRolePairs(Box::new(a), Box::new(b))
        }
        "ProjectedRole" => {
            arity(2, &args)?;
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            Lf::ProjectedRole(Box::new(a), Box::new(b))
        }
        "TypeInstance" => {
            arity(2, &args)?;
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            Lf::TypeInstance(Box::new(a), Box::new(b))
        }
        "DropDependency" => {
            arity(1, &args)?;
            Lf::DropDependency(Box::new(args.pop().unwrap()))
        }
        "Entity" => {
            arity(1, &args)?;
            Lf::Entity(Box::new(args.pop().unwrap()))
        }
        "new_var" => {
            arity(1, &args)?;
            match args.pop().unwrap() {
                Lf::Var(v) => Lf::NewVar(v),
                Lf::Concept(v) => Lf::NewVar(v),
                _ => return Err(c.err("new_var expects a variable name".into())),
            }
        }
        _ => Lf::Call(name, args),
    })
}
