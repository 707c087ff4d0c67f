//! Concrete syntax for models and HML formulas.
//!
//! Model files are sequences of `Name = term ;` definitions plus the
//! directives `root Name ;` and `property Name expected true|false : formula ;`.
//! `#` starts a line comment. Only the first error is reported.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::hml::HmlFormula;
use crate::terms::{validate_environment, Action, Environment, ProcessTerm, TAU};

/// A positioned parse or validation error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceDiagnostic {
    /// 1-based line.
    pub line: usize,
    /// 1-based column, counted in characters.
    pub column: usize,
    pub message: String,
    /// The offending lexeme (empty at end of input).
    pub snippet: String,
}

impl fmt::Display for SourceDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.snippet.is_empty() {
            write!(f, " (at `{}`)", self.snippet)?;
        }
        Ok(())
    }
}

impl std::error::Error for SourceDiagnostic {}

/// A named HML property declared in a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct Property {
    pub name: String,
    pub formula: HmlFormula,
    /// `None` when the file declares no expectation.
    pub expected: Option<bool>,
}

/// A parsed and validated model file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub env: Environment,
    pub properties: Vec<Property>,
}

impl ModelFile {
    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// Renders back to model-file text.
    pub fn render(&self) -> String {
        let mut out = self.env.render();
        for p in &self.properties {
            let expected = match p.expected {
                Some(true) => " expected true",
                Some(false) => " expected false",
                None => "",
            };
            out.push_str(&format!("property {}{expected} : {};\n", p.name, p.formula));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    Dot,
    Plus,
    ParBar,
    LBracket,
    RBracket,
    LDoubleBracket,
    RDoubleBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Backslash,
    Comma,
    Semi,
    Equals,
    Colon,
    Lt,
    Gt,
    LtLt,
    GtGt,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.spelling()),
        }
    }

    fn spelling(&self) -> &str {
        match self {
            Tok::Ident(s) => s,
            Tok::Zero => "0",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::ParBar => "||",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LDoubleBracket => "[[",
            Tok::RDoubleBracket => "]]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Backslash => "\\",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Equals => "=",
            Tok::Colon => ":",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::LtLt => "<<",
            Tok::GtGt => ">>",
            Tok::Eof => "",
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, SourceDiagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut column) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                column += 1;
            }
            continue;
        }
        let start_col = column;
        let next = chars.get(i + 1).copied();
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let lexeme: String = chars[i..j].iter().collect();
            if lexeme != "0" {
                return Err(SourceDiagnostic {
                    line,
                    column,
                    message: "identifiers must start with a letter or `_`; the only numeral is `0`"
                        .into(),
                    snippet: lexeme,
                });
            }
            (Tok::Zero, 1)
        } else {
            match (c, next) {
                ('|', Some('|')) => (Tok::ParBar, 2),
                ('[', Some('[')) => (Tok::LDoubleBracket, 2),
                (']', Some(']')) => (Tok::RDoubleBracket, 2),
                ('<', Some('<')) => (Tok::LtLt, 2),
                ('>', Some('>')) => (Tok::GtGt, 2),
                ('.', _) => (Tok::Dot, 1),
                ('+', _) => (Tok::Plus, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('\\', _) => (Tok::Backslash, 1),
                (',', _) => (Tok::Comma, 1),
                (';', _) => (Tok::Semi, 1),
                ('=', _) => (Tok::Equals, 1),
                (':', _) => (Tok::Colon, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                _ => {
                    return Err(SourceDiagnostic {
                        line,
                        column,
                        message: format!("unexpected character `{c}`"),
                        snippet: c.to_string(),
                    })
                }
            }
        };
        tokens.push(Token { tok, line, column: start_col });
        i += len;
        column += len;
    }
    // End-of-input diagnostics point just past the last character of the last line.
    tokens.push(Token { tok: Tok::Eof, line, column });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SourceDiagnostic>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser { tokens: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error_at(&self, token: &Token, message: impl Into<String>) -> SourceDiagnostic {
        SourceDiagnostic {
            line: token.line,
            column: token.column,
            message: message.into(),
            snippet: token.tok.spelling().to_string(),
        }
    }

    fn error(&self, message: impl Into<String>) -> SourceDiagnostic {
        self.error_at(self.current(), message)
    }

    fn expect(&mut self, expected: Tok) -> PResult<Token> {
        if *self.peek() == expected {
            Ok(self.advance())
        } else {
            Err(self.error(format!(
                "expected `{}`, found {}",
                expected.spelling(),
                self.peek().describe()
            )))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Token)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let tok = self.advance();
                Ok((name, tok))
            }
            other => Err(self.error(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn expect_end(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {} after end of expression", self.peek().describe())))
        }
    }

    // term := choice ; choice := par { "+" par }
    fn term(&mut self) -> PResult<ProcessTerm> {
        let mut alternatives = vec![self.par()?];
        while *self.peek() == Tok::Plus {
            self.advance();
            alternatives.push(self.par()?);
        }
        Ok(ProcessTerm::choice_of(alternatives))
    }

    // par := prefix { "||" "[" namelist "]" prefix }
    fn par(&mut self) -> PResult<ProcessTerm> {
        let mut left = self.prefix()?;
        while *self.peek() == Tok::ParBar {
            self.advance();
            self.expect(Tok::LBracket)?;
            let sync = self.name_list(Tok::RBracket, "synchronization set")?;
            let right = self.prefix()?;
            left = ProcessTerm::parallel(left, sync, right);
        }
        Ok(left)
    }

    // prefix := IDENT "." prefix | atom
    fn prefix(&mut self) -> PResult<ProcessTerm> {
        if let Tok::Ident(name) = self.peek().clone() {
            if *self.peek_at(1) == Tok::Dot {
                let tok = self.advance();
                self.advance();
                let action = if name == TAU {
                    Action::Tau
                } else {
                    Action::observable(&name).map_err(|e| self.error_at(&tok, e.to_string()))?
                };
                let cont = self.prefix()?;
                return Ok(ProcessTerm::prefix(action, cont));
            }
        }
        self.atom()
    }

    // atom := "0" | IDENT | "(" term ")" | atom "\" "{" namelist "}"
    fn atom(&mut self) -> PResult<ProcessTerm> {
        let mut base = match self.peek().clone() {
            Tok::Zero => {
                self.advance();
                ProcessTerm::Nil
            }
            Tok::Ident(name) => {
                if name == TAU {
                    return Err(self.error("`tau` is reserved and cannot name a process"));
                }
                self.advance();
                ProcessTerm::Const(name)
            }
            Tok::LParen => {
                self.advance();
                let inner = self.term()?;
                self.expect(Tok::RParen)?;
                inner
            }
            other => {
                return Err(self.error(format!("expected a process term, found {}", other.describe())))
            }
        };
        while *self.peek() == Tok::Backslash {
            self.advance();
            self.expect(Tok::LBrace)?;
            let hidden = self.name_list(Tok::RBrace, "hiding set")?;
            base = ProcessTerm::hide(base, hidden);
        }
        Ok(base)
    }

    fn name_list(&mut self, close: Tok, what: &str) -> PResult<Vec<String>> {
        let mut names = Vec::new();
        if *self.peek() == close {
            self.advance();
            return Ok(names);
        }
        loop {
            let (name, tok) = self.expect_ident(&format!("an action name in {what}"))?;
            if name == TAU {
                return Err(self.error_at(&tok, format!("`tau` cannot appear in a {what}")));
            }
            names.push(name);
            match self.peek() {
                Tok::Comma => {
                    self.advance();
                }
                t if *t == close => {
                    self.advance();
                    return Ok(names);
                }
                other => {
                    return Err(self.error(format!(
                        "expected `,` or `{}` in {what}, found {}",
                        close.spelling(),
                        other.describe()
                    )))
                }
            }
        }
    }

    // or := and { "or" and }
    fn formula(&mut self) -> PResult<HmlFormula> {
        let mut left = self.conjunction()?;
        while self.at_keyword("or") {
            self.advance();
            let right = self.conjunction()?;
            left = HmlFormula::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> PResult<HmlFormula> {
        let mut left = self.unary()?;
        while self.at_keyword("and") {
            self.advance();
            let right = self.unary()?;
            left = HmlFormula::and(left, right);
        }
        Ok(left)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn unary(&mut self) -> PResult<HmlFormula> {
        let close = match self.peek() {
            Tok::Ident(s) if s == "not" => {
                self.advance();
                return Ok(HmlFormula::not(self.unary()?));
            }
            Tok::Ident(s) if s == "tt" => {
                self.advance();
                return Ok(HmlFormula::True);
            }
            Tok::Ident(s) if s == "ff" => {
                self.advance();
                return Ok(HmlFormula::False);
            }
            Tok::LParen => {
                self.advance();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                return Ok(inner);
            }
            Tok::Lt => Tok::Gt,
            Tok::LBracket => Tok::RBracket,
            Tok::LtLt => Tok::GtGt,
            Tok::LDoubleBracket => Tok::RDoubleBracket,
            other => {
                return Err(self.error(format!("expected a formula, found {}", other.describe())))
            }
        };
        let open = self.advance().tok;
        let (name, tok) = self.expect_ident("an action name")?;
        let action = Action::from_label(&name).map_err(|e| self.error_at(&tok, e.to_string()))?;
        self.expect(close)?;
        let body = self.unary()?;
        Ok(match open {
            Tok::Lt => HmlFormula::Diamond(action, Arc::new(body)),
            Tok::LBracket => HmlFormula::Box(action, Arc::new(body)),
            Tok::LtLt => HmlFormula::WeakDiamond(action, Arc::new(body)),
            _ => HmlFormula::WeakBox(action, Arc::new(body)),
        })
    }
}

/// Parses a single process term.
pub fn parse_term(text: &str) -> Result<ProcessTerm, SourceDiagnostic> {
    let mut p = Parser::new(text)?;
    let term = p.term()?;
    p.expect_end()?;
    Ok(term)
}

/// Parses a single HML formula.
pub fn parse_formula(text: &str) -> Result<HmlFormula, SourceDiagnostic> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.expect_end()?;
    Ok(f)
}

/// Parses and validates a model file.
pub fn parse_model_file(text: &str) -> Result<ModelFile, SourceDiagnostic> {
    let mut p = Parser::new(text)?;
    let mut defs: IndexMap<String, ProcessTerm> = IndexMap::new();
    let mut def_sites: IndexMap<String, Token> = IndexMap::new();
    let mut root: Option<(String, Token)> = None;
    let mut properties = Vec::new();
    let mut property_names = HashSet::new();

    while *p.peek() != Tok::Eof {
        let is_directive = |kw: &str, p: &Parser| p.at_keyword(kw) && *p.peek_at(1) != Tok::Equals;
        if is_directive("root", &p) {
            let kw = p.advance();
            let (name, tok) = p.expect_ident("a process name after `root`")?;
            p.expect(Tok::Semi)?;
            if root.is_some() {
                return Err(p.error_at(&kw, "duplicate `root` directive"));
            }
            root = Some((name, tok));
        } else if is_directive("property", &p) {
            p.advance();
            let (name, tok) = p.expect_ident("a property name")?;
            if !property_names.insert(name.clone()) {
                return Err(p.error_at(&tok, format!("duplicate property `{name}`")));
            }
            let expected = if p.at_keyword("expected") {
                p.advance();
                match p.peek() {
                    Tok::Ident(s) if s == "true" => Some(true),
                    Tok::Ident(s) if s == "false" => Some(false),
                    other => {
                        return Err(p.error(format!(
                            "expected `true` or `false`, found {}",
                            other.describe()
                        )))
                    }
                }
                .inspect(|_| {
                    p.advance();
                })
            } else {
                None
            };
            p.expect(Tok::Colon)?;
            let formula = p.formula()?;
            p.expect(Tok::Semi)?;
            properties.push(Property { name, formula, expected });
        } else {
            let (name, tok) = p.expect_ident("a definition or directive")?;
            if name == TAU {
                return Err(p.error_at(&tok, "`tau` is reserved and cannot name a process"));
            }
            if defs.contains_key(&name) {
                return Err(p.error_at(&tok, format!("duplicate definition of `{name}`")));
            }
            p.expect(Tok::Equals)?;
            let body = p.term()?;
            p.expect(Tok::Semi)?;
            defs.insert(name.clone(), body);
            def_sites.insert(name, tok);
        }
    }

    let eof = p.current().clone();
    let root_name = match (&root, defs.keys().next()) {
        (Some((name, tok)), _) => {
            if !defs.contains_key(name) {
                return Err(p.error_at(tok, format!("root `{name}` is not defined")));
            }
            name.clone()
        }
        (None, Some(first)) => first.clone(),
        (None, None) => {
            return Err(p.error_at(&eof, "missing root: the file defines no processes"));
        }
    };
    let env = Environment::new(defs, root_name);
    if let Some(diag) = validate_environment(&env).into_iter().next() {
        let site = def_sites.get(diag.definition()).unwrap_or(&eof);
        return Err(p.error_at(site, diag.to_string()));
    }
    Ok(ModelFile { env, properties })
}
