//! Aldebaran `.aut` interchange and Graphviz DOT export.

use std::fmt::Write as _;

use crate::equivalence::Partition;
use crate::semantics::Lts;
use crate::terms::{Action, TAU};

/// Label used for the internal action in `.aut` files.
pub const AUT_TAU: &str = "i";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("observable action `i` would be read back as the internal action")]
    ReservedLabel,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> AutError {
    AutError::Syntax { line, column, message: message.into() }
}

/// Writes `lts` in `.aut` format. State 0 is the initial state.
pub fn write_aut(lts: &Lts) -> Result<String, AutError> {
    let mut out = String::new();
    writeln!(out, "des (0, {}, {})", lts.transition_count(), lts.state_count()).unwrap();
    for t in lts.transitions() {
        let label = match t.action {
            Action::Tau => AUT_TAU,
            Action::Observable(name) if name == AUT_TAU => return Err(AutError::ReservedLabel),
            Action::Observable(name) => name.as_str(),
        };
        writeln!(out, "({}, \"{}\", {})", t.source, label, t.target).unwrap();
    }
    Ok(out)
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Cursor { chars: text.char_indices().collect(), pos: 0, line, text }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn error(&self, message: impl Into<String>) -> AutError {
        syntax(self.line, self.column(), message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<(), AutError> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some(&(_, got)) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(&(_, got)) => Err(self.error(format!("expected `{c}`, found `{got}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of line"))),
        }
    }

    fn number(&mut self) -> Result<usize, AutError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        let from = self.chars[start].0;
        let to = self.chars.get(self.pos).map_or(self.text.len(), |c| c.0);
        self.text[from..to].parse().map_err(|_| syntax(self.line, start + 1, "number too large"))
    }

    fn keyword(&mut self, word: &str) -> Result<(), AutError> {
        self.skip_ws();
        for c in word.chars() {
            match self.chars.get(self.pos) {
                Some(&(_, got)) if got == c => self.pos += 1,
                _ => return Err(self.error(format!("expected `{word}`"))),
            }
        }
        Ok(())
    }

    fn label(&mut self) -> Result<(String, usize), AutError> {
        self.skip_ws();
        let column = self.column();
        if self.chars.get(self.pos).map(|c| c.1) == Some('"') {
            self.pos += 1;
            let mut label = String::new();
            loop {
                match self.chars.get(self.pos) {
                    Some(&(_, '"')) => {
                        self.pos += 1;
                        return Ok((label, column));
                    }
                    Some(&(_, c)) => {
                        label.push(c);
                        self.pos += 1;
                    }
                    None => return Err(self.error("unterminated label")),
                }
            }
        }
        let mut label = String::new();
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c == ',' || c.is_whitespace() {
                break;
            }
            label.push(c);
            self.pos += 1;
        }
        if label.is_empty() {
            return Err(self.error("expected a label"));
        }
        Ok((label, column))
    }

    fn end(&mut self) -> Result<(), AutError> {
        self.skip_ws();
        if self.pos < self.chars.len() {
            return Err(self.error("unexpected text after transition"));
        }
        Ok(())
    }
}

/// Reads a `.aut` file. Labels `i` and `tau` become the internal action.
///
/// States are renumbered so that the declared initial state becomes state 0
/// (it is swapped with the old state 0).
pub fn parse_aut(text: &str) -> Result<Lts, AutError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let Some((hline, header)) = lines.next() else {
        return Err(syntax(1, 1, "missing `des` header"));
    };
    let mut c = Cursor::new(hline, header);
    c.keyword("des")?;
    c.expect('(')?;
    let initial = c.number()?;
    c.expect(',')?;
    let declared_transitions = c.number()?;
    c.expect(',')?;
    let states = c.number()?;
    c.expect(')')?;
    c.end()?;
    if states == 0 {
        return Err(syntax(hline, 1, "an LTS needs at least one state"));
    }
    if initial >= states {
        return Err(syntax(hline, 1, format!("initial state {initial} out of range")));
    }
    let renumber = |s: usize| {
        if s == initial {
            0
        } else if s == 0 {
            initial
        } else {
            s
        }
    };

    let mut transitions = Vec::new();
    let mut count = 0;
    for (line, body) in lines {
        let mut c = Cursor::new(line, body);
        c.expect('(')?;
        c.skip_ws();
        let src_col = c.column();
        let src = c.number()?;
        c.expect(',')?;
        let (label, label_col) = c.label()?;
        c.expect(',')?;
        c.skip_ws();
        let dst_col = c.column();
        let dst = c.number()?;
        c.expect(')')?;
        c.end()?;
        for (s, col) in [(src, src_col), (dst, dst_col)] {
            if s >= states {
                return Err(syntax(line, col, format!("state {s} out of range")));
            }
        }
        let action = if label == AUT_TAU || label == TAU {
            Action::Tau
        } else {
            Action::observable(&label)
                .map_err(|e| syntax(line, label_col, e.to_string()))?
        };
        transitions.push((renumber(src), action, renumber(dst)));
        count += 1;
    }
    if count != declared_transitions {
        return Err(syntax(
            hline,
            1,
            format!("header declares {declared_transitions} transitions, file has {count}"),
        ));
    }
    Ok(Lts::new(states, transitions).expect("states checked above"))
}

const PALETTE: [&str; 12] = [
    "#e6e6e6", "#a6a6a6", "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
    "#b3de69", "#fccde5", "#bc80bd", "#ccebc5",
];

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders `lts` as a DOT digraph. A dashed arrow marks each root. With a
/// partition, states in the same block share a fill color.
pub fn write_dot(lts: &Lts, roots: &[usize], partition: Option<&Partition>) -> String {
    write_dot_labelled(lts, roots, partition, &|s| lts.state_label(s))
}

/// Like [`write_dot`] with caller-supplied state names.
pub fn write_dot_labelled(
    lts: &Lts,
    roots: &[usize],
    partition: Option<&Partition>,
    name: &dyn Fn(usize) -> String,
) -> String {
    let mut out = String::from("digraph lts {\n  rankdir=LR;\n  node [shape=circle, style=filled, fillcolor=white];\n");
    for (i, &r) in roots.iter().enumerate() {
        writeln!(out, "  init{i} [shape=point, style=invis];").unwrap();
        writeln!(out, "  init{i} -> s{r} [style=dashed];").unwrap();
    }
    for s in 0..lts.state_count() {
        let label = escape(&name(s));
        match partition {
            Some(p) => {
                let block = p.block_of(s);
                writeln!(
                    out,
                    "  s{s} [label=\"{label}\", fillcolor=\"{}\", tooltip=\"block {block}\"];",
                    PALETTE[block % PALETTE.len()]
                )
                .unwrap();
            }
            None => writeln!(out, "  s{s} [label=\"{label}\"];").unwrap(),
        }
    }
    for t in lts.transitions() {
        writeln!(out, "  s{} -> s{} [label=\"{}\"];", t.source, t.target, escape(t.action.name())).unwrap();
    }
    out.push_str("}\n");
    out
}
