//! Penman notation: recursive-descent parser and deterministic serializer.
//!
//! Accepted dialect: role labels `:[A-Za-z0-9-]+` (any non-delimiter token
//! starting with `:`), concept labels as bare tokens (sense suffixes like
//! `want-01` included), string constants in double quotes, numeric constants
//! bare, and the polarity/mode symbols `-`, `+`, `imperative`, `expressive`,
//! `interrogative` as bare constants. Any other bare edge target is a
//! re-entrant variable reference and must refer to a variable already
//! defined earlier in the text; forward references are rejected.

use thiserror::Error;

use super::{AmrGraph, AmrGraphBuilder, Constant, GraphError, NodeId, NodeRef};

/// Syntax error with the byte offset where it was detected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {position}: {message}")]
pub struct PenmanError {
    pub position: usize,
    pub message: String,
}

impl PenmanError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        PenmanError {
            position,
            message: message.into(),
        }
    }
}

/// Bare tokens that are constants rather than variable references.
const SYMBOL_CONSTANTS: &[&str] = &["-", "+", "imperative", "expressive", "interrogative"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Slash,
    Quoted(String),
    Bare(String),
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the next token with its starting byte offset, or None at EOF.
    fn next(&mut self) -> Result<Option<(usize, Tok)>, PenmanError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        match self.bytes[self.pos] {
            b'(' => {
                self.pos += 1;
                Ok(Some((start, Tok::LParen)))
            }
            b')' => {
                self.pos += 1;
                Ok(Some((start, Tok::RParen)))
            }
            b'/' => {
                self.pos += 1;
                Ok(Some((start, Tok::Slash)))
            }
            b'"' => {
                self.pos += 1;
                let mut out = String::new();
                loop {
                    if self.pos >= self.bytes.len() {
                        return Err(PenmanError::new(start, "unterminated string literal"));
                    }
                    match self.bytes[self.pos] {
                        b'"' => {
                            self.pos += 1;
                            break;
                        }
                        b'\\' => {
                            let Some(escaped) = self.src[self.pos + 1..].chars().next() else {
                                return Err(PenmanError::new(start, "unterminated string literal"));
                            };
                            match escaped {
                                '"' => out.push('"'),
                                '\\' => out.push('\\'),
                                other => {
                                    out.push('\\');
                                    out.push(other);
                                }
                            }
                            self.pos += 1 + escaped.len_utf8();
                        }
                        _ => {
                            // Advance one full UTF-8 character.
                            let ch = self.src[self.pos..].chars().next().unwrap();
                            out.push(ch);
                            self.pos += ch.len_utf8();
                        }
                    }
                }
                Ok(Some((start, Tok::Quoted(out))))
            }
            _ => {
                let rest = &self.src[self.pos..];
                let end = rest
                    .char_indices()
                    .find(|(_, c)| c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"'))
                    .map(|(i, _)| i)
                    .unwrap_or(rest.len());
                self.pos += end;
                Ok(Some((start, Tok::Bare(rest[..end].to_string()))))
            }
        }
    }

    fn peek(&mut self) -> Result<Option<(usize, Tok)>, PenmanError> {
        let save = self.pos;
        let tok = self.next()?;
        self.pos = save;
        Ok(tok)
    }
}

fn is_numeric_token(tok: &str) -> bool {
    let body = tok.strip_prefix('-').or_else(|| tok.strip_prefix('+')).unwrap_or(tok);
    !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.chars().any(|c| c.is_ascii_digit())
        && body.matches('.').count() <= 1
}

fn classify_constant(tok: &str) -> Option<Constant> {
    if SYMBOL_CONSTANTS.contains(&tok) {
        Some(Constant::Symbol(tok.to_string()))
    } else if is_numeric_token(tok) {
        Some(Constant::Number(tok.to_string()))
    } else {
        None
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    builder: AmrGraphBuilder,
}

impl<'a> Parser<'a> {
    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, PenmanError> {
        match self.lexer.next()? {
            Some((pos, tok)) if tok == want => Ok(pos),
            Some((pos, _)) => Err(PenmanError::new(pos, format!("expected {what}"))),
            None => Err(PenmanError::new(
                self.lexer.src.len(),
                format!("unexpected end of input, expected {what}"),
            )),
        }
    }

    /// Parses one `( var / concept :role target ... )` form. The opening
    /// paren has already been consumed.
    fn parse_node(&mut self, open_pos: usize) -> Result<NodeId, PenmanError> {
        let (var_pos, var) = match self.lexer.next()? {
            Some((p, Tok::Bare(v))) if !v.starts_with(':') => (p, v),
            Some((p, _)) => return Err(PenmanError::new(p, "expected variable name")),
            None => {
                return Err(PenmanError::new(
                    self.lexer.src.len(),
                    "unexpected end of input, expected variable name",
                ))
            }
        };
        self.expect(Tok::Slash, "'/' after variable")?;
        let concept = match self.lexer.next()? {
            Some((_, Tok::Bare(c))) if !c.starts_with(':') => c,
            Some((p, _)) => return Err(PenmanError::new(p, "missing concept after '/'")),
            None => {
                return Err(PenmanError::new(
                    self.lexer.src.len(),
                    "missing concept after '/'",
                ))
            }
        };
        let node = self.builder.add_node(&var, &concept).map_err(|e| match e {
            GraphError::DuplicateVariable(v) => {
                PenmanError::new(var_pos, format!("duplicate variable definition `{v}`"))
            }
            other => PenmanError::new(var_pos, other.to_string()),
        })?;
        loop {
            match self.lexer.next()? {
                Some((_, Tok::RParen)) => return Ok(node),
                Some((pos, Tok::Bare(role))) if role.starts_with(':') => {
                    if role.len() < 2 {
                        return Err(PenmanError::new(pos, "empty role label"));
                    }
                    let target = self.parse_target()?;
                    self.builder
                        .add_edge(node, &role, target)
                        .map_err(|e| PenmanError::new(pos, e.to_string()))?;
                }
                Some((pos, _)) => {
                    return Err(PenmanError::new(pos, "expected role or ')'"));
                }
                None => {
                    return Err(PenmanError::new(
                        self.lexer.src.len(),
                        format!("unbalanced parentheses: '(' at byte {open_pos} never closed"),
                    ))
                }
            }
        }
    }

    fn parse_target(&mut self) -> Result<NodeRef, PenmanError> {
        match self.lexer.next()? {
            Some((pos, Tok::LParen)) => Ok(NodeRef::Node(self.parse_node(pos)?)),
            Some((_, Tok::Quoted(s))) => Ok(NodeRef::Constant(Constant::Text(s))),
            Some((pos, Tok::Bare(tok))) => {
                if tok.starts_with(':') {
                    return Err(PenmanError::new(pos, "expected edge target, found role"));
                }
                if let Some(c) = classify_constant(&tok) {
                    return Ok(NodeRef::Constant(c));
                }
                match self.builder.node_by_variable(&tok) {
                    Some(id) => Ok(NodeRef::Node(id)),
                    None => Err(PenmanError::new(
                        pos,
                        format!("reference to undefined variable `{tok}`"),
                    )),
                }
            }
            Some((pos, _)) => Err(PenmanError::new(pos, "expected edge target")),
            None => Err(PenmanError::new(
                self.lexer.src.len(),
                "unexpected end of input, expected edge target",
            )),
        }
    }
}

/// Parses a single Penman s-expression into an [`AmrGraph`]. Surrounding
/// whitespace is tolerated; trailing non-whitespace content is an error.
pub fn parse_penman(text: &str) -> Result<AmrGraph, PenmanError> {
    let mut parser = Parser {
        lexer: Lexer::new(text),
        builder: AmrGraphBuilder::new(),
    };
    let open = parser.expect(Tok::LParen, "'('")?;
    let root = parser.parse_node(open)?;
    parser
        .builder
        .set_root(root)
        .map_err(|e| PenmanError::new(open, e.to_string()))?;
    if let Some((pos, _)) = parser.lexer.peek()? {
        return Err(PenmanError::new(pos, "trailing content after graph"));
    }
    parser
        .builder
        .build()
        .map_err(|e| PenmanError::new(open, e.to_string()))
}

/// Serializes a graph to a single-line Penman string. Each node's full
/// definition appears at its first visit in root-first depth-first order
/// (following edge insertion order); later visits emit the bare variable.
/// The output re-parses to an isomorphic graph.
pub fn serialize_penman(g: &AmrGraph) -> String {
    let adj = g.adjacency();
    let mut visited = vec![false; g.concept_node_count()];
    let mut out = String::new();
    emit(g, &adj, g.root(), &mut visited, &mut out);
    out
}

fn emit(g: &AmrGraph, adj: &[Vec<usize>], node: NodeId, visited: &mut [bool], out: &mut String) {
    visited[node.index()] = true;
    out.push('(');
    out.push_str(g.variable(node));
    out.push_str(" / ");
    out.push_str(g.concept(node));
    for &ei in &adj[node.index()] {
        let e = &g.edges()[ei];
        out.push(' ');
        out.push_str(&e.role);
        out.push(' ');
        match &e.target {
            NodeRef::Constant(c) => out.push_str(&c.to_token()),
            NodeRef::Node(t) => {
                if visited[t.index()] {
                    out.push_str(g.variable(*t));
                } else {
                    emit(g, adj, *t, visited, out);
                }
            }
        }
    }
    out.push(')');
}
