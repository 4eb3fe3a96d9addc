//! Bracketed constituency trees: parsing, rendering, and the structural
//! transforms the kernel layer builds on.
//!
//! Serialization is LISP-style: `(NP (D the) (N apple))`. Tokens are
//! whitespace-separated; a bare token is a terminal leaf, a parenthesized
//! group is a non-terminal with its label first. Terminal labels that are
//! literally `(` or `)` are escaped as `-LRB-` / `-RRB-` in text form so the
//! bracketing stays unambiguous. Tree files hold one tree per line; blank
//! lines are ignored and `#`-prefixed lines are comments.

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Labeled ordered tree. A node with no children is a terminal leaf.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymTree {
    pub label: String,
    pub children: Vec<SymTree>,
}

impl SymTree {
    /// Terminal leaf.
    pub fn leaf(label: impl Into<String>) -> Self {
        SymTree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    /// Non-terminal node over the given children.
    pub fn node(label: impl Into<String>, children: Vec<SymTree>) -> Self {
        SymTree {
            label: label.into(),
            children,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.children.is_empty()
    }

    /// True when every child is a terminal. Terminals themselves are not
    /// preterminals.
    pub fn is_preterminal(&self) -> bool {
        !self.children.is_empty() && self.children.iter().all(SymTree::is_terminal)
    }

    /// Total node count, terminals included.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(SymTree::node_count).sum::<usize>()
    }

    /// Number of non-terminal nodes.
    pub fn nonterminal_count(&self) -> usize {
        if self.is_terminal() {
            0
        } else {
            1 + self
                .children
                .iter()
                .map(SymTree::nonterminal_count)
                .sum::<usize>()
        }
    }

    /// Nodes in pre-order, terminals included.
    pub fn nodes(&self) -> Vec<&SymTree> {
        let mut out = Vec::with_capacity(self.node_count());
        fn walk<'a>(t: &'a SymTree, out: &mut Vec<&'a SymTree>) {
            out.push(t);
            for c in &t.children {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Production expanded at this node, or `None` for a terminal.
    pub fn production(&self) -> Option<Production> {
        if self.is_terminal() {
            None
        } else {
            Some(Production {
                parent: self.label.clone(),
                children_labels: self.children.iter().map(|c| c.label.clone()).collect(),
            })
        }
    }
}

/// A non-terminal label together with the ordered labels of its children.
/// Equality is full ordered equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Production {
    pub parent: String,
    pub children_labels: Vec<String>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.parent)?;
        for c in &self.children_labels {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        source: Box<TreebankError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(offset: usize, message: impl Into<String>) -> TreebankError {
    TreebankError::Parse {
        offset,
        message: message.into(),
    }
}

const OPEN_ESCAPE: &str = "-LRB-";
const CLOSE_ESCAPE: &str = "-RRB-";

fn unescape_label(token: &str) -> String {
    match token {
        OPEN_ESCAPE => "(".to_string(),
        CLOSE_ESCAPE => ")".to_string(),
        other => other.to_string(),
    }
}

fn escape_label(label: &str) -> &str {
    match label {
        "(" => OPEN_ESCAPE,
        ")" => CLOSE_ESCAPE,
        other => other,
    }
}

/// Parse a single bracketed tree.
///
/// The input must contain exactly one tree; anything after it is reported as
/// trailing garbage. A bare token parses as a single terminal leaf.
pub fn parse_bracketed(text: &str) -> Result<SymTree, TreebankError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    skip_ws(bytes, &mut pos);
    if pos == bytes.len() {
        return Err(parse_err(pos, "empty input"));
    }
    let tree = parse_node(bytes, &mut pos)?;
    skip_ws(bytes, &mut pos);
    if pos != bytes.len() {
        return Err(parse_err(pos, "trailing garbage after tree"));
    }
    Ok(tree)
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

fn parse_token<'a>(bytes: &'a [u8], pos: &mut usize) -> &'a str {
    let start = *pos;
    while *pos < bytes.len()
        && !bytes[*pos].is_ascii_whitespace()
        && bytes[*pos] != b'('
        && bytes[*pos] != b')'
    {
        *pos += 1;
    }
    // The slice is valid UTF-8: it is delimited by ASCII bytes.
    std::str::from_utf8(&bytes[start..*pos]).expect("token within UTF-8 input")
}

fn parse_node(bytes: &[u8], pos: &mut usize) -> Result<SymTree, TreebankError> {
    if bytes[*pos] != b'(' {
        let start = *pos;
        let token = parse_token(bytes, pos);
        if token.is_empty() {
            return Err(parse_err(start, "unexpected ')'"));
        }
        return Ok(SymTree::leaf(unescape_label(token)));
    }
    let open_at = *pos;
    *pos += 1; // consume '('
    skip_ws(bytes, pos);
    if *pos == bytes.len() {
        return Err(parse_err(*pos, "unexpected end of input inside node"));
    }
    let label_start = *pos;
    let label = parse_token(bytes, pos);
    if label.is_empty() {
        return Err(parse_err(label_start, "empty node: expected a label"));
    }
    let label = unescape_label(label);
    let mut children = Vec::new();
    loop {
        skip_ws(bytes, pos);
        if *pos == bytes.len() {
            return Err(parse_err(
                *pos,
                format!("unbalanced brackets: node opened at offset {open_at} never closed"),
            ));
        }
        if bytes[*pos] == b')' {
            *pos += 1;
            break;
        }
        children.push(parse_node(bytes, pos)?);
    }
    if children.is_empty() {
        return Err(parse_err(open_at, "empty node: no children"));
    }
    Ok(SymTree { label, children })
}

/// Render to the canonical one-line bracketed form: single spaces,
/// parentheses around every non-terminal node, escaped bracket labels.
pub fn render_bracketed(tree: &SymTree) -> String {
    let mut out = String::new();
    render_into(tree, &mut out);
    out
}

fn render_into(tree: &SymTree, out: &mut String) {
    if tree.is_terminal() {
        out.push_str(escape_label(&tree.label));
        return;
    }
    out.push('(');
    out.push_str(escape_label(&tree.label));
    for child in &tree.children {
        out.push(' ');
        render_into(child, out);
    }
    out.push(')');
}

/// Replace every terminal label with `placeholder`, leaving all non-terminal
/// structure untouched.
pub fn delexicalize(tree: &SymTree, placeholder: &str) -> SymTree {
    if tree.is_terminal() {
        SymTree::leaf(placeholder)
    } else {
        SymTree {
            label: tree.label.clone(),
            children: tree
                .children
                .iter()
                .map(|c| delexicalize(c, placeholder))
                .collect(),
        }
    }
}

/// Default delexicalization placeholder.
pub const DELEX_PLACEHOLDER: &str = "X";

/// Number of edges on the longest path from the root to any terminal.
/// A single node has depth 0.
pub fn tree_depth(tree: &SymTree) -> usize {
    tree.children
        .iter()
        .map(|c| 1 + tree_depth(c))
        .max()
        .unwrap_or(0)
}

/// One `(node, production)` entry per non-terminal node, in pre-order.
pub fn productions_of(tree: &SymTree) -> Vec<(&SymTree, Production)> {
    tree.nodes()
        .into_iter()
        .filter_map(|n| n.production().map(|p| (n, p)))
        .collect()
}

/// Parse a tree file: one bracketed tree per line, blank lines ignored,
/// `#`-prefixed lines are comments. Errors carry the 1-based line number.
pub fn parse_forest(text: &str) -> Result<Vec<SymTree>, TreebankError> {
    let mut trees = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tree = parse_bracketed(trimmed).map_err(|e| TreebankError::AtLine {
            line: idx + 1,
            source: Box::new(e),
        })?;
        trees.push(tree);
    }
    Ok(trees)
}

/// Read a tree file from disk. See [`parse_forest`] for the format.
pub fn read_trees(path: impl AsRef<Path>) -> Result<Vec<SymTree>, TreebankError> {
    let text = fs::read_to_string(path)?;
    parse_forest(&text)
}

/// Write trees one per line in canonical form.
pub fn write_trees(path: impl AsRef<Path>, trees: &[SymTree]) -> Result<(), TreebankError> {
    let mut out = String::new();
    for t in trees {
        out.push_str(&render_bracketed(t));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
