//! PENMAN reading and writing.
//!
//! ```text
//! node   := "(" var "/" concept (role (node | var | constant))* ")"
//! ```
//!
//! Parsing keeps branch order and surface role orientation exactly as written.
//! Alignment markers (`~e.3`) are accepted and dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::graph::{AmrGraph, GraphError, GraphOptions, Role, Triple, Variable};
use crate::tokens::TokenSeq;
use crate::tree::{Branch, BranchTarget, LinearTree, TreeNode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PenmanError {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("variable {0} is defined more than once")]
    DuplicateDefinition(Variable),
    #[error("variable {0} is referenced but never defined")]
    DanglingReference(Variable),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Lexeme {
    Open,
    Close,
    Slash,
    Role(String),
    Symbol(String),
    Str(String),
}

#[derive(Debug, Clone)]
struct Lexed {
    lexeme: Lexeme,
    line: usize,
    col: usize,
}

fn is_symbol_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | '/' | ':' | '~' | '"'))
}

fn lex(text: &str) -> Result<Vec<Lexed>, PenmanError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut stripped_alignments = 0usize;

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut take = |n: usize, i: &mut usize| {
            for k in 0..n {
                if chars[*i + k] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            *i += n;
        };
        let span = |from: usize, pred: &dyn Fn(char) -> bool| {
            let mut j = from;
            while j < chars.len() && pred(chars[j]) {
                j += 1;
            }
            j
        };
        let lexeme = match c {
            _ if c.is_whitespace() => {
                take(1, &mut i);
                continue;
            }
            '(' => {
                take(1, &mut i);
                Lexeme::Open
            }
            ')' => {
                take(1, &mut i);
                Lexeme::Close
            }
            '/' => {
                take(1, &mut i);
                Lexeme::Slash
            }
            '~' => {
                let end = span(i + 1, &|c| c.is_ascii_alphanumeric() || c == '.' || c == ',');
                take(end - i, &mut i);
                stripped_alignments += 1;
                continue;
            }
            ':' => {
                let end = span(i + 1, &is_symbol_char);
                let s: String = chars[i..end].iter().collect();
                take(end - i, &mut i);
                Lexeme::Role(s)
            }
            '"' => {
                let mut j = i + 1;
                let mut escaped = false;
                while j < chars.len() {
                    match chars[j] {
                        _ if escaped => escaped = false,
                        '\\' => escaped = true,
                        '"' => break,
                        _ => {}
                    }
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(PenmanError::Syntax {
                        line: start_line,
                        col: start_col,
                        expected: "closing '\"'".into(),
                    });
                }
                let s: String = chars[i..=j].iter().collect();
                take(j + 1 - i, &mut i);
                Lexeme::Str(s)
            }
            _ => {
                let end = span(i, &is_symbol_char);
                let s: String = chars[i..end].iter().collect();
                take(end - i, &mut i);
                Lexeme::Symbol(s)
            }
        };
        out.push(Lexed {
            lexeme,
            line: start_line,
            col: start_col,
        });
    }
    if stripped_alignments > 0 {
        log::warn!("dropped {stripped_alignments} alignment marker(s)");
    }
    Ok(out)
}

#[derive(Debug)]
enum RawTarget {
    Node(RawNode),
    Atom { text: String, quoted: bool },
}

#[derive(Debug)]
struct RawNode {
    var: Variable,
    concept: String,
    branches: Vec<(Role, RawTarget)>,
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Lexeme> {
        self.toks.get(self.pos).map(|t| &t.lexeme)
    }

    fn error(&self, expected: &str) -> PenmanError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|t| (t.line, t.col))
            .unwrap_or(self.end);
        PenmanError::Syntax {
            line,
            col,
            expected: expected.to_string(),
        }
    }

    fn next(&mut self) -> Option<Lexeme> {
        let t = self.toks.get(self.pos).map(|t| t.lexeme.clone());
        self.pos += 1;
        t
    }

    fn node(&mut self) -> Result<RawNode, PenmanError> {
        if self.peek() != Some(&Lexeme::Open) {
            return Err(self.error("'('"));
        }
        self.pos += 1;
        let var = match self.peek() {
            Some(Lexeme::Symbol(s)) => {
                Variable::new(s.clone()).map_err(|_| self.error("variable"))?
            }
            _ => return Err(self.error("variable")),
        };
        self.pos += 1;
        if self.peek() != Some(&Lexeme::Slash) {
            return Err(self.error("'/'"));
        }
        self.pos += 1;
        let concept = match self.peek() {
            Some(Lexeme::Symbol(s)) | Some(Lexeme::Str(s)) => s.clone(),
            _ => return Err(self.error("concept")),
        };
        self.pos += 1;

        let mut branches = Vec::new();
        loop {
            match self.peek() {
                Some(Lexeme::Close) => {
                    self.pos += 1;
                    break;
                }
                Some(Lexeme::Role(label)) => {
                    let role = Role::new(label.clone()).map_err(|_| self.error("role label"))?;
                    self.pos += 1;
                    let target = match self.peek() {
                        Some(Lexeme::Open) => RawTarget::Node(self.node()?),
                        Some(Lexeme::Symbol(_)) | Some(Lexeme::Str(_)) => match self.next() {
                            Some(Lexeme::Symbol(text)) => RawTarget::Atom {
                                text,
                                quoted: false,
                            },
                            Some(Lexeme::Str(text)) => RawTarget::Atom { text, quoted: true },
                            _ => unreachable!(),
                        },
                        _ => return Err(self.error("node, variable or constant")),
                    };
                    branches.push((role, target));
                }
                _ => return Err(self.error("role or ')'")),
            }
        }
        Ok(RawNode {
            var,
            concept,
            branches,
        })
    }
}

fn collect_definitions(node: &RawNode, defs: &mut BTreeSet<Variable>) -> Result<(), PenmanError> {
    if !defs.insert(node.var.clone()) {
        return Err(PenmanError::DuplicateDefinition(node.var.clone()));
    }
    for (_, t) in &node.branches {
        if let RawTarget::Node(child) = t {
            collect_definitions(child, defs)?;
        }
    }
    Ok(())
}

fn variable_shaped(s: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[a-z][0-9]*$").unwrap()).is_match(s)
}

fn resolve(node: RawNode, defs: &BTreeSet<Variable>) -> Result<TreeNode, PenmanError> {
    let mut branches = Vec::with_capacity(node.branches.len());
    for (role, target) in node.branches {
        let target = match target {
            RawTarget::Node(child) => BranchTarget::Node(resolve(child, defs)?),
            RawTarget::Atom { text, quoted: true } => BranchTarget::Constant(text),
            RawTarget::Atom {
                text,
                quoted: false,
            } => match Variable::new(text.clone()) {
                Ok(v) if defs.contains(&v) => BranchTarget::Reference(v),
                Ok(v) if variable_shaped(&text) => {
                    return Err(PenmanError::DanglingReference(v));
                }
                _ => BranchTarget::Constant(text),
            },
        };
        branches.push(Branch { role, target });
    }
    Ok(TreeNode {
        var: node.var,
        concept: node.concept,
        branches,
    })
}

/// Parse one PENMAN graph. Comment lines must already be removed.
///
/// Bare atoms naming a defined variable become references (forward references
/// are allowed). Undefined atoms shaped like AMR variables (`b`, `x12`) are
/// rejected as dangling; anything else is a constant.
pub fn parse_penman(text: &str) -> Result<LinearTree, PenmanError> {
    let toks = lex(text)?;
    let end = text
        .lines()
        .enumerate()
        .last()
        .map(|(i, l)| (i + 1, l.chars().count() + 1))
        .unwrap_or((1, 1));
    let mut parser = Parser { toks, pos: 0, end };
    let raw = parser.node()?;
    if parser.peek().is_some() {
        return Err(parser.error("end of input"));
    }
    let mut defs = BTreeSet::new();
    collect_definitions(&raw, &mut defs)?;
    Ok(LinearTree::new(resolve(raw, &defs)?))
}

fn node_triples(node: &TreeNode, out: &mut Vec<Triple>) {
    out.push(Triple::instance(node.var.clone(), node.concept.clone()));
    for b in &node.branches {
        match &b.target {
            BranchTarget::Node(child) => {
                out.push(Triple::relation(node.var.clone(), b.role.clone(), child.var.clone()));
                node_triples(child, out);
            }
            BranchTarget::Reference(v) => {
                out.push(Triple::relation(node.var.clone(), b.role.clone(), v.clone()));
            }
            BranchTarget::Constant(c) => {
                out.push(Triple::attribute(node.var.clone(), b.role.clone(), c.clone()));
            }
        }
    }
}

/// Convert a tree to a graph: surface inversions are undone and the root becomes the top.
pub fn tree_to_graph(t: &LinearTree) -> Result<AmrGraph, GraphError> {
    tree_to_graph_with(t, GraphOptions::default())
}

pub fn tree_to_graph_with(t: &LinearTree, options: GraphOptions) -> Result<AmrGraph, GraphError> {
    let mut triples = Vec::new();
    node_triples(&t.root, &mut triples);
    AmrGraph::from_triples_with(triples, t.root.var.clone(), options)
}

fn serialize_node(node: &TreeNode, out: &mut Vec<String>) {
    out.push("(".into());
    out.push(node.var.to_string());
    out.push("/".into());
    out.push(node.concept.clone());
    for b in &node.branches {
        out.push(b.role.to_string());
        match &b.target {
            BranchTarget::Node(child) => serialize_node(child, out),
            BranchTarget::Reference(v) => out.push(v.to_string()),
            BranchTarget::Constant(c) => out.push(c.clone()),
        }
    }
    out.push(")".into());
}

/// Flat token form: `( var / concept role child ... )`.
pub fn serialize(t: &LinearTree) -> TokenSeq {
    let mut out = Vec::new();
    serialize_node(&t.root, &mut out);
    TokenSeq::new(out)
}

fn format_node(node: &TreeNode, depth: usize, out: &mut String) {
    out.push('(');
    out.push_str(node.var.as_str());
    out.push_str(" / ");
    out.push_str(&node.concept);
    for b in &node.branches {
        out.push('\n');
        out.push_str(&"    ".repeat(depth + 1));
        out.push_str(b.role.label());
        out.push(' ');
        match &b.target {
            BranchTarget::Node(child) => format_node(child, depth + 1, out),
            BranchTarget::Reference(v) => out.push_str(v.as_str()),
            BranchTarget::Constant(c) => out.push_str(c),
        }
    }
    out.push(')');
}

/// Indented multi-line PENMAN text, as found in corpus files.
pub fn format_tree(t: &LinearTree) -> String {
    let mut out = String::new();
    format_node(&t.root, 0, &mut out);
    out
}

/// Remove a trailing numeric sense suffix: `dream-01` becomes `dream`.
pub fn strip_sense(concept: &str) -> &str {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"-[0-9]+$").unwrap());
    match re.find(concept) {
        Some(m) if m.start() > 0 => &concept[..m.start()],
        _ => concept,
    }
}

/// Model-input form of a serialized tree.
///
/// `( var / concept` becomes `( concept` with the sense removed, and
/// references are replaced by the concept they point to. Roles, parentheses
/// and constants pass through unchanged.
pub fn simplify(seq: &TokenSeq) -> TokenSeq {
    let toks = seq.tokens();
    let mut concepts: BTreeMap<&str, &str> = BTreeMap::new();
    for w in toks.windows(4) {
        if w[0] == "(" && w[2] == "/" {
            concepts.insert(&w[1], strip_sense(&w[3]));
        }
    }
    let mut out = Vec::with_capacity(toks.len());
    let mut i = 0;
    while i < toks.len() {
        let t = toks[i].as_str();
        if t == "(" && i + 3 < toks.len() && toks[i + 2] == "/" {
            out.push("(".to_string());
            out.push(strip_sense(&toks[i + 3]).to_string());
            i += 4;
            continue;
        }
        let is_role = t.starts_with(':') && t.len() > 1;
        match concepts.get(t) {
            Some(c) if !is_role && i > 0 && toks[i - 1].starts_with(':') => {
                out.push((*c).to_string())
            }
            _ => out.push(t.to_string()),
        }
        i += 1;
    }
    TokenSeq::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG_A: &str = "(a / and
  :op1 (d / dream-01
      :ARG1 (f / film
          :ARG0-of (d2 / disturb-01))
      :ARG2-of (r / resemble-01
            :ARG1 a2))
  :op2 (a2 / and
      :op1 (f2 / fascinate-01
           :ARG0 f)
      :op2 d2))";

    #[test]
    fn parses_fig_a() {
        let t = parse_penman(FIG_A).unwrap();
        assert_eq!(t.root.var.as_str(), "a");
        assert_eq!(t.root.concept, "and");
        assert_eq!(t.root.branches[0].role.label(), ":op1");
        assert_eq!(t.reentrancy_count(), 3);
    }

    #[test]
    fn one_node() {
        let t = parse_penman("(w / want-01)").unwrap();
        assert!(t.root.branches.is_empty());
        assert_eq!(serialize(&t).to_string(), "( w / want-01 )");
        let g = tree_to_graph(&t).unwrap();
        assert_eq!(g.triples().len(), 1);
    }

    #[test]
    fn dangling_reference() {
        assert_eq!(
            parse_penman("(a / and :op1 b)"),
            Err(PenmanError::DanglingReference(Variable::new("b").unwrap()))
        );
    }

    #[test]
    fn duplicate_definition() {
        assert!(matches!(
            parse_penman("(a / and :op1 (b / boy) :op2 (b / girl))"),
            Err(PenmanError::DuplicateDefinition(_))
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_penman("(a / and\n  :op1 (b boy))") {
            Err(PenmanError::Syntax { line, col, expected }) => {
                assert_eq!((line, col), (2, 11));
                assert_eq!(expected, "'/'");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_penman("(a / and"), Err(PenmanError::Syntax { .. })));
        assert!(matches!(parse_penman("(a / b) x"), Err(PenmanError::Syntax { .. })));
        assert!(matches!(parse_penman("(a / b :c \"x)"), Err(PenmanError::Syntax { .. })));
        assert!(matches!(parse_penman(""), Err(PenmanError::Syntax { .. })));
    }

    #[test]
    fn constants_and_quoted_strings() {
        let t = parse_penman(
            r#"(p / person :polarity - :quant 3 :mode imperative :name (n / name :op1 "New York"))"#,
        )
        .unwrap();
        let kinds: Vec<_> = t.root.branches.iter().map(|b| &b.target).collect();
        assert_eq!(kinds[0], &BranchTarget::Constant("-".into()));
        assert_eq!(kinds[1], &BranchTarget::Constant("3".into()));
        assert_eq!(kinds[2], &BranchTarget::Constant("imperative".into()));
        let seq = serialize(&t);
        assert!(seq.iter().any(|x| x == "\"New York\""));
    }

    #[test]
    fn alignments_are_dropped() {
        let t = parse_penman("(w / want-01~e.2 :ARG0~e.1 (b / boy~e.1))").unwrap();
        assert_eq!(
            serialize(&t).to_string(),
            "( w / want-01 :ARG0 ( b / boy ) )"
        );
    }

    #[test]
    fn compact_slash_form() {
        let a = parse_penman("(a/and :op1 (b/boy))").unwrap();
        let b = parse_penman("(a / and :op1 (b / boy))").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverted_surface_role_is_normalized() {
        let t = parse_penman(FIG_A).unwrap();
        let g = tree_to_graph(&t).unwrap();
        let v = |s: &str| Variable::new(s).unwrap();
        assert!(g
            .triples()
            .contains(&Triple::relation(v("r"), Role::new(":ARG2").unwrap(), v("d"))));
    }

    #[test]
    fn serialize_prefix() {
        let seq = serialize(&parse_penman(FIG_A).unwrap()).to_string();
        assert!(seq.starts_with("( a / and :op1 ( d / dream-01"));
    }

    #[test]
    fn simplify_examples() {
        let s = |x: &str| simplify(&TokenSeq::parse(x)).to_string();
        assert_eq!(s("( w / want-01 )"), "( want )");
        assert_eq!(
            s("( s / stupefy-01 :ARG1 ( w / we ) )"),
            "( stupefy :ARG1 ( we ) )"
        );
        assert_eq!(
            s("( a / and :op1 ( r / resemble-01 ) :op2 r )"),
            "( and :op1 ( resemble ) :op2 resemble )"
        );
        assert_eq!(s("( o / over-the-counter )"), "( over-the-counter )");
        assert_eq!(s("( d / date-entity :year 2001 :quant -5 )"), "( date-entity :year 2001 :quant -5 )");
    }

    #[test]
    fn sense_stripping_matches_regex_oracle() {
        // oracle: strip the `-[0-9]+$` match when it is a proper suffix
        for c in [
            "resemble-01", "have-org-role-91", "over-the-counter", "film", "date-entity",
            "x-1", "-01", "a-b-02", "thing-1a",
        ] {
            let expected = match c.rfind('-') {
                Some(i) if i > 0 && c[i + 1..].chars().all(|x| x.is_ascii_digit()) && i + 1 < c.len() => &c[..i],
                _ => c,
            };
            assert_eq!(strip_sense(c), expected, "{c}");
        }
    }

    #[test]
    fn simplify_fig_a() {
        let seq = simplify(&serialize(&parse_penman(FIG_A).unwrap()));
        assert_eq!(
            seq.to_string(),
            "( and :op1 ( dream :ARG1 ( film :ARG0-of ( disturb ) ) :ARG2-of ( resemble :ARG1 and ) ) \
             :op2 ( and :op1 ( fascinate :ARG0 film ) :op2 disturb ) )"
        );
    }

    #[test]
    fn format_tree_round_trips() {
        let t = parse_penman(FIG_A).unwrap();
        assert_eq!(parse_penman(&format_tree(&t)).unwrap(), t);
    }
}
