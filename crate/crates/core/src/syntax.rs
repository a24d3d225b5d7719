//! Text forms of formulas, equations, skeletons, tests and derivations.
//!
//! Finite formulas use bracket syntax: `v3`, `~v3`, `or[f, …]`, `and[f, …]`, with `or[]` for
//! `⊥` and `and[]` for `⊤`. Everything else is written as a named node graph:
//!
//! ```text
//! node n0 = or(0->n0, 1->n1); node n1 = ~v0; root n0
//! ```
//!
//! Node labels are formula symbols or rules (`ax(v0,0,1)`, `or(0,0)`, `and(0)`). Tests may give
//! a default successor with `*->NAME`, used for every index without an explicit edge; without
//! one those indices answer a fill rule. Names may be used before they are declared; `#` starts a comment that runs to the end of the line.
//!
//! A derivation file is a line `sequent <formula>` followed by the skeleton graph.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{Display, Write as _};

use thiserror::Error;

use crate::formula::{Atom, Connective, Equation, Formula, Polarity, Symbol};
use crate::interaction::{Test, TestState, DEFAULT_FILL_RULE};
use crate::proof::{DerivationCandidate, Rule, Sequent};
use crate::tree::{NodeId, RationalTree, TreeBuilder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(usize),
    Punct(&'static str),
}

impl Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

const PUNCT: [&str; 11] = [":=", "->", "(", ")", "[", "]", ",", ";", "=", "~", "*"];

struct Lexed {
    toks: Vec<(Tok, usize, usize)>,
    end: (usize, usize),
}

fn lex(text: &str, first_line: usize) -> Result<Lexed, ParseError> {
    let mut toks = Vec::new();
    let (mut line, mut col) = (first_line, 1);
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            rest = &rest[1..];
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if c == '#' {
            let n = rest.find('\n').unwrap_or(rest.len());
            col += rest[..n].chars().count();
            rest = &rest[n..];
            continue;
        }
        let take = |pred: fn(char) -> bool| rest.find(|ch: char| !pred(ch)).unwrap_or(rest.len());
        let (tok, n) = if c.is_ascii_digit() {
            let n = take(|ch| ch.is_ascii_digit());
            let value = rest[..n].parse().map_err(|_| ParseError {
                line,
                column: col,
                message: format!("number `{}` is too large", &rest[..n]),
            })?;
            (Tok::Nat(value), n)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let n = take(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            (Tok::Ident(rest[..n].to_string()), n)
        } else if let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) {
            (Tok::Punct(p), p.len())
        } else {
            return Err(ParseError {
                line,
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        };
        toks.push((tok, l0, c0));
        col += rest[..n].chars().count();
        rest = &rest[n..];
    }
    Ok(Lexed { toks, end: (line, col) })
}

/// Token cursor with positioned errors.
pub struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    end: (usize, usize),
    at: usize,
}

impl Parser {
    fn new(text: &str, first_line: usize) -> Result<Parser, ParseError> {
        let Lexed { toks, end } = lex(text, first_line)?;
        Ok(Parser { toks, end, at: 0 })
    }

    fn location(&self) -> (usize, usize) {
        self.toks.get(self.at).map(|&(_, l, c)| (l, c)).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, column) = self.location();
        Err(ParseError {
            line,
            column,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _, _)| t)
    }

    fn found(&self) -> String {
        self.peek().map_or("end of input".to_string(), |t| t.to_string())
    }

    fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.found()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => self.error(format!("expected a name, found {}", self.found())),
        }
    }

    fn nat(&mut self) -> Result<usize, ParseError> {
        match self.peek() {
            Some(&Tok::Nat(n)) => {
                self.at += 1;
                Ok(n)
            }
            _ => self.error(format!("expected a natural number, found {}", self.found())),
        }
    }

    fn peek_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == word)
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            self.error(format!("unexpected {} after the end", self.found()))
        }
    }

    /// `v<n>` or `~v<n>`.
    fn atom(&mut self) -> Result<Atom, ParseError> {
        let polarity = if self.eat("~") {
            Polarity::Negated
        } else {
            Polarity::Positive
        };
        let word = self.ident()?;
        let index = word
            .strip_prefix('v')
            .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|d| d.parse().ok());
        match index {
            Some(index) => Ok(Atom { polarity, index }),
            None => {
                self.at -= 1;
                self.error(format!("expected a variable like `v0`, found `{word}`"))
            }
        }
    }
}

/// Labels that can appear in node syntax.
pub trait NodeLabel: Sized + Clone + Eq + std::hash::Hash + Display {
    fn parse_label(p: &mut Parser) -> Result<Self, ParseError>;
}

impl NodeLabel for Symbol {
    fn parse_label(p: &mut Parser) -> Result<Self, ParseError> {
        if p.peek_ident("or") {
            p.at += 1;
            return Ok(Symbol::Or);
        }
        if p.peek_ident("and") {
            p.at += 1;
            return Ok(Symbol::And);
        }
        p.atom().map(Symbol::Atom)
    }
}

impl NodeLabel for Rule {
    fn parse_label(p: &mut Parser) -> Result<Self, ParseError> {
        let word = p.ident()?;
        p.expect("(")?;
        let rule = match word.as_str() {
            "ax" => {
                let atom = p.atom()?;
                if !atom.is_positive() {
                    return p.error("the axiom variable must be positive");
                }
                p.expect(",")?;
                let k = p.nat()?;
                p.expect(",")?;
                let l = p.nat()?;
                Rule::Axiom { var: atom.index, k, l }
            }
            "or" => {
                let k = p.nat()?;
                p.expect(",")?;
                let i0 = p.nat()?;
                Rule::Disj { k, i0 }
            }
            "and" => Rule::Conj { k: p.nat()? },
            _ => {
                p.at -= 2;
                return p.error(format!("unknown rule `{word}`; expected `ax`, `or` or `and`"));
            }
        };
        p.expect(")")?;
        Ok(rule)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    Index(usize),
    Default,
}

struct Decl<L> {
    label: L,
    edges: Vec<(EdgeKey, String, (usize, usize))>,
}

/// A parsed node graph, not yet checked for undefined names.
struct Graph<L> {
    order: Vec<String>,
    decls: HashMap<String, Decl<L>>,
    root: (String, (usize, usize)),
}

fn err_at<T>((line, column): (usize, usize), message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        column,
        message: message.into(),
    })
}

fn parse_graph<L: NodeLabel>(p: &mut Parser) -> Result<Graph<L>, ParseError> {
    let mut order = Vec::new();
    let mut decls = HashMap::new();
    let mut root = None;
    while !p.at_end() {
        if p.eat(";") {
            continue;
        }
        let at = p.location();
        let word = p.ident()?;
        match word.as_str() {
            "node" => {
                let name_at = p.location();
                let name = p.ident()?;
                p.expect("=")?;
                let label = L::parse_label(p)?;
                let mut edges: Vec<(EdgeKey, String, (usize, usize))> = Vec::new();
                if p.eat("(") && !p.eat(")") {
                    loop {
                        let edge_at = p.location();
                        let key = if p.eat("*") {
                            EdgeKey::Default
                        } else {
                            EdgeKey::Index(p.nat()?)
                        };
                        if edges.iter().any(|(k, _, _)| *k == key) {
                            return err_at(edge_at, "duplicate edge");
                        }
                        p.expect("->")?;
                        edges.push((key, p.ident()?, edge_at));
                        if p.eat(")") {
                            break;
                        }
                        p.expect(",")?;
                    }
                }
                if decls.contains_key(&name) {
                    return err_at(name_at, format!("node `{name}` is declared twice"));
                }
                order.push(name.clone());
                decls.insert(name, Decl { label, edges });
            }
            "root" => {
                if root.is_some() {
                    return err_at(at, "more than one `root`");
                }
                let name_at = p.location();
                root = Some((p.ident()?, name_at));
            }
            _ => return err_at(at, format!("expected `node` or `root`, found `{word}`")),
        }
        if !p.at_end() {
            p.expect(";")?;
        }
    }
    let Some(root) = root else {
        return p.error("missing `root` declaration");
    };
    Ok(Graph { order, decls, root })
}

impl<L: NodeLabel> Graph<L> {
    fn resolve(&self, name: &str, at: (usize, usize)) -> Result<usize, ParseError> {
        match self.order.iter().position(|n| n == name) {
            Some(k) => Ok(k),
            None => err_at(at, format!("undefined node `{name}`")),
        }
    }

    fn into_tree(self) -> Result<RationalTree<L>, ParseError> {
        let mut b = TreeBuilder::new();
        let ids: Vec<NodeId> = self.order.iter().map(|_| b.reserve()).collect();
        for (k, name) in self.order.iter().enumerate() {
            let decl = &self.decls[name];
            let mut children = Vec::new();
            for (key, target, at) in &decl.edges {
                let EdgeKey::Index(i) = key else {
                    return err_at(*at, "default edges `*->` are only allowed in tests");
                };
                children.push((*i, ids[self.resolve(target, *at)?]));
            }
            b.define(ids[k], decl.label.clone(), children);
        }
        let root = ids[self.resolve(&self.root.0, self.root.1)?];
        Ok(b.build(root))
    }
}

fn formula_from_tree(tree: RationalTree<Symbol>, at: (usize, usize)) -> Result<Formula, ParseError> {
    Formula::from_tree(tree).or_else(|e| err_at(at, e.to_string()))
}

fn bracket_formula(p: &mut Parser) -> Result<Formula, ParseError> {
    let connective = if p.peek_ident("or") {
        Connective::Or
    } else if p.peek_ident("and") {
        Connective::And
    } else {
        return p.atom().map(Formula::atom);
    };
    p.at += 1;
    p.expect("[")?;
    let mut children = Vec::new();
    if !p.eat("]") {
        loop {
            children.push(bracket_formula(p)?);
            if p.eat("]") {
                break;
            }
            p.expect(",")?;
        }
    }
    Ok(Formula::compound(connective, children.into_iter().enumerate()))
}

fn formula_in(p: &mut Parser) -> Result<Formula, ParseError> {
    if p.peek_ident("node") || p.peek_ident("root") {
        let at = p.location();
        let tree = parse_graph::<Symbol>(p)?.into_tree()?;
        return formula_from_tree(tree, at);
    }
    bracket_formula(p)
}

/// Bracket or node syntax.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, 1)?;
    let f = formula_in(&mut p)?;
    p.finish()?;
    Ok(f)
}

/// `v<n> := <formula>`, checked for the equation conditions.
pub fn parse_equation(text: &str) -> Result<Equation, ParseError> {
    let mut p = Parser::new(text, 1)?;
    let at = p.location();
    let var = p.atom()?;
    p.expect(":=")?;
    let body = formula_in(&mut p)?;
    p.finish()?;
    Equation::new(var, body).or_else(|e| err_at(at, e.to_string()))
}

/// A sequent, written as the disjunction of its disjuncts.
pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    sequent_from(parse_formula(text)?, (1, 1))
}

fn sequent_from(f: Formula, at: (usize, usize)) -> Result<Sequent, ParseError> {
    Sequent::from_formula(&f).or_else(|e| err_at(at, e.to_string()))
}

/// A single rule such as `ax(v0,0,1)`, `or(0,0)` or `and(0)`.
pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut p = Parser::new(text, 1)?;
    let rule = Rule::parse_label(&mut p)?;
    p.finish()?;
    Ok(rule)
}

/// A rule-labeled tree in node syntax.
pub fn parse_skeleton(text: &str) -> Result<RationalTree<Rule>, ParseError> {
    parse_skeleton_from(text, 1)
}

fn parse_skeleton_from(text: &str, first_line: usize) -> Result<RationalTree<Rule>, ParseError> {
    let mut p = Parser::new(text, first_line)?;
    parse_graph::<Rule>(&mut p)?.into_tree()
}

/// A test in node syntax, with `fill` at every index that has neither an edge nor a `*`
/// successor.
pub fn parse_test_with(text: &str, fill: Rule) -> Result<Test, ParseError> {
    let mut p = Parser::new(text, 1)?;
    let g = parse_graph::<Rule>(&mut p)?;
    let fill_state = NodeId(g.order.len() as u32);
    let mut states = Vec::with_capacity(g.order.len() + 1);
    for name in &g.order {
        let decl = &g.decls[name];
        let mut children = Vec::new();
        let mut default = fill_state;
        for (key, target, at) in &decl.edges {
            let id = NodeId(g.resolve(target, *at)? as u32);
            match key {
                EdgeKey::Index(i) => children.push((*i, id)),
                EdgeKey::Default => default = id,
            }
        }
        states.push(TestState {
            rule: decl.label,
            children,
            default,
        });
    }
    states.push(TestState {
        rule: fill,
        children: Vec::new(),
        default: fill_state,
    });
    let root = NodeId(g.resolve(&g.root.0, g.root.1)? as u32);
    Test::new(states, root).or_else(|e| err_at((1, 1), e.to_string()))
}

pub fn parse_test(text: &str) -> Result<Test, ParseError> {
    parse_test_with(text, DEFAULT_FILL_RULE)
}

/// A `sequent <formula>` line followed by the skeleton.
pub fn parse_derivation(text: &str) -> Result<DerivationCandidate, ParseError> {
    let mut offset = 0;
    for (k, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            offset += line.len() + 1;
            continue;
        }
        let Some(rest) = body.strip_prefix("sequent") else {
            return err_at((k + 1, 1), "a derivation starts with a `sequent` line");
        };
        let mut p = Parser::new(rest, k + 1)?;
        let at = p.location();
        let f = formula_in(&mut p)?;
        p.finish()?;
        let root_sequent = sequent_from(f, at)?;
        let skeleton_text = text.get(offset + line.len()..).unwrap_or("");
        let skeleton = parse_skeleton_from(skeleton_text, k + 1)?;
        return Ok(DerivationCandidate { root_sequent, skeleton });
    }
    err_at((1, 1), "empty derivation file")
}

/// Node syntax for any labeled graph, naming nodes `<prefix>0`, `<prefix>1`, ….
pub fn print_graph<L: Display>(tree: &RationalTree<L>, prefix: &str) -> String {
    let mut out = String::new();
    for (id, node) in tree.nodes() {
        write!(out, "node {prefix}{id} = {}", node.label).unwrap();
        if !node.children.is_empty() {
            let edges: Vec<String> = node.children.iter().map(|(i, c)| format!("{i}->{prefix}{c}")).collect();
            write!(out, "({})", edges.join(", ")).unwrap();
        }
        out.push_str("; ");
    }
    write!(out, "root {prefix}{}", tree.root()).unwrap();
    out
}

fn bracket_printable(tree: &RationalTree<Symbol>) -> bool {
    tree.is_well_founded()
        && tree
            .nodes()
            .all(|(_, n)| n.child_indices().enumerate().all(|(k, i)| k == i))
}

/// Bracket syntax for finite formulas with arities `0..n`, node syntax otherwise.
pub fn print_formula(f: &Formula) -> String {
    let tree = f.tree();
    if !bracket_printable(tree) {
        return print_graph(tree, "n");
    }
    // memoized per node: shared subterms are printed once and cloned
    let mut memo: BTreeMap<NodeId, String> = BTreeMap::new();
    fn go(tree: &RationalTree<Symbol>, id: NodeId, memo: &mut BTreeMap<NodeId, String>) -> String {
        if let Some(s) = memo.get(&id) {
            return s.clone();
        }
        let node = tree.node(id);
        let s = match node.label {
            Symbol::Atom(a) => a.to_string(),
            c => {
                let parts: Vec<String> = node.children.iter().map(|&(_, ch)| go(tree, ch, memo)).collect();
                format!("{c}[{}]", parts.join(", "))
            }
        };
        memo.insert(id, s.clone());
        s
    }
    go(tree, tree.root(), &mut memo)
}

pub fn print_skeleton(sk: &RationalTree<Rule>) -> String {
    print_graph(sk, "s")
}

pub fn print_test(t: &Test) -> String {
    let mut out = String::new();
    for (id, st) in t.states() {
        let mut edges: Vec<String> = st.children.iter().map(|(i, c)| format!("{i}->t{c}")).collect();
        edges.push(format!("*->t{}", st.default));
        write!(out, "node t{id} = {}({}); ", st.rule, edges.join(", ")).unwrap();
    }
    write!(out, "root t{}", t.root()).unwrap();
    out
}

pub fn print_derivation(d: &DerivationCandidate) -> String {
    format!(
        "sequent {}\n{}\n",
        print_formula(&d.root_sequent.to_formula()),
        print_skeleton(&d.skeleton)
    )
}
