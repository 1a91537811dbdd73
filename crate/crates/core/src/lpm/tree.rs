//! Process trees and their translation to accepting Petri nets.
//!
//! Textual form: `seq(a,b)`, `xor(a,b)`, `and(a,b)`, `loop(body,redo)`,
//! `tau`, and bare activity labels. Labels outside `[A-Za-z0-9_.:+-]`, or
//! equal to `tau`, are written in single quotes with `\'` and `\\` escapes.

use std::fmt;
use std::str::FromStr;

use crate::eventlog::{Activity, Alphabet};
use crate::petrinet::{AcceptingPetriNet, LabeledPetriNet, Marking, PlaceId};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProcessTree {
    Activity(Activity),
    Tau,
    Seq(Vec<ProcessTree>),
    Xor(Vec<ProcessTree>),
    And(Vec<ProcessTree>),
    /// Body once, then any number of (redo, body) repetitions.
    Loop(Box<ProcessTree>, Box<ProcessTree>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    Seq,
    Xor,
    And,
    Loop,
}

impl Operator {
    pub const ALL: [Operator; 4] = [Operator::Seq, Operator::Xor, Operator::And, Operator::Loop];

    /// Binary node `op(left, right)`.
    pub fn apply(self, left: ProcessTree, right: ProcessTree) -> ProcessTree {
        match self {
            Operator::Seq => ProcessTree::Seq(vec![left, right]),
            Operator::Xor => ProcessTree::Xor(vec![left, right]),
            Operator::And => ProcessTree::And(vec![left, right]),
            Operator::Loop => ProcessTree::Loop(Box::new(left), Box::new(right)),
        }
    }

    /// Whether swapping the operands can change the language.
    pub fn is_ordered(self) -> bool {
        matches!(self, Operator::Seq | Operator::Loop)
    }
}

impl ProcessTree {
    pub fn leaf(label: impl AsRef<str>) -> Self {
        ProcessTree::Activity(Activity::new(label))
    }

    pub fn loop_of(body: ProcessTree, redo: ProcessTree) -> Self {
        ProcessTree::Loop(Box::new(body), Box::new(redo))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ProcessTree::Activity(_) | ProcessTree::Tau)
    }

    pub fn children(&self) -> Vec<&ProcessTree> {
        match self {
            ProcessTree::Activity(_) | ProcessTree::Tau => Vec::new(),
            ProcessTree::Seq(c) | ProcessTree::Xor(c) | ProcessTree::And(c) => c.iter().collect(),
            ProcessTree::Loop(body, redo) => vec![body, redo],
        }
    }

    /// Visible activities in the tree.
    pub fn activities(&self) -> Alphabet {
        let mut out = Alphabet::new();
        self.collect_activities(&mut out);
        out
    }

    fn collect_activities(&self, out: &mut Alphabet) {
        match self {
            ProcessTree::Activity(a) => {
                out.insert(a.clone());
            }
            other => {
                for c in other.children() {
                    c.collect_activities(out);
                }
            }
        }
    }

    /// Number of activity leaves, counting repeats.
    pub fn activity_leaf_count(&self) -> usize {
        match self {
            ProcessTree::Activity(_) => 1,
            other => other.children().into_iter().map(Self::activity_leaf_count).sum(),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Self::node_count)
            .sum::<usize>()
    }

    /// Checks the structural invariants: operators have children, and no
    /// activity labels more than one leaf.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        if self.activity_leaf_count() != self.activities().len() {
            return Err(Error::Tree(format!("{self}: activity leaves must be distinct")));
        }
        Ok(())
    }

    fn validate_structure(&self) -> Result<()> {
        match self {
            ProcessTree::Seq(c) | ProcessTree::Xor(c) | ProcessTree::And(c) if c.is_empty() => {
                Err(Error::Tree("operator without children".into()))
            }
            other => other
                .children()
                .into_iter()
                .try_for_each(Self::validate_structure),
        }
    }

    /// Canonical form: single-child operators are replaced by their child,
    /// nested operators of the same kind are flattened (except loops) and
    /// the children of `xor`/`and` are ordered by their sorted activity sets,
    /// then by their textual form.
    pub fn normalize(&self) -> ProcessTree {
        match self {
            ProcessTree::Activity(_) | ProcessTree::Tau => self.clone(),
            ProcessTree::Loop(body, redo) => ProcessTree::loop_of(body.normalize(), redo.normalize()),
            ProcessTree::Seq(c) => Self::flatten(c, |t| matches!(t, ProcessTree::Seq(_)), ProcessTree::Seq, false),
            ProcessTree::Xor(c) => Self::flatten(c, |t| matches!(t, ProcessTree::Xor(_)), ProcessTree::Xor, true),
            ProcessTree::And(c) => Self::flatten(c, |t| matches!(t, ProcessTree::And(_)), ProcessTree::And, true),
        }
    }

    fn flatten(
        children: &[ProcessTree],
        same: impl Fn(&ProcessTree) -> bool,
        make: impl Fn(Vec<ProcessTree>) -> ProcessTree,
        sort: bool,
    ) -> ProcessTree {
        let mut flat = Vec::new();
        for c in children.iter().map(ProcessTree::normalize) {
            if same(&c) {
                flat.extend(c.children().into_iter().cloned());
            } else {
                flat.push(c);
            }
        }
        if sort {
            flat.sort_by_cached_key(|t| (sorted_labels(t), t.to_string()));
        }
        if flat.len() == 1 {
            flat.pop().expect("one child")
        } else {
            make(flat)
        }
    }

    /// Replaces the leaf labelled `target` with `replacement`.
    pub fn replace_activity(&self, target: &Activity, replacement: &ProcessTree) -> ProcessTree {
        match self {
            ProcessTree::Activity(a) if a == target => replacement.clone(),
            ProcessTree::Activity(_) | ProcessTree::Tau => self.clone(),
            ProcessTree::Seq(c) => ProcessTree::Seq(c.iter().map(|t| t.replace_activity(target, replacement)).collect()),
            ProcessTree::Xor(c) => ProcessTree::Xor(c.iter().map(|t| t.replace_activity(target, replacement)).collect()),
            ProcessTree::And(c) => ProcessTree::And(c.iter().map(|t| t.replace_activity(target, replacement)).collect()),
            ProcessTree::Loop(b, r) => ProcessTree::loop_of(
                b.replace_activity(target, replacement),
                r.replace_activity(target, replacement),
            ),
        }
    }

    /// Workflow net with the tree's language: one source place marked
    /// initially, one sink place marked finally. Visible transitions are
    /// named after their label.
    pub fn to_net(&self) -> AcceptingPetriNet {
        let mut builder = NetBuilder::default();
        let source = builder.place();
        let sink = builder.place();
        builder.translate(self, source, sink);
        let n = builder.net.place_count();
        AcceptingPetriNet::new(
            builder.net,
            Marking::with_tokens(n, &[source]),
            Marking::with_tokens(n, &[sink]),
        )
        .expect("markings sized to the net")
    }
}

fn sorted_labels(t: &ProcessTree) -> Vec<String> {
    t.activities().iter().map(|a| a.label().to_string()).collect()
}

#[derive(Default)]
struct NetBuilder {
    net: LabeledPetriNet,
    taus: usize,
}

impl NetBuilder {
    fn place(&mut self) -> PlaceId {
        let n = self.net.place_count();
        self.net.add_place(format!("p{n}"))
    }

    fn tau(&mut self, inputs: &[PlaceId], outputs: &[PlaceId]) {
        let t = self.net.add_transition(format!("tau{}", self.taus), None);
        self.taus += 1;
        for &p in inputs {
            self.net.add_input(t, p);
        }
        for &p in outputs {
            self.net.add_output(t, p);
        }
    }

    fn translate(&mut self, node: &ProcessTree, entry: PlaceId, exit: PlaceId) {
        match node {
            ProcessTree::Activity(a) => {
                let t = self.net.add_transition(a.label(), Some(a.clone()));
                self.net.add_input(t, entry);
                self.net.add_output(t, exit);
            }
            ProcessTree::Tau => self.tau(&[entry], &[exit]),
            ProcessTree::Seq(children) => {
                let mut from = entry;
                for (i, c) in children.iter().enumerate() {
                    let to = if i + 1 == children.len() { exit } else { self.place() };
                    self.translate(c, from, to);
                    from = to;
                }
            }
            ProcessTree::Xor(children) => {
                for c in children {
                    self.translate(c, entry, exit);
                }
            }
            ProcessTree::And(children) => {
                let starts: Vec<PlaceId> = children.iter().map(|_| self.place()).collect();
                let ends: Vec<PlaceId> = children.iter().map(|_| self.place()).collect();
                self.tau(&[entry], &starts);
                for (i, c) in children.iter().enumerate() {
                    self.translate(c, starts[i], ends[i]);
                }
                self.tau(&ends, &[exit]);
            }
            ProcessTree::Loop(body, redo) => {
                let body_in = self.place();
                let body_out = self.place();
                self.tau(&[entry], &[body_in]);
                self.translate(body, body_in, body_out);
                self.translate(redo, body_out, body_in);
                self.tau(&[body_out], &[exit]);
            }
        }
    }
}

fn needs_quotes(label: &str) -> bool {
    label == "tau"
        || !label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_.:+-".contains(c))
}

fn write_label(f: &mut fmt::Formatter<'_>, label: &str) -> fmt::Result {
    if needs_quotes(label) {
        f.write_str("'")?;
        for c in label.chars() {
            if c == '\'' || c == '\\' {
                f.write_str("\\")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("'")
    } else {
        f.write_str(label)
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, children): (&str, Vec<&ProcessTree>) = match self {
            ProcessTree::Activity(a) => return write_label(f, a.label()),
            ProcessTree::Tau => return f.write_str("tau"),
            ProcessTree::Seq(c) => ("seq", c.iter().collect()),
            ProcessTree::Xor(c) => ("xor", c.iter().collect()),
            ProcessTree::And(c) => ("and", c.iter().collect()),
            ProcessTree::Loop(b, r) => ("loop", vec![&**b, &**r]),
        };
        write!(f, "{name}(")?;
        for (i, c) in children.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for ProcessTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { chars: s.chars().collect(), pos: 0 };
        let tree = p.node()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(p.error("trailing input"));
        }
        tree.validate_structure()?;
        Ok(tree)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, msg: &str) -> Error {
        Error::Tree(format!("{msg} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn quoted(&mut self) -> Result<String> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.chars.get(self.pos).copied() {
                None => return Err(self.error("unterminated quoted label")),
                Some('\'') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => {
                    let c = self
                        .chars
                        .get(self.pos + 1)
                        .copied()
                        .ok_or_else(|| self.error("dangling escape"))?;
                    out.push(c);
                    self.pos += 2;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn bare(&mut self) -> String {
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|&c| c.is_ascii_alphanumeric() || "_.:+-".contains(c))
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn node(&mut self) -> Result<ProcessTree> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('\'') => {
                let label = self.quoted()?;
                if label.is_empty() {
                    return Err(self.error("empty label"));
                }
                Ok(ProcessTree::leaf(label))
            }
            Some(_) => {
                let word = self.bare();
                if word.is_empty() {
                    return Err(self.error("expected a label or operator"));
                }
                if self.peek() != Some('(') {
                    return Ok(if word == "tau" { ProcessTree::Tau } else { ProcessTree::leaf(word) });
                }
                self.pos += 1;
                let mut children = vec![self.node()?];
                while self.peek() == Some(',') {
                    self.pos += 1;
                    children.push(self.node()?);
                }
                self.expect(')')?;
                match word.as_str() {
                    "seq" => Ok(ProcessTree::Seq(children)),
                    "xor" => Ok(ProcessTree::Xor(children)),
                    "and" => Ok(ProcessTree::And(children)),
                    "loop" if children.len() == 2 => {
                        let redo = children.pop().expect("two children");
                        let body = children.pop().expect("two children");
                        Ok(ProcessTree::loop_of(body, redo))
                    }
                    "loop" => Err(self.error("loop takes exactly a body and a redo part")),
                    other => Err(self.error(&format!("unknown operator {other:?}"))),
                }
            }
        }
    }
}
