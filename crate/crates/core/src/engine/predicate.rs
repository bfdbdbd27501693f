use std::fmt;

use serde::Serialize;

/// Qualified attribute reference `table.attribute`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AttrRef {
    pub table: String,
    pub attribute: String,
}

impl AttrRef {
    pub fn new(table: impl Into<String>, attribute: impl Into<String>) -> Self {
        AttrRef {
            table: table.into(),
            attribute: attribute.into(),
        }
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.attribute)
    }
}

/// Selection condition over qualified attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    True,
    Atom { attr: AttrRef, value: bool },
    Eq(AttrRef, AttrRef),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    pub fn atom(attr: AttrRef, value: bool) -> Self {
        Predicate::Atom { attr, value }
    }

    pub fn eq(a: AttrRef, b: AttrRef) -> Self {
        Predicate::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Predicate) -> Self {
        Predicate::Not(Box::new(p))
    }

    /// Every attribute reference in the predicate.
    pub fn attributes(&self) -> Vec<&AttrRef> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a AttrRef>) {
        match self {
            Predicate::True => {}
            Predicate::Atom { attr, .. } => out.push(attr),
            Predicate::Eq(a, b) => {
                out.push(a);
                out.push(b);
            }
            Predicate::Not(p) => p.collect(out),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.collect(out)),
        }
    }

    /// Splits nested top-level conjunctions and drops `True`.
    pub fn conjuncts(self) -> Vec<Predicate> {
        match self {
            Predicate::True => Vec::new(),
            Predicate::And(ps) => ps.into_iter().flat_map(Predicate::conjuncts).collect(),
            p => vec![p],
        }
    }

    /// Evaluates with a lookup that yields the value of each attribute.
    pub fn eval_with(&self, lookup: &impl Fn(&AttrRef) -> bool) -> bool {
        match self {
            Predicate::True => true,
            Predicate::Atom { attr, value } => lookup(attr) == *value,
            Predicate::Eq(a, b) => lookup(a) == lookup(b),
            Predicate::Not(p) => !p.eval_with(lookup),
            Predicate::And(ps) => ps.iter().all(|p| p.eval_with(lookup)),
            Predicate::Or(ps) => ps.iter().any(|p| p.eval_with(lookup)),
        }
    }
}
